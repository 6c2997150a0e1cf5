mod common;

use proptest::prelude::*;

use swards::cluster_state::{swards_energy, wards_energy, ClusterState, Objective};
use swards::dissimilarity::{barrier_d, euclidean_d2, region_d};
use swards::voronoi::wards_point_score;
use swards::{
    build_matrix, cluster, format_f64, rand_index, BoundingBox, ClusterStats, ClusteringConfig, CriterionParams,
    DissimilarityMatrix, DissimilarityMeasure, Environment, Partition, RegionSplit, Segment,
};

use common::*;

fn points_strategy(n: std::ops::RangeInclusive<usize>, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0..10.0f64, dim), n)
}

/// Points plus a labelling with ids `0..k`, each used at least twice.
fn labelled(max_k: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>)> {
    (1..=max_k, 1usize..=3).prop_flat_map(|(k, dim)| {
        let n_min = 2 * k;
        (points_strategy(n_min..=n_min + 30, dim), Just(k)).prop_flat_map(|(points, k)| {
            let n = points.len();
            let base: Vec<usize> = (0..n).map(|i| if i < 2 * k { i / 2 } else { i % k }).collect();
            (Just(points), Just(base).prop_shuffle())
        })
    })
}

fn euclid(points: &[Vec<f64>]) -> DissimilarityMatrix {
    build_matrix(points, &DissimilarityMeasure::Euclidean).unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn generalized_scatter_matches_centroid_scatter(points in points_strategy(1..=40, 3)) {
        let m = euclid(&points);
        let all: Vec<usize> = (0..points.len()).collect();
        let refs: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
        let got = swards::cluster_state::ss(&all, &m).unwrap();
        prop_assert!(close(got, unit_ss(&refs), 1e-10));
    }

    #[test]
    fn energies_match_centroid_oracle((points, labels) in labelled(4), dim in 0.3..6.0f64) {
        let m = euclid(&points);
        let p = Partition::new(labels.clone());
        let params = CriterionParams::with_floor(dim, 0.0).unwrap();
        prop_assert!(close(wards_energy(&p, &m).unwrap(), common::wards_energy(&points, &labels), 1e-9));
        prop_assert!(close(swards_energy(&p, &m, &params).unwrap(), common::swards_energy(&points, &labels, dim), 1e-9));
    }

    #[test]
    fn energy_ignores_point_order_and_label_names(
        (points, labels) in labelled(4),
        dim in 0.3..6.0f64,
        seed in any::<u64>(),
    ) {
        let n = points.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (i as u64).wrapping_mul(seed | 1).rotate_left(17));
        let k = n_labels(&labels);
        let rename = |l: usize| (l + seed as usize % k) % k;
        let p2: Vec<Vec<f64>> = order.iter().map(|&i| points[i].clone()).collect();
        let l2: Vec<usize> = order.iter().map(|&i| rename(labels[i])).collect();
        let params = CriterionParams::new(dim).unwrap();
        let e1 = swards_energy(&Partition::new(labels), &euclid(&points), &params).unwrap();
        let e2 = swards_energy(&Partition::new(l2), &euclid(&p2), &params).unwrap();
        prop_assert!(close(e1, e2, 1e-10));
    }

    #[test]
    fn move_delta_matches_recomputation(
        (points, labels) in labelled(4),
        dim in 0.3..6.0f64,
        x_pick in any::<prop::sample::Index>(),
        to_pick in any::<prop::sample::Index>(),
    ) {
        let m = euclid(&points);
        let k = n_labels(&labels);
        let x = x_pick.index(points.len());
        let to = to_pick.index(k);
        let mut moved = labels.clone();
        moved[x] = to;
        let spread = |l: &[usize]| (0..k).map(|c| unit_ss(&members(&points, l, c))).fold(f64::INFINITY, f64::min);
        prop_assume!(spread(&labels) > 1e-6 && spread(&moved) > 1e-6);
        for spherical in [false, true] {
            let objective = if spherical {
                Objective::Spherical { params: CriterionParams::with_floor(dim, 0.0).unwrap(), floor: 0.0 }
            } else {
                Objective::Wards
            };
            let state = ClusterState::new(&m, &Partition::new(labels.clone()), objective).unwrap();
            let (before, after) = if spherical {
                (common::swards_energy(&points, &labels, dim), common::swards_energy(&points, &moved, dim))
            } else {
                (common::wards_energy(&points, &labels), common::wards_energy(&points, &moved))
            };
            // both sides lose precision to cancellation at the scale of the energies
            let tol = 1e-9 * (1.0 + before.abs() + after.abs());
            prop_assert!((state.move_delta(x, to) - (after - before)).abs() <= tol);
        }
    }

    #[test]
    fn incremental_stats_track_recomputation(
        (points, labels) in labelled(3),
        moves in prop::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>()), 1..60),
    ) {
        let m = euclid(&points);
        let k = n_labels(&labels);
        let mut state = ClusterState::new(&m, &Partition::new(labels), Objective::Wards).unwrap();
        let mut links = Vec::new();
        for (xi, ti) in moves {
            let x = xi.index(points.len());
            state.point_links(x, &mut links);
            state.apply_move(x, ti.index(k), &links);
        }
        let labels = state.labels().to_vec();
        for c in 0..k {
            let ys = members(&points, &labels, c);
            let s = state.stats()[c];
            prop_assert_eq!(s.size, ys.len());
            if ys.len() > 1 {
                prop_assert!(close(s.ss, unit_ss(&ys), 1e-9));
            }
        }
    }

    #[test]
    fn solver_result_is_consistent((points, _) in labelled(3), dim in 0.5..4.0f64, k0 in 1usize..8, seed in any::<u64>()) {
        let m = euclid(&points);
        prop_assume!(m.total() > 0.0);
        let n = points.len();
        let config = ClusteringConfig::spherical(CriterionParams::new(dim).unwrap(), k0.min(n))
            .with_restarts(3)
            .with_seed(seed);
        let r = match cluster(&m, &config) {
            Ok(r) => r,
            // zero-scatter clusters (repeated points) are reported, not hidden
            Err(swards::Error::DegenerateCluster { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert!(r.partition.is_complete());
        prop_assert_eq!(r.partition.k(), r.n_clusters);
        prop_assert!(r.cluster_sizes().iter().all(|&s| s > 0));
        prop_assert_eq!(r.cluster_sizes().iter().sum::<usize>(), n);
        let again = swards_energy(&r.partition, &m, &CriterionParams::new(dim).unwrap()).unwrap();
        prop_assert!(close(r.energy, again, 1e-9));
        if r.cluster_sizes().iter().all(|&s| s > 1) {
            prop_assert!(close(r.energy, common::swards_energy(&points, r.partition.labels(), dim), 1e-9));
        }
        if r.sweeps_run < ClusteringConfig::DEFAULT_MAX_SWEEPS {
            let threshold = ClusteringConfig::DEFAULT_EPSILON * n as f64;
            prop_assert!(r.cluster_sizes().iter().all(|&s| s as f64 >= threshold));
        }
        for rec in &r.energy_trace {
            prop_assert!(rec.energy_after_moves <= rec.energy_before);
        }
        let again = cluster(&m, &config).unwrap();
        prop_assert_eq!(again.partition, r.partition);
    }

    #[test]
    fn wards_respects_k((points, _) in labelled(3), k in 1usize..5, seed in any::<u64>()) {
        let m = euclid(&points);
        let k = k.min(points.len());
        let r = cluster(&m, &ClusteringConfig::wards(k).with_seed(seed).with_restarts(2)).unwrap();
        prop_assert_eq!(r.n_clusters, k);
        let mut prev = f64::INFINITY;
        for rec in &r.energy_trace {
            prop_assert!(rec.energy_after_moves <= rec.energy_before);
            prop_assert!(rec.energy_before <= prev);
            prev = rec.energy_after_moves;
        }
    }

    #[test]
    fn energy_shift_under_scaling((points, labels) in labelled(4), dim in 0.3..6.0f64, lambda in 0.01..100.0f64) {
        let m = euclid(&points);
        let p = Partition::new(labels);
        let params = CriterionParams::new(dim).unwrap();
        let e1 = swards_energy(&p, &m, &params).unwrap();
        let e2 = swards_energy(&p, &m.scaled(lambda), &params).unwrap();
        prop_assert!((e2 - e1 - dim * lambda.ln()).abs() <= 1e-9 * (1.0 + e1.abs()));
    }

    #[test]
    fn wards_score_is_distance_to_centroid((points, _) in labelled(1), x in prop::collection::vec(-10.0..10.0f64, 3)) {
        let dim = points[0].len();
        let x = &x[..dim];
        let m = euclid(&points);
        let all: Vec<usize> = (0..points.len()).collect();
        let link: f64 = points.iter().map(|p| euclidean_d2(x, p).unwrap()).sum();
        let score = wards_point_score(link, ClusterStats::from_members(&all, &m)).unwrap();
        let refs: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
        let target = sq(x, &centroid(&refs, &vec![1.0; refs.len()]));
        prop_assert!((score - target).abs() <= 1e-9 * (1.0 + target + unit_ss(&refs) / refs.len() as f64));
    }

    #[test]
    fn rand_index_properties(
        a in prop::collection::vec(0usize..5, 2..60),
        salt in prop::collection::vec(0usize..5, 60),
        shift in 0usize..5,
    ) {
        let b: Vec<usize> = a.iter().zip(&salt).map(|(&x, &s)| (x + s) % 5).collect();
        let ab = rand_index(&a, &b).unwrap();
        prop_assert_eq!(ab, rand_index(&b, &a).unwrap());
        prop_assert_eq!(ab, rand_by_pairs(&a, &b));
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(rand_index(&a, &a).unwrap(), 1.0);
        let renamed: Vec<usize> = a.iter().map(|&x| (x + shift) % 5).collect();
        prop_assert_eq!(rand_index(&a, &renamed).unwrap(), 1.0);
    }

    #[test]
    fn region_distance_bounds(
        x in (-4.0..4.0f64, -3.0..3.0f64),
        y in (-4.0..4.0f64, -3.0..3.0f64),
        border in -2.0..2.0f64,
        s in 1.0..10.0f64,
    ) {
        let env = Environment::new(BoundingBox::new([-4.0, -3.0], [4.0, 3.0]).unwrap())
            .with_region(RegionSplit::new(border, s).unwrap());
        let (x, y) = ([x.0, x.1], [y.0, y.1]);
        let d = region_d(&x, &y, &env).unwrap();
        let e = euclidean_d2(&x, &y).unwrap().sqrt();
        prop_assert!((d - region_d(&y, &x, &env).unwrap()).abs() <= 1e-9 * (1.0 + d));
        prop_assert!(d >= e - 1e-9);
        prop_assert!(d <= s * e + 1e-9);
        let slow = |p: [f64; 2]| p[0] < border;
        if slow(x) == slow(y) {
            let expect = if slow(x) { s * e } else { e };
            prop_assert!((d - expect).abs() <= 1e-9 * (1.0 + expect));
        }
    }

    #[test]
    fn barrier_distance_bounds(
        x in (-2.0..2.0f64, -2.0..2.0f64),
        y in (-2.0..2.0f64, -2.0..2.0f64),
        wall in (-1.5..1.5f64, -1.5..1.5f64, 0.1..1.5f64),
    ) {
        let seg = Segment::new([wall.0, wall.1], [wall.0, wall.1 + wall.2]).unwrap();
        let env = Environment::new(BoundingBox::new([-2.0, -2.0], [2.0, 2.0]).unwrap()).with_barrier(seg);
        let (x, y) = ([x.0, x.1], [y.0, y.1]);
        prop_assume!(!env.on_barrier(x) && !env.on_barrier(y));
        let d = barrier_d(&x, &y, &env).unwrap();
        let e = euclidean_d2(&x, &y).unwrap().sqrt();
        prop_assert!((d - barrier_d(&y, &x, &env).unwrap()).abs() <= 1e-9 * (1.0 + d));
        prop_assert!(d >= e - 1e-9);
        if !env.blocks(x, y) {
            prop_assert!((d - e).abs() <= 1e-9 * (1.0 + e));
        } else {
            // a single wall is passed around one of its two ends
            let a = [wall.0, wall.1];
            let b = [wall.0, wall.1 + wall.2];
            let via = |p: [f64; 2]| euclidean_d2(&x, &p).unwrap().sqrt() + euclidean_d2(&p, &y).unwrap().sqrt();
            let expect = via(a).min(via(b));
            prop_assert!((d - expect).abs() <= 1e-9 * (1.0 + expect));
        }
    }

    #[test]
    fn float_text_round_trips(v in any::<f64>()) {
        prop_assume!(v.is_finite());
        let text = format_f64(v);
        prop_assert_eq!(text.parse::<f64>().unwrap().to_bits(), v.to_bits());
    }

    #[test]
    fn matrix_files_round_trip(points in points_strategy(1..=12, 2)) {
        let m = euclid(&points);
        let mut csv = Vec::new();
        m.write_csv(&mut csv).unwrap();
        prop_assert_eq!(&DissimilarityMatrix::read_csv(csv.as_slice()).unwrap(), &m);
        let mut bin = Vec::new();
        m.write_binary(&mut bin).unwrap();
        prop_assert_eq!(&DissimilarityMatrix::read_binary(bin.as_slice()).unwrap(), &m);
    }
}
