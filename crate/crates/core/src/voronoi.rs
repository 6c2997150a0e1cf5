//! Generalized Voronoi diagrams.
//!
//! A point `x` belongs to the cluster whose criterion grows least when `x`
//! is adjoined with a vanishing weight. For Wards this is the score
//! `d2(x; Y) = (D({x}, Y) - ss(Y)) / |Y|`; for spherical Wards the
//! argmin-equivalent score is
//!
//! ```text
//! ln ss(Y) + |Y| d2(x; Y) / ss(Y) - (1 + 2/N) ln |Y|
//! ```
//!
//! The weighted-energy functions below exist to check those scores against a
//! finite-difference derivative of the criterion.

use std::io::Write;

use rayon::prelude::*;

use crate::cluster_state::{ClusterStats, Objective};
use crate::{BoundMeasure, BoundingBox, CriterionParams, DissimilarityMatrix, Error, Partition, Result};

/// Grid label for cells from which no cluster can be reached.
pub const UNREACHABLE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VoronoiCriterion {
    WardsKMeans,
    SphericalWards(CriterionParams),
}

/// `(D({x}, Y) - ss(Y)) / |Y|` from the link `D({x}, Y)`.
pub fn wards_point_score(link: f64, stats: ClusterStats) -> Result<f64> {
    if stats.size == 0 {
        return Err(Error::invalid("point score against an empty cluster"));
    }
    Ok((link - stats.ss) / stats.size as f64)
}

/// Spherical Wards assignment score; `floor` is the absolute scatter floor.
pub fn swards_point_score(link: f64, stats: ClusterStats, dim: f64, floor: f64) -> Result<f64> {
    if stats.size == 0 {
        return Err(Error::invalid("point score against an empty cluster"));
    }
    let ss = stats.ss.max(floor);
    if ss <= 0.0 {
        return Err(Error::DegenerateData("cluster has zero scatter and no floor".into()));
    }
    let m = stats.size as f64;
    let w = (link - ss) / m;
    Ok(ss.ln() + m * w / ss - (1.0 + 2.0 / dim) * m.ln())
}

/// Frozen per-cluster statistics for scoring arbitrary query points.
pub struct VoronoiScorer<'a> {
    bound: &'a BoundMeasure<'a>,
    labels: Vec<usize>,
    stats: Vec<ClusterStats>,
    criterion: VoronoiCriterion,
    floor: f64,
}

impl<'a> VoronoiScorer<'a> {
    /// `matrix` must be the squared-dissimilarity matrix of the points bound
    /// in `bound`; it supplies the cluster statistics.
    pub fn new(
        bound: &'a BoundMeasure<'a>,
        matrix: &DissimilarityMatrix,
        partition: &Partition,
        criterion: VoronoiCriterion,
    ) -> Result<Self> {
        if partition.len() != bound.len() || matrix.len() != bound.len() {
            return Err(Error::invalid(format!(
                "partition has {} labels, matrix {} rows, data {} points",
                partition.len(),
                matrix.len(),
                bound.len()
            )));
        }
        if !partition.is_complete() {
            return Err(Error::invalid("every point must carry a cluster label"));
        }
        let partition = partition.compacted();
        let stats: Vec<ClusterStats> =
            partition.clusters().iter().map(|c| ClusterStats::from_members(c, matrix)).collect();
        let floor = match criterion {
            VoronoiCriterion::WardsKMeans => 0.0,
            VoronoiCriterion::SphericalWards(params) => {
                let floor = params.floor_for(matrix);
                if let Some(c) = stats.iter().position(|s| s.ss.max(floor) <= 0.0) {
                    return Err(Error::DegenerateCluster { cluster: c });
                }
                floor
            }
        };
        Ok(VoronoiScorer { bound, labels: partition.into_labels(), stats, criterion, floor })
    }

    pub fn n_clusters(&self) -> usize {
        self.stats.len()
    }

    /// Score of `x` against every cluster; unreachable clusters score `+inf`.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d2 = self.bound.d2_from(x)?;
        let mut links = vec![0.0; self.stats.len()];
        for (&l, d) in self.labels.iter().zip(d2) {
            links[l] += d;
        }
        links
            .iter()
            .zip(&self.stats)
            .map(|(&link, &s)| {
                if link.is_infinite() {
                    return Ok(f64::INFINITY);
                }
                match self.criterion {
                    VoronoiCriterion::WardsKMeans => wards_point_score(link, s),
                    VoronoiCriterion::SphericalWards(p) => swards_point_score(link, s, p.dim, self.floor),
                }
            })
            .collect()
    }

    /// Lowest-scoring cluster, ties to the lowest id; [`UNREACHABLE`] when
    /// every score is infinite.
    pub fn assign(&self, x: &[f64]) -> Result<usize> {
        Ok(argmin(&self.scores(x)?))
    }
}

fn argmin(scores: &[f64]) -> usize {
    let mut best = UNREACHABLE;
    let mut best_score = f64::INFINITY;
    for (c, &s) in scores.iter().enumerate() {
        if s < best_score {
            best = c;
            best_score = s;
        }
    }
    best
}

/// Label grid over a rectangle, stored row-major with row 0 at `bbox.min.y`.
#[derive(Clone, Debug, PartialEq)]
pub struct VoronoiGrid {
    pub bbox: BoundingBox,
    pub width: usize,
    pub height: usize,
    pub labels: Vec<usize>,
    pub criterion: VoronoiCriterion,
    pub n_clusters: usize,
}

impl VoronoiGrid {
    pub fn cell_center(bbox: &BoundingBox, width: usize, height: usize, i: usize, j: usize) -> [f64; 2] {
        let e = bbox.extent();
        [bbox.min[0] + (i as f64 + 0.5) / width as f64 * e[0], bbox.min[1] + (j as f64 + 0.5) / height as f64 * e[1]]
    }

    /// Label of column `i`, row `j`.
    pub fn get(&self, i: usize, j: usize) -> usize {
        self.labels[j * self.width + i]
    }

    /// One comma-separated line per row, bottom row (`bbox.min.y`) first;
    /// unreachable cells are written as `-1`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for row in self.labels.chunks(self.width) {
            let line: Vec<String> =
                row.iter().map(|&l| if l == UNREACHABLE { "-1".to_string() } else { l.to_string() }).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Plain PGM. Cluster ids are spread evenly over `0..=254`; 255 marks
    /// unreachable cells. Rows are written top (`bbox.max.y`) first.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "P2")?;
        writeln!(w, "{} {}", self.width, self.height)?;
        writeln!(w, "255")?;
        let span = self.n_clusters.saturating_sub(1).max(1) as f64;
        for row in self.labels.chunks(self.width).rev() {
            let line: Vec<String> = row
                .iter()
                .map(|&l| if l == UNREACHABLE { 255 } else { (l as f64 * 254.0 / span).round() as u32 })
                .map(|v| v.to_string())
                .collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Label every cell centre of a `width x height` grid by its best cluster.
pub fn rasterize(
    bound: &BoundMeasure<'_>,
    matrix: &DissimilarityMatrix,
    partition: &Partition,
    bbox: BoundingBox,
    width: usize,
    height: usize,
    criterion: VoronoiCriterion,
) -> Result<VoronoiGrid> {
    if width == 0 || height == 0 {
        return Err(Error::invalid(format!("grid must be at least 1x1, got {width}x{height}")));
    }
    if bound.is_empty() {
        return Err(Error::invalid("cannot rasterize an empty data set"));
    }
    let scorer = VoronoiScorer::new(bound, matrix, partition, criterion)?;
    let rows: Vec<Vec<usize>> = (0..height)
        .into_par_iter()
        .map(|j| {
            (0..width)
                .map(|i| scorer.assign(&VoronoiGrid::cell_center(&bbox, width, height, i, j)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(VoronoiGrid {
        bbox,
        width,
        height,
        labels: rows.into_iter().flatten().collect(),
        criterion,
        n_clusters: scorer.n_clusters(),
    })
}

/// Cluster whose members carry nonnegative weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedCluster {
    pub members: Vec<usize>,
    pub weights: Vec<f64>,
}

impl WeightedCluster {
    pub fn unit(members: Vec<usize>) -> Self {
        let weights = vec![1.0; members.len()];
        WeightedCluster { members, weights }
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `D(Y^w, Z^w) = sum w_y w_z d2(y, z)`.
    pub fn linkage(&self, other: &WeightedCluster, d2: &impl Fn(usize, usize) -> f64) -> f64 {
        let mut total = 0.0;
        for (&a, &wa) in self.members.iter().zip(&self.weights) {
            if wa == 0.0 {
                continue;
            }
            for (&b, &wb) in other.members.iter().zip(&other.weights) {
                if wb != 0.0 {
                    total += wa * wb * d2(a, b);
                }
            }
        }
        total
    }

    /// `ss(Y^w) = D(Y^w, Y^w) / (2 |Y^w|)`.
    pub fn ss(&self, d2: &impl Fn(usize, usize) -> f64) -> f64 {
        self.linkage(self, d2) / (2.0 * self.total_weight())
    }
}

/// Criterion value of weighted clusters over an index space with squared
/// dissimilarity `d2`. No scatter floor is applied.
pub fn weighted_energy(
    clusters: &[WeightedCluster],
    d2: impl Fn(usize, usize) -> f64,
    criterion: VoronoiCriterion,
) -> Result<f64> {
    for (c, y) in clusters.iter().enumerate() {
        if y.members.len() != y.weights.len() {
            return Err(Error::invalid(format!("cluster {c} has mismatched members and weights")));
        }
        if y.weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::invalid(format!("cluster {c} has a negative or non-finite weight")));
        }
        if !(y.total_weight() > 0.0) {
            return Err(Error::invalid(format!("cluster {c} has zero total weight")));
        }
    }
    match criterion {
        VoronoiCriterion::WardsKMeans => Ok(clusters.iter().map(|y| y.ss(&d2)).sum()),
        VoronoiCriterion::SphericalWards(params) => {
            let total: f64 = clusters.iter().map(WeightedCluster::total_weight).sum();
            let n = params.dim;
            let mut energy = params.constant();
            for (c, y) in clusters.iter().enumerate() {
                let ss = y.ss(&d2);
                if !(ss > 0.0) {
                    return Err(Error::DegenerateCluster { cluster: c });
                }
                let p = y.total_weight() / total;
                energy += p * (0.5 * n * ss.ln() - 0.5 * (n + 2.0) * p.ln());
            }
            Ok(energy)
        }
    }
}

/// Finite-difference and closed-form derivatives for one cluster.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivativePair {
    pub numeric: f64,
    /// Exact derivative of the criterion with respect to the weight of `x`.
    pub closed_form: f64,
    /// The textbook closed form. For spherical Wards it leaves out a term
    /// that is the same for every cluster, so it differs from
    /// `closed_form` by a constant but has the same argmin.
    pub reduced_form: f64,
}

/// Derivative of the criterion when `x` joins each cluster with weight `h`,
/// estimated by a forward difference and compared with the closed forms.
pub fn derivative_check(
    x: &[f64],
    partition: &Partition,
    bound: &BoundMeasure<'_>,
    criterion: VoronoiCriterion,
    h: f64,
) -> Result<Vec<DerivativePair>> {
    if !(h > 0.0 && h <= 1e-3) {
        return Err(Error::invalid(format!("step h must lie in (0, 1e-3], got {h}")));
    }
    let n = bound.len();
    if partition.len() != n || !partition.is_complete() {
        return Err(Error::invalid("partition must label every data point"));
    }
    let to_x = bound.d2_from(x)?;
    let d2 = |i: usize, j: usize| match (i == n, j == n) {
        (true, true) => 0.0,
        (true, false) => to_x[j],
        (false, true) => to_x[i],
        (false, false) => bound.d2(i, j).unwrap_or(f64::INFINITY),
    };
    let partition = partition.compacted();
    let base: Vec<WeightedCluster> = partition.clusters().into_iter().map(WeightedCluster::unit).collect();
    let energy = weighted_energy(&base, d2, criterion)?;

    let mut out = Vec::with_capacity(base.len());
    for (i, y) in base.iter().enumerate() {
        let mut bumped = base.clone();
        bumped[i].members.push(n);
        bumped[i].weights.push(h);
        let numeric = (weighted_energy(&bumped, d2, criterion)? - energy) / h;

        let link: f64 = y.members.iter().map(|&j| to_x[j]).sum();
        let stats = ClusterStats { size: y.members.len(), ss: y.ss(&d2) };
        let w = wards_point_score(link, stats)?;
        let (closed_form, reduced_form) = match criterion {
            VoronoiCriterion::WardsKMeans => (w, w),
            VoronoiCriterion::SphericalWards(params) => {
                let total = n as f64;
                let dim = params.dim;
                let m = stats.size as f64;
                let ss = stats.ss;
                let reduced = (0.5 * dim * (ss.ln() + m * w / ss) - 0.5 * (dim + 2.0) * (m.ln() + 1.0)) / total;
                let offset = (0.5 * (dim + 2.0) * (total.ln() + 1.0) - (energy - params.constant())) / total;
                (reduced + offset, reduced)
            }
        };
        out.push(DerivativePair { numeric, closed_form, reduced_form });
    }
    Ok(out)
}

/// Spherical Wards energy of `partition` through the cluster-state path, for
/// cross-checking [`weighted_energy`] with unit weights.
pub fn unweighted_energy(
    partition: &Partition,
    matrix: &DissimilarityMatrix,
    criterion: VoronoiCriterion,
) -> Result<f64> {
    let objective = match criterion {
        VoronoiCriterion::WardsKMeans => Objective::Wards,
        VoronoiCriterion::SphericalWards(params) => Objective::Spherical { params, floor: 0.0 },
    };
    let n = matrix.len();
    Ok(objective.constant()
        + partition
            .clusters()
            .iter()
            .filter(|c| !c.is_empty())
            .map(|c| objective.term(ClusterStats::from_members(c, matrix), n))
            .sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{build_matrix, DissimilarityMeasure};

    const E: DissimilarityMeasure = DissimilarityMeasure::Euclidean;

    #[test]
    fn score_examples() {
        let single = ClusterStats { size: 1, ss: 0.0 };
        assert_eq!(wards_point_score(7.0, single).unwrap(), 7.0);
        // Y = {(0,0),(2,0)}, x = (1,1): links 2 + 2, ss = 2
        let pair = ClusterStats { size: 2, ss: 2.0 };
        assert_eq!(wards_point_score(4.0, pair).unwrap(), 1.0);
        let s = swards_point_score(4.0, pair, 2.0, 0.0).unwrap();
        assert!((s - (1.0 - 2f64.ln())).abs() < 1e-12);
        assert!(wards_point_score(1.0, ClusterStats::EMPTY).is_err());
        assert!(swards_point_score(1.0, single, 2.0, 0.0).is_err());
    }

    #[test]
    fn single_cluster_grid_is_uniform() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.5], vec![0.3, 0.9]];
        let m = build_matrix(&pts, &E).unwrap();
        let bound = BoundMeasure::new(&E, &pts).unwrap();
        let bbox = BoundingBox::new([-1.0, -1.0], [2.0, 2.0]).unwrap();
        let p = CriterionParams::new(2.0).unwrap();
        let g = rasterize(&bound, &m, &Partition::new(vec![0, 0, 0]), bbox, 7, 5, VoronoiCriterion::SphericalWards(p))
            .unwrap();
        assert_eq!(g.labels, vec![0; 35]);
    }

    #[test]
    fn two_singletons_split_on_bisector() {
        let pts = vec![vec![-1.0, 0.0], vec![1.0, 0.0]];
        let m = build_matrix(&pts, &E).unwrap();
        let bound = BoundMeasure::new(&E, &pts).unwrap();
        let bbox = BoundingBox::new([-2.0, -1.0], [2.0, 1.0]).unwrap();
        let g = rasterize(&bound, &m, &Partition::new(vec![0, 1]), bbox, 8, 3, VoronoiCriterion::WardsKMeans).unwrap();
        for j in 0..3 {
            for i in 0..8 {
                assert_eq!(g.get(i, j), usize::from(i >= 4));
            }
        }
    }

    #[test]
    fn grid_formats() {
        let g = VoronoiGrid {
            bbox: BoundingBox::new([0.0, 0.0], [1.0, 1.0]).unwrap(),
            width: 3,
            height: 2,
            labels: vec![0, 1, 2, 2, UNREACHABLE, 0],
            criterion: VoronoiCriterion::WardsKMeans,
            n_clusters: 3,
        };
        let mut csv = Vec::new();
        g.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap(), "0,1,2\n2,-1,0\n");
        let mut pgm = Vec::new();
        g.write_pgm(&mut pgm).unwrap();
        assert_eq!(String::from_utf8(pgm).unwrap(), "P2\n3 2\n255\n254 255 0\n0 127 254\n");
    }

    #[test]
    fn unit_weights_match_unweighted_energy() {
        let pts: Vec<Vec<f64>> = (0..9).map(|i| vec![(i as f64).sin() * 3.0, (i as f64 * 1.7).cos()]).collect();
        let m = build_matrix(&pts, &E).unwrap();
        let p = Partition::new(vec![0, 1, 0, 1, 2, 2, 0, 1, 2]);
        let clusters: Vec<WeightedCluster> = p.clusters().into_iter().map(WeightedCluster::unit).collect();
        for crit in
            [VoronoiCriterion::WardsKMeans, VoronoiCriterion::SphericalWards(CriterionParams::new(2.0).unwrap())]
        {
            let a = weighted_energy(&clusters, |i, j| m.get(i, j), crit).unwrap();
            let b = unweighted_energy(&p, &m, crit).unwrap();
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn weighted_wards_scales_with_weights() {
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, (i * i) as f64 * 0.1]).collect();
        let m = build_matrix(&pts, &E).unwrap();
        let one = vec![WeightedCluster { members: vec![0, 1, 2], weights: vec![0.5, 1.0, 2.0] }];
        let two = vec![WeightedCluster { members: vec![0, 1, 2], weights: vec![1.0, 2.0, 4.0] }];
        let a = weighted_energy(&one, |i, j| m.get(i, j), VoronoiCriterion::WardsKMeans).unwrap();
        let b = weighted_energy(&two, |i, j| m.get(i, j), VoronoiCriterion::WardsKMeans).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12);
        let lone = vec![WeightedCluster { members: vec![3], weights: vec![4.2] }];
        assert_eq!(weighted_energy(&lone, |i, j| m.get(i, j), VoronoiCriterion::WardsKMeans).unwrap(), 0.0);
        let zero = vec![WeightedCluster { members: vec![3], weights: vec![0.0] }];
        assert!(weighted_energy(&zero, |i, j| m.get(i, j), VoronoiCriterion::WardsKMeans).is_err());
    }

    #[test]
    fn derivative_matches_closed_forms() {
        let pts: Vec<Vec<f64>> = (0..12).map(|i| vec![(i as f64 * 0.9).sin() * 2.0, (i as f64 * 1.3).cos()]).collect();
        let bound = BoundMeasure::new(&E, &pts).unwrap();
        let p = Partition::new((0..12).map(|i| i % 3).collect());
        let x = [0.4, -0.2];
        for crit in
            [VoronoiCriterion::WardsKMeans, VoronoiCriterion::SphericalWards(CriterionParams::new(3.0).unwrap())]
        {
            for pair in derivative_check(&x, &p, &bound, crit, 1e-6).unwrap() {
                assert!((pair.numeric - pair.closed_form).abs() <= 1e-4 * (1.0 + pair.closed_form.abs()), "{pair:?}");
            }
        }
        assert!(derivative_check(&x, &p, &bound, VoronoiCriterion::WardsKMeans, 0.1).is_err());
    }
}
