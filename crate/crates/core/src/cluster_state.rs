//! Partitions, generalized within-cluster sums of squares and the two
//! criterion functions.
//!
//! For a cluster `Y` the scatter is `ss(Y) = D(Y, Y) / (2 |Y|)` where
//! `D(Y, Z)` sums squared dissimilarities over all pairs. In a Euclidean
//! space this equals `sum |y - mean(Y)|^2`, but it needs no mean, so it works
//! for any dissimilarity.
//!
//! The spherical Wards energy of a partition `Y_1..Y_k` of `X` is
//!
//! ```text
//! (N/2) ln(2 pi e / N) + sum_i p_i [ (N/2) ln ss(Y_i) - ((N+2)/2) ln p_i ],   p_i = |Y_i| / |X|
//! ```

use crate::{DissimilarityMatrix, Error, Result};

/// Label of a point that belongs to no cluster.
pub const UNASSIGNED: usize = usize::MAX;

/// Assignment of data indices to cluster ids `0..k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// `k` is one past the largest assigned label.
    pub fn new(labels: Vec<usize>) -> Self {
        let k = labels.iter().filter(|&&l| l != UNASSIGNED).map(|&l| l + 1).max().unwrap_or(0);
        Partition { labels, k }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of cluster ids in use, including ids with no members.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            if l != UNASSIGNED {
                sizes[l] += 1;
            }
        }
        sizes
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.labels.iter().enumerate().filter(|&(_, &l)| l == cluster).map(|(i, _)| i).collect()
    }

    /// Member lists of every id `0..k`.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            if l != UNASSIGNED {
                out[l].push(i);
            }
        }
        out
    }

    pub fn is_complete(&self) -> bool {
        self.labels.iter().all(|&l| l != UNASSIGNED)
    }

    /// Drop empty ids, keeping the relative order of the remaining ones.
    pub fn compacted(&self) -> Partition {
        let sizes = self.sizes();
        let mut map = vec![UNASSIGNED; self.k];
        let mut next = 0;
        for (c, &s) in sizes.iter().enumerate() {
            if s > 0 {
                map[c] = next;
                next += 1;
            }
        }
        let labels = self.labels.iter().map(|&l| if l == UNASSIGNED { l } else { map[l] }).collect();
        Partition { labels, k: next }
    }

    fn require_complete(&self, matrix: &DissimilarityMatrix) -> Result<()> {
        if self.labels.len() != matrix.len() {
            return Err(Error::invalid(format!(
                "partition covers {} points but the matrix has {}",
                self.labels.len(),
                matrix.len()
            )));
        }
        if let Some(i) = self.labels.iter().position(|&l| l == UNASSIGNED) {
            return Err(Error::invalid(format!("point {i} is unassigned")));
        }
        Ok(())
    }
}

/// Size and scatter of one cluster.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ClusterStats {
    pub size: usize,
    pub ss: f64,
}

impl ClusterStats {
    pub const EMPTY: ClusterStats = ClusterStats { size: 0, ss: 0.0 };

    pub fn from_members(members: &[usize], matrix: &DissimilarityMatrix) -> Self {
        if members.is_empty() {
            return Self::EMPTY;
        }
        ClusterStats { size: members.len(), ss: linkage(members, members, matrix) / (2.0 * members.len() as f64) }
    }

    /// Stats after adding a point `x` with `link = D({x}, Y)`.
    pub fn added(self, link: f64) -> Self {
        let m = self.size as f64;
        ClusterStats { size: self.size + 1, ss: (m * self.ss + link) / (m + 1.0) }
    }

    /// Stats after removing a member `x` with `link = D({x}, Y)`. Removing the
    /// last member leaves an empty cluster.
    pub fn removed(self, link: f64) -> Self {
        debug_assert!(self.size > 0, "cannot remove from an empty cluster");
        if self.size <= 1 {
            return Self::EMPTY;
        }
        let m = self.size as f64;
        let ss = (m * self.ss - link) / (m - 1.0);
        ClusterStats { size: self.size - 1, ss: ss.max(0.0) }
    }
}

/// Parameters of the spherical Wards criterion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriterionParams {
    /// The dimension parameter `N > 0`.
    pub dim: f64,
    /// Scatter floor relative to the mean squared dissimilarity `D(X,X)/|X|^2`.
    pub ss_floor_rel: f64,
}

impl CriterionParams {
    pub const DEFAULT_SS_FLOOR_REL: f64 = 1e-12;

    pub fn new(dim: f64) -> Result<Self> {
        Self::with_floor(dim, Self::DEFAULT_SS_FLOOR_REL)
    }

    pub fn with_floor(dim: f64, ss_floor_rel: f64) -> Result<Self> {
        if !(dim > 0.0 && dim.is_finite()) {
            return Err(Error::invalid(format!("dimension parameter N must be positive, got {dim}")));
        }
        if !(ss_floor_rel >= 0.0 && ss_floor_rel.is_finite()) {
            return Err(Error::invalid(format!("ss floor must be nonnegative, got {ss_floor_rel}")));
        }
        Ok(CriterionParams { dim, ss_floor_rel })
    }

    /// Absolute scatter floor for this data set.
    pub fn floor_for(&self, matrix: &DissimilarityMatrix) -> f64 {
        let n = matrix.len() as f64;
        if n == 0.0 {
            0.0
        } else {
            self.ss_floor_rel * matrix.total() / (n * n)
        }
    }

    /// Partition-independent term `(N/2) ln(2 pi e / N)`.
    pub fn constant(&self) -> f64 {
        let n = self.dim;
        0.5 * n * (2.0 * std::f64::consts::PI * std::f64::consts::E / n).ln()
    }
}

/// `D(Y, Z) = sum_{y in Y} sum_{z in Z} d^2(y, z)`.
pub fn linkage(y: &[usize], z: &[usize], matrix: &DissimilarityMatrix) -> f64 {
    y.iter()
        .map(|&a| {
            let row = matrix.row(a);
            z.iter().map(|&b| row[b]).sum::<f64>()
        })
        .sum()
}

/// Generalized within-cluster sum of squares `D(Y, Y) / (2 |Y|)`.
pub fn ss(y: &[usize], matrix: &DissimilarityMatrix) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::invalid("ss of an empty cluster"));
    }
    Ok(ClusterStats::from_members(y, matrix).ss)
}

/// Wards energy `sum_i ss(Y_i)`.
pub fn wards_energy(partition: &Partition, matrix: &DissimilarityMatrix) -> Result<f64> {
    partition.require_complete(matrix)?;
    Ok(partition.clusters().iter().map(|c| ClusterStats::from_members(c, matrix).ss).sum())
}

/// Spherical Wards energy of a complete partition.
pub fn swards_energy(partition: &Partition, matrix: &DissimilarityMatrix, params: &CriterionParams) -> Result<f64> {
    partition.require_complete(matrix)?;
    let objective = Objective::spherical(*params, matrix);
    let n = matrix.len();
    let mut energy = params.constant();
    for (c, members) in partition.clusters().iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let stats = ClusterStats::from_members(members, matrix);
        let term = objective.term(stats, n);
        if !term.is_finite() {
            return Err(Error::DegenerateCluster { cluster: c });
        }
        energy += term;
    }
    Ok(energy)
}

/// Which criterion a [`ClusterState`] tracks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Objective {
    Wards,
    Spherical { params: CriterionParams, floor: f64 },
}

impl Objective {
    pub fn spherical(params: CriterionParams, matrix: &DissimilarityMatrix) -> Self {
        Objective::Spherical { params, floor: params.floor_for(matrix) }
    }

    /// Contribution of one cluster; `-inf` for a spherical cluster whose
    /// floored scatter is zero.
    #[inline]
    pub fn term(&self, stats: ClusterStats, n_total: usize) -> f64 {
        match *self {
            Objective::Wards => stats.ss,
            Objective::Spherical { params, floor } => {
                if stats.size == 0 {
                    return 0.0;
                }
                let ss = stats.ss.max(floor);
                if ss <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let p = stats.size as f64 / n_total as f64;
                let n = params.dim;
                p * (0.5 * n * ss.ln() - 0.5 * (n + 2.0) * p.ln())
            }
        }
    }

    pub fn constant(&self) -> f64 {
        match self {
            Objective::Wards => 0.0,
            Objective::Spherical { params, .. } => params.constant(),
        }
    }

    /// Whether a move may leave its source cluster empty. Wards runs with a
    /// fixed `k`, so it may not.
    pub fn allows_emptying(&self) -> bool {
        matches!(self, Objective::Spherical { .. })
    }
}

/// Mutable clustering state: labels plus per-cluster size and scatter.
///
/// Point-to-cluster links `D({x}, Y)` are not cached; they are recomputed
/// from the matrix row of `x` whenever a move for `x` is considered.
#[derive(Clone, Debug)]
pub struct ClusterState<'m> {
    matrix: &'m DissimilarityMatrix,
    labels: Vec<usize>,
    stats: Vec<ClusterStats>,
    objective: Objective,
}

impl<'m> ClusterState<'m> {
    pub fn new(matrix: &'m DissimilarityMatrix, partition: &Partition, objective: Objective) -> Result<Self> {
        partition.require_complete(matrix)?;
        let mut state = ClusterState {
            matrix,
            labels: partition.labels().to_vec(),
            stats: vec![ClusterStats::EMPTY; partition.k()],
            objective,
        };
        state.refresh();
        Ok(state)
    }

    pub fn matrix(&self) -> &'m DissimilarityMatrix {
        self.matrix
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn stats(&self) -> &[ClusterStats] {
        &self.stats
    }

    pub fn n_points(&self) -> usize {
        self.labels.len()
    }

    /// Number of cluster ids currently held, including emptied ones.
    pub fn n_slots(&self) -> usize {
        self.stats.len()
    }

    pub fn n_nonempty(&self) -> usize {
        self.stats.iter().filter(|s| s.size > 0).count()
    }

    pub fn partition(&self) -> Partition {
        Partition { labels: self.labels.clone(), k: self.stats.len() }
    }

    /// Recompute every cluster's stats from scratch.
    pub fn refresh(&mut self) {
        let k = self.stats.len();
        let mut sums = vec![0.0; k];
        let mut sizes = vec![0usize; k];
        for (x, &lx) in self.labels.iter().enumerate() {
            sizes[lx] += 1;
            let row = self.matrix.row(x);
            sums[lx] += self.labels.iter().zip(row).filter(|(&ly, _)| ly == lx).map(|(_, &d)| d).sum::<f64>();
        }
        for c in 0..k {
            self.stats[c] = if sizes[c] == 0 {
                ClusterStats::EMPTY
            } else {
                ClusterStats { size: sizes[c], ss: sums[c] / (2.0 * sizes[c] as f64) }
            };
        }
    }

    /// Energy from the cached stats.
    pub fn energy(&self) -> f64 {
        let n = self.n_points();
        self.objective.constant() + self.stats.iter().map(|&s| self.objective.term(s, n)).sum::<f64>()
    }

    /// `links[c] = D({x}, Y_c)` for every cluster id.
    pub fn point_links(&self, x: usize, links: &mut Vec<f64>) {
        links.clear();
        links.resize(self.stats.len(), 0.0);
        for (&l, &d) in self.labels.iter().zip(self.matrix.row(x)) {
            links[l] += d;
        }
    }

    /// Energy change from moving `x` (currently in `from`) into `to`.
    pub fn move_delta(&self, x: usize, to: usize) -> f64 {
        let mut links = Vec::new();
        self.point_links(x, &mut links);
        let from = self.labels[x];
        if from == to {
            return 0.0;
        }
        self.leave_delta(from, links[from]) + self.join_delta(to, links[to])
    }

    /// Energy change on the source cluster when a member with link `link` leaves.
    #[inline]
    pub fn leave_delta(&self, from: usize, link: f64) -> f64 {
        let n = self.n_points();
        let s = self.stats[from];
        self.objective.term(s.removed(link), n) - self.objective.term(s, n)
    }

    /// Energy change on `to` when a non-member with link `link` joins.
    #[inline]
    pub fn join_delta(&self, to: usize, link: f64) -> f64 {
        let n = self.n_points();
        let s = self.stats[to];
        self.objective.term(s.added(link), n) - self.objective.term(s, n)
    }

    /// Move `x` to `to`, updating stats incrementally from the given links.
    pub fn apply_move(&mut self, x: usize, to: usize, links: &[f64]) {
        let from = self.labels[x];
        if from == to {
            return;
        }
        self.stats[from] = self.stats[from].removed(links[from]);
        self.stats[to] = self.stats[to].added(links[to]);
        self.labels[x] = to;
    }

    /// Drop empty cluster ids, keeping the order of the others.
    pub fn compact(&mut self) {
        let mut map = vec![UNASSIGNED; self.stats.len()];
        let mut kept = Vec::with_capacity(self.stats.len());
        for (c, s) in self.stats.iter().enumerate() {
            if s.size > 0 {
                map[c] = kept.len();
                kept.push(*s);
            }
        }
        for l in &mut self.labels {
            *l = map[*l];
        }
        self.stats = kept;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{build_matrix, DissimilarityMeasure};

    fn line(xs: &[f64]) -> DissimilarityMatrix {
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        build_matrix(&pts, &DissimilarityMeasure::Euclidean).unwrap()
    }

    #[test]
    fn linkage_examples() {
        let m = line(&[0.0, 3.0]);
        assert_eq!(linkage(&[0], &[0], &m), 0.0);
        assert_eq!(linkage(&[0], &[1], &m), 9.0);
        assert_eq!(linkage(&[0, 1], &[0, 1], &m), 18.0);
    }

    #[test]
    fn ss_examples() {
        let m = line(&[0.0, 3.0]);
        assert_eq!(ss(&[1], &m).unwrap(), 0.0);
        assert_eq!(ss(&[0, 1], &m).unwrap(), 4.5);
        assert!(ss(&[], &m).is_err());
        let pts = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0]];
        let m = build_matrix(&pts, &DissimilarityMeasure::Euclidean).unwrap();
        assert!((ss(&[0, 1, 2], &m).unwrap() - 16.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn incremental_examples() {
        let single = ClusterStats { size: 1, ss: 0.0 };
        assert_eq!(single.added(9.0), ClusterStats { size: 2, ss: 4.5 });
        assert_eq!(single.added(0.0).ss, 0.0);
        assert_eq!(ClusterStats::EMPTY.added(0.0), ClusterStats { size: 1, ss: 0.0 });
        let pair = ClusterStats { size: 2, ss: 4.5 };
        assert_eq!(pair.removed(9.0), ClusterStats { size: 1, ss: 0.0 });
        assert_eq!(single.removed(0.0), ClusterStats::EMPTY);
    }

    #[test]
    fn removal_round_trip() {
        let y = ClusterStats { size: 5, ss: 3.75 };
        let back = y.added(12.5).removed(12.5);
        assert_eq!(back.size, 5);
        assert!((back.ss - y.ss).abs() < 1e-12);
    }

    #[test]
    fn wards_energy_examples() {
        let m = line(&[0.0, 3.0, 10.0]);
        assert_eq!(wards_energy(&Partition::new(vec![0, 1, 2]), &m).unwrap(), 0.0);
        assert_eq!(wards_energy(&Partition::new(vec![0, 0, 1]), &m).unwrap(), 4.5);
        let all = wards_energy(&Partition::new(vec![0, 0, 0]), &m).unwrap();
        assert_eq!(all, ss(&[0, 1, 2], &m).unwrap());
        assert!(wards_energy(&Partition::new(vec![0, UNASSIGNED, 1]), &m).is_err());
    }

    #[test]
    fn swards_energy_example() {
        let m = line(&[0.0, 3.0]);
        let params = CriterionParams::new(1.0).unwrap();
        let e = swards_energy(&Partition::new(vec![0, 0]), &m, &params).unwrap();
        let expected = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln() + 0.5 * 4.5f64.ln();
        assert!((e - expected).abs() < 1e-12);
        assert!((e - 2.17098).abs() < 1e-5);
    }

    #[test]
    fn swards_energy_degenerate_cluster() {
        let m = line(&[1.0, 1.0, 4.0]);
        let off = CriterionParams::with_floor(2.0, 0.0).unwrap();
        let err = swards_energy(&Partition::new(vec![0, 0, 1]), &m, &off).unwrap_err();
        assert!(matches!(err, Error::DegenerateCluster { cluster: 0 }));
        let on = CriterionParams::new(2.0).unwrap();
        assert!(swards_energy(&Partition::new(vec![0, 0, 1]), &m, &on).unwrap().is_finite());
    }

    #[test]
    fn wards_move_delta_example() {
        let m = line(&[0.0, 3.0, 10.0]);
        let state = ClusterState::new(&m, &Partition::new(vec![0, 0, 1]), Objective::Wards).unwrap();
        assert!((state.move_delta(1, 1) - 20.0).abs() < 1e-12);
        assert_eq!(state.move_delta(1, 0), 0.0);
    }

    #[test]
    fn compaction_keeps_order() {
        let p = Partition::new(vec![3, 1, 3, UNASSIGNED]);
        let c = p.compacted();
        assert_eq!(c.labels(), &[1, 0, 1, UNASSIGNED]);
        assert_eq!(c.k(), 2);
    }
}
