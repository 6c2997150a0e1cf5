//! Hartigan-style minimisation of the spherical Wards (or Wards) criterion.
//!
//! A run starts from a uniformly random labelling and repeats full sweeps
//! over the data. Each point moves to the cluster giving the largest energy
//! decrease. After every sweep, clusters holding fewer than `epsilon * |X|`
//! points are dissolved and their members sent to the surviving clusters
//! that raise the energy least. The run stops once a sweep changes nothing.
//! Several seeded restarts are run and the lowest-energy result is kept.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster_state::{swards_energy, wards_energy, ClusterState, Objective};
use crate::{CriterionParams, DissimilarityMatrix, Error, Partition, Result};

/// Relative tolerance a move's energy decrease must beat.
pub const MOVE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Criterion {
    SphericalWards(CriterionParams),
    /// Wards k-means with a fixed number of clusters.
    Wards {
        k: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusteringConfig {
    pub criterion: Criterion,
    /// Initial number of clusters for spherical Wards (ignored for Wards,
    /// which starts from `k`).
    pub n_init_clusters: usize,
    pub epsilon: f64,
    pub max_sweeps: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl ClusteringConfig {
    pub const DEFAULT_EPSILON: f64 = 0.01;
    pub const DEFAULT_MAX_SWEEPS: usize = 200;
    pub const DEFAULT_RESTARTS: usize = 10;

    pub fn spherical(params: CriterionParams, n_init_clusters: usize) -> Self {
        ClusteringConfig {
            criterion: Criterion::SphericalWards(params),
            n_init_clusters,
            epsilon: Self::DEFAULT_EPSILON,
            max_sweeps: Self::DEFAULT_MAX_SWEEPS,
            restarts: Self::DEFAULT_RESTARTS,
            seed: 0,
        }
    }

    pub fn wards(k: usize) -> Self {
        ClusteringConfig {
            criterion: Criterion::Wards { k },
            n_init_clusters: k,
            epsilon: Self::DEFAULT_EPSILON,
            max_sweeps: Self::DEFAULT_MAX_SWEEPS,
            restarts: Self::DEFAULT_RESTARTS,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_max_sweeps(mut self, max_sweeps: usize) -> Self {
        self.max_sweeps = max_sweeps;
        self
    }

    fn initial_clusters(&self) -> usize {
        match self.criterion {
            Criterion::SphericalWards(_) => self.n_init_clusters,
            Criterion::Wards { k } => k,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 2 {
            return Err(Error::invalid(format!("clustering needs at least 2 points, got {n}")));
        }
        let k0 = self.initial_clusters();
        if k0 == 0 {
            return Err(Error::invalid("the number of initial clusters must be at least 1"));
        }
        if k0 > n {
            return Err(Error::invalid(format!("{k0} initial clusters requested for {n} points")));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::invalid(format!("epsilon must lie in [0, 1), got {}", self.epsilon)));
        }
        if self.restarts == 0 {
            return Err(Error::invalid("restarts must be at least 1"));
        }
        Ok(())
    }
}

/// Energies around one sweep of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub energy_before: f64,
    /// After the reassignment pass; never above `energy_before`.
    pub energy_after_moves: f64,
    /// After dissolving small clusters; may be higher than `energy_after_moves`.
    pub energy_after_removal: f64,
    pub moves: usize,
    pub removed: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusteringResult {
    /// Labels with compacted ids `0..n_clusters`.
    pub partition: Partition,
    /// Criterion value re-evaluated from scratch on `partition`.
    pub energy: f64,
    pub n_clusters: usize,
    pub sweeps_run: usize,
    pub restart_index: usize,
    pub energy_trace: Vec<SweepRecord>,
}

impl ClusteringResult {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.partition.sizes()
    }
}

/// Run every restart and keep the lowest-energy result.
pub fn cluster(matrix: &DissimilarityMatrix, config: &ClusteringConfig) -> Result<ClusteringResult> {
    best_of_restarts(run_restarts(matrix, config)?)
}

/// Results of all restarts, in restart order.
pub fn run_restarts(matrix: &DissimilarityMatrix, config: &ClusteringConfig) -> Result<Vec<ClusteringResult>> {
    config.validate(matrix.len())?;
    (0..config.restarts).into_par_iter().map(|r| run_once(matrix, config, r)).collect()
}

/// Lowest energy wins; equal energies go to the earlier restart.
pub fn best_of_restarts(results: Vec<ClusteringResult>) -> Result<ClusteringResult> {
    results
        .into_iter()
        .min_by(|a, b| a.energy.total_cmp(&b.energy).then(a.restart_index.cmp(&b.restart_index)))
        .ok_or_else(|| Error::invalid("no clustering results to choose from"))
}

/// Random generator for restart `restart`: seeded from `seed ^ restart`.
pub fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ restart as u64)
}

/// One independent run from a random initial labelling.
pub fn run_once(matrix: &DissimilarityMatrix, config: &ClusteringConfig, restart: usize) -> Result<ClusteringResult> {
    config.validate(matrix.len())?;
    let n = matrix.len();
    let objective = match config.criterion {
        Criterion::SphericalWards(params) => {
            if matrix.total() == 0.0 {
                return Err(Error::DegenerateCluster { cluster: 0 });
            }
            Objective::spherical(params, matrix)
        }
        Criterion::Wards { .. } => Objective::Wards,
    };

    let mut rng = restart_rng(config.seed, restart);
    let k0 = config.initial_clusters();
    let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k0)).collect();
    if !objective.allows_emptying() {
        fill_empty_clusters(&mut labels, k0, &mut rng);
    }
    let mut state = ClusterState::new(matrix, &Partition::new(labels), objective)?;

    let mut trace = Vec::new();
    for _ in 0..config.max_sweeps {
        let energy_before = state.energy();
        let moves = sweep(&mut state);
        state.refresh();
        let energy_after_moves = state.energy();
        let removed = match config.criterion {
            Criterion::SphericalWards(_) => remove_small(&mut state, config.epsilon),
            Criterion::Wards { .. } => 0,
        };
        if removed > 0 {
            state.refresh();
        }
        trace.push(SweepRecord {
            energy_before,
            energy_after_moves,
            energy_after_removal: state.energy(),
            moves,
            removed,
        });
        if moves == 0 && removed == 0 {
            break;
        }
    }
    if objective.allows_emptying() {
        state.compact();
    }

    let partition = state.partition().compacted();
    let energy = match config.criterion {
        Criterion::SphericalWards(params) => swards_energy(&partition, matrix, &params)?,
        Criterion::Wards { .. } => wards_energy(&partition, matrix)?,
    };
    Ok(ClusteringResult {
        n_clusters: partition.k(),
        partition,
        energy,
        sweeps_run: trace.len(),
        restart_index: restart,
        energy_trace: trace,
    })
}

/// Give every empty id in `0..k` one point taken from a cluster that can
/// spare it.
fn fill_empty_clusters(labels: &mut [usize], k: usize, rng: &mut ChaCha8Rng) {
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        loop {
            let i = rng.random_range(0..labels.len());
            if sizes[labels[i]] > 1 {
                sizes[labels[i]] -= 1;
                labels[i] = c;
                sizes[c] = 1;
                break;
            }
        }
    }
}

/// One pass over all points in index order, moving each to the cluster with
/// the most negative energy change. Returns the number of moves applied.
pub fn sweep(state: &mut ClusterState<'_>) -> usize {
    let mut links = Vec::new();
    let mut moves = 0;
    let mut energy = state.energy();
    for x in 0..state.n_points() {
        let from = state.labels()[x];
        if !state.objective().allows_emptying() && state.stats()[from].size <= 1 {
            continue;
        }
        state.point_links(x, &mut links);
        let leave = state.leave_delta(from, links[from]);
        let tol = MOVE_TOL * (1.0 + energy.abs());
        let mut best = f64::INFINITY;
        let mut deltas = Vec::with_capacity(state.n_slots());
        for c in 0..state.n_slots() {
            if c == from || state.stats()[c].size == 0 {
                deltas.push(f64::NAN);
                continue;
            }
            let d = leave + state.join_delta(c, links[c]);
            deltas.push(d);
            if d.is_finite() && d < best {
                best = d;
            }
        }
        if !(best < -tol) {
            continue;
        }
        let target = deltas.iter().position(|&d| d.is_finite() && d <= best + tol).expect("best is attained");
        state.apply_move(x, target, &links);
        energy += deltas[target];
        moves += 1;
    }
    moves
}

/// Dissolve every cluster with fewer than `epsilon * |X|` points, smallest
/// first, sending each member (in index order) to the surviving cluster whose
/// energy rises least. Empty clusters are always dropped. If no cluster
/// reaches the threshold, nothing non-empty is dissolved. Cluster ids are
/// compacted afterwards. Returns the number of clusters removed.
pub fn remove_small(state: &mut ClusterState<'_>, epsilon: f64) -> usize {
    let threshold = epsilon * state.n_points() as f64;
    let small_or_empty = |size: usize| size == 0 || (size as f64) < threshold;
    let survivors: Vec<usize> = (0..state.n_slots()).filter(|&c| !small_or_empty(state.stats()[c].size)).collect();
    let mut doomed: Vec<usize> = (0..state.n_slots())
        .filter(|&c| small_or_empty(state.stats()[c].size))
        .filter(|&c| state.stats()[c].size == 0 || !survivors.is_empty())
        .collect();
    doomed.sort_by_key(|&c| (state.stats()[c].size, c));

    let mut links = Vec::new();
    for &c in &doomed {
        let members: Vec<usize> = (0..state.n_points()).filter(|&x| state.labels()[x] == c).collect();
        for x in members {
            state.point_links(x, &mut links);
            let target = survivors
                .iter()
                .map(|&s| (s, state.join_delta(s, links[s])))
                .fold(
                    (usize::MAX, f64::INFINITY),
                    |acc, (s, d)| if d < acc.1 || acc.0 == usize::MAX { (s, d) } else { acc },
                )
                .0;
            state.apply_move(x, target, &links);
        }
    }
    if !doomed.is_empty() {
        state.compact();
    }
    doomed.len()
}
