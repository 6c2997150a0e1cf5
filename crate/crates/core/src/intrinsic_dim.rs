//! Nearest-neighbour maximum-likelihood estimate of intrinsic dimension.
//!
//! For a point `x` with sorted neighbour distances `T_1 <= T_2 <= ...` the
//! per-point estimate at neighbourhood size `k` is
//!
//! ```text
//! N_k(x) = [ 1/(k-1) * sum_{j<k} ln(T_k / T_j) ]^-1
//! ```
//!
//! Point estimates are combined by averaging their inverses,
//! `N_k = n / sum_x 1/N_k(x)`, and the result is the plain mean of `N_k`
//! over `k` in `k_min..=k_max`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{DissimilarityMatrix, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroDistancePolicy {
    /// Drop zero-distance neighbours from the sum and renormalise; points
    /// whose `k`-th neighbour is at distance zero are left out.
    SkipPair,
    Error,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DimEstimatorConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub zero_distance_policy: ZeroDistancePolicy,
}

impl Default for DimEstimatorConfig {
    fn default() -> Self {
        DimEstimatorConfig { k_min: 10, k_max: 20, zero_distance_policy: ZeroDistancePolicy::SkipPair }
    }
}

impl DimEstimatorConfig {
    pub fn new(k_min: usize, k_max: usize) -> Result<Self> {
        let config = DimEstimatorConfig { k_min, k_max, ..Default::default() };
        config.check_range()?;
        Ok(config)
    }

    pub fn with_policy(mut self, policy: ZeroDistancePolicy) -> Self {
        self.zero_distance_policy = policy;
        self
    }

    fn check_range(&self) -> Result<()> {
        if self.k_min < 2 || self.k_min > self.k_max {
            return Err(Error::invalid(format!(
                "neighbourhood range needs 2 <= k_min <= k_max, got {}..={}",
                self.k_min, self.k_max
            )));
        }
        Ok(())
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.check_range()?;
        if n <= self.k_max {
            return Err(Error::invalid(format!(
                "dimension estimate needs more than k_max = {} points, got {n}",
                self.k_max
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimEstimate {
    pub dimension: f64,
    /// `(k, N_k)` for every `k` in the averaging range.
    pub per_k: Vec<(usize, f64)>,
}

/// Estimated intrinsic dimension together with the per-`k` values.
pub fn mle_dimension(matrix: &DissimilarityMatrix, config: &DimEstimatorConfig) -> Result<DimEstimate> {
    let n = matrix.len();
    config.validate(n)?;
    let k_max = config.k_max;

    let neighbours: Vec<Vec<f64>> = (0..n).into_par_iter().map(|x| nearest_distances(matrix, x, k_max)).collect();

    if config.zero_distance_policy == ZeroDistancePolicy::Error {
        if let Some(x) = neighbours.iter().position(|t| t[0] == 0.0) {
            return Err(Error::DegenerateData(format!("point {x} has a neighbour at distance zero")));
        }
    }

    let mut per_k = Vec::with_capacity(k_max - config.k_min + 1);
    for k in config.k_min..=k_max {
        let mut inverse_sum = 0.0;
        let mut used = 0usize;
        for t in &neighbours {
            if let Some(inv) = inverse_point_estimate(&t[..k]) {
                inverse_sum += inv;
                used += 1;
            }
        }
        if used == 0 || !(inverse_sum > 0.0) {
            return Err(Error::DegenerateData(format!(
                "no usable neighbourhoods of size {k}; the data has too many duplicates"
            )));
        }
        per_k.push((k, used as f64 / inverse_sum));
    }
    let dimension = per_k.iter().map(|&(_, v)| v).sum::<f64>() / per_k.len() as f64;
    Ok(DimEstimate { dimension, per_k })
}

/// Distances to the `k` nearest other points in ascending order, ties by index.
fn nearest_distances(matrix: &DissimilarityMatrix, x: usize, k: usize) -> Vec<f64> {
    let row = matrix.row(x);
    let mut others: Vec<(f64, usize)> = (0..row.len()).filter(|&j| j != x).map(|j| (row[j], j)).collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if others.len() > k {
        others.select_nth_unstable_by(k - 1, cmp);
        others.truncate(k);
    }
    others.sort_unstable_by(cmp);
    others.into_iter().map(|(d2, _)| d2.sqrt()).collect()
}

/// `1 / N_k(x)` from the first `k` sorted neighbour distances, or `None` when
/// the point has to be skipped.
fn inverse_point_estimate(t: &[f64]) -> Option<f64> {
    let tk = *t.last()?;
    if tk == 0.0 {
        return None;
    }
    let (sum, count) =
        t[..t.len() - 1].iter().filter(|&&tj| tj > 0.0).fold((0.0, 0usize), |(s, c), &tj| (s + (tk / tj).ln(), c + 1));
    if count == 0 {
        return None;
    }
    Some(sum / count as f64)
}
