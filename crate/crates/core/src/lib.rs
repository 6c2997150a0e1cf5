//! Spherical Wards clustering for data sets equipped only with a symmetric
//! dissimilarity measure.
//!
//! The crate is organised around a dense [`DissimilarityMatrix`] of squared
//! dissimilarities. Everything downstream (cluster statistics, the Hartigan
//! solver, intrinsic-dimension estimation) consumes that matrix, so any
//! measure works as long as it is symmetric with zero self-dissimilarity.
//!
//! - [`dissimilarity`]: Euclidean, RBF-induced, barrier-geodesic and
//!   two-region measures, plus matrix construction and file formats.
//! - [`cluster_state`]: within-cluster sums of squares, incremental updates,
//!   the Wards and spherical Wards criteria.
//! - [`solver`]: Hartigan-style minimisation with on-line removal of small
//!   clusters and seeded multi-restart selection.
//! - [`intrinsic_dim`]: nearest-neighbour maximum-likelihood dimension
//!   estimate, used to set the criterion's `N`.
//! - [`voronoi`]: generalized Voronoi scores, the weighted-energy derivative
//!   check and grid rasterization.
//! - [`metrics`]: Rand index.
//! - [`datagen`]: seeded generators for the synthetic experiments.
//!
//! ```
//! use swards::{build_matrix, cluster, ClusteringConfig, CriterionParams, DissimilarityMeasure};
//!
//! let points: Vec<Vec<f64>> = (0..40)
//!     .map(|i| {
//!         let c = if i < 20 { -3.0 } else { 3.0 };
//!         vec![c + 0.1 * (i % 5) as f64, 0.1 * (i % 7) as f64]
//!     })
//!     .collect();
//! let matrix = build_matrix(&points, &DissimilarityMeasure::Euclidean).unwrap();
//! let config = ClusteringConfig::spherical(CriterionParams::new(2.0).unwrap(), 4).with_seed(3);
//! let result = cluster(&matrix, &config).unwrap();
//! assert!(result.n_clusters >= 2);
//! ```

pub mod cluster_state;
pub mod datagen;
pub mod dissimilarity;
mod error;
pub mod intrinsic_dim;
pub mod metrics;
pub mod solver;
pub mod voronoi;

pub use cluster_state::{ClusterStats, CriterionParams, Partition, UNASSIGNED};
pub use dissimilarity::{
    build_matrix, BoundMeasure, BoundingBox, DissimilarityMatrix, DissimilarityMeasure, Environment, RegionSplit,
    Segment,
};
pub use error::{Error, Result};
pub use intrinsic_dim::{mle_dimension, DimEstimate, DimEstimatorConfig, ZeroDistancePolicy};
pub use metrics::rand_index;
pub use solver::{cluster, ClusteringConfig, ClusteringResult, Criterion};
pub use voronoi::{rasterize, VoronoiCriterion, VoronoiGrid, UNREACHABLE};

/// Shortest decimal text that parses back to exactly `v`, with at most 17
/// significant digits.
pub fn format_f64(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v:?}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..17).contains(&exp) {
        format!("{v:?}")
    } else {
        format!("{v:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::format_f64;

    #[test]
    fn float_text_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-9, 6.02e23, 123456789.0, 1e-5, 0.0, f64::MIN_POSITIVE] {
            assert_eq!(format_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_f64(0.25), "0.25");
        assert_eq!(format_f64(2.0), "2.0");
        assert_eq!(format_f64(1.5e-9), "1.5e-9");
    }
}
