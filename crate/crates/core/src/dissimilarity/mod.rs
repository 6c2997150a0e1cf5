//! Dissimilarity measures and the squared-dissimilarity matrix.
//!
//! Every measure yields `d^2`. The geodesic measures compute a path length
//! `d` and square it, so all downstream formulas work on squared values.

mod barrier;
pub(crate) mod geometry;
mod matrix;
mod region;

use rayon::prelude::*;

pub use barrier::{barrier_d, Anchors, BarrierGeodesic};
pub use geometry::{BoundingBox, Environment, Point2, RegionSplit, Segment};
pub use matrix::DissimilarityMatrix;
pub use region::region_d;

use crate::{Error, Result};
use geometry::as_point2;

/// `sum_k (x_k - y_k)^2`.
pub fn euclidean_d2(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { left: x.len(), right: y.len() });
    }
    if x.is_empty() {
        return Err(Error::invalid("points must have at least one coordinate"));
    }
    Ok(sq_dist(x, y))
}

#[inline]
fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Kernel-induced squared distance `2 (1 - exp(-|x - y|^2 / (2 sigma2)))`.
pub fn rbf_d2(x: &[f64], y: &[f64], sigma2: f64) -> Result<f64> {
    check_sigma2(sigma2)?;
    Ok(rbf_from_sq(euclidean_d2(x, y)?, sigma2))
}

#[inline]
fn rbf_from_sq(sq: f64, sigma2: f64) -> f64 {
    -2.0 * (-sq / (2.0 * sigma2)).exp_m1()
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if sigma2 > 0.0 && sigma2.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("RBF sigma^2 must be positive and finite, got {sigma2}")))
    }
}

/// Median of the squared Euclidean distances over all unordered pairs.
pub fn median_sigma2(points: &[Vec<f64>]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::invalid("median sigma^2 needs at least two points"));
    }
    let mut sq = Vec::with_capacity(points.len() * (points.len() - 1) / 2);
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            sq.push(euclidean_d2(&points[i], &points[j])?);
        }
    }
    sq.sort_by(f64::total_cmp);
    let m = sq.len();
    let median = if m % 2 == 1 { sq[m / 2] } else { 0.5 * (sq[m / 2 - 1] + sq[m / 2]) };
    if median > 0.0 {
        Ok(median)
    } else if sq[m - 1] == 0.0 {
        Err(Error::DegenerateData("all points coincide".into()))
    } else {
        Err(Error::DegenerateData("median squared distance is zero (more than half the pairs coincide)".into()))
    }
}

/// A symmetric dissimilarity with `d(y, y) = 0`.
#[derive(Clone, Debug)]
pub enum DissimilarityMeasure {
    Euclidean,
    RbfInduced {
        sigma2: f64,
    },
    /// Shortest barrier-avoiding path length.
    Barrier(BarrierGeodesic),
    /// Two-speed region metric; the environment must carry a [`RegionSplit`].
    Region(Environment),
    /// Squared dissimilarities supplied directly; only index-based evaluation.
    Precomputed(DissimilarityMatrix),
}

impl DissimilarityMeasure {
    pub fn rbf(sigma2: f64) -> Result<Self> {
        check_sigma2(sigma2)?;
        Ok(DissimilarityMeasure::RbfInduced { sigma2 })
    }

    pub fn barrier(env: Environment) -> Self {
        DissimilarityMeasure::Barrier(BarrierGeodesic::new(env))
    }

    pub fn region(env: Environment) -> Result<Self> {
        if env.region.is_none() {
            return Err(Error::invalid("region measure needs an environment with border_x"));
        }
        Ok(DissimilarityMeasure::Region(env))
    }

    pub fn name(&self) -> &'static str {
        match self {
            DissimilarityMeasure::Euclidean => "euclidean",
            DissimilarityMeasure::RbfInduced { .. } => "rbf",
            DissimilarityMeasure::Barrier(_) => "barrier",
            DissimilarityMeasure::Region(_) => "region",
            DissimilarityMeasure::Precomputed(_) => "precomputed",
        }
    }

    /// Squared dissimilarity between two points. Not available for
    /// [`DissimilarityMeasure::Precomputed`], which only knows indices.
    pub fn d2(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            DissimilarityMeasure::Euclidean => euclidean_d2(x, y),
            DissimilarityMeasure::RbfInduced { sigma2 } => rbf_d2(x, y, *sigma2),
            DissimilarityMeasure::Barrier(geo) => barrier::checked_distance(geo, x, y).map(|d| d * d),
            DissimilarityMeasure::Region(env) => region_d(x, y, env).map(|d| d * d),
            DissimilarityMeasure::Precomputed(_) => {
                Err(Error::invalid("a precomputed matrix cannot evaluate arbitrary points"))
            }
        }
    }
}

/// A measure bound to a data set, evaluating `d^2(i, j)` by index and
/// `d^2(x, y_j)` from an arbitrary point to every data point.
pub struct BoundMeasure<'a> {
    measure: &'a DissimilarityMeasure,
    points: &'a [Vec<f64>],
    anchors: Vec<Anchors>,
}

impl<'a> BoundMeasure<'a> {
    pub fn new(measure: &'a DissimilarityMeasure, points: &'a [Vec<f64>]) -> Result<Self> {
        if let DissimilarityMeasure::Precomputed(m) = measure {
            if m.len() != points.len() {
                return Err(Error::invalid(format!(
                    "precomputed matrix has {} rows but {} points were given",
                    m.len(),
                    points.len()
                )));
            }
            return Ok(BoundMeasure { measure, points, anchors: Vec::new() });
        }
        let dim = points.first().map_or(0, Vec::len);
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch { left: dim, right: p.len() });
        }
        if !points.is_empty() && dim == 0 {
            return Err(Error::invalid("points must have at least one coordinate"));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("point coordinates must be finite"));
        }
        let env = match measure {
            DissimilarityMeasure::Barrier(geo) => Some(geo.environment()),
            DissimilarityMeasure::Region(env) => Some(env),
            _ => None,
        };
        if let Some(env) = env {
            for (i, p) in points.iter().enumerate() {
                let q = as_point2(p)?;
                if !env.bbox.contains(q) {
                    return Err(Error::invalid(format!(
                        "point {i} ({}, {}) lies outside the bounding box",
                        q[0], q[1]
                    )));
                }
                if matches!(measure, DissimilarityMeasure::Barrier(_)) && env.on_barrier(q) {
                    return Err(Error::invalid(format!("point {i} ({}, {}) lies on a barrier", q[0], q[1])));
                }
            }
        }
        let anchors = match measure {
            DissimilarityMeasure::Barrier(geo) => points.par_iter().map(|p| geo.anchors([p[0], p[1]])).collect(),
            _ => Vec::new(),
        };
        Ok(BoundMeasure { measure, points, anchors })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn measure(&self) -> &DissimilarityMeasure {
        self.measure
    }

    /// `d^2` between data points `i` and `j`; `None` when unreachable.
    pub fn d2(&self, i: usize, j: usize) -> Option<f64> {
        if i == j {
            return Some(0.0);
        }
        let (x, y) = (&self.points[i], &self.points[j]);
        match self.measure {
            DissimilarityMeasure::Euclidean => Some(sq_dist(x, y)),
            DissimilarityMeasure::RbfInduced { sigma2 } => Some(rbf_from_sq(sq_dist(x, y), *sigma2)),
            DissimilarityMeasure::Barrier(geo) => {
                geo.distance_with([x[0], x[1]], &self.anchors[i], [y[0], y[1]], &self.anchors[j]).map(|d| d * d)
            }
            DissimilarityMeasure::Region(env) => {
                let r = env.region.as_ref().expect("region measure has a split");
                let d = region::region_distance(r, env.bbox.min[1], env.bbox.max[1], [x[0], x[1]], [y[0], y[1]]);
                Some(d * d)
            }
            DissimilarityMeasure::Precomputed(m) => Some(m.get(i, j)),
        }
    }

    /// `d^2(x, y_j)` for every data point `y_j`; unreachable pairs are
    /// `f64::INFINITY`.
    pub fn d2_from(&self, x: &[f64]) -> Result<Vec<f64>> {
        let dim = self.points.first().map_or(x.len(), Vec::len);
        if x.len() != dim {
            return Err(Error::DimensionMismatch { left: x.len(), right: dim });
        }
        Ok(match self.measure {
            DissimilarityMeasure::Euclidean => self.points.iter().map(|y| sq_dist(x, y)).collect(),
            DissimilarityMeasure::RbfInduced { sigma2 } => {
                self.points.iter().map(|y| rbf_from_sq(sq_dist(x, y), *sigma2)).collect()
            }
            DissimilarityMeasure::Barrier(geo) => {
                let p = as_point2(x)?;
                let ax = geo.anchors(p);
                self.points
                    .iter()
                    .zip(&self.anchors)
                    .map(|(y, ay)| geo.distance_with(p, &ax, [y[0], y[1]], ay).map_or(f64::INFINITY, |d| d * d))
                    .collect()
            }
            DissimilarityMeasure::Region(env) => {
                let p = as_point2(x)?;
                let r = env.region.as_ref().expect("region measure has a split");
                self.points
                    .iter()
                    .map(|y| {
                        let d = region::region_distance(r, env.bbox.min[1], env.bbox.max[1], p, [y[0], y[1]]);
                        d * d
                    })
                    .collect()
            }
            DissimilarityMeasure::Precomputed(_) => {
                return Err(Error::invalid("a precomputed matrix cannot evaluate arbitrary points"));
            }
        })
    }
}

/// Squared-dissimilarity matrix of `points` under `measure`.
///
/// For [`DissimilarityMeasure::Precomputed`] the stored matrix is returned
/// after checking that its size matches `points`.
pub fn build_matrix(points: &[Vec<f64>], measure: &DissimilarityMeasure) -> Result<DissimilarityMatrix> {
    if points.is_empty() {
        return Err(Error::invalid("cannot build a matrix for an empty data set"));
    }
    if let DissimilarityMeasure::Precomputed(m) = measure {
        BoundMeasure::new(measure, points)?;
        return Ok(m.clone());
    }
    let bound = BoundMeasure::new(measure, points)?;
    let n = points.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| ((i + 1)..n).map(|j| bound.d2(i, j).unwrap_or(f64::INFINITY)).collect())
        .collect();
    for (i, row) in rows.iter().enumerate() {
        if let Some(off) = row.iter().position(|v| !v.is_finite()) {
            let (x, y) = (&points[i], &points[i + 1 + off]);
            return Err(Error::Unreachable { from_x: x[0], from_y: x[1], to_x: y[0], to_y: y[1] });
        }
    }
    Ok(DissimilarityMatrix::from_fn(n, |i, j| rows[i][j - i - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_examples() {
        assert_eq!(euclidean_d2(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(euclidean_d2(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(euclidean_d2(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 25.0);
        assert!(matches!(euclidean_d2(&[0.0], &[0.0, 1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rbf_examples() {
        assert_eq!(rbf_d2(&[0.3, 0.1], &[0.3, 0.1], 1.0).unwrap(), 0.0);
        let v = rbf_d2(&[0.0], &[1.0], 0.5).unwrap();
        assert!((v - 2.0 * (1.0 - (-1f64).exp())).abs() < 1e-15);
        assert!((v - 1.26424).abs() < 1e-5);
        assert!((rbf_d2(&[0.0], &[1e6], 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(rbf_d2(&[0.0], &[1.0], 0.0).is_err());
        assert!(rbf_d2(&[0.0], &[1.0], -1.0).is_err());
    }

    #[test]
    fn median_sigma2_examples() {
        assert_eq!(median_sigma2(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap(), 4.0);
        assert_eq!(median_sigma2(&[vec![0.0, 0.0], vec![0.0, 2.0]]).unwrap(), 4.0);
        assert_eq!(median_sigma2(&[vec![0.0], vec![1.0], vec![3.0], vec![7.0]]).unwrap(), (9.0 + 16.0) / 2.0);
        assert!(matches!(median_sigma2(&vec![vec![1.0, 1.0]; 4]), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn build_matrix_examples() {
        let m = build_matrix(&[vec![5.0]], &DissimilarityMeasure::Euclidean).unwrap();
        assert_eq!(m.as_slice(), &[0.0]);
        let m = build_matrix(&[vec![0.0], vec![3.0]], &DissimilarityMeasure::Euclidean).unwrap();
        assert_eq!(m.as_slice(), &[0.0, 9.0, 9.0, 0.0]);
    }

    #[test]
    fn precomputed_needs_matching_size() {
        let m = DissimilarityMatrix::from_fn(3, |_, _| 1.0);
        let measure = DissimilarityMeasure::Precomputed(m.clone());
        assert!(build_matrix(&vec![vec![0.0]; 2], &measure).is_err());
        assert_eq!(build_matrix(&vec![vec![]; 3], &measure).unwrap(), m);
        assert!(measure.d2(&[0.0], &[1.0]).is_err());
    }

    #[test]
    fn geodesic_matrix_squares_path_length() {
        let env = Environment::new(BoundingBox::new([-3.0, -3.0], [3.0, 3.0]).unwrap())
            .with_barrier(Segment::new([0.0, -1.0], [0.0, 1.0]).unwrap());
        let m = build_matrix(&[vec![-1.0, 0.0], vec![1.0, 0.0]], &DissimilarityMeasure::barrier(env)).unwrap();
        assert!((m.get(0, 1) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn enclosed_point_makes_matrix_unreachable() {
        let s = |a, b| Segment::new(a, b).unwrap();
        let env = Environment::new(BoundingBox::new([-3.0, -3.0], [3.0, 3.0]).unwrap())
            .with_barrier(s([-1.0, -1.0], [1.0, -1.0]))
            .with_barrier(s([1.0, -1.0], [1.0, 1.0]))
            .with_barrier(s([1.0, 1.0], [-1.0, 1.0]))
            .with_barrier(s([-1.0, 1.0], [-1.0, -1.0]));
        let err = build_matrix(&[vec![0.0, 0.0], vec![2.0, 2.0]], &DissimilarityMeasure::barrier(env)).unwrap_err();
        assert!(matches!(err, Error::Unreachable { .. }));
    }
}
