//! Independent reference computations shared by the integration tests.
//!
//! Everything here works from raw coordinates with textbook formulas
//! (centroids, explicit pair enumeration) so it shares no code path with the
//! library.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize, spread: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(-spread..spread)).collect()).collect()
}

/// Labels with every id in `0..k` used at least `min_size` times.
pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, k: usize, min_size: usize) -> Vec<usize> {
    assert!(k * min_size <= n);
    let mut labels: Vec<usize> =
        (0..n).map(|i| if i < k * min_size { i / min_size } else { rng.random_range(0..k) }).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        labels.swap(i, j);
    }
    labels
}

pub fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Weighted centroid.
pub fn centroid(points: &[&[f64]], weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut m = vec![0.0; points[0].len()];
    for (p, &w) in points.iter().zip(weights) {
        for (mk, pk) in m.iter_mut().zip(p.iter()) {
            *mk += w * pk;
        }
    }
    m.iter_mut().for_each(|v| *v /= total);
    m
}

/// `sum_y w_y |y - m_w|^2`.
pub fn centroid_ss(points: &[&[f64]], weights: &[f64]) -> f64 {
    let m = centroid(points, weights);
    points.iter().zip(weights).map(|(p, &w)| w * sq(p, &m)).sum()
}

pub fn unit_ss(points: &[&[f64]]) -> f64 {
    centroid_ss(points, &vec![1.0; points.len()])
}

pub fn members<'a>(points: &'a [Vec<f64>], labels: &[usize], c: usize) -> Vec<&'a [f64]> {
    points.iter().zip(labels).filter(|(_, &l)| l == c).map(|(p, _)| p.as_slice()).collect()
}

pub fn n_labels(labels: &[usize]) -> usize {
    labels.iter().max().map_or(0, |&m| m + 1)
}

pub fn swards_constant(dim: f64) -> f64 {
    0.5 * dim * (2.0 * std::f64::consts::PI * std::f64::consts::E / dim).ln()
}

/// Spherical Wards energy of weighted Euclidean clusters, written out from
/// centroids: `C + sum_i p_i [ (N/2) ln ss_i - ((N+2)/2) ln p_i ]`.
pub fn swards_energy_weighted(clusters: &[(Vec<&[f64]>, Vec<f64>)], dim: f64) -> f64 {
    let total: f64 = clusters.iter().map(|(_, w)| w.iter().sum::<f64>()).sum();
    swards_constant(dim)
        + clusters
            .iter()
            .map(|(pts, w)| {
                let p = w.iter().sum::<f64>() / total;
                p * (0.5 * dim * centroid_ss(pts, w).ln() - 0.5 * (dim + 2.0) * p.ln())
            })
            .sum::<f64>()
}

pub fn wards_energy_weighted(clusters: &[(Vec<&[f64]>, Vec<f64>)]) -> f64 {
    clusters.iter().map(|(pts, w)| centroid_ss(pts, w)).sum()
}

/// Unit-weight spherical Wards energy of a labelling (empty ids skipped).
pub fn swards_energy(points: &[Vec<f64>], labels: &[usize], dim: f64) -> f64 {
    let clusters: Vec<(Vec<&[f64]>, Vec<f64>)> = (0..n_labels(labels))
        .map(|c| members(points, labels, c))
        .filter(|m| !m.is_empty())
        .map(|m| {
            let w = vec![1.0; m.len()];
            (m, w)
        })
        .collect();
    swards_energy_weighted(&clusters, dim)
}

pub fn wards_energy(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    (0..n_labels(labels)).map(|c| members(points, labels, c)).filter(|m| !m.is_empty()).map(|m| unit_ss(&m)).sum()
}

/// Rand index by enumerating every pair.
pub fn rand_by_pairs(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let mut agree = 0u64;
    let mut total = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            total += 1;
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    agree as f64 / total as f64
}

/// `|a - b| / max(|b|, scale)`.
pub fn rel_err(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / b.abs().max(scale)
}
