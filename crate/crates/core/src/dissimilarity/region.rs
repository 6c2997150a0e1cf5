//! Travel cost across a slow/fast region split.

use super::geometry::{as_point2, dist, Environment, Point2, RegionSplit};
use crate::{Error, Result};

const BORDER_SAMPLES: usize = 512;
const REFINE_TOL: f64 = 1e-9;

/// Cost of travelling from `x` to `y`: Euclidean inside the fast region,
/// `slow_factor` times Euclidean inside the slow one, and for mixed pairs the
/// cheapest crossing `s * |x_slow - z| + |z - y_fast|` over border points `z`.
pub fn region_d(x: &[f64], y: &[f64], env: &Environment) -> Result<f64> {
    let region = env.region.ok_or_else(|| Error::invalid("environment has no region border"))?;
    let x = as_point2(x)?;
    let y = as_point2(y)?;
    for p in [x, y] {
        if !env.bbox.contains(p) {
            return Err(Error::invalid(format!("point ({}, {}) lies outside the bounding box", p[0], p[1])));
        }
    }
    Ok(region_distance(&region, env.bbox.min[1], env.bbox.max[1], x, y))
}

pub(crate) fn region_distance(region: &RegionSplit, y_lo: f64, y_hi: f64, x: Point2, y: Point2) -> f64 {
    let s = region.slow_factor;
    match (region.is_slow(x), region.is_slow(y)) {
        (false, false) => dist(x, y),
        (true, true) => s * dist(x, y),
        (true, false) => crossing_cost(region.border_x, s, y_lo, y_hi, x, y),
        (false, true) => crossing_cost(region.border_x, s, y_lo, y_hi, y, x),
    }
}

fn crossing_cost(border_x: f64, s: f64, y_lo: f64, y_hi: f64, slow: Point2, fast: Point2) -> f64 {
    let cost = |t: f64| {
        let z = [border_x, t];
        s * dist(slow, z) + dist(z, fast)
    };
    let step = (y_hi - y_lo) / (BORDER_SAMPLES - 1) as f64;
    let sample = |i: usize| y_lo + step * i as f64;
    let (best_i, _) = (0..BORDER_SAMPLES).map(|i| (i, cost(sample(i)))).fold((0, f64::INFINITY), |acc, (i, c)| {
        if c < acc.1 {
            (i, c)
        } else {
            acc
        }
    });
    let lo = sample(best_i.saturating_sub(1));
    let hi = sample((best_i + 1).min(BORDER_SAMPLES - 1));
    let t = golden_section(cost, lo, hi, REFINE_TOL);
    cost(t).min(cost(sample(best_i)))
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
