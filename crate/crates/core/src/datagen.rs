//! Seeded generators for the synthetic experiments: Gaussian mixtures, the
//! mouse-like set with barriers, and lattice random walks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dissimilarity::geometry::{dist, Point2};
use crate::{BoundingBox, Environment, Error, RegionSplit, Result, Segment};

/// Points with their generating component / population index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabeledPoints {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl LabeledPoints {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn extend(&mut self, points: impl IntoIterator<Item = Vec<f64>>, label: usize) {
        for p in points {
            self.points.push(p);
            self.labels.push(label);
        }
    }
}

/// One isotropic Gaussian component with covariance `variance * I`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub variance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixtureSpec {
    pub components: Vec<MixtureComponent>,
    pub n: usize,
    pub seed: u64,
}

impl MixtureSpec {
    /// Equal weights, means `(-1, 0)` and `(1, 0)`, variances `r` and `1 - r`.
    pub fn scale_preset(r: f64, n: usize, seed: u64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::invalid(format!("r must lie in (0, 1), got {r}")));
        }
        Ok(MixtureSpec {
            components: vec![
                MixtureComponent { weight: 0.5, mean: vec![-1.0, 0.0], variance: r },
                MixtureComponent { weight: 0.5, mean: vec![1.0, 0.0], variance: 1.0 - r },
            ],
            n,
            seed,
        })
    }

    /// Weights `omega` and `1 - omega`, means `(-1, 0)` and `(1, 0)`, both
    /// variances 1/2.
    pub fn unbalanced_preset(omega: f64, n: usize, seed: u64) -> Result<Self> {
        if !(omega > 0.0 && omega < 1.0) {
            return Err(Error::invalid(format!("omega must lie in (0, 1), got {omega}")));
        }
        Ok(MixtureSpec {
            components: vec![
                MixtureComponent { weight: omega, mean: vec![-1.0, 0.0], variance: 0.5 },
                MixtureComponent { weight: 1.0 - omega, mean: vec![1.0, 0.0], variance: 0.5 },
            ],
            n,
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let first = self.components.first().ok_or_else(|| Error::invalid("a mixture needs at least one component"))?;
        let dim = first.mean.len();
        for (i, c) in self.components.iter().enumerate() {
            if c.mean.len() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: c.mean.len() });
            }
            if !(c.weight >= 0.0 && c.weight.is_finite()) {
                return Err(Error::invalid(format!("component {i} has weight {}", c.weight)));
            }
            if !(c.variance > 0.0 && c.variance.is_finite()) {
                return Err(Error::invalid(format!("component {i} has variance {}", c.variance)));
            }
        }
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("component weights sum to {total}, not 1")));
        }
        Ok(())
    }
}

/// Draw a component by weight, then a Gaussian point from it.
pub fn sample_mixture(spec: &MixtureSpec) -> Result<LabeledPoints> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = LabeledPoints::default();
    for _ in 0..spec.n {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut label = spec.components.len() - 1;
        for (i, c) in spec.components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                label = i;
                break;
            }
        }
        let c = &spec.components[label];
        let sd = c.variance.sqrt();
        let p = c.mean.iter().map(|&m| m + sd * rng.sample::<f64, _>(StandardNormal)).collect();
        out.points.push(p);
        out.labels.push(label);
    }
    Ok(out)
}

/// Rejected steps are retried this many times before the walker idles a tick.
pub const MAX_STEP_TRIES: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct WalkSpec {
    pub seed_point: Point2,
    /// Number of walkers.
    pub n: usize,
    /// Number of ticks.
    pub t: usize,
    /// Step length on ordinary ground. Inside the slow part of a region split
    /// the step shrinks by the slow factor.
    pub step: f64,
    pub env: Environment,
    pub seed: u64,
}

impl WalkSpec {
    /// Walk with the default step, 5% of the shorter side of the bounding box.
    pub fn new(env: Environment, seed_point: Point2, n: usize, t: usize, seed: u64) -> Self {
        let e = env.bbox.extent();
        WalkSpec { seed_point, n, t, step: 0.05 * e[0].min(e[1]), env, seed }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }
}

/// Final positions of `n` independent walkers, each taking `t` axis-aligned
/// steps from the seed point. Walker `i` draws from its own random stream, so
/// the output does not depend on thread scheduling.
pub fn random_walk(spec: &WalkSpec) -> Result<Vec<Point2>> {
    if !spec.env.bbox.contains(spec.seed_point) {
        return Err(Error::invalid(format!(
            "walk seed ({}, {}) lies outside the bounding box",
            spec.seed_point[0], spec.seed_point[1]
        )));
    }
    if spec.env.on_barrier(spec.seed_point) {
        return Err(Error::invalid("walk seed lies on a barrier"));
    }
    if !(spec.step > 0.0 && spec.step.is_finite()) {
        return Err(Error::invalid(format!("step must be positive, got {}", spec.step)));
    }
    if spec.n == 0 {
        return Err(Error::invalid("a walk needs at least one walker"));
    }
    Ok((0..spec.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64);
            walk_one(spec, &mut rng)
        })
        .collect())
}

fn walk_one(spec: &WalkSpec, rng: &mut ChaCha8Rng) -> Point2 {
    const DIRS: [Point2; 4] = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
    let mut p = spec.seed_point;
    for _ in 0..spec.t {
        let len = match spec.env.region {
            Some(r) if r.is_slow(p) => spec.step / r.slow_factor,
            _ => spec.step,
        };
        for _ in 0..MAX_STEP_TRIES {
            let d = DIRS[rng.random_range(0..4)];
            let q = [p[0] + len * d[0], p[1] + len * d[1]];
            if spec.env.bbox.contains(q) && !spec.env.blocks(p, q) {
                p = q;
                break;
            }
        }
    }
    p
}

/// Geometry of the mouse-like set: a head disc, two ear discs and one
/// barrier per ear across the head-ear neck.
#[derive(Clone, Debug, PartialEq)]
pub struct MouseSpec {
    pub n_head: usize,
    /// Points per ear.
    pub n_ear: usize,
    pub seed: u64,
    pub head_radius: f64,
    /// Centre of the right ear; the left ear is its mirror image.
    pub ear_center: Point2,
    pub ear_radius: f64,
    /// Width of the gap the barrier leaves in the neck, on its outer side.
    pub opening: f64,
    /// How far the barrier extends past the neck on its inner side.
    pub overhang: f64,
}

impl MouseSpec {
    pub fn new(n_head: usize, n_ear: usize, seed: u64) -> Self {
        MouseSpec {
            n_head,
            n_ear,
            seed,
            head_radius: 1.0,
            ear_center: [0.9, 0.9],
            ear_radius: 0.35,
            opening: 0.2,
            overhang: 0.3,
        }
    }

    fn ears(&self) -> [Point2; 2] {
        let [x, y] = self.ear_center;
        [[-x, y], [x, y]]
    }

    /// Barrier on the line through the two circles' intersection points.
    fn barrier(&self, ear: Point2) -> Result<Segment> {
        let d = dist([0.0, 0.0], ear);
        let (r0, r1) = (self.head_radius, self.ear_radius);
        if !(d < r0 + r1 && d > (r0 - r1).abs()) {
            return Err(Error::invalid("the ear disc must overlap the head disc's boundary"));
        }
        let a = (d * d + r0 * r0 - r1 * r1) / (2.0 * d);
        let half = (r0 * r0 - a * a).sqrt();
        if self.opening >= 2.0 * half {
            return Err(Error::invalid(format!("opening {} is wider than the neck {}", self.opening, 2.0 * half)));
        }
        let u = [ear[0] / d, ear[1] / d];
        // v points towards the head's midline
        let mut v = [-u[1], u[0]];
        if v[0] * ear[0] > 0.0 {
            v = [-v[0], -v[1]];
        }
        let at = |t: f64| [a * u[0] + t * v[0], a * u[1] + t * v[1]];
        Segment::new(at(-half + self.opening), at(half + self.overhang))
    }

    pub fn environment(&self) -> Result<Environment> {
        let [ex, ey] = self.ear_center;
        let r = self.ear_radius;
        let reach_x = (ex.abs() + r).max(self.head_radius) + 0.25;
        let bbox =
            BoundingBox::new([-reach_x, -self.head_radius - 0.25], [reach_x, (ey + r).max(self.head_radius) + 0.25])?;
        let mut env = Environment::new(bbox);
        for ear in self.ears() {
            env = env.with_barrier(self.barrier(ear)?);
        }
        Ok(env)
    }
}

/// Uniform samples from the head (label 0) and both ears (labels 1 and 2),
/// with the barrier environment. Points that would land on a barrier are
/// redrawn.
pub fn mouse_dataset(spec: &MouseSpec) -> Result<(LabeledPoints, Environment)> {
    if spec.n_head == 0 || spec.n_ear == 0 {
        return Err(Error::invalid("the mouse set needs at least one head and one ear point"));
    }
    if !(spec.head_radius > 0.0 && spec.ear_radius > 0.0) {
        return Err(Error::invalid("disc radii must be positive"));
    }
    let env = spec.environment()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = LabeledPoints::default();
    let [left, right] = spec.ears();
    for (label, center, radius, count) in [
        (0, [0.0, 0.0], spec.head_radius, spec.n_head),
        (1, left, spec.ear_radius, spec.n_ear),
        (2, right, spec.ear_radius, spec.n_ear),
    ] {
        let pts: Vec<Vec<f64>> = (0..count)
            .map(|_| loop {
                let p = uniform_in_disc(&mut rng, center, radius);
                if !env.on_barrier(p) {
                    break vec![p[0], p[1]];
                }
            })
            .collect();
        out.extend(pts, label);
    }
    Ok((out, env))
}

fn uniform_in_disc(rng: &mut ChaCha8Rng, center: Point2, radius: f64) -> Point2 {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    [center[0] + r * theta.cos(), center[1] + r * theta.sin()]
}

/// Two walker populations on either side of a slow/fast border.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoRegionSpec {
    pub slow_seed: Point2,
    pub fast_seed: Point2,
    pub n_slow: usize,
    pub n_fast: usize,
    pub t: usize,
    pub step: f64,
    pub env: Environment,
    pub seed: u64,
}

impl TwoRegionSpec {
    /// Box `[-4, 4] x [-3, 3]` split at `x = 0` with slow factor `s`. 600
    /// walkers start just inside the slow side and 300 on the fast side;
    /// after 2500 ticks of length 0.02 the two clouds overlap near the border.
    pub fn new(s: f64, seed: u64) -> Result<Self> {
        let env = Environment::new(BoundingBox::new([-4.0, -3.0], [4.0, 3.0])?).with_region(RegionSplit::new(0.0, s)?);
        Ok(TwoRegionSpec {
            slow_seed: [-0.3, 0.0],
            fast_seed: [0.9, 0.0],
            n_slow: 600,
            n_fast: 300,
            t: 2500,
            step: 0.02,
            env,
            seed,
        })
    }
}

/// Walkers of the slow population get label 0, the fast one label 1.
pub fn two_region_populations(spec: &TwoRegionSpec) -> Result<LabeledPoints> {
    let walk = |seed_point, n, seed| {
        random_walk(&WalkSpec { seed_point, n, t: spec.t, step: spec.step, env: spec.env.clone(), seed })
    };
    let mut out = LabeledPoints::default();
    let slow = walk(spec.slow_seed, spec.n_slow, spec.seed.wrapping_mul(2))?;
    let fast = walk(spec.fast_seed, spec.n_fast, spec.seed.wrapping_mul(2).wrapping_add(1))?;
    out.extend(slow.into_iter().map(|p| p.to_vec()), 0);
    out.extend(fast.into_iter().map(|p| p.to_vec()), 1);
    Ok(out)
}

/// Share of all points held by the cluster that contains the most points of
/// true class 0.
pub fn class0_cluster_ratio(truth: &[usize], clusters: &[usize]) -> Result<f64> {
    if truth.len() != clusters.len() {
        return Err(Error::DimensionMismatch { left: truth.len(), right: clusters.len() });
    }
    if truth.is_empty() {
        return Err(Error::invalid("no points"));
    }
    let k = clusters.iter().max().map_or(0, |m| m + 1);
    let mut from_class0 = vec![0usize; k];
    let mut sizes = vec![0usize; k];
    for (&t, &c) in truth.iter().zip(clusters) {
        sizes[c] += 1;
        if t == 0 {
            from_class0[c] += 1;
        }
    }
    let best = (0..k).max_by_key(|&c| (from_class0[c], std::cmp::Reverse(c))).unwrap_or(0);
    Ok(sizes[best] as f64 / truth.len() as f64)
}
