//! Planar primitives and the [`Environment`] scene used by the geodesic
//! measures and the random-walk generator.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Point2 = [f64; 2];

pub(crate) fn sub(a: Point2, b: Point2) -> Point2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn norm(v: Point2) -> f64 {
    v[0].hypot(v[1])
}

pub(crate) fn dist(a: Point2, b: Point2) -> f64 {
    norm(sub(a, b))
}

fn cross(u: Point2, v: Point2) -> f64 {
    u[0] * v[1] - u[1] * v[0]
}

/// Sign of the turn a -> b -> c, with near-collinear triples reported as 0.
pub(crate) fn orientation(a: Point2, b: Point2, c: Point2) -> i8 {
    let u = sub(b, a);
    let v = sub(c, a);
    let o = cross(u, v);
    let tol = 1e-12 * norm(u) * norm(v);
    if o > tol {
        1
    } else if o < -tol {
        -1
    } else {
        0
    }
}

/// `p` is collinear with `a`-`b` and lies strictly between them.
pub(crate) fn strictly_between(a: Point2, b: Point2, p: Point2) -> bool {
    if orientation(a, b, p) != 0 {
        return false;
    }
    let ab = sub(b, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    if len2 == 0.0 {
        return false;
    }
    let t = (sub(p, a)[0] * ab[0] + sub(p, a)[1] * ab[1]) / len2;
    let eps = 1e-12;
    t > eps && t < 1.0 - eps
}

pub(crate) fn same_point(a: Point2, b: Point2) -> bool {
    let scale = 1.0 + a[0].abs().max(a[1].abs());
    (a[0] - b[0]).abs() <= 1e-12 * scale && (a[1] - b[1]).abs() <= 1e-12 * scale
}

/// A barrier: a line segment of positive length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

impl Segment {
    pub fn new(a: Point2, b: Point2) -> Result<Self> {
        if !(a.iter().chain(b.iter()).all(|v| v.is_finite())) {
            return Err(Error::invalid("barrier endpoints must be finite"));
        }
        if dist(a, b) <= 0.0 {
            return Err(Error::invalid(format!(
                "barrier segment ({}, {})-({}, {}) has zero length",
                a[0], a[1], b[0], b[1]
            )));
        }
        Ok(Segment { a, b })
    }

    pub fn length(&self) -> f64 {
        dist(self.a, self.b)
    }

    /// The open segments `p`-`q` and `self` cross transversally at a single
    /// interior point of both.
    pub fn crossed_by(&self, p: Point2, q: Point2) -> bool {
        let o1 = orientation(p, q, self.a);
        let o2 = orientation(p, q, self.b);
        let o3 = orientation(self.a, self.b, p);
        let o4 = orientation(self.a, self.b, q);
        o1 * o2 < 0 && o3 * o4 < 0
    }

    /// The closed segments `p`-`q` and `self` share at least one point.
    pub fn touched_by(&self, p: Point2, q: Point2) -> bool {
        let o1 = orientation(p, q, self.a);
        let o2 = orientation(p, q, self.b);
        let o3 = orientation(self.a, self.b, p);
        let o4 = orientation(self.a, self.b, q);
        if o1 * o2 < 0 && o3 * o4 < 0 {
            return true;
        }
        let on = |a: Point2, b: Point2, c: Point2, o: i8| {
            o == 0
                && c[0] >= a[0].min(b[0]) - 1e-12
                && c[0] <= a[0].max(b[0]) + 1e-12
                && c[1] >= a[1].min(b[1]) - 1e-12
                && c[1] <= a[1].max(b[1]) + 1e-12
        };
        on(p, q, self.a, o1) || on(p, q, self.b, o2) || on(self.a, self.b, p, o3) || on(self.a, self.b, q, o4)
    }

    /// `p` lies on the closed segment.
    pub fn contains(&self, p: Point2) -> bool {
        same_point(p, self.a) || same_point(p, self.b) || strictly_between(self.a, self.b, p)
    }
}

/// Axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingBox {
    pub min: Point2,
    pub max: Point2,
}

impl BoundingBox {
    pub fn new(min: Point2, max: Point2) -> Result<Self> {
        if !(min.iter().chain(max.iter()).all(|v| v.is_finite())) {
            return Err(Error::invalid("bounding box corners must be finite"));
        }
        if !(min[0] < max[0] && min[1] < max[1]) {
            return Err(Error::invalid(format!(
                "bounding box [{}, {}, {}, {}] is empty",
                min[0], min[1], max[0], max[1]
            )));
        }
        Ok(BoundingBox { min, max })
    }

    /// Smallest box holding all points, padded by `margin` on every side.
    pub fn around(points: &[Vec<f64>], margin: f64) -> Result<Self> {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in points {
            if p.len() != 2 {
                return Err(Error::DimensionMismatch { left: p.len(), right: 2 });
            }
            for k in 0..2 {
                min[k] = min[k].min(p[k]);
                max[k] = max[k].max(p[k]);
            }
        }
        if points.is_empty() {
            return Err(Error::invalid("cannot bound an empty point set"));
        }
        let pad = |lo: f64, hi: f64| {
            let m = margin.max(1e-9 * (1.0 + lo.abs().max(hi.abs())));
            (lo - m, hi + m)
        };
        let (x0, x1) = pad(min[0], max[0]);
        let (y0, y1) = pad(min[1], max[1]);
        BoundingBox::new([x0, y0], [x1, y1])
    }

    pub fn contains(&self, p: Point2) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    pub fn extent(&self) -> Point2 {
        sub(self.max, self.min)
    }
}

/// A vertical border at `border_x`. Points with abscissa strictly below the
/// border are on the slow side; points on the border belong to the fast side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionSplit {
    pub border_x: f64,
    pub slow_factor: f64,
}

impl RegionSplit {
    pub const DEFAULT_SLOW_FACTOR: f64 = 5.0;

    pub fn new(border_x: f64, slow_factor: f64) -> Result<Self> {
        if !border_x.is_finite() {
            return Err(Error::invalid("region border must be finite"));
        }
        if !(slow_factor >= 1.0 && slow_factor.is_finite()) {
            return Err(Error::invalid(format!("slow factor must be a finite number >= 1, got {slow_factor}")));
        }
        Ok(RegionSplit { border_x, slow_factor })
    }

    pub fn is_slow(&self, p: Point2) -> bool {
        p[0] < self.border_x
    }
}

/// A planar scene inducing a non-Euclidean metric: line-segment barriers,
/// an optional slow/fast region split, and the bounding box all points live in.
#[derive(Clone, Debug, PartialEq)]
pub struct Environment {
    pub barriers: Vec<Segment>,
    pub region: Option<RegionSplit>,
    pub bbox: BoundingBox,
}

#[derive(Serialize, Deserialize)]
struct EnvironmentFile {
    #[serde(default)]
    barriers: Vec<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    border_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slow_factor: Option<f64>,
    bbox: [f64; 4],
}

impl Environment {
    pub fn new(bbox: BoundingBox) -> Self {
        Environment { barriers: Vec::new(), region: None, bbox }
    }

    pub fn with_barrier(mut self, segment: Segment) -> Self {
        self.barriers.push(segment);
        self
    }

    pub fn with_region(mut self, region: RegionSplit) -> Self {
        self.region = Some(region);
        self
    }

    pub fn total_barrier_length(&self) -> f64 {
        self.barriers.iter().map(Segment::length).sum()
    }

    /// The closed segment `p`-`q` touches some barrier.
    pub fn blocks(&self, p: Point2, q: Point2) -> bool {
        self.barriers.iter().any(|s| s.touched_by(p, q))
    }

    pub fn on_barrier(&self, p: Point2) -> bool {
        self.barriers.iter().any(|s| s.contains(p))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: EnvironmentFile = serde_json::from_str(text)?;
        let [x0, y0, x1, y1] = file.bbox;
        let bbox = BoundingBox::new([x0, y0], [x1, y1])?;
        let barriers = file
            .barriers
            .iter()
            .map(|&[ax, ay, bx, by]| Segment::new([ax, ay], [bx, by]))
            .collect::<Result<Vec<_>>>()?;
        let region = match (file.border_x, file.slow_factor) {
            (Some(b), s) => Some(RegionSplit::new(b, s.unwrap_or(RegionSplit::DEFAULT_SLOW_FACTOR))?),
            (None, Some(_)) => {
                return Err(Error::invalid("slow_factor given without border_x"));
            }
            (None, None) => None,
        };
        Ok(Environment { barriers, region, bbox })
    }

    pub fn to_json_string(&self) -> String {
        let file = EnvironmentFile {
            barriers: self.barriers.iter().map(|s| [s.a[0], s.a[1], s.b[0], s.b[1]]).collect(),
            border_x: self.region.map(|r| r.border_x),
            slow_factor: self.region.map(|r| r.slow_factor),
            bbox: [self.bbox.min[0], self.bbox.min[1], self.bbox.max[0], self.bbox.max[1]],
        };
        serde_json::to_string_pretty(&file).expect("environment serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }
}

pub(crate) fn as_point2(p: &[f64]) -> Result<Point2> {
    match p {
        [x, y] => Ok([*x, *y]),
        _ => Err(Error::DimensionMismatch { left: p.len(), right: 2 }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> BoundingBox {
        BoundingBox::new([-2.0, -2.0], [2.0, 2.0]).unwrap()
    }

    #[test]
    fn proper_crossing_ignores_endpoint_contact() {
        let s = Segment::new([0.0, -1.0], [0.0, 1.0]).unwrap();
        assert!(s.crossed_by([-1.0, 0.0], [1.0, 0.0]));
        assert!(!s.crossed_by([-1.0, 1.0], [1.0, 1.0]));
        assert!(!s.crossed_by([-1.0, 0.0], [0.0, 1.0]));
        assert!(s.touched_by([-1.0, 1.0], [1.0, 1.0]));
        assert!(!s.touched_by([-1.0, 2.0], [1.0, 2.0]));
    }

    #[test]
    fn zero_length_barrier_rejected() {
        assert!(Segment::new([1.0, 1.0], [1.0, 1.0]).is_err());
    }

    #[test]
    fn environment_json_round_trip() {
        let env = Environment::new(unit_box())
            .with_barrier(Segment::new([0.0, -1.0], [0.0, 1.0]).unwrap())
            .with_region(RegionSplit::new(0.5, 5.0).unwrap());
        let back = Environment::from_json_str(&env.to_json_string()).unwrap();
        assert_eq!(env, back);
    }

    #[test]
    fn environment_json_defaults() {
        let env = Environment::from_json_str(r#"{"bbox":[0,0,1,1],"border_x":0.5}"#).unwrap();
        assert!(env.barriers.is_empty());
        assert_eq!(env.region.unwrap().slow_factor, 5.0);
        assert!(Environment::from_json_str(r#"{"bbox":[0,0,1,1],"slow_factor":2}"#).is_err());
        assert!(Environment::from_json_str(r#"{"bbox":[0,0,1,1],"border_x":0,"slow_factor":0.5}"#).is_err());
        assert!(Environment::from_json_str(r#"{"bbox":[1,0,0,1]}"#).is_err());
    }

    #[test]
    fn border_points_are_fast() {
        let r = RegionSplit::new(0.0, 5.0).unwrap();
        assert!(r.is_slow([-1e-9, 0.0]));
        assert!(!r.is_slow([0.0, 3.0]));
    }
}
