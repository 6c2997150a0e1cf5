//! Shortest paths around line-segment barriers.
//!
//! Barriers are open segments: a path may touch a barrier endpoint but never
//! cross a barrier transversally. Where several barriers meet at a point
//! (a corner, or an endpoint resting on another barrier), the directions
//! around that point are split into sectors by the barrier rays, and a path
//! through the point must enter and leave within one sector. This keeps
//! closed enclosures closed.
//!
//! Shortest paths bend only at barrier endpoints, so distances between
//! endpoint sectors are computed once with Dijkstra on the visibility graph
//! and each query only needs the endpoints visible from its two ends.

use std::f64::consts::PI;

use super::geometry::{dist, same_point, strictly_between, sub, Environment, Point2, Segment};
use crate::{Error, Result};

#[derive(Clone, Debug)]
struct Vertex {
    p: Point2,
    /// Sorted angles of the barrier rays leaving this point.
    rays: Vec<f64>,
    first_node: usize,
}

impl Vertex {
    fn sectors(&self) -> usize {
        self.rays.len().max(1)
    }

    /// Sector holding direction `dir`, or `None` when `dir` runs along a
    /// barrier ray at a junction.
    fn sector(&self, dir: Point2) -> Option<usize> {
        if self.rays.len() <= 1 {
            return Some(0);
        }
        let phi = dir[1].atan2(dir[0]);
        let tol = 1e-12;
        for &theta in &self.rays {
            let mut diff = (phi - theta).abs();
            if diff > PI {
                diff = 2.0 * PI - diff;
            }
            if diff <= tol {
                return None;
            }
        }
        let below = self.rays.iter().filter(|&&t| t < phi).count();
        Some(if below == 0 { self.rays.len() - 1 } else { below - 1 })
    }
}

/// Precomputed geodesic distance for one barrier configuration.
#[derive(Clone, Debug)]
pub struct BarrierGeodesic {
    env: Environment,
    vertices: Vec<Vertex>,
    n_nodes: usize,
    /// All-pairs shortest distances between (vertex, sector) nodes.
    node_dist: Vec<f64>,
}

/// Nodes visible from a query point, with the straight-line distance to each.
pub type Anchors = Vec<(usize, f64)>;

impl BarrierGeodesic {
    pub fn new(env: Environment) -> Self {
        let mut vertices: Vec<Vertex> = Vec::new();
        for s in &env.barriers {
            for p in [s.a, s.b] {
                if !vertices.iter().any(|v| same_point(v.p, p)) {
                    vertices.push(Vertex { p, rays: Vec::new(), first_node: 0 });
                }
            }
        }
        for v in &mut vertices {
            let mut rays = Vec::new();
            let mut push = |d: Point2| rays.push(d[1].atan2(d[0]));
            for s in &env.barriers {
                if same_point(s.a, v.p) {
                    push(sub(s.b, s.a));
                } else if same_point(s.b, v.p) {
                    push(sub(s.a, s.b));
                } else if strictly_between(s.a, s.b, v.p) {
                    push(sub(s.a, v.p));
                    push(sub(s.b, v.p));
                }
            }
            rays.sort_by(f64::total_cmp);
            rays.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
            v.rays = rays;
        }
        let mut n_nodes = 0;
        for v in &mut vertices {
            v.first_node = n_nodes;
            n_nodes += v.sectors();
        }

        let mut geo = BarrierGeodesic { env, vertices, n_nodes, node_dist: Vec::new() };

        let mut adjacency = vec![f64::INFINITY; n_nodes * n_nodes];
        for u in 0..geo.vertices.len() {
            for w in (u + 1)..geo.vertices.len() {
                let (pu, pw) = (geo.vertices[u].p, geo.vertices[w].p);
                if !geo.visible(pu, pw) {
                    continue;
                }
                let su = geo.vertices[u].sector(sub(pw, pu));
                let sw = geo.vertices[w].sector(sub(pu, pw));
                if let (Some(su), Some(sw)) = (su, sw) {
                    let a = geo.vertices[u].first_node + su;
                    let b = geo.vertices[w].first_node + sw;
                    let d = dist(pu, pw);
                    adjacency[a * n_nodes + b] = adjacency[a * n_nodes + b].min(d);
                    adjacency[b * n_nodes + a] = adjacency[b * n_nodes + a].min(d);
                }
            }
        }
        geo.node_dist = (0..n_nodes).flat_map(|src| dijkstra_dense(&adjacency, n_nodes, src)).collect();
        geo
    }

    pub fn environment(&self) -> &Environment {
        &self.env
    }

    /// The straight segment `a`-`b` is a legal path piece.
    pub fn visible(&self, a: Point2, b: Point2) -> bool {
        if self.env.barriers.iter().any(|s: &Segment| s.crossed_by(a, b)) {
            return false;
        }
        for v in &self.vertices {
            if v.rays.len() >= 2 && strictly_between(a, b, v.p) {
                let (sa, sb) = (v.sector(sub(a, v.p)), v.sector(sub(b, v.p)));
                match (sa, sb) {
                    (Some(x), Some(y)) if x == y => {}
                    _ => return false,
                }
            }
        }
        true
    }

    pub fn anchors(&self, x: Point2) -> Anchors {
        self.vertices
            .iter()
            .filter(|v| !same_point(v.p, x) && self.visible(x, v.p))
            .filter_map(|v| v.sector(sub(x, v.p)).map(|s| (v.first_node + s, dist(x, v.p))))
            .collect()
    }

    /// Geodesic distance given precomputed anchors of both ends; `None` when
    /// no barrier-avoiding path exists.
    pub fn distance_with(&self, x: Point2, ax: &Anchors, y: Point2, ay: &Anchors) -> Option<f64> {
        if same_point(x, y) {
            return Some(0.0);
        }
        if self.visible(x, y) {
            return Some(dist(x, y));
        }
        let mut best = f64::INFINITY;
        for &(u, du) in ax {
            let row = &self.node_dist[u * self.n_nodes..(u + 1) * self.n_nodes];
            for &(w, dw) in ay {
                best = best.min(du + row[w] + dw);
            }
        }
        best.is_finite().then_some(best)
    }

    pub fn distance(&self, x: Point2, y: Point2) -> Option<f64> {
        self.distance_with(x, &self.anchors(x), y, &self.anchors(y))
    }
}

fn dijkstra_dense(adjacency: &[f64], n: usize, src: usize) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    d[src] = 0.0;
    for _ in 0..n {
        let mut u = usize::MAX;
        let mut best = f64::INFINITY;
        for (i, &di) in d.iter().enumerate() {
            if !done[i] && di < best {
                best = di;
                u = i;
            }
        }
        if u == usize::MAX {
            break;
        }
        done[u] = true;
        for w in 0..n {
            let c = adjacency[u * n + w];
            if c.is_finite() && d[u] + c < d[w] {
                d[w] = d[u] + c;
            }
        }
    }
    d
}

/// Length of the shortest path from `x` to `y` that does not cross any
/// barrier of `env`.
pub fn barrier_d(x: &[f64], y: &[f64], env: &Environment) -> Result<f64> {
    let geo = BarrierGeodesic::new(env.clone());
    checked_distance(&geo, x, y)
}

pub(crate) fn checked_distance(geo: &BarrierGeodesic, x: &[f64], y: &[f64]) -> Result<f64> {
    let x = super::geometry::as_point2(x)?;
    let y = super::geometry::as_point2(y)?;
    let env = geo.environment();
    for p in [x, y] {
        if !env.bbox.contains(p) {
            return Err(Error::invalid(format!("point ({}, {}) lies outside the bounding box", p[0], p[1])));
        }
        if env.on_barrier(p) {
            return Err(Error::invalid(format!("point ({}, {}) lies on a barrier", p[0], p[1])));
        }
    }
    geo.distance(x, y).ok_or(Error::Unreachable { from_x: x[0], from_y: x[1], to_x: y[0], to_y: y[1] })
}
