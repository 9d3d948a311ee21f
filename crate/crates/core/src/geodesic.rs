//! Exact shortest paths in the plane minus a union of disks.
//!
//! Shortest paths are made of tangent segments and boundary arcs, so a finite
//! graph carries them exactly: its nodes are the query points, the endpoints of
//! all common tangents, the tangent points seen from each query point, the
//! extreme points `c ± (0,R)` where a path can leave a circle horizontally, and
//! circle-circle intersection points (used only to cut covered arcs).

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use crate::error::{LabError, Result};
use crate::geometry::{circle_intersections, two_hole_disks, Disk};
use crate::Point;

/// Slack for "touches but does not enter" tests on tangent constructions.
const TOUCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeKind {
    Segment,
    Arc { circle: usize, span: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityGraph {
    pub disks: Vec<Disk>,
    pub nodes: Vec<Point>,
    pub edges: Vec<Edge>,
    /// Per circle: `(angle, node)` for nodes on that circle, sorted by angle.
    rings: Vec<Vec<(f64, usize)>>,
}

fn angle_of(d: &Disk, p: &Point) -> f64 {
    let a = (p.y - d.center.y).atan2(p.x - d.center.x);
    if a < 0.0 { a + TAU } else { a }
}

fn inside_any(disks: &[Disk], p: &Point, tol: f64) -> bool {
    disks.iter().any(|d| d.depth(p) > tol)
}

/// Whether the segment `a–b` stays out of every open disk.
pub fn segment_clear(disks: &[Disk], a: &Point, b: &Point) -> bool {
    let ab = b - a;
    let len2 = ab.norm_squared();
    disks.iter().all(|d| {
        let t = if len2 > 0.0 { ((d.center - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
        (a + t * ab - d.center).norm() >= d.radius - TOUCH_TOL
    })
}

/// Whether the arc of `disks[i]` from angle `from` counter-clockwise by `span` avoids the other disks.
fn arc_clear(disks: &[Disk], i: usize, from: f64, span: f64) -> bool {
    const SAMPLES: usize = 8;
    (0..SAMPLES).all(|k| {
        let p = disks[i].point_at(from + span * (k as f64 + 0.5) / SAMPLES as f64);
        disks.iter().enumerate().all(|(j, d)| j == i || d.depth(&p) <= 1e-12)
    })
}

/// Tangent points on `d` seen from an exterior point `q`.
pub fn point_tangents(q: &Point, d: &Disk) -> Option<[Point; 2]> {
    let w = q - d.center;
    let dist = w.norm();
    if dist <= d.radius {
        return None;
    }
    let phi = w.y.atan2(w.x);
    let beta = (d.radius / dist).acos();
    Some([d.point_at(phi + beta), d.point_at(phi - beta)])
}

/// Common tangent segments between two circles: outer ones first, then inner ones
/// (absent when the disks overlap). Each entry is `(point on a, point on b)`.
pub fn common_tangents(a: &Disk, b: &Disk) -> Vec<(Point, Point)> {
    let d = b.center - a.center;
    let dist = d.norm();
    let mut out = Vec::new();
    if dist < 1e-12 {
        return out;
    }
    let u = d / dist;
    let perp = nalgebra::Vector2::new(-u.y, u.x);
    for side in [1.0, -1.0] {
        let k = (a.radius - side * b.radius) / dist;
        if k.abs() > 1.0 {
            continue;
        }
        let s = (1.0 - k * k).sqrt();
        for sign in [1.0, -1.0] {
            let n = k * u + sign * s * perp;
            out.push((a.center + a.radius * n, b.center + side * b.radius * n));
        }
    }
    out
}

/// Whether the horizontal ray from `q` towards `x1 = −∞` misses every open disk.
fn leftward_ray_clear(disks: &[Disk], q: &Point) -> bool {
    disks.iter().all(|d| {
        let dy = q.y - d.center.y;
        if dy.abs() >= d.radius - TOUCH_TOL {
            return true;
        }
        let w = (d.radius * d.radius - dy * dy).sqrt();
        d.center.x - w >= q.x - TOUCH_TOL
    })
}

#[derive(Clone, Copy, PartialEq)]
struct Label(f64, usize);

impl Eq for Label {}

impl Ord for Label {
    // min-heap on distance, then node index
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn check_feasible(disks: &[Disk], p: &Point) -> Result<()> {
    if inside_any(disks, p, 1e-10) {
        Err(LabError::Infeasible { x: p.x, y: p.y })
    } else {
        Ok(())
    }
}

impl VisibilityGraph {
    /// Build the graph; the query points become nodes `0..queries.len()`.
    pub fn new(disks: &[Disk], queries: &[Point]) -> Result<Self> {
        for q in queries {
            check_feasible(disks, q)?;
        }
        let mut g = VisibilityGraph {
            disks: disks.to_vec(),
            nodes: Vec::new(),
            edges: Vec::new(),
            rings: vec![Vec::new(); disks.len()],
        };
        for q in queries {
            g.add_node(*q, true);
        }
        for (i, a) in queries.iter().enumerate() {
            for (j, b) in queries.iter().enumerate().skip(i + 1) {
                g.add_segment(i, j, a, b);
            }
            for d in disks {
                if let Some(tangents) = point_tangents(a, d) {
                    for t in tangents {
                        if let Some(k) = g.add_node(t, false) {
                            g.add_segment(i, k, a, &t);
                        }
                    }
                }
            }
        }
        for (i, a) in disks.iter().enumerate() {
            for b in &disks[i + 1..] {
                for (pa, pb) in common_tangents(a, b) {
                    if let (Some(ka), Some(kb)) = (g.add_node(pa, false), g.add_node(pb, false)) {
                        g.add_segment(ka, kb, &pa, &pb);
                    }
                }
                for p in circle_intersections(a, b) {
                    g.add_node(p, false);
                }
            }
            g.add_node(a.center + nalgebra::Vector2::new(0.0, a.radius), false);
            g.add_node(a.center - nalgebra::Vector2::new(0.0, a.radius), false);
        }
        g.add_arcs();
        Ok(g)
    }

    fn add_node(&mut self, p: Point, force: bool) -> Option<usize> {
        if !force && inside_any(&self.disks, &p, TOUCH_TOL) {
            return None;
        }
        let k = self.nodes.len();
        self.nodes.push(p);
        for (i, d) in self.disks.iter().enumerate() {
            if ((p - d.center).norm() - d.radius).abs() <= TOUCH_TOL {
                self.rings[i].push((angle_of(d, &p), k));
            }
        }
        Some(k)
    }

    fn add_segment(&mut self, a: usize, b: usize, pa: &Point, pb: &Point) {
        if segment_clear(&self.disks, pa, pb) {
            self.edges.push(Edge { a, b, length: (pb - pa).norm(), kind: EdgeKind::Segment });
        }
    }

    fn add_arcs(&mut self) {
        for i in 0..self.disks.len() {
            let ring = &mut self.rings[i];
            ring.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            let n = ring.len();
            if n < 2 {
                continue;
            }
            for k in 0..n {
                let (a0, na) = ring[k];
                let (a1, nb) = ring[(k + 1) % n];
                let span = if k + 1 == n { a1 + TAU - a0 } else { a1 - a0 };
                if arc_clear(&self.disks, i, a0, span) {
                    self.edges.push(Edge {
                        a: na,
                        b: nb,
                        length: self.disks[i].radius * span,
                        kind: EdgeKind::Arc { circle: i, span },
                    });
                }
            }
        }
    }

    fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            adj[e.a].push((e.b, e.length));
            adj[e.b].push((e.a, e.length));
        }
        adj
    }

    /// Multi-source shortest paths from the given initial labels.
    pub fn shortest_from(&self, initial: &[f64]) -> Vec<f64> {
        let adj = self.adjacency();
        let mut dist = initial.to_vec();
        let mut heap: BinaryHeap<Label> =
            dist.iter().enumerate().filter(|(_, d)| d.is_finite()).map(|(i, d)| Label(*d, i)).collect();
        while let Some(Label(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, w) in &adj[u] {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Label(nd, v));
                }
            }
        }
        dist
    }
}

/// Length of the shortest path from `a` to `b` avoiding the open disks.
pub fn geodesic_distance(disks: &[Disk], a: Point, b: Point) -> Result<f64> {
    let g = VisibilityGraph::new(disks, &[a, b])?;
    let mut init = vec![f64::INFINITY; g.nodes.len()];
    init[0] = 0.0;
    Ok(g.shortest_from(&init)[1])
}

/// The leftward potential `ℓ` of a fixed set of disks, with the query-independent
/// part of the graph solved once.
///
/// `ℓ(x)` is the infimum over obstacle-avoiding paths from `x` to a point `y`
/// of `length + y₁`; for obstacles to the right of `x₁ = 0` it is the distance
/// to that line.
#[derive(Debug, Clone)]
pub struct LeftwardField {
    graph: VisibilityGraph,
    potential: Vec<f64>,
}

impl LeftwardField {
    pub fn new(disks: &[Disk]) -> Result<Self> {
        let graph = VisibilityGraph::new(disks, &[])?;
        let init: Vec<f64> = graph
            .nodes
            .iter()
            .map(|q| if leftward_ray_clear(disks, q) { q.x } else { f64::INFINITY })
            .collect();
        let potential = graph.shortest_from(&init);
        Ok(Self { graph, potential })
    }

    pub fn disks(&self) -> &[Disk] {
        &self.graph.disks
    }

    /// Best continuation from a point at `angle` on circle `i`, moving along uncovered arcs.
    fn potential_on_circle(&self, i: usize, angle: f64) -> f64 {
        let ring = &self.graph.rings[i];
        let disks = &self.graph.disks;
        let r = disks[i].radius;
        let mut best = f64::INFINITY;
        if ring.is_empty() {
            return best;
        }
        let next = ring.partition_point(|(a, _)| *a < angle);
        let (a_next, n_next) = ring[next % ring.len()];
        let span = if next == ring.len() { a_next + TAU - angle } else { a_next - angle };
        if arc_clear(disks, i, angle, span) {
            best = best.min(r * span + self.potential[n_next]);
        }
        let prev = if next == 0 { ring.len() - 1 } else { next - 1 };
        let (a_prev, n_prev) = ring[prev];
        let span = if next == 0 { angle + TAU - a_prev } else { angle - a_prev };
        if arc_clear(disks, i, a_prev, span) {
            best = best.min(r * span + self.potential[n_prev]);
        }
        best
    }

    pub fn eval(&self, x: &Point) -> Result<f64> {
        let disks = &self.graph.disks;
        check_feasible(disks, x)?;
        let mut best = if leftward_ray_clear(disks, x) { x.x } else { f64::INFINITY };
        for (i, d) in disks.iter().enumerate() {
            if ((x - d.center).norm() - d.radius).abs() <= TOUCH_TOL {
                best = best.min(self.potential_on_circle(i, angle_of(d, x)));
                continue;
            }
            let Some(tangents) = point_tangents(x, d) else { continue };
            for t in tangents {
                if inside_any(disks, &t, TOUCH_TOL) || !segment_clear(disks, x, &t) {
                    continue;
                }
                let leg = (t - x).norm();
                let mut tail = self.potential_on_circle(i, angle_of(d, &t));
                if leftward_ray_clear(disks, &t) {
                    tail = tail.min(t.x);
                }
                best = best.min(leg + tail);
            }
        }
        Ok(best)
    }
}

/// `ℓ(x)` for the given disks; see [`LeftwardField`] for repeated queries.
pub fn leftward_potential(disks: &[Disk], x: Point) -> Result<f64> {
    LeftwardField::new(disks)?.eval(&x)
}

/// Region of the exterior-disk solution formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiskRegion {
    /// Behind the disk, upper half: `x1 > 0`, `0 ≤ x2 ≤ 1`.
    Upper,
    /// Behind the disk, lower half: `x1 > 0`, `−1 ≤ x2 ≤ 0`.
    Lower,
    Free,
}

pub fn classify_disk_region(r: f64, phi: f64) -> DiskRegion {
    let (x1, x2) = (r * phi.cos(), r * phi.sin());
    if x1 > 0.0 && (0.0..=1.0).contains(&x2) {
        DiskRegion::Upper
    } else if x1 > 0.0 && (-1.0..=0.0).contains(&x2) {
        DiskRegion::Lower
    } else {
        DiskRegion::Free
    }
}

/// One branch of the exterior-disk solution, evaluated regardless of region.
pub fn disk_branch(region: DiskRegion, r: f64, phi: f64, t: f64) -> f64 {
    match region {
        DiskRegion::Upper => -t + (PI / 2.0 - (1.0 / r).acos() - phi) + (r * r - 1.0).sqrt() + 2.0,
        DiskRegion::Lower => -t + (PI / 2.0 - (1.0 / r).acos() + phi) + (r * r - 1.0).sqrt() + 2.0,
        DiskRegion::Free => -t + r * phi.cos() + 2.0,
    }
}

/// Explicit value function outside the unit disk for `H = |p|²`, `g = 0`, `u0 = x1 + 2`,
/// in polar coordinates with `φ ∈ (−π, π]`.
pub fn disk_solution(r: f64, phi: f64, t: f64) -> f64 {
    let phi = (phi.sin()).atan2(phi.cos());
    disk_branch(classify_disk_region(r, phi), r, phi, t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoHolesReport {
    pub h: f64,
    pub theta0: f64,
    pub t1: f64,
    pub t2: f64,
    pub d1: f64,
    pub f_h: f64,
    /// The point of `∂B₂` that the front leaves last.
    pub z: Point,
    /// `θ₀` rebuilt from the inner common tangent by equating the two path lengths.
    pub theta0_reconstructed: f64,
}

impl TwoHolesReport {
    pub const HEADER: &'static str = "# h theta0 t1 t2 D1 f_h z1";

    pub fn to_row(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{} {} {} {} {} {} {}", self.h, self.theta0, self.t1, self.t2, self.d1, self.f_h, self.z.x);
        s
    }
}

/// `θ₀(h) = 2 arctan((2−h)/2) + h/2`.
pub fn theta0(h: f64) -> f64 {
    2.0 * ((2.0 - h) / 2.0).atan() + h / 2.0
}

/// `f(h) = |sin θ₀ + θ₀ − π|`.
pub fn bowing_amplitude(h: f64) -> f64 {
    let th = theta0(h);
    (th.sin() + th - PI).abs()
}

/// `θ` such that the arc over the top of `B₂` and the route under it through the
/// inner tangent to the top of `B₁` have equal length.
fn reconstruct_theta0(h: f64) -> f64 {
    let [b1, b2] = two_hole_disks(h).try_into().expect("two disks");
    // inner tangent from the lower-left of B2 to the upper-right of B1
    let (on_b2, on_b1) = common_tangents(&b2, &b1)
        .into_iter()
        .skip(2)
        .find(|(p2, p1)| p2.x < b2.center.x && p2.y < b2.center.y && p1.x > b1.center.x)
        .expect("disjoint disks have an inner tangent");
    let length = (on_b1 - on_b2).norm();
    // arc on B1 from the tangent point up to its top, arc on B2 from its bottom to the tangent point
    let alpha_b1 = PI / 2.0 - angle_of(&b1, &on_b1);
    let alpha_b2 = 3.0 * PI / 2.0 - angle_of(&b2, &on_b2);
    // (π − θ) + 2 = θ + α_B2 + α_B1 + length  (from the bottom of B2 clockwise to Z is θ)
    (PI + 2.0 - alpha_b1 - alpha_b2 - length) / 2.0
}

pub fn two_holes(h: f64) -> Result<TwoHolesReport> {
    if !(h > 0.0 && h < 2.0) {
        return Err(LabError::DomainError(format!("h must lie in (0,2), got {h}")));
    }
    let th = theta0(h);
    let o2 = Point::new(2.0, 2.0 - h);
    Ok(TwoHolesReport {
        h,
        theta0: th,
        t1: 2.0 + PI / 2.0,
        t2: 4.0 + PI - th,
        d1: PI / 2.0 - 1.0,
        f_h: bowing_amplitude(h),
        z: o2 + nalgebra::Vector2::new(th.sin(), -th.cos()),
        theta0_reconstructed: reconstruct_theta0(h),
    })
}

/// `2 + max ℓ` over `samples` equally spaced points of `∂B₂`, with the maximising point.
pub fn geodesic_leave_time(field: &LeftwardField, disk: &Disk, samples: usize) -> Result<(f64, Point)> {
    let mut best = (f64::NEG_INFINITY, disk.center);
    for k in 0..samples {
        let p = disk.point_at(TAU * k as f64 / samples as f64);
        // points covered by another disk are not on ∂Ω
        if inside_any(field.disks(), &p, 1e-12) {
            continue;
        }
        let l = field.eval(&p)?;
        if l > best.0 {
            best = (l, p);
        }
    }
    Ok((2.0 + best.0, best.1))
}

/// Geodesic cross-check of `t₂(h)`: `(measured, agrees within tol)`.
pub fn two_holes_cross_check(h: f64, samples: usize, tol: f64) -> Result<(f64, bool)> {
    let report = two_holes(h)?;
    let disks = two_hole_disks(h);
    let field = LeftwardField::new(&disks)?;
    let (t2, _) = geodesic_leave_time(&field, &disks[1], samples)?;
    Ok((t2, (t2 - report.t2).abs() <= tol))
}
