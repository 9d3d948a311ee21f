//! Implicit domains described by their signed distance `b`.
//!
//! Sign convention: `b < 0` strictly inside the domain, `b > 0` strictly outside,
//! `b = 0` on the boundary. The outward normal is `Db` and the shape operator
//! used by the reflected dynamics is `D²b`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::{Matrix, Point, Vector};

/// Points closer than this to an obstacle centre have no unique projection.
const CENTER_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Point, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn unit() -> Self {
        Self::new(Point::zeros(), 1.0)
    }

    /// `R - |x - c|`: positive inside the disk.
    pub fn depth(&self, x: &Point) -> f64 {
        self.radius - (x - self.center).norm()
    }

    pub fn point_at(&self, angle: f64) -> Point {
        self.center + self.radius * Vector::new(angle.cos(), angle.sin())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DomainKind {
    /// `{x : normal · x < offset}`; `normal` is the outward unit normal.
    HalfSpace { normal: Vector, offset: f64 },
    /// The plane minus the closed union of the disks.
    ExteriorDisks(Vec<Disk>),
    /// The open ball itself.
    BoundedBall(Disk),
    FreeSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainGeometry {
    pub kind: DomainKind,
    /// Half-width of the neighbourhood of the boundary on which `b` is `C²`.
    pub tube_radius: f64,
}

impl DomainGeometry {
    pub fn new(kind: DomainKind, tube_radius: f64) -> Result<Self> {
        if !(tube_radius > 0.0) {
            return Err(LabError::Config(format!("tube_radius must be positive, got {tube_radius}")));
        }
        match &kind {
            DomainKind::HalfSpace { normal, .. } => {
                if (normal.norm() - 1.0).abs() > 1e-12 {
                    return Err(LabError::Config("half-space normal must be a unit vector".into()));
                }
            }
            DomainKind::ExteriorDisks(disks) => {
                if disks.is_empty() {
                    return Err(LabError::Config("exterior domain needs at least one disk".into()));
                }
                let min_r = disks.iter().map(|d| d.radius).fold(f64::INFINITY, f64::min);
                if !(min_r > 0.0) {
                    return Err(LabError::Config("disk radii must be positive".into()));
                }
                if tube_radius > min_r {
                    return Err(LabError::Config(format!(
                        "tube_radius {tube_radius} exceeds the smallest radius {min_r}"
                    )));
                }
            }
            DomainKind::BoundedBall(disk) => {
                if !(disk.radius > 0.0) {
                    return Err(LabError::Config("ball radius must be positive".into()));
                }
                if tube_radius > disk.radius {
                    return Err(LabError::Config("tube_radius exceeds the ball radius".into()));
                }
            }
            DomainKind::FreeSpace => {}
        }
        Ok(Self { kind, tube_radius })
    }

    /// Complement of the disks, tube radius `0.5 · min radius`.
    pub fn exterior_disks(disks: Vec<Disk>) -> Result<Self> {
        let min_r = disks.iter().map(|d| d.radius).fold(f64::INFINITY, f64::min);
        Self::new(DomainKind::ExteriorDisks(disks), 0.5 * min_r)
    }

    pub fn unit_disk_exterior() -> Self {
        Self::exterior_disks(vec![Disk::unit()]).expect("unit disk is valid")
    }

    /// The two-obstacle configuration `B((0,0),1) ∪ B((2,2-h),1)`.
    pub fn two_holes(h: f64) -> Result<Self> {
        Self::exterior_disks(two_hole_disks(h))
    }

    /// `{x : normal · x < offset}`, tube radius 1.
    pub fn half_space(normal: Vector, offset: f64) -> Result<Self> {
        Self::new(DomainKind::HalfSpace { normal, offset }, 1.0)
    }

    /// The upper half-plane `{x₂ > 0}`.
    pub fn upper_half_plane() -> Self {
        Self::half_space(Vector::new(0.0, -1.0), 0.0).expect("valid half-plane")
    }

    pub fn free_space() -> Self {
        Self { kind: DomainKind::FreeSpace, tube_radius: 1.0 }
    }

    pub fn disks(&self) -> &[Disk] {
        match &self.kind {
            DomainKind::ExteriorDisks(d) => d,
            _ => &[],
        }
    }

    pub fn signed_distance(&self, x: &Point) -> f64 {
        match &self.kind {
            DomainKind::HalfSpace { normal, offset } => normal.dot(x) - offset,
            DomainKind::ExteriorDisks(disks) => {
                disks.iter().map(|d| d.depth(x)).fold(f64::NEG_INFINITY, f64::max)
            }
            DomainKind::BoundedBall(d) => -d.depth(x),
            DomainKind::FreeSpace => f64::NEG_INFINITY,
        }
    }

    pub fn contains_closure(&self, x: &Point, tol: f64) -> bool {
        self.signed_distance(x) <= tol
    }

    fn check_tube(&self, x: &Point) -> Result<f64> {
        let b = self.signed_distance(x);
        if b.abs() < self.tube_radius {
            Ok(b)
        } else {
            Err(LabError::OutsideTube { distance: b.abs(), tube: self.tube_radius })
        }
    }

    /// The active obstacle near `x` together with the unit vector from its centre.
    fn active_disk(&self, x: &Point) -> Result<(Disk, Vector, f64)> {
        let disk = match &self.kind {
            DomainKind::ExteriorDisks(disks) => *disks
                .iter()
                .max_by(|a, b| a.depth(x).total_cmp(&b.depth(x)))
                .expect("non-empty"),
            DomainKind::BoundedBall(d) => *d,
            _ => unreachable!("only called for curved boundaries"),
        };
        let r = (x - disk.center).norm();
        if r < CENTER_EPS {
            return Err(LabError::AmbiguousProjection { x: x.x, y: x.y });
        }
        Ok((disk, (x - disk.center) / r, r))
    }

    /// `ν(x) = Db(x)`, defined inside the tube.
    pub fn outward_normal(&self, x: &Point) -> Result<Vector> {
        match &self.kind {
            DomainKind::FreeSpace => Err(LabError::OutsideTube { distance: f64::INFINITY, tube: self.tube_radius }),
            DomainKind::HalfSpace { normal, .. } => {
                self.check_tube(x)?;
                Ok(*normal)
            }
            DomainKind::ExteriorDisks(_) => {
                self.check_tube(x)?;
                let (_, radial, _) = self.active_disk(x)?;
                Ok(-radial)
            }
            DomainKind::BoundedBall(_) => {
                self.check_tube(x)?;
                let (_, radial, _) = self.active_disk(x)?;
                Ok(radial)
            }
        }
    }

    /// `D²b(x)`; annihilates the normal.
    pub fn hessian_signed_distance(&self, x: &Point) -> Result<Matrix> {
        match &self.kind {
            DomainKind::FreeSpace => Err(LabError::OutsideTube { distance: f64::INFINITY, tube: self.tube_radius }),
            DomainKind::HalfSpace { .. } => {
                self.check_tube(x)?;
                Ok(Matrix::zeros())
            }
            DomainKind::ExteriorDisks(_) | DomainKind::BoundedBall(_) => {
                self.check_tube(x)?;
                let (_, n, r) = self.active_disk(x)?;
                let tangential = Matrix::identity() - n * n.transpose();
                let sign = if matches!(self.kind, DomainKind::BoundedBall(_)) { 1.0 } else { -1.0 };
                Ok(sign * tangential / r)
            }
        }
    }

    /// Closest point of the closed domain.
    pub fn project(&self, x: &Point) -> Result<Point> {
        let b = self.signed_distance(x);
        if b <= 0.0 {
            return Ok(*x);
        }
        match &self.kind {
            DomainKind::FreeSpace => Ok(*x),
            DomainKind::HalfSpace { normal, .. } => Ok(x - b * normal),
            DomainKind::BoundedBall(d) => {
                let r = (x - d.center).norm();
                Ok(d.center + d.radius * (x - d.center) / r)
            }
            DomainKind::ExteriorDisks(disks) => project_exterior(disks, x),
        }
    }

    /// Projection onto the boundary itself (used to keep sliding states on `∂Ω`).
    pub fn project_to_boundary(&self, x: &Point) -> Result<Point> {
        let b = self.signed_distance(x);
        if b > 0.0 {
            return self.project(x);
        }
        let nu = self.outward_normal(x)?;
        Ok(x - b * nu)
    }
}

/// The disks of the two-obstacle configuration with offset `h`.
pub fn two_hole_disks(h: f64) -> Vec<Disk> {
    vec![Disk::unit(), Disk::new(Point::new(2.0, 2.0 - h), 1.0)]
}

/// Exact closest point of the complement of a union of disks.
fn project_exterior(disks: &[Disk], x: &Point) -> Result<Point> {
    let outside_all = |p: &Point| disks.iter().all(|d| d.depth(p) <= 1e-12);
    let mut candidates: Vec<Point> = Vec::new();
    for d in disks {
        let r = (x - d.center).norm();
        if d.depth(x) > 0.0 && r < CENTER_EPS {
            return Err(LabError::AmbiguousProjection { x: x.x, y: x.y });
        }
        if r >= CENTER_EPS {
            let p = d.center + d.radius * (x - d.center) / r;
            if outside_all(&p) {
                candidates.push(p);
            }
        }
    }
    for (i, a) in disks.iter().enumerate() {
        for b in &disks[i + 1..] {
            for p in circle_intersections(a, b) {
                if outside_all(&p) {
                    candidates.push(p);
                }
            }
        }
    }
    let mut best: Option<(f64, Point)> = None;
    let mut tied = false;
    for p in candidates {
        let dist = (p - x).norm();
        match best {
            None => best = Some((dist, p)),
            Some((bd, bp)) => {
                if dist < bd - 1e-12 {
                    best = Some((dist, p));
                    tied = false;
                } else if (dist - bd).abs() <= 1e-12 && (p - bp).norm() > 1e-12 {
                    tied = true;
                }
            }
        }
    }
    match best {
        Some((_, p)) if !tied => Ok(p),
        _ => Err(LabError::AmbiguousProjection { x: x.x, y: x.y }),
    }
}

/// Intersection points of two circles (empty when they do not meet).
pub fn circle_intersections(a: &Disk, b: &Disk) -> Vec<Point> {
    let d_vec = b.center - a.center;
    let d = d_vec.norm();
    if d < 1e-15 || d > a.radius + b.radius || d < (a.radius - b.radius).abs() {
        return Vec::new();
    }
    let along = (a.radius * a.radius - b.radius * b.radius + d * d) / (2.0 * d);
    let h2 = a.radius * a.radius - along * along;
    let h = h2.max(0.0).sqrt();
    let e = d_vec / d;
    let base = a.center + along * e;
    let perp = Vector::new(-e.y, e.x);
    if h == 0.0 {
        vec![base]
    } else {
        vec![base + h * perp, base - h * perp]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fd_hessian(dom: &DomainGeometry, x: Point, step: f64) -> Matrix {
        let mut m = Matrix::zeros();
        for i in 0..2 {
            for j in 0..2 {
                let mut ei = Vector::zeros();
                ei[i] = step;
                let mut ej = Vector::zeros();
                ej[j] = step;
                let f = |p: Point| dom.signed_distance(&p);
                m[(i, j)] = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej))
                    / (4.0 * step * step);
            }
        }
        m
    }

    #[test]
    fn signed_distance_unit_disk() {
        let dom = DomainGeometry::unit_disk_exterior();
        assert_eq!(dom.signed_distance(&Point::new(2.0, 0.0)), -1.0);
        assert_eq!(dom.signed_distance(&Point::new(0.5, 0.0)), 0.5);
        assert_eq!(dom.signed_distance(&Point::new(1.0, 0.0)), 0.0);
    }

    #[test]
    fn normals() {
        let dom = DomainGeometry::unit_disk_exterior();
        assert_abs_diff_eq!(dom.outward_normal(&Point::new(1.0, 0.0)).unwrap(), Vector::new(-1.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(dom.outward_normal(&Point::new(0.0, 1.05)).unwrap(), Vector::new(0.0, -1.0), epsilon = 1e-15);
        let hp = DomainGeometry::upper_half_plane();
        assert_eq!(hp.outward_normal(&Point::new(3.0, 0.0)).unwrap(), Vector::new(0.0, -1.0));
        assert!(matches!(dom.outward_normal(&Point::new(3.0, 0.0)), Err(LabError::OutsideTube { .. })));
    }

    #[test]
    fn hessian_matches_finite_differences() {
        // frozen from central differences of the signed distance, step 1e-5
        let dom = DomainGeometry::unit_disk_exterior();
        let x = Point::new(1.0, 0.0);
        let fd = fd_hessian(&dom, x, 1e-5);
        assert_abs_diff_eq!(fd, Matrix::new(0.0, 0.0, 0.0, -1.0), epsilon = 1e-4);
        assert_abs_diff_eq!(dom.hessian_signed_distance(&x).unwrap(), Matrix::new(0.0, 0.0, 0.0, -1.0), epsilon = 1e-15);

        let big = DomainGeometry::exterior_disks(vec![Disk::new(Point::zeros(), 2.0)]).unwrap();
        let x = Point::new(2.0, 0.0);
        let fd = fd_hessian(&big, x, 1e-5);
        assert_abs_diff_eq!(fd, Matrix::new(0.0, 0.0, 0.0, -0.5), epsilon = 1e-4);
        assert_abs_diff_eq!(big.hessian_signed_distance(&x).unwrap(), fd, epsilon = 1e-4);

        let hp = DomainGeometry::upper_half_plane();
        assert_eq!(hp.hessian_signed_distance(&Point::new(1.0, 0.3)).unwrap(), Matrix::zeros());
    }

    #[test]
    fn projection_examples() {
        let dom = DomainGeometry::unit_disk_exterior();
        assert_abs_diff_eq!(dom.project(&Point::new(0.5, 0.0)).unwrap(), Point::new(1.0, 0.0), epsilon = 1e-15);
        assert_eq!(dom.project(&Point::new(3.0, 2.0)).unwrap(), Point::new(3.0, 2.0));
        assert!(matches!(dom.project(&Point::zeros()), Err(LabError::AmbiguousProjection { .. })));
    }

    #[test]
    fn projection_into_overlap_corner() {
        let dom = DomainGeometry::exterior_disks(vec![
            Disk::new(Point::new(-0.5, 0.0), 1.0),
            Disk::new(Point::new(0.5, 0.0), 1.0),
        ])
        .unwrap();
        // just below the upper corner of the lens, the nearest point is the corner
        let corner = Point::new(0.0, 0.75f64.sqrt());
        let p = dom.project(&Point::new(0.0, 0.8)).unwrap();
        assert_abs_diff_eq!(p, corner, epsilon = 1e-12);
        assert!(dom.signed_distance(&p) <= 1e-12);
    }

    #[test]
    fn closed_form_matches_sampled_boundary() {
        let dom = DomainGeometry::two_holes(1.0).unwrap();
        let samples: Vec<Point> = dom
            .disks()
            .iter()
            .flat_map(|d| (0..10_000).map(move |k| d.point_at(2.0 * std::f64::consts::PI * k as f64 / 10_000.0)))
            .filter(|p| dom.signed_distance(p) <= 1e-12)
            .collect();
        for &x in &[Point::new(3.0, -1.0), Point::new(1.0, 1.5), Point::new(-2.0, 0.3), Point::new(1.1, 0.2)] {
            let brute = samples.iter().map(|s| (s - x).norm()).fold(f64::INFINITY, f64::min);
            assert_abs_diff_eq!(-dom.signed_distance(&x), brute, epsilon = 1e-3);
        }
    }

    #[test]
    fn invalid_configurations() {
        assert!(DomainGeometry::new(DomainKind::ExteriorDisks(vec![Disk::new(Point::zeros(), 1.0)]), 2.0).is_err());
        assert!(DomainGeometry::new(DomainKind::ExteriorDisks(vec![Disk::new(Point::zeros(), -1.0)]), 0.1).is_err());
        assert!(DomainGeometry::half_space(Vector::new(0.0, -2.0), 0.0).is_err());
    }
}
