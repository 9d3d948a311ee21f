//! Convex Hamiltonians, their Legendre transforms, and runtime checks of the
//! structural assumptions (uniform convexity, boundary separability).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::DomainGeometry;
use crate::{Matrix, Point, Vector};

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 100;

/// A `C²` Hamiltonian `H(x, p)` with its first and second derivatives.
///
/// `hess_px` follows the convention `(D²_px H)_{ij} = ∂²H / ∂p_i ∂x_j`, so that
/// `d/ds D_pH(η, p) = D²_px H η̇ + D²_pp H ṗ`.
pub trait Hamiltonian: Send + Sync {
    fn value(&self, x: &Point, p: &Vector) -> f64;
    fn grad_x(&self, x: &Point, p: &Vector) -> Vector;
    fn grad_p(&self, x: &Point, p: &Vector) -> Vector;
    fn hess_pp(&self, x: &Point, p: &Vector) -> Matrix;
    fn hess_px(&self, x: &Point, p: &Vector) -> Matrix;
    /// Upper bound on the eigenvalues of `D²_pp H`.
    fn alpha0(&self) -> f64;
    /// Lower bound on the eigenvalues of `D²_vv L`.
    fn alpha1(&self) -> f64;
    /// `(L(x,v), argmax)` when a closed form is known.
    fn closed_form_legendre(&self, _x: &Point, _v: &Vector) -> Option<(f64, Vector)> {
        None
    }
    /// Whether the model is known to split into tangential and normal parts on the boundary.
    fn has_boundary_split(&self) -> bool {
        false
    }
}

/// Smooth bounded drift fields for [`HamiltonianModel::DriftQuadratic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Drift {
    Constant(Vector),
    /// `c(x) = s · J(x - c₀) / (1 + |x - c₀|²)` with `J` the quarter turn; tangent to every
    /// circle centred at `c₀`.
    Swirl { center: Point, strength: f64 },
}

impl Drift {
    pub fn value(&self, x: &Point) -> Vector {
        match self {
            Drift::Constant(c) => *c,
            Drift::Swirl { center, strength } => {
                let d = x - center;
                let q = 1.0 + d.norm_squared();
                *strength * Vector::new(-d.y, d.x) / q
            }
        }
    }

    /// `∂c_i/∂x_j`.
    pub fn jacobian(&self, x: &Point) -> Matrix {
        match self {
            Drift::Constant(_) => Matrix::zeros(),
            Drift::Swirl { center, strength } => {
                let d = x - center;
                let q = 1.0 + d.norm_squared();
                let j = Matrix::new(0.0, -1.0, 1.0, 0.0);
                let jd = j * d;
                *strength * (j / q - (jd * d.transpose()) * (2.0 / (q * q)))
            }
        }
    }
}

/// Built-in Hamiltonians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HamiltonianModel {
    /// `½|p|²`
    Quadratic,
    /// `|p|²`
    ScaledQuadratic,
    /// `½|p|² + c(x)·p`
    DriftQuadratic(Drift),
}

impl Hamiltonian for HamiltonianModel {
    fn value(&self, x: &Point, p: &Vector) -> f64 {
        match self {
            Self::Quadratic => 0.5 * p.norm_squared(),
            Self::ScaledQuadratic => p.norm_squared(),
            Self::DriftQuadratic(c) => 0.5 * p.norm_squared() + c.value(x).dot(p),
        }
    }

    fn grad_x(&self, x: &Point, p: &Vector) -> Vector {
        match self {
            Self::Quadratic | Self::ScaledQuadratic => Vector::zeros(),
            Self::DriftQuadratic(c) => c.jacobian(x).transpose() * p,
        }
    }

    fn grad_p(&self, x: &Point, p: &Vector) -> Vector {
        match self {
            Self::Quadratic => *p,
            Self::ScaledQuadratic => 2.0 * p,
            Self::DriftQuadratic(c) => p + c.value(x),
        }
    }

    fn hess_pp(&self, _x: &Point, _p: &Vector) -> Matrix {
        match self {
            Self::ScaledQuadratic => 2.0 * Matrix::identity(),
            _ => Matrix::identity(),
        }
    }

    fn hess_px(&self, x: &Point, _p: &Vector) -> Matrix {
        match self {
            Self::DriftQuadratic(c) => c.jacobian(x),
            _ => Matrix::zeros(),
        }
    }

    fn alpha0(&self) -> f64 {
        match self {
            Self::ScaledQuadratic => 2.0,
            _ => 1.0,
        }
    }

    fn alpha1(&self) -> f64 {
        match self {
            Self::ScaledQuadratic => 0.5,
            _ => 1.0,
        }
    }

    fn closed_form_legendre(&self, x: &Point, v: &Vector) -> Option<(f64, Vector)> {
        Some(match self {
            Self::Quadratic => (0.5 * v.norm_squared(), *v),
            Self::ScaledQuadratic => (0.25 * v.norm_squared(), 0.5 * v),
            Self::DriftQuadratic(c) => {
                let p = v - c.value(x);
                (0.5 * p.norm_squared(), p)
            }
        })
    }

    fn has_boundary_split(&self) -> bool {
        matches!(self, Self::Quadratic | Self::ScaledQuadratic)
    }
}

/// `L(x,v) = sup_p (v·p - H(x,p))` and the maximiser `p*`.
pub fn legendre<H: Hamiltonian + ?Sized>(model: &H, x: &Point, v: &Vector) -> Result<(f64, Vector)> {
    match model.closed_form_legendre(x, v) {
        Some(lv) => Ok(lv),
        None => legendre_newton(model, x, v),
    }
}

/// Legendre transform by damped Newton on `D_pH(x,p) = v`, started at `p = v`,
/// with a coordinate-descent fallback.
pub fn legendre_newton<H: Hamiltonian + ?Sized>(model: &H, x: &Point, v: &Vector) -> Result<(f64, Vector)> {
    let residual = |p: &Vector| model.grad_p(x, p) - v;
    let mut p = *v;
    let mut r = residual(&p);
    for _ in 0..NEWTON_MAX_ITER {
        if r.norm() <= NEWTON_TOL {
            return Ok((v.dot(&p) - model.value(x, &p), p));
        }
        let Some(inv) = model.hess_pp(x, &p).try_inverse() else { break };
        let mut step = inv * r;
        let mut trial = p - step;
        let mut r_trial = residual(&trial);
        let mut halvings = 0;
        while r_trial.norm() > r.norm() && halvings < 30 {
            step *= 0.5;
            trial = p - step;
            r_trial = residual(&trial);
            halvings += 1;
        }
        p = trial;
        r = r_trial;
    }
    if r.norm() <= NEWTON_TOL {
        return Ok((v.dot(&p) - model.value(x, &p), p));
    }
    coordinate_descent(model, x, v, p)
}

fn coordinate_descent<H: Hamiltonian + ?Sized>(model: &H, x: &Point, v: &Vector, mut p: Vector) -> Result<(f64, Vector)> {
    const SWEEPS: usize = 10_000;
    for _ in 0..SWEEPS {
        for i in 0..2 {
            let g = model.grad_p(x, &p)[i] - v[i];
            let h = model.hess_pp(x, &p)[(i, i)];
            if h > 0.0 {
                p[i] -= g / h;
            }
        }
        if (model.grad_p(x, &p) - v).norm() <= NEWTON_TOL {
            return Ok((v.dot(&p) - model.value(x, &p), p));
        }
    }
    Err(LabError::NoConvergence {
        iterations: NEWTON_MAX_ITER,
        residual: (model.grad_p(x, &p) - v).norm(),
    })
}

/// `D_vL(x, v)`: by duality, the maximiser of the Legendre transform.
pub fn grad_v_l<H: Hamiltonian + ?Sized>(model: &H, x: &Point, v: &Vector) -> Result<Vector> {
    legendre(model, x, v).map(|(_, p)| p)
}

/// Axis-aligned sampling region used by the assumption checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleBox {
    pub min: Point,
    pub max: Point,
}

impl SampleBox {
    pub fn square(half_width: f64) -> Self {
        Self { min: Point::new(-half_width, -half_width), max: Point::new(half_width, half_width) }
    }

    fn grid(&self, n: usize) -> Vec<Point> {
        let n = n.max(2);
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let a = i as f64 / (n - 1) as f64;
                let b = j as f64 / (n - 1) as f64;
                out.push(Point::new(
                    self.min.x + a * (self.max.x - self.min.x),
                    self.min.y + b * (self.max.y - self.min.y),
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityReport {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// `min_x min_p̂ H(x, R p̂) / R` at `R = 10³`.
    pub superlinearity: f64,
}

/// Sample `D²_pp H` over `region × region` and the growth of `H` at large `|p|`.
pub fn check_a1<H: Hamiltonian + ?Sized>(model: &H, region: SampleBox, grid: usize) -> ConvexityReport {
    let pts = region.grid(grid);
    let mut min_eig = f64::INFINITY;
    let mut max_eig = f64::NEG_INFINITY;
    for x in &pts {
        for p in &pts {
            let eig = model.hess_pp(x, p).symmetric_eigenvalues();
            min_eig = min_eig.min(eig.min());
            max_eig = max_eig.max(eig.max());
        }
    }
    const R: f64 = 1e3;
    let mut superlinearity = f64::INFINITY;
    for x in &pts {
        for k in 0..16 {
            let a = 2.0 * std::f64::consts::PI * k as f64 / 16.0;
            let p = R * Vector::new(a.cos(), a.sin());
            superlinearity = superlinearity.min(model.value(x, &p) / R);
        }
    }
    ConvexityReport { min_eigenvalue: min_eig, max_eigenvalue: max_eig, superlinearity }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitReport {
    /// `max |H(x,p) - H(x,p_τ) - H(x,p_ν) + H(x,0)|`
    pub separability: f64,
    /// `max |D_pH(x, p_τ) · ν(x)|`
    pub normal_condition: f64,
    pub samples: usize,
}

impl SplitReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.separability <= tol && self.normal_condition <= tol
    }
}

/// Empirical test of the tangential/normal splitting of `H` on boundary samples,
/// with momenta drawn from a seeded generator.
pub fn check_a3<H: Hamiltonian + ?Sized>(
    model: &H,
    dom: &DomainGeometry,
    boundary_samples: &[Point],
    seed: u64,
) -> Result<SplitReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sep: f64 = 0.0;
    let mut normal: f64 = 0.0;
    for x in boundary_samples {
        let nu = dom.outward_normal(x)?;
        for _ in 0..8 {
            let p = Vector::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let p_nu = p.dot(&nu) * nu;
            let p_tau = p - p_nu;
            let zero = Vector::zeros();
            let s = model.value(x, &p) - model.value(x, &p_tau) - model.value(x, &p_nu) + model.value(x, &zero);
            sep = sep.max(s.abs());
            normal = normal.max(model.grad_p(x, &p_tau).dot(&nu).abs());
        }
    }
    Ok(SplitReport { separability: sep, normal_condition: normal, samples: boundary_samples.len() })
}
