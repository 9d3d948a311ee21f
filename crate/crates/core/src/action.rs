//! The action functional and its minimisation over piecewise-constant controls.
//!
//! The value `u(x,t)` is the infimum over reflected paths started at `x` of
//! `∫ L(η, −v) + g(η) l ds + u0(η(t))`. Controls are transcribed as `N`
//! constant vectors on equal sub-intervals of `[0,t]`, the forward map is
//! [`skorokhod::integrate`], and the objective is minimised by projected BFGS
//! from several deterministic starts.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::DomainGeometry;
use crate::hamiltonian::{grad_v_l, legendre, Hamiltonian, HamiltonianModel};
use crate::quasi_newton::{self, BfgsOptions};
use crate::skorokhod::{self, Regime, ReflectedPath, FEASIBILITY_TOL};
use crate::{Point, Vector};

/// Built-in scalar data for the Neumann datum `g` and the initial datum `u0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Datum {
    #[default]
    Zero,
    Constant { c: f64 },
    /// `a·x + b`.
    Linear { a: [f64; 2], b: f64 },
}

impl Datum {
    pub fn linear(a: Vector, b: f64) -> Self {
        Datum::Linear { a: [a.x, a.y], b }
    }

    pub fn value(&self, x: &Point) -> f64 {
        match *self {
            Datum::Zero => 0.0,
            Datum::Constant { c } => c,
            Datum::Linear { a, b } => a[0] * x.x + a[1] * x.y + b,
        }
    }

    pub fn gradient(&self, _x: &Point) -> Vector {
        match *self {
            Datum::Linear { a, .. } => Vector::new(a[0], a[1]),
            _ => Vector::zeros(),
        }
    }

    /// Global Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            Datum::Linear { a, .. } => a[0].hypot(a[1]),
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemData {
    pub model: HamiltonianModel,
    pub dom: DomainGeometry,
    pub g: Datum,
    pub u0: Datum,
}

impl ProblemData {
    pub fn new(model: HamiltonianModel, dom: DomainGeometry, g: Datum, u0: Datum) -> Self {
        Self { model, dom, g, u0 }
    }

    /// The exterior-disk problem with an explicit solution: `H = |p|²`, `g = 0`, `u0 = x1 + 2`.
    pub fn disk_example() -> Self {
        Self::new(
            HamiltonianModel::ScaledQuadratic,
            DomainGeometry::unit_disk_exterior(),
            Datum::Zero,
            Datum::linear(Vector::new(1.0, 0.0), 2.0),
        )
    }

    pub fn g_lipschitz(&self) -> f64 {
        self.g.lipschitz()
    }

    pub fn u0_lipschitz(&self) -> f64 {
        self.u0.lipschitz()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    /// Number of piecewise-constant control nodes.
    pub nodes: usize,
    /// Upper bound on the integrator step; the actual step divides each node interval evenly.
    pub dt: f64,
    pub restarts: usize,
    pub max_iterations: usize,
    pub fd_step: f64,
    /// Relative action decrease below which a restart is considered converged.
    pub tolerance: f64,
    pub v_max: f64,
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            nodes: 64,
            dt: 5e-3,
            restarts: 8,
            max_iterations: 200,
            fd_step: 1e-6,
            tolerance: 1e-10,
            v_max: 10.0,
            seed: 42,
        }
    }
}

impl SolverParams {
    fn validate(&self) -> Result<()> {
        let ok = self.nodes > 0
            && self.dt > 0.0
            && self.restarts > 0
            && self.max_iterations > 0
            && self.fd_step > 0.0
            && self.tolerance > 0.0
            && self.v_max > 0.0;
        if ok {
            Ok(())
        } else {
            Err(LabError::Config(format!("solver parameters must be positive: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverWarning {
    /// No restart improved on the action of the zero control.
    NonDecrease,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueEstimate {
    pub value: f64,
    pub path: ReflectedPath,
    pub restarts_used: usize,
    pub final_gradient_norm: f64,
    /// Action after each accepted iteration of the winning restart.
    pub action_history: Vec<f64>,
    /// Best action reached by every restart, by restart index.
    pub restart_values: Vec<f64>,
    /// Index of the winning restart.
    pub best_restart: usize,
    pub zero_control_action: f64,
    pub warnings: Vec<SolverWarning>,
}

impl ValueEstimate {
    /// Restarts whose optimum lies within `tol` of the best one.
    pub fn near_optimal_restarts(&self, tol: f64) -> Vec<usize> {
        self.restart_values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v <= self.value + tol)
            .map(|(i, _)| i)
            .collect()
    }

    /// Observed `max |η̇|` along the minimiser.
    pub fn max_speed(&self) -> f64 {
        let mut m: f64 = 0.0;
        for k in 0..self.path.len().saturating_sub(1) {
            let h = self.path.times[k + 1] - self.path.times[k];
            if h > 0.0 {
                m = m.max((self.path.eta[k + 1] - self.path.eta[k]).norm() / h);
            }
        }
        m
    }

    /// Structured text record; `path_file` names where the path columns were written.
    pub fn to_record(&self, path_file: Option<&str>) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "value = {:?}", self.value);
        let _ = writeln!(out, "restarts_used = {}", self.restarts_used);
        let _ = writeln!(out, "best_restart = {}", self.best_restart);
        let _ = writeln!(out, "final_gradient_norm = {:?}", self.final_gradient_norm);
        let _ = writeln!(out, "zero_control_action = {:?}", self.zero_control_action);
        let _ = writeln!(out, "max_speed = {:?}", self.max_speed());
        let _ = writeln!(out, "near_optimal_restarts = {:?}", self.near_optimal_restarts(1e-6));
        let _ = writeln!(out, "restart_values = {:?}", self.restart_values);
        let _ = writeln!(out, "action_history = {:?}", self.action_history);
        let warnings: Vec<String> = self.warnings.iter().map(|w| format!("\"{w:?}\"")).collect();
        let _ = writeln!(out, "warnings = [{}]", warnings.join(", "));
        if let Some(file) = path_file {
            let _ = writeln!(out, "path_file = {file:?}");
        }
        out
    }
}

/// Integrand of the action on interval `k`, trapezoidal in `η`.
fn interval_cost(data: &ProblemData, path: &ReflectedPath, k: usize) -> Result<f64> {
    let h = path.times[k + 1] - path.times[k];
    let (a, b) = (path.eta[k], path.eta[k + 1]);
    let minus_v = -path.v[k];
    let (la, _) = legendre(&data.model, &a, &minus_v)?;
    let (lb, _) = legendre(&data.model, &b, &minus_v)?;
    let reflection = 0.5 * (data.g.value(&a) + data.g.value(&b)) * path.l[k];
    Ok(h * (0.5 * (la + lb) + reflection))
}

/// `∫_0^{s_k} L(η,−v) + g(η) l ds` up to sample `k`.
pub fn running_cost(data: &ProblemData, path: &ReflectedPath, k: usize) -> Result<f64> {
    (0..k.min(path.len().saturating_sub(1))).try_fold(0.0, |acc, j| Ok(acc + interval_cost(data, path, j)?))
}

/// Action of a path: trapezoidal running cost plus `u0` at the endpoint.
pub fn action_value(data: &ProblemData, path: &ReflectedPath) -> Result<f64> {
    if path.is_empty() {
        return Err(LabError::DomainError("empty path".into()));
    }
    Ok(running_cost(data, path, path.len() - 1)? + data.u0.value(&path.endpoint()))
}

/// The control grid shared by every evaluation of one minimisation.
struct Transcription<'a> {
    data: &'a ProblemData,
    x: Point,
    t: f64,
    nodes: usize,
    dt: f64,
}

impl<'a> Transcription<'a> {
    fn new(data: &'a ProblemData, x: Point, t: f64, params: &SolverParams) -> Self {
        let node_len = t / params.nodes as f64;
        let substeps = (node_len / params.dt - 1e-9).ceil().max(1.0);
        Self { data, x, t, nodes: params.nodes, dt: node_len / substeps }
    }

    fn path(&self, z: &[f64]) -> Result<ReflectedPath> {
        let node_len = self.t / self.nodes as f64;
        let last = self.nodes - 1;
        let control = |s: f64| {
            let i = ((s / node_len) + 1e-9).floor().max(0.0) as usize;
            let i = i.min(last);
            Vector::new(z[2 * i], z[2 * i + 1])
        };
        skorokhod::integrate(&self.data.dom, self.x, control, self.dt, self.t)
    }

    fn action(&self, z: &[f64]) -> Result<f64> {
        action_value(self.data, &self.path(z)?)
    }
}

fn clamp_speeds(z: &mut [f64], v_max: f64) {
    for pair in z.chunks_mut(2) {
        let n = pair[0].hypot(pair[1]);
        if n > v_max {
            pair[0] *= v_max / n;
            pair[1] *= v_max / n;
        }
    }
}

/// Initial controls: zero, characteristic ("straight to the left" for `u0 = x1 + c`),
/// then smooth random perturbations of the characteristic control.
fn initial_controls(data: &ProblemData, x: &Point, params: &SolverParams) -> Vec<Vec<f64>> {
    let n = params.nodes;
    let mut characteristic = -data.model.grad_p(x, &data.u0.gradient(x));
    if characteristic.norm() < 1e-12 {
        characteristic = Vector::new(-1.0, 0.0);
    }
    let scale = characteristic.norm().max(1.0);
    (0..params.restarts)
        .map(|r| {
            let mut z = vec![0.0; 2 * n];
            if r == 0 {
                return z;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(r as u64)));
            let coeffs: Vec<Vector> = if r == 1 {
                vec![Vector::zeros(); 3]
            } else {
                (0..3)
                    .map(|_| Vector::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale)
                    .collect()
            };
            for i in 0..n {
                let s = (i as f64 + 0.5) / n as f64;
                let w = characteristic
                    + coeffs[0]
                    + coeffs[1] * (std::f64::consts::PI * s).cos()
                    + coeffs[2] * (std::f64::consts::PI * s).sin();
                z[2 * i] = w.x;
                z[2 * i + 1] = w.y;
            }
            clamp_speeds(&mut z, params.v_max);
            z
        })
        .collect()
}

/// Estimate `u(x,t)` by multistart direct transcription.
pub fn minimize_value(data: &ProblemData, x: Point, t: f64, params: &SolverParams) -> Result<ValueEstimate> {
    params.validate()?;
    if !(t > 0.0) {
        return Err(LabError::DomainError(format!("horizon must be positive, got {t}")));
    }
    if data.dom.signed_distance(&x) > FEASIBILITY_TOL {
        return Err(LabError::Infeasible { x: x.x, y: x.y });
    }
    let problem = Transcription::new(data, x, t, params);
    let zero = vec![0.0; 2 * params.nodes];
    let zero_control_action = problem.action(&zero)?;
    let opts = BfgsOptions {
        max_iterations: params.max_iterations,
        fd_step: params.fd_step,
        tolerance: params.tolerance,
        initial_inverse_scale: params.nodes as f64 / (t * data.model.alpha1()),
    };
    let v_max = params.v_max;
    let outcomes: Vec<Result<quasi_newton::BfgsOutcome>> = initial_controls(data, &x, params)
        .into_par_iter()
        .map(|z0| quasi_newton::minimize(|z| problem.action(z), |z| clamp_speeds(z, v_max), z0, opts))
        .collect();

    let mut restart_values = Vec::with_capacity(outcomes.len());
    let mut best: Option<(usize, quasi_newton::BfgsOutcome)> = None;
    let mut first_error = None;
    for (r, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(o) => {
                restart_values.push(o.value);
                if best.as_ref().is_none_or(|(_, b)| o.value < b.value) {
                    best = Some((r, o));
                }
            }
            Err(e) => {
                restart_values.push(f64::INFINITY);
                first_error.get_or_insert(e);
            }
        }
    }
    let Some((best_restart, outcome)) = best else {
        return Err(first_error.expect("at least one restart"));
    };
    let path = momentum(data, &problem.path(&outcome.x)?)?;
    let value = action_value(data, &path)?;
    let mut warnings = Vec::new();
    if value >= zero_control_action {
        warnings.push(SolverWarning::NonDecrease);
    }
    Ok(ValueEstimate {
        value,
        path,
        restarts_used: restart_values.len(),
        final_gradient_norm: outcome.grad_norm,
        action_history: outcome.history,
        restart_values,
        best_restart,
        zero_control_action,
        warnings,
    })
}

/// Fill the generalised momentum `p = D_vL(η, −v)` and its tangential part.
pub fn momentum(data: &ProblemData, path: &ReflectedPath) -> Result<ReflectedPath> {
    let mut out = path.clone();
    let mut p = Vec::with_capacity(path.len());
    let mut p_bar = Vec::with_capacity(path.len());
    for k in 0..path.len() {
        let pk = grad_v_l(&data.model, &path.eta[k], &(-path.v[k]))?;
        let tangential = if path.regime[k] == Regime::Interior {
            pk
        } else {
            let nu = data.dom.outward_normal(&path.eta[k])?;
            pk - pk.dot(&nu) * nu
        };
        p.push(pk);
        p_bar.push(tangential);
    }
    out.p = Some(p);
    out.p_bar = Some(p_bar);
    Ok(out)
}

/// Dynamic-programming defect at the sample of the minimiser nearest `s_mid`.
pub fn dpp_check(data: &ProblemData, x: Point, t: f64, s_mid: f64, params: &SolverParams) -> Result<f64> {
    if !(s_mid > 0.0 && s_mid <= t) {
        return Err(LabError::DomainError(format!("need 0 < s_mid <= t, got s_mid={s_mid}, t={t}")));
    }
    let full = minimize_value(data, x, t, params)?;
    let k = full.path.index_at(s_mid);
    let partial = running_cost(data, &full.path, k)?;
    let y = full.path.eta[k];
    let rest = t - full.path.times[k];
    let inner = if rest <= 0.0 {
        data.u0.value(&y)
    } else {
        minimize_value(data, y, rest, params)?.value
    };
    Ok((full.value - (partial + inner)).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PbarReport {
    /// `max_k |p̄_{k+1} − p̄_k| / Δs`.
    pub max_increment_ratio: f64,
    /// `max_k |p_{k+1} − p_k|`.
    pub max_p_jump: f64,
    /// Time of the largest raw jump.
    pub jump_time: f64,
}

pub fn pbar_lipschitz_report(path: &ReflectedPath) -> Result<PbarReport> {
    let (Some(p), Some(p_bar)) = (&path.p, &path.p_bar) else {
        return Err(LabError::DomainError("momentum not filled".into()));
    };
    let mut report = PbarReport { max_increment_ratio: 0.0, max_p_jump: 0.0, jump_time: 0.0 };
    for k in 0..path.len().saturating_sub(1) {
        let h = path.times[k + 1] - path.times[k];
        if h > 0.0 {
            report.max_increment_ratio = report.max_increment_ratio.max((p_bar[k + 1] - p_bar[k]).norm() / h);
        }
        let jump = (p[k + 1] - p[k]).norm();
        if jump > report.max_p_jump {
            report.max_p_jump = jump;
            report.jump_time = path.times[k + 1];
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn free_linear() -> ProblemData {
        ProblemData::new(
            HamiltonianModel::Quadratic,
            DomainGeometry::free_space(),
            Datum::Zero,
            Datum::linear(Vector::new(1.0, 0.0), 2.0),
        )
    }

    #[test]
    fn straight_path_action() {
        let data = ProblemData::new(HamiltonianModel::Quadratic, DomainGeometry::free_space(), Datum::Zero, Datum::Zero);
        let path = skorokhod::integrate(&data.dom, Point::zeros(), |_| Vector::new(1.0, 0.0), 1e-2, 1.0).unwrap();
        assert_abs_diff_eq!(action_value(&data, &path).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn pinned_point_action() {
        let data = ProblemData::new(
            HamiltonianModel::Quadratic,
            DomainGeometry::unit_disk_exterior(),
            Datum::Constant { c: 1.0 },
            Datum::Zero,
        );
        let path =
            skorokhod::integrate(&data.dom, Point::new(1.0, 0.0), |_| Vector::new(-1.0, 0.0), 1e-3, 1.0).unwrap();
        assert_abs_diff_eq!(action_value(&data, &path).unwrap(), 1.5, epsilon = 5e-3);
    }

    #[test]
    fn stationary_path_action() {
        let data = ProblemData::new(
            HamiltonianModel::ScaledQuadratic,
            DomainGeometry::unit_disk_exterior(),
            Datum::Constant { c: 3.0 },
            Datum::linear(Vector::new(0.5, -1.0), 1.0),
        );
        let x = Point::new(1.5, 0.5);
        let path = skorokhod::integrate(&data.dom, x, |_| Vector::zeros(), 1e-2, 0.7).unwrap();
        let (l0, _) = legendre(&data.model, &x, &Vector::zeros()).unwrap();
        assert_abs_diff_eq!(action_value(&data, &path).unwrap(), 0.7 * l0 + data.u0.value(&x), epsilon = 1e-12);
    }

    #[test]
    fn hopf_lax_free_space() {
        let est = minimize_value(&free_linear(), Point::new(3.0, 0.0), 1.0, &SolverParams::default()).unwrap();
        assert_abs_diff_eq!(est.value, 4.5, epsilon = 1e-3);
        assert_abs_diff_eq!(est.value, action_value(&free_linear(), &est.path).unwrap(), epsilon = 1e-12);
        assert!(est.warnings.is_empty());
    }

    #[test]
    fn infeasible_start() {
        let data = ProblemData::disk_example();
        let err = minimize_value(&data, Point::new(0.5, 0.0), 1.0, &SolverParams::default()).unwrap_err();
        assert!(matches!(err, LabError::Infeasible { .. }));
    }

    #[test]
    fn momentum_examples() {
        let data = ProblemData::new(HamiltonianModel::Quadratic, DomainGeometry::free_space(), Datum::Zero, Datum::Zero);
        let path = skorokhod::integrate(&data.dom, Point::zeros(), |_| Vector::new(1.0, 0.0), 1e-2, 1.0).unwrap();
        let path = momentum(&data, &path).unwrap();
        for (p, pb) in path.p.as_ref().unwrap().iter().zip(path.p_bar.as_ref().unwrap()) {
            assert_abs_diff_eq!(*p, Vector::new(-1.0, 0.0), epsilon = 1e-12);
            assert_eq!(p, pb);
        }

        let data = ProblemData::new(
            HamiltonianModel::Quadratic,
            DomainGeometry::unit_disk_exterior(),
            Datum::Constant { c: 1.0 },
            Datum::Zero,
        );
        let path =
            skorokhod::integrate(&data.dom, Point::new(1.0, 0.0), |_| Vector::new(-1.0, 0.0), 1e-3, 1.0).unwrap();
        let path = momentum(&data, &path).unwrap();
        let k = path.len() / 2;
        assert_abs_diff_eq!(path.p.as_ref().unwrap()[k], Vector::new(1.0, 0.0), epsilon = 1e-12);
        assert_abs_diff_eq!(path.p_bar.as_ref().unwrap()[k], Vector::zeros(), epsilon = 1e-12);
    }

    #[test]
    fn half_plane_slide_momentum() {
        let data = ProblemData::new(
            HamiltonianModel::Quadratic,
            DomainGeometry::upper_half_plane(),
            Datum::Constant { c: -1.0 },
            Datum::linear(Vector::new(-1.0, 0.0), 0.0),
        );
        let path = skorokhod::integrate(&data.dom, Point::new(0.0, 1.0), |_| Vector::new(1.0, -1.0), 1e-3, 2.0).unwrap();
        let path = momentum(&data, &path).unwrap();
        let k = path.index_at(1.5);
        assert_eq!(path.regime[k], Regime::BoundarySlideLPos);
        assert_abs_diff_eq!(path.p.as_ref().unwrap()[k], Vector::new(-1.0, 1.0), epsilon = 1e-12);
        assert_abs_diff_eq!(path.p_bar.as_ref().unwrap()[k], Vector::new(-1.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn dpp_degenerate_midpoint_is_exact() {
        let params = SolverParams { restarts: 2, ..Default::default() };
        let defect = dpp_check(&free_linear(), Point::new(3.0, 0.0), 1.0, 1.0, &params).unwrap();
        assert!(defect <= 1e-12, "{defect}");
    }

    #[test]
    fn pbar_report_smooth_interior() {
        let data = ProblemData::new(HamiltonianModel::Quadratic, DomainGeometry::free_space(), Datum::Zero, Datum::Zero);
        let path = skorokhod::integrate(&data.dom, Point::zeros(), |s| Vector::new(s.cos(), s.sin()), 1e-3, 1.0).unwrap();
        let report = pbar_lipschitz_report(&momentum(&data, &path).unwrap()).unwrap();
        // |dv/ds| = 1
        assert_abs_diff_eq!(report.max_increment_ratio, 1.0, epsilon = 1e-3);
        assert!(report.max_p_jump < 2e-3);
    }

    #[test]
    fn record_lists_diagnostics() {
        let params = SolverParams { restarts: 2, ..Default::default() };
        let est = minimize_value(&free_linear(), Point::new(3.0, 0.0), 1.0, &params).unwrap();
        let record = est.to_record(Some("path.txt"));
        let parsed: toml::Table = record.parse().unwrap();
        assert_eq!(parsed["restarts_used"].as_integer(), Some(2));
        assert_eq!(parsed["path_file"].as_str(), Some("path.txt"));
    }
}
