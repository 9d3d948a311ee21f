//! Reflected Hamiltonian dynamics.
//!
//! Three vector fields share one integrator:
//!
//! * interior: `η̇ = −D_pH`, `ṗ = D_xH`;
//! * sliding with active reflection (`l > 0`): the normal momentum is pinned to
//!   `p·ν = g` and `η̇` is the tangential part of `−D_pH`;
//! * sliding without reflection (`l = 0`): `η̇ = −D_pH` stays tangent because a
//!   normal force `μν` keeps `D_pH·ν = 0`.
//!
//! Steps are explicit midpoint (RK2). Boundary states are projected back to
//! `∂Ω` after every step and the momentum constraint of the regime is restored.

use crate::action::{self, ProblemData, SolverParams};
use crate::error::{LabError, Result};
use crate::hamiltonian::Hamiltonian;
use crate::skorokhod::{Regime, ReflectedPath, FEASIBILITY_TOL};
use crate::{Point, Vector};

pub const DEFAULT_EPS_L: f64 = 1e-6;
pub const DEFAULT_MAX_SWITCHES: usize = 1000;

/// Time resolution of the boundary-hitting event search.
const EVENT_TOL: f64 = 1e-10;
/// Distance to `∂Ω` under which a starting point counts as a boundary point.
const ON_BOUNDARY: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowState {
    pub eta: Point,
    pub p: Vector,
    pub regime: Regime,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub eps_l: f64,
    pub max_switches: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { eps_l: DEFAULT_EPS_L, max_switches: DEFAULT_MAX_SWITCHES }
    }
}

struct Dynamics<'a> {
    data: &'a ProblemData,
}

impl Dynamics<'_> {
    fn field(&self, regime: Regime, eta: &Point, p: &Vector) -> Result<(Vector, Vector)> {
        let h = &self.data.model;
        let hp = h.grad_p(eta, p);
        let hx = h.grad_x(eta, p);
        match regime {
            Regime::Interior => Ok((-hp, hx)),
            Regime::BoundarySlideLPos => {
                let dom = &self.data.dom;
                let nu = dom.outward_normal(eta)?;
                let dnu = dom.hessian_signed_distance(eta)?;
                let dg = self.data.g.gradient(eta);
                let a = hp.dot(&nu);
                let eta_dot = -hp + a * nu;
                let p_dot = hx - a * (dnu * p) + a * dg - (hx.dot(&nu) - (dnu * hp).dot(p) + dg.dot(&hp)) * nu;
                Ok((eta_dot, p_dot))
            }
            Regime::BoundaryLZero => {
                let dom = &self.data.dom;
                let nu = dom.outward_normal(eta)?;
                let dnu = dom.hessian_signed_distance(eta)?;
                let hpp = h.hess_pp(eta, p);
                let hpx = h.hess_px(eta, p);
                let p_dot_tau = hx - hx.dot(&nu) * nu;
                let mu = ((hpx * hp).dot(&nu) - (hpp * p_dot_tau).dot(&nu) + hp.dot(&(dnu * hp))) / (hpp * nu).dot(&nu);
                Ok((-hp, p_dot_tau + mu * nu))
            }
        }
    }

    fn rk2(&self, regime: Regime, eta: &Point, p: &Vector, h: f64) -> Result<(Point, Vector)> {
        let (e1, p1) = self.field(regime, eta, p)?;
        let mid_eta = eta + 0.5 * h * e1;
        let mid_p = p + 0.5 * h * p1;
        // the midpoint of a boundary step may sit slightly off ∂Ω; the normal is
        // still defined inside the tube
        let (e2, p2) = self.field(regime, &mid_eta, &mid_p)?;
        Ok((eta + h * e2, p + h * p2))
    }

    /// `l̂ = −D_pH(η,p)·ν(η)`.
    fn l_hat(&self, eta: &Point, p: &Vector) -> Result<f64> {
        let nu = self.data.dom.outward_normal(eta)?;
        Ok(-self.data.model.grad_p(eta, p).dot(&nu))
    }

    fn reset_normal_momentum(&self, eta: &Point, p: &Vector) -> Result<Vector> {
        let nu = self.data.dom.outward_normal(eta)?;
        Ok(p - (p.dot(&nu) - self.data.g.value(eta)) * nu)
    }

    /// Replace the normal component of `p` by the root `q` of `D_pH(η, p_τ + qν)·ν = 0`.
    fn tangency_momentum(&self, eta: &Point, p: &Vector, s: f64) -> Result<Vector> {
        let h = &self.data.model;
        let nu = self.data.dom.outward_normal(eta)?;
        let p_tau = p - p.dot(&nu) * nu;
        let mut q = p.dot(&nu);
        for _ in 0..50 {
            let trial = p_tau + q * nu;
            let phi = h.grad_p(eta, &trial).dot(&nu);
            if phi.abs() <= 1e-13 {
                return Ok(trial);
            }
            let dphi = (h.hess_pp(eta, &trial) * nu).dot(&nu);
            if !(dphi > 0.0) {
                break;
            }
            q -= phi / dphi;
        }
        let trial = p_tau + q * nu;
        if h.grad_p(eta, &trial).dot(&nu).abs() <= 1e-10 {
            Ok(trial)
        } else {
            Err(LabError::NewtonFailure { s })
        }
    }

    /// Regime and constraint-consistent momentum for a state on `∂Ω`.
    fn enter_boundary(&self, eta: &Point, p: &Vector, s: f64, eps_l: f64) -> Result<(Regime, Vector)> {
        let l_hat = self.l_hat(eta, p)?;
        if l_hat > eps_l {
            Ok((Regime::BoundarySlideLPos, self.reset_normal_momentum(eta, p)?))
        } else if l_hat < -eps_l {
            Ok((Regime::Interior, *p))
        } else {
            Ok((Regime::BoundaryLZero, self.tangency_momentum(eta, p, s)?))
        }
    }
}

fn push(path: &mut ReflectedPath, data: &ProblemData, state: &FlowState) -> Result<()> {
    let hp = data.model.grad_p(&state.eta, &state.p);
    let (l, p_bar) = if state.regime.is_boundary() {
        let nu = data.dom.outward_normal(&state.eta)?;
        let l = if state.regime == Regime::BoundarySlideLPos { (-hp.dot(&nu)).max(0.0) } else { 0.0 };
        (l, state.p - state.p.dot(&nu) * nu)
    } else {
        (0.0, state.p)
    };
    path.times.push(state.s);
    path.eta.push(state.eta);
    path.v.push(-hp);
    path.l.push(l);
    path.regime.push(state.regime);
    path.p.get_or_insert_with(Vec::new).push(state.p);
    path.p_bar.get_or_insert_with(Vec::new).push(p_bar);
    Ok(())
}

/// Integrate the reflected Hamiltonian system from `(x0, p0)` on `[0, horizon]`.
pub fn flow(data: &ProblemData, x0: Point, p0: Vector, dt: f64, horizon: f64, eps_l: f64) -> Result<ReflectedPath> {
    flow_with(data, x0, p0, dt, horizon, FlowOptions { eps_l, ..Default::default() })
}

pub fn flow_with(
    data: &ProblemData,
    x0: Point,
    p0: Vector,
    dt: f64,
    horizon: f64,
    opts: FlowOptions,
) -> Result<ReflectedPath> {
    if !(dt > 0.0) || !(horizon >= 0.0) || !(opts.eps_l >= 0.0) {
        return Err(LabError::DomainError(format!("need dt > 0, T >= 0, eps_l >= 0; got {dt}, {horizon}, {}", opts.eps_l)));
    }
    let dom = &data.dom;
    let b0 = dom.signed_distance(&x0);
    if b0 > FEASIBILITY_TOL {
        return Err(LabError::Infeasible { x: x0.x, y: x0.y });
    }
    let dyn_ = Dynamics { data };
    let mut state = FlowState { eta: x0, p: p0, regime: Regime::Interior, s: 0.0 };
    if b0 > -ON_BOUNDARY {
        state.eta = dom.project_to_boundary(&x0)?;
        let (regime, p) = dyn_.enter_boundary(&state.eta, &p0, 0.0, opts.eps_l)?;
        if regime.is_boundary() {
            state.regime = regime;
            state.p = p;
        } else {
            state.eta = x0;
        }
    }
    let mut path = ReflectedPath::default();
    push(&mut path, data, &state)?;
    let mut switches = 0usize;
    let mut switch_to = |state: &mut FlowState, regime: Regime| -> Result<()> {
        if regime != state.regime {
            switches += 1;
            if switches > opts.max_switches {
                return Err(LabError::RegimeChatter { max: opts.max_switches });
            }
            state.regime = regime;
        }
        Ok(())
    };

    while state.s < horizon - 1e-12 {
        let h = dt.min(horizon - state.s);
        match state.regime {
            Regime::Interior => {
                let (eta, p) = dyn_.rk2(Regime::Interior, &state.eta, &state.p, h)?;
                if dom.signed_distance(&eta) <= 0.0 {
                    state.eta = eta;
                    state.p = p;
                    state.s += h;
                } else {
                    // bisect for the first crossing of ∂Ω inside the step
                    let (mut lo, mut hi) = (0.0, h);
                    while hi - lo > EVENT_TOL {
                        let mid = 0.5 * (lo + hi);
                        let (e, _) = dyn_.rk2(Regime::Interior, &state.eta, &state.p, mid)?;
                        if dom.signed_distance(&e) > 0.0 {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    let (e, p) = dyn_.rk2(Regime::Interior, &state.eta, &state.p, hi)?;
                    let eta = dom.project_to_boundary(&e)?;
                    let s = state.s + hi;
                    let (regime, p) = dyn_.enter_boundary(&eta, &p, s, opts.eps_l)?;
                    // an inward l̂ right at the crossing means a graze; keep going
                    state.eta = eta;
                    state.p = p;
                    state.s = s;
                    switch_to(&mut state, regime)?;
                }
            }
            Regime::BoundarySlideLPos => {
                let (e, p) = dyn_.rk2(Regime::BoundarySlideLPos, &state.eta, &state.p, h)?;
                let eta = dom.project_to_boundary(&e)?;
                let p = dyn_.reset_normal_momentum(&eta, &p)?;
                state.s += h;
                state.eta = eta;
                let l_hat = dyn_.l_hat(&eta, &p)?;
                if l_hat < -opts.eps_l {
                    state.p = p;
                    switch_to(&mut state, Regime::Interior)?;
                } else if l_hat <= opts.eps_l {
                    state.p = dyn_.tangency_momentum(&eta, &p, state.s)?;
                    switch_to(&mut state, Regime::BoundaryLZero)?;
                } else {
                    state.p = p;
                }
            }
            Regime::BoundaryLZero => {
                let (e, p) = dyn_.rk2(Regime::BoundaryLZero, &state.eta, &state.p, h)?;
                let eta = dom.project_to_boundary(&e)?;
                state.s += h;
                state.eta = eta;
                let l_hat = dyn_.l_hat(&eta, &p)?;
                if l_hat > opts.eps_l {
                    state.p = dyn_.reset_normal_momentum(&eta, &p)?;
                    switch_to(&mut state, Regime::BoundarySlideLPos)?;
                } else if l_hat < -opts.eps_l {
                    state.p = p;
                    switch_to(&mut state, Regime::Interior)?;
                } else {
                    state.p = dyn_.tangency_momentum(&eta, &p, state.s)?;
                }
            }
        }
        push(&mut path, data, &state)?;
    }
    Ok(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModeDiagnostics {
    /// `max |p·ν − g|` over samples with active reflection.
    pub momentum_constraint: f64,
    /// `max |ν·η̇|` over boundary samples.
    pub tangency: f64,
    /// `max |l + D_pH·ν|` over boundary samples.
    pub l_identity: f64,
}

pub fn mode_diagnostics(data: &ProblemData, path: &ReflectedPath) -> Result<ModeDiagnostics> {
    let mut out = ModeDiagnostics::default();
    let n = path.len();
    for k in 0..n {
        if !path.regime[k].is_boundary() {
            continue;
        }
        let eta = path.eta[k];
        let nu = data.dom.outward_normal(&eta)?;
        if let Some(p) = &path.p {
            let hp = data.model.grad_p(&eta, &p[k]);
            out.l_identity = out.l_identity.max((path.l[k] + hp.dot(&nu)).abs());
            if path.regime[k] == Regime::BoundarySlideLPos {
                out.momentum_constraint = out.momentum_constraint.max((p[k].dot(&nu) - data.g.value(&eta)).abs());
            }
        }
        // centred differences only where both neighbours share the boundary regime
        if k > 0 && k + 1 < n && path.regime[k - 1].is_boundary() && path.regime[k + 1].is_boundary() {
            let span = path.times[k + 1] - path.times[k - 1];
            if span > 0.0 {
                let eta_dot = (path.eta[k + 1] - path.eta[k - 1]) / span;
                out.tangency = out.tangency.max(nu.dot(&eta_dot).abs());
            }
        }
    }
    Ok(out)
}

/// Linear interpolation of `η` at time `s`.
pub fn eta_at(path: &ReflectedPath, s: f64) -> Point {
    let k = path.times.partition_point(|&t| t <= s);
    if k == 0 {
        return path.eta[0];
    }
    if k >= path.len() {
        return path.endpoint();
    }
    let (t0, t1) = (path.times[k - 1], path.times[k]);
    let w = if t1 > t0 { (s - t0) / (t1 - t0) } else { 0.0 };
    path.eta[k - 1] + w * (path.eta[k] - path.eta[k - 1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizerComparison {
    pub sup_path_distance: f64,
    pub momentum_distance: f64,
}

/// Run the flow from the minimiser's initial tangential momentum and compare paths.
pub fn compare_with_minimizer(data: &ProblemData, x: Point, t: f64, params: &SolverParams) -> Result<MinimizerComparison> {
    let est = action::minimize_value(data, x, t, params)?;
    let min_path = &est.path;
    let p_bar0 = min_path.p_bar.as_ref().expect("momentum filled by minimize_value")[0];
    let dt = min_path.times.get(1).copied().unwrap_or(t).max(1e-12);
    let flowed = flow(data, x, p_bar0, dt, t, DEFAULT_EPS_L)?;
    let sup_path_distance = min_path
        .times
        .iter()
        .zip(&min_path.eta)
        .map(|(&s, eta)| (eta_at(&flowed, s) - eta).norm())
        .fold(0.0, f64::max);
    let p_flow0 = flowed.p_bar.as_ref().expect("flow fills momentum")[0];
    Ok(MinimizerComparison { sup_path_distance, momentum_distance: (p_flow0 - p_bar0).norm() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::Datum;
    use crate::geometry::DomainGeometry;
    use crate::hamiltonian::HamiltonianModel;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn disk(model: HamiltonianModel) -> ProblemData {
        ProblemData::new(model, DomainGeometry::unit_disk_exterior(), Datum::Zero, Datum::Zero)
    }

    fn sticky() -> ProblemData {
        ProblemData::new(
            HamiltonianModel::Quadratic,
            DomainGeometry::upper_half_plane(),
            Datum::Constant { c: -1.0 },
            Datum::Zero,
        )
    }

    #[test]
    fn interior_straight_line() {
        let data = disk(HamiltonianModel::Quadratic);
        let path = flow(&data, Point::new(3.0, 0.0), Vector::new(0.0, 1.0), 1e-3, 1.0, DEFAULT_EPS_L).unwrap();
        assert_abs_diff_eq!(path.endpoint(), Point::new(3.0, -1.0), epsilon = 2e-3);
        assert!(path.p.unwrap().iter().all(|p| *p == Vector::new(0.0, 1.0)));
        assert!(path.regime.iter().all(|r| *r == Regime::Interior));
    }

    #[test]
    fn geodesic_slide() {
        let data = disk(HamiltonianModel::Quadratic);
        let path = flow(&data, Point::new(1.0, 0.0), Vector::new(0.0, -1.0), 1e-3, FRAC_PI_2, DEFAULT_EPS_L).unwrap();
        assert_abs_diff_eq!(path.endpoint(), Point::new(0.0, 1.0), epsilon = 5e-3);
        let p = path.p.as_ref().unwrap();
        assert_abs_diff_eq!(*p.last().unwrap(), Vector::new(1.0, 0.0), epsilon = 5e-3);
        for (k, s) in path.times.iter().enumerate() {
            assert_eq!(path.regime[k], Regime::BoundaryLZero);
            assert!((p[k].norm() - 1.0).abs() <= 5e-3);
            assert_abs_diff_eq!(path.eta[k], Point::new(s.cos(), s.sin()), epsilon = 5e-3);
            assert!(data.model.grad_p(&path.eta[k], &p[k]).dot(&data.dom.outward_normal(&path.eta[k]).unwrap()).abs() <= 1e-6);
        }
        let diag = mode_diagnostics(&data, &path).unwrap();
        assert!(diag.tangency <= 1e-2 && diag.l_identity <= 1e-2, "{diag:?}");
    }

    #[test]
    fn sticky_slide() {
        let data = sticky();
        let path = flow(&data, Point::zeros(), Vector::new(1.0, 1.0), 1e-3, 1.0, DEFAULT_EPS_L).unwrap();
        for (k, s) in path.times.iter().enumerate() {
            assert_eq!(path.regime[k], Regime::BoundarySlideLPos);
            assert_abs_diff_eq!(path.eta[k], Point::new(-s, 0.0), epsilon = 1e-8);
            assert_abs_diff_eq!(path.p.as_ref().unwrap()[k], Vector::new(1.0, 1.0), epsilon = 1e-8);
            assert_abs_diff_eq!(path.l[k], 1.0, epsilon = 1e-8);
        }
        let diag = mode_diagnostics(&data, &path).unwrap();
        assert!(diag.momentum_constraint <= 1e-8 && diag.tangency <= 1e-8 && diag.l_identity <= 1e-8, "{diag:?}");
    }

    #[test]
    fn interior_path_has_vacuous_diagnostics() {
        let data = disk(HamiltonianModel::Quadratic);
        let path = flow(&data, Point::new(3.0, 0.0), Vector::new(-1.0, 0.0), 1e-3, 1.0, DEFAULT_EPS_L).unwrap();
        assert_eq!(mode_diagnostics(&data, &path).unwrap(), ModeDiagnostics::default());
    }

    #[test]
    fn hitting_the_half_plane_enters_slide() {
        // descend onto {x2 = 0} with momentum whose normal part exceeds g
        let data = sticky();
        let path = flow(&data, Point::new(0.0, 1.0), Vector::new(-1.0, 1.0), 1e-3, 2.0, DEFAULT_EPS_L).unwrap();
        let k = path.index_at(1.5);
        assert_eq!(path.regime[k], Regime::BoundarySlideLPos);
        let diag = mode_diagnostics(&data, &path).unwrap();
        assert!(diag.momentum_constraint <= 1e-8, "{diag:?}");
        assert_abs_diff_eq!(path.endpoint(), Point::new(2.0, 0.0), epsilon = 1e-8);
    }

    #[test]
    fn energy_conservation_in_the_interior() {
        let data = ProblemData::new(
            HamiltonianModel::DriftQuadratic(crate::hamiltonian::Drift::Swirl { center: Point::new(0.0, 0.0), strength: 0.5 }),
            DomainGeometry::free_space(),
            Datum::Zero,
            Datum::Zero,
        );
        let dt = 1e-2;
        let (x0, p0) = (Point::new(1.0, 0.5), Vector::new(0.3, -0.7));
        let path = flow(&data, x0, p0, dt, 2.0, DEFAULT_EPS_L).unwrap();
        let h0 = data.model.value(&x0, &p0);
        for (eta, p) in path.eta.iter().zip(path.p.as_ref().unwrap()) {
            assert!((data.model.value(eta, p) - h0).abs() <= 10.0 * dt * dt * 2.0);
        }
    }

    #[test]
    fn chatter_limit() {
        let data = sticky();
        let opts = FlowOptions { eps_l: DEFAULT_EPS_L, max_switches: 0 };
        let err = flow_with(&data, Point::new(0.0, 1.0), Vector::new(-1.0, 1.0), 1e-3, 2.0, opts).unwrap_err();
        assert_eq!(err, LabError::RegimeChatter { max: 0 });
    }

    #[test]
    fn infeasible_start() {
        let data = disk(HamiltonianModel::Quadratic);
        assert!(matches!(
            flow(&data, Point::new(0.5, 0.0), Vector::zeros(), 1e-3, 1.0, DEFAULT_EPS_L),
            Err(LabError::Infeasible { .. })
        ));
    }

    #[test]
    fn minimizer_comparison_free_space() {
        let data = ProblemData::new(
            HamiltonianModel::Quadratic,
            DomainGeometry::free_space(),
            Datum::Zero,
            Datum::linear(Vector::new(1.0, 0.0), 2.0),
        );
        let params = SolverParams { restarts: 2, ..Default::default() };
        let cmp = compare_with_minimizer(&data, Point::new(3.0, 0.0), 1.0, &params).unwrap();
        assert!(cmp.sup_path_distance <= 1e-2, "{cmp:?}");
        assert_eq!(cmp.momentum_distance, 0.0);
    }
}
