//! Discrete Skorokhod problem: reflected trajectories driven by a control.
//!
//! Each step takes the free predictor `y = η_k + Δs·v_k`; if it leaves the
//! closed domain it is projected back and the expelled normal distance per unit
//! time is recorded as the reflection density `l_k`.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{LabError, Result};
use crate::geometry::DomainGeometry;
use crate::{Point, Vector};

/// Regime of a path sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Interior,
    /// On the boundary with active reflection (`l > 0`).
    BoundarySlideLPos,
    /// On the boundary without reflection (`l = 0`).
    BoundaryLZero,
}

impl Regime {
    pub fn is_boundary(self) -> bool {
        !matches!(self, Regime::Interior)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Interior => "interior",
            Regime::BoundarySlideLPos => "slide",
            Regime::BoundaryLZero => "boundary",
        }
    }
}

impl FromStr for Regime {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interior" => Ok(Regime::Interior),
            "slide" => Ok(Regime::BoundarySlideLPos),
            "boundary" => Ok(Regime::BoundaryLZero),
            other => Err(LabError::Config(format!("unknown regime label `{other}`"))),
        }
    }
}

/// A sampled reflected trajectory.
///
/// `v[k]` and `l[k]` hold the control and reflection density on `[s_k, s_{k+1})`;
/// the final entry repeats the last interval so that every column has one entry
/// per sample.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReflectedPath {
    pub times: Vec<f64>,
    pub eta: Vec<Point>,
    pub v: Vec<Vector>,
    pub l: Vec<f64>,
    pub p: Option<Vec<Vector>>,
    pub p_bar: Option<Vec<Vector>>,
    pub regime: Vec<Regime>,
}

impl ReflectedPath {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn endpoint(&self) -> Point {
        *self.eta.last().expect("non-empty path")
    }

    /// Step sizes `s_{k+1} - s_k`.
    pub fn steps(&self) -> impl Iterator<Item = f64> + '_ {
        self.times.windows(2).map(|w| w[1] - w[0])
    }

    /// Index of the sample closest to time `s`.
    pub fn index_at(&self, s: f64) -> usize {
        let mut best = 0;
        for (k, t) in self.times.iter().enumerate() {
            if (t - s).abs() < (self.times[best] - s).abs() {
                best = k;
            }
        }
        best
    }

    pub fn max_speed(&self) -> f64 {
        self.v.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Columnar text: `s eta_1 eta_2 v_1 v_2 l regime`.
    pub fn to_columns(&self) -> String {
        let mut out = String::from("# s eta_1 eta_2 v_1 v_2 l regime\n");
        for k in 0..self.len() {
            let _ = writeln!(
                out,
                "{} {} {} {} {} {} {}",
                self.times[k],
                self.eta[k].x,
                self.eta[k].y,
                self.v[k].x,
                self.v[k].y,
                self.l[k],
                self.regime[k].as_str()
            );
        }
        out
    }

    pub fn from_columns(text: &str) -> Result<Self> {
        let mut path = ReflectedPath::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 7 {
                return Err(LabError::Config(format!("expected 7 columns, found {}", cols.len())));
            }
            let num = |i: usize| -> Result<f64> {
                cols[i].parse::<f64>().map_err(|e| LabError::Config(format!("column {i}: {e}")))
            };
            path.times.push(num(0)?);
            path.eta.push(Point::new(num(1)?, num(2)?));
            path.v.push(Vector::new(num(3)?, num(4)?));
            path.l.push(num(5)?);
            path.regime.push(cols[6].parse()?);
        }
        Ok(path)
    }
}

/// Tolerances of the discrete scheme.
pub const FEASIBILITY_TOL: f64 = 1e-10;

/// Integrate the Skorokhod problem from `x0` under `control` with step `dt` up to `horizon`.
///
/// The last step is shortened when `horizon` is not a multiple of `dt`.
pub fn integrate<F>(dom: &DomainGeometry, x0: Point, control: F, dt: f64, horizon: f64) -> Result<ReflectedPath>
where
    F: Fn(f64) -> Vector,
{
    if !(dt > 0.0) || !(horizon >= 0.0) {
        return Err(LabError::DomainError(format!("need dt > 0 and T >= 0, got dt={dt}, T={horizon}")));
    }
    if dom.signed_distance(&x0) > FEASIBILITY_TOL {
        return Err(LabError::Infeasible { x: x0.x, y: x0.y });
    }
    let steps = ((horizon / dt) - 1e-9).ceil().max(0.0) as usize;
    let mut path = ReflectedPath {
        times: Vec::with_capacity(steps + 1),
        eta: Vec::with_capacity(steps + 1),
        v: Vec::with_capacity(steps + 1),
        l: Vec::with_capacity(steps + 1),
        ..Default::default()
    };
    let mut eta = x0;
    let mut s = 0.0;
    path.times.push(0.0);
    path.eta.push(eta);
    for k in 0..steps {
        let h = if k + 1 == steps { horizon - s } else { dt };
        let v = control(s);
        let y = eta + h * v;
        let b = dom.signed_distance(&y);
        let l = if b <= 0.0 {
            eta = y;
            0.0
        } else {
            if b >= dom.tube_radius {
                return Err(LabError::LeftTube { s, distance: b });
            }
            eta = dom.project(&y)?;
            b / h
        };
        path.v.push(v);
        path.l.push(l);
        s = if k + 1 == steps { horizon } else { (k + 1) as f64 * dt };
        path.times.push(s);
        path.eta.push(eta);
    }
    let last_v = path.v.last().copied().unwrap_or_else(|| control(0.0));
    let last_l = path.l.last().copied().unwrap_or(0.0);
    path.v.push(last_v);
    path.l.push(last_l);
    label_regimes(dom, &mut path, dt);
    Ok(path)
}

/// Width of the band around `∂Ω` in which samples count as boundary samples.
pub fn boundary_band(dt: f64, max_speed: f64) -> f64 {
    2.0 * dt * max_speed
}

/// Reflection densities below this are treated as zero when labelling.
pub const L_TOL: f64 = 1e-9;

fn label_regimes(dom: &DomainGeometry, path: &mut ReflectedPath, dt: f64) {
    let band = boundary_band(dt, path.max_speed());
    path.regime = (0..path.len())
        .map(|k| {
            let b = dom.signed_distance(&path.eta[k]);
            if b < -band {
                Regime::Interior
            } else if path.l[k] > L_TOL {
                Regime::BoundarySlideLPos
            } else {
                Regime::BoundaryLZero
            }
        })
        .collect();
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkorokhodResiduals {
    pub max_feasibility: f64,
    pub min_l: f64,
    /// `max |(η_{k+1}-η_k)/Δs + l_k ν(η_k) - v_k|`, `ν` taken only inside the tube.
    pub max_consistency: f64,
    /// `Σ l_k Δs` over samples deeper than the boundary band.
    pub complementarity: f64,
    /// `max_consistency / Δs_max`.
    pub consistency_constant: f64,
}

pub fn residuals(dom: &DomainGeometry, path: &ReflectedPath) -> Result<SkorokhodResiduals> {
    if path.is_empty() {
        return Err(LabError::DomainError("empty path".into()));
    }
    let dt_max = path.steps().fold(0.0, f64::max);
    let band = boundary_band(dt_max, path.max_speed());
    let mut max_feas = f64::NEG_INFINITY;
    for x in &path.eta {
        max_feas = max_feas.max(dom.signed_distance(x));
    }
    let min_l = path.l.iter().copied().fold(f64::INFINITY, f64::min);
    let mut max_cons: f64 = 0.0;
    let mut compl = 0.0;
    for k in 0..path.len().saturating_sub(1) {
        let h = path.times[k + 1] - path.times[k];
        let b = dom.signed_distance(&path.eta[k]);
        let mut defect = (path.eta[k + 1] - path.eta[k]) / h - path.v[k];
        if b.abs() < dom.tube_radius {
            defect += path.l[k] * dom.outward_normal(&path.eta[k])?;
        }
        max_cons = max_cons.max(defect.norm());
        if b < -band {
            compl += path.l[k] * h;
        }
    }
    Ok(SkorokhodResiduals {
        max_feasibility: max_feas,
        min_l,
        max_consistency: max_cons,
        complementarity: compl,
        consistency_constant: if dt_max > 0.0 { max_cons / dt_max } else { 0.0 },
    })
}
