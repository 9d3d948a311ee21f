//! Semiconcavity probes: second differences of a value function, power-law fits
//! of their decay, and PDE residuals at smooth points.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::action::{minimize_value, Datum, ProblemData, SolverParams};
use crate::error::{LabError, Result};
use crate::geodesic::{disk_solution, LeftwardField};
use crate::geometry::{Disk, DomainGeometry};
use crate::hamiltonian::Hamiltonian;
use crate::{Point, Vector};

/// Anything that can be asked for `u(x,t)`.
pub trait ValueSource: Sync {
    fn value(&self, x: &Point, t: f64) -> Result<f64>;
}

impl<F> ValueSource for F
where
    F: Fn(&Point, f64) -> Result<f64> + Sync,
{
    fn value(&self, x: &Point, t: f64) -> Result<f64> {
        self(x, t)
    }
}

/// The explicit exterior-unit-disk solution.
#[derive(Debug, Clone, Copy, Default)]
pub struct DiskOracle;

impl ValueSource for DiskOracle {
    fn value(&self, x: &Point, t: f64) -> Result<f64> {
        let r = x.norm();
        if r < 1.0 - 1e-12 {
            return Err(LabError::Infeasible { x: x.x, y: x.y });
        }
        Ok(disk_solution(r.max(1.0), x.y.atan2(x.x), t))
    }
}

/// `u = 2 − t + ℓ(x)` for an arbitrary set of disks.
#[derive(Debug, Clone)]
pub struct PotentialOracle {
    pub field: LeftwardField,
}

impl PotentialOracle {
    pub fn new(disks: &[Disk]) -> Result<Self> {
        Ok(Self { field: LeftwardField::new(disks)? })
    }
}

impl ValueSource for PotentialOracle {
    fn value(&self, x: &Point, t: f64) -> Result<f64> {
        Ok(2.0 - t + self.field.eval(x)?)
    }
}

/// Values from the variational solver.
#[derive(Debug, Clone)]
pub struct SolverSource {
    pub data: ProblemData,
    pub params: SolverParams,
}

impl ValueSource for SolverSource {
    fn value(&self, x: &Point, t: f64) -> Result<f64> {
        Ok(minimize_value(&self.data, *x, t, &self.params)?.value)
    }
}

/// `u(x+he, t+σ) + u(x−he, t−σ) − 2u(x,t)`.
pub fn second_difference<U: ValueSource + ?Sized>(u: &U, x: &Point, e: &Vector, h: f64, t: f64, sigma: f64) -> Result<f64> {
    if t - sigma <= 0.0 {
        return Err(LabError::DomainError(format!("t - sigma must be positive, got {}", t - sigma)));
    }
    Ok(u.value(&(x + h * e), t + sigma)? + u.value(&(x - h * e), t - sigma)? - 2.0 * u.value(x, t)?)
}

/// `u(x+2he) + u(x) − 2u(x+he)`, for probes that may only move to one side.
pub fn one_sided_second_difference<U: ValueSource + ?Sized>(u: &U, x: &Point, e: &Vector, h: f64, t: f64) -> Result<f64> {
    Ok(u.value(&(x + 2.0 * h * e), t)? + u.value(x, t)? - 2.0 * u.value(&(x + h * e), t)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    pub direction: Vector,
    pub h_values: Vec<f64>,
    pub d2_values: Vec<f64>,
    pub slope: Option<f64>,
    pub coefficient: Option<f64>,
    pub r_squared: Option<f64>,
    pub concave_flag: bool,
}

impl ExponentFit {
    /// A pure power law explains less than 99.9% of the log-log variance.
    pub fn poor_power_law(&self) -> bool {
        self.r_squared.is_some_and(|r2| r2 < 0.999)
    }
}

/// Least-squares fit of `log d2 = log c + a log h` over the positive samples.
pub fn fit_exponent(samples: &[(f64, f64)]) -> Result<ExponentFit> {
    fit_exponent_above(samples, 0.0)
}

/// As [`fit_exponent`], ignoring samples with `d2 ≤ floor`.
pub fn fit_exponent_above(samples: &[(f64, f64)], floor: f64) -> Result<ExponentFit> {
    if samples.len() < 5 {
        return Err(LabError::InsufficientData(format!("need at least 5 samples, got {}", samples.len())));
    }
    if samples.iter().any(|(h, _)| !(*h > 0.0)) || samples.windows(2).any(|w| w[1].0 >= w[0].0) {
        return Err(LabError::InsufficientData("h values must be positive and strictly decreasing".into()));
    }
    let decades = (samples[0].0 / samples[samples.len() - 1].0).log10();
    if decades < 1.5 - 1e-12 {
        return Err(LabError::InsufficientData(format!("h spans only {decades:.2} decades")));
    }
    let mut fit = ExponentFit {
        direction: Vector::zeros(),
        h_values: samples.iter().map(|s| s.0).collect(),
        d2_values: samples.iter().map(|s| s.1).collect(),
        slope: None,
        coefficient: None,
        r_squared: None,
        concave_flag: samples.iter().all(|s| s.1 <= 0.0),
    };
    let logs: Vec<(f64, f64)> = samples.iter().filter(|s| s.1 > floor.max(0.0)).map(|s| (s.0.ln(), s.1.ln())).collect();
    if logs.len() < 3 {
        return Ok(fit);
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|l| l.0).sum::<f64>() / n;
    let my = logs.iter().map(|l| l.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|l| (l.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|l| (l.0 - mx) * (l.1 - my)).sum();
    let syy: f64 = logs.iter().map(|l| (l.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    fit.slope = Some(slope);
    fit.coefficient = Some((my - slope * mx).exp());
    fit.r_squared = Some(if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 });
    Ok(fit)
}

/// `n` logarithmically spaced, strictly decreasing lengths from `h_max` to `h_min`.
pub fn log_spaced(h_max: f64, h_min: f64, n: usize) -> Vec<f64> {
    let (a, b) = (h_max.ln(), h_min.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1).max(1) as f64).exp()).collect()
}

/// `max |u_t + H(x, Du)|` over `points` by centred differences.
pub fn pde_residual<U, H>(u: &U, model: &H, points: &[Point], t: f64, fd_step: f64) -> Result<f64>
where
    U: ValueSource + ?Sized,
    H: Hamiltonian + ?Sized,
{
    let d = fd_step;
    let mut worst: f64 = 0.0;
    for x in points {
        let ex = Vector::new(d, 0.0);
        let ey = Vector::new(0.0, d);
        let du = Vector::new(
            (u.value(&(x + ex), t)? - u.value(&(x - ex), t)?) / (2.0 * d),
            (u.value(&(x + ey), t)? - u.value(&(x - ey), t)?) / (2.0 * d),
        );
        let ut = (u.value(x, t + d)? - u.value(x, t - d)?) / (2.0 * d);
        worst = worst.max((ut + model.value(x, &du)).abs());
    }
    Ok(worst)
}

/// Distance from `x` to the half-lines `{x1 > 0, x2 ∈ {−1, 0, 1}}` where the
/// exterior-disk formula switches branch.
pub fn disk_seam_distance(x: &Point) -> f64 {
    [-1.0, 0.0, 1.0]
        .into_iter()
        .map(|c: f64| if x.x > 0.0 { (x.y - c).abs() } else { x.x.hypot(x.y - c) })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocationClass {
    Interior,
    /// Boundary point with `g ≥ 0`, where a fractional rate is predicted.
    BoundaryPlus,
    /// Boundary point with `g < 0`: measured, but no rate is predicted.
    BoundaryMinus,
}

impl LocationClass {
    pub fn as_str(self) -> &'static str {
        match self {
            LocationClass::Interior => "interior",
            LocationClass::BoundaryPlus => "boundary+",
            LocationClass::BoundaryMinus => "boundary-(no-claim)",
        }
    }
}

pub fn classify_location(dom: &DomainGeometry, g: &Datum, x: &Point) -> LocationClass {
    if dom.signed_distance(x) < -1e-9 {
        LocationClass::Interior
    } else if g.value(x) >= 0.0 {
        LocationClass::BoundaryPlus
    } else {
        LocationClass::BoundaryMinus
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOptions {
    pub h_values: Vec<f64>,
    /// Second differences at or below this are treated as noise and dropped from the fit.
    pub noise_floor: f64,
    /// Couple a time shift `σ = h` to each spatial step of a centred probe.
    pub space_time: bool,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self { h_values: log_spaced(1e-2, 1e-4, 9), noise_floor: 0.0, space_time: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub point: Point,
    pub class: LocationClass,
    pub direction: Vector,
    /// Whether the one-sided stencil was used.
    pub one_sided: bool,
    pub fit: Result<ExponentFit>,
}

/// Fit a decay exponent for each `(point, direction)` pair.
///
/// At boundary points a direction pointing strictly into `Ω` gets the one-sided
/// stencil; everything else gets the centred one.
pub fn semiconcavity_report<U: ValueSource + ?Sized>(
    u: &U,
    dom: &DomainGeometry,
    g: &Datum,
    points: &[Point],
    directions: &[Vector],
    t: f64,
    opts: &ProbeOptions,
) -> Vec<ProbeRow> {
    let pairs: Vec<(Point, Vector)> =
        points.iter().flat_map(|x| directions.iter().map(move |e| (*x, e.normalize()))).collect();
    pairs
        .into_par_iter()
        .map(|(x, e)| {
            let class = classify_location(dom, g, &x);
            let inward = class != LocationClass::Interior
                && dom.outward_normal(&x).map(|nu| nu.dot(&e) < -1e-9).unwrap_or(false);
            let fit = opts
                .h_values
                .iter()
                .map(|&h| {
                    let d2 = if inward {
                        one_sided_second_difference(u, &x, &e, h, t)
                    } else {
                        second_difference(u, &x, &e, h, t, if opts.space_time { h } else { 0.0 })
                    }?;
                    Ok((h, d2))
                })
                .collect::<Result<Vec<_>>>()
                .and_then(|samples| fit_exponent_above(&samples, opts.noise_floor))
                .map(|mut f| {
                    f.direction = e;
                    f
                });
            ProbeRow { point: x, class, direction: e, one_sided: inward, fit }
        })
        .collect()
}

/// Columnar table: `x y class direction slope coefficient r2 concave_flag`.
pub fn report_table(rows: &[ProbeRow]) -> String {
    let mut out = String::from("# x y class direction slope coefficient r2 concave_flag\n");
    let num = |v: Option<f64>| v.map_or("nan".to_string(), |v| v.to_string());
    for row in rows {
        let dir = format!("{},{}", row.direction.x, row.direction.y);
        match &row.fit {
            Ok(f) => {
                let _ = writeln!(
                    out,
                    "{} {} {} {} {} {} {} {}",
                    row.point.x,
                    row.point.y,
                    row.class.as_str(),
                    dir,
                    num(f.slope),
                    num(f.coefficient),
                    num(f.r_squared),
                    f.concave_flag
                );
            }
            Err(e) => {
                let _ = writeln!(out, "# {} {} {} {} error: {e}", row.point.x, row.point.y, row.class.as_str(), dir);
            }
        }
    }
    out
}
