//! End-to-end acceptance criteria. Each prints one PASS/FAIL line with the
//! measured quantities and its wall time; the test fails if any criterion does.

use std::f64::consts::FRAC_PI_2;
use std::time::{Duration, Instant};

use neumann_lab::action::{self, minimize_value, pbar_lipschitz_report, Datum, ProblemData, SolverParams};
use neumann_lab::cli::{disk_sample_points, disk_solver_samples, duality_round_trip, two_holes_front_depth};
use neumann_lab::frontlab::{self, BBox};
use neumann_lab::geodesic::{self, bowing_amplitude, disk_solution, LeftwardField};
use neumann_lab::geometry::{two_hole_disks, Disk, DomainGeometry};
use neumann_lab::hamiltonian::{Drift, HamiltonianModel};
use neumann_lab::probe::{self, DiskOracle, PotentialOracle, ValueSource};
use neumann_lab::reflected_flow::{flow, mode_diagnostics, DEFAULT_EPS_L};
use neumann_lab::skorokhod::{self, Regime};
use neumann_lab::{Point, Vector};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn run(n: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let pass = out.pass && elapsed < budget;
    println!(
        "{} {n}. {name}: {} [{:.2}s / {:.0}s]",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    pass
}

fn oracle_equivalence() -> Outcome {
    let field = LeftwardField::new(&[Disk::unit()]).unwrap();
    let mut worst: f64 = 0.0;
    for (k, (r, phi)) in disk_sample_points(50).into_iter().enumerate() {
        let t = [0.5, 1.0, 2.0, 3.0][k % 4];
        let x = Point::new(r * phi.cos(), r * phi.sin());
        let diff = disk_solution(r, phi, t) - (2.0 - t + field.eval(&x).unwrap());
        worst = worst.max(diff.abs());
    }
    check(worst <= 1e-9, format!("max difference {worst:.3e} over 2500 points (tol 1e-9)"))
}

fn boundary_exponent() -> Outcome {
    let e = Vector::new(1.0, 0.0);
    let samples: Vec<(f64, f64)> = probe::log_spaced(1e-2, 1e-4, 9)
        .into_iter()
        .map(|h| (h, probe::one_sided_second_difference(&DiskOracle, &Point::new(1.0, 0.0), &e, h, 1.0).unwrap()))
        .collect();
    let fit = probe::fit_exponent(&samples).unwrap();
    let (slope, coef) = (fit.slope.unwrap_or(f64::NAN), fit.coefficient.unwrap_or(f64::NAN));
    let expected = (8.0 - 4.0 * 2f64.sqrt()) / 3.0;
    let rel = (coef - expected).abs() / expected;
    check(
        (slope - 1.5).abs() <= 0.02 && rel <= 0.05,
        format!("slope {slope:.4} (1.5 ± 0.02), coefficient {coef:.5} vs {expected:.6} ({:.1}% of 5%)", 100.0 * rel),
    )
}

fn interior_rate() -> Outcome {
    let (r, phi) = (2.0f64, 0.3f64);
    let e = Vector::new(phi.cos(), phi.sin());
    let x = r * e;
    let samples: Vec<(f64, f64)> = probe::log_spaced(1e-1, 1e-3, 9)
        .into_iter()
        .map(|h| (h, probe::second_difference(&DiskOracle, &x, &e, h, 1.0, 0.0).unwrap()))
        .collect();
    let fit = probe::fit_exponent(&samples).unwrap();
    let (slope, coef) = (fit.slope.unwrap_or(f64::NAN), fit.coefficient.unwrap_or(f64::NAN));
    let expected = 1.0 / (r * r * (r * r - 1.0).sqrt());
    let rel = (coef - expected).abs() / expected;
    check(
        (slope - 2.0).abs() <= 0.05 && rel <= 0.10,
        format!("slope {slope:.4} (2 ± 0.05), coefficient {coef:.5} vs {expected:.6} ({:.1}% of 10%)", 100.0 * rel),
    )
}

fn solver_vs_oracle() -> Outcome {
    let data = ProblemData::disk_example();
    let params = SolverParams::default();
    assert_eq!((params.nodes, params.restarts), (64, 8));
    let samples = disk_solver_samples();
    let mut worst: (f64, Point, f64) = (0.0, Point::zeros(), 0.0);
    for &(x, t) in &samples {
        let v = minimize_value(&data, x, t, &params).unwrap().value;
        let diff = (v - DiskOracle.value(&x, t).unwrap()).abs();
        if diff > worst.0 {
            worst = (diff, x, t);
        }
    }
    check(
        samples.len() == 20 && worst.0 <= 3e-2,
        format!("max |u_solver − u| = {:.3e} at ({:.2},{:.2}), t={} over {} samples (tol 3e-2)", worst.0, worst.1.x, worst.1.y, worst.2, samples.len()),
    )
}

fn two_holes() -> Outcome {
    let mut ok = true;
    let mut detail = String::new();

    let t1 = frontlab::leave_time(&two_hole_disks(0.5), 0, 10_000).unwrap();
    let t1_ok = (t1 - (2.0 + FRAC_PI_2)).abs() <= 1e-3;
    ok &= t1_ok;
    detail += &format!("t1 {t1:.5}{}; ", if t1_ok { "" } else { " (off)" });

    // D1: the single-obstacle front at its leave time, grid aligned with the symmetry axis
    let dom = DomainGeometry::unit_disk_exterior();
    let oracle = PotentialOracle::new(dom.disks()).unwrap();
    let t = 2.0 + FRAC_PI_2;
    let field = frontlab::evaluate_grid(&oracle, &dom, BBox::new((-2.9975, 3.0025), (-2.005, 1.995)), (400, 400), t).unwrap();
    let d1 = frontlab::bowing_depth(&frontlab::extract_zero_level(&field).unwrap(), t).unwrap();
    let d1_ok = (d1 - (FRAC_PI_2 - 1.0)).abs() <= 0.02;
    ok &= d1_ok;
    detail += &format!("D1 {d1:.4}{}; ", if d1_ok { "" } else { " (off)" });

    for h in [0.5, 1.0, 1.5] {
        let report = geodesic::two_holes(h).unwrap();
        let (t2_geo, agrees) = geodesic::two_holes_cross_check(h, 10_000, 1e-2).unwrap();
        let (_, d2) = two_holes_front_depth(h, 400).unwrap();
        let d2_ok = d2 >= report.f_h - 0.02 && d2 > d1;
        ok &= agrees && d2_ok;
        detail += &format!(
            "h={h}: t2 {t2_geo:.4} vs {:.4}{}, D2 {d2:.4} vs f {:.4}{}; ",
            report.t2,
            if agrees { "" } else { " (off)" },
            report.f_h,
            if d2_ok { "" } else { " (off)" }
        );
    }

    let step = 1e-6;
    let increasing = (1..=50).all(|k| {
        let h = 2.0 * k as f64 / 51.0;
        (bowing_amplitude(h + step) - bowing_amplitude(h - step)) / (2.0 * step) > 0.0
    });
    ok &= increasing;
    detail += &format!("f' > 0 at 50 points: {increasing}");
    check(ok, detail)
}

fn skorokhod_properties() -> Outcome {
    let dom = DomainGeometry::upper_half_plane();
    // descend while drifting sideways, touch down at s = 1 and slide
    let control = |s: f64| Vector::new(s.cos(), -1.0);
    let exact = |s: f64| Point::new(s.sin(), (1.0 - s).max(0.0));
    let mut errors = Vec::new();
    let (mut feas, mut min_l, mut compl): (f64, f64, f64) = (f64::NEG_INFINITY, f64::INFINITY, 0.0);
    for dt in [4e-3, 2e-3, 1e-3] {
        let path = skorokhod::integrate(&dom, Point::new(0.0, 1.0), control, dt, 2.0).unwrap();
        let r = skorokhod::residuals(&dom, &path).unwrap();
        feas = feas.max(r.max_feasibility);
        min_l = min_l.min(r.min_l);
        compl = compl.max(r.complementarity);
        let err = path.times.iter().zip(&path.eta).map(|(s, e)| (e - exact(*s)).norm()).fold(0.0, f64::max);
        errors.push(err);
    }
    let ratios = [errors[0] / errors[1], errors[1] / errors[2]];
    let order_ok = ratios.iter().all(|q| (1.6..=2.4).contains(q));
    check(
        feas <= 1e-10 && min_l >= 0.0 && compl == 0.0 && order_ok,
        format!(
            "feasibility {feas:.1e}, min l {min_l:.1e}, complementarity {compl:e}, errors {:.2e}/{:.2e}/{:.2e}, ratios {:.3}, {:.3} (2 ± 20%)",
            errors[0], errors[1], errors[2], ratios[0], ratios[1]
        ),
    )
}

fn reflected_flows() -> Outcome {
    let disk = ProblemData::new(HamiltonianModel::Quadratic, DomainGeometry::unit_disk_exterior(), Datum::Zero, Datum::Zero);
    let path = flow(&disk, Point::new(1.0, 0.0), Vector::new(0.0, -1.0), 1e-3, FRAC_PI_2, DEFAULT_EPS_L).unwrap();
    let p = path.p.as_ref().unwrap();
    let mut geo_err: f64 = 0.0;
    let mut speed_err: f64 = 0.0;
    for (k, s) in path.times.iter().enumerate() {
        geo_err = geo_err.max((path.eta[k] - Point::new(s.cos(), s.sin())).norm());
        geo_err = geo_err.max((p[k] - Vector::new(s.sin(), -s.cos())).norm());
        speed_err = speed_err.max((p[k].norm() - 1.0).abs());
    }
    let geo_diag = mode_diagnostics(&disk, &path).unwrap();

    let sticky = ProblemData::new(HamiltonianModel::Quadratic, DomainGeometry::upper_half_plane(), Datum::Constant { c: -1.0 }, Datum::Zero);
    let path = flow(&sticky, Point::zeros(), Vector::new(1.0, 1.0), 1e-3, 1.0, DEFAULT_EPS_L).unwrap();
    let mut sticky_err: f64 = 0.0;
    for (k, s) in path.times.iter().enumerate() {
        sticky_err = sticky_err.max((path.eta[k] - Point::new(-s, 0.0)).norm());
        sticky_err = sticky_err.max((path.p.as_ref().unwrap()[k] - Vector::new(1.0, 1.0)).norm());
        sticky_err = sticky_err.max((path.l[k] - 1.0).abs());
    }
    let all_lpos = path.regime.iter().all(|r| *r == Regime::BoundarySlideLPos);
    let sticky_diag = mode_diagnostics(&sticky, &path).unwrap();
    let momentum = sticky_diag.momentum_constraint.max(geo_diag.momentum_constraint);
    let tangency = sticky_diag.tangency.max(geo_diag.tangency);
    check(
        geo_err <= 5e-3 && speed_err <= 5e-3 && sticky_err <= 1e-8 && all_lpos && momentum <= 1e-8 && tangency <= 5e-2,
        format!(
            "geodesic slide error {geo_err:.2e}, |p| drift {speed_err:.2e}; sticky slide error {sticky_err:.2e}; |p·ν − g| {momentum:.1e}, |ν·η̇| {tangency:.1e}"
        ),
    )
}

/// The minimiser of the half-plane problem whose optimal control is `(1,−1)`:
/// descend for one time unit, then slide with unit reflection.
fn slide_minimizer(dt: f64) -> neumann_lab::skorokhod::ReflectedPath {
    let data = ProblemData::new(
        HamiltonianModel::Quadratic,
        DomainGeometry::upper_half_plane(),
        Datum::Constant { c: -1.0 },
        Datum::linear(Vector::new(-1.0, 0.0), 0.0),
    );
    let params = SolverParams { dt, ..SolverParams::default() };
    minimize_value(&data, Point::new(0.0, 1.0), 2.5, &params).unwrap().path
}

fn momentum_regularity() -> Outcome {
    let coarse = pbar_lipschitz_report(&slide_minimizer(2e-3)).unwrap();
    let fine = pbar_lipschitz_report(&slide_minimizer(1e-3)).unwrap();
    let stability = fine.max_increment_ratio / coarse.max_increment_ratio;
    let stable = (stability - 1.0).abs() <= 0.25;
    let jump = coarse.max_p_jump.min(fine.max_p_jump);
    check(
        stable && jump >= 0.5,
        format!(
            "p̄ ratio {:.3} (dt 2e-3) vs {:.3} (dt 1e-3), quotient {stability:.3} (1 ± 25%); raw p jump {jump:.3e} at s = {:.4} (need ≥ 0.5)",
            coarse.max_increment_ratio, fine.max_increment_ratio, fine.jump_time
        ),
    )
}

fn duality_and_residual() -> Outcome {
    let models = [
        HamiltonianModel::Quadratic,
        HamiltonianModel::ScaledQuadratic,
        HamiltonianModel::DriftQuadratic(Drift::Constant(Vector::new(0.3, -0.2))),
        HamiltonianModel::DriftQuadratic(Drift::Swirl { center: Point::zeros(), strength: 0.7 }),
    ];
    let trip = models.iter().map(|m| duality_round_trip(m, 100, 42).unwrap()).fold(0.0, f64::max);
    let fd = 1e-4;
    let points: Vec<Point> = disk_sample_points(30)
        .into_iter()
        .map(|(r, phi)| Point::new(r * phi.cos(), r * phi.sin()))
        .filter(|x| x.norm() >= 1.0 + 3.0 * fd && probe::disk_seam_distance(x) >= 3.0 * fd)
        .collect();
    let residual = probe::pde_residual(&DiskOracle, &HamiltonianModel::ScaledQuadratic, &points, 1.0, fd).unwrap();
    check(
        trip <= 1e-8 && residual <= 1e-6,
        format!("Legendre round trip {trip:.2e} (tol 1e-8); residual {residual:.2e} over {} points (tol 1e-6)", points.len()),
    )
}

#[test]
fn acceptance() {
    let min = |m: u64| Duration::from_secs(60 * m);
    let sec = Duration::from_secs;
    let results = [
        run(1, "oracle equivalence", sec(5), oracle_equivalence),
        run(2, "optimal boundary exponent", sec(1), boundary_exponent),
        run(3, "interior quadratic rate", sec(1), interior_rate),
        run(4, "variational solver vs oracle", min(10), solver_vs_oracle),
        run(5, "two-holes quantities", min(2), two_holes),
        run(6, "Skorokhod integrator", sec(30), skorokhod_properties),
        run(7, "reflected Hamiltonian flows", sec(30), reflected_flows),
        run(8, "momentum regularity", min(2), momentum_regularity),
        run(9, "duality and PDE residual", sec(10), duality_and_residual),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, p)| !**p).map(|(k, _)| k + 1).collect();
    println!("{} of {} criteria pass", results.len() - failed.len(), results.len());
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}

#[test]
fn value_record_mentions_path_file() {
    let data = ProblemData::new(HamiltonianModel::Quadratic, DomainGeometry::free_space(), Datum::Zero, Datum::linear(Vector::new(1.0, 0.0), 2.0));
    let params = SolverParams { restarts: 2, ..Default::default() };
    let est = action::minimize_value(&data, Point::new(3.0, 0.0), 1.0, &params).unwrap();
    assert!((est.value - 4.5).abs() <= 1e-3);
    let record = est.to_record(Some("path.txt"));
    assert!(record.contains("path.txt"), "{record}");
}
