use neumann_lab::action::{action_value, Datum, ProblemData};
use neumann_lab::geodesic::geodesic_distance;
use neumann_lab::geometry::{Disk, DomainGeometry};
use neumann_lab::hamiltonian::{grad_v_l, legendre, Drift, Hamiltonian, HamiltonianModel};
use neumann_lab::probe::fit_exponent;
use neumann_lab::skorokhod::{integrate, residuals};
use neumann_lab::{Point, Vector};
use proptest::prelude::*;

fn point(lo: f64, hi: f64) -> impl Strategy<Value = Point> {
    (lo..hi, lo..hi).prop_map(|(a, b)| Point::new(a, b))
}

fn obstacles() -> Vec<Disk> {
    vec![Disk::new(Point::new(0.0, 0.0), 1.0), Disk::new(Point::new(3.0, 1.0), 0.7)]
}

fn outside(disks: &[Disk]) -> impl Strategy<Value = Point> {
    let disks = disks.to_vec();
    point(-4.0, 6.0).prop_filter("outside obstacles", move |x| disks.iter().all(|d| (x - d.center).norm() > d.radius + 1e-6))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_lands_on_the_closure_and_is_idempotent(x in point(-3.0, 3.0).prop_filter("off centre", |x| x.norm() > 0.05)) {
        let dom = DomainGeometry::unit_disk_exterior();
        let y = dom.project(&x).unwrap();
        prop_assert!(dom.signed_distance(&y) <= 1e-12);
        prop_assert!((dom.project(&y).unwrap() - y).norm() <= 1e-12);
        if dom.signed_distance(&x) <= 0.0 {
            prop_assert_eq!(y, x);
        }
    }

    #[test]
    fn geodesic_distance_is_a_metric(a in outside(&obstacles()), b in outside(&obstacles()), c in outside(&obstacles())) {
        let d = obstacles();
        let ab = geodesic_distance(&d, a, b).unwrap();
        let ba = geodesic_distance(&d, b, a).unwrap();
        let ac = geodesic_distance(&d, a, c).unwrap();
        let cb = geodesic_distance(&d, c, b).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-9);
        prop_assert!(ab >= (a - b).norm() - 1e-12);
        prop_assert!(ab <= ac + cb + 1e-9);
        prop_assert!(geodesic_distance(&d, a, a).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn power_laws_are_fitted_exactly(c in 0.1f64..10.0, a in 0.5f64..3.0) {
        let samples: Vec<(f64, f64)> = (0..8).map(|k| {
            let h = 1e-1 * 0.5f64.powi(k);
            (h, c * h.powf(a))
        }).collect();
        let fit = fit_exponent(&samples).unwrap();
        prop_assert!((fit.slope.unwrap() - a).abs() <= 1e-9);
        prop_assert!((fit.coefficient.unwrap() - c).abs() <= 1e-8 * c);
        prop_assert!(!fit.poor_power_law());
        // the mirrored (concave) samples carry no power law to fit
        let mirrored: Vec<(f64, f64)> = samples.iter().map(|(h, d)| (*h, -d)).collect();
        let fit = fit_exponent(&mirrored).unwrap();
        prop_assert!(fit.concave_flag && fit.slope.is_none());
    }

    #[test]
    fn reflected_paths_stay_feasible(x in outside(&obstacles()), vx in -2.0f64..2.0, vy in -2.0f64..2.0, w in 0.0f64..3.0) {
        let dom = DomainGeometry::exterior_disks(obstacles()).unwrap();
        let path = integrate(&dom, x, |s: f64| Vector::new(vx + (w * s).cos(), vy - (w * s).sin()), 1e-3, 1.0).unwrap();
        let r = residuals(&dom, &path).unwrap();
        prop_assert!(r.max_feasibility <= 1e-10);
        prop_assert!(r.min_l >= 0.0);
        prop_assert_eq!(r.complementarity, 0.0);
        let data = ProblemData::new(HamiltonianModel::Quadratic, dom, Datum::Zero, Datum::Zero);
        prop_assert!(action_value(&data, &path).unwrap() >= 0.0);
    }

    #[test]
    fn legendre_round_trip(x in point(-3.0, 3.0), v in point(-3.0, 3.0), s in -1.0f64..1.0) {
        let models = [
            HamiltonianModel::Quadratic,
            HamiltonianModel::ScaledQuadratic,
            HamiltonianModel::DriftQuadratic(Drift::Swirl { center: Point::new(0.5, -0.5), strength: s }),
        ];
        for m in &models {
            let (l, p) = legendre(m, &x, &v).unwrap();
            prop_assert!((m.grad_p(&x, &p) - v).norm() <= 1e-8);
            // Fenchel equality: L(v) + H(p) = v·p
            prop_assert!((l + m.value(&x, &p) - v.dot(&p)).abs() <= 1e-8);
            prop_assert!((grad_v_l(m, &x, &v).unwrap() - p).norm() <= 1e-8);
        }
    }
}
