// Reflect a descending control off the upper half-plane and watch the
// discretisation error halve with the step.

use neumann_lab::geometry::DomainGeometry;
use neumann_lab::skorokhod::{integrate, residuals};
use neumann_lab::{Point, Vector};

pub fn run_example() -> neumann_lab::Result<()> {
    let dom = DomainGeometry::upper_half_plane();
    let exact = |s: f64| Point::new(s.sin(), (1.0 - s).max(0.0));
    let mut previous: Option<f64> = None;
    for dt in [4e-3, 2e-3, 1e-3] {
        let path = integrate(&dom, Point::new(0.0, 1.0), |s: f64| Vector::new(s.cos(), -1.0), dt, 2.0)?;
        let r = residuals(&dom, &path)?;
        let err = path.times.iter().zip(&path.eta).map(|(s, e)| (e - exact(*s)).norm()).fold(0.0, f64::max);
        let ratio = previous.map_or(String::new(), |p| format!("  ratio {:.3}", p / err));
        println!(
            "dt {dt:.0e}: error {err:.3e}{ratio}  feasibility {:.1e}  l(2) = {:.4}",
            r.max_feasibility,
            path.l[path.len() - 2]
        );
        previous = Some(err);
    }
    Ok(())
}

fn main() -> neumann_lab::Result<()> {
    run_example()
}
