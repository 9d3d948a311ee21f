// The explicit exterior-disk solution: its three branches, agreement with the
// geodesic potential and the PDE residual away from the seams.

use std::f64::consts::PI;

use neumann_lab::geodesic::{classify_disk_region, disk_solution, leftward_potential};
use neumann_lab::geometry::Disk;
use neumann_lab::hamiltonian::HamiltonianModel;
use neumann_lab::probe::{disk_seam_distance, pde_residual, DiskOracle};
use neumann_lab::Point;

pub fn run_example() -> neumann_lab::Result<()> {
    let t = 1.0;
    for (r, phi) in [(2.0, PI / 2.0), (1.0, 0.0), (1.5, -0.4), (3.0, 2.5)] {
        let x = Point::new(r * f64::cos(phi), r * f64::sin(phi));
        let u = disk_solution(r, phi, t);
        let l = leftward_potential(&[Disk::unit()], x)?;
        println!("r={r} phi={phi:+.3} {:?}: u = {u:.6}, 2 - t + l = {:.6}", classify_disk_region(r, phi), 2.0 - t + l);
    }
    let points: Vec<Point> = (0..400)
        .map(|k| {
            let (r, phi) = (1.05 + 0.05 * (k / 20) as f64, -PI + 2.0 * PI * ((k % 20) as f64 + 0.5) / 20.0);
            Point::new(r * phi.cos(), r * phi.sin())
        })
        .filter(|x| disk_seam_distance(x) > 1e-3)
        .collect();
    let res = pde_residual(&DiskOracle, &HamiltonianModel::ScaledQuadratic, &points, t, 1e-4)?;
    println!("max |u_t + |Du|^2| over {} points: {res:.2e}", points.len());
    Ok(())
}

fn main() -> neumann_lab::Result<()> {
    run_example()
}
