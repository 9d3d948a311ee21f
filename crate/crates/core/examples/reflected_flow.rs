// The two boundary regimes of the reflected Hamiltonian system: a geodesic
// slide around the unit disk and a sticky slide along a flat wall.

use std::f64::consts::FRAC_PI_2;

use neumann_lab::action::{Datum, ProblemData};
use neumann_lab::geometry::DomainGeometry;
use neumann_lab::hamiltonian::HamiltonianModel;
use neumann_lab::reflected_flow::{flow, mode_diagnostics, DEFAULT_EPS_L};
use neumann_lab::{Point, Vector};

pub fn run_example() -> neumann_lab::Result<()> {
    let disk = ProblemData::new(HamiltonianModel::Quadratic, DomainGeometry::unit_disk_exterior(), Datum::Zero, Datum::Zero);
    let path = flow(&disk, Point::new(1.0, 0.0), Vector::new(0.0, -1.0), 1e-3, FRAC_PI_2, DEFAULT_EPS_L)?;
    let p = path.p.as_ref().expect("flow fills p");
    println!("geodesic slide: eta = {:?}, p = {:?}", path.endpoint().as_slice(), p[p.len() - 1].as_slice());
    println!("  {:?}", mode_diagnostics(&disk, &path)?);

    let wall = ProblemData::new(HamiltonianModel::Quadratic, DomainGeometry::upper_half_plane(), Datum::Constant { c: -1.0 }, Datum::Zero);
    let path = flow(&wall, Point::zeros(), Vector::new(1.0, 1.0), 1e-3, 1.0, DEFAULT_EPS_L)?;
    println!("sticky slide: eta = {:?}, l = {}", path.endpoint().as_slice(), path.l[path.len() / 2]);
    println!("  {:?}", mode_diagnostics(&wall, &path)?);
    Ok(())
}

fn main() -> neumann_lab::Result<()> {
    run_example()
}
