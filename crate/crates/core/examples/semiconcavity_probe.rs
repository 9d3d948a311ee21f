// Second differences of the exterior-disk solution: the 3/2 rate on the
// boundary against the quadratic rate inside.

use neumann_lab::action::Datum;
use neumann_lab::geometry::DomainGeometry;
use neumann_lab::probe::{report_table, semiconcavity_report, DiskOracle, ProbeOptions};
use neumann_lab::{Point, Vector};

pub fn run_example() -> neumann_lab::Result<()> {
    let dom = DomainGeometry::unit_disk_exterior();
    let points = [Point::new(1.0, 0.0), Point::new(2.0 * 0.3f64.cos(), 2.0 * 0.3f64.sin())];
    let dirs = [Vector::new(1.0, 0.0), Vector::new(0.3f64.cos(), 0.3f64.sin())];
    let opts = ProbeOptions::default();
    let rows = semiconcavity_report(&DiskOracle, &dom, &Datum::Zero, &points, &dirs, 1.0, &opts);
    print!("{}", report_table(&rows));
    Ok(())
}

fn main() -> neumann_lab::Result<()> {
    run_example()
}
