// The zero level set of u = 2 - t + l around the unit disk as it passes the
// obstacle, and how far it bows behind the free front.

use std::f64::consts::FRAC_PI_2;

use neumann_lab::frontlab::{bowing_depth, evaluate_grid, extract_zero_level, BBox};
use neumann_lab::geometry::DomainGeometry;
use neumann_lab::probe::PotentialOracle;

pub fn run_example() -> neumann_lab::Result<()> {
    let dom = DomainGeometry::unit_disk_exterior();
    let oracle = PotentialOracle::new(dom.disks())?;
    for t in [2.5, 3.0, 2.0 + FRAC_PI_2, 4.0] {
        let field = evaluate_grid(&oracle, &dom, BBox::new((-2.9975, 3.0025), (-2.005, 1.995)), (200, 200), t)?;
        let contours = extract_zero_level(&field)?;
        let vertices: usize = contours.iter().map(Vec::len).sum();
        println!("t = {t:.4}: {} polylines, {vertices} vertices, bowing depth {:.4}", contours.len(), bowing_depth(&contours, t)?);
    }
    Ok(())
}

fn main() -> neumann_lab::Result<()> {
    run_example()
}
