// Two obstacles: the closed-form leave times and bowing amplitude, checked
// against the exact geodesic maximum over the second boundary.

use neumann_lab::geodesic::{two_holes, two_holes_cross_check, TwoHolesReport};

pub fn run_example() -> neumann_lab::Result<()> {
    println!("{}", TwoHolesReport::HEADER);
    for h in [0.25, 0.5, 0.75, 1.0, 1.5] {
        let r = two_holes(h)?;
        println!("{}", r.to_row());
        let (t2, agrees) = two_holes_cross_check(h, 10_000, 1e-2)?;
        if !agrees {
            println!("#   h={h}: geodesic leave time {t2:.4} differs from {:.4}; a third route is shorter", r.t2);
        }
    }
    Ok(())
}

fn main() -> neumann_lab::Result<()> {
    run_example()
}
