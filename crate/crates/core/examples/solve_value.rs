// Estimate u(x,t) for the exterior-disk problem by minimising the action over
// reflected paths, and compare with the explicit solution.

use neumann_lab::action::{minimize_value, ProblemData, SolverParams};
use neumann_lab::probe::{DiskOracle, ValueSource};
use neumann_lab::Point;

pub fn run_example() -> neumann_lab::Result<()> {
    let data = ProblemData::disk_example();
    let params = SolverParams { restarts: 4, ..SolverParams::default() };
    for (x, t) in [(Point::new(0.0, 2.0), 1.0), (Point::new(1.0, 0.0), 1.0), (Point::new(1.2, -0.5), 2.0)] {
        let est = minimize_value(&data, x, t, &params)?;
        let exact = DiskOracle.value(&x, t)?;
        println!(
            "u({:.1},{:.1}; {t}) = {:.6}  explicit {:.6}  restarts within 1e-6 of best: {:?}",
            x.x,
            x.y,
            est.value,
            exact,
            est.near_optimal_restarts(1e-6)
        );
    }
    Ok(())
}

fn main() -> neumann_lab::Result<()> {
    run_example()
}
