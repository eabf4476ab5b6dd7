//! Hausdorff distance between funnels of consecutive levels, for the tube
//! inclusion and for the single-valued equation (`h = 0`).
//!
//! ```text
//! cargo run --release --example convergence_table
//! ```

use galerkin_inclusions::funnel::{convergence_table, default_roster, table_to_csv};
use galerkin_inclusions::problem::InclusionProblem;
use galerkin_inclusions::solver::SolverConfig;

fn main() -> galerkin_inclusions::Result<()> {
    let config = SolverConfig::new(1e-3, 1.0)?;
    let levels = [3, 4, 5, 6, 7];
    for h in [0.1, 0.0] {
        let rows = convergence_table(
            &InclusionProblem::reference(h),
            &levels,
            &default_roster(),
            &config,
        )?;
        println!("# h = {h}");
        print!("{}", table_to_csv(&rows));
        for w in rows.windows(2) {
            println!(
                "# L{}->L{}: ratio {:.3}",
                w[1].level_a,
                w[1].level_b,
                w[1].hausdorff / w[0].hausdorff
            );
        }
        println!();
    }
    Ok(())
}
