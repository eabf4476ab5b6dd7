//! Solves the reference inclusion for every strategy of the default roster,
//! checks the discrete energy inequality and reports the funnel spread.
//!
//! ```text
//! cargo run --release --example solve_funnel -- [level]
//! ```

use galerkin_inclusions::funnel::{default_roster, sample_funnel};
use galerkin_inclusions::problem::InclusionProblem;
use galerkin_inclusions::setvalued::distance_matrix;
use galerkin_inclusions::solver::{energy_check, l2h_metric, wplus_star_norm, SolverConfig};

fn main() -> galerkin_inclusions::Result<()> {
    let level: u32 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(5);
    let problem = InclusionProblem::reference(0.1);
    let config = SolverConfig::new(1e-3, 1.0)?;
    let funnel = sample_funnel(&problem, level, &default_roster(), &config)?;

    println!(
        "level {level}, tau {}, {} strategies",
        config.tau,
        funnel.len()
    );
    println!(
        "{:<18} {:>10} {:>10} {:>10} {:>7}",
        "strategy", "u(T)(0.5)", "max|u|_H", "W+*", "energy"
    );
    for t in &funnel.trajectories {
        let e = energy_check(t, 1e-9);
        println!(
            "{:<18} {:>10.5} {:>10.5} {:>10.5} {:>7}",
            t.strategy,
            t.final_state().eval_at(0.5),
            t.max_norm_h(),
            wplus_star_norm(t),
            if e.pass() { "ok" } else { "FAIL" }
        );
    }
    let m = distance_matrix(&funnel.trajectories, &funnel.trajectories, |a, b| {
        l2h_metric(a, b).unwrap_or(f64::NAN)
    })?;
    let diameter = m.values.iter().copied().fold(0.0, f64::max);
    println!("\nfunnel diameter in L2(0,T;H): {diameter:.4e}");
    Ok(())
}
