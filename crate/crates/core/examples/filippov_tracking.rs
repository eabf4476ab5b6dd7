//! Filippov tracking: drives a coarse linear Galerkin reference with the
//! forcing of a fine solution, builds a tracking solution of the coarse
//! inclusion and prints its certificate for a sequence of step sizes.
//!
//! ```text
//! cargo run --release --example filippov_tracking
//! ```

use galerkin_inclusions::problem::InclusionProblem;
use galerkin_inclusions::solver::{solve, SelectionStrategy, SolverConfig};
use galerkin_inclusions::tracking::{
    linear_track, track, wplus_star_distance, FilippovCertificate, TrackConfig,
};

fn main() -> galerkin_inclusions::Result<()> {
    let problem = InclusionProblem::reference(0.1);
    let strategy = SelectionStrategy::RandomTheta {
        seed: 1,
        n_switches: 4,
        n_pieces: 8,
    };
    let fine_space = problem.space(8)?;
    println!("{},wplus_error", FilippovCertificate::CSV_HEADER);
    for tau in [4e-3, 2e-3, 1e-3] {
        let fine = solve(
            &problem,
            &fine_space,
            &strategy,
            &SolverConfig::new(tau, 1.0)?,
        )?;
        for level in [4, 5, 6] {
            let reference = linear_track(&fine, &problem.space(level)?, &problem)?;
            let (u, cert) = track(&reference, &problem, &TrackConfig::default())?;
            let err = wplus_star_distance(&fine, &u)?;
            println!("{},{err:.4e}", cert.to_csv_row());
            if !cert.pass() {
                eprintln!("certificate failed at tau {tau}, level {level}");
            }
        }
    }
    Ok(())
}
