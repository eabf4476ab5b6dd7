//! Sampled checks of the structural assumptions for the reference problem:
//! form bounds, Lipschitz-type growth, relaxed one-sided Lipschitz, growth
//! bound. Prints the same CSV the `verify` command writes.
//!
//! ```text
//! cargo run --release --example validate_assumptions -- [samples]
//! ```

use galerkin_inclusions::fem::estimate_embedding_constants;
use galerkin_inclusions::problem::{
    check_a1, check_a3, check_a3_prime, check_a4, check_growth, GrowthSpec, InclusionProblem,
    InitialPreset, Sampling, ScalarField, ScalarNonlinearity, ValidatorReport, RATIO_TOL,
};

fn main() -> galerkin_inclusions::Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(2000);
    let sampling = Sampling::new(n, 1);
    let problem = InclusionProblem::reference(0.1);
    let space = problem.space(5)?;
    let c_inf = estimate_embedding_constants(&space, n, 1)?.c_inf;
    let spec = GrowthSpec::a3_soft_cubic(c_inf);

    println!("{}", ValidatorReport::CSV_HEADER);
    for r in [
        check_a1(&space, sampling).report(RATIO_TOL),
        check_a3(&problem, &space, &spec, sampling)?,
        check_a4(&problem, &space, sampling),
        check_growth(&problem, &space, &spec, sampling),
    ] {
        println!("{}", r.to_csv_row());
    }

    // Sub-cubic variant: only the relaxed growth form applies.
    let eps = 0.5;
    let sub = InclusionProblem::new(
        0.0,
        1.0,
        ScalarNonlinearity::eps_power(eps)?,
        ScalarField::constant(0.1),
        InitialPreset::Bump.field(0.0, 1.0, 1.0),
        1.0,
        1.0,
    )?;
    let spec = GrowthSpec::for_eps_power(eps, c_inf)?;
    println!(
        "{}",
        check_a3_prime(&sub, &space, &spec, sampling)?.to_csv_row()
    );
    println!("# eps_power({eps}): {}", spec.describe());
    Ok(())
}
