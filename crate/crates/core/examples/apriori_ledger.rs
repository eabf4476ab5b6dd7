//! The a-priori constant chain for the reference problem, the Gronwall
//! envelope it implies, and a check of every funnel trajectory against it.
//!
//! ```text
//! cargo run --release --example apriori_ledger
//! ```

use galerkin_inclusions::funnel::{
    apriori_constants, default_roster, estimate_constants, gronwall_bound, sample_funnel,
    verify_apriori,
};
use galerkin_inclusions::problem::InclusionProblem;
use galerkin_inclusions::solver::SolverConfig;

fn main() -> galerkin_inclusions::Result<()> {
    let problem = InclusionProblem::reference(0.1);
    let levels = [3, 4, 5];
    let est = estimate_constants(&problem, &levels, 2000, 5)?;
    let report = apriori_constants(&problem, &levels, &est)?;
    print!("{}", report.to_csv());

    // ‖u(t)‖_H <= e^{ℓt} C0 + ∫ e^{ℓ(t-s)} α ds
    let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
    let kappa = vec![problem.ell; times.len()];
    let rho = vec![problem.alpha(); times.len()];
    let env = gronwall_bound(report.data.c0, &kappa, &rho, &times)?;
    println!("\nt,envelope");
    for (t, e) in times.iter().zip(&env) {
        println!("{t:.1},{e:.6}");
    }

    let config = SolverConfig::new(1e-3, 1.0)?;
    let mut worst = (f64::INFINITY, f64::INFINITY);
    for &l in &levels {
        let funnel = sample_funnel(&problem, l, &default_roster(), &config)?;
        for m in verify_apriori(&funnel, &report, 0.0) {
            worst = (worst.0.min(m.k1_margin), worst.1.min(m.k0_margin));
        }
    }
    println!("\nsmallest margins: K1 {:.4}, K0 {:.4}", worst.0, worst.1);
    Ok(())
}
