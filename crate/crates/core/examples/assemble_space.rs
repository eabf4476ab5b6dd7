//! Builds dyadic P1 spaces, prints the matrix stencils and the sampled
//! embedding constants, then projects a smooth function across levels.
//!
//! ```text
//! cargo run --example assemble_space
//! ```

use galerkin_inclusions::fem::{estimate_embedding_constants, l2_project, FemSpace};

fn main() -> galerkin_inclusions::Result<()> {
    println!("level  dim   h          M(diag, off)              K(diag, off)");
    for level in 1..=6 {
        let s = FemSpace::new(0.0, 1.0, level)?;
        let (m, k) = (s.mass(), s.stiffness());
        let off = |v: &[f64]| v.first().copied().unwrap_or(0.0);
        println!(
            "{level:>5}  {:>3}  {:.3e}  ({:.4e}, {:.4e})  ({:.4e}, {:.4e})",
            s.dim(),
            s.grid().mesh_width(),
            m.diag[0],
            off(&m.sup),
            k.diag[0],
            off(&k.sup)
        );
    }

    let s = FemSpace::new(0.0, 1.0, 6)?;
    let emb = estimate_embedding_constants(&s, 2000, 1)?;
    println!(
        "\nsampled c_VH = {:.4}, C_inf = {:.4} (2000 random functions, level 6)",
        emb.c_vh, emb.c_inf
    );

    let fine = FemSpace::new(0.0, 1.0, 9)?;
    let v = fine.project_fn(|x| (3.0 * x).sin() * x * (1.0 - x));
    println!("\nH-projection of sin(3x) x(1-x) from level 9:");
    for level in [2, 4, 6, 8] {
        let coarse = FemSpace::new(0.0, 1.0, level)?;
        let p = l2_project(&coarse, &v)?;
        let err = v.sub(&p.prolong(&fine)?)?.norm_h();
        println!("  level {level}: ||v - P_N v||_H = {err:.3e}");
    }
    Ok(())
}
