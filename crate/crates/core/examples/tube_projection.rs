//! Tube sets `F(v) = { f : |g(v) - f| <= h }` on quadrature points: nearest
//! points, distances, offsets and the Dykstra projection onto a tube cut by
//! a half-space.
//!
//! ```text
//! cargo run --example tube_projection
//! ```

use galerkin_inclusions::problem::InclusionProblem;
use galerkin_inclusions::setvalued::{HalfSpace, DYKSTRA_MAX_ITER, DYKSTRA_TOL};

fn main() -> galerkin_inclusions::Result<()> {
    let problem = InclusionProblem::reference(0.1);
    let space = problem.space(3)?;
    let v = space.interpolate(|x| 1.5 * (std::f64::consts::PI * x).sin());
    let tube = problem.evaluate_f(0.0, &v);

    let target = vec![0.25; space.n_quad()];
    let p = tube.project(&target);
    println!(
        "tube at 1.5 sin(pi x), radius 0.1, {} quadrature points",
        space.n_quad()
    );
    println!("  |F(v)|            = {:.6}", tube.norm());
    println!("  dist(0.25, F(v))  = {:.6}", tube.dist(&target));
    println!("  ||P(0.25)||_quad  = {:.6}", space.quad_norm(&p));

    let theta = tube.offset_of(&p);
    let back = tube.point_at_offset(&theta);
    let err = back
        .iter()
        .zip(&p)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("  offset round trip error {err:.1e}");

    // Keep only selections with (d, f) <= (d, P(0.25)) - 0.005 for d = v.
    let d = v.eval_quad();
    let hs = HalfSpace {
        offset: space.quad_inner(&d, &p) - 0.005,
        normal: d,
    };
    let q = tube.project_with_halfspace(&hs, &target, DYKSTRA_TOL, DYKSTRA_MAX_ITER)?;
    println!("\nwith the half-space cut:");
    println!("  tube violation    = {:.1e}", tube.max_violation(&q));
    println!(
        "  (d, f) - offset   = {:.1e}",
        space.quad_inner(&hs.normal, &q) - hs.offset
    );
    let moved: Vec<f64> = q.iter().zip(&p).map(|(a, b)| a - b).collect();
    println!("  ||q - P(0.25)||   = {:.6}", space.quad_norm(&moved));
    Ok(())
}
