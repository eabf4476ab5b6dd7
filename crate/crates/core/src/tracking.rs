//! Defect measurement for approximate Galerkin solutions, Filippov-type
//! tracking by selections from `P_N F ∩ L_N`, and the a-posteriori
//! certificate comparing the tracked error with its continuous-time bounds.
//!
//! Discrete error identity behind the certificate: with `e^m = v^m - u^m`,
//! `r^m = (v^{m+1} - v^m)/τ + A_N v^m`, `f^m = Proj(r^m, F(v^m))` and
//! `g^m ∈ F(u^m) ∩ L_N`,
//!
//! ```text
//! ½(E_{m+1}² - E_m²) + τ‖e^{m+1}‖_V² <= τ(δ_m + ρ_m) E_{m+1} + τ ℓ E_m²
//! ```
//!
//! where `E_m = ‖e^m‖_H` and `ρ_m E_{m+1}` bounds
//! `a(v^{m+1} - v^m, e^{m+1}) + (f^m - g^m, e^{m+1} - e^m)`. The `ρ` terms
//! vanish to first order in `τ` and are reported as slack.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{fmt_f64, restrict_load, FemSpace, NodalFunction};
use crate::problem::InclusionProblem;
use crate::setvalued::{HalfSpace, DYKSTRA_MAX_ITER, DYKSTRA_TOL};
use crate::solver::{ImexStepper, Trajectory};

/// `A_N v`, defined by `(A_N v, w)_H = a(v, w)` for all `w ∈ V_N`.
pub fn apply_an(v: &NodalFunction) -> NodalFunction {
    let space = v.space();
    let kc = space.stiffness().mul_vec(v.coeffs());
    let coeffs = space.solve_mass(&kc).expect("mass matrix is SPD");
    NodalFunction::new(Arc::clone(space), coeffs).expect("same space")
}

fn apply_an_coeffs(space: &FemSpace, c: &[f64]) -> Vec<f64> {
    space
        .solve_mass(&space.stiffness().mul_vec(c))
        .expect("mass matrix is SPD")
}

/// Residual `(v^{m+1} - v^m)/τ + A_N v^m` at quadrature points.
fn residual_quad(space: &FemSpace, tau: f64, v0: &[f64], v1: &[f64]) -> Vec<f64> {
    let av = apply_an_coeffs(space, v0);
    let r: Vec<f64> = v0
        .iter()
        .zip(v1)
        .zip(&av)
        .map(|((a, b), c)| (b - a) / tau + c)
        .collect();
    space.eval_quad(&r)
}

/// Per-step defect `δ_m = dist_H(r^m, F(t_m, v^m))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectReport {
    /// Left endpoints `t_0..t_{M-1}` of the steps.
    pub times: Vec<f64>,
    pub delta: Vec<f64>,
    /// `τ Σ δ_m`, exact for the piecewise-constant defect.
    pub l1: f64,
    pub max: f64,
}

pub fn defect(reference: &Trajectory, problem: &InclusionProblem) -> DefectReport {
    let space = &reference.space;
    let radius = problem.radius_quad(space);
    let delta: Vec<f64> = (0..reference.n_steps())
        .map(|m| {
            let (v0, v1) = (&reference.states[m], &reference.states[m + 1]);
            let r = residual_quad(space, reference.tau, v0, v1);
            problem.tube_from(space, v0, &radius).dist(&r)
        })
        .collect();
    DefectReport {
        times: reference.times[..reference.n_steps()].to_vec(),
        l1: reference.tau * delta.iter().sum::<f64>(),
        max: delta.iter().copied().fold(0.0, f64::max),
        delta,
    }
}

/// Options for [`track`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackConfig {
    /// Replace the matched-offset selection by the nearest point of
    /// `F(u^m) ∩ L_N` to `f^m`.
    pub refine: bool,
    pub dykstra_tol: f64,
    pub dykstra_max_iter: usize,
}

impl Default for TrackConfig {
    fn default() -> Self {
        Self {
            refine: false,
            dykstra_tol: DYKSTRA_TOL,
            dykstra_max_iter: DYKSTRA_MAX_ITER,
        }
    }
}

/// Outcome of one tracking run.
#[derive(Debug, Clone, PartialEq)]
pub struct FilippovCertificate {
    pub tau: f64,
    pub level: u32,
    /// `sup_{s<=t} exp(∫_s^t ℓ)`, equal to `e^{ℓT}` for constant `ℓ >= 0`.
    pub c_ell: f64,
    pub delta_l1: f64,
    /// `‖v(0) - u(0)‖_H`.
    pub initial_gap: f64,
    pub lhs41: f64,
    pub rhs41: f64,
    pub slack41: f64,
    pub lhs42: f64,
    pub rhs42: f64,
    pub slack42: f64,
    pub delta: Vec<f64>,
    pub rho: Vec<f64>,
    /// Largest `(f - g, v - u) - ℓ‖v - u‖²` over steps (nonpositive up to round-off).
    pub max_ln_residual: f64,
}

impl FilippovCertificate {
    pub const CSV_HEADER: &'static str =
        "tau,level,Cl,delta_L1,lhs41,rhs41,lhs42,rhs42,viol41,viol42,slack41,slack42";

    /// `max(0, lhs - rhs)` for the `L∞(0,T;H)` estimate.
    pub fn viol41(&self) -> f64 {
        (self.lhs41 - self.rhs41).max(0.0)
    }

    /// `max(0, lhs - rhs)` for the `L²(0,T;V)` estimate.
    pub fn viol42(&self) -> f64 {
        (self.lhs42 - self.rhs42).max(0.0)
    }

    pub fn pass(&self) -> bool {
        self.viol41() <= self.slack41 && self.viol42() <= self.slack42
    }

    pub fn to_csv_row(&self) -> String {
        [
            fmt_f64(self.tau),
            self.level.to_string(),
            fmt_f64(self.c_ell),
            fmt_f64(self.delta_l1),
            fmt_f64(self.lhs41),
            fmt_f64(self.rhs41),
            fmt_f64(self.lhs42),
            fmt_f64(self.rhs42),
            fmt_f64(self.viol41()),
            fmt_f64(self.viol42()),
            fmt_f64(self.slack41),
            fmt_f64(self.slack42),
        ]
        .join(",")
    }
}

/// `C_ℓ` for a constant `ℓ` on `[0, T]`.
pub fn c_ell_constant(ell: f64, t_final: f64) -> f64 {
    (ell.max(0.0) * t_final).exp()
}

/// Builds a solution of the Galerkin inclusion that tracks `reference`.
///
/// Each step projects the reference residual onto `F(t_m, v^m)` and moves the
/// resulting tube offset to `F(t_m, u^m)`; the transported point satisfies
/// the `L_N` inequality by the pointwise one-sided Lipschitz bound of `g`.
pub fn track(
    reference: &Trajectory,
    problem: &InclusionProblem,
    config: &TrackConfig,
) -> Result<(Trajectory, FilippovCertificate)> {
    let space = Arc::clone(&reference.space);
    let tau = reference.tau;
    let n_steps = reference.n_steps();
    let ell = problem.ell;
    let stepper = ImexStepper::new(&space, tau)?;
    let radius = problem.radius_quad(&space);

    let mut u = problem.initial_value(&space).into_coeffs();
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut forcings = Vec::with_capacity(n_steps);
    let mut delta = Vec::with_capacity(n_steps);
    let mut rho = Vec::with_capacity(n_steps);
    let mut max_ln_residual = f64::NEG_INFINITY;

    let diff = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x - y).collect() };

    for m in 0..n_steps {
        let (v0, v1) = (&reference.states[m], &reference.states[m + 1]);
        let r = residual_quad(&space, tau, v0, v1);
        let tube_v = problem.tube_from(&space, v0, &radius);
        let f = tube_v.project(&r);
        delta.push(space.quad_norm(&diff(&r, &f)));

        let tube_u = problem.tube_from(&space, &u, &radius);
        let d = diff(v0, &u);
        let d_quad = space.eval_quad(&d);
        let d_sq = space.inner_h(&d, &d);
        let mut g = tube_u.point_at_offset(&tube_v.offset_of(&f));
        if config.refine {
            let hs = HalfSpace {
                normal: d_quad.iter().map(|x| -x).collect(),
                offset: ell * d_sq - space.quad_inner(&f, &d_quad),
            };
            g = tube_u.project_with_halfspace(
                &hs,
                &f,
                config.dykstra_tol,
                config.dykstra_max_iter,
            )?;
        }

        let scale = 1.0f64.max(d_sq).max(space.quad_norm(&f) * d_sq.sqrt());
        let ln_res = space.quad_inner(&diff(&f, &g), &d_quad) - ell * d_sq;
        max_ln_residual = max_ln_residual.max(ln_res);
        let tube_excess = tube_u.max_violation(&g);
        if tube_excess > 1e-9 || ln_res > 1e-9 * scale {
            return Err(Error::InfeasibleSelection {
                step: m,
                detail: format!("tube excess {tube_excess:e}, L_N residual {ln_res:e}"),
            });
        }

        let u_next = stepper.step(&u, &g)?;
        let e0 = d;
        let e1 = diff(v1, &u_next);
        let dv = diff(v1, v0);
        let de = diff(&e1, &e0);
        let remainder =
            space.inner_v(&dv, &e1) + space.quad_inner(&diff(&f, &g), &space.eval_quad(&de));
        let e1_norm = space.norm_h(&e1);
        rho.push(if e1_norm > 0.0 {
            remainder.max(0.0) / e1_norm
        } else {
            0.0
        });

        states.push(std::mem::replace(&mut u, u_next));
        forcings.push(g);
    }
    states.push(u);

    let t_final = reference.t_final();
    let c_ell = c_ell_constant(ell, t_final);
    let gaps: Vec<f64> = reference
        .states
        .iter()
        .zip(&states)
        .map(|(v, u)| space.norm_h(&diff(v, u)))
        .collect();
    let initial_gap = gaps[0];
    let delta_l1 = tau * delta.iter().sum::<f64>();
    let rho_l1 = tau * rho.iter().sum::<f64>();
    let linf = gaps.iter().copied().fold(0.0, f64::max);

    // E_{m+1} <= (1 + τℓ₊)E_m + τ(δ_m + ρ_m)(1 + q_m), q_m = (E_{m+1} - E_m)₊/(E_{m+1} + E_m).
    let growth_excess: f64 = (0..n_steps)
        .map(|m| {
            let (a, b) = (gaps[m], gaps[m + 1]);
            let q = if b > a { (b - a) / (b + a) } else { 0.0 };
            rho[m] + (delta[m] + rho[m]) * q
        })
        .sum::<f64>()
        * tau;

    let l2v_sq: f64 = (1..=n_steps)
        .map(|m| {
            let e = diff(&reference.states[m], &states[m]);
            tau * space.inner_v(&e, &e)
        })
        .sum();
    let ell_plus_l1 = ell.max(0.0) * t_final;

    let cert = FilippovCertificate {
        tau,
        level: space.level(),
        c_ell,
        delta_l1,
        initial_gap,
        lhs41: linf,
        rhs41: c_ell * (initial_gap + delta_l1),
        slack41: c_ell * growth_excess,
        lhs42: l2v_sq,
        rhs42: delta_l1 * linf + ell_plus_l1 * linf * linf + initial_gap * initial_gap,
        slack42: rho_l1 * linf,
        delta,
        rho,
        max_ln_residual,
    };
    let tracked = Trajectory {
        space,
        tau,
        times: reference.times.clone(),
        states,
        forcings,
        strategy: format!("tracked({})", reference.strategy),
        seed: reference.seed,
    };
    Ok((tracked, cert))
}

/// Galerkin approximation on `coarse` of the linear problem `w' + Aw = f`
/// driven by the forcing recorded in `fine`, from `P_N u0`.
pub fn linear_track(
    fine: &Trajectory,
    coarse: &Arc<FemSpace>,
    problem: &InclusionProblem,
) -> Result<Trajectory> {
    let (from, to) = (fine.space.grid(), coarse.grid());
    if !from.refines(to) {
        return Err(Error::SpaceMismatch(format!(
            "level {} does not refine level {}",
            from.level, to.level
        )));
    }
    if fine.forcings.len() != fine.n_steps() {
        return Err(Error::InvalidArgument(
            "fine trajectory carries no forcing record".into(),
        ));
    }
    let stepper = ImexStepper::new(coarse, fine.tau)?;
    let mut c = problem.initial_value(coarse).into_coeffs();
    let mut states = Vec::with_capacity(fine.n_steps() + 1);
    let mut forcings = Vec::with_capacity(fine.n_steps());
    for f in &fine.forcings {
        let load = restrict_load(&fine.space.load_vector(f), from, to)?;
        let next = stepper.step_load(&c, &load)?;
        // P_N f at coarse quadrature points has exactly this load vector.
        forcings.push(coarse.eval_quad(&coarse.solve_mass(&load)?));
        states.push(std::mem::replace(&mut c, next));
    }
    states.push(c);
    Ok(Trajectory {
        space: Arc::clone(coarse),
        tau: fine.tau,
        times: fine.times.clone(),
        states,
        forcings,
        strategy: format!("linear({})", fine.strategy),
        seed: fine.seed,
    })
}

/// `W₊*`-surrogate distance between `fine` and a coarser trajectory on the
/// same time grid, measured on the fine space.
pub fn wplus_star_distance(fine: &Trajectory, coarse: &Trajectory) -> Result<f64> {
    if fine.n_steps() != coarse.n_steps() || (fine.tau - coarse.tau).abs() > 1e-15 {
        return Err(Error::InvalidArgument("time grids differ".into()));
    }
    let space = &fine.space;
    let mut max_h = 0.0f64;
    let mut v_sq = Vec::with_capacity(fine.states.len());
    for (a, b) in fine.states.iter().zip(&coarse.states) {
        let lifted = crate::fem::prolong_coeffs(b, coarse.space.grid(), space.grid())?;
        let e: Vec<f64> = a.iter().zip(&lifted).map(|(x, y)| x - y).collect();
        max_h = max_h.max(space.norm_h(&e));
        v_sq.push(space.inner_v(&e, &e));
    }
    Ok(max_h + crate::solver::trapezoid(&v_sq, fine.tau).max(0.0).sqrt())
}
