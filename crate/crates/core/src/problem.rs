//! Inclusion data `(A, F, u0)` and sampling validators for the structural
//! assumptions on `F`.
//!
//! `A` is fixed to the Dirichlet Laplacian (stiffness matrix). `F` is the tube
//! map `F(t, v) = { f : |g(v(x)) - f(x)| <= h(x) }` built from a scalar
//! nonlinearity `g` and a nonnegative radius `h`; it does not depend on `t`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{fmt_f64, FemSpace, NodalFunction};
use crate::sampling::{derive_seed, random_coeffs, rng_for};
use crate::setvalued::TubeSet;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A labelled real function of one variable.
#[derive(Clone)]
pub struct ScalarField {
    label: String,
    f: ScalarFn,
}

impl ScalarField {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("constant({c})"), move |_| c)
    }

    /// Piecewise-linear field read from a nodal function.
    pub fn from_nodal(v: NodalFunction) -> Self {
        let label = format!("nodal(level {})", v.space().level());
        Self::new(label, move |x| v.eval_at(x))
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.label)
    }
}

/// Scalar nonlinearity `g` of the Nemytskii operator `N_g(v)(x) = g(v(x))`.
#[derive(Clone)]
pub enum ScalarNonlinearity {
    /// `g(η) = η(1 - |η|)`.
    SoftCubic,
    /// `g(η) = η(1 - |η|^(2-ε))`, `0 < ε <= 2`.
    EpsPower(f64),
    Custom {
        name: String,
        g: ScalarFn,
        /// Constant `ℓ` with `(g(ξ) - g(η))(ξ - η) <= ℓ (ξ - η)²`.
        osl: f64,
    },
}

impl ScalarNonlinearity {
    pub fn eps_power(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 2.0) {
            return Err(Error::InvalidArgument(format!(
                "eps_power needs 0 < eps <= 2, got {eps}"
            )));
        }
        Ok(Self::EpsPower(eps))
    }

    pub fn zero() -> Self {
        Self::Custom {
            name: "zero".into(),
            g: Arc::new(|_| 0.0),
            osl: 0.0,
        }
    }

    pub fn eval(&self, eta: f64) -> f64 {
        match self {
            Self::SoftCubic => eta * (1.0 - eta.abs()),
            Self::EpsPower(eps) => eta * (1.0 - eta.abs().powf(2.0 - eps)),
            Self::Custom { g, .. } => g(eta),
        }
    }

    /// One-sided Lipschitz constant of the scalar map.
    pub fn osl_constant(&self) -> f64 {
        match self {
            // g'(η) = 1 - (3 - ε)|η|^(2-ε) <= 1
            Self::SoftCubic | Self::EpsPower(_) => 1.0,
            Self::Custom { osl, .. } => *osl,
        }
    }

    pub fn tag(&self) -> String {
        match self {
            Self::SoftCubic => "soft_cubic".into(),
            Self::EpsPower(e) => format!("eps_power({e})"),
            Self::Custom { name, .. } => name.clone(),
        }
    }
}

impl fmt::Debug for ScalarNonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag())
    }
}

/// Shipped initial-value presets; `s = (x - x_lo) / (x_hi - x_lo)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialPreset {
    /// `16 s²(1 - s)²`, peak 1 at the midpoint.
    Bump,
    /// `sin(π s)`.
    Sine,
}

impl InitialPreset {
    pub fn field(self, x_lo: f64, x_hi: f64, scale: f64) -> ScalarField {
        let len = x_hi - x_lo;
        match self {
            Self::Bump => ScalarField::new(format!("bump*{scale}"), move |x| {
                let s = (x - x_lo) / len;
                scale * 16.0 * s * s * (1.0 - s) * (1.0 - s)
            }),
            Self::Sine => ScalarField::new(format!("sine*{scale}"), move |x| {
                scale * (std::f64::consts::PI * (x - x_lo) / len).sin()
            }),
        }
    }
}

/// Level used to evaluate `α = ‖h‖_H` independently of any solver level.
pub const ALPHA_LEVEL: u32 = 10;

/// `u' + Au ∈ F(u)` on `(x_lo, x_hi) × (0, T)` with tube map `F`.
#[derive(Debug, Clone)]
pub struct InclusionProblem {
    pub x_lo: f64,
    pub x_hi: f64,
    pub nonlinearity: ScalarNonlinearity,
    pub radius: ScalarField,
    pub u0: ScalarField,
    pub t_final: f64,
    /// Time-independent one-sided Lipschitz constant of `F`.
    pub ell: f64,
}

impl InclusionProblem {
    pub fn new(
        x_lo: f64,
        x_hi: f64,
        nonlinearity: ScalarNonlinearity,
        radius: ScalarField,
        u0: ScalarField,
        t_final: f64,
        ell: f64,
    ) -> Result<Self> {
        if !(x_lo < x_hi) {
            return Err(Error::InvalidArgument(format!(
                "degenerate interval [{x_lo}, {x_hi}]"
            )));
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "T must be positive, got {t_final}"
            )));
        }
        if !ell.is_finite() {
            return Err(Error::InvalidArgument("ell must be finite".into()));
        }
        let probe = FemSpace::new(x_lo, x_hi, ALPHA_LEVEL)?;
        if let Some(x) = probe
            .quad_points()
            .iter()
            .find(|&&x| !(radius.eval(x) >= 0.0))
        {
            return Err(Error::InvalidArgument(format!(
                "radius negative or undefined at x = {x}"
            )));
        }
        Ok(Self {
            x_lo,
            x_hi,
            nonlinearity,
            radius,
            u0,
            t_final,
            ell,
        })
    }

    /// Soft-cubic example on `(0, 1)` with constant radius `h`, bump initial
    /// value, `T = 1` and `ℓ = 1`.
    pub fn reference(h: f64) -> Self {
        Self::new(
            0.0,
            1.0,
            ScalarNonlinearity::SoftCubic,
            ScalarField::constant(h),
            InitialPreset::Bump.field(0.0, 1.0, 1.0),
            1.0,
            1.0,
        )
        .expect("reference problem is valid for h >= 0")
    }

    pub fn space(&self, level: u32) -> Result<Arc<FemSpace>> {
        FemSpace::new(self.x_lo, self.x_hi, level)
    }

    /// `u_{N,0} = P_N u0`.
    pub fn initial_value(&self, space: &Arc<FemSpace>) -> NodalFunction {
        space.project_fn(|x| self.u0.eval(x))
    }

    /// `α = ‖h‖_H` (constant in time).
    pub fn alpha(&self) -> f64 {
        let s = FemSpace::new(self.x_lo, self.x_hi, ALPHA_LEVEL).expect("valid interval");
        let h: Vec<f64> = s
            .quad_points()
            .iter()
            .map(|&x| self.radius.eval(x))
            .collect();
        s.quad_norm(&h)
    }

    pub fn radius_quad(&self, space: &FemSpace) -> Vec<f64> {
        space
            .quad_points()
            .iter()
            .map(|&x| self.radius.eval(x))
            .collect()
    }

    /// `g(v(x_q))` at every quadrature point.
    pub fn center_quad(&self, space: &FemSpace, coeffs: &[f64]) -> Vec<f64> {
        space
            .eval_quad(coeffs)
            .into_iter()
            .map(|v| self.nonlinearity.eval(v))
            .collect()
    }

    /// The tube `F(t, v)`.
    pub fn evaluate_f(&self, _t: f64, v: &NodalFunction) -> TubeSet {
        let space = v.space();
        TubeSet::new(
            Arc::clone(space),
            self.center_quad(space, v.coeffs()),
            self.radius_quad(space),
        )
        .expect("radius validated at construction")
    }

    /// Tube from coefficients and a precomputed radius.
    pub(crate) fn tube_from(
        &self,
        space: &Arc<FemSpace>,
        coeffs: &[f64],
        radius: &[f64],
    ) -> TubeSet {
        TubeSet::new(
            Arc::clone(space),
            self.center_quad(space, coeffs),
            radius.to_vec(),
        )
        .expect("radius validated at construction")
    }
}

/// Free-function form of [`InclusionProblem::evaluate_f`].
pub fn evaluate_f(problem: &InclusionProblem, t: f64, v: &NodalFunction) -> TubeSet {
    problem.evaluate_f(t, v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthMode {
    /// `c_F (1 + ‖u‖_V + ‖v‖_V) ‖u - v‖_H`.
    A3,
    /// `b(‖u‖_H + ‖v‖_H)(1 + ‖u‖_V^β + ‖v‖_V^β) ‖u - v‖_H^γ`.
    A3Prime,
}

/// Parameters of a local Lipschitz/growth hypothesis on `F`.
#[derive(Debug, Clone)]
pub struct GrowthSpec {
    pub mode: GrowthMode,
    pub c_f: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Nonnegative, nondecreasing weight; used in `A3Prime` mode only.
    pub b: ScalarField,
}

impl GrowthSpec {
    pub fn a3(c_f: f64) -> Self {
        Self {
            mode: GrowthMode::A3,
            c_f,
            beta: 1.0,
            gamma: 1.0,
            b: ScalarField::constant(c_f),
        }
    }

    /// `c_F = max(1, C_∞)`, the constant for the soft-cubic tube map.
    pub fn a3_soft_cubic(c_inf: f64) -> Self {
        Self::a3(c_inf.max(1.0))
    }

    pub fn a3_prime(b: ScalarField, beta: f64, gamma: f64) -> Result<Self> {
        if !(0.0..2.0).contains(&beta) {
            return Err(Error::InvalidArgument(format!(
                "beta must lie in [0, 2), got {beta}"
            )));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma must lie in (0, 1], got {gamma}"
            )));
        }
        Ok(Self {
            mode: GrowthMode::A3Prime,
            c_f: f64::NAN,
            beta,
            gamma,
            b,
        })
    }

    /// Parameters for `g(η) = η(1 - |η|^(2-ε))`: from
    /// `|g'(η)| <= 1 + (3 - ε)|η|^(2-ε)` and `‖v‖_∞ <= C_∞ ‖v‖_V` one gets
    /// `β = 2 - ε`, `γ = 1`, `b ≡ max(1, (3 - ε) C_∞^(2-ε))`.
    pub fn for_eps_power(eps: f64, c_inf: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 2.0) {
            return Err(Error::InvalidArgument(format!(
                "eps must lie in (0, 2], got {eps}"
            )));
        }
        let b = ((3.0 - eps) * c_inf.powf(2.0 - eps)).max(1.0);
        Self::a3_prime(ScalarField::constant(b), 2.0 - eps, 1.0)
    }

    /// Right-hand side of the Lipschitz-type estimate.
    pub fn lipschitz_rhs(&self, nh_u: f64, nh_v: f64, nv_u: f64, nv_v: f64, diff_h: f64) -> f64 {
        match self.mode {
            GrowthMode::A3 => self.c_f * (1.0 + nv_u + nv_v) * diff_h,
            GrowthMode::A3Prime => {
                self.b.eval(nh_u + nh_v)
                    * (1.0 + nv_u.powf(self.beta) + nv_v.powf(self.beta))
                    * diff_h.powf(self.gamma)
            }
        }
    }

    pub fn describe(&self) -> String {
        match self.mode {
            GrowthMode::A3 => format!("c_F={}", fmt_f64(self.c_f)),
            GrowthMode::A3Prime => format!(
                "b={};beta={};gamma={}",
                self.b.label(),
                fmt_f64(self.beta),
                fmt_f64(self.gamma)
            ),
        }
    }
}

/// Growth bound `‖F(t, v)‖_H <= α + c_F (1 + ‖v‖_V) ‖v‖_H` (or its A3′ variant).
pub fn growth_bound(problem: &InclusionProblem, spec: &GrowthSpec, v: &NodalFunction) -> f64 {
    growth_bound_with_alpha(problem.alpha(), spec, v)
}

fn growth_bound_with_alpha(alpha: f64, spec: &GrowthSpec, v: &NodalFunction) -> f64 {
    let nh = v.norm_h();
    let nv = v.norm_v();
    match spec.mode {
        GrowthMode::A3 => alpha + spec.c_f * (1.0 + nv) * nh,
        GrowthMode::A3Prime => {
            alpha + spec.b.eval(nh) * (1.0 + nv.powf(spec.beta)) * nh.powf(spec.gamma)
        }
    }
}

/// Sampling protocol shared by the validators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub n_samples: usize,
    pub seed: u64,
    /// Coefficient range `[-amplitude, amplitude]` of random functions.
    pub amplitude: f64,
}

impl Sampling {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        Self {
            n_samples,
            seed,
            amplitude: 2.0,
        }
    }
}

/// Result of one sampled check; one CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatorReport {
    pub check: String,
    pub samples: usize,
    pub worst_ratio: f64,
    /// Derived seed of the sample that attained `worst_ratio`.
    pub witness_seed: u64,
    pub pass: bool,
    /// Constants used by the check, for the record.
    pub params: String,
}

impl ValidatorReport {
    pub const CSV_HEADER: &'static str = "check,samples,worst_ratio,witness_seed,pass";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.check,
            self.samples,
            fmt_f64(self.worst_ratio),
            self.witness_seed,
            self.pass
        )
    }
}

/// Worst ratio over samples; ties resolved by the lowest index.
fn worst_of(samples: Vec<(f64, usize)>) -> (f64, usize) {
    samples
        .into_iter()
        .fold((f64::NEG_INFINITY, 0), |best, cur| {
            if cur.0 > best.0 {
                cur
            } else {
                best
            }
        })
}

fn draw(space: &Arc<FemSpace>, rng: &mut impl Rng, amplitude: f64) -> NodalFunction {
    NodalFunction::new(Arc::clone(space), random_coeffs(space, rng, amplitude))
        .expect("coefficients sized to space")
}

/// Sampled extremes of `a(v, v)/‖v‖_V²` and `|a(v, w)|/(‖v‖_V ‖w‖_V)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormBounds {
    /// Observed coercivity constant `c_a`.
    pub coercivity: f64,
    /// Observed boundedness constant `C_a`.
    pub bound: f64,
    pub samples: usize,
}

impl FormBounds {
    pub fn report(&self, tol: f64) -> ValidatorReport {
        ValidatorReport {
            check: "A1".into(),
            samples: self.samples,
            worst_ratio: self.bound,
            witness_seed: 0,
            pass: (self.coercivity - 1.0).abs() <= tol && (self.bound - 1.0).abs() <= tol,
            params: format!(
                "c_a={};C_a={}",
                fmt_f64(self.coercivity),
                fmt_f64(self.bound)
            ),
        }
    }
}

/// Rayleigh-quotient sampling of the Dirichlet form; both extremes are 1.
pub fn check_a1(space: &Arc<FemSpace>, sampling: Sampling) -> FormBounds {
    let per: Vec<Option<(f64, f64)>> = (0..sampling.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(sampling.seed, i as u64);
            let v = draw(space, &mut rng, sampling.amplitude);
            let w = draw(space, &mut rng, sampling.amplitude);
            let (nv, nw) = (v.norm_v(), w.norm_v());
            if nv < 1e-8 || nw < 1e-8 {
                return None;
            }
            let avv = space.inner_v(v.coeffs(), v.coeffs());
            let avw = space.inner_v(v.coeffs(), w.coeffs());
            let coercive = avv / (nv * nv);
            Some((coercive, coercive.max(avw.abs() / (nv * nw))))
        })
        .collect();
    let mut out = FormBounds {
        coercivity: f64::INFINITY,
        bound: 0.0,
        samples: sampling.n_samples,
    };
    for (c, b) in per.into_iter().flatten() {
        out.coercivity = out.coercivity.min(c);
        out.bound = out.bound.max(b);
    }
    out
}

/// Tolerance on ratios reported by [`check_a3`] and friends.
pub const RATIO_TOL: f64 = 1e-9;

fn lipschitz_check(
    problem: &InclusionProblem,
    space: &Arc<FemSpace>,
    spec: &GrowthSpec,
    sampling: Sampling,
    name: &str,
) -> ValidatorReport {
    let ratios: Vec<(f64, usize)> = (0..sampling.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(sampling.seed, i as u64);
            let u = draw(space, &mut rng, sampling.amplitude);
            let v = draw(space, &mut rng, sampling.amplitude);
            (lipschitz_ratio(problem, spec, &u, &v), i)
        })
        .collect();
    let (worst, idx) = worst_of(ratios);
    let worst = worst.max(0.0);
    ValidatorReport {
        check: name.into(),
        samples: sampling.n_samples,
        worst_ratio: worst,
        witness_seed: derive_seed(sampling.seed, idx as u64),
        pass: worst <= 1.0 + RATIO_TOL,
        params: spec.describe(),
    }
}

/// `dist_H(F(u), F(v)) / rhs`; tubes with a common radius are translates, so
/// their Hausdorff distance is the distance of the centers.
pub fn lipschitz_ratio(
    problem: &InclusionProblem,
    spec: &GrowthSpec,
    u: &NodalFunction,
    v: &NodalFunction,
) -> f64 {
    let space = u.space();
    let diff = u.sub(v).expect("same space");
    if diff.norm_v() < 1e-8 {
        return 0.0;
    }
    let cu = problem.center_quad(space, u.coeffs());
    let cv = problem.center_quad(space, v.coeffs());
    let dc: Vec<f64> = cu.iter().zip(&cv).map(|(a, b)| a - b).collect();
    let lhs = space.quad_norm(&dc);
    let rhs = spec.lipschitz_rhs(
        u.norm_h(),
        v.norm_h(),
        u.norm_v(),
        v.norm_v(),
        diff.norm_h(),
    );
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

pub fn check_a3(
    problem: &InclusionProblem,
    space: &Arc<FemSpace>,
    spec: &GrowthSpec,
    sampling: Sampling,
) -> Result<ValidatorReport> {
    if spec.mode != GrowthMode::A3 {
        return Err(Error::InvalidArgument(
            "check_a3 needs an A3 growth spec".into(),
        ));
    }
    Ok(lipschitz_check(problem, space, spec, sampling, "A3"))
}

pub fn check_a3_prime(
    problem: &InclusionProblem,
    space: &Arc<FemSpace>,
    spec: &GrowthSpec,
    sampling: Sampling,
) -> Result<ValidatorReport> {
    if spec.mode != GrowthMode::A3Prime {
        return Err(Error::InvalidArgument(
            "check_a3_prime needs an A3' growth spec".into(),
        ));
    }
    Ok(lipschitz_check(problem, space, spec, sampling, "A3prime"))
}

/// Relaxed one-sided Lipschitz check with matched tube offsets: for
/// `g = N_g(v) + θh` the candidate `g̃ = N_g(ṽ) + θh` must satisfy
/// `(g - g̃, v - ṽ) <= ℓ ‖v - ṽ‖_H²`.
pub fn check_a4(
    problem: &InclusionProblem,
    space: &Arc<FemSpace>,
    sampling: Sampling,
) -> ValidatorReport {
    let radius = problem.radius_quad(space);
    let ell = problem.ell;
    let rows: Vec<(f64, bool, usize)> = (0..sampling.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(sampling.seed, i as u64);
            let v = draw(space, &mut rng, sampling.amplitude);
            let w = draw(space, &mut rng, sampling.amplitude);
            let theta: Vec<f64> = (0..space.n_quad())
                .map(|_| rng.gen_range(-1.0..=1.0))
                .collect();
            let tv = problem.tube_from(space, v.coeffs(), &radius);
            let tw = problem.tube_from(space, w.coeffs(), &radius);
            let g = tv.point_at_offset(&theta);
            let g_tilde = tw.point_at_offset(&theta);
            let dq: Vec<f64> = v
                .eval_quad()
                .iter()
                .zip(w.eval_quad())
                .map(|(a, b)| a - b)
                .collect();
            let dg: Vec<f64> = g.iter().zip(&g_tilde).map(|(a, b)| a - b).collect();
            let lhs = space.quad_inner(&dg, &dq);
            let d = v.sub(&w).expect("same space");
            let rhs = ell * d.norm_h().powi(2);
            let ok = lhs <= rhs + 1e-12 * rhs.abs().max(1.0);
            let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
            (ratio, ok, i)
        })
        .collect();
    let all_ok = rows.iter().all(|r| r.1);
    let (worst, idx) = worst_of(rows.iter().map(|r| (r.0, r.2)).collect());
    ValidatorReport {
        check: "A4".into(),
        samples: sampling.n_samples,
        worst_ratio: worst.max(0.0),
        witness_seed: derive_seed(sampling.seed, idx as u64),
        pass: all_ok,
        params: format!("ell={}", fmt_f64(ell)),
    }
}

/// Ratio `(‖N_g(v)‖_H + ‖h‖_H) / growth_bound`, which dominates
/// `‖F(t, v)‖_H / growth_bound`.
pub fn check_growth(
    problem: &InclusionProblem,
    space: &Arc<FemSpace>,
    spec: &GrowthSpec,
    sampling: Sampling,
) -> ValidatorReport {
    let alpha = problem.alpha();
    let radius = problem.radius_quad(space);
    let h_norm = space.quad_norm(&radius);
    let ratios: Vec<(f64, usize)> = (0..sampling.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(sampling.seed, i as u64);
            let v = draw(space, &mut rng, sampling.amplitude);
            let center = problem.center_quad(space, v.coeffs());
            let lhs = space.quad_norm(&center) + h_norm;
            let bound = growth_bound_with_alpha(alpha, spec, &v);
            let r = if bound > 0.0 {
                lhs / bound
            } else if lhs == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            (r, i)
        })
        .collect();
    let (worst, idx) = worst_of(ratios);
    ValidatorReport {
        check: "growth".into(),
        samples: sampling.n_samples,
        worst_ratio: worst.max(0.0),
        witness_seed: derive_seed(sampling.seed, idx as u64),
        pass: worst <= 1.0 + RATIO_TOL,
        params: format!("alpha={};{}", fmt_f64(alpha), spec.describe()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_cubic_values_and_scalar_inequalities() {
        let g = ScalarNonlinearity::SoftCubic;
        assert_eq!(g.eval(0.0), 0.0);
        assert_eq!(g.eval(0.5), 0.25);
        assert_eq!((g.eval(2.0) - g.eval(0.0)) * 2.0, -4.0);
        let n = 1000;
        for i in 0..=n {
            let xi = -5.0 + 10.0 * i as f64 / n as f64;
            for j in (0..=n).step_by(7) {
                let eta = -5.0 + 10.0 * j as f64 / n as f64;
                let d = xi - eta;
                assert!((g.eval(xi) - g.eval(eta)) * d <= d * d + 1e-12);
                assert!(
                    (g.eval(xi) - g.eval(eta)).abs()
                        <= (1.0 + xi.abs() + eta.abs()) * d.abs() + 1e-12
                );
            }
        }
    }

    #[test]
    fn eps_power_one_is_soft_cubic() {
        let a = ScalarNonlinearity::SoftCubic;
        let b = ScalarNonlinearity::eps_power(1.0).unwrap();
        for i in -50..=50 {
            let x = i as f64 * 0.173;
            assert_eq!(a.eval(x), b.eval(x));
        }
        assert!(ScalarNonlinearity::eps_power(0.0).is_err());
        assert!(ScalarNonlinearity::eps_power(2.5).is_err());
    }

    #[test]
    fn tube_at_zero_has_norm_h() {
        let p = InclusionProblem::reference(0.3);
        let s = p.space(4).unwrap();
        let tube = p.evaluate_f(0.0, &s.zero());
        assert!(tube.center().iter().all(|&c| c == 0.0));
        assert!((tube.norm() - 0.3).abs() < 1e-12);
        assert!((p.alpha() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn zero_radius_tube_is_single_valued() {
        let p = InclusionProblem::reference(0.0);
        let s = p.space(3).unwrap();
        let v = s.interpolate(|x| x * (1.0 - x));
        let tube = p.evaluate_f(0.5, &v);
        let c = tube.center().to_vec();
        assert!(tube.contains(&c, 0.0));
        let mut off = c.clone();
        off[4] += 1e-9;
        assert!(!tube.contains(&off, 0.0));
    }

    #[test]
    fn center_at_nodal_value_half() {
        let p = InclusionProblem::reference(0.1);
        let s = p.space(3).unwrap();
        let v = s.function(vec![0.5; s.dim()]).unwrap();
        let tube = p.evaluate_f(0.0, &v);
        // interior cells carry the constant 0.5
        for q in 5..(s.n_quad() - 5) {
            assert!((tube.center()[q] - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn negative_radius_and_bad_times_rejected() {
        let bad = InclusionProblem::new(
            0.0,
            1.0,
            ScalarNonlinearity::SoftCubic,
            ScalarField::new("neg", |x| x - 0.5),
            ScalarField::constant(0.0),
            1.0,
            1.0,
        );
        assert!(bad.is_err());
        let bad = InclusionProblem::new(
            0.0,
            1.0,
            ScalarNonlinearity::SoftCubic,
            ScalarField::constant(0.1),
            ScalarField::constant(0.0),
            0.0,
            1.0,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn a1_is_exact_for_dirichlet_form() {
        let s = InclusionProblem::reference(0.1).space(5).unwrap();
        let r = check_a1(&s, Sampling::new(200, 1));
        assert!((r.coercivity - 1.0).abs() < 1e-9);
        assert!((r.bound - 1.0).abs() < 1e-9);
        assert!(r.report(1e-9).pass);
    }

    #[test]
    fn equal_pair_has_zero_ratio() {
        let p = InclusionProblem::reference(0.1);
        let s = p.space(4).unwrap();
        let u = s.interpolate(|x| x.sin());
        assert_eq!(lipschitz_ratio(&p, &GrowthSpec::a3(1.0), &u, &u), 0.0);
    }

    #[test]
    fn shifted_pair_ratio_below_one() {
        let p = InclusionProblem::reference(0.1);
        let s = p.space(5).unwrap();
        let u = s.interpolate(|x| 1.5 * (3.0 * x).sin());
        let mut c = u.coeffs().to_vec();
        c[s.dim() / 2] += 0.3;
        let v = s.function(c).unwrap();
        let r = lipschitz_ratio(&p, &GrowthSpec::a3(1.0), &u, &v);
        assert!(r > 0.0 && r <= 1.0, "{r}");
    }

    #[test]
    fn a3_prime_with_unit_exponents_reproduces_a3() {
        let p = InclusionProblem::reference(0.1);
        let s = p.space(4).unwrap();
        let a3 = check_a3(&p, &s, &GrowthSpec::a3(1.0), Sampling::new(300, 9)).unwrap();
        let spec = GrowthSpec::a3_prime(ScalarField::constant(1.0), 1.0, 1.0).unwrap();
        let a3p = check_a3_prime(&p, &s, &spec, Sampling::new(300, 9)).unwrap();
        assert_eq!(a3.worst_ratio, a3p.worst_ratio);
        assert_eq!(a3.witness_seed, a3p.witness_seed);
        assert!(check_a3(&p, &s, &spec, Sampling::new(1, 1)).is_err());
        assert!(check_a3_prime(&p, &s, &GrowthSpec::a3(1.0), Sampling::new(1, 1)).is_err());
    }

    #[test]
    fn a4_reduces_to_scalar_osl_without_radius() {
        let p = InclusionProblem::reference(0.0);
        let s = p.space(4).unwrap();
        let r = check_a4(&p, &s, Sampling::new(500, 3));
        assert!(r.pass);
        assert!(r.worst_ratio <= 1.0 + 1e-12);
    }

    #[test]
    fn growth_bound_at_zero_is_alpha() {
        let p = InclusionProblem::reference(0.2);
        let s = p.space(4).unwrap();
        let z = s.zero();
        let spec = GrowthSpec::a3(1.0);
        assert!((growth_bound(&p, &spec, &z) - 0.2).abs() < 1e-12);
        assert!((p.evaluate_f(0.0, &z).norm() - 0.2).abs() < 1e-12);
        let p0 = InclusionProblem::reference(0.0);
        assert_eq!(growth_bound(&p0, &spec, &z), 0.0);
    }

    #[test]
    fn growth_spec_ranges() {
        assert!(GrowthSpec::a3_prime(ScalarField::constant(1.0), 2.0, 1.0).is_err());
        assert!(GrowthSpec::a3_prime(ScalarField::constant(1.0), 1.0, 0.0).is_err());
        let s = GrowthSpec::for_eps_power(0.5, 0.5).unwrap();
        assert_eq!(s.beta, 1.5);
        assert_eq!(s.gamma, 1.0);
    }
}
