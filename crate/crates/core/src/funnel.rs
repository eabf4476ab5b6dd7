//! Finite samples of Galerkin solution funnels, Hausdorff convergence tables,
//! the a-priori constant ledger and a Gronwall bound calculator.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{estimate_embedding_constants, estimate_projection_stability, fmt_f64, FemSpace};
use crate::problem::InclusionProblem;
use crate::setvalued::{distance_matrix, DistanceMatrix};
use crate::solver::{
    common_grid, l2h_lifted, lift, solve, SelectionStrategy, SolverConfig, Trajectory,
};

/// Evaluates `s0 e^{∫_0^t κ} + ∫_0^t e^{∫_σ^t κ} ρ(σ) dσ` at each sample time,
/// with trapezoid quadrature for both integrals.
pub fn gronwall_bound(s0: f64, kappa: &[f64], rho: &[f64], times: &[f64]) -> Result<Vec<f64>> {
    let n = times.len();
    if kappa.len() != n || rho.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: kappa.len().min(rho.len()),
        });
    }
    if let Some(r) = rho.iter().find(|r| !(**r >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "rho must be nonnegative, got {r}"
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(n);
    let mut k_int = 0.0;
    let mut r_int = 0.0;
    out.push(s0);
    for j in 0..n - 1 {
        let dt = times[j + 1] - times[j];
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(
                "times must increase strictly".into(),
            ));
        }
        let dk = 0.5 * dt * (kappa[j] + kappa[j + 1]);
        let grow = dk.exp();
        k_int += dk;
        r_int = grow * r_int + 0.5 * dt * (grow * rho[j] + rho[j + 1]);
        out.push(s0 * k_int.exp() + r_int);
    }
    Ok(out)
}

/// Raw inputs of the constant chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerData {
    /// `sup_N ‖u_{N,0}‖_H`.
    pub c0: f64,
    pub ell_l1: f64,
    pub alpha_l1: f64,
    pub t_final: f64,
    /// Coercivity constant `c_a`.
    pub c_a: f64,
    /// Boundedness constant `C_a`.
    pub big_c_a: f64,
    pub c_vh: f64,
    pub c_p: f64,
    pub c_f: f64,
    /// `C_ℓ`.
    pub c_ell: f64,
}

/// The a-priori constant ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub data: LedgerData,
    /// Factor applied to sampled embedding/stability constants.
    pub inflation: f64,
    pub k1: f64,
    pub c1: f64,
    pub k0: f64,
    pub c2: f64,
    pub k0_prime: f64,
}

impl BoundsReport {
    pub fn from_data(data: LedgerData, inflation: f64) -> Self {
        let k1 = data.ell_l1.exp() * (data.c0 + data.alpha_l1);
        let c1 = 0.5 * data.c0 * data.c0 + k1 * (k1 * data.ell_l1 + data.alpha_l1);
        let k0 = (c1 / data.c_a).sqrt();
        let c2 = data.alpha_l1 + data.c_f * data.c_vh * (data.t_final.sqrt() + k0) * k0;
        let k0_prime = data.big_c_a * data.c_p * k0 + c2;
        Self {
            data,
            inflation,
            k1,
            c1,
            k0,
            c2,
            k0_prime,
        }
    }

    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        let d = &self.data;
        vec![
            ("C0", d.c0),
            ("ell_L1", d.ell_l1),
            ("alpha_L1", d.alpha_l1),
            ("T", d.t_final),
            ("c_a", d.c_a),
            ("C_a", d.big_c_a),
            ("c_VH", d.c_vh),
            ("C_P", d.c_p),
            ("c_F", d.c_f),
            ("C_ell", d.c_ell),
            ("inflation", self.inflation),
            ("K1", self.k1),
            ("C1", self.c1),
            ("K0", self.k0),
            ("C2", self.c2),
            ("K0prime", self.k0_prime),
        ]
    }

    /// `name,value` table.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("name,value\n");
        for (k, v) in self.rows() {
            s.push_str(&format!("{k},{}\n", fmt_f64(v)));
        }
        s
    }
}

/// Inflation applied to sampled constants before they enter the ledger.
pub const LEDGER_INFLATION: f64 = 1.05;

/// Sampled constants feeding [`apriori_constants`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantEstimates {
    pub c_vh: f64,
    pub c_inf: f64,
    /// `max_N ‖P_N‖_{L(V)}` over the requested levels.
    pub c_p: f64,
}

/// Samples `c_VH`, `C_∞` on the finest level and the `V`-stability of `P_N`.
pub fn estimate_constants(
    problem: &InclusionProblem,
    levels: &[u32],
    n_samples: usize,
    seed: u64,
) -> Result<ConstantEstimates> {
    let finest = *levels
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidArgument("levels must be nonempty".into()))?;
    let emb = estimate_embedding_constants(&problem.space(finest)?, n_samples, seed)?;
    let stab = estimate_projection_stability(problem.x_lo, problem.x_hi, levels, n_samples, seed)?;
    Ok(ConstantEstimates {
        c_vh: emb.c_vh,
        c_inf: emb.c_inf,
        c_p: stab.iter().map(|s| s.1).fold(0.0, f64::max),
    })
}

/// Ledger for `problem` with `ℓ` and `α` constant in time, so that
/// `‖ℓ‖_{L¹} = |ℓ| T` and `‖α‖_{L¹} = T‖h‖_H`. Sampled constants are inflated
/// by [`LEDGER_INFLATION`]; `c_F = max(1, C_∞)`.
pub fn apriori_constants(
    problem: &InclusionProblem,
    levels: &[u32],
    est: &ConstantEstimates,
) -> Result<BoundsReport> {
    let c0 = levels
        .iter()
        .map(|&l| Ok(problem.initial_value(&problem.space(l)?).norm_h()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let t = problem.t_final;
    let data = LedgerData {
        c0,
        ell_l1: problem.ell.abs() * t,
        alpha_l1: t * problem.alpha(),
        t_final: t,
        c_a: 1.0,
        big_c_a: 1.0,
        c_vh: LEDGER_INFLATION * est.c_vh,
        c_p: LEDGER_INFLATION * est.c_p,
        c_f: (LEDGER_INFLATION * est.c_inf).max(1.0),
        c_ell: crate::tracking::c_ell_constant(problem.ell, t),
    };
    Ok(BoundsReport::from_data(data, LEDGER_INFLATION))
}

/// Trajectories of one level sharing `τ`, `T` and `u_{N,0} = P_N u0`.
#[derive(Debug, Clone)]
pub struct FunnelSample {
    pub level: u32,
    pub space: Arc<FemSpace>,
    pub roster: Vec<SelectionStrategy>,
    pub trajectories: Vec<Trajectory>,
}

impl FunnelSample {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }
}

/// Twenty selections: five constant offsets, three projection targets, four
/// extremal sign patterns and eight random offset fields.
pub fn default_roster() -> Vec<SelectionStrategy> {
    let mut r = Vec::with_capacity(20);
    for theta in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        r.push(SelectionStrategy::ConstantTheta { theta });
    }
    for target in [-1.0, 0.0, 1.0] {
        r.push(SelectionStrategy::Projection { target });
    }
    for signs in [
        vec![1, -1],
        vec![-1, 1],
        vec![1, -1, 1, -1],
        vec![-1, 1, -1, 1],
    ] {
        r.push(SelectionStrategy::Extremal { signs });
    }
    for seed in 1..=8 {
        r.push(SelectionStrategy::RandomTheta {
            seed,
            n_switches: 4,
            n_pieces: 8,
        });
    }
    r
}

/// One trajectory per strategy, computed in parallel; order follows `roster`.
pub fn sample_funnel(
    problem: &InclusionProblem,
    level: u32,
    roster: &[SelectionStrategy],
    config: &SolverConfig,
) -> Result<FunnelSample> {
    if roster.is_empty() {
        return Err(Error::InvalidArgument("strategy roster is empty".into()));
    }
    let space = problem.space(level)?;
    let trajectories = roster
        .par_iter()
        .map(|s| solve(problem, &space, s, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(FunnelSample {
        level,
        space,
        roster: roster.to_vec(),
        trajectories,
    })
}

/// Semi-distances and Hausdorff distance of two funnels in `L²(0,T;H)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunnelDistance {
    pub semi_ab: f64,
    pub semi_ba: f64,
    pub hausdorff: f64,
    pub matrix: DistanceMatrix,
}

pub fn funnel_hausdorff(a: &FunnelSample, b: &FunnelSample) -> Result<FunnelDistance> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let all: Vec<&Trajectory> = a.trajectories.iter().chain(&b.trajectories).collect();
    let (space, n_steps) = common_grid(&all)?;
    let lift_all = |s: &FunnelSample| {
        s.trajectories
            .par_iter()
            .map(|t| lift(t, &space, n_steps))
            .collect::<Result<Vec<_>>>()
    };
    let (la, lb) = (lift_all(a)?, lift_all(b)?);
    let matrix = distance_matrix(&la, &lb, l2h_lifted)?;
    let semi_ab = matrix.semidist_rows();
    let semi_ba = matrix.semidist_cols();
    Ok(FunnelDistance {
        semi_ab,
        semi_ba,
        hausdorff: semi_ab.max(semi_ba),
        matrix,
    })
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub level_a: u32,
    pub level_b: u32,
    pub semi_ab: f64,
    pub semi_ba: f64,
    pub hausdorff: f64,
    pub n_traj: usize,
    pub tau: f64,
    pub runtime_s: f64,
}

impl TableRow {
    pub const CSV_HEADER: &'static str = "levelA,levelB,semiAB,semiBA,hausdorff,n_traj,tau";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.level_a,
            self.level_b,
            fmt_f64(self.semi_ab),
            fmt_f64(self.semi_ba),
            fmt_f64(self.hausdorff),
            self.n_traj,
            fmt_f64(self.tau)
        )
    }
}

pub fn table_to_csv(rows: &[TableRow]) -> String {
    let mut s = format!("{}\n", TableRow::CSV_HEADER);
    for r in rows {
        s.push_str(&r.to_csv_row());
        s.push('\n');
    }
    s
}

/// Distances between funnels of consecutive levels with the same roster.
pub fn convergence_table(
    problem: &InclusionProblem,
    levels: &[u32],
    roster: &[SelectionStrategy],
    config: &SolverConfig,
) -> Result<Vec<TableRow>> {
    if levels.len() < 2 {
        return Err(Error::InvalidArgument(
            "a table needs at least two levels".into(),
        ));
    }
    let mut prev: Option<FunnelSample> = None;
    let mut rows = Vec::with_capacity(levels.len() - 1);
    for &level in levels {
        let start = Instant::now();
        let cur = sample_funnel(problem, level, roster, config)?;
        if let Some(p) = prev.take() {
            let d = funnel_hausdorff(&p, &cur)?;
            rows.push(TableRow {
                level_a: p.level,
                level_b: cur.level,
                semi_ab: d.semi_ab,
                semi_ba: d.semi_ba,
                hausdorff: d.hausdorff,
                n_traj: roster.len(),
                tau: config.tau,
                runtime_s: start.elapsed().as_secs_f64(),
            });
        }
        prev = Some(cur);
    }
    Ok(rows)
}

/// Per-trajectory margins against the ledger bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct AprioriMargin {
    pub strategy: String,
    pub max_norm_h: f64,
    pub l2v_norm: f64,
    /// `K₁ (1 + slack) - max_m ‖u^m‖_H`.
    pub k1_margin: f64,
    /// `K₀ (1 + slack) - ‖u‖_{L²(0,T;V)}`.
    pub k0_margin: f64,
}

impl AprioriMargin {
    pub fn pass(&self) -> bool {
        self.k1_margin >= 0.0 && self.k0_margin >= 0.0
    }
}

/// Checks every trajectory against `K₁` and `K₀` with relative slack `rel_slack`.
pub fn verify_apriori(
    funnel: &FunnelSample,
    report: &BoundsReport,
    rel_slack: f64,
) -> Vec<AprioriMargin> {
    funnel
        .trajectories
        .iter()
        .map(|t| {
            let (h, v) = (t.max_norm_h(), t.l2v_norm());
            AprioriMargin {
                strategy: t.strategy.clone(),
                max_norm_h: h,
                l2v_norm: v,
                k1_margin: report.k1 * (1.0 + rel_slack) - h,
                k0_margin: report.k0 * (1.0 + rel_slack) - v,
            }
        })
        .collect()
}
