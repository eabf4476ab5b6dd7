//! IMEX Euler time stepping of the Galerkin inclusion with pluggable
//! selection strategies, plus trajectory norms and the `L²(0,T;H)` metric.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{fmt_f64, prolong_coeffs, FemSpace, NodalFunction};
use crate::problem::InclusionProblem;
use crate::sampling::keyed_uniform;
use crate::setvalued::TubeSet;
use crate::tridiag::TridiagonalFactor;

/// Pointwise tolerance for tube membership of stored forcings.
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// Rule choosing `f^m ∈ F(t_m, u^m)`.
#[derive(Debug, Clone, PartialEq)]
pub enum SelectionStrategy {
    /// Nearest point of the tube to the constant function `target`.
    Projection { target: f64 },
    /// `center + θ·radius` with a fixed offset.
    ConstantTheta { theta: f64 },
    /// Offset `±1` (or 0) on each of `signs.len()` equal subintervals.
    Extremal { signs: Vec<i8> },
    /// Offset constant on `n_switches + 1` equal time segments and `n_pieces`
    /// equal subintervals, values uniform on `[-1, 1]` keyed by
    /// `(seed, segment, piece)`.
    RandomTheta {
        seed: u64,
        n_switches: usize,
        n_pieces: usize,
    },
}

impl SelectionStrategy {
    pub fn seed(&self) -> u64 {
        match self {
            Self::RandomTheta { seed, .. } => *seed,
            _ => 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        match self {
            Self::Projection { target } if !target.is_finite() => {
                bad(format!("projection target must be finite, got {target}"))
            }
            Self::ConstantTheta { theta } if !(-1.0..=1.0).contains(theta) => {
                bad(format!("theta must lie in [-1, 1], got {theta}"))
            }
            Self::Extremal { signs } if signs.is_empty() || signs.iter().any(|s| s.abs() > 1) => {
                bad("extremal signs must be a nonempty list of -1, 0, +1".into())
            }
            Self::RandomTheta { n_pieces: 0, .. } => bad("random theta needs n_pieces >= 1".into()),
            _ => Ok(()),
        }
    }

    fn piece_of(x: f64, x_lo: f64, len: f64, n: usize) -> usize {
        (((x - x_lo) / len * n as f64).floor().max(0.0) as usize).min(n - 1)
    }

    /// The selected forcing at quadrature points for step `step` of `n_steps`.
    pub fn select(&self, tube: &TubeSet, step: usize, n_steps: usize) -> Vec<f64> {
        let space = tube.space();
        let n = space.n_quad();
        let g = space.grid();
        let len = g.length();
        match self {
            Self::Projection { target } => tube.project(&vec![*target; n]),
            Self::ConstantTheta { theta } => tube.point_at_offset(&vec![*theta; n]),
            Self::Extremal { signs } => {
                let theta: Vec<f64> = space
                    .quad_points()
                    .iter()
                    .map(|&x| signs[Self::piece_of(x, g.x_lo, len, signs.len())] as f64)
                    .collect();
                tube.point_at_offset(&theta)
            }
            Self::RandomTheta {
                seed,
                n_switches,
                n_pieces,
            } => {
                let segment = (step * (n_switches + 1) / n_steps.max(1)) as u64;
                let values: Vec<f64> = (0..*n_pieces as u64)
                    .map(|p| keyed_uniform(*seed, segment, p))
                    .collect();
                let theta: Vec<f64> = space
                    .quad_points()
                    .iter()
                    .map(|&x| values[Self::piece_of(x, g.x_lo, len, *n_pieces)])
                    .collect();
                tube.point_at_offset(&theta)
            }
        }
    }
}

impl fmt::Display for SelectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Projection { target } => write!(f, "projection({target})"),
            Self::ConstantTheta { theta } => write!(f, "theta({theta})"),
            Self::Extremal { signs } => {
                let s: String = signs
                    .iter()
                    .map(|s| match s {
                        1 => '+',
                        -1 => '-',
                        _ => '0',
                    })
                    .collect();
                write!(f, "extremal({s})")
            }
            Self::RandomTheta {
                seed,
                n_switches,
                n_pieces,
            } => write!(f, "random({seed},{n_switches},{n_pieces})"),
        }
    }
}

impl FromStr for SelectionStrategy {
    type Err = Error;

    /// Parses `projection(κ)`, `theta(θ)`, `extremal(+-0+)` or
    /// `random(seed,switches,pieces)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let err = || Error::Parse(format!("bad strategy {s:?}"));
        let open = s.find('(').ok_or_else(err)?;
        if !s.ends_with(')') {
            return Err(err());
        }
        let name = s[..open].trim();
        let arg = s[open + 1..s.len() - 1].trim();
        let num = |a: &str| a.trim().parse::<f64>().map_err(|_| err());
        let out = match name {
            "projection" => Self::Projection { target: num(arg)? },
            "theta" => Self::ConstantTheta { theta: num(arg)? },
            "extremal" => Self::Extremal {
                signs: arg
                    .chars()
                    .map(|c| match c {
                        '+' => Ok(1),
                        '-' => Ok(-1),
                        '0' => Ok(0),
                        _ => Err(err()),
                    })
                    .collect::<Result<_>>()?,
            },
            "random" => {
                let parts: Vec<&str> = arg.split(',').map(str::trim).collect();
                if parts.len() != 3 {
                    return Err(err());
                }
                Self::RandomTheta {
                    seed: parts[0].parse().map_err(|_| err())?,
                    n_switches: parts[1].parse().map_err(|_| err())?,
                    n_pieces: parts[2].parse().map_err(|_| err())?,
                }
            }
            _ => return Err(err()),
        };
        out.validate().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(out)
    }
}

/// Uniform time grid `t_m = m τ`, `m = 0..=M`, with `M τ = T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tau: f64,
    pub t_final: f64,
}

impl SolverConfig {
    pub fn new(tau: f64, t_final: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= t_final && t_final.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < tau <= T, got tau={tau}, T={t_final}"
            )));
        }
        let m = (t_final / tau).round();
        if (m * tau - t_final).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "T={t_final} is not an integer multiple of tau={tau}"
            )));
        }
        Ok(Self { tau, t_final })
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.tau).round() as usize
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps()).map(|m| m as f64 * self.tau).collect()
    }
}

/// Discrete Galerkin trajectory: states `u^0..u^M` and forcings `f^0..f^{M-1}`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub space: Arc<FemSpace>,
    pub tau: f64,
    pub times: Vec<f64>,
    /// Nodal coefficients of `u^m`.
    pub states: Vec<Vec<f64>>,
    /// Quadrature-point values of `f^m`.
    pub forcings: Vec<Vec<f64>>,
    pub strategy: String,
    pub seed: u64,
}

impl Trajectory {
    pub fn n_steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn t_final(&self) -> f64 {
        *self.times.last().expect("nonempty trajectory")
    }

    pub fn state(&self, m: usize) -> NodalFunction {
        NodalFunction::new(Arc::clone(&self.space), self.states[m].clone())
            .expect("stored states match the space")
    }

    pub fn final_state(&self) -> NodalFunction {
        self.state(self.n_steps())
    }

    /// `max_m ‖u^m‖_H`.
    pub fn max_norm_h(&self) -> f64 {
        self.states
            .iter()
            .map(|c| self.space.norm_h(c))
            .fold(0.0, f64::max)
    }

    /// Trapezoid-rule `‖u‖_{L²(0,T;V)}`.
    pub fn l2v_norm(&self) -> f64 {
        let sq: Vec<f64> = self
            .states
            .iter()
            .map(|c| self.space.inner_v(c, c))
            .collect();
        trapezoid(&sq, self.tau).max(0.0).sqrt()
    }

    fn header(&self) -> String {
        let g = self.space.grid();
        format!(
            "level = {}\nx_lo = {}\nx_hi = {}\ntau = {}\nT = {}\nstrategy = {}\nseed = {}\n",
            g.level,
            fmt_f64(g.x_lo),
            fmt_f64(g.x_hi),
            fmt_f64(self.tau),
            fmt_f64(self.t_final()),
            self.strategy,
            self.seed
        )
    }

    /// Header lines followed by `t,c_1..c_dim` rows.
    pub fn to_file_string(&self) -> String {
        let mut s = self.header();
        s.push('t');
        for i in 1..=self.space.dim() {
            s.push_str(&format!(",c_{i}"));
        }
        s.push('\n');
        for (t, c) in self.times.iter().zip(&self.states) {
            push_row(&mut s, *t, c);
        }
        s
    }

    /// Header lines followed by `t,f_1..f_nq` rows at quadrature resolution.
    pub fn forcings_to_file_string(&self) -> String {
        let mut s = self.header();
        s.push('t');
        for i in 1..=self.space.n_quad() {
            s.push_str(&format!(",f_{i}"));
        }
        s.push('\n');
        for (t, f) in self.times.iter().zip(&self.forcings) {
            push_row(&mut s, *t, f);
        }
        s
    }

    /// Reads the format of [`Trajectory::to_file_string`]; forcings are left empty.
    pub fn from_file_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut header = std::collections::HashMap::new();
        for line in lines.by_ref() {
            if line.starts_with("t,") || line == "t" {
                break;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad header line {line:?}")))?;
            header.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            header
                .get(k)
                .cloned()
                .ok_or_else(|| Error::Parse(format!("missing header {k:?}")))
        };
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number {s:?}")))
        };
        let level: u32 = get("level")?
            .parse()
            .map_err(|_| Error::Parse("bad level".into()))?;
        let space = FemSpace::new(num(&get("x_lo")?)?, num(&get("x_hi")?)?, level)?;
        let tau = num(&get("tau")?)?;
        let seed: u64 = get("seed")?
            .parse()
            .map_err(|_| Error::Parse("bad seed".into()))?;
        let mut times = Vec::new();
        let mut states = Vec::new();
        for line in lines {
            let mut fields = line.split(',');
            times.push(num(fields.next().unwrap_or(""))?);
            let c = fields.map(num).collect::<Result<Vec<f64>>>()?;
            if c.len() != space.dim() {
                return Err(Error::DimensionMismatch {
                    expected: space.dim(),
                    got: c.len(),
                });
            }
            states.push(c);
        }
        if states.is_empty() {
            return Err(Error::Parse("trajectory has no rows".into()));
        }
        Ok(Self {
            space,
            tau,
            times,
            states,
            forcings: Vec::new(),
            strategy: get("strategy")?,
            seed,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_file_string())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_file_str(&fs::read_to_string(path)?)
    }
}

fn push_row(s: &mut String, t: f64, values: &[f64]) {
    s.push_str(&fmt_f64(t));
    for v in values {
        s.push(',');
        s.push_str(&fmt_f64(*v));
    }
    s.push('\n');
}

/// Composite trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dt * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

/// One step of `(M + τK) c^{m+1} = M c^m + τ b(f^m)`.
#[derive(Debug, Clone)]
pub struct ImexStepper {
    space: Arc<FemSpace>,
    tau: f64,
    factor: TridiagonalFactor,
}

impl ImexStepper {
    pub fn new(space: &Arc<FemSpace>, tau: f64) -> Result<Self> {
        let factor = space.mass().add_scaled(tau, space.stiffness()).factor()?;
        Ok(Self {
            space: Arc::clone(space),
            tau,
            factor,
        })
    }

    /// Advances with forcing given at quadrature points.
    pub fn step(&self, c: &[f64], f_quad: &[f64]) -> Result<Vec<f64>> {
        self.step_load(c, &self.space.load_vector(f_quad))
    }

    /// Advances with a precomputed load vector.
    pub fn step_load(&self, c: &[f64], load: &[f64]) -> Result<Vec<f64>> {
        let mut rhs = self.space.mass().mul_vec(c);
        for (r, b) in rhs.iter_mut().zip(load) {
            *r += self.tau * b;
        }
        self.factor.solve(&rhs)
    }
}

/// Runs the IMEX scheme from `P_N u0` with `f^m` chosen by `strategy`.
pub fn solve(
    problem: &InclusionProblem,
    space: &Arc<FemSpace>,
    strategy: &SelectionStrategy,
    config: &SolverConfig,
) -> Result<Trajectory> {
    strategy.validate()?;
    let n_steps = config.n_steps();
    let stepper = ImexStepper::new(space, config.tau)?;
    let radius = problem.radius_quad(space);
    let mut c = problem.initial_value(space).into_coeffs();
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut forcings = Vec::with_capacity(n_steps);
    for m in 0..n_steps {
        let tube = problem.tube_from(space, &c, &radius);
        let f = strategy.select(&tube, m, n_steps);
        let excess = tube.max_violation(&f);
        if excess > FEASIBILITY_TOL {
            return Err(Error::InfeasibleSelection {
                step: m,
                detail: format!("{strategy} left the tube by {excess:e}"),
            });
        }
        let next = stepper.step(&c, &f)?;
        states.push(std::mem::replace(&mut c, next));
        forcings.push(f);
    }
    states.push(c);
    Ok(Trajectory {
        space: Arc::clone(space),
        tau: config.tau,
        times: config.times(),
        states,
        forcings,
        strategy: strategy.to_string(),
        seed: strategy.seed(),
    })
}

/// Per-step discrete energy balance.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    /// `(‖u^{m+1}‖² - ‖u^m‖²)/(2τ) + ‖u^{m+1}‖_V²`.
    pub lhs: Vec<f64>,
    /// `(f^m, u^{m+1})_H`.
    pub rhs: Vec<f64>,
    pub tol: f64,
    pub worst_excess: f64,
    pub first_failure: Option<usize>,
}

impl EnergyReport {
    pub fn pass(&self) -> bool {
        self.first_failure.is_none()
    }
}

/// Checks the discrete energy inequality at every step with tolerance
/// `rel_tol · max(1, max |lhs|, max |rhs|)`.
pub fn energy_check(traj: &Trajectory, rel_tol: f64) -> EnergyReport {
    let s = &traj.space;
    let mut lhs = Vec::with_capacity(traj.n_steps());
    let mut rhs = Vec::with_capacity(traj.n_steps());
    for m in 0..traj.forcings.len() {
        let (a, b) = (&traj.states[m], &traj.states[m + 1]);
        let dh = (s.inner_h(b, b) - s.inner_h(a, a)) / (2.0 * traj.tau);
        lhs.push(dh + s.inner_v(b, b));
        rhs.push(s.quad_inner(&traj.forcings[m], &s.eval_quad(b)));
    }
    let scale = lhs
        .iter()
        .chain(&rhs)
        .fold(1.0f64, |acc, v| acc.max(v.abs()));
    let tol = rel_tol * scale;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut first_failure = None;
    for (m, (l, r)) in lhs.iter().zip(&rhs).enumerate() {
        let ex = l - r;
        worst_excess = worst_excess.max(ex);
        if ex > tol && first_failure.is_none() {
            first_failure = Some(m);
        }
    }
    EnergyReport {
        lhs,
        rhs,
        tol,
        worst_excess,
        first_failure,
    }
}

/// `max_m ‖u^m‖_H + (∫ ‖u‖_V²)^{1/2}` with the trapezoid rule in time.
pub fn wplus_star_norm(traj: &Trajectory) -> f64 {
    traj.max_norm_h() + traj.l2v_norm()
}

/// Trajectory values on a prescribed space and time grid.
#[derive(Debug, Clone)]
pub struct LiftedTrajectory {
    pub space: Arc<FemSpace>,
    pub dt: f64,
    pub states: Vec<Vec<f64>>,
}

/// Prolongs `traj` to `space` and interpolates linearly in time onto
/// `n_steps` uniform steps of `[0, T]`.
pub fn lift(traj: &Trajectory, space: &Arc<FemSpace>, n_steps: usize) -> Result<LiftedTrajectory> {
    let from = traj.space.grid();
    let t_final = traj.t_final();
    let dt = t_final / n_steps as f64;
    let prolonged: Vec<Vec<f64>> = traj
        .states
        .iter()
        .map(|c| prolong_coeffs(c, from, space.grid()))
        .collect::<Result<_>>()?;
    let states = if n_steps == traj.n_steps() {
        prolonged
    } else {
        (0..=n_steps)
            .map(|k| {
                let s = k as f64 * dt / traj.tau;
                let j = (s.floor() as usize).min(traj.n_steps() - 1);
                let lam = (s - j as f64).clamp(0.0, 1.0);
                prolonged[j]
                    .iter()
                    .zip(&prolonged[j + 1])
                    .map(|(a, b)| (1.0 - lam) * a + lam * b)
                    .collect()
            })
            .collect()
    };
    Ok(LiftedTrajectory {
        space: Arc::clone(space),
        dt,
        states,
    })
}

/// Trapezoid-in-time, mass-matrix-in-space distance of lifted trajectories.
pub fn l2h_lifted(a: &LiftedTrajectory, b: &LiftedTrajectory) -> f64 {
    let sq: Vec<f64> = a
        .states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| {
            let d: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
            a.space.inner_h(&d, &d)
        })
        .collect();
    trapezoid(&sq, a.dt).max(0.0).sqrt()
}

fn check_same_horizon(a: &Trajectory, b: &Trajectory) -> Result<()> {
    let (ta, tb) = (a.t_final(), b.t_final());
    if (ta - tb).abs() > 1e-12 * ta.abs().max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "final times differ: {ta} vs {tb}"
        )));
    }
    if !a.space.grid().same_interval(b.space.grid()) {
        return Err(Error::SpaceMismatch(
            "trajectories live on different intervals".into(),
        ));
    }
    Ok(())
}

/// Common finest space and number of steps for a set of trajectories.
pub fn common_grid(trajs: &[&Trajectory]) -> Result<(Arc<FemSpace>, usize)> {
    let first = trajs.first().ok_or(Error::EmptyCloud)?;
    for t in trajs {
        check_same_horizon(first, t)?;
    }
    let finest = trajs
        .iter()
        .max_by_key(|t| t.space.level())
        .map(|t| Arc::clone(&t.space))
        .expect("nonempty");
    let n_steps = trajs.iter().map(|t| t.n_steps()).max().expect("nonempty");
    Ok((finest, n_steps))
}

/// Discretized `‖u_A - u_B‖_{L²(0,T;H)}` on the finer of the two grids.
pub fn l2h_metric(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    let (space, n_steps) = common_grid(&[a, b])?;
    Ok(l2h_lifted(
        &lift(a, &space, n_steps)?,
        &lift(b, &space, n_steps)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{InitialPreset, ScalarField, ScalarNonlinearity};

    fn heat(u0: InitialPreset) -> InclusionProblem {
        InclusionProblem::new(
            0.0,
            1.0,
            ScalarNonlinearity::zero(),
            ScalarField::constant(0.0),
            u0.field(0.0, 1.0, 1.0),
            0.2,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn strategy_round_trip() {
        for s in [
            "projection(0.5)",
            "theta(-1)",
            "extremal(+-0+)",
            "random(7,4,8)",
        ] {
            let p: SelectionStrategy = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert!("theta(2)".parse::<SelectionStrategy>().is_err());
        assert!("bogus(1)".parse::<SelectionStrategy>().is_err());
        assert!("random(1,2)".parse::<SelectionStrategy>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(0.0, 1.0).is_err());
        assert!(SolverConfig::new(0.3, 1.0).is_err());
        assert!(SolverConfig::new(2.0, 1.0).is_err());
        let c = SolverConfig::new(1e-3, 1.0).unwrap();
        assert_eq!(c.n_steps(), 1000);
    }

    #[test]
    fn heat_flow_decays_strictly() {
        let p = heat(InitialPreset::Sine);
        let s = p.space(5).unwrap();
        let tr = solve(
            &p,
            &s,
            &SelectionStrategy::ConstantTheta { theta: 0.0 },
            &SolverConfig::new(1e-2, 0.2).unwrap(),
        )
        .unwrap();
        let norms: Vec<f64> = tr.states.iter().map(|c| s.norm_h(c)).collect();
        assert!(norms.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(tr.forcings.len(), tr.states.len() - 1);
        let e = energy_check(&tr, 1e-9);
        assert!(e.pass());
        assert!(e.lhs.iter().zip(&e.rhs).all(|(l, r)| l < r));
    }

    #[test]
    fn zero_initial_value_with_center_selection_stays_zero() {
        let p = InclusionProblem::new(
            0.0,
            1.0,
            ScalarNonlinearity::SoftCubic,
            ScalarField::constant(0.4),
            ScalarField::constant(0.0),
            0.1,
            1.0,
        )
        .unwrap();
        let s = p.space(4).unwrap();
        let tr = solve(
            &p,
            &s,
            &SelectionStrategy::ConstantTheta { theta: 0.0 },
            &SolverConfig::new(1e-2, 0.1).unwrap(),
        )
        .unwrap();
        assert!(tr.states.iter().flatten().all(|&c| c == 0.0));
        assert_eq!(wplus_star_norm(&tr), 0.0);
        let e = energy_check(&tr, 1e-9);
        assert!(e.pass());
    }

    #[test]
    fn first_order_in_time() {
        let p = InclusionProblem::reference(0.1);
        let s = p.space(5).unwrap();
        let st = SelectionStrategy::ConstantTheta { theta: 1.0 };
        let finals: Vec<NodalFunction> = [2e-3, 1e-3, 5e-4]
            .iter()
            .map(|&tau| {
                solve(&p, &s, &st, &SolverConfig::new(tau, 1.0).unwrap())
                    .unwrap()
                    .final_state()
            })
            .collect();
        let d1 = finals[0].sub(&finals[1]).unwrap().norm_h();
        let d2 = finals[1].sub(&finals[2]).unwrap().norm_h();
        let ratio = d1 / d2;
        assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn forcings_stay_in_tube_for_every_strategy() {
        let p = InclusionProblem::reference(0.1);
        let s = p.space(4).unwrap();
        let cfg = SolverConfig::new(1e-2, 1.0).unwrap();
        for st in [
            "projection(1)",
            "theta(0.5)",
            "extremal(+-)",
            "random(3,4,8)",
        ] {
            let st: SelectionStrategy = st.parse().unwrap();
            let tr = solve(&p, &s, &st, &cfg).unwrap();
            let radius = p.radius_quad(&s);
            for (c, f) in tr.states.iter().zip(&tr.forcings) {
                let tube = p.tube_from(&s, c, &radius);
                assert!(tube.contains(f, FEASIBILITY_TOL));
            }
            assert!(energy_check(&tr, 1e-9).pass());
        }
    }

    #[test]
    fn random_theta_is_piecewise_constant_in_time() {
        let p = InclusionProblem::reference(0.1);
        let s = p.space(3).unwrap();
        let zero = p.tube_from(&s, &vec![0.0; s.dim()], &p.radius_quad(&s));
        let st = SelectionStrategy::RandomTheta {
            seed: 5,
            n_switches: 1,
            n_pieces: 4,
        };
        assert_eq!(st.select(&zero, 0, 10), st.select(&zero, 4, 10));
        assert_ne!(st.select(&zero, 4, 10), st.select(&zero, 5, 10));
    }

    #[test]
    fn wplus_closed_form_single_step() {
        let s = FemSpace::new(0.0, 1.0, 3).unwrap();
        let u = s.interpolate(|x| x * (1.0 - x));
        let t_final = 0.5;
        let tr = Trajectory {
            space: Arc::clone(&s),
            tau: t_final,
            times: vec![0.0, t_final],
            states: vec![u.coeffs().to_vec(); 2],
            forcings: vec![vec![0.0; s.n_quad()]],
            strategy: "none".into(),
            seed: 0,
        };
        let expected = u.norm_h() + t_final.sqrt() * u.norm_v();
        assert!((wplus_star_norm(&tr) - expected).abs() < 1e-14);
    }

    #[test]
    fn l2h_metric_closed_form_and_levels() {
        let coarse = FemSpace::new(0.0, 1.0, 3).unwrap();
        let fine = FemSpace::new(0.0, 1.0, 5).unwrap();
        let w = coarse.interpolate(|x| (3.0 * x).sin());
        let mk = |space: &Arc<FemSpace>, c: Vec<f64>, n: usize| Trajectory {
            space: Arc::clone(space),
            tau: 1.0 / n as f64,
            times: (0..=n).map(|m| m as f64 / n as f64).collect(),
            states: vec![c; n + 1],
            forcings: vec![],
            strategy: "none".into(),
            seed: 0,
        };
        let a = mk(&coarse, w.coeffs().to_vec(), 4);
        let b = mk(&fine, vec![0.0; fine.dim()], 8);
        let d = l2h_metric(&a, &b).unwrap();
        assert!((d - w.norm_h()).abs() < 1e-13);
        assert!((l2h_metric(&b, &a).unwrap() - d).abs() < 1e-15);
        assert_eq!(l2h_metric(&a, &a).unwrap(), 0.0);
        let mut short = b.clone();
        short.times = vec![0.0, 0.5];
        short.states.truncate(2);
        assert!(l2h_metric(&a, &short).is_err());
    }

    #[test]
    fn trajectory_file_round_trip() {
        let p = InclusionProblem::reference(0.1);
        let s = p.space(3).unwrap();
        let tr = solve(
            &p,
            &s,
            &"random(1,2,3)".parse().unwrap(),
            &SolverConfig::new(0.25, 1.0).unwrap(),
        )
        .unwrap();
        let back = Trajectory::from_file_str(&tr.to_file_string()).unwrap();
        assert_eq!(back.states, tr.states);
        assert_eq!(back.times, tr.times);
        assert_eq!(back.strategy, tr.strategy);
        assert_eq!(back.seed, 1);
        assert!(tr.forcings_to_file_string().lines().count() > 5);
    }

    #[test]
    fn solve_is_deterministic() {
        let p = InclusionProblem::reference(0.1);
        let s = p.space(4).unwrap();
        let st: SelectionStrategy = "random(9,3,5)".parse().unwrap();
        let cfg = SolverConfig::new(1e-2, 1.0).unwrap();
        let a = solve(&p, &s, &st, &cfg).unwrap();
        let b = solve(&p, &s, &st, &cfg).unwrap();
        assert_eq!(a.states, b.states);
    }
}
