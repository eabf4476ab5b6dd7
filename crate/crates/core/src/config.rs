//! Run configuration: a flat `key = value` format with `[section]` headers.
//!
//! Lines starting with `#` or `;` are comments; lists are comma-separated,
//! with commas inside parentheses kept (so `random(1,4,8)` is one entry).
//! Unknown sections and keys are rejected with their line number.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fem::NodalFunction;
use crate::funnel::default_roster;
use crate::problem::{InclusionProblem, InitialPreset, ScalarField, ScalarNonlinearity};
use crate::solver::{SelectionStrategy, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum NonlinearitySpec {
    SoftCubic,
    EpsPower(f64),
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec<P> {
    Preset(P),
    /// One nodal line `level,x_lo,x_hi,c_1,...` in a file.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub x_lo: f64,
    pub x_hi: f64,
    pub t_final: f64,
    pub tau: f64,
    /// Step sizes of the tracking study.
    pub taus: Vec<f64>,
    pub levels: Vec<u32>,
    pub fine_level: u32,
    pub nonlinearity: NonlinearitySpec,
    /// Constant radius or nodal file.
    pub radius: FieldSpec<f64>,
    pub u0: FieldSpec<InitialPreset>,
    pub u0_scale: f64,
    pub ell: f64,
    pub roster: Vec<SelectionStrategy>,
    pub samples: usize,
    pub amplitude: f64,
    pub verify_level: u32,
    pub refine: bool,
    /// Number of fine trajectories used by `track`.
    pub references: usize,
    pub c0_override: Option<f64>,
    pub bounds_samples: usize,
    pub check_funnel: bool,
    pub write_forcings: bool,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            x_lo: 0.0,
            x_hi: 1.0,
            t_final: 1.0,
            tau: 1e-3,
            taus: vec![4e-3, 2e-3, 1e-3],
            levels: vec![3, 4, 5, 6, 7],
            fine_level: 9,
            nonlinearity: NonlinearitySpec::SoftCubic,
            radius: FieldSpec::Preset(0.1),
            u0: FieldSpec::Preset(InitialPreset::Bump),
            u0_scale: 1.0,
            ell: 1.0,
            roster: default_roster(),
            samples: 10_000,
            amplitude: 2.0,
            verify_level: 5,
            refine: false,
            references: 5,
            c0_override: None,
            bounds_samples: 2000,
            check_funnel: true,
            write_forcings: false,
            seed: 0,
        }
    }
}

/// Splits on commas outside parentheses.
fn split_list(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    if !cur.trim().is_empty() || !out.is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

impl RunConfig {
    /// Parses config text; relative file paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let fail = |msg: String| Error::Config { line: line_no, msg };
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return Err(fail(format!("unterminated section header {line:?}")));
                }
                section = line[1..line.len() - 1].trim().to_string();
                const SECTIONS: [&str; 9] = [
                    "domain",
                    "time",
                    "discretization",
                    "problem",
                    "strategies",
                    "validation",
                    "tracking",
                    "bounds",
                    "run",
                ];
                if !SECTIONS.contains(&section.as_str()) {
                    return Err(fail(format!("unknown section [{section}]")));
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| fail(format!("expected `key = value`, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            cfg.set(&section, key, value, base_dir)
                .map_err(|e| match e {
                    Error::Config { msg, .. } => fail(msg),
                    other => fail(other.to_string()),
                })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn set(&mut self, section: &str, key: &str, value: &str, base: &Path) -> Result<()> {
        let bad = |what: &str| Error::Config {
            line: 0,
            msg: format!("[{section}] {key}: expected {what}, got {value:?}"),
        };
        let f = |v: &str| v.trim().parse::<f64>().map_err(|_| bad("a number"));
        let u = |v: &str| {
            v.trim()
                .parse::<u64>()
                .map_err(|_| bad("a nonnegative integer"))
        };
        let b = |v: &str| match v.trim() {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(bad("true or false")),
        };
        let path = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        match (section, key) {
            ("domain", "x_lo") => self.x_lo = f(value)?,
            ("domain", "x_hi") => self.x_hi = f(value)?,
            ("time", "T") => self.t_final = f(value)?,
            ("time", "tau") => self.tau = f(value)?,
            ("time", "taus") => {
                self.taus = split_list(value)
                    .iter()
                    .map(|v| f(v))
                    .collect::<Result<_>>()?
            }
            ("discretization", "levels") => {
                self.levels = split_list(value)
                    .iter()
                    .map(|v| u(v).map(|x| x as u32))
                    .collect::<Result<_>>()?
            }
            ("discretization", "fine_level") => self.fine_level = u(value)? as u32,
            ("problem", "nonlinearity") => {
                self.nonlinearity = match value {
                    "soft_cubic" => NonlinearitySpec::SoftCubic,
                    "zero" => NonlinearitySpec::Zero,
                    "eps_power" => NonlinearitySpec::EpsPower(match self.nonlinearity {
                        NonlinearitySpec::EpsPower(e) => e,
                        _ => 1.0,
                    }),
                    _ => return Err(bad("soft_cubic, eps_power or zero")),
                }
            }
            ("problem", "epsilon") => {
                let e = f(value)?;
                self.nonlinearity = NonlinearitySpec::EpsPower(e);
            }
            ("problem", "h") => self.radius = FieldSpec::Preset(f(value)?),
            ("problem", "h_file") => self.radius = FieldSpec::File(path(value)),
            ("problem", "u0") => {
                self.u0 = match value {
                    "bump" => FieldSpec::Preset(InitialPreset::Bump),
                    "sine" => FieldSpec::Preset(InitialPreset::Sine),
                    "file" => match &self.u0 {
                        FieldSpec::File(_) => self.u0.clone(),
                        _ => FieldSpec::File(PathBuf::new()),
                    },
                    _ => return Err(bad("bump, sine or file")),
                }
            }
            ("problem", "u0_file") => self.u0 = FieldSpec::File(path(value)),
            ("problem", "u0_scale") => self.u0_scale = f(value)?,
            ("problem", "ell") => self.ell = f(value)?,
            ("strategies", "roster") => {
                self.roster = if value == "default" {
                    default_roster()
                } else {
                    split_list(value)
                        .iter()
                        .map(|s| s.parse::<SelectionStrategy>())
                        .collect::<Result<_>>()
                        .map_err(|e| Error::Config {
                            line: 0,
                            msg: format!("[strategies] roster: {e}"),
                        })?
                }
            }
            ("validation", "samples") => self.samples = u(value)? as usize,
            ("validation", "amplitude") => self.amplitude = f(value)?,
            ("validation", "level") => self.verify_level = u(value)? as u32,
            ("tracking", "refine") => self.refine = b(value)?,
            ("tracking", "references") => self.references = u(value)? as usize,
            ("bounds", "c0_override") => self.c0_override = Some(f(value)?),
            ("bounds", "samples") => self.bounds_samples = u(value)? as usize,
            ("bounds", "check_funnel") => self.check_funnel = b(value)?,
            ("run", "seed") => self.seed = u(value)?,
            ("run", "write_forcings") => self.write_forcings = b(value)?,
            ("", _) => {
                return Err(Error::Config {
                    line: 0,
                    msg: format!("key {key:?} outside of any section"),
                })
            }
            _ => {
                return Err(Error::Config {
                    line: 0,
                    msg: format!("unknown key {key:?} in [{section}]"),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config { line: 0, msg });
        if !(self.x_lo < self.x_hi) {
            return bad(format!(
                "need x_lo < x_hi, got {} and {}",
                self.x_lo, self.x_hi
            ));
        }
        SolverConfig::new(self.tau, self.t_final).map_err(|e| Error::Config {
            line: 0,
            msg: e.to_string(),
        })?;
        for &t in &self.taus {
            SolverConfig::new(t, self.t_final).map_err(|e| Error::Config {
                line: 0,
                msg: format!("taus: {e}"),
            })?;
        }
        if self.levels.is_empty() || self.levels.iter().any(|&l| l == 0 || l > 20) {
            return bad("levels must be a nonempty list of integers in 1..=20".into());
        }
        if self.fine_level > 20 || self.levels.iter().any(|&l| l > self.fine_level) {
            return bad("fine_level must be at least every listed level and at most 20".into());
        }
        if !(1..=20).contains(&self.verify_level) {
            return bad("[validation] level must lie in 1..=20".into());
        }
        if let NonlinearitySpec::EpsPower(e) = self.nonlinearity {
            if !(e > 0.0 && e <= 2.0) {
                return bad(format!("epsilon must lie in (0, 2], got {e}"));
            }
        }
        if let FieldSpec::Preset(h) = self.radius {
            if !(h >= 0.0 && h.is_finite()) {
                return bad(format!("h must be nonnegative, got {h}"));
            }
        }
        if self.u0 == FieldSpec::File(PathBuf::new()) {
            return bad("u0 = file needs u0_file".into());
        }
        if !self.u0_scale.is_finite() || !self.ell.is_finite() {
            return bad("u0_scale and ell must be finite".into());
        }
        if self.roster.is_empty() {
            return bad("strategy roster is empty".into());
        }
        if self.samples == 0 || self.bounds_samples == 0 {
            return bad("sample counts must be positive".into());
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return bad("amplitude must be positive".into());
        }
        if self.references == 0 {
            return bad("[tracking] references must be positive".into());
        }
        Ok(())
    }

    pub fn nonlinearity(&self) -> ScalarNonlinearity {
        match self.nonlinearity {
            NonlinearitySpec::SoftCubic => ScalarNonlinearity::SoftCubic,
            NonlinearitySpec::EpsPower(e) => ScalarNonlinearity::EpsPower(e),
            NonlinearitySpec::Zero => ScalarNonlinearity::zero(),
        }
    }

    fn read_nodal(path: &Path) -> Result<NodalFunction> {
        let text = std::fs::read_to_string(path)?;
        let line = text
            .lines()
            .find(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .ok_or_else(|| Error::Parse(format!("{} holds no nodal line", path.display())))?;
        NodalFunction::from_csv_line(line)
    }

    pub fn problem(&self) -> Result<InclusionProblem> {
        let radius = match &self.radius {
            FieldSpec::Preset(h) => ScalarField::constant(*h),
            FieldSpec::File(p) => ScalarField::from_nodal(Self::read_nodal(p)?),
        };
        let u0 = match &self.u0 {
            FieldSpec::Preset(p) => p.field(self.x_lo, self.x_hi, self.u0_scale),
            FieldSpec::File(p) => {
                let v = Self::read_nodal(p)?.scaled(self.u0_scale);
                ScalarField::from_nodal(v)
            }
        };
        InclusionProblem::new(
            self.x_lo,
            self.x_hi,
            self.nonlinearity(),
            radius,
            u0,
            self.t_final,
            self.ell,
        )
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig::new(self.tau, self.t_final).expect("validated")
    }

    /// Roster with random-offset seeds shifted by the run seed.
    pub fn effective_roster(&self) -> Vec<SelectionStrategy> {
        self.roster
            .iter()
            .map(|s| match s {
                SelectionStrategy::RandomTheta {
                    seed,
                    n_switches,
                    n_pieces,
                } => SelectionStrategy::RandomTheta {
                    seed: seed.wrapping_add(self.seed),
                    n_switches: *n_switches,
                    n_pieces: *n_pieces,
                },
                other => other.clone(),
            })
            .collect()
    }
}
