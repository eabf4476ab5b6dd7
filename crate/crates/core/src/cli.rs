//! Configuration-driven experiment runner behind the `gincl` binary.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{NonlinearitySpec, RunConfig};
use crate::error::{Error, Result};
use crate::fem::{estimate_embedding_constants, fmt_f64};
use crate::funnel::{
    apriori_constants, convergence_table, estimate_constants, funnel_hausdorff, sample_funnel,
    table_to_csv, verify_apriori, BoundsReport,
};
use crate::problem::{
    check_a1, check_a3, check_a3_prime, check_a4, check_growth, GrowthSpec, Sampling,
    ValidatorReport,
};
use crate::setvalued::distance_matrix;
use crate::solver::{energy_check, l2h_metric, solve, wplus_star_norm, SolverConfig};
use crate::tracking::{linear_track, track, wplus_star_distance, FilippovCertificate, TrackConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve every roster strategy on every level and write trajectories.
    Solve,
    /// Sample funnels and write summaries and distance matrices.
    Funnel,
    /// Track linear Galerkin references and write Filippov certificates.
    Track,
    /// Run the sampled assumption checks.
    Verify,
    /// Write the cross-level Hausdorff convergence table.
    Table,
    /// Write the a-priori constant ledger.
    Bounds,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Funnel => "funnel",
            Self::Track => "track",
            Self::Verify => "verify",
            Self::Table => "table",
            Self::Bounds => "bounds",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gincl",
    version,
    about = "Galerkin laboratory for parabolic differential inclusions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Configuration file; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Replaces the `[run] seed` value.
    #[arg(long = "seed-override", global = true)]
    pub seed_override: Option<u64>,
}

/// Exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    /// Config could not be parsed or a sampled check failed.
    Validation = 1,
    /// A numerical routine or bound check failed.
    Numeric = 2,
}

/// Writes `contents` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// CSV field, quoted when it contains a comma.
fn quote(s: &str) -> String {
    if s.contains(',') {
        format!("\"{s}\"")
    } else {
        s.to_string()
    }
}

struct Outcome {
    status: Status,
    summary: String,
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                Status::Validation as i32
            } else {
                0
            };
        }
    };
    run(&cli) as i32
}

/// Runs one command; diagnostics go to stderr, a summary to stdout.
pub fn run(cli: &Cli) -> Status {
    let (mut cfg, config_text) = match &cli.config {
        Some(path) => match fs::read_to_string(path).map_err(Error::from).and_then(|t| {
            let c = RunConfig::parse(&t, path.parent().unwrap_or(Path::new(".")))?;
            Ok((c, t))
        }) {
            Ok(v) => v,
            Err(e) => {
                eprintln!("gincl: {}: {e}", path.display());
                return Status::Validation;
            }
        },
        None => (RunConfig::default(), String::new()),
    };
    if let Some(seed) = cli.seed_override {
        cfg.seed = seed;
    }
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("gincl: thread pool: {e}");
        }
    }
    if let Err(e) = fs::create_dir_all(&cli.out) {
        eprintln!("gincl: cannot create {}: {e}", cli.out.display());
        return Status::Numeric;
    }
    let manifest = manifest(cli, &cfg, &config_text);
    if let Err(e) = write_atomic(&cli.out.join("manifest.txt"), &manifest) {
        eprintln!("gincl: manifest: {e}");
        return Status::Numeric;
    }
    let result = match cli.command {
        Command::Solve => cmd_solve(&cfg, &cli.out),
        Command::Funnel => cmd_funnel(&cfg, &cli.out),
        Command::Track => cmd_track(&cfg, &cli.out),
        Command::Verify => cmd_verify(&cfg, &cli.out),
        Command::Table => cmd_table(&cfg, &cli.out),
        Command::Bounds => cmd_bounds(&cfg, &cli.out),
    };
    match result {
        Ok(o) => {
            print!("{}", o.summary);
            o.status
        }
        Err(e @ (Error::Config { .. } | Error::Parse(_) | Error::InvalidArgument(_))) => {
            eprintln!("gincl {}: {e}", cli.command.name());
            Status::Validation
        }
        Err(e) => {
            eprintln!("gincl {}: {e}", cli.command.name());
            Status::Numeric
        }
    }
}

/// First line holds the timestamp; everything after it is deterministic.
fn manifest(cli: &Cli, cfg: &RunConfig, config_text: &str) -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut s = format!("timestamp = {secs}\n");
    let _ = writeln!(s, "command = {}", cli.command.name());
    let _ = writeln!(s, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(
        s,
        "config = {}",
        cli.config
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "<defaults>".into())
    );
    let _ = writeln!(s, "seed = {}", cfg.seed);
    let roster: Vec<String> = cfg
        .effective_roster()
        .iter()
        .map(|r| r.to_string())
        .collect();
    let _ = writeln!(s, "roster = {}", roster.join(", "));
    s.push_str("[config]\n");
    s.push_str(config_text);
    s
}

fn cmd_solve(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let problem = cfg.problem()?;
    let solver = cfg.solver_config();
    let roster = cfg.effective_roster();
    let mut energy = String::from("level,index,strategy,worst_excess,tol,pass\n");
    let mut failed = false;
    for &level in &cfg.levels {
        let funnel = sample_funnel(&problem, level, &roster, &solver)?;
        for (i, t) in funnel.trajectories.iter().enumerate() {
            write_atomic(
                &out.join(format!("traj_L{level}_{i:02}.csv")),
                &t.to_file_string(),
            )?;
            if cfg.write_forcings {
                write_atomic(
                    &out.join(format!("forcing_L{level}_{i:02}.csv")),
                    &t.forcings_to_file_string(),
                )?;
            }
            let e = energy_check(t, 1e-9);
            failed |= !e.pass();
            let _ = writeln!(
                energy,
                "{level},{i},{},{},{},{}",
                quote(&t.strategy),
                fmt_f64(e.worst_excess),
                fmt_f64(e.tol),
                e.pass()
            );
        }
    }
    write_atomic(&out.join("energy.csv"), &energy)?;
    let n = cfg.levels.len() * roster.len();
    Ok(Outcome {
        status: if failed { Status::Numeric } else { Status::Ok },
        summary: format!(
            "solve: {n} trajectories, energy check {}\n",
            pass_word(!failed)
        ),
    })
}

fn pass_word(ok: bool) -> &'static str {
    if ok {
        "passed"
    } else {
        "FAILED"
    }
}

fn cmd_funnel(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let problem = cfg.problem()?;
    let solver = cfg.solver_config();
    let roster = cfg.effective_roster();
    let mut summary = String::new();
    let mut prev = None;
    for &level in &cfg.levels {
        let funnel = sample_funnel(&problem, level, &roster, &solver)?;
        let mut rows = String::from("index,strategy,seed,max_norm_h,l2v_norm,wplus_star\n");
        for (i, t) in funnel.trajectories.iter().enumerate() {
            let _ = writeln!(
                rows,
                "{i},{},{},{},{},{}",
                quote(&t.strategy),
                t.seed,
                fmt_f64(t.max_norm_h()),
                fmt_f64(t.l2v_norm()),
                fmt_f64(wplus_star_norm(t))
            );
        }
        write_atomic(&out.join(format!("funnel_L{level}.csv")), &rows)?;
        let m = distance_matrix(&funnel.trajectories, &funnel.trajectories, |a, b| {
            l2h_metric(a, b).expect("same funnel")
        })?;
        write_atomic(&out.join(format!("distances_L{level}.csv")), &m.to_csv())?;
        let diameter = m.values.iter().copied().fold(0.0, f64::max);
        let _ = writeln!(
            summary,
            "level {level}: {} trajectories, diameter {}",
            funnel.len(),
            fmt_f64(diameter)
        );
        if let Some(p) = prev.take() {
            let d = funnel_hausdorff(&p, &funnel)?;
            write_atomic(
                &out.join(format!("distances_L{}_L{level}.csv", p.level)),
                &d.matrix.to_csv(),
            )?;
        }
        prev = Some(funnel);
    }
    Ok(Outcome {
        status: Status::Ok,
        summary,
    })
}

fn cmd_track(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let problem = cfg.problem()?;
    let fine_space = problem.space(cfg.fine_level)?;
    let roster = cfg.effective_roster();
    let refs = &roster[..cfg.references.min(roster.len())];
    let track_cfg = TrackConfig {
        refine: cfg.refine,
        ..TrackConfig::default()
    };
    let coarse: Vec<_> = cfg
        .levels
        .iter()
        .filter(|&&l| l < cfg.fine_level)
        .map(|&l| problem.space(l))
        .collect::<Result<_>>()?;
    if coarse.is_empty() {
        return Err(Error::InvalidArgument("no level below fine_level".into()));
    }

    let mut certs = format!("{},strategy\n", FilippovCertificate::CSV_HEADER);
    let mut kur = String::from("tau,strategy,level,wplus_error\n");
    let mut all_pass = true;
    for &tau in &cfg.taus {
        let solver = SolverConfig::new(tau, cfg.t_final)?;
        let rows = refs
            .par_iter()
            .map(|s| {
                let fine = solve(&problem, &fine_space, s, &solver)?;
                coarse
                    .iter()
                    .map(|space| {
                        let reference = linear_track(&fine, space, &problem)?;
                        let (tracked, cert) = track(&reference, &problem, &track_cfg)?;
                        let err = wplus_star_distance(&fine, &tracked)?;
                        Ok((s.to_string(), space.level(), cert, err))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for (strategy, level, cert, err) in rows.into_iter().flatten() {
            all_pass &= cert.pass();
            let _ = writeln!(certs, "{},{}", cert.to_csv_row(), quote(&strategy));
            let _ = writeln!(
                kur,
                "{},{},{level},{}",
                fmt_f64(tau),
                quote(&strategy),
                fmt_f64(err)
            );
        }
    }
    write_atomic(&out.join("certificates.csv"), &certs)?;
    write_atomic(&out.join("kuratowski.csv"), &kur)?;
    Ok(Outcome {
        status: if all_pass {
            Status::Ok
        } else {
            Status::Numeric
        },
        summary: format!("track: certificates {}\n", pass_word(all_pass)),
    })
}

fn cmd_verify(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let problem = cfg.problem()?;
    let space = problem.space(cfg.verify_level)?;
    let sampling = Sampling {
        n_samples: cfg.samples,
        seed: cfg.seed,
        amplitude: cfg.amplitude,
    };
    let emb = estimate_embedding_constants(&space, cfg.samples, cfg.seed)?;
    let a3 = GrowthSpec::a3_soft_cubic(emb.c_inf);
    let a3p = match cfg.nonlinearity {
        NonlinearitySpec::EpsPower(e) => GrowthSpec::for_eps_power(e, emb.c_inf)?,
        _ => GrowthSpec::a3_prime(crate::problem::ScalarField::constant(a3.c_f), 1.0, 1.0)?,
    };
    let mut reports: Vec<ValidatorReport> = vec![check_a1(&space, sampling).report(1e-9)];
    // The A3 chain covers the soft cubic and the zero map; other exponents use A3'.
    if !matches!(cfg.nonlinearity, NonlinearitySpec::EpsPower(e) if e != 1.0) {
        reports.push(check_a3(&problem, &space, &a3, sampling)?);
    }
    reports.push(check_a3_prime(&problem, &space, &a3p, sampling)?);
    reports.push(check_a4(&problem, &space, sampling));
    let growth_spec = if reports.iter().any(|r| r.check == "A3") {
        &a3
    } else {
        &a3p
    };
    reports.push(check_growth(&problem, &space, growth_spec, sampling));

    let mut csv = format!("{}\n", ValidatorReport::CSV_HEADER);
    let mut params = String::from("check,params\n");
    let mut summary = String::new();
    for r in &reports {
        let _ = writeln!(csv, "{}", r.to_csv_row());
        let _ = writeln!(params, "{},{}", r.check, r.params);
        let _ = writeln!(
            summary,
            "{:<8} worst_ratio={} {}",
            r.check,
            fmt_f64(r.worst_ratio),
            pass_word(r.pass)
        );
    }
    write_atomic(&out.join("validators.csv"), &csv)?;
    write_atomic(&out.join("validator_params.csv"), &params)?;
    let ok = reports.iter().all(|r| r.pass);
    Ok(Outcome {
        status: if ok { Status::Ok } else { Status::Validation },
        summary,
    })
}

fn cmd_table(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let problem = cfg.problem()?;
    let rows = convergence_table(
        &problem,
        &cfg.levels,
        &cfg.effective_roster(),
        &cfg.solver_config(),
    )?;
    let csv = table_to_csv(&rows);
    write_atomic(&out.join("table.csv"), &csv)?;
    Ok(Outcome {
        status: Status::Ok,
        summary: csv,
    })
}

fn cmd_bounds(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let problem = cfg.problem()?;
    let est = estimate_constants(&problem, &cfg.levels, cfg.bounds_samples, cfg.seed)?;
    let mut report = apriori_constants(&problem, &cfg.levels, &est)?;
    if let Some(c0) = cfg.c0_override {
        let mut data = report.data;
        data.c0 = c0;
        report = BoundsReport::from_data(data, report.inflation);
    }
    write_atomic(&out.join("ledger.csv"), &report.to_csv())?;
    let mut summary = report.to_csv();
    let mut status = Status::Ok;
    if cfg.check_funnel {
        let solver = cfg.solver_config();
        let roster = cfg.effective_roster();
        let mut csv = String::from("level,strategy,max_norm_h,l2v_norm,k1_margin,k0_margin,pass\n");
        for &level in &cfg.levels {
            let funnel = sample_funnel(&problem, level, &roster, &solver)?;
            for m in verify_apriori(&funnel, &report, 0.0) {
                if !m.pass() {
                    status = Status::Numeric;
                }
                let _ = writeln!(
                    csv,
                    "{level},{},{},{},{},{},{}",
                    quote(&m.strategy),
                    fmt_f64(m.max_norm_h),
                    fmt_f64(m.l2v_norm),
                    fmt_f64(m.k1_margin),
                    fmt_f64(m.k0_margin),
                    m.pass()
                );
            }
        }
        write_atomic(&out.join("apriori.csv"), &csv)?;
        let _ = writeln!(
            summary,
            "a-priori check {}",
            pass_word(status == Status::Ok)
        );
    }
    Ok(Outcome { status, summary })
}
