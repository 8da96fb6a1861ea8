//! The `bibpa` command line.
//!
//! Subcommands `solve`, `synth`, `check` and `bench`. Numeric settings can
//! also come from a flat `key = value` file passed with `--config`; flags
//! given on the command line take precedence. Exit status is 0 on success,
//! 1 when a run fails or a check finds violations, and 2 for bad arguments.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{
    audit_trace, check_block_gradients, check_block_solvers, fit_rate, verify_relative_smoothness,
    AuditOptions, DiagnosticsReport,
};
use crate::io::{format_f64, read_square_matrix, synth_instance, write_labels, write_matrix};
use crate::solver::{derive_schedule, run, trace_to_json, SolveOptions, SolveResult, Termination};
use crate::symtrinmf::{community_assignment, factors_from_point, KernelParams, SymTriInstance};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const BENCH_HEADER: &str = "kappa,seed,iters_to_tol,final_phi,wall_seconds";

#[derive(Parser, Debug)]
#[command(
    name = "bibpa",
    version,
    about = "Inertial Bregman block solver for symmetric nonnegative tri-factorization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Factorize a matrix read from disk.
    Solve(SolveArgs),
    /// Write a planted-community instance and its factors.
    Synth(SynthArgs),
    /// Certify smoothness constants, gradients and closed-form updates.
    Check(CheckArgs),
    /// Run a grid over inertia levels and seeds and print CSV.
    Bench(BenchArgs),
}

/// Settings shared by every command that builds and runs a solver.
#[derive(Args, Debug, Default, Clone)]
struct SolverFlags {
    /// Flat key=value file; command-line flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Factorization rank r.
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long)]
    b1: Option<f64>,
    #[arg(long)]
    a2: Option<f64>,
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    /// Inertia level in [0, 1).
    #[arg(long)]
    kappa: Option<f64>,
    /// Step-size fraction in (0, 1].
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    residual_tol: Option<f64>,
    #[arg(long)]
    stall_tol: Option<f64>,
    /// Seed for the initial factors.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace X by (X + Xᵀ)/2 before solving.
    #[arg(long)]
    symmetrize: bool,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// MatrixMarket or headerless CSV file.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
    /// Where to write the trace JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Factors go to `<prefix>_U.mtx` and `<prefix>_V.mtx`.
    #[arg(long)]
    factors: Option<PathBuf>,
    /// Where to write one community label per row.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Record wall-clock seconds in the trace.
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    r: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Probability that two communities interact.
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output matrix; planted factors and labels are written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Matrix to check; a random symmetric `m × m` matrix when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Size of the random matrix.
    #[arg(long, default_value_t = 5)]
    m: usize,
    #[command(flatten)]
    solver: SolverFlags,
    /// Sample pairs per block and scale.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Random points for the gradient and closed-form checks.
    #[arg(long, default_value_t = 20)]
    points: usize,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    seeds: Vec<u64>,
    /// Largest inertia level; the grid is 0, 0.3, 0.6 and 0.9 times this.
    #[arg(long, default_value_t = 1.0)]
    kappa_max: f64,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solve grid cells one at a time.
    #[arg(long)]
    serial: bool,
}

/// Fully resolved solver settings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveConfig {
    pub input: Option<PathBuf>,
    pub rank: usize,
    pub params: KernelParams,
    pub kappa: f64,
    pub rho: f64,
    pub max_iters: usize,
    pub residual_tol: f64,
    pub stall_tol: f64,
    pub seed: u64,
    pub symmetrize: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            input: None,
            rank: 2,
            params: KernelParams::default(),
            kappa: 0.5,
            rho: 0.9,
            max_iters: 5000,
            residual_tol: 1e-9,
            stall_tol: 0.0,
            seed: 0,
            symmetrize: false,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::Parameter("rank must be at least 1".into()));
        }
        self.params.validate()?;
        if !(0.0..1.0).contains(&self.kappa) {
            return Err(Error::Parameter(format!(
                "kappa = {} must lie in [0, 1)",
                self.kappa
            )));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::Parameter(format!(
                "rho = {} must lie in (0, 1]",
                self.rho
            )));
        }
        for (name, v) in [
            ("residual_tol", self.residual_tol),
            ("stall_tol", self.stall_tol),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!(
                    "{name} = {v} must be nonnegative"
                )));
            }
        }
        Ok(())
    }

    pub fn options(&self, record_time: bool) -> SolveOptions {
        SolveOptions {
            max_iters: self.max_iters,
            residual_tol: self.residual_tol,
            stall_tol: self.stall_tol,
            record_time,
        }
    }
}

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; dashes in keys are read as underscores.
pub fn parse_config(text: &str, path: &Path) -> Result<HashMap<String, String>> {
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: "expected 'key = value'".into(),
        })?;
        out.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(out)
}

fn resolve(flags: &SolverFlags, input: Option<&PathBuf>) -> Result<SolveConfig> {
    let file = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_config(&text, path)?
        }
        None => HashMap::new(),
    };
    let known = [
        "input",
        "rank",
        "a1",
        "b1",
        "a2",
        "eps1",
        "eps2",
        "kappa",
        "rho",
        "max_iters",
        "residual_tol",
        "stall_tol",
        "seed",
        "symmetrize",
    ];
    if let Some(key) = file.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(Error::Config(format!("unknown config key '{key}'")));
    }
    fn pick<T: FromStr>(
        flag: Option<T>,
        file: &HashMap<String, String>,
        key: &str,
        default: T,
    ) -> Result<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match file.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|_| Error::Config(format!("invalid value '{raw}' for '{key}'"))),
            None => Ok(default),
        }
    }
    let d = SolveConfig::default();
    let cfg = SolveConfig {
        input: input
            .cloned()
            .or_else(|| file.get("input").map(PathBuf::from)),
        rank: pick(flags.rank, &file, "rank", d.rank)?,
        params: KernelParams {
            a1: pick(flags.a1, &file, "a1", d.params.a1)?,
            b1: pick(flags.b1, &file, "b1", d.params.b1)?,
            a2: pick(flags.a2, &file, "a2", d.params.a2)?,
            eps1: pick(flags.eps1, &file, "eps1", d.params.eps1)?,
            eps2: pick(flags.eps2, &file, "eps2", d.params.eps2)?,
        },
        kappa: pick(flags.kappa, &file, "kappa", d.kappa)?,
        rho: pick(flags.rho, &file, "rho", d.rho)?,
        max_iters: pick(flags.max_iters, &file, "max_iters", d.max_iters)?,
        residual_tol: pick(flags.residual_tol, &file, "residual_tol", d.residual_tol)?,
        stall_tol: pick(flags.stall_tol, &file, "stall_tol", d.stall_tol)?,
        seed: pick(flags.seed, &file, "seed", d.seed)?,
        symmetrize: flags.symmetrize || pick(None, &file, "symmetrize", false)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn load_instance(cfg: &SolveConfig) -> Result<SymTriInstance> {
    let path = cfg.input.as_ref().ok_or_else(|| {
        Error::Config("no input matrix given (use --input or 'input' in the config)".into())
    })?;
    let x = read_square_matrix(path)?;
    let inst = SymTriInstance::new(x, cfg.rank, cfg.params)?;
    Ok(if cfg.symmetrize {
        inst.symmetrized()
    } else {
        inst
    })
}

/// Runs the engine with the closed-form block solvers from the seeded
/// initial factors.
pub fn solve_instance(
    inst: &SymTriInstance,
    cfg: &SolveConfig,
    kappa: f64,
    seed: u64,
    record_time: bool,
) -> Result<SolveResult> {
    let problem = inst.as_block_problem();
    let schedule = derive_schedule(&problem.lipschitz(), &problem.sigmas(), kappa, cfg.rho)?;
    run(
        &problem,
        &schedule,
        &inst.initial_point(seed),
        &cfg.options(record_time),
    )
}

/// Path with `suffix` appended to its file stem, e.g. `out/x` + `_U.mtx`.
fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().map(OsString::from).unwrap_or_default();
    name.push(suffix);
    prefix.with_file_name(name)
}

fn solve_cmd(args: &SolveArgs) -> Result<()> {
    let cfg = resolve(&args.solver, args.input.as_ref())?;
    let inst = load_instance(&cfg)?;
    info!(
        "solving {}×{} with rank {}",
        inst.m(),
        inst.m(),
        inst.rank()
    );
    let result = solve_instance(&inst, &cfg, cfg.kappa, cfg.seed, args.timing)?;
    let (u, v) = factors_from_point(&inst, &result.x_final)?;
    let last = result.final_record();
    let rel = inst.relative_error(&u.view(), &v.view())?;

    if let Some(path) = &args.trace {
        fs::write(path, trace_to_json(&result.trace)).map_err(|e| Error::io(path, e))?;
    }
    if let Some(prefix) = &args.factors {
        write_matrix(with_suffix(prefix, "_U.mtx"), &u)?;
        write_matrix(with_suffix(prefix, "_V.mtx"), &v)?;
    }
    if let Some(path) = &args.labels {
        write_labels(path, &community_assignment(&u.view()))?;
    }
    println!("phi = {}", format_f64(last.phi));
    println!("residual = {}", format_f64(last.residual_norm));
    println!("iterations = {}", result.iterations());
    println!("relative_error = {}", format_f64(rel));
    println!("termination = {}", termination_name(result.termination));
    Ok(())
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::ResidualTol => "residual_tol",
        Termination::LyapunovStall => "lyapunov_stall",
        Termination::MaxIters => "max_iters",
    }
}

fn synth_cmd(args: &SynthArgs) -> Result<()> {
    let s = synth_instance(args.m, args.r, args.noise, args.density, args.seed)?;
    write_matrix(&args.out, &s.x)?;
    let prefix = args.out.with_extension("");
    write_matrix(with_suffix(&prefix, "_U.mtx"), &s.u)?;
    write_matrix(with_suffix(&prefix, "_V.mtx"), &s.v)?;
    let labels: Vec<Option<usize>> = s.labels.iter().map(|&c| Some(c)).collect();
    write_labels(with_suffix(&prefix, "_labels.txt"), &labels)?;
    Ok(())
}

/// JSON emitted by `check`.
#[derive(Debug, Serialize)]
pub struct CheckReport {
    #[serde(flatten)]
    pub diagnostics: DiagnosticsReport,
    pub smoothness_checks: usize,
    pub gradient_failures: usize,
    pub gradient_worst_rel_error: f64,
    pub oracle_failures: usize,
    pub oracle_worst_gap: f64,
    pub audit_passed: bool,
}

impl CheckReport {
    pub fn clean(&self) -> bool {
        self.diagnostics.violations == 0
            && self.gradient_failures == 0
            && self.oracle_failures == 0
            && self.audit_passed
    }
}

/// Random symmetric matrix with entries uniform in `[0, 1)`.
pub fn random_symmetric(m: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((m, m));
    for i in 0..m {
        for j in i..m {
            let v = rng.gen::<f64>();
            x[[i, j]] = v;
            x[[j, i]] = v;
        }
    }
    x
}

fn check_cmd(args: &CheckArgs) -> Result<bool> {
    let cfg = resolve(&args.solver, args.input.as_ref())?;
    let inst = match &cfg.input {
        Some(_) => load_instance(&cfg)?,
        None => {
            if args.m == 0 {
                return Err(Error::Parameter("m must be at least 1".into()));
            }
            SymTriInstance::new(random_symmetric(args.m, cfg.seed), cfg.rank, cfg.params)?
        }
    };
    let oracle_problem = inst.as_oracle_problem();
    let smooth = verify_relative_smoothness(&oracle_problem, args.samples, cfg.seed)?;
    let grads = check_block_gradients(&oracle_problem, args.points, cfg.seed, 1e-5, 1e-6);

    let problem = inst.as_block_problem();
    let schedule = derive_schedule(&problem.lipschitz(), &problem.sigmas(), cfg.kappa, cfg.rho)?;
    let oracle = check_block_solvers(&problem, &schedule, args.points, cfg.seed, 1e-8)?;

    let result = run(
        &problem,
        &schedule,
        &inst.initial_point(cfg.seed),
        &cfg.options(false),
    )?;
    let audit = audit_trace(&result.trace, &schedule, &AuditOptions::default());
    let lyapunov: Vec<f64> = result.trace.iter().map(|r| r.lyapunov).collect();
    let rate = fit_rate(&lyapunov).ok();

    let report = CheckReport {
        diagnostics: DiagnosticsReport::new(&smooth, Some(&audit), rate.as_ref()),
        smoothness_checks: smooth.checks,
        gradient_failures: grads.failures,
        gradient_worst_rel_error: grads.worst_rel_error,
        oracle_failures: oracle.failures,
        oracle_worst_gap: oracle.worst_gap,
        audit_passed: audit.passed,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    match &args.report {
        Some(path) => fs::write(path, json + "\n").map_err(|e| Error::io(path, e))?,
        None => println!("{json}"),
    }
    Ok(report.clean())
}

/// The inertia grid `0, 0.3, 0.6, 0.9` scaled by `kappa_max`.
pub fn kappa_grid(kappa_max: f64) -> [f64; 4] {
    [0.0, 0.3, 0.6, 0.9].map(|c| c * kappa_max)
}

fn bench_cmd(args: &BenchArgs) -> Result<()> {
    let cfg = resolve(&args.solver, args.input.as_ref())?;
    if !(args.kappa_max > 0.0 && args.kappa_max <= 1.0) {
        return Err(Error::Parameter(format!(
            "kappa_max = {} must lie in (0, 1]",
            args.kappa_max
        )));
    }
    if args.seeds.is_empty() {
        return Err(Error::Parameter("at least one seed is required".into()));
    }
    let inst = load_instance(&cfg)?;
    let cells: Vec<(f64, u64)> = kappa_grid(args.kappa_max)
        .into_iter()
        .flat_map(|k| args.seeds.iter().map(move |&s| (k, s)))
        .collect();
    let run_cell = |&(kappa, seed): &(f64, u64)| -> Result<String> {
        let start = Instant::now();
        let result = solve_instance(&inst, &cfg, kappa, seed, false)?;
        let wall = start.elapsed().as_secs_f64();
        let iters = match result.termination {
            Termination::ResidualTol => result.iterations().to_string(),
            _ => "NA".to_string(),
        };
        Ok(format!(
            "{kappa},{seed},{iters},{},{}",
            format_f64(result.final_record().phi),
            format_f64(wall)
        ))
    };
    let rows: Vec<String> = if args.serial {
        cells.iter().map(run_cell).collect::<Result<_>>()?
    } else {
        cells.par_iter().map(run_cell).collect::<Result<_>>()?
    };
    let mut csv = String::new();
    writeln!(csv, "{BENCH_HEADER}").unwrap();
    for row in rows {
        writeln!(csv, "{row}").unwrap();
    }
    match &args.out {
        Some(path) => fs::write(path, csv).map_err(|e| Error::io(path, e))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parameter(_) | Error::Config(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

/// Runs the command line and returns the process exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => solve_cmd(a).map(|()| true),
        Command::Synth(a) => synth_cmd(a).map(|()| true),
        Command::Check(a) => check_cmd(a),
        Command::Bench(a) => bench_cmd(a).map(|()| true),
    };
    match outcome {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            eprintln!("error: check found violations");
            EXIT_FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines() {
        let cfg = parse_config("# note\nrank = 3\n\nmax-iters=10\n", Path::new("c")).unwrap();
        assert_eq!(cfg["rank"], "3");
        assert_eq!(cfg["max_iters"], "10");
        assert!(matches!(
            parse_config("rank 3\n", Path::new("c")),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "rank = 4\nkappa = 0.2\nseed = 9\n").unwrap();
        let flags = SolverFlags {
            config: Some(path),
            rank: Some(2),
            ..SolverFlags::default()
        };
        let cfg = resolve(&flags, None).unwrap();
        assert_eq!(cfg.rank, 2);
        assert_eq!(cfg.kappa, 0.2);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.rho, 0.9);
    }

    #[test]
    fn bad_config_values_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "kappa = fast\n").unwrap();
        let flags = SolverFlags {
            config: Some(path.clone()),
            ..SolverFlags::default()
        };
        assert_eq!(exit_code(&resolve(&flags, None).unwrap_err()), EXIT_USAGE);
        fs::write(&path, "colour = red\n").unwrap();
        assert_eq!(exit_code(&resolve(&flags, None).unwrap_err()), EXIT_USAGE);
    }

    #[test]
    fn grid_and_suffix() {
        assert_eq!(kappa_grid(1.0), [0.0, 0.3, 0.6, 0.9]);
        assert_eq!(
            with_suffix(Path::new("out/run"), "_U.mtx"),
            PathBuf::from("out/run_U.mtx")
        );
    }

    #[test]
    fn rank_zero_is_rejected_before_reading() {
        assert_eq!(
            main(["bibpa", "solve", "--input", "/nonexistent", "--rank", "0"]),
            EXIT_USAGE
        );
        assert_eq!(main(["bibpa", "solve", "--bogus"]), EXIT_USAGE);
    }
}
