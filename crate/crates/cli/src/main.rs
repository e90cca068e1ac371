//! `poafd`: least-squares, pseudo-inverse and benchmark runs over CSV files.
//!
//! Exit codes: 0 success, 2 usage error, 3 input error (unreadable or
//! malformed files, shape mismatches), 4 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use poafd_core::bench::{self, ExperimentConfig, Hyperparams, OutputFormat, Preset};
use poafd_core::io::{read_matrix, write_matrix};
use poafd_core::linalg::DenseMatrix;
use poafd_core::pinv::{pinv_one_step, pinv_svd, pinv_two_step, InnerSolver, PinvConfig, PinvResult};
use poafd_core::poafd::{solve_ls, SolveConfig};
use poafd_core::solvers::{
    cgls, default_max_iter, lasso_cd, lsqr, pcr, ridge, DEFAULT_CGLS_TOL, DEFAULT_LASSO_MAX_SWEEPS,
    DEFAULT_LASSO_TOL, DEFAULT_LSQR_TOL,
};
use poafd_core::{Error, LsSolution, Method};

#[derive(Parser)]
#[command(name = "poafd", version, about = "Matching-pursuit least squares, pseudo-inverses and solver benchmarks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve X w ≈ y in the least-squares sense.
    Solve(SolveArgs),
    /// Compute the minimum-norm solution X† y.
    Pinv(PinvArgs),
    /// Run a benchmark preset and write one CSV row per measurement.
    Bench(BenchArgs),
    /// Run several methods on one problem and write their measurements.
    Compare(CompareArgs),
}

#[derive(Args)]
struct Problem {
    /// Measurement matrix X as CSV (one row per line, no header).
    #[arg(long, value_name = "X.csv")]
    matrix: PathBuf,
    /// Right-hand side y as CSV with one value per line; solve and pinv take
    /// several columns and solve them one at a time.
    #[arg(long, value_name = "y.csv")]
    rhs: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMethod {
    Poafd,
    Lsqr,
    Cgls,
    Ridge,
    Pcr,
    Lasso,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: Problem,
    /// Where to write w (CSV, one value per line; one column per rhs column).
    #[arg(long, value_name = "w.csv")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "poafd")]
    method: SolveMethod,
    /// Stopping tolerance: selection tolerance for poafd, atol/btol for lsqr,
    /// relative normal-residual tolerance for cgls, KKT tolerance for lasso.
    #[arg(long, value_name = "T")]
    tol: Option<f64>,
    /// Largest number of columns poafd may select.
    #[arg(long, value_name = "K")]
    max_select: Option<usize>,
    /// Iteration cap for lsqr, cgls and lasso (sweeps).
    #[arg(long, value_name = "N")]
    max_iter: Option<usize>,
    /// Penalty for ridge (default 0) and lasso (required).
    #[arg(long, value_name = "L")]
    lambda: Option<f64>,
    /// Number of principal components for pcr (default: all, clamped to the rank).
    #[arg(long, value_name = "K")]
    k: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PinvKind {
    TwoStep,
    OneStep,
    Svd,
}

#[derive(Clone, Copy, ValueEnum)]
enum InnerKind {
    Poafd,
    Lsqr,
    Cgls,
}

impl InnerKind {
    fn solver(self) -> InnerSolver {
        match self {
            InnerKind::Poafd => InnerSolver::default(),
            InnerKind::Lsqr => InnerSolver::lsqr(),
            InnerKind::Cgls => InnerSolver::cgls(),
        }
    }
}

#[derive(Args)]
struct PinvArgs {
    #[command(flatten)]
    problem: Problem,
    /// Where to write X† y.
    #[arg(long, value_name = "w.csv")]
    out: PathBuf,
    #[arg(long, value_enum)]
    method: PinvKind,
    /// Least-squares solver used inside two-step and one-step.
    #[arg(long, value_enum, default_value = "poafd")]
    inner: InnerKind,
    /// Refuse one-step when X has more rows than this (X Xᵀ is rows × rows).
    #[arg(long, value_name = "N", default_value_t = PinvConfig::default().max_gram_rows)]
    max_gram_rows: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Fig1,
    Fig2,
    Fig3,
    Fig4Tall,
    Fig4Flat,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Fig1 => Preset::Fig1,
            PresetArg::Fig2 => Preset::Fig2,
            PresetArg::Fig3 => Preset::Fig3,
            PresetArg::Fig4Tall => Preset::Fig4Tall,
            PresetArg::Fig4Flat => Preset::Fig4Flat,
        }
    }
}

#[derive(Args)]
struct Output {
    /// Where to write the measurement CSV.
    #[arg(long, value_name = "results.csv")]
    out: PathBuf,
    /// Also print an aligned table of per-method medians to standard output.
    #[arg(long)]
    summary: bool,
    /// Leave the wall_time_s column empty so reruns write identical bytes.
    #[arg(long)]
    omit_timing: bool,
    /// Timed repeats per solve; the median is reported.
    #[arg(long, value_name = "N", default_value_t = 3)]
    repeats: usize,
    /// Inner solver for the two_step and one_step methods.
    #[arg(long, value_enum, default_value = "poafd")]
    inner: InnerKind,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    preset: PresetArg,
    /// Base seed; trial t uses seed + t.
    #[arg(long, value_name = "S")]
    seed: u64,
    /// Trials per configuration (default: the preset's own count).
    #[arg(long, value_name = "T")]
    trials: Option<usize>,
    /// Multiply the preset's matrix dimensions by F (for quick runs).
    #[arg(long, value_name = "F", default_value_t = 1.0)]
    scale: f64,
    /// Run trials one after another instead of in parallel.
    #[arg(long)]
    serial: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    problem: Problem,
    /// Comma-separated method tags: poafd, lsqr, cgls, ridge, pcr, lasso, fs,
    /// mp, two_step, one_step.
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_method)]
    methods: Vec<Method>,
    #[command(flatten)]
    output: Output,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failure with its exit code and one-line message.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure { code: 2, msg: msg.into() }
    }

    fn input(msg: impl Into<String>) -> Self {
        Failure { code: 3, msg: msg.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidConfig(_) => 2,
            e if e.is_input_error() => 3,
            _ => 4,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn load_problem(p: &Problem) -> CliResult<(DenseMatrix, DenseMatrix)> {
    let x = read_matrix(&p.matrix)?;
    let y = read_matrix(&p.rhs)?;
    if y.rows() != x.rows() {
        return Err(Failure::input(format!(
            "{}: has {} rows but {} has {}; the right-hand side needs one row per matrix row",
            p.rhs.display(),
            y.rows(),
            p.matrix.display(),
            x.rows()
        )));
    }
    Ok((x, y))
}

fn write(path: &Path, w: &DenseMatrix) -> CliResult {
    write_matrix(path, w)?;
    Ok(())
}

/// Solves column by column and stacks the results into an n×p matrix.
fn per_column<T>(
    x: &DenseMatrix,
    y: &DenseMatrix,
    mut solve: impl FnMut(&[f64]) -> CliResult<T>,
    w_of: impl Fn(&T) -> &[f64],
    mut report: impl FnMut(Option<usize>, &T),
) -> CliResult<DenseMatrix> {
    let mut cols = Vec::with_capacity(y.cols());
    for j in 0..y.cols() {
        let r = solve(y.col(j))?;
        report((y.cols() > 1).then_some(j), &r);
        cols.push(w_of(&r).to_vec());
    }
    let n = x.cols();
    Ok(DenseMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]))
}

fn column_prefix(j: Option<usize>) -> String {
    j.map(|j| format!("column={j} ")).unwrap_or_default()
}

fn run_solve(a: &SolveArgs) -> CliResult {
    let (x, y) = load_problem(&a.problem)?;
    if let Some(t) = a.tol {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Failure::usage(format!("--tol must be a non-negative number, got {t}")));
        }
    }
    let solve_one = |col: &[f64]| -> CliResult<LsSolution> {
        let iters = a.max_iter.unwrap_or_else(|| default_max_iter(&x));
        let s = match a.method {
            SolveMethod::Poafd => {
                let mut cfg = SolveConfig::default();
                if let Some(t) = a.tol {
                    cfg.sel_tol = t;
                }
                cfg.max_select = a.max_select;
                solve_ls(&x, col, &cfg)?
            }
            SolveMethod::Lsqr => {
                let t = a.tol.unwrap_or(DEFAULT_LSQR_TOL);
                lsqr(&x, col, t, t, iters)?
            }
            SolveMethod::Cgls => cgls(&x, col, a.tol.unwrap_or(DEFAULT_CGLS_TOL), iters)?,
            SolveMethod::Ridge => ridge(&x, col, a.lambda.unwrap_or(0.0))?,
            SolveMethod::Pcr => pcr(&x, col, a.k.unwrap_or(x.cols()))?,
            SolveMethod::Lasso => {
                let lambda = a
                    .lambda
                    .ok_or_else(|| Failure::usage("--lambda is required with --method lasso"))?;
                lasso_cd(
                    &x,
                    col,
                    lambda,
                    a.tol.unwrap_or(DEFAULT_LASSO_TOL),
                    a.max_iter.unwrap_or(DEFAULT_LASSO_MAX_SWEEPS),
                )?
            }
        };
        Ok(s)
    };
    let w = per_column(
        &x,
        &y,
        solve_one,
        |s| &s.w,
        |j, s| {
            println!(
                "{}method={} residual={:e} norm={:e} steps={} converged={} time_s={:.6}",
                column_prefix(j),
                s.method,
                s.residual_norm,
                s.solution_norm,
                s.iterations,
                s.converged,
                s.wall_time.as_secs_f64()
            );
            for warn in &s.warnings {
                eprintln!("poafd: warning: {warn:?}");
            }
        },
    )?;
    write(&a.out, &w)
}

fn run_pinv(a: &PinvArgs) -> CliResult {
    let (x, y) = load_problem(&a.problem)?;
    let inner = a.inner.solver();
    let cfg = PinvConfig {
        max_gram_rows: a.max_gram_rows,
    };
    let w = per_column(
        &x,
        &y,
        |col| {
            Ok(match a.method {
                PinvKind::TwoStep => pinv_two_step(&x, col, &inner)?,
                PinvKind::OneStep => pinv_one_step(&x, col, &inner, &cfg)?,
                PinvKind::Svd => pinv_svd(&x, col)?,
            })
        },
        |r: &PinvResult| &r.w_dagger,
        |j, r| {
            let steps: Vec<String> = r.inner.iter().map(|s| s.iterations.to_string()).collect();
            println!(
                "{}method={} residual={:e} norm={:e} steps={} converged={} time_s={:.6}",
                column_prefix(j),
                r.method,
                r.residual_norm,
                r.solution_norm,
                if steps.is_empty() { "-".to_string() } else { steps.join("+") },
                r.converged(),
                r.wall_time.as_secs_f64()
            );
        },
    )?;
    write(&a.out, &w)
}

fn hyperparams(o: &Output) -> CliResult<Hyperparams> {
    if o.repeats == 0 {
        return Err(Failure::usage("--repeats must be at least 1"));
    }
    Ok(Hyperparams {
        inner: o.inner.solver(),
        ..Hyperparams::default()
    })
}

fn finish(records: &[bench::ExperimentRecord], o: &Output) -> CliResult {
    bench::emit_records(records, &o.out, OutputFormat::Csv, o.omit_timing)?;
    if o.summary {
        print!("{}", bench::format_summary(records));
    }
    Ok(())
}

fn run_bench(a: &BenchArgs) -> CliResult {
    let h = hyperparams(&a.output)?;
    if a.trials == Some(0) {
        return Err(Failure::usage("--trials must be at least 1"));
    }
    let preset = Preset::from(a.preset);
    let configs = preset.configs(a.seed, a.trials, a.scale)?;
    let total = configs.len();
    let mut records = Vec::new();
    for (i, cfg) in configs.into_iter().enumerate() {
        let cfg = ExperimentConfig {
            hyperparams: h.clone(),
            parallel: !a.serial,
            timing_repeats: a.output.repeats,
            ..cfg
        };
        eprintln!(
            "[{}/{}] {} {}x{} sigma={} trials={}",
            i + 1,
            total,
            preset,
            cfg.m,
            cfg.n,
            cfg.noise_sigma,
            cfg.trials
        );
        records.extend(bench::run_experiment(&cfg)?);
    }
    bench::sort_records(&mut records);
    finish(&records, &a.output)
}

fn run_compare(a: &CompareArgs) -> CliResult {
    let (x, y) = load_problem(&a.problem)?;
    if y.cols() != 1 {
        return Err(Failure::input(format!(
            "{}: compare takes a single right-hand side, found {} columns",
            a.problem.rhs.display(),
            y.cols()
        )));
    }
    let h = hyperparams(&a.output)?;
    let records = bench::compare_methods(&x, y.col(0), &a.methods, &h, a.output.repeats)?;
    finish(&records, &a.output)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Solve(a) => run_solve(a),
        Cmd::Pinv(a) => run_pinv(a),
        Cmd::Bench(a) => run_bench(a),
        Cmd::Compare(a) => run_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("poafd: {}", f.msg.replace('\n', " "));
            ExitCode::from(f.code)
        }
    }
}
