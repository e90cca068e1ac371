//! Synthetic benchmark harness: seeded problem generation, method runs over
//! trials (and optionally a feature-count sweep), CSV and summary output.
//!
//! Problems are `y = X w_true + σ e` with every entry of `X`, `w_true` and
//! `e` standard normal. Trial `t` of a run with base seed `s` uses seed
//! `s + t`, so runs that differ only in `σ` see the same `X`, `w_true` and
//! noise direction.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::greedy::forward_selection;
use crate::io::fmt_f64;
use crate::linalg::{norm, sub, DenseMatrix};
use crate::pinv::{pinv_one_step, pinv_svd, pinv_two_step, InnerSolver, PinvConfig};
use crate::poafd::{solve_ls, PoafdSolver, SolveConfig};
use crate::solution::Method;
use crate::solvers::{
    cgls, default_max_iter, default_ridge_lambda, lambda_max, lasso_cd, lsqr, pcr, ridge,
    DEFAULT_CGLS_TOL, DEFAULT_LASSO_MAX_SWEEPS, DEFAULT_LASSO_TOL, DEFAULT_LSQR_TOL,
};

pub const CSV_HEADER: &str =
    "preset,method,trial,seed,m,n,noise_sigma,feature_count,error,solution_norm,wall_time_s,converged";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
    Fig4Tall,
    Fig4Flat,
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Fig1,
        Preset::Fig2,
        Preset::Fig3,
        Preset::Fig4Tall,
        Preset::Fig4Flat,
        Preset::Custom,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4Tall => "fig4_tall",
            Preset::Fig4Flat => "fig4_flat",
            Preset::Custom => "custom",
        }
    }

    /// The configurations a preset expands to (fig3 runs two noise levels).
    ///
    /// `scale` multiplies both dimensions (rounded, at least 1); `trials`
    /// overrides the preset's default trial count.
    pub fn configs(self, seed: u64, trials: Option<usize>, scale: f64) -> Result<Vec<ExperimentConfig>> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidConfig(format!("scale must be positive, got {scale}")));
        }
        let dim = |d: usize| ((d as f64 * scale).round() as usize).max(1);
        let sweep_methods = vec![Method::Lasso, Method::Fs, Method::Pcr, Method::Poafd, Method::TwoStep];
        // the pseudo-inverse comparison roster; the tall preset also runs
        // plain POAFD to contrast an ordinary LS solution with the minimum-norm one
        let pinv_methods = vec![
            Method::Lsqr,
            Method::Cgls,
            Method::Ridge,
            Method::Mp,
            Method::TwoStep,
            Method::OneStep,
        ];
        let tall_methods = [pinv_methods.clone(), vec![Method::Poafd]].concat();
        let base = |m, n, sigma, default_trials, methods: &Vec<Method>, sweep: bool| {
            let (m, n) = (dim(m), dim(n));
            ExperimentConfig {
                preset: self,
                m,
                n,
                noise_sigma: sigma,
                trials: trials.unwrap_or(default_trials),
                seed,
                methods: methods.clone(),
                feature_counts: sweep.then(|| (1..=n).collect()),
                ..ExperimentConfig::default()
            }
        };
        let cfgs = match self {
            Preset::Fig1 => vec![base(100, 10, 0.5, 10, &sweep_methods, true)],
            Preset::Fig2 => vec![base(1000, 10, 0.5, 10, &sweep_methods, true)],
            Preset::Fig3 => vec![
                base(100, 10, 0.5, 20, &sweep_methods, true),
                base(100, 10, 5.0, 20, &sweep_methods, true),
            ],
            Preset::Fig4Tall => vec![base(3000, 30, 1.0, 5, &tall_methods, false)],
            Preset::Fig4Flat => vec![base(30, 3000, 0.0, 5, &pinv_methods, false)],
            Preset::Custom => {
                return Err(Error::InvalidConfig(
                    "the custom preset has no defaults; build an ExperimentConfig directly".into(),
                ))
            }
        };
        Ok(cfgs)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Preset::ALL
            .into_iter()
            .find(|p| p.tag() == key)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown preset {s:?}")))
    }
}

/// Method settings that are not part of the problem.
#[derive(Clone, Debug)]
pub struct Hyperparams {
    /// Ridge penalty; `None` means `1e-6 trace(XᵀX) / n`.
    pub ridge_lambda: Option<f64>,
    /// LASSO grid: `points` values log-spaced from `λ_max` down to `λ_max * ratio`.
    pub lasso_grid_points: usize,
    pub lasso_grid_ratio: f64,
    /// Fraction of rows used for fitting when LASSO picks `λ` by hold-out.
    pub lasso_train_fraction: f64,
    pub poafd: SolveConfig,
    /// Inner solver of the two pseudo-inverse routes.
    pub inner: InnerSolver,
    pub pinv: PinvConfig,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            ridge_lambda: None,
            lasso_grid_points: 10,
            lasso_grid_ratio: 1e-4,
            lasso_train_fraction: 0.8,
            poafd: SolveConfig::default(),
            inner: InnerSolver::default(),
            pinv: PinvConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub m: usize,
    pub n: usize,
    pub noise_sigma: f64,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    /// Feature counts to sweep; `None` runs every method once at full size.
    pub feature_counts: Option<Vec<usize>>,
    pub hyperparams: Hyperparams,
    /// Overwrite column 1 with column 0, making `X` rank deficient.
    pub duplicate_columns: bool,
    /// Run trials on the rayon pool.
    pub parallel: bool,
    /// Timed repeats per solve; the median is reported.
    pub timing_repeats: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            preset: Preset::Custom,
            m: 1,
            n: 1,
            noise_sigma: 0.0,
            trials: 1,
            seed: 0,
            methods: vec![Method::Poafd],
            feature_counts: None,
            hyperparams: Hyperparams::default(),
            duplicate_columns: false,
            parallel: true,
            timing_repeats: 3,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.m == 0 || self.n == 0 {
            return bad(format!("problem size {}x{} is empty", self.m, self.n));
        }
        if self.methods.is_empty() {
            return bad("no methods given".into());
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return bad(format!("noise sigma must be >= 0, got {}", self.noise_sigma));
        }
        if self.timing_repeats == 0 {
            return bad("timing_repeats must be at least 1".into());
        }
        if matches!(&self.feature_counts, Some(k) if k.is_empty()) {
            return bad("feature sweep is empty".into());
        }
        if self.duplicate_columns && self.n < 2 {
            return bad("duplicate_columns needs at least two columns".into());
        }
        let h = &self.hyperparams;
        if h.lasso_grid_points == 0 || !(h.lasso_grid_ratio > 0.0 && h.lasso_grid_ratio <= 1.0) {
            return bad("lasso grid needs >= 1 point and a ratio in (0, 1]".into());
        }
        if !(h.lasso_train_fraction > 0.0 && h.lasso_train_fraction < 1.0) {
            return bad("lasso train fraction must lie in (0, 1)".into());
        }
        h.poafd.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRecord {
    pub preset: Preset,
    pub method: Method,
    pub trial: usize,
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    /// NaN (an empty CSV field) when the problem was not generated here.
    pub noise_sigma: f64,
    /// The swept feature count, or `n` when there is no sweep.
    pub feature_count: usize,
    /// `‖X w - y‖` against the noisy `y`; NaN when the solve failed.
    pub error: f64,
    pub solution_norm: f64,
    pub wall_time_s: f64,
    pub converged: bool,
}

impl ExperimentRecord {
    fn sort_key(&self, other: &Self) -> Ordering {
        self.preset
            .cmp(&other.preset)
            .then(self.noise_sigma.total_cmp(&other.noise_sigma))
            .then(self.method.cmp(&other.method))
            .then(self.trial.cmp(&other.trial))
            .then(self.feature_count.cmp(&other.feature_count))
    }
}

/// `X`, `w_true` and `y = X w_true + σ e`, all from one seeded stream.
pub fn gen_problem(m: usize, n: usize, sigma: f64, seed: u64) -> Result<(DenseMatrix, Vec<f64>, Vec<f64>)> {
    gen_problem_with(m, n, sigma, seed, false)
}

fn gen_problem_with(
    m: usize,
    n: usize,
    sigma: f64,
    seed: u64,
    duplicate: bool,
) -> Result<(DenseMatrix, Vec<f64>, Vec<f64>)> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidConfig(format!("noise sigma must be >= 0, got {sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DenseMatrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng));
    let w_true: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let noise: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
    if duplicate && n >= 2 {
        let c0 = x.col(0).to_vec();
        x.set_col(1, &c0)?;
    }
    let mut y = x.matvec(&w_true)?;
    if sigma > 0.0 {
        for (yi, e) in y.iter_mut().zip(&noise) {
            *yi += sigma * e;
        }
    }
    Ok((x, y, w_true))
}

/// `points` values from `λ_max` down to `λ_max * ratio`, evenly spaced in log.
pub fn lasso_grid(x: &DenseMatrix, y: &[f64], points: usize, ratio: f64) -> Result<Vec<f64>> {
    let top = lambda_max(x, y)?;
    if points == 1 {
        return Ok(vec![top]);
    }
    let step = ratio.ln() / (points - 1) as f64;
    Ok((0..points).map(|i| top * (step * i as f64).exp()).collect())
}

fn support_size(w: &[f64]) -> usize {
    w.iter().filter(|v| **v != 0.0).count()
}

/// The grid `λ` whose solution has exactly `k` nonzeros (the smallest such
/// `λ`), otherwise the one whose support size is nearest to `k`.
fn lasso_lambda_for_support(x: &DenseMatrix, y: &[f64], grid: &[f64], k: usize) -> Result<f64> {
    let mut best: Option<(usize, f64)> = None;
    for &lam in grid {
        let s = support_size(&lasso_cd(x, y, lam, DEFAULT_LASSO_TOL, DEFAULT_LASSO_MAX_SWEEPS)?.w);
        let gap = s.abs_diff(k);
        // the grid descends, so `<=` keeps the smallest λ among equals
        if best.is_none_or(|(g, _)| gap <= g) {
            best = Some((gap, lam));
        }
    }
    Ok(best.map(|(_, l)| l).unwrap_or(grid[0]))
}

/// Picks `λ` from the grid by fitting on the leading rows and scoring the
/// residual on the rest.
fn lasso_lambda_by_holdout(x: &DenseMatrix, y: &[f64], grid: &[f64], h: &Hyperparams) -> Result<f64> {
    let m = x.rows();
    let train = ((m as f64 * h.lasso_train_fraction).round() as usize).clamp(1, m);
    if train == m {
        return Ok(*grid.last().expect("grid is non-empty"));
    }
    let xt = DenseMatrix::from_fn(train, x.cols(), |i, j| x[(i, j)]);
    let xv = DenseMatrix::from_fn(m - train, x.cols(), |i, j| x[(train + i, j)]);
    let (yt, yv) = y.split_at(train);
    let mut best: Option<(f64, f64)> = None;
    for &lam in grid {
        let Ok(fit) = lasso_cd(&xt, yt, lam, DEFAULT_LASSO_TOL, DEFAULT_LASSO_MAX_SWEEPS) else {
            continue;
        };
        let err = norm(&sub(&xv.matvec(&fit.w)?, yv));
        if best.is_none_or(|(e, _)| err < e) {
            best = Some((err, lam));
        }
    }
    Ok(best.map(|(_, l)| l).unwrap_or(*grid.last().expect("grid is non-empty")))
}

struct Outcome {
    w: Vec<f64>,
    converged: bool,
}

fn solve_with(method: Method, x: &DenseMatrix, y: &[f64], k: Option<usize>, h: &Hyperparams, lasso_lambda: f64) -> Result<Outcome> {
    let ls = |s: crate::solution::LsSolution| Outcome {
        converged: s.converged,
        w: s.w,
    };
    let pv = |p: crate::pinv::PinvResult| Outcome {
        converged: p.converged(),
        w: p.w_dagger,
    };
    let full = x.cols();
    let inner = match (&h.inner, k) {
        (InnerSolver::Poafd(s), Some(k)) => InnerSolver::Poafd(PoafdSolver(s.0.clone().with_max_select(k))),
        (inner, _) => inner.clone(),
    };
    Ok(match method {
        Method::Poafd => {
            let mut cfg = h.poafd.clone();
            if let Some(k) = k {
                cfg = cfg.with_max_select(k);
            }
            ls(solve_ls(x, y, &cfg)?)
        }
        Method::Lsqr => ls(lsqr(x, y, DEFAULT_LSQR_TOL, DEFAULT_LSQR_TOL, default_max_iter(x))?),
        Method::Cgls => ls(cgls(x, y, DEFAULT_CGLS_TOL, default_max_iter(x))?),
        Method::Ridge => {
            let lambda = h.ridge_lambda.unwrap_or_else(|| default_ridge_lambda(x));
            ls(ridge(x, y, lambda)?)
        }
        Method::Pcr => ls(pcr(x, y, k.unwrap_or(full))?),
        Method::Lasso => ls(lasso_cd(x, y, lasso_lambda, DEFAULT_LASSO_TOL, DEFAULT_LASSO_MAX_SWEEPS)?),
        Method::Fs => ls(forward_selection(x, y, k.unwrap_or(full))?),
        Method::Mp => pv(pinv_svd(x, y)?),
        Method::TwoStep => pv(pinv_two_step(x, y, &inner)?),
        Method::OneStep => pv(pinv_one_step(x, y, &inner, &h.pinv)?),
    })
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

struct Measured {
    error: f64,
    solution_norm: f64,
    wall_time_s: f64,
    converged: bool,
}

fn measure(method: Method, x: &DenseMatrix, y: &[f64], k: Option<usize>, cfg: &ExperimentConfig, lasso_lambda: f64) -> Measured {
    let mut times = Vec::with_capacity(cfg.timing_repeats);
    let mut first = None;
    for _ in 0..cfg.timing_repeats {
        let start = Instant::now();
        let out = solve_with(method, x, y, k, &cfg.hyperparams, lasso_lambda);
        times.push(start.elapsed().as_secs_f64());
        match out {
            Ok(o) => {
                first.get_or_insert(o);
            }
            Err(_) => {
                first = None;
                break;
            }
        }
    }
    let fitted = first.and_then(|o| {
        let r = x.matvec(&o.w).ok()?;
        let error = norm(&sub(&r, y));
        error.is_finite().then(|| (error, norm(&o.w), o.converged))
    });
    match fitted {
        Some((error, solution_norm, converged)) => Measured {
            error,
            solution_norm,
            wall_time_s: median(&mut times),
            converged,
        },
        None => Measured {
            wall_time_s: median(&mut times),
            ..Measured::failed()
        },
    }
}

impl Measured {
    fn failed() -> Self {
        Measured {
            error: f64::NAN,
            solution_norm: f64::NAN,
            wall_time_s: 0.0,
            converged: false,
        }
    }
}

/// The LASSO penalty for one run: matched to the support size `k` in a
/// sweep, chosen by hold-out otherwise. `0` flags `λ_max = 0`.
fn pick_lasso_lambda(x: &DenseMatrix, y: &[f64], k: Option<usize>, h: &Hyperparams) -> Result<f64> {
    let grid = lasso_grid(x, y, h.lasso_grid_points, h.lasso_grid_ratio)?;
    if grid[0] == 0.0 {
        return Ok(0.0);
    }
    match k {
        Some(k) => lasso_lambda_for_support(x, y, &grid, k),
        None => lasso_lambda_by_holdout(x, y, &grid, h),
    }
}

fn measure_method(method: Method, x: &DenseMatrix, y: &[f64], k: Option<usize>, cfg: &ExperimentConfig) -> Measured {
    if method != Method::Lasso {
        return measure(method, x, y, k, cfg, f64::NAN);
    }
    match pick_lasso_lambda(x, y, k, &cfg.hyperparams) {
        // y is orthogonal to every column: the zero vector is optimal
        Ok(l) if l == 0.0 => Measured {
            error: norm(y),
            solution_norm: 0.0,
            wall_time_s: 0.0,
            converged: true,
        },
        Ok(l) => measure(method, x, y, k, cfg, l),
        Err(_) => Measured::failed(),
    }
}

fn run_trial(cfg: &ExperimentConfig, trial: usize) -> Result<Vec<ExperimentRecord>> {
    let seed = cfg.seed.wrapping_add(trial as u64);
    let (x, y, _) = gen_problem_with(cfg.m, cfg.n, cfg.noise_sigma, seed, cfg.duplicate_columns)?;
    let counts: Vec<Option<usize>> = match &cfg.feature_counts {
        Some(ks) => ks.iter().map(|&k| Some(k)).collect(),
        None => vec![None],
    };
    let mut out = Vec::new();
    for &method in &cfg.methods {
        for &k in &counts {
            let meas = measure_method(method, &x, &y, k, cfg);
            out.push(ExperimentRecord {
                preset: cfg.preset,
                method,
                trial,
                seed,
                m: cfg.m,
                n: cfg.n,
                noise_sigma: cfg.noise_sigma,
                feature_count: k.unwrap_or(cfg.n),
                error: meas.error,
                solution_norm: meas.solution_norm,
                wall_time_s: meas.wall_time_s,
                converged: meas.converged,
            });
        }
    }
    Ok(out)
}

/// Runs each method once on a given problem (no sweep). Records carry preset
/// `custom`, trial and seed 0, and a NaN noise level.
pub fn compare_methods(
    x: &DenseMatrix,
    y: &[f64],
    methods: &[Method],
    hyperparams: &Hyperparams,
    timing_repeats: usize,
) -> Result<Vec<ExperimentRecord>> {
    if y.len() != x.rows() {
        return Err(Error::dim("compare_methods", x.rows(), y.len()));
    }
    let cfg = ExperimentConfig {
        m: x.rows(),
        n: x.cols(),
        methods: methods.to_vec(),
        hyperparams: hyperparams.clone(),
        timing_repeats,
        ..ExperimentConfig::default()
    };
    cfg.validate()?;
    let mut records: Vec<ExperimentRecord> = methods
        .iter()
        .map(|&method| {
            let meas = measure_method(method, x, y, None, &cfg);
            ExperimentRecord {
                preset: Preset::Custom,
                method,
                trial: 0,
                seed: 0,
                m: x.rows(),
                n: x.cols(),
                noise_sigma: f64::NAN,
                feature_count: x.cols(),
                error: meas.error,
                solution_norm: meas.solution_norm,
                wall_time_s: meas.wall_time_s,
                converged: meas.converged,
            }
        })
        .collect();
    sort_records(&mut records);
    Ok(records)
}

/// Runs every method on every trial (and feature count). A failing solve is
/// recorded with `converged = false` and NaN error; the run continues.
/// Records come back sorted, independent of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let per_trial: Vec<Result<Vec<ExperimentRecord>>> = if cfg.parallel {
        (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect()
    } else {
        (0..cfg.trials).map(|t| run_trial(cfg, t)).collect()
    };
    let mut records = Vec::new();
    for r in per_trial {
        records.extend(r?);
    }
    sort_records(&mut records);
    Ok(records)
}

pub fn sort_records(records: &mut [ExperimentRecord]) {
    records.sort_by(|a, b| a.sort_key(b));
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Summary,
}

fn fmt_opt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        fmt_f64(v)
    }
}

/// CSV text for `records`. With `omit_timing` the wall-time column is left
/// empty so reruns produce identical bytes.
pub fn format_csv(records: &[ExperimentRecord], omit_timing: bool) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut row = |fields: &[String]| w.write_record(fields).expect("writing to memory");
    row(&CSV_HEADER.split(',').map(String::from).collect::<Vec<_>>());
    for r in records {
        let time = if omit_timing { String::new() } else { fmt_opt(r.wall_time_s) };
        row(&[
            r.preset.to_string(),
            r.method.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.m.to_string(),
            r.n.to_string(),
            fmt_opt(r.noise_sigma),
            r.feature_count.to_string(),
            fmt_opt(r.error),
            fmt_opt(r.solution_norm),
            time,
            r.converged.to_string(),
        ]);
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("ascii output")
}

/// Parses text produced by [`format_csv`]; empty numeric fields read as NaN.
pub fn parse_csv(text: &str, source: &str) -> Result<Vec<ExperimentRecord>> {
    let perr = |line: usize, col: usize, msg: String| Error::Parse {
        path: source.to_string(),
        line,
        col,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = reader.records();
    let header = rows.next().transpose().map_err(|e| perr(1, 1, e.to_string()))?;
    if !header.is_some_and(|h| h.iter().eq(CSV_HEADER.split(','))) {
        return Err(perr(1, 1, "missing or unexpected header".into()));
    }
    let mut records = Vec::new();
    for rec in rows {
        let f = rec.map_err(|e| perr(e.position().map_or(1, |p| p.line() as usize), 1, e.to_string()))?;
        let ln = f.position().map_or(1, |p| p.line() as usize);
        if f.len() != 12 {
            return Err(perr(ln, 1, format!("expected 12 fields, found {}", f.len())));
        }
        let num = |i: usize| -> Result<f64> {
            if f[i].is_empty() {
                return Ok(f64::NAN);
            }
            f[i].parse().map_err(|_| perr(ln, i + 1, format!("not a number: {:?}", &f[i])))
        };
        let int = |i: usize| -> Result<u64> {
            f[i].parse().map_err(|_| perr(ln, i + 1, format!("not an integer: {:?}", &f[i])))
        };
        let tag_err = |i: usize| perr(ln, i + 1, format!("unknown tag {:?}", &f[i]));
        records.push(ExperimentRecord {
            preset: f[0].parse().map_err(|_| tag_err(0))?,
            method: f[1].parse().map_err(|_| tag_err(1))?,
            trial: int(2)? as usize,
            seed: int(3)?,
            m: int(4)? as usize,
            n: int(5)? as usize,
            noise_sigma: num(6)?,
            feature_count: int(7)? as usize,
            error: num(8)?,
            solution_norm: num(9)?,
            wall_time_s: num(10)?,
            converged: match &f[11] {
                "true" => true,
                "false" => false,
                other => return Err(perr(ln, 12, format!("not a flag: {other:?}"))),
            },
        });
    }
    Ok(records)
}

/// Aligned table of per-method medians over trials, one row per
/// (preset, σ, method, feature count).
pub fn format_summary(records: &[ExperimentRecord]) -> String {
    type Key = (Preset, u64, Method, usize);
    let mut groups: BTreeMap<Key, Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in records {
        // σ keyed by its bit pattern; σ ≥ 0 so the order matches numeric order
        groups
            .entry((r.preset, r.noise_sigma.to_bits(), r.method, r.feature_count))
            .or_default()
            .push(r);
    }
    let header = ["preset", "sigma", "method", "features", "time_s", "error", "norm", "ok"];
    let mut rows: Vec<[String; 8]> = Vec::new();
    for ((preset, sigma, method, k), rs) in &groups {
        let med = |f: fn(&ExperimentRecord) -> f64| {
            let mut v: Vec<f64> = rs.iter().map(|r| f(r)).filter(|v| !v.is_nan()).collect();
            let m = median(&mut v);
            if m.is_nan() { "-".to_string() } else { format!("{m:.4e}") }
        };
        rows.push([
            preset.to_string(),
            format!("{}", f64::from_bits(*sigma)),
            method.to_string(),
            k.to_string(),
            med(|r| r.wall_time_s),
            med(|r| r.error),
            med(|r| r.solution_norm),
            format!("{}/{}", rs.iter().filter(|r| r.converged).count(), rs.len()),
        ]);
    }
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[&str]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (c, w))| if i < 3 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&header);
    for row in &rows {
        line(&row.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

pub fn emit_records(records: &[ExperimentRecord], path: &Path, format: OutputFormat, omit_timing: bool) -> Result<()> {
    let text = match format {
        OutputFormat::Csv => format_csv(records, omit_timing),
        OutputFormat::Summary => format_summary(records),
    };
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(methods: Vec<Method>) -> ExperimentConfig {
        ExperimentConfig {
            m: 20,
            n: 5,
            noise_sigma: 0.1,
            trials: 2,
            seed: 7,
            methods,
            timing_repeats: 1,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn noiseless_problem_is_exact() {
        let (x, y, w) = gen_problem(12, 4, 0.0, 3).unwrap();
        assert_eq!(y, x.matvec(&w).unwrap());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = gen_problem(9, 3, 0.5, 11).unwrap();
        let b = gen_problem(9, 3, 0.5, 11).unwrap();
        assert_eq!(a.0.as_col_major(), b.0.as_col_major());
        assert_eq!(a.1, b.1);
        assert_eq!(a.2, b.2);
        let c = gen_problem(9, 3, 0.5, 12).unwrap();
        assert_ne!(a.1, c.1);
    }

    #[test]
    fn noise_has_requested_spread() {
        let (x, y, w) = gen_problem(10_000, 1, 0.5, 5).unwrap();
        let e = sub(&y, &x.matvec(&w).unwrap());
        let mean = e.iter().sum::<f64>() / e.len() as f64;
        let var = e.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (e.len() - 1) as f64;
        let sd = var.sqrt();
        assert!((0.48..=0.52).contains(&sd), "sample sd {sd}");
    }

    #[test]
    fn duplicate_variant_copies_a_column() {
        let (x, _, _) = gen_problem_with(6, 3, 0.0, 1, true).unwrap();
        assert_eq!(x.col(0), x.col(1));
    }

    #[test]
    fn record_count_without_and_with_sweep() {
        let recs = run_experiment(&small(vec![Method::Poafd])).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs.iter().all(|r| r.feature_count == 5 && r.converged));
        let mut cfg = small(vec![Method::Poafd, Method::Pcr, Method::Lasso]);
        cfg.feature_counts = Some(vec![1, 3, 5]);
        assert_eq!(run_experiment(&cfg).unwrap().len(), 3 * 2 * 3);
    }

    #[test]
    fn failures_become_sentinels() {
        let mut cfg = small(vec![Method::OneStep, Method::Poafd]);
        cfg.hyperparams.pinv.max_gram_rows = 3;
        let recs = run_experiment(&cfg).unwrap();
        let failed: Vec<_> = recs.iter().filter(|r| r.method == Method::OneStep).collect();
        assert_eq!(failed.len(), 2);
        assert!(failed.iter().all(|r| !r.converged && r.error.is_nan()));
        let csv = format_csv(&recs, true);
        let line = csv.lines().find(|l| l.contains(",one_step,")).unwrap();
        assert!(line.ends_with(",,,,false"), "{line}");
        assert!(recs.iter().filter(|r| r.method == Method::Poafd).all(|r| r.error.is_finite()));
    }

    #[test]
    fn serial_and_parallel_agree() {
        let mut cfg = small(vec![Method::Lsqr, Method::TwoStep, Method::Fs]);
        cfg.trials = 4;
        let par = run_experiment(&cfg).unwrap();
        cfg.parallel = false;
        let ser = run_experiment(&cfg).unwrap();
        assert_eq!(format_csv(&par, true), format_csv(&ser, true));
    }

    #[test]
    fn empty_csv_is_header_only() {
        assert_eq!(format_csv(&[], false), format!("{CSV_HEADER}\n"));
        assert!(parse_csv(&format_csv(&[], false), "t").unwrap().is_empty());
    }

    #[test]
    fn one_record_round_trips() {
        let rec = ExperimentRecord {
            preset: Preset::Fig4Flat,
            method: Method::OneStep,
            trial: 3,
            seed: u64::MAX,
            m: 30,
            n: 3000,
            noise_sigma: 0.1,
            feature_count: 3000,
            error: 1.0 / 3.0,
            solution_norm: 2f64.sqrt(),
            wall_time_s: 1.25e-3,
            converged: true,
        };
        let csv = format_csv(std::slice::from_ref(&rec), false);
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(parse_csv(&csv, "t").unwrap(), vec![rec]);
    }

    #[test]
    fn parse_rejects_bad_rows() {
        let bad = format!("{CSV_HEADER}\nfig1,poafd,0,1,2,3,0.5,1,abc,1,1,true\n");
        match parse_csv(&bad, "r.csv") {
            Err(Error::Parse { line, col, .. }) => assert_eq!((line, col), (2, 9)),
            other => panic!("{other:?}"),
        }
        assert!(parse_csv("a,b\n", "r.csv").is_err());
    }

    #[test]
    fn lasso_support_selection_hits_target_when_possible() {
        let (x, y, _) = gen_problem(40, 6, 0.1, 2).unwrap();
        let grid = lasso_grid(&x, &y, 10, 1e-4).unwrap();
        assert_eq!(grid.len(), 10);
        assert!((grid[9] / grid[0] - 1e-4).abs() < 1e-15);
        let lam = lasso_lambda_for_support(&x, &y, &grid, 6).unwrap();
        let w = lasso_cd(&x, &y, lam, DEFAULT_LASSO_TOL, DEFAULT_LASSO_MAX_SWEEPS).unwrap().w;
        assert_eq!(support_size(&w), 6);
    }

    #[test]
    fn summary_has_one_row_per_group() {
        let recs = run_experiment(&small(vec![Method::Mp, Method::Poafd])).unwrap();
        let s = format_summary(&recs);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("preset"));
        assert!(lines[1].contains("poafd") && lines[2].contains("mp"));
        assert!(lines[1].ends_with("2/2"));
    }

    #[test]
    fn presets_parse_and_expand() {
        assert_eq!("fig4-tall".parse::<Preset>().unwrap(), Preset::Fig4Tall);
        let f3 = Preset::Fig3.configs(1, None, 1.0).unwrap();
        assert_eq!(f3.len(), 2);
        assert_eq!((f3[0].noise_sigma, f3[1].noise_sigma), (0.5, 5.0));
        assert_eq!(f3[0].trials, 20);
        let flat = Preset::Fig4Flat.configs(1, Some(2), 0.1).unwrap();
        assert_eq!((flat[0].m, flat[0].n, flat[0].trials), (3, 300, 2));
        assert!(Preset::Custom.configs(1, None, 1.0).is_err());
        assert!(Preset::Fig1.configs(1, None, 0.0).is_err());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = small(vec![]);
        assert!(cfg.validate().is_err());
        cfg.methods = vec![Method::Poafd];
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        cfg.trials = 1;
        cfg.noise_sigma = -1.0;
        assert!(run_experiment(&cfg).is_err());
    }
}
