//! Minimum-norm least-squares solutions `X† y`.
//!
//! * Two-step: any LS solution `W₁` of `X W = y`, then any LS solution `W₂`
//!   of `Xᵀ W = W₁`; the answer is `Xᵀ W₂`.
//! * One-step: any LS solution `W̃` of `(X Xᵀ) W = y`; the answer is `Xᵀ W̃`.
//! * SVD: `V diag(1/σ) Uᵀ y` over the numerical rank, used as the oracle.
//!
//! Both iterative routes return a vector of the form `Xᵀ z`, i.e. a
//! combination of the rows of `X`, which is what makes it orthogonal to the
//! null space and hence of minimum norm.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::linalg::{jacobi_svd, norm, sub, DenseMatrix};
use crate::poafd::{PoafdSolver, SolveConfig};
use crate::solution::{LsSolution, LsSolver};
use crate::solvers::{CglsSolver, LsqrSolver};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PinvMethod {
    TwoStep,
    OneStep,
    Svd,
}

impl fmt::Display for PinvMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PinvMethod::TwoStep => "two-step",
            PinvMethod::OneStep => "one-step",
            PinvMethod::Svd => "svd",
        })
    }
}

impl FromStr for PinvMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "two-step" => Ok(PinvMethod::TwoStep),
            "one-step" => Ok(PinvMethod::OneStep),
            "svd" | "mp" => Ok(PinvMethod::Svd),
            other => Err(Error::InvalidConfig(format!(
                "unknown pseudo-inverse method {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PinvConfig {
    /// Largest row count for which the one-step route may form `X Xᵀ`.
    pub max_gram_rows: usize,
}

impl Default for PinvConfig {
    fn default() -> Self {
        PinvConfig {
            max_gram_rows: 5000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PinvResult {
    pub w_dagger: Vec<f64>,
    pub residual_norm: f64,
    pub solution_norm: f64,
    pub method: PinvMethod,
    /// The inner least-squares solves, in order.
    pub inner: Vec<LsSolution>,
    pub wall_time: Duration,
}

impl PinvResult {
    fn new(
        x: &DenseMatrix,
        y: &[f64],
        w: Vec<f64>,
        method: PinvMethod,
        inner: Vec<LsSolution>,
        wall_time: Duration,
    ) -> Result<Self> {
        let residual_norm = norm(&sub(&x.matvec(&w)?, y));
        Ok(PinvResult {
            solution_norm: norm(&w),
            w_dagger: w,
            residual_norm,
            method,
            inner,
            wall_time,
        })
    }

    /// True when every inner solve reported convergence.
    pub fn converged(&self) -> bool {
        self.inner.iter().all(|s| s.converged)
    }
}

fn at_step(step: u8) -> impl FnOnce(Error) -> Error {
    move |e| Error::PinvStep {
        step,
        source: Box::new(e),
    }
}

/// Two consecutive least-squares solves: `X W₁ ≈ y`, then `Xᵀ W₂ ≈ W₁`;
/// returns `Xᵀ W₂`.
pub fn pinv_two_step(x: &DenseMatrix, y: &[f64], solver: &dyn LsSolver) -> Result<PinvResult> {
    if y.len() != x.rows() {
        return Err(Error::dim("pinv_two_step", x.rows(), y.len()));
    }
    let start = Instant::now();
    let first = solver.solve(x, y).map_err(at_step(1))?;
    let xt = x.transpose();
    let second = solver.solve(&xt, &first.w).map_err(at_step(2))?;
    let w = x.t_matvec(&second.w)?;
    let elapsed = start.elapsed();
    PinvResult::new(x, y, w, PinvMethod::TwoStep, vec![first, second], elapsed)
}

/// One least-squares solve on the m×m product: `(X Xᵀ) W̃ ≈ y`; returns `Xᵀ W̃`.
pub fn pinv_one_step(
    x: &DenseMatrix,
    y: &[f64],
    solver: &dyn LsSolver,
    cfg: &PinvConfig,
) -> Result<PinvResult> {
    if y.len() != x.rows() {
        return Err(Error::dim("pinv_one_step", x.rows(), y.len()));
    }
    if x.rows() > cfg.max_gram_rows {
        return Err(Error::GramTooLarge {
            rows: x.rows(),
            cap: cfg.max_gram_rows,
        });
    }
    let start = Instant::now();
    let gram = x.outer_gram();
    let inner = solver.solve(&gram, y).map_err(at_step(1))?;
    let w = x.t_matvec(&inner.w)?;
    let elapsed = start.elapsed();
    PinvResult::new(x, y, w, PinvMethod::OneStep, vec![inner], elapsed)
}

/// `X† y` from the Jacobi SVD, singular values below the rank tolerance dropped.
pub fn pinv_svd(x: &DenseMatrix, y: &[f64]) -> Result<PinvResult> {
    if y.len() != x.rows() {
        return Err(Error::dim("pinv_svd", x.rows(), y.len()));
    }
    let start = Instant::now();
    let svd = jacobi_svd(x)?;
    let w = svd.truncated_solve(y, svd.rank())?;
    let elapsed = start.elapsed();
    PinvResult::new(x, y, w, PinvMethod::Svd, Vec::new(), elapsed)
}

/// Tolerance for Krylov inner solvers: the pseudo-inverse needs the inner
/// solution accurate along every singular direction, including the small
/// ones, so the stopping rules sit near the rounding floor.
pub const INNER_KRYLOV_TOL: f64 = 1e-14;

/// The least-squares solvers usable inside the pseudo-inverse routes.
///
/// Parsed Krylov solvers are configured for pseudo-inverse accuracy rather
/// than the plain least-squares defaults: LSQR reorthogonalizes its bases and
/// CGLS runs to [`INNER_KRYLOV_TOL`] with a `20 min(m, n)` iteration budget.
#[derive(Clone, Debug)]
pub enum InnerSolver {
    Poafd(PoafdSolver),
    Lsqr(LsqrSolver),
    Cgls(CglsSolver),
}

impl Default for InnerSolver {
    fn default() -> Self {
        InnerSolver::Poafd(PoafdSolver(SolveConfig::default()))
    }
}

impl InnerSolver {
    pub fn lsqr() -> Self {
        InnerSolver::Lsqr(LsqrSolver {
            atol: INNER_KRYLOV_TOL,
            btol: INNER_KRYLOV_TOL,
            max_iter: None,
            reorth: true,
        })
    }

    pub fn cgls() -> Self {
        InnerSolver::Cgls(CglsSolver {
            tol: INNER_KRYLOV_TOL,
            max_iter: None,
        })
    }
}

impl FromStr for InnerSolver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "poafd" => Ok(InnerSolver::default()),
            "lsqr" => Ok(InnerSolver::lsqr()),
            "cgls" | "cg" => Ok(InnerSolver::cgls()),
            other => Err(Error::InvalidConfig(format!("unknown inner solver {other:?}"))),
        }
    }
}

impl LsSolver for InnerSolver {
    fn solve(&self, x: &DenseMatrix, y: &[f64]) -> Result<LsSolution> {
        match self {
            InnerSolver::Poafd(s) => s.solve(x, y),
            InnerSolver::Lsqr(s) => s.solve(x, y),
            InnerSolver::Cgls(s) if s.max_iter.is_none() => CglsSolver {
                tol: s.tol,
                max_iter: Some(20 * x.rows().min(x.cols()).max(1)),
            }
            .solve(x, y),
            InnerSolver::Cgls(s) => s.solve(x, y),
        }
    }
}
