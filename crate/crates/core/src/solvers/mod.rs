//! Classical least-squares baselines.

mod cgls;
mod lasso;
mod lsqr;
mod regularized;

pub use cgls::cgls;
pub use lasso::{kkt_violation, lambda_max, lasso_cd, soft_threshold};
pub use lsqr::{lsqr, lsqr_reorth};
pub use regularized::{pcr, pcr_with_svd, ridge};

use crate::error::Result;
use crate::linalg::DenseMatrix;
use crate::solution::{LsSolution, LsSolver};

pub const DEFAULT_LSQR_TOL: f64 = 1e-10;
pub const DEFAULT_CGLS_TOL: f64 = 1e-10;
pub const DEFAULT_LASSO_TOL: f64 = 1e-9;
pub const DEFAULT_LASSO_MAX_SWEEPS: usize = 10_000;

/// Krylov iteration cap used when none is given: `4 min(m, n)`.
pub fn default_max_iter(x: &DenseMatrix) -> usize {
    (4 * x.rows().min(x.cols())).max(1)
}

/// Ridge parameter used by the benchmark presets: `1e-6 trace(XᵀX) / n`.
pub fn default_ridge_lambda(x: &DenseMatrix) -> f64 {
    let trace: f64 = x.columns().map(|c| c.iter().map(|v| v * v).sum::<f64>()).sum();
    1e-6 * trace / x.cols() as f64
}

#[derive(Clone, Debug)]
pub struct LsqrSolver {
    pub atol: f64,
    pub btol: f64,
    pub max_iter: Option<usize>,
    /// Fully reorthogonalize the bidiagonalization bases.
    pub reorth: bool,
}

impl Default for LsqrSolver {
    fn default() -> Self {
        LsqrSolver {
            atol: DEFAULT_LSQR_TOL,
            btol: DEFAULT_LSQR_TOL,
            max_iter: None,
            reorth: false,
        }
    }
}

impl LsSolver for LsqrSolver {
    fn solve(&self, x: &DenseMatrix, y: &[f64]) -> Result<LsSolution> {
        let it = self.max_iter.unwrap_or_else(|| default_max_iter(x));
        if self.reorth {
            lsqr_reorth(x, y, self.atol, self.btol, it)
        } else {
            lsqr(x, y, self.atol, self.btol, it)
        }
    }
}

#[derive(Clone, Debug)]
pub struct CglsSolver {
    pub tol: f64,
    pub max_iter: Option<usize>,
}

impl Default for CglsSolver {
    fn default() -> Self {
        CglsSolver {
            tol: DEFAULT_CGLS_TOL,
            max_iter: None,
        }
    }
}

impl LsSolver for CglsSolver {
    fn solve(&self, x: &DenseMatrix, y: &[f64]) -> Result<LsSolution> {
        let it = self.max_iter.unwrap_or_else(|| default_max_iter(x));
        cgls(x, y, self.tol, it)
    }
}
