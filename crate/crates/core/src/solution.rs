use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::linalg::{norm, sub, DenseMatrix};

/// Every solver the crate can run, under the tag used in CSV output and on
/// the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Poafd,
    Lsqr,
    Cgls,
    Ridge,
    Pcr,
    Lasso,
    /// Forward selection: orthogonal greedy pursuit with least-squares refit.
    Fs,
    /// SVD-based Moore-Penrose pseudo-inverse.
    Mp,
    TwoStep,
    OneStep,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Poafd,
        Method::Lsqr,
        Method::Cgls,
        Method::Ridge,
        Method::Pcr,
        Method::Lasso,
        Method::Fs,
        Method::Mp,
        Method::TwoStep,
        Method::OneStep,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Poafd => "poafd",
            Method::Lsqr => "lsqr",
            Method::Cgls => "cgls",
            Method::Ridge => "ridge",
            Method::Pcr => "pcr",
            Method::Lasso => "lasso",
            Method::Fs => "fs",
            Method::Mp => "mp",
            Method::TwoStep => "two_step",
            Method::OneStep => "one_step",
        }
    }

    /// Whether the method has a natural "number of features" knob.
    pub fn supports_feature_count(self) -> bool {
        matches!(
            self,
            Method::Poafd | Method::Pcr | Method::Lasso | Method::Fs | Method::TwoStep | Method::OneStep
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == norm)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolveWarning {
    /// PCR was asked for more components than the numerical rank.
    RankClamped { requested: usize, rank: usize },
}

/// A least-squares solution vector with its diagnostics.
#[derive(Clone, Debug)]
pub struct LsSolution {
    pub w: Vec<f64>,
    /// `‖X w - y‖`, recomputed from `w` at construction.
    pub residual_norm: f64,
    pub solution_norm: f64,
    pub method: Method,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time: Duration,
    pub warnings: Vec<SolveWarning>,
}

impl LsSolution {
    pub fn new(
        x: &DenseMatrix,
        y: &[f64],
        w: Vec<f64>,
        method: Method,
        iterations: usize,
        converged: bool,
        wall_time: Duration,
    ) -> Result<Self> {
        let residual_norm = norm(&sub(&x.matvec(&w)?, y));
        let solution_norm = norm(&w);
        Ok(LsSolution {
            w,
            residual_norm,
            solution_norm,
            method,
            iterations,
            converged,
            wall_time,
            warnings: Vec::new(),
        })
    }
}

/// Anything that produces a least-squares solution of `X w ≈ y`.
pub trait LsSolver: Send + Sync {
    fn solve(&self, x: &DenseMatrix, y: &[f64]) -> Result<LsSolution>;
}
