//! Dense least-squares toolkit built around Matrix-POAFD, a matching-pursuit
//! solver that picks columns in order of their normalized correlation with
//! the right-hand side, plus the two-step and one-step pseudo-inverse
//! algorithms built on any least-squares solver, greedy pursuit baselines,
//! classical solvers (LSQR, CGLS, ridge, PCR, LASSO) and a benchmark harness.

pub mod bench;
pub mod error;
pub mod greedy;
pub mod io;
pub mod linalg;
pub mod pinv;
pub mod poafd;
pub mod solution;
pub mod solvers;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, SvdFactors};
pub use pinv::{InnerSolver, PinvConfig, PinvMethod, PinvResult};
pub use poafd::{PoafdModel, PoafdSolver, SolveConfig};
pub use solution::{LsSolution, LsSolver, Method};
