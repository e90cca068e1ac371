use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, DenseMatrix};
use crate::solution::{LsSolution, Method};

/// `sign(v) * max(|v| - t, 0)`
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Smallest λ for which the LASSO solution is identically zero.
pub fn lambda_max(x: &DenseMatrix, y: &[f64]) -> Result<f64> {
    Ok(x.t_matvec(y)?.iter().fold(0.0, |a, g| a.max(g.abs())))
}

/// Largest violation of the LASSO optimality conditions at `w`:
/// `|g_j| ≤ λ` where `w_j = 0`, `g_j = λ sign(w_j)` elsewhere, with
/// `g = Xᵀ(y - Xw)`.
pub fn kkt_violation(x: &DenseMatrix, y: &[f64], w: &[f64], lambda: f64) -> Result<f64> {
    let r: Vec<f64> = x.matvec(w)?.iter().zip(y).map(|(a, b)| b - a).collect();
    let g = x.t_matvec(&r)?;
    Ok(violation(&g, w, lambda))
}

fn violation(g: &[f64], w: &[f64], lambda: f64) -> f64 {
    g.iter()
        .zip(w)
        .map(|(&gj, &wj)| {
            if wj == 0.0 {
                (gj.abs() - lambda).max(0.0)
            } else {
                (gj - lambda * wj.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Cyclic coordinate descent for `½‖Xw - y‖² + λ‖w‖₁` with exact
/// soft-threshold updates. Converged once every coordinate meets its
/// subgradient condition within `tol * ‖y‖ * max_j ‖x_j‖`.
pub fn lasso_cd(
    x: &DenseMatrix,
    y: &[f64],
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LsSolution> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "lasso lambda must be positive, got {lambda}"
        )));
    }
    if y.len() != x.rows() {
        return Err(Error::dim("lasso_cd", x.rows(), y.len()));
    }
    let col_sq: Vec<f64> = x.columns().map(|c| dot(c, c)).collect();
    if let Some(j) = col_sq.iter().position(|&s| s == 0.0) {
        return Err(Error::Precondition(format!("lasso: column {j} is zero")));
    }
    let start = Instant::now();
    let scale = {
        let s = norm(y) * col_sq.iter().fold(0.0_f64, |a, &b| a.max(b)).sqrt();
        if s > 0.0 { s } else { 1.0 }
    };

    let n = x.cols();
    let mut w = vec![0.0; n];
    let mut r = y.to_vec();
    let mut converged = false;
    let mut sweeps = 0;
    for sweep in 1..=max_iter {
        sweeps = sweep;
        for j in 0..n {
            let xj = x.col(j);
            let old = w[j];
            let rho = dot(xj, &r) + col_sq[j] * old;
            let new = soft_threshold(rho, lambda) / col_sq[j];
            if new != old {
                axpy(old - new, xj, &mut r);
                w[j] = new;
            }
        }
        let g = x.t_matvec(&r)?;
        if violation(&g, &w, lambda) <= tol * scale {
            converged = true;
            break;
        }
    }
    LsSolution::new(x, y, w, Method::Lasso, sweeps, converged, start.elapsed())
}
