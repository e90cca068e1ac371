use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, DenseMatrix, EPS_MACHINE};
use crate::solution::{LsSolution, Method};

/// LSQR (Golub-Kahan bidiagonalization with a running QR update), no damping.
///
/// Stops when `‖r‖ ≤ btol ‖y‖ + atol ‖X‖_F ‖w‖` (compatible systems) or
/// `‖Xᵀ r‖ ≤ atol ‖X‖_F ‖r‖` (least-squares systems). Starting from zero,
/// every iterate lies in the row space of `X`.
pub fn lsqr(x: &DenseMatrix, y: &[f64], atol: f64, btol: f64, max_iter: usize) -> Result<LsSolution> {
    lsqr_impl(x, y, atol, btol, max_iter, false)
}

/// LSQR with full reorthogonalization of both bidiagonalization bases.
///
/// Costs `O(k (m + n))` extra per iteration and `O(k (m + n))` memory, but
/// keeps the bases orthogonal so convergence is not delayed on
/// ill-conditioned or rank-deficient matrices. Terminates after at most
/// `rank(X)` effective steps.
pub fn lsqr_reorth(
    x: &DenseMatrix,
    y: &[f64],
    atol: f64,
    btol: f64,
    max_iter: usize,
) -> Result<LsSolution> {
    lsqr_impl(x, y, atol, btol, max_iter, true)
}

/// Removes the components of `v` along every (unit) vector in `basis`, twice.
fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, b);
            axpy(-c, b, v);
        }
    }
}

fn lsqr_impl(
    x: &DenseMatrix,
    y: &[f64],
    atol: f64,
    btol: f64,
    max_iter: usize,
    reorth: bool,
) -> Result<LsSolution> {
    if max_iter == 0 {
        return Err(Error::InvalidConfig("lsqr needs max_iter >= 1".into()));
    }
    if y.len() != x.rows() {
        return Err(Error::dim("lsqr", x.rows(), y.len()));
    }
    let start = Instant::now();
    let n = x.cols();
    let mut w = vec![0.0; n];

    let mut u = y.to_vec();
    let mut beta = norm(&u);
    let bnorm = beta;
    if beta > 0.0 {
        u.iter_mut().for_each(|v| *v /= beta);
    }
    let mut v = x.t_matvec(&u)?;
    let mut alpha = norm(&v);
    if alpha > 0.0 {
        v.iter_mut().for_each(|e| *e /= alpha);
    }
    if alpha * beta == 0.0 {
        // y = 0 or Xᵀy = 0: w = 0 is already a least-squares solution
        return LsSolution::new(x, y, w, Method::Lsqr, 0, true, start.elapsed());
    }

    let mut us: Vec<Vec<f64>> = Vec::new();
    let mut vs: Vec<Vec<f64>> = Vec::new();
    if reorth {
        us.push(u.clone());
        vs.push(v.clone());
    }
    let anorm = x.frobenius_norm();
    let breakdown = (x.rows().max(x.cols()) as f64) * EPS_MACHINE * anorm;
    let mut dir = v.clone();
    let mut phibar = beta;
    let mut rhobar = alpha;
    let mut converged = false;
    let mut iterations = 0;

    for itn in 1..=max_iter {
        iterations = itn;
        // u = X v - alpha u
        let xv = x.matvec(&v)?;
        for (ui, xi) in u.iter_mut().zip(&xv) {
            *ui = xi - alpha * *ui;
        }
        if reorth {
            orthogonalize(&mut u, &us);
        }
        beta = norm(&u);
        if reorth && beta <= breakdown {
            // the Krylov space is exhausted; what is left is rounding noise
            beta = 0.0;
        }
        if beta > 0.0 {
            u.iter_mut().for_each(|e| *e /= beta);
            if reorth {
                us.push(u.clone());
            }
        }
        // v = Xᵀ u - beta v
        let xtu = x.t_matvec(&u)?;
        for (vi, xi) in v.iter_mut().zip(&xtu) {
            *vi = xi - beta * *vi;
        }
        if reorth {
            orthogonalize(&mut v, &vs);
        }
        alpha = norm(&v);
        if reorth && alpha <= breakdown {
            alpha = 0.0;
        }
        if alpha > 0.0 {
            v.iter_mut().for_each(|e| *e /= alpha);
            if reorth {
                vs.push(v.clone());
            }
        }

        let rho = rhobar.hypot(beta);
        let c = rhobar / rho;
        let s = beta / rho;
        let theta = s * alpha;
        rhobar = -c * alpha;
        let phi = c * phibar;
        phibar *= s;

        axpy(phi / rho, &dir, &mut w);
        for (di, vi) in dir.iter_mut().zip(&v) {
            *di = vi - (theta / rho) * *di;
        }

        let rnorm = phibar.abs();
        let arnorm = rnorm * alpha * c.abs();
        let test1 = rnorm / bnorm;
        let rtol = btol + atol * anorm * norm(&w) / bnorm;
        if rnorm == 0.0 || test1 <= rtol || arnorm <= atol * anorm * rnorm {
            converged = true;
            break;
        }
    }
    LsSolution::new(x, y, w, Method::Lsqr, iterations, converged, start.elapsed())
}
