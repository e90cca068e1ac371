use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, DenseMatrix, EPS_MACHINE};
use crate::solution::{LsSolution, Method};

/// Conjugate gradients on `XᵀX w = Xᵀy` in factored (CGLS) form; the normal
/// matrix is never formed. Stops once `‖Xᵀ(y - Xw)‖ ≤ tol ‖Xᵀy‖`, or once
/// it falls to the rounding floor `m ε ‖X‖_F ‖r‖` below which the normal
/// residual cannot be computed reliably; iterating past that point on an
/// inconsistent rank-deficient system only amplifies noise.
pub fn cgls(x: &DenseMatrix, y: &[f64], tol: f64, max_iter: usize) -> Result<LsSolution> {
    if max_iter == 0 {
        return Err(Error::InvalidConfig("cgls needs max_iter >= 1".into()));
    }
    if y.len() != x.rows() {
        return Err(Error::dim("cgls", x.rows(), y.len()));
    }
    let start = Instant::now();
    let mut w = vec![0.0; x.cols()];
    let mut r = y.to_vec();
    let mut s = x.t_matvec(&r)?;
    let s0 = norm(&s);
    if s0 == 0.0 {
        return LsSolution::new(x, y, w, Method::Cgls, 0, true, start.elapsed());
    }
    let floor = x.rows() as f64 * EPS_MACHINE * x.frobenius_norm();
    let mut p = s.clone();
    let mut gamma = dot(&s, &s);
    let mut converged = false;
    let mut iterations = 0;

    for itn in 1..=max_iter {
        iterations = itn;
        let q = x.matvec(&p)?;
        let qq = dot(&q, &q);
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        axpy(alpha, &p, &mut w);
        axpy(-alpha, &q, &mut r);
        s = x.t_matvec(&r)?;
        let gamma_new = dot(&s, &s);
        if gamma_new.sqrt() <= (tol * s0).max(floor * norm(&r)) {
            converged = true;
            break;
        }
        let beta = gamma_new / gamma;
        gamma = gamma_new;
        for (pi, si) in p.iter_mut().zip(&s) {
            *pi = si + beta * *pi;
        }
    }
    LsSolution::new(x, y, w, Method::Cgls, iterations, converged, start.elapsed())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sub;
    use crate::solvers::lsqr;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn identity_in_one_iteration() {
        let s = cgls(&DenseMatrix::identity(2), &[3.0, 4.0], 1e-10, 10).unwrap();
        assert_eq!(s.iterations, 1);
        assert!(s.converged);
        assert!(norm(&sub(&s.w, &[3.0, 4.0])) < 1e-14);
    }

    #[test]
    fn diagonal_system() {
        let x = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 3.0]]).unwrap();
        let s = cgls(&x, &[2.0, 6.0], 1e-12, 10).unwrap();
        assert!(norm(&sub(&s.w, &[2.0, 2.0])) < 1e-12);
    }

    #[test]
    fn agrees_with_lsqr() {
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        for _ in 0..10 {
            let x = DenseMatrix::from_fn(50, 10, |_, _| StandardNormal.sample(&mut rng));
            let y: Vec<f64> = (0..50).map(|_| StandardNormal.sample(&mut rng)).collect();
            let a = cgls(&x, &y, 1e-10, 40).unwrap();
            let b = lsqr(&x, &y, 1e-10, 1e-10, 40).unwrap();
            assert!(a.converged);
            assert!(norm(&sub(&a.w, &b.w)) <= 1e-7 * (1.0 + norm(&b.w)));
        }
    }
}
