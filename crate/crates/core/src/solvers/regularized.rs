use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, jacobi_svd, DenseMatrix, SvdFactors};
use crate::solution::{LsSolution, Method, SolveWarning};

/// Ridge regression: `(XᵀX + λI) w = Xᵀy` by Cholesky.
///
/// For `λ > 0` on wide matrices the equivalent `w = Xᵀ (XXᵀ + λI)⁻¹ y` is
/// used, which factors an m×m instead of an n×n matrix.
pub fn ridge(x: &DenseMatrix, y: &[f64], lambda: f64) -> Result<LsSolution> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "ridge lambda must be finite and >= 0, got {lambda}"
        )));
    }
    if y.len() != x.rows() {
        return Err(Error::dim("ridge", x.rows(), y.len()));
    }
    let start = Instant::now();
    let w = if lambda > 0.0 && x.cols() > x.rows() {
        let mut g = x.outer_gram();
        for i in 0..g.rows() {
            g[(i, i)] += lambda;
        }
        x.t_matvec(&cholesky_solve(&g, y)?)?
    } else {
        let mut g = x.gram();
        for i in 0..g.rows() {
            g[(i, i)] += lambda;
        }
        cholesky_solve(&g, &x.t_matvec(y)?)?
    };
    LsSolution::new(x, y, w, Method::Ridge, 1, true, start.elapsed())
}

/// Principal component regression on the top `k` singular directions.
pub fn pcr(x: &DenseMatrix, y: &[f64], k: usize) -> Result<LsSolution> {
    let start = Instant::now();
    let svd = jacobi_svd(x)?;
    let mut sol = pcr_with_svd(x, &svd, y, k)?;
    sol.wall_time = start.elapsed();
    Ok(sol)
}

/// [`pcr`] with a precomputed SVD of `x`.
pub fn pcr_with_svd(x: &DenseMatrix, svd: &SvdFactors, y: &[f64], k: usize) -> Result<LsSolution> {
    if y.len() != x.rows() {
        return Err(Error::dim("pcr", x.rows(), y.len()));
    }
    let start = Instant::now();
    let rank = svd.rank();
    let used = k.min(rank);
    let w = svd.truncated_solve(y, used)?;
    let mut sol = LsSolution::new(x, y, w, Method::Pcr, used, true, start.elapsed())?;
    if k > rank {
        sol.warnings.push(SolveWarning::RankClamped { requested: k, rank });
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm, sub};
    use crate::solvers::lsqr;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random(rng: &mut ChaCha8Rng, m: usize, n: usize) -> (DenseMatrix, Vec<f64>) {
        let x = DenseMatrix::from_fn(m, n, |_, _| StandardNormal.sample(rng));
        let y = (0..m).map(|_| StandardNormal.sample(rng)).collect();
        (x, y)
    }

    #[test]
    fn ridge_examples() {
        let i2 = DenseMatrix::identity(2);
        let w = ridge(&i2, &[2.0, 2.0], 1.0).unwrap().w;
        assert!(norm(&sub(&w, &[1.0, 1.0])) < 1e-15);
        assert_eq!(ridge(&i2, &[2.0, 2.0], 0.0).unwrap().w, vec![2.0, 2.0]);
        assert!(ridge(&i2, &[2.0, 2.0], -1.0).is_err());
    }

    #[test]
    fn ridge_singular_without_penalty_fails() {
        let x = DenseMatrix::from_columns(&[[1.0, 0.0], [1.0, 0.0]]).unwrap();
        assert!(matches!(
            ridge(&x, &[2.0, 0.0], 0.0),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(ridge(&x, &[2.0, 0.0], 0.1).is_ok());
    }

    #[test]
    fn ridge_zero_lambda_matches_lsqr() {
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        let (x, y) = random(&mut rng, 30, 5);
        let a = ridge(&x, &y, 0.0).unwrap();
        let b = lsqr(&x, &y, 1e-10, 1e-10, 20).unwrap();
        assert!(norm(&sub(&a.w, &b.w)) <= 1e-8 * (1.0 + norm(&b.w)));
    }

    #[test]
    fn ridge_normal_residual_both_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for (m, n) in [(20, 6), (6, 20)] {
            let (x, y) = random(&mut rng, m, n);
            let lambda = 0.3;
            let s = ridge(&x, &y, lambda).unwrap();
            let mut lhs = x.gram().matvec(&s.w).unwrap();
            for (l, w) in lhs.iter_mut().zip(&s.w) {
                *l += lambda * w;
            }
            let rhs = x.t_matvec(&y).unwrap();
            assert!(norm(&sub(&lhs, &rhs)) <= 1e-9 * (1.0 + norm(&rhs)));
        }
    }

    #[test]
    fn ridge_norm_shrinks_with_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let (x, y) = random(&mut rng, 25, 8);
        let norms: Vec<f64> = [0.0, 0.01, 0.1, 1.0, 10.0, 100.0]
            .iter()
            .map(|&l| ridge(&x, &y, l).unwrap().solution_norm)
            .collect();
        assert!(norms.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn pcr_examples() {
        let x = DenseMatrix::from_rows(&[[3.0, 0.0], [0.0, 1.0]]).unwrap();
        let s = pcr(&x, &[3.0, 1.0], 0).unwrap();
        assert_eq!(s.w, vec![0.0, 0.0]);
        assert!((s.residual_norm - 10f64.sqrt()).abs() < 1e-15);
        let s = pcr(&x, &[3.0, 1.0], 1).unwrap();
        assert!(norm(&sub(&s.w, &[1.0, 0.0])) < 1e-15);
        let s = pcr(&x, &[3.0, 1.0], 5).unwrap();
        assert_eq!(
            s.warnings,
            vec![SolveWarning::RankClamped { requested: 5, rank: 2 }]
        );
    }

    #[test]
    fn pcr_full_rank_matches_pseudo_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let (x, y) = random(&mut rng, 40, 8);
        let s = pcr(&x, &y, 8).unwrap();
        let w = lsqr(&x, &y, 1e-12, 1e-12, 40).unwrap().w;
        assert!(norm(&sub(&s.w, &w)) <= 1e-9 * (1.0 + norm(&w)));
    }
}
