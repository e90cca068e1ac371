//! Dense real kernels: a column-major matrix type, inner products,
//! Gram-Schmidt co-projection, triangular and Cholesky solves, and a
//! one-sided Jacobi SVD.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Machine epsilon used for every rank tolerance in the crate.
pub const EPS_MACHINE: f64 = 2.22e-16;

/// Maximum number of Jacobi sweeps before [`jacobi_svd`] gives up.
pub const SVD_MAX_SWEEPS: usize = 50;

/// Column-major dense real matrix.
///
/// Columns are contiguous, so [`DenseMatrix::col`] is a free slice borrow.
/// A matrix may have zero columns (an empty factor) when produced by the
/// algorithms; matrices read from files or built through the checked
/// constructors always have at least one row and one column.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    /// Builds a matrix from column-major data, validating shape and finiteness.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Precondition(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::dim("from_col_major", rows * cols, data.len()));
        }
        let m = DenseMatrix { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    /// Builds a matrix from a list of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        if let Some(bad) = rows.iter().find(|r| r.as_ref().len() != ncols) {
            return Err(Error::dim("from_rows", ncols, bad.as_ref().len()));
        }
        let m = Self::from_fn(nrows, ncols, |i, j| rows[i].as_ref()[j]);
        Self::from_col_major(nrows, ncols, m.data)
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns<C: AsRef<[f64]>>(cols: &[C]) -> Result<Self> {
        let ncols = cols.len();
        let nrows = cols.first().map_or(0, |c| c.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for c in cols {
            let c = c.as_ref();
            if c.len() != nrows {
                return Err(Error::dim("from_columns", nrows, c.len()));
            }
            data.extend_from_slice(c);
        }
        Self::from_col_major(nrows, ncols, data)
    }

    /// A single-column matrix holding `v`.
    pub fn column_vector(v: &[f64]) -> Result<Self> {
        Self::from_col_major(v.len(), 1, v.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_col_major(&self) -> &[f64] {
        &self.data
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> + '_ {
        // chunks_exact panics on a zero chunk size
        let step = self.rows.max(1);
        self.data.chunks_exact(step).take(self.cols)
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[f64]) -> Result<()> {
        if v.len() != self.rows {
            return Err(Error::dim("set_col", self.rows, v.len()));
        }
        self.col_mut(j).copy_from_slice(v);
        Ok(())
    }

    /// Appends a column in place.
    pub fn push_col(&mut self, v: &[f64]) -> Result<()> {
        if v.len() != self.rows {
            return Err(Error::dim("push_col", self.rows, v.len()));
        }
        self.data.extend_from_slice(v);
        self.cols += 1;
        Ok(())
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(pos) => Err(Error::NonFinite {
                row: pos % self.rows,
                col: pos / self.rows,
            }),
            None => Ok(()),
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `self * v`.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::dim("matvec", self.cols, v.len()));
        }
        let mut out = vec![0.0; self.rows];
        for (col, &vj) in self.columns().zip(v) {
            if vj != 0.0 {
                axpy(vj, col, &mut out);
            }
        }
        Ok(out)
    }

    /// `selfᵀ * v`.
    pub fn t_matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::dim("t_matvec", self.rows, v.len()));
        }
        Ok(self.columns().map(|c| dot(c, v)).collect())
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if other.rows != self.cols {
            return Err(Error::dim("matmul", self.cols, other.rows));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for (k, &b) in other.col(j).iter().enumerate() {
                if b != 0.0 {
                    axpy(b, self.col(k), dst);
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ * self` (n×n), exactly symmetric.
    pub fn gram(&self) -> DenseMatrix {
        let n = self.cols;
        let mut g = DenseMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let v = dot(self.col(i), self.col(j));
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    /// `self * selfᵀ` (m×m), exactly symmetric.
    pub fn outer_gram(&self) -> DenseMatrix {
        let m = self.rows;
        let mut g = DenseMatrix::zeros(m, m);
        // Column j of X Xᵀ is sum_k x_k * X[j, k]; fill the lower triangle.
        for j in 0..m {
            let dst = &mut g.data[j * m..(j + 1) * m];
            for k in 0..self.cols {
                let b = self[(j, k)];
                if b != 0.0 {
                    let src = &self.col(k)[j..];
                    for (d, s) in dst[j..].iter_mut().zip(src) {
                        *d += b * s;
                    }
                }
            }
        }
        for j in 0..m {
            for i in 0..j {
                g.data[j * m + i] = g.data[i * m + j];
            }
        }
        g
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn column_norms(&self) -> Vec<f64> {
        self.columns().map(norm).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// The columns listed in `idx`, in that order.
    pub fn select_columns(&self, idx: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        DenseMatrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Euclidean inner product.
pub fn inner(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::dim("inner", u.len(), v.len()));
    }
    Ok(dot(u, v))
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Removes the component of `v` along the unit vector `u_unit`:
/// `v - <v, u> u`.
pub fn coproject(v: &[f64], u_unit: &[f64]) -> Result<Vec<f64>> {
    if v.len() != u_unit.len() {
        return Err(Error::dim("coproject", u_unit.len(), v.len()));
    }
    let nu = norm(u_unit);
    if (nu - 1.0).abs() > 1e-10 {
        return Err(Error::Precondition(format!(
            "coproject needs a unit vector, got norm {nu}"
        )));
    }
    let mut out = v.to_vec();
    coproject_in_place(&mut out, u_unit);
    Ok(out)
}

/// In-place co-projection; returns the removed coefficient `<v, u>`.
#[inline]
pub(crate) fn coproject_in_place(v: &mut [f64], u_unit: &[f64]) -> f64 {
    let c = dot(v, u_unit);
    if c != 0.0 {
        axpy(-c, u_unit, v);
    }
    c
}

/// Solves `r x = b` for upper-triangular `r`.
pub fn back_substitute(r: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = r.rows();
    if r.cols() != n {
        return Err(Error::dim("back_substitute (square)", n, r.cols()));
    }
    if b.len() != n {
        return Err(Error::dim("back_substitute", n, b.len()));
    }
    let max_diag = (0..n).fold(0.0_f64, |a, i| a.max(r[(i, i)].abs()));
    for i in 0..n {
        let d = r[(i, i)].abs();
        if d <= 1e-14 * max_diag || d == 0.0 {
            return Err(Error::SingularTriangular {
                index: i,
                value: r[(i, i)],
            });
        }
    }
    // Column-oriented: once x_j is known, subtract x_j * r[..j, j].
    let mut x = b.to_vec();
    for j in (0..n).rev() {
        x[j] /= r[(j, j)];
        let xj = x[j];
        let col = r.col(j);
        for i in 0..j {
            x[i] -= col[i] * xj;
        }
    }
    Ok(x)
}

/// Solves `a x = b` for symmetric positive-definite `a` via Cholesky.
///
/// A pivot at or below `n * EPS_MACHINE * max|a_ii|` is reported as
/// [`Error::NotPositiveDefinite`].
pub fn cholesky_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::dim("cholesky_solve (square)", n, a.cols()));
    }
    if b.len() != n {
        return Err(Error::dim("cholesky_solve", n, b.len()));
    }
    let scale = a.max_abs();
    for j in 0..n {
        for i in 0..j {
            let diff = (a[(i, j)] - a[(j, i)]).abs();
            if diff > 1e-12 * scale {
                return Err(Error::NotSymmetric {
                    row: i,
                    col: j,
                    diff,
                });
            }
        }
    }

    // Pivots this small relative to the diagonal mean the matrix is
    // numerically singular; continuing would return noise.
    let max_diag = (0..n).fold(0.0_f64, |acc, i| acc.max(a[(i, i)].abs()));
    let pivot_floor = n as f64 * EPS_MACHINE * max_diag;

    // Left-looking factorization into the lower triangle of `l`:
    // column j of L is (a[j.., j] - sum_{k<j} L[j,k] L[j.., k]) / sqrt(pivot).
    let mut l = a.clone();
    for j in 0..n {
        for k in 0..j {
            let ljk = l[(j, k)];
            if ljk != 0.0 {
                let (left, right) = l.data.split_at_mut(j * n);
                let src = &left[k * n + j..(k + 1) * n];
                let dst = &mut right[j..n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d -= ljk * s;
                }
            }
        }
        let pivot = l[(j, j)];
        if pivot <= pivot_floor || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let d = pivot.sqrt();
        for v in &mut l.col_mut(j)[j..] {
            *v /= d;
        }
    }

    // L z = b
    let mut x = b.to_vec();
    for j in 0..n {
        x[j] /= l[(j, j)];
        let xj = x[j];
        let col = l.col(j);
        for i in j + 1..n {
            x[i] -= col[i] * xj;
        }
    }
    // Lᵀ x = z
    for i in (0..n).rev() {
        let col = &l.col(i)[i + 1..];
        let s: f64 = col.iter().zip(&x[i + 1..]).map(|(a, b)| a * b).sum();
        x[i] = (x[i] - s) / l[(i, i)];
    }
    Ok(x)
}

/// Thin SVD restricted to the numerical rank: `m = u diag(sigma) vᵀ`.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    /// m×r, orthonormal columns.
    pub u: DenseMatrix,
    /// Singular values above `rank_tol`, non-increasing.
    pub sigma: Vec<f64>,
    /// n×r, orthonormal columns.
    pub v: DenseMatrix,
    pub rank_tol: f64,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    /// σ_max / σ_min over the retained singular values (1 for rank 0).
    pub fn condition(&self) -> f64 {
        match (self.sigma.first(), self.sigma.last()) {
            (Some(a), Some(b)) => a / b,
            _ => 1.0,
        }
    }

    /// `Σ_{i<k} (u_iᵀ y / σ_i) v_i`; with `k = rank` this is `X† y`.
    pub fn truncated_solve(&self, y: &[f64], k: usize) -> Result<Vec<f64>> {
        if y.len() != self.u.rows() {
            return Err(Error::dim("truncated_solve", self.u.rows(), y.len()));
        }
        let mut w = vec![0.0; self.v.rows()];
        for i in 0..k.min(self.rank()) {
            let c = dot(self.u.col(i), y) / self.sigma[i];
            axpy(c, self.v.col(i), &mut w);
        }
        Ok(w)
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let (m, n) = (self.u.rows(), self.v.rows());
        let mut out = DenseMatrix::zeros(m, n);
        for (k, &s) in self.sigma.iter().enumerate() {
            let (uk, vk) = (self.u.col(k), self.v.col(k));
            for j in 0..n {
                let c = s * vk[j];
                axpy(c, uk, out.col_mut(j));
            }
        }
        out
    }
}

/// One-sided (Hestenes) Jacobi SVD.
///
/// Flat inputs are handled through their transpose so rotations always act on
/// the shorter side. Singular values at or below
/// `max(rows, cols) * EPS_MACHINE * σ_max` are treated as zero and dropped.
pub fn jacobi_svd(m: &DenseMatrix) -> Result<SvdFactors> {
    m.check_finite()?;
    let (rows, cols) = m.shape();
    let (work, v, flipped) = if rows >= cols {
        let (w, v) = hestenes(m.clone())?;
        (w, v, false)
    } else {
        let (w, v) = hestenes(m.transpose())?;
        (w, v, true)
    };

    let mut order: Vec<(usize, f64)> = work.columns().map(norm).enumerate().collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let sigma_max = order.first().map_or(0.0, |p| p.1);
    let rank_tol = rows.max(cols) as f64 * EPS_MACHINE * sigma_max;

    let kept: Vec<(usize, f64)> = order.into_iter().filter(|&(_, s)| s > rank_tol).collect();
    let sigma: Vec<f64> = kept.iter().map(|p| p.1).collect();
    let mut left = DenseMatrix::zeros(work.rows(), 0);
    let mut right = DenseMatrix::zeros(v.rows(), 0);
    for &(j, s) in &kept {
        let col: Vec<f64> = work.col(j).iter().map(|x| x / s).collect();
        left.push_col(&col)?;
        right.push_col(v.col(j))?;
    }
    let (u, v) = if flipped { (right, left) } else { (left, right) };
    Ok(SvdFactors {
        u,
        sigma,
        v,
        rank_tol,
    })
}

/// Orthogonalizes the columns of `a` by plane rotations, accumulating them in
/// `v`. On return `a_in = a_out * vᵀ` with mutually orthogonal columns.
fn hestenes(mut a: DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let (m, n) = a.shape();
    let mut v = DenseMatrix::identity(n);
    let tol = EPS_MACHINE * (m.max(1) as f64);

    for _ in 0..SVD_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (a.col(p), a.col(q));
                    (dot(cp, cp), dot(cq, cq), dot(cp, cq))
                };
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + zeta.hypot(1.0))
                };
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                rotate_columns(&mut a, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            return Ok((a, v));
        }
    }
    Err(Error::SvdNoConvergence {
        sweeps: SVD_MAX_SWEEPS,
    })
}

fn rotate_columns(a: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    debug_assert!(p < q);
    let rows = a.rows;
    let (head, tail) = a.data.split_at_mut(q * rows);
    let cp = &mut head[p * rows..(p + 1) * rows];
    let cq = &mut tail[..rows];
    for (xp, xq) in cp.iter_mut().zip(cq.iter_mut()) {
        let (vp, vq) = (*xp, *xq);
        *xp = c * vp - s * vq;
        *xq = s * vp + c * vq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn unit(v: Vec<f64>) -> Vec<f64> {
        let n = norm(&v);
        v.into_iter().map(|x| x / n).collect()
    }

    #[test]
    fn inner_examples() {
        assert_eq!(inner(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((inner(&[0.6, 0.8], &[0.6, 0.8]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(inner(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        assert!(matches!(
            inner(&[1.0], &[1.0, 2.0]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn coproject_examples() {
        assert_eq!(coproject(&[3.0, 4.0], &[1.0, 0.0]).unwrap(), vec![0.0, 4.0]);
        assert_eq!(coproject(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(
            coproject(&[1.0, 0.0], &[2.0, 0.0]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn coproject_random_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let v: Vec<f64> = (0..9).map(|_| rng.random_range(-5.0..5.0)).collect();
            let u = unit((0..9).map(|_| rng.random_range(-1.0..1.0)).collect());
            let q = coproject(&v, &u).unwrap();
            assert!(dot(&q, &u).abs() <= 1e-12 * norm(&v));
            let expect = dot(&v, &v) - dot(&v, &u).powi(2);
            assert!((dot(&q, &q) - expect).abs() <= 1e-10 * dot(&v, &v));
        }
    }

    #[test]
    fn back_substitute_examples() {
        let i2 = DenseMatrix::identity(2);
        assert_eq!(back_substitute(&i2, &[5.0, 7.0]).unwrap(), vec![5.0, 7.0]);
        let r = DenseMatrix::from_rows(&[[2.0, 1.0], [0.0, 3.0]]).unwrap();
        assert_eq!(back_substitute(&r, &[4.0, 6.0]).unwrap(), vec![1.0, 2.0]);
        let singular = DenseMatrix::from_rows(&[[1.0, 1.0], [0.0, 1e-20]]).unwrap();
        assert!(matches!(
            back_substitute(&singular, &[1.0, 1.0]),
            Err(Error::SingularTriangular { index: 1, .. })
        ));
    }

    #[test]
    fn back_substitute_random_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..12 {
            let r = DenseMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
                std::cmp::Ordering::Less => rng.random_range(-1.0..1.0),
                std::cmp::Ordering::Equal => rng.random_range(1.0..3.0),
                std::cmp::Ordering::Greater => 0.0,
            });
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = back_substitute(&r, &b).unwrap();
            let res = sub(&r.matvec(&x).unwrap(), &b);
            assert!(norm(&res) <= 1e-10 * norm(&b));
        }
    }

    #[test]
    fn cholesky_examples() {
        let i2 = DenseMatrix::identity(2);
        assert_eq!(cholesky_solve(&i2, &[2.0, 3.0]).unwrap(), vec![2.0, 3.0]);
        let d = DenseMatrix::from_rows(&[[4.0, 0.0], [0.0, 9.0]]).unwrap();
        assert_eq!(cholesky_solve(&d, &[8.0, 27.0]).unwrap(), vec![2.0, 3.0]);
    }

    #[test]
    fn cholesky_rejects_indefinite_and_asymmetric() {
        let indef = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(
            cholesky_solve(&indef, &[1.0, 1.0]),
            Err(Error::NotPositiveDefinite { index: 1, .. })
        ));
        let asym = DenseMatrix::from_rows(&[[2.0, 1.0], [0.0, 2.0]]).unwrap();
        assert!(matches!(
            cholesky_solve(&asym, &[1.0, 1.0]),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn cholesky_random_spd_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1, 2, 5, 17, 40] {
            let m = random_matrix(&mut rng, n + 3, n);
            let mut a = m.gram();
            for i in 0..n {
                a[(i, i)] += 1.0;
            }
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = cholesky_solve(&a, &b).unwrap();
            let res = sub(&a.matvec(&x).unwrap(), &b);
            assert!(norm(&res) <= 1e-9 * norm(&b), "n={n}");
        }
    }

    fn assert_orthonormal_cols(m: &DenseMatrix, tol: f64) {
        let g = m.gram();
        for i in 0..g.rows() {
            for j in 0..g.cols() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - e).abs() <= tol, "gram[{i}][{j}] = {}", g[(i, j)]);
            }
        }
    }

    fn assert_svd_invariants(m: &DenseMatrix, f: &SvdFactors) {
        assert!(f.sigma.iter().all(|&s| s > 0.0));
        assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
        assert_orthonormal_cols(&f.u, 1e-10);
        assert_orthonormal_cols(&f.v, 1e-10);
        let rec = f.reconstruct();
        let tol = 1e-9 * f.sigma_max().max(f64::MIN_POSITIVE);
        for j in 0..m.cols() {
            for i in 0..m.rows() {
                assert!((rec[(i, j)] - m[(i, j)]).abs() <= tol);
            }
        }
    }

    #[test]
    fn svd_diagonal() {
        let d = DenseMatrix::from_rows(&[[3.0, 0.0], [0.0, 2.0]]).unwrap();
        let f = jacobi_svd(&d).unwrap();
        assert_eq!(f.sigma, vec![3.0, 2.0]);
        for k in 0..2 {
            assert_eq!(f.u[(k, k)].abs(), 1.0);
            assert_eq!(f.v[(k, k)].abs(), 1.0);
        }
        assert_svd_invariants(&d, &f);
    }

    #[test]
    fn svd_zero_matrix_has_rank_zero() {
        let z = DenseMatrix::zeros(2, 2);
        let f = jacobi_svd(&z).unwrap();
        assert_eq!(f.rank(), 0);
        assert!(f.sigma.is_empty());
    }

    #[test]
    fn svd_random_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (r, c) in [(5, 3), (3, 5), (1, 4), (4, 1), (12, 12), (40, 7)] {
            let m = random_matrix(&mut rng, r, c);
            let f = jacobi_svd(&m).unwrap();
            assert_eq!(f.rank(), r.min(c));
            assert_svd_invariants(&m, &f);
        }
    }

    #[test]
    fn svd_rank_deficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = random_matrix(&mut rng, 10, 3);
        let c = random_matrix(&mut rng, 3, 8);
        let m = b.matmul(&c).unwrap();
        let f = jacobi_svd(&m).unwrap();
        assert_eq!(f.rank(), 3);
        assert_svd_invariants(&m, &f);
    }

    #[test]
    fn outer_gram_matches_matmul() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_matrix(&mut rng, 6, 4);
        let a = x.outer_gram();
        let b = x.matmul(&x.transpose()).unwrap();
        for j in 0..6 {
            for i in 0..6 {
                assert!((a[(i, j)] - b[(i, j)]).abs() < 1e-14);
            }
        }
    }

    proptest! {
        #[test]
        fn coproject_shrinks_and_is_idempotent(
            v in prop::collection::vec(-100.0f64..100.0, 6),
            u in prop::collection::vec(-1.0f64..1.0, 6),
        ) {
            prop_assume!(norm(&u) > 1e-3);
            let u = unit(u);
            let q = coproject(&v, &u).unwrap();
            prop_assert!(norm(&q) <= norm(&v) * (1.0 + 1e-15) + 1e-300);
            let qq = coproject(&q, &u).unwrap();
            prop_assert!(norm(&sub(&qq, &q)) <= 1e-12 * norm(&v).max(f64::MIN_POSITIVE));
        }

        #[test]
        fn svd_values_invariant_under_permutation(seed in any::<u64>(), rows in 1usize..8, cols in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(&mut rng, rows, cols);
            let mut rp: Vec<usize> = (0..rows).collect();
            let mut cp: Vec<usize> = (0..cols).collect();
            rp.reverse();
            cp.rotate_left(cols / 2);
            let p = DenseMatrix::from_fn(rows, cols, |i, j| m[(rp[i], cp[j])]);
            let a = jacobi_svd(&m).unwrap();
            let b = jacobi_svd(&p).unwrap();
            prop_assert_eq!(a.rank(), b.rank());
            for (x, y) in a.sigma.iter().zip(&b.sigma) {
                prop_assert!((x - y).abs() <= 1e-9 * x);
            }
        }
    }
}
