//! Greedy pursuit over a finite dictionary of unit vectors: the plain greedy
//! algorithm (GA) with standard remainders and the orthogonal greedy
//! algorithm (OGA / OMP) with orthogonal remainders. OGA with a
//! least-squares refit doubles as the forward-selection baseline.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{axpy, back_substitute, dot, norm, DenseMatrix};
use crate::solution::{LsSolution, Method};

/// Scores at or below `DEFAULT_SEL_TOL * ‖f‖` end an OGA run.
pub const DEFAULT_SEL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct PursuitTrace {
    /// Dictionary indices (0-based) in selection order.
    pub chosen: Vec<usize>,
    pub per_step_score: Vec<f64>,
    /// Remainder norm after each step.
    pub per_step_residual_norm: Vec<f64>,
    /// Expansion coefficient per dictionary element.
    pub coefficients: Vec<f64>,
    pub f_norm: f64,
}

impl PursuitTrace {
    pub fn steps(&self) -> usize {
        self.chosen.len()
    }

    /// Remainder norm after `k` steps; `k = 0` gives `‖f‖`. Runs that stopped
    /// early keep their last remainder.
    pub fn remainder_norm(&self, k: usize) -> f64 {
        if k == 0 {
            return self.f_norm;
        }
        self.per_step_residual_norm
            .get(k - 1)
            .or(self.per_step_residual_norm.last())
            .copied()
            .unwrap_or(self.f_norm)
    }
}

/// Unit-normalized columns of a matrix, zero columns dropped.
#[derive(Clone, Debug)]
pub struct Dictionary {
    pub atoms: DenseMatrix,
    /// Column of the source matrix each atom came from.
    pub source: Vec<usize>,
    /// Norm of that source column.
    pub scale: Vec<f64>,
}

impl Dictionary {
    pub fn from_columns(x: &DenseMatrix) -> Dictionary {
        let norms = x.column_norms();
        let cut = 1e-12 * norms.iter().fold(1.0_f64, |a, &b| a.max(b));
        let mut atoms = DenseMatrix::zeros(x.rows(), 0);
        let mut source = Vec::new();
        let mut scale = Vec::new();
        for (j, &nj) in norms.iter().enumerate() {
            if nj > cut {
                let e: Vec<f64> = x.col(j).iter().map(|v| v / nj).collect();
                atoms.push_col(&e).expect("same row count");
                source.push(j);
                scale.push(nj);
            }
        }
        Dictionary {
            atoms,
            source,
            scale,
        }
    }
}

fn check_dictionary(dict: &DenseMatrix, f: &[f64], steps: usize) -> Result<()> {
    if f.len() != dict.rows() {
        return Err(Error::dim("pursuit", dict.rows(), f.len()));
    }
    if steps == 0 {
        return Err(Error::Precondition("pursuit needs at least one step".into()));
    }
    for (q, col) in dict.columns().enumerate() {
        let nq = norm(col);
        if (nq - 1.0).abs() > 1e-10 {
            return Err(Error::Precondition(format!(
                "dictionary element {q} has norm {nq}, expected 1"
            )));
        }
    }
    Ok(())
}

/// Index of the largest `|<r, e_q>|` over admissible `q`, smallest on ties.
fn best_atom(dict: &DenseMatrix, r: &[f64], skip: &[bool]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (q, e) in dict.columns().enumerate() {
        if skip[q] {
            continue;
        }
        let c = dot(r, e);
        if best.is_none_or(|(_, b)| c.abs() > b.abs()) {
            best = Some((q, c));
        }
    }
    best
}

/// Plain greedy algorithm: `r_{n+1} = r_n - <r_n, e_{q_n}> e_{q_n}`.
/// Always runs `steps` steps; atoms may be picked more than once.
pub fn ga_decompose(dict: &DenseMatrix, f: &[f64], steps: usize) -> Result<PursuitTrace> {
    check_dictionary(dict, f, steps)?;
    let skip = vec![false; dict.cols()];
    let mut r = f.to_vec();
    let mut trace = PursuitTrace {
        chosen: Vec::with_capacity(steps),
        per_step_score: Vec::with_capacity(steps),
        per_step_residual_norm: Vec::with_capacity(steps),
        coefficients: vec![0.0; dict.cols()],
        f_norm: norm(f),
    };
    for _ in 0..steps {
        let Some((q, c)) = best_atom(dict, &r, &skip) else {
            break;
        };
        axpy(-c, dict.col(q), &mut r);
        trace.coefficients[q] += c;
        trace.chosen.push(q);
        trace.per_step_score.push(c.abs());
        trace.per_step_residual_norm.push(norm(&r));
    }
    Ok(trace)
}

/// Orthogonal greedy algorithm with the default selection tolerance.
pub fn oga_decompose(dict: &DenseMatrix, f: &[f64], steps: usize) -> Result<PursuitTrace> {
    oga_decompose_with_tol(dict, f, steps, DEFAULT_SEL_TOL)
}

/// Orthogonal greedy algorithm: picks the atom most correlated with the
/// orthogonal remainder `h_n = f - Proj_span(chosen) f`, then refits all
/// coefficients on the chosen set by least squares.
pub fn oga_decompose_with_tol(
    dict: &DenseMatrix,
    f: &[f64],
    steps: usize,
    sel_tol: f64,
) -> Result<PursuitTrace> {
    check_dictionary(dict, f, steps)?;
    let n = dict.cols();
    let f_norm = norm(f);
    let mut skip = vec![false; n];
    let mut h = f.to_vec();
    let mut basis = DenseMatrix::zeros(dict.rows(), 0);
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut trace = PursuitTrace {
        chosen: Vec::new(),
        per_step_score: Vec::new(),
        per_step_residual_norm: Vec::new(),
        coefficients: vec![0.0; n],
        f_norm,
    };

    while trace.chosen.len() < steps {
        let Some((q, c)) = best_atom(dict, &h, &skip) else {
            break;
        };
        if c.abs() <= sel_tol * f_norm {
            break;
        }
        skip[q] = true;
        // Two Gram-Schmidt passes against the chosen span.
        let mut v = dict.col(q).to_vec();
        let mut r_col = vec![0.0; basis.cols()];
        for _ in 0..2 {
            for (j, rj) in r_col.iter_mut().enumerate() {
                let uj = basis.col(j);
                let cj = dot(&v, uj);
                axpy(-cj, uj, &mut v);
                *rj += cj;
            }
        }
        let vn = norm(&v);
        if vn <= 1e-12 {
            // numerically inside the chosen span
            continue;
        }
        v.iter_mut().for_each(|x| *x /= vn);
        r_col.push(vn);
        let hc = dot(&h, &v);
        axpy(-hc, &v, &mut h);
        basis.push_col(&v)?;
        r_cols.push(r_col);
        trace.chosen.push(q);
        trace.per_step_score.push(c.abs());
        trace.per_step_residual_norm.push(norm(&h));
    }

    let k = trace.chosen.len();
    let mut r = DenseMatrix::zeros(k, k);
    for (l, col) in r_cols.iter().enumerate() {
        for (j, v) in col.iter().enumerate() {
            r[(j, l)] = *v;
        }
    }
    let proj: Vec<f64> = basis.columns().map(|u| dot(u, f)).collect();
    let coef = back_substitute(&r, &proj)?;
    for (&q, c) in trace.chosen.iter().zip(coef) {
        trace.coefficients[q] = c;
    }
    Ok(trace)
}

/// Forward selection: OGA on the normalized columns of `x` for at most
/// `max_features` steps, coefficients mapped back to the original scaling.
pub fn forward_selection(x: &DenseMatrix, y: &[f64], max_features: usize) -> Result<LsSolution> {
    let start = Instant::now();
    let dict = Dictionary::from_columns(x);
    let mut w = vec![0.0; x.cols()];
    let mut steps = 0;
    if dict.atoms.cols() > 0 && max_features > 0 {
        let trace = oga_decompose(&dict.atoms, y, max_features)?;
        steps = trace.steps();
        for (i, &c) in trace.coefficients.iter().enumerate() {
            w[dict.source[i]] = c / dict.scale[i];
        }
    }
    LsSolution::new(x, y, w, Method::Fs, steps, true, start.elapsed())
}
