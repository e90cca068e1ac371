//! Matrix pre-orthogonal matching pursuit (Matrix-POAFD).
//!
//! Each step picks the column of the current induced matrix with the largest
//! normalized correlation `|<y, x_k / ‖x_k‖>|`, turns it into the next
//! orthonormal direction `u_l`, and co-projects every remaining column
//! against `u_l`. The process stops once every surviving column is
//! numerically zero or orthogonal to `y`. Because the induced columns are
//! kept in their original order, the selected columns `X̃` satisfy
//! `X̃ = U R` with `R` the modified Gram-Schmidt factor, and the
//! least-squares coefficients follow from `R w̃ = a` where `a_l = <y, u_l>`.
//!
//! The dictionary is finite, so the maximum in each selection is always
//! attained; no boundary condition is needed.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{axpy, back_substitute, dot, norm, DenseMatrix, EPS_MACHINE};
use crate::solution::{LsSolution, LsSolver, Method};

/// Rounding-noise multiplier for deciding that two scores are tied.
const TIE_FACTOR: f64 = 8.0;

/// How ties between equally scored columns are resolved.
///
/// Scores within rounding noise of the best count as tied. Among tied
/// columns the one that lost the least norm to co-projection wins (its
/// direction is the most accurate); `SmallestIndex` settles what remains.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TieBreak {
    #[default]
    SmallestIndex,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveConfig {
    /// A co-projected column is zero when its norm is at most
    /// `zero_col_tol * max(1, original column norm)`.
    pub zero_col_tol: f64,
    /// A column is orthogonal to `y` when its score is at most `sel_tol * ‖y‖`.
    pub sel_tol: f64,
    /// Cap on the number of selections; `None` means the column count.
    pub max_select: Option<usize>,
    pub tie_break: TieBreak,
    /// Re-run the co-projection of a freshly selected column when it lost
    /// more than half of its squared norm.
    pub reorth: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            zero_col_tol: 1e-12,
            sel_tol: 1e-12,
            max_select: None,
            tie_break: TieBreak::SmallestIndex,
            reorth: true,
        }
    }
}

impl SolveConfig {
    pub fn with_max_select(mut self, k: usize) -> Self {
        self.max_select = Some(k);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zero_col_tol > 0.0) || !(self.sel_tol > 0.0) {
            return Err(Error::InvalidConfig(
                "POAFD tolerances must be positive".into(),
            ));
        }
        if self.max_select == Some(0) {
            return Err(Error::InvalidConfig("max_select must be at least 1".into()));
        }
        Ok(())
    }
}

/// A chosen column (0-based) and its normalized correlation with `y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub score: f64,
}

/// Result of a POAFD run.
#[derive(Clone, Debug, PartialEq)]
pub struct PoafdModel {
    /// Selected column indices in selection order (0-based).
    pub selected: Vec<usize>,
    /// m×L, orthonormal columns.
    pub u: DenseMatrix,
    /// L×L upper triangular with `X[:, selected] = u * r`.
    pub r: DenseMatrix,
    /// `a_l = <y, u_l>`.
    pub a: Vec<f64>,
    pub y_norm: f64,
    /// Score of each selection at the time it was made.
    pub scores: Vec<f64>,
}

impl PoafdModel {
    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    /// `‖y‖² - Σ a_l²`, the squared least-squares residual.
    pub fn residual_energy(&self) -> f64 {
        self.y_norm * self.y_norm - self.a.iter().map(|a| a * a).sum::<f64>()
    }

    /// `Σ_{j<l} a_j²` for `l = 0..=L`; non-decreasing.
    pub fn partial_energies(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = vec![0.0];
        for a in &self.a {
            acc += a * a;
            out.push(acc);
        }
        out
    }
}

fn pick(
    norms: &[f64],
    ycorr: &[f64],
    orig: &[f64],
    scale: &[f64],
    excluded: &[bool],
    y_norm: f64,
    cfg: &SolveConfig,
) -> Option<Selection> {
    let floor = cfg.sel_tol * y_norm;
    let admissible = |k: usize| !excluded[k] && norms[k] > cfg.zero_col_tol * scale[k];
    let score = |k: usize| ycorr[k].abs() / norms[k];
    // A projected column carries absolute rounding error ~eps*|x_k| from its
    // original norm, so its score is only known to ~eps*|x_k|/|x_k^(l)|*|y|.
    let noise = |k: usize| TIE_FACTOR * EPS_MACHINE * orig[k] / norms[k] * y_norm;
    let mut best: Option<usize> = None;
    for k in (0..norms.len()).filter(|&k| admissible(k)) {
        if score(k) > floor && best.is_none_or(|b| score(k) > score(b)) {
            best = Some(k);
        }
    }
    let top = best?;
    // Scores indistinguishable from the maximum are ties; prefer the least
    // cancelled column, whose direction is accurate, then the smallest index.
    let kept = |k: usize| norms[k] / orig[k];
    let mut choice = top;
    for k in (0..norms.len()).filter(|&k| admissible(k) && k != top) {
        let tied = score(k) > floor && score(k) >= score(top) - noise(k) - noise(top);
        if tied && (kept(k) > kept(choice) || (kept(k) == kept(choice) && k < choice)) {
            choice = k;
        }
    }
    Some(Selection { index: choice, score: score(choice) })
}

/// Scores every admissible column of `x_cur` against `y` and returns the
/// best one, or `None` when every candidate is zero or orthogonal to `y`.
///
/// `column_scale[k]` is the norm of column `k` before any co-projection; a
/// column is zero when its current norm is at most
/// `zero_col_tol * max(1, column_scale[k])`.
pub fn select_column(
    x_cur: &DenseMatrix,
    y: &[f64],
    cfg: &SolveConfig,
    column_scale: &[f64],
    excluded: &[bool],
) -> Result<Option<Selection>> {
    let n = x_cur.cols();
    if y.len() != x_cur.rows() {
        return Err(Error::dim("select_column", x_cur.rows(), y.len()));
    }
    if column_scale.len() != n {
        return Err(Error::dim("select_column (scales)", n, column_scale.len()));
    }
    if excluded.len() != n {
        return Err(Error::dim("select_column (excluded)", n, excluded.len()));
    }
    let norms = x_cur.column_norms();
    let ycorr: Vec<f64> = x_cur.columns().map(|c| dot(c, y)).collect();
    let scale: Vec<f64> = column_scale.iter().map(|s| s.max(1.0)).collect();
    Ok(pick(&norms, &ycorr, column_scale, &scale, excluded, norm(y), cfg))
}

/// Step-by-step POAFD state; [`poafd_iterate`] drives it to termination.
pub struct Pursuit<'a> {
    y: &'a [f64],
    cfg: SolveConfig,
    y_norm: f64,
    /// The induced matrix X^(l).
    work: DenseMatrix,
    scale: Vec<f64>,
    orig: Vec<f64>,
    norms: Vec<f64>,
    ycorr: Vec<f64>,
    /// Selected or flagged zero; never touched again.
    retired: Vec<bool>,
    /// coef[j][k] = <x_k^(j), u_j>
    coef: Vec<Vec<f64>>,
    u: DenseMatrix,
    r_cols: Vec<Vec<f64>>,
    selected: Vec<usize>,
    scores: Vec<f64>,
    a: Vec<f64>,
    limit: usize,
    done: bool,
}

impl<'a> Pursuit<'a> {
    pub fn new(x: &DenseMatrix, y: &'a [f64], cfg: &SolveConfig) -> Result<Self> {
        cfg.validate()?;
        if y.len() != x.rows() {
            return Err(Error::dim("poafd", x.rows(), y.len()));
        }
        let n = x.cols();
        let norms = x.column_norms();
        let scale: Vec<f64> = norms.iter().map(|s| s.max(1.0)).collect();
        let orig = norms.clone();
        let ycorr = x.columns().map(|c| dot(c, y)).collect();
        let retired = (0..n)
            .map(|k| norms[k] <= cfg.zero_col_tol * scale[k])
            .collect();
        Ok(Pursuit {
            y,
            cfg: cfg.clone(),
            y_norm: norm(y),
            work: x.clone(),
            scale,
            orig,
            norms,
            ycorr,
            retired,
            coef: Vec::new(),
            u: DenseMatrix::zeros(x.rows(), 0),
            r_cols: Vec::new(),
            selected: Vec::new(),
            scores: Vec::new(),
            a: Vec::new(),
            limit: cfg.max_select.unwrap_or(n).min(n),
            done: false,
        })
    }

    /// The current induced matrix X^(l+1).
    pub fn induced(&self) -> &DenseMatrix {
        &self.work
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    /// Orthogonal remainder `y - Σ a_l u_l`.
    pub fn residual(&self) -> Vec<f64> {
        let mut h = self.y.to_vec();
        for (l, &al) in self.a.iter().enumerate() {
            axpy(-al, self.u.col(l), &mut h);
        }
        h
    }

    /// Columns still eligible for selection.
    pub fn surviving(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.retired.len()).filter(|&k| !self.retired[k])
    }

    /// Performs one selection; `None` once the process has stopped.
    pub fn step(&mut self) -> Option<Selection> {
        if self.done || self.selected.len() >= self.limit {
            self.done = true;
            return None;
        }
        loop {
            let Some(sel) = pick(
                &self.norms,
                &self.ycorr,
                &self.orig,
                &self.scale,
                &self.retired,
                self.y_norm,
                &self.cfg,
            ) else {
                self.done = true;
                return None;
            };
            if self.accept(sel) {
                return Some(sel);
            }
        }
    }

    /// Turns the selected column into the next direction. Returns false if
    /// reorthogonalization revealed the column to be numerically zero.
    fn accept(&mut self, sel: Selection) -> bool {
        let k = sel.index;
        let l = self.selected.len();
        let mut v = self.work.col(k).to_vec();
        let mut r_col: Vec<f64> = self.coef.iter().map(|c| c[k]).collect();
        let mut vnorm = self.norms[k];

        if self.cfg.reorth && l > 0 && vnorm * vnorm < 0.5 * self.orig[k] * self.orig[k] {
            for (j, rj) in r_col.iter_mut().enumerate() {
                let uj = self.u.col(j);
                let c = dot(&v, uj);
                axpy(-c, uj, &mut v);
                *rj += c;
            }
            vnorm = norm(&v);
            if vnorm <= self.cfg.zero_col_tol * self.scale[k] {
                self.retired[k] = true;
                return false;
            }
        }

        let u_l: Vec<f64> = v.iter().map(|x| x / vnorm).collect();
        r_col.push(vnorm);
        self.retired[k] = true;
        self.a.push(dot(self.y, &u_l));
        self.selected.push(k);
        self.scores.push(sel.score);
        self.r_cols.push(r_col);

        // Co-project the induced matrix: X^(l+1) = Q_{u_l}(X^(l)).
        let mut coef_l = vec![0.0; self.work.cols()];
        coef_l[k] = vnorm;
        for j in 0..self.work.cols() {
            if self.retired[j] {
                continue;
            }
            let col = self.work.col_mut(j);
            let c = dot(col, &u_l);
            axpy(-c, &u_l, col);
            coef_l[j] = c;
            let nj = norm(col);
            self.norms[j] = nj;
            self.ycorr[j] = dot(col, self.y);
            if nj <= self.cfg.zero_col_tol * self.scale[j] {
                self.retired[j] = true;
            }
        }
        self.coef.push(coef_l);
        self.u
            .push_col(&u_l)
            .expect("direction length equals row count");
        true
    }

    pub fn finish(self) -> PoafdModel {
        let big_l = self.selected.len();
        let mut r = DenseMatrix::zeros(big_l, big_l);
        for (l, col) in self.r_cols.iter().enumerate() {
            for (j, v) in col.iter().enumerate() {
                r[(j, l)] = *v;
            }
        }
        PoafdModel {
            selected: self.selected,
            u: self.u,
            r,
            a: self.a,
            y_norm: self.y_norm,
            scores: self.scores,
        }
    }
}

/// Runs Matrix-POAFD on `(x, y)` until termination or `max_select`.
pub fn poafd_iterate(x: &DenseMatrix, y: &[f64], cfg: &SolveConfig) -> Result<PoafdModel> {
    let mut p = Pursuit::new(x, y, cfg)?;
    while p.step().is_some() {}
    Ok(p.finish())
}

/// Expands a model into a length-`n` solution: zeros outside the selected
/// columns, `R⁻¹ a` on them.
pub fn assemble_solution(model: &PoafdModel, n: usize) -> Result<Vec<f64>> {
    if let Some(&k) = model.selected.iter().max() {
        if k >= n {
            return Err(Error::Precondition(format!(
                "selected column {k} outside a {n}-column solution"
            )));
        }
    }
    let w_sel = back_substitute(&model.r, &model.a)?;
    let mut w = vec![0.0; n];
    for (&k, v) in model.selected.iter().zip(w_sel) {
        w[k] = v;
    }
    Ok(w)
}

/// POAFD least-squares solve returning the model alongside the solution.
pub fn solve_ls_with_model(
    x: &DenseMatrix,
    y: &[f64],
    cfg: &SolveConfig,
) -> Result<(LsSolution, PoafdModel)> {
    let start = Instant::now();
    let model = poafd_iterate(x, y, cfg)?;
    let w = assemble_solution(&model, x.cols())?;
    let elapsed = start.elapsed();
    let sol = LsSolution::new(x, y, w, Method::Poafd, model.len(), true, elapsed)?;
    Ok((sol, model))
}

pub fn solve_ls(x: &DenseMatrix, y: &[f64], cfg: &SolveConfig) -> Result<LsSolution> {
    solve_ls_with_model(x, y, cfg).map(|(s, _)| s)
}

/// [`LsSolver`] handle for POAFD.
#[derive(Clone, Debug, Default)]
pub struct PoafdSolver(pub SolveConfig);

impl LsSolver for PoafdSolver {
    fn solve(&self, x: &DenseMatrix, y: &[f64]) -> Result<LsSolution> {
        solve_ls(x, y, &self.0)
    }
}
