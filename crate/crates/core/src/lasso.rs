//! Lasso by cyclic coordinate descent.
//!
//! The objective is `||y - X b||^2 + lambda * ||b||_1` with no `1/(2n)`
//! factor, so the soft threshold of each coordinate update is `lambda / 2`
//! and `b = 0` is optimal exactly when `lambda >= 2 max_j |x_j^T y|`.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 100_000;
pub const DEFAULT_GRID_LEN: usize = 100;
pub const DEFAULT_GRID_RATIO: f64 = 1e-4;
pub const DEFAULT_FOLDS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Stop once no coefficient moves by more than this in a sweep...
    pub tol: f64,
    /// ...and the subgradient conditions hold to within this.
    pub kkt_tol: f64,
    /// Maximum number of full sweeps.
    pub max_iter: usize,
    /// Rescale columns to unit root mean square before solving; coefficients
    /// are reported on the original scale.
    pub standardize: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, kkt_tol: 10.0 * DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER, standardize: false }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.kkt_tol > 0.0) {
            return Err(Error::domain("tolerances must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::domain("max_iter must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct LassoProblem {
    x: DesignMatrix,
    y: Vec<f64>,
    lambda: f64,
}

impl LassoProblem {
    pub fn new(x: DesignMatrix, y: Vec<f64>, lambda: f64) -> Result<Self> {
        check_response(&x, &y)?;
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::domain(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        Ok(Self { x, y, lambda })
    }

    pub fn x(&self) -> &DesignMatrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

fn check_response(x: &DesignMatrix, y: &[f64]) -> Result<()> {
    if y.len() != x.rows() {
        return Err(Error::dimension(format!("y has {} entries, X has {} rows", y.len(), x.rows())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("y has non-finite entries"));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LassoFit {
    pub beta: Vec<f64>,
    pub active_set: Vec<usize>,
    pub lambda: f64,
    pub iterations: usize,
    pub max_kkt_violation: f64,
    pub converged: bool,
}

impl LassoFit {
    pub fn l1_norm(&self) -> f64 {
        self.beta.iter().map(|b| b.abs()).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrueModel {
    pub beta: Vec<f64>,
    pub active_set: Vec<usize>,
    pub sigma: f64,
    pub p0: usize,
}

impl TrueModel {
    pub fn new(beta: Vec<f64>, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::domain("beta has non-finite entries"));
        }
        let active_set = support(&beta);
        let p0 = active_set.len();
        Ok(Self { beta, active_set, sigma, p0 })
    }

    pub fn p(&self) -> usize {
        self.beta.len()
    }
}

fn support(beta: &[f64]) -> Vec<usize> {
    beta.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, _)| j).collect()
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// `2 max_j |x_j^T y|`.
pub fn lambda_max(x: &DesignMatrix, y: &[f64]) -> Result<f64> {
    check_response(x, y)?;
    Ok(2.0 * x.columns().map(|c| dot(c, y).abs()).fold(0.0, f64::max))
}

/// `len` values log-spaced from `top` down to `ratio * top`.
pub fn lambda_grid(top: f64, len: usize, ratio: f64) -> Result<Vec<f64>> {
    if len == 0 {
        return Err(Error::domain("grid must have at least one point"));
    }
    if !(top.is_finite() && top >= 0.0 && ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::domain(format!("bad grid: top {top}, ratio {ratio}")));
    }
    if len == 1 {
        return Ok(vec![top]);
    }
    let step = ratio.ln() / (len - 1) as f64;
    Ok((0..len).map(|i| top * (step * i as f64).exp()).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest violation of the subgradient conditions at `beta`.
pub fn kkt_violation(x: &DesignMatrix, y: &[f64], beta: &[f64], lambda: f64) -> Result<f64> {
    let fitted = x.mul_vec(beta)?;
    let r: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    Ok(kkt_from_residual(x, &r, beta, lambda))
}

fn kkt_from_residual(x: &DesignMatrix, r: &[f64], beta: &[f64], lambda: f64) -> f64 {
    x.columns()
        .zip(beta)
        .map(|(c, &b)| {
            let g = 2.0 * dot(c, r);
            if b == 0.0 {
                (g.abs() - lambda).max(0.0)
            } else {
                (g - lambda * b.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

struct Prepared {
    x: DesignMatrix,
    scales: Option<Vec<f64>>,
    norms: Vec<f64>,
}

fn prepare(x: &DesignMatrix, opts: &SolverOptions) -> Result<Prepared> {
    let n = x.rows() as f64;
    let (x, scales) = if opts.standardize {
        let scales: Vec<f64> = x.columns().map(|c| (dot(c, c) / n).sqrt()).collect();
        if let Some(j) = scales.iter().position(|&s| s == 0.0) {
            return Err(Error::DegenerateColumn { column: j });
        }
        let data: Vec<f64> = x
            .columns()
            .zip(&scales)
            .flat_map(|(c, &s)| c.iter().map(move |v| v / s))
            .collect();
        (DesignMatrix::from_column_major(x.rows(), x.cols(), data)?, Some(scales))
    } else {
        (x.clone(), None)
    };
    let norms: Vec<f64> = x.columns().map(|c| dot(c, c)).collect();
    if let Some(j) = norms.iter().position(|&s| s == 0.0) {
        return Err(Error::DegenerateColumn { column: j });
    }
    Ok(Prepared { x, scales, norms })
}

fn signed_support(beta: &[f64]) -> Vec<(usize, bool)> {
    beta.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, b)| (j, *b > 0.0)).collect()
}

enum SupportSolve {
    /// The restricted solution keeps the assumed signs.
    Exact(Vec<f64>),
    /// The point on the segment towards the restricted solution where the
    /// first coefficient reaches zero; that coefficient is set to exactly zero.
    Partial(Vec<f64>),
    Singular,
}

/// Solves the stationarity equations restricted to the signed support of
/// `beta`, `X_A^T X_A b_A = X_A^T y - (lambda / 2) s_A`.
fn solve_on_support(x: &DesignMatrix, y: &[f64], half: f64, beta: &[f64], support: &[(usize, bool)]) -> SupportSolve {
    let k = support.len();
    if k == 0 || k > x.rows() {
        return SupportSolve::Singular;
    }
    let gram = DMatrix::from_fn(k, k, |a, b| dot(x.column(support[a].0), x.column(support[b].0)));
    let rhs = DVector::from_fn(k, |a, _| {
        let (j, positive) = support[a];
        dot(x.column(j), y) - if positive { half } else { -half }
    });
    let Some(chol) = gram.cholesky() else {
        return SupportSolve::Singular;
    };
    let sol = chol.solve(&rhs);
    if sol.iter().any(|b| !b.is_finite()) {
        return SupportSolve::Singular;
    }
    // first sign change along beta + t (sol - beta), t in (0, 1]
    let mut crossing: Option<(f64, usize)> = None;
    for (a, &(j, positive)) in support.iter().enumerate() {
        if sol[a] == 0.0 || (sol[a] > 0.0) != positive {
            let t = beta[j] / (beta[j] - sol[a]);
            if crossing.is_none_or(|(best, _)| t < best) {
                crossing = Some((t, j));
            }
        }
    }
    let mut out = vec![0.0; x.cols()];
    match crossing {
        None => {
            for (a, &(j, _)) in support.iter().enumerate() {
                out[j] = sol[a];
            }
            SupportSolve::Exact(out)
        }
        Some((t, zeroed)) => {
            for (a, &(j, _)) in support.iter().enumerate() {
                out[j] = beta[j] + t * (sol[a] - beta[j]);
            }
            out[zeroed] = 0.0;
            SupportSolve::Partial(out)
        }
    }
}

fn residual(x: &DesignMatrix, y: &[f64], beta: &[f64]) -> Vec<f64> {
    let fitted = x.mul_vec(beta).expect("shapes checked");
    y.iter().zip(&fitted).map(|(a, b)| a - b).collect()
}

/// Sweeps with an unchanged signed support before trying the exact solve.
const POLISH_AFTER: usize = 5;

/// Cyclic coordinate descent on a prepared matrix, updating `beta` in place.
///
/// Once the signed support has been stable for a few sweeps the
/// stationarity equations on that support are solved directly. A solution
/// that keeps the signs and satisfies the full subgradient conditions ends
/// the descent; one that flips a sign is followed only up to the first zero
/// crossing, which lowers the objective, and sweeping resumes from there.
/// On badly conditioned designs this finishes in a handful of sweeps what
/// plain sweeping would need thousands for.
fn descend(prep: &Prepared, y: &[f64], lambda: f64, opts: &SolverOptions, beta: &mut [f64]) -> (usize, f64, bool) {
    let x = &prep.x;
    let mut r = residual(x, y, beta);
    let half = lambda / 2.0;
    let mut sweeps = 0;
    let mut support = signed_support(beta);
    let (mut stable, mut polished) = (0, false);
    while sweeps < opts.max_iter {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for (j, col) in x.columns().enumerate() {
            let old = beta[j];
            let z = dot(col, &r) + prep.norms[j] * old;
            let new = soft_threshold(z, half) / prep.norms[j];
            if new != old {
                let d = new - old;
                for (ri, xi) in r.iter_mut().zip(col) {
                    *ri -= d * xi;
                }
                beta[j] = new;
                max_change = max_change.max(d.abs());
            }
        }
        if max_change < opts.tol {
            let kkt = kkt_from_residual(x, &r, beta, lambda);
            if kkt <= opts.kkt_tol {
                // sweeping stops at the tolerance; the support solve removes the remainder
                if let SupportSolve::Exact(candidate) = solve_on_support(x, y, half, beta, &signed_support(beta)) {
                    let rc = residual(x, y, &candidate);
                    let exact_kkt = kkt_from_residual(x, &rc, &candidate, lambda);
                    if exact_kkt <= kkt {
                        beta.copy_from_slice(&candidate);
                        return (sweeps, exact_kkt, true);
                    }
                }
                return (sweeps, kkt, true);
            }
        }
        let current = signed_support(beta);
        if current == support {
            stable += 1;
        } else {
            (support, stable, polished) = (current, 0, false);
        }
        if stable >= POLISH_AFTER && !polished {
            polished = true;
            match solve_on_support(x, y, half, beta, &support) {
                SupportSolve::Exact(candidate) => {
                    let rc = residual(x, y, &candidate);
                    let kkt = kkt_from_residual(x, &rc, &candidate, lambda);
                    if kkt <= opts.kkt_tol {
                        beta.copy_from_slice(&candidate);
                        return (sweeps, kkt, true);
                    }
                }
                SupportSolve::Partial(candidate) => {
                    beta.copy_from_slice(&candidate);
                    r = residual(x, y, beta);
                }
                SupportSolve::Singular => {}
            }
        }
    }
    (sweeps, kkt_from_residual(x, &r, beta, lambda), false)
}

fn finish(prep: &Prepared, mut beta: Vec<f64>, lambda: f64, (iterations, kkt, converged): (usize, f64, bool)) -> LassoFit {
    if let Some(scales) = &prep.scales {
        for (b, s) in beta.iter_mut().zip(scales) {
            *b /= s;
        }
    }
    LassoFit { active_set: support(&beta), beta, lambda, iterations, max_kkt_violation: kkt, converged }
}

/// Solves one problem from a zero start. A fit that runs out of sweeps is
/// returned with `converged == false`.
pub fn solve_lasso(prob: &LassoProblem, opts: &SolverOptions) -> Result<LassoFit> {
    opts.validate()?;
    let prep = prepare(&prob.x, opts)?;
    let mut beta = vec![0.0; prob.x.cols()];
    let stats = descend(&prep, &prob.y, prob.lambda, opts, &mut beta);
    Ok(finish(&prep, beta, prob.lambda, stats))
}

/// Fits along `grid` in the given order, warm-starting each fit from the previous one.
pub fn solve_path(x: &DesignMatrix, y: &[f64], grid: &[f64], opts: &SolverOptions) -> Result<Vec<LassoFit>> {
    opts.validate()?;
    check_response(x, y)?;
    if let Some(l) = grid.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::domain(format!("lambda must be finite and >= 0, got {l}")));
    }
    let prep = prepare(x, opts)?;
    let mut beta = vec![0.0; x.cols()];
    let mut fits = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let stats = descend(&prep, y, lambda, opts, &mut beta);
        fits.push(finish(&prep, beta.clone(), lambda, stats));
    }
    Ok(fits)
}

/// Fold label of each run: a random permutation dealt round-robin into `k` folds.
pub fn fold_assignment<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Vec<usize>> {
    if k < 2 || n < k {
        return Err(Error::domain(format!("need 2 <= k <= n, got k = {k}, n = {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut folds = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        folds[i] = pos % k;
    }
    Ok(folds)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CvResult {
    pub selected_lambda: f64,
    pub selected_index: usize,
    pub grid: Vec<f64>,
    /// Mean over folds of the held-out mean squared error, per grid point.
    pub cv_error: Vec<f64>,
    pub folds: Vec<usize>,
}

/// `k`-fold cross-validation with a random fold assignment drawn from `rng`.
pub fn cross_validate<R: Rng + ?Sized>(
    x: &DesignMatrix,
    y: &[f64],
    k: usize,
    grid: &[f64],
    opts: &SolverOptions,
    rng: &mut R,
) -> Result<CvResult> {
    let folds = fold_assignment(x.rows(), k, rng)?;
    cross_validate_with_folds(x, y, &folds, grid, opts)
}

/// Cross-validation over a given fold labelling (labels `0..k`). Picks the
/// smallest mean error; ties go to the larger `lambda`.
pub fn cross_validate_with_folds(
    x: &DesignMatrix,
    y: &[f64],
    folds: &[usize],
    grid: &[f64],
    opts: &SolverOptions,
) -> Result<CvResult> {
    check_response(x, y)?;
    if grid.is_empty() {
        return Err(Error::domain("lambda grid is empty"));
    }
    if folds.len() != x.rows() {
        return Err(Error::dimension(format!("{} fold labels for {} rows", folds.len(), x.rows())));
    }
    let k = folds.iter().max().map_or(0, |m| m + 1);
    if k < 2 || (0..k).any(|f| !folds.contains(&f)) {
        return Err(Error::domain("fold labels must cover 0..k with k >= 2"));
    }
    // fit from large to small lambda for warm starts, then map back
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[b].total_cmp(&grid[a]));
    let sorted: Vec<f64> = order.iter().map(|&i| grid[i]).collect();

    let per_fold: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|f| -> Result<Vec<f64>> {
            let train: Vec<usize> = (0..x.rows()).filter(|&i| folds[i] != f).collect();
            let test: Vec<usize> = (0..x.rows()).filter(|&i| folds[i] == f).collect();
            let xt = DesignMatrix::from_rows(&train.iter().map(|&i| x.row(i)).collect::<Vec<_>>())?;
            let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            let path = solve_path(&xt, &yt, &sorted, opts)?;
            Ok(path
                .iter()
                .map(|fit| {
                    test.iter()
                        .map(|&i| {
                            let pred: f64 = fit
                                .active_set
                                .iter()
                                .map(|&j| x.get(i, j) * fit.beta[j])
                                .sum();
                            (y[i] - pred).powi(2)
                        })
                        .sum::<f64>()
                        / test.len() as f64
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut cv_error = vec![0.0; grid.len()];
    for (pos, &gi) in order.iter().enumerate() {
        cv_error[gi] = per_fold.iter().map(|e| e[pos]).sum::<f64>() / k as f64;
    }
    let mut selected_index = 0;
    for i in 1..grid.len() {
        let (e, best) = (cv_error[i], cv_error[selected_index]);
        if e < best || (e == best && grid[i] > grid[selected_index]) {
            selected_index = i;
        }
    }
    Ok(CvResult {
        selected_lambda: grid[selected_index],
        selected_index,
        grid: grid.to_vec(),
        cv_error,
        folds: folds.to_vec(),
    })
}

/// False positives plus false negatives of the fitted support.
pub fn false_selections(fit: &LassoFit, truth: &TrueModel) -> Result<usize> {
    if fit.beta.len() != truth.p() {
        return Err(Error::dimension(format!(
            "fit has {} coefficients, truth has {}",
            fit.beta.len(),
            truth.p()
        )));
    }
    Ok(fit
        .beta
        .iter()
        .zip(&truth.beta)
        .filter(|(b, t)| (**b != 0.0) != (**t != 0.0))
        .count())
}
