//! Two-level designs with small column inner products.
//!
//! Columns are kept (near) balanced and improved one column at a time by
//! exchanging a `+1` entry with a `-1` entry, taking the best exchange for
//! the column, until a full sweep makes no progress. Several random starts
//! are run and the best result is kept. This is a plain in-repo heuristic
//! standing in for catalogue E(s^2)-optimal supersaturated designs.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::design::{DesignKind, DesignMatrix, SignMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_RESTARTS: usize = 10;

/// `sum_{i<j} (a_i^T a_j)^2 / (p (p - 1) / 2)` for the `+-1` coding.
pub fn e_s2(a: &SignMatrix) -> f64 {
    let p = a.cols();
    if p < 2 {
        return 0.0;
    }
    let g = a.gram();
    let mut total = 0.0;
    for i in 0..p {
        for j in i + 1..p {
            total += (g[i][j] as f64).powi(2);
        }
    }
    total / (p * (p - 1) / 2) as f64
}

fn random_balanced_column<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<i8> {
    let mut col: Vec<i8> = (0..n).map(|i| if i < n / 2 { 1 } else { -1 }).collect();
    // odd n: the extra entry takes a random sign, so column sums are +-1
    if n % 2 == 1 && rng.random::<bool>() {
        col[n - 1] = 1;
    }
    col.shuffle(rng);
    col
}

/// Sum over `k != c` of the squared inner products of column `c`.
fn column_cost(cols: &[Vec<i8>], inner: &[i64], c: usize) -> i64 {
    (0..cols.len()).filter(|&k| k != c).map(|k| inner[k] * inner[k]).sum()
}

fn descend(cols: &mut [Vec<i8>]) {
    let p = cols.len();
    let n = cols[0].len();
    let mut inner = vec![0i64; p];
    loop {
        let mut improved = false;
        for c in 0..p {
            for k in 0..p {
                inner[k] = if k == c {
                    0
                } else {
                    cols[c].iter().zip(&cols[k]).map(|(&a, &b)| i64::from(a) * i64::from(b)).sum()
                };
            }
            let current = column_cost(cols, &inner, c);
            let mut best: Option<(i64, usize, usize)> = None;
            for i in (0..n).filter(|&i| cols[c][i] == 1) {
                for j in (0..n).filter(|&j| cols[c][j] == -1) {
                    // flipping a_ci to -1 and a_cj to +1
                    let cost: i64 = (0..p)
                        .filter(|&k| k != c)
                        .map(|k| {
                            let s = inner[k] - 2 * i64::from(cols[k][i]) + 2 * i64::from(cols[k][j]);
                            s * s
                        })
                        .sum();
                    if cost < best.map_or(current, |b| b.0) {
                        best = Some((cost, i, j));
                    }
                }
            }
            if let Some((_, i, j)) = best {
                cols[c][i] = -1;
                cols[c][j] = 1;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
}

fn total_cost(cols: &[Vec<i8>]) -> i64 {
    let mut total = 0;
    for i in 0..cols.len() {
        for j in i + 1..cols.len() {
            let s: i64 = cols[i].iter().zip(&cols[j]).map(|(&a, &b)| i64::from(a) * i64::from(b)).sum();
            total += s * s;
        }
    }
    total
}

/// Near-balanced `n x p` sign matrix with small column inner products.
/// Even `n` gives column sums of zero, odd `n` column sums of `+-1`.
pub fn nearly_orthogonal_sign_matrix<R: Rng + ?Sized>(
    n: usize,
    p: usize,
    restarts: usize,
    rng: &mut R,
) -> Result<SignMatrix> {
    if n < 2 || p == 0 {
        return Err(Error::domain(format!("need n >= 2 and p >= 1, got {n}x{p}")));
    }
    if restarts == 0 {
        return Err(Error::domain("need at least one start"));
    }
    let mut best: Option<(i64, Vec<Vec<i8>>)> = None;
    for _ in 0..restarts {
        let mut cols: Vec<Vec<i8>> = (0..p).map(|_| random_balanced_column(n, rng)).collect();
        descend(&mut cols);
        let cost = total_cost(&cols);
        if best.as_ref().is_none_or(|b| cost < b.0) {
            best = Some((cost, cols));
        }
    }
    let cols = best.expect("at least one start").1;
    let rows: Vec<Vec<i8>> = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    SignMatrix::from_rows(&rows)
}

fn scale_to_design(a: &SignMatrix) -> Result<DesignMatrix> {
    let h = (a.rows() as f64 - 1.0) / 2.0;
    Ok(a.to_design().scale(h).assume_kind(DesignKind::TwoLevel))
}

/// Balanced two-level design on `+-(n-1)/2` optimized for E(s^2).
pub fn es2_supersaturated<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<DesignMatrix> {
    es2_supersaturated_with(n, p, DEFAULT_RESTARTS, rng)
}

pub fn es2_supersaturated_with<R: Rng + ?Sized>(
    n: usize,
    p: usize,
    restarts: usize,
    rng: &mut R,
) -> Result<DesignMatrix> {
    if n % 2 == 1 {
        return Err(Error::unsupported(format!(
            "balanced two-level columns need an even run size, got n = {n}"
        )));
    }
    if p < 2 {
        return Err(Error::domain(format!("need p >= 2, got {p}")));
    }
    scale_to_design(&nearly_orthogonal_sign_matrix(n, p, restarts, rng)?)
}

/// Two-level design for any `n >= 2`; odd run sizes give column sums of `+-1`
/// on the `+-1` scale because exact balance is impossible.
pub fn two_level_design<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<DesignMatrix> {
    if p < 2 {
        return Err(Error::domain(format!("need p >= 2, got {p}")));
    }
    scale_to_design(&nearly_orthogonal_sign_matrix(n, p, DEFAULT_RESTARTS, rng)?)
}
