//! Column-correlation criteria for designs: the correlation matrix, the
//! maximum correlation `rho_max`, the root average squared correlation
//! `rho_ave`, and the proportion correlation vector `delta_t`.
//!
//! Also predicts those criteria for constructed designs from their
//! ingredients, which the tests use as an independent check on the
//! constructors.

use rayon::prelude::*;
use serde::Serialize;

use crate::design::DesignMatrix;
use crate::error::{Error, Result};

/// Thresholds `t = (0.1, 0.05, 0.01, 0.005)` used throughout for `delta_t`.
pub const DEFAULT_THRESHOLDS: [f64; 4] = [0.1, 0.05, 0.01, 0.005];

const PARALLEL_MIN_COLS: usize = 64;

/// Symmetric `p x p` matrix of pairwise column correlations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    p: usize,
    values: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn dim(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    /// Off-diagonal entries of the strict upper triangle, row by row.
    pub fn upper_triangle(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.p).flat_map(move |i| (i + 1..self.p).map(move |j| self.get(i, j)))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.p).map(|i| self.row(i).to_vec()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationSummary {
    #[serde(skip)]
    pub rho: CorrelationMatrix,
    pub rho_max: f64,
    pub rho_ave: f64,
    pub thresholds: Vec<f64>,
    pub delta: Vec<f64>,
}

/// Pearson correlations between all column pairs.
pub fn correlation_matrix(x: &DesignMatrix) -> Result<CorrelationMatrix> {
    let n = x.rows();
    let p = x.cols();
    if n < 2 {
        return Err(Error::domain(format!("correlations need at least two rows, got {n}")));
    }

    let mut centered = Vec::with_capacity(p);
    let mut sums_sq = Vec::with_capacity(p);
    for (j, col) in x.columns().enumerate() {
        let mean = col.iter().sum::<f64>() / n as f64;
        let c: Vec<f64> = col.iter().map(|v| v - mean).collect();
        let ss: f64 = c.iter().map(|v| v * v).sum();
        let scale = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if ss <= (scale * 1e-12).powi(2) * n as f64 {
            return Err(Error::DegenerateColumn { column: j });
        }
        centered.push(c);
        sums_sq.push(ss);
    }

    let row_of = |i: usize| -> Vec<f64> {
        (0..p)
            .map(|j| {
                if i == j {
                    1.0
                } else {
                    let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                    (dot / (sums_sq[i] * sums_sq[j]).sqrt()).clamp(-1.0, 1.0)
                }
            })
            .collect()
    };
    let rows: Vec<Vec<f64>> = if p >= PARALLEL_MIN_COLS {
        (0..p).into_par_iter().map(row_of).collect()
    } else {
        (0..p).map(row_of).collect()
    };

    // Each (i, j) is a fixed-order dot product, so rho_ij == rho_ji exactly
    // as long as the same operand order is used; enforce it.
    let mut values = rows.concat();
    for i in 0..p {
        for j in 0..i {
            values[i * p + j] = values[j * p + i];
        }
    }
    Ok(CorrelationMatrix { p, values })
}

pub fn validate_thresholds(t: &[f64]) -> Result<()> {
    if t.is_empty() {
        return Err(Error::domain("threshold vector is empty"));
    }
    if let Some(v) = t.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::domain(format!("threshold {v} outside [0, 1]")));
    }
    if t.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::domain(format!("thresholds must be non-increasing, got {t:?}")));
    }
    Ok(())
}

/// Derives `rho_max`, `rho_ave` and `delta_t` from a correlation matrix.
pub fn summarize(rho: CorrelationMatrix, t: &[f64]) -> Result<CorrelationSummary> {
    validate_thresholds(t)?;
    let p = rho.dim();
    if p < 2 {
        return Err(Error::domain("criteria need at least two columns"));
    }
    let pairs = p * (p - 1) / 2;
    let mut rho_max = 0.0f64;
    let mut sum_sq = 0.0;
    let mut within = vec![0usize; t.len()];
    for r in rho.upper_triangle() {
        let a = r.abs();
        rho_max = rho_max.max(a);
        sum_sq += r * r;
        for (count, &tk) in within.iter_mut().zip(t) {
            if a <= tk {
                *count += 1;
            }
        }
    }
    // symmetric: each unordered pair stands for two ordered pairs
    let delta = within.iter().map(|&c| (2 * c) as f64 / (p * (p - 1)) as f64).collect();
    Ok(CorrelationSummary {
        rho,
        rho_max,
        rho_ave: (sum_sq / pairs as f64).sqrt(),
        thresholds: t.to_vec(),
        delta,
    })
}

pub fn compute_criteria(x: &DesignMatrix, t: &[f64]) -> Result<CorrelationSummary> {
    validate_thresholds(t)?;
    if x.cols() < 2 {
        return Err(Error::domain("criteria need at least two columns"));
    }
    summarize(correlation_matrix(x)?, t)
}

/// `delta_t` of the OA-construction design `M` from `delta_t(B)`, given `p` columns of
/// `B` and `f` column pairs taken from the orthogonal array.
pub fn predict_delta_lemma1(delta_b: &[f64], p: usize, f: usize) -> Result<Vec<f64>> {
    if p == 0 || f == 0 {
        return Err(Error::domain(format!("need p >= 1 and f >= 1, got p = {p}, f = {f}")));
    }
    if let Some(d) = delta_b.iter().find(|d| !(0.0..=1.0).contains(*d)) {
        return Err(Error::domain(format!("proportion {d} outside [0, 1]")));
    }
    let (p, f) = (p as f64, f as f64);
    Ok(delta_b
        .iter()
        .map(|&d| (p * (2.0 * f - 1.0) + (p - 1.0) * d) / (2.0 * p * f - 1.0))
        .collect())
}

/// Criteria predicted for a Kronecker-type construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredictedCriteria {
    pub w1: f64,
    pub w2: f64,
    pub rho_max_pred: f64,
    pub rho_ave_pred: f64,
    pub thresholds: Vec<f64>,
    pub delta_lower_bound: Vec<f64>,
    /// `rho_max_pred` and `rho_ave_pred` are exact under the construction's
    /// hypotheses; `delta_lower_bound` never is.
    pub delta_exact: bool,
}

/// `w1 = n2^2 (n1^2 - 1) / (n1^2 n2^2 - 1)`.
pub fn kronecker_w1(n1: usize, n2: usize) -> f64 {
    let (a, b) = ((n1 * n1) as f64, (n2 * n2) as f64);
    b * (a - 1.0) / (a * b - 1.0)
}

/// Predicts `rho_max`, `rho_ave` and a floor on `delta_t` for a design built
/// from the blocks `c_list` (each `n1 x m1`) and an `n2`-row outer factor.
pub fn predict_kronecker_criteria(
    c_list: &[DesignMatrix],
    n2: usize,
    t: &[f64],
) -> Result<PredictedCriteria> {
    validate_thresholds(t)?;
    let first = c_list.first().ok_or_else(|| Error::domain("need at least one block"))?;
    let (n1, m1) = (first.rows(), first.cols());
    if let Some((j, c)) = c_list.iter().enumerate().find(|(_, c)| (c.rows(), c.cols()) != (n1, m1)) {
        return Err(Error::domain(format!(
            "block {j} is {}x{}, expected {n1}x{m1}",
            c.rows(),
            c.cols()
        )));
    }
    if n2 == 0 {
        return Err(Error::domain("n2 must be positive"));
    }
    let m2 = c_list.len();
    let w1 = kronecker_w1(n1, n2);
    let w2 = (m1 as f64 - 1.0) * w1 * w1 / ((m1 * m2) as f64 - 1.0);

    let (mut rho_max, mut sum_ave_sq) = (0.0f64, 0.0);
    let mut delta_sum = vec![0.0; t.len()];
    if m1 >= 2 {
        for c in c_list {
            let s = compute_criteria(c, t)?;
            rho_max = rho_max.max(w1 * s.rho_max);
            sum_ave_sq += s.rho_ave * s.rho_ave;
            for (acc, d) in delta_sum.iter_mut().zip(&s.delta) {
                *acc += d;
            }
        }
    } else {
        // single-column blocks are trivially orthogonal
        delta_sum.iter_mut().for_each(|d| *d = m2 as f64);
    }
    let m2f = m2 as f64;
    let rho_ave_pred = if m1 * m2 >= 2 { (w2 * sum_ave_sq / m2f).sqrt() } else { 0.0 };
    Ok(PredictedCriteria {
        w1,
        w2,
        rho_max_pred: rho_max,
        rho_ave_pred,
        thresholds: t.to_vec(),
        delta_lower_bound: delta_sum.iter().map(|d| d / m2f).collect(),
        delta_exact: false,
    })
}

/// Rounds half away from zero to `places` decimals.
pub fn round_to(v: f64, places: i32) -> f64 {
    let scale = 10f64.powi(places);
    (v * scale).round() / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::centered_levels;

    fn design(cols: Vec<Vec<f64>>) -> DesignMatrix {
        DesignMatrix::from_columns(cols).unwrap()
    }

    #[test]
    fn identical_columns_correlate_perfectly() {
        let x = design(vec![vec![1.0, 2.0, 4.0], vec![1.0, 2.0, 4.0]]);
        assert_eq!(correlation_matrix(&x).unwrap().get(0, 1), 1.0);
    }

    #[test]
    fn reversed_centered_column_is_anticorrelated() {
        let col = centered_levels(7).unwrap().levels().to_vec();
        let rev: Vec<f64> = col.iter().rev().copied().collect();
        let rho = correlation_matrix(&design(vec![col, rev])).unwrap();
        assert!((rho.get(0, 1) + 1.0).abs() < 1e-15);
        assert_eq!(rho.get(0, 0), 1.0);
    }

    #[test]
    fn constant_column_is_named() {
        let x = design(vec![vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0]]);
        assert!(matches!(correlation_matrix(&x), Err(Error::DegenerateColumn { column: 1 })));
    }

    #[test]
    fn orthogonal_design_has_full_delta() {
        let x = design(vec![vec![-1.0, -1.0, 1.0, 1.0], vec![-1.0, 1.0, -1.0, 1.0]]);
        let s = compute_criteria(&x, &[0.5, 0.0]).unwrap();
        assert_eq!(s.delta, vec![1.0, 1.0]);
        assert_eq!(s.rho_max, 0.0);
        assert_eq!(s.rho_ave, 0.0);
    }

    #[test]
    fn threshold_validation() {
        let x = design(vec![vec![-1.0, 0.0, 1.0], vec![0.0, 1.0, -1.0]]);
        assert!(matches!(compute_criteria(&x, &[]), Err(Error::Domain(_))));
        assert!(compute_criteria(&x, &[0.01, 0.1]).is_err());
        assert!(compute_criteria(&x, &[1.5]).is_err());
    }

    #[test]
    fn boundary_correlation_counts_as_within() {
        // columns with correlation exactly 0.5
        let x = design(vec![vec![-1.0, 0.0, 1.0], vec![0.0, -1.0, 1.0]]);
        let s = compute_criteria(&x, &[0.5]).unwrap();
        assert!((s.rho_max - 0.5).abs() < 1e-15);
        assert_eq!(s.delta, vec![1.0]);
    }

    #[test]
    fn oa_construction_delta_prediction() {
        let got = predict_delta_lemma1(&[0.500, 0.364, 0.136, 0.136], 12, 4).unwrap();
        let want = [0.942, 0.926, 0.900, 0.900];
        for (g, w) in got.iter().zip(want) {
            assert_eq!(round_to(*g, 3), w);
        }
        assert_eq!(predict_delta_lemma1(&[1.0], 7, 3).unwrap(), vec![1.0]);
        let v = predict_delta_lemma1(&[0.0], 2, 1).unwrap();
        assert!((v[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!(predict_delta_lemma1(&[0.5], 0, 1).is_err());
        assert!(predict_delta_lemma1(&[1.5], 2, 1).is_err());
    }

    #[test]
    fn w1_for_25_by_2() {
        assert!((kronecker_w1(25, 2) - 2496.0 / 2499.0).abs() < 1e-15);
    }

    #[test]
    fn kronecker_prediction_single_block_collapses_w2() {
        let c = design(vec![vec![-1.0, 0.0, 1.0], vec![0.0, -1.0, 1.0], vec![1.0, -1.0, 0.0]]);
        let s = compute_criteria(&c, &DEFAULT_THRESHOLDS).unwrap();
        let pred = predict_kronecker_criteria(std::slice::from_ref(&c), 2, &DEFAULT_THRESHOLDS).unwrap();
        assert!((pred.rho_ave_pred - pred.w1 * s.rho_ave).abs() < 1e-14);
        assert!((pred.rho_max_pred - pred.w1 * s.rho_max).abs() < 1e-14);
        assert!(!pred.delta_exact);
    }

    #[test]
    fn kronecker_prediction_rejects_mismatched_blocks() {
        let a = design(vec![vec![-1.0, 1.0], vec![1.0, -1.0]]);
        let b = design(vec![vec![-1.0, 0.0, 1.0], vec![1.0, 0.0, -1.0]]);
        assert!(matches!(predict_kronecker_criteria(&[a, b], 2, &[0.1]), Err(Error::Domain(_))));
    }
}
