//! Design matrices, level systems, orthogonal arrays and sign matrices,
//! together with the structural checks every construction relies on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{self, GaloisField};

/// Absolute tolerance for matching a design entry against a level.
pub const LEVEL_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignKind {
    LatinHypercube,
    TwoLevel,
    IidSample,
    Generic,
}

/// An `n x p` real matrix stored column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    kind: DesignKind,
}

impl DesignMatrix {
    /// Builds a generic design from column-major data.
    pub fn from_column_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::domain(format!("design must be non-empty, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::dimension(format!(
                "{} values cannot fill a {rows}x{cols} design",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite entry at row {}, column {}",
                pos % rows,
                pos / rows
            )));
        }
        Ok(Self { rows, cols, data, kind: DesignKind::Generic })
    }

    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if let Some(bad) = columns.iter().position(|c| c.len() != rows) {
            return Err(Error::dimension(format!(
                "column {bad} has {} rows, expected {rows}",
                columns[bad].len()
            )));
        }
        Self::from_column_major(rows, cols, columns.into_iter().flatten().collect())
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::dimension(format!(
                "row {bad} has {} entries, expected {p}",
                rows[bad].len()
            )));
        }
        let mut data = Vec::with_capacity(n * p);
        for j in 0..p {
            data.extend(rows.iter().map(|r| r[j]));
        }
        Self::from_column_major(n, p, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn kind(&self) -> DesignKind {
        self.kind
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.rows + row]
    }

    #[inline]
    pub fn column(&self, col: usize) -> &[f64] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.rows)
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self.get(row, j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    pub fn as_column_major(&self) -> &[f64] {
        &self.data
    }

    /// Tags the design with `kind` after verifying the kind's invariant.
    pub fn with_kind(mut self, kind: DesignKind) -> Result<Self> {
        match kind {
            DesignKind::LatinHypercube => {
                let report = is_latin_hypercube(&self);
                if !report.latin_hypercube {
                    return Err(Error::RejectedInput(report.reason.unwrap_or_default()));
                }
            }
            DesignKind::TwoLevel => {
                let half = (self.rows as f64 - 1.0) / 2.0;
                if let Some(v) = self
                    .data
                    .iter()
                    .find(|v| ((*v).abs() - half).abs() > LEVEL_TOLERANCE)
                {
                    return Err(Error::RejectedInput(format!(
                        "two-level entries must be +/-{half}, found {v}"
                    )));
                }
            }
            DesignKind::IidSample | DesignKind::Generic => {}
        }
        self.kind = kind;
        Ok(self)
    }

    /// Sets the kind without checking. Callers must have established the invariant.
    pub(crate) fn assume_kind(mut self, kind: DesignKind) -> Self {
        self.kind = kind;
        self
    }

    /// Returns the design with rows reordered so that new row `i` is old row `perm[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.rows)?;
        let mut data = Vec::with_capacity(self.data.len());
        for col in self.columns() {
            data.extend(perm.iter().map(|&i| col[i]));
        }
        Ok(Self { data, ..*self })
    }

    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.cols) {
            return Err(Error::dimension(format!("column {bad} out of range 0..{}", self.cols)));
        }
        let data = cols.iter().flat_map(|&c| self.column(c).iter().copied()).collect();
        Ok(Self { rows: self.rows, cols: cols.len(), data, kind: self.kind })
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            data: self.data.iter().map(|v| v * factor).collect(),
            kind: DesignKind::Generic,
            ..*self
        }
    }

    /// Computes `X * beta`.
    pub fn mul_vec(&self, beta: &[f64]) -> Result<Vec<f64>> {
        if beta.len() != self.cols {
            return Err(Error::dimension(format!(
                "coefficient vector has length {}, design has {} columns",
                beta.len(),
                self.cols
            )));
        }
        let mut out = vec![0.0; self.rows];
        for (col, &b) in self.columns().zip(beta) {
            if b != 0.0 {
                for (o, x) in out.iter_mut().zip(col) {
                    *o += x * b;
                }
            }
        }
        Ok(out)
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::dimension(format!("permutation of length {} for {n} rows", perm.len())));
    }
    let mut seen = vec![false; n];
    for &i in perm {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::domain(format!("{perm:?} is not a permutation of 0..{n}")));
        }
    }
    Ok(())
}

/// The `n` centered levels a Latin hypercube column permutes.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSet {
    levels: Vec<f64>,
}

impl LevelSet {
    pub fn n(&self) -> usize {
        self.levels.len()
    }

    /// Levels in increasing order.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }
}

/// `{-(n-1)/2, ..., (n-1)/2}` in unit steps; half-integers when `n` is even.
pub fn centered_levels(n: usize) -> Result<LevelSet> {
    if n == 0 {
        return Err(Error::domain("a level set needs at least one level"));
    }
    let mid = (n as f64 - 1.0) / 2.0;
    Ok(LevelSet { levels: (0..n).map(|i| i as f64 - mid).collect() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LhReport {
    pub latin_hypercube: bool,
    /// First column that is not a permutation of the centered levels.
    pub column: Option<usize>,
    /// An offending value in that column.
    pub value: Option<f64>,
    pub reason: Option<String>,
}

/// Checks that every column is a permutation of `centered_levels(n)`.
pub fn is_latin_hypercube(x: &DesignMatrix) -> LhReport {
    let levels = centered_levels(x.rows()).expect("designs are non-empty");
    for (j, col) in x.columns().enumerate() {
        let mut sorted = col.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mismatch = sorted
            .iter()
            .zip(levels.levels())
            .find(|(v, l)| (*v - *l).abs() > LEVEL_TOLERANCE);
        if let Some((&v, &l)) = mismatch {
            return LhReport {
                latin_hypercube: false,
                column: Some(j),
                value: Some(v),
                reason: Some(format!(
                    "column {j} is not a permutation of the {} centered levels: found {v} where level {l} was expected",
                    x.rows()
                )),
            };
        }
    }
    LhReport { latin_hypercube: true, column: None, value: None, reason: None }
}

/// An `n x k` array over symbols `1..=s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrthogonalArray {
    runs: usize,
    cols: usize,
    symbols: u32,
    strength: u32,
    data: Vec<u32>,
}

impl OrthogonalArray {
    /// Wraps row-major symbol data. Strength is not verified here; see [`check_oa_strength2`].
    pub fn from_rows(symbols: u32, rows: &[Vec<u32>]) -> Result<Self> {
        let runs = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if runs == 0 || cols == 0 {
            return Err(Error::domain("orthogonal array must be non-empty"));
        }
        if symbols < 2 {
            return Err(Error::domain(format!("need at least two symbols, got {symbols}")));
        }
        let mut data = vec![0; runs * cols];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::dimension(format!("row {i} has {} entries, expected {cols}", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                if !(1..=symbols).contains(&v) {
                    return Err(Error::domain(format!("symbol {v} at ({i},{j}) outside 1..={symbols}")));
                }
                data[j * runs + i] = v;
            }
        }
        Ok(Self { runs, cols, symbols, strength: 2, data })
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn symbols(&self) -> u32 {
        self.symbols
    }

    pub fn strength(&self) -> u32 {
        self.strength
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.data[col * self.runs + row]
    }

    pub fn column(&self, col: usize) -> &[u32] {
        &self.data[col * self.runs..(col + 1) * self.runs]
    }

    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        (0..self.runs).map(|i| (0..self.cols).map(|j| self.get(i, j)).collect()).collect()
    }

    /// Keeps only the first `k` columns.
    pub fn truncate_columns(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.cols {
            return Err(Error::dimension(format!("cannot keep {k} of {} columns", self.cols)));
        }
        Ok(Self { cols: k, data: self.data[..k * self.runs].to_vec(), ..*self })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OaReport {
    pub strength_two: bool,
    /// `n / s^2` when it is an integer.
    pub index: Option<usize>,
    pub reason: Option<String>,
}

/// Verifies that every ordered symbol pair occurs `n / s^2` times in every column pair.
pub fn check_oa_strength2(a: &OrthogonalArray) -> OaReport {
    let s = a.symbols() as usize;
    let n = a.runs();
    if n % (s * s) != 0 {
        return OaReport {
            strength_two: false,
            index: None,
            reason: Some(format!("{n} runs is not a multiple of s^2 = {}", s * s)),
        };
    }
    let index = n / (s * s);
    let mut counts = vec![0usize; s * s];
    for c1 in 0..a.cols() {
        for c2 in c1 + 1..a.cols() {
            counts.iter_mut().for_each(|c| *c = 0);
            for (&u, &v) in a.column(c1).iter().zip(a.column(c2)) {
                counts[(u as usize - 1) * s + (v as usize - 1)] += 1;
            }
            if let Some(pos) = counts.iter().position(|&c| c != index) {
                return OaReport {
                    strength_two: false,
                    index: Some(index),
                    reason: Some(format!(
                        "columns {c1} and {c2}: pair ({}, {}) occurs {} times, expected {index}",
                        pos / s + 1,
                        pos % s + 1,
                        counts[pos]
                    )),
                };
            }
        }
    }
    OaReport { strength_two: true, index: Some(index), reason: None }
}

/// The Rao-Hamming OA(s^2, s+1, s) of strength two.
///
/// Rows are indexed by `(u, v)` in GF(s)^2 with row number `u*s + v`; the
/// columns are `u`, `v`, and `u + alpha*v` for each nonzero field element
/// `alpha`. Field element `e` is written as symbol `e + 1`. `s` must be a
/// prime power.
pub fn rao_hamming_oa(s: u32) -> Result<OrthogonalArray> {
    if gf::prime_power(s).is_none() {
        return Err(Error::unsupported(format!(
            "orthogonal arrays are built for prime-power symbol counts only, got {s}"
        )));
    }
    let field = GaloisField::new(s)?;
    let rows: Vec<Vec<u32>> = (0..s)
        .flat_map(|u| (0..s).map(move |v| (u, v)))
        .map(|(u, v)| {
            let mut row = Vec::with_capacity(s as usize + 1);
            row.push(u);
            row.push(v);
            row.extend((1..s).map(|alpha| field.add(u, field.mul(alpha, v))));
            row.into_iter().map(|e| e + 1).collect()
        })
        .collect();
    OrthogonalArray::from_rows(s, &rows)
}

/// A matrix with entries in {-1, +1}, stored column-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i8>,
}

impl SignMatrix {
    pub fn from_rows(rows: &[Vec<i8>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if n == 0 || p == 0 {
            return Err(Error::domain("sign matrix must be non-empty"));
        }
        let mut data = vec![0i8; n * p];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::dimension(format!("row {i} has {} entries, expected {p}", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 1 && v != -1 {
                    return Err(Error::domain(format!("entry {v} at ({i},{j}) is not +/-1")));
                }
                data[j * n + i] = v;
            }
        }
        Ok(Self { rows: n, cols: p, data })
    }

    /// Converts a real matrix whose entries are exactly +/-1.
    pub fn from_design(x: &DesignMatrix) -> Result<Self> {
        let mut rows = vec![Vec::with_capacity(x.cols()); x.rows()];
        for (i, row) in rows.iter_mut().enumerate() {
            for j in 0..x.cols() {
                let v = x.get(i, j);
                if v != 1.0 && v != -1.0 {
                    return Err(Error::domain(format!("entry {v} at ({i},{j}) is not +/-1")));
                }
                row.push(v as i8);
            }
        }
        Self::from_rows(&rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.data[col * self.rows + row]
    }

    pub fn column(&self, col: usize) -> &[i8] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn to_rows(&self) -> Vec<Vec<i8>> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn to_design(&self) -> DesignMatrix {
        let data = self.data.iter().map(|&v| f64::from(v)).collect();
        DesignMatrix::from_column_major(self.rows, self.cols, data).expect("non-empty by construction")
    }

    /// `A^T A` as integers.
    pub fn gram(&self) -> Vec<Vec<i64>> {
        (0..self.cols)
            .map(|a| {
                (0..self.cols)
                    .map(|b| {
                        self.column(a)
                            .iter()
                            .zip(self.column(b))
                            .map(|(&x, &y)| i64::from(x) * i64::from(y))
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    /// True when all distinct columns have zero inner product.
    pub fn is_orthogonal(&self) -> bool {
        let g = self.gram();
        (0..self.cols).all(|a| (0..self.cols).all(|b| a == b || g[a][b] == 0))
    }

    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.rows)?;
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            let col = self.column(j);
            data.extend(perm.iter().map(|&i| col[i]));
        }
        Ok(Self { data, ..*self })
    }

    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.cols) {
            return Err(Error::dimension(format!("column {bad} out of range 0..{}", self.cols)));
        }
        if cols.is_empty() {
            return Err(Error::domain("must keep at least one column"));
        }
        let data = cols.iter().flat_map(|&c| self.column(c).iter().copied()).collect();
        Ok(Self { rows: self.rows, cols: cols.len(), data })
    }
}

/// Sylvester's Hadamard matrix of order `k`, a power of two.
pub fn sylvester_sign_matrix(k: usize) -> Result<SignMatrix> {
    if k == 0 || !k.is_power_of_two() {
        return Err(Error::unsupported(format!("Sylvester construction needs a power-of-two order, got {k}")));
    }
    let mut h: Vec<Vec<i8>> = vec![vec![1]];
    while h.len() < k {
        let m = h.len();
        let mut next = vec![vec![0i8; 2 * m]; 2 * m];
        for i in 0..m {
            for j in 0..m {
                let v = h[i][j];
                next[i][j] = v;
                next[i][j + m] = v;
                next[i + m][j] = v;
                next[i + m][j + m] = -v;
            }
        }
        h = next;
    }
    SignMatrix::from_rows(&h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(rows: &[&[f64]]) -> DesignMatrix {
        DesignMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn centered_levels_odd_and_even() {
        assert_eq!(centered_levels(7).unwrap().levels(), &[-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        assert_eq!(centered_levels(2).unwrap().levels(), &[-0.5, 0.5]);
        assert_eq!(
            centered_levels(8).unwrap().levels(),
            &[-3.5, -2.5, -1.5, -0.5, 0.5, 1.5, 2.5, 3.5]
        );
        assert_eq!(centered_levels(1).unwrap().levels(), &[0.0]);
        assert!(matches!(centered_levels(0), Err(Error::Domain(_))));
    }

    #[test]
    fn lh_check_rejects_wrong_level_system() {
        let x = design(&[&[0.0], &[1.0]]);
        let report = is_latin_hypercube(&x);
        assert!(!report.latin_hypercube);
        assert_eq!(report.column, Some(0));
        assert!(report.reason.is_some());
    }

    #[test]
    fn lh_check_reports_first_bad_column() {
        let x = design(&[&[-1.0, 1.0, 0.0], &[0.0, 0.0, 0.0], &[1.0, -1.0, 0.0]]);
        let report = is_latin_hypercube(&x);
        assert_eq!(report.column, Some(2));
    }

    #[test]
    fn with_kind_validates() {
        let x = design(&[&[0.5, -0.5], &[-0.5, 0.5]]);
        assert!(x.clone().with_kind(DesignKind::LatinHypercube).is_ok());
        assert!(x.clone().with_kind(DesignKind::TwoLevel).is_ok());
        let bad = design(&[&[1.0], &[0.0], &[-1.0]]);
        assert!(bad.clone().with_kind(DesignKind::TwoLevel).is_err());
        assert!(bad.with_kind(DesignKind::LatinHypercube).is_ok());
    }

    #[test]
    fn rejects_non_finite_and_ragged_input() {
        assert!(DesignMatrix::from_rows(&[vec![1.0, f64::NAN]]).is_err());
        assert!(DesignMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(DesignMatrix::from_column_major(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn full_factorial_is_strength_two() {
        let rows = vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]];
        let oa = OrthogonalArray::from_rows(2, &rows).unwrap();
        assert!(check_oa_strength2(&oa).strength_two);
        let flipped = vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 1]];
        let report = check_oa_strength2(&OrthogonalArray::from_rows(2, &flipped).unwrap());
        assert!(!report.strength_two);
        assert!(report.reason.unwrap().contains("pair (2, 1) occurs 2 times"));
    }

    #[test]
    fn oa_run_count_must_be_multiple_of_s_squared() {
        let rows = vec![vec![1, 1], vec![1, 2], vec![2, 1]];
        let report = check_oa_strength2(&OrthogonalArray::from_rows(2, &rows).unwrap());
        assert!(!report.strength_two);
        assert_eq!(report.index, None);
    }

    #[test]
    fn rao_hamming_shapes() {
        let oa = rao_hamming_oa(2).unwrap();
        assert_eq!((oa.runs(), oa.cols(), oa.symbols()), (4, 3, 2));
        let oa = rao_hamming_oa(7).unwrap();
        assert_eq!((oa.runs(), oa.cols(), oa.symbols()), (49, 8, 7));
        assert!(check_oa_strength2(&oa).strength_two);
        let oa = rao_hamming_oa(5).unwrap();
        assert_eq!((oa.runs(), oa.cols()), (25, 6));
        assert!(check_oa_strength2(&oa).strength_two);
    }

    #[test]
    fn rao_hamming_rejects_non_prime_powers() {
        for s in [0, 1, 6, 10, 12] {
            assert!(matches!(rao_hamming_oa(s), Err(Error::Unsupported(_))), "s = {s}");
        }
    }

    #[test]
    fn sylvester_orders() {
        let h2 = sylvester_sign_matrix(2).unwrap();
        assert_eq!(h2.to_rows(), vec![vec![1, 1], vec![1, -1]]);
        let h4 = sylvester_sign_matrix(4).unwrap();
        let g = h4.gram();
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(g[a][b], if a == b { 4 } else { 0 });
            }
        }
        let h8 = sylvester_sign_matrix(8).unwrap();
        for a in 0..8 {
            for b in 0..a {
                let ip: i64 = h8.column(a).iter().zip(h8.column(b)).map(|(&x, &y)| i64::from(x * y)).sum();
                assert_eq!(ip, 0);
            }
        }
        assert!(matches!(sylvester_sign_matrix(6), Err(Error::Unsupported(_))));
        assert!(matches!(sylvester_sign_matrix(0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn sign_matrix_rejects_zero() {
        assert!(SignMatrix::from_rows(&[vec![1, 0]]).is_err());
    }

    #[test]
    fn permute_rows_rejects_non_permutations() {
        let x = design(&[&[1.0], &[2.0]]);
        assert!(x.permute_rows(&[0, 0]).is_err());
        assert!(x.permute_rows(&[0]).is_err());
        assert_eq!(x.permute_rows(&[1, 0]).unwrap().column(0), &[2.0, 1.0]);
    }
}
