//! Nearly orthogonal Latin hypercubes from a strength-two orthogonal array.
//!
//! Given an OA(s^2, 2f, s) and an `s x p` Latin hypercube `B`, each column
//! `j` of `B` relabels the array's symbols `1..s` as `b_1j..b_sj`; each
//! consecutive column pair `[x1, x2]` of the relabelled array is then
//! multiplied by `V = [[1, -s], [s, 1]]`. Concatenating the `p` blocks gives
//! an `s^2 x 2pf` Latin hypercube whose correlation matrix is
//! `rho(B) (x) I_2f`.

use crate::design::{
    check_oa_strength2, is_latin_hypercube, DesignKind, DesignMatrix, OrthogonalArray,
};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Lemma1Inputs {
    oa: OrthogonalArray,
    b: DesignMatrix,
}

impl Lemma1Inputs {
    /// Uses the first `2f` columns of `oa`.
    pub fn new(oa: &OrthogonalArray, b: DesignMatrix, f: usize) -> Result<Self> {
        if f == 0 || 2 * f > oa.cols() {
            return Err(Error::RejectedInput(format!(
                "f = {f} needs 2f <= {} array columns",
                oa.cols()
            )));
        }
        let oa = oa.truncate_columns(2 * f)?;
        let s = oa.symbols() as usize;
        if oa.runs() != s * s {
            return Err(Error::RejectedInput(format!(
                "array has {} runs, expected s^2 = {}",
                oa.runs(),
                s * s
            )));
        }
        let report = check_oa_strength2(&oa);
        if !report.strength_two {
            return Err(Error::RejectedInput(format!(
                "not a strength-two array: {}",
                report.reason.unwrap_or_default()
            )));
        }
        if b.rows() != s {
            return Err(Error::RejectedInput(format!(
                "B has {} rows, the array has {s} symbols",
                b.rows()
            )));
        }
        let lh = is_latin_hypercube(&b);
        if !lh.latin_hypercube {
            return Err(Error::RejectedInput(format!(
                "B is not a Latin hypercube: {}",
                lh.reason.unwrap_or_default()
            )));
        }
        Ok(Self { oa, b })
    }

    pub fn s(&self) -> usize {
        self.oa.symbols() as usize
    }

    pub fn f(&self) -> usize {
        self.oa.cols() / 2
    }

    pub fn p(&self) -> usize {
        self.b.cols()
    }

    pub fn b(&self) -> &DesignMatrix {
        &self.b
    }

    pub fn oa(&self) -> &OrthogonalArray {
        &self.oa
    }
}

pub fn lemma1_construct(inputs: &Lemma1Inputs) -> Result<DesignMatrix> {
    let s = inputs.s();
    let f = inputs.f();
    let n = s * s;
    let sf = s as f64;
    let oa = &inputs.oa;
    let mut data = Vec::with_capacity(n * 2 * f * inputs.p());
    for b_col in inputs.b.columns() {
        for k in 0..f {
            let (first, second) = (oa.column(2 * k), oa.column(2 * k + 1));
            let x1 = |i: usize| b_col[first[i] as usize - 1];
            let x2 = |i: usize| b_col[second[i] as usize - 1];
            // [x1, x2] * V
            data.extend((0..n).map(|i| x1(i) + sf * x2(i)));
            data.extend((0..n).map(|i| -sf * x1(i) + x2(i)));
        }
    }
    let m = DesignMatrix::from_column_major(n, 2 * f * inputs.p(), data)?;
    let report = is_latin_hypercube(&m);
    if !report.latin_hypercube {
        // unreachable for valid inputs; kept as a hard post-condition
        return Err(Error::RejectedInput(format!(
            "construction is not a Latin hypercube: {}",
            report.reason.unwrap_or_default()
        )));
    }
    Ok(m.assume_kind(DesignKind::LatinHypercube))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::correlation_matrix;
    use crate::design::rao_hamming_oa;

    #[test]
    fn single_column_seed_gives_orthogonal_design() {
        let oa = rao_hamming_oa(3).unwrap();
        let b = DesignMatrix::from_columns(vec![vec![-1.0, 0.0, 1.0]]).unwrap();
        let m = lemma1_construct(&Lemma1Inputs::new(&oa, b, 2).unwrap()).unwrap();
        assert_eq!((m.rows(), m.cols()), (9, 4));
        assert!(is_latin_hypercube(&m).latin_hypercube);
        let rho = correlation_matrix(&m).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((rho.get(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_ingredients() {
        let oa = rao_hamming_oa(3).unwrap();
        let not_lh = DesignMatrix::from_columns(vec![vec![-1.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(Lemma1Inputs::new(&oa, not_lh, 1), Err(Error::RejectedInput(_))));
        let wrong_rows = DesignMatrix::from_columns(vec![vec![-0.5, 0.5]]).unwrap();
        assert!(Lemma1Inputs::new(&oa, wrong_rows, 1).is_err());
        let b = DesignMatrix::from_columns(vec![vec![-1.0, 0.0, 1.0]]).unwrap();
        assert!(Lemma1Inputs::new(&oa, b.clone(), 3).is_err());
        assert!(Lemma1Inputs::new(&oa, b, 0).is_err());

        let mut rows = oa.to_rows();
        rows[0][1] = rows[1][1];
        let broken = OrthogonalArray::from_rows(3, &rows).unwrap();
        let b = DesignMatrix::from_columns(vec![vec![-1.0, 0.0, 1.0]]).unwrap();
        assert!(matches!(Lemma1Inputs::new(&broken, b, 2), Err(Error::RejectedInput(_))));
    }
}
