//! Block Kronecker constructions.
//!
//! [`kronecker_construct`] builds the `(n1 n2) x (m1 m2)` design whose block
//! in row-block `q` and column-block `j` is `b_qj A_j + r d_qj C_j`, using a
//! different sign matrix `A_j` and Latin hypercube `C_j` for every column of
//! `B`. [`kronecker_base`] is the plain `A (x) B + r C (x) D` it generalizes.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::design::{is_latin_hypercube, DesignKind, DesignMatrix, SignMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct KroneckerInputs {
    pub a_list: Vec<SignMatrix>,
    pub c_list: Vec<DesignMatrix>,
    pub b: DesignMatrix,
    pub d: SignMatrix,
    pub r: f64,
}

impl KroneckerInputs {
    /// Checks shapes and that `B` and every `C_j` are Latin hypercubes.
    pub fn new(
        a_list: Vec<SignMatrix>,
        c_list: Vec<DesignMatrix>,
        b: DesignMatrix,
        d: SignMatrix,
        r: f64,
    ) -> Result<Self> {
        let m2 = b.cols();
        if a_list.len() != m2 || c_list.len() != m2 {
            return Err(Error::dimension(format!(
                "B has {m2} columns but {} sign matrices and {} Latin hypercubes were given",
                a_list.len(),
                c_list.len()
            )));
        }
        if (d.rows(), d.cols()) != (b.rows(), m2) {
            return Err(Error::dimension(format!(
                "D is {}x{}, B is {}x{m2}",
                d.rows(),
                d.cols(),
                b.rows()
            )));
        }
        let (n1, m1) = (c_list[0].rows(), c_list[0].cols());
        for (j, (a, c)) in a_list.iter().zip(&c_list).enumerate() {
            if (a.rows(), a.cols()) != (n1, m1) || (c.rows(), c.cols()) != (n1, m1) {
                return Err(Error::dimension(format!(
                    "block {j}: A is {}x{}, C is {}x{}, expected {n1}x{m1}",
                    a.rows(),
                    a.cols(),
                    c.rows(),
                    c.cols()
                )));
            }
            let lh = is_latin_hypercube(c);
            if !lh.latin_hypercube {
                return Err(Error::RejectedInput(format!(
                    "C_{j}: {}",
                    lh.reason.unwrap_or_default()
                )));
            }
        }
        let lh = is_latin_hypercube(&b);
        if !lh.latin_hypercube {
            return Err(Error::RejectedInput(format!("B: {}", lh.reason.unwrap_or_default())));
        }
        if !r.is_finite() {
            return Err(Error::domain("r must be finite"));
        }
        Ok(Self { a_list, c_list, b, d, r })
    }

    pub fn n1(&self) -> usize {
        self.c_list[0].rows()
    }

    pub fn m1(&self) -> usize {
        self.c_list[0].cols()
    }

    pub fn n2(&self) -> usize {
        self.b.rows()
    }

    pub fn m2(&self) -> usize {
        self.b.cols()
    }
}

/// Which sufficient conditions for a Latin hypercube output hold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prop1Conditions {
    /// Every `C_j` column pairs rows with negated `c` and equal `a`.
    pub cond_a: bool,
    /// Every `B`/`D` column pairs rows with negated `b` and equal `d`.
    pub cond_b: bool,
    pub r_equals_n2: bool,
    pub details: Vec<String>,
}

impl Prop1Conditions {
    pub fn sufficient(&self) -> bool {
        self.r_equals_n2 && (self.cond_a || self.cond_b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    #[serde(flatten)]
    pub conditions: Prop1Conditions,
    pub latin_hypercube: bool,
    pub lh_reason: Option<String>,
}

#[derive(Clone, Debug)]
pub struct KroneckerOutput {
    pub design: DesignMatrix,
    pub report: ConditionReport,
}

fn quantize(v: f64) -> i64 {
    (v * 1e9).round() as i64
}

/// Looks for a pairing of rows `p <-> p'` with `negated[p'] = -negated[p]` and
/// `kept[p'] = kept[p]`. A zero entry may pair with itself.
fn find_negation_pairing(negated: &[f64], kept: &[i8]) -> std::result::Result<(), usize> {
    let mut pool: HashMap<(i64, i8), Vec<usize>> = HashMap::new();
    for (p, (&v, &k)) in negated.iter().zip(kept).enumerate() {
        pool.entry((quantize(v), k)).or_default().push(p);
    }
    let mut used = vec![false; negated.len()];
    for p in 0..negated.len() {
        if used[p] {
            continue;
        }
        let v = quantize(negated[p]);
        if v == 0 {
            used[p] = true;
            continue;
        }
        let partner = pool
            .get_mut(&(-v, kept[p]))
            .and_then(|rows| {
                let idx = rows.iter().position(|&q| !used[q])?;
                Some(rows.swap_remove(idx))
            })
            .ok_or(p)?;
        used[p] = true;
        used[partner] = true;
    }
    Ok(())
}

/// Checks the two sufficient conditions for the block construction to be a
/// Latin hypercube. Pairings are searched independently per column.
pub fn check_prop1_conditions(inputs: &KroneckerInputs) -> Prop1Conditions {
    let mut details = Vec::new();
    let mut cond_a = true;
    for (j, (a, c)) in inputs.a_list.iter().zip(&inputs.c_list).enumerate() {
        for i in 0..c.cols() {
            if let Err(row) = find_negation_pairing(c.column(i), a.column(i)) {
                cond_a = false;
                details.push(format!("(a) block {j}, column {i}: row {row} has no partner"));
                break;
            }
        }
    }
    let mut cond_b = true;
    for k in 0..inputs.m2() {
        if let Err(row) = find_negation_pairing(inputs.b.column(k), inputs.d.column(k)) {
            cond_b = false;
            details.push(format!("(b) column {k} of B/D: row {row} has no partner"));
        }
    }
    let n2 = inputs.n2() as f64;
    let r_equals_n2 = (inputs.r - n2).abs() <= 1e-12 * n2;
    if !r_equals_n2 {
        details.push(format!("r = {} differs from n2 = {n2}", inputs.r));
    }
    Prop1Conditions { cond_a, cond_b, r_equals_n2, details }
}

pub fn kronecker_construct(inputs: &KroneckerInputs) -> Result<KroneckerOutput> {
    let (n1, m1, n2, m2) = (inputs.n1(), inputs.m1(), inputs.n2(), inputs.m2());
    let n = n1 * n2;
    let r = inputs.r;
    let mut data = Vec::with_capacity(n * m1 * m2);
    for j in 0..m2 {
        let (a, c) = (&inputs.a_list[j], &inputs.c_list[j]);
        for k in 0..m1 {
            let (a_col, c_col) = (a.column(k), c.column(k));
            for q in 0..n2 {
                let b_qj = inputs.b.get(q, j);
                let d_qj = f64::from(inputs.d.get(q, j));
                data.extend(
                    a_col
                        .iter()
                        .zip(c_col)
                        .map(|(&av, &cv)| b_qj * f64::from(av) + r * d_qj * cv),
                );
            }
        }
    }
    let design = DesignMatrix::from_column_major(n, m1 * m2, data)?;
    let lh = is_latin_hypercube(&design);
    let design = if lh.latin_hypercube {
        design.assume_kind(DesignKind::LatinHypercube)
    } else {
        design
    };
    Ok(KroneckerOutput {
        design,
        report: ConditionReport {
            conditions: check_prop1_conditions(inputs),
            latin_hypercube: lh.latin_hypercube,
            lh_reason: lh.reason,
        },
    })
}

/// `L = A (x) B + r C (x) D` with `A, C` of size `n1 x m1` and `B, D` of size `n2 x m2`.
pub fn kronecker_base(
    a: &SignMatrix,
    b: &DesignMatrix,
    c: &DesignMatrix,
    d: &SignMatrix,
    r: f64,
) -> Result<DesignMatrix> {
    let (n1, m1) = (a.rows(), a.cols());
    let (n2, m2) = (b.rows(), b.cols());
    if (c.rows(), c.cols()) != (n1, m1) {
        return Err(Error::dimension(format!("A is {n1}x{m1} but C is {}x{}", c.rows(), c.cols())));
    }
    if (d.rows(), d.cols()) != (n2, m2) {
        return Err(Error::dimension(format!("B is {n2}x{m2} but D is {}x{}", d.rows(), d.cols())));
    }
    let mut data = Vec::with_capacity(n1 * n2 * m1 * m2);
    for i in 0..m1 {
        for k in 0..m2 {
            for p in 0..n1 {
                let (apt, cpt) = (f64::from(a.get(p, i)), c.get(p, i));
                for q in 0..n2 {
                    data.push(apt * b.get(q, k) + r * cpt * f64::from(d.get(q, k)));
                }
            }
        }
    }
    let l = DesignMatrix::from_column_major(n1 * n2, m1 * m2, data)?;
    Ok(if is_latin_hypercube(&l).latin_hypercube {
        l.assume_kind(DesignKind::LatinHypercube)
    } else {
        l
    })
}

/// Applies the same row permutation to `a` and `c`; new row `i` is old row `perm[i]`.
pub fn joint_row_permute_with(
    a: &SignMatrix,
    c: &DesignMatrix,
    perm: &[usize],
) -> Result<(SignMatrix, DesignMatrix)> {
    if a.rows() != c.rows() {
        return Err(Error::domain(format!(
            "row counts differ: A has {}, C has {}",
            a.rows(),
            c.rows()
        )));
    }
    Ok((a.permute_rows(perm)?, c.permute_rows(perm)?))
}

/// Applies one shared uniformly random row permutation to `a` and `c`,
/// which preserves `A^T C`.
pub fn joint_row_permute<R: Rng + ?Sized>(
    a: &SignMatrix,
    c: &DesignMatrix,
    rng: &mut R,
) -> Result<(SignMatrix, DesignMatrix)> {
    if a.rows() != c.rows() {
        return Err(Error::domain(format!(
            "row counts differ: A has {}, C has {}",
            a.rows(),
            c.rows()
        )));
    }
    let mut perm: Vec<usize> = (0..a.rows()).collect();
    perm.shuffle(rng);
    joint_row_permute_with(a, c, &perm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn col(v: &[f64]) -> DesignMatrix {
        DesignMatrix::from_columns(vec![v.to_vec()]).unwrap()
    }

    fn signs(rows: &[&[i8]]) -> SignMatrix {
        SignMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn identity_collapse() {
        let a = signs(&[&[1]]);
        let c = col(&[0.0]);
        let b = DesignMatrix::from_rows(&[vec![0.5, -0.5], vec![-0.5, 0.5]]).unwrap();
        let d = signs(&[&[1, 1], &[1, 1]]);
        let l = kronecker_base(&a, &b, &c, &d, 0.0).unwrap();
        assert_eq!(l.as_column_major(), b.as_column_major());
    }

    #[test]
    fn two_row_outer_factor_gives_latin_hypercube() {
        // B = (1/2, -1/2)^T, D = (1, 1)^T, r = 2: condition (b) holds for any A, C.
        let b = col(&[0.5, -0.5]);
        let d = signs(&[&[1], &[1]]);
        let c = DesignMatrix::from_columns(vec![vec![-1.0, 0.0, 1.0], vec![1.0, -1.0, 0.0]]).unwrap();
        let a = signs(&[&[1, -1], &[-1, -1], &[1, 1]]);
        let inputs = KroneckerInputs::new(vec![a], vec![c], b, d, 2.0).unwrap();
        let out = kronecker_construct(&inputs).unwrap();
        assert!(out.report.conditions.cond_b);
        assert!(out.report.conditions.r_equals_n2);
        assert!(out.report.latin_hypercube);
        assert_eq!(out.design.kind(), DesignKind::LatinHypercube);
        assert_eq!((out.design.rows(), out.design.cols()), (6, 2));
    }

    #[test]
    fn zero_level_pairs_with_itself() {
        let b = col(&[-1.0, 0.0, 1.0]);
        let d = signs(&[&[1], &[1], &[1]]);
        let c = col(&[-0.5, 0.5]);
        let a = signs(&[&[1], &[1]]);
        let cond = check_prop1_conditions(&KroneckerInputs::new(vec![a], vec![c], b, d, 3.0).unwrap());
        assert!(cond.cond_b);
        assert!(cond.cond_a);
    }

    #[test]
    fn asymmetric_block_fails_condition_a() {
        let c = col(&[-1.0, 0.0, 1.0]);
        // rows 0 and 2 carry negated c but different a
        let a = signs(&[&[1], &[1], &[-1]]);
        let b = col(&[0.5, -0.5]);
        let d = signs(&[&[1], &[-1]]);
        let cond = check_prop1_conditions(&KroneckerInputs::new(vec![a], vec![c], b, d, 2.0).unwrap());
        assert!(!cond.cond_a);
        assert!(!cond.cond_b);
        assert_eq!(cond.details.len(), 2);
    }

    #[test]
    fn r_mismatch_is_flagged() {
        let b = col(&[0.5, -0.5]);
        let d = signs(&[&[1], &[1]]);
        let inputs = KroneckerInputs::new(vec![signs(&[&[1], &[1]])], vec![col(&[-0.5, 0.5])], b, d, 3.0).unwrap();
        let out = kronecker_construct(&inputs).unwrap();
        assert!(!out.report.conditions.r_equals_n2);
        assert!(!out.report.conditions.sufficient());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let b = DesignMatrix::from_rows(&[vec![0.5, -0.5], vec![-0.5, 0.5]]).unwrap();
        let d = signs(&[&[1, 1], &[1, 1]]);
        let c = col(&[-0.5, 0.5]);
        let a = signs(&[&[1], &[1]]);
        assert!(matches!(
            KroneckerInputs::new(vec![a.clone()], vec![c.clone()], b.clone(), d.clone(), 2.0),
            Err(Error::Dimension(_))
        ));
        let c3 = col(&[-1.0, 0.0, 1.0]);
        assert!(KroneckerInputs::new(vec![a.clone(), a.clone()], vec![c, c3], b, d, 2.0).is_err());
        assert!(kronecker_base(&a, &col(&[0.5, -0.5]), &col(&[-1.0, 0.0, 1.0]), &signs(&[&[1], &[1]]), 1.0).is_err());
    }

    #[test]
    fn joint_permutation_is_shared() {
        let a = signs(&[&[1, -1], &[-1, -1], &[1, 1]]);
        let c = DesignMatrix::from_columns(vec![vec![-1.0, 0.0, 1.0], vec![1.0, -1.0, 0.0]]).unwrap();
        let (a2, c2) = joint_row_permute_with(&a, &c, &[0, 1, 2]).unwrap();
        assert_eq!((a2, c2), (a.clone(), c.clone()));
        let (a2, c2) = joint_row_permute(&a, &c, &mut rng_from_seed(4)).unwrap();
        let (a3, c3) = joint_row_permute(&a, &c, &mut rng_from_seed(4)).unwrap();
        assert_eq!((&a2, &c2), (&a3, &c3));
        // each new row of (A, C) is some old row of (A, C)
        for i in 0..3 {
            let found = (0..3).any(|p| {
                (0..2).all(|k| a2.get(i, k) == a.get(p, k) && c2.get(i, k) == c.get(p, k))
            });
            assert!(found);
        }
        let short = DesignMatrix::from_columns(vec![vec![-0.5, 0.5]]).unwrap();
        assert!(matches!(joint_row_permute(&a, &short, &mut rng_from_seed(0)), Err(Error::Domain(_))));
    }
}
