//! End-to-end recipes for the fixture designs and the designs used in the
//! simulation study.

use serde::Serialize;

use crate::construct::anneal::{anneal_nolhd, AnnealConfig, AnnealObjective};
use crate::construct::kronecker::{kronecker_construct, ConditionReport, KroneckerInputs};
use crate::construct::lemma1::{lemma1_construct, Lemma1Inputs};
use crate::construct::two_level::{nearly_orthogonal_sign_matrix, DEFAULT_RESTARTS};
use crate::criteria::{compute_criteria, CorrelationSummary, DEFAULT_THRESHOLDS};
use crate::design::{rao_hamming_oa, DesignMatrix, SignMatrix};
use crate::error::{Error, Result};
use crate::fixtures::example1_b;
use crate::gf::GaloisField;
use crate::seed::{child_seed, rng_from_seed};

/// The 49 x 96 design from the 7 x 12 fixture and OA(49, 8, 7).
pub fn example1_design() -> Result<DesignMatrix> {
    let oa = rao_hamming_oa(7)?;
    lemma1_construct(&Lemma1Inputs::new(&oa, example1_b()?, 4)?)
}

/// An affine map `(u, v) -> (a u + tu, d v + tv)` on the row labels of a
/// Rao-Hamming array over GF(s).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RowAutomorphism {
    pub a: u32,
    pub d: u32,
    pub tu: u32,
    pub tv: u32,
}

impl RowAutomorphism {
    pub fn is_identity(&self) -> bool {
        *self == RowAutomorphism { a: 1, d: 1, tu: 0, tv: 0 }
    }

    /// Row permutation with new row `u*s + v` taken from old row `map(u, v)`.
    pub fn permutation(&self, field: &GaloisField) -> Vec<usize> {
        let s = field.order();
        (0..s)
            .flat_map(|u| (0..s).map(move |v| (u, v)))
            .map(|(u, v)| {
                let nu = field.add(field.mul(self.a, u), self.tu);
                let nv = field.add(field.mul(self.d, v), self.tv);
                (nu * s + nv) as usize
            })
            .collect()
    }
}

/// Diagonal scalings combined with translations of GF(s)^2. Each permutes
/// the rows of the array while mapping every column onto a relabelled copy
/// of one of its columns.
pub fn oa_row_automorphisms(s: u32) -> Result<Vec<RowAutomorphism>> {
    GaloisField::new(s)?;
    let mut out = Vec::new();
    for a in 1..s {
        for d in 1..s {
            for tu in 0..s {
                for tv in 0..s {
                    out.push(RowAutomorphism { a, d, tu, tv });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct Example3Output {
    #[serde(skip)]
    pub design: DesignMatrix,
    #[serde(skip)]
    pub seed_design: DesignMatrix,
    #[serde(skip)]
    pub c_list: Vec<DesignMatrix>,
    #[serde(skip)]
    pub a_list: Vec<SignMatrix>,
    pub automorphism: RowAutomorphism,
    pub report: ConditionReport,
    pub criteria: CorrelationSummary,
    pub seed_criteria: CorrelationSummary,
}

fn example3_outer() -> Result<(DesignMatrix, SignMatrix)> {
    let b = DesignMatrix::from_rows(&[vec![0.5, -0.5], vec![-0.5, 0.5]])?;
    let d = SignMatrix::from_rows(&[vec![1, 1], vec![1, 1]])?;
    Ok((b, d))
}

/// Same scale as the default weighted-proportion annealing energy.
fn selection_energy(c: &CorrelationSummary) -> f64 {
    c.delta.iter().map(|d| 1.0 - d).sum::<f64>() + c.rho_max + 0.01 * c.rho_ave
}

/// A 50 x 48 Kronecker design with two blocks from the OA construction.
///
/// `C1` is the OA construction applied to OA(25, 6, 5) and an annealed 5 x 4 seed. `C2`
/// is a row permutation of `C1`: the non-identity row automorphism of the
/// array minimizing `sum_k (1 - delta_k) + rho_max + 0.01 rho_ave` of the
/// final design.
/// `A1`, `A2` are near-balanced sign matrices with small inner products.
pub fn example3_design(seed: u64) -> Result<Example3Output> {
    let s = 5;
    let oa = rao_hamming_oa(s)?;
    let anneal = anneal_nolhd(s as usize, 4, &AnnealConfig::with_seed(child_seed(seed, 0)))?;
    let seed_design = anneal.design;
    let c1 = lemma1_construct(&Lemma1Inputs::new(&oa, seed_design.clone(), 3)?)?;

    let mut rng = rng_from_seed(child_seed(seed, 1));
    let a1 = nearly_orthogonal_sign_matrix(25, 24, DEFAULT_RESTARTS, &mut rng)?;
    let a2 = nearly_orthogonal_sign_matrix(25, 24, DEFAULT_RESTARTS, &mut rng)?;
    let (b, d) = example3_outer()?;
    let field = GaloisField::new(s)?;

    let mut best: Option<(RowAutomorphism, DesignMatrix, ConditionReport, CorrelationSummary, DesignMatrix)> =
        None;
    for auto in oa_row_automorphisms(s)?.into_iter().filter(|m| !m.is_identity()) {
        let c2 = c1.permute_rows(&auto.permutation(&field))?;
        let inputs = KroneckerInputs::new(
            vec![a1.clone(), a2.clone()],
            vec![c1.clone(), c2.clone()],
            b.clone(),
            d.clone(),
            2.0,
        )?;
        let out = kronecker_construct(&inputs)?;
        if !out.report.latin_hypercube {
            continue;
        }
        let crit = compute_criteria(&out.design, &DEFAULT_THRESHOLDS)?;
        if best.as_ref().is_none_or(|b| selection_energy(&crit) < selection_energy(&b.3)) {
            best = Some((auto, out.design, out.report, crit, c2));
        }
    }
    let (automorphism, design, report, criteria, c2) =
        best.ok_or_else(|| Error::RejectedInput("no candidate permutation gave a Latin hypercube".into()))?;
    Ok(Example3Output {
        design,
        seed_criteria: compute_criteria(&seed_design, &DEFAULT_THRESHOLDS)?,
        seed_design,
        c_list: vec![c1, c2],
        a_list: vec![a1, a2],
        automorphism,
        report,
        criteria,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma1Annealed {
    #[serde(skip)]
    pub design: DesignMatrix,
    #[serde(skip)]
    pub b: DesignMatrix,
    pub s: u32,
    pub f: usize,
    pub route: String,
}

/// OA construction over OA(s^2, s+1, s) with an annealed `s x p_b` seed, giving an
/// `s^2 x 2 f p_b` design. The seed is annealed on the maximum correlation.
pub fn lemma1_annealed(s: u32, f: usize, p_b: usize, seed: u64) -> Result<Lemma1Annealed> {
    let oa = rao_hamming_oa(s)?;
    let cfg = AnnealConfig {
        objective: AnnealObjective::RhoMax,
        ..AnnealConfig::with_seed(seed)
    };
    let b = anneal_nolhd(s as usize, p_b, &cfg)?.design;
    let design = lemma1_construct(&Lemma1Inputs::new(&oa, b.clone(), f)?)?;
    Ok(Lemma1Annealed {
        design,
        b,
        s,
        f,
        route: format!(
            "lemma1: OA({}, {}, {s}) truncated to {} columns, annealed {s}x{p_b} min-max seed, seed {seed}",
            s * s,
            s + 1,
            2 * f
        ),
    })
}

/// The 64 x 192 design used for the largest simulation scenario.
pub fn nolhd_64x192(seed: u64) -> Result<Lemma1Annealed> {
    lemma1_annealed(8, 4, 24, seed)
}
