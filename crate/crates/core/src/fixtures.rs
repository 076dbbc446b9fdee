//! Published ingredient matrices shipped with the crate.
//!
//! The CSV files live in the workspace `fixtures/` directory and are embedded
//! at compile time, entries exactly as printed (including the factor 1/2 on
//! half-integer levels).

use crate::design::{DesignKind, DesignMatrix, SignMatrix};
use crate::error::Result;
use crate::io::parse_design;

pub const EXAMPLE1_B_CSV: &str = include_str!("../../../fixtures/example1_B_7x12.csv");
pub const EXAMPLE2_B_CSV: &str = include_str!("../../../fixtures/example2_B.csv");
pub const EXAMPLE2_D_CSV: &str = include_str!("../../../fixtures/example2_D.csv");
pub const EXAMPLE2_A1_CSV: &str = include_str!("../../../fixtures/example2_A1.csv");
pub const EXAMPLE2_C1_CSV: &str = include_str!("../../../fixtures/example2_C1.csv");

/// A 7 x 12 nearly orthogonal Latin hypercube.
pub fn example1_b() -> Result<DesignMatrix> {
    parse_design(EXAMPLE1_B_CSV)?.with_kind(DesignKind::LatinHypercube)
}

/// Ingredients `(B, D, A1, C1)` of a four-block Kronecker construction.
///
/// No Latin hypercube tag is asserted on `C1` here; callers decide what to
/// check.
pub fn example2_ingredients() -> Result<(DesignMatrix, SignMatrix, SignMatrix, DesignMatrix)> {
    let b = parse_design(EXAMPLE2_B_CSV)?;
    let d = SignMatrix::from_design(&parse_design(EXAMPLE2_D_CSV)?)?;
    let a1 = SignMatrix::from_design(&parse_design(EXAMPLE2_A1_CSV)?)?;
    let c1 = parse_design(EXAMPLE2_C1_CSV)?;
    Ok((b, d, a1, c1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let b = example1_b().unwrap();
        assert_eq!((b.rows(), b.cols()), (7, 12));
        let (b, d, a1, c1) = example2_ingredients().unwrap();
        assert_eq!((b.rows(), b.cols()), (8, 4));
        assert_eq!((d.rows(), d.cols()), (8, 4));
        assert_eq!((a1.rows(), a1.cols()), (12, 6));
        assert_eq!((c1.rows(), c1.cols()), (12, 6));
    }
}
