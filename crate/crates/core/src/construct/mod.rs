//! Design constructors.

pub mod anneal;
pub mod kronecker;
pub mod lemma1;
pub mod pipelines;
pub mod random;
pub mod two_level;

pub use anneal::{anneal_nolhd, AnnealConfig, AnnealObjective, AnnealOutcome};
pub use kronecker::{
    check_prop1_conditions, joint_row_permute, joint_row_permute_with, kronecker_base,
    kronecker_construct, ConditionReport, KroneckerInputs, KroneckerOutput, Prop1Conditions,
};
pub use lemma1::{lemma1_construct, Lemma1Inputs};
pub use pipelines::{
    example1_design, example3_design, lemma1_annealed, nolhd_64x192, oa_row_automorphisms,
    Example3Output, Lemma1Annealed, RowAutomorphism,
};
pub use random::{centered_range, iid_uniform_sample, random_centered_lh, random_latin_hypercube};
pub use two_level::{
    e_s2, es2_supersaturated, es2_supersaturated_with, nearly_orthogonal_sign_matrix,
    two_level_design,
};
