//! Nearly orthogonal Latin hypercube designs: construction, correlation
//! criteria, a Lasso solver and a simulation harness comparing design types
//! for variable selection.

pub mod construct;
pub mod criteria;
pub mod design;
pub mod error;
pub mod fixtures;
pub mod gf;
pub mod io;
pub mod lasso;
pub mod seed;
pub mod sim;

pub use criteria::{compute_criteria, correlation_matrix, CorrelationMatrix, CorrelationSummary};
pub use design::{DesignKind, DesignMatrix, LevelSet, OrthogonalArray, SignMatrix};
pub use error::{Error, Result};
