//! Shared domain types: complex phase space, polynomial symbols, state labels and scenarios.

mod labels;
mod phase;
mod result;
mod scenario;
mod symbol;

pub use labels::{spin_stereographic, CoherentLabel, SpinLabel};
pub use phase::{
    kms_inverse, kms_transform, mat2_det, mat2_identity, mat2_mul, monodromy_to_kms,
    ComplexPhasePoint, KmsPoint, Mat2, KMS_INVERSE_MATRIX, KMS_MATRIX,
};
pub use result::{Method, WeakValueResult, OVERLAP_ABS};
pub use scenario::{Boundary, BoundaryKind, Hamiltonian, Scenario};
pub use symbol::{eval_symbol, symbol_gradient, PolynomialSymbol};
