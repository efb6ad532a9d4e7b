//! Characteristic functions of Hilbert-space contractions at desk scale.
//!
//! The crate computes defect operators and defect spaces of contractions,
//! evaluates and expands their characteristic functions, and constructs the
//! unitaries that factor the characteristic function of a block
//! upper-triangular contraction through its diagonal blocks: the 2x2
//! factorization with the Halmos unitary of the coupling parameter, the
//! nested 3x3 factorization, and the isometry/coisometry form it takes when
//! the outer blocks are a pure isometry and a pure coisometry (the setting
//! where the characteristic function is an operator polynomial and the
//! middle block is nilpotent).
//!
//! Shifts are represented exactly through finitely supported coordinate
//! blocks, never truncated, so every construction here is a finite exact
//! computation followed by floating-point rounding; the verification
//! residuals of the factorizations sit at rounding level.

pub mod charfun;
pub mod error;
pub mod factor2;
pub mod factor3;
pub mod linalg;
pub mod matrix;
pub mod models;
pub mod operators;
pub mod suite;

pub use error::{Error, Result};
pub use linalg::{classify, hermitian_eig, kernel_frame, pinv, psd_sqrt, range_frame, svd, Frame};
pub use matrix::ComplexMatrix;
pub use operators::{
    DefectData, DenseContraction, HilbertVector, OperatorHandle, StructuredOperator,
    StructuredSpace, StructuredVector,
};

pub use num_complex::Complex64 as C64;
