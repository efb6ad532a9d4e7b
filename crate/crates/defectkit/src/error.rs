//! Error type shared by the whole crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be Hermitian: symmetry defect {defect:.3e} exceeds bound {bound:.3e}")]
    NotHermitian { defect: f64, bound: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:.6e} below tolerance")]
    NotPsd { eigenvalue: f64 },

    #[error("operator is not a contraction: {detail}")]
    NotAContraction { detail: String },

    #[error("matrix is not nilpotent of order {order}: {detail}")]
    NotNilpotent { order: usize, detail: String },

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        got: usize,
    },

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("evaluation point lies outside the open unit disk: |z| = {modulus}")]
    OutsideUnitDisk { modulus: f64 },

    #[error("coupling block is not of the required defect-compressed form: reconstruction residual {residual:.3e}, gamma norm {gamma_norm:.6}; the assembled block operator is not a contraction")]
    GammaReconstruction { residual: f64, gamma_norm: f64 },

    #[error("defining norm identity violated (residual {residual:.3e}); refusing to continue")]
    NormIdentityViolation { residual: f64 },

    #[error("constructed operator fails unitarity check: {what} has defect {defect:.3e}")]
    NotUnitary { what: String, defect: f64 },

    #[error("input is not block upper-triangular for the declared split: below-diagonal mass {below:.3e}")]
    NonTriangular { below: f64 },

    #[error("factorization residual {residual:.3e} exceeds acceptance bound {bound:.3e}")]
    ResidualExceeded { residual: f64, bound: f64 },

    #[error("operation requires a structured operator")]
    NotStructured,

    #[error("infeasible dimension request: {0}")]
    InfeasibleDimensions(String),

    #[error("non-finite matrix entry")]
    NonFiniteEntry,

    #[error("non-unitary coincidence certificate: defect {defect:.3e}")]
    BadCertificate { defect: f64 },

    #[error("linear solve failed: matrix numerically singular at pivot {pivot}")]
    SingularSolve { pivot: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
