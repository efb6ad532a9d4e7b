//! Characteristic functions: evaluation, Taylor coefficients, degree
//! detection, the purely-contractive test, and verification of coincidence
//! certificates.
//!
//! For a contraction T the characteristic function is the analytic function
//! from the defect space of T to the defect space of T*,
//!
//! ```text
//!     Theta_T(z) = [ -T + z D_{T*} (I - z T*)^{-1} D_T ] restricted to D_T,
//! ```
//!
//! represented here as a matrix between defect frames. Dense operators are
//! evaluated through a direct resolvent solve; structured operators through
//! the power series D_{T*} T*^p D_T, which their exact shift arithmetic
//! computes term by term and which terminates when the middle block is
//! nilpotent. The two routes are independent of each other and the tests
//! hold them against one another.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lu_solve, sigma_max};
use crate::matrix::ComplexMatrix;
use crate::operators::{DefectData, OperatorHandle, StructuredOperator};

/// Grid on which factorization identities are checked: radii 0.3, 0.6, 0.9
/// with 12 equispaced angles each.
pub fn standard_grid() -> Vec<C64> {
    let mut grid = Vec::with_capacity(36);
    for &r in &[0.3, 0.6, 0.9] {
        for k in 0..12 {
            let th = 2.0 * std::f64::consts::PI * (k as f64) / 12.0;
            grid.push(C64::new(r * th.cos(), r * th.sin()));
        }
    }
    grid
}

/// Operator-valued analytic function given by finitely many coefficient
/// matrices between two defect frames. `exact` records whether coefficients
/// beyond the stored ones are provably zero (structured nilpotent case) or
/// merely not computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyOpFunction {
    #[serde(rename = "dimIn")]
    pub dim_in: usize,
    #[serde(rename = "dimOut")]
    pub dim_out: usize,
    pub coeffs: Vec<ComplexMatrix>,
    pub exact: bool,
}

impl PolyOpFunction {
    pub fn new(dim_in: usize, dim_out: usize, coeffs: Vec<ComplexMatrix>, exact: bool) -> Self {
        for c in &coeffs {
            assert_eq!((c.rows(), c.cols()), (dim_out, dim_in), "coefficient shape");
        }
        PolyOpFunction {
            dim_in,
            dim_out,
            coeffs,
            exact,
        }
    }

    /// Highest stored coefficient index.
    pub fn truncation_order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, p: usize) -> ComplexMatrix {
        self.coeffs
            .get(p)
            .cloned()
            .unwrap_or_else(|| ComplexMatrix::zeros(self.dim_out, self.dim_in))
    }

    /// Horner evaluation at z.
    pub fn eval(&self, z: C64) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.dim_out, self.dim_in);
        for c in self.coeffs.iter().rev() {
            acc = acc.scale(z).add(c);
        }
        acc
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.fro_norm()).fold(0.0, f64::max)
    }
}

/// Verdict of `poly_degree`: numerics can certify a degree but never
/// non-polynomiality, hence the second variant is not an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeVerdict {
    Degree(usize),
    NotPolynomialUpTo(usize),
}

/// Unitary identifications of domain and codomain under which two operator
/// functions are compared.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoincidenceCertificate {
    pub tau: ComplexMatrix,
    #[serde(rename = "tauStar")]
    pub tau_star: ComplexMatrix,
}

/// Default truncation order: twice the ambient dimension for dense
/// operators, nilpotency order plus five for structured ones.
pub fn default_p_max(op: &OperatorHandle) -> usize {
    match op {
        OperatorHandle::Dense(t) => 2 * t.dim().max(1),
        OperatorHandle::Structured(t) => t.order() + 5,
    }
}

/// Evaluate the characteristic function at a point of the open unit disk,
/// as a matrix from the D_T frame to the D_{T*} frame.
pub fn theta_eval(op: &OperatorHandle, z: C64) -> Result<ComplexMatrix> {
    if z.norm() >= 1.0 {
        return Err(Error::OutsideUnitDisk { modulus: z.norm() });
    }
    match op {
        OperatorHandle::Dense(t) => {
            let defect = t.defect(crate::linalg::RANK_TOL)?;
            theta_eval_dense_with_defect(t.matrix(), &defect, z)
        }
        OperatorHandle::Structured(t) => {
            let f = theta_coeffs_structured(t, t.order() + 5)?;
            Ok(f.eval(z))
        }
    }
}

/// Dense evaluation against caller-supplied defect data, so a factorization
/// context can keep every piece in one fixed pair of frames.
pub fn theta_eval_dense_with_defect(
    t: &ComplexMatrix,
    defect: &DefectData,
    z: C64,
) -> Result<ComplexMatrix> {
    if z.norm() >= 1.0 {
        return Err(Error::OutsideUnitDisk { modulus: z.norm() });
    }
    let n = t.rows();
    let f_t = defect.t_side.frame.vectors();
    let f_ts = defect.tstar_side.frame.vectors();
    // -T F + z D_{T*} (I - z T*)^{-1} D_T F
    let w = defect.t_side.d.mul(f_t);
    let resolvent_arg = ComplexMatrix::identity(n).sub(&t.adjoint().scale(z));
    let x = lu_solve(&resolvent_arg, &w)?;
    let m = t
        .mul(f_t)
        .scale(C64::new(-1.0, 0.0))
        .add(&defect.tstar_side.d.mul(&x).scale(z));
    Ok(f_ts.adjoint().mul(&m))
}

/// Taylor coefficients C_0 = -T compressed, C_{p+1} = D_{T*} T*^p D_T
/// compressed, up to index `p_max`.
pub fn theta_coeffs(op: &OperatorHandle, p_max: usize) -> Result<PolyOpFunction> {
    match op {
        OperatorHandle::Dense(t) => {
            let defect = t.defect(crate::linalg::RANK_TOL)?;
            Ok(theta_coeffs_dense_with_defect(t.matrix(), &defect, p_max))
        }
        OperatorHandle::Structured(t) => theta_coeffs_structured(t, p_max),
    }
}

/// Dense coefficient route against caller-supplied defect data.
pub fn theta_coeffs_dense_with_defect(
    t: &ComplexMatrix,
    defect: &DefectData,
    p_max: usize,
) -> PolyOpFunction {
    let f_t = defect.t_side.frame.vectors();
    let f_ts = defect.tstar_side.frame.vectors();
    let dim_in = defect.dim_t();
    let dim_out = defect.dim_tstar();
    let mut coeffs = Vec::with_capacity(p_max + 1);
    coeffs.push(f_ts.adjoint().mul(&t.mul(f_t)).scale(C64::new(-1.0, 0.0)));
    let dstar_f = defect.tstar_side.d.mul(f_ts); // (D_{T*} F_{T*}), Hermitian D
    let mut w = defect.t_side.d.mul(f_t); // T*^p D_T F, starting with p = 0
    let t_adj = t.adjoint();
    for _ in 0..p_max {
        coeffs.push(dstar_f.adjoint().mul(&w));
        w = t_adj.mul(&w);
    }
    PolyOpFunction::new(dim_in, dim_out, coeffs, false)
}

pub(crate) fn theta_coeffs_structured(
    t: &StructuredOperator,
    p_max: usize,
) -> Result<PolyOpFunction> {
    let defect = t.defect_data();
    let dim_in = defect.dim_t();
    let dim_out = defect.dim_tstar();
    let f_t = defect.t_side.frame.vectors();
    let f_ts = defect.tstar_side.frame.vectors();

    // C_0 = compression of -T
    let mut c0 = ComplexMatrix::zeros(dim_out, dim_in);
    let mut walkers = Vec::with_capacity(dim_in);
    for j in 0..dim_in {
        let fj = t.embed_t_support(&f_t.col(j));
        let tfj = t.apply(&fj)?;
        let coords = t.project_tstar_support(&tfj);
        let col = f_ts.adjoint_mul_vec(&coords);
        for i in 0..dim_out {
            c0[(i, j)] = -col[i];
        }
        walkers.push(t.apply_defect_t(&fj)); // D_T f_j, support block 0
    }
    let mut coeffs = vec![c0];
    let dstar = &defect.tstar_side.d;
    for _ in 0..p_max {
        let mut c = ComplexMatrix::zeros(dim_out, dim_in);
        for (j, w) in walkers.iter().enumerate() {
            let y = t.project_tstar_support(w);
            let col = f_ts.adjoint_mul_vec(&dstar.mul_vec(&y));
            for i in 0..dim_out {
                c[(i, j)] = col[i];
            }
        }
        coeffs.push(c);
        for w in walkers.iter_mut() {
            *w = t.apply_adjoint(w)?;
        }
    }

    // Exactness: the declared nilpotency order guarantees termination once
    // the trailing computed coefficients actually vanish.
    let order = t.order();
    let exact = p_max >= order + 2
        && coeffs
            .iter()
            .enumerate()
            .skip(order + 1)
            .all(|(_, c)| c.fro_norm() < 1e-10);
    Ok(PolyOpFunction::new(dim_in, dim_out, coeffs, exact))
}

/// Largest coefficient index above the relative tolerance. When the
/// function is not certified exact and its last computed coefficient is
/// still above tolerance, the verdict is "not polynomial up to here".
pub fn poly_degree(f: &PolyOpFunction, tol: f64) -> DegreeVerdict {
    let threshold = tol * (1.0 + f.max_coeff_norm());
    if !f.exact {
        if let Some(last) = f.coeffs.last() {
            if last.fro_norm() > threshold {
                return DegreeVerdict::NotPolynomialUpTo(f.truncation_order());
            }
        }
    }
    let mut degree = 0;
    for (p, c) in f.coeffs.iter().enumerate() {
        if c.fro_norm() > threshold {
            degree = p;
        }
    }
    DegreeVerdict::Degree(degree)
}

/// True when the characteristic function is purely contractive at the
/// origin: sigma_max(Theta(0)) < 1 - tol, vacuously true for empty defect
/// spaces.
pub fn purely_contractive(op: &OperatorHandle, tol: f64) -> Result<bool> {
    let theta0 = theta_eval(op, C64::new(0.0, 0.0))?;
    if theta0.is_empty_shape() {
        return Ok(true);
    }
    Ok(sigma_max(&theta0) < 1.0 - tol)
}

/// Residual of the coincidence identity f(z) = tauStar^{-1} g(z) tau, both
/// over the standard grid and coefficient by coefficient; returns the max.
pub fn verify_coincidence(
    f: &PolyOpFunction,
    g: &PolyOpFunction,
    cert: &CoincidenceCertificate,
) -> Result<f64> {
    for (name, u, from, to) in [
        ("tau", &cert.tau, f.dim_in, g.dim_in),
        ("tauStar", &cert.tau_star, f.dim_out, g.dim_out),
    ] {
        if u.rows() != to || u.cols() != from {
            return Err(Error::DimensionMismatch {
                what: format!("certificate {name}"),
                expected: to * from,
                got: u.rows() * u.cols(),
            });
        }
        if !u.is_square() {
            return Err(Error::BadCertificate {
                defect: f64::INFINITY,
            });
        }
        let defect = if u.rows() == 0 {
            0.0
        } else {
            u.adjoint().mul(u).identity_defect()
        };
        if defect > 1e-9 {
            return Err(Error::BadCertificate { defect });
        }
    }
    let tau_star_inv = cert.tau_star.adjoint();
    let mut residual: f64 = 0.0;
    for z in standard_grid() {
        let lhs = f.eval(z);
        let rhs = tau_star_inv.mul(&g.eval(z)).mul(&cert.tau);
        residual = residual.max(lhs.sub(&rhs).fro_norm());
    }
    let terms = f.coeffs.len().max(g.coeffs.len());
    for p in 0..terms {
        let lhs = f.coeff(p);
        let rhs = tau_star_inv.mul(&g.coeff(p)).mul(&cert.tau);
        residual = residual.max(lhs.sub(&rhs).fro_norm());
    }
    Ok(residual)
}
