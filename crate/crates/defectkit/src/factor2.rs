//! The 2x2 block machinery.
//!
//! A block upper-triangular operator [T1 X; 0 T2] is a contraction exactly
//! when T1, T2 are contractions and the coupling has the defect-compressed
//! form X = D_{T1*} Gamma D_{T2} for a contraction Gamma from the defect
//! space of T2 into the adjoint defect space of T1 (that direction makes
//! every composition below type-check). The characteristic function of the
//! block then factors as
//!
//! ```text
//!   Theta_T(z) = tauStar^{-1} [Theta_{T2}(z)  0; 0  I] J[Gamma]
//!                [Theta_{T1}(z)  0; 0  I] tau
//! ```
//!
//! with `J[Gamma]` the Halmos unitary of the coupling parameter and tau,
//! tauStar unitary identifications of the defect spaces of T with
//! D_{T1} + D_Gamma and D_{T2*} + D_{Gamma*}. The tau actions used here are
//!
//! ```text
//!   tau     D_T (h1 + h2) = (D_{T1} h1 - T1* Gamma D_{T2} h2) + D_Gamma D_{T2} h2,
//!   tauStar D_{T*}(h1 + h2) = (D_{T2*} h2 - T2 Gamma* D_{T1*} h1) + D_{Gamma*} D_{T1*} h1,
//! ```
//!
//! and the defining norm identity behind them is asserted on random vectors
//! every time the pair is built: a wrong formula cannot pass silently.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::charfun::{standard_grid, theta_eval_dense_with_defect};
use crate::error::{Error, Result};
use crate::linalg::{clamp_singular_to_one, classify, pinv, CLASSIFY_TOL, RANK_TOL};
use crate::matrix::{vec_norm, ComplexMatrix};
use crate::models::SplitMix64;
use crate::operators::{defect_side_from_gram, DefectData, DefectSide, DenseContraction};

/// Acceptance bound for all factorization residuals.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Max-entry deviation of a square matrix from unitarity, both sides.
pub fn unitarity_defect(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    if m.rows() == 0 {
        return 0.0;
    }
    m.adjoint()
        .mul(m)
        .identity_defect()
        .max(m.mul(&m.adjoint()).identity_defect())
}

fn ensure_unitary(what: &str, m: &ComplexMatrix) -> Result<()> {
    let defect = unitarity_defect(m);
    if defect > 1e-9 {
        return Err(Error::NotUnitary {
            what: what.into(),
            defect,
        });
    }
    Ok(())
}

/// A contraction between two defect spaces together with its own defect
/// data, everything in frame coordinates.
#[derive(Debug, Clone)]
pub struct GammaDefect {
    pub gamma: ComplexMatrix,
    /// defect side of I - Gamma^H Gamma, on domain coordinates
    pub side: DefectSide,
    /// defect side of I - Gamma Gamma^H, on codomain coordinates
    pub side_star: DefectSide,
}

impl GammaDefect {
    pub fn new(gamma: ComplexMatrix) -> Result<GammaDefect> {
        let cl = classify(&gamma, CLASSIFY_TOL);
        if !cl.is_contraction {
            return Err(Error::NotAContraction {
                detail: format!("coupling parameter has sigma_max = {:.12}", cl.sigma_max),
            });
        }
        let gamma = clamp_singular_to_one(&gamma, CLASSIFY_TOL);
        let dom = gamma.cols();
        let cod = gamma.rows();
        let gram = ComplexMatrix::identity(dom).sub(&gamma.adjoint().mul(&gamma));
        let gram_star = ComplexMatrix::identity(cod).sub(&gamma.mul(&gamma.adjoint()));
        Ok(GammaDefect {
            side: defect_side_from_gram(&gram, RANK_TOL)?,
            side_star: defect_side_from_gram(&gram_star, RANK_TOL)?,
            gamma,
        })
    }

    pub fn dim(&self) -> usize {
        self.side.dim()
    }

    pub fn dim_star(&self) -> usize {
        self.side_star.dim()
    }

    /// Halmos unitary `J[Gamma] = [Gamma* D_Gamma; D_{Gamma*} -Gamma]` in
    /// frame coordinates, mapping (codomain defect + D_Gamma) to
    /// (domain defect + D_{Gamma*}).
    pub fn halmos(&self) -> ComplexMatrix {
        let g = &self.gamma;
        let g_frame = self.side.frame.vectors();
        let gs_frame = self.side_star.frame.vectors();
        ComplexMatrix::block2x2(
            &g.adjoint(),
            &self.side.d.mul(g_frame),
            &gs_frame.adjoint().mul(&self.side_star.d),
            &gs_frame
                .adjoint()
                .mul(g)
                .mul(g_frame)
                .scale(C64::new(-1.0, 0.0)),
        )
    }
}

/// Halmos unitary of a contraction matrix, verified unitary within 1e-9.
pub fn halmos(gamma: &ComplexMatrix) -> Result<ComplexMatrix> {
    let gd = GammaDefect::new(gamma.clone())?;
    let j = gd.halmos();
    ensure_unitary("J[Gamma]", &j)?;
    Ok(j)
}

/// Upper-triangular 2x2 block contraction with every piece of defect data
/// the factorization needs, all in one consistent set of frames.
#[derive(Debug, Clone)]
pub struct Block2 {
    pub t1: ComplexMatrix,
    pub t2: ComplexMatrix,
    pub x: ComplexMatrix,
    pub t: ComplexMatrix,
    pub defect_t1: DefectData,
    pub defect_t2: DefectData,
    pub defect_t: DefectData,
    pub gamma: GammaDefect,
}

/// Extract the coupling parameter from X = D_{T1*} Gamma D_{T2}, in frame
/// coordinates. Acceptance requires the reconstruction to land back on X
/// and the parameter norm to stay below one (singular values within `tol`
/// above one are clamped); by the classification of block contractions this
/// is exactly the contractivity of [T1 X; 0 T2], which is also checked
/// independently.
pub fn extract_gamma(
    t1: &ComplexMatrix,
    t2: &ComplexMatrix,
    x: &ComplexMatrix,
    tol: f64,
) -> Result<ComplexMatrix> {
    Ok(Block2::from_parts(t1.clone(), t2.clone(), x.clone(), tol)?
        .gamma
        .gamma)
}

impl Block2 {
    pub fn from_parts(
        t1: ComplexMatrix,
        t2: ComplexMatrix,
        x: ComplexMatrix,
        tol: f64,
    ) -> Result<Block2> {
        let (n1, n2) = (t1.rows(), t2.rows());
        if x.rows() != n1 || x.cols() != n2 {
            return Err(Error::DimensionMismatch {
                what: "coupling block".into(),
                expected: n1 * n2,
                got: x.rows() * x.cols(),
            });
        }
        let defect_t1 = DenseContraction::new(t1.clone())?.defect(RANK_TOL)?;
        let defect_t2 = DenseContraction::new(t2.clone())?.defect(RANK_TOL)?;

        let gamma_amb = pinv(&defect_t1.tstar_side.d, RANK_TOL)
            .mul(&x)
            .mul(&pinv(&defect_t2.t_side.d, RANK_TOL));
        let gamma = defect_t1
            .tstar_side
            .frame
            .vectors()
            .adjoint()
            .mul(&gamma_amb)
            .mul(defect_t2.t_side.frame.vectors());

        let cl = classify(&gamma, tol);
        let rec = defect_t1
            .tstar_side
            .d
            .mul(defect_t1.tstar_side.frame.vectors())
            .mul(&gamma)
            .mul(&defect_t2.t_side.frame.vectors().adjoint())
            .mul(&defect_t2.t_side.d);
        let residual = rec.sub(&x).fro_norm();
        if residual > tol * (1.0 + x.fro_norm()) || !cl.is_contraction {
            return Err(Error::GammaReconstruction {
                residual,
                gamma_norm: cl.sigma_max,
            });
        }

        let t = ComplexMatrix::block2x2(&t1, &x, &ComplexMatrix::zeros(n2, n1), &t2);
        let tcl = classify(&t, CLASSIFY_TOL);
        if !tcl.is_contraction {
            return Err(Error::NotAContraction {
                detail: format!(
                    "assembled block matrix has sigma_max = {:.12} despite accepted coupling",
                    tcl.sigma_max
                ),
            });
        }
        let defect_t = DenseContraction::new(t.clone())?.defect(RANK_TOL)?;
        let gamma = GammaDefect::new(gamma)?;
        Ok(Block2 {
            t1,
            t2,
            x,
            t,
            defect_t1,
            defect_t2,
            defect_t,
            gamma,
        })
    }

    /// Build the block from a coupling parameter in frame coordinates.
    pub fn from_gamma(
        t1: ComplexMatrix,
        t2: ComplexMatrix,
        gamma: &ComplexMatrix,
    ) -> Result<Block2> {
        let defect_t1 = DenseContraction::new(t1.clone())?.defect(RANK_TOL)?;
        let defect_t2 = DenseContraction::new(t2.clone())?.defect(RANK_TOL)?;
        if gamma.rows() != defect_t1.dim_tstar() || gamma.cols() != defect_t2.dim_t() {
            return Err(Error::DimensionMismatch {
                what: format!(
                    "gamma must be {} x {}",
                    defect_t1.dim_tstar(),
                    defect_t2.dim_t()
                ),
                expected: defect_t1.dim_tstar() * defect_t2.dim_t(),
                got: gamma.rows() * gamma.cols(),
            });
        }
        let x = defect_t1
            .tstar_side
            .d
            .mul(defect_t1.tstar_side.frame.vectors())
            .mul(gamma)
            .mul(&defect_t2.t_side.frame.vectors().adjoint())
            .mul(&defect_t2.t_side.d);
        Block2::from_parts(t1, t2, x, 1e-9)
    }

    fn split(&self) -> (usize, usize) {
        (self.t1.rows(), self.t2.rows())
    }
}

/// Unitaries tau : D_T -> D_{T1} + D_Gamma and tauStar : D_{T*} ->
/// D_{T2*} + D_{Gamma*}, built by applying the defining actions to
/// preimages of the defect frame vectors and re-expressing in frame
/// coordinates. The defining norm identity is asserted on seeded random
/// vectors before anything is accepted.
pub fn build_tau_pair(block: &Block2) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let (n1, n2) = block.split();
    let n = n1 + n2;
    let gamma_amb = block
        .defect_t1
        .tstar_side
        .frame
        .vectors()
        .mul(&block.gamma.gamma)
        .mul(&block.defect_t2.t_side.frame.vectors().adjoint());

    // tau: preimages under D_T of the D_T frame
    let d_t = &block.defect_t.t_side;
    let h = pinv(&d_t.d, RANK_TOL).mul(d_t.frame.vectors());
    let h1 = h.submatrix(0, n1, 0, h.cols());
    let h2 = h.submatrix(n1, n, 0, h.cols());
    let d2h2 = block.defect_t2.t_side.d.mul(&h2);
    let comp1 = block.defect_t1.t_side.frame.vectors().adjoint().mul(
        &block
            .defect_t1
            .t_side
            .d
            .mul(&h1)
            .sub(&block.t1.adjoint().mul(&gamma_amb).mul(&d2h2)),
    );
    let comp2 = block.gamma.side.frame.vectors().adjoint().mul(
        &block
            .gamma
            .side
            .d
            .mul(&block.defect_t2.t_side.frame.vectors().adjoint().mul(&d2h2)),
    );
    let tau = comp1.vcat(&comp2);

    // tauStar: preimages under D_{T*} of the D_{T*} frame
    let d_ts = &block.defect_t.tstar_side;
    let hs = pinv(&d_ts.d, RANK_TOL).mul(d_ts.frame.vectors());
    let hs1 = hs.submatrix(0, n1, 0, hs.cols());
    let hs2 = hs.submatrix(n1, n, 0, hs.cols());
    let d1shs1 = block.defect_t1.tstar_side.d.mul(&hs1);
    let comp1s = block.defect_t2.tstar_side.frame.vectors().adjoint().mul(
        &block
            .defect_t2
            .tstar_side
            .d
            .mul(&hs2)
            .sub(&block.t2.mul(&gamma_amb.adjoint()).mul(&d1shs1)),
    );
    let comp2s = block.gamma.side_star.frame.vectors().adjoint().mul(
        &block.gamma.side_star.d.mul(
            &block
                .defect_t1
                .tstar_side
                .frame
                .vectors()
                .adjoint()
                .mul(&d1shs1),
        ),
    );
    let tau_star = comp1s.vcat(&comp2s);

    // Mandatory runtime oracle: the defining norm identities on random
    // vectors. Failure signals an implementation bug or an invariant breach
    // upstream; fail loudly, no repair.
    let mut rng = SplitMix64::new(0x7A05_EED5);
    for _ in 0..6 {
        let hv: Vec<C64> = (0..n).map(|_| rng.next_complex_gaussian()).collect();
        let (h1v, h2v) = (hv[..n1].to_vec(), hv[n1..].to_vec());
        let lhs = vec_norm(&d_t.d.mul_vec(&hv)).powi(2);
        let a = {
            let d2h = block.defect_t2.t_side.d.mul_vec(&h2v);
            let term = block.t1.adjoint_mul_vec(&gamma_amb.mul_vec(&d2h));
            let first: Vec<C64> = block
                .defect_t1
                .t_side
                .d
                .mul_vec(&h1v)
                .iter()
                .zip(&term)
                .map(|(x, y)| x - y)
                .collect();
            let second = block
                .gamma
                .side
                .d
                .mul_vec(&block.defect_t2.t_side.frame.vectors().adjoint_mul_vec(&d2h));
            vec_norm(&first).powi(2) + vec_norm(&second).powi(2)
        };
        if (lhs - a).abs() > 1e-8 * (1.0 + lhs) {
            return Err(Error::NormIdentityViolation {
                residual: (lhs - a).abs(),
            });
        }
    }

    // Unitarity forces the dimension equalities.
    if tau.rows() != tau.cols() {
        return Err(Error::DimensionMismatch {
            what: "dim D_T vs dim D_T1 + dim D_Gamma".into(),
            expected: tau.cols(),
            got: tau.rows(),
        });
    }
    if tau_star.rows() != tau_star.cols() {
        return Err(Error::DimensionMismatch {
            what: "dim D_T* vs dim D_T2* + dim D_Gamma*".into(),
            expected: tau_star.cols(),
            got: tau_star.rows(),
        });
    }
    ensure_unitary("tau", &tau)?;
    ensure_unitary("tauStar", &tau_star)?;
    Ok((tau, tau_star))
}

/// Dimensions reported with a 2x2 factorization bundle.
#[derive(Debug, Clone, Serialize)]
pub struct Factor2Dims {
    #[serde(rename = "dimT")]
    pub dim_t: usize,
    #[serde(rename = "dimTstar")]
    pub dim_tstar: usize,
    #[serde(rename = "dimT1")]
    pub dim_t1: usize,
    #[serde(rename = "dimT1star")]
    pub dim_t1star: usize,
    #[serde(rename = "dimT2")]
    pub dim_t2: usize,
    #[serde(rename = "dimT2star")]
    pub dim_t2star: usize,
    #[serde(rename = "dimGamma")]
    pub dim_gamma: usize,
    #[serde(rename = "dimGammaStar")]
    pub dim_gamma_star: usize,
}

/// The verified 2x2 factorization: Halmos unitary, the tau pair, and the
/// max residual of the identity over the standard grid.
#[derive(Debug, Clone, Serialize)]
pub struct Factorization2 {
    #[serde(rename = "J")]
    pub j: ComplexMatrix,
    pub tau: ComplexMatrix,
    #[serde(rename = "tauStar")]
    pub tau_star: ComplexMatrix,
    pub residual: f64,
    pub dims: Factor2Dims,
}

/// Assemble the right-hand side of the factorization at every grid point
/// and return the bundle with the max deviation from Theta_T. The residual
/// is reported, not enforced; callers hold it against `RESIDUAL_TOL`.
pub fn verify_factor2(block: &Block2) -> Result<Factorization2> {
    let (tau, tau_star) = build_tau_pair(block)?;
    let j = block.gamma.halmos();
    ensure_unitary("J[Gamma]", &j)?;

    let tau_star_inv = tau_star.adjoint();
    let mut residual: f64 = 0.0;
    for z in standard_grid() {
        let lhs = theta_eval_dense_with_defect(&block.t, &block.defect_t, z)?;
        let th1 = theta_eval_dense_with_defect(&block.t1, &block.defect_t1, z)?;
        let th2 = theta_eval_dense_with_defect(&block.t2, &block.defect_t2, z)?;
        let rhs = tau_star_inv
            .mul(&th2.pad_identity(block.gamma.dim_star()))
            .mul(&j)
            .mul(&th1.pad_identity(block.gamma.dim()))
            .mul(&tau);
        residual = residual.max(lhs.sub(&rhs).fro_norm());
    }
    Ok(Factorization2 {
        j,
        tau,
        tau_star,
        residual,
        dims: Factor2Dims {
            dim_t: block.defect_t.dim_t(),
            dim_tstar: block.defect_t.dim_tstar(),
            dim_t1: block.defect_t1.dim_t(),
            dim_t1star: block.defect_t1.dim_tstar(),
            dim_t2: block.defect_t2.dim_t(),
            dim_t2star: block.defect_t2.dim_tstar(),
            dim_gamma: block.gamma.dim(),
            dim_gamma_star: block.gamma.dim_star(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn halmos_examples() {
        let j = halmos(&ComplexMatrix::zeros(1, 1)).unwrap();
        assert!(
            j.sub(&ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]))
                .fro_norm()
                < 1e-12
        );

        let j = halmos(&ComplexMatrix::from_real_diag(&[0.6])).unwrap();
        let want = ComplexMatrix::from_real_rows(&[&[0.6, 0.8], &[0.8, -0.6]]);
        assert!(j.sub(&want).fro_norm() < 1e-12);

        // unitary coupling: defect blocks are empty and J = Gamma^H
        let u = models::random_unitary(3, 3);
        let j = halmos(&u).unwrap();
        assert_eq!((j.rows(), j.cols()), (3, 3));
        assert!(j.sub(&u.adjoint()).fro_norm() < 1e-9);
    }

    #[test]
    fn halmos_unitary_population() {
        for seed in 0..200u64 {
            let rows = 1 + (seed as usize % 8);
            let cols = 1 + ((seed / 8) as usize % 8);
            let mut rng = models::SplitMix64::new(seed);
            let g = models::random_contraction_shaped(&mut rng, rows, cols, 0.05);
            let j = halmos(&g).unwrap();
            assert!(unitarity_defect(&j) < 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn extract_gamma_zero_blocks() {
        // T1 = T2 = 0: defect operators are identities, so Gamma = X
        let x = models::random_contraction(3, 4, 0.2);
        let g = extract_gamma(
            &ComplexMatrix::zeros(3, 3),
            &ComplexMatrix::zeros(3, 3),
            &x,
            1e-9,
        )
        .unwrap();
        // frames are eigenvector bases of the identity = standard basis
        assert!(g.sub(&x).fro_norm() < 1e-10);

        // and a coupling of norm > 1 must be rejected
        let too_big = x.scale(c(1.5, 0.0));
        assert!(extract_gamma(
            &ComplexMatrix::zeros(3, 3),
            &ComplexMatrix::zeros(3, 3),
            &too_big,
            1e-9
        )
        .is_err());
    }

    #[test]
    fn extract_gamma_jordan_rank_one() {
        // T1 = T2 = Jordan, X = e2 e1^H: D_{T1*} = proj e2, D_{T2} = proj e1,
        // so Gamma = [1] and the 4x4 block has norm exactly 1.
        let n = models::jordan_nilpotent(2, 1.0);
        let x = ComplexMatrix::from_fn(2, 2, |i, j| {
            if (i, j) == (1, 0) {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let block = Block2::from_parts(n.clone(), n.clone(), x, 1e-9).unwrap();
        assert_eq!((block.gamma.gamma.rows(), block.gamma.gamma.cols()), (1, 1));
        assert!((block.gamma.gamma[(0, 0)].norm() - 1.0).abs() < 1e-10);
        let smax = crate::linalg::sigma_max(&block.t);
        assert!((smax - 1.0).abs() < 1e-10);
    }

    #[test]
    fn extract_gamma_rejects_off_range_coupling() {
        // X = e1 e1^H against Jordan T1: D_{T1*} X != X, not representable
        let n = models::jordan_nilpotent(2, 1.0);
        let x = ComplexMatrix::from_fn(2, 2, |i, j| {
            if (i, j) == (0, 0) {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        match Block2::from_parts(n.clone(), n, x, 1e-9) {
            Err(Error::GammaReconstruction { residual, .. }) => assert!(residual > 0.5),
            other => panic!("expected reconstruction failure, got {other:?}"),
        }
    }

    #[test]
    fn tau_pair_scalar_instance() {
        // hand-checked instance: T1 = T2 = [0], Gamma = [0.6]
        let block = Block2::from_gamma(
            ComplexMatrix::zeros(1, 1),
            ComplexMatrix::zeros(1, 1),
            &ComplexMatrix::from_real_diag(&[0.6]),
        )
        .unwrap();
        assert!((block.x[(0, 0)] - c(0.6, 0.0)).norm() < 1e-14);
        let f = verify_factor2(&block).unwrap();
        assert!(f.residual < 1e-10, "residual {}", f.residual);
        assert_eq!((f.tau.rows(), f.tau_star.rows()), (2, 2));
    }

    #[test]
    fn tau_pair_zero_coupling_is_permutation_style() {
        let t1 = models::random_contraction(2, 31, 0.2);
        let t2 = models::random_contraction(2, 32, 0.2);
        let block = Block2::from_parts(t1, t2, ComplexMatrix::zeros(2, 2), 1e-9).unwrap();
        let f = verify_factor2(&block).unwrap();
        assert!(f.residual < 1e-10, "residual {}", f.residual);
    }

    #[test]
    fn tau_pair_unitary_block_all_spaces_empty() {
        let u = models::random_unitary(1, 41);
        let v = models::random_unitary(1, 42);
        let block = Block2::from_parts(u, v, ComplexMatrix::zeros(1, 1), 1e-9).unwrap();
        let (tau, tau_star) = build_tau_pair(&block).unwrap();
        assert!(tau.is_empty_shape() && tau.is_square());
        assert!(tau_star.is_empty_shape() && tau_star.is_square());
        let f = verify_factor2(&block).unwrap();
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn factor2_jordan_blocks_seed3() {
        let mut rng = models::SplitMix64::new(3);
        let n = models::jordan_nilpotent(2, 1.0);
        let gamma = models::random_contraction_shaped(&mut rng, 1, 1, 0.1);
        let block = Block2::from_gamma(n.clone(), n, &gamma).unwrap();
        let f = verify_factor2(&block).unwrap();
        assert!(f.residual < 1e-9, "residual {}", f.residual);
        assert!(unitarity_defect(&f.tau) < 1e-9);
        assert!(unitarity_defect(&f.tau_star) < 1e-9);
    }

    #[test]
    fn factor2_population_and_duality() {
        for seed in 0..25u64 {
            let mut rng = models::SplitMix64::new(seed.wrapping_mul(0x9E37));
            let n1 = 1 + (rng.next_u64() % 4) as usize;
            let n2 = 1 + (rng.next_u64() % 4) as usize;
            let margin = 0.1 + 0.2 * rng.next_f64();
            let t1 = models::random_contraction_shaped(&mut rng, n1, n1, margin);
            let t2 = models::random_contraction_shaped(&mut rng, n2, n2, margin);
            let d1 = DenseContraction::new(t1.clone())
                .unwrap()
                .defect(RANK_TOL)
                .unwrap();
            let d2 = DenseContraction::new(t2.clone())
                .unwrap()
                .defect(RANK_TOL)
                .unwrap();
            let gamma =
                models::random_contraction_shaped(&mut rng, d1.dim_tstar(), d2.dim_t(), margin);
            let block = Block2::from_gamma(t1, t2, &gamma).unwrap();
            let f = verify_factor2(&block).unwrap();
            assert!(f.residual < 1e-9, "seed {seed} residual {}", f.residual);
            assert_eq!(f.dims.dim_t, f.dims.dim_t1 + f.dims.dim_gamma);
            assert_eq!(f.dims.dim_tstar, f.dims.dim_t2star + f.dims.dim_gamma_star);

            // duality: the adjoint arrangement [T2* X*; 0 T1*] factors too
            let dual = Block2::from_parts(
                block.t2.adjoint(),
                block.t1.adjoint(),
                block.x.adjoint(),
                1e-9,
            )
            .unwrap();
            let fd = verify_factor2(&dual).unwrap();
            assert!(
                fd.residual < 1e-9,
                "seed {seed} dual residual {}",
                fd.residual
            );
        }
    }

    #[test]
    fn factor2_json_bundle_shape() {
        let block = Block2::from_gamma(
            ComplexMatrix::zeros(1, 1),
            ComplexMatrix::zeros(1, 1),
            &ComplexMatrix::from_real_diag(&[0.6]),
        )
        .unwrap();
        let f = verify_factor2(&block).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        for key in [
            "\"J\":",
            "\"tau\":",
            "\"tauStar\":",
            "\"residual\":",
            "\"dims\":",
        ] {
            assert!(s.contains(key), "missing {key} in {s}");
        }
    }
}
