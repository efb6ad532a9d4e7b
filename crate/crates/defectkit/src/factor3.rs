//! The 3x3 factorization and its isometry/coisometry specializations.
//!
//! A block upper-triangular contraction with three diagonal blocks is
//! grouped top-first: T1 = [S X; 0 N] and T = [T1 X1; 0 C]. Applying the
//! 2x2 factorization twice and regrouping the padded factors gives
//!
//! ```text
//!   Theta_T(z) = tau1Star^{-1} [Theta_C  0; 0  I_{E1}] U1
//!                [Theta_N  0; 0  I_M] U2 [Theta_S  0; 0  I_{E2}] tauTilde1
//! ```
//!
//! with `U1 = J[Gamma1] (tauStar^{-1} + I)`, `U2 = J[Gamma] + I`, and the
//! auxiliary spaces E1 = D_{Gamma1*}, M = D_{Gamma*} + D_{Gamma1},
//! E2 = D_Gamma + D_{Gamma1}.
//!
//! When the outer blocks are an exact shift and an exact backward shift
//! (structured operators), Theta_S and Theta_C are the zero functions with
//! an empty-dimension side, the outer paddings collapse to a coisometry V1
//! and an isometry V2, and the identity becomes
//! Theta_T = V1 [Theta_N 0; 0 I_M] V2 with Theta_N a polynomial of the
//! nilpotency order. The alternative decomposition regroups bottom-first
//! (T_{-1} = [N E; 0 C] inside [S X_{-1}; 0 T_{-1}]); it produces its own
//! middle space whose dimension is reported next to the main one, with no
//! equality claim either way.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::charfun::{
    poly_degree, standard_grid, theta_coeffs_dense_with_defect, theta_coeffs_structured,
    theta_eval_dense_with_defect, DegreeVerdict, PolyOpFunction,
};
use crate::error::{Error, Result};
use crate::factor2::{build_tau_pair, unitarity_defect, Block2, GammaDefect, RESIDUAL_TOL};
use crate::linalg::{classify, pinv, CLASSIFY_TOL, RANK_TOL};
use crate::matrix::ComplexMatrix;
use crate::operators::{defect_side_from_gram, DefectData, StructuredOperator};

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

fn coisometry_defect(m: &ComplexMatrix) -> f64 {
    if m.rows() == 0 {
        return 0.0;
    }
    m.mul(&m.adjoint()).identity_defect()
}

fn isometry_defect(m: &ComplexMatrix) -> f64 {
    if m.cols() == 0 {
        return 0.0;
    }
    m.adjoint().mul(m).identity_defect()
}

/// Dense block upper-triangular contraction with a declared 3-way split.
#[derive(Debug, Clone)]
pub struct Block3 {
    pub t: ComplexMatrix,
    pub split: (usize, usize, usize),
}

impl Block3 {
    /// Validates the split sizes and the triangularity: entries below the
    /// block diagonal must vanish within 1e-12.
    pub fn new(t: ComplexMatrix, split: (usize, usize, usize)) -> Result<Block3> {
        let (n1, n0, nm1) = split;
        let n = n1 + n0 + nm1;
        if t.rows() != n || t.cols() != n {
            return Err(Error::DimensionMismatch {
                what: "matrix vs split sizes".into(),
                expected: n,
                got: t.rows(),
            });
        }
        let mut below: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let block_row = if i < n1 {
                    0
                } else if i < n1 + n0 {
                    1
                } else {
                    2
                };
                let block_col = if j < n1 {
                    0
                } else if j < n1 + n0 {
                    1
                } else {
                    2
                };
                if block_row > block_col {
                    below = below.max(t[(i, j)].norm());
                }
            }
        }
        if below > 1e-12 {
            return Err(Error::NonTriangular { below });
        }
        Ok(Block3 { t, split })
    }
}

/// Space dimensions attached to a 3x3 factorization.
#[derive(Debug, Clone, Serialize)]
pub struct Factor3Dims {
    #[serde(rename = "E1")]
    pub e1: usize,
    #[serde(rename = "E2")]
    pub e2: usize,
    #[serde(rename = "M")]
    pub m: usize,
}

/// The verified 3x3 factorization bundle.
#[derive(Debug, Clone, Serialize)]
pub struct Factorization3 {
    #[serde(rename = "Gamma")]
    pub gamma: ComplexMatrix,
    #[serde(rename = "Gamma1")]
    pub gamma1: ComplexMatrix,
    #[serde(rename = "U1")]
    pub u1: ComplexMatrix,
    #[serde(rename = "U2")]
    pub u2: ComplexMatrix,
    #[serde(rename = "tau1Star")]
    pub tau1_star: ComplexMatrix,
    #[serde(rename = "tauTilde1")]
    pub tau_tilde1: ComplexMatrix,
    pub dims: Factor3Dims,
    pub residual: f64,
}

/// Factor the characteristic function of a dense triangular 3x3 block
/// contraction through its diagonal blocks, verifying the identity on the
/// standard grid. The residual is reported; acceptance holds it against
/// `RESIDUAL_TOL`.
pub fn factorize3(block: &Block3) -> Result<Factorization3> {
    let (n1, n0, nm1) = block.split;
    let k1 = n1 + n0;
    let n = k1 + nm1;
    let t = &block.t;

    let s = t.submatrix(0, n1, 0, n1);
    let nn = t.submatrix(n1, k1, n1, k1);
    let c = t.submatrix(k1, n, k1, n);
    let x = t.submatrix(0, n1, n1, k1);
    let x1 = t.submatrix(0, k1, k1, n);

    // top grouping first: T1 = [S X; 0 N], then T = [T1 X1; 0 C]
    let inner = Block2::from_parts(s, nn, x, 1e-9)?;
    let outer = Block2::from_parts(inner.t.clone(), c, x1, 1e-9)?;

    let (tau, tau_star) = build_tau_pair(&inner)?;
    let (tau1, tau1_star) = build_tau_pair(&outer)?;

    let dim_g = inner.gamma.dim();
    let dim_gs = inner.gamma.dim_star();
    let dim_g1 = outer.gamma.dim();
    let dim_g1s = outer.gamma.dim_star();

    let u1 = outer
        .gamma
        .halmos()
        .mul(&tau_star.adjoint().pad_identity(dim_g1));
    let u2 = inner.gamma.halmos().pad_identity(dim_g1);
    let tau_tilde1 = tau.pad_identity(dim_g1).mul(&tau1);
    ensure_unitary("U1", &u1)?;
    ensure_unitary("U2", &u2)?;
    ensure_unitary("tauTilde1", &tau_tilde1)?;

    let tau1_star_inv = tau1_star.adjoint();
    let mut residual: f64 = 0.0;
    for z in standard_grid() {
        let lhs = theta_eval_dense_with_defect(&outer.t, &outer.defect_t, z)?;
        let th_s = theta_eval_dense_with_defect(&inner.t1, &inner.defect_t1, z)?;
        let th_n = theta_eval_dense_with_defect(&inner.t2, &inner.defect_t2, z)?;
        let th_c = theta_eval_dense_with_defect(&outer.t2, &outer.defect_t2, z)?;
        let rhs = tau1_star_inv
            .mul(&th_c.pad_identity(dim_g1s))
            .mul(&u1)
            .mul(&th_n.pad_identity(dim_gs + dim_g1))
            .mul(&u2)
            .mul(&th_s.pad_identity(dim_g + dim_g1))
            .mul(&tau_tilde1);
        residual = residual.max(lhs.sub(&rhs).fro_norm());
    }

    Ok(Factorization3 {
        gamma: inner.gamma.gamma.clone(),
        gamma1: outer.gamma.gamma.clone(),
        u1,
        u2,
        tau1_star,
        tau_tilde1,
        dims: Factor3Dims {
            e1: dim_g1s,
            e2: dim_g + dim_g1,
            m: dim_gs + dim_g1,
        },
        residual,
    })
}

// ---------------------------------------------------------------------------
// structured path
// ---------------------------------------------------------------------------

/// All tau unitaries of the main (top-first) grouping of a structured
/// operator, as finite matrices between defect frames. The shift defect
/// space is zero, so tau : D_{T1} -> D_Gamma and tau1Star : D_{T*} ->
/// D_{Gamma1*} lose their empty first summands.
struct StructuredCtx<'a> {
    op: &'a StructuredOperator,
    gamma: GammaDefect,
    gamma1: GammaDefect,
    tau: ComplexMatrix,
    tau_star: ComplexMatrix,
    tau1: ComplexMatrix,
    tau1_star: ComplexMatrix,
}

fn build_structured_ctx(op: &StructuredOperator) -> Result<StructuredCtx<'_>> {
    let sp = op.space();
    let (d1, n0, d3) = (sp.d1, sp.n0, sp.d3);
    let dn = op.defect_n();
    let dt1 = op.defect_t1();
    let dt = op.defect_data();
    let gamma = GammaDefect::new(op.gamma().clone())?;
    let gamma1 = GammaDefect::new(op.gamma1().clone())?;

    let f_n = dn.t_side.frame.vectors();
    let f_ns = dn.tstar_side.frame.vectors();

    // tau: D_{T1} -> D_Gamma,  f |-> G^H D_Gamma (F_N^H D_N (f / sqrt(eig)))
    let tau = gamma
        .side
        .frame
        .vectors()
        .adjoint()
        .mul(&gamma.side.d)
        .mul(&f_n.adjoint())
        .mul(&dn.t_side.d)
        .mul(&dt1.t_side.frame_preimages());

    // tauStar: D_{T1*} -> D_{N*} + D_{Gamma*}
    let pre1s = dt1.tstar_side.frame_preimages(); // (d1+n0) x dim
    let pre_u = pre1s.submatrix(0, d1, 0, pre1s.cols());
    let pre_v = pre1s.submatrix(d1, d1 + n0, 0, pre1s.cols());
    let comp_ns = f_ns.adjoint().mul(
        &dn.tstar_side.d.mul(&pre_v).sub(
            &op.nilpotent()
                .mul(f_n)
                .mul(&gamma.gamma.adjoint())
                .mul(&pre_u),
        ),
    );
    let comp_gs = gamma
        .side_star
        .frame
        .vectors()
        .adjoint()
        .mul(&gamma.side_star.d)
        .mul(&pre_u);
    let tau_star = comp_ns.vcat(&comp_gs);

    // tau1: D_T -> D_{T1} + D_{Gamma1}
    let pre = dt.t_side.frame_preimages(); // (n0+d3) x dimT
    let pre_mid = pre.submatrix(0, n0, 0, pre.cols());
    let pre_back = pre.submatrix(n0, n0 + d3, 0, pre.cols());
    // W = mid-component of T1* applied to the ambient Gamma1 = F_{T1*} Gamma1
    let g1_amb = dt1.tstar_side.frame.vectors().mul(&gamma1.gamma); // (d1+n0) x d3
    let w = op
        .couplings()
        .xm
        .adjoint()
        .mul(&g1_amb.submatrix(0, d1, 0, d3))
        .add(
            &op.nilpotent()
                .adjoint()
                .mul(&g1_amb.submatrix(d1, d1 + n0, 0, d3)),
        );
    let comp_t1 = dt1
        .t_side
        .frame
        .vectors()
        .adjoint()
        .mul(&dt1.t_side.d.mul(&pre_mid).sub(&w.mul(&pre_back)));
    let comp_g1 = gamma1
        .side
        .frame
        .vectors()
        .adjoint()
        .mul(&gamma1.side.d)
        .mul(&pre_back);
    let tau1 = comp_t1.vcat(&comp_g1);

    // tau1Star: D_{T*} -> D_{Gamma1*}
    let pres = dt.tstar_side.frame_preimages(); // (d1+n0) x dimT*
    let tau1_star = gamma1
        .side_star
        .frame
        .vectors()
        .adjoint()
        .mul(&gamma1.side_star.d)
        .mul(&dt1.tstar_side.frame.vectors().adjoint())
        .mul(&dt1.tstar_side.d)
        .mul(&pres);

    for (name, m) in [
        ("tau", &tau),
        ("tauStar", &tau_star),
        ("tau1", &tau1),
        ("tau1Star", &tau1_star),
    ] {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                what: format!("structured {name} must be square (defect dimension bookkeeping)"),
                expected: m.cols(),
                got: m.rows(),
            });
        }
        ensure_unitary(name, m)?;
    }

    Ok(StructuredCtx {
        op,
        gamma,
        gamma1,
        tau,
        tau_star,
        tau1,
        tau1_star,
    })
}

impl StructuredCtx<'_> {
    /// Theta_N as an exact polynomial in the shared defect frames of N.
    fn theta_n(&self) -> PolyOpFunction {
        let order = self.op.order();
        let f = theta_coeffs_dense_with_defect(self.op.nilpotent(), self.op.defect_n(), order);
        PolyOpFunction::new(f.dim_in, f.dim_out, f.coeffs, true)
    }

    fn u1(&self) -> ComplexMatrix {
        self.gamma1
            .halmos()
            .mul(&self.tau_star.adjoint().pad_identity(self.gamma1.dim()))
    }

    fn u2(&self) -> ComplexMatrix {
        self.gamma.halmos().pad_identity(self.gamma1.dim())
    }

    fn tau_tilde1(&self) -> ComplexMatrix {
        self.tau.pad_identity(self.gamma1.dim()).mul(&self.tau1)
    }
}

/// Middle-factor coefficient diag(C_p, [p == 0] I_m).
fn middle_coeff(theta_n: &PolyOpFunction, p: usize, m_dim: usize) -> ComplexMatrix {
    if p == 0 {
        theta_n.coeff(0).pad_identity(m_dim)
    } else {
        theta_n
            .coeff(p)
            .direct_sum(&ComplexMatrix::zeros(m_dim, m_dim))
    }
}

/// Grid plus coefficientwise residual of Theta_T = V1 diag(Theta_N, I_M) V2.
fn product_residual(
    theta_t: &PolyOpFunction,
    theta_n: &PolyOpFunction,
    v1: &ComplexMatrix,
    v2: &ComplexMatrix,
    m_dim: usize,
) -> f64 {
    let mut residual: f64 = 0.0;
    for z in standard_grid() {
        let lhs = theta_t.eval(z);
        let rhs = v1.mul(&theta_n.eval(z).pad_identity(m_dim)).mul(v2);
        residual = residual.max(lhs.sub(&rhs).fro_norm());
    }
    let terms = theta_t.coeffs.len().max(theta_n.coeffs.len());
    for p in 0..terms {
        let lhs = theta_t.coeff(p);
        let rhs = v1.mul(&middle_coeff(theta_n, p, m_dim)).mul(v2);
        residual = residual.max(lhs.sub(&rhs).fro_norm());
    }
    residual
}

/// The shift-ended factorization of a structured operator: a coisometry V1, an
/// isometry V2, and the exact polynomial Theta_N between them.
#[derive(Debug, Clone, Serialize)]
pub struct CorollaryFactors {
    #[serde(rename = "V1")]
    pub v1: ComplexMatrix,
    #[serde(rename = "V2")]
    pub v2: ComplexMatrix,
    #[serde(rename = "ThetaN")]
    pub theta_n: PolyOpFunction,
    #[serde(rename = "M")]
    pub m_dim: usize,
    pub residual: f64,
}

/// Build and verify V1 = tau1Star^{-1} [0_C 0; 0 I] U1 and
/// V2 = U2 [0_S 0; 0 I] tauTilde1, with the zero characteristic functions
/// of the shifts realized as genuine empty-dimension blocks.
pub fn corollary_factors(op: &StructuredOperator) -> Result<CorollaryFactors> {
    let ctx = build_structured_ctx(op)?;
    let sp = op.space();
    let (dim_g, dim_gs, dim_g1, dim_g1s) = (
        ctx.gamma.dim(),
        ctx.gamma.dim_star(),
        ctx.gamma1.dim(),
        ctx.gamma1.dim_star(),
    );
    let m_dim = dim_gs + dim_g1;

    // [0_C 0; 0 I]: (D_C + D_{Gamma1*}) -> ({0} + D_{Gamma1*})
    let zero_c_pad = ComplexMatrix::zeros(dim_g1s, sp.d3).hcat(&ComplexMatrix::identity(dim_g1s));
    let v1 = ctx.tau1_star.adjoint().mul(&zero_c_pad).mul(&ctx.u1());

    // [0_S 0; 0 I]: ({0} + D_Gamma + D_{Gamma1}) -> (D_{S*} + D_Gamma + D_{Gamma1})
    let zero_s_pad =
        ComplexMatrix::zeros(sp.d1, dim_g + dim_g1).vcat(&ComplexMatrix::identity(dim_g + dim_g1));
    let v2 = ctx.u2().mul(&zero_s_pad).mul(&ctx.tau_tilde1());

    let co = coisometry_defect(&v1);
    if co > 1e-9 {
        return Err(Error::NotUnitary {
            what: "V1 (coisometry)".into(),
            defect: co,
        });
    }
    let iso = isometry_defect(&v2);
    if iso > 1e-9 {
        return Err(Error::NotUnitary {
            what: "V2 (isometry)".into(),
            defect: iso,
        });
    }

    let theta_n = ctx.theta_n();
    let theta_t = theta_coeffs_structured(op, op.order() + 5)?;
    let residual = product_residual(&theta_t, &theta_n, &v1, &v2, m_dim);

    Ok(CorollaryFactors {
        v1,
        v2,
        theta_n,
        m_dim,
        residual,
    })
}

/// Factors of the alternative (bottom-first) decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct AltFactors {
    #[serde(rename = "V1tilde")]
    pub v1_tilde: ComplexMatrix,
    #[serde(rename = "V2tilde")]
    pub v2_tilde: ComplexMatrix,
    #[serde(rename = "Mtilde")]
    pub m_tilde_dim: usize,
    pub residual: f64,
}

/// Regroup bottom-first: T_{-1} = [N E; 0 C] inside T = [S X_{-1}; 0 T_{-1}].
/// The coupling parameter of this path maps D_C into D_{N*} and is a
/// different object from the main-path Gamma; the middle space comes out as
/// D_{Gamma} + D_{Gamma_{-1}*}.
pub fn alt_decomposition(op: &StructuredOperator) -> Result<AltFactors> {
    let sp = op.space();
    let (d1, n0, d3) = (sp.d1, sp.n0, sp.d3);
    let dn = op.defect_n();
    let dt = op.defect_data();
    let nmat = op.nilpotent();
    let e = &op.couplings().e;
    let b = &op.couplings().b;
    let xm = &op.couplings().xm;

    // defect data of T_{-1} on supports (mid, back0) / (mid)
    let id0 = ComplexMatrix::identity(n0);
    let id3 = ComplexMatrix::identity(d3);
    let gram_tm1 = ComplexMatrix::block2x2(
        &id0.sub(&nmat.adjoint().mul(nmat)),
        &nmat.adjoint().mul(e).scale(C64::new(-1.0, 0.0)),
        &e.adjoint().mul(nmat).scale(C64::new(-1.0, 0.0)),
        &id3.sub(&e.adjoint().mul(e)),
    );
    let gram_tm1s = id0
        .sub(&nmat.mul(&nmat.adjoint()))
        .sub(&e.mul(&e.adjoint()));
    let dtm1 = DefectData {
        t_side: defect_side_from_gram(&gram_tm1, RANK_TOL)?,
        tstar_side: defect_side_from_gram(&gram_tm1s, RANK_TOL)?,
    };

    let f_n = dn.t_side.frame.vectors();
    let f_ns = dn.tstar_side.frame.vectors();

    // Gamma_alt : D_C -> D_{N*} from E = D_{N*} Gamma_alt D_C
    let gamma_alt_mat = f_ns.adjoint().mul(&pinv(&dn.tstar_side.d, RANK_TOL)).mul(e);
    let rec = dn.tstar_side.d.mul(f_ns).mul(&gamma_alt_mat);
    let res_alt = rec.sub(e).fro_norm();
    let cl_alt = classify(&gamma_alt_mat, CLASSIFY_TOL);
    if res_alt > 1e-9 * (1.0 + e.fro_norm()) || !cl_alt.is_contraction {
        return Err(Error::GammaReconstruction {
            residual: res_alt,
            gamma_norm: cl_alt.sigma_max,
        });
    }
    let gamma_alt = GammaDefect::new(gamma_alt_mat)?;

    // Gamma_{-1} : D_{T_{-1}} -> D_{S*} from [Xm B] = Gamma_{-1} (coords) D_{T_{-1}}
    let x_m1 = xm.hcat(b); // d1 x (n0 + d3), on (mid, back0) coordinates
    let gamma_m1_mat = x_m1
        .mul(&pinv(&dtm1.t_side.d, RANK_TOL))
        .mul(dtm1.t_side.frame.vectors());
    let rec = gamma_m1_mat
        .mul(&dtm1.t_side.frame.vectors().adjoint())
        .mul(&dtm1.t_side.d);
    let res_m1 = rec.sub(&x_m1).fro_norm();
    let cl_m1 = classify(&gamma_m1_mat, CLASSIFY_TOL);
    if res_m1 > 1e-9 * (1.0 + x_m1.fro_norm()) || !cl_m1.is_contraction {
        return Err(Error::GammaReconstruction {
            residual: res_m1,
            gamma_norm: cl_m1.sigma_max,
        });
    }
    let gamma_m1 = GammaDefect::new(gamma_m1_mat)?;

    // tau_{-1}: D_T -> D_{Gamma_{-1}}
    let pre = dt.t_side.frame_preimages(); // (n0+d3) x dimT
    let tau_m1 = gamma_m1
        .side
        .frame
        .vectors()
        .adjoint()
        .mul(&gamma_m1.side.d)
        .mul(&dtm1.t_side.frame.vectors().adjoint())
        .mul(&dtm1.t_side.d)
        .mul(&pre);

    // tau_{-1}*: D_{T*} -> D_{T_{-1}*} + D_{Gamma_{-1}*}
    let pres = dt.tstar_side.frame_preimages(); // (d1+n0) x dimT*
    let pres_u = pres.submatrix(0, d1, 0, pres.cols());
    let pres_v = pres.submatrix(d1, d1 + n0, 0, pres.cols());
    // T_{-1} applied to support coordinates (mid, back0): mid' = N v + E y0
    let gm1_amb = dtm1.t_side.frame.vectors().mul(&gamma_m1.gamma.adjoint()); // (n0+d3) x d1
    let tm1_of = nmat
        .mul(&gm1_amb.submatrix(0, n0, 0, d1))
        .add(&e.mul(&gm1_amb.submatrix(n0, n0 + d3, 0, d1)));
    let comp_tm1s = dtm1
        .tstar_side
        .frame
        .vectors()
        .adjoint()
        .mul(&dtm1.tstar_side.d.mul(&pres_v).sub(&tm1_of.mul(&pres_u)));
    let comp_gm1s = gamma_m1
        .side_star
        .frame
        .vectors()
        .adjoint()
        .mul(&gamma_m1.side_star.d)
        .mul(&pres_u);
    let tau_m1_star = comp_tm1s.vcat(&comp_gm1s);

    // tau_alt: D_{T_{-1}} -> D_N + D_{Gamma_alt}
    let prem = dtm1.t_side.frame_preimages(); // (n0+d3) x dim
    let prem_v = prem.submatrix(0, n0, 0, prem.cols());
    let prem_y = prem.submatrix(n0, n0 + d3, 0, prem.cols());
    let comp_n = f_n.adjoint().mul(
        &dn.t_side
            .d
            .mul(&prem_v)
            .sub(&nmat.adjoint().mul(f_ns).mul(&gamma_alt.gamma).mul(&prem_y)),
    );
    let comp_galt = gamma_alt
        .side
        .frame
        .vectors()
        .adjoint()
        .mul(&gamma_alt.side.d)
        .mul(&prem_y);
    let tau_alt = comp_n.vcat(&comp_galt);

    // tau_alt*: D_{T_{-1}*} -> D_{Gamma_alt*}
    let prems = dtm1.tstar_side.frame_preimages(); // n0 x dim
    let tau_alt_star = gamma_alt
        .side_star
        .frame
        .vectors()
        .adjoint()
        .mul(&gamma_alt.side_star.d)
        .mul(&f_ns.adjoint())
        .mul(&dn.tstar_side.d)
        .mul(&prems);

    for (name, m) in [
        ("tauMinus1", &tau_m1),
        ("tauMinus1Star", &tau_m1_star),
        ("tauAlt", &tau_alt),
        ("tauAltStar", &tau_alt_star),
    ] {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                what: format!("alternative-path {name} must be square"),
                expected: m.cols(),
                got: m.rows(),
            });
        }
        ensure_unitary(name, m)?;
    }

    let dim_galt = gamma_alt.dim();
    let dim_galts = gamma_alt.dim_star();
    let dim_gm1 = gamma_m1.dim();
    let dim_gm1s = gamma_m1.dim_star();
    let m_tilde = dim_galt + dim_gm1s;

    // V1~ = tauMinus1Star^{-1} (tauAltStar^{-1} + I) [Psi0 + I] (J[Gamma_alt] + I)
    let psi0_pad = ComplexMatrix::zeros(dim_galts, d3)
        .hcat(&ComplexMatrix::identity(dim_galts))
        .pad_identity(dim_gm1s);
    let v1 = tau_m1_star
        .adjoint()
        .mul(&tau_alt_star.adjoint().pad_identity(dim_gm1s))
        .mul(&psi0_pad)
        .mul(&gamma_alt.halmos().pad_identity(dim_gm1s));

    // V2~ = (tauAlt + I) J[Gamma_{-1}] [0_S-pad] tauMinus1
    let zero_s_pad = ComplexMatrix::zeros(d1, dim_gm1).vcat(&ComplexMatrix::identity(dim_gm1));
    let v2 = tau_alt
        .pad_identity(dim_gm1s)
        .mul(&gamma_m1.halmos())
        .mul(&zero_s_pad)
        .mul(&tau_m1);

    let co = coisometry_defect(&v1);
    if co > 1e-9 {
        return Err(Error::NotUnitary {
            what: "V1tilde (coisometry)".into(),
            defect: co,
        });
    }
    let iso = isometry_defect(&v2);
    if iso > 1e-9 {
        return Err(Error::NotUnitary {
            what: "V2tilde (isometry)".into(),
            defect: iso,
        });
    }

    let theta_n = {
        let f = theta_coeffs_dense_with_defect(nmat, dn, op.order());
        PolyOpFunction::new(f.dim_in, f.dim_out, f.coeffs, true)
    };
    let theta_t = theta_coeffs_structured(op, op.order() + 5)?;
    let residual = product_residual(&theta_t, &theta_n, &v1, &v2, m_tilde);

    Ok(AltFactors {
        v1_tilde: v1,
        v2_tilde: v2,
        m_tilde_dim: m_tilde,
        residual,
    })
}

/// Both middle-space dimensions side by side. No equality is asserted:
/// whether they always agree is open, and this surface only tabulates
/// evidence.
#[derive(Debug, Clone, Serialize)]
pub struct DimReport {
    #[serde(rename = "M")]
    pub m_dim: usize,
    #[serde(rename = "Mtilde")]
    pub m_tilde_dim: usize,
    pub equal: bool,
    #[serde(rename = "residualMain")]
    pub residual_main: f64,
    #[serde(rename = "residualAlt")]
    pub residual_alt: f64,
}

pub fn dim_report(op: &StructuredOperator) -> Result<DimReport> {
    let main = corollary_factors(op)?;
    let alt = alt_decomposition(op)?;
    Ok(DimReport {
        m_dim: main.m_dim,
        m_tilde_dim: alt.m_tilde_dim,
        equal: main.m_dim == alt.m_tilde_dim,
        residual_main: main.residual,
        residual_alt: alt.residual,
    })
}

/// Outcome of the weak-converse assembly: the degree verdict of the product
/// V1 diag(Theta_N, I) V2 together with the nilpotency order it is bounded
/// by.
#[derive(Debug, Clone)]
pub struct WeakConverse {
    pub product: PolyOpFunction,
    pub degree: DegreeVerdict,
    pub order: usize,
}

/// Build f(z) = V1 diag(Theta_N(z), I_M) V2 as an exact polynomial and
/// report its degree; by the weak converse it never exceeds the nilpotency
/// order of N.
pub fn weak_converse_check(
    n: &ComplexMatrix,
    order: usize,
    v1: &ComplexMatrix,
    v2: &ComplexMatrix,
) -> Result<WeakConverse> {
    let co = coisometry_defect(v1);
    if co > 1e-9 {
        return Err(Error::NotUnitary {
            what: "V1 (coisometry)".into(),
            defect: co,
        });
    }
    let iso = isometry_defect(v2);
    if iso > 1e-9 {
        return Err(Error::NotUnitary {
            what: "V2 (isometry)".into(),
            defect: iso,
        });
    }
    let dense = crate::operators::DenseContraction::new(n.clone())?;
    let defect_n = dense.defect(RANK_TOL)?;
    let theta_n = {
        let f = theta_coeffs_dense_with_defect(n, &defect_n, order);
        PolyOpFunction::new(f.dim_in, f.dim_out, f.coeffs, true)
    };
    let m_from_v1 = v1.cols().checked_sub(defect_n.dim_tstar());
    let m_from_v2 = v2.rows().checked_sub(defect_n.dim_t());
    let m_dim = match (m_from_v1, m_from_v2) {
        (Some(a), Some(b)) if a == b => a,
        _ => {
            return Err(Error::DimensionMismatch {
                what: "middle space implied by V1 and V2".into(),
                expected: v1.cols(),
                got: v2.rows(),
            })
        }
    };
    let mut coeffs = Vec::with_capacity(order + 1);
    for p in 0..=order {
        coeffs.push(v1.mul(&middle_coeff(&theta_n, p, m_dim)).mul(v2));
    }
    let product = PolyOpFunction::new(v2.cols(), v1.rows(), coeffs, true);
    let degree = poly_degree(&product, 1e-9);
    Ok(WeakConverse {
        product,
        degree,
        order,
    })
}

/// Uniform acceptance bound re-exported for callers of this module.
pub const FACTOR3_RESIDUAL_TOL: f64 = RESIDUAL_TOL;
