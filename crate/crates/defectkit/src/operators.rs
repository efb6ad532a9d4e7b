//! Contraction operators and their defect data.
//!
//! Two operator families live here. `DenseContraction` wraps a plain square
//! contraction matrix. `StructuredOperator` is the block upper-triangular
//! operator
//!
//! ```text
//!     [ S  X  B ]      S = forward shift of multiplicity d1 (exact),
//!     [ 0  N  E ]      N = finite nilpotent contraction on C^{n0},
//!     [ 0  0  C ]      C = backward shift of multiplicity d3 (exact),
//! ```
//!
//! where the couplings are finite rank and enter through the defect
//! operators of the diagonal blocks. The shifts are never truncated:
//! vectors carry finitely supported coordinate blocks and applications are
//! exact, which is what makes every defect computation a finite one. The
//! coupling into the shift reads and writes only coordinate block 0, so
//! I - T*T is supported on (middle + backward block 0) and I - TT* on
//! (shift block 0 + middle); defect frames therefore consist of finitely
//! supported vectors.

use num_complex::Complex64 as C64;
use serde::de::Deserializer;
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    clamp_singular_to_one, classify, hermitian_eig, Frame, CLASSIFY_TOL, EIG_ZERO_FLOOR,
    PSD_NEG_TOL, RANK_TOL,
};
use crate::matrix::{inner, vec_norm, ComplexMatrix};

/// Shift multiplicity, middle dimension, backward-shift multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredSpace {
    pub d1: usize,
    pub n0: usize,
    pub d3: usize,
}

impl StructuredSpace {
    pub fn new(d1: usize, n0: usize, d3: usize) -> Result<Self> {
        if d1 + n0 + d3 == 0 {
            return Err(Error::SpaceMismatch(
                "structured space must have at least one nonzero component".into(),
            ));
        }
        Ok(StructuredSpace { d1, n0, d3 })
    }
}

/// Finitely supported vector in shift + middle + backward-shift space.
/// Coordinate blocks beyond the stored length are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredVector {
    space: StructuredSpace,
    shift: Vec<C64>,
    mid: Vec<C64>,
    back: Vec<C64>,
}

impl StructuredVector {
    pub fn zeros(space: StructuredSpace) -> Self {
        StructuredVector {
            space,
            shift: vec![],
            mid: vec![C64::new(0.0, 0.0); space.n0],
            back: vec![],
        }
    }

    pub fn space(&self) -> StructuredSpace {
        self.space
    }

    pub fn shift_blocks(&self) -> usize {
        self.shift.len().checked_div(self.space.d1).unwrap_or(0)
    }

    pub fn back_blocks(&self) -> usize {
        self.back.len().checked_div(self.space.d3).unwrap_or(0)
    }

    /// Largest populated coordinate block index on either shift side.
    pub fn support_bound(&self) -> usize {
        self.shift_blocks()
            .max(self.back_blocks())
            .saturating_sub(1)
    }

    pub fn mid(&self) -> &[C64] {
        &self.mid
    }

    pub fn shift_block(&self, k: usize) -> Vec<C64> {
        let d = self.space.d1;
        if k < self.shift_blocks() {
            self.shift[k * d..(k + 1) * d].to_vec()
        } else {
            vec![C64::new(0.0, 0.0); d]
        }
    }

    pub fn back_block(&self, k: usize) -> Vec<C64> {
        let d = self.space.d3;
        if k < self.back_blocks() {
            self.back[k * d..(k + 1) * d].to_vec()
        } else {
            vec![C64::new(0.0, 0.0); d]
        }
    }

    pub fn from_parts(
        space: StructuredSpace,
        shift: Vec<C64>,
        mid: Vec<C64>,
        back: Vec<C64>,
    ) -> Self {
        assert!(
            space.d1 == 0 && shift.is_empty()
                || space.d1 != 0 && shift.len().is_multiple_of(space.d1)
        );
        assert_eq!(mid.len(), space.n0);
        assert!(
            space.d3 == 0 && back.is_empty()
                || space.d3 != 0 && back.len().is_multiple_of(space.d3)
        );
        StructuredVector {
            space,
            shift,
            mid,
            back,
        }
    }

    pub fn basis_mid(space: StructuredSpace, i: usize) -> Self {
        let mut v = Self::zeros(space);
        v.mid[i] = C64::new(1.0, 0.0);
        v
    }

    pub fn basis_shift(space: StructuredSpace, block: usize, i: usize) -> Self {
        let mut v = Self::zeros(space);
        v.shift = vec![C64::new(0.0, 0.0); (block + 1) * space.d1];
        v.shift[block * space.d1 + i] = C64::new(1.0, 0.0);
        v
    }

    pub fn basis_back(space: StructuredSpace, block: usize, i: usize) -> Self {
        let mut v = Self::zeros(space);
        v.back = vec![C64::new(0.0, 0.0); (block + 1) * space.d3];
        v.back[block * space.d3 + i] = C64::new(1.0, 0.0);
        v
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.space, rhs.space);
        let blend = |a: &[C64], b: &[C64]| -> Vec<C64> {
            let n = a.len().max(b.len());
            (0..n)
                .map(|i| {
                    a.get(i).copied().unwrap_or_default() + b.get(i).copied().unwrap_or_default()
                })
                .collect()
        };
        StructuredVector {
            space: self.space,
            shift: blend(&self.shift, &rhs.shift),
            mid: blend(&self.mid, &rhs.mid),
            back: blend(&self.back, &rhs.back),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        StructuredVector {
            space: self.space,
            shift: self.shift.iter().map(|e| e * c).collect(),
            mid: self.mid.iter().map(|e| e * c).collect(),
            back: self.back.iter().map(|e| e * c).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.scale(C64::new(-1.0, 0.0)))
    }

    pub fn inner(&self, rhs: &Self) -> C64 {
        assert_eq!(self.space, rhs.space);
        let dot = |a: &[C64], b: &[C64]| -> C64 {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| x.conj() * y)
                .sum::<C64>()
        };
        dot(&self.shift, &rhs.shift) + dot(&self.mid, &rhs.mid) + dot(&self.back, &rhs.back)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }
}

/// One side of a defect computation: the Gram operator I - T*T (or I - TT*)
/// restricted to its finite support, its PSD square root, and the
/// orthonormal frame of the defect space with the square roots of the kept
/// eigenvalues.
#[derive(Debug, Clone)]
pub struct DefectSide {
    pub gram: ComplexMatrix,
    pub d: ComplexMatrix,
    pub frame: Frame,
    pub sqrt_eigs: Vec<f64>,
}

impl DefectSide {
    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    /// D applied in support coordinates.
    pub fn apply_d(&self, v: &[C64]) -> Vec<C64> {
        self.d.mul_vec(v)
    }

    /// Preimages of the frame vectors under D: frame column / sqrt(eig).
    pub fn frame_preimages(&self) -> ComplexMatrix {
        let f = self.frame.vectors();
        ComplexMatrix::from_fn(f.rows(), f.cols(), |i, j| {
            f[(i, j)] * C64::new(1.0 / self.sqrt_eigs[j], 0.0)
        })
    }
}

/// Rank rule shared by every defect computation in the crate: eigenvalues of
/// the Gram operator are kept above max(rank_tol * lambda_max, floor); the
/// floor absorbs rounding zeros of exactly-unitary directions. Eigenvalues
/// below -1e-10 mean the operator was not a contraction.
pub fn defect_side_from_gram(gram: &ComplexMatrix, rank_tol: f64) -> Result<DefectSide> {
    let eig = hermitian_eig(gram)?;
    if let Some(&lam_min) = eig.eigenvalues.last() {
        if lam_min < -PSD_NEG_TOL {
            return Err(Error::NotAContraction {
                detail: format!("defect Gram operator has eigenvalue {lam_min:.3e}"),
            });
        }
    }
    let lam_max = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let cut = (rank_tol * lam_max).max(EIG_ZERO_FLOOR);
    let kept: usize = eig.eigenvalues.iter().take_while(|&&l| l > cut).count();
    let n = gram.rows();
    let frame_vecs = eig.vectors.submatrix(0, n, 0, kept);
    let sqrt_eigs: Vec<f64> = eig.eigenvalues[..kept].iter().map(|l| l.sqrt()).collect();
    let mut d = ComplexMatrix::zeros(n, n);
    for (k, &r) in sqrt_eigs.iter().enumerate() {
        for i in 0..n {
            let ui = frame_vecs[(i, k)] * r;
            for j in 0..n {
                d[(i, j)] += ui * frame_vecs[(j, k)].conj();
            }
        }
    }
    let d = ComplexMatrix::from_fn(n, n, |i, j| {
        (d[(i, j)] + d[(j, i)].conj()) * C64::new(0.5, 0.0)
    });
    Ok(DefectSide {
        gram: gram.clone(),
        d,
        frame: Frame::new(frame_vecs, rank_tol)?,
        sqrt_eigs,
    })
}

/// Defect data of a contraction: both sides.
#[derive(Debug, Clone)]
pub struct DefectData {
    pub t_side: DefectSide,
    pub tstar_side: DefectSide,
}

impl DefectData {
    pub fn dim_t(&self) -> usize {
        self.t_side.dim()
    }

    pub fn dim_tstar(&self) -> usize {
        self.tstar_side.dim()
    }
}

fn dense_defect(t: &ComplexMatrix, rank_tol: f64) -> Result<DefectData> {
    let n = t.rows();
    let id = ComplexMatrix::identity(n);
    let gram_t = id.sub(&t.adjoint().mul(t));
    let gram_tstar = id.sub(&t.mul(&t.adjoint()));
    Ok(DefectData {
        t_side: defect_side_from_gram(&gram_t, rank_tol)?,
        tstar_side: defect_side_from_gram(&gram_tstar, rank_tol)?,
    })
}

/// Dense finite-dimensional contraction.
#[derive(Debug, Clone)]
pub struct DenseContraction {
    matrix: ComplexMatrix,
}

impl DenseContraction {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                what: "dense contraction must be square".into(),
                expected: matrix.rows(),
                got: matrix.cols(),
            });
        }
        let cl = classify(&matrix, CLASSIFY_TOL);
        if !cl.is_contraction {
            return Err(Error::NotAContraction {
                detail: format!("sigma_max = {:.12}", cl.sigma_max),
            });
        }
        Ok(DenseContraction { matrix })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "dense apply".into(),
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(self.matrix.mul_vec(v))
    }

    pub fn apply_adjoint(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "dense apply_adjoint".into(),
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(self.matrix.adjoint_mul_vec(v))
    }

    pub fn defect(&self, rank_tol: f64) -> Result<DefectData> {
        dense_defect(&self.matrix, rank_tol)
    }
}

/// Distilled coupling data of a structured operator: the middle-to-shift
/// coupling and the two blocks of the coupling into the backward shift, all
/// acting on / into coordinate block 0.
#[derive(Debug, Clone)]
pub struct Couplings {
    /// d1 x n0: middle component -> shift block 0.
    pub xm: ComplexMatrix,
    /// d1 x d3: backward block 0 -> shift block 0.
    pub b: ComplexMatrix,
    /// n0 x d3: backward block 0 -> middle.
    pub e: ComplexMatrix,
}

/// Structured contraction: exact shift and backward shift with finite-rank
/// couplings parameterized by contractions between defect frames.
///
/// `gamma` maps defect coordinates of N into the adjoint defect coordinates
/// of the shift (size d1 x dim D_N); `gamma1` maps defect coordinates of the
/// backward shift into the adjoint defect coordinates of the already
/// assembled upper 2x2 corner T1 = [S X; 0 N]. Assembly order is fixed:
/// first T1 from (S, N, gamma), then T from (T1, C, gamma1).
#[derive(Debug, Clone)]
pub struct StructuredOperator {
    space: StructuredSpace,
    n: ComplexMatrix,
    gamma: ComplexMatrix,
    gamma1: ComplexMatrix,
    order: usize,
    couplings: Couplings,
    defect_n: DefectData,
    defect_t1: DefectData,
    defect: DefectData,
}

fn check_nilpotent(n: &ComplexMatrix, order: usize) -> Result<()> {
    if n.rows() == 0 {
        return Ok(());
    }
    if order == 0 {
        return Err(Error::NotNilpotent {
            order,
            detail: "order must be at least 1".into(),
        });
    }
    let mut p = ComplexMatrix::identity(n.rows());
    for _ in 0..order - 1 {
        p = p.mul(n);
    }
    let prev = p.fro_norm();
    let last = p.mul(n).fro_norm();
    if last > 1e-12 {
        return Err(Error::NotNilpotent {
            order,
            detail: format!("|N^{order}| = {last:.3e}"),
        });
    }
    if prev <= 1e-12 {
        return Err(Error::NotNilpotent {
            order,
            detail: format!("|N^{}| = {prev:.3e} already vanishes", order - 1),
        });
    }
    Ok(())
}

fn check_parameter_norm(name: &str, gamma: &ComplexMatrix) -> Result<ComplexMatrix> {
    let cl = classify(gamma, CLASSIFY_TOL);
    if !cl.is_contraction {
        return Err(Error::NotAContraction {
            detail: format!("{name} has sigma_max = {:.12}", cl.sigma_max),
        });
    }
    Ok(clamp_singular_to_one(gamma, CLASSIFY_TOL))
}

struct MiddleBuild {
    defect_n: DefectData,
    xm: ComplexMatrix,
    defect_t1: DefectData,
}

fn build_middle(d1: usize, n: &ComplexMatrix, gamma: &ComplexMatrix) -> Result<MiddleBuild> {
    let n0 = n.rows();
    let defect_n = dense_defect(n, RANK_TOL)?;
    if gamma.rows() != d1 || gamma.cols() != defect_n.dim_t() {
        return Err(Error::DimensionMismatch {
            what: format!(
                "gamma must be {} x {} (shift multiplicity x dim D_N)",
                d1,
                defect_n.dim_t()
            ),
            expected: d1 * defect_n.dim_t(),
            got: gamma.rows() * gamma.cols(),
        });
    }
    // X = embed_0 . (gamma . frame^H . D_N) : middle -> shift block 0
    let xm = gamma
        .mul(&defect_n.t_side.frame.vectors().adjoint())
        .mul(&defect_n.t_side.d);

    // I - T1* T1 lives on the middle alone (the shift column of T1 is isometric).
    let id0 = ComplexMatrix::identity(n0);
    let m1 = id0.sub(&n.adjoint().mul(n)).sub(&xm.adjoint().mul(&xm));
    // I - T1 T1* lives on shift block 0 + middle.
    let idd = ComplexMatrix::identity(d1);
    let m1s = ComplexMatrix::block2x2(
        &idd.sub(&xm.mul(&xm.adjoint())),
        &xm.mul(&n.adjoint()).scale(C64::new(-1.0, 0.0)),
        &n.mul(&xm.adjoint()).scale(C64::new(-1.0, 0.0)),
        &id0.sub(&n.mul(&n.adjoint())),
    );
    let defect_t1 = DefectData {
        t_side: defect_side_from_gram(&m1, RANK_TOL)?,
        tstar_side: defect_side_from_gram(&m1s, RANK_TOL)?,
    };
    Ok(MiddleBuild {
        defect_n,
        xm,
        defect_t1,
    })
}

impl StructuredOperator {
    /// Defect dimension of a candidate middle nilpotent, using the shared
    /// rank rule. Generators need this before they can shape `gamma`.
    pub fn nilpotent_defect_dim(n: &ComplexMatrix) -> Result<usize> {
        Ok(dense_defect(n, RANK_TOL)?.dim_t())
    }

    /// dim D_{T1*} for T1 = [S X; 0 N] with the given coupling parameter;
    /// generators need this before they can shape `gamma1`.
    pub fn middle_defect_star_dim(
        d1: usize,
        n: &ComplexMatrix,
        gamma: &ComplexMatrix,
    ) -> Result<usize> {
        Ok(build_middle(d1, n, gamma)?.defect_t1.dim_tstar())
    }

    pub fn assemble(
        d1: usize,
        n: ComplexMatrix,
        gamma: ComplexMatrix,
        gamma1: ComplexMatrix,
        order: usize,
        d3: usize,
    ) -> Result<StructuredOperator> {
        let space = StructuredSpace::new(d1, n.rows(), d3)?;
        if !n.is_square() {
            return Err(Error::DimensionMismatch {
                what: "middle nilpotent must be square".into(),
                expected: n.rows(),
                got: n.cols(),
            });
        }
        let cl = classify(&n, CLASSIFY_TOL);
        if !cl.is_contraction {
            return Err(Error::NotAContraction {
                detail: format!("middle block has sigma_max = {:.12}", cl.sigma_max),
            });
        }
        check_nilpotent(&n, order)?;
        let gamma = check_parameter_norm("gamma", &gamma)?;
        let middle = build_middle(d1, &n, &gamma)?;
        let gamma1 = check_parameter_norm("gamma1", &gamma1)?;
        if gamma1.rows() != middle.defect_t1.dim_tstar() || gamma1.cols() != d3 {
            return Err(Error::DimensionMismatch {
                what: format!(
                    "gamma1 must be {} x {} (dim D_T1* x backward multiplicity)",
                    middle.defect_t1.dim_tstar(),
                    d3
                ),
                expected: middle.defect_t1.dim_tstar() * d3,
                got: gamma1.rows() * gamma1.cols(),
            });
        }
        // X1 = D_{T1*} frame gamma1 : backward block 0 -> shift block 0 + middle
        let x1m = middle
            .defect_t1
            .tstar_side
            .d
            .mul(middle.defect_t1.tstar_side.frame.vectors())
            .mul(&gamma1);
        let n0 = n.rows();
        let b = x1m.submatrix(0, d1, 0, d3);
        let e = x1m.submatrix(d1, d1 + n0, 0, d3);

        // Gram of the full operator on its finite supports.
        let xm = &middle.xm;
        let id0 = ComplexMatrix::identity(n0);
        let id3 = ComplexMatrix::identity(d3);
        let gram_t = ComplexMatrix::block2x2(
            &id0.sub(&n.adjoint().mul(&n)).sub(&xm.adjoint().mul(xm)),
            &xm.adjoint()
                .mul(&b)
                .add(&n.adjoint().mul(&e))
                .scale(C64::new(-1.0, 0.0)),
            &b.adjoint()
                .mul(xm)
                .add(&e.adjoint().mul(&n))
                .scale(C64::new(-1.0, 0.0)),
            &id3.sub(&b.adjoint().mul(&b)).sub(&e.adjoint().mul(&e)),
        );
        let idd = ComplexMatrix::identity(d1);
        let gram_tstar = ComplexMatrix::block2x2(
            &idd.sub(&xm.mul(&xm.adjoint())).sub(&b.mul(&b.adjoint())),
            &xm.mul(&n.adjoint())
                .add(&b.mul(&e.adjoint()))
                .scale(C64::new(-1.0, 0.0)),
            &n.mul(&xm.adjoint())
                .add(&e.mul(&b.adjoint()))
                .scale(C64::new(-1.0, 0.0)),
            &id0.sub(&n.mul(&n.adjoint())).sub(&e.mul(&e.adjoint())),
        );
        let defect = DefectData {
            t_side: defect_side_from_gram(&gram_t, RANK_TOL)?,
            tstar_side: defect_side_from_gram(&gram_tstar, RANK_TOL)?,
        };

        Ok(StructuredOperator {
            space,
            n,
            gamma,
            gamma1,
            order,
            couplings: Couplings {
                xm: middle.xm,
                b,
                e,
            },
            defect_n: middle.defect_n,
            defect_t1: middle.defect_t1,
            defect,
        })
    }

    pub fn space(&self) -> StructuredSpace {
        self.space
    }

    pub fn nilpotent(&self) -> &ComplexMatrix {
        &self.n
    }

    pub fn gamma(&self) -> &ComplexMatrix {
        &self.gamma
    }

    pub fn gamma1(&self) -> &ComplexMatrix {
        &self.gamma1
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn couplings(&self) -> &Couplings {
        &self.couplings
    }

    pub fn defect_n(&self) -> &DefectData {
        &self.defect_n
    }

    pub fn defect_t1(&self) -> &DefectData {
        &self.defect_t1
    }

    pub fn defect_data(&self) -> &DefectData {
        &self.defect
    }

    pub fn apply(&self, v: &StructuredVector) -> Result<StructuredVector> {
        if v.space() != self.space {
            return Err(Error::SpaceMismatch(
                "apply: vector lives on a different space".into(),
            ));
        }
        let sp = self.space;
        let back0 = v.back_block(0);
        // shift: forward shift of the old shift part plus couplings into block 0
        let mut shift = vec![C64::new(0.0, 0.0); (v.shift_blocks() + 1) * sp.d1];
        shift[sp.d1..].copy_from_slice(&v.shift);
        let into0: Vec<C64> = self
            .couplings
            .xm
            .mul_vec(&v.mid)
            .iter()
            .zip(self.couplings.b.mul_vec(&back0))
            .map(|(a, b)| a + b)
            .collect();
        shift[..sp.d1].copy_from_slice(&into0);
        if sp.d1 == 0 {
            shift.clear();
        }
        let mid: Vec<C64> = self
            .n
            .mul_vec(&v.mid)
            .iter()
            .zip(self.couplings.e.mul_vec(&back0))
            .map(|(a, b)| a + b)
            .collect();
        // back: drop block 0
        let bb = v.back_blocks();
        let back = if bb > 1 {
            v.back[sp.d3..].to_vec()
        } else {
            vec![]
        };
        Ok(StructuredVector {
            space: sp,
            shift,
            mid,
            back,
        })
    }

    pub fn apply_adjoint(&self, v: &StructuredVector) -> Result<StructuredVector> {
        if v.space() != self.space {
            return Err(Error::SpaceMismatch(
                "apply_adjoint: vector lives on a different space".into(),
            ));
        }
        let sp = self.space;
        let shift0 = v.shift_block(0);
        // shift: backward shift (drop block 0)
        let sb = v.shift_blocks();
        let shift = if sb > 1 {
            v.shift[sp.d1..].to_vec()
        } else {
            vec![]
        };
        let mid: Vec<C64> = self
            .couplings
            .xm
            .adjoint_mul_vec(&shift0)
            .iter()
            .zip(self.n.adjoint_mul_vec(&v.mid))
            .map(|(a, b)| a + b)
            .collect();
        // back: forward shift plus couplings into block 0
        let mut back = vec![C64::new(0.0, 0.0); (v.back_blocks() + 1) * sp.d3];
        back[sp.d3..].copy_from_slice(&v.back);
        let into0: Vec<C64> = self
            .couplings
            .b
            .adjoint_mul_vec(&shift0)
            .iter()
            .zip(self.couplings.e.adjoint_mul_vec(&v.mid))
            .map(|(a, b)| a + b)
            .collect();
        back[..sp.d3].copy_from_slice(&into0);
        if sp.d3 == 0 {
            back.clear();
        }
        Ok(StructuredVector {
            space: sp,
            shift,
            mid,
            back,
        })
    }

    /// Support coordinates of the T-side defect: middle then backward block 0.
    pub fn project_t_support(&self, v: &StructuredVector) -> Vec<C64> {
        let mut out = v.mid.clone();
        out.extend(v.back_block(0));
        out
    }

    pub fn embed_t_support(&self, coords: &[C64]) -> StructuredVector {
        let sp = self.space;
        assert_eq!(coords.len(), sp.n0 + sp.d3);
        let mid = coords[..sp.n0].to_vec();
        let back = coords[sp.n0..].to_vec();
        StructuredVector {
            space: sp,
            shift: vec![],
            mid,
            back: if sp.d3 == 0 { vec![] } else { back },
        }
    }

    /// Support coordinates of the T*-side defect: shift block 0 then middle.
    pub fn project_tstar_support(&self, v: &StructuredVector) -> Vec<C64> {
        let mut out = v.shift_block(0);
        out.extend_from_slice(&v.mid);
        out
    }

    pub fn embed_tstar_support(&self, coords: &[C64]) -> StructuredVector {
        let sp = self.space;
        assert_eq!(coords.len(), sp.d1 + sp.n0);
        let shift = coords[..sp.d1].to_vec();
        let mid = coords[sp.d1..].to_vec();
        StructuredVector {
            space: sp,
            shift: if sp.d1 == 0 { vec![] } else { shift },
            mid,
            back: vec![],
        }
    }

    /// D_T applied exactly: project to support, multiply by the root, embed.
    /// Correct for arbitrary vectors because D_T vanishes off its support.
    pub fn apply_defect_t(&self, v: &StructuredVector) -> StructuredVector {
        let coords = self.project_t_support(v);
        self.embed_t_support(&self.defect.t_side.apply_d(&coords))
    }

    pub fn apply_defect_tstar(&self, v: &StructuredVector) -> StructuredVector {
        let coords = self.project_tstar_support(v);
        self.embed_tstar_support(&self.defect.tstar_side.apply_d(&coords))
    }
}

// JSON: {"d1","n0","d3","m","N","Gamma","Gamma1"}; vectors are never
// serialized, and deserialization runs the full assembly validation.

impl Serialize for StructuredOperator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("StructuredOperator", 7)?;
        st.serialize_field("d1", &self.space.d1)?;
        st.serialize_field("n0", &self.space.n0)?;
        st.serialize_field("d3", &self.space.d3)?;
        st.serialize_field("m", &self.order)?;
        st.serialize_field("N", &self.n)?;
        st.serialize_field("Gamma", &self.gamma)?;
        st.serialize_field("Gamma1", &self.gamma1)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for StructuredOperator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            d1: usize,
            n0: usize,
            d3: usize,
            m: usize,
            #[serde(rename = "N")]
            n: ComplexMatrix,
            #[serde(rename = "Gamma")]
            gamma: ComplexMatrix,
            #[serde(rename = "Gamma1")]
            gamma1: ComplexMatrix,
        }
        let raw = Raw::deserialize(deserializer)?;
        if raw.n.rows() != raw.n0 {
            return Err(serde::de::Error::custom(format!(
                "middle block is {}x{} but n0 = {}",
                raw.n.rows(),
                raw.n.cols(),
                raw.n0
            )));
        }
        StructuredOperator::assemble(raw.d1, raw.n, raw.gamma, raw.gamma1, raw.m, raw.d3)
            .map_err(serde::de::Error::custom)
    }
}

/// A contraction given either as a dense matrix or as a structured operator.
#[derive(Debug, Clone)]
pub enum OperatorHandle {
    Dense(DenseContraction),
    Structured(StructuredOperator),
}

/// Vector in the ambient space of an `OperatorHandle`.
#[derive(Debug, Clone, PartialEq)]
pub enum HilbertVector {
    Dense(Vec<C64>),
    Structured(StructuredVector),
}

impl HilbertVector {
    pub fn norm(&self) -> f64 {
        match self {
            HilbertVector::Dense(v) => vec_norm(v),
            HilbertVector::Structured(v) => v.norm(),
        }
    }

    pub fn inner(&self, rhs: &HilbertVector) -> C64 {
        match (self, rhs) {
            (HilbertVector::Dense(a), HilbertVector::Dense(b)) => inner(a, b),
            (HilbertVector::Structured(a), HilbertVector::Structured(b)) => a.inner(b),
            _ => panic!("inner product across different vector kinds"),
        }
    }
}

impl OperatorHandle {
    pub fn dense(matrix: ComplexMatrix) -> Result<Self> {
        Ok(OperatorHandle::Dense(DenseContraction::new(matrix)?))
    }

    pub fn apply(&self, v: &HilbertVector) -> Result<HilbertVector> {
        match (self, v) {
            (OperatorHandle::Dense(t), HilbertVector::Dense(x)) => {
                Ok(HilbertVector::Dense(t.apply(x)?))
            }
            (OperatorHandle::Structured(t), HilbertVector::Structured(x)) => {
                Ok(HilbertVector::Structured(t.apply(x)?))
            }
            _ => Err(Error::SpaceMismatch(
                "operator and vector kinds do not match".into(),
            )),
        }
    }

    pub fn apply_adjoint(&self, v: &HilbertVector) -> Result<HilbertVector> {
        match (self, v) {
            (OperatorHandle::Dense(t), HilbertVector::Dense(x)) => {
                Ok(HilbertVector::Dense(t.apply_adjoint(x)?))
            }
            (OperatorHandle::Structured(t), HilbertVector::Structured(x)) => {
                Ok(HilbertVector::Structured(t.apply_adjoint(x)?))
            }
            _ => Err(Error::SpaceMismatch(
                "operator and vector kinds do not match".into(),
            )),
        }
    }

    /// Defect operator, frames and dimensions of both defect spaces. Dense
    /// operators go through the full eigendecomposition; structured ones
    /// return the finite-support data computed at assembly.
    pub fn defect(&self) -> Result<DefectData> {
        match self {
            OperatorHandle::Dense(t) => t.defect(RANK_TOL),
            OperatorHandle::Structured(t) => Ok(t.defect_data().clone()),
        }
    }
}
