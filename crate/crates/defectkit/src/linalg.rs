//! Dense complex linear algebra: Hermitian eigendecomposition, SVD,
//! positive-semidefinite square roots, pseudoinverses, orthonormal frames
//! and contraction classification.
//!
//! Everything here is built on Jacobi iterations. Two-sided Jacobi handles
//! the Hermitian eigenproblem; the SVD uses one-sided Jacobi on columns,
//! which keeps small singular values accurate relative to themselves rather
//! than to sigma_max^2; the rank decisions that define defect-space
//! dimensions downstream depend on that. The solvers are deterministic:
//! fixed sweep order, stable sorting, and a pinned phase convention
//! (the first coordinate of each vector with modulus above 1e-8 is made
//! real positive).

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;

/// Relative cutoff that defines numerical rank; the one knob behind all
/// defect-space dimensions.
pub const RANK_TOL: f64 = 1e-10;

/// Absolute eigenvalue floor for Gram operators of contractions: below this,
/// an eigenvalue of I - T*T is indistinguishable from a rounding zero.
pub const EIG_ZERO_FLOOR: f64 = 1e-13;

/// How negative an eigenvalue of a nominally PSD matrix may be before we
/// refuse to take its square root.
pub const PSD_NEG_TOL: f64 = 1e-10;

/// Default tolerance for contraction / isometry classification.
pub const CLASSIFY_TOL: f64 = 1e-8;

const HERM_PRE_TOL: f64 = 1e-12;
const PHASE_PICK_TOL: f64 = 1e-8;
const MAX_SWEEPS: usize = 64;

/// Eigendecomposition A = U diag(eigenvalues) U^H of a Hermitian matrix,
/// eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Thin SVD A = U diag(s) V^H with s descending; U and V have
/// min(rows, cols) orthonormal columns (completed deterministically when
/// the rank is deficient).
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

/// Outcome of `classify`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub sigma_max: f64,
    pub is_contraction: bool,
    pub is_isometry: bool,
    pub is_coisometry: bool,
    pub is_unitary: bool,
}

fn rot_for(app: f64, aqq: f64, apq: C64) -> (f64, f64, C64) {
    // Unitary 2x2 G = [[c, s*u], [-s*conj(u), c]] with u = apq/|apq|
    // zeroing the off-diagonal entry of [[app, apq], [conj(apq), aqq]].
    let b = apq.norm();
    let u = apq / b;
    let tau = (aqq - app) / (2.0 * b);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    (c, s, u)
}

fn off_diag_norm(w: &ComplexMatrix) -> f64 {
    let n = w.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += w[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Rejects inputs whose symmetry defect exceeds `1e-12 * ||A||_F` and works
/// on the Hermitian part afterwards. Ordering is descending by eigenvalue;
/// ties keep the sweep order, which makes frames of degenerate eigenspaces
/// reproducible.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEig> {
    assert!(a.is_square(), "hermitian_eig requires a square matrix");
    let n = a.rows();
    if n == 0 {
        return Ok(HermitianEig {
            eigenvalues: vec![],
            vectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let scale = a.fro_norm();
    let defect = a.hermitian_defect();
    if defect > HERM_PRE_TOL * scale {
        return Err(Error::NotHermitian {
            defect,
            bound: HERM_PRE_TOL * scale,
        });
    }

    // Hermitian part; also forces the diagonal real.
    let mut w = ComplexMatrix::from_fn(n, n, |i, j| {
        (a[(i, j)] + a[(j, i)].conj()) * C64::new(0.5, 0.0)
    });
    let mut v = ComplexMatrix::identity(n);

    let target = 1e-14 * scale.max(f64::MIN_POSITIVE);
    for _ in 0..MAX_SWEEPS {
        if off_diag_norm(&w) <= target {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = w[(p, q)];
                if apq.norm() <= target / (n as f64) {
                    continue;
                }
                let (c, s, u) = rot_for(w[(p, p)].re, w[(q, q)].re, apq);
                let (cs, su, snu) = (C64::new(c, 0.0), u * s, u.conj() * s);
                // columns: col_p' = c*col_p - s*conj(u)*col_q ; col_q' = s*u*col_p + c*col_q
                for i in 0..n {
                    let (wip, wiq) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = cs * wip - snu * wiq;
                    w[(i, q)] = su * wip + cs * wiq;
                }
                // rows: row_p' = c*row_p - s*u*row_q ; row_q' = s*conj(u)*row_p + c*row_q
                for j in 0..n {
                    let (wpj, wqj) = (w[(p, j)], w[(q, j)]);
                    w[(p, j)] = cs * wpj - su * wqj;
                    w[(q, j)] = snu * wpj + cs * wqj;
                }
                w[(p, p)] = C64::new(w[(p, p)].re, 0.0);
                w[(q, q)] = C64::new(w[(q, q)].re, 0.0);
                w[(p, q)] = C64::new(0.0, 0.0);
                w[(q, p)] = C64::new(0.0, 0.0);
                for i in 0..n {
                    let (vip, viq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = cs * vip - snu * viq;
                    v[(i, q)] = su * vip + cs * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        w[(j, j)]
            .re
            .partial_cmp(&w[(i, i)].re)
            .expect("finite eigenvalues")
    });

    let eigenvalues: Vec<f64> = order.iter().map(|&i| w[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    fix_column_phases(&mut vectors, None);
    Ok(HermitianEig {
        eigenvalues,
        vectors,
    })
}

/// Multiply each column by a unimodular scalar so that its first coordinate
/// with modulus above 1e-8 is real positive. When `coupled` is given, the
/// same scalar is applied to the corresponding column there.
fn fix_column_phases(m: &mut ComplexMatrix, mut coupled: Option<&mut ComplexMatrix>) {
    for j in 0..m.cols() {
        let mut phase = None;
        for i in 0..m.rows() {
            let e = m[(i, j)];
            if e.norm() > PHASE_PICK_TOL {
                phase = Some(e / e.norm());
                break;
            }
        }
        if let Some(ph) = phase {
            let f = ph.conj();
            for i in 0..m.rows() {
                m[(i, j)] *= f;
            }
            if let Some(other) = coupled.as_deref_mut() {
                for i in 0..other.rows() {
                    other[(i, j)] *= f;
                }
            }
        }
    }
}

/// One-sided Jacobi SVD. Works on the matrix with at least as many rows as
/// columns; the other case is handled by transposing.
pub fn svd(a: &ComplexMatrix) -> Svd {
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return Svd {
            u: ComplexMatrix::zeros(m, 0),
            singular_values: vec![],
            v: ComplexMatrix::zeros(n, 0),
        };
    }
    if m < n {
        let t = svd(&a.adjoint());
        return Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        };
    }

    let mut w = a.clone();
    let mut v = ComplexMatrix::identity(n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let mut npp = 0.0;
                let mut nqq = 0.0;
                let mut d = C64::new(0.0, 0.0);
                for i in 0..m {
                    let (wip, wiq) = (w[(i, p)], w[(i, q)]);
                    npp += wip.norm_sqr();
                    nqq += wiq.norm_sqr();
                    d += wip.conj() * wiq;
                }
                if npp == 0.0 || nqq == 0.0 {
                    continue;
                }
                if d.norm() <= 1e-15 * (npp * nqq).sqrt() {
                    continue;
                }
                rotated = true;
                let (c, s, u) = rot_for(npp, nqq, d);
                let (cs, su, snu) = (C64::new(c, 0.0), u * s, u.conj() * s);
                for i in 0..m {
                    let (wip, wiq) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = cs * wip - snu * wiq;
                    w[(i, q)] = su * wip + cs * wiq;
                }
                for i in 0..n {
                    let (vip, viq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = cs * vip - snu * viq;
                    v[(i, q)] = su * vip + cs * viq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| w[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("finite norms"));
    norms = order.iter().map(|&j| norms[j]).collect();

    let sigma_max = norms.first().copied().unwrap_or(0.0);
    let mut u_mat = ComplexMatrix::zeros(m, n);
    let mut v_mat = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    let mut dead = Vec::new();
    for (jj, &j) in order.iter().enumerate() {
        if norms[jj] > 1e-14 * sigma_max.max(f64::MIN_POSITIVE) {
            let inv = C64::new(1.0 / norms[jj], 0.0);
            for i in 0..m {
                u_mat[(i, jj)] = w[(i, j)] * inv;
            }
        } else {
            norms[jj] = 0.0;
            dead.push(jj);
        }
    }
    fix_column_phases(&mut v_mat, Some(&mut u_mat));
    if !dead.is_empty() {
        // Columns of exactly-zero singular value: complete U deterministically.
        let live: Vec<usize> = (0..n).filter(|j| !dead.contains(j)).collect();
        let mut basis = ComplexMatrix::zeros(m, live.len());
        for (k, &j) in live.iter().enumerate() {
            for i in 0..m {
                basis[(i, k)] = u_mat[(i, j)];
            }
        }
        let full = complete_orthonormal(&basis, m);
        for (k, &j) in dead.iter().enumerate() {
            for i in 0..m {
                u_mat[(i, j)] = full[(i, live.len() + k)];
            }
        }
    }

    Svd {
        u: u_mat,
        singular_values: norms,
        v: v_mat,
    }
}

/// Extend `basis` (orthonormal columns, possibly zero of them) to an
/// orthonormal basis of the ambient space; the first columns are `basis`
/// unchanged, the added ones come from standard basis vectors by modified
/// Gram-Schmidt in index order.
pub fn complete_orthonormal(basis: &ComplexMatrix, ambient: usize) -> ComplexMatrix {
    assert_eq!(basis.rows(), ambient);
    let k = basis.cols();
    assert!(k <= ambient);
    let mut cols: Vec<Vec<C64>> = (0..k).map(|j| basis.col(j)).collect();
    for i in 0..ambient {
        if cols.len() == ambient {
            break;
        }
        let mut w = vec![C64::new(0.0, 0.0); ambient];
        w[i] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for c in &cols {
                let coeff = crate::matrix::inner(c, &w);
                for (wi, ci) in w.iter_mut().zip(c) {
                    *wi -= coeff * ci;
                }
            }
        }
        let nw = crate::matrix::vec_norm(&w);
        if nw > 1e-4 {
            let inv = C64::new(1.0 / nw, 0.0);
            for wi in w.iter_mut() {
                *wi *= inv;
            }
            cols.push(w);
        }
    }
    assert_eq!(cols.len(), ambient, "orthonormal completion fell short");
    let mut out = ComplexMatrix::zeros(ambient, ambient);
    for (j, c) in cols.iter().enumerate() {
        out.set_col(j, c);
    }
    out
}

/// Positive-semidefinite square root. Eigenvalues below -1e-10 are
/// rejected; eigenvalues in the rounding band around zero are snapped to
/// exactly zero so the result has genuine machine-zero directions.
pub fn psd_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(a)?;
    let lam_max = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let floor = EIG_ZERO_FLOOR * lam_max.max(1.0);
    let mut roots = Vec::with_capacity(eig.eigenvalues.len());
    for &lam in &eig.eigenvalues {
        if lam < -PSD_NEG_TOL {
            return Err(Error::NotPsd { eigenvalue: lam });
        }
        roots.push(if lam <= floor { 0.0 } else { lam.sqrt() });
    }
    let u = &eig.vectors;
    let n = a.rows();
    let mut s = ComplexMatrix::zeros(n, n);
    for (k, &r) in roots.iter().enumerate() {
        if r == 0.0 {
            continue;
        }
        for i in 0..n {
            let ui = u[(i, k)] * r;
            for j in 0..n {
                s[(i, j)] += ui * u[(j, k)].conj();
            }
        }
    }
    // Symmetrize away rounding
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        (s[(i, j)] + s[(j, i)].conj()) * C64::new(0.5, 0.0)
    }))
}

/// Moore-Penrose pseudoinverse with relative rank cutoff `tol`.
pub fn pinv(a: &ComplexMatrix, tol: f64) -> ComplexMatrix {
    let dec = svd(a);
    let sigma_max = dec.singular_values.first().copied().unwrap_or(0.0);
    let mut out = ComplexMatrix::zeros(a.cols(), a.rows());
    if sigma_max == 0.0 {
        return out;
    }
    let cut = tol * sigma_max;
    for (k, &s) in dec.singular_values.iter().enumerate() {
        if s <= cut {
            continue;
        }
        let inv = 1.0 / s;
        for i in 0..a.cols() {
            let vi = dec.v[(i, k)] * inv;
            for j in 0..a.rows() {
                out[(i, j)] += vi * dec.u[(j, k)].conj();
            }
        }
    }
    out
}

/// Ordered orthonormal basis of a subspace, fixing matrix coordinates for
/// operators between subspaces.
#[derive(Debug, Clone)]
pub struct Frame {
    ambient: usize,
    vectors: ComplexMatrix,
    tol: f64,
}

impl Frame {
    /// Wrap orthonormal columns; the Gram matrix must equal the identity
    /// within 1e-10.
    pub fn new(vectors: ComplexMatrix, tol: f64) -> Result<Frame> {
        let gram = vectors.adjoint().mul(&vectors);
        let defect = if gram.rows() == 0 {
            0.0
        } else {
            gram.identity_defect()
        };
        if defect > 1e-10 {
            return Err(Error::NotUnitary {
                what: "frame Gram matrix".into(),
                defect,
            });
        }
        if vectors.cols() > vectors.rows() {
            return Err(Error::DimensionMismatch {
                what: "frame cardinality vs ambient dimension".into(),
                expected: vectors.rows(),
                got: vectors.cols(),
            });
        }
        Ok(Frame {
            ambient: vectors.rows(),
            vectors,
            tol,
        })
    }

    pub fn empty(ambient: usize) -> Frame {
        Frame {
            ambient,
            vectors: ComplexMatrix::zeros(ambient, 0),
            tol: RANK_TOL,
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn vectors(&self) -> &ComplexMatrix {
        &self.vectors
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Coordinates of an ambient vector relative to this frame.
    pub fn coords(&self, v: &[C64]) -> Vec<C64> {
        self.vectors.adjoint_mul_vec(v)
    }

    /// Ambient vector from frame coordinates.
    pub fn embed(&self, coords: &[C64]) -> Vec<C64> {
        self.vectors.mul_vec(coords)
    }

    /// Compress an ambient operator to frame coordinates: out^H * M * in.
    pub fn compress(codomain: &Frame, m: &ComplexMatrix, domain: &Frame) -> ComplexMatrix {
        codomain.vectors.adjoint().mul(m).mul(&domain.vectors)
    }
}

/// Orthonormal frame of the range of `A`, rank decided at `tol * sigma_max`.
pub fn range_frame(a: &ComplexMatrix, tol: f64) -> Frame {
    let dec = svd(a);
    let sigma_max = dec.singular_values.first().copied().unwrap_or(0.0);
    if sigma_max == 0.0 {
        return Frame::empty(a.rows());
    }
    let r = dec
        .singular_values
        .iter()
        .take_while(|&&s| s > tol * sigma_max)
        .count();
    Frame::new(dec.u.submatrix(0, a.rows(), 0, r), tol).expect("SVD columns are orthonormal")
}

/// Orthonormal frame of the kernel of `A`.
pub fn kernel_frame(a: &ComplexMatrix, tol: f64) -> Frame {
    let n = a.cols();
    let dec = svd(a);
    let sigma_max = dec.singular_values.first().copied().unwrap_or(0.0);
    let r = if sigma_max == 0.0 {
        0
    } else {
        dec.singular_values
            .iter()
            .take_while(|&&s| s > tol * sigma_max)
            .count()
    };
    let row_space = dec.v.submatrix(0, n, 0, r);
    let full = complete_orthonormal(&row_space, n);
    Frame::new(full.submatrix(0, n, r, n), tol).expect("completion is orthonormal")
}

/// Classify a matrix as contraction / isometry / coisometry / unitary.
///
/// Singular values in (1, 1+tol] count as exactly 1, so constructed
/// unitaries with rounding noise classify as contractions.
pub fn classify(a: &ComplexMatrix, tol: f64) -> Classification {
    let dec = svd(a);
    let sigma_max = dec.singular_values.first().copied().unwrap_or(0.0);
    let is_contraction = sigma_max <= 1.0 + tol;
    let is_isometry = if a.cols() == 0 {
        true
    } else {
        a.adjoint().mul(a).identity_defect() <= tol
    };
    let is_coisometry = if a.rows() == 0 {
        true
    } else {
        a.mul(&a.adjoint()).identity_defect() <= tol
    };
    Classification {
        sigma_max,
        is_contraction,
        is_isometry,
        is_coisometry,
        is_unitary: is_isometry && is_coisometry,
    }
}

/// Largest singular value.
pub fn sigma_max(a: &ComplexMatrix) -> f64 {
    svd(a).singular_values.first().copied().unwrap_or(0.0)
}

/// Clamp singular values lying in (1, 1+tol] to exactly 1. Values beyond
/// 1+tol are an error surfaced by the caller's norm check, not here.
pub fn clamp_singular_to_one(a: &ComplexMatrix, tol: f64) -> ComplexMatrix {
    let dec = svd(a);
    let needs = dec
        .singular_values
        .iter()
        .any(|&s| s > 1.0 && s <= 1.0 + tol);
    if !needs {
        return a.clone();
    }
    let k = dec.singular_values.len();
    let mut out = ComplexMatrix::zeros(a.rows(), a.cols());
    for j in 0..k {
        let s = dec.singular_values[j].min(1.0);
        if s == 0.0 {
            continue;
        }
        for i in 0..a.rows() {
            let ui = dec.u[(i, j)] * s;
            for l in 0..a.cols() {
                out[(i, l)] += ui * dec.v[(l, j)].conj();
            }
        }
    }
    out
}

/// Solve A X = B by partial-pivoting LU; A square.
pub fn lu_solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    assert!(a.is_square(), "lu_solve needs a square matrix");
    assert_eq!(a.rows(), b.rows(), "lu_solve shape mismatch");
    let n = a.rows();
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let mut piv = k;
        let mut best = lu[(k, k)].norm();
        for i in k + 1..n {
            let v = lu[(i, k)].norm();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best <= 1e-14 * scale {
            return Err(Error::SingularSolve { pivot: k });
        }
        if piv != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = tmp;
            }
            for j in 0..x.cols() {
                let tmp = x[(k, j)];
                x[(k, j)] = x[(piv, j)];
                x[(piv, j)] = tmp;
            }
        }
        let inv = C64::new(1.0, 0.0) / lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] * inv;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for j in k + 1..n {
                let l = lu[(k, j)] * f;
                lu[(i, j)] -= l;
            }
            for j in 0..x.cols() {
                let r = x[(k, j)] * f;
                x[(i, j)] -= r;
            }
        }
    }
    for k in (0..n).rev() {
        let inv = C64::new(1.0, 0.0) / lu[(k, k)];
        for j in 0..x.cols() {
            let mut acc = x[(k, j)];
            for l in k + 1..n {
                acc -= lu[(k, l)] * x[(l, j)];
            }
            x[(k, j)] = acc * inv;
        }
    }
    Ok(x)
}
