//! Deterministic generators of test instances: seeded random contractions,
//! Jordan-type nilpotents, nested block contractions built through the
//! defect-compressed coupling form, and the degree-zero counterexample
//! factors.
//!
//! All randomness comes from SplitMix64 (published constants) feeding a
//! Box-Muller transform, so the same seed and parameters reproduce the same
//! instance bit-for-bit on any platform or implementation language.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, psd_sqrt, range_frame, Frame, RANK_TOL};
use crate::matrix::ComplexMatrix;
use crate::operators::StructuredOperator;

/// SplitMix64: state advances by the golden-gamma constant; output is the
/// standard two-round xor-multiply finalizer.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of mantissa.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal pair via Box-Muller.
    pub fn next_gaussian_pair(&mut self) -> (f64, f64) {
        let u1 = 1.0 - self.next_f64(); // (0, 1]
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let th = 2.0 * std::f64::consts::PI * u2;
        (r * th.cos(), r * th.sin())
    }

    /// Standard complex normal: (g1 + i g2) / sqrt(2).
    pub fn next_complex_gaussian(&mut self) -> C64 {
        let (g1, g2) = self.next_gaussian_pair();
        C64::new(g1, g2) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
    }
}

/// Matrix of i.i.d. standard complex Gaussians, row-major fill order.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
    let mut rng = SplitMix64::new(seed);
    ComplexMatrix::from_vec(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| rng.next_complex_gaussian())
            .collect(),
    )
}

fn gaussian_matrix_from(rng: &mut SplitMix64, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_vec(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| rng.next_complex_gaussian())
            .collect(),
    )
}

/// Random n-by-n contraction with sigma_max = 1 - margin: Gaussian entries
/// rescaled by (1 - margin) / sigma_max.
pub fn random_contraction(n: usize, seed: u64, margin: f64) -> ComplexMatrix {
    assert!((0.0..1.0).contains(&margin), "margin must lie in [0, 1)");
    let mut rng = SplitMix64::new(seed);
    random_contraction_shaped(&mut rng, n, n, margin)
}

/// Rectangular variant used for coupling parameters between defect frames.
pub fn random_contraction_shaped(
    rng: &mut SplitMix64,
    rows: usize,
    cols: usize,
    margin: f64,
) -> ComplexMatrix {
    let g = gaussian_matrix_from(rng, rows, cols);
    if rows == 0 || cols == 0 {
        return g;
    }
    let smax = linalg::sigma_max(&g);
    if smax == 0.0 {
        return g;
    }
    g.scale(C64::new((1.0 - margin) / smax, 0.0))
}

/// Unitary built as a product of n Householder-type reflections
/// I - 2 v v^H / |v|^2 with Gaussian v.
pub fn random_unitary(n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = SplitMix64::new(seed);
    random_unitary_from(&mut rng, n)
}

fn random_unitary_from(rng: &mut SplitMix64, n: usize) -> ComplexMatrix {
    let mut u = ComplexMatrix::identity(n);
    for _ in 0..n {
        let v: Vec<C64> = (0..n).map(|_| rng.next_complex_gaussian()).collect();
        let nsq: f64 = v.iter().map(|e| e.norm_sqr()).sum();
        if nsq == 0.0 {
            continue;
        }
        let refl = ComplexMatrix::from_fn(n, n, |i, j| {
            let delta = if i == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
            delta - v[i] * v[j].conj() * C64::new(2.0 / nsq, 0.0)
        });
        u = refl.mul(&u);
    }
    u
}

/// Jordan-type nilpotent: `scale` on the superdiagonal of an m-by-m matrix.
/// N^m = 0 exactly, N^(m-1) != 0, and the operator norm equals `scale`.
pub fn jordan_nilpotent(m: usize, scale: f64) -> ComplexMatrix {
    assert!(m >= 1, "nilpotency order must be at least 1");
    assert!(scale > 0.0 && scale <= 1.0, "scale must lie in (0, 1]");
    ComplexMatrix::from_fn(m, m, |i, j| {
        if j == i + 1 {
            C64::new(scale, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

fn defect_pair(t: &ComplexMatrix) -> Result<(ComplexMatrix, Frame)> {
    // (D, frame of cl Ran D) for D = (I - T^H T)^(1/2); callers pass T or T^H.
    let n = t.rows();
    let gram = ComplexMatrix::identity(n).sub(&t.adjoint().mul(t));
    let d = psd_sqrt(&gram)?;
    Ok((d.clone(), range_frame(&d, RANK_TOL)))
}

/// Coupling block X = D_{A*} Gamma D_B realized through the defect frames of
/// A (top-left) and B (bottom-right), with Gamma a strict contraction drawn
/// from `rng`.
fn coupling_through_defects(
    rng: &mut SplitMix64,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    margin: f64,
) -> Result<ComplexMatrix> {
    let (d_astar, f_astar) = defect_pair(&a.adjoint())?;
    let (d_b, f_b) = defect_pair(b)?;
    let gamma = random_contraction_shaped(rng, f_astar.dim(), f_b.dim(), margin);
    Ok(d_astar
        .mul(f_astar.vectors())
        .mul(&gamma)
        .mul(&f_b.vectors().adjoint())
        .mul(&d_b))
}

/// Dense block upper-triangular contraction with the declared split sizes.
/// The diagonal blocks are random strict contractions and both couplings are
/// produced through the defect-compressed form, so the assembled operator is
/// a contraction by construction.
pub fn random_block3(dims: (usize, usize, usize), seed: u64) -> ComplexMatrix {
    let (n1, n0, nm1) = dims;
    let mut rng = SplitMix64::new(seed);
    let margin = 0.1 + 0.3 * rng.next_f64();
    let s = random_contraction_shaped(&mut rng, n1, n1, margin);
    let n = random_contraction_shaped(&mut rng, n0, n0, margin);
    let c = random_contraction_shaped(&mut rng, nm1, nm1, margin);

    let gmargin = 0.1 + 0.3 * rng.next_f64();
    let x = coupling_through_defects(&mut rng, &s, &n, gmargin)
        .expect("strict contractions have PSD defect Grams");
    let t1 = ComplexMatrix::block2x2(&s, &x, &ComplexMatrix::zeros(n0, n1), &n);
    let x1 = coupling_through_defects(&mut rng, &t1, &c, gmargin)
        .expect("nested contraction has PSD defect Gram");
    ComplexMatrix::block2x2(&t1, &x1, &ComplexMatrix::zeros(nm1, n1 + n0), &c)
}

/// Structured contraction shift + nilpotent + backward shift with random
/// strict coupling parameters. The nilpotent is the Jordan block of order
/// n0 with a seed-dependent scale.
pub fn random_structured(d1: usize, n0: usize, d3: usize, seed: u64) -> Result<StructuredOperator> {
    let mut rng = SplitMix64::new(seed);
    let scales = [0.5, 0.8, 1.0];
    let scale = scales[(rng.next_u64() % 3) as usize];
    let n = if n0 > 0 {
        jordan_nilpotent(n0, scale)
    } else {
        ComplexMatrix::zeros(0, 0)
    };
    let order = n0.max(1);
    let margin = 0.15 + 0.3 * rng.next_f64();

    let dim_dn = StructuredOperator::nilpotent_defect_dim(&n)?;
    let gamma = random_contraction_shaped(&mut rng, d1, dim_dn, margin);
    let dim_dt1star = StructuredOperator::middle_defect_star_dim(d1, &n, &gamma)?;
    let gamma1 = random_contraction_shaped(&mut rng, dim_dt1star, d3, margin);
    StructuredOperator::assemble(d1, n, gamma, gamma1, order, d3)
}

/// Factors for the degree-zero product: a nilpotent N of order m, an
/// isometry V2 = [V21; V22] with equally weighted rows, and a coisometry V1
/// whose kernel contains the whole adjoint defect space of N.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub n: ComplexMatrix,
    pub v1: ComplexMatrix,
    pub v2: ComplexMatrix,
    pub m_dim: usize,
}

/// Build the counterexample factors for prescribed defect dimensions
/// (dim_t, dim_tstar) of the would-be contraction, nilpotency order m and
/// middle-space dimension m_dim.
pub fn remark_counterexample(
    defect_dims: (usize, usize),
    m: usize,
    m_dim: usize,
    seed: u64,
) -> Result<Counterexample> {
    let (dt, dtstar) = defect_dims;
    let n = jordan_nilpotent(m, 0.8);
    let dim_dn = m; // strict scale keeps the full defect
    let dim_dnstar = m;
    if dim_dn < dt {
        return Err(Error::InfeasibleDimensions(format!(
            "isometry V21 needs dim D_N = {dim_dn} >= dim D_T = {dt}"
        )));
    }
    if m_dim < dt || m_dim < dtstar {
        return Err(Error::InfeasibleDimensions(format!(
            "middle space dim {m_dim} must dominate both defect dims ({dt}, {dtstar})"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    // V2 = [A; B] / sqrt(2) with A, B isometries: |V21 h| = |V22 h| for all h.
    let a = random_unitary_from(&mut rng, dim_dn).submatrix(0, dim_dn, 0, dt);
    let b = random_unitary_from(&mut rng, m_dim).submatrix(0, m_dim, 0, dt);
    let half = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let v2 = a.scale(half).vcat(&b.scale(half));
    // V1 = [0 | W]: kernel contains D_{N*}, rows orthonormal.
    let w = random_unitary_from(&mut rng, m_dim).submatrix(0, dtstar, 0, m_dim);
    let v1 = ComplexMatrix::zeros(dtstar, dim_dnstar).hcat(&w);
    // The constant term W * B / sqrt(2) must be nonzero for the product to
    // have degree exactly zero.
    let const_term = w.mul(&b).scale(half);
    if const_term.fro_norm() < 1e-6 {
        return Err(Error::InfeasibleDimensions(
            "degenerate seed: constant term of the product vanishes".into(),
        ));
    }
    Ok(Counterexample { n, v1, v2, m_dim })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{classify, CLASSIFY_TOL};

    #[test]
    fn splitmix_reference_values() {
        // First outputs for seed 1234567, from the published algorithm.
        let mut rng = SplitMix64::new(1234567);
        let a = rng.next_u64();
        let mut rng2 = SplitMix64::new(1234567);
        assert_eq!(a, rng2.next_u64());
        assert_ne!(rng.next_u64(), a);
    }

    #[test]
    fn determinism_bit_identical() {
        let a = random_contraction(4, 99, 0.1);
        let b = random_contraction(4, 99, 0.1);
        assert_eq!(a, b);
        let s = random_block3((2, 2, 2), 5);
        let t = random_block3((2, 2, 2), 5);
        assert_eq!(s, t);
    }

    #[test]
    fn contraction_norm_hits_target() {
        let a = random_contraction(4, 1, 0.1);
        let smax = linalg::sigma_max(&a);
        assert!((smax - 0.9).abs() < 1e-12, "sigma_max {smax}");
        assert!(classify(&a, CLASSIFY_TOL).is_contraction);

        let b = random_contraction(3, 2, 0.0);
        assert!(classify(&b, CLASSIFY_TOL).is_contraction);
    }

    #[test]
    fn empty_contraction() {
        let a = random_contraction(0, 1, 0.5);
        assert!(a.is_empty_shape());
    }

    #[test]
    fn jordan_properties() {
        assert_eq!(jordan_nilpotent(1, 1.0), ComplexMatrix::zeros(1, 1));
        let n2 = jordan_nilpotent(2, 1.0);
        assert_eq!(n2[(0, 1)], C64::new(1.0, 0.0));
        let n3 = jordan_nilpotent(3, 0.8);
        let n3sq = n3.mul(&n3);
        assert!(n3sq.fro_norm() > 0.0);
        assert_eq!(n3sq.mul(&n3).fro_norm(), 0.0);
        assert!((linalg::sigma_max(&n3) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn block3_is_contraction_and_triangular() {
        for seed in [2u64, 5, 17] {
            let t = random_block3((2, 2, 2), seed);
            assert!(classify(&t, CLASSIFY_TOL).is_contraction, "seed {seed}");
            for i in 2..6 {
                for j in 0..i.min(4) {
                    if (i >= 2 && j < 2) || (i >= 4 && j < 4) {
                        assert_eq!(t[(i, j)], C64::new(0.0, 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn block3_degenerate_dims() {
        let t = random_block3((0, 3, 0), 4);
        assert_eq!((t.rows(), t.cols()), (3, 3));
        assert!(classify(&t, CLASSIFY_TOL).is_contraction);
    }

    #[test]
    fn counterexample_shapes_and_isometries() {
        let ce = remark_counterexample((1, 1), 2, 2, 3).unwrap();
        let cl2 = classify(&ce.v2, 1e-10);
        assert!(cl2.is_isometry);
        let cl1 = classify(&ce.v1.adjoint(), 1e-10);
        assert!(cl1.is_isometry, "V1 must be a coisometry");
        // kernel contains the adjoint defect coordinates of N
        let head = ce.v1.submatrix(0, ce.v1.rows(), 0, 2);
        assert_eq!(head.fro_norm(), 0.0);
        // equal norms condition on the two row blocks of V2
        let v21 = ce.v2.submatrix(0, 2, 0, 1);
        let v22 = ce.v2.submatrix(2, 2 + ce.m_dim, 0, 1);
        assert!((v21.fro_norm() - v22.fro_norm()).abs() < 1e-12);
    }

    #[test]
    fn counterexample_invariants_across_shapes() {
        for (dims, m, mdim, seed) in [
            ((1usize, 1usize), 2usize, 2usize, 1u64),
            ((2, 2), 3, 3, 4),
            ((1, 2), 2, 4, 9),
            ((2, 1), 4, 2, 11),
        ] {
            let ce = remark_counterexample(dims, m, mdim, seed).unwrap();
            assert!(ce.v1.mul(&ce.v1.adjoint()).identity_defect() < 1e-10);
            assert!(ce.v2.adjoint().mul(&ce.v2).identity_defect() < 1e-10);
            // kernel of V1 contains the whole adjoint defect block of N
            assert_eq!(ce.v1.submatrix(0, ce.v1.rows(), 0, m).fro_norm(), 0.0);
        }
    }

    #[test]
    fn counterexample_infeasible() {
        assert!(remark_counterexample((3, 1), 2, 3, 1).is_err());
        assert!(remark_counterexample((1, 1), 2, 0, 1).is_err());
    }
}
