//! Independent oracle for the structured pipeline: realize the structured
//! operator densely by truncating both shift spaces at a finite depth and
//! compare characteristic-function matrix elements computed through the
//! dense route (psd_sqrt of the truncated Gram, LU resolvent solve) against
//! the structured polynomial.
//!
//! Truncation perturbs the operator only at the boundary blocks, and the
//! truncated defect operators agree exactly with the true ones on vectors
//! supported near block zero, so for |z| = 0.3 and depth 20 the two routes
//! must agree up to the geometric tail 0.3^20 ~ 3e-11.

use num_complex::Complex64 as C64;

use defectkit::charfun::theta_coeffs;
use defectkit::linalg::{lu_solve, psd_sqrt};
use defectkit::matrix::ComplexMatrix;
use defectkit::models;
use defectkit::operators::{OperatorHandle, StructuredOperator};

/// Dense realization with `depth` coordinate blocks on each shift side.
/// Layout: shift blocks 0..depth, middle, backward blocks 0..depth.
fn truncate(op: &StructuredOperator, depth: usize) -> ComplexMatrix {
    let sp = op.space();
    let (d1, n0, d3) = (sp.d1, sp.n0, sp.d3);
    let n = depth * d1 + n0 + depth * d3;
    let mid0 = depth * d1;
    let back0 = mid0 + n0;
    let cp = op.couplings();
    let mut t = ComplexMatrix::zeros(n, n);
    // forward shift: block k -> block k + 1, top block truncated away
    for k in 0..depth.saturating_sub(1) {
        for i in 0..d1 {
            t[((k + 1) * d1 + i, k * d1 + i)] = C64::new(1.0, 0.0);
        }
    }
    // middle: N on itself plus the coupling into shift block 0
    for j in 0..n0 {
        for i in 0..n0 {
            t[(mid0 + i, mid0 + j)] = op.nilpotent()[(i, j)];
        }
        for i in 0..d1 {
            t[(i, mid0 + j)] = cp.xm[(i, j)];
        }
    }
    // backward block 0: couplings into shift block 0 and the middle
    for j in 0..d3 {
        for i in 0..d1 {
            t[(i, back0 + j)] = cp.b[(i, j)];
        }
        for i in 0..n0 {
            t[(mid0 + i, back0 + j)] = cp.e[(i, j)];
        }
    }
    // backward shift: block k -> block k - 1
    for k in 1..depth {
        for i in 0..d3 {
            t[(back0 + (k - 1) * d3 + i, back0 + k * d3 + i)] = C64::new(1.0, 0.0);
        }
    }
    t
}

#[test]
fn structured_theta_matches_dense_truncation() {
    let depth = 20;
    for (d1, n0, d3, seed) in [(1usize, 2usize, 1usize, 13u64), (2, 1, 1, 4), (1, 3, 2, 7)] {
        let op = models::random_structured(d1, n0, d3, seed).unwrap();
        let sp = op.space();
        let defect = op.defect_data();
        let theta = theta_coeffs(&OperatorHandle::Structured(op.clone()), op.order() + 5).unwrap();

        let tk = truncate(&op, depth);
        let n = tk.rows();
        let id = ComplexMatrix::identity(n);
        let d_t = psd_sqrt(&id.sub(&tk.adjoint().mul(&tk))).unwrap();
        let d_ts = psd_sqrt(&id.sub(&tk.mul(&tk.adjoint()))).unwrap();

        // embed the structured defect frames into the dense layout
        let mid0 = depth * sp.d1;
        let back0 = mid0 + sp.n0;
        let f_t = defect.t_side.frame.vectors(); // (n0 + d3) x dimT
        let f_ts = defect.tstar_side.frame.vectors(); // (d1 + n0) x dimT*
        let mut u = ComplexMatrix::zeros(n, f_t.cols());
        for j in 0..f_t.cols() {
            for i in 0..sp.n0 {
                u[(mid0 + i, j)] = f_t[(i, j)];
            }
            for i in 0..sp.d3 {
                u[(back0 + i, j)] = f_t[(sp.n0 + i, j)];
            }
        }
        let mut w = ComplexMatrix::zeros(n, f_ts.cols());
        for j in 0..f_ts.cols() {
            for i in 0..sp.d1 {
                w[(i, j)] = f_ts[(i, j)];
            }
            for i in 0..sp.n0 {
                w[(mid0 + i, j)] = f_ts[(sp.d1 + i, j)];
            }
        }

        for z in [
            C64::new(0.3, 0.0),
            C64::new(-0.15, 0.25),
            C64::new(0.0, -0.3),
        ] {
            // dense route: w^H (-T + z D_{T*} (I - z T*)^{-1} D_T) u
            let rhs = d_t.mul(&u);
            let solved = lu_solve(&id.sub(&tk.adjoint().scale(z)), &rhs).unwrap();
            let dense_theta = w
                .adjoint()
                .mul(&tk.mul(&u).scale(C64::new(-1.0, 0.0)).add(&d_ts.mul(&solved).scale(z)));
            let structured_theta = theta.eval(z);
            let dev = dense_theta.sub(&structured_theta).fro_norm();
            assert!(
                dev < 1e-8,
                "shape ({d1},{n0},{d3}) seed {seed} at z = {z}: deviation {dev:.3e}"
            );
        }
    }
}
