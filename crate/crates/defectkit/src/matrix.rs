//! Dense complex matrices in row-major order.
//!
//! `ComplexMatrix` is the universal exchange format of the crate: every
//! operator, coupling, frame and unitary that lives on a finite-dimensional
//! space is one of these. Matrices with zero rows or zero columns are
//! first-class citizens; products, adjoints and direct sums are defined for
//! them, and several constructions (defect spaces of isometries, the zero
//! characteristic functions of shifts) produce them on purpose.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64 as C64;
use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Dense rectangular array of complex scalars, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<C64>,
}

impl ComplexMatrix {
    /// Zero matrix of the given shape. Either dimension may be zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            entries: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Build from a row-major entry vector. Panics if the count is wrong.
    pub fn from_vec(rows: usize, cols: usize, entries: Vec<C64>) -> Self {
        assert_eq!(
            entries.len(),
            rows * cols,
            "entry count {} does not match {}x{}",
            entries.len(),
            rows,
            cols
        );
        ComplexMatrix {
            rows,
            cols,
            entries,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        ComplexMatrix {
            rows,
            cols,
            entries,
        }
    }

    /// Square matrix with the given real numbers on the diagonal.
    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(*d, 0.0);
        }
        m
    }

    /// Convenience constructor from real entries (imaginary parts zero).
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        ComplexMatrix::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// True if either dimension is zero (no entries stored).
    pub fn is_empty_shape(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[C64]) {
        assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].conj())
    }

    pub fn scale(&self, c: C64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e * c).collect(),
        }
    }

    pub fn add(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "add shape mismatch"
        );
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "sub shape mismatch"
        );
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Matrix product. Inner dimensions must agree; zero inner dimension
    /// yields the zero matrix of the outer shape.
    pub fn mul(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols, rhs.rows,
            "mul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, x)| a * x).sum::<C64>())
            .collect()
    }

    /// A^H v without forming the adjoint.
    pub fn adjoint_mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.rows, v.len(), "adjoint_mul_vec shape mismatch");
        let mut out = vec![C64::new(0.0, 0.0); self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for j in 0..self.cols {
                out[j] += self[(i, j)].conj() * vi;
            }
        }
        out
    }

    /// Horizontal concatenation [self | rhs].
    pub fn hcat(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.rows, rhs.rows, "hcat row mismatch");
        ComplexMatrix::from_fn(self.rows, self.cols + rhs.cols, |i, j| {
            if j < self.cols {
                self[(i, j)]
            } else {
                rhs[(i, j - self.cols)]
            }
        })
    }

    /// Vertical concatenation [self; rhs].
    pub fn vcat(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.cols, "vcat col mismatch");
        ComplexMatrix::from_fn(self.rows + rhs.rows, self.cols, |i, j| {
            if i < self.rows {
                self[(i, j)]
            } else {
                rhs[(i - self.rows, j)]
            }
        })
    }

    /// 2x2 block assembly [[a, b], [c, d]]. Shapes must be consistent;
    /// empty blocks participate with their declared dimensions.
    pub fn block2x2(
        a: &ComplexMatrix,
        b: &ComplexMatrix,
        c: &ComplexMatrix,
        d: &ComplexMatrix,
    ) -> ComplexMatrix {
        a.hcat(b).vcat(&c.hcat(d))
    }

    /// diag(self, I_k): the padding every factorization identity uses to
    /// lift a block to a larger space.
    pub fn pad_identity(&self, k: usize) -> ComplexMatrix {
        self.direct_sum(&ComplexMatrix::identity(k))
    }

    /// Direct sum diag(self, rhs).
    pub fn direct_sum(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.rows + rhs.rows, self.cols + rhs.cols, |i, j| {
            if i < self.rows && j < self.cols {
                self[(i, j)]
            } else if i >= self.rows && j >= self.cols {
                rhs[(i - self.rows, j - self.cols)]
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> ComplexMatrix {
        assert!(r0 <= r1 && r1 <= self.rows && c0 <= c1 && c1 <= self.cols);
        ComplexMatrix::from_fn(r1 - r0, c1 - c0, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &ComplexMatrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn fro_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    /// Max-entry deviation from the identity (shape must be square).
    pub fn identity_defect(&self) -> f64 {
        assert!(self.is_square());
        let mut d: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let target = if i == j {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                };
                d = d.max((self[(i, j)] - target).norm());
            }
        }
        d
    }

    /// Max-entry deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        assert!(self.is_square());
        let mut d: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                d = d.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        d
    }

    pub fn all_finite(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.re.is_finite() && e.im.is_finite())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.entries[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.entries[i * self.cols + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let e = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i  ", e.re, e.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

// JSON format: {"rows": r, "cols": c, "entries": [[re, im], ...]} row-major.

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("ComplexMatrix", 3)?;
        st.serialize_field("rows", &self.rows)?;
        st.serialize_field("cols", &self.cols)?;
        st.serialize_field("entries", &EntrySeq(&self.entries))?;
        st.end()
    }
}

struct EntrySeq<'a>(&'a [C64]);

impl Serialize for EntrySeq<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.0.len()))?;
        for e in self.0 {
            seq.serialize_element(&[e.re, e.im])?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            rows: usize,
            cols: usize,
            entries: PairVec,
        }
        let raw = Raw::deserialize(deserializer)?;
        if raw.entries.0.len() != raw.rows * raw.cols {
            return Err(de::Error::custom(format!(
                "entry count {} does not match {}x{}",
                raw.entries.0.len(),
                raw.rows,
                raw.cols
            )));
        }
        let m = ComplexMatrix {
            rows: raw.rows,
            cols: raw.cols,
            entries: raw.entries.0,
        };
        if !m.all_finite() {
            return Err(de::Error::custom("non-finite matrix entry"));
        }
        Ok(m)
    }
}

struct PairVec(Vec<C64>);

impl<'de> Deserialize<'de> for PairVec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = PairVec;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a sequence of [re, im] pairs")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<PairVec, A::Error> {
                let mut out = Vec::with_capacity(seq.size_hint().unwrap_or(0));
                while let Some(pair) = seq.next_element::<[f64; 2]>()? {
                    out.push(C64::new(pair[0], pair[1]));
                }
                Ok(PairVec(out))
            }
        }
        deserializer.deserialize_seq(V)
    }
}

/// Validate the structural invariants of a matrix read from outside:
/// finite entries, consistent count.
pub fn validate_matrix(m: &ComplexMatrix) -> Result<(), Error> {
    if !m.all_finite() {
        return Err(Error::NonFiniteEntry);
    }
    Ok(())
}

/// Inner product `<u, v>` with the convention of linearity in the second slot.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn empty_shapes_compose() {
        let a = ComplexMatrix::zeros(3, 0);
        let b = ComplexMatrix::zeros(0, 4);
        let p = a.mul(&b);
        assert_eq!((p.rows(), p.cols()), (3, 4));
        assert_eq!(p.fro_norm(), 0.0);

        let adj = a.adjoint();
        assert_eq!((adj.rows(), adj.cols()), (0, 3));

        let s = a.direct_sum(&ComplexMatrix::identity(2));
        assert_eq!((s.rows(), s.cols()), (5, 2));
        assert_eq!(s[(3, 0)], c(1.0, 0.0));
    }

    #[test]
    fn product_and_adjoint() {
        let a = ComplexMatrix::from_fn(2, 2, |i, j| c((i + 1) as f64, j as f64));
        let b = ComplexMatrix::identity(2);
        assert_eq!(a.mul(&b), a);
        let aa = a.adjoint().adjoint();
        assert_eq!(aa, a);
    }

    #[test]
    fn block_assembly_round_trip() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::zeros(2, 1);
        let cm = ComplexMatrix::zeros(1, 2);
        let d = ComplexMatrix::from_real_diag(&[5.0]);
        let t = ComplexMatrix::block2x2(&a, &b, &cm, &d);
        assert_eq!((t.rows(), t.cols()), (3, 3));
        assert_eq!(t[(2, 2)], c(5.0, 0.0));
        assert_eq!(t.submatrix(0, 2, 0, 2), a);
    }

    #[test]
    fn json_round_trip() {
        let m = ComplexMatrix::from_fn(2, 3, |i, j| c(i as f64, -(j as f64)));
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"rows\":2"));
        assert!(s.contains("\"entries\":[[0.0,"));
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn json_rejects_bad_count() {
        let s = r#"{"rows":2,"cols":2,"entries":[[1.0,0.0]]}"#;
        assert!(serde_json::from_str::<ComplexMatrix>(s).is_err());
    }

    #[test]
    fn json_rejects_non_finite() {
        let s = r#"{"rows":1,"cols":1,"entries":[[1e999,0.0]]}"#;
        // serde_json parses 1e999 as inf
        assert!(serde_json::from_str::<ComplexMatrix>(s).is_err());
    }

    #[test]
    fn inner_product_conjugate_linear_first_slot() {
        let u = vec![c(0.0, 1.0)];
        let v = vec![c(0.0, 1.0)];
        assert_eq!(inner(&u, &v), c(1.0, 0.0));
    }
}
