//! Dense complex vectors and matrices.
//!
//! Only what the detectors and precoders need: row-major storage, products,
//! conjugate transposes and a packed Hermitian type. Kernels that appear in
//! the complexity model take a [`Tally`] and report the real multiplications
//! they perform.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use thiserror::Error;

use crate::opcount::{Stage, Tally};

pub type C64 = Complex64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("empty matrix or vector")]
    Empty,
}

fn check(op: &'static str, ok: bool, left: (usize, usize), right: (usize, usize)) -> Result<(), LinalgError> {
    if ok {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch { op, left, right })
    }
}

/// Dense complex column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector(Vec<C64>);

impl ComplexVector {
    pub fn zeros(n: usize) -> Self {
        ComplexVector(vec![C64::new(0.0, 0.0); n])
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> C64) -> Self {
        ComplexVector((0..n).map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, C64> {
        self.0.iter()
    }

    /// u^H v, conjugating `self`.
    pub fn dot_h(&self, other: &ComplexVector) -> Result<C64, LinalgError> {
        check("dot_h", self.len() == other.len(), (self.len(), 1), (other.len(), 1))?;
        Ok(dot_h(&self.0, &other.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Euclidean norm.
    pub fn norm2(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, s: C64) -> ComplexVector {
        ComplexVector(self.0.iter().map(|&z| z * s).collect())
    }

    pub fn sub(&self, other: &ComplexVector) -> ComplexVector {
        assert_eq!(self.len(), other.len());
        ComplexVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &ComplexVector) -> ComplexVector {
        assert_eq!(self.len(), other.len());
        ComplexVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl From<Vec<C64>> for ComplexVector {
    fn from(v: Vec<C64>) -> Self {
        ComplexVector(v)
    }
}

impl Index<usize> for ComplexVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for ComplexVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        let len = rows.checked_mul(cols).expect("matrix dimension overflow");
        ComplexMatrix { rows, cols, data: vec![C64::new(0.0, 0.0); len] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Empty);
        }
        check("from_row_major", data.len() == rows * cols, (rows, cols), (data.len(), 1))?;
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_diag(d: &[C64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &z) in d.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> ComplexVector {
        ComplexVector::from_fn(self.rows, |i| self[(i, j)])
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn diag(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// Conjugate transpose.
    pub fn hermitian_of(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matvec(&self, v: &ComplexVector) -> Result<ComplexVector, LinalgError> {
        check("matvec", self.cols == v.len(), self.shape(), (v.len(), 1))?;
        let mut out = ComplexVector::zeros(self.rows);
        self.matvec_into(v.as_slice(), out.as_mut_slice(), &mut (), Stage::Other);
        Ok(out)
    }

    /// out = M x, 4 real multiplications per entry of M.
    pub fn matvec_into<T: Tally>(&self, x: &[C64], out: &mut [C64], tally: &mut T, stage: Stage) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
        tally.add(stage, 4 * (self.rows * self.cols) as u64);
    }

    /// out = M^H x without forming M^H.
    pub fn adjoint_matvec_into<T: Tally>(&self, x: &[C64], out: &mut [C64], tally: &mut T, stage: Stage) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        for (i, &xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * xi;
            }
        }
        tally.add(stage, 4 * (self.rows * self.cols) as u64);
    }

    pub fn adjoint_matvec(&self, v: &ComplexVector) -> Result<ComplexVector, LinalgError> {
        check("adjoint_matvec", self.rows == v.len(), self.shape(), (v.len(), 1))?;
        let mut out = ComplexVector::zeros(self.cols);
        self.adjoint_matvec_into(v.as_slice(), out.as_mut_slice(), &mut (), Stage::Other);
        Ok(out)
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        check("matmul", self.cols == other.rows, self.shape(), other.shape())?;
        Ok(self.matmul_counted(other, &mut (), Stage::Other))
    }

    pub(crate) fn matmul_counted<T: Tally>(&self, other: &ComplexMatrix, tally: &mut T, stage: Stage) -> ComplexMatrix {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        tally.add(stage, 4 * (self.rows * self.cols * other.cols) as u64);
        out
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        check("add", self.shape() == other.shape(), self.shape(), other.shape())?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(ComplexMatrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        check("sub", self.shape() == other.shape(), self.shape(), other.shape())?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(ComplexMatrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: C64) -> ComplexMatrix {
        ComplexMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Stack `self` on top of `other` (same column count).
    pub fn vstack(&self, other: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        check("vstack", self.cols == other.cols, self.shape(), other.shape())?;
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(ComplexMatrix { rows: self.rows + other.rows, cols: self.cols, data })
    }

    /// Place `other` to the right of `self` (same row count).
    pub fn hstack(&self, other: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        check("hstack", self.rows == other.rows, self.shape(), other.shape())?;
        Ok(ComplexMatrix::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)]
            } else {
                other[(i, j - self.cols)]
            }
        }))
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Hermitian matrix stored as a real diagonal plus the strict upper triangle.
///
/// The lower triangle is the conjugate of the upper one by construction, so
/// `to_full()` always yields M = M^H exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    diag: Vec<f64>,
    // row-major strict upper triangle
    upper: Vec<C64>,
}

impl HermitianMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimensions must be positive");
        HermitianMatrix { dim, diag: vec![0.0; dim], upper: vec![C64::new(0.0, 0.0); dim * (dim - 1) / 2] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        m.diag.iter_mut().for_each(|d| *d = 1.0);
        m
    }

    pub fn from_real_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        m.diag.copy_from_slice(d);
        m
    }

    /// Takes the upper triangle and the real part of the diagonal of a square matrix.
    pub fn from_upper(m: &ComplexMatrix) -> Result<Self, LinalgError> {
        check("from_upper", m.rows() == m.cols(), m.shape(), m.shape())?;
        let n = m.rows();
        let mut h = Self::zeros(n);
        for i in 0..n {
            h.diag[i] = m[(i, i)].re;
            for j in i + 1..n {
                h.set_upper(i, j, m[(i, j)]);
            }
        }
        Ok(h)
    }

    #[inline]
    fn upper_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j);
        // rows 0..i contribute (n-1) + (n-2) + ... + (n-i) entries
        i * (2 * self.dim - i - 1) / 2 + (j - i - 1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => C64::new(self.diag[i], 0.0),
            Less => self.upper[self.upper_index(i, j)],
            Greater => self.upper[self.upper_index(j, i)].conj(),
        }
    }

    /// Sets entry (i, j) with i < j; (j, i) follows by conjugation.
    pub fn set_upper(&mut self, i: usize, j: usize, z: C64) {
        assert!(i < j, "set_upper needs i < j");
        let k = self.upper_index(i, j);
        self.upper[k] = z;
    }

    pub fn set_diag(&mut self, i: usize, d: f64) {
        self.diag[i] = d;
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn to_full(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    /// M + s I.
    pub fn shifted(&self, s: f64) -> HermitianMatrix {
        let mut m = self.clone();
        m.diag.iter_mut().for_each(|d| *d += s);
        m
    }

    /// Returns the off-diagonal part E with zero diagonal.
    pub fn off_diagonal(&self) -> HermitianMatrix {
        HermitianMatrix { dim: self.dim, diag: vec![0.0; self.dim], upper: self.upper.clone() }
    }

    pub fn matvec(&self, v: &ComplexVector) -> Result<ComplexVector, LinalgError> {
        check("matvec", self.dim == v.len(), (self.dim, self.dim), (v.len(), 1))?;
        let mut out = ComplexVector::zeros(self.dim);
        self.matvec_into(v.as_slice(), out.as_mut_slice(), &mut (), Stage::Other);
        Ok(out)
    }

    /// out = M x. The real diagonal costs 2 per entry, each off-diagonal
    /// entry is used twice (as itself and conjugated) at 4 each.
    pub fn matvec_into<T: Tally>(&self, x: &[C64], out: &mut [C64], tally: &mut T, stage: Stage) {
        let n = self.dim;
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(out.len(), n);
        for i in 0..n {
            out[i] = x[i] * self.diag[i];
        }
        let mut k = 0;
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            let xi = x[i];
            for j in i + 1..n {
                let a = self.upper[k];
                acc += a * x[j];
                out[j] += a.conj() * xi;
                k += 1;
            }
            out[i] += acc;
        }
        tally.add(stage, (4 * n * n - 2 * n) as u64);
    }
}

/// Which Gram matrix to build from a channel matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// H is B x U; returns H^H H + rho_inv I.
    Uplink,
    /// H is U x B; returns H H^H + rho_inv I.
    Downlink,
}

/// Regularized Gram matrix, built on one triangle.
pub fn gram_regularized(h: &ComplexMatrix, rho_inv: f64, side: Side) -> HermitianMatrix {
    gram_regularized_counted(h, rho_inv, side, &mut ())
}

pub fn gram_regularized_counted<T: Tally>(h: &ComplexMatrix, rho_inv: f64, side: Side, tally: &mut T) -> HermitianMatrix {
    assert!(rho_inv >= 0.0, "rho_inv must be non-negative");
    let mut g = match side {
        Side::Uplink => {
            let (b, u) = h.shape();
            let mut g = HermitianMatrix::zeros(u);
            // walk rows of H so every access is contiguous
            for r in 0..b {
                let row = h.row(r);
                let mut k = 0;
                for i in 0..u {
                    let ci = row[i].conj();
                    g.diag[i] += row[i].norm_sqr();
                    for &hj in &row[i + 1..] {
                        g.upper[k] += ci * hj;
                        k += 1;
                    }
                }
            }
            tally.add(Stage::Gram, (4 * b * u * (u - 1) / 2 + 2 * b * u) as u64);
            g
        }
        Side::Downlink => {
            let (u, b) = h.shape();
            let mut g = HermitianMatrix::zeros(u);
            for i in 0..u {
                let ri = h.row(i);
                g.diag[i] = ri.iter().map(|z| z.norm_sqr()).sum();
                for j in i + 1..u {
                    let z = dot_h(h.row(j), ri);
                    g.set_upper(i, j, z);
                }
            }
            tally.add(Stage::Gram, (4 * b * u * (u - 1) / 2 + 2 * b * u) as u64);
            g
        }
    };
    g.diag.iter_mut().for_each(|d| *d += rho_inv);
    g
}

/// u^H v on slices.
#[inline]
pub fn dot_h(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Re(u^H v), 2 real multiplications per entry.
#[inline]
pub(crate) fn re_dot_h<T: Tally>(u: &[C64], v: &[C64], tally: &mut T, stage: Stage) -> f64 {
    tally.add(stage, 2 * u.len() as u64);
    u.iter().zip(v).map(|(a, b)| a.re * b.re + a.im * b.im).sum()
}

#[inline]
pub(crate) fn norm_sqr_counted<T: Tally>(v: &[C64], tally: &mut T, stage: Stage) -> f64 {
    tally.add(stage, 2 * v.len() as u64);
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// y += a x with real a.
#[inline]
pub(crate) fn axpy_real<T: Tally>(a: f64, x: &[C64], y: &mut [C64], tally: &mut T, stage: Stage) {
    tally.add(stage, 2 * x.len() as u64);
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += xi * a;
    }
}

/// p = r + b p with real b.
#[inline]
pub(crate) fn xpby_real<T: Tally>(r: &[C64], b: f64, p: &mut [C64], tally: &mut T, stage: Stage) {
    tally.add(stage, 2 * r.len() as u64);
    for (pi, ri) in p.iter_mut().zip(r) {
        *pi = ri + *pi * b;
    }
}
