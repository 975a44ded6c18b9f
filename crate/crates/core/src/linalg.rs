//! Dense symmetric matrices and the spectral routines built on them.
//!
//! Storage is full row-major. Every constructor leaves the matrix exactly
//! symmetric, so `get(i, j) == get(j, i)` holds bit-for-bit.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use crate::{Error, Result};

mod jacobi;
mod psd;
mod tridiag;

pub use jacobi::eig_sym_jacobi;

/// Largest asymmetry `|m_ij - m_ji|` tolerated (and averaged away) on input.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "matrix dimension must be positive");
        SymMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// All-ones matrix `E`.
    pub fn ones(n: usize) -> Self {
        assert!(n >= 1, "matrix dimension must be positive");
        SymMatrix { n, data: vec![1.0; n * n] }
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n);
        for (i, &v) in d.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle only.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    /// Row-major input; asymmetry up to [`SYMMETRY_TOL`] is averaged away,
    /// anything larger is rejected.
    pub fn from_row_major(n: usize, mut data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("matrix dimension must be positive".into()));
        }
        if data.len() != n * n {
            return Err(Error::InvalidInput(alloc::format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let a = data[i * n + j];
                let b = data[j * n + i];
                let gap = libm::fabs(a - b);
                if gap > SYMMETRY_TOL || gap.is_nan() {
                    return Err(Error::InvalidInput(alloc::format!(
                        "matrix is not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
                let avg = 0.5 * (a + b);
                data[i * n + j] = avg;
                data[j * n + i] = avg;
            }
        }
        Ok(SymMatrix { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::InvalidInput(alloc::format!(
                    "row {i} has {} entries, expected {n}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::from_row_major(n, data)
    }

    /// `v vᵀ`.
    pub fn outer(v: &[f64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j])
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    /// Trace inner product `⟨A, B⟩`.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(libm::fabs(*v)))
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix { n: self.n, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> SymMatrix {
        SymMatrix { n: self.n, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "dimension mismatch");
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn submatrix(&self, idx: &[usize]) -> SymMatrix {
        SymMatrix::from_fn(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }

    /// `Pᵀ M P` for the permutation sending position `i` to `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> SymMatrix {
        assert_eq!(perm.len(), self.n, "dimension mismatch");
        SymMatrix::from_fn(self.n, |i, j| self.get(perm[i], perm[j]))
    }

    /// Row sums `M e`.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub(crate) fn from_raw(n: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        SymMatrix { n, data }
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        SymMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        SymMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, s: f64) -> SymMatrix {
        self.scale(s)
    }
}

// Serialised as a list of rows; reading goes through `from_rows`, so
// asymmetric or ragged input is rejected.
#[cfg(feature = "serde")]
impl serde::Serialize for SymMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.n))?;
        for i in 0..self.n {
            seq.serialize_element(self.row(i))?;
        }
        seq.end()
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for SymMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let rows: Vec<Vec<f64>> = serde::Deserialize::deserialize(d)?;
        if rows.is_empty() {
            return Err(serde::de::Error::custom("matrix must have at least one row"));
        }
        SymMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Eigenvalues sorted non-increasing, with matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomp {
    pub values: Vec<f64>,
    /// Row-major `n x n`; column `j` is the eigenvector of `values[j]`.
    pub vectors: Vec<f64>,
}

impl EigenDecomp {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, j: usize) -> Vec<f64> {
        let n = self.n();
        (0..n).map(|i| self.vectors[i * n + j]).collect()
    }

    /// `Q Diag(f(λ)) Qᵀ`.
    pub fn reconstruct_with(&self, mut f: impl FnMut(f64) -> f64) -> SymMatrix {
        let n = self.n();
        let mut out = vec![0.0; n * n];
        for (j, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            let col: Vec<f64> = (0..n).map(|i| self.vectors[i * n + j]).collect();
            for i in 0..n {
                let ci = w * col[i];
                if ci == 0.0 {
                    continue;
                }
                let row = &mut out[i * n..(i + 1) * n];
                for (o, c) in row.iter_mut().zip(&col) {
                    *o += ci * c;
                }
            }
        }
        symmetrize_in_place(n, &mut out);
        SymMatrix::from_raw(n, out)
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(|l| l)
    }

    /// `‖QᵀQ − I‖_F`.
    pub fn orthogonality_error(&self) -> f64 {
        let n = self.n();
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    s += self.vectors[i * n + a] * self.vectors[i * n + b];
                }
                let d = s - if a == b { 1.0 } else { 0.0 };
                acc += d * d;
            }
        }
        libm::sqrt(acc)
    }
}

fn symmetrize_in_place(n: usize, data: &mut [f64]) {
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (data[i * n + j] + data[j * n + i]);
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
}

/// Sorts eigenpairs non-increasing; `vectors` holds eigenvectors as columns.
pub(crate) fn sort_eigenpairs(n: usize, values: Vec<f64>, vectors: Vec<f64>) -> EigenDecomp {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let sorted_values = order.iter().map(|&j| values[j]).collect();
    let mut sorted_vectors = vec![0.0; n * n];
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            sorted_vectors[i * n + new_j] = vectors[i * n + old_j];
        }
    }
    EigenDecomp { values: sorted_values, vectors: sorted_vectors }
}

/// Symmetric eigendecomposition (Householder tridiagonalisation + implicit QL).
pub fn eig_sym(m: &SymMatrix) -> Result<EigenDecomp> {
    if !m.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    tridiag::eig(m)
}

/// Projection onto the positive semidefinite cone: clamps negative eigenvalues.
pub fn project_psd(m: &SymMatrix) -> Result<SymMatrix> {
    if !m.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    if let Some(p) = psd::project(m) {
        return Ok(p);
    }
    project_psd_full(m)
}

/// [`project_psd`] through a full eigendecomposition.
pub fn project_psd_full(m: &SymMatrix) -> Result<SymMatrix> {
    let eig = eig_sym(m)?;
    Ok(eig.reconstruct_with(|l| l.max(0.0)))
}

/// Smallest eigenvalue.
pub fn min_eigenvalue(m: &SymMatrix) -> Result<f64> {
    let eig = eig_sym(m)?;
    Ok(*eig.values.last().expect("n >= 1"))
}

/// Graph Laplacian `Diag(W e) − W`.
pub fn laplacian(w: &SymMatrix) -> SymMatrix {
    let n = w.n();
    let sums = w.row_sums();
    let mut l = w.scale(-1.0);
    for i in 0..n {
        // diagonal of W does not enter the Laplacian
        let d = sums[i] - w.get(i, i);
        l.data[i * n + i] = d;
    }
    l
}

pub fn norm(v: &[f64]) -> f64 {
    libm::sqrt(dot(v, v))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // four independent partial sums so the loop is not latency bound
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
