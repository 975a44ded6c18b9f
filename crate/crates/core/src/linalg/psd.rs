// PSD-cone projection that only computes eigenvectors for one side of the
// spectrum. After tridiagonalisation the eigenvalues come cheaply; vectors
// are then found by inverse iteration on the tridiagonal matrix for
// whichever of {positive, negative} eigenvalues is the smaller set, and
// mapped back with the accumulated Householder transform.
//
// Every computed pair is checked; on any failure the caller falls back to
// the full decomposition.

use alloc::vec;
use alloc::vec::Vec;

use super::tridiag::{apply_reflectors, reduce, tql2};
use super::SymMatrix;

const INVERSE_ITERATIONS: usize = 3;
// eigenvalues closer than this (relative to ‖T‖) get re-orthogonalised
const CLUSTER_GAP: f64 = 1e-3;
const RESIDUAL_TOL: f64 = 1e-10;

/// `None` if the fast route could not certify its eigenpairs.
pub(super) fn project(m: &SymMatrix) -> Option<SymMatrix> {
    let n = m.n();
    if n < 8 {
        return None;
    }
    let mut house: Vec<f64> = m.as_slice().to_vec();
    let mut h = vec![0.0; n];
    let mut off = vec![0.0; n];
    reduce(n, &mut house, &mut h, &mut off);
    // T has diagonal `diag` and couples i-1, i through `off[i]` (off[0] = 0).
    let diag: Vec<f64> = (0..n).map(|j| house[j * n + j]).collect();
    let mut d = diag.clone();
    let mut e = off.clone();
    tql2(n, None, &mut d, &mut e).ok()?;
    let mut values = d;
    values.sort_by(|a, b| b.total_cmp(a));

    let t_norm = values.iter().fold(0.0f64, |a, v| a.max(libm::fabs(*v)));
    if t_norm == 0.0 {
        return Some(SymMatrix::zeros(n));
    }
    let cut = 1e-13 * t_norm;
    let positive: Vec<f64> = values.iter().copied().filter(|&l| l > cut).collect();
    let negative: Vec<f64> = values.iter().rev().copied().filter(|&l| l < -cut).collect();
    let use_positive = positive.len() <= negative.len();
    let wanted = if use_positive { &positive } else { &negative };

    let tri_vectors = inverse_iteration(&diag, &off, wanted, t_norm)?;

    let mut out = if use_positive { vec![0.0; n * n] } else { m.as_slice().to_vec() };
    for (lam, mut x) in wanted.iter().zip(tri_vectors) {
        apply_reflectors(n, &house, &h, &mut x);
        let w = if use_positive { *lam } else { -*lam };
        for i in 0..n {
            let c = w * x[i];
            let row = &mut out[i * n..(i + 1) * n];
            for (o, xj) in row[i..].iter_mut().zip(&x[i..]) {
                *o += c * xj;
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            out[j * n + i] = out[i * n + j];
        }
    }
    Some(SymMatrix::from_raw(n, out))
}

fn inverse_iteration(diag: &[f64], off: &[f64], values: &[f64], t_norm: f64) -> Option<Vec<Vec<f64>>> {
    let n = diag.len();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(values.len());
    let mut cluster_start = 0;
    for (idx, &lam) in values.iter().enumerate() {
        if idx > 0 && libm::fabs(values[idx - 1] - lam) > CLUSTER_GAP * t_norm {
            cluster_start = idx;
        }
        let mut x: Vec<f64> = (0..n).map(|i| start_entry(i, idx)).collect();
        normalize(&mut x)?;
        for _ in 0..INVERSE_ITERATIONS {
            solve_shifted(diag, off, lam, t_norm, &mut x);
            for prev in &out[cluster_start..idx] {
                let p = super::dot(&x, prev);
                for (a, b) in x.iter_mut().zip(prev) {
                    *a -= p * b;
                }
            }
            normalize(&mut x)?;
        }
        let mut res = 0.0;
        for i in 0..n {
            let mut tx = diag[i] * x[i];
            if i > 0 {
                tx += off[i] * x[i - 1];
            }
            if i + 1 < n {
                tx += off[i + 1] * x[i + 1];
            }
            let r = tx - lam * x[i];
            res += r * r;
        }
        if libm::sqrt(res) > RESIDUAL_TOL * t_norm {
            return None;
        }
        out.push(x);
    }
    Some(out)
}

fn normalize(x: &mut [f64]) -> Option<()> {
    let s = super::norm(x);
    if !(s > 0.0 && s.is_finite()) {
        return None;
    }
    x.iter_mut().for_each(|v| *v /= s);
    Some(())
}

// Deterministic, well-spread start vector.
fn start_entry(i: usize, k: usize) -> f64 {
    let mut h = (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (k as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    h ^= h >> 31;
    h = h.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h ^= h >> 29;
    (h >> 11) as f64 / (1u64 << 53) as f64 + 0.5
}

// Solves (T − σI) x = b in place by Gaussian elimination with partial
// pivoting; exactly zero pivots are replaced by a tiny multiple of ‖T‖.
fn solve_shifted(diag: &[f64], off: &[f64], sigma: f64, t_norm: f64, b: &mut [f64]) {
    let n = diag.len();
    let tiny = f64::EPSILON * t_norm;
    let mut dd: Vec<f64> = diag.iter().map(|v| v - sigma).collect();
    let mut du: Vec<f64> = (0..n - 1).map(|i| off[i + 1]).collect();
    let mut dl: Vec<f64> = du.clone();
    let mut du2 = vec![0.0; n];
    for i in 0..n - 1 {
        if libm::fabs(dd[i]) >= libm::fabs(dl[i]) {
            if dd[i] == 0.0 {
                dd[i] = tiny;
            }
            let fact = dl[i] / dd[i];
            dd[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
        } else {
            let fact = dd[i] / dl[i];
            dd[i] = dl[i];
            let temp = dd[i + 1];
            dd[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = temp;
            let tb = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tb - fact * b[i + 1];
        }
        dl[i] = 0.0;
    }
    if dd[n - 1] == 0.0 {
        dd[n - 1] = tiny;
    }
    b[n - 1] /= dd[n - 1];
    if n > 1 {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / dd[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / dd[i];
    }
}
