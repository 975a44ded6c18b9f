// Householder reduction to tridiagonal form followed by the implicit QL
// method, after the EISPACK tred2/tql2 pair.

use alloc::vec;
use alloc::vec::Vec;

use super::{sort_eigenpairs, EigenDecomp, SymMatrix};
use crate::{Error, Result};

const MAX_QL_ITERS: usize = 60;

pub(super) fn eig(m: &SymMatrix) -> Result<EigenDecomp> {
    let n = m.n();
    if n == 1 {
        return Ok(EigenDecomp { values: vec![m.get(0, 0)], vectors: vec![1.0] });
    }
    // `v` holds the transform transposed, V[i][j] = v[j*n+i], so that the
    // column sweeps below run over contiguous memory.
    let mut v: Vec<f64> = m.as_slice().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut v, &mut d, &mut e);
    tql2(n, Some(&mut v), &mut d, &mut e)?;
    let mut cols = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            cols[i * n + j] = v[j * n + i];
        }
    }
    Ok(sort_eigenpairs(n, d, cols))
}

pub(super) fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    reduce(n, v, d, e);
    accumulate(n, v, d, e);
}

/// Householder reduction without forming the transform. Afterwards the
/// tridiagonal matrix has diagonal `v[j*n+j]` and sub-diagonal `e[j]`
/// (coupling `j-1` and `j`); reflector `m ≥ 1` is `I − u uᵀ/d[m]` with
/// `u = v[m*n..m*n+m]`, acting on the first `m` coordinates.
pub(super) fn reduce(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    for j in 0..n {
        d[j] = v[j * n + n - 1];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += libm::fabs(*dk);
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[j * n + i - 1];
                v[j * n + i] = 0.0;
                v[i * n + j] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = libm::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[i * n + j] = f;
                let row = &v[j * n..j * n + i];
                g = e[j] + row[j] * f;
                let acc = super::dot(&row[j + 1..], &d[j + 1..i]);
                for (&vk, ek) in row[j + 1..].iter().zip(&mut e[j + 1..i]) {
                    *ek += vk * f;
                }
                e[j] = g + acc;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                let row = &mut v[j * n + j..j * n + i];
                for ((vk, &ek), &dk) in row.iter_mut().zip(&e[j..i]).zip(&d[j..i]) {
                    *vk -= f * ek + g * dk;
                }
                d[j] = v[j * n + i - 1];
                v[j * n + i] = 0.0;
            }
        }
        d[i] = h;
    }
}

/// Applies `Q = P_{n-1} ⋯ P_1` from [`reduce`] to `y` in place.
pub(super) fn apply_reflectors(n: usize, v: &[f64], h: &[f64], y: &mut [f64]) {
    for m in 1..n {
        if h[m] != 0.0 {
            let u = &v[m * n..m * n + m];
            let g = super::dot(u, &y[..m]) / h[m];
            for (yk, uk) in y[..m].iter_mut().zip(u) {
                *yk -= g * uk;
            }
        }
    }
}

fn accumulate(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    for i in 0..(n - 1) {
        v[i * n + n - 1] = v[i * n + i];
        v[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(i + 1) * n + k] / h;
            }
            let (lo, hi) = v.split_at_mut((i + 1) * n);
            let house = &hi[..=i];
            for j in 0..=i {
                let row = &mut lo[j * n..j * n + i + 1];
                let g = super::dot(house, row);
                for (vk, &dk) in row.iter_mut().zip(&d[..=i]) {
                    *vk -= g * dk;
                }
            }
        }
        for k in 0..=i {
            v[(i + 1) * n + k] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[j * n + n - 1];
        v[j * n + n - 1] = 0.0;
    }
    v[(n - 1) * n + n - 1] = 1.0;
    e[0] = 0.0;
}

// With `v = None` only eigenvalues are computed.
pub(super) fn tql2(n: usize, mut v: Option<&mut [f64]>, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(libm::fabs(d[l]) + libm::fabs(e[l]));
        let mut m = l;
        while m < n {
            if libm::fabs(e[m]) <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERS {
                    return Err(Error::NoConvergence(MAX_QL_ITERS));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = v.as_deref_mut() {
                        let (lo, hi) = v.split_at_mut((i + 1) * n);
                        let vi = &mut lo[i * n..];
                        let vi1 = &mut hi[..n];
                        for (a, b) in vi.iter_mut().zip(vi1.iter_mut()) {
                            let t = *b;
                            *b = s * *a + c * t;
                            *a = c * *a - s * t;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if libm::fabs(e[l]) <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
