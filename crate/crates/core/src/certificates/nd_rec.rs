//! Fixed points of `x ↦ (Wx)^{1/3}` and the primal/dual pair they induce
//! for the norm-diag relaxation.

use alloc::vec;
use alloc::vec::Vec;

use super::int_opt::check_partition;
use super::psd::{strong_set_weighted, StrongSetCertificate};
use crate::linalg::{min_eigenvalue, norm, SymMatrix};
use crate::nfm::SignedGraph;
use crate::sdp::{kkt_report, Duals, KktReport, Variant};
use crate::{Error, Result};

pub const FIXED_POINT_TOL: f64 = 1e-12;
pub const FIXED_POINT_MAX_ITERS: usize = 10_000;

/// Residual tolerance of the constructed primal/dual pair.
pub const ND_REC_TOL: f64 = 1e-7;
/// Allowed negative eigenvalue of `Z`.
pub const ND_REC_PSD_TOL: f64 = 1e-8;
/// Allowed deviation of `‖diag X‖` from 1.
pub const ND_REC_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FixedPointStatus {
    Converged,
    MaxIterations,
    /// `Wx` left the positive orthant.
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixedPoint {
    pub r: Vec<f64>,
    pub status: FixedPointStatus,
    pub iterations: usize,
    /// `r` lies in `[½(βq)^{1/3}, 3/2(βq)^{1/3}]`.
    pub contained: bool,
    /// `‖W r − r^{∘3}‖`.
    pub residual: f64,
    /// `β = [qᵀ q^{1/3}]^{3/2}`.
    pub beta: f64,
}

impl FixedPoint {
    pub fn converged(&self) -> bool {
        self.status == FixedPointStatus::Converged
    }
}

/// Picard iteration `x ← (Wx)^{1/3}` from `(βq)^{1/3}`. Divergence is
/// reported in the status, not as an error.
pub fn fixed_point(w: &SymMatrix, q: &[f64]) -> Result<FixedPoint> {
    let n = w.n();
    if q.len() != n {
        return Err(Error::InvalidInput("q must have one entry per node".into()));
    }
    if !q.iter().all(|&v| v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidInput("q must be positive".into()));
    }
    let beta = libm::pow(q.iter().map(|&v| v * libm::cbrt(v)).sum::<f64>(), 1.5);
    let centre: Vec<f64> = q.iter().map(|&v| libm::cbrt(beta * v)).collect();

    let mut x = centre.clone();
    let mut status = FixedPointStatus::MaxIterations;
    let mut iterations = 0;
    while iterations < FIXED_POINT_MAX_ITERS {
        iterations += 1;
        let wx = w.mul_vec(&x);
        if wx.iter().any(|&v| !(v > 0.0)) {
            status = FixedPointStatus::Diverged;
            break;
        }
        let next: Vec<f64> = wx.iter().map(|&v| libm::cbrt(v)).collect();
        let step: f64 = libm::sqrt(next.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum());
        let size = norm(&x);
        x = next;
        if step <= FIXED_POINT_TOL * size {
            status = FixedPointStatus::Converged;
            break;
        }
    }
    let contained = x.iter().zip(&centre).all(|(v, c)| *v >= 0.5 * c && *v <= 1.5 * c);
    let wx = w.mul_vec(&x);
    let residual = libm::sqrt(wx.iter().zip(&x).map(|(a, v)| (a - v * v * v) * (a - v * v * v)).sum());
    Ok(FixedPoint { r: x, status, iterations, contained, residual, beta })
}

#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NdRecCertificate {
    pub x: SymMatrix,
    pub y_mat: SymMatrix,
    pub z: SymMatrix,
    pub lambda: f64,
    pub kkt: KktReport,
    pub diag_norm: f64,
    /// Smallest eigenvalue over the cluster blocks of `Z`.
    pub z_min_eigenvalue: f64,
    /// Strong-set check on `Diag(r) W Diag(r)` for each cluster; when valid,
    /// that block of `Z` is PSD without any eigensolve.
    pub scaled_strong_set: Vec<StrongSetCertificate>,
    /// `X_ii' > 0` exactly for pairs inside one cluster.
    pub support_matches: bool,
    pub valid: bool,
}

/// Assembles `X = r rᵀ/λ` on each cluster block, `Y = −W` off the blocks,
/// `Z = Diag(r∘r) − W` on the blocks and `λ = √(Σ ‖r∘r‖²)`, then checks
/// every optimality condition. Nodes outside the clusters are strays.
pub fn verify_nd_rec(g: &SignedGraph, clusters: &[Vec<usize>], fixed_points: &[Vec<f64>]) -> Result<NdRecCertificate> {
    let n = g.n();
    if clusters.len() != fixed_points.len() {
        return Err(Error::InvalidInput("one fixed point per cluster is required".into()));
    }
    if clusters.is_empty() {
        return Err(Error::InvalidInput("at least one cluster is required".into()));
    }
    let mut in_cluster = vec![false; n];
    for c in clusters {
        for &i in c {
            if i < n {
                in_cluster[i] = true;
            }
        }
    }
    let strays: Vec<usize> = (0..n).filter(|&i| !in_cluster[i]).collect();
    check_partition(n, clusters, &strays)?;
    for (c, r) in clusters.iter().zip(fixed_points) {
        if r.len() != c.len() {
            return Err(Error::InvalidInput("fixed point length differs from cluster size".into()));
        }
        if !r.iter().all(|&v| v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidInput("fixed points must be positive".into()));
        }
    }
    let w = g.weights();
    let lambda = libm::sqrt(fixed_points.iter().flatten().map(|v| v * v * v * v).sum::<f64>());

    let mut x = SymMatrix::zeros(n);
    let mut y_mat = w.scale(-1.0);
    let mut z = SymMatrix::zeros(n);
    let mut z_min = f64::INFINITY;
    let mut scaled_strong_set = Vec::with_capacity(clusters.len());
    for (c, r) in clusters.iter().zip(fixed_points) {
        let wb = w.submatrix(c);
        let zb = SymMatrix::from_fn(c.len(), |a, b| if a == b { r[a] * r[a] } else { 0.0 } - wb.get(a, b));
        z_min = z_min.min(min_eigenvalue(&zb)?);
        let wbar = SymMatrix::from_fn(c.len(), |a, b| r[a] * wb.get(a, b) * r[b]);
        scaled_strong_set.push(strong_set_weighted(&wbar, None, None, 2.0)?);
        for (a, &i) in c.iter().enumerate() {
            for (b, &j) in c.iter().enumerate() {
                x.set(i, j, r[a] * r[b] / lambda);
                y_mat.set(i, j, 0.0);
                z.set(i, j, zb.get(a, b));
            }
        }
    }
    let duals = Duals { y_mat: y_mat.clone(), z: z.clone(), y: Vec::new(), lambda };
    let kkt = kkt_report(w, Variant::NormDiag, &x, &duals)?;
    let diag_norm = norm(&x.diag());

    let mut label = vec![usize::MAX; n];
    for (k, c) in clusters.iter().enumerate() {
        for &i in c {
            label[i] = k;
        }
    }
    let support_matches = (0..n).all(|i| {
        (0..n).all(|j| (x.get(i, j) > 0.0) == (label[i] != usize::MAX && label[i] == label[j]))
    });

    let valid = libm::fabs(diag_norm - 1.0) <= ND_REC_NORM_TOL
        && x.min_entry() >= 0.0
        && y_mat.min_entry() >= 0.0
        && z_min >= -ND_REC_PSD_TOL
        && kkt.stationarity <= ND_REC_TOL
        && kkt.complementarity_y <= ND_REC_TOL
        && kkt.complementarity_z <= ND_REC_TOL
        && kkt.complementarity_lambda <= ND_REC_TOL
        && support_matches;
    Ok(NdRecCertificate {
        x,
        y_mat,
        z,
        lambda,
        kkt,
        diag_norm,
        z_min_eigenvalue: z_min,
        scaled_strong_set,
        support_matches,
        valid,
    })
}
