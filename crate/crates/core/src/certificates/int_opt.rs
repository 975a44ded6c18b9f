//! Dual certificate for the integral optimum of the unit-diagonal relaxation.

use alloc::vec;
use alloc::vec::Vec;

use crate::cluster::cluster_matrix_from_partition;
use crate::linalg::{laplacian, min_eigenvalue, SymMatrix};
use crate::nfm::SignedGraph;
use crate::sdp::{kkt_report, Duals, KktReport, Variant};
use crate::{Error, Result};

/// Residual tolerance, relative to `1 + ‖W‖_F`.
pub const INT_OPT_TOL: f64 = 1e-8;
/// Allowed negative eigenvalue of `Z`.
pub const INT_OPT_PSD_TOL: f64 = 1e-9;
/// Allowed negative entry of `Y`.
pub const INT_OPT_SIGN_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntOptCertificate {
    /// Cluster matrix of the partition, strays as singletons.
    pub x: SymMatrix,
    pub y_mat: SymMatrix,
    pub z: SymMatrix,
    pub y: Vec<f64>,
    pub kkt: KktReport,
    /// Smallest eigenvalue over the cluster Laplacian blocks of `Z`.
    pub z_min_eigenvalue: f64,
    pub valid: bool,
}

// Validates that `clusters` and `strays` partition `0..n`.
pub(crate) fn check_partition(n: usize, clusters: &[Vec<usize>], strays: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    for &i in clusters.iter().flatten().chain(strays) {
        if i >= n {
            return Err(Error::InvalidInput(alloc::format!("node {i} out of range")));
        }
        if seen[i] {
            return Err(Error::InvalidInput(alloc::format!("node {i} listed twice")));
        }
        seen[i] = true;
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidInput(alloc::format!("node {i} is not covered")));
    }
    if clusters.iter().any(|c| c.is_empty()) {
        return Err(Error::InvalidInput("clusters must be non-empty".into()));
    }
    Ok(())
}

/// Builds `(Y, Z, y)` for the cluster matrix of `clusters ∪ {{v} : v ∈ strays}`:
/// `Y = −W` off the cluster blocks, `Z` the cluster Laplacians, `y` the
/// within-cluster row sums.
pub fn build_int_opt_certificate(
    g: &SignedGraph,
    clusters: &[Vec<usize>],
    strays: &[usize],
) -> Result<IntOptCertificate> {
    let n = g.n();
    check_partition(n, clusters, strays)?;
    let w = g.weights();

    let mut parts: Vec<Vec<usize>> = clusters.to_vec();
    parts.extend(strays.iter().map(|&v| vec![v]));
    let x = cluster_matrix_from_partition(n, &parts);

    let mut y_mat = w.scale(-1.0);
    let mut z = SymMatrix::zeros(n);
    let mut y = vec![0.0; n];
    let mut z_min = f64::INFINITY;
    for c in clusters {
        let l = laplacian(&w.submatrix(c));
        z_min = z_min.min(min_eigenvalue(&l)?);
        for (a, &i) in c.iter().enumerate() {
            y[i] = c.iter().map(|&j| w.get(i, j)).sum();
            for (b, &j) in c.iter().enumerate() {
                y_mat.set(i, j, 0.0);
                z.set(i, j, l.get(a, b));
            }
        }
    }
    if clusters.is_empty() {
        z_min = 0.0;
    }

    let duals = Duals { y_mat: y_mat.clone(), z: z.clone(), y: y.clone(), lambda: 0.0 };
    let kkt = kkt_report(w, Variant::UnitDiag, &x, &duals)?;
    let tol = INT_OPT_TOL * (1.0 + w.frobenius_norm());
    let valid = kkt.stationarity <= tol
        && kkt.complementarity_y <= tol
        && kkt.complementarity_z <= tol
        && z_min >= -INT_OPT_PSD_TOL
        && y_mat.min_entry() >= -INT_OPT_SIGN_TOL;
    Ok(IntOptCertificate { x, y_mat, z, y, kkt, z_min_eigenvalue: z_min, valid })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_two_clusters_are_certified() {
        let w = SymMatrix::from_fn(5, |i, j| {
            if i == j {
                0.0
            } else if (i < 3) == (j < 3) {
                1.0 + (i + j) as f64 * 0.1
            } else {
                -0.5
            }
        });
        let g = SignedGraph::new(w).unwrap();
        let c = build_int_opt_certificate(&g, &[vec![0, 1, 2], vec![3, 4]], &[]).unwrap();
        assert!(c.valid, "{:?}", c.kkt);
        assert!(c.kkt.max_violation() < 1e-12);
    }

    #[test]
    fn indefinite_cluster_laplacian_is_rejected() {
        let g = SignedGraph::from_rows(&[
            vec![0.0, 1.0, -3.0],
            vec![1.0, 0.0, 1.0],
            vec![-3.0, 1.0, 0.0],
        ])
        .unwrap();
        let c = build_int_opt_certificate(&g, &[vec![0, 1, 2]], &[]).unwrap();
        assert!(!c.valid);
        assert!(c.z_min_eigenvalue < 0.0);
    }

    #[test]
    fn strays_and_trivial_graph() {
        let g = SignedGraph::from_rows(&[vec![0.0]]).unwrap();
        assert!(build_int_opt_certificate(&g, &[vec![0]], &[]).unwrap().valid);
        assert!(build_int_opt_certificate(&g, &[], &[0]).unwrap().valid);

        let g = SignedGraph::from_rows(&[vec![0.0, 2.0, -1.0], vec![2.0, 0.0, -1.0], vec![-1.0, -1.0, 0.0]]).unwrap();
        let c = build_int_opt_certificate(&g, &[vec![0, 1]], &[2]).unwrap();
        assert!(c.valid);
        assert_eq!(c.y, vec![2.0, 2.0, 0.0]);
    }

    #[test]
    fn partition_must_cover_every_node_once() {
        let g = SignedGraph::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(build_int_opt_certificate(&g, &[vec![0]], &[]).is_err());
        assert!(build_int_opt_certificate(&g, &[vec![0, 1]], &[1]).is_err());
        assert!(build_int_opt_certificate(&g, &[vec![0, 2]], &[1]).is_err());
    }
}
