//! Recovery algorithms: `1-diag` (round the unit-diagonal relaxation at 0.5)
//! and `l2-norm-diag` (threshold sweep on the norm-bounded relaxation).

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::SymMatrix;
use crate::nfm::{GroundTruth, SignedGraph};
use crate::sdp::{solve, SdpSolution, SolverOptions, Variant};
use crate::{Error, Result};

/// Threshold used by `1-diag`.
pub const ONE_DIAG_THRESHOLD: f64 = 0.5;

/// Candidate thresholds closer than this are treated as one.
pub const THRESHOLD_DEDUP: f64 = 1e-9;

/// Entries of the norm-bounded solution at or below `NOISE_FLOOR · max(X*)`
/// are treated as zero by `l2-norm-diag`.
pub const NOISE_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Algorithm {
    #[cfg_attr(feature = "serde", serde(rename = "1-diag"))]
    OneDiag,
    #[cfg_attr(feature = "serde", serde(rename = "l2-norm-diag"))]
    L2NormDiag,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::OneDiag => "1-diag",
            Algorithm::L2NormDiag => "l2-norm-diag",
        }
    }
}

/// Disjoint non-empty clusters covering `covered`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RecoveredClustering {
    pub clusters: Vec<Vec<usize>>,
    pub covered: Vec<usize>,
    /// Rounding threshold; `None` for `1-diag`.
    pub threshold: Option<f64>,
    pub algorithm: Algorithm,
}

impl RecoveredClustering {
    pub fn empty(algorithm: Algorithm) -> Self {
        RecoveredClustering { clusters: Vec::new(), covered: Vec::new(), threshold: None, algorithm }
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// The 0/1 co-membership matrix; rows outside `covered` are zero.
    pub fn cluster_matrix(&self, n: usize) -> SymMatrix {
        cluster_matrix_from_partition(n, &self.clusters)
    }
}

/// Output of a recovery algorithm together with the relaxation it rounded.
#[derive(Debug, Clone)]
pub struct Recovery {
    pub clustering: RecoveredClustering,
    pub matrix: SymMatrix,
    pub solution: SdpSolution,
}

/// `X^r_ij = 1` iff `X_ij > t`, diagonal included.
pub fn round_matrix(x: &SymMatrix, t: f64) -> SymMatrix {
    x.map(|v| if v > t { 1.0 } else { 0.0 })
}

pub fn cluster_matrix_from_partition(n: usize, parts: &[Vec<usize>]) -> SymMatrix {
    let mut m = SymMatrix::zeros(n);
    for p in parts {
        for &a in p {
            for &b in p {
                m.set(a, b, 1.0);
            }
        }
    }
    m
}

fn check_binary(m: &SymMatrix) -> Result<()> {
    if m.as_slice().iter().all(|&v| v == 0.0 || v == 1.0) {
        Ok(())
    } else {
        Err(Error::InvalidInput("matrix entries must be 0 or 1".into()))
    }
}

// Partition of `nodes` induced by the 1-entries of `m`, if the relation is an
// equivalence on `nodes`. Reflexivity is the caller's job.
fn equivalence_classes(m: &SymMatrix, nodes: &[usize]) -> Option<Vec<Vec<usize>>> {
    let n = m.n();
    let mut assigned = vec![false; n];
    let mut parts = Vec::new();
    for &i in nodes {
        if assigned[i] {
            continue;
        }
        let class: Vec<usize> = nodes.iter().copied().filter(|&j| m.get(i, j) == 1.0).collect();
        for &j in &class {
            if assigned[j] {
                return None;
            }
            // every member must see exactly the same class
            if nodes.iter().any(|&l| (m.get(j, l) == 1.0) != (m.get(i, l) == 1.0)) {
                return None;
            }
        }
        for &j in &class {
            assigned[j] = true;
        }
        parts.push(class);
    }
    Some(parts)
}

/// Whether `m` is the cluster matrix of a partition of all nodes; returns
/// the partition if so.
pub fn is_cluster_matrix(m: &SymMatrix) -> Result<Option<Vec<Vec<usize>>>> {
    check_binary(m)?;
    let n = m.n();
    if (0..n).any(|i| m.get(i, i) != 1.0) {
        return Ok(None);
    }
    let all: Vec<usize> = (0..n).collect();
    Ok(equivalence_classes(m, &all))
}

/// Subset variant: `V' = {i : m_ii = 1}` must be non-empty, every entry
/// outside `V' × V'` must be zero, and `m(V', V')` must be a cluster matrix.
/// Returns the partition of `V'`.
pub fn subset_cluster_matrix(m: &SymMatrix) -> Result<Option<Vec<Vec<usize>>>> {
    check_binary(m)?;
    let n = m.n();
    let inside: Vec<bool> = (0..n).map(|i| m.get(i, i) == 1.0).collect();
    let nodes: Vec<usize> = (0..n).filter(|&i| inside[i]).collect();
    if nodes.is_empty() {
        return Ok(None);
    }
    for i in 0..n {
        if !inside[i] && m.row(i).iter().any(|&v| v != 0.0) {
            return Ok(None);
        }
    }
    Ok(equivalence_classes(m, &nodes))
}

/// `1-diag`: solve the unit-diagonal relaxation, round at 0.5, and keep the
/// result only if it is a cluster matrix of all nodes.
pub fn one_diag(g: &SignedGraph, opts: &SolverOptions) -> Result<Recovery> {
    let n = g.n();
    let solution = solve(g.weights(), Variant::UnitDiag, opts)?;
    let mut clustering = RecoveredClustering::empty(Algorithm::OneDiag);
    let mut matrix = SymMatrix::zeros(n);
    if solution.converged {
        let rounded = round_matrix(&solution.x, ONE_DIAG_THRESHOLD);
        if let Some(parts) = is_cluster_matrix(&rounded)? {
            clustering.covered = (0..n).collect();
            clustering.clusters = parts;
            matrix = rounded;
        }
    }
    Ok(Recovery { clustering, matrix, solution })
}

/// Candidate thresholds for the sweep: distinct entries above the noise
/// floor plus the floor itself, in non-increasing order.
pub fn candidate_thresholds(x: &SymMatrix, floor: f64) -> Vec<f64> {
    let mut vals: Vec<f64> = x.as_slice().iter().copied().filter(|&v| v > floor).collect();
    vals.push(floor);
    vals.sort_by(|a, b| b.total_cmp(a));
    let mut out: Vec<f64> = Vec::with_capacity(vals.len());
    for v in vals {
        match out.last() {
            Some(&last) if last - v <= THRESHOLD_DEDUP => {}
            _ => out.push(v),
        }
    }
    out
}

/// Rounds `x` at each candidate threshold, from the lowest up, and returns
/// the first rounding that is a subset cluster matrix with at least one
/// non-singleton cluster. Singleton classes are dropped from the result:
/// a node whose only surviving entry is its own diagonal has no
/// co-membership evidence and is left uncovered.
pub fn sweep_thresholds(x: &SymMatrix, noise_floor: f64) -> Result<Option<(f64, Vec<Vec<usize>>)>> {
    let n = x.n();
    let top = x.max_entry();
    if !(top > 0.0) {
        return Ok(None);
    }
    let floor = noise_floor * top;
    let off_diag_mass = (0..n).any(|i| (0..n).any(|j| i != j && x.get(i, j) > floor));
    if !off_diag_mass {
        return Ok(None);
    }
    for &t in candidate_thresholds(x, floor).iter().rev() {
        let rounded = round_matrix(x, t);
        if let Some(parts) = subset_cluster_matrix(&rounded)? {
            if parts.iter().any(|p| p.len() > 1) {
                return Ok(Some((t, parts.into_iter().filter(|p| p.len() > 1).collect())));
            }
        }
    }
    Ok(None)
}

/// `l2-norm-diag`: solve the norm-bounded relaxation and round it at the
/// lowest threshold that yields a clean block structure.
pub fn l2_norm_diag(g: &SignedGraph, opts: &SolverOptions) -> Result<Recovery> {
    l2_norm_diag_with_floor(g, opts, NOISE_FLOOR)
}

/// [`l2_norm_diag`] with an explicit relative noise floor.
pub fn l2_norm_diag_with_floor(g: &SignedGraph, opts: &SolverOptions, noise_floor: f64) -> Result<Recovery> {
    let n = g.n();
    let solution = solve(g.weights(), Variant::NormDiag, opts)?;
    let mut clustering = RecoveredClustering::empty(Algorithm::L2NormDiag);
    let mut matrix = SymMatrix::zeros(n);
    if solution.converged {
        if let Some((t, parts)) = sweep_thresholds(&solution.x, noise_floor)? {
            let mut covered: Vec<usize> = parts.iter().flatten().copied().collect();
            covered.sort_unstable();
            matrix = cluster_matrix_from_partition(n, &parts);
            clustering = RecoveredClustering {
                clusters: parts,
                covered,
                threshold: Some(t),
                algorithm: Algorithm::L2NormDiag,
            };
        }
    }
    Ok(Recovery { clustering, matrix, solution })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RecoveryEvaluation {
    pub success: bool,
    /// Ground-truth cluster matched by each recovered cluster, if any.
    pub matched: Vec<Option<usize>>,
}

/// Success iff there are exactly `k` disjoint recovered clusters and each
/// lies inside one ground-truth cluster, contains all of its strong nodes,
/// and no two recovered clusters match the same ground-truth cluster.
pub fn evaluate_recovery(rec: &RecoveredClustering, gt: &GroundTruth) -> RecoveryEvaluation {
    let n = gt.n();
    let clusters = gt.clusters();
    let strong = gt.strong_clusters();
    let mut seen = vec![false; n];
    let mut disjoint = true;
    for c in &rec.clusters {
        for &i in c {
            if i >= n || seen[i] {
                disjoint = false;
            } else {
                seen[i] = true;
            }
        }
    }
    let matched: Vec<Option<usize>> = rec
        .clusters
        .iter()
        .map(|c| {
            if c.is_empty() || c.iter().any(|&i| i >= n) {
                return None;
            }
            let j = match gt.labels[c[0]] {
                crate::nfm::Label::Cluster(j) => j,
                crate::nfm::Label::Stray => return None,
            };
            let inside = c.iter().all(|i| clusters[j].binary_search(i).is_ok());
            let has_strong = strong[j].iter().all(|s| c.contains(s));
            (inside && has_strong).then_some(j)
        })
        .collect();
    let mut used = vec![false; gt.k];
    let mut distinct = true;
    for j in matched.iter().flatten() {
        if used[*j] {
            distinct = false;
        }
        used[*j] = true;
    }
    let success = disjoint
        && distinct
        && rec.clusters.len() == gt.k
        && matched.iter().all(|m| m.is_some());
    RecoveryEvaluation { success, matched }
}
