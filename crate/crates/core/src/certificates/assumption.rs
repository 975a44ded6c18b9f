//! Rank-one structure of cluster weight blocks and the sufficient
//! conditions for exact recovery by the norm-diag relaxation.

use alloc::vec::Vec;

use super::nd_rec::{fixed_point, FixedPoint};
use super::psd::{strong_set_weighted, StrongSetCertificate};
use crate::linalg::{eig_sym, norm, SymMatrix};
use crate::nfm::{build_weights, FeatureMatrix, SignedGraph};
use crate::{Error, Result};

/// Slope of the linear stand-in `c·(2x − 1)` for the logit.
pub const DEFAULT_LINEARIZATION: f64 = 2.2;

// Constants of the assumption's inequalities.
const C1_DENOM: f64 = 45.0;
const C2_KAPPA: f64 = 6.0;
const C3_DENOM: f64 = 45.0;

/// `W = q qᵀ − D + N` with `q = √λ₁ v₁` taken from `M = c(2ΘΘᵀ − E)`.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankOneDecomposition {
    pub c: f64,
    /// Spectrum of `M`, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Unit top eigenvector of `M`, signed so its entries sum to `≥ 0`.
    pub v1: Vec<f64>,
    pub q: Vec<f64>,
    /// Diagonal of `D = Diag(q ∘ q)`.
    pub d: Vec<f64>,
    /// Remainder, zero on the diagonal.
    pub n_mat: SymMatrix,
    /// `λ₁ − max_{i ≥ 2} |λ_i|`.
    pub eig_gap: f64,
    /// Every entry of `v1` is strictly positive.
    pub positive: bool,
}

impl RankOneDecomposition {
    /// Eigenvalues of `M` that are not numerically zero.
    pub fn nonzero_eigenvalues(&self) -> Vec<f64> {
        let scale = self.eigenvalues.iter().fold(0.0f64, |a, v| a.max(libm::fabs(*v)));
        self.eigenvalues.iter().copied().filter(|v| libm::fabs(*v) > 1e-9 * scale).collect()
    }

    /// `q qᵀ − D + N`; equals the weight block it was built from.
    pub fn reconstruct(&self) -> SymMatrix {
        let m = self.q.len();
        SymMatrix::from_fn(m, |i, j| if i == j { 0.0 } else { self.q[i] * self.q[j] + self.n_mat.get(i, j) })
    }
}

/// Decomposes the logit block of `theta_j`'s rows.
pub fn rank_one_decompose(theta_j: &FeatureMatrix, c: f64) -> Result<RankOneDecomposition> {
    let w = build_weights(theta_j);
    decompose_against(theta_j, w.weights(), c)
}

/// As [`rank_one_decompose`] with `N` measured against the given weight
/// block rather than the logit of `theta_j`.
pub fn decompose_against(theta_j: &FeatureMatrix, w: &SymMatrix, c: f64) -> Result<RankOneDecomposition> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!("linearization constant must be positive, got {c}")));
    }
    let m = theta_j.n();
    if m == 0 {
        return Err(Error::InvalidInput("need at least one feature row".into()));
    }
    if w.n() != m {
        return Err(Error::InvalidInput("weight block and feature rows differ in size".into()));
    }
    let mat = SymMatrix::from_fn(m, |i, j| {
        let ip: f64 = theta_j.row(i).iter().zip(theta_j.row(j)).map(|(a, b)| a * b).sum();
        c * (2.0 * ip - 1.0)
    });
    let e = eig_sym(&mat)?;
    let lambda1 = e.values[0];
    if !(lambda1 > 0.0) {
        return Err(Error::DecompositionFailed(alloc::format!("largest eigenvalue {lambda1} is not positive")));
    }
    let mut v1 = e.vector(0);
    if v1.iter().sum::<f64>() < 0.0 {
        v1.iter_mut().for_each(|v| *v = -*v);
    }
    let positive = v1.iter().all(|&v| v > 0.0);
    let sq = libm::sqrt(lambda1);
    let q: Vec<f64> = v1.iter().map(|v| sq * v).collect();
    let d: Vec<f64> = q.iter().map(|v| v * v).collect();
    let n_mat = SymMatrix::from_fn(m, |i, j| if i == j { 0.0 } else { w.get(i, j) - q[i] * q[j] });
    let rest = e.values[1..].iter().fold(0.0f64, |a, v| a.max(libm::fabs(*v)));
    Ok(RankOneDecomposition {
        c,
        eigenvalues: e.values,
        v1,
        q,
        d,
        n_mat,
        eig_gap: lambda1 - rest,
        positive,
    })
}

/// The four conditions evaluated for one block.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NdConditions {
    pub c1_ok: bool,
    /// `max(q^{4/3})` and `‖q^{2/3}‖²/45`.
    pub c1_lhs: f64,
    pub c1_rhs: f64,
    /// Weighted strong-set search inside the block; indices are local.
    pub c2: StrongSetCertificate,
    pub c2_ok: bool,
    /// `45‖nⁱ‖‖q^{1/3}‖ / (q_i‖q^{2/3}‖²)` per node; at most 1 when the
    /// third condition holds.
    pub c3_ratios: Vec<f64>,
    pub c3_ok: bool,
    /// `D = Diag(q ∘ q)` against a zero-diagonal weight block.
    pub c4_ok: bool,
    /// Fixed point of `x ↦ (Wx)^{1/3}`; absent when `q` is not positive.
    pub fixed_point: Option<FixedPoint>,
}

impl NdConditions {
    pub fn all_ok(&self) -> bool {
        self.c1_ok && self.c2_ok && self.c3_ok && self.c4_ok
    }

    pub fn mean_c3_ratio(&self) -> f64 {
        if self.c3_ratios.is_empty() {
            return 0.0;
        }
        self.c3_ratios.iter().sum::<f64>() / self.c3_ratios.len() as f64
    }
}

/// Checks the conditions for `W = q qᵀ − Diag(q ∘ q) + N`, with `N` taken
/// as the off-diagonal remainder.
pub fn check_nd_conditions(w: &SymMatrix, q: &[f64]) -> Result<NdConditions> {
    let m = w.n();
    if q.len() != m {
        return Err(Error::InvalidInput("q must have one entry per node".into()));
    }
    let q_pos = q.iter().all(|&v| v > 0.0);
    let cbrt: Vec<f64> = q.iter().map(|&v| libm::cbrt(v)).collect();
    let p43: Vec<f64> = q.iter().map(|&v| libm::pow(libm::fabs(v), 4.0 / 3.0)).collect();
    let q43_max = p43.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
    // ‖q^{∘2/3}‖² = Σ q^{4/3}
    let q23_sq: f64 = p43.iter().sum();
    let c1_rhs = q23_sq / C1_DENOM;
    let c1_ok = q_pos && q43_max <= c1_rhs;

    let c2 = strong_set_weighted(w, None, Some(&cbrt), C2_KAPPA)?;
    let c2_ok = q_pos && c2.valid;

    let q13_norm = norm(&cbrt);
    let mut row = alloc::vec![0.0; m];
    let c3_ratios: Vec<f64> = (0..m)
        .map(|i| {
            for (j, r) in row.iter_mut().enumerate() {
                *r = if i == j { 0.0 } else { w.get(i, j) - q[i] * q[j] };
            }
            C3_DENOM * norm(&row) * q13_norm / (q[i] * q23_sq)
        })
        .collect();
    let c3_ok = q_pos && c3_ratios.iter().all(|&r| r <= 1.0);

    let c4_ok = (0..m).all(|i| w.get(i, i) == 0.0);

    let fixed_point = if q_pos { Some(fixed_point(w, q)?) } else { None };
    Ok(NdConditions { c1_ok, c1_lhs: q43_max, c1_rhs, c2, c2_ok, c3_ratios, c3_ok, c4_ok, fixed_point })
}

#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NdAssumptionReport {
    /// Graph nodes of the block, in the order used by every vector below.
    pub nodes: Vec<usize>,
    pub decomposition: RankOneDecomposition,
    pub conditions: NdConditions,
}

impl NdAssumptionReport {
    pub fn all_ok(&self) -> bool {
        self.conditions.all_ok()
    }
}

/// Evaluates the four conditions on the block `W(V_j', V_j')` of `g`;
/// `theta_j` holds the feature rows of `nodes`, in the same order.
pub fn check_nd_assumption(
    g: &SignedGraph,
    nodes: &[usize],
    theta_j: &FeatureMatrix,
    c: f64,
) -> Result<NdAssumptionReport> {
    if nodes.len() != theta_j.n() {
        return Err(Error::InvalidInput("one feature row per node is required".into()));
    }
    if nodes.iter().any(|&i| i >= g.n()) {
        return Err(Error::InvalidInput("node index out of range".into()));
    }
    let w = g.weights().submatrix(nodes);
    let decomposition = decompose_against(theta_j, &w, c)?;
    let conditions = check_nd_conditions(&w, &decomposition.q)?;
    Ok(NdAssumptionReport { nodes: nodes.to_vec(), decomposition, conditions })
}
