//! Node Features Model: simplex features, logit weights, ground-truth labels.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::linalg::SymMatrix;
use crate::{Error, Result};

/// Inner products are clamped to `[EPS, 1 - EPS]` before the logit.
pub const INNER_PRODUCT_EPS: f64 = 1e-12;

/// Cluster coordinate at or above which a node is strong.
pub const STRONG_CUTOFF: f64 = core::f64::consts::FRAC_1_SQRT_2;

/// Fringe cutoff used when none is given.
pub const DEFAULT_FRINGE_CUTOFF: f64 = 0.6;

const SIMPLEX_TOL: f64 = 1e-12;

/// `n x k` row-stochastic matrix; row `i` is the feature vector of node `i`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureMatrix {
    n: usize,
    k: usize,
    theta: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidInput("feature matrix needs at least one row".into()));
        }
        let k = rows[0].len();
        if k == 0 {
            return Err(Error::InvalidInput("feature vectors need at least one entry".into()));
        }
        let mut theta = Vec::with_capacity(n * k);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != k {
                return Err(Error::InvalidInput(alloc::format!(
                    "row {i} has {} entries, expected {k}",
                    r.len()
                )));
            }
            let sum: f64 = r.iter().sum();
            if r.iter().any(|v| !v.is_finite() || *v < 0.0) || libm::fabs(sum - 1.0) > SIMPLEX_TOL {
                return Err(Error::InvalidInput(alloc::format!(
                    "row {i} is not on the unit simplex"
                )));
            }
            theta.extend_from_slice(r);
        }
        Ok(FeatureMatrix { n, k, theta })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.theta[i * self.k..(i + 1) * self.k]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.theta[i * self.k + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// Rows `idx`, in the given order.
    pub fn select(&self, idx: &[usize]) -> FeatureMatrix {
        let mut theta = Vec::with_capacity(idx.len() * self.k);
        for &i in idx {
            theta.extend_from_slice(self.row(i));
        }
        FeatureMatrix { n: idx.len(), k: self.k, theta }
    }
}

/// Symmetric weight matrix with zero diagonal and finite entries.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "SymMatrix", into = "SymMatrix"))]
pub struct SignedGraph {
    w: SymMatrix,
}

impl SignedGraph {
    pub fn new(w: SymMatrix) -> Result<Self> {
        if !w.is_finite() {
            return Err(Error::InvalidInput("weights must be finite".into()));
        }
        if (0..w.n()).any(|i| w.get(i, i) != 0.0) {
            return Err(Error::InvalidInput("weight matrix must have zero diagonal".into()));
        }
        Ok(SignedGraph { w })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(SymMatrix::from_rows(rows)?)
    }

    pub fn n(&self) -> usize {
        self.w.n()
    }

    pub fn weights(&self) -> &SymMatrix {
        &self.w
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w.get(i, j)
    }

    /// Induced subgraph on `idx`.
    pub fn subgraph(&self, idx: &[usize]) -> SignedGraph {
        SignedGraph { w: self.w.submatrix(idx) }
    }

    pub fn has_positive_edge(&self) -> bool {
        self.w.max_entry() > 0.0
    }
}

impl TryFrom<SymMatrix> for SignedGraph {
    type Error = Error;
    fn try_from(w: SymMatrix) -> Result<Self> {
        SignedGraph::new(w)
    }
}

impl From<SignedGraph> for SymMatrix {
    fn from(g: SignedGraph) -> SymMatrix {
        g.w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Label {
    Cluster(usize),
    Stray,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Strength {
    Strong,
    Fringe,
}

/// Per-node labels. Cluster indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroundTruth {
    pub k: usize,
    pub labels: Vec<Label>,
    /// `None` exactly for stray nodes.
    pub strength: Vec<Option<Strength>>,
    /// Nodes whose largest coordinate was attained more than once.
    pub argmax_ties: Vec<usize>,
}

impl GroundTruth {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Members of each cluster, ascending.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, l) in self.labels.iter().enumerate() {
            if let Label::Cluster(j) = l {
                out[*j].push(i);
            }
        }
        out
    }

    /// Strong members of each cluster, ascending.
    pub fn strong_clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, l) in self.labels.iter().enumerate() {
            if let (Label::Cluster(j), Some(Strength::Strong)) = (l, self.strength[i]) {
                out[*j].push(i);
            }
        }
        out
    }

    pub fn strays(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.labels[i] == Label::Stray).collect()
    }
}

/// Everything a single draw from the model produces.
#[derive(Debug, Clone)]
pub struct NfmInstance {
    pub alpha: Vec<f64>,
    pub seed: u64,
    pub theta: FeatureMatrix,
    pub graph: SignedGraph,
    pub truth: GroundTruth,
}

/// `n` i.i.d. Dirichlet(`alpha`) rows, from normalised Gamma variates.
pub fn sample_dirichlet(n: usize, k: usize, alpha: &[f64], seed: u64) -> Result<FeatureMatrix> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter("n and k must be positive".into()));
    }
    if alpha.len() != k {
        return Err(Error::InvalidParameter(alloc::format!(
            "alpha has {} entries, expected {k}",
            alpha.len()
        )));
    }
    if alpha.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(Error::InvalidParameter("alpha entries must be positive".into()));
    }
    let gammas: Vec<Gamma<f64>> = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).map_err(|e| Error::InvalidParameter(alloc::format!("{e}"))))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = Vec::with_capacity(n * k);
    let mut row = vec![0.0; k];
    for _ in 0..n {
        loop {
            for (r, g) in row.iter_mut().zip(&gammas) {
                *r = g.sample(&mut rng);
            }
            let s: f64 = row.iter().sum();
            if s > 0.0 && s.is_finite() {
                theta.extend(row.iter().map(|v| v / s));
                break;
            }
        }
    }
    Ok(FeatureMatrix { n, k, theta })
}

fn logit_clamped(p: f64) -> f64 {
    let p = p.clamp(INNER_PRODUCT_EPS, 1.0 - INNER_PRODUCT_EPS);
    libm::log(p / (1.0 - p))
}

/// `W_ii' = logit(clamp(θⁱ·θⁱ'))` off the diagonal, zero on it.
pub fn build_weights(theta: &FeatureMatrix) -> SignedGraph {
    let n = theta.n();
    let w = SymMatrix::from_fn(n, |i, j| {
        if i == j {
            0.0
        } else {
            let ip: f64 = theta.row(i).iter().zip(theta.row(j)).map(|(a, b)| a * b).sum();
            logit_clamped(ip)
        }
    });
    SignedGraph { w }
}

pub fn ground_truth(theta: &FeatureMatrix) -> GroundTruth {
    let n = theta.n();
    let mut labels = Vec::with_capacity(n);
    let mut strength = Vec::with_capacity(n);
    let mut ties = Vec::new();
    for i in 0..n {
        let row = theta.row(i);
        let mut best = 0;
        for (j, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = j;
            }
        }
        let m = row[best];
        if row.iter().filter(|&&v| v == m).count() > 1 {
            ties.push(i);
        }
        if m > 0.5 {
            labels.push(Label::Cluster(best));
            strength.push(Some(if m >= STRONG_CUTOFF { Strength::Strong } else { Strength::Fringe }));
        } else {
            labels.push(Label::Stray);
            strength.push(None);
        }
    }
    GroundTruth { k: theta.k(), labels, strength, argmax_ties: ties }
}

/// `V_j' = {i : θⁱ_j ≥ cutoff}` for each cluster `j`.
pub fn filter_by_strength(theta: &FeatureMatrix, cutoff: f64) -> Result<Vec<Vec<usize>>> {
    if !(cutoff > 0.5 && cutoff <= 1.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "cutoff must lie in (0.5, 1], got {cutoff}"
        )));
    }
    let mut out = vec![Vec::new(); theta.k()];
    for i in 0..theta.n() {
        for (j, set) in out.iter_mut().enumerate() {
            if theta.get(i, j) >= cutoff {
                set.push(i);
            }
        }
    }
    Ok(out)
}

/// Samples features, builds the graph and labels it.
pub fn generate(n: usize, k: usize, alpha: &[f64], seed: u64) -> Result<NfmInstance> {
    let theta = sample_dirichlet(n, k, alpha, seed)?;
    let graph = build_weights(&theta);
    let truth = ground_truth(&theta);
    Ok(NfmInstance { alpha: alpha.to_vec(), seed, theta, graph, truth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_coordinate_rows_are_one() {
        let t = sample_dirichlet(20, 1, &[0.7], 3).unwrap();
        assert!(t.to_rows().iter().all(|r| r == &vec![1.0]));
    }

    #[test]
    fn rejects_bad_alpha() {
        assert!(matches!(sample_dirichlet(3, 2, &[1.0, 0.0], 0), Err(Error::InvalidParameter(_))));
        assert!(matches!(sample_dirichlet(3, 2, &[1.0, -1.0], 0), Err(Error::InvalidParameter(_))));
        assert!(sample_dirichlet(3, 2, &[1.0], 0).is_err());
    }

    #[test]
    fn seeded_sampling_is_deterministic() {
        let a = sample_dirichlet(50, 3, &[0.3; 3], 11).unwrap();
        let b = sample_dirichlet(50, 3, &[0.3; 3], 11).unwrap();
        let c = sample_dirichlet(50, 3, &[0.3; 3], 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn weight_examples() {
        let half = FeatureMatrix::from_rows(&[vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
        assert_eq!(build_weights(&half).weight(0, 1), 0.0);

        let eps = INNER_PRODUCT_EPS;
        let same = FeatureMatrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]).unwrap();
        let w = build_weights(&same).weight(0, 1);
        // 1 - 1e-12 is not representable; the rounding moves the logit by ~1e-4
        assert_abs_diff_eq!(w, libm::log((1.0 - eps) / eps), epsilon = 1e-3);

        let orth = FeatureMatrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(build_weights(&orth).weight(0, 1), -w, epsilon = 1e-3);
        assert_eq!(build_weights(&orth).weight(1, 1), 0.0);
    }

    #[test]
    fn label_examples() {
        let t = FeatureMatrix::from_rows(&[
            vec![0.4, 0.3, 0.3],
            vec![0.8, 0.1, 0.1],
            vec![0.6, 0.4, 0.0],
            vec![0.5, 0.5, 0.0],
        ])
        .unwrap();
        let gt = ground_truth(&t);
        assert_eq!(gt.labels[0], Label::Stray);
        assert_eq!(gt.strength[0], None);
        assert_eq!(gt.labels[1], Label::Cluster(0));
        assert_eq!(gt.strength[1], Some(Strength::Strong));
        assert_eq!(gt.labels[2], Label::Cluster(0));
        assert_eq!(gt.strength[2], Some(Strength::Fringe));
        assert_eq!(gt.labels[3], Label::Stray);
        assert_eq!(gt.argmax_ties, vec![3]);
    }

    #[test]
    fn strength_boundary_is_strong() {
        let s = STRONG_CUTOFF;
        let t = FeatureMatrix::from_rows(&[vec![s, 1.0 - s]]).unwrap();
        assert_eq!(ground_truth(&t).strength[0], Some(Strength::Strong));
    }

    #[test]
    fn filter_examples() {
        let t = FeatureMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.79, 0.0, 0.21],
            vec![1.0, 0.0, 0.0],
            vec![0.53, 0.47, 0.0],
            vec![0.53, 0.47, 0.0],
            vec![0.51, 0.49, 0.0],
        ])
        .unwrap();
        assert_eq!(filter_by_strength(&t, 0.6).unwrap()[0], vec![0, 1, 2]);
        let strong = filter_by_strength(&t, STRONG_CUTOFF).unwrap();
        assert_eq!(strong, ground_truth(&t).strong_clusters());
        let none = filter_by_strength(&t, 1.0 - 1e-15).unwrap();
        assert_eq!(none[0], vec![0, 2]);
        assert!(none[1].is_empty());
        assert!(filter_by_strength(&t, 0.5).is_err());
        assert!(filter_by_strength(&t, 1.01).is_err());
    }

    #[test]
    fn rejects_invalid_graphs() {
        assert!(SignedGraph::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).is_err());
        assert!(SignedGraph::from_rows(&[vec![0.0, f64::INFINITY], vec![f64::INFINITY, 0.0]]).is_err());
        assert!(FeatureMatrix::from_rows(&[vec![0.5, 0.6]]).is_err());
    }
}
