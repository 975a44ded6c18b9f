//! Combinatorial sufficient conditions for `L(G) ⪰ 0`.
//!
//! Both checks are one-sided: a failure says nothing about the spectrum.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::SymMatrix;
use crate::nfm::SignedGraph;
use crate::{Error, Result};

/// Positive two-edge paths `i - m - i'` assigned to one negative edge `ii'`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EdgePaths {
    pub edge: (usize, usize),
    pub weight: f64,
    pub midpoints: Vec<usize>,
    /// `Σ ½·HM(W_im, W_i'm)` over the midpoints; at least `−weight`.
    pub coverage: f64,
}

/// Every negative edge covered by its own disjoint set of positive
/// two-edge paths. Midpoints are never shared between negative edges and no
/// positive edge appears in two paths.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PathCertificate {
    pub paths: Vec<EdgePaths>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PathSearch {
    Certified(PathCertificate),
    /// The first negative edge the greedy search could not cover.
    Failed { edge: (usize, usize), weight: f64, coverage: f64 },
}

impl PathSearch {
    pub fn is_certified(&self) -> bool {
        matches!(self, PathSearch::Certified(_))
    }

    pub fn certificate(&self) -> Option<&PathCertificate> {
        match self {
            PathSearch::Certified(c) => Some(c),
            PathSearch::Failed { .. } => None,
        }
    }
}

// Half the harmonic mean of two positive weights.
fn half_harmonic(a: f64, b: f64) -> f64 {
    a * b / (a + b)
}

/// Greedy search for a path certificate: negative edges by decreasing
/// `|W|`, candidate midpoints by decreasing half harmonic mean. Incomplete:
/// a failure does not rule out a certificate.
pub fn find_path_certificate(g: &SignedGraph) -> PathSearch {
    let n = g.n();
    let w = g.weights();
    let mut negative: Vec<(usize, usize)> =
        (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).filter(|&(i, j)| w.get(i, j) < 0.0).collect();
    negative.sort_by(|a, b| w.get(a.0, a.1).total_cmp(&w.get(b.0, b.1)).then(a.cmp(b)));

    let mut claimed = vec![false; n];
    let mut used_edge = vec![false; n * n];
    let mut paths = Vec::with_capacity(negative.len());
    for (i, j) in negative {
        let need = -w.get(i, j);
        let mut options: Vec<(f64, usize)> = (0..n)
            .filter(|&m| m != i && m != j && !claimed[m])
            .filter(|&m| w.get(i, m) > 0.0 && w.get(j, m) > 0.0)
            .filter(|&m| !used_edge[i * n + m] && !used_edge[j * n + m])
            .map(|m| (half_harmonic(w.get(i, m), w.get(j, m)), m))
            .collect();
        options.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut coverage = 0.0;
        let mut midpoints = Vec::new();
        for (h, m) in options {
            if coverage >= need {
                break;
            }
            coverage += h;
            midpoints.push(m);
        }
        if coverage < need {
            return PathSearch::Failed { edge: (i, j), weight: -need, coverage };
        }
        for &m in &midpoints {
            claimed[m] = true;
            for e in [i * n + m, m * n + i, j * n + m, m * n + j] {
                used_edge[e] = true;
            }
        }
        paths.push(EdgePaths { edge: (i, j), weight: -need, midpoints, coverage });
    }
    PathSearch::Certified(PathCertificate { paths })
}

/// Outcome of the strong-set check.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StrongSetCertificate {
    /// Nodes incident to a negative edge.
    pub u: Vec<usize>,
    /// The set used on the right of the inequality; disjoint from `u`.
    pub s: Vec<usize>,
    /// Smallest slack over all `(u, s)` pairs; `None` when there are no pairs.
    pub margin: Option<f64>,
    pub valid: bool,
}

/// Nodes incident to at least one negative edge.
pub fn negative_nodes(w: &SymMatrix) -> Vec<usize> {
    let n = w.n();
    (0..n).filter(|&i| (0..n).any(|j| w.get(i, j) < 0.0)).collect()
}

/// The strong-set condition with `|S| W_us ≥ −2 Σ_{u' : W_uu' < 0} W_uu'`
/// for all `u ∈ U`, `s ∈ S`. With `s = None` the set is searched for:
/// start from `V ∖ U` and drop the node of the worst pair until the
/// condition holds or nothing is left.
pub fn check_strong_set(g: &SignedGraph, s: Option<&[usize]>) -> Result<StrongSetCertificate> {
    strong_set_weighted(g.weights(), s, None, 2.0)
}

/// Weighted form `|S| a_s W_us ≥ −κ Σ_{u' : W_uu' < 0} a_u' W_uu'`. With
/// `a = 1`, `κ = 2` this is [`check_strong_set`]; `a = q^{1/3}`, `κ = 6`
/// gives the second condition of the norm-diag assumption.
pub fn strong_set_weighted(
    w: &SymMatrix,
    s: Option<&[usize]>,
    node_weight: Option<&[f64]>,
    kappa: f64,
) -> Result<StrongSetCertificate> {
    let n = w.n();
    if let Some(a) = node_weight {
        if a.len() != n {
            return Err(Error::InvalidInput("node weights have wrong length".into()));
        }
    }
    let a = |i: usize| node_weight.map_or(1.0, |a| a[i]);
    let u = negative_nodes(w);
    let mut in_u = vec![false; n];
    for &i in &u {
        in_u[i] = true;
    }
    let mut set: Vec<usize> = match s {
        Some(given) => {
            let mut seen = vec![false; n];
            for &i in given {
                if i >= n || seen[i] {
                    return Err(Error::InvalidInput("S must list distinct nodes of the graph".into()));
                }
                if in_u[i] {
                    return Err(Error::InvalidInput(alloc::format!("node {i} of S is incident to a negative edge")));
                }
                seen[i] = true;
            }
            given.to_vec()
        }
        None => (0..n).filter(|&i| !in_u[i]).collect(),
    };
    if u.is_empty() {
        return Ok(StrongSetCertificate { u, s: set, margin: None, valid: true });
    }
    // κ Σ a_u' W_uu' over negative neighbours; always negative for u ∈ U
    let neg: Vec<f64> = u
        .iter()
        .map(|&i| kappa * (0..n).filter(|&j| w.get(i, j) < 0.0).map(|j| a(j) * w.get(i, j)).sum::<f64>())
        .collect();
    let worst = |set: &[usize]| -> Option<(f64, usize)> {
        let size = set.len() as f64;
        let mut best: Option<(f64, usize)> = None;
        for (pos, &sv) in set.iter().enumerate() {
            for (k, &uv) in u.iter().enumerate() {
                let m = size * a(sv) * w.get(uv, sv) + neg[k];
                if best.is_none_or(|(b, _)| m < b) {
                    best = Some((m, pos));
                }
            }
        }
        best
    };
    loop {
        match worst(&set) {
            None => return Ok(StrongSetCertificate { u, s: set, margin: None, valid: false }),
            Some((m, pos)) => {
                if m >= 0.0 || s.is_some() {
                    return Ok(StrongSetCertificate { u, s: set, margin: Some(m), valid: m >= 0.0 });
                }
                set.remove(pos);
            }
        }
    }
}
