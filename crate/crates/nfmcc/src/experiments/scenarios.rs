//! Instance families with a known expected outcome: hand-solvable two-node
//! problems, the nine-node example feature block, random graphs for the
//! PSD certificates, noiseless graphs, graphs that satisfy the norm-diag
//! assumption, and the near-stray fringe scenario.

use nfmcc_core::certificates::{
    build_int_opt_certificate, check_nd_assumption, check_strong_set, find_path_certificate, verify_nd_rec,
    DEFAULT_LINEARIZATION,
};
use nfmcc_core::cluster::{l2_norm_diag, one_diag};
use nfmcc_core::linalg::{laplacian, min_eigenvalue, SymMatrix};
use nfmcc_core::nfm::{
    build_weights, filter_by_strength, generate, ground_truth, sample_dirichlet, FeatureMatrix, Label, NfmInstance,
    SignedGraph, STRONG_CUTOFF,
};
use nfmcc_core::sdp::{solve, SolverOptions, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Feature rows of the nine-node example block, as printed (two decimals).
pub const W_STRUCTURE_ROWS: [[f64; 3]; 9] = [
    [0.05, 0.83, 0.11],
    [0.04, 0.69, 0.27],
    [0.03, 0.92, 0.05],
    [0.02, 0.73, 0.25],
    [0.11, 0.88, 0.01],
    [0.25, 0.60, 0.15],
    [0.00, 0.99, 0.01],
    [0.12, 0.67, 0.21],
    [0.01, 0.95, 0.04],
];

/// Reported non-zero eigenvalues of `2.2(2ΘΘᵀ − E)` for that block.
pub const W_STRUCTURE_EIGENVALUES: [f64; 3] = [8.57, 0.25, -0.75];

/// Reported top eigenvector.
pub const W_STRUCTURE_VECTOR: [f64; 9] = [0.33, 0.17, 0.43, 0.22, 0.38, 0.06, 0.51, 0.15, 0.45];

/// Euclidean projection onto the unit simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut shift = 0.0;
    for (i, &x) in u.iter().enumerate() {
        acc += x;
        let t = (acc - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            shift = t;
        }
    }
    v.iter().map(|&x| (x - shift).max(0.0)).collect()
}

/// The printed rows, each projected onto the simplex. Only the first row
/// moves: its entries sum to 0.99 after rounding.
pub fn w_structure_features() -> FeatureMatrix {
    let rows: Vec<Vec<f64>> = W_STRUCTURE_ROWS.iter().map(|r| project_to_simplex(r)).collect();
    FeatureMatrix::from_rows(&rows).expect("projected rows lie on the simplex")
}

/// One of the hand-solved two-node problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoNodeCase {
    pub variant: Variant,
    pub w: f64,
    pub objective: f64,
    pub expected_objective: f64,
    /// Largest entrywise error over the entries the optimum pins down.
    pub x_error: f64,
    pub converged: bool,
}

/// Solves the four sign/variant combinations for `W_12 = ±w`.
///
/// With a negative edge under the norm bound any diagonal of norm at most
/// one is optimal, so only the off-diagonal entry is compared there.
pub fn two_node_cases(w: f64, opts: &SolverOptions) -> Result<Vec<TwoNodeCase>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let cases: [(Variant, f64, f64, Option<[f64; 2]>, f64); 4] = [
        (Variant::UnitDiag, w, 2.0 * w, Some([1.0, 1.0]), 1.0),
        (Variant::UnitDiag, -w, 0.0, Some([1.0, 1.0]), 0.0),
        (Variant::NormDiag, w, std::f64::consts::SQRT_2 * w, Some([h, h]), h),
        (Variant::NormDiag, -w, 0.0, None, 0.0),
    ];
    cases
        .iter()
        .map(|&(variant, wv, expected_objective, diag, off)| {
            let m = SymMatrix::from_rows(&[vec![0.0, wv], vec![wv, 0.0]])?;
            let sol = solve(&m, variant, opts)?;
            let mut x_error = (sol.x.get(0, 1) - off).abs();
            if let Some(d) = diag {
                x_error = x_error.max((sol.x.get(0, 0) - d[0]).abs()).max((sol.x.get(1, 1) - d[1]).abs());
            }
            Ok(TwoNodeCase {
                variant,
                w: wv,
                objective: sol.objective,
                expected_objective,
                x_error,
                converged: sol.converged,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundnessReport {
    pub draws: usize,
    /// Graphs accepted because the path search certified them.
    pub path_certified: usize,
    /// Graphs accepted because the strong-set search certified them.
    pub strong_certified: usize,
    /// Accepted graphs whose Laplacian has `λ_min < −1e-9·‖L‖_F`.
    pub violations: usize,
    /// Smallest `λ_min / ‖L‖_F` over accepted graphs.
    pub worst_ratio: f64,
}

/// Small signed graph with negative edges confined to a random set of noisy
/// nodes, so that both certificates fire regularly.
pub fn random_signed_graph(rng: &mut ChaCha8Rng) -> SignedGraph {
    let n = rng.random_range(3..=12usize);
    let noisy = rng.random_range(2..=(n / 2).max(2));
    let mut w = SymMatrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = if i < noisy && j < noisy {
                if rng.random_bool(0.5) {
                    -rng.random_range(0.0..0.6)
                } else {
                    0.0
                }
            } else if rng.random_bool(0.8) {
                rng.random_range(0.1..2.0)
            } else {
                0.0
            };
            w.set(i, j, v);
            w.set(j, i, v);
        }
    }
    SignedGraph::new(w).expect("finite symmetric weights")
}

/// Draws random signed graphs until `per_kind` have been certified by each
/// of the two searches (graphs without negative edges are skipped), and
/// checks every certified Laplacian with an eigensolve.
pub fn certificate_soundness(per_kind: usize, seed: u64, max_draws: usize) -> Result<SoundnessReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SoundnessReport { draws: 0, path_certified: 0, strong_certified: 0, violations: 0, worst_ratio: f64::INFINITY };
    while (rep.path_certified < per_kind || rep.strong_certified < per_kind) && rep.draws < max_draws {
        rep.draws += 1;
        let g = random_signed_graph(&mut rng);
        if g.weights().min_entry() >= 0.0 {
            continue;
        }
        let by_path = rep.path_certified < per_kind && find_path_certificate(&g).is_certified();
        let by_strong = !by_path && rep.strong_certified < per_kind && check_strong_set(&g, None)?.valid;
        if !(by_path || by_strong) {
            continue;
        }
        if by_path {
            rep.path_certified += 1;
        } else {
            rep.strong_certified += 1;
        }
        let l = laplacian(g.weights());
        let ratio = min_eigenvalue(&l)? / l.frobenius_norm();
        rep.worst_ratio = rep.worst_ratio.min(ratio);
        if ratio < -1e-9 {
            rep.violations += 1;
        }
    }
    Ok(rep)
}

/// The subgraph of `inst` on its strong nodes, with the strong clusters in
/// local indices. Strong nodes of one cluster share non-negative edges and
/// strong nodes of different clusters negative ones.
pub fn strong_subinstance(inst: &NfmInstance) -> (SignedGraph, Vec<Vec<usize>>) {
    let strong = inst.truth.strong_clusters();
    let nodes: Vec<usize> = strong.iter().flatten().copied().collect();
    let mut local = Vec::new();
    let mut next = 0;
    for c in &strong {
        if !c.is_empty() {
            local.push((next..next + c.len()).collect());
            next += c.len();
        }
    }
    (inst.graph.subgraph(&nodes), local)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntOptReport {
    pub trials: usize,
    pub certified: usize,
    pub exact: usize,
    pub both: usize,
}

/// `1-diag` and the integral-optimum certificate on the strong-node
/// subgraphs of `trials` NFM draws with `n` nodes.
pub fn noiseless_int_opt(trials: usize, n: usize, base_seed: u64, opts: &SolverOptions) -> Result<IntOptReport> {
    let outcomes: Vec<(bool, bool)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let inst = generate(n, 3, &[0.3; 3], base_seed.wrapping_add(t as u64))?;
            let (g, clusters) = strong_subinstance(&inst);
            let cert = build_int_opt_certificate(&g, &clusters, &[])?;
            let rec = one_diag(&g, opts)?;
            let mut got = rec.clustering.clusters.clone();
            got.sort();
            let mut want = clusters.clone();
            want.sort();
            Ok((cert.valid, got == want))
        })
        .collect::<Result<_>>()?;
    Ok(IntOptReport {
        trials,
        certified: outcomes.iter().filter(|o| o.0).count(),
        exact: outcomes.iter().filter(|o| o.1).count(),
        both: outcomes.iter().filter(|o| o.0 && o.1).count(),
    })
}

/// Cluster centre used by [`concentrated_instance`]. Its squared norm is
/// about 0.75, where `logit(x)` and `2.2(2x − 1)` agree to first order in
/// value, so the linearised block is accurate for features close to it.
pub const CONCENTRATED_CENTRE: [f64; 3] = [0.86, 0.07, 0.07];

/// `k = 3` clusters of `m` nodes each; cluster `j` draws its features from
/// `Dirichlet(κ·p_j)` with `p_j` the centre rotated to coordinate `j`.
pub fn concentrated_instance(m: usize, kappa: f64, seed: u64) -> Result<NfmInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(3 * m);
    for j in 0..3 {
        let alpha: Vec<f64> = (0..3).map(|t| kappa * CONCENTRATED_CENTRE[(t + 3 - j) % 3]).collect();
        rows.extend(sample_dirichlet(m, 3, &alpha, rng.random())?.to_rows());
    }
    let theta = FeatureMatrix::from_rows(&rows)?;
    let graph = build_weights(&theta);
    let truth = ground_truth(&theta);
    Ok(NfmInstance { alpha: vec![0.3; 3], seed, theta, graph, truth })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdRecReport {
    /// Instances drawn.
    pub candidates: usize,
    /// Instances whose every cluster passed all four conditions.
    pub assumption_passed: usize,
    /// Of those, instances whose constructed pair passed every check.
    pub valid: usize,
    pub support_matches: usize,
    /// Of those, instances with every fixed point inside its box.
    pub contained: usize,
    pub worst_residual: f64,
}

/// Draws concentrated instances until `wanted` satisfy the norm-diag
/// assumption on every cluster (at most `max_candidates` draws), then
/// builds and checks the primal/dual pair on each.
pub fn nd_rec_trials(wanted: usize, base_seed: u64, max_candidates: usize) -> Result<NdRecReport> {
    let mut rep = NdRecReport {
        candidates: 0,
        assumption_passed: 0,
        valid: 0,
        support_matches: 0,
        contained: 0,
        worst_residual: 0.0,
    };
    while rep.assumption_passed < wanted && rep.candidates < max_candidates {
        let inst = concentrated_instance(60, 5000.0, base_seed.wrapping_add(rep.candidates as u64))?;
        rep.candidates += 1;
        let clusters = filter_by_strength(&inst.theta, STRONG_CUTOFF)?;
        let mut fixed_points = Vec::with_capacity(clusters.len());
        let mut ok = true;
        let mut contained = true;
        for c in &clusters {
            let r = check_nd_assumption(&inst.graph, c, &inst.theta.select(c), DEFAULT_LINEARIZATION)?;
            ok &= r.all_ok();
            match r.conditions.fixed_point {
                Some(fp) => {
                    contained &= fp.contained && fp.converged();
                    fixed_points.push(fp.r);
                }
                None => ok = false,
            }
        }
        if !ok {
            continue;
        }
        rep.assumption_passed += 1;
        let cert = verify_nd_rec(&inst.graph, &clusters, &fixed_points)?;
        let k = &cert.kkt;
        let residual = k.stationarity.max(k.complementarity_y).max(k.complementarity_z).max(k.complementarity_lambda);
        rep.worst_residual = rep.worst_residual.max(residual);
        rep.valid += usize::from(cert.valid);
        rep.support_matches += usize::from(cert.support_matches);
        rep.contained += usize::from(contained);
    }
    Ok(rep)
}

/// 25 nodes, three clusters. Nodes 0-2 are strong for cluster 0 (first
/// coordinate in `[0.75, 1]`), nodes 3-5 belong to cluster 0 by a margin
/// of 0.01-0.05 and lean towards cluster 1. The other 19 are Dirichlet(0.3)
/// draws that do not fall in cluster 0.
pub fn fringe_scenario(seed: u64) -> Result<NfmInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(25);
    for _ in 0..3 {
        let s: f64 = rng.random_range(0.75..=1.0);
        rows.push(vec![s, 0.0, 1.0 - s]);
    }
    for _ in 0..3 {
        let u: f64 = rng.random_range(0.01..=0.05);
        let v: f64 = rng.random_range(0.0..=0.02);
        rows.push(vec![0.5 + u, 0.5 - u - v, v]);
    }
    while rows.len() < 25 {
        let t = sample_dirichlet(1, 3, &[0.3; 3], rng.random())?;
        if ground_truth(&t).labels[0] != Label::Cluster(0) {
            rows.push(t.row(0).to_vec());
        }
    }
    let theta = FeatureMatrix::from_rows(&rows)?;
    let graph = build_weights(&theta);
    let truth = ground_truth(&theta);
    Ok(NfmInstance { alpha: vec![0.3; 3], seed, theta, graph, truth })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeReport {
    pub trials: usize,
    /// `1-diag` returned nothing or did not keep nodes 0-5 together.
    pub one_diag_failures: usize,
    /// `l2-norm-diag` returned `{0, 1, 2}` as one of its clusters.
    pub l2_exact: usize,
}

pub fn fringe_trials(trials: usize, base_seed: u64, opts: &SolverOptions) -> Result<FringeReport> {
    let six: Vec<usize> = (0..6).collect();
    let outcomes: Vec<(bool, bool)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let inst = fringe_scenario(base_seed.wrapping_add(t as u64))?;
            let a = one_diag(&inst.graph, opts)?;
            let together = a.clustering.clusters.iter().any(|c| six.iter().all(|i| c.contains(i)));
            let b = l2_norm_diag(&inst.graph, opts)?;
            let exact = b.clustering.clusters.iter().any(|c| c[..] == [0, 1, 2]);
            Ok((a.clustering.is_empty() || !together, exact))
        })
        .collect::<Result<_>>()?;
    Ok(FringeReport {
        trials,
        one_diag_failures: outcomes.iter().filter(|o| o.0).count(),
        l2_exact: outcomes.iter().filter(|o| o.1).count(),
    })
}
