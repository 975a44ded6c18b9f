use nfmcc_core::certificates::{
    build_int_opt_certificate, check_nd_assumption, check_strong_set, find_path_certificate, rank_one_decompose,
    verify_nd_rec, DEFAULT_LINEARIZATION,
};
use nfmcc_core::linalg::{laplacian, min_eigenvalue, norm, SymMatrix};
use nfmcc_core::nfm::{
    build_weights, filter_by_strength, generate, sample_dirichlet, FeatureMatrix, SignedGraph, STRONG_CUTOFF,
};
use nfmcc_core::sdp::{solve, SolverOptions, Variant};
use proptest::prelude::*;

/// Signed graphs on 3-10 nodes. Negative edges appear only among the first
/// `noisy` nodes, which keeps both certificates in play.
fn signed_graph() -> impl Strategy<Value = SignedGraph> {
    (3usize..=10).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (2..=n, prop::collection::vec((0.0f64..1.0, 0.05f64..2.0), pairs)).prop_map(move |(noisy, draws)| {
            let mut w = SymMatrix::zeros(n);
            let mut k = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    let (coin, mag) = draws[k];
                    k += 1;
                    let v = if i < noisy && j < noisy {
                        if coin < 0.5 { -0.3 * mag } else { 0.0 }
                    } else if coin < 0.85 {
                        mag
                    } else {
                        0.0
                    };
                    w.set(i, j, v);
                    w.set(j, i, v);
                }
            }
            SignedGraph::new(w).unwrap()
        })
    })
}

/// Rows leaning towards the first vertex, like the members of one cluster.
fn cluster_rows(max_n: usize) -> impl Strategy<Value = FeatureMatrix> {
    (1..=max_n, 1.0f64..20.0, any::<u64>())
        .prop_map(|(n, lean, seed)| sample_dirichlet(n, 3, &[lean, 0.5, 0.5], seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn certified_laplacians_are_psd(g in signed_graph()) {
        let path = find_path_certificate(&g).is_certified();
        let strong = check_strong_set(&g, None).unwrap().valid;
        if path || strong {
            let l = laplacian(g.weights());
            prop_assert!(min_eigenvalue(&l).unwrap() >= -1e-9 * l.frobenius_norm());
        }
    }

    #[test]
    fn rank_one_split_reconstructs_the_block(theta in cluster_rows(20)) {
        // a block whose top eigenvalue is not positive has no split
        let d = rank_one_decompose(&theta, DEFAULT_LINEARIZATION);
        prop_assume!(d.is_ok());
        let d = d.unwrap();
        let w = build_weights(&theta);
        prop_assert!((&d.reconstruct() - w.weights()).max_abs() <= 1e-10);
        prop_assert!((norm(&d.v1) - 1.0).abs() <= 1e-12);
    }
}

/// The subgraph on strong nodes and its clusters in local indices.
fn strong_part(seed: u64, n: usize) -> (SignedGraph, Vec<Vec<usize>>) {
    let inst = generate(n, 3, &[0.3; 3], seed).unwrap();
    let strong = inst.truth.strong_clusters();
    let nodes: Vec<usize> = strong.iter().flatten().copied().collect();
    let mut clusters = Vec::new();
    let mut next = 0;
    for c in strong.iter().filter(|c| !c.is_empty()) {
        clusters.push((next..next + c.len()).collect());
        next += c.len();
    }
    (inst.graph.subgraph(&nodes), clusters)
}

#[test]
fn valid_integral_certificate_means_the_relaxation_is_tight() {
    let opts = SolverOptions::default();
    let mut checked = 0;
    for seed in 0..12 {
        let (g, clusters) = strong_part(seed, 30);
        let cert = build_int_opt_certificate(&g, &clusters, &[]).unwrap();
        if !cert.valid {
            continue;
        }
        checked += 1;
        let truth = g.weights().dot(&cert.x);
        let got = solve(g.weights(), Variant::UnitDiag, &opts).unwrap().objective;
        assert!((got - truth).abs() <= 1e-5 * (1.0 + truth.abs()), "seed {seed}: {got} vs {truth}");
    }
    assert!(checked >= 10, "only {checked} certificates were valid");
}

/// Three clusters of `m` nodes whose features sit close to a centre with
/// squared norm about 0.75.
fn concentrated(m: usize, seed: u64) -> (FeatureMatrix, SignedGraph) {
    let p = [0.86, 0.07, 0.07];
    let mut rows = Vec::new();
    for j in 0..3 {
        let alpha: Vec<f64> = (0..3).map(|t| 5000.0 * p[(t + 3 - j) % 3]).collect();
        rows.extend(sample_dirichlet(m, 3, &alpha, seed * 3 + j as u64).unwrap().to_rows());
    }
    let theta = FeatureMatrix::from_rows(&rows).unwrap();
    let g = build_weights(&theta);
    (theta, g)
}

#[test]
fn fixed_points_are_accurate_and_contained_under_the_assumption() {
    for seed in 0..5 {
        let (theta, g) = concentrated(60, seed);
        let clusters = filter_by_strength(&theta, STRONG_CUTOFF).unwrap();
        let mut fps = Vec::new();
        for c in &clusters {
            let rep = check_nd_assumption(&g, c, &theta.select(c), DEFAULT_LINEARIZATION).unwrap();
            let k = &rep.conditions;
            let fp = k.fixed_point.clone().unwrap();
            if k.c1_ok && k.c3_ok && k.c4_ok {
                assert!(fp.contained, "seed {seed}");
            }
            if fp.converged() {
                let r3 = norm(&fp.r).powi(3);
                assert!(fp.residual <= 1e-9 * r3, "seed {seed}: {} vs {}", fp.residual, r3);
            }
            fps.push(fp.r);
        }
        let cert = verify_nd_rec(&g, &clusters, &fps).unwrap();
        assert!(cert.valid, "seed {seed}");
        // the solver reaches the value of the constructed point
        let s = solve(g.weights(), Variant::NormDiag, &SolverOptions::default()).unwrap();
        let built = g.weights().dot(&cert.x);
        assert!((s.objective - built).abs() <= 1e-5 * built, "seed {seed}: {} vs {built}", s.objective);
    }
}
