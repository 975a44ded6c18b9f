use std::f64::consts::FRAC_PI_2;

use nfmcc_core::linalg::{norm, SymMatrix};
use nfmcc_core::nfm::generate;
use nfmcc_core::sdp::{solve, SolverOptions, Variant};
use proptest::prelude::*;

/// Every symmetric zero-diagonal `n × n` matrix with off-diagonal entries
/// in {-1, 0, 1}, one per class of node relabellings.
fn ternary_graphs(n: usize) -> Vec<SymMatrix> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let perms = permutations(n);
    let encode = |w: &SymMatrix| -> Vec<i8> { pairs.iter().map(|&(i, j)| w.get(i, j) as i8).collect() };
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for mut code in 0..3usize.pow(pairs.len() as u32) {
        let mut w = SymMatrix::zeros(n);
        for &(i, j) in &pairs {
            let v = (code % 3) as f64 - 1.0;
            code /= 3;
            w.set(i, j, v);
            w.set(j, i, v);
        }
        let canonical = perms.iter().map(|p| encode(&w.permute(p))).min().unwrap();
        if seen.insert(canonical) {
            out.push(w);
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    permutations(n - 1)
        .into_iter()
        .flat_map(|p| {
            (0..n).map(move |pos| {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                q
            })
        })
        .collect()
}

// Calls `f` with every angle vector on the grid `{0, h, ..., π/2}^n`.
fn for_each_angles(n: usize, steps: usize, f: &mut impl FnMut(&[f64])) {
    let mut idx = vec![0usize; n];
    let mut theta = vec![0.0; n];
    loop {
        for (t, &i) in theta.iter_mut().zip(&idx) {
            *t = FRAC_PI_2 * i as f64 / steps as f64;
        }
        f(&theta);
        let mut p = 0;
        loop {
            if p == n {
                return;
            }
            idx[p] += 1;
            if idx[p] <= steps {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}

/// Set partitions of `0..n` as restricted growth strings.
fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0]];
    for _ in 1..n {
        out = out
            .into_iter()
            .flat_map(|g| {
                let top = g.iter().max().unwrap() + 1;
                (0..=top).map(move |b| {
                    let mut h = g.clone();
                    h.push(b);
                    h
                })
            })
            .collect();
    }
    out
}

/// Non-negative factors `V` with unit rows, so `C = V Vᵀ` is feasible for
/// UnitDiag. Two families, without duplicate `C`:
/// - block diagonal over a set partition, block `g` using columns `2g` and
///   `2g + 1` for grid angles in the first quadrant;
/// - row `i` the normalised indicator of a non-empty subset of `0..n`.
fn candidates(n: usize, steps: usize) -> Vec<Vec<Vec<f64>>> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    let mut push = |v: Vec<Vec<f64>>| {
        let c = gram(&v);
        let key: Vec<i64> = c.as_slice().iter().map(|x| (x * 1e12).round() as i64).collect();
        if seen.insert(key) {
            out.push(v);
        }
    };
    for groups in set_partitions(n) {
        for_each_angles(n, steps, &mut |theta| {
            push(
                (0..n)
                    .map(|i| {
                        let mut row = vec![0.0; 2 * n];
                        row[2 * groups[i]] = theta[i].cos();
                        row[2 * groups[i] + 1] = theta[i].sin();
                        row
                    })
                    .collect(),
            );
        });
    }
    let subsets = (1u32 << n) - 1;
    let mut pick = vec![1u32; n];
    loop {
        push(
            pick.iter()
                .map(|&a| {
                    let k = (a.count_ones() as f64).sqrt();
                    (0..2 * n).map(|c| if c < n && a & (1 << c) != 0 { 1.0 / k } else { 0.0 }).collect()
                })
                .collect(),
        );
        let mut p = 0;
        loop {
            if p == n {
                return out;
            }
            pick[p] += 1;
            if pick[p] <= subsets {
                break;
            }
            pick[p] = 1;
            p += 1;
        }
    }
}

fn gram(v: &[Vec<f64>]) -> SymMatrix {
    SymMatrix::from_fn(v.len(), |i, j| v[i].iter().zip(&v[j]).map(|(a, b)| a * b).sum::<f64>().max(0.0))
}

/// Best `dᵀ M d` found over `d ≥ 0` with `Σ d_i⁴ ≤ 1`, i.e. the diagonal
/// scaling of `X = D C D` under `‖diag X‖ ≤ 1`. On every support, ascend
/// with `d ← max(M d, 0)^{1/3}` rescaled to the boundary; stationary points
/// satisfy `M d ∝ d∘d∘d`. The returned `d` is feasible.
fn l4_max(m: &SymMatrix) -> (f64, Vec<f64>) {
    let n = m.n();
    let mut best = (0.0, vec![0.0; n]);
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let sub = m.submatrix(&idx);
        let mut d = vec![(idx.len() as f64).powf(-0.25); idx.len()];
        for _ in 0..60 {
            let next: Vec<f64> = sub.mul_vec(&d).iter().map(|v| v.max(0.0).cbrt()).collect();
            let l4 = next.iter().map(|v| v.powi(4)).sum::<f64>().powf(0.25);
            if l4 == 0.0 {
                break;
            }
            d = next.iter().map(|v| v / l4).collect();
        }
        let v: f64 = sub.mul_vec(&d).iter().zip(&d).map(|(a, b)| a * b).sum();
        if v > best.0 {
            let mut full = vec![0.0; n];
            for (k, &i) in idx.iter().enumerate() {
                full[i] = d[k];
            }
            best = (v, full);
        }
    }
    best
}

fn value(w: &SymMatrix, v: &[Vec<f64>], variant: Variant) -> (f64, Vec<f64>) {
    let c = gram(v);
    let m = SymMatrix::from_fn(w.n(), |i, j| w.get(i, j) * c.get(i, j));
    match variant {
        Variant::UnitDiag => (m.as_slice().iter().sum(), vec![1.0; w.n()]),
        Variant::NormDiag => l4_max(&m),
    }
}

/// Block coordinate ascent on the rows of `V`: with the other rows and `d`
/// fixed, the best unit non-negative row is the normalised positive part of
/// `Σ_j W_ij d_j v_j`. Every iterate stays feasible.
fn refine(w: &SymMatrix, mut v: Vec<Vec<f64>>, variant: Variant) -> f64 {
    let n = w.n();
    let (mut best, mut d) = value(w, &v, variant);
    for _ in 0..100 {
        for i in 0..n {
            let mut g = vec![0.0; v[i].len()];
            for j in (0..n).filter(|&j| j != i) {
                for (gc, vc) in g.iter_mut().zip(&v[j]) {
                    *gc += w.get(i, j) * d[j] * vc;
                }
            }
            let pos: Vec<f64> = g.iter().map(|x| x.max(0.0)).collect();
            let len = norm(&pos);
            if len > 0.0 {
                v[i] = pos.iter().map(|x| x / len).collect();
            }
        }
        let (next, nd) = value(w, &v, variant);
        d = nd;
        if next <= best + 1e-13 {
            best = best.max(next);
            break;
        }
        best = next;
    }
    best
}

/// Brute-force lower bound on either relaxation: every candidate is
/// scored, the best few are polished by [`refine`].
fn oracle(w: &SymMatrix, variant: Variant, cands: &[Vec<Vec<f64>>]) -> f64 {
    let mut scored: Vec<(f64, usize)> = cands.iter().enumerate().map(|(k, v)| (value(w, v, variant).0, k)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    scored.iter().take(24).map(|&(s, k)| s.max(refine(w, cands[k].clone(), variant))).fold(f64::NEG_INFINITY, f64::max)
}

// The relaxation is an upper bound on every candidate, and on these small
// graphs the polished candidates reach its optimum.
fn check_against_oracle(variant: Variant, steps: usize) {
    let opts = SolverOptions::default();
    for n in 2..=4 {
        let cands = candidates(n, steps);
        for w in ternary_graphs(n) {
            let got = solve(&w, variant, &opts).unwrap().objective;
            let want = oracle(&w, variant, &cands);
            assert!((got - want).abs() <= 1e-3, "W = {:?}: solver {got}, oracle {want}", w.to_rows());
        }
    }
}

#[test]
fn unit_diag_matches_the_oracle() {
    check_against_oracle(Variant::UnitDiag, 6);
}

#[test]
fn norm_diag_matches_the_oracle() {
    check_against_oracle(Variant::NormDiag, 2);
}

#[test]
fn norm_diag_is_tight_and_positive_with_a_positive_edge() {
    let opts = SolverOptions::default();
    for seed in 0..8 {
        let inst = generate(20, 3, &[0.3; 3], seed).unwrap();
        let w = inst.graph.weights();
        if w.max_entry() <= 0.0 {
            continue;
        }
        let s = solve(w, Variant::NormDiag, &opts).unwrap();
        assert!(s.converged);
        assert!(s.objective > 0.0);
        assert!((norm(&s.x.diag()) - 1.0).abs() <= 1e-5, "{}", norm(&s.x.diag()));
    }
}

#[test]
fn solves_are_deterministic() {
    let inst = generate(25, 3, &[0.3; 3], 3).unwrap();
    let opts = SolverOptions::default();
    for variant in [Variant::UnitDiag, Variant::NormDiag] {
        let a = solve(inst.graph.weights(), variant, &opts).unwrap();
        let b = solve(inst.graph.weights(), variant, &opts).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.iterations, b.iterations);
    }
}

/// Two different iteration schedules land on the same diagonal. A stopping
/// rule on residuals bounds the distance to the optimum only by roughly the
/// square root of the residual on these degenerate problems, so the bound
/// here is `√tol` rather than a multiple of `tol`.
#[test]
fn diagonal_does_not_depend_on_the_schedule() {
    let opts = SolverOptions::default();
    let alt = opts.alternate_schedule();
    for seed in 0..4 {
        let inst = generate(30, 3, &[0.3; 3], 100 + seed).unwrap();
        let w = inst.graph.weights();
        let a = solve(w, Variant::NormDiag, &opts).unwrap();
        let b = solve(w, Variant::NormDiag, &alt).unwrap();
        let diff: Vec<f64> = a.x.diag().iter().zip(b.x.diag()).map(|(p, q)| p - q).collect();
        assert!(norm(&diff) <= opts.tol.sqrt(), "seed {seed}: {}", norm(&diff));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solutions_are_feasible(n in 2usize..8, seed in any::<u64>()) {
        let inst = generate(n, 2, &[0.5, 0.5], seed).unwrap();
        for variant in [Variant::UnitDiag, Variant::NormDiag] {
            let s = solve(inst.graph.weights(), variant, &SolverOptions::default()).unwrap();
            prop_assert!(s.converged);
            prop_assert!(s.x.min_entry() >= 0.0);
            let d = s.x.diag();
            match variant {
                Variant::UnitDiag => prop_assert!(d.iter().all(|v| (v - 1.0).abs() <= 1e-5)),
                Variant::NormDiag => prop_assert!(norm(&d) <= 1.0 + 1e-6),
            }
            prop_assert!(nfmcc_core::linalg::min_eigenvalue(&s.x).unwrap() >= -1e-5);
        }
    }
}
