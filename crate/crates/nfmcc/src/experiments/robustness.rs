//! Perturbation sweep for the stability bound on `diag X*`.

use nfmcc_core::certificates::check_diag_robustness;
use nfmcc_core::linalg::SymMatrix;
use nfmcc_core::nfm::generate;
use nfmcc_core::sdp::SolverOptions;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSpec {
    pub n: usize,
    pub k: usize,
    pub alpha: Vec<f64>,
    pub trials: usize,
    /// `‖Δ‖_F` of trial `t` is `delta_norms[t % len]`.
    pub delta_norms: Vec<f64>,
    pub base_seed: u64,
    pub tol: f64,
    pub max_iters: usize,
}

impl RobustnessSpec {
    pub fn new(n: usize, trials: usize, delta_norms: Vec<f64>, base_seed: u64) -> Self {
        let s = SolverOptions::default();
        RobustnessSpec { n, k: 3, alpha: vec![0.3; 3], trials, delta_norms, base_seed, tol: s.tol, max_iters: s.max_iters }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessTrial {
    pub seed: u64,
    pub delta_norm: f64,
    pub lhs: f64,
    pub rhs_stated: f64,
    pub rhs_proof: f64,
    pub converged: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub spec: RobustnessSpec,
    pub holds: usize,
    /// Trials whose `W` or `W + Δ` had no positive entry.
    pub skipped: usize,
    pub trials: Vec<RobustnessTrial>,
}

/// Symmetric standard Gaussian with zero diagonal, scaled to `‖Δ‖_F = norm`.
pub fn gaussian_perturbation(n: usize, norm: f64, seed: u64) -> SymMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut d = SymMatrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v: f64 = StandardNormal.sample(&mut rng);
            d.set(i, j, v);
            d.set(j, i, v);
        }
    }
    let f = d.frobenius_norm();
    if f > 0.0 {
        d.scale(norm / f)
    } else {
        d
    }
}

pub fn run_robustness_sweep(spec: &RobustnessSpec) -> Result<RobustnessReport> {
    if spec.delta_norms.is_empty() || spec.delta_norms.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::Usage("perturbation norms must be non-negative".into()));
    }
    let opts = SolverOptions { tol: spec.tol, max_iters: spec.max_iters, ..SolverOptions::default() };
    let outcomes: Vec<Option<RobustnessTrial>> = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let seed = spec.base_seed.wrapping_add(t as u64);
            let inst = generate(spec.n, spec.k, &spec.alpha, seed)?;
            let norm = spec.delta_norms[t % spec.delta_norms.len()];
            let delta = gaussian_perturbation(spec.n, norm, seed);
            match check_diag_robustness(inst.graph.weights(), &delta, &opts) {
                Ok(r) => Ok(Some(RobustnessTrial {
                    seed,
                    delta_norm: norm,
                    lhs: r.lhs,
                    rhs_stated: r.rhs_stated,
                    rhs_proof: r.rhs_proof,
                    converged: r.converged,
                    holds: r.holds,
                })),
                Err(nfmcc_core::Error::InvalidInput(_)) => Ok(None),
                Err(e) => Err(e.into()),
            }
        })
        .collect::<Result<_>>()?;
    let skipped = outcomes.iter().filter(|o| o.is_none()).count();
    let trials: Vec<RobustnessTrial> = outcomes.into_iter().flatten().collect();
    Ok(RobustnessReport { spec: spec.clone(), holds: trials.iter().filter(|t| t.holds).count(), skipped, trials })
}
