//! Stability of `diag X*` of the norm-diag relaxation under perturbation of `W`.

use crate::linalg::{norm, SymMatrix};
use crate::sdp::{solve, SolverOptions, Variant};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiagRobustness {
    /// `‖diag X*(W) − diag X*(W + Δ)‖`.
    pub lhs: f64,
    /// `2 (2n)^{1/4} √(‖Δ‖_F / ⟨W, X*⟩)`.
    pub rhs_stated: f64,
    /// `2√2 n^{1/4} √(‖Δ‖_F / ⟨W, X*⟩)`, the constant the argument delivers.
    pub rhs_proof: f64,
    /// `⟨W, X*(W)⟩`.
    pub objective: f64,
    pub converged: bool,
    /// `lhs ≤ rhs_proof + 10·tol`.
    pub holds: bool,
}

/// Solves the norm-diag relaxation for `W` and `W + Δ` and compares the
/// diagonals of the two optima against the perturbation bound.
pub fn check_diag_robustness(w: &SymMatrix, delta: &SymMatrix, opts: &SolverOptions) -> Result<DiagRobustness> {
    let n = w.n();
    if delta.n() != n {
        return Err(Error::InvalidInput("perturbation has the wrong size".into()));
    }
    let wp = SymMatrix::from_fn(n, |i, j| w.get(i, j) + delta.get(i, j));
    if w.max_entry() <= 0.0 || wp.max_entry() <= 0.0 {
        return Err(Error::InvalidInput("both weight matrices need a positive entry".into()));
    }
    let a = solve(w, Variant::NormDiag, opts)?;
    let b = solve(&wp, Variant::NormDiag, opts)?;
    let diff: alloc::vec::Vec<f64> = a.x.diag().iter().zip(b.x.diag()).map(|(p, q)| p - q).collect();
    let lhs = norm(&diff);
    let objective = a.objective;
    let ratio = libm::sqrt(delta.frobenius_norm() / objective);
    let nf = n as f64;
    let rhs_stated = 2.0 * libm::pow(2.0 * nf, 0.25) * ratio;
    let rhs_proof = 2.0 * core::f64::consts::SQRT_2 * libm::pow(nf, 0.25) * ratio;
    Ok(DiagRobustness {
        lhs,
        rhs_stated,
        rhs_proof,
        objective,
        converged: a.converged && b.converged,
        holds: lhs <= rhs_proof + 10.0 * opts.tol,
    })
}
