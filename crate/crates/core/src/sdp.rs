//! The two doubly-non-negative relaxations
//!
//! ```text
//! max ⟨W, X⟩  s.t.  X ≥ 0, X ⪰ 0, and either X_ii = 1 (UnitDiag) or ‖diag X‖ ≤ 1 (NormDiag)
//! ```
//!
//! solved by two-block ADMM: one block is the PSD cone, the other the
//! polyhedral/ball set carrying the sign and diagonal constraints.

use alloc::vec::Vec;

use crate::linalg::{min_eigenvalue, norm, project_psd, SymMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Variant {
    /// `X_ii = 1` for every `i`.
    UnitDiag,
    /// `‖diag X‖₂ ≤ 1`.
    NormDiag,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative tolerance on primal and dual residuals.
    pub tol: f64,
    pub max_iters: usize,
    /// Initial penalty.
    pub rho: f64,
    /// Adjust `rho` when one residual dominates the other by `10x`.
    pub adapt_rho: bool,
    /// Over-relaxation factor in `(0, 2)`; `1` is plain ADMM.
    pub relaxation: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-7, max_iters: 50_000, rho: 1.0, adapt_rho: true, relaxation: 1.6 }
    }
}

impl SolverOptions {
    /// A different iteration schedule reaching the same optimum; used to
    /// check that quantities claimed unique do not depend on the path taken.
    pub fn alternate_schedule(self) -> Self {
        SolverOptions { rho: self.rho * 4.0, relaxation: 1.0, ..self }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidParameter("rho must be positive".into()));
        }
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return Err(Error::InvalidParameter("relaxation must lie in (0, 2)".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// Multipliers recovered from the splitting. They satisfy the stationarity
/// equation `W + Y + Z = Diag(y)` (UnitDiag) or `W + Y + Z = λ Diag(X)`
/// (NormDiag) by construction; sign and cone conditions hold only
/// approximately and are what [`kkt_report`] measures.
#[derive(Debug, Clone)]
pub struct Duals {
    /// Multiplier of `X ≥ 0`.
    pub y_mat: SymMatrix,
    /// Multiplier of `X ⪰ 0`.
    pub z: SymMatrix,
    /// Diagonal multipliers (UnitDiag); empty for NormDiag.
    pub y: Vec<f64>,
    /// Multiplier of the norm constraint (NormDiag); zero for UnitDiag.
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: SymMatrix,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub cone_violation: f64,
    pub iterations: usize,
    pub converged: bool,
    pub duals: Duals,
}

const RHO_CHECK_INTERVAL: usize = 10;
const MAX_RHO_CHANGES: usize = 20;

/// Euclidean projection onto the non-PSD block of the feasible set.
pub fn project_feasible_affine(m: &SymMatrix, variant: Variant) -> SymMatrix {
    let n = m.n();
    let mut out = m.map(|v| v.max(0.0));
    match variant {
        Variant::UnitDiag => {
            for i in 0..n {
                out.set(i, i, 1.0);
            }
        }
        Variant::NormDiag => {
            let d = out.diag();
            let s = norm(&d).max(1.0);
            for (i, v) in d.iter().enumerate() {
                out.set(i, i, v / s);
            }
        }
    }
    out
}

pub fn solve(w: &SymMatrix, variant: Variant, opts: &SolverOptions) -> Result<SdpSolution> {
    opts.validate()?;
    if !w.is_finite() {
        return Err(Error::InvalidInput("weights must be finite".into()));
    }
    let n = w.n();
    let wn = w.frobenius_norm();
    // Scale so the objective gradient is commensurate with a typical optimal X.
    let x_scale = match variant {
        Variant::UnitDiag => n as f64,
        Variant::NormDiag => 1.0,
    };
    let s = if wn > 0.0 { x_scale / wn } else { 1.0 };
    let wt = w.scale(s);

    let mut rho = opts.rho;
    let mut z = SymMatrix::zeros(n);
    let mut u = SymMatrix::zeros(n);
    let mut r_norm = f64::INFINITY;
    let mut s_norm = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let alpha = opts.relaxation;
    let mut changes = 0;
    let mut wait = RHO_CHECK_INTERVAL;
    let mut next_check = wait;

    while iterations < opts.max_iters {
        iterations += 1;
        // X-step: minimise −⟨W̃,X⟩ + ρ/2‖X − Z + U‖² over the PSD cone.
        let mut v = &z - &u;
        {
            let g = 1.0 / rho;
            let vd = v.data_mut();
            for (a, b) in vd.iter_mut().zip(wt.as_slice()) {
                *a += g * b;
            }
        }
        let x = project_psd(&v)?;

        let xh = if alpha == 1.0 { x.clone() } else { &x.scale(alpha) + &z.scale(1.0 - alpha) };
        let z_prev = core::mem::replace(&mut z, project_feasible_affine(&(&xh + &u), variant));
        u = &(&u + &xh) - &z;

        r_norm = (&x - &z).frobenius_norm();
        s_norm = rho * (&z - &z_prev).frobenius_norm();
        let pri_scale = x.frobenius_norm().max(z.frobenius_norm()).max(1.0);
        let dual_scale = (rho * u.frobenius_norm()).max(1.0);
        if r_norm <= opts.tol * pri_scale && s_norm <= opts.tol * dual_scale {
            converged = true;
            break;
        }
        // Unbounded adaptation can cycle, so each change doubles the wait
        // before the next and the number of changes is capped.
        if opts.adapt_rho && changes < MAX_RHO_CHANGES && iterations >= next_check {
            let rp = r_norm / pri_scale;
            let sd = s_norm / dual_scale;
            let factor = if rp > 10.0 * sd {
                2.0
            } else if sd > 10.0 * rp {
                0.5
            } else {
                1.0
            };
            if factor != 1.0 {
                rho *= factor;
                u = u.scale(1.0 / factor);
                changes += 1;
                wait *= 2;
            }
            next_check = iterations + wait;
        }
    }

    let duals = recover_duals(w, &z, &u.scale(rho / s), variant);
    let cone_violation = (-min_eigenvalue(&z)?).max(0.0);
    let objective = w.dot(&z);
    Ok(SdpSolution {
        x: z,
        objective,
        primal_residual: r_norm,
        dual_residual: s_norm,
        cone_violation,
        iterations,
        converged,
        duals,
    })
}

// `mult` is the unscaled multiplier of the consensus constraint X = Z.
fn recover_duals(w: &SymMatrix, x: &SymMatrix, mult: &SymMatrix, variant: Variant) -> Duals {
    let n = w.n();
    // Stationarity of the X-step: Z_dual = mult − W.
    let z = mult - w;
    let mut y_mat = mult.scale(-1.0);
    match variant {
        Variant::UnitDiag => {
            let y = mult.diag();
            for i in 0..n {
                y_mat.set(i, i, 0.0);
            }
            Duals { y_mat, z, y, lambda: 0.0 }
        }
        Variant::NormDiag => {
            let d = x.diag();
            let md = mult.diag();
            let dd: f64 = d.iter().map(|v| v * v).sum();
            let lambda = if dd > 0.0 {
                (d.iter().zip(&md).map(|(a, b)| a * b).sum::<f64>() / dd).max(0.0)
            } else {
                0.0
            };
            for i in 0..n {
                y_mat.set(i, i, lambda * d[i] - md[i]);
            }
            Duals { y_mat, z, y: Vec::new(), lambda }
        }
    }
}

/// Violations of the optimality conditions for a primal/dual pair.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KktReport {
    /// `‖W + Y + Z − RHS‖_F`.
    pub stationarity: f64,
    /// `max_ij |X_ij Y_ij|`.
    pub complementarity_y: f64,
    /// `|⟨X, Z⟩|`.
    pub complementarity_z: f64,
    /// `|λ (‖diag X‖ − 1)|`; zero for UnitDiag.
    pub complementarity_lambda: f64,
    /// `max(0, −min Y)`.
    pub y_violation: f64,
    /// `max(0, −λ_min(Z))`.
    pub z_violation: f64,
    /// `max(0, −λ)`.
    pub lambda_violation: f64,
}

impl KktReport {
    pub fn max_violation(&self) -> f64 {
        [
            self.stationarity,
            self.complementarity_y,
            self.complementarity_z,
            self.complementarity_lambda,
            self.y_violation,
            self.z_violation,
            self.lambda_violation,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn kkt_report(w: &SymMatrix, variant: Variant, x: &SymMatrix, duals: &Duals) -> Result<KktReport> {
    let n = w.n();
    if x.n() != n || duals.y_mat.n() != n || duals.z.n() != n {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    let mut rhs = SymMatrix::zeros(n);
    let mut complementarity_lambda = 0.0;
    let mut lambda_violation = 0.0;
    match variant {
        Variant::UnitDiag => {
            if duals.y.len() != n {
                return Err(Error::InvalidInput("diagonal multiplier has wrong length".into()));
            }
            for i in 0..n {
                rhs.set(i, i, duals.y[i]);
            }
        }
        Variant::NormDiag => {
            let d = x.diag();
            for i in 0..n {
                rhs.set(i, i, duals.lambda * d[i]);
            }
            complementarity_lambda = libm::fabs(duals.lambda * (norm(&d) - 1.0));
            lambda_violation = (-duals.lambda).max(0.0);
        }
    }
    let stationarity = (&(&(w + &duals.y_mat) + &duals.z) - &rhs).frobenius_norm();
    let complementarity_y = x
        .as_slice()
        .iter()
        .zip(duals.y_mat.as_slice())
        .fold(0.0, |m, (a, b)| f64::max(m, libm::fabs(a * b)));
    let complementarity_z = libm::fabs(x.dot(&duals.z));
    let y_violation = (-duals.y_mat.min_entry()).max(0.0);
    let z_violation = (-min_eigenvalue(&duals.z)?).max(0.0);
    Ok(KktReport {
        stationarity,
        complementarity_y,
        complementarity_z,
        complementarity_lambda,
        y_violation,
        z_violation,
        lambda_violation,
    })
}
