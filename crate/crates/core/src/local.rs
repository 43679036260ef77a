//! Power-method-like local search for UQP.
//!
//! Each step maps `s ↦ e^{j arg(Rs)}`, the exact maximizer of the bilinear
//! relaxation `Re(s'^H R s)` for fixed `s`. For positive definite `R` the
//! UQP objective strictly increases until a hyper point (`arg s = arg Rs`)
//! is reached.


use serde::{Deserialize, Serialize};

use crate::error::{Result, UqpError};
use crate::linalg::{diagonal_load, hermitian_eig, wrap_to_pi, CVector, HermitianMatrix, PhaseVector};

/// Entries of `Rs` below this (scaled by `1 + ‖R‖_F`) have no usable phase.
pub const DEGENERATE_MODULUS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalConfig {
    /// `None` means `1000·n`.
    pub max_iterations: Option<usize>,
    /// Stop once no phase moves by more than this (radians).
    pub phase_tolerance: f64,
    /// Stop once the objective gain is at most `objective_tolerance·(1+|f|)`.
    /// Zero disables the gain test.
    pub objective_tolerance: f64,
}

impl Default for LocalConfig {
    fn default() -> Self {
        Self {
            max_iterations: None,
            phase_tolerance: 1e-10,
            objective_tolerance: 1e-12,
        }
    }
}

impl LocalConfig {
    /// Phase-only stopping rule, for callers that need accurate fixed points.
    pub fn strict() -> Self {
        Self {
            objective_tolerance: 0.0,
            phase_tolerance: 1e-13,
            ..Self::default()
        }
    }

    pub fn iteration_cap(&self, n: usize) -> usize {
        self.max_iterations.unwrap_or(1000 * n).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phase_tolerance > 0.0) || !(self.objective_tolerance >= 0.0) {
            return Err(UqpError::InvalidParameter(format!(
                "local tolerances must be positive (phase {}, objective {})",
                self.phase_tolerance, self.objective_tolerance
            )));
        }
        if self.max_iterations == Some(0) {
            return Err(UqpError::InvalidParameter("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LocalTrace {
    /// `s^H R s` on the caller's matrix; entry 0 is the starting point.
    pub objectives: Vec<f64>,
    /// `Re(s^{(t+1)H} R s^{(t)})` on the working (loaded) matrix.
    pub ruqp: Vec<f64>,
    /// `‖s^{(t+1)} − s^{(t)}‖₂²`.
    pub gaps: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Diagonal loading applied internally (0 when `R` was already PD).
    pub loading: f64,
    /// Smallest eigenvalue of the working matrix.
    pub sigma_min: f64,
}

fn phases_of(rs: &CVector, scale: f64) -> Result<PhaseVector> {
    let floor = DEGENERATE_MODULUS * (1.0 + scale);
    for (index, z) in rs.iter().enumerate() {
        let modulus = z.norm();
        if !(modulus >= floor) {
            return Err(UqpError::DegeneratePhase { index, modulus });
        }
    }
    Ok(PhaseVector::from_complex(rs.as_slice()))
}

fn check_dims(r: &HermitianMatrix, s: &PhaseVector) -> Result<()> {
    if r.n() != s.len() {
        return Err(UqpError::DimensionMismatch {
            expected: r.n(),
            found: s.len(),
        });
    }
    Ok(())
}

/// One iteration `s ↦ e^{j arg(Rs)}`.
pub fn power_step(r: &HermitianMatrix, s: &PhaseVector) -> Result<PhaseVector> {
    check_dims(r, s)?;
    phases_of(&r.mul_vec(&s.to_complex()), r.frobenius_norm())
}

/// True iff `arg(s) = arg(Rs)` component-wise to within `tol` radians.
pub fn is_hyper_point(r: &HermitianMatrix, s: &PhaseVector, tol: f64) -> Result<bool> {
    let next = power_step(r, s)?;
    Ok(next.max_phase_distance(s) <= tol)
}

/// Iterates [`power_step`] from `s0` until the phases settle.
///
/// A matrix that is not positive definite is loaded by
/// `−σ_n(R) + 1e-6·(1+‖R‖_F)` first; the argmax is unaffected and the trace
/// objectives are still reported on `r` itself. Hitting the iteration cap is
/// not an error: the last (best) iterate is returned with `converged = false`.
pub fn local_optimize(
    r: &HermitianMatrix,
    s0: &PhaseVector,
    cfg: &LocalConfig,
) -> Result<(PhaseVector, LocalTrace)> {
    check_dims(r, s0)?;
    cfg.validate()?;
    let n = r.n();
    let sigma_n = *hermitian_eig(r).eigenvalues.last().expect("n > 0");
    let (work, loading, sigma_min) = if sigma_n > 0.0 {
        (None, 0.0, sigma_n)
    } else {
        let lambda = -sigma_n + 1e-6 * (1.0 + r.frobenius_norm());
        (Some(diagonal_load(r, lambda)), lambda, sigma_n + lambda)
    };
    let work = work.as_ref().unwrap_or(r);
    let scale = work.frobenius_norm();

    let mut trace = LocalTrace {
        loading,
        sigma_min,
        ..LocalTrace::default()
    };
    let mut s = s0.clone();
    let mut sv = s.to_complex();
    let mut objective = r.form(&sv);
    trace.objectives.push(objective);

    for _ in 0..cfg.iteration_cap(n) {
        let rs = work.mul_vec(&sv);
        let next = phases_of(&rs, scale)?;
        let next_v = next.to_complex();
        let ruqp = next_v.dotc(&rs).re;
        let gap = (&next_v - &sv).norm_squared();
        let next_objective = r.form(&next_v);
        let moved = s
            .phases()
            .iter()
            .zip(next.phases())
            .map(|(a, b)| wrap_to_pi(b - a).abs())
            .fold(0.0, f64::max);
        let gain = next_objective - objective;

        trace.ruqp.push(ruqp);
        trace.gaps.push(gap);
        trace.objectives.push(next_objective);
        trace.iterations += 1;
        s = next;
        sv = next_v;
        objective = next_objective;

        if moved <= cfg.phase_tolerance
            || (cfg.objective_tolerance > 0.0 && gain <= cfg.objective_tolerance * (1.0 + objective.abs()))
        {
            trace.converged = true;
            break;
        }
    }
    Ok((s, trace))
}

/// Upper bound `Σ_{k,l} |R(k,l)|` on the bilinear relaxation.
pub fn ruqp_upper_bound(r: &HermitianMatrix) -> f64 {
    r.as_matrix().iter().map(|z| z.norm()).sum()
}
