//! MERIT: drive `R + α₀ss^H` towards `(Q₁ + P₁) ∘ (ss^H)` with `Q₁ ∈ C_𝟏` and
//! `P₁ ∈ C(V_𝟏)`, by block-coordinate descent on the Frobenius residual.
//!
//! When the residual vanishes with `α₀ = 0`, `s` is a certified global
//! maximizer. Otherwise `α₀` is raised by bisection until the residual
//! vanishes again, which certifies `γ = s^H R s / (s^H R s + α₀n²)`.
//!
//! All internal work happens on a diagonally loaded copy `R + λI` (the
//! loading keeps `Q₁ + P₁` positive definite); reported objectives and
//! bounds are mapped back to the caller's `R`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone::{project_p1, project_q1};
use crate::error::{Result, UqpError};
use crate::linalg::{diagonal_load, hermitian_eig, quadratic_form, CMatrix, HermitianMatrix, PhaseVector};
use crate::local::{local_optimize, LocalConfig, LocalTrace};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeritConfig {
    /// Residual threshold that counts as a vanished `‖E‖_F`.
    pub eps0: f64,
    /// Initial `α₀` step; `None` means `0.1‖R‖_F/n²`.
    pub delta: Option<f64>,
    /// Smallest step; `None` means `delta/2¹⁰`.
    pub delta0: Option<f64>,
    /// Cap on Q₁/P₁/s cycles per restart, both phases together.
    pub max_outer: usize,
    /// Cycles over which the residual must improve to count as progress.
    pub stall_window: usize,
    /// Relative improvement over `stall_window` cycles below which a solve
    /// is declared stalled.
    pub stall_tolerance: f64,
    pub local_cfg: LocalConfig,
    pub seed: u64,
    /// Independent random initializations; the best certificate wins.
    pub restarts: usize,
}

impl Default for MeritConfig {
    fn default() -> Self {
        MeritConfig {
            eps0: 1e-9,
            delta: None,
            delta0: None,
            max_outer: 200_000,
            stall_window: 25,
            stall_tolerance: 1e-12,
            local_cfg: LocalConfig {
                max_iterations: Some(50),
                ..LocalConfig::strict()
            },
            seed: 0,
            restarts: 1,
        }
    }
}

impl MeritConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(UqpError::InvalidParameter(msg.to_string()));
        if !(self.eps0 > 0.0) {
            return bad("eps0 must be positive");
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                return bad("delta must be positive");
            }
        }
        if let Some(d0) = self.delta0 {
            if !(d0 > 0.0) {
                return bad("delta0 must be positive");
            }
            if let Some(d) = self.delta {
                if !(d > d0) {
                    return bad("delta must exceed delta0");
                }
            }
        }
        if self.max_outer == 0 || self.stall_window == 0 || self.restarts == 0 {
            return bad("max_outer, stall_window and restarts must be at least 1");
        }
        self.local_cfg.validate()
    }

    fn steps(&self, r: &HermitianMatrix) -> (f64, f64) {
        let n = r.n() as f64;
        let delta = self
            .delta
            .unwrap_or_else(|| 0.1 * r.frobenius_norm().max(f64::MIN_POSITIVE) / (n * n));
        let delta0 = self.delta0.unwrap_or(delta / 1024.0);
        (delta, delta0)
    }
}

/// Variables of the decomposition problem, in the `s = 𝟏` frame of the
/// loaded matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MeritState {
    pub s: PhaseVector,
    pub q1: HermitianMatrix,
    pub p1: HermitianMatrix,
    pub alpha0: f64,
    /// `‖R̄ + α₀𝟏𝟏ᵀ − Q₁ − P₁‖_F` for the current variables.
    pub residual: f64,
    /// Diagonal loading `λ` applied to the caller's matrix.
    pub loading: f64,
    /// Cycles spent so far.
    pub cycles: usize,
}

/// One trial value of `α₀` in the bisection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaStep {
    pub alpha_pre: f64,
    pub alpha_new: f64,
    /// Residual of the starting state at `alpha_pre`.
    pub residual_pre: f64,
    /// Residual at `alpha_new` of the explicit candidate `Q₁ + δ𝟏𝟏ᵀ`.
    pub residual_candidate: f64,
    /// Residual at `alpha_new` right after the first Q₁ projection.
    pub residual_first: f64,
    /// Residual after each full cycle at `alpha_new`.
    pub trace: Vec<f64>,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeritReport {
    pub s: PhaseVector,
    /// `s^H R s` for the caller's (unloaded) `R`.
    pub objective: f64,
    pub gamma: f64,
    pub alpha0: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// Residual before the first cycle and after each cycle with `α₀ = 0`.
    pub residual_trace: Vec<f64>,
    pub alpha_steps: Vec<AlphaStep>,
    pub outer_iterations: usize,
    pub converged: bool,
    pub residual_final: f64,
    pub loading: f64,
    pub seed: u64,
}

/// `R̄ = R ∘ (ss^H)*`, entries `R(k,l) conj(s_k) s_l`.
fn to_frame(r: &HermitianMatrix, s: &PhaseVector) -> CMatrix {
    let z = s.to_complex();
    CMatrix::from_fn(r.n(), r.n(), |k, l| r.get(k, l) * z[k].conj() * z[l])
}

/// `X ∘ (ss^H)`.
fn from_frame(x: &HermitianMatrix, s: &PhaseVector) -> HermitianMatrix {
    let z = s.to_complex();
    let n = x.n();
    HermitianMatrix::symmetrized(CMatrix::from_fn(n, n, |k, l| x.get(k, l) * z[k] * z[l].conj()))
}

fn shifted_frame(rw: &HermitianMatrix, s: &PhaseVector, alpha0: f64) -> CMatrix {
    let mut t = to_frame(rw, s);
    if alpha0 != 0.0 {
        t.add_scalar_mut(Complex64::new(alpha0, 0.0));
    }
    t
}

fn frame_residual(target: &CMatrix, q1: &HermitianMatrix, p1: &HermitianMatrix) -> f64 {
    (target - q1.as_matrix() - p1.as_matrix()).norm()
}

/// `‖R + α₀ss^H − (Q₁ + P₁) ∘ (ss^H)‖_F`.
pub fn decomposition_residual(
    r: &HermitianMatrix,
    s: &PhaseVector,
    q1: &HermitianMatrix,
    p1: &HermitianMatrix,
    alpha0: f64,
) -> f64 {
    frame_residual(&shifted_frame(r, s, alpha0), q1, p1)
}

fn loading_margin(r: &HermitianMatrix) -> f64 {
    1e-6 * (1.0 + r.frobenius_norm())
}

/// Diagonal loading that keeps `Q₁ + P₁` positive definite for the rest of
/// the zero-`α₀` phase: with `ε₀ = ‖R ∘ (ss^H)* − R₁‖_F`,
/// `λ = max(0, ε₀ − σ_n(R)) + margin`. Returns `(R + λI, λ)`.
pub fn safeguard_load(r: &HermitianMatrix, r1: &HermitianMatrix, s: &PhaseVector) -> Result<(HermitianMatrix, f64)> {
    if r.n() != s.len() || r1.n() != s.len() {
        return Err(UqpError::DimensionMismatch {
            expected: s.len(),
            found: if r.n() != s.len() { r.n() } else { r1.n() },
        });
    }
    let eps0 = (to_frame(r, s) - r1.as_matrix()).norm();
    let lambda = (eps0 - r.smallest_eigenvalue()).max(0.0) + loading_margin(r);
    Ok((diagonal_load(r, lambda), lambda))
}

/// Minimizes the residual over `s` for fixed `R₁ = Q₁ + P₁` by running the
/// power-method iteration on `R ∘ (R₁ − α₀𝟏𝟏ᵀ)ᵀ` from `s`. For `α₀ > 0` both
/// factors get `λ′I` with `λ′ = max(0, −σ_n(R₁ − α₀𝟏𝟏ᵀ)) + margin`, which only
/// shifts the objective by a constant.
pub fn s_update(
    r: &HermitianMatrix,
    r1: &HermitianMatrix,
    alpha0: f64,
    s: &PhaseVector,
    cfg: &LocalConfig,
) -> Result<(PhaseVector, LocalTrace)> {
    let n = r.n();
    let w = if alpha0 == 0.0 {
        r.hadamard(&r1.transpose())
    } else {
        let x = r1.sub(&HermitianMatrix::ones(n).scale(alpha0));
        let lambda = (-x.smallest_eigenvalue()).max(0.0) + loading_margin(&x);
        diagonal_load(r, lambda).hadamard(&diagonal_load(&x, lambda).transpose())
    };
    local_optimize(&trim_diagonal(&w), s, cfg)
}

/// Shifts `w` down to `σ_n(w) = margin`. A diagonal shift leaves the argmax
/// over unimodular vectors unchanged, and a heavy diagonal only slows the
/// power iteration.
fn trim_diagonal(w: &HermitianMatrix) -> HermitianMatrix {
    let excess = w.smallest_eigenvalue() - loading_margin(w);
    if excess > 0.0 {
        diagonal_load(w, -excess)
    } else {
        w.clone()
    }
}

/// Literal bounds `(s^H R_s s + nσ_n(E), s^H R_s s + nσ₁(E))` with
/// `E = R′ − R_s`; the maximum of `s′^H R′ s′` lies between them when `s`
/// maximizes the UQP of `R_s`.
pub fn suboptimality_bounds(r_prime: &HermitianMatrix, rs: &HermitianMatrix, s: &PhaseVector) -> Result<(f64, f64)> {
    let e = r_prime.sub(rs);
    let eig = hermitian_eig(&e);
    let n = s.len() as f64;
    let base = quadratic_form(rs, s)?;
    Ok((base + n * eig.eigenvalues[eig.eigenvalues.len() - 1], base + n * eig.eigenvalues[0]))
}

/// Seeded uniform phases; the MERIT starting point.
pub fn random_phases(n: usize, seed: u64) -> PhaseVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PhaseVector::new((0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect())
}

struct Solver<'a> {
    r: &'a HermitianMatrix,
    rw: HermitianMatrix,
    cfg: &'a MeritConfig,
}

enum Outcome {
    Converged,
    Stalled,
    OutOfBudget,
}

impl<'a> Solver<'a> {
    fn cycle(&self, st: &mut MeritState) -> Result<f64> {
        let target = shifted_frame(&self.rw, &st.s, st.alpha0);
        st.q1 = project_q1(&HermitianMatrix::symmetrized(&target - st.p1.as_matrix()));
        st.p1 = project_p1(&HermitianMatrix::symmetrized(&target - st.q1.as_matrix()));
        let (s, _) = s_update(&self.rw, &st.q1.add(&st.p1), st.alpha0, &st.s, &self.cfg.local_cfg)?;
        st.s = s;
        st.residual = decomposition_residual(&self.rw, &st.s, &st.q1, &st.p1, st.alpha0);
        st.cycles += 1;
        Ok(st.residual)
    }

    /// Cycles until the residual drops below `eps0`, stalls or the cycle
    /// budget runs out; appends each residual to `trace`.
    fn run(&self, st: &mut MeritState, trace: &mut Vec<f64>) -> Result<Outcome> {
        if st.residual <= self.cfg.eps0 {
            return Ok(Outcome::Converged);
        }
        let w = self.cfg.stall_window;
        let mut history = vec![st.residual];
        loop {
            if st.cycles >= self.cfg.max_outer {
                return Ok(Outcome::OutOfBudget);
            }
            let res = self.cycle(st)?;
            trace.push(res);
            history.push(res);
            if res <= self.cfg.eps0 {
                return Ok(Outcome::Converged);
            }
            if history.len() > w {
                let old = history[history.len() - 1 - w];
                if old - res < self.cfg.stall_tolerance * old {
                    return Ok(Outcome::Stalled);
                }
            }
        }
    }

    fn report(&self, st: &MeritState, converged: bool, residual_trace: Vec<f64>, alpha_steps: Vec<AlphaStep>, seed: u64) -> Result<MeritReport> {
        let n = self.r.n() as f64;
        let objective = quadratic_form(self.r, &st.s)?;
        let r_prime = self.rw.add(&HermitianMatrix::outer(&st.s).scale(st.alpha0));
        let rs = from_frame(&st.q1.add(&st.p1), &st.s);
        let (lo, hi) = suboptimality_bounds(&r_prime, &rs, &st.s)?;
        let upper_bound = hi - st.loading * n;
        let lower_bound = lo - st.alpha0 * n * n - st.loading * n;
        let gamma = if converged {
            objective / (objective + st.alpha0 * n * n)
        } else {
            objective / upper_bound
        };
        Ok(MeritReport {
            s: st.s.clone(),
            objective,
            gamma,
            alpha0: st.alpha0,
            lower_bound,
            upper_bound,
            residual_trace,
            alpha_steps,
            outer_iterations: st.cycles,
            converged,
            residual_final: st.residual,
            loading: st.loading,
            seed,
        })
    }
}

/// Result of the zero-`α₀` phase: the report and the state to warm-start
/// [`merit_positive`] from.
#[derive(Debug, Clone)]
pub struct ZeroPhase {
    pub report: MeritReport,
    pub state: MeritState,
}

fn initial_state(r: &HermitianMatrix, seed: u64) -> Result<(HermitianMatrix, MeritState)> {
    let n = r.n();
    let s = random_phases(n, seed);
    let q1 = HermitianMatrix::identity(n);
    let p1 = HermitianMatrix::identity(n);
    let (rw, loading) = safeguard_load(r, &q1.add(&p1), &s)?;
    // The loading is absorbed by P₁ so the residual is unchanged.
    let p1 = diagonal_load(&p1, loading);
    let residual = decomposition_residual(&rw, &s, &q1, &p1, 0.0);
    Ok((
        rw,
        MeritState {
            s,
            q1,
            p1,
            alpha0: 0.0,
            residual,
            loading,
            cycles: 0,
        },
    ))
}

/// Zero-`α₀` phase from a seeded random start: alternate the Q₁, P₁ and s
/// block minimizations until the residual falls below `eps0`, stalls, or
/// `max_outer` cycles have run.
pub fn merit_zero(r: &HermitianMatrix, cfg: &MeritConfig) -> Result<ZeroPhase> {
    merit_zero_seeded(r, cfg, cfg.seed)
}

fn merit_zero_seeded(r: &HermitianMatrix, cfg: &MeritConfig, seed: u64) -> Result<ZeroPhase> {
    cfg.validate()?;
    let (rw, mut st) = initial_state(r, seed)?;
    let solver = Solver { r, rw, cfg };
    let mut trace = vec![st.residual];
    let outcome = solver.run(&mut st, &mut trace)?;
    let converged = matches!(outcome, Outcome::Converged);
    let report = solver.report(&st, converged, trace, Vec::new(), seed)?;
    Ok(ZeroPhase { report, state: st })
}

/// Bisection on `α₀` warm-started from the zero phase.
///
/// Each trial `α₀ + δ` is solved from the state of the last failed `α₀`.
/// On success the step is halved and the state rolls back to that `α₀`;
/// the search ends once a success happens with `δ < δ₀`. The reported
/// solution is the successful trial with the largest `γ`. Without any
/// success the report is non-converged and carries the best bound-based
/// certificate `objective / upper_bound` seen along the way.
pub fn merit_positive(r: &HermitianMatrix, cfg: &MeritConfig, warm: &ZeroPhase) -> Result<MeritReport> {
    cfg.validate()?;
    let rw = diagonal_load(r, warm.state.loading);
    let solver = Solver { r, rw, cfg };
    let trace0 = warm.report.residual_trace.clone();
    if warm.report.converged {
        return solver.report(&warm.state, true, trace0, Vec::new(), warm.report.seed);
    }

    let (mut delta, delta0) = cfg.steps(r);
    let n = r.n() as f64;
    let mut saved = warm.state.clone();
    let mut steps = Vec::new();
    let mut best: Option<(f64, MeritState)> = None;
    // Best certificate `objective / upper` among states that did not converge.
    let mut fallback = (solver.report(&saved, false, Vec::new(), Vec::new(), 0)?.gamma, saved.clone());
    let mut cycles = saved.cycles;

    loop {
        let alpha_pre = saved.alpha0;
        let alpha_new = alpha_pre + delta;
        let mut st = saved.clone();
        st.cycles = cycles;
        st.alpha0 = alpha_new;
        let residual_pre = saved.residual;
        let target = shifted_frame(&solver.rw, &st.s, alpha_new);
        let bumped = st.q1.add(&HermitianMatrix::ones(st.s.len()).scale(delta));
        let residual_candidate = frame_residual(&target, &bumped, &st.p1);
        let first_q1 = project_q1(&HermitianMatrix::symmetrized(&target - st.p1.as_matrix()));
        let residual_first = frame_residual(&target, &first_q1, &st.p1);
        st.residual = decomposition_residual(&solver.rw, &st.s, &st.q1, &st.p1, alpha_new);

        let mut trace = Vec::new();
        let outcome = solver.run(&mut st, &mut trace)?;
        cycles = st.cycles;
        let success = matches!(outcome, Outcome::Converged);
        steps.push(AlphaStep {
            alpha_pre,
            alpha_new,
            residual_pre,
            residual_candidate,
            residual_first,
            trace,
            success,
        });

        if success {
            let objective = quadratic_form(r, &st.s)?;
            let gamma = objective / (objective + alpha_new * n * n);
            if best.as_ref().is_none_or(|(g, _)| gamma >= *g) {
                best = Some((gamma, st.clone()));
            }
            if delta < delta0 {
                break;
            }
            delta /= 2.0;
        } else {
            let gamma = solver.report(&st, false, Vec::new(), Vec::new(), 0)?.gamma;
            if gamma > fallback.0 {
                fallback = (gamma, st.clone());
            }
            if matches!(outcome, Outcome::OutOfBudget) {
                break;
            }
            saved = st;
        }
        if cycles >= cfg.max_outer {
            break;
        }
    }

    match best {
        Some((_, mut st)) => {
            st.cycles = cycles;
            solver.report(&st, true, trace0, steps, warm.report.seed)
        }
        None => {
            let mut st = fallback.1;
            st.cycles = cycles;
            solver.report(&st, false, trace0, steps, warm.report.seed)
        }
    }
}

/// Seed of restart `k`.
pub fn restart_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Full MERIT over `cfg.restarts` seeded initializations. The first restart
/// (by index) that certifies `γ = 1` wins and later ones are skipped;
/// otherwise the largest `γ` wins, then the largest objective, then the
/// lowest index. Restarts run in parallel batches; the winner does not
/// depend on the batch size.
pub fn merit(r: &HermitianMatrix, cfg: &MeritConfig) -> Result<MeritReport> {
    cfg.validate()?;
    let batch = par::batch_size();
    let mut best: Option<MeritReport> = None;
    let mut next = 0;
    while next < cfg.restarts {
        let end = (next + batch).min(cfg.restarts);
        let runs = par::map_range(next..end, |k| -> Result<MeritReport> {
            let zero = merit_zero_seeded(r, cfg, restart_seed(cfg.seed, k))?;
            merit_positive(r, cfg, &zero)
        });
        for run in runs {
            let run = run?;
            if run.gamma == 1.0 {
                return Ok(run);
            }
            let better = match &best {
                None => true,
                Some(b) => run.gamma > b.gamma || (run.gamma == b.gamma && run.objective > b.objective),
            };
            if better {
                best = Some(run);
            }
        }
        next = end;
    }
    Ok(best.expect("restarts >= 1"))
}

/// JSON record written by `solve`; certificate fields are `None` for
/// methods that do not produce one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub method: String,
    pub n: usize,
    pub objective: f64,
    pub gamma: Option<f64>,
    pub alpha0: Option<f64>,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    pub outer_iterations: Option<usize>,
    pub converged: Option<bool>,
    pub residual_final: Option<f64>,
    pub s_phases: Vec<f64>,
    pub seed: u64,
    pub elapsed_ms: Option<f64>,
}

impl SolveRecord {
    pub fn from_merit(report: &MeritReport, elapsed_ms: Option<f64>) -> Self {
        SolveRecord {
            method: "merit".into(),
            n: report.s.len(),
            objective: report.objective,
            gamma: Some(report.gamma),
            alpha0: Some(report.alpha0),
            lower_bound: Some(report.lower_bound),
            upper_bound: Some(report.upper_bound),
            outer_iterations: Some(report.outer_iterations),
            converged: Some(report.converged),
            residual_final: Some(report.residual_final),
            s_phases: report.s.phases().to_vec(),
            seed: report.seed,
            elapsed_ms,
        }
    }

    /// Record for a solution without a certificate.
    pub fn plain(method: &str, s: &PhaseVector, objective: f64, iterations: Option<usize>, converged: Option<bool>, seed: u64, elapsed_ms: Option<f64>) -> Self {
        SolveRecord {
            method: method.into(),
            n: s.len(),
            objective,
            gamma: None,
            alpha0: None,
            lower_bound: None,
            upper_bound: None,
            outer_iterations: iterations,
            converged,
            residual_final: None,
            s_phases: s.phases().to_vec(),
            seed,
            elapsed_ms,
        }
    }
}

/// Smallest eigenvalue of `Q₁ + P₁`; positive throughout the zero phase
/// after [`safeguard_load`].
pub fn frame_min_eigenvalue(state: &MeritState) -> f64 {
    state.q1.add(&state.p1).smallest_eigenvalue()
}

/// Runs `cycles` zero-phase cycles from a seeded start and returns the
/// state after each, for inspecting the iteration.
pub fn zero_phase_states(r: &HermitianMatrix, cfg: &MeritConfig, cycles: usize) -> Result<Vec<MeritState>> {
    let (rw, mut st) = initial_state(r, cfg.seed)?;
    let solver = Solver { r, rw, cfg };
    let mut out = Vec::with_capacity(cycles + 1);
    out.push(st.clone());
    for _ in 0..cycles {
        solver.cycle(&mut st)?;
        out.push(st.clone());
    }
    Ok(out)
}
