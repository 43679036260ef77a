//! Cross-ambiguity function synthesis.
//!
//! The transmit code `x` (unimodular) and the receive filter `y` (free) are
//! found by cyclic minimization of
//! `g(x, y, φ) = Σ w(τ,f) |d(τ,f) e^{jφ(τ,f)} − y^H J(τ,f) x|²`
//! over a delay/Doppler lattice. The `x` step is a UQP of size `n + 1`.

use std::f64::consts::PI;

use nalgebra::Cholesky;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UqpError};
use crate::linalg::{CMatrix, CVector, HermitianMatrix, PhaseVector};
use crate::local::{local_optimize, LocalConfig};
use crate::merit::{merit, MeritConfig};
use crate::par;
use crate::scenarios::bjorck;

/// Unit-energy rectangular sub-pulses, `p_k` supported on `[k t_p, (k+1) t_p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseBasis {
    pub n: usize,
    pub t_p: f64,
}

/// Nonzero diagonals of `J(τ,f)`: entry `(k+m, k)` is `h_m e^{j2πf k t_p}`.
#[derive(Debug, Clone)]
struct Band {
    diagonals: Vec<(isize, Complex64)>,
    step: Complex64,
}

/// `∫_α^β e^{j2πfu} du`, written so that `f → 0` needs no special case.
fn phase_integral(alpha: f64, beta: f64, f: f64) -> Complex64 {
    let width = beta - alpha;
    let x = PI * f * width;
    let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    Complex64::from_polar(width * sinc, PI * f * (alpha + beta))
}

impl PulseBasis {
    pub fn new(n: usize, t_p: f64) -> Result<Self> {
        if n == 0 || !(t_p > 0.0) || !t_p.is_finite() {
            return Err(UqpError::InvalidParameter(format!(
                "pulse basis needs n >= 1 and a positive finite t_p (got n = {n}, t_p = {t_p})"
            )));
        }
        Ok(PulseBasis { n, t_p })
    }

    /// Total waveform duration `T = n t_p`.
    pub fn duration(&self) -> f64 {
        self.n as f64 * self.t_p
    }

    fn band(&self, tau: f64, f: f64) -> Band {
        let tp = self.t_p;
        let shift = tau / tp;
        let n = self.n as isize;
        let lo = ((shift - 1.0).floor() as isize).max(-(n - 1));
        let hi = ((shift + 1.0).ceil() as isize).min(n - 1);
        let mut diagonals = Vec::with_capacity(2);
        for m in lo..=hi {
            let alpha = (m as f64 * tp - tau).max(0.0);
            let beta = ((m + 1) as f64 * tp - tau).min(tp);
            if beta > alpha {
                diagonals.push((m, phase_integral(alpha, beta, f) / tp));
            }
        }
        Band {
            diagonals,
            step: Complex64::from_polar(1.0, 2.0 * PI * f * tp),
        }
    }

    /// Dense `J(τ,f)` with `χ(τ,f) = y^H J x`.
    pub fn j_matrix(&self, tau: f64, f: f64) -> CMatrix {
        self.band(tau, f).dense(self.n)
    }
}

impl Band {
    fn for_each(&self, n: usize, mut visit: impl FnMut(usize, usize, Complex64)) {
        for &(m, h) in &self.diagonals {
            let k0 = (-m).max(0) as usize;
            let k1 = (n as isize - m.max(0)) as usize;
            let mut rot = self.step.powi(k0 as i32);
            for k in k0..k1 {
                visit((k as isize + m) as usize, k, h * rot);
                rot *= self.step;
            }
        }
    }

    fn dense(&self, n: usize) -> CMatrix {
        let mut j = CMatrix::zeros(n, n);
        self.for_each(n, |l, k, v| j[(l, k)] = v);
        j
    }

    /// `J x`.
    fn apply(&self, x: &CVector) -> CVector {
        let mut out = CVector::zeros(x.len());
        self.for_each(x.len(), |l, k, v| out[l] += v * x[k]);
        out
    }

    /// `J^H y`.
    fn apply_adjoint(&self, y: &CVector) -> CVector {
        let mut out = CVector::zeros(y.len());
        self.for_each(y.len(), |l, k, v| out[k] += v.conj() * y[l]);
        out
    }
}

/// `χ(τ,f) = ∫ u(t) v*(t+τ) e^{j2πft} dt` for `u = Σ x_k p_k`, `v = Σ y_k p_k`.
pub fn caf_value(x: &CVector, y: &CVector, tau: f64, f: f64, basis: &PulseBasis) -> Result<Complex64> {
    if x.len() != basis.n || y.len() != basis.n {
        return Err(UqpError::DimensionMismatch {
            expected: basis.n,
            found: if x.len() != basis.n { x.len() } else { y.len() },
        });
    }
    Ok(y.dotc(&basis.band(tau, f).apply(x)))
}

/// Lattice resolution and extent: `τ ∈ [−tau_span t_p, tau_span t_p]`,
/// `f ∈ [−f_span/T, f_span/T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub tau_points: usize,
    pub f_points: usize,
    pub tau_span: f64,
    pub f_span: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            tau_points: 41,
            f_points: 41,
            tau_span: 10.0,
            f_span: 2.0,
        }
    }
}

/// Thumbtack design lattice. Point `(i, j)` is stored at `i * f_points + j`.
#[derive(Debug, Clone)]
pub struct CafGrid {
    pub basis: PulseBasis,
    pub taus: Vec<f64>,
    pub freqs: Vec<f64>,
    pub weights: Vec<f64>,
    pub desired: Vec<f64>,
    pub mainlobe: Vec<bool>,
    bands: Vec<Band>,
}

fn symmetric_lattice(points: usize, half_width: f64) -> Vec<f64> {
    let c = (points - 1) as f64 / 2.0;
    let step = if points > 1 { 2.0 * half_width / (points - 1) as f64 } else { 0.0 };
    (0..points).map(|i| (i as f64 - c) * step).collect()
}

impl CafGrid {
    /// `d = n` at the origin and 0 elsewhere; `w = 1` except on the mainlobe
    /// lattice points strictly inside `(−t_p, t_p) × (−1/T, 1/T)` and off
    /// both axes.
    pub fn thumbtack(basis: PulseBasis, spec: &GridSpec) -> Result<Self> {
        for (name, p) in [("tau", spec.tau_points), ("f", spec.f_points)] {
            if p < 3 || p % 2 == 0 {
                return Err(UqpError::InvalidParameter(format!(
                    "{name} grid needs an odd number of points >= 3 so the origin is on the lattice (got {p})"
                )));
            }
        }
        if !(spec.tau_span > 0.0) || !(spec.f_span > 0.0) {
            return Err(UqpError::InvalidParameter("grid spans must be positive".into()));
        }
        let taus = symmetric_lattice(spec.tau_points, spec.tau_span * basis.t_p);
        let freqs = symmetric_lattice(spec.f_points, spec.f_span / basis.duration());
        let big_t = basis.duration();
        let mut weights = Vec::with_capacity(taus.len() * freqs.len());
        let mut desired = Vec::with_capacity(weights.capacity());
        let mut mainlobe = Vec::with_capacity(weights.capacity());
        let mut bands = Vec::with_capacity(weights.capacity());
        for &tau in &taus {
            for &f in &freqs {
                let ml = tau != 0.0 && f != 0.0 && tau.abs() < basis.t_p && f.abs() * big_t < 1.0;
                mainlobe.push(ml);
                weights.push(if ml { 0.0 } else { 1.0 });
                desired.push(if tau == 0.0 && f == 0.0 { basis.n as f64 } else { 0.0 });
                bands.push(basis.band(tau, f));
            }
        }
        Ok(CafGrid {
            basis,
            taus,
            freqs,
            weights,
            desired,
            mainlobe,
            bands,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `(τ, f)` of lattice point `i`.
    pub fn point(&self, i: usize) -> (f64, f64) {
        let nf = self.freqs.len();
        (self.taus[i / nf], self.freqs[i % nf])
    }

    /// `χ` at every lattice point.
    pub fn evaluate(&self, x: &CVector, y: &CVector) -> Vec<Complex64> {
        par::map_slice(&self.bands, |b| y.dotc(&b.apply(x)))
    }

    /// Points entering the sidelobe metric: weighted and with `d = 0`.
    pub fn is_sidelobe(&self, i: usize) -> bool {
        self.weights[i] > 0.0 && self.desired[i] == 0.0
    }

    fn weighted(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CafState {
    pub x: PhaseVector,
    pub y: CVector,
    /// One phase per lattice point.
    pub phi: Vec<f64>,
    pub g: f64,
}

/// Inner solver for the `x` step.
#[derive(Debug, Clone, PartialEq)]
pub enum XSolver {
    Local(LocalConfig),
    Merit(MeritConfig),
}

impl Default for XSolver {
    fn default() -> Self {
        XSolver::Local(LocalConfig::default())
    }
}

fn criterion(grid: &CafGrid, x: &CVector, y: &CVector, phi: &[f64]) -> f64 {
    let idx = grid.weighted();
    par::chunked_fold(
        &idx,
        || 0.0,
        |acc, &i| {
            let chi = y.dotc(&grid.bands[i].apply(x));
            let c = Complex64::from_polar(grid.desired[i], phi[i]);
            *acc += grid.weights[i] * (c - chi).norm_sqr();
        },
        |a, b| *a += b,
    )
}

/// `g` of a state, recomputed from its variables.
pub fn caf_criterion(grid: &CafGrid, state: &CafState) -> f64 {
    criterion(grid, &state.x.to_complex(), &state.y, &state.phi)
}

impl CafState {
    /// `x` and `y` from `code`, `φ` at its optimum.
    pub fn from_code(grid: &CafGrid, code: &PhaseVector) -> Result<Self> {
        if code.len() != grid.basis.n {
            return Err(UqpError::DimensionMismatch {
                expected: grid.basis.n,
                found: code.len(),
            });
        }
        let x = code.to_complex();
        let phi = optimal_phases(grid, &x, &x);
        let g = criterion(grid, &x, &x, &phi);
        Ok(CafState {
            x: code.clone(),
            y: x,
            phi,
            g,
        })
    }
}

fn optimal_phases(grid: &CafGrid, x: &CVector, y: &CVector) -> Vec<f64> {
    grid.evaluate(x, y).iter().map(|c| c.arg()).collect()
}

/// Sums `w a a^H` and `w conj(c) a` with `a = J x`.
fn filter_normal_equations(grid: &CafGrid, x: &CVector, phi: &[f64]) -> (CMatrix, CVector) {
    let n = x.len();
    let idx = grid.weighted();
    par::chunked_fold(
        &idx,
        || (CMatrix::zeros(n, n), CVector::zeros(n)),
        |(d1, bx), &i| {
            let a = grid.bands[i].apply(x);
            let w = grid.weights[i];
            d1.gerc(Complex64::new(w, 0.0), &a, &a, Complex64::new(1.0, 0.0));
            let c = Complex64::from_polar(grid.desired[i], phi[i]);
            if c != Complex64::new(0.0, 0.0) {
                *bx += &a * (c.conj() * w);
            }
        },
        |(d1, bx), (e1, ex)| {
            *d1 += e1;
            *bx += ex;
        },
    )
}

/// Sums `w b b^H` and `w c b` with `b = J^H y`.
fn code_normal_equations(grid: &CafGrid, y: &CVector, phi: &[f64]) -> (CMatrix, CVector) {
    let n = y.len();
    let idx = grid.weighted();
    par::chunked_fold(
        &idx,
        || (CMatrix::zeros(n, n), CVector::zeros(n)),
        |(d2, v), &i| {
            let b = grid.bands[i].apply_adjoint(y);
            let w = grid.weights[i];
            d2.gerc(Complex64::new(w, 0.0), &b, &b, Complex64::new(1.0, 0.0));
            let c = Complex64::from_polar(grid.desired[i], phi[i]);
            if c != Complex64::new(0.0, 0.0) {
                *v += &b * (c * w);
            }
        },
        |(d2, v), (e2, ev)| {
            *d2 += e2;
            *v += ev;
        },
    )
}

/// `y = (D₁ + εI)⁻¹ B^H x` with `ε = 1e-8 tr(D₁)/n`.
fn filter_update(grid: &CafGrid, x: &CVector, phi: &[f64]) -> Result<CVector> {
    let n = x.len();
    let (mut d1, bx) = filter_normal_equations(grid, x, phi);
    let trace: f64 = (0..n).map(|k| d1[(k, k)].re).sum();
    let eps = 1e-8 * trace / n as f64;
    for k in 0..n {
        d1[(k, k)].re += eps;
    }
    let d1 = HermitianMatrix::symmetrized(d1).into_matrix();
    let chol = Cholesky::new(d1).ok_or(UqpError::Singular { min_eigenvalue: eps })?;
    Ok(chol.solve(&bx))
}

/// The `(n+1)`-dimensional UQP `max z^H [[−D₂, v], [v^H, 0]] z`.
fn code_uqp(grid: &CafGrid, y: &CVector, phi: &[f64]) -> HermitianMatrix {
    let n = y.len();
    let (d2, v) = code_normal_equations(grid, y, phi);
    let mut m = CMatrix::zeros(n + 1, n + 1);
    for k in 0..n {
        for l in 0..n {
            m[(k, l)] = -d2[(k, l)];
        }
        m[(k, n)] = v[k];
        m[(n, k)] = v[k].conj();
    }
    HermitianMatrix::symmetrized(m)
}

fn code_from_embedding(z: &PhaseVector) -> PhaseVector {
    let n = z.len() - 1;
    let anchor = z.phases()[n];
    PhaseVector::new(z.phases()[..n].iter().map(|p| p - anchor).collect())
}

fn code_update(grid: &CafGrid, x: &PhaseVector, y: &CVector, phi: &[f64], solver: &XSolver) -> Result<PhaseVector> {
    let m = code_uqp(grid, y, phi);
    let z = match solver {
        XSolver::Local(cfg) => {
            let mut start = x.phases().to_vec();
            start.push(0.0);
            local_optimize(&m, &PhaseVector::new(start), cfg)?.0
        }
        XSolver::Merit(cfg) => merit(&m, cfg)?.s,
    };
    Ok(code_from_embedding(&z))
}

/// One cycle: `φ`, then `y`, then `x`. A `y` or `x` candidate that would
/// raise `g` (possible through the `D₁` regularization or a cold-started
/// inner solver) is discarded, so `g` never increases.
pub fn caf_cycle(state: &CafState, grid: &CafGrid, solver: &XSolver) -> Result<CafState> {
    if state.x.len() != grid.basis.n || state.y.len() != grid.basis.n || state.phi.len() != grid.len() {
        return Err(UqpError::DimensionMismatch {
            expected: grid.basis.n,
            found: state.x.len(),
        });
    }
    let xv = state.x.to_complex();
    let phi = optimal_phases(grid, &xv, &state.y);
    let mut g = criterion(grid, &xv, &state.y, &phi);

    let mut y = state.y.clone();
    let y_new = filter_update(grid, &xv, &phi)?;
    let g_y = criterion(grid, &xv, &y_new, &phi);
    if g_y <= g {
        y = y_new;
        g = g_y;
    }

    let mut x = state.x.clone();
    let x_new = code_update(grid, &x, &y, &phi, solver)?;
    let g_x = criterion(grid, &x_new.to_complex(), &y, &phi);
    if g_x <= g {
        x = x_new;
        g = g_x;
    }
    Ok(CafState { x, y, phi, g })
}

/// Output of [`caf_synthesize`].
#[derive(Debug, Clone)]
pub struct CafRun {
    pub state: CafState,
    /// `g` at the initialization and after each cycle.
    pub g_trace: Vec<f64>,
    pub grid: CafGrid,
    /// `|χ|` on the lattice, divided by its maximum.
    pub abs_chi: Vec<f64>,
}

/// Björck-initialized thumbtack design of length `n` (prime, `n ≡ 1 mod 4`)
/// with unit sub-pulse duration.
pub fn caf_synthesize(n: usize, spec: &GridSpec, iterations: usize, solver: &XSolver) -> Result<CafRun> {
    let grid = CafGrid::thumbtack(PulseBasis::new(n, 1.0)?, spec)?;
    let code = bjorck(n as u64)?;
    let mut state = CafState::from_code(&grid, &code)?;
    let mut g_trace = vec![state.g];
    for _ in 0..iterations {
        state = caf_cycle(&state, &grid, solver)?;
        g_trace.push(state.g);
    }
    let abs_chi = normalized_modulus(&grid.evaluate(&state.x.to_complex(), &state.y));
    Ok(CafRun {
        state,
        g_trace,
        grid,
        abs_chi,
    })
}

/// `|χ| / max |χ|`; all zeros stay zero.
pub fn normalized_modulus(chi: &[Complex64]) -> Vec<f64> {
    let peak = chi.iter().map(|c| c.norm()).fold(0.0, f64::max);
    chi.iter().map(|c| if peak > 0.0 { c.norm() / peak } else { 0.0 }).collect()
}

/// Weighted mean of `|χ|²` (peak-normalized) over the sidelobe region, in dB.
pub fn sidelobe_level_db(grid: &CafGrid, abs_chi: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, a) in abs_chi.iter().enumerate() {
        if grid.is_sidelobe(i) {
            num += grid.weights[i] * a * a;
            den += grid.weights[i];
        }
    }
    10.0 * (num / den).log10()
}

/// JSON sidecar of a CAF run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CafSummary {
    pub n: usize,
    pub iterations: usize,
    pub solver: String,
    pub tau_points: usize,
    pub f_points: usize,
    pub x_phases: Vec<f64>,
    pub g_trace: Vec<f64>,
    pub sidelobe_db: f64,
}

impl CafRun {
    pub fn summary(&self, solver: &str) -> CafSummary {
        CafSummary {
            n: self.grid.basis.n,
            iterations: self.g_trace.len() - 1,
            solver: solver.to_string(),
            tau_points: self.grid.taus.len(),
            f_points: self.grid.freqs.len(),
            x_phases: self.state.x.phases().to_vec(),
            g_trace: self.g_trace.clone(),
            sidelobe_db: sidelobe_level_db(&self.grid, &self.abs_chi),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Composite Simpson on each smooth piece between the breakpoints.
    fn simpson(f: impl Fn(f64) -> Complex64, breaks: &mut [f64], panels: usize) -> Complex64 {
        breaks.sort_by(f64::total_cmp);
        let mut total = Complex64::new(0.0, 0.0);
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b - a < 1e-15 {
                continue;
            }
            let h = (b - a) / panels as f64;
            let mut s = f(a) + f(b);
            for i in 1..panels {
                let coef = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += f(a + i as f64 * h) * coef;
            }
            total += s * (h / 3.0);
        }
        total
    }

    fn pulse(k: usize, tp: f64, t: f64, mid: f64) -> f64 {
        // Indicator sampled at the piece midpoint so endpoints do not matter.
        let _ = t;
        if mid >= k as f64 * tp && mid < (k + 1) as f64 * tp {
            1.0 / tp.sqrt()
        } else {
            0.0
        }
    }

    fn quad_entry(basis: &PulseBasis, l: usize, k: usize, tau: f64, f: f64) -> Complex64 {
        let tp = basis.t_p;
        let mut breaks = vec![k as f64 * tp, (k + 1) as f64 * tp];
        for b in [l as f64 * tp - tau, (l + 1) as f64 * tp - tau] {
            if b > breaks[0] && b < breaks[1] {
                breaks.push(b);
            }
        }
        breaks.sort_by(f64::total_cmp);
        let mut total = Complex64::new(0.0, 0.0);
        for w in breaks.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let amp = pulse(k, tp, mid, mid) * pulse(l, tp, mid + tau, mid + tau);
            if amp != 0.0 {
                total += simpson(|t| Complex64::from_polar(amp, 2.0 * PI * f * t), &mut w.to_vec(), 200);
            }
        }
        total
    }

    #[test]
    fn j_matrix_examples() {
        let basis = PulseBasis::new(5, 0.7).unwrap();
        let j = basis.j_matrix(0.0, 0.0);
        assert!((j - CMatrix::identity(5, 5)).norm() < 1e-14);
        let j = basis.j_matrix(0.7, 0.0);
        for l in 0..5 {
            for k in 0..5 {
                let want = if l == k + 1 { 1.0 } else { 0.0 };
                assert!((j[(l, k)] - Complex64::new(want, 0.0)).norm() < 1e-14);
            }
        }
        assert!(basis.j_matrix(3.5, 0.1).norm() < 1e-14);
    }

    #[test]
    fn j_matrix_matches_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let basis = PulseBasis::new(4, 1.3);
        let basis = basis.unwrap();
        for _ in 0..20 {
            let tau = rng.random_range(-5.0..5.0);
            let f = rng.random_range(-1.0..1.0);
            let j = basis.j_matrix(tau, f);
            for l in 0..4 {
                for k in 0..4 {
                    let q = quad_entry(&basis, l, k, tau, f);
                    assert!((j[(l, k)] - q).norm() < 1e-6, "tau {tau} f {f} ({l},{k}): {} vs {q}", j[(l, k)]);
                }
            }
        }
    }

    fn random_code(n: usize, rng: &mut ChaCha8Rng) -> CVector {
        CVector::from_iterator(n, (0..n).map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..6.3))))
    }

    #[test]
    fn caf_matches_time_domain_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let basis = PulseBasis::new(6, 1.0).unwrap();
        let x = random_code(6, &mut rng);
        let y = CVector::from_iterator(6, (0..6).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))));
        let wave = |c: &CVector, t: f64| -> Complex64 {
            let k = t.floor();
            if k >= 0.0 && (k as usize) < c.len() {
                c[k as usize]
            } else {
                Complex64::new(0.0, 0.0)
            }
        };
        for _ in 0..10 {
            let tau = rng.random_range(-7.0..7.0);
            let f = rng.random_range(-0.5..0.5);
            let mut breaks: Vec<f64> = (0..=6).map(|k| k as f64).chain((0..=6).map(|k| k as f64 - tau)).collect();
            breaks.sort_by(f64::total_cmp);
            let mut direct = Complex64::new(0.0, 0.0);
            for w in breaks.windows(2) {
                let mid = 0.5 * (w[0] + w[1]);
                let amp = wave(&x, mid) * wave(&y, mid + tau).conj();
                if amp.norm() > 0.0 {
                    direct += simpson(|t| amp * Complex64::from_polar(1.0, 2.0 * PI * f * t), &mut w.to_vec(), 200);
                }
            }
            let chi = caf_value(&x, &y, tau, f, &basis).unwrap();
            assert!((chi - direct).norm() < 1e-6);
        }
        assert!((caf_value(&x, &x, 0.0, 0.0, &basis).unwrap() - Complex64::new(6.0, 0.0)).norm() < 1e-12);
        assert_eq!(caf_value(&x, &y, 6.0, 0.3, &basis).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(caf_value(&x, &y, -6.5, 0.3, &basis).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn ambiguity_symmetry_on_the_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let basis = PulseBasis::new(13, 1.0).unwrap();
        let grid = CafGrid::thumbtack(basis, &GridSpec::default()).unwrap();
        let x = random_code(13, &mut rng);
        let chi = grid.evaluate(&x, &x);
        let nf = grid.freqs.len();
        let nt = grid.taus.len();
        for i in 0..nt {
            for j in 0..nf {
                let a = chi[i * nf + j].norm();
                let b = chi[(nt - 1 - i) * nf + (nf - 1 - j)].norm();
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn grid_layout() {
        let grid = CafGrid::thumbtack(PulseBasis::new(5, 1.0).unwrap(), &GridSpec::default()).unwrap();
        assert_eq!(grid.len(), 41 * 41);
        let origin = 20 * 41 + 20;
        assert_eq!(grid.point(origin), (0.0, 0.0));
        assert_eq!(grid.desired[origin], 5.0);
        assert_eq!(grid.weights[origin], 1.0);
        assert_eq!(grid.desired.iter().filter(|&&d| d != 0.0).count(), 1);
        // τ = ±0.5 t_p, 0 < |f| T < 1: 2 × 18 mainlobe points.
        assert_eq!(grid.mainlobe.iter().filter(|&&m| m).count(), 36);
        for i in 0..grid.len() {
            assert_eq!(grid.mainlobe[i], grid.weights[i] == 0.0);
        }
        assert!(CafGrid::thumbtack(PulseBasis::new(5, 1.0).unwrap(), &GridSpec { tau_points: 40, ..GridSpec::default() }).is_err());
    }

    #[test]
    fn zero_desired_response_is_stationary() {
        let basis = PulseBasis::new(5, 1.0).unwrap();
        let mut grid = CafGrid::thumbtack(basis, &GridSpec { tau_points: 5, f_points: 5, ..GridSpec::default() }).unwrap();
        grid.desired.iter_mut().for_each(|d| *d = 0.0);
        grid.weights.iter_mut().for_each(|w| *w = 1.0);
        let x = PhaseVector::ones(5);
        let state = CafState {
            x: x.clone(),
            y: CVector::zeros(5),
            phi: vec![0.0; grid.len()],
            g: 0.0,
        };
        let next = caf_cycle(&state, &grid, &XSolver::default()).unwrap();
        assert_eq!(next.g, 0.0);
        assert!(next.y.norm() < 1e-12);
    }

    #[test]
    fn single_point_filter_is_matched_scaling() {
        // Only the origin carries weight: g(y) = |n − y^H x|² with φ = 0.
        let n = 5;
        let basis = PulseBasis::new(n, 1.0).unwrap();
        let mut grid = CafGrid::thumbtack(basis, &GridSpec { tau_points: 3, f_points: 3, ..GridSpec::default() }).unwrap();
        for i in 0..grid.len() {
            grid.weights[i] = if grid.desired[i] > 0.0 { 1.0 } else { 0.0 };
        }
        let x = PhaseVector::new(vec![0.1, 0.7, -1.2, 2.0, 0.4]);
        let xv = x.to_complex();
        let phi = vec![0.0; grid.len()];
        let y = filter_update(&grid, &xv, &phi).unwrap();
        // D₁ = xx^H is rank one; the ridge solution is n x/(n + ε).
        assert!((&y - &xv).norm() < 1e-6, "{y} vs {xv}");
        assert!((y.dotc(&xv) - Complex64::new(n as f64, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn cycles_never_raise_the_criterion() {
        let spec = GridSpec { tau_points: 21, f_points: 21, ..GridSpec::default() };
        let run = caf_synthesize(13, &spec, 8, &XSolver::default()).unwrap();
        for w in run.g_trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert!(run.g_trace.last() < run.g_trace.first());
        assert!((caf_criterion(&run.grid, &run.state) - run.state.g).abs() <= 1e-9 * run.state.g);
        assert!(run.state.x.to_complex().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn zero_iterations_give_the_bjorck_caf() {
        let spec = GridSpec { tau_points: 11, f_points: 11, ..GridSpec::default() };
        let run = caf_synthesize(13, &spec, 0, &XSolver::default()).unwrap();
        let code = bjorck(13).unwrap();
        assert_eq!(run.state.x, code);
        let origin = 5 * 11 + 5;
        assert!((run.abs_chi[origin] - 1.0).abs() < 1e-12);
        assert!(run.abs_chi.iter().all(|&a| a <= 1.0));
        assert!(caf_synthesize(12, &spec, 0, &XSolver::default()).is_err());
    }

    #[test]
    fn merit_inner_solver_keeps_monotonicity() {
        let spec = GridSpec { tau_points: 11, f_points: 11, ..GridSpec::default() };
        let cfg = MeritConfig { max_outer: 2000, ..MeritConfig::default() };
        let run = caf_synthesize(5, &spec, 3, &XSolver::Merit(cfg)).unwrap();
        for w in run.g_trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }
}
