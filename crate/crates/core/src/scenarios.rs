//! Matrix families and codes from the radar applications: random low-rank
//! matrices, SNR and CRLB objectives for clutter models, the ML-detection
//! embedding, exact-optimum constructions and the Björck code.

use std::f64::consts::TAU;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, UqpError};
use crate::linalg::{hermitian_eig, CMatrix, CVector, HermitianMatrix, PhaseVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
}

/// `R = Σ_{k=1}^{d} x_k x_k^H` with `x_k` circular Gaussian (independent
/// standard-normal real and imaginary parts).
pub fn random_hermitian(spec: RandomSpec) -> Result<HermitianMatrix> {
    if spec.n == 0 || spec.d == 0 {
        return Err(UqpError::InvalidParameter(format!(
            "random matrix needs n >= 1 and rank >= 1 (got n = {}, rank = {})",
            spec.n, spec.d
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut r = CMatrix::zeros(spec.n, spec.n);
    for _ in 0..spec.d {
        let x = CVector::from_fn(spec.n, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        });
        r += &x * x.adjoint();
    }
    Ok(HermitianMatrix::symmetrized(r))
}

/// `(1, e^{j2πν}, …, e^{j2π(n−1)ν})`.
pub fn steering(n: usize, nu: f64) -> PhaseVector {
    PhaseVector::new((0..n).map(|k| TAU * (k as f64 * nu).rem_euclid(1.0)).collect())
}

/// Inverse of a Hermitian positive definite matrix via its eigensystem.
pub fn invert_pd(m: &HermitianMatrix) -> Result<HermitianMatrix> {
    let n = m.n();
    let eig = hermitian_eig(m);
    let smallest = eig.eigenvalues[n - 1];
    if !(smallest > 1e-14 * eig.eigenvalues[0].abs().max(1e-300)) {
        return Err(UqpError::Singular {
            min_eigenvalue: smallest,
        });
    }
    let inv_diag = DVector::from_iterator(n, eig.eigenvalues.iter().map(|&l| Complex64::new(1.0 / l, 0.0)));
    let v = &eig.eigenvectors;
    let inv = HermitianMatrix::symmetrized(v * CMatrix::from_diagonal(&inv_diag) * v.adjoint());
    let residual = (m.as_matrix() * inv.as_matrix() - CMatrix::identity(n, n)).norm();
    if residual > 1e-9 * n as f64 {
        return Err(UqpError::Singular {
            min_eigenvalue: smallest,
        });
    }
    Ok(inv)
}

/// `(pp^H)*`, entries `conj(p_k) p_l`.
fn conj_outer(p: &PhaseVector) -> HermitianMatrix {
    HermitianMatrix::outer(&p.conj())
}

/// SNR objective `M⁻¹ ∘ (pp^H)*`.
pub fn snr_matrix(m: &HermitianMatrix, p: &PhaseVector) -> Result<HermitianMatrix> {
    if m.n() != p.len() {
        return Err(UqpError::DimensionMismatch {
            expected: m.n(),
            found: p.len(),
        });
    }
    Ok(invert_pd(m)?.hadamard(&conj_outer(p)))
}

/// Doppler CRLB objective `M⁻¹ ∘ (pp^H)* ∘ (uu^H)*` with
/// `u = (0, j2πT_r, …, j2π(n−1)T_r)`, so `(uu^H)*(k,l) = 4π² k l T_r²`.
pub fn crlb_matrix(m: &HermitianMatrix, p: &PhaseVector, t_r: f64) -> Result<HermitianMatrix> {
    let snr = snr_matrix(m, p)?;
    let n = m.n();
    let u = HermitianMatrix::symmetrized(CMatrix::from_fn(n, n, |k, l| {
        Complex64::new(TAU * TAU * (k * l) as f64 * t_r * t_r, 0.0)
    }));
    Ok(snr.hadamard(&u))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClutterParams {
    /// Case 1 correlation coefficient.
    pub eta: f64,
    /// Case 2 sea-clutter correlation.
    pub eta1: f64,
    /// Case 2 land-clutter correlation.
    pub eta2: f64,
    /// Case 2 sea-clutter normalized Doppler.
    pub rho_doppler: f64,
    /// Case 3 number of discrete scatterers.
    pub n_c: usize,
    /// Case 3 scatterer power (same for every scatterer).
    pub eta_k: f64,
    /// Case 3 thermal noise level.
    pub noise_eta: f64,
    /// Normalized target Doppler `f_d T_r` of the steering vector `p`.
    pub target_doppler: f64,
    /// Normalized pulse repetition time.
    pub t_r: f64,
}

impl Default for ClutterParams {
    fn default() -> Self {
        ClutterParams {
            eta: 0.8,
            eta1: 0.8,
            eta2: 0.9,
            rho_doppler: 0.2,
            n_c: 10,
            eta_k: 1e3,
            noise_eta: 1e-2,
            target_doppler: 0.25,
            t_r: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClutterCase {
    /// `η^{|k−l|}`.
    Exponential,
    /// Sea clutter, land clutter and thermal noise.
    SeaLand,
    /// Discrete scatterers and thermal noise.
    Discrete,
}

impl ClutterCase {
    pub fn from_index(which: u8) -> Result<Self> {
        match which {
            1 => Ok(ClutterCase::Exponential),
            2 => Ok(ClutterCase::SeaLand),
            3 => Ok(ClutterCase::Discrete),
            _ => Err(UqpError::InvalidParameter(format!("unknown clutter case {which}"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            ClutterCase::Exponential => 1,
            ClutterCase::SeaLand => 2,
            ClutterCase::Discrete => 3,
        }
    }
}

fn check_unit_interval(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(UqpError::InvalidParameter(format!("{name} must lie in (0, 1), got {x}")))
    }
}

/// Disturbance covariance `M` for one of the three clutter cases.
pub fn clutter_case(which: ClutterCase, n: usize, params: &ClutterParams) -> Result<HermitianMatrix> {
    if n < 2 {
        return Err(UqpError::InvalidParameter(format!("clutter models need n >= 2, got {n}")));
    }
    let m = match which {
        ClutterCase::Exponential => {
            check_unit_interval("eta", params.eta)?;
            CMatrix::from_fn(n, n, |k, l| Complex64::new(params.eta.powi(k.abs_diff(l) as i32), 0.0))
        }
        ClutterCase::SeaLand => {
            check_unit_interval("eta1", params.eta1)?;
            check_unit_interval("eta2", params.eta2)?;
            CMatrix::from_fn(n, n, |k, l| {
                let lag = k.abs_diff(l) as i32;
                let shift = k as f64 - l as f64;
                let sea = Complex64::from_polar(params.eta1.powi(lag), TAU * params.rho_doppler * shift);
                let land = 10.0 * params.eta2.powi(lag);
                let noise = if k == l { 1e-2 } else { 0.0 };
                sea + land + noise
            })
        }
        ClutterCase::Discrete => {
            if params.noise_eta <= 0.0 {
                return Err(UqpError::InvalidParameter("noise level must be positive".into()));
            }
            let mut m = CMatrix::identity(n, n) * Complex64::new(params.noise_eta, 0.0);
            for k in 0..params.n_c {
                let p = steering(n, k as f64 / 2.0).to_complex();
                m += (&p * p.adjoint()) * Complex64::new(params.eta_k, 0.0);
            }
            m
        }
    };
    Ok(HermitianMatrix::symmetrized(m))
}

/// `[[Q^H Q, −Q^H y], [−y^H Q, 0]]`. Minimizing its UQP over `(s, e^{jψ})`
/// and reading `s e^{−jψ}` solves `min ‖y − Qs‖₂` over unimodular `s`.
pub fn ml_embedding(q: &CMatrix, y: &CVector) -> Result<HermitianMatrix> {
    if q.nrows() != y.len() {
        return Err(UqpError::DimensionMismatch {
            expected: q.nrows(),
            found: y.len(),
        });
    }
    let n = q.ncols();
    let gram = q.adjoint() * q;
    let cross = -(q.adjoint() * y);
    let mut m = CMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(&gram);
    for k in 0..n {
        m[(k, n)] = cross[k];
        m[(n, k)] = cross[k].conj();
    }
    Ok(HermitianMatrix::symmetrized(m))
}

/// First `n` phases of an embedded solution relative to the border entry.
pub fn ml_decode(s_bar: &PhaseVector) -> PhaseVector {
    let n = s_bar.len() - 1;
    let border = s_bar.phases()[n];
    PhaseVector::new(s_bar.phases()[..n].iter().map(|&p| p - border).collect())
}

/// `R = UΣU^H` where the first `k` columns of `U` span the given unimodular
/// vectors; each of them then attains the maximum `nσ₁`.
pub fn theorem2_construct(vectors: &[PhaseVector], sigma: &[f64]) -> Result<HermitianMatrix> {
    let k = vectors.len();
    let n = sigma.len();
    if k == 0 || k > n {
        return Err(UqpError::InvalidParameter(format!("need 1..={n} vectors, got {k}")));
    }
    if let Some(v) = vectors.iter().find(|v| v.len() != n) {
        return Err(UqpError::DimensionMismatch {
            expected: n,
            found: v.len(),
        });
    }
    if sigma.windows(2).any(|w| w[0] < w[1]) {
        return Err(UqpError::InvalidParameter("sigma must be sorted in descending order".into()));
    }
    if sigma[..k].iter().any(|&s| s != sigma[0]) {
        return Err(UqpError::InvalidParameter(format!(
            "the top eigenvalue must be repeated {k} times"
        )));
    }

    let mut basis: Vec<CVector> = Vec::with_capacity(n);
    let orthogonalize = |v: &CVector, basis: &[CVector]| {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in basis {
                let c = b.dotc(&w);
                w -= b * c;
            }
        }
        w
    };
    for v in vectors {
        let x = v.to_complex();
        let w = orthogonalize(&x, &basis);
        let norm = w.norm();
        if norm <= 1e-10 * x.norm() {
            return Err(UqpError::LinearlyDependent);
        }
        basis.push(w / Complex64::new(norm, 0.0));
    }
    for e in 0..n {
        if basis.len() == n {
            break;
        }
        let mut x = CVector::zeros(n);
        x[e] = Complex64::new(1.0, 0.0);
        let w = orthogonalize(&x, &basis);
        let norm = w.norm();
        if norm > 1e-8 {
            basis.push(w / Complex64::new(norm, 0.0));
        }
    }
    let u = CMatrix::from_columns(&basis);
    let s = CMatrix::from_diagonal(&DVector::from_iterator(n, sigma.iter().map(|&x| Complex64::new(x, 0.0))));
    Ok(HermitianMatrix::symmetrized(&u * s * u.adjoint()))
}

/// Seeded instance of [`theorem2_construct`]: `k` random phase vectors,
/// `σ₁ = 2` repeated `k` times, the remaining singular values drawn from
/// `(0, 1)` in descending order.
pub fn theorem2_random(n: usize, k: usize, seed: u64) -> Result<(HermitianMatrix, Vec<PhaseVector>)> {
    if n == 0 || k == 0 || k > n {
        return Err(UqpError::InvalidParameter(format!("need 1 <= k <= n, got n = {n}, k = {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors: Vec<PhaseVector> = (0..k)
        .map(|_| PhaseVector::new((0..n).map(|_| rng.random_range(0.0..TAU)).collect()))
        .collect();
    let mut tail: Vec<f64> = (k..n).map(|_| rng.random_range(0.05..0.95)).collect();
    tail.sort_by(|a, b| b.total_cmp(a));
    let sigma: Vec<f64> = std::iter::repeat_n(2.0, k).chain(tail).collect();
    Ok((theorem2_construct(&vectors, &sigma)?, vectors))
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn mod_pow(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let m = modulus as u128;
    let mut b = base as u128 % m;
    let mut acc = 1u128 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

/// Legendre symbol `(k/p)` for an odd prime `p`, by Euler's criterion.
pub fn legendre(k: i64, p: u64) -> i8 {
    let r = k.rem_euclid(p as i64) as u64;
    if r == 0 {
        return 0;
    }
    if mod_pow(r, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// Björck code `b(k) = e^{j(k/p) arccos(1/(1+√p))}`, `k = 0, …, p−1`.
pub fn bjorck(p: u64) -> Result<PhaseVector> {
    if !is_prime(p) || p % 4 != 1 {
        return Err(UqpError::InvalidParameter(format!(
            "Björck codes need a prime p with p = 1 mod 4, got {p}"
        )));
    }
    let theta = (1.0 / (1.0 + (p as f64).sqrt())).acos();
    Ok(PhaseVector::new(
        (0..p).map(|k| legendre(k as i64, p) as f64 * theta).collect(),
    ))
}
