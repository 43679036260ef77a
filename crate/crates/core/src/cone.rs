//! Cone machinery behind MERIT.
//!
//! `K(s)` is the cone of Hermitian matrices whose UQP argmax is `s`. It is
//! approximated by `C(V_s) ∪ C_s`: in the `s = 𝟏` frame, `C(V_𝟏)` holds real
//! symmetric matrices with nonnegative off-diagonals and `C_𝟏` holds
//! matrices with `𝟏` as a dominant eigenvector. [`transport`] moves between
//! frames; [`cone_sequence`] is the constructive decomposition used to show
//! that any hyper point can be certified after adding enough `α ss^H`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, UqpError};
use crate::linalg::{hermitian_eig, wrap_to_pi, CMatrix, HermitianMatrix, PhaseVector};

fn check_dims(r: &HermitianMatrix, s: &PhaseVector) -> Result<()> {
    if r.n() != s.len() {
        return Err(UqpError::DimensionMismatch {
            expected: r.n(),
            found: s.len(),
        });
    }
    Ok(())
}

/// `R ∘ (s₀s₀^H)` with `s₀ = s₁* ∘ s₂`; maps `K(s₁)` onto `K(s₂)` and
/// satisfies `s₂^H out s₂ = s₁^H R s₁`.
pub fn transport(r: &HermitianMatrix, s1: &PhaseVector, s2: &PhaseVector) -> Result<HermitianMatrix> {
    check_dims(r, s1)?;
    check_dims(r, s2)?;
    let s0 = s1.conj().hadamard(s2);
    Ok(r.hadamard(&HermitianMatrix::outer(&s0)))
}

/// `θ_{k,l} − (φ_k − φ_l)` wrapped to `(−π, π]`.
fn phase_gap(r: &HermitianMatrix, s: &PhaseVector, k: usize, l: usize) -> f64 {
    let p = s.phases();
    wrap_to_pi(r.get(k, l).arg() - (p[k] - p[l]))
}

/// `R₊` and the mask `Θ = {(k,l) : |θ_{k,l} − (φ_k − φ_l)| < π/2}`.
pub fn r_plus(r: &HermitianMatrix, s: &PhaseVector) -> Result<(DMatrix<f64>, DMatrix<bool>)> {
    check_dims(r, s)?;
    let n = r.n();
    let mut plus = DMatrix::zeros(n, n);
    let mut theta = DMatrix::from_element(n, n, false);
    for k in 0..n {
        for l in 0..n {
            let gap = phase_gap(r, s, k, l);
            if gap.abs() < std::f64::consts::FRAC_PI_2 {
                theta[(k, l)] = true;
                plus[(k, l)] = r.get(k, l).norm() * gap.cos();
            }
        }
    }
    Ok((plus, theta))
}

/// Largest `|R(k,l) cos(gap)|` outside `Θ`; admissible `ρ` must exceed it.
pub fn rho_floor(r: &HermitianMatrix, s: &PhaseVector) -> Result<f64> {
    check_dims(r, s)?;
    let n = r.n();
    let mut floor = 0.0_f64;
    for k in 0..n {
        for l in 0..n {
            let gap = phase_gap(r, s, k, l);
            if gap.abs() >= std::f64::consts::FRAC_PI_2 {
                floor = floor.max((r.get(k, l).norm() * gap.cos()).abs());
            }
        }
    }
    Ok(floor)
}

/// One step `R ← R − (R₊ − ρ𝟏𝟏ᵀ) ∘ (ss^H)`.
pub fn cone_update(r: &HermitianMatrix, s: &PhaseVector, rho: f64) -> Result<(HermitianMatrix, DMatrix<f64>)> {
    let (plus, _) = r_plus(r, s)?;
    Ok((apply_update(r, s, &plus, rho), plus))
}

fn apply_update(r: &HermitianMatrix, s: &PhaseVector, plus: &DMatrix<f64>, rho: f64) -> HermitianMatrix {
    let n = r.n();
    let p = s.phases();
    let m = CMatrix::from_fn(n, n, |k, l| {
        r.get(k, l) - Complex64::from_polar(plus[(k, l)] - rho, p[k] - p[l])
    });
    HermitianMatrix::symmetrized(m)
}

#[derive(Debug, Clone)]
pub struct ConeSequence {
    pub rho: f64,
    pub s: PhaseVector,
    /// `[R⁽⁰⁾, R⁽¹⁾, R⁽²⁾]`.
    pub matrices: [HermitianMatrix; 3],
    /// `[R₊⁽⁰⁾, R₊⁽¹⁾]`.
    pub plus: [DMatrix<f64>; 2],
    /// `Θ` of `R⁽⁰⁾`.
    pub theta: DMatrix<bool>,
}

impl ConeSequence {
    pub fn limit(&self) -> &HermitianMatrix {
        &self.matrices[2]
    }

    /// `R⁽²⁾ + (R₊⁽⁰⁾ + R₊⁽¹⁾) ∘ (ss^H)`, which equals `R + 2ρ ss^H`.
    pub fn synthesis(&self) -> HermitianMatrix {
        let n = self.s.len();
        let p = self.s.phases();
        let sum = &self.plus[0] + &self.plus[1];
        let m = CMatrix::from_fn(n, n, |k, l| Complex64::from_polar(sum[(k, l)], p[k] - p[l]));
        self.matrices[2].add(&HermitianMatrix::symmetrized(m))
    }
}

/// Runs the update twice from `R⁽⁰⁾ = R`; the sequence is constant from
/// there on. `s` should be a hyper point of `R` for the eigenpair
/// `R⁽²⁾s = nρs` to hold (not checked here).
pub fn cone_sequence(r: &HermitianMatrix, s: &PhaseVector, rho: f64) -> Result<ConeSequence> {
    let floor = rho_floor(r, s)?;
    if !(rho > floor) || !(rho > 0.0) {
        return Err(UqpError::InvalidParameter(format!(
            "rho = {rho} must be positive and exceed the floor {floor}"
        )));
    }
    let (plus0, theta) = r_plus(r, s)?;
    let r1 = apply_update(r, s, &plus0, rho);
    let (r2, plus1) = cone_update(&r1, s, rho)?;
    Ok(ConeSequence {
        rho,
        s: s.clone(),
        matrices: [r.clone(), r1, r2],
        plus: [plus0, plus1],
        theta,
    })
}

/// Orthonormal basis of `𝟏^⊥` as the columns of an `n × (n−1)` real matrix
/// (Helmert contrasts).
pub fn complement_basis(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n.saturating_sub(1), |i, c| {
        let j = (c + 1) as f64;
        let norm = (j * (j + 1.0)).sqrt();
        match i.cmp(&(c + 1)) {
            std::cmp::Ordering::Less => 1.0 / norm,
            std::cmp::Ordering::Equal => -j / norm,
            std::cmp::Ordering::Greater => 0.0,
        }
    })
}

/// Largest eigenvalue of `m` restricted to the orthogonal complement of
/// `s/√n`; `-∞` when `n = 1`.
pub fn complementary_max_eigenvalue(m: &HermitianMatrix, s: &PhaseVector) -> f64 {
    let n = m.n();
    if n < 2 {
        return f64::NEG_INFINITY;
    }
    let basis = complement_basis(n);
    let v = CMatrix::from_fn(n, n - 1, |i, c| s.entry(i) * basis[(i, c)]);
    let compressed = HermitianMatrix::symmetrized(v.adjoint() * m.as_matrix() * &v);
    hermitian_eig(&compressed).eigenvalues[0]
}

/// `μ/n`, where `μ` is the largest eigenvalue of `R⁽²⁾` off the `s`
/// direction; any `ρ ≥ μ/n` makes `s` dominant.
pub fn dominance_rho(seq: &ConeSequence) -> f64 {
    let n = seq.s.len();
    complementary_max_eigenvalue(seq.limit(), &seq.s) / n as f64
}

/// The pieces of `R_Q` relative to the all-ones direction.
struct OnesSplit {
    /// `H/n`, the Rayleigh quotient at `𝟏/√n`.
    h_over_n: f64,
    /// `V^H R_Q V` with `V` from [`complement_basis`].
    compressed: HermitianMatrix,
    basis: DMatrix<f64>,
}

fn split_ones(rq: &HermitianMatrix) -> OnesSplit {
    let n = rq.n();
    let total: Complex64 = rq.as_matrix().iter().sum();
    let basis = complement_basis(n);
    let v = basis.map(|x| Complex64::new(x, 0.0));
    let compressed = HermitianMatrix::symmetrized(v.transpose() * rq.as_matrix() * &v);
    OnesSplit {
        h_over_n: total.re / n as f64,
        compressed,
        basis,
    }
}

fn assemble_q1(n: usize, rho: f64, complement: &CMatrix, basis: &DMatrix<f64>) -> HermitianMatrix {
    let v = basis.map(|x| Complex64::new(x, 0.0));
    let ones = CMatrix::from_element(n, n, Complex64::new(rho / n as f64, 0.0));
    HermitianMatrix::symmetrized(ones + &v * complement * v.transpose())
}

/// `Q₁(ρ) = ρI + (I − 𝟏𝟏ᵀ/n)(R_Q − ρI)(I − 𝟏𝟏ᵀ/n)`.
pub fn q1_of_rho(rq: &HermitianMatrix, rho: f64) -> HermitianMatrix {
    let n = rq.n();
    let nf = n as f64;
    let proj = CMatrix::from_fn(n, n, |k, l| {
        let d = if k == l { 1.0 } else { 0.0 };
        Complex64::new(d - 1.0 / nf, 0.0)
    });
    let shifted = rq.as_matrix() - CMatrix::identity(n, n) * Complex64::new(rho, 0.0);
    let core = &proj * shifted * &proj;
    HermitianMatrix::symmetrized(CMatrix::identity(n, n) * Complex64::new(rho, 0.0) + core)
}

/// `Q₁(ρ⋆)` with `ρ⋆ = max(H/n, ρ₀)`, `ρ₀` the top complementary eigenvalue.
///
/// Keeps the complement block of `R_Q` and only moves the `𝟏` eigenvalue.
/// This is the nearest point of `C_𝟏` when `H/n ≥ ρ₀`; otherwise shrinking
/// the top complementary eigenvalues as well gets closer, see [`project_q1`].
pub fn project_q1_max_rule(rq: &HermitianMatrix) -> HermitianMatrix {
    let split = split_ones(rq);
    let rho0 = if rq.n() > 1 {
        hermitian_eig(&split.compressed).eigenvalues[0]
    } else {
        f64::NEG_INFINITY
    };
    let rho = if split.h_over_n >= rho0 { split.h_over_n } else { rho0 };
    assemble_q1(rq.n(), rho, split.compressed.as_matrix(), &split.basis)
}

/// Frobenius projection onto `C_𝟏`, the Hermitian matrices with `𝟏` as a
/// dominant eigenvector.
///
/// Minimizes `(ρ − H/n)² + Σ_i (λ_i − ρ)₊²` over `ρ` and clips the
/// complementary eigenvalues `λ_i` of `R_Q` at `ρ`. Agrees with
/// [`project_q1_max_rule`] whenever `H/n ≥ ρ₀`.
pub fn project_q1(rq: &HermitianMatrix) -> HermitianMatrix {
    let n = rq.n();
    let split = split_ones(rq);
    if n == 1 {
        return assemble_q1(n, split.h_over_n, split.compressed.as_matrix(), &split.basis);
    }
    let eig = hermitian_eig(&split.compressed);
    let lambdas = &eig.eigenvalues;
    // Active set = the top k eigenvalues; ρ = (H/n + Σ_{i<k} λ_i)/(k + 1).
    let mut rho = split.h_over_n;
    let mut acc = split.h_over_n;
    for (k, &lam) in lambdas.iter().enumerate() {
        if lam <= rho {
            break;
        }
        acc += lam;
        rho = acc / (k + 2) as f64;
    }
    let clipped = eig.eigenvectors.clone()
        * CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            n - 1,
            lambdas.iter().map(|&l| Complex64::new(l.min(rho), 0.0)),
        ))
        * eig.eigenvectors.adjoint();
    assemble_q1(n, rho, &clipped, &split.basis)
}

/// Nearest element of `C(V_𝟏)`: real part, negative off-diagonals zeroed,
/// diagonal kept whatever its sign.
pub fn project_p1(rp: &HermitianMatrix) -> HermitianMatrix {
    let n = rp.n();
    let m = CMatrix::from_fn(n, n, |k, l| {
        let x = rp.get(k, l).re;
        if k == l || x >= 0.0 {
            Complex64::new(x, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    HermitianMatrix::symmetrized(m)
}

/// `R + α₀ss^H ≈ (Q₁ + P₁) ∘ (ss^H)` in the `s = 𝟏` frame.
#[derive(Debug, Clone)]
pub struct ConeDecomposition {
    pub q1: HermitianMatrix,
    pub p1: HermitianMatrix,
    pub alpha0: f64,
    /// `‖E‖_F`.
    pub residual: f64,
}

impl ConeDecomposition {
    pub fn frame_sum(&self) -> HermitianMatrix {
        self.q1.add(&self.p1)
    }

    /// `Q₁𝟏 = ρ𝟏` with `ρ` dominating the complement, and `P₁` real with
    /// nonnegative off-diagonals, each to within `tol·(1+‖·‖_F)`.
    pub fn satisfies_cone_constraints(&self, tol: f64) -> bool {
        let n = self.q1.n();
        let ones = nalgebra::DVector::from_element(n, Complex64::new(1.0, 0.0));
        let q_ones = self.q1.mul_vec(&ones);
        let rho = q_ones.sum().re / n as f64;
        let qtol = tol * (1.0 + self.q1.frobenius_norm());
        let eigvec_ok = q_ones.iter().all(|z| (z - rho).norm() <= qtol);
        let dominance_ok = complementary_max_eigenvalue(&self.q1, &PhaseVector::ones(n)) <= rho + qtol;
        let ptol = tol * (1.0 + self.p1.frobenius_norm());
        let p_ok = (0..n).all(|k| {
            (0..n).all(|l| {
                let z = self.p1.get(k, l);
                z.im.abs() <= ptol && (k == l || z.re >= -ptol)
            })
        });
        eigvec_ok && dominance_ok && p_ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diagonal_load, quadratic_form};
    use crate::local::{local_optimize, LocalConfig};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_4, TAU};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
        let a = CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        HermitianMatrix::symmetrized(a)
    }

    fn random_pd(n: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
        let a = CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        diagonal_load(&HermitianMatrix::symmetrized(&a * a.adjoint()), 0.1)
    }

    fn random_nonneg(n: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(0.0..1.0));
        HermitianMatrix::from_real(&((&a + a.transpose()) * 0.5)).unwrap()
    }

    fn random_phases(n: usize, rng: &mut ChaCha8Rng) -> PhaseVector {
        PhaseVector::new((0..n).map(|_| rng.random_range(0.0..TAU)).collect())
    }

    #[test]
    fn transport_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = random_hermitian(5, &mut rng);
        let s = random_phases(5, &mut rng);
        let same = transport(&r, &s, &s).unwrap();
        assert!((same.as_matrix() - r.as_matrix()).norm() < 1e-14);

        let nn = random_nonneg(5, &mut rng);
        let s2 = random_phases(5, &mut rng);
        let moved = transport(&nn, &PhaseVector::ones(5), &s2).unwrap();
        assert_abs_diff_eq!(
            quadratic_form(&moved, &s2).unwrap(),
            quadratic_form(&nn, &PhaseVector::ones(5)).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn transport_exhaustive_small_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = random_hermitian(3, &mut rng);
        let s1 = random_phases(3, &mut rng);
        let step = TAU / 4.0;
        for code in 0..64 {
            let s2 = PhaseVector::new(vec![
                (code % 4) as f64 * step,
                (code / 4 % 4) as f64 * step,
                (code / 16) as f64 * step,
            ]);
            let out = transport(&r, &s1, &s2).unwrap();
            let lhs = quadratic_form(&out, &s2).unwrap();
            let rhs = quadratic_form(&r, &s1).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10, "code {code}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn r_plus_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let nn = random_nonneg(4, &mut rng);
        let (plus, theta) = r_plus(&nn, &PhaseVector::ones(4)).unwrap();
        assert!(theta.iter().all(|&t| t));
        assert!((plus - nn.real_part()).norm() < 1e-15);

        let m = HermitianMatrix::from_real(&DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0])).unwrap();
        let (plus, theta) = r_plus(&m, &PhaseVector::ones(2)).unwrap();
        assert!(!theta[(0, 1)] && !theta[(1, 0)]);
        assert_eq!(plus, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]));
        assert_eq!(rho_floor(&m, &PhaseVector::ones(2)).unwrap(), 1.0);

        let r = 2.5;
        let z = Complex64::from_polar(r, FRAC_PI_4);
        let m = HermitianMatrix::new(CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), z, z.conj(), c(1.0, 0.0)])).unwrap();
        let (plus, _) = r_plus(&m, &PhaseVector::ones(2)).unwrap();
        assert_abs_diff_eq!(plus[(0, 1)], r * FRAC_PI_4.cos(), epsilon = 1e-14);
    }

    #[test]
    fn rho_floor_matches_naive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let r = random_hermitian(6, &mut rng);
            let s = random_phases(6, &mut rng);
            let mut naive = 0.0_f64;
            for k in 0..6 {
                for l in 0..6 {
                    let z = r.get(k, l);
                    let d = z.arg() - (s.phases()[k] - s.phases()[l]);
                    // |d| wrapped to [0, π] via cos/sin
                    let wrapped = d.sin().atan2(d.cos()).abs();
                    if wrapped >= std::f64::consts::FRAC_PI_2 {
                        naive = naive.max((z.norm() * d.cos()).abs());
                    }
                }
            }
            assert_abs_diff_eq!(rho_floor(&r, &s).unwrap(), naive, epsilon = 1e-14);
            assert_eq!(rho_floor(&random_nonneg(6, &mut rng), &PhaseVector::ones(6)).unwrap(), 0.0);
        }
    }

    #[test]
    fn nonneg_sequence_collapses_to_rho_ones() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let nn = random_nonneg(5, &mut rng);
        let rho = 0.7;
        let seq = cone_sequence(&nn, &PhaseVector::ones(5), rho).unwrap();
        let target = HermitianMatrix::ones(5).scale(rho);
        assert!((seq.matrices[1].as_matrix() - target.as_matrix()).norm() < 1e-14);
        assert!((seq.matrices[2].as_matrix() - target.as_matrix()).norm() < 1e-14);
        assert_abs_diff_eq!(dominance_rho(&seq), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn sequence_theorems_on_hyper_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for trial in 0..25 {
            let n = 2 + trial % 9;
            let r = random_pd(n, &mut rng);
            let (s, _) = local_optimize(&r, &random_phases(n, &mut rng), &LocalConfig::strict()).unwrap();
            let rho = rho_floor(&r, &s).unwrap() + 1.0;
            let seq = cone_sequence(&r, &s, rho).unwrap();
            let (r3, _) = cone_update(seq.limit(), &s, rho).unwrap();
            assert!((r3.as_matrix() - seq.limit().as_matrix()).norm() <= 1e-12);

            let sv = s.to_complex();
            let lhs = seq.limit().mul_vec(&sv);
            let rhs = sv.scale(n as f64 * rho);
            assert!((lhs - rhs).norm() <= 1e-9 * seq.limit().frobenius_norm());

            let seq2 = cone_sequence(&r, &s, rho + 1.0).unwrap();
            let diff = seq2.limit().sub(seq.limit());
            let ss = HermitianMatrix::outer(&s);
            assert!((diff.as_matrix() - ss.as_matrix()).norm() <= 1e-10);

            let synth = seq.synthesis();
            let want = r.add(&ss.scale(2.0 * rho));
            assert!((synth.as_matrix() - want.as_matrix()).norm() <= 1e-10 * r.frobenius_norm());

            // Eigen oracle for the dominance threshold: deflate s.
            let e = hermitian_eig(seq.limit());
            let mu = e
                .eigenvalues
                .iter()
                .enumerate()
                .filter(|(k, _)| e.eigenvectors.column(*k).dotc(&sv).norm() < 0.5)
                .map(|(_, &v)| v)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((dominance_rho(&seq) - mu / n as f64).abs() <= 1e-9 * (1.0 + mu.abs()));
        }
    }

    #[test]
    fn dominance_shifts_with_loading() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let r = random_pd(5, &mut rng);
        let (s, _) = local_optimize(&r, &random_phases(5, &mut rng), &LocalConfig::strict()).unwrap();
        let seq = cone_sequence(&r, &s, rho_floor(&r, &s).unwrap() + 0.5).unwrap();
        let mut loaded = seq.clone();
        loaded.matrices[2] = diagonal_load(seq.limit(), 3.0);
        assert_abs_diff_eq!(dominance_rho(&loaded), dominance_rho(&seq) + 3.0 / 5.0, epsilon = 1e-10);
    }

    #[test]
    fn cone_sequence_rejects_small_rho() {
        let m = HermitianMatrix::from_real(&DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0])).unwrap();
        assert!(cone_sequence(&m, &PhaseVector::ones(2), 1.0).is_err());
        assert!(cone_sequence(&m, &PhaseVector::ones(2), 1.0 + 1e-9).is_ok());
    }

    #[test]
    fn complement_basis_is_orthonormal() {
        for n in 1..10 {
            let v = complement_basis(n);
            let gram = v.transpose() * &v;
            assert!((gram - DMatrix::identity(n - 1, n - 1)).norm() < 1e-13);
            let ones = DMatrix::from_element(1, n, 1.0);
            assert!((ones * &v).norm() < 1e-13);
        }
    }

    #[test]
    fn project_q1_examples() {
        let c0 = 0.8;
        let rq = HermitianMatrix::ones(4).scale(c0);
        for project in [project_q1, project_q1_max_rule] {
            let q = project(&rq);
            assert!((q.as_matrix() - rq.as_matrix()).norm() < 1e-13);
            let q = project(&HermitianMatrix::identity(4));
            assert!((q.as_matrix() - CMatrix::identity(4, 4)).norm() < 1e-13);
        }
    }

    #[test]
    fn project_q1_one_by_one_keeps_entry() {
        let rq = HermitianMatrix::identity(1).scale(-2.5);
        assert_eq!(project_q1(&rq).get(0, 0).re, -2.5);
        assert_eq!(project_q1_max_rule(&rq).get(0, 0).re, -2.5);
    }

    #[test]
    fn max_rule_matches_projector_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let rq = random_hermitian(6, &mut rng);
            let q = project_q1_max_rule(&rq);
            let ones = nalgebra::DVector::from_element(6, c(1.0, 0.0));
            let rho = q.mul_vec(&ones)[0].re;
            let want = q1_of_rho(&rq, rho);
            assert!((q.as_matrix() - want.as_matrix()).norm() < 1e-12);
            let dec = ConeDecomposition {
                q1: q,
                p1: HermitianMatrix::identity(6),
                alpha0: 0.0,
                residual: 0.0,
            };
            assert!(dec.satisfies_cone_constraints(1e-10));
        }
    }

    /// Random Hermitian direction that keeps `𝟏` an eigenvector.
    fn feasible_direction(n: usize, rng: &mut ChaCha8Rng) -> (HermitianMatrix, f64) {
        let g = random_hermitian(n, rng);
        let delta = rng.random_range(-1.0..1.0);
        let p = q1_of_rho(&g, 0.0);
        let d = p.add(&HermitianMatrix::ones(n).scale(delta / n as f64));
        (d, delta)
    }

    fn is_dominant(q: &HermitianMatrix) -> bool {
        let n = q.n();
        let rho = q.mul_vec(&nalgebra::DVector::from_element(n, c(1.0, 0.0)))[0].re;
        complementary_max_eigenvalue(q, &PhaseVector::ones(n)) <= rho + 1e-12
    }

    #[test]
    fn project_q1_perturbation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let eps = 1e-3;
        for trial in 0..20 {
            let n = 3 + trial % 5;
            let rq = random_hermitian(n, &mut rng);
            let q = project_q1(&rq);
            let base = (rq.as_matrix() - q.as_matrix()).norm();
            let mut tested = 0;
            while tested < 100 {
                let (d, _) = feasible_direction(n, &mut rng);
                let cand = q.add(&d.scale(eps));
                if !is_dominant(&cand) {
                    continue;
                }
                tested += 1;
                let dist = (rq.as_matrix() - cand.as_matrix()).norm();
                assert!(dist >= base - 1e-9, "trial {trial}: {dist} < {base}");
            }
        }
    }

    #[test]
    fn projection_agrees_with_max_rule_when_ones_dominates() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let rq = random_nonneg(5, &mut rng).add(&HermitianMatrix::ones(5).scale(2.0));
            let a = project_q1_max_rule(&rq);
            let b = project_q1(&rq);
            assert!((a.as_matrix() - b.as_matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn projection_never_farther_than_max_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut strictly_closer = 0;
        for _ in 0..50 {
            let rq = random_hermitian(6, &mut rng);
            let a = (rq.as_matrix() - project_q1_max_rule(&rq).as_matrix()).norm();
            let b = (rq.as_matrix() - project_q1(&rq).as_matrix()).norm();
            assert!(b <= a + 1e-12);
            if b < a - 1e-9 {
                strictly_closer += 1;
            }
        }
        // Random Hermitian inputs usually have H/n below the top
        // complementary eigenvalue, where the max rule is not a projection.
        assert!(strictly_closer > 0);
    }

    #[test]
    fn project_p1_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let nn = random_nonneg(4, &mut rng);
        assert_eq!(project_p1(&nn), nn);
        let neg = HermitianMatrix::identity(3).scale(-1.0);
        assert_eq!(project_p1(&neg), neg);
        let m = HermitianMatrix::new(CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(-2.0, 1.0), c(-2.0, -1.0), c(3.0, 0.0)])).unwrap();
        let want = HermitianMatrix::from_real(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0])).unwrap();
        assert_eq!(project_p1(&m), want);
    }
}
