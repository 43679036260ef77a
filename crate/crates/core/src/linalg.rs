//! Dense complex Hermitian primitives shared by every solver module.
//!
//! [`HermitianMatrix`] wraps a square `nalgebra` matrix whose Hermitian
//! symmetry is checked once at construction; downstream code can rely on it
//! without re-validating. [`PhaseVector`] stores a unimodular vector by its
//! phases so unit modulus holds by construction.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UqpError};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative tolerance used when accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Reduces an angle to `[0, 2π)`.
pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Reduces an angle to `(-π, π]`.
pub fn wrap_to_pi(x: f64) -> f64 {
    let r = wrap_phase(x);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

fn max_asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for k in 0..n {
        for l in k..n {
            let d = (m[(k, l)] - m[(l, k)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    data: CMatrix,
}

impl HermitianMatrix {
    /// Accepts `m` if it is square and Hermitian to within
    /// `1e-12·(1+‖m‖_F)`, then symmetrizes away the residual asymmetry.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(UqpError::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(UqpError::InvalidParameter("empty matrix".into()));
        }
        let tolerance = HERMITIAN_TOL * (1.0 + m.norm());
        let asymmetry = max_asymmetry(&m);
        if !asymmetry.is_finite() || asymmetry > tolerance {
            return Err(UqpError::NotHermitian { asymmetry, tolerance });
        }
        Ok(Self::symmetrized(m))
    }

    /// Returns `(m + m^H)/2` without checking how far `m` was from Hermitian.
    ///
    /// Use only for matrices that are Hermitian in exact arithmetic.
    pub fn symmetrized(m: CMatrix) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "Hermitian matrix must be square");
        let mut data = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        for k in 0..data.nrows() {
            data[(k, k)].im = 0.0;
        }
        Self { data }
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        Self::new(CMatrix::from_fn(n, n, f))
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            data: CMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: CMatrix::identity(n, n),
        }
    }

    /// The all-ones matrix `𝟏𝟏ᵀ`.
    pub fn ones(n: usize) -> Self {
        Self {
            data: CMatrix::from_element(n, n, Complex64::new(1.0, 0.0)),
        }
    }

    /// `s s^H` for a unimodular `s`.
    pub fn outer(s: &PhaseVector) -> Self {
        let v = s.to_complex();
        Self::symmetrized(&v * v.adjoint())
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.data[(k, l)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn mul_vec(&self, v: &CVector) -> CVector {
        &self.data * v
    }

    /// `Re(v^H R v)` for an arbitrary complex vector.
    pub fn form(&self, v: &CVector) -> f64 {
        v.dotc(&(&self.data * v)).re
    }

    pub fn add(&self, other: &HermitianMatrix) -> HermitianMatrix {
        Self::symmetrized(&self.data + &other.data)
    }

    pub fn sub(&self, other: &HermitianMatrix) -> HermitianMatrix {
        Self::symmetrized(&self.data - &other.data)
    }

    pub fn scale(&self, c: f64) -> HermitianMatrix {
        Self {
            data: &self.data * Complex64::new(c, 0.0),
        }
    }

    pub fn transpose(&self) -> HermitianMatrix {
        Self {
            data: self.data.transpose(),
        }
    }

    /// Element-wise conjugate; Hermitian whenever `self` is.
    pub fn conj(&self) -> HermitianMatrix {
        Self {
            data: self.data.map(|z| z.conj()),
        }
    }

    /// Element-wise product with another Hermitian matrix (stays Hermitian).
    pub fn hadamard(&self, other: &HermitianMatrix) -> HermitianMatrix {
        Self::symmetrized(self.data.component_mul(&other.data))
    }

    /// Real part, element-wise.
    pub fn real_part(&self) -> DMatrix<f64> {
        self.data.map(|z| z.re)
    }

    pub fn smallest_eigenvalue(&self) -> f64 {
        *hermitian_eig(self).eigenvalues.last().expect("non-empty")
    }

    pub fn largest_eigenvalue(&self) -> f64 {
        hermitian_eig(self).eigenvalues[0]
    }

    pub fn to_file(&self) -> MatrixFile {
        let n = self.n();
        let mut entries = Vec::with_capacity(n * n);
        for k in 0..n {
            for l in 0..n {
                let z = self.data[(k, l)];
                entries.push([z.re, z.im]);
            }
        }
        MatrixFile {
            n,
            entries_row_major: entries,
        }
    }
}

/// Unit-modulus complex vector stored as phases in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseVector {
    phases: Vec<f64>,
}

impl PhaseVector {
    pub fn new(phases: Vec<f64>) -> Self {
        Self {
            phases: phases.into_iter().map(wrap_phase).collect(),
        }
    }

    /// The all-ones vector `𝟏`.
    pub fn ones(n: usize) -> Self {
        Self {
            phases: vec![0.0; n],
        }
    }

    /// Phases of the entries of `v`; zero entries get phase 0.
    pub fn from_complex(v: &[Complex64]) -> Self {
        Self::new(v.iter().map(|z| z.arg()).collect())
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn entry(&self, k: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.phases[k])
    }

    pub fn to_complex(&self) -> CVector {
        CVector::from_iterator(self.len(), self.phases.iter().map(|&p| Complex64::from_polar(1.0, p)))
    }

    pub fn conj(&self) -> PhaseVector {
        Self::new(self.phases.iter().map(|p| -p).collect())
    }

    /// Element-wise product `self ∘ other`.
    pub fn hadamard(&self, other: &PhaseVector) -> PhaseVector {
        assert_eq!(self.len(), other.len());
        Self::new(self.phases.iter().zip(&other.phases).map(|(a, b)| a + b).collect())
    }

    /// Multiplies every entry by `e^{jθ}`.
    pub fn rotate(&self, theta: f64) -> PhaseVector {
        Self::new(self.phases.iter().map(|p| p + theta).collect())
    }

    /// Largest wrapped phase difference `max_k |φ_k − ψ_k|` in `[0, π]`.
    pub fn max_phase_distance(&self, other: &PhaseVector) -> f64 {
        self.phases
            .iter()
            .zip(&other.phases)
            .map(|(a, b)| wrap_to_pi(a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Phase distance after removing the best global rotation
    /// (least-squares alignment `arg Σ other_k conj(self_k)`).
    pub fn aligned_distance(&self, other: &PhaseVector) -> f64 {
        let a = self.to_complex();
        let b = other.to_complex();
        let theta = a.dotc(&b).arg();
        self.rotate(theta).max_phase_distance(other)
    }

    /// `‖self − other‖₂²` of the implied complex vectors.
    pub fn squared_gap(&self, other: &PhaseVector) -> f64 {
        (self.to_complex() - other.to_complex()).norm_squared()
    }
}

#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, matching `eigenvalues`.
    pub eigenvectors: CMatrix,
}

impl EigenSystem {
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.eigenvalues.len();
        let sigma = CMatrix::from_diagonal(&CVector::from_iterator(
            n,
            self.eigenvalues.iter().map(|&x| Complex64::new(x, 0.0)),
        ));
        &self.eigenvectors * sigma * self.eigenvectors.adjoint()
    }
}

pub fn hermitian_eig(h: &HermitianMatrix) -> EigenSystem {
    let n = h.n();
    let eig = SymmetricEigen::new(h.as_matrix().clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    EigenSystem {
        eigenvalues,
        eigenvectors,
    }
}

/// UQP objective `s^H R s` (real for Hermitian `R`).
pub fn quadratic_form(r: &HermitianMatrix, s: &PhaseVector) -> Result<f64> {
    if r.n() != s.len() {
        return Err(UqpError::DimensionMismatch {
            expected: r.n(),
            found: s.len(),
        });
    }
    Ok(r.form(&s.to_complex()))
}

pub fn hadamard(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    check_shape(a, b)?;
    Ok(a.component_mul(b))
}

/// `R + λI`; shifts every UQP objective by `λn` and leaves the argmax alone.
pub fn diagonal_load(r: &HermitianMatrix, lambda: f64) -> HermitianMatrix {
    let n = r.n();
    let mut data = r.as_matrix().clone();
    for k in 0..n {
        data[(k, k)].re += lambda;
    }
    HermitianMatrix { data }
}

pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    check_shape(a, b)?;
    Ok((a - b).norm())
}

fn check_shape(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(UqpError::DimensionMismatch {
            expected: a.nrows() * a.ncols(),
            found: b.nrows() * b.ncols(),
        });
    }
    Ok(())
}

/// On-disk matrix document: `{"n": .., "entries_row_major": [[re, im], ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: usize,
    pub entries_row_major: Vec<[f64; 2]>,
}

impl MatrixFile {
    pub fn to_matrix(&self) -> Result<HermitianMatrix> {
        let n = self.n;
        if n == 0 {
            return Err(UqpError::MalformedFile("n must be positive".into()));
        }
        if self.entries_row_major.len() != n * n {
            return Err(UqpError::MalformedFile(format!(
                "expected {} entries for n = {}, found {}",
                n * n,
                n,
                self.entries_row_major.len()
            )));
        }
        if self.entries_row_major.iter().flatten().any(|x| !x.is_finite()) {
            return Err(UqpError::MalformedFile("non-finite entry".into()));
        }
        let m = CMatrix::from_fn(n, n, |k, l| {
            let [re, im] = self.entries_row_major[k * n + l];
            Complex64::new(re, im)
        });
        HermitianMatrix::new(m)
    }
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<HermitianMatrix> {
    let text = fs::read_to_string(path)?;
    let file: MatrixFile =
        serde_json::from_str(&text).map_err(|e| UqpError::MalformedFile(e.to_string()))?;
    file.to_matrix()
}

pub fn write_matrix(path: impl AsRef<Path>, m: &HermitianMatrix) -> Result<()> {
    let text = serde_json::to_string_pretty(&m.to_file())?;
    fs::write(path, text + "\n")?;
    Ok(())
}
