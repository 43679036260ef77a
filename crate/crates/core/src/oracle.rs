//! Exhaustive solver for the m-ary problem `max s^H R s`, `s_k ∈ {e^{j2πq/m}}`.
//!
//! The first phase is pinned to 0 (global phase is irrelevant). The remaining
//! `n − 1` digits are walked in reflected m-ary Gray order so that each
//! candidate differs from the previous one in a single coordinate, which
//! makes the objective update O(n).

use std::cmp::Ordering;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UqpError};
use crate::linalg::{quadratic_form, CVector, HermitianMatrix, PhaseVector};
use crate::local::{local_optimize, LocalConfig};
use crate::par;

/// Largest number of candidates `m^{n−1}` accepted by [`brute_force`].
pub const MAX_CANDIDATES: f64 = 1e8;

/// Number of leading free digits used to split the work between threads.
const PREFIX_DIGITS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub s: PhaseVector,
    /// Grid index of each phase: `φ_k = 2π digits[k]/m`.
    pub digits: Vec<usize>,
    pub m: usize,
    pub value: f64,
    pub evaluations: u64,
}

#[derive(Clone)]
struct Best {
    value: f64,
    digits: Vec<usize>,
}

impl Best {
    /// Higher value wins; values within round-off of each other are ties and
    /// go to the lexicographically smaller digit string.
    fn better_than(&self, other: &Best) -> bool {
        let tol = 1e-12 * (1.0 + self.value.abs().max(other.value.abs()));
        if self.value > other.value + tol {
            true
        } else if self.value < other.value - tol {
            false
        } else {
            self.digits.cmp(&other.digits) == Ordering::Less
        }
    }
}

struct Walker<'a> {
    r: &'a HermitianMatrix,
    roots: Vec<Complex64>,
    digits: Vec<usize>,
    s: CVector,
    rs: CVector,
    value: f64,
}

impl<'a> Walker<'a> {
    fn new(r: &'a HermitianMatrix, roots: Vec<Complex64>, digits: Vec<usize>) -> Self {
        let s = CVector::from_iterator(digits.len(), digits.iter().map(|&d| roots[d]));
        let rs = r.mul_vec(&s);
        let value = s.dotc(&rs).re;
        Walker {
            r,
            roots,
            digits,
            s,
            rs,
            value,
        }
    }

    fn set(&mut self, k: usize, digit: usize) {
        let new = self.roots[digit];
        let delta = new - self.s[k];
        let rkk = self.r.get(k, k).re;
        self.value += 2.0 * (delta.conj() * self.rs[k]).re + delta.norm_sqr() * rkk;
        let col = self.r.as_matrix().column(k);
        for (v, c) in self.rs.iter_mut().zip(col.iter()) {
            *v += c * delta;
        }
        self.s[k] = new;
        self.digits[k] = digit;
    }

    fn snapshot(&self) -> Best {
        Best {
            value: self.value,
            digits: self.digits.clone(),
        }
    }
}

/// Visits every setting of the digits in `free` (reflected Gray order,
/// loopless generation after Knuth's Algorithm H) and keeps the best.
fn walk(walker: &mut Walker<'_>, free: &[usize], m: usize) -> (Best, u64) {
    let mut best = walker.snapshot();
    let mut count = 1u64;
    let k = free.len();
    if k == 0 || m < 2 {
        return (best, count);
    }
    let mut a = vec![0usize; k];
    let mut dir = vec![1isize; k];
    let mut focus: Vec<usize> = (0..=k).collect();
    loop {
        let j = focus[0];
        focus[0] = 0;
        if j == k {
            break;
        }
        a[j] = (a[j] as isize + dir[j]) as usize;
        walker.set(free[j], a[j]);
        count += 1;
        let cand = walker.snapshot();
        if cand.better_than(&best) {
            best = cand;
        }
        if a[j] == 0 || a[j] == m - 1 {
            dir[j] = -dir[j];
            focus[j] = focus[j + 1];
            focus[j + 1] = j + 1;
        }
    }
    (best, count)
}

/// Exact optimum over the m-ary grid with `s₁ = 1`.
pub fn brute_force(r: &HermitianMatrix, m: usize) -> Result<OracleResult> {
    if m == 0 {
        return Err(UqpError::InvalidParameter("m must be at least 1".into()));
    }
    let n = r.n();
    let candidates = (m as f64).powi(n as i32 - 1);
    if candidates > MAX_CANDIDATES {
        return Err(UqpError::TooLarge {
            candidates,
            limit: MAX_CANDIDATES,
        });
    }
    let roots: Vec<Complex64> = (0..m)
        .map(|q| Complex64::from_polar(1.0, TAU * q as f64 / m as f64))
        .collect();

    let prefix_len = PREFIX_DIGITS.min(n - 1);
    let prefixes = m.pow(prefix_len as u32);
    let free: Vec<usize> = (1 + prefix_len..n).collect();
    let partials = par::map_range(0..prefixes, |p| {
        let mut digits = vec![0usize; n];
        let mut rest = p;
        for k in (1..=prefix_len).rev() {
            digits[k] = rest % m;
            rest /= m;
        }
        let mut walker = Walker::new(r, roots.clone(), digits);
        walk(&mut walker, &free, m)
    });

    let mut evaluations = 0u64;
    let mut best: Option<Best> = None;
    for (cand, count) in partials {
        evaluations += count;
        best = match best {
            Some(b) if !cand.better_than(&b) => Some(b),
            _ => Some(cand),
        };
    }
    let best = best.expect("at least one prefix");
    let s = PhaseVector::new(best.digits.iter().map(|&d| TAU * d as f64 / m as f64).collect());
    let value = quadratic_form(r, &s)?;
    Ok(OracleResult {
        s,
        digits: best.digits,
        m,
        value,
        evaluations,
    })
}

/// Continuous polish of the grid optimum by the power-method iteration;
/// never returns less than the grid value.
pub fn refine(r: &HermitianMatrix, result: &OracleResult, cfg: &LocalConfig) -> Result<(PhaseVector, f64)> {
    let (s, _) = local_optimize(r, &result.s, cfg)?;
    let value = quadratic_form(r, &s)?;
    if value >= result.value {
        Ok((s, value))
    } else {
        Ok((result.s.clone(), result.value))
    }
}
