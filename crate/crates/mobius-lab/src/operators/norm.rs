//! Certified lower bounds for operator norms, and exact norms of powers of
//! weighted shifts.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::TruncatedOperator;
use crate::error::{domain, Result};
use crate::kernels::{CoefficientSequence, DiagonalKernel};

/// Seed of the deterministic start vector.
pub const NORM_SEED: u64 = 0x5EED;
pub const NORM_TOL: f64 = 1e-10;
pub const NORM_MAX_ITER: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self { tol: NORM_TOL, max_iter: NORM_MAX_ITER, seed: NORM_SEED }
    }
}

/// ‖T v‖ for the final unit iterate v: a lower bound for the norm of the
/// finite matrix and hence of the operator it compresses. `converged` is false
/// when the relative change never fell below the tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub rel_change: f64,
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Start vector whose first k entries do not depend on the length, so that
/// nested truncations start from nested vectors.
fn start_vector(len: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

pub fn operator_norm_lower(t: &TruncatedOperator, tol: f64) -> NormEstimate {
    operator_norm_lower_with(t, &NormOptions { tol, ..NormOptions::default() })
}

/// Power iteration on T*T.
pub fn operator_norm_lower_with(t: &TruncatedOperator, opts: &NormOptions) -> NormEstimate {
    let n = t.n_dom();
    if n == 0 || t.n_cod() == 0 {
        return NormEstimate { value: 0.0, iterations: 0, converged: true, rel_change: 0.0 };
    }
    let mut v = start_vector(n, opts.seed);
    let s = norm2(&v);
    v.iter_mut().for_each(|x| *x /= s);
    let mut sigma = 0.0;
    let mut rel = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let y = t.apply(&v);
        let next = norm2(&y);
        rel = if next > 0.0 { (next - sigma).abs() / next } else { 0.0 };
        sigma = next;
        if next == 0.0 {
            converged = true;
            break;
        }
        let w = t.apply_adjoint(&y);
        let wn = norm2(&w);
        if wn == 0.0 {
            converged = true;
            break;
        }
        v = w.into_iter().map(|x| x / wn).collect();
        if rel <= opts.tol && iterations > 1 {
            converged = true;
            break;
        }
    }
    // Recompute with the stored matrix so the reported value is exactly the
    // Rayleigh bound of the dense compression, independent of FFT rounding.
    let value = norm2(&t.apply_dense(&v)).max(0.0);
    NormEstimate { value, iterations, converged, rel_change: rel }
}

/// Whether the ratio sequence b_j/b_{n+j} moves up, down, or both over j.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Constant,
    Increasing,
    Decreasing,
    Mixed,
}

/// ‖M_zⁿ‖² = sup_j ‖z^{n+j}‖²/‖z^j‖² = sup_j b_j/b_{n+j} over 0 ≤ j ≤ J_max.
/// An increasing ratio sequence means the supremum escapes the window and
/// the reported value is only a lower bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerNormReport {
    pub norm: f64,
    pub norm_sq: f64,
    pub argmax_j: usize,
    pub monotonicity: Monotonicity,
}

pub fn power_norm(k: &DiagonalKernel, n: usize, j_max: usize) -> Result<PowerNormReport> {
    if n == 0 {
        return Err(domain("power_norm needs n ≥ 1"));
    }
    let b = k.coefficients(n + j_max + 1);
    let mut best = f64::NEG_INFINITY;
    let mut argmax = 0;
    let (mut up, mut down) = (false, false);
    let mut prev: Option<f64> = None;
    for j in 0..=j_max {
        let r = b[j] / b[n + j];
        if r > best {
            best = r;
            argmax = j;
        }
        if let Some(p) = prev {
            let scale = p.abs().max(r.abs());
            if r > p + 1e-15 * scale {
                up = true;
            } else if r < p - 1e-15 * scale {
                down = true;
            }
        }
        prev = Some(r);
    }
    let monotonicity = match (up, down) {
        (false, false) => Monotonicity::Constant,
        (true, false) => Monotonicity::Increasing,
        (false, true) => Monotonicity::Decreasing,
        (true, true) => Monotonicity::Mixed,
    };
    Ok(PowerNormReport { norm: best.sqrt(), norm_sq: best, argmax_j: argmax, monotonicity })
}
