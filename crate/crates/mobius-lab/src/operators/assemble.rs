//! Assembly of the concrete operators: shifts, multiplications, compositions,
//! the Möbius functional calculus, differentiation, Rosenblum-type
//! intertwiners and the block operators of the FB₂ class.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Band, ToeplitzApply, TruncatedOperator};
use crate::error::{domain, Result};
use crate::kernels::{CoefficientSequence, DiagonalKernel};
use crate::mobius::MobiusMap;
use crate::par;
use crate::series::{cauchy_product, PowerSeries};

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn sqrt_coefficients(k: &DiagonalKernel, len: usize) -> Vec<f64> {
    k.coefficients(len).iter().map(|b| b.sqrt()).collect()
}

/// Rescale a matrix of monomial coefficients (column n = image of zⁿ) into
/// the orthonormal bases: entry (m, n) times √(b_n^dom / b_m^cod).
fn orthonormalize(raw: DMatrix<Complex64>, k_dom: &DiagonalKernel, k_cod: &DiagonalKernel) -> DMatrix<Complex64> {
    let (rows, cols) = raw.shape();
    let sd = sqrt_coefficients(k_dom, cols);
    let sc = sqrt_coefficients(k_cod, rows);
    let mut m = raw;
    for n in 0..cols {
        for r in 0..rows {
            m[(r, n)] *= sd[n] / sc[r];
        }
    }
    m
}

fn from_columns(rows: usize, cols: Vec<Vec<Complex64>>) -> DMatrix<Complex64> {
    let n = cols.len();
    DMatrix::from_fn(rows, n, |r, c| cols[c][r])
}

/// Multiply a coefficient vector by φ = u(z − a)/(1 − āz), truncated to its
/// length: t_m = ā t_{m−1} + u(s_{m−1} − a s_m).
fn mul_by_mobius(s: &[Complex64], phi: &MobiusMap) -> Vec<Complex64> {
    let u = phi.rotation_factor();
    let a = phi.a();
    let abar = a.conj();
    let mut t = Vec::with_capacity(s.len());
    let mut prev_t = zero();
    let mut prev_s = zero();
    for &sm in s {
        let tm = abar * prev_t + u * (prev_s - a * sm);
        t.push(tm);
        prev_t = tm;
        prev_s = sm;
    }
    t
}

/// Monomial-coefficient columns of C_φ: column k holds φᵏ to `order` terms.
pub fn composition_columns(phi: &MobiusMap, count: usize, order: usize) -> Vec<Vec<Complex64>> {
    let mut cols = Vec::with_capacity(count);
    let mut cur = vec![zero(); order];
    if order > 0 {
        cur[0] = Complex64::new(1.0, 0.0);
    }
    for _ in 0..count {
        let next = mul_by_mobius(&cur, phi);
        cols.push(std::mem::replace(&mut cur, next));
    }
    cols
}

fn check_order(n: usize, min: usize, what: &str) -> Result<()> {
    if n < min {
        return Err(domain(format!("{what} needs truncation order at least {min}, got {n}")));
    }
    Ok(())
}

/// Shift weights w_n = √(b_n/b_{n+1}), n = 0…len−1.
pub fn shift_weights(k: &DiagonalKernel, len: usize) -> Vec<f64> {
    let b = k.coefficients(len + 1);
    (0..len).map(|n| (b[n] / b[n + 1]).sqrt()).collect()
}

/// M_z as the weighted shift with subdiagonal w_n.
pub fn shift_matrix(k: &DiagonalKernel, n: usize) -> Result<TruncatedOperator> {
    check_order(n, 2, "shift_matrix")?;
    let w = shift_weights(k, n - 1);
    let mut m = DMatrix::zeros(n, n);
    for (j, wj) in w.iter().enumerate() {
        m[(j + 1, j)] = Complex64::new(*wj, 0.0);
    }
    Ok(TruncatedOperator::new(m, k.clone(), k.clone(), n - 1, Band { lower: Some(1), upper: Some(0) }))
}

/// M_ψ: entry (m, n) = ψ_{m−n} √(b_n^dom/b_m^cod) for m ≥ n.
pub fn multiplication_matrix(
    k_dom: &DiagonalKernel,
    k_cod: &DiagonalKernel,
    psi: &PowerSeries<Complex64>,
    n: usize,
) -> Result<TruncatedOperator> {
    check_order(n, 1, "multiplication_matrix")?;
    if psi.order() < n {
        return Err(domain(format!("symbol has {} coefficients but N = {n}", psi.order())));
    }
    let c = &psi.coeffs()[..n];
    let sd = sqrt_coefficients(k_dom, n);
    let sc = sqrt_coefficients(k_cod, n);
    let m = DMatrix::from_fn(n, n, |r, col| if r >= col { c[r - col] * (sd[col] / sc[r]) } else { zero() });
    let lower = c.iter().rposition(|v| *v != zero()).unwrap_or(0);
    let fast = ToeplitzApply::new(c, sc.iter().map(|s| 1.0 / s).collect(), sd);
    Ok(TruncatedOperator::new(m, k_dom.clone(), k_cod.clone(), n, Band { lower: Some(lower), upper: Some(0) }).with_fast_path(fast))
}

/// C_φ: column n holds the coefficients of φⁿ, rescaled.
pub fn composition_matrix(k_dom: &DiagonalKernel, k_cod: &DiagonalKernel, phi: &MobiusMap, n: usize) -> Result<TruncatedOperator> {
    check_order(n, 1, "composition_matrix")?;
    let raw = from_columns(n, composition_columns(phi, n, n));
    let band = if phi.a() == zero() { Band { lower: Some(0), upper: Some(0) } } else { Band::FULL };
    Ok(TruncatedOperator::new(orthonormalize(raw, k_dom, k_cod), k_dom.clone(), k_cod.clone(), n, band))
}

/// M_ψ C_φ : f ↦ ψ·(f∘φ).
pub fn weighted_composition(
    k_dom: &DiagonalKernel,
    k_cod: &DiagonalKernel,
    psi: &PowerSeries<Complex64>,
    phi: &MobiusMap,
    n: usize,
) -> Result<TruncatedOperator> {
    let m = multiplication_matrix(k_cod, k_cod, psi, n)?;
    let c = composition_matrix(k_dom, k_cod, phi, n)?;
    m.compose(&c)
}

/// φ(M_z) = M_φ, the functional calculus of the shift.
pub fn functional_calculus_mz(k: &DiagonalKernel, phi: &MobiusMap, n: usize) -> Result<TruncatedOperator> {
    multiplication_matrix(k, k, &phi.taylor_coefficients(n)?, n)
}

/// Entries d_n = n√(b_n^(λ)/b_{n−1}^(μ)) of D: zⁿ ↦ n z^{n−1} from H^(λ) to
/// H^(μ), for n = 1…len (index 0 holds d_1).
pub fn differential_weights(lambda: f64, mu: f64, len: usize) -> Result<Vec<f64>> {
    let kl = DiagonalKernel::power(lambda)?;
    let km = DiagonalKernel::power(mu)?;
    let bl = kl.coefficients(len + 1);
    let bm = km.coefficients(len + 1);
    Ok((1..=len).map(|n| n as f64 * (bl[n] / bm[n - 1]).sqrt()).collect())
}

/// D: H^(λ) → H^(μ) with entries (n−1, n) = d_n.
pub fn differential_matrix(lambda: f64, mu: f64, n: usize) -> Result<TruncatedOperator> {
    check_order(n, 2, "differential_matrix")?;
    let d = differential_weights(lambda, mu, n - 1)?;
    let mut m = DMatrix::zeros(n, n);
    for (k, dk) in d.iter().enumerate() {
        m[(k, k + 1)] = Complex64::new(*dk, 0.0);
    }
    Ok(TruncatedOperator::new(m, DiagonalKernel::power(lambda)?, DiagonalKernel::power(mu)?, n, Band { lower: Some(0), upper: Some(1) }))
}

/// X f = ψ·(φ⁻¹)′·(f′∘φ⁻¹) + χ·(f∘φ⁻¹) from H(K₁) to H(K₂). Column n of the
/// monomial-coefficient matrix is ψ(φ⁻¹)′·n(φ⁻¹)^{n−1} + χ(φ⁻¹)ⁿ; every
/// stored entry is an exact coefficient of the infinite operator.
pub fn rosenblum_x(
    psi: &PowerSeries<Complex64>,
    chi: &PowerSeries<Complex64>,
    phi: &MobiusMap,
    k1: &DiagonalKernel,
    k2: &DiagonalKernel,
    n: usize,
) -> Result<TruncatedOperator> {
    check_order(n, 2, "rosenblum_x")?;
    if psi.order() < n || chi.order() < n {
        return Err(domain(format!("symbols must carry at least N = {n} coefficients")));
    }
    let inv = phi.inverse();
    let inv_prime = inv.taylor_coefficients(n + 1)?.derivative();
    let weight = cauchy_product(&psi.truncate(n), &inv_prime);
    let chi = chi.truncate(n);
    let powers = composition_columns(&inv, n, n);
    let cols = par::map_range(n, |j| {
        let mut col = vec![zero(); n];
        if j >= 1 {
            let d = PowerSeries::new(powers[j - 1].iter().map(|v| v * j as f64).collect()).expect("nonempty");
            for (c, v) in col.iter_mut().zip(cauchy_product(&weight, &d).coeffs()) {
                *c += v;
            }
        }
        let p = PowerSeries::new(powers[j].clone()).expect("nonempty");
        for (c, v) in col.iter_mut().zip(cauchy_product(&chi, &p).coeffs()) {
            *c += v;
        }
        col
    });
    Ok(TruncatedOperator::new(orthonormalize(from_columns(n, cols), k1, k2), k1.clone(), k2.clone(), n, Band::FULL))
}

/// Upper-triangular operator [[T₀, S], [0, T₁]] on H^(λ₀) ⊕ H^(λ₁) with
/// T_i = M_z* and coupling S = M_ψ*, where M_ψ: H^(λ₀) → H^(λ₁).
/// Quasi-homogeneous couplings S = m₀,₁·(inclusion)* use ψ ≡ conj(m₀,₁).
#[derive(Clone, Debug, PartialEq)]
pub struct Fb2Block {
    pub lambda0: f64,
    pub lambda1: f64,
    pub coupling: PowerSeries<Complex64>,
}

impl Fb2Block {
    pub fn new(lambda0: f64, lambda1: f64, coupling: PowerSeries<Complex64>) -> Result<Self> {
        if !(lambda0 > 0.0 && lambda1 > 0.0 && lambda0.is_finite() && lambda1.is_finite()) {
            return Err(domain("FB₂ weights must be positive"));
        }
        if lambda0 > lambda1 {
            return Err(domain(format!("FB₂ needs λ₀ ≤ λ₁, got {lambda0} > {lambda1}")));
        }
        if coupling.coeffs().iter().all(|c| *c == zero()) {
            return Err(domain("FB₂ coupling must be nonzero"));
        }
        Ok(Self { lambda0, lambda1, coupling })
    }

    /// Quasi-homogeneous rank-two block with scalar coupling m₀,₁.
    pub fn quasi_homogeneous(lambda0: f64, lambda1: f64, m01: Complex64) -> Result<Self> {
        Self::new(lambda0, lambda1, PowerSeries::new(vec![m01.conj()])?)
    }

    /// Λ = λ₁ − λ₀.
    pub fn lambda_gap(&self) -> f64 {
        self.lambda1 - self.lambda0
    }
}

/// The four blocks of a truncated FB₂ operator.
#[derive(Clone, Debug)]
pub struct Fb2Blocks {
    pub top_left: TruncatedOperator,
    pub top_right: TruncatedOperator,
    pub bottom_left: TruncatedOperator,
    pub bottom_right: TruncatedOperator,
}

impl Fb2Blocks {
    /// The 2N×2N matrix on H^(λ₀) ⊕ H^(λ₁).
    pub fn assemble(&self) -> DMatrix<Complex64> {
        let (r0, c0) = self.top_left.matrix().shape();
        let (r1, c1) = self.bottom_right.matrix().shape();
        let mut m = DMatrix::zeros(r0 + r1, c0 + c1);
        m.view_mut((0, 0), (r0, c0)).copy_from(self.top_left.matrix());
        m.view_mut((0, c0), (r0, c1)).copy_from(self.top_right.matrix());
        m.view_mut((r0, 0), (r1, c0)).copy_from(self.bottom_left.matrix());
        m.view_mut((r0, c0), (r1, c1)).copy_from(self.bottom_right.matrix());
        m
    }
}

/// φ(T) = [[φ(T₀), φ′(T₀)S], [0, φ(T₁)]]. With φ̂(z) = conj φ(z̄) one has
/// φ(M_z*) = (M_φ̂)* and φ′(T₀)S = (M_{ψφ̂′})*, so each block is the adjoint of
/// a multiplication matrix; the span of the first N monomials is invariant
/// under every block, so the truncation is exact.
pub fn fb2_phi_of_t(blk: &Fb2Block, phi: &MobiusMap, n: usize) -> Result<Fb2Blocks> {
    check_order(n, 2, "fb2_phi_of_t")?;
    let k0 = DiagonalKernel::power(blk.lambda0)?;
    let k1 = DiagonalKernel::power(blk.lambda1)?;
    let hat = phi.reflected();
    let hat_series = hat.taylor_coefficients(n + 1)?;
    let hat_prime = hat_series.derivative();
    let coupling = cauchy_product(&blk.coupling.padded(n), &hat_prime);
    let top_left = multiplication_matrix(&k0, &k0, &hat_series.truncate(n), n)?.adjoint();
    let bottom_right = multiplication_matrix(&k1, &k1, &hat_series.truncate(n), n)?.adjoint();
    let top_right = multiplication_matrix(&k0, &k1, &coupling, n)?.adjoint();
    let bottom_left = TruncatedOperator::new(DMatrix::zeros(n, n), k0, k1, n, Band { lower: Some(0), upper: Some(0) });
    Ok(Fb2Blocks { top_left, top_right, bottom_left, bottom_right })
}
