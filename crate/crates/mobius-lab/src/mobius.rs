//! The Möbius group φ_{θ,a}(z) = e^{iθ}(z − a)/(1 − āz) and the jet weight
//! matrices built from derivatives of holomorphic symbols.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::scalar::{binomial, factorial, Scalar};
use crate::series::{BellTable, PowerSeries};

/// A disc automorphism stored by its parameters (θ, a), θ ∈ [0, 2π), |a| < 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MobiusMap {
    theta: f64,
    a: Complex64,
}

impl MobiusMap {
    pub fn new(theta: f64, a: Complex64) -> Result<Self> {
        if !theta.is_finite() || !a.re.is_finite() || !a.im.is_finite() {
            return Err(domain("Möbius parameters must be finite"));
        }
        if !(a.norm() < 1.0) {
            return Err(domain(format!("Möbius zero a = {a} must satisfy |a| < 1")));
        }
        let mut theta = theta.rem_euclid(TAU);
        if theta >= TAU {
            theta = 0.0;
        }
        Ok(Self { theta, a })
    }

    pub fn identity() -> Self {
        Self { theta: 0.0, a: Complex64::new(0.0, 0.0) }
    }

    pub fn rotation(theta: f64) -> Result<Self> {
        Self::new(theta, Complex64::new(0.0, 0.0))
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    /// e^{iθ}.
    pub fn rotation_factor(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.theta)
    }

    pub fn params(&self) -> MobiusParams<Complex64> {
        MobiusParams { rotation: self.rotation_factor(), a: self.a }
    }

    pub fn apply(&self, z: Complex64) -> Result<Complex64> {
        self.params().apply(&z)
    }

    /// φ⁻¹ = φ_{−θ, −a e^{iθ}}.
    pub fn inverse(&self) -> Self {
        Self::new(-self.theta, -self.a * self.rotation_factor()).expect("inverse parameters are valid")
    }

    /// φ̂(z) = conj φ(z̄) = φ_{−θ, ā}, the map whose multiplication operator
    /// has adjoint φ(M_z*).
    pub fn reflected(&self) -> Self {
        Self::new(-self.theta, self.a.conj()).expect("reflected parameters are valid")
    }

    /// Parameters of self ∘ other: the zero is other⁻¹(a_self), and the
    /// rotation is fixed by the derivative at that zero.
    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        let z0 = other.inverse().apply(self.a).expect("zero of a composition lies in the disc");
        let d =
            self.derivative(self.a).expect("a is never a pole") * other.derivative(z0).expect("z0 is never a pole") * (1.0 - z0.norm_sqr());
        MobiusMap::new(d.arg(), z0).expect("composition parameters are valid")
    }

    /// φ′(w) = e^{iθ}(1−|a|²)/(1−āw)².
    pub fn derivative(&self, w: Complex64) -> Result<Complex64> {
        Ok(self.params().derivatives(&w, 1)?[0])
    }

    /// φ^{(m)}(w) for m = 1…n.
    pub fn derivatives(&self, w: Complex64, n: usize) -> Result<Vec<Complex64>> {
        self.params().derivatives(&w, n)
    }

    pub fn taylor_coefficients(&self, order: usize) -> Result<PowerSeries<Complex64>> {
        self.params().taylor_coefficients(order)
    }

    pub fn is_identity(&self) -> bool {
        self.theta == 0.0 && self.a == Complex64::new(0.0, 0.0)
    }

    /// Pointwise equality on a fixed sample set (absorbs angle wrap-around).
    pub fn approx_eq(&self, other: &MobiusMap, tol: f64) -> bool {
        sample_points().iter().all(|z| match (self.apply(*z), other.apply(*z)) {
            (Ok(u), Ok(v)) => (u - v).norm() <= tol,
            _ => false,
        })
    }
}

fn sample_points() -> Vec<Complex64> {
    (0..16).map(|k| Complex64::from_polar(0.15 + 0.05 * k as f64, 0.7 * k as f64)).collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MobiusJson {
    theta: f64,
    a_re: f64,
    a_im: f64,
}

impl Serialize for MobiusMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MobiusJson { theta: self.theta, a_re: self.a.re, a_im: self.a.im }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MobiusMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MobiusJson::deserialize(d)?;
        MobiusMap::new(j.theta, Complex64::new(j.a_re, j.a_im)).map_err(serde::de::Error::custom)
    }
}

/// A Möbius map over any backend: z ↦ u(z − a)/(1 − āz) with |u| = 1. In the
/// exact backend `u` is a unit Gaussian rational such as (3+4i)/5.
#[derive(Clone, Debug, PartialEq)]
pub struct MobiusParams<T> {
    pub rotation: T,
    pub a: T,
}

impl<T: Scalar> MobiusParams<T> {
    pub fn new(rotation: T, a: T) -> Result<Self> {
        let unit = (rotation.clone() * rotation.conj() - T::one()).abs_f64();
        let unit_ok = if T::EXACT { unit == 0.0 } else { unit < 1e-12 };
        if !unit_ok {
            return Err(domain("Möbius rotation must have modulus one"));
        }
        if !(a.abs_f64() < 1.0) {
            return Err(domain("Möbius zero must lie in the open disc"));
        }
        Ok(Self { rotation, a })
    }

    fn denominator(&self, z: &T) -> Result<T> {
        let d = T::one() - self.a.conj() * z.clone();
        if d.is_zero() {
            return Err(domain("evaluation at the pole 1/ā"));
        }
        Ok(d)
    }

    pub fn apply(&self, z: &T) -> Result<T> {
        let d = self.denominator(z)?;
        Ok(self.rotation.clone() * (z.clone() - self.a.clone()) / d)
    }

    /// φ^{(m)}(w) = u(1−|a|²)·m!·ā^{m−1}/(1−āw)^{m+1}, m = 1…n, produced
    /// symbolically from the rational closed form.
    pub fn derivatives(&self, w: &T, n: usize) -> Result<Vec<T>> {
        let d = self.denominator(w)?;
        let abar = self.a.conj();
        let base = self.rotation.clone() * (T::one() - self.a.clone() * abar.clone());
        let mut out = Vec::with_capacity(n);
        let mut abar_pow = T::one();
        let mut d_pow = d.clone() * d.clone();
        for m in 1..=n {
            out.push(base.clone() * factorial::<T>(m) * abar_pow.clone() / d_pow.clone());
            abar_pow = abar_pow * abar.clone();
            d_pow = d_pow * d.clone();
        }
        Ok(out)
    }

    /// α₀ = −ua, α_n = u(1−|a|²)ā^{n−1}.
    pub fn taylor_coefficients(&self, order: usize) -> Result<PowerSeries<T>> {
        if order == 0 {
            return Err(domain("Taylor order must be at least 1"));
        }
        let abar = self.a.conj();
        let base = self.rotation.clone() * (T::one() - self.a.clone() * abar.clone());
        let mut coeffs = Vec::with_capacity(order);
        coeffs.push(-(self.rotation.clone() * self.a.clone()));
        let mut p = base;
        for _ in 1..order {
            coeffs.push(p.clone());
            p = p * abar.clone();
        }
        PowerSeries::new(coeffs)
    }

    /// Coefficients of t ↦ φ(z + t), obtained by expanding
    /// u((z−a) + t)/((1−āz) − āt) as a geometric series in t.
    pub fn expansion_at(&self, z: &T, order: usize) -> Result<PowerSeries<T>> {
        let d = self.denominator(z)?;
        let q = self.a.conj() / d.clone();
        let scale = self.rotation.clone() / d;
        let za = z.clone() - self.a.clone();
        let mut coeffs = Vec::with_capacity(order);
        let mut q_prev = T::zero();
        let mut q_k = T::one();
        for _ in 0..order.max(1) {
            coeffs.push(scale.clone() * (za.clone() * q_k.clone() + q_prev.clone()));
            q_prev = q_k.clone();
            q_k = q_k * q.clone();
        }
        PowerSeries::new(coeffs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JetKind {
    WeightJ,
    BellB,
    Symbol,
}

/// (n+1)×(n+1) lower-triangular matrix attached to a jet of order n.
#[derive(Clone, Debug, PartialEq)]
pub struct JetMatrix<T> {
    n: usize,
    kind: JetKind,
    entries: Vec<T>,
}

impl<T: Scalar> JetMatrix<T> {
    fn from_fn(n: usize, kind: JetKind, f: impl Fn(usize, usize) -> T) -> Self {
        let dim = n + 1;
        let entries = (0..dim * dim)
            .map(|k| {
                let (i, j) = (k / dim, k % dim);
                if j > i {
                    T::zero()
                } else {
                    f(i, j)
                }
            })
            .collect();
        Self { n, kind, entries }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> JetKind {
        self.kind
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * (self.n + 1) + j].clone()
    }

    /// Matrix product; the result is tagged as a symbol.
    pub fn mul(&self, other: &JetMatrix<T>) -> Result<JetMatrix<T>> {
        if self.n != other.n {
            return Err(Error::Shape(format!("jet orders differ: {} vs {}", self.n, other.n)));
        }
        Ok(Self::from_fn(self.n, JetKind::Symbol, |i, j| (j..=i).fold(T::zero(), |acc, k| acc + self.get(i, k) * other.get(k, j))))
    }

    pub fn scale(&self, c: &T) -> JetMatrix<T> {
        Self { n: self.n, kind: JetKind::Symbol, entries: self.entries.iter().map(|e| e.clone() * c.clone()).collect() }
    }

    pub fn to_c64(&self) -> nalgebra::DMatrix<Complex64> {
        nalgebra::DMatrix::from_fn(self.n + 1, self.n + 1, |i, j| self.get(i, j).to_c64())
    }
}

/// 𝒥_nψ: entry (i, j) = C(i, i−j)·ψ^{(i−j)}(z) for j ≤ i.
pub fn jet_weight_matrix<T: Scalar>(psi_derivs: &[T], n: usize) -> Result<JetMatrix<T>> {
    if psi_derivs.len() != n + 1 {
        return Err(domain(format!("𝒥_{n} needs {} derivatives, got {}", n + 1, psi_derivs.len())));
    }
    Ok(JetMatrix::from_fn(n, JetKind::WeightJ, |i, j| T::from_i64(binomial(i, i - j)) * psi_derivs[i - j].clone()))
}

/// ℬ_nφ: (0,0) = 1, entry (i, j) = B_{i,j}(φ′, …, φ^{(i−j+1)}) for 1 ≤ j ≤ i,
/// and zero elsewhere in column 0.
pub fn bell_matrix<T: Scalar>(phi_derivs: &[T], n: usize) -> Result<JetMatrix<T>> {
    if phi_derivs.len() != n {
        return Err(domain(format!("ℬ_{n} needs {n} derivatives, got {}", phi_derivs.len())));
    }
    let table = BellTable::new(phi_derivs);
    Ok(JetMatrix::from_fn(n, JetKind::BellB, |i, j| match (i, j) {
        (0, 0) => T::one(),
        (_, 0) => T::zero(),
        _ => table.get(i, j),
    }))
}
