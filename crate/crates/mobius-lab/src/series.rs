//! Truncated power series, Pochhammer symbols, Bell polynomials and the
//! Faà di Bruno formula, generic over the arithmetic backend.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};
use crate::scalar::{binomial, falling_factorial_exact, Scalar};

/// Running products above this size are recomputed through log-Gamma.
const POCHHAMMER_LOG_SWITCH: f64 = 1e300;

/// A Taylor coefficient sequence truncated to `order` stored terms. Every
/// operation reads only stored coefficients; results carry the order to which
/// they are exact.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSeries<T = Complex64> {
    coeffs: Vec<T>,
}

impl<T: Scalar> PowerSeries<T> {
    pub fn new(coeffs: Vec<T>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(domain("power series needs at least one coefficient"));
        }
        Ok(Self { coeffs })
    }

    pub fn from_fn(order: usize, f: impl FnMut(usize) -> T) -> Result<Self> {
        Self::new((0..order).map(f).collect())
    }

    pub fn zeros(order: usize) -> Result<Self> {
        Self::from_fn(order, |_| T::zero())
    }

    /// The constant series `c` (c, 0, 0, …).
    pub fn constant(c: T, order: usize) -> Result<Self> {
        let mut s = Self::zeros(order)?;
        s.coeffs[0] = c;
        Ok(s)
    }

    /// δ₀ = (1, 0, 0, …), the multiplicative identity.
    pub fn delta(order: usize) -> Result<Self> {
        Self::constant(T::one(), order)
    }

    /// The monomial z^k stored to `order` terms (zero if k ≥ order).
    pub fn monomial(k: usize, order: usize) -> Result<Self> {
        let mut s = Self::zeros(order)?;
        if k < order {
            s.coeffs[k] = T::one();
        }
        Ok(s)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn get(&self, n: usize) -> Option<&T> {
        self.coeffs.get(n)
    }

    /// Keep the first `order` coefficients (no-op if already shorter).
    pub fn truncate(&self, order: usize) -> Self {
        let k = order.max(1).min(self.order());
        Self { coeffs: self.coeffs[..k].to_vec() }
    }

    /// Pad with zeros up to `order`. Only meaningful for polynomials, whose
    /// omitted coefficients really are zero.
    pub fn padded(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order.max(coeffs.len()), T::zero());
        Self { coeffs }
    }

    pub fn scale(&self, c: &T) -> Self {
        Self { coeffs: self.coeffs.iter().map(|x| x.clone() * c.clone()).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        Self { coeffs: (0..k).map(|n| self.coeffs[n].clone() + other.coeffs[n].clone()).collect() }
    }

    /// Horner evaluation of the stored polynomial part.
    pub fn eval(&self, z: &T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, c| acc * z.clone() + c.clone())
    }

    /// Derivatives s^{(i)}(z), i = 0…n, of the stored polynomial part.
    pub fn derivative_values(&self, z: &T, n: usize) -> Vec<T> {
        (0..=n)
            .map(|i| {
                (i..self.order())
                    .rev()
                    .fold(T::zero(), |acc, k| acc * z.clone() + self.coeffs[k].clone() * falling_factorial_exact::<T>(k, i))
            })
            .collect()
    }

    /// Formal derivative; the result has one fewer stored term (min 1).
    pub fn derivative(&self) -> Self {
        if self.order() == 1 {
            return Self { coeffs: vec![T::zero()] };
        }
        Self { coeffs: (1..self.order()).map(|k| self.coeffs[k].clone() * T::from_i64(k as i64)).collect() }
    }
}

impl PowerSeries<Complex64> {
    /// Lift an exact series to double precision.
    pub fn from_exact<T: Scalar>(s: &PowerSeries<T>) -> Self {
        Self { coeffs: s.coeffs.iter().map(Scalar::to_c64).collect() }
    }
}

/// Cauchy product c_n = Σ_{j≤n} s_j t_{n−j}, exact up to the shorter order.
pub fn cauchy_product<T: Scalar>(s: &PowerSeries<T>, t: &PowerSeries<T>) -> PowerSeries<T> {
    let k = s.order().min(t.order());
    let coeffs = (0..k).map(|n| (0..=n).fold(T::zero(), |acc, j| acc + s.coeffs[j].clone() * t.coeffs[n - j].clone())).collect();
    PowerSeries { coeffs }
}

/// s^k by repeated Cauchy products; k = 0 gives δ₀.
pub fn series_power<T: Scalar>(s: &PowerSeries<T>, k: usize) -> PowerSeries<T> {
    let mut out = PowerSeries { coeffs: vec![T::zero(); s.order()] };
    out.coeffs[0] = T::one();
    for _ in 0..k {
        out = cauchy_product(&out, s);
    }
    out
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(domain(format!("Pochhammer parameter must be positive and finite, got {lambda}")));
    }
    Ok(())
}

/// Rising factorial (λ)_n = λ(λ+1)…(λ+n−1) with (λ)_0 = 1. Once the running
/// product passes 1e300 the value is recomputed as exp(lnΓ(λ+n) − lnΓ(λ)),
/// which may honestly overflow to +∞.
pub fn pochhammer(lambda: f64, n: u64) -> Result<f64> {
    check_lambda(lambda)?;
    let mut acc = 1.0;
    for k in 0..n {
        acc *= lambda + k as f64;
        if acc > POCHHAMMER_LOG_SWITCH {
            return Ok(ln_pochhammer(lambda, n)?.exp());
        }
    }
    Ok(acc)
}

/// ln (λ)_n.
pub fn ln_pochhammer(lambda: f64, n: u64) -> Result<f64> {
    check_lambda(lambda)?;
    if n < 64 {
        return Ok((0..n).map(|k| (lambda + k as f64).ln()).sum());
    }
    Ok(ln_gamma(lambda + n as f64) - ln_gamma(lambda))
}

/// Exact rising factorial; never switches to logarithms.
pub fn pochhammer_exact(lambda: &BigRational, n: u64) -> Result<BigRational> {
    if !lambda.is_positive() {
        return Err(domain(format!("Pochhammer parameter must be positive, got {lambda}")));
    }
    let mut acc = BigRational::one();
    let mut x = lambda.clone();
    for _ in 0..n {
        acc *= &x;
        x += BigRational::one();
    }
    Ok(acc)
}

/// Table of partial exponential Bell polynomials B_{i,j}(x₁,…,x_{i−j+1}) for
/// 0 ≤ j ≤ i ≤ n, filled by B_{i,j} = Σ_k C(i−1,k−1) x_k B_{i−k,j−1}.
#[derive(Clone, Debug)]
pub struct BellTable<T> {
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> BellTable<T> {
    /// `x[k−1]` holds x_k; the table reaches order `x.len()`.
    pub fn new(x: &[T]) -> Self {
        let n = x.len();
        assert!(n <= 62, "Bell table limited to order 62");
        let mut rows: Vec<Vec<T>> = Vec::with_capacity(n + 1);
        rows.push(vec![T::one()]);
        for i in 1..=n {
            let mut row = vec![T::zero(); i + 1];
            for j in 1..=i {
                let mut acc = T::zero();
                for k in 1..=(i - j + 1) {
                    let prev = &rows[i - k];
                    if j - 1 < prev.len() && !prev[j - 1].is_zero() {
                        acc = acc + T::from_i64(binomial(i - 1, k - 1)) * x[k - 1].clone() * prev[j - 1].clone();
                    }
                }
                row[j] = acc;
            }
            rows.push(row);
        }
        Self { rows }
    }

    pub fn order(&self) -> usize {
        self.rows.len() - 1
    }

    /// B_{i,j}; zero when j > i.
    pub fn get(&self, i: usize, j: usize) -> T {
        self.rows[i].get(j).cloned().unwrap_or_else(T::zero)
    }
}

/// B_{i,j}(x₁,…,x_{i−j+1}); exactly i−j+1 arguments are required.
pub fn bell_polynomial<T: Scalar>(i: usize, j: usize, x: &[T]) -> Result<T> {
    if j < 1 || j > i {
        return Err(domain(format!("Bell polynomial needs 1 ≤ j ≤ i, got i={i}, j={j}")));
    }
    if x.len() != i - j + 1 {
        return Err(domain(format!("B_{{{i},{j}}} takes {} arguments, got {}", i - j + 1, x.len())));
    }
    // Variables beyond x_{i−j+1} never enter B_{i,j}; pad with zeros.
    let mut padded = x.to_vec();
    padded.resize(i, T::zero());
    Ok(BellTable::new(&padded).get(i, j))
}

/// (f∘φ)^{(i)}(z) = Σ_{j=1}^{i} f^{(j)}(φ(z)) B_{i,j}(φ′(z),…,φ^{(i−j+1)}(z)).
/// `f_derivs[j]` = f^{(j)}(φ(z)), `phi_derivs[m−1]` = φ^{(m)}(z).
pub fn faa_di_bruno<T: Scalar>(f_derivs: &[T], phi_derivs: &[T], i: usize) -> Result<T> {
    if f_derivs.len() < i + 1 || phi_derivs.len() < i {
        return Err(domain(format!(
            "order {i} needs {} f-derivatives and {i} φ-derivatives, got {} and {}",
            i + 1,
            f_derivs.len(),
            phi_derivs.len()
        )));
    }
    if i == 0 {
        return Ok(f_derivs[0].clone());
    }
    let table = BellTable::new(&phi_derivs[..i]);
    Ok((1..=i).fold(T::zero(), |acc, j| acc + f_derivs[j].clone() * table.get(i, j)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rational, GaussianRational};

    fn q(n: i64, d: i64) -> BigRational {
        rational(n, d)
    }

    #[test]
    fn pochhammer_examples() {
        assert_eq!(pochhammer(3.2, 0).unwrap(), 1.0);
        assert_eq!(pochhammer(2.0, 3).unwrap(), 24.0);
        assert!((pochhammer(0.5, 2).unwrap() - 0.5 * 1.5).abs() < 1e-15);
        assert!(pochhammer(0.0, 2).is_err());
        assert!(pochhammer(f64::NAN, 2).is_err());
        assert!(pochhammer(-1.0, 2).is_err());
    }

    #[test]
    fn pochhammer_switches_to_log_gamma_without_jump() {
        // (1)_n = n!; 170! ≈ 7.26e306 lies beyond the switch.
        let direct: f64 = (1..=170).map(|k| k as f64).product();
        let got = pochhammer(1.0, 170).unwrap();
        assert!(((got - direct) / direct).abs() < 1e-10);
        assert!(pochhammer(1.0, 200).unwrap().is_infinite());
        assert!((ln_pochhammer(1.0, 200).unwrap() - ln_gamma(201.0)).abs() < 1e-9);
    }

    #[test]
    fn exact_pochhammer_matches_float() {
        let p = pochhammer_exact(&q(1, 2), 2).unwrap();
        assert_eq!(p, q(3, 4));
        assert!(pochhammer_exact(&q(0, 1), 1).is_err());
    }

    #[test]
    fn cauchy_examples() {
        let ones = PowerSeries::new(vec![1.0f64; 6]).unwrap();
        let delta = PowerSeries::<f64>::delta(6).unwrap();
        assert_eq!(cauchy_product(&delta, &ones), ones);
        let sq = cauchy_product(&ones, &ones);
        assert_eq!(sq.coeffs(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);

        let dir = PowerSeries::from_fn(5, |n| q(1, n as i64 + 1)).unwrap();
        let ones_q = PowerSeries::from_fn(5, |_| q(1, 1)).unwrap();
        assert_eq!(cauchy_product(&dir, &ones_q).coeffs()[2], q(11, 6));
    }

    #[test]
    fn cauchy_order_is_minimum() {
        let s = PowerSeries::new(vec![1.0f64; 3]).unwrap();
        let t = PowerSeries::new(vec![1.0f64; 7]).unwrap();
        assert_eq!(cauchy_product(&s, &t).order(), 3);
    }

    #[test]
    fn series_power_examples() {
        let s = PowerSeries::new(vec![2.0f64, 3.0, 4.0]).unwrap();
        assert_eq!(series_power(&s, 0).coeffs(), &[1.0, 0.0, 0.0]);
        let z = PowerSeries::<f64>::monomial(1, 6).unwrap();
        assert_eq!(series_power(&z, 3).coeffs(), &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn bell_examples() {
        let x = [q(3, 7)];
        assert_eq!(bell_polynomial(1, 1, &x).unwrap(), q(3, 7));
        for i in 1..=6 {
            let x1 = q(-2, 3);
            let want = (0..i).fold(q(1, 1), |acc, _| acc * &x1);
            assert_eq!(bell_polynomial(i, i, std::slice::from_ref(&x1)).unwrap(), want);
        }
        let (x1, x2) = (q(5, 2), q(-7, 3));
        assert_eq!(bell_polynomial(3, 2, &[x1.clone(), x2.clone()]).unwrap(), q(3, 1) * x1 * x2);
        assert!(bell_polynomial(3, 2, &[q(1, 1)]).is_err());
        assert!(bell_polynomial(2, 3, &[q(1, 1)]).is_err());
    }

    #[test]
    fn bell_numbers() {
        let bell = [1i64, 1, 2, 5, 15, 52, 203, 877, 4140];
        let table = BellTable::new(&vec![q(1, 1); 8]);
        for (i, b) in bell.iter().enumerate() {
            let s = (0..=i).fold(q(0, 1), |acc, j| acc + table.get(i, j));
            assert_eq!(s, q(*b, 1), "Bell number {i}");
        }
    }

    #[test]
    fn faa_di_bruno_examples() {
        // f(u) = u², φ(z) = z², z = 1: (z⁴)'' = 12.
        let f = [1.0, 2.0, 2.0];
        let phi = [2.0, 2.0];
        assert_eq!(faa_di_bruno(&f, &phi, 2).unwrap(), 12.0);
        assert_eq!(faa_di_bruno(&f, &phi, 0).unwrap(), 1.0);
        assert_eq!(faa_di_bruno(&f, &phi, 1).unwrap(), 4.0);
        assert!(faa_di_bruno(&f[..2], &phi, 2).is_err());
    }

    #[test]
    fn derivative_values_of_polynomial() {
        let s = PowerSeries::new(vec![q(1, 1), q(2, 1), q(3, 1)]).unwrap(); // 1 + 2z + 3z²
        let d = s.derivative_values(&q(2, 1), 3);
        assert_eq!(d, vec![q(17, 1), q(14, 1), q(6, 1), q(0, 1)]);
    }

    #[test]
    fn gaussian_series_eval() {
        let s: PowerSeries<GaussianRational> =
            PowerSeries::new(vec![GaussianRational::from_i64(1), crate::scalar::gaussian(0, 1, 1, 1)]).unwrap();
        let v = s.eval(&crate::scalar::gaussian(0, 1, 1, 1));
        assert_eq!(v, GaussianRational::from_i64(0));
    }
}
