//! Arithmetic backends. Every generic routine in the crate is written against
//! [`Scalar`], so the same code runs in double precision for sweeps and in
//! Gaussian rationals when an identity has to hold exactly.

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive};

/// Complex numbers with arbitrary-precision rational real and imaginary parts.
pub type GaussianRational = Complex<BigRational>;

pub trait Scalar: Clone + PartialEq + Debug + Send + Sync + 'static + Num + Neg<Output = Self> {
    /// True when arithmetic is exact, so agreement means equality.
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;
    fn conj(&self) -> Self;
    fn to_c64(&self) -> Complex64;

    fn abs_f64(&self) -> f64 {
        self.to_c64().norm()
    }

    fn powu(&self, k: usize) -> Self {
        let mut out = Self::one();
        for _ in 0..k {
            out = out * self.clone();
        }
        out
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn conj(&self) -> Self {
        *self
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(*self, 0.0)
    }
    fn powu(&self, k: usize) -> Self {
        self.powi(k as i32)
    }
}

impl Scalar for Complex64 {
    const EXACT: bool = false;
    fn from_i64(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }
    fn conj(&self) -> Self {
        Complex::conj(self)
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn powu(&self, k: usize) -> Self {
        self.powu(k as u32)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn conj(&self) -> Self {
        self.clone()
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.to_f64().unwrap_or(f64::NAN), 0.0)
    }
}

impl Scalar for GaussianRational {
    const EXACT: bool = true;
    fn from_i64(v: i64) -> Self {
        Complex::new(BigRational::from_i64(v), BigRational::from_i64(0))
    }
    fn conj(&self) -> Self {
        Complex::conj(self)
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64().unwrap_or(f64::NAN), self.im.to_f64().unwrap_or(f64::NAN))
    }
}

/// `n / d` as a big rational.
pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `(re_n/re_d) + i (im_n/im_d)`.
pub fn gaussian(re_n: i64, re_d: i64, im_n: i64, im_d: i64) -> GaussianRational {
    Complex::new(rational(re_n, re_d), rational(im_n, im_d))
}

/// Binomial coefficient C(n, k), exact for n ≤ 62.
pub fn binomial(n: usize, k: usize) -> i64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for t in 0..k {
        acc = acc * (n - t) as u128 / (t + 1) as u128;
    }
    i64::try_from(acc).expect("binomial coefficient exceeds i64")
}

/// Falling factorial m!/(m−i)! in double precision.
pub fn falling_factorial(m: usize, i: usize) -> f64 {
    if i > m {
        return 0.0;
    }
    ((m - i + 1)..=m).fold(1.0, |acc, k| acc * k as f64)
}

/// Falling factorial as an exact integer, for the exact backend.
pub fn falling_factorial_exact<T: Scalar>(m: usize, i: usize) -> T {
    if i > m {
        return T::zero();
    }
    ((m - i + 1)..=m).fold(T::one(), |acc, k| acc * T::from_i64(k as i64))
}

/// k! as a scalar.
pub fn factorial<T: Scalar>(k: usize) -> T {
    falling_factorial_exact(k, k)
}
