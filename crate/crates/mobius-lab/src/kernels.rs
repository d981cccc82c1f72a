//! Diagonal kernels K(z,w) = Σ b_n (z w̄)ⁿ on the unit disc.

use std::borrow::Cow;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, shape, Error, Result};
use crate::par;
use crate::series::{pochhammer_exact, PowerSeries};
use crate::trend::{classify_boundary, BoundaryFit};
use crate::verdict::{Classification, Verdict};

/// Coefficients cached eagerly at construction.
pub const DEFAULT_WORKING_ORDER: usize = 4096;
/// Hard cap on the number of series terms summed by [`DiagonalKernel::evaluate`].
pub const DEFAULT_MAX_TERMS: usize = 1 << 22;
/// Partial sums beyond this size without decaying terms are reported as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// A user-supplied coefficient rule n ↦ b_n.
#[derive(Clone)]
pub struct CustomRule {
    pub name: String,
    rule: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
}

impl fmt::Debug for CustomRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomRule({})", self.name)
    }
}

#[derive(Clone, Debug)]
pub enum KernelSpec {
    /// K^(λ)(z,w) = (1 − z w̄)^{−λ}, b_n = (λ)_n / n!.
    Power {
        lambda: f64,
    },
    /// K_(γ) with b_n = (n+1)^γ.
    Gamma {
        gamma: f64,
    },
    /// b_n = 1/(n+1); the same kernel as `Gamma { gamma: -1 }`.
    Dirichlet,
    /// Pointwise product; coefficients are the Cauchy convolution.
    Product(Vec<DiagonalKernel>),
    Custom(CustomRule),
}

/// Immutable diagonal kernel with an eagerly filled coefficient cache.
#[derive(Clone, Debug)]
pub struct DiagonalKernel {
    spec: KernelSpec,
    cache: Arc<Vec<f64>>,
}

/// Anything that can supply diagonal-kernel coefficients. Implemented by
/// [`DiagonalKernel`] and by [`CoefficientTable`], which carries no positivity
/// invariant and so can describe indefinite (non-kernel) counterexamples.
pub trait CoefficientSequence: Sync {
    /// At least `len` leading coefficients, or all of them for finite tables.
    fn coefficients(&self, len: usize) -> Cow<'_, [f64]>;
    /// Some(k) when only the first k coefficients can be nonzero.
    fn finite_len(&self) -> Option<usize> {
        None
    }
}

/// A finite coefficient list b₀, …, b_{k−1} (no positivity requirement).
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTable(pub Vec<f64>);

impl CoefficientSequence for CoefficientTable {
    fn coefficients(&self, len: usize) -> Cow<'_, [f64]> {
        Cow::Borrowed(&self.0[..len.min(self.0.len())])
    }
    fn finite_len(&self) -> Option<usize> {
        Some(self.0.len())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalStatus {
    Converged,
    /// The hard term cap was reached before the tail estimate fell below tol.
    Capped,
    /// Partial sums exceeded the divergence threshold without term decay.
    Diverged,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValue {
    pub value: Complex64,
    pub terms: usize,
    pub status: EvalStatus,
}

impl KernelValue {
    pub fn converged(&self) -> bool {
        self.status == EvalStatus::Converged
    }
}

fn check_disc(z: Complex64, what: &str) -> Result<()> {
    if !(z.norm() < 1.0) {
        return Err(domain(format!("{what} = {z} is not in the open unit disc")));
    }
    Ok(())
}

/// Σ b_n xⁿ until the tail estimate |b_n xⁿ|/(1−|x|) drops below tol·|S|
/// with decaying terms, or the cap is hit.
pub fn sum_diagonal_series<C: CoefficientSequence + ?Sized>(coeffs: &C, x: Complex64, tol: f64, max_terms: usize) -> KernelValue {
    let q = x.norm();
    let tail_factor = if q < 1.0 { 1.0 / (1.0 - q) } else { f64::INFINITY };
    let limit = coeffs.finite_len().map_or(max_terms, |k| k.min(max_terms));
    let mut chunk = 1024.min(limit.max(1));
    let mut b = coeffs.coefficients(chunk);
    let mut sum = Complex64::zero();
    let mut xn = Complex64::new(1.0, 0.0);
    let mut prev = f64::INFINITY;
    for n in 0..limit {
        if n >= b.len() {
            chunk = (chunk * 2).min(limit);
            b = coeffs.coefficients(chunk);
            if n >= b.len() {
                break;
            }
        }
        let term = xn * b[n];
        sum += term;
        let mag = term.norm();
        let decaying = mag <= prev;
        if n >= 1 && decaying && mag * tail_factor <= tol * sum.norm() {
            return KernelValue { value: sum, terms: n + 1, status: EvalStatus::Converged };
        }
        if sum.norm() > DIVERGENCE_THRESHOLD && !decaying {
            return KernelValue { value: sum, terms: n + 1, status: EvalStatus::Diverged };
        }
        prev = mag;
        xn *= x;
        if xn.is_zero() && n >= 1 {
            return KernelValue { value: sum, terms: n + 1, status: EvalStatus::Converged };
        }
    }
    let status = if coeffs.finite_len().is_some_and(|k| k <= max_terms) { EvalStatus::Converged } else { EvalStatus::Capped };
    KernelValue { value: sum, terms: limit, status }
}

impl DiagonalKernel {
    fn build(spec: KernelSpec, order: usize) -> Result<Self> {
        let mut k = Self { spec, cache: Arc::new(Vec::new()) };
        let cache = k.compute_coefficients(order.max(2), None);
        if let Some(n) = cache.iter().position(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(domain(format!("kernel coefficient b_{n} = {} is not positive", cache[n])));
        }
        k.cache = Arc::new(cache);
        Ok(k)
    }

    /// K^(λ), λ > 0.
    pub fn power(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(domain(format!("K^(λ) needs λ > 0, got {lambda}")));
        }
        Self::build(KernelSpec::Power { lambda }, DEFAULT_WORKING_ORDER)
    }

    /// K_(γ), γ real.
    pub fn gamma(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(domain(format!("K_(γ) needs finite γ, got {gamma}")));
        }
        Self::build(KernelSpec::Gamma { gamma }, DEFAULT_WORKING_ORDER)
    }

    pub fn dirichlet() -> Self {
        Self::build(KernelSpec::Dirichlet, DEFAULT_WORKING_ORDER).expect("Dirichlet coefficients are positive")
    }

    pub fn product(factors: Vec<DiagonalKernel>) -> Result<Self> {
        if factors.is_empty() {
            return Err(domain("product kernel needs at least one factor"));
        }
        let order = factors.iter().map(|f| f.cache.len()).min().unwrap_or(DEFAULT_WORKING_ORDER);
        Self::build(KernelSpec::Product(factors), order)
    }

    /// Kernel from a coefficient rule; b_n must be positive on the working order.
    pub fn custom(name: impl Into<String>, rule: impl Fn(usize) -> f64 + Send + Sync + 'static) -> Result<Self> {
        Self::build(KernelSpec::Custom(CustomRule { name: name.into(), rule: Arc::new(rule) }), DEFAULT_WORKING_ORDER)
    }

    /// Custom kernel validated on `order` coefficients, for rules that
    /// underflow before the default working order (e.g. b_n = 2^{−n}).
    pub fn custom_with_order(name: impl Into<String>, order: usize, rule: impl Fn(usize) -> f64 + Send + Sync + 'static) -> Result<Self> {
        Self::build(KernelSpec::Custom(CustomRule { name: name.into(), rule: Arc::new(rule) }), order)
    }

    /// Same kernel with a different number of cached coefficients.
    pub fn with_working_order(&self, order: usize) -> Result<Self> {
        Self::build(self.spec.clone(), order)
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn working_order(&self) -> usize {
        self.cache.len()
    }

    /// Short human-readable name, e.g. `K^(2)` or `Dirichlet·K^(1)`.
    pub fn label(&self) -> String {
        match &self.spec {
            KernelSpec::Power { lambda } => format!("K^({lambda})"),
            KernelSpec::Gamma { gamma } => format!("K_({gamma})"),
            KernelSpec::Dirichlet => "Dirichlet".to_string(),
            KernelSpec::Product(f) => f.iter().map(|k| k.label()).collect::<Vec<_>>().join("·"),
            KernelSpec::Custom(rule) => format!("custom:{}", rule.name),
        }
    }

    /// Coefficients b₀…b_{len−1}, extending past the cache when needed.
    fn compute_coefficients(&self, len: usize, cached: Option<&[f64]>) -> Vec<f64> {
        let start = cached.map_or(0, |c| c.len().min(len));
        let mut out: Vec<f64> = Vec::with_capacity(len);
        if let Some(c) = cached {
            out.extend_from_slice(&c[..start]);
        }
        match &self.spec {
            KernelSpec::Power { lambda } => {
                let mut b = if start == 0 { 1.0 } else { out[start - 1] };
                for n in start..len {
                    if n > 0 {
                        b = b * (lambda + (n - 1) as f64) / n as f64;
                    }
                    out.push(b);
                }
            }
            KernelSpec::Gamma { gamma } => out.extend((start..len).map(|n| (n as f64 + 1.0).powf(*gamma))),
            KernelSpec::Dirichlet => out.extend((start..len).map(|n| 1.0 / (n as f64 + 1.0))),
            KernelSpec::Custom(rule) => out.extend((start..len).map(|n| (rule.rule)(n))),
            KernelSpec::Product(factors) => {
                let mut acc = factors[0].coefficients(len).into_owned();
                for f in &factors[1..] {
                    let g = f.coefficients(len);
                    let prev = acc;
                    acc = par::map_range(len, |n| (0..=n).map(|j| prev[j] * g[n - j]).sum::<f64>());
                }
                out.extend_from_slice(&acc[start..len]);
            }
        }
        out
    }

    /// b_n.
    pub fn coefficient(&self, n: usize) -> f64 {
        match self.cache.get(n) {
            Some(b) => *b,
            None => match &self.spec {
                KernelSpec::Gamma { gamma } => (n as f64 + 1.0).powf(*gamma),
                KernelSpec::Dirichlet => 1.0 / (n as f64 + 1.0),
                KernelSpec::Custom(rule) => (rule.rule)(n),
                _ => self.coefficients(n + 1)[n],
            },
        }
    }

    /// ‖zⁿ‖² = 1/b_n.
    pub fn monomial_norm_sq(&self, n: usize) -> f64 {
        1.0 / self.coefficient(n)
    }

    /// Weight √(b_n/b_{n+1}) of M_z in the orthonormal basis.
    pub fn shift_weight(&self, n: usize) -> f64 {
        (self.coefficient(n) / self.coefficient(n + 1)).sqrt()
    }

    /// Exact b_n when the family admits it: K^(λ) (λ is a dyadic rational),
    /// K_(γ) for integer γ, Dirichlet, and products of these.
    pub fn coefficient_exact(&self, n: usize) -> Option<BigRational> {
        match &self.spec {
            KernelSpec::Power { lambda } => {
                let l = BigRational::from_float(*lambda)?;
                let nf = (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k));
                Some(pochhammer_exact(&l, n as u64).ok()? / BigRational::from_integer(nf))
            }
            KernelSpec::Gamma { gamma } => {
                if gamma.fract() != 0.0 || gamma.abs() > 64.0 {
                    return None;
                }
                let base = BigRational::from_integer(BigInt::from(n + 1));
                let p = (0..gamma.abs() as usize).fold(BigRational::one(), |acc, _| acc * &base);
                Some(if *gamma < 0.0 { p.recip() } else { p })
            }
            KernelSpec::Dirichlet => Some(BigRational::new(BigInt::one(), BigInt::from(n + 1))),
            KernelSpec::Product(factors) => {
                let tables: Option<Vec<Vec<BigRational>>> =
                    factors.iter().map(|f| (0..=n).map(|k| f.coefficient_exact(k)).collect()).collect();
                let tables = tables?;
                let mut acc = tables[0].clone();
                for t in &tables[1..] {
                    acc = (0..=n).map(|m| (0..=m).fold(BigRational::zero(), |s, j| s + &acc[j] * &t[m - j])).collect();
                }
                Some(acc[n].clone())
            }
            KernelSpec::Custom(_) => None,
        }
    }

    /// Exact ‖zⁿ‖² = 1/b_n.
    pub fn monomial_norm_sq_exact(&self, n: usize) -> Option<BigRational> {
        self.coefficient_exact(n).map(|b| b.recip())
    }

    /// First index n < len with b_n > b_{n−1}, if any.
    pub fn first_increase(&self, len: usize) -> Option<usize> {
        let b = self.coefficients(len);
        (1..b.len()).find(|&n| b[n] > b[n - 1])
    }

    /// Value of the kernel summed as a series, with convergence status.
    pub fn evaluate(&self, z: Complex64, w: Complex64, tol: f64) -> Result<KernelValue> {
        self.evaluate_capped(z, w, tol, DEFAULT_MAX_TERMS)
    }

    pub fn evaluate_capped(&self, z: Complex64, w: Complex64, tol: f64, max_terms: usize) -> Result<KernelValue> {
        check_disc(z, "z")?;
        check_disc(w, "w")?;
        if !(tol > 0.0) {
            return Err(domain("tolerance must be positive"));
        }
        Ok(sum_diagonal_series(self, z * w.conj(), tol, max_terms))
    }

    /// Closed form of K(z,w) where the family has one.
    pub fn closed_form(&self, z: Complex64, w: Complex64) -> Option<Complex64> {
        let x = z * w.conj();
        let one = Complex64::new(1.0, 0.0);
        match &self.spec {
            KernelSpec::Power { lambda } => Some((one - x).powf(-*lambda)),
            KernelSpec::Dirichlet => Some(dirichlet_closed(x)),
            KernelSpec::Gamma { gamma } => match *gamma {
                0.0 => Some((one - x).inv()),
                1.0 => Some((one - x).powi(-2)),
                2.0 => Some((one + x) / (one - x).powi(3)),
                -1.0 => Some(dirichlet_closed(x)),
                _ => None,
            },
            KernelSpec::Product(factors) => factors.iter().try_fold(one, |acc, f| f.closed_form(z, w).map(|v| acc * v)),
            KernelSpec::Custom(_) => None,
        }
    }

    /// K(z,w) by closed form when available, else by the series at tight
    /// tolerance; a non-converged series is an error here.
    pub fn value(&self, z: Complex64, w: Complex64) -> Result<Complex64> {
        check_disc(z, "z")?;
        check_disc(w, "w")?;
        if let Some(v) = self.closed_form(z, w) {
            return Ok(v);
        }
        let v = self.evaluate(z, w, 1e-15)?;
        if !v.converged() {
            return Err(domain(format!("kernel series did not converge at z={z}, w={w} ({:?})", v.status)));
        }
        Ok(v.value)
    }

    /// ln K(r,r) from a closed form evaluated in log space with
    /// 1−r² = (1−r)(1+r), so it stays accurate as r → 1.
    pub fn ln_diagonal_closed(&self, r: f64) -> Option<f64> {
        let s = (1.0 - r) * (1.0 + r);
        let ln_s = if r < 0.5 { (-r * r).ln_1p() } else { s.ln() };
        let dirichlet = || if r == 0.0 { 0.0 } else { (-ln_s).ln() - 2.0 * r.ln() };
        match &self.spec {
            KernelSpec::Power { lambda } => Some(-lambda * ln_s),
            KernelSpec::Dirichlet => Some(dirichlet()),
            KernelSpec::Gamma { gamma } => match *gamma {
                0.0 => Some(-ln_s),
                1.0 => Some(-2.0 * ln_s),
                2.0 => Some((r * r).ln_1p() - 3.0 * ln_s),
                -1.0 => Some(dirichlet()),
                _ => None,
            },
            KernelSpec::Product(factors) => factors.iter().map(|f| f.ln_diagonal_closed(r)).sum(),
            KernelSpec::Custom(_) => None,
        }
    }

    /// ln K(r,r), with the number of series terms used (0 for closed forms)
    /// and whether the value is trustworthy.
    pub fn ln_diagonal(&self, r: f64, tol: f64) -> Result<(f64, usize, bool)> {
        if !(0.0..1.0).contains(&r) {
            return Err(domain(format!("radius {r} is not in [0,1)")));
        }
        if let Some(v) = self.ln_diagonal_closed(r) {
            return Ok((v, 0, true));
        }
        let z = Complex64::new(r, 0.0);
        let v = self.evaluate(z, z, tol)?;
        Ok((v.value.re.ln(), v.terms, v.converged()))
    }

    /// True when every factor is one of the named families with an exact
    /// log-space closed form.
    pub fn has_closed_form(&self) -> bool {
        self.ln_diagonal_closed(0.5).is_some()
    }

    /// Gram matrix [K(w_i, w_j)], Hermitian by construction.
    pub fn gram_matrix(&self, points: &[Complex64]) -> Result<DMatrix<Complex64>> {
        for p in points {
            check_disc(*p, "point")?;
        }
        let n = points.len();
        let rows = par::map_range(n, |i| (i..n).map(|j| self.value(points[i], points[j])).collect::<Result<Vec<_>>>());
        let mut g = DMatrix::zeros(n, n);
        for (i, row) in rows.into_iter().enumerate() {
            for (k, v) in row?.into_iter().enumerate() {
                let j = i + k;
                if i == j {
                    g[(i, i)] = Complex64::new(v.re, 0.0);
                } else {
                    g[(i, j)] = v;
                    g[(j, i)] = v.conj();
                }
            }
        }
        Ok(g)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(KernelJson::from(self)).expect("kernel spec serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let j: KernelJson = serde_json::from_value(v.clone())?;
        j.build()
    }
}

impl CoefficientSequence for DiagonalKernel {
    fn coefficients(&self, len: usize) -> Cow<'_, [f64]> {
        if len <= self.cache.len() {
            Cow::Borrowed(&self.cache[..len])
        } else {
            Cow::Owned(self.compute_coefficients(len, Some(&self.cache)))
        }
    }
}

fn dirichlet_closed(x: Complex64) -> Complex64 {
    if x.norm() < 1e-8 {
        // 1 + x/2 + x²/3 + x³/4, accurate to ~1e-32 here.
        return Complex64::new(1.0, 0.0) + x * (0.5 + x * (1.0 / 3.0 + x * 0.25));
    }
    -(Complex64::new(1.0, 0.0) - x).ln() / x
}

/// Result of a non-negative-definiteness check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NndCheck {
    pub nnd: bool,
    pub min_eigenvalue: f64,
}

/// Non-negative definite iff λ_min ≥ −tol·tr(G)/dim. The matrix is
/// symmetrized before the Hermitian eigen-solve.
pub fn check_nnd(g: &DMatrix<Complex64>, tol: f64) -> Result<NndCheck> {
    if g.nrows() != g.ncols() {
        return Err(shape(format!("check_nnd needs a square matrix, got {}×{}", g.nrows(), g.ncols())));
    }
    let n = g.nrows();
    if n == 0 {
        return Ok(NndCheck { nnd: true, min_eigenvalue: f64::INFINITY });
    }
    let h = (g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = h.symmetric_eigenvalues();
    let min_eigenvalue = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let trace: f64 = (0..n).map(|i| h[(i, i)].re).sum();
    let threshold = -tol * trace.abs() / n as f64;
    Ok(NndCheck { nnd: min_eigenvalue >= threshold, min_eigenvalue })
}

/// Multiplier test: (c² − f(z_i) conj f(z_j)) K(z_i, z_j) must be non-negative
/// definite when ‖M_f‖ ≤ c. A failing eigenvalue is a certificate of
/// ‖M_f‖ > c; passing on finitely many points is only evidence.
pub fn multiplier_bound_check(k: &DiagonalKernel, f: &PowerSeries<Complex64>, c: f64, points: &[Complex64], tol: f64) -> Result<Verdict> {
    if !(c > 0.0) {
        return Err(domain("multiplier bound c must be positive"));
    }
    let g = k.gram_matrix(points)?;
    let fv: Vec<Complex64> = points.iter().map(|z| f.eval(z)).collect();
    let n = points.len();
    let m = DMatrix::from_fn(n, n, |i, j| (Complex64::new(c * c, 0.0) - fv[i] * fv[j].conj()) * g[(i, j)]);
    let check = check_nnd(&m, tol)?;
    let method = "Hermitian eigen-solve of (c² − f(z)f(w)̄)K(z,w) on the point set";
    let v = if check.nnd {
        Verdict::new("multiplier_bound", Classification::Positive, "ConsistentWithNormAtMostC", false, method)
    } else {
        Verdict::new("multiplier_bound", Classification::Negative, "WitnessesNormAboveC", true, method)
    };
    Ok(v.with("c", c).with("min_eigenvalue", check.min_eigenvalue).with("points", n as f64))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPoint {
    pub r: f64,
    /// (1−r²)^γ K(r,r); may under/overflow where `ln_value` does not.
    pub value: f64,
    pub ln_value: f64,
    /// Series terms used (0 when a closed form was used).
    pub terms: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryScan {
    pub gamma: f64,
    pub points: Vec<BoundaryPoint>,
    pub fit: BoundaryFit,
}

/// Default radii 1 − 2^{−k}: k ≤ 40 with a closed form, k ≤ 14 otherwise.
pub fn default_r_grid(k: &DiagonalKernel) -> Vec<f64> {
    let kmax = if k.has_closed_form() { 40 } else { 14 };
    (1..=kmax).map(|j| 1.0 - 2f64.powi(-j)).collect()
}

/// (1−r²)^γ K(r,r) along an increasing radius grid, with a trend fit over the
/// last half of the grid.
pub fn boundary_scaling(k: &DiagonalKernel, gamma: f64, r_grid: &[f64]) -> Result<BoundaryScan> {
    if r_grid.is_empty() {
        return Err(domain("radius grid is empty"));
    }
    if r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("radius grid must be strictly increasing"));
    }
    let points = par::map_slice(r_grid, |&r| -> Result<BoundaryPoint> {
        let (ln_k, terms, converged) = k.ln_diagonal(r, 1e-13)?;
        let ln_s = if r < 0.5 { (-r * r).ln_1p() } else { ((1.0 - r) * (1.0 + r)).ln() };
        let ln_value = if gamma == 0.0 { ln_k } else { gamma * ln_s + ln_k };
        Ok(BoundaryPoint { r, value: ln_value.exp(), ln_value, terms, converged })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let t: Vec<f64> = points.iter().map(|p| -((1.0 - p.r) * (1.0 + p.r)).ln()).collect();
    let ln_v: Vec<f64> = points.iter().map(|p| if p.converged { p.ln_value } else { f64::NAN }).collect();
    let fit = classify_boundary(&t, &ln_v);
    Ok(BoundaryScan { gamma, points, fit })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelJson {
    family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    factors: Option<Vec<KernelJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

impl From<&DiagonalKernel> for KernelJson {
    fn from(k: &DiagonalKernel) -> Self {
        let mut j = KernelJson { family: String::new(), lambda: None, gamma: None, factors: None, name: None };
        match &k.spec {
            KernelSpec::Power { lambda } => {
                j.family = "power".into();
                j.lambda = Some(*lambda);
            }
            KernelSpec::Gamma { gamma } => {
                j.family = "gamma".into();
                j.gamma = Some(*gamma);
            }
            KernelSpec::Dirichlet => j.family = "dirichlet".into(),
            KernelSpec::Product(f) => {
                j.family = "product".into();
                j.factors = Some(f.iter().map(KernelJson::from).collect());
            }
            KernelSpec::Custom(rule) => {
                j.family = "custom".into();
                j.name = Some(rule.name.clone());
            }
        }
        j
    }
}

impl KernelJson {
    fn build(self) -> Result<DiagonalKernel> {
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| Error::Config(format!("kernel family '{}' needs \"{key}\"", self.family)));
        match self.family.as_str() {
            "power" => DiagonalKernel::power(need(self.lambda, "lambda")?),
            "gamma" => DiagonalKernel::gamma(need(self.gamma, "gamma")?),
            "dirichlet" => Ok(DiagonalKernel::dirichlet()),
            "product" => {
                let factors = self.factors.ok_or_else(|| Error::Config("product kernel needs \"factors\"".into()))?;
                DiagonalKernel::product(factors.into_iter().map(KernelJson::build).collect::<Result<_>>()?)
            }
            "custom" => Err(Error::Config("custom kernels cannot be built from JSON".into())),
            other => Err(Error::Config(format!("unknown kernel family '{other}'"))),
        }
    }
}

impl Serialize for DiagonalKernel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        KernelJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiagonalKernel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        KernelJson::deserialize(d)?.build().map_err(serde::de::Error::custom)
    }
}

impl PartialEq for DiagonalKernel {
    /// Kernels compare equal when their specs do (custom rules by name).
    fn eq(&self, other: &Self) -> bool {
        KernelJson::from(self).to_value() == KernelJson::from(other).to_value()
    }
}

impl KernelJson {
    fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("kernel spec serializes")
    }
}

/// Convenience: f64 of an exact coefficient.
pub fn exact_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}
