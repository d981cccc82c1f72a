//! The jet construction: the matrix kernel K₁·∂ⁱ∂̄ʲK₂ on the diagonal, the
//! compression symbol ψ₁(𝒥ψ₂)(ℬφ), and the derivative identity that ties the
//! two together.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::kernels::DiagonalKernel;
use crate::kernels::{check_nnd, CoefficientSequence, EvalStatus, KernelValue, DEFAULT_MAX_TERMS};
use crate::mobius::{bell_matrix, jet_weight_matrix, JetMatrix, MobiusMap, MobiusParams};
use crate::operators::{operator_norm_lower, weighted_composition};
use crate::par;
use crate::scalar::{factorial, GaussianRational, Scalar};
use crate::series::PowerSeries;
use crate::verdict::{Classification, Verdict};

pub const MAX_JET_ORDER: usize = 6;
pub const MAX_POLY_DEGREE: usize = 8;

fn check_disc(z: Complex64, what: &str) -> Result<()> {
    if !(z.norm() < 1.0) {
        return Err(domain(format!("{what} = {z} is not in the open unit disc")));
    }
    Ok(())
}

/// ∂_zⁱ∂_w̄ʲ Σ b_m (z w̄)^m = Σ_{m ≥ max(i,j)} b_m·m!/(m−i)!·m!/(m−j)!·z^{m−i}w̄^{m−j},
/// summed until the ratio-based tail estimate drops below tol·|S|.
pub fn kernel_derivative<C: CoefficientSequence + ?Sized>(k: &C, i: usize, j: usize, z: Complex64, w: Complex64, tol: f64) -> KernelValue {
    let wbar = w.conj();
    let start = i.max(j);
    let limit = k.finite_len().map_or(DEFAULT_MAX_TERMS, |n| n.min(DEFAULT_MAX_TERMS));
    let mut chunk = (start + 1024).min(limit);
    let mut b = k.coefficients(chunk);
    let mut zp = z.powu((start - i) as u32);
    let mut wp = wbar.powu((start - j) as u32);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut prev = f64::INFINITY;
    let mut terms = 0;
    for m in start..limit {
        if m >= b.len() {
            chunk = (chunk * 2).min(limit);
            b = k.coefficients(chunk);
            if m >= b.len() {
                break;
            }
        }
        let ff = falling(m, i) * falling(m, j);
        let term = zp * wp * (b[m] * ff);
        sum += term;
        terms += 1;
        let mag = term.norm();
        if (z == Complex64::new(0.0, 0.0) && m >= i) || (wbar == Complex64::new(0.0, 0.0) && m >= j) {
            return KernelValue { value: sum, terms, status: EvalStatus::Converged };
        }
        if m > start && mag < prev && prev.is_finite() {
            let ratio = mag / prev;
            if ratio < 1.0 && mag / (1.0 - ratio) <= tol * sum.norm() {
                return KernelValue { value: sum, terms, status: EvalStatus::Converged };
            }
        }
        if !sum.norm().is_finite() {
            return KernelValue { value: sum, terms, status: EvalStatus::Diverged };
        }
        prev = mag;
        zp *= z;
        wp *= wbar;
    }
    let status = if k.finite_len().is_some_and(|n| n <= DEFAULT_MAX_TERMS) { EvalStatus::Converged } else { EvalStatus::Capped };
    KernelValue { value: sum, terms, status }
}

fn falling(m: usize, i: usize) -> f64 {
    (0..i).fold(1.0, |acc, k| acc * (m - k) as f64)
}

/// J_n(K₁,K₂)(z, w): entry (i, j) = K₁(z,w)·∂_zⁱ∂_w̄ʲK₂(z,w).
#[derive(Clone, Debug, PartialEq)]
pub struct JetKernelEval {
    pub n: usize,
    pub value: DMatrix<Complex64>,
    pub converged: bool,
}

pub fn jet_kernel<C1, C2>(k1: &C1, k2: &C2, n: usize, z: Complex64, w: Complex64, tol: f64) -> Result<JetKernelEval>
where
    C1: CoefficientSequence + ?Sized,
    C2: CoefficientSequence + ?Sized,
{
    check_disc(z, "z")?;
    check_disc(w, "w")?;
    let base = kernel_derivative(k1, 0, 0, z, w, tol);
    let mut converged = base.converged();
    let mut value = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            let d = kernel_derivative(k2, i, j, z, w, tol);
            converged &= d.converged();
            value[(i, j)] = base.value * d.value;
        }
    }
    Ok(JetKernelEval { n, value, converged })
}

/// Block Gram matrix [J(z_p, z_q)] of size l(n+1).
pub fn jet_gram<C1, C2>(k1: &C1, k2: &C2, n: usize, points: &[Complex64], tol: f64) -> Result<(DMatrix<Complex64>, bool)>
where
    C1: CoefficientSequence + ?Sized,
    C2: CoefficientSequence + ?Sized,
{
    for z in points {
        check_disc(*z, "point")?;
    }
    let l = points.len();
    let d = n + 1;
    let pairs: Vec<(usize, usize)> = (0..l).flat_map(|p| (0..l).map(move |q| (p, q))).collect();
    let blocks = par::map_slice(&pairs, |&(p, q)| jet_kernel(k1, k2, n, points[p], points[q], tol));
    let mut g = DMatrix::zeros(l * d, l * d);
    let mut converged = true;
    for ((p, q), blk) in pairs.iter().zip(blocks) {
        let blk = blk?;
        converged &= blk.converged;
        g.view_mut((p * d, q * d), (d, d)).copy_from(&blk.value);
    }
    Ok((g, converged))
}

/// Non-negative definiteness of the jet Gram matrix on a point set. Failure
/// certifies that J_n(K₁,K₂) is not a reproducing kernel; passing is
/// evidence on finitely many points only.
pub fn jet_kernel_nnd<C1, C2>(k1: &C1, k2: &C2, n: usize, points: &[Complex64], tol: f64) -> Result<Verdict>
where
    C1: CoefficientSequence + ?Sized,
    C2: CoefficientSequence + ?Sized,
{
    let (g, converged) = jet_gram(k1, k2, n, points, tol)?;
    let check = check_nnd(&g, tol)?;
    let method = "Hermitian eigen-solve of the block jet Gram matrix";
    let v = if !converged {
        Verdict::new("jet_kernel_nnd", Classification::Inconclusive, "SeriesNotConverged", false, method)
    } else if check.nnd {
        Verdict::new("jet_kernel_nnd", Classification::Positive, "NonNegativeDefinite", false, method)
    } else {
        Verdict::new("jet_kernel_nnd", Classification::Negative, "NotNonNegativeDefinite", true, method)
    };
    Ok(v.with("min_eigenvalue", check.min_eigenvalue).with("points", points.len() as f64).with("order", n as f64))
}

/// ψ₁(z)·𝒥_nψ₂(z)·ℬ_nφ(z). `psi2_derivs` holds ψ₂^{(0..=n)}(z) and
/// `phi_derivs` holds φ^{(1..=n)}(z).
pub fn jet_symbol<T: Scalar>(psi1: &PowerSeries<T>, psi2_derivs: &[T], phi_derivs: &[T], n: usize, z: &T) -> Result<JetMatrix<T>> {
    let j = jet_weight_matrix(psi2_derivs, n)?;
    let b = bell_matrix(phi_derivs, n)?;
    Ok(j.mul(&b)?.scale(&psi1.eval(z)))
}

/// Polynomial Σ c_{pq} z^p ζ^q of bidegree ≤ (d, d), stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct BivariatePoly<T> {
    degree: usize,
    coeffs: Vec<T>,
}

impl<T: Scalar> BivariatePoly<T> {
    /// `coeffs[p·(d+1) + q]` is the coefficient of z^p ζ^q.
    pub fn new(degree: usize, coeffs: Vec<T>) -> Result<Self> {
        if coeffs.len() != (degree + 1) * (degree + 1) {
            return Err(domain(format!("bidegree {degree} needs {} coefficients, got {}", (degree + 1).pow(2), coeffs.len())));
        }
        Ok(Self { degree, coeffs })
    }

    pub fn from_fn(degree: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let d = degree + 1;
        Self { degree, coeffs: (0..d * d).map(|k| f(k / d, k % d)).collect() }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn get(&self, p: usize, q: usize) -> T {
        self.coeffs[p * (self.degree + 1) + q].clone()
    }

    /// Coefficients of ζ^q after substituting z: c_q = Σ_p c_{pq} z^p.
    fn partial_in_zeta(&self, z: &T) -> Vec<T> {
        (0..=self.degree).map(|q| (0..=self.degree).rev().fold(T::zero(), |acc, p| acc * z.clone() + self.get(p, q))).collect()
    }

    pub fn eval(&self, z: &T, zeta: &T) -> T {
        self.partial_in_zeta(z).iter().rev().fold(T::zero(), |acc, c| acc * zeta.clone() + c.clone())
    }

    /// ∂/∂ζ by index shifting.
    pub fn d_zeta(&self) -> Self {
        Self::from_fn(self.degree, |p, q| if q < self.degree { self.get(p, q + 1) * T::from_i64(q as i64 + 1) } else { T::zero() })
    }
}

/// Both sides of the identity for i = 0…n.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub n: usize,
    pub degree: usize,
    pub exact: bool,
    pub passed: bool,
    pub max_residual: f64,
    pub lhs: Vec<(f64, f64)>,
    pub rhs: Vec<(f64, f64)>,
}

fn truncated_mul<T: Scalar>(s: &[T], t: &[T]) -> Vec<T> {
    let len = s.len().min(t.len());
    (0..len).map(|k| (0..=k).fold(T::zero(), |acc, j| acc + s[j].clone() * t[k - j].clone())).collect()
}

/// (∂/∂ζ)ⁱ[ψ₂(ζ)f(φ(z),φ(ζ))] at ζ = z, i = 0…n, from the Taylor expansion
/// in t = ζ − z of each factor.
fn identity_lhs<T: Scalar>(psi2: &PowerSeries<T>, phi: &MobiusParams<T>, f: &BivariatePoly<T>, n: usize, z: &T) -> Result<Vec<T>> {
    let order = n + 1;
    let phi_z = phi.apply(z)?;
    let phi_t = phi.expansion_at(z, order)?;
    let c = f.partial_in_zeta(&phi_z);
    let mut inner = vec![T::zero(); order];
    for cq in c.iter().rev() {
        inner = truncated_mul(&inner, phi_t.coeffs());
        inner[0] = inner[0].clone() + cq.clone();
    }
    let psi_d = psi2.derivative_values(z, n);
    let psi_t: Vec<T> = psi_d.iter().enumerate().map(|(k, d)| d.clone() / factorial::<T>(k)).collect();
    let prod = truncated_mul(&psi_t, &inner);
    Ok(prod.into_iter().enumerate().map(|(i, v)| v * factorial::<T>(i)).collect())
}

/// Σ_{j ≤ i} (𝒥_nψ₂·ℬ_nφ)_{i,j}(z)·(∂_ζʲ f)(φ(z), φ(z)).
fn identity_rhs<T: Scalar>(psi2: &PowerSeries<T>, phi: &MobiusParams<T>, f: &BivariatePoly<T>, n: usize, z: &T) -> Result<Vec<T>> {
    let phi_z = phi.apply(z)?;
    let sym = jet_symbol(&PowerSeries::new(vec![T::one()])?, &psi2.derivative_values(z, n), &phi.derivatives(z, n)?, n, z)?;
    let mut df = f.clone();
    let mut fj = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        fj.push(df.eval(&phi_z, &phi_z));
        df = df.d_zeta();
    }
    Ok((0..=n).map(|i| (0..=i).fold(T::zero(), |acc, j| acc + sym.get(i, j) * fj[j].clone())).collect())
}

fn pair(v: &impl Scalar) -> (f64, f64) {
    let c = v.to_c64();
    (c.re, c.im)
}

/// Compare both sides of the derivative identity; exact backends demand
/// equality, floating backends agreement within tol.
pub fn verify_jet_symbol_identity<T: Scalar>(
    psi2: &PowerSeries<T>,
    phi: &MobiusParams<T>,
    f: &BivariatePoly<T>,
    n: usize,
    z: &T,
    tol: f64,
) -> Result<IdentityCheck> {
    verify_with_offset(psi2, phi, f, n, z, tol, None)
}

fn verify_with_offset<T: Scalar>(
    psi2: &PowerSeries<T>,
    phi: &MobiusParams<T>,
    f: &BivariatePoly<T>,
    n: usize,
    z: &T,
    tol: f64,
    offset: Option<T>,
) -> Result<IdentityCheck> {
    if n > MAX_JET_ORDER {
        return Err(domain(format!("jet order {n} exceeds {MAX_JET_ORDER}")));
    }
    if f.degree() > MAX_POLY_DEGREE {
        return Err(domain(format!("polynomial bidegree {} exceeds {MAX_POLY_DEGREE}", f.degree())));
    }
    if !(z.abs_f64() < 1.0) {
        return Err(domain("identity point must lie in the open disc"));
    }
    let lhs = identity_lhs(psi2, phi, f, n, z)?;
    let mut rhs = identity_rhs(psi2, phi, f, n, z)?;
    if let Some(off) = offset {
        let last = rhs.len() - 1;
        rhs[last] = rhs[last].clone() + off;
    }
    let diffs: Vec<T> = lhs.iter().zip(&rhs).map(|(a, b)| a.clone() - b.clone()).collect();
    let max_residual = diffs.iter().map(|d| d.abs_f64()).fold(0.0, f64::max);
    let passed = if T::EXACT { diffs.iter().all(|d| d.is_zero()) } else { max_residual <= tol };
    Ok(IdentityCheck {
        n,
        degree: f.degree(),
        exact: T::EXACT,
        passed,
        max_residual,
        lhs: lhs.iter().map(pair).collect(),
        rhs: rhs.iter().map(pair).collect(),
    })
}

/// A randomized exact instance of the identity.
#[derive(Clone, Debug)]
pub struct ExactJetCase {
    pub psi2: PowerSeries<GaussianRational>,
    pub phi: MobiusParams<GaussianRational>,
    pub f: BivariatePoly<GaussianRational>,
    pub n: usize,
    pub z: GaussianRational,
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Unit Gaussian rationals (a + bi)/c from Pythagorean triples.
const TRIPLES: [(i64, i64, i64); 6] = [(1, 0, 1), (3, 4, 5), (5, 12, 13), (8, 15, 17), (7, 24, 25), (20, 21, 29)];

fn random_unit(rng: &mut ChaCha8Rng) -> GaussianRational {
    let (a, b, c) = TRIPLES[rng.gen_range(0..TRIPLES.len())];
    let (a, b) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
    let sa = if rng.gen_bool(0.5) { 1 } else { -1 };
    let sb = if rng.gen_bool(0.5) { 1 } else { -1 };
    GaussianRational::new(q(sa * a, c), q(sb * b, c))
}

/// Gaussian rational with denominators 8 and modulus at most 3/4.
fn random_disc_point(rng: &mut ChaCha8Rng) -> GaussianRational {
    loop {
        let (re, im) = (rng.gen_range(-6i64..=6), rng.gen_range(-6i64..=6));
        if re * re + im * im <= 36 {
            return GaussianRational::new(q(re, 8), q(im, 8));
        }
    }
}

fn random_coeff(rng: &mut ChaCha8Rng) -> GaussianRational {
    GaussianRational::new(q(rng.gen_range(-4i64..=4), rng.gen_range(1i64..=4)), q(rng.gen_range(-4i64..=4), rng.gen_range(1i64..=4)))
}

/// Draw an exact case with jet order ≤ n_max, bidegree ≤ deg_max, |a| ≤ 3/4
/// and |z| ≤ 3/4.
pub fn random_exact_case(rng: &mut ChaCha8Rng, n_max: usize, deg_max: usize) -> Result<ExactJetCase> {
    let n = rng.gen_range(0..=n_max);
    let degree = rng.gen_range(0..=deg_max);
    let psi_len = rng.gen_range(1..=4);
    let psi2 = PowerSeries::new((0..psi_len).map(|_| random_coeff(rng)).collect())?;
    let phi = MobiusParams::new(random_unit(rng), random_disc_point(rng))?;
    let coeffs = (0..(degree + 1) * (degree + 1)).map(|_| random_coeff(rng)).collect();
    let f = BivariatePoly::new(degree, coeffs)?;
    let z = random_disc_point(rng);
    Ok(ExactJetCase { psi2, phi, f, n, z })
}

/// Run `count` random exact cases from `seed`. With `perturb`, the last RHS
/// entry of the first case is shifted by 10⁻⁶, which must be detected.
pub fn run_identity_suite(count: usize, seed: u64, n_max: usize, deg_max: usize, perturb: bool) -> Result<Vec<IdentityCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<ExactJetCase> = (0..count).map(|_| random_exact_case(&mut rng, n_max, deg_max)).collect::<Result<_>>()?;
    let indexed: Vec<(usize, ExactJetCase)> = cases.into_iter().enumerate().collect();
    par::map_slice(&indexed, |(k, c)| {
        let offset = (perturb && *k == 0).then(|| GaussianRational::new(q(1, 1_000_000), q(0, 1)));
        verify_with_offset(&c.psi2, &c.phi, &c.f, c.n, &c.z, 0.0, offset)
    })
    .into_iter()
    .collect()
}

/// Lower bounds for the three norms in ‖M_{ψ₁(𝒥ψ₂)(ℬφ)}C_φ‖ ≤ ‖M_{ψ₁}C_φ‖‖M_{ψ₂}C_φ‖.
/// Both sides are lower bounds, so `holds` is a consistency probe only.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JetNormProbe {
    pub lhs_lower: f64,
    pub rhs1_lower: f64,
    pub rhs2_lower: f64,
    pub rhs_product: f64,
    pub holds: bool,
    pub points: usize,
    pub truncation: usize,
    pub is_certificate: bool,
    pub note: String,
}

/// Fixed probe set: the origin and radii 0.3, 0.6 at four angles.
pub fn probe_points() -> Vec<Complex64> {
    let mut pts = vec![Complex64::new(0.0, 0.0)];
    for r in [0.3, 0.6] {
        for k in 0..4 {
            pts.push(Complex64::from_polar(r, 0.4 + k as f64 * std::f64::consts::FRAC_PI_2));
        }
    }
    pts
}

/// Largest λ with G′x = λGx on the numerically nonsingular range of G.
fn generalized_top_eigenvalue(g: &DMatrix<Complex64>, gp: &DMatrix<Complex64>) -> f64 {
    let h = (g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&k| eig.eigenvalues[k] > 1e-10 * top).collect();
    let w = DMatrix::from_fn(g.nrows(), keep.len(), |r, c| eig.eigenvectors[(r, keep[c])] / eig.eigenvalues[keep[c]].sqrt());
    let m = w.adjoint() * gp * &w;
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    m.symmetric_eigenvalues().iter().cloned().fold(0.0, f64::max)
}

pub fn jet_norm_inequality_probe(
    psi1: &PowerSeries<Complex64>,
    psi2: &PowerSeries<Complex64>,
    phi: &MobiusMap,
    n: usize,
    k1: &DiagonalKernel,
    k2: &DiagonalKernel,
    truncation: usize,
) -> Result<JetNormProbe> {
    let tol = 1e-13;
    let pts = probe_points();
    let images: Vec<Complex64> = pts.iter().map(|w| phi.apply(*w)).collect::<Result<_>>()?;
    let symbols: Vec<DMatrix<Complex64>> = pts
        .iter()
        .map(|w| {
            let phi_d = phi.derivatives(*w, n)?;
            Ok(jet_symbol(psi1, &psi2.derivative_values(w, n), &phi_d, n, w)?.to_c64())
        })
        .collect::<Result<_>>()?;
    let (g, _) = jet_gram(k1, k2, n, &pts, tol)?;
    let (g_img, _) = jet_gram(k1, k2, n, &images, tol)?;
    let d = n + 1;
    let l = pts.len();
    let mut gp = DMatrix::zeros(l * d, l * d);
    for p in 0..l {
        for qd in 0..l {
            let blk = &symbols[p] * g_img.view((p * d, qd * d), (d, d)) * symbols[qd].adjoint();
            gp.view_mut((p * d, qd * d), (d, d)).copy_from(&blk);
        }
    }
    let lhs_lower = generalized_top_eigenvalue(&g, &gp).max(0.0).sqrt();
    let t1 = weighted_composition(k1, k1, &psi1.padded(truncation), phi, truncation)?;
    let t2 = weighted_composition(k2, k2, &psi2.padded(truncation), phi, truncation)?;
    let rhs1_lower = operator_norm_lower(&t1, 1e-10).value;
    let rhs2_lower = operator_norm_lower(&t2, 1e-10).value;
    let rhs_product = rhs1_lower * rhs2_lower;
    Ok(JetNormProbe {
        lhs_lower,
        rhs1_lower,
        rhs2_lower,
        rhs_product,
        holds: lhs_lower <= rhs_product * (1.0 + 1e-9),
        points: l,
        truncation,
        is_certificate: false,
        note: "consistency probe: both sides are lower bounds".into(),
    })
}
