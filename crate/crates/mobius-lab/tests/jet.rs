#![allow(clippy::needless_range_loop)]

use mobius_lab::jet::*;
use mobius_lab::kernels::{CoefficientTable, DiagonalKernel};
use mobius_lab::mobius::{bell_matrix, MobiusMap, MobiusParams};
use mobius_lab::scalar::{gaussian, GaussianRational, Scalar};
use mobius_lab::series::PowerSeries;
use mobius_lab::Classification;
use num_complex::Complex64;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_points(rng: &mut ChaCha8Rng, count: usize, radius: f64) -> Vec<Complex64> {
    (0..count).map(|_| Complex64::from_polar(radius * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..std::f64::consts::TAU))).collect()
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// ∂_zⁱ∂_w̄ʲ (1 − z w̄)^{−1} by Leibniz on j! zʲ (1 − z w̄)^{−j−1}.
fn szego_derivative(i: usize, j: usize, z: Complex64, w: Complex64) -> Complex64 {
    let wb = w.conj();
    let d = c(1.0, 0.0) - z * wb;
    let fact = |m: usize| (1..=m).fold(1.0, |a, k| a * k as f64);
    (0..=i.min(j))
        .map(|k| {
            let zpart = fact(j) / fact(j - k) * z.powu((j - k) as u32);
            let rising = (0..i - k).fold(1.0, |a, r| a * (j + 1 + r) as f64);
            let dpart = wb.powu((i - k) as u32) * rising * d.powi(-((j + 1 + i - k) as i32));
            zpart * dpart * binom(i, k) * fact(j)
        })
        .sum()
}

#[test]
fn order_zero_is_the_product_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let k1 = DiagonalKernel::power(1.5).unwrap();
    let k2 = DiagonalKernel::gamma(-0.5).unwrap();
    for _ in 0..100 {
        let p = random_points(&mut rng, 2, 0.9);
        let j = jet_kernel(&k1, &k2, 0, p[0], p[1], 1e-15).unwrap();
        let want = k1.evaluate(p[0], p[1], 1e-15).unwrap().value * k2.evaluate(p[0], p[1], 1e-15).unwrap().value;
        assert!(j.converged);
        assert!((j.value[(0, 0)] - want).norm() <= 1e-12 * want.norm());
    }
}

#[test]
fn origin_entries() {
    let k1 = DiagonalKernel::power(2.0).unwrap();
    let k2 = DiagonalKernel::power(1.0).unwrap();
    let j = jet_kernel(&k1, &k2, 3, c(0.0, 0.0), c(0.0, 0.0), 1e-14).unwrap();
    assert!((j.value[(1, 1)] - c(1.0, 0.0)).norm() < 1e-15);
    for i in 0..4 {
        for l in 0..4 {
            let fact = (1..=i).fold(1.0, |a, k| a * k as f64);
            let want = if i == l { fact * fact } else { 0.0 };
            assert!((j.value[(i, l)] - c(want, 0.0)).norm() < 1e-12);
        }
    }
}

#[test]
fn hardy_jet_matches_closed_form_derivatives() {
    let h = DiagonalKernel::power(1.0).unwrap();
    for (z, w) in [(c(0.3, 0.0), c(0.3, 0.0)), (c(0.2, -0.5), c(-0.4, 0.1))] {
        let j = jet_kernel(&h, &h, 2, z, w, 1e-15).unwrap();
        let base = c(1.0, 0.0) / (c(1.0, 0.0) - z * w.conj());
        for i in 0..=2 {
            for l in 0..=2 {
                let want = base * szego_derivative(i, l, z, w);
                assert!((j.value[(i, l)] - want).norm() < 1e-10 * want.norm().max(1.0), "({i},{l})");
            }
        }
    }
}

#[test]
fn jet_kernel_is_conjugate_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let k1 = DiagonalKernel::dirichlet();
    let k2 = DiagonalKernel::power(0.5).unwrap();
    for _ in 0..20 {
        let p = random_points(&mut rng, 2, 0.8);
        let a = jet_kernel(&k1, &k2, 3, p[0], p[1], 1e-15).unwrap().value;
        let b = jet_kernel(&k1, &k2, 3, p[1], p[0], 1e-15).unwrap().value;
        let scale = a.iter().map(|v| v.norm()).fold(1.0, f64::max);
        assert!((a - b.adjoint()).iter().all(|v| v.norm() < 1e-12 * scale));
    }
}

#[test]
fn jet_kernel_rejects_boundary_points() {
    let h = DiagonalKernel::power(1.0).unwrap();
    assert!(jet_kernel(&h, &h, 1, c(1.0, 0.0), c(0.0, 0.0), 1e-12).is_err());
}

#[test]
fn nnd_examples() {
    let k1 = DiagonalKernel::power(1.0).unwrap();
    let k2 = DiagonalKernel::power(2.0).unwrap();
    let v = jet_kernel_nnd(&k1, &k2, 0, &[c(0.4, 0.1)], 1e-9).unwrap();
    assert_eq!(v.classification, Classification::Positive);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts = random_points(&mut rng, 10, 0.7);
    let (g, _) = jet_gram(&k1, &k2, 2, &pts, 1e-14).unwrap();
    let h = (&g + g.adjoint()) * c(0.5, 0.0);
    let min = h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(min > 0.0);
    let v = jet_kernel_nnd(&k1, &k2, 2, &pts, 1e-9).unwrap();
    assert_eq!(v.classification, Classification::Positive);
    assert!(!v.is_certificate);

    let mut bad = vec![1.0; 64];
    bad[3] = -1.0;
    let corrupted = CoefficientTable(bad);
    let mut with_origin = vec![c(0.0, 0.0)];
    with_origin.extend(random_points(&mut rng, 5, 0.5));
    let v = jet_kernel_nnd(&k1, &corrupted, 3, &with_origin, 1e-9).unwrap();
    assert_eq!(v.classification, Classification::Negative);
    assert!(v.is_certificate);
}

#[test]
fn nnd_on_named_pairs() {
    let ks = [DiagonalKernel::power(1.0).unwrap(), DiagonalKernel::power(2.0).unwrap(), DiagonalKernel::power(3.0).unwrap()];
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for a in &ks {
        for b in &ks {
            for n in 0..=2 {
                let pts = random_points(&mut rng, 8, 0.8);
                let v = jet_kernel_nnd(a, b, n, &pts, 1e-9).unwrap();
                assert_eq!(v.classification, Classification::Positive, "{} {} n={n}", a.label(), b.label());
            }
        }
    }
}

#[test]
fn jet_symbol_examples() {
    let z = c(0.2, 0.0);
    let psi1 = PowerSeries::new(vec![c(1.0, 0.0), c(2.0, 0.0)]).unwrap();
    let s = jet_symbol(&psi1, &[c(3.0, 1.0)], &[], 0, &z).unwrap();
    assert!((s.get(0, 0) - c(1.4, 0.0) * c(3.0, 1.0)).norm() < 1e-15);

    let one = PowerSeries::new(vec![c(1.0, 0.0)]).unwrap();
    let phi_d = vec![c(0.5, 0.1), c(-0.2, 0.3), c(0.7, 0.0)];
    let s = jet_symbol(&one, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], &phi_d, 3, &z).unwrap();
    assert_eq!(s.to_c64(), bell_matrix(&phi_d, 3).unwrap().to_c64());

    let phi = MobiusMap::new(0.0, c(0.5, 0.0)).unwrap();
    let dphi = phi.derivatives(z, 1).unwrap();
    let s = jet_symbol(&one, &[z, c(1.0, 0.0)], &dphi, 1, &z).unwrap();
    let fp = 0.75 / (0.9f64 * 0.9);
    let want = [[c(0.2, 0.0), c(0.0, 0.0)], [c(1.0, 0.0), c(0.2 * fp, 0.0)]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((s.get(i, j) - want[i][j]).norm() < 1e-14);
        }
    }
}

// ---- independent symbolic oracle for the derivative identity ----

type Poly = Vec<GaussianRational>;

fn padd(a: &Poly, b: &Poly) -> Poly {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| a.get(k).cloned().unwrap_or_else(GaussianRational::zero) + b.get(k).cloned().unwrap_or_else(GaussianRational::zero))
        .collect()
}

fn pmul(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![GaussianRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j].clone() + x.clone() * y.clone();
        }
    }
    out
}

fn pscale(a: &Poly, s: &GaussianRational) -> Poly {
    a.iter().map(|x| x.clone() * s.clone()).collect()
}

fn pderiv(a: &Poly) -> Poly {
    if a.len() <= 1 {
        return vec![GaussianRational::zero()];
    }
    (1..a.len()).map(|k| a[k].clone() * GaussianRational::from_i64(k as i64)).collect()
}

fn ppow(a: &Poly, k: usize) -> Poly {
    (0..k).fold(vec![GaussianRational::one()], |acc, _| pmul(&acc, a))
}

fn peval(a: &Poly, x: &GaussianRational) -> GaussianRational {
    a.iter().rev().fold(GaussianRational::zero(), |acc, c| acc * x.clone() + c.clone())
}

/// g(ζ) = ψ₂(ζ)f(φ(z),φ(ζ)) = P(ζ)/D(ζ)^d with D = 1 − āζ; derivatives by
/// the quotient rule P_{i+1} = P_i′D − (d+i)P_iD′.
fn oracle_lhs(
    psi2: &[GaussianRational],
    u: &GaussianRational,
    a: &GaussianRational,
    f: &BivariatePoly<GaussianRational>,
    n: usize,
    z: &GaussianRational,
) -> Vec<GaussianRational> {
    let d = f.degree();
    let abar = a.conj();
    let dpoly: Poly = vec![GaussianRational::one(), -abar.clone()];
    let num: Poly = vec![-(u.clone() * a.clone()), u.clone()];
    let phi_z = u.clone() * (z.clone() - a.clone()) / (GaussianRational::one() - abar.clone() * z.clone());
    let mut p: Poly = vec![GaussianRational::zero()];
    for q in 0..=d {
        let cq = (0..=d).fold(GaussianRational::zero(), |acc, pp| acc + f.get(pp, q) * Scalar::powu(&phi_z, pp));
        p = padd(&p, &pscale(&pmul(&ppow(&num, q), &ppow(&dpoly, d - q)), &cq));
    }
    p = pmul(&p, &psi2.to_vec());
    let dz = peval(&dpoly, z);
    let mut out = Vec::new();
    for i in 0..=n {
        out.push(peval(&p, z) / Scalar::powu(&dz, d + i));
        let dd = pderiv(&dpoly);
        p = padd(&pmul(&pderiv(&p), &dpoly), &pscale(&pmul(&p, &dd), &-GaussianRational::from_i64((d + i) as i64)));
    }
    out
}

fn to_pair(v: &GaussianRational) -> (f64, f64) {
    let c = v.to_c64();
    (c.re, c.im)
}

#[test]
fn identity_example_exact() {
    let psi2 = PowerSeries::new(vec![gaussian(1, 1, 0, 1), gaussian(1, 1, 0, 1)]).unwrap();
    let u = gaussian(1, 1, 0, 1);
    let a = gaussian(2, 5, 0, 1);
    let phi = MobiusParams::new(u.clone(), a.clone()).unwrap();
    let f = BivariatePoly::from_fn(2, |p, q| if p == 1 && q == 2 { GaussianRational::one() } else { GaussianRational::zero() });
    let z = gaussian(1, 10, 0, 1);
    let check = verify_jet_symbol_identity(&psi2, &phi, &f, 2, &z, 0.0).unwrap();
    assert!(check.exact && check.passed);
    assert_eq!(check.max_residual, 0.0);
    let oracle = oracle_lhs(psi2.coeffs(), &u, &a, &f, 2, &z);
    assert_eq!(check.lhs, oracle.iter().map(to_pair).collect::<Vec<_>>());
    let phi_z = phi.apply(&z).unwrap();
    assert_eq!(check.lhs[0], to_pair(&(psi2.eval(&z) * f.eval(&phi_z, &phi_z))));
}

#[test]
fn random_cases_match_the_symbolic_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    for _ in 0..20 {
        let case = random_exact_case(&mut rng, 4, 6).unwrap();
        let check = verify_jet_symbol_identity(&case.psi2, &case.phi, &case.f, case.n, &case.z, 0.0).unwrap();
        assert!(check.passed, "{check:?}");
        let oracle = oracle_lhs(case.psi2.coeffs(), &case.phi.rotation, &case.phi.a, &case.f, case.n, &case.z);
        assert_eq!(check.lhs, oracle.iter().map(to_pair).collect::<Vec<_>>());
    }
}

#[test]
fn perturbation_is_detected() {
    let ok = run_identity_suite(5, 42, 4, 6, false).unwrap();
    assert!(ok.iter().all(|c| c.passed));
    let bad = run_identity_suite(5, 42, 4, 6, true).unwrap();
    assert!(!bad[0].passed);
    assert!(bad[1..].iter().all(|c| c.passed));
}

#[test]
fn float_backend_agrees() {
    let psi2 = PowerSeries::new(vec![c(1.0, 0.5), c(-0.3, 0.0), c(0.2, 0.2)]).unwrap();
    let phi = MobiusMap::new(2.0, c(0.3, -0.6)).unwrap().params();
    let f = BivariatePoly::from_fn(4, |p, q| c((p as f64 - q as f64) / 3.0, (p * q) as f64 / 7.0));
    let check = verify_jet_symbol_identity(&psi2, &phi, &f, 5, &c(0.1, 0.4), 1e-9).unwrap();
    assert!(!check.exact && check.passed, "{}", check.max_residual);
}

#[test]
fn identity_limits() {
    let psi2 = PowerSeries::new(vec![c(1.0, 0.0)]).unwrap();
    let phi = MobiusMap::identity().params();
    let f = BivariatePoly::from_fn(9, |_, _| c(1.0, 0.0));
    assert!(verify_jet_symbol_identity(&psi2, &phi, &f, 2, &c(0.0, 0.0), 1e-9).is_err());
    let f = BivariatePoly::from_fn(2, |_, _| c(1.0, 0.0));
    assert!(verify_jet_symbol_identity(&psi2, &phi, &f, 7, &c(0.0, 0.0), 1e-9).is_err());
    assert!(BivariatePoly::new(2, vec![c(0.0, 0.0); 8]).is_err());
}

#[test]
fn norm_probe_examples() {
    let h = DiagonalKernel::power(1.0).unwrap();
    let k2 = DiagonalKernel::power(2.0).unwrap();
    let one = PowerSeries::new(vec![c(1.0, 0.0)]).unwrap();
    let p = jet_norm_inequality_probe(&one, &one, &MobiusMap::identity(), 0, &h, &k2, 64).unwrap();
    assert!((p.lhs_lower - 1.0).abs() < 1e-9 && (p.rhs_product - 1.0).abs() < 1e-9 && p.holds);
    let p = jet_norm_inequality_probe(&one, &one, &MobiusMap::rotation(1.0).unwrap(), 0, &h, &h, 64).unwrap();
    assert!((p.lhs_lower - 1.0).abs() < 1e-9 && p.holds);
    assert!(!p.is_certificate);
    let z = PowerSeries::monomial(1, 2).unwrap();
    let p = jet_norm_inequality_probe(&one, &z, &MobiusMap::new(0.0, c(0.5, 0.0)).unwrap(), 1, &h, &k2, 256).unwrap();
    assert!(p.holds, "{p:?}");
    assert!(p.lhs_lower > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn exact_identity_holds(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = random_exact_case(&mut rng, 4, 6).unwrap();
        let check = verify_jet_symbol_identity(&case.psi2, &case.phi, &case.f, case.n, &case.z, 0.0).unwrap();
        prop_assert!(check.passed);
        prop_assert_eq!(check.max_residual, 0.0);
    }

    #[test]
    fn jet_kernel_hermitian(zr in 0.0f64..0.85, za in 0.0f64..std::f64::consts::TAU, wr in 0.0f64..0.85, wa in 0.0f64..std::f64::consts::TAU, n in 0usize..4) {
        let k1 = DiagonalKernel::power(2.0).unwrap();
        let k2 = DiagonalKernel::gamma(0.5).unwrap();
        let z = Complex64::from_polar(zr, za);
        let w = Complex64::from_polar(wr, wa);
        let a = jet_kernel(&k1, &k2, n, z, w, 1e-15).unwrap().value;
        let b = jet_kernel(&k1, &k2, n, w, z, 1e-15).unwrap().value;
        let scale = a.iter().map(|v| v.norm()).fold(1.0, f64::max);
        prop_assert!((a - b.adjoint()).iter().all(|v| v.norm() < 1e-12 * scale));
    }
}
