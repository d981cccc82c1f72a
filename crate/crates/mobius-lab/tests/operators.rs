use mobius_lab::kernels::DiagonalKernel;
use mobius_lab::mobius::MobiusMap;
use mobius_lab::operators::*;
use mobius_lab::series::{cauchy_product, PowerSeries};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn one(n: usize) -> PowerSeries {
    PowerSeries::constant(c(1.0, 0.0), n).unwrap()
}

fn z_series(n: usize) -> PowerSeries {
    PowerSeries::monomial(1, n).unwrap()
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn identity(n: usize) -> DMatrix<Complex64> {
    DMatrix::identity(n, n)
}

/// Function value Σ_m v_m √b_m z^m of a coefficient vector in the
/// orthonormal monomial basis.
fn eval_vector(k: &DiagonalKernel, v: &[Complex64], z: Complex64) -> Complex64 {
    v.iter().enumerate().rev().fold(c(0.0, 0.0), |acc, (m, vm)| acc * z + vm * k.coefficient(m).sqrt())
}

fn sample_disc(radius: f64) -> Vec<Complex64> {
    (0..12).map(|k| Complex64::from_polar(radius * (0.3 + 0.06 * k as f64), 0.9 * k as f64)).collect()
}

#[test]
fn shift_weights_on_named_kernels() {
    let hardy = shift_matrix(&DiagonalKernel::power(1.0).unwrap(), 16).unwrap();
    for n in 0..15 {
        assert!((hardy.get(n + 1, n) - c(1.0, 0.0)).norm() < 1e-15);
    }
    assert_eq!(hardy.exactness(), 15);
    let gamma = 0.7;
    let kg = shift_matrix(&DiagonalKernel::gamma(gamma).unwrap(), 16).unwrap();
    for n in 0..15 {
        let w = ((n as f64 + 1.0) / (n as f64 + 2.0)).powf(gamma / 2.0);
        assert!((kg.get(n + 1, n).re - w).abs() < 1e-14);
    }
    let d = shift_matrix(&DiagonalKernel::dirichlet(), 16).unwrap();
    assert!((d.get(1, 0).re - 2f64.sqrt()).abs() < 1e-15);
    for n in 0..15 {
        let w = ((n as f64 + 2.0) / (n as f64 + 1.0)).sqrt();
        assert!((d.get(n + 1, n).re - w).abs() < 1e-14);
    }
    let total: f64 = (0..16).flat_map(|m| (0..16).map(move |n| (m, n))).filter(|(m, n)| *m != n + 1).map(|(m, n)| d.get(m, n).norm()).sum();
    assert_eq!(total, 0.0);
}

#[test]
fn multiplication_examples() {
    let k2 = DiagonalKernel::power(2.0).unwrap();
    let id = multiplication_matrix(&k2, &k2, &one(32), 32).unwrap();
    assert!(max_abs(&(id.matrix() - identity(32))) < 1e-15);

    let h = DiagonalKernel::power(1.0).unwrap();
    let mz = multiplication_matrix(&h, &h, &z_series(32), 32).unwrap();
    let s = shift_matrix(&h, 32).unwrap();
    assert!(max_abs(&(mz.matrix() - s.matrix())) < 1e-15);

    let phi = MobiusMap::new(0.0, c(0.5, 0.0)).unwrap();
    let n = 128;
    let m = multiplication_matrix(&k2, &k2, &phi.taylor_coefficients(n).unwrap(), n).unwrap();
    let col0: Vec<Complex64> = m.matrix().column(0).iter().cloned().collect();
    for z in sample_disc(0.5) {
        let got = eval_vector(&k2, &col0, z);
        assert!((got - phi.apply(z).unwrap()).norm() < 1e-12, "{z}");
    }
}

#[test]
fn multiplication_rejects_short_symbols() {
    let h = DiagonalKernel::power(1.0).unwrap();
    assert!(multiplication_matrix(&h, &h, &one(8), 16).is_err());
}

#[test]
fn composition_examples() {
    let h = DiagonalKernel::power(1.0).unwrap();
    let id = composition_matrix(&h, &h, &MobiusMap::identity(), 24).unwrap();
    assert!(max_abs(&(id.matrix() - identity(24))) < 1e-15);

    let theta = 0.8;
    let rot = composition_matrix(&h, &h, &MobiusMap::rotation(theta).unwrap(), 24).unwrap();
    let diag = DMatrix::from_fn(24, 24, |m, n| if m == n { Complex64::from_polar(1.0, theta * n as f64) } else { c(0.0, 0.0) });
    assert!(max_abs(&(rot.matrix() - diag)) < 1e-13);

    let phi = MobiusMap::new(0.0, c(0.5, 0.0)).unwrap();
    let cphi = composition_matrix(&h, &h, &phi, 256).unwrap();
    let mut f = vec![c(0.0, 0.0); 256];
    f[3] = c(1.0, 0.0);
    let g = cphi.apply(&f);
    for z in sample_disc(0.5) {
        let want = phi.apply(z).unwrap().powu(3);
        assert!((eval_vector(&h, &g, z) - want).norm() < 1e-10);
    }
}

#[test]
fn composition_columns_match_series_powers() {
    let phi = MobiusMap::new(1.1, c(0.3, -0.4)).unwrap();
    let taylor = phi.taylor_coefficients(40).unwrap();
    let cols = composition_columns(&phi, 12, 40);
    for (k, col) in cols.iter().enumerate() {
        let p = mobius_lab::series::series_power(&taylor, k);
        for (x, y) in col.iter().zip(p.coeffs()) {
            assert!((x - y).norm() < 1e-12);
        }
    }
}

#[test]
fn weighted_composition_examples() {
    let k = DiagonalKernel::power(1.5).unwrap();
    let n = 64;
    let phi = MobiusMap::new(0.4, c(0.2, 0.1)).unwrap();
    let psi = PowerSeries::from_fn(n, |j| c(1.0 / (j + 1) as f64, 0.0)).unwrap();
    let w1 = weighted_composition(&k, &k, &one(n), &phi, n).unwrap();
    let cphi = composition_matrix(&k, &k, &phi, n).unwrap();
    assert!(max_abs(&(w1.matrix() - cphi.matrix())) < 1e-14);
    let w2 = weighted_composition(&k, &k, &psi, &MobiusMap::identity(), n).unwrap();
    let mpsi = multiplication_matrix(&k, &k, &psi, n).unwrap();
    assert!(max_abs(&(w2.matrix() - mpsi.matrix())) < 1e-14);
}

#[test]
fn weighted_composition_adjoint_moves_kernel_functions() {
    let k = DiagonalKernel::power(1.0).unwrap();
    let n = 512;
    let w = c(0.4, 0.2);
    let phi = MobiusMap::new(0.3, c(0.0, 0.4)).unwrap();
    let psi = PowerSeries::new(vec![c(1.0, 0.0), c(0.5, -0.25), c(0.0, 0.125)]).unwrap().padded(n);
    let t = weighted_composition(&k, &k, &psi, &phi, n).unwrap();
    let kvec = |p: Complex64| -> Vec<Complex64> { (0..n).map(|m| p.conj().powu(m as u32) * k.coefficient(m).sqrt()).collect() };
    let got = t.apply_adjoint(&kvec(w));
    let scale = psi.eval(&w).conj();
    let want: Vec<Complex64> = kvec(phi.apply(w).unwrap()).into_iter().map(|v| v * scale).collect();
    let err = got.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-9, "{err}");
}

#[test]
fn functional_calculus_examples() {
    let k = DiagonalKernel::gamma(0.5).unwrap();
    let n = 32;
    let id = functional_calculus_mz(&k, &MobiusMap::identity(), n).unwrap();
    let s = shift_matrix(&k, n).unwrap();
    assert!(max_abs(&(id.matrix() - s.matrix())) < 1e-15);
    let theta = 2.2;
    let rot = functional_calculus_mz(&k, &MobiusMap::rotation(theta).unwrap(), n).unwrap();
    assert!(max_abs(&(rot.matrix() - s.matrix() * Complex64::from_polar(1.0, theta))) < 1e-14);

    let h = DiagonalKernel::power(1.0).unwrap();
    for a in [0.1, 0.5, 0.9, 0.99] {
        let t = functional_calculus_mz(&h, &MobiusMap::new(0.0, c(a, 0.0)).unwrap(), 256).unwrap();
        assert!(spectral_norm(t.matrix()) <= 1.0 + 1e-9, "a = {a}");
    }
}

#[test]
fn norm_examples() {
    let h = DiagonalKernel::power(1.0).unwrap();
    let id = multiplication_matrix(&h, &h, &one(40), 40).unwrap();
    assert!((operator_norm_lower(&id, 1e-10).value - 1.0).abs() < 1e-12);
    let s = shift_matrix(&h, 40).unwrap();
    assert!((operator_norm_lower(&s, 1e-10).value - 1.0).abs() < 1e-12);
    let d = shift_matrix(&DiagonalKernel::dirichlet(), 64).unwrap();
    let est = operator_norm_lower(&d, 1e-10);
    assert!(est.converged);
    assert!((est.value - 2f64.sqrt()).abs() < 1e-8, "{}", est.value);
}

#[test]
fn norm_estimate_is_bounded_by_svd_and_deterministic() {
    let k = DiagonalKernel::dirichlet();
    let t = functional_calculus_mz(&k, &MobiusMap::new(0.7, c(0.6, -0.2)).unwrap(), 96).unwrap();
    let est = operator_norm_lower(&t, 1e-10);
    let exact = spectral_norm(t.matrix());
    assert!(est.converged);
    assert!(est.value <= exact * (1.0 + 1e-12));
    assert!((est.value - exact).abs() < 1e-6 * exact, "{} vs {exact}", est.value);
    assert_eq!(est, operator_norm_lower(&t, 1e-10));
}

#[test]
fn clustered_spectrum_is_flagged_but_still_a_lower_bound() {
    let k = DiagonalKernel::power(2.0).unwrap();
    let t = functional_calculus_mz(&k, &MobiusMap::new(0.7, c(0.6, -0.2)).unwrap(), 96).unwrap();
    let est = operator_norm_lower(&t, 1e-10);
    assert!(!est.converged);
    assert_eq!(est.iterations, NORM_MAX_ITER);
    assert!(est.value <= spectral_norm(t.matrix()) * (1.0 + 1e-12));
}

#[test]
fn power_norm_examples() {
    let h = DiagonalKernel::power(1.0).unwrap();
    for n in [1, 5, 50] {
        let r = power_norm(&h, n, 200).unwrap();
        assert_eq!(r.norm, 1.0);
        assert_eq!(r.monotonicity, Monotonicity::Constant);
    }
    let d = DiagonalKernel::dirichlet();
    for n in [1, 7, 40] {
        let r = power_norm(&d, n, 300).unwrap();
        assert!((r.norm_sq - (n as f64 + 1.0)).abs() < 1e-12 * n as f64);
        assert_eq!(r.argmax_j, 0);
        assert_eq!(r.monotonicity, Monotonicity::Decreasing);
    }
    let half = DiagonalKernel::power(0.5).unwrap();
    let ns: Vec<f64> = (0..=20).map(|k| 100.0 * 100f64.powf(k as f64 / 20.0)).collect();
    let ln_n: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let ln_v: Vec<f64> = ns.iter().map(|n| power_norm(&half, n.round() as usize, 100).unwrap().norm_sq.ln()).collect();
    let slope = mobius_lab::trend::linear_slope(&ln_n, &ln_v);
    assert!((0.45..=0.55).contains(&slope), "{slope}");
    assert!(power_norm(&h, 0, 10).is_err());
}

#[test]
fn power_norm_is_submultiplicative() {
    let kernels = [
        DiagonalKernel::power(0.5).unwrap(),
        DiagonalKernel::power(1.0).unwrap(),
        DiagonalKernel::power(2.5).unwrap(),
        DiagonalKernel::gamma(0.5).unwrap(),
        DiagonalKernel::gamma(2.0).unwrap(),
        DiagonalKernel::dirichlet(),
        DiagonalKernel::product(vec![DiagonalKernel::power(0.5).unwrap(), DiagonalKernel::gamma(1.0).unwrap()]).unwrap(),
    ];
    for k in &kernels {
        // b_j/b_{j+m+n} = (b_j/b_{j+m})(b_{j+m}/b_{j+m+n}): the window of the
        // product at J is dominated by the factor windows at J + 50.
        let j_max = 400;
        let norms: Vec<f64> = (1..=50).map(|n| power_norm(k, n, j_max + 50).unwrap().norm).collect();
        for m in 1..=50 {
            for n in 1..=50 {
                let lhs = power_norm(k, m + n, j_max).unwrap().norm;
                assert!(lhs <= norms[m - 1] * norms[n - 1] + 1e-12, "{} m={m} n={n}", k.label());
            }
        }
    }
}

#[test]
fn differential_examples() {
    let d = differential_matrix(1.5, 3.5, 32).unwrap();
    assert!(d.matrix().column(0).iter().all(|v| *v == c(0.0, 0.0)));
    for lambda in [0.5, 1.0, 2.0] {
        let w = differential_weights(lambda, lambda + 2.0, 200).unwrap();
        for n in 0..199 {
            let want = (n as f64 + 1.0) * lambda * (lambda + 1.0) / (lambda + n as f64 + 1.0);
            assert!((w[n] * w[n] - want).abs() < 1e-12 * want);
            assert!(w[n + 1] > w[n]);
        }
    }
    let w = differential_weights(1.0, 2.0, 1000).unwrap();
    let ns: Vec<f64> = (500..1000).map(|n| (n as f64).ln()).collect();
    let ln_w: Vec<f64> = (500..1000).map(|n| w[n - 1].ln()).collect();
    assert!(mobius_lab::trend::linear_slope(&ns, &ln_w) > 0.4);
}

#[test]
fn differential_norm_sandwich() {
    for lambda in [0.5, 1.0, 3.0] {
        let target = lambda * (lambda + 1.0);
        let mut last = 0.0;
        for n in [16, 64, 256] {
            let d = differential_matrix(lambda, lambda + 2.0, n).unwrap();
            let v = operator_norm_lower(&d, 1e-10).value.powi(2);
            assert!(v >= lambda - 1e-12 && v <= target + 1e-9, "λ={lambda} N={n} v={v}");
            assert!(v >= last - 1e-9);
            last = v;
        }
        assert!(target - last < 0.02 * target, "λ={lambda} gap {}", target - last);
    }
}

#[test]
fn rosenblum_special_cases() {
    let n = 32;
    let k1 = DiagonalKernel::power(1.0).unwrap();
    let k3 = DiagonalKernel::power(3.0).unwrap();
    let zero = PowerSeries::zeros(n).unwrap();
    let x = rosenblum_x(&zero, &one(n), &MobiusMap::identity(), &k1, &k1, n).unwrap();
    assert!(max_abs(&(x.matrix() - identity(n))) < 1e-14);
    let x = rosenblum_x(&one(n), &zero, &MobiusMap::identity(), &k1, &k3, n).unwrap();
    let d = differential_matrix(1.0, 3.0, n).unwrap();
    assert!(max_abs(&(x.matrix() - d.matrix())) < 1e-12);
}

#[test]
fn rosenblum_identity_holds_on_leading_block() {
    let n = 512;
    let k1 = DiagonalKernel::power(1.0).unwrap();
    let k2 = DiagonalKernel::power(4.0).unwrap();
    let phi = MobiusMap::new(0.0, c(0.5, 0.0)).unwrap();
    let x = rosenblum_x(&one(n), &PowerSeries::zeros(n).unwrap(), &phi, &k1, &k2, n).unwrap();
    let a = functional_calculus_mz(&k1, &phi, n).unwrap();
    let b = shift_matrix(&k2, n).unwrap();
    let rhs = weighted_composition(&k1, &k2, &one(n), &phi.inverse(), n).unwrap();
    let lhs = x.compose(&a).unwrap().sub(&b.compose(&x).unwrap()).unwrap();
    let r = spectral_norm(&(lhs.block(n / 2) - rhs.block(n / 2)));
    assert!(r < 1e-8, "{r}");
}

#[test]
fn intertwining_examples() {
    let h = DiagonalKernel::power(1.0).unwrap();
    let n = 512;
    let i = multiplication_matrix(&h, &h, &one(n), n).unwrap();
    let mz = shift_matrix(&h, n).unwrap();
    let (ok, r) = verify_intertwining(&i, &mz, &mz, 256, 1e-12).unwrap();
    assert!(ok && r == 0.0);

    let phi = MobiusMap::new(0.0, c(0.5, 0.0)).unwrap();
    let x = composition_matrix(&h, &h, &phi.inverse(), n).unwrap();
    let a = functional_calculus_mz(&h, &phi, n).unwrap();
    let (ok, r) = verify_intertwining(&x, &a, &mz, 256, 1e-9).unwrap();
    assert!(ok, "{r}");

    let (ok, r) = verify_intertwining(&i, &mz, &mz.scale(c(2.0, 0.0)), 256, 1e-9).unwrap();
    assert!(!ok);
    assert!((r - spectral_norm(&mz.block(256))).abs() < 1e-12);
    assert!(verify_intertwining(&i, &mz, &mz, 300, 1e-9).is_err());
}

fn fb2_oracle(blk: &Fb2Block, phi: &MobiusMap, n: usize) -> DMatrix<Complex64> {
    let t = fb2_phi_of_t(blk, &MobiusMap::identity(), n).unwrap().assemble();
    let dim = 2 * n;
    let a = phi.a();
    let num = &t - DMatrix::identity(dim, dim) * a;
    let den = DMatrix::identity(dim, dim) - &t * a.conj();
    num * den.try_inverse().unwrap() * phi.rotation_factor()
}

#[test]
fn fb2_blocks_identity_and_rotation() {
    let n = 24;
    let blk = Fb2Block::new(1.0, 3.0, PowerSeries::new(vec![c(0.5, 0.0), c(0.0, 0.25)]).unwrap()).unwrap();
    let id = fb2_phi_of_t(&blk, &MobiusMap::identity(), n).unwrap();
    let k0 = DiagonalKernel::power(1.0).unwrap();
    let k1 = DiagonalKernel::power(3.0).unwrap();
    assert!(max_abs(&(id.top_left.matrix() - shift_matrix(&k0, n).unwrap().adjoint().matrix())) < 1e-15);
    assert!(max_abs(&(id.bottom_right.matrix() - shift_matrix(&k1, n).unwrap().adjoint().matrix())) < 1e-15);
    let s = multiplication_matrix(&k0, &k1, &blk.coupling.padded(n), n).unwrap().adjoint();
    assert!(max_abs(&(id.top_right.matrix() - s.matrix())) < 1e-15);

    let theta = 1.3;
    let rot = fb2_phi_of_t(&blk, &MobiusMap::rotation(theta).unwrap(), n).unwrap();
    let u = Complex64::from_polar(1.0, theta);
    assert!(max_abs(&(rot.top_left.matrix() - id.top_left.matrix() * u)) < 1e-14);
    assert!(max_abs(&(rot.top_right.matrix() - id.top_right.matrix() * u)) < 1e-14);
    assert!(max_abs(&(rot.bottom_right.matrix() - id.bottom_right.matrix() * u)) < 1e-14);
}

#[test]
fn fb2_blocks_match_resolvent_oracle() {
    let n = 48;
    let blk = Fb2Block::new(0.5, 2.5, PowerSeries::new(vec![c(1.0, 0.0), c(-0.5, 0.3), c(0.2, 0.0)]).unwrap()).unwrap();
    for phi in [MobiusMap::new(0.4, c(0.3, -0.2)).unwrap(), MobiusMap::new(5.0, c(-0.6, 0.1)).unwrap()] {
        let got = fb2_phi_of_t(&blk, &phi, n).unwrap();
        assert_eq!(max_abs(got.bottom_left.matrix()), 0.0);
        let err = max_abs(&(got.assemble() - fb2_oracle(&blk, &phi, n)));
        assert!(err < 1e-10, "{err}");
    }
    let q = Fb2Block::quasi_homogeneous(1.0, 3.5, c(0.7, 0.2)).unwrap();
    assert!((q.lambda_gap() - 2.5).abs() < 1e-15);
    let got = fb2_phi_of_t(&q, &MobiusMap::new(0.0, c(0.5, 0.0)).unwrap(), n).unwrap();
    assert!(max_abs(&(got.assemble() - fb2_oracle(&q, &MobiusMap::new(0.0, c(0.5, 0.0)).unwrap(), n))) < 1e-10);
    assert!(Fb2Block::quasi_homogeneous(3.0, 1.0, c(1.0, 0.0)).is_err());
}

#[test]
fn dump_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("op.bin");
    let k = DiagonalKernel::gamma(-0.5).unwrap();
    let t = composition_matrix(&k, &DiagonalKernel::power(2.0).unwrap(), &MobiusMap::new(0.2, c(0.1, 0.3)).unwrap(), 9).unwrap();
    t.write_dump(&path).unwrap();
    let back = read_dump(&path, 9, 9).unwrap();
    assert_eq!(&back, t.matrix());
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("op.bin.json")).unwrap()).unwrap();
    assert_eq!(side["N_dom"], 9);
    assert_eq!(side["exactness"], 9);
    assert_eq!(DiagonalKernel::from_json(&side["domain_spec"]).unwrap(), k);
}

#[test]
fn fast_and_dense_matvecs_agree() {
    let k = DiagonalKernel::power(0.75).unwrap();
    let t = functional_calculus_mz(&k, &MobiusMap::new(2.0, c(0.2, 0.7)).unwrap(), 70).unwrap();
    let x: Vec<Complex64> = (0..70).map(|j| c((j as f64).sin(), (j as f64 * 0.3).cos())).collect();
    let e = t.apply(&x).iter().zip(t.apply_dense(&x)).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(e < 1e-12);
    let ta = t.adjoint();
    let e = ta.apply(&x).iter().zip(ta.apply_dense(&x)).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(e < 1e-12);
}

#[test]
fn norm_lower_bound_is_monotone_in_truncation() {
    let cases = [
        (DiagonalKernel::power(2.0).unwrap(), MobiusMap::new(0.0, c(0.5, 0.0)).unwrap()),
        (DiagonalKernel::dirichlet(), MobiusMap::new(1.0, c(0.0, 0.7)).unwrap()),
        (DiagonalKernel::power(0.5).unwrap(), MobiusMap::new(3.0, c(-0.3, 0.3)).unwrap()),
    ];
    for (k, phi) in &cases {
        let mut last = 0.0;
        for n in [64, 128, 256, 512] {
            let v = operator_norm_lower(&functional_calculus_mz(k, phi, n).unwrap(), 1e-10).value;
            // Nested compressions: nondecreasing up to the last few ulps.
            assert!(v >= last * (1.0 - 1e-14), "{} N={n}: {v} < {last}", k.label());
            last = v;
        }
    }
}

#[test]
fn hardy_calculus_is_contractive_on_grid() {
    let h = DiagonalKernel::power(1.0).unwrap();
    for i in 0..5 {
        for j in 0..10 {
            let theta = i as f64 * 1.2;
            let a = Complex64::from_polar(0.1 + 0.088 * j as f64, 0.7 * (i + j) as f64);
            let t = functional_calculus_mz(&h, &MobiusMap::new(theta, a).unwrap(), 128).unwrap();
            assert!(operator_norm_lower(&t, 1e-10).value <= 1.0 + 1e-9);
        }
    }
}

#[test]
fn integer_symbols_multiply_exactly_on_hardy() {
    let h = DiagonalKernel::power(1.0).unwrap();
    let n = 32;
    let p1 = PowerSeries::from_fn(n, |j| c((j % 3) as f64 - 1.0, (j % 2) as f64)).unwrap();
    let p2 = PowerSeries::from_fn(n, |j| c(if j < 4 { 2.0 } else { 0.0 }, -((j % 5) as f64))).unwrap();
    let lhs = multiplication_matrix(&h, &h, &p1, n).unwrap().compose(&multiplication_matrix(&h, &h, &p2, n).unwrap()).unwrap();
    let rhs = multiplication_matrix(&h, &h, &cauchy_product(&p1, &p2), n).unwrap();
    assert_eq!(lhs.block(n / 2), rhs.block(n / 2));
}

fn coeff() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| c(re, im))
}

fn mobius(max_a: f64) -> impl Strategy<Value = MobiusMap> {
    (0.0f64..std::f64::consts::TAU, 0.0f64..max_a, 0.0f64..std::f64::consts::TAU)
        .prop_map(|(t, r, arg)| MobiusMap::new(t, Complex64::from_polar(r, arg)).unwrap())
}

fn kernel() -> impl Strategy<Value = DiagonalKernel> {
    prop_oneof![
        (0.2f64..4.0).prop_map(|l| DiagonalKernel::power(l).unwrap()),
        (-1.0f64..2.0).prop_map(|g| DiagonalKernel::gamma(g).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn multiplication_is_a_homomorphism(k in kernel(), s1 in prop::collection::vec(coeff(), 64), s2 in prop::collection::vec(coeff(), 64)) {
        let n = 64;
        let p1 = PowerSeries::new(s1).unwrap();
        let p2 = PowerSeries::new(s2).unwrap();
        let lhs = multiplication_matrix(&k, &k, &p1, n).unwrap().compose(&multiplication_matrix(&k, &k, &p2, n).unwrap()).unwrap();
        let rhs = multiplication_matrix(&k, &k, &cauchy_product(&p1, &p2), n).unwrap();
        let scale = 1.0 + max_abs(&rhs.block(n / 2));
        prop_assert!(max_abs(&(lhs.block(n / 2) - rhs.block(n / 2))) < 1e-12 * scale);
    }

    #[test]
    fn composition_reverses_order(k in kernel(), f1 in mobius(0.25), f2 in mobius(0.25)) {
        let n = 128;
        let c1 = composition_matrix(&k, &k, &f1, n).unwrap();
        let c2 = composition_matrix(&k, &k, &f2, n).unwrap();
        let both = composition_matrix(&k, &k, &f2.compose(&f1), n).unwrap();
        let prod = c1.compose(&c2).unwrap();
        prop_assert!(prod.exactness() >= n / 2);
        let err = max_abs(&(prod.block(n / 2) - both.block(n / 2)));
        prop_assert!(err < 1e-9, "{}", err);
    }

    #[test]
    fn calculus_blocks_agree_with_resolvent(phi in mobius(0.8), l0 in 0.3f64..2.0, gap in 0.0f64..3.0, m01 in coeff()) {
        prop_assume!(m01.norm() > 1e-3);
        let blk = Fb2Block::quasi_homogeneous(l0, l0 + gap, m01).unwrap();
        let n = 20;
        let got = fb2_phi_of_t(&blk, &phi, n).unwrap().assemble();
        let want = fb2_oracle(&blk, &phi, n);
        prop_assert!(max_abs(&(got - &want)) < 1e-9 * (1.0 + max_abs(&want)));
    }
}
