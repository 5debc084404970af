use std::f64::consts::PI;

use displab_core::resolvent::{
    calibrate_envelope, check_envelope, check_scaling, easylem_bound, easylem_integral, free_kernel,
    im_kernel, im_kernel_bessel_constant, kernel_negative_energy, sphere_area, Dimension, EasylemParams,
    Sign, SpectralPoint, SymbolEnvelope,
};
use displab_core::specfun::{besselj, Order};
use displab_core::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dim(n: u32) -> Dimension {
    Dimension::new(n).unwrap()
}

fn kernel(sign: Sign, n: u32, k: f64, r: f64) -> Complex64 {
    free_kernel(sign, dim(n), SpectralPoint::from_wavenumber(k).unwrap(), r).unwrap()
}

#[test]
fn three_dimensional_kernel() {
    let v = kernel(Sign::Plus, 3, 1.0, 1.0);
    let want = Complex64::from_polar(1.0, 1.0) / (4.0 * PI);
    assert!((v - want).norm() < 1e-15);
    assert!((v.re - 0.04300).abs() < 1e-5 && (v.im - 0.06696).abs() < 1e-5);
    assert_eq!(kernel(Sign::Minus, 3, 1.0, 1.0), v.conj());
}

#[test]
fn general_formula_agrees_with_elementary_odd_kernels() {
    // n = 5: e^{ikr}(1 − ikr)/(8π² r³)
    for (k, r) in [(1.0, 1.0), (0.3, 0.2), (2.0, 7.0), (5.0, 0.01)] {
        let kr: f64 = k * r;
        let want = Complex64::from_polar(1.0, kr) * Complex64::new(1.0, -kr) / (8.0 * PI * PI * r.powi(3));
        let got = kernel(Sign::Plus, 5, k, r);
        assert!((got - want).norm() <= 1e-12 * want.norm(), "k={k} r={r}: {got} vs {want}");
    }
}

#[test]
fn five_dimensional_kernel_from_radial_derivative() {
    let h = 1e-3;
    let f = |r: f64| kernel(Sign::Plus, 3, 1.0, r);
    let d = (f(1.0 - 2.0 * h) - 8.0 * f(1.0 - h) + 8.0 * f(1.0 + h) - f(1.0 + 2.0 * h)) / (12.0 * h);
    let want = -d / (2.0 * PI);
    assert!((kernel(Sign::Plus, 5, 1.0, 1.0) - want).norm() < 1e-10);
}

#[test]
fn domain_errors() {
    let p = SpectralPoint::from_wavenumber(1.0).unwrap();
    assert!(free_kernel(Sign::Plus, dim(3), p, 0.0).is_err());
    assert!(free_kernel(Sign::Plus, dim(3), p, -1.0).is_err());
    let zero = SpectralPoint::from_energy(0.0).unwrap();
    assert!(free_kernel(Sign::Plus, dim(2), zero, 1.0).is_err());
    // k → 0 limit for n = 3 is 1/(4πr)
    let v = free_kernel(Sign::Plus, dim(3), zero, 2.0).unwrap();
    assert!((v.re - 1.0 / (8.0 * PI)).abs() < 1e-15 && v.im == 0.0);
    assert!(Dimension::new(1).is_err());
    assert!(SpectralPoint::from_energy(-1.0).is_err());
}

#[test]
fn spectral_point_parametrizations_agree() {
    for mu in [0.0, 0.25, 2.0, 1e6] {
        let p = SpectralPoint::from_energy(mu).unwrap();
        assert!((p.k() * p.k() - mu).abs() <= 1e-15 * mu.max(1.0));
    }
}

#[test]
fn recurrence_in_dimension() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let k = rng.random_range(0.5..5.0);
        let r = rng.random_range(0.5..5.0);
        for n in 2..=6 {
            let h = 1e-3;
            let f = |x: f64| kernel(Sign::Plus, n, k, x);
            let d = (f(r - 2.0 * h) - 8.0 * f(r - h) + 8.0 * f(r + h) - f(r + 2.0 * h)) / (12.0 * h);
            let raised = -d / (2.0 * PI * r);
            let direct = kernel(Sign::Plus, n + 2, k, r);
            assert!(
                (raised - direct).norm() <= 1e-6 * direct.norm().max(1e-3),
                "n={n} k={k} r={r}: {raised} vs {direct}"
            );
        }
    }
}

#[test]
fn imaginary_part_examples() {
    let p = SpectralPoint::from_wavenumber(1.0).unwrap();
    let v = im_kernel(dim(3), p, 1.0).unwrap();
    assert!((v - 1f64.sin() / (4.0 * PI)).abs() < 1e-15);
    assert!((v - 0.06696).abs() < 1e-5);
    let at_zero = im_kernel(dim(3), p, 0.0).unwrap();
    assert!((at_zero - 1.0 / (4.0 * PI)).abs() < 1e-15);
    let near = im_kernel(dim(3), p, 1e-8).unwrap();
    assert!((near - at_zero).abs() < 1e-12);
}

#[test]
fn imaginary_part_is_proportional_to_bessel_form() {
    let n = dim(4);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ratios = Vec::new();
    for _ in 0..20 {
        let k: f64 = rng.random_range(0.2..6.0);
        let r: f64 = rng.random_range(0.1..6.0);
        let kr = k * r;
        let bessel = k.powi(2) * kr.powf(-1.0) * besselj(Order::integer(1), kr).unwrap();
        let v = im_kernel(n, SpectralPoint::from_wavenumber(k).unwrap(), r).unwrap();
        ratios.push(v / bessel);
    }
    let c = ratios[0];
    for q in &ratios {
        assert!((q - c).abs() <= 1e-12 * c.abs(), "{q} vs {c}");
    }
    assert!((c - im_kernel_bessel_constant(n)).abs() <= 1e-14);
    assert!((c - 1.0 / (8.0 * PI)).abs() <= 1e-15);
}

#[test]
fn imaginary_part_matches_kernel_and_stays_bounded() {
    for n in 2..=7 {
        for (k, r) in [(1.0, 0.5), (3.0, 2.0), (0.7, 9.0)] {
            let p = SpectralPoint::from_wavenumber(k).unwrap();
            let im = im_kernel(dim(n), p, r).unwrap();
            let full = kernel(Sign::Plus, n, k, r).im;
            assert!((im - full).abs() <= 1e-10 * full.abs().max(1e-6), "n={n} k={k} r={r}");
        }
        let p = SpectralPoint::from_wavenumber(2.0).unwrap();
        let limit = im_kernel(dim(n), p, 0.0).unwrap();
        assert!(limit.is_finite() && limit > 0.0);
        for r in [1e-6, 1e-3, 1e-2] {
            let v = im_kernel(dim(n), p, r).unwrap();
            assert!((v - limit).abs() <= 1e-3 * limit, "n={n} r={r}");
        }
    }
}

#[test]
fn negative_energy_kernel_decays() {
    let v = kernel_negative_energy(3, 2.0, 1.5);
    assert!((v - (-3.0f64).exp() / (6.0 * PI)).abs() < 1e-15);
    // n = 5: e^{−κr}(1 + κr)/(8π² r³)
    let (kappa, r) = (1.3f64, 0.8f64);
    let want = (-kappa * r).exp() * (1.0 + kappa * r) / (8.0 * PI * PI * r.powi(3));
    assert!((kernel_negative_energy(5, kappa, r) - want).abs() <= 1e-10 * want);
}

#[test]
fn scaling_examples() {
    assert!(check_scaling(dim(3), 2.0, 1.0).unwrap() < 1e-12);
    assert!(check_scaling(dim(4), 0.5, 3.0).unwrap() < 1e-10);
    for n in 2..=6 {
        assert_eq!(check_scaling(dim(n), 1.0, 2.5).unwrap(), 0.0);
    }
    assert!(check_scaling(dim(3), 0.0, 1.0).is_err());
}

#[test]
fn scaling_identity_on_grid() {
    for n in 2..=6 {
        for i in 0..10 {
            let lam = 0.25 * 16f64.powf(i as f64 / 9.0);
            for j in 0..10 {
                let r = 0.5 + 7.5 * j as f64 / 9.0;
                let e = check_scaling(dim(n), lam, r).unwrap();
                assert!(e <= 1e-10, "n={n} λ={lam} r={r}: {e}");
            }
        }
    }
}

fn envelope_samples(lo: f64, hi: f64, count: usize) -> Vec<(f64, f64)> {
    (0..count)
        .map(|i| {
            let x = lo * (hi / lo).powf(i as f64 / (count - 1) as f64);
            let k = 0.5 + (i % 7) as f64;
            (k, x / k)
        })
        .collect()
}

#[test]
fn envelope_examples() {
    let unit = |n| SymbolEnvelope::free_kernel_class(dim(n), 1.0).unwrap();
    let rep = check_envelope(dim(3), &unit(3), &envelope_samples(1e-3, 1e3, 60)).unwrap();
    assert!((rep.max_ratio - 1.0 / (4.0 * PI)).abs() < 1e-14);
    assert!(rep.within);

    let rep = check_envelope(dim(5), &unit(5), &envelope_samples(1e-4, 1.0, 60)).unwrap();
    assert!(rep.max_ratio.is_finite() && rep.max_ratio < 1.0);

    let v = kernel(Sign::Plus, 4, 2.0, 50.0).norm() * 50f64.powi(2);
    let ratio = v / unit(4).eval(100.0, 0);
    assert!(ratio / 100f64.sqrt() < 1.0);

    assert!(check_envelope(dim(4), &unit(4), &[(1.0, 2000.0)]).is_err());
    assert!(SymbolEnvelope::new(0.0, 0.5, vec![]).is_err());
    assert!(SymbolEnvelope::new(0.0, 0.5, vec![-1.0]).is_err());
}

#[test]
fn calibrated_envelope_covers_fresh_samples() {
    for n in 2..=6 {
        let env = calibrate_envelope(dim(n), &envelope_samples(1e-3, 1e3, 80)).unwrap();
        let fresh: Vec<_> = envelope_samples(1.3e-3, 8e2, 57);
        let rep = check_envelope(dim(n), &env, &fresh).unwrap();
        assert!(rep.within, "n={n}: {}", rep.max_ratio);
    }
}

#[test]
fn envelope_shape() {
    let env = SymbolEnvelope::new(-0.5, 0.5, vec![2.0, 3.0]).unwrap();
    assert!((env.eval(0.25, 0) - 4.0).abs() < 1e-15);
    assert!((env.eval(4.0, 0) - 4.0).abs() < 1e-15);
    assert!((env.eval(4.0, 1) - 3.0 * 4f64.powf(-0.5)).abs() < 1e-15);
    // indices past the table reuse the last constant
    assert!((env.eval(4.0, 3) - 3.0 * 4f64.powf(-2.5)).abs() < 1e-15);
}

#[test]
fn easylem_radial_case() {
    // x = 0: |S³| ∫ ρ (1+ρ²)^{−3} dρ = 2π² / 4
    let p = EasylemParams::new(dim(4), 6.0, 2.0).unwrap();
    let v = easylem_integral(&p, 0.0).unwrap();
    assert!((v - PI * PI / 2.0).abs() < 1e-7, "{v}");
}

#[test]
fn easylem_parameters_are_checked() {
    assert!(EasylemParams::new(dim(4), 2.0, 2.0).is_err());
    assert!(EasylemParams::new(dim(4), 6.0, 4.0).is_err());
    assert!(EasylemParams::new(dim(4), 6.0, -0.5).is_err());
    let p = EasylemParams::new(dim(4), 4.0, 2.0).unwrap();
    assert!(easylem_bound(&p, 1.0).is_err());
    assert!(easylem_integral(&p, -1.0).is_err());
}

fn max_ratio(p: &EasylemParams) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for i in 0..12 {
        let x = if i == 0 { 0.0 } else { 0.1 * 1000f64.powf((i - 1) as f64 / 10.0) };
        let q = easylem_integral(p, x).unwrap() / easylem_bound(p, x).unwrap();
        lo = lo.min(q);
        hi = hi.max(q);
    }
    (lo, hi)
}

#[test]
fn easylem_ratio_bounded_above_dimension() {
    let p = EasylemParams::new(dim(4), 5.0, 2.0).unwrap();
    let (lo, hi) = max_ratio(&p);
    assert!(hi.is_finite() && lo > 0.0);
    // the ratio tends to ∫⟨y⟩^{−5} = |S³|∫ρ³(1+ρ²)^{−5/2}dρ = 4π²/3 at large |x|
    assert!(hi / lo < 3.0, "{lo}..{hi}");
    let far = easylem_integral(&p, 100.0).unwrap() / easylem_bound(&p, 100.0).unwrap();
    assert!((far / (4.0 * PI * PI / 3.0) - 1.0).abs() < 0.05, "{far}");
}

#[test]
fn easylem_ratio_bounded_below_dimension() {
    let p = EasylemParams::new(dim(4), 3.0, 2.0).unwrap();
    let (lo, hi) = max_ratio(&p);
    assert!(hi.is_finite() && lo > 0.0);
    assert!(hi / lo < 5.0, "{lo}..{hi}");
}

#[test]
fn sphere_areas() {
    assert!((sphere_area(1) / (2.0 * PI) - 1.0).abs() < 1e-12);
    assert!((sphere_area(2) / (4.0 * PI) - 1.0).abs() < 1e-12);
    assert!((sphere_area(3) / (2.0 * PI * PI) - 1.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn boundary_values_are_conjugate(n in 2u32..9, k in 0.01f64..50.0, r in 0.01f64..50.0) {
        let plus = kernel(Sign::Plus, n, k, r);
        let minus = kernel(Sign::Minus, n, k, r);
        prop_assert!((minus - plus.conj()).norm() <= 1e-12 * plus.norm());
    }

    #[test]
    fn scaling_identity_holds(n in 2u32..7, lam in 0.25f64..4.0, r in 0.5f64..8.0) {
        prop_assert!(check_scaling(dim(n), lam, r).unwrap() <= 1e-10);
    }
}
