use std::f64::consts::PI;

use displab_core::counterexample::{
    a1_full, a1_main_term, calibrate_cn, ellipse_sum, fit_exponent, holder_norm_estimate,
    main_term_x1_integral, phi_profile, potential_norm, smooth_step, BumpPair, Bumps, Geometry,
    PotentialSpec, Scaled, Segment, SmoothShell, X1Rule, F_profile,
};
use displab_core::par::Exec;
use displab_core::resolvent::Dimension;
use displab_core::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn geometry(n: u32) -> Geometry {
    Geometry::new(Dimension::new(n).unwrap())
}

fn dyadic(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(-k)).collect()
}

#[test]
fn ellipse_sum_examples() {
    let g = geometry(4);
    assert_eq!(ellipse_sum(&g, &g.point(&[])), 2.0);
    let v = ellipse_sum(&g, &g.point(&[0.0, 3.9]));
    assert!((v - 2.0 * (1.0f64 + 3.9 * 3.9).sqrt()).abs() < 1e-14);
    assert!(v > 8.0 && (v - 8.053).abs() < 1e-3);
    assert!((ellipse_sum(&g, &g.point(&[4.0])) - 8.0).abs() < 1e-14);
}

#[test]
fn profile_examples() {
    assert_eq!(F_profile(-1.0), 0.0);
    assert_eq!(F_profile(0.0), 0.0);
    assert_eq!(F_profile(1.0), 1.0);
    assert_eq!(F_profile(0.6), 0.6);
    let q = F_profile(0.25);
    assert!(q > 0.0 && q < 0.25);
    assert!((phi_profile(7.0) - 1.0).abs() < 1e-15);
    assert_eq!(phi_profile(6.0), 0.0);
    assert_eq!(phi_profile(8.0), 0.0);
    assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
}

#[test]
fn potential_examples() {
    let g = geometry(5);
    // 49/(4t) = 20π makes the phase at S = 7 a multiple of 2π
    let t = 49.0 / (80.0 * PI);
    let spec = PotentialSpec::new(g.clone(), 0.5, t, 2.0).unwrap();
    let on_axis = g.point(&[3.5]);
    assert!((ellipse_sum(&g, &on_axis) - 7.0).abs() < 1e-15);
    let want = 2.0 * t.powf(0.5);
    assert!((spec.eval(&on_axis) - want).abs() < 1e-12 * want);
    assert_eq!(spec.eval(&g.point(&[2.5])), 0.0);

    // cos(S²/4t) = −0.3 at S = 7
    let phase = (-0.3f64).acos() + 2.0 * PI * 5.0;
    let spec = PotentialSpec::new(g.clone(), 0.5, 49.0 / (4.0 * phase), 1.0).unwrap();
    assert_eq!(spec.eval(&on_axis), 0.0);
}

#[test]
fn potential_parameters_are_checked() {
    assert!(PotentialSpec::new(geometry(3), 0.1, 0.5, 1.0).is_err());
    assert!(PotentialSpec::new(geometry(4), 0.5, 0.5, 1.0).is_err());
    assert!(PotentialSpec::new(geometry(5), 0.5, 1.5, 1.0).is_err());
    assert!(PotentialSpec::new(geometry(5), 0.5, 0.5, 0.0).is_err());
    assert!(PotentialSpec::new(geometry(5), 0.5, 0.5, 1.0).unwrap().with_cn(-1.0).is_err());
}

#[test]
fn potential_support_and_sign() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for n in [4u32, 5] {
        let g = geometry(n);
        let spec = PotentialSpec::new(g.clone(), 0.25, 0.01, 1.0).unwrap();
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let v = spec.eval(&x);
            assert!(v >= 0.0);
            let sum = ellipse_sum(&g, &x);
            if !(sum > 6.0 && sum < 8.0) {
                assert_eq!(v, 0.0);
            }
            if v > 0.0 {
                let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
                assert!(r >= 2.5 && r <= 5.0, "support point at radius {r}");
            }
        }
    }
}

#[test]
fn holder_examples() {
    let seg = vec![Segment { a: vec![-1.0, 0.0], b: vec![1.0, 0.0] }];
    let c = holder_norm_estimate(&|_: &[f64]| 0.7, 0.5, &seg, 0.01).unwrap();
    assert_eq!(c.norm(), 0.7);
    assert_eq!(c.seminorm, 0.0);
    let f = |x: &[f64]| x[0].abs().sqrt();
    let e = holder_norm_estimate(&f, 0.5, &seg, 0.01).unwrap();
    assert!((e.sup - 1.0).abs() < 1e-12);
    assert!((e.norm() - 2.0).abs() < 0.05, "{e:?}");
    assert!(holder_norm_estimate(&f, 1.0, &seg, 0.01).is_err());
    assert!(holder_norm_estimate(&f, 0.5, &seg, 0.0).is_err());
}

#[test]
fn calibrated_norms_stay_uniform() {
    let g = geometry(5);
    let grid = dyadic(4, 10);
    let cn = calibrate_cn(&g, 0.5, &grid, Exec::Sequential).unwrap();
    assert!(cn > 0.0);
    let norms: Vec<f64> = grid
        .iter()
        .map(|&t| potential_norm(&PotentialSpec::new(g.clone(), 0.5, t, cn).unwrap()).unwrap().norm())
        .collect();
    let max = norms.iter().cloned().fold(0.0, f64::max);
    assert!((max - 1.0).abs() < 1e-12);
    for k in 4..=9 {
        let t = 1.5 * 2f64.powi(-k);
        let v = potential_norm(&PotentialSpec::new(g.clone(), 0.5, t, cn).unwrap()).unwrap().norm();
        assert!(v <= 1.1, "t={t}: {v}");
    }
    assert!(calibrate_cn(&g, 0.5, &[], Exec::Sequential).is_err());
}

#[test]
fn scaled_norm_is_bounded_over_dyadic_times() {
    // ‖V_t‖ with Cn = 1 stays within a constant of t^α(1 + t^{−α})
    let g = geometry(4);
    for t in dyadic(2, 10) {
        let v = potential_norm(&PotentialSpec::new(g.clone(), 0.25, t, 1.0).unwrap()).unwrap().norm();
        let scale = t.powf(0.25) * (1.0 + t.powf(-0.25));
        assert!(v / scale < 5.0, "t={t}: {v}");
    }
}

#[test]
fn bump_pairs_have_unit_mass() {
    for n in [4u32, 5] {
        for eps in [0.05, 0.1, 0.2] {
            let b = BumpPair::new(Dimension::new(n).unwrap(), eps).unwrap();
            assert!((b.mass() - 1.0).abs() < 1e-6, "n={n} eps={eps}: {}", b.mass());
            assert_eq!(b.density(&vec![eps; n as usize]), 0.0);
        }
    }
    assert!(BumpPair::new(Dimension::new(4).unwrap(), 0.5).is_err());
}

#[test]
fn distance_window_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 5u32;
    let g = geometry(n);
    let pair = BumpPair::new(Dimension::new(n).unwrap(), 0.49).unwrap();
    let mut hits = 0;
    while hits < 2000 {
        let x1: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let sum = ellipse_sum(&g, &x1);
        if !(sum > 6.0 && sum < 8.0) {
            continue;
        }
        hits += 1;
        let dx = pair.sample(&mut rng);
        let dy = pair.sample(&mut rng);
        assert!(dx.iter().map(|c| c * c).sum::<f64>() < 0.49 * 0.49);
        let x: Vec<f64> = g.x0.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let y: Vec<f64> = g.y0.iter().zip(&dy).map(|(a, b)| a + b).collect();
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        for r in [d(&x, &x1), d(&x1, &y)] {
            assert!((1.0..=10.0).contains(&r), "distance {r}");
        }
    }
}

fn sync_integral(n: u32, alpha: f64, t: f64, x: &[f64]) -> Complex64 {
    let g = geometry(n);
    let spec = PotentialSpec::new(g.clone(), alpha, t, 1.0).unwrap();
    main_term_x1_integral(g.n, &spec, x, &g.y0, t, &X1Rule::MAIN, Exec::Sequential).unwrap()
}

#[test]
fn synchronized_integral_is_bounded_below() {
    for (n, alpha) in [(5u32, 0.5), (4, 0.25)] {
        let g = geometry(n);
        let mut lowest = f64::INFINITY;
        for t in dyadic(4, 10) {
            let m = sync_integral(n, alpha, t, &g.x0) / t.powf(alpha);
            assert!(m.re >= 0.0, "n={n} t={t}: {m}");
            lowest = lowest.min(m.re);
        }
        assert!(lowest > 0.1, "n={n}: {lowest}");
    }
}

#[test]
fn unsynchronized_shell_decoheres() {
    let g = geometry(5);
    for t in dyadic(5, 9) {
        let spec = PotentialSpec::new(g.clone(), 0.5, t, 1.0).unwrap();
        let sync = main_term_x1_integral(g.n, &spec, &g.x0, &g.y0, t, &X1Rule::MAIN, Exec::Sequential).unwrap();
        let shell = SmoothShell { cn: 1.0, t, alpha: 0.5 };
        let flat = main_term_x1_integral(g.n, &shell, &g.x0, &g.y0, t, &X1Rule::MAIN, Exec::Sequential).unwrap();
        assert!(flat.norm() < 1e-2 * sync.norm(), "t={t}: {} vs {}", flat.norm(), sync.norm());
    }
}

#[test]
fn gradient_grows_like_inverse_time() {
    let (n, alpha) = (5u32, 0.5);
    let g = geometry(n);
    let samples: Vec<(f64, f64)> = dyadic(4, 9)
        .into_iter()
        .map(|t| {
            let h = 1e-3 * t;
            let p = sync_integral(n, alpha, t, &g.point(&[1.0 + h]));
            let m = sync_integral(n, alpha, t, &g.point(&[1.0 - h]));
            (t, (p - m).norm() / (2.0 * h) / t.powf(alpha))
        })
        .collect();
    let fit = fit_exponent(&samples).unwrap();
    assert!((-1.3..=-0.7).contains(&fit.slope), "slope {}", fit.slope);
}

#[test]
fn zero_potential_gives_zero() {
    let n = Dimension::new(4).unwrap();
    let zero = |_: f64| 0.0;
    let v = a1_main_term(n, &zero, &Bumps::Delta, 0.1, &X1Rule::MAIN, Exec::Sequential).unwrap();
    assert_eq!(v, Complex64::new(0.0, 0.0));
}

#[test]
fn full_term_is_linear_in_the_potential() {
    let g = geometry(4);
    let t = 0.5;
    let spec = PotentialSpec::new(g.clone(), 0.25, t, 1.0).unwrap();
    let one = a1_full(g.n, &spec, &Bumps::Delta, t, 100.0, &X1Rule::FULL, Exec::Sequential).unwrap();
    let two = a1_full(g.n, &Scaled(2.0, &spec), &Bumps::Delta, t, 100.0, &X1Rule::FULL, Exec::Sequential).unwrap();
    assert!((two - 2.0 * one).norm() <= 1e-10 * one.norm());
    assert!(a1_full(g.n, &spec, &Bumps::Delta, t, 1.5, &X1Rule::FULL, Exec::Sequential).is_err());
}

#[test]
fn full_term_tracks_main_term_in_three_dimensions() {
    let n = Dimension::new(3).unwrap();
    let t = 0.2;
    let shell = |s: f64| phi_profile(s);
    let l = 10.0 / (t * t * t);
    let full = a1_full(n, &shell, &Bumps::Delta, t, l, &X1Rule::FULL, Exec::Sequential).unwrap();
    let main = a1_main_term(n, &shell, &Bumps::Delta, t, &X1Rule::FULL, Exec::Sequential).unwrap();
    assert!((full - main).norm() < 1e-2 * main.norm(), "{full} vs {main}");
}

#[test]
fn bumps_reproduce_the_delta_limit() {
    let g = geometry(4);
    let t = 1.0 / 16.0;
    let spec = PotentialSpec::new(g.clone(), 0.25, t, 1.0).unwrap();
    let delta = a1_main_term(g.n, &spec, &Bumps::Delta, t, &X1Rule::MAIN, Exec::Sequential).unwrap();
    let pair = BumpPair::new(g.n, 0.5 * t).unwrap();
    let bumps = Bumps::Pair { pair, samples: 4, seed: 9 };
    let smeared = a1_main_term(g.n, &spec, &bumps, t, &X1Rule::MAIN, Exec::Sequential).unwrap();
    let ratio = smeared.norm() / delta.norm();
    assert!((0.4..=1.2).contains(&ratio), "ratio {ratio}");
    let again = a1_main_term(g.n, &spec, &bumps, t, &X1Rule::MAIN, Exec::Sequential).unwrap();
    assert_eq!(smeared, again);
    let none = Bumps::Pair { pair, samples: 0, seed: 9 };
    assert!(a1_main_term(g.n, &spec, &none, t, &X1Rule::MAIN, Exec::Sequential).is_err());
}

#[test]
fn parallel_and_sequential_agree() {
    let g = geometry(5);
    let t = 1.0 / 64.0;
    let spec = PotentialSpec::new(g.clone(), 0.5, t, 1.0).unwrap();
    let a = a1_main_term(g.n, &spec, &Bumps::Delta, t, &X1Rule::MAIN, Exec::Sequential).unwrap();
    let b = a1_main_term(g.n, &spec, &Bumps::Delta, t, &X1Rule::MAIN, Exec::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn exponent_fit_examples() {
    let exact: Vec<(f64, f64)> = dyadic(1, 8).into_iter().map(|t| (t, 1.0 / t)).collect();
    let fit = fit_exponent(&exact).unwrap();
    assert!((fit.slope + 1.0).abs() < 1e-12);
    assert!(fit.residual < 1e-12);
    assert!(fit.slope_ci95.0 <= fit.slope && fit.slope <= fit.slope_ci95.1);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let noisy: Vec<(f64, f64)> = dyadic(1, 10)
        .into_iter()
        .map(|t| (t, 3.0 * t.powf(-0.5) * (1.0 + 0.01 * rng.random_range(-1.0..1.0))))
        .collect();
    let fit = fit_exponent(&noisy).unwrap();
    assert!((fit.slope + 0.5).abs() < 0.02);
    assert!((fit.intercept - 3f64.ln()).abs() < 0.05);

    assert!(fit_exponent(&exact[..3]).is_err());
    assert!(fit_exponent(&[(0.1, 1.0), (0.2, -1.0), (0.3, 1.0), (0.4, 1.0)]).is_err());
    assert!(fit_exponent(&[(0.1, 1.0), (0.1, 2.0), (0.3, 1.0), (0.4, 1.0)]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn potential_is_nonnegative(x in prop::collection::vec(-5.0f64..5.0, 5), k in 2i32..11) {
        let spec = PotentialSpec::new(geometry(5), 0.5, 2f64.powi(-k), 1.0).unwrap();
        prop_assert!(spec.eval(&x) >= 0.0);
    }

    #[test]
    fn fit_recovers_power_laws(p in -3.0f64..3.0, c in 0.1f64..10.0) {
        let s: Vec<(f64, f64)> = dyadic(0, 6).into_iter().map(|t| (t, c * t.powf(p))).collect();
        let fit = fit_exponent(&s).unwrap();
        prop_assert!((fit.slope - p).abs() < 1e-10);
    }
}
