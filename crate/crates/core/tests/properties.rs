use std::f64::consts::PI;
use std::sync::OnceLock;

use nnls_core::asymptotics::{boundaries, classify, AsymptoticModel, Family, KinkSide};
use nnls_core::scattering::{
    jost_at_origin, pure_step_spectral, BackgroundParams, InitialProfile, JostKind, ProfileSpectral, PureStepSpectral,
    SpectralData,
};
use nnls_core::spectrum::{find_zeros, pure_step_zeros, winding_at, winding_profile, OmegaSet, SearchBox, ZeroSet};
use nnls_core::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn bg(a: f64, r: f64) -> BackgroundParams {
    BackgroundParams::new(a, r).unwrap()
}

fn profile_spec() -> &'static ProfileSpectral {
    static S: OnceLock<ProfileSpectral> = OnceLock::new();
    S.get_or_init(|| ProfileSpectral::new(InitialProfile::pure_step(bg(1.0, 2.0))))
}

fn model() -> &'static AsymptoticModel {
    static M: OnceLock<AsymptoticModel> = OnceLock::new();
    M.get_or_init(|| AsymptoticModel::for_pure_step(bg(1.0, 2.0)).unwrap())
}

/// Draws away from the bifurcation values R A = n pi.
fn non_bifurcating() -> impl Strategy<Value = (f64, f64)> {
    (0.5f64..2.0, 0.3f64..8.0).prop_filter("near bifurcation", |(a, r)| {
        let s = r * a / PI;
        (s - s.round()).abs() > 0.02
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn jost_determinant_is_one(k in prop_oneof![-20.0f64..-0.05, 0.05f64..20.0]) {
        let p = &profile_spec().profile;
        for which in [JostKind::Psi1, JostKind::Psi2] {
            let j = jost_at_origin(p, c(k, 0.0), which).unwrap();
            prop_assert!((j.det() - 1.0).norm() < 1e-9);
        }
    }

    #[test]
    fn determinant_identity_on_real_axis(k in prop_oneof![-20.0f64..-0.05, 0.05f64..20.0]) {
        let s = profile_spec();
        let v = s.real_axis(k).unwrap();
        let lhs = v.a1 * v.a2 - v.b * v.b_mirror.conj();
        prop_assert!((lhs - 1.0).norm() < 1e-10, "k = {}: {}", k, lhs);
    }

    #[test]
    fn a1_symmetry_in_upper_half_plane(re in -5.0f64..5.0, im in 0.0f64..2.0) {
        let s = profile_spec();
        let k = c(re, im);
        prop_assume!(k.norm() > 0.05);
        let a = s.a1(k).unwrap();
        let b = s.a1(-k.conj()).unwrap().conj();
        prop_assert!((a - b).norm() < 1e-9 * a.norm().max(1.0));
    }

    #[test]
    fn numeric_a1_matches_closed_form(k in prop_oneof![-20.0f64..-0.05, 0.05f64..20.0]) {
        let s = profile_spec();
        let exact = pure_step_spectral(bg(1.0, 2.0), c(k, 0.0)).unwrap().0;
        prop_assert!((s.a1(c(k, 0.0)).unwrap() - exact).norm() <= 1e-8 * exact.norm().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn argument_principle_count_matches_refined_zeros((a, r) in non_bifurcating()) {
        let b = bg(a, r);
        let spec = PureStepSpectral::new(b);
        let found = find_zeros(&spec, &SearchBox::for_background(b)).unwrap();
        let exact = pure_step_zeros(b).unwrap();
        prop_assert_eq!(found.n(), b.zero_count());
        prop_assert_eq!(found.n(), exact.n());
        for j in 1..=found.n() {
            let p = found.p(j);
            prop_assert!((p - exact.p(j)).norm() < 1e-8);
            prop_assert!(spec.a1(-p.conj()).unwrap().norm() <= 1e-9);
            let lo = (j as f64 - 1.0) * PI / (2.0 * r);
            let hi = (2.0 * j as f64 - 1.0) * PI / (4.0 * r);
            prop_assert!(-exact.p(j).re > lo && -exact.p(j).re < hi);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn winding_is_additive(x1 in 0.05f64..3.0, gap in 0.01f64..1.0) {
        let b = bg(1.0, 7.0);
        let spec = PureStepSpectral::new(b);
        static T: OnceLock<nnls_core::spectrum::WindingProfile> = OnceLock::new();
        let table = T.get_or_init(|| winding_profile(&PureStepSpectral::new(bg(1.0, 7.0)), 7.0).unwrap());
        let x2 = x1 + gap;
        let (p1, p2) = (winding_at(&spec, table, x1).unwrap(), winding_at(&spec, table, x2).unwrap());
        // unwrapped variation of arg a1 over (-x2, -x1) on a fine grid
        let n = 20_000;
        let mut total = 0.0;
        let mut prev = spec.a1(c(-x2, 0.0)).unwrap();
        for i in 1..=n {
            let k = -x2 + gap * i as f64 / n as f64;
            let v = spec.a1(c(k, 0.0)).unwrap();
            total += (v / prev).arg();
            prev = v;
        }
        prop_assert!((p1 - p2 - total).abs() < 1e-8, "{} vs {}", p1 - p2, total);
    }
}

#[test]
fn sector_tiling() {
    let z = ZeroSet { p: vec![c(-0.1, 0.05), c(-0.45, 0.1), c(-0.9, 0.2)], eta: vec![] };
    let o = OmegaSet { omegas: vec![0.3, 0.7] };
    let b = boundaries(&z, &o);
    let mut rng_state = 0x9e3779b97f4a7c15u64;
    let mut classified = 0;
    for _ in 0..1000 {
        rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let xi = -1.5 + 3.0 * ((rng_state >> 11) as f64 / (1u64 << 53) as f64);
        let Ok(s) = classify(xi, &z, &o) else { continue };
        classified += 1;
        // the interval of xi between consecutive boundaries
        let i = b.iter().position(|&v| v > xi).unwrap_or(b.len());
        let lo = if i == 0 { f64::NEG_INFINITY } else { b[i - 1] };
        let hi = if i == b.len() { f64::INFINITY } else { b[i] };
        let n = z.n();
        let rp = -z.p(n - s.m).re;
        let w_lo = if s.m + 1 >= n { 0.0 } else { o.omega(n - s.m - 1) };
        let w_hi = o.omega(n - s.m);
        let (elo, ehi) = match s.family {
            Family::DecayInner => (w_lo, rp),
            Family::PlateauRight => (rp, w_hi),
            Family::PlateauLeft => (-rp, -w_lo),
            Family::DecayFarLeft => (-w_hi, -rp),
        };
        assert_eq!((lo, hi), (elo, ehi), "xi = {xi}, sector {s:?}");
    }
    assert!(classified > 800);
}

#[test]
fn nu_is_continuous_within_a_band() {
    let m = model();
    let rp = -m.zeros.p(1).re;
    let xs: Vec<f64> = (0..200).map(|i| rp + 0.02 + i as f64 * 0.005).collect();
    let nus: Vec<Complex64> = xs.iter().map(|&x| m.engine.nu(x).unwrap()).collect();
    for w in nus.windows(2) {
        assert!((w[1] - w[0]).norm() < 0.01, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn every_oscillatory_power_decays() {
    let m = model();
    for i in 0..60 {
        let xi = -1.5 + i as f64 * 0.05 + 0.013;
        let Ok(p) = m.predict(xi, 10.0) else { continue };
        for o in &p.oscillatory {
            assert!(o.t_power > -1.0 && o.t_power < 0.0, "xi {xi}: {}", o.t_power);
        }
    }
}

#[test]
fn k_to_zero_rate_of_a1() {
    let b = bg(1.0, 2.0);
    let numeric = profile_spec();
    for k in [1e-3, -1e-3] {
        let exact = pure_step_spectral(b, c(k, 0.0)).unwrap().0;
        let num = numeric.a1(c(k, 0.0)).unwrap();
        assert!(((num - exact) * k * k).norm() < 1e-10);
    }
    // k^2 a1(k) + A^2 a2(0)/4 = k^2 + (A^2/4)(1 - e^{4ikR}) = O(k): first order
    let e = |k: f64| {
        let a1 = pure_step_spectral(b, c(k, 0.0)).unwrap().0;
        (a1 * k * k + 0.25).norm()
    };
    let order = (e(1e-3) / e(1e-4)).log10();
    assert!((order - 1.0).abs() < 0.01, "order {order}");
    assert!((e(1e-3) - 2e-3).abs() < 1e-5);
}

#[test]
fn kink_approaches_neighbouring_values() {
    let m = model();
    let k = m.kink_profile(0, KinkSide::XPositive).unwrap();
    let plateau = 2.0 * Complex64::i() * k.c0;
    let dev = |x0: f64| {
        let v = k.value(x0, 40.0).unwrap();
        if x0 > 0.0 { (v - plateau).norm() } else { v.norm() }
    };
    // first-order deviations 2|c0|^2 |f| / |p^2| and 2|p|^2 / |f|
    let f8 = k.f_as(8.0, 40.0).norm();
    let p2 = k.p.norm_sqr();
    let est_right = 2.0 * k.c0.norm_sqr() * f8 / p2;
    let est_left = 2.0 * p2 / k.f_as(-8.0, 40.0).norm();
    assert!((dev(8.0) / est_right - 1.0).abs() < 0.1);
    assert!((dev(-8.0) / est_left - 1.0).abs() < 0.1);
    for x0 in [15.0, -15.0, 30.0, -30.0] {
        assert!(dev(x0) <= 1e-2, "x0 {x0}: {}", dev(x0));
    }
}
