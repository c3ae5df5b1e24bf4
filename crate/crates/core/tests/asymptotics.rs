use std::f64::consts::PI;

use nnls_core::asymptotics::{beta_gamma, AsymptoticModel, Family, KinkSide, RemainderKind, Sector};
use nnls_core::scattering::{reflection, BackgroundParams, InitialProfile};
use nnls_core::{Complex64, Error};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const I: Complex64 = Complex64::new(0.0, 1.0);

fn benchmark() -> AsymptoticModel {
    AsymptoticModel::for_pure_step(BackgroundParams::new(1.0, 2.0).unwrap()).unwrap()
}

#[test]
fn benchmark_has_one_zero_and_four_sectors() {
    let m = benchmark();
    assert_eq!(m.n(), 1);
    let p = m.zeros.p(1);
    assert!((p - c(-0.185846501185338, 0.170852004081644)).norm() < 1e-10);
    let fam = |xi: f64| m.classify(xi).unwrap().family;
    assert_eq!(fam(0.5), Family::PlateauRight);
    assert_eq!(fam(0.09), Family::DecayInner);
    assert_eq!(fam(-0.09), Family::PlateauLeft);
    assert_eq!(fam(-0.5), Family::DecayFarLeft);
}

#[test]
fn plateau_matches_reference_and_decay_is_zero() {
    let m = benchmark();
    let s = m.classify(0.5).unwrap();
    let v = m.plateau(s, 0.5).unwrap();
    assert!((v - c(0.94906, 0.00805)).norm() < 5e-5, "{v}");
    let (c0, _) = m.c0_values(0.5, 0).unwrap();
    assert!((2.0 * I * c0 - v).norm() < 1e-14);
    let d = m.classify(-0.5).unwrap();
    assert_eq!(m.plateau(d, -0.5).unwrap(), c(0.0, 0.0));
}

#[test]
fn left_plateau_uses_mirrored_delta() {
    let m = benchmark();
    let xi = -0.09;
    let s = m.classify(xi).unwrap();
    let pv = m.engine.phase_values(-xi).unwrap();
    let p = m.zeros.p(1).conj();
    let expected = -4.0 * p * p / (pv.delta0 * pv.delta0).conj();
    assert!((m.plateau(s, xi).unwrap() - expected).norm() < 1e-14);
    let (_, sharp) = m.c0_values(-xi, 0).unwrap();
    assert!((m.plateau(s, xi).unwrap() - (-2.0 * I * sharp.conj())).norm() < 1e-12);
}

#[test]
fn alpha2_over_alpha4_ratio() {
    let m = benchmark();
    for xi in [0.09, 0.5, 0.8] {
        let a2 = m.alpha(2, xi, 0).unwrap();
        let a4 = m.alpha(4, xi, 0).unwrap();
        let p = m.zeros.p(1);
        let expected = (xi + p).powi(2) / (xi * xi);
        assert!((a2 / a4 - expected).norm() < 1e-12 * expected.norm());
    }
}

#[test]
fn alpha1_alpha2_agree_with_parametrix_coefficients() {
    let m = benchmark();
    let xi = 0.5;
    let pv = m.engine.phase_values(xi).unwrap();
    let (r1, r2) = reflection(m.spec(), -xi).unwrap();
    let (beta, gamma) = beta_gamma(r1, r2, pv.nu).unwrap();
    let (c0, _) = m.c0_values(xi, 0).unwrap();
    let chi = pv.chi_at_minus_xi;
    let eight = (I * pv.nu * 8f64.ln()).exp();
    let s8 = 8f64.sqrt();
    let a1 = -2.0 * c0 * c0 * gamma * (-2.0 * chi).exp() * eight / (xi * xi * s8);
    let a2 = -2.0 * beta * (2.0 * chi).exp() / (eight * s8);
    assert!((m.alpha(1, xi, 0).unwrap() - a1).norm() < 1e-12 * a1.norm());
    assert!((m.alpha(2, xi, 0).unwrap() - a2).norm() < 1e-12 * a2.norm());
}

#[test]
fn alpha_sign_of_direction_is_checked() {
    let m = benchmark();
    assert!(matches!(m.alpha(1, -0.5, 0), Err(Error::Config(_))));
    assert!(matches!(m.alpha(3, 0.5, 0), Err(Error::Config(_))));
    assert!(m.alpha(3, -0.5, 0).is_ok());
    assert!(m.alpha(5, -0.09, 0).is_ok());
    assert!(m.alpha(6, -0.09, 0).is_ok());
}

#[test]
fn predictions_follow_the_case_split() {
    let m = benchmark();
    for xi in [-0.8, -0.5, -0.09, 0.09, 0.5, 0.8] {
        let pr = m.predict(xi, 20.0).unwrap();
        let d = pr.nu.im - pr.sector.m as f64;
        assert!(d.abs() < 0.5);
        for o in &pr.oscillatory {
            assert!(o.t_power > -1.0 && o.t_power < 0.0);
            assert!((o.phase_coeff.abs() - 4.0 * xi * xi).abs() < 1e-15);
            assert!((o.logt_coeff.abs() - pr.nu.re.abs()).abs() < 1e-15);
        }
        match pr.sector.family {
            Family::DecayInner | Family::DecayFarLeft => {
                assert_eq!(pr.leading, c(0.0, 0.0));
                assert_eq!(pr.oscillatory.len(), 1);
                assert_eq!(pr.remainder.kind, RemainderKind::R2);
            }
            _ => {
                assert!(pr.leading.norm() > 0.0);
                let len = pr.oscillatory.len();
                assert!(len == 1 || len == 2);
                if len == 2 {
                    let s = pr.oscillatory[0].t_power + pr.oscillatory[1].t_power;
                    assert!((s + 1.0).abs() < 1e-15);
                }
            }
        }
    }
}

#[test]
fn transition_zone_rejected() {
    let m = benchmark();
    let rp = -m.zeros.p(1).re;
    assert!(matches!(m.predict(rp + 1e-4, 10.0), Err(Error::TransitionZone { .. })));
    assert!(matches!(m.predict(0.0, 10.0), Err(Error::TransitionZone { .. })));
}

#[test]
fn kink_limits_match_neighbouring_sectors() {
    let m = benchmark();
    let k = m.kink_profile(0, KinkSide::XPositive).unwrap();
    assert!((k.c0 - c(-0.21439, -0.51768)).norm() < 5e-5, "{}", k.c0);
    for t in [10.0, 40.0] {
        let right = k.value(40.0, t).unwrap();
        assert!((right - 2.0 * I * k.c0).norm() < 1e-2);
        let left = k.value(-40.0, t).unwrap();
        assert!(left.norm() < 1e-2);
    }
    // PlateauRight value just outside the kink ray is 2i c0 evaluated there
    let s = Sector { family: Family::PlateauRight, m: 0 };
    let xk = -m.zeros.p(1).re;
    let pl = m.plateau(s, xk).unwrap();
    assert!((pl - 2.0 * I * k.c0).norm() < 1e-14);

    let kn = m.kink_profile(0, KinkSide::XNegative).unwrap();
    let far = kn.value(40.0, 10.0).unwrap();
    assert!(far.norm() < 1e-2);
    let near = kn.value(-40.0, 10.0).unwrap();
    let p = m.zeros.p(1).conj();
    assert!((near - (-2.0 * I * p * p / kn.c0.conj())).norm() < 1e-2);
}

#[test]
fn kink_modulus_of_f_is_time_independent() {
    let m = benchmark();
    let k = m.kink_profile(0, KinkSide::XPositive).unwrap();
    for x0 in [-3.0, 0.0, 2.5] {
        let f0 = k.f_as(x0, 0.0).norm();
        for t in [1.0, 17.0, 40.0] {
            assert!((k.f_as(x0, t).norm() - f0).abs() < 1e-14 * f0.max(1.0));
        }
    }
}

#[test]
fn kink_singular_point_reported() {
    let m = benchmark();
    let k = m.kink_profile(0, KinkSide::XPositive).unwrap();
    let p = k.p;
    // solve c0 f0 exp(2 i p x0 - 4 i t |p|^2) = -p^2 for (x0, t)
    let w = (-p * p / (k.c0 * k.f0)).ln();
    let x0 = w.re / (-2.0 * p.im);
    let mut phase = w.im - 2.0 * p.re * x0;
    let t = loop {
        let t = -phase / (4.0 * p.norm_sqr());
        if t > 0.0 {
            break t;
        }
        phase -= 2.0 * PI;
    };
    assert!(matches!(k.value(x0, t), Err(Error::KinkBlowUp(_))));
}

#[test]
fn jost_pipeline_matches_closed_form_pipeline() {
    let bg = BackgroundParams::new(1.0, 2.0).unwrap();
    let exact = benchmark();
    let jost = AsymptoticModel::for_profile(InitialProfile::pure_step(bg)).unwrap();
    assert_eq!(jost.n(), 1);
    assert!((jost.zeros.p(1) - exact.zeros.p(1)).norm() < 1e-8);
    for xi in [0.05, 0.5, 1.5] {
        let (pj, pe) = (jost.engine.phase_values(xi).unwrap(), exact.engine.phase_values(xi).unwrap());
        assert!((pj.nu - pe.nu).norm() < 1e-8, "nu at {xi}");
        // the Jost pipeline truncates the Cauchy integrals at |k| = 60
        assert!((pj.delta0 - pe.delta0).norm() < 1e-4, "delta0 at {xi}");
        assert!((pj.chi_at_minus_xi - pe.chi_at_minus_xi).norm() < 1e-4, "chi at {xi}");
    }
    for xi in [-0.7, -0.05, 0.05, 0.7] {
        let (a, b) = (jost.predict(xi, 20.0).unwrap(), exact.predict(xi, 20.0).unwrap());
        assert!((a.value() - b.value()).norm() < 1e-4, "prediction at {xi}");
    }
}
