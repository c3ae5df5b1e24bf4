use nnls_core::pde::{simulate_field, simulate_partial, FieldSnapshot, SimulationConfig};
use nnls_core::scattering::{BackgroundParams, InitialProfile};
use nnls_core::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn grid(cfg: &SimulationConfig) -> Vec<f64> {
    let m = cfg.half_nodes();
    (0..=2 * m).map(|j| -cfg.l + j as f64 * cfg.dx).collect()
}

fn run(cfg: &SimulationConfig, f: impl Fn(f64) -> Complex64) -> Vec<FieldSnapshot> {
    let q0 = grid(cfg).into_iter().map(f).collect();
    let out = simulate_field(q0, ZERO, ZERO, cfg).unwrap();
    assert!(out.blow_up.is_none());
    out.snapshots
}

fn cfg(l: f64, dx: f64, t: f64, sponge: f64) -> SimulationConfig {
    let mut cfg = SimulationConfig::new(l, dx, t, vec![t]);
    cfg.sponge_width = sponge;
    cfg
}

#[test]
fn small_amplitude_matches_free_evolution() {
    let eps = 1e-3;
    let cfg = cfg(30.0, 0.05, 1.0, 3.0);
    let snap = &run(&cfg, |x| c(eps * (-x * x).exp(), 0.0))[0];
    let s = c(1.0, 4.0);
    let mut worst: f64 = 0.0;
    for (j, x) in grid(&cfg).into_iter().enumerate() {
        let exact = eps / s.sqrt() * (-(x * x) / s).exp();
        worst = worst.max((snap.q[j] - exact).norm());
    }
    assert!(worst < 1e-5, "worst {worst}");
}

#[test]
fn conserved_functional_drift() {
    let cfg = {
        let mut c = SimulationConfig::new(120.0, 0.1, 5.0, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        c.sponge_width = 5.0;
        c
    };
    let f = |x: f64| c(0.5, 0.25 * x) * (-x * x).exp();
    let q0: Vec<Complex64> = grid(&cfg).into_iter().map(f).collect();
    let start = FieldSnapshot { t: 0.0, l: cfg.l, dx: cfg.dx, trusted: 0.0, q: q0.clone() }.conserved_functional();
    let out = simulate_field(q0, ZERO, ZERO, &cfg).unwrap();
    for s in &out.snapshots {
        let drift = (s.conserved_functional() - start).norm() / start.norm();
        assert!(drift <= 1e-6, "t = {}: drift {drift}", s.t);
    }
}

fn richardson(values: [&FieldSnapshot; 3], strides: [usize; 3]) -> f64 {
    let n = values[0].q.len();
    let mut d1: f64 = 0.0;
    let mut d2: f64 = 0.0;
    for j in 0..n {
        let a = values[0].q[j * strides[0]];
        let b = values[1].q[j * strides[1]];
        let cc = values[2].q[j * strides[2]];
        d1 = d1.max((a - b).norm());
        d2 = d2.max((b - cc).norm());
    }
    d1 / d2
}

#[test]
fn grid_refinement_is_fourth_order_in_space() {
    let f = |x: f64| c(0.8, 0.3 * x) * (-x * x).exp();
    let runs: Vec<FieldSnapshot> =
        [0.2, 0.1, 0.05].iter().map(|&dx| run(&cfg(20.0, dx, 0.5, 2.0), f).remove(0)).collect();
    let ratio = richardson([&runs[0], &runs[1], &runs[2]], [1, 2, 4]);
    assert!((8.0..=32.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn time_stepping_is_fourth_order() {
    let f = |x: f64| c(0.8, 0.3 * x) * (-x * x).exp();
    let runs: Vec<FieldSnapshot> = [0.01, 0.005, 0.0025]
        .iter()
        .map(|&dt| {
            let mut cf = cfg(20.0, 0.2, 0.5, 2.0);
            cf.dt = dt;
            run(&cf, f).remove(0)
        })
        .collect();
    let ratio = richardson([&runs[0], &runs[1], &runs[2]], [1, 1, 1]);
    assert!((8.0..=32.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn parity_mirror_is_exact() {
    let cf = cfg(30.0, 0.1, 2.0, 3.0);
    let ramp = |x: f64| c(0.5 * (1.0 + ((x - 2.0) / 0.4).tanh()), 0.0);
    let x = grid(&cf);
    let q0: Vec<Complex64> = x.iter().map(|&x| ramp(x)).collect();
    let q0m: Vec<Complex64> = x.iter().map(|&x| ramp(-x)).collect();
    let a = simulate_field(q0, ZERO, c(1.0, 0.0), &cf).unwrap().snapshots.remove(0);
    let b = simulate_field(q0m, c(1.0, 0.0), ZERO, &cf).unwrap().snapshots.remove(0);
    let n = a.q.len();
    let worst = (0..n).map(|j| (a.q[j] - b.q[n - 1 - j]).norm()).fold(0.0, f64::max);
    assert!(worst < 1e-9, "worst {worst}");
}

#[test]
fn conjugate_mirror_reverses_time() {
    let mut cf = cfg(40.0, 0.1, 1.0, 3.0);
    cf.dt = 1e-3;
    let f = |x: f64| c(0.6, 0.2 * x) * (-x * x).exp();
    let x = grid(&cf);
    let q0: Vec<Complex64> = x.iter().map(|&x| f(x)).collect();
    let fwd = simulate_field(q0.clone(), ZERO, ZERO, &cf).unwrap().snapshots.remove(0);
    let n = q0.len();
    let w0: Vec<Complex64> = (0..n).map(|j| fwd.q[n - 1 - j].conj()).collect();
    let back = simulate_field(w0, ZERO, ZERO, &cf).unwrap().snapshots.remove(0);
    let worst = (0..n).map(|j| (back.q[n - 1 - j].conj() - q0[j]).norm()).fold(0.0, f64::max);
    assert!(worst < 1e-9, "worst {worst}");
}

#[test]
fn sponge_holds_backgrounds() {
    let bg = BackgroundParams::new(1.0, 2.0).unwrap();
    // the fastest radiation from the ramp covers about 18 length units per
    // unit time, so the sponge must start beyond 18 t_end
    let mut cf = SimulationConfig::new(160.0, 0.1, 8.0, vec![2.0, 4.0, 6.0, 8.0]);
    cf.sponge_width = 10.0;
    let out = simulate_partial(&InitialProfile::pure_step(bg), &cf).unwrap();
    assert!(out.blow_up.is_none());
    for s in &out.snapshots {
        let mut worst: f64 = 0.0;
        for (j, q) in s.q.iter().enumerate() {
            let x = s.x(j);
            if x.abs() > cf.l - cf.sponge_width {
                let target = if x < 0.0 { 0.0 } else { 1.0 };
                worst = worst.max((q - target).norm());
            }
        }
        assert!(worst <= 1e-3, "t = {}: {worst}", s.t);
    }
}

#[test]
fn benchmark_step_blows_up_on_the_kink_ray() {
    let bg = BackgroundParams::new(1.0, 2.0).unwrap();
    let mut cf = SimulationConfig::new(60.0, 0.1, 15.0, vec![5.0, 10.0, 15.0]);
    cf.sponge_width = 10.0;
    let out = simulate_partial(&InitialProfile::pure_step(bg), &cf).unwrap();
    assert_eq!(out.snapshots.len(), 2);
    let b = out.blow_up.expect("blow-up expected");
    eprintln!("{b:?}");
    assert!(b.t_last > 10.0 && b.t_last < 13.0);
    assert!(b.t_est >= b.t_last - 1e-9 && b.t_est < 13.0);
    // ray x = -4 Re p_1 t + x0 with x0 near -0.1
    let x_kink = 4.0 * 0.185846501185338 * b.t_last;
    assert!((b.x_at - x_kink).abs() < 1.5, "{} vs {x_kink}", b.x_at);
}

#[test]
fn uniform_field_rotates_at_the_nonlinear_frequency() {
    // q = A exp(-2 i A^2 t) solves the equation exactly; the sponge holds the
    // edges at A, so only the interior is compared
    let a = 0.8;
    let cf = cfg(40.0, 0.1, 0.5, 4.0);
    let out = simulate_field(vec![c(a, 0.0); grid(&cf).len()], c(a, 0.0), c(a, 0.0), &cf).unwrap();
    let s = &out.snapshots[0];
    let exact = a * (c(0.0, -2.0 * a * a * 0.5)).exp();
    let worst = grid(&cf)
        .into_iter()
        .enumerate()
        .filter(|(_, x)| x.abs() < 10.0)
        .map(|(j, _)| (s.q[j] - exact).norm())
        .fold(0.0, f64::max);
    assert!(worst < 1e-9, "worst {worst}");
}
