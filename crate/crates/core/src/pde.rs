//! Direct solver for `i q_t + q_xx - 2 q^2 conj(q(-x, t)) = 0` on a grid
//! symmetric about 0: fourth-order central differences, classical RK4 in
//! time, cos^2 sponge layers relaxing toward the backgrounds at both ends.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{AsymptoticPrediction, Family};
use crate::error::{Error, Result};
use crate::scattering::{cubic_interp, InitialProfile};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const CHUNK: usize = 2048;

/// Largest admissible dt / dx^2.
pub const C_STAB: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Half-width of the domain [-L, L].
    pub l: f64,
    pub dx: f64,
    pub dt: f64,
    pub t_end: f64,
    pub sponge_width: f64,
    pub sponge_strength: f64,
    pub snapshot_times: Vec<f64>,
    /// Width of the tanh ramp replacing the jump of an exact step; 4 dx when unset.
    pub ramp_width: Option<f64>,
    /// max |q| beyond which the run is declared blown up.
    pub blowup_threshold: f64,
}

impl SimulationConfig {
    /// dt = C_STAB dx^2, sponge 10% of L, strength 1.
    pub fn new(l: f64, dx: f64, t_end: f64, snapshot_times: Vec<f64>) -> Self {
        SimulationConfig {
            l,
            dx,
            dt: C_STAB * dx * dx,
            t_end,
            sponge_width: 0.1 * l,
            sponge_strength: 1.0,
            snapshot_times,
            ramp_width: None,
            blowup_threshold: 1e6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.l > 0.0 && self.dx > 0.0 && self.dt > 0.0 && self.t_end >= 0.0) {
            return bad(format!("L, dx, dt must be positive and t_end nonnegative ({self:?})"));
        }
        let ratio = self.l / self.dx;
        if (ratio - ratio.round()).abs() > 1e-6 || ratio.round() < 4.0 {
            return bad(format!("L / dx = {ratio} must be an integer of at least 4"));
        }
        if self.dt > C_STAB * self.dx * self.dx * (1.0 + 1e-12) {
            return bad(format!("dt = {} exceeds {C_STAB} dx^2 = {}", self.dt, C_STAB * self.dx * self.dx));
        }
        if !(self.sponge_width >= 0.0 && self.sponge_width < self.l && self.sponge_strength >= 0.0) {
            return bad("sponge width must lie in [0, L) and strength be nonnegative".into());
        }
        if let Some(w) = self.ramp_width {
            if !(w > 0.0) {
                return bad(format!("ramp width must be positive, got {w}"));
            }
        }
        for &t in &self.snapshot_times {
            if !(t >= 0.0 && t <= self.t_end * (1.0 + 1e-12)) {
                return bad(format!("snapshot time {t} outside [0, {}]", self.t_end));
            }
        }
        Ok(())
    }

    pub fn half_nodes(&self) -> usize {
        (self.l / self.dx).round() as usize
    }

    /// Half-width of the region free of sponge influence.
    pub fn trusted_half_width(&self) -> f64 {
        self.l - self.sponge_width - 2.0 * self.dx
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSnapshot {
    pub t: f64,
    pub l: f64,
    pub dx: f64,
    pub trusted: f64,
    pub q: Vec<Complex64>,
}

impl FieldSnapshot {
    pub fn x(&self, j: usize) -> f64 {
        -self.l + j as f64 * self.dx
    }

    /// Cubic interpolation of q at x inside the trusted region.
    pub fn value_at(&self, x: f64) -> Result<Complex64> {
        if !(x.abs() <= self.trusted + 1e-12) {
            return Err(Error::OutOfDomain { x, limit: self.trusted });
        }
        let s = (x + self.l) / self.dx;
        let j = s.round();
        if (s - j).abs() < 1e-9 {
            return Ok(self.q[j as usize]);
        }
        Ok(cubic_interp(&self.q, s))
    }

    /// dx * sum_j q(x_j) conj(q(-x_j)), the first AKNS conserved quantity
    /// for data vanishing at both ends.
    pub fn conserved_functional(&self) -> Complex64 {
        let n = self.q.len();
        self.q.iter().zip(self.q.iter().rev()).map(|(a, b)| a * b.conj()).sum::<Complex64>() * self.dx
            - (self.q[0] * self.q[n - 1].conj() + self.q[n - 1] * self.q[0].conj()) * (0.5 * self.dx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowUpInfo {
    pub t_last: f64,
    pub t_est: f64,
    pub max_abs: f64,
    pub x_at: f64,
}

impl From<BlowUpInfo> for Error {
    fn from(b: BlowUpInfo) -> Self {
        Error::BlowUp { t_last: b.t_last, t_est: b.t_est, max_abs: b.max_abs, x_at: b.x_at }
    }
}

/// Snapshots reached before the run ended, and the blow-up record if it
/// ended early.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutcome {
    pub snapshots: Vec<FieldSnapshot>,
    pub blow_up: Option<BlowUpInfo>,
    pub ramp_width: f64,
}

/// Initial grid values: exact steps get a tanh ramp at x = R, sampled
/// profiles are interpolated.
pub fn initial_field(profile: &InitialProfile, cfg: &SimulationConfig) -> Vec<Complex64> {
    let m = cfg.half_nodes();
    let dx = cfg.l / m as f64;
    let w = cfg.ramp_width.unwrap_or(4.0 * dx);
    let a = profile.bg.a;
    (0..=2 * m)
        .map(|j| {
            let x = -cfg.l + j as f64 * dx;
            if profile.is_analytic() {
                Complex64::new(0.5 * a * (1.0 + ((x - profile.bg.r) / w).tanh()), 0.0)
            } else {
                profile.eval(x)
            }
        })
        .collect()
}

pub fn simulate(profile: &InitialProfile, cfg: &SimulationConfig) -> Result<Vec<FieldSnapshot>> {
    let out = simulate_partial(profile, cfg)?;
    match out.blow_up {
        Some(b) => Err(b.into()),
        None => Ok(out.snapshots),
    }
}

pub fn simulate_partial(profile: &InitialProfile, cfg: &SimulationConfig) -> Result<SimulationOutcome> {
    cfg.validate()?;
    if cfg.l < profile.support_half_width() + cfg.sponge_width {
        return Err(Error::Config(format!(
            "domain half-width {} does not contain the profile support plus sponge",
            cfg.l
        )));
    }
    let q0 = initial_field(profile, cfg);
    let ramp = cfg.ramp_width.unwrap_or(4.0 * cfg.l / cfg.half_nodes() as f64);
    let mut out = simulate_field(q0, ZERO, Complex64::new(profile.bg.a, 0.0), cfg)?;
    out.ramp_width = ramp;
    Ok(out)
}

/// Evolve grid values `q0` on x_j = -L + j dx with backgrounds `left` at
/// -infinity and `right` at +infinity.
pub fn simulate_field(q0: Vec<Complex64>, left: Complex64, right: Complex64, cfg: &SimulationConfig) -> Result<SimulationOutcome> {
    cfg.validate()?;
    let m = cfg.half_nodes();
    let n = 2 * m + 1;
    if q0.len() != n {
        return Err(Error::Config(format!("initial field has {} nodes, grid has {n}", q0.len())));
    }
    let dx = cfg.l / m as f64;
    let op = Operator::new(cfg, m, dx, left, right);
    let mut times: Vec<f64> = cfg.snapshot_times.clone();
    times.sort_by(f64::total_cmp);
    times.dedup();

    let mut stepper = Rk4::new(n);
    let mut q = q0;
    let mut t = 0.0;
    let mut snapshots = Vec::with_capacity(times.len());
    let mut history: Vec<(f64, f64)> = Vec::new();
    let trusted = cfg.trusted_half_width();
    let snap = |t: f64, q: &[Complex64]| FieldSnapshot { t, l: cfg.l, dx, trusted, q: q.to_vec() };

    for &target in &times {
        while t < target - 1e-12 * target.max(1.0) {
            let h = cfg.dt.min(target - t);
            stepper.step(&op, &mut q, h);
            t += h;
            let (max_abs, j) = max_abs(&q);
            if !max_abs.is_finite() || max_abs > cfg.blowup_threshold {
                let t_est = estimate_blowup(&history, t, max_abs);
                return Ok(SimulationOutcome {
                    snapshots,
                    blow_up: Some(BlowUpInfo { t_last: t, t_est, max_abs, x_at: -cfg.l + j as f64 * dx }),
                    ramp_width: 0.0,
                });
            }
            if history.last().is_none_or(|&(tl, _)| t - tl >= 1e-3) {
                history.push((t, max_abs));
            }
        }
        snapshots.push(snap(target, &q));
    }
    Ok(SimulationOutcome { snapshots, blow_up: None, ramp_width: 0.0 })
}

fn max_abs(q: &[Complex64]) -> (f64, usize) {
    let mut best = (0.0, 0);
    for (j, v) in q.iter().enumerate() {
        let a = v.norm();
        if a.is_nan() {
            return (f64::NAN, j);
        }
        if a > best.0 {
            best = (a, j);
        }
    }
    best
}

/// Extrapolate 1/max|q| linearly to zero from the last recorded growth.
fn estimate_blowup(history: &[(f64, f64)], t: f64, max_abs: f64) -> f64 {
    let finite: Vec<&(f64, f64)> = history.iter().filter(|(_, v)| v.is_finite() && *v > 0.0).collect();
    if finite.len() < 2 {
        return t;
    }
    let (t2, v2) = *finite[finite.len() - 1];
    let target = 0.5 * v2.max(1e-300);
    let first = finite.iter().rev().find(|(_, v)| *v <= target).copied();
    let (t1, v1) = match first {
        Some(&p) => p,
        None => *finite[0],
    };
    let (y1, y2) = (1.0 / v1, 1.0 / v2);
    if y1 <= y2 || t2 <= t1 {
        return t;
    }
    let est = t2 + y2 * (t2 - t1) / (y1 - y2);
    if max_abs.is_finite() { est.max(t) } else { est.max(t2) }
}

struct Operator {
    n: usize,
    inv12dx2: f64,
    left: Complex64,
    right: Complex64,
    sponge: Vec<f64>,
    background: Vec<Complex64>,
}

impl Operator {
    fn new(cfg: &SimulationConfig, m: usize, dx: f64, left: Complex64, right: Complex64) -> Self {
        let n = 2 * m + 1;
        let inner = cfg.l - cfg.sponge_width;
        let sponge = (0..n)
            .map(|j| {
                let x = -cfg.l + j as f64 * dx;
                if cfg.sponge_width > 0.0 && x.abs() > inner {
                    cfg.sponge_strength * (0.5 * PI * (cfg.l - x.abs()) / cfg.sponge_width).cos().powi(2)
                } else {
                    0.0
                }
            })
            .collect();
        let background = (0..n)
            .map(|j| match j.cmp(&m) {
                std::cmp::Ordering::Less => left,
                std::cmp::Ordering::Greater => right,
                std::cmp::Ordering::Equal => 0.5 * (left + right),
            })
            .collect();
        Operator { n, inv12dx2: 1.0 / (12.0 * dx * dx), left, right, sponge, background }
    }

    fn at(&self, q: &[Complex64], j: isize) -> Complex64 {
        if j < 0 {
            self.left
        } else if j as usize >= self.n {
            self.right
        } else {
            q[j as usize]
        }
    }

    fn rhs_point(&self, q: &[Complex64], j: usize) -> Complex64 {
        let qj = q[j];
        let lap = if j >= 2 && j + 2 < self.n {
            -q[j - 2] + 16.0 * q[j - 1] - 30.0 * qj + 16.0 * q[j + 1] - q[j + 2]
        } else {
            let ji = j as isize;
            -self.at(q, ji - 2) + 16.0 * self.at(q, ji - 1) - 30.0 * qj + 16.0 * self.at(q, ji + 1)
                - self.at(q, ji + 2)
        } * self.inv12dx2;
        let mirror = q[self.n - 1 - j].conj();
        I * lap - 2.0 * I * qj * qj * mirror - self.sponge[j] * (qj - self.background[j])
    }

    fn rhs(&self, q: &[Complex64], out: &mut [Complex64]) {
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let base = c * CHUNK;
            for (i, o) in chunk.iter_mut().enumerate() {
                *o = self.rhs_point(q, base + i);
            }
        });
    }
}

struct Rk4 {
    k: [Vec<Complex64>; 4],
    tmp: Vec<Complex64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Rk4 { k: [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]], tmp: vec![ZERO; n] }
    }

    fn stage(tmp: &mut [Complex64], q: &[Complex64], k: &[Complex64], h: f64) {
        tmp.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let base = c * CHUNK;
            for (i, o) in chunk.iter_mut().enumerate() {
                *o = q[base + i] + h * k[base + i];
            }
        });
    }

    fn step(&mut self, op: &Operator, q: &mut [Complex64], h: f64) {
        let [k1, k2, k3, k4] = &mut self.k;
        op.rhs(q, k1);
        Self::stage(&mut self.tmp, q, k1, 0.5 * h);
        op.rhs(&self.tmp, k2);
        Self::stage(&mut self.tmp, q, k2, 0.5 * h);
        op.rhs(&self.tmp, k3);
        Self::stage(&mut self.tmp, q, k3, h);
        op.rhs(&self.tmp, k4);
        let (k1, k2, k3, k4) = (&*k1, &*k2, &*k3, &*k4);
        q.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let base = c * CHUNK;
            for (i, o) in chunk.iter_mut().enumerate() {
                let j = base + i;
                *o += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        });
    }
}

fn find_snapshot(snapshots: &[FieldSnapshot], t: f64) -> Result<&FieldSnapshot> {
    snapshots
        .iter()
        .find(|s| (s.t - t).abs() <= 1e-9 * t.abs().max(1.0))
        .ok_or(Error::MissingSnapshot(t))
}

/// q(4 xi t, t) from the snapshot at time t.
pub fn ray_value(snapshots: &[FieldSnapshot], xi: f64, t: f64) -> Result<Complex64> {
    find_snapshot(snapshots, t)?.value_at(4.0 * xi * t)
}

/// q(x, t) from the snapshot at time t.
pub fn field_value(snapshots: &[FieldSnapshot], x: f64, t: f64) -> Result<Complex64> {
    find_snapshot(snapshots, t)?.value_at(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayRecord {
    pub xi: f64,
    pub t: f64,
    pub family: Family,
    pub m: usize,
    pub q_num: Complex64,
    pub leading: Complex64,
    pub predicted: Complex64,
    /// |q_num - leading|.
    pub abs_err: f64,
    /// abs_err / |leading|, absent in decay sectors.
    pub rel_err: Option<f64>,
    /// |q_num - leading - oscillatory terms|.
    pub abs_err_full: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeRecord {
    pub xi: f64,
    pub family: Family,
    pub m: usize,
    pub ts: Vec<f64>,
    /// Least-squares slope of ln|q_num - leading| against ln t.
    pub fitted_slope: f64,
    /// Largest t-power among the predicted oscillatory terms.
    pub predicted_exponent: f64,
    /// -1/2 + |Im nu - m|.
    pub reference_exponent: f64,
    pub within_tolerance: bool,
    /// Local maxima of |q_num - leading| over t never increase.
    pub envelope_decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub records: Vec<RayRecord>,
    pub slopes: Vec<SlopeRecord>,
    pub slope_tolerance: f64,
}

impl ErrorReport {
    pub fn all_slopes_ok(&self) -> bool {
        self.slopes.iter().all(|s| s.within_tolerance)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Least-squares slope of y against x.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Envelope of local maxima (interior peaks plus endpoints) is nonincreasing.
pub fn envelope_decreasing(v: &[f64]) -> bool {
    let n = v.len();
    let peaks: Vec<f64> = (0..n)
        .filter(|&i| (i == 0 || v[i] >= v[i - 1]) && (i + 1 == n || v[i] >= v[i + 1]) || i + 1 == n)
        .map(|i| v[i])
        .collect();
    peaks.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12))
}

pub const SLOPE_TOLERANCE: f64 = 0.15;

/// Per-(xi, t) errors and per-xi slope fits of predictions against snapshots.
pub fn compare(predictions: &[AsymptoticPrediction], snapshots: &[FieldSnapshot]) -> Result<ErrorReport> {
    let mut records = Vec::with_capacity(predictions.len());
    for p in predictions {
        let q = ray_value(snapshots, p.xi, p.t)?;
        let predicted = p.value();
        let abs_err = (q - p.leading).norm();
        records.push(RayRecord {
            xi: p.xi,
            t: p.t,
            family: p.sector.family,
            m: p.sector.m,
            q_num: q,
            leading: p.leading,
            predicted,
            abs_err,
            rel_err: if p.sector.family.is_plateau() { Some(abs_err / p.leading.norm()) } else { None },
            abs_err_full: (q - predicted).norm(),
        });
    }
    let mut xis: Vec<f64> = predictions.iter().map(|p| p.xi).collect();
    xis.sort_by(f64::total_cmp);
    xis.dedup();
    let mut slopes = Vec::new();
    for xi in xis {
        let mut rows: Vec<(&RayRecord, &AsymptoticPrediction)> =
            records.iter().zip(predictions).filter(|(r, _)| r.xi == xi).collect();
        rows.sort_by(|a, b| a.0.t.total_cmp(&b.0.t));
        if rows.len() < 2 {
            continue;
        }
        let ts: Vec<f64> = rows.iter().map(|r| r.0.t).collect();
        let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
        let errs: Vec<f64> = rows.iter().map(|r| r.0.abs_err).collect();
        let ly: Vec<f64> = errs.iter().map(|e| e.max(1e-300).ln()).collect();
        let fitted = fit_slope(&lx, &ly);
        let pred = rows[0].1;
        let predicted_exponent = pred.oscillatory.iter().map(|o| o.t_power).fold(f64::NEG_INFINITY, f64::max);
        let reference = -0.5 + (pred.nu.im - pred.sector.m as f64).abs();
        slopes.push(SlopeRecord {
            xi,
            family: pred.sector.family,
            m: pred.sector.m,
            ts,
            fitted_slope: fitted,
            predicted_exponent,
            reference_exponent: reference,
            within_tolerance: (fitted - reference).abs() <= SLOPE_TOLERANCE,
            envelope_decreasing: envelope_decreasing(&errs),
        });
    }
    Ok(ErrorReport { records, slopes, slope_tolerance: SLOPE_TOLERANCE })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scattering::BackgroundParams;

    fn small_cfg(l: f64, dx: f64, t_end: f64) -> SimulationConfig {
        let mut cfg = SimulationConfig::new(l, dx, t_end, vec![t_end]);
        cfg.sponge_width = 2.0;
        cfg
    }

    #[test]
    fn zero_data_stays_zero() {
        let cfg = small_cfg(5.0, 0.1, 0.5);
        let q0 = vec![ZERO; 2 * cfg.half_nodes() + 1];
        let out = simulate_field(q0, ZERO, ZERO, &cfg).unwrap();
        assert!(out.snapshots[0].q.iter().all(|v| *v == ZERO));
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_cfg(5.0, 0.1, 1.0);
        cfg.dt = 0.3 * 0.01;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = small_cfg(5.0, 0.3, 1.0);
        cfg.l = 5.05;
        assert!(cfg.validate().is_err());
        let mut cfg = small_cfg(5.0, 0.1, 1.0);
        cfg.snapshot_times = vec![2.0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn node_values_are_returned_exactly() {
        let q: Vec<Complex64> = (0..21).map(|j| Complex64::new(j as f64, -(j as f64).sqrt())).collect();
        let s = FieldSnapshot { t: 1.0, l: 1.0, dx: 0.1, trusted: 0.8, q };
        assert_eq!(s.value_at(0.0).unwrap(), s.q[10]);
        assert_eq!(s.value_at(0.3).unwrap(), s.q[13]);
        assert!(matches!(s.value_at(0.9), Err(Error::OutOfDomain { .. })));
        let snaps = vec![s];
        assert_eq!(ray_value(&snaps, 0.0, 1.0).unwrap(), snaps[0].q[10]);
        assert!(matches!(ray_value(&snaps, 0.0, 2.0), Err(Error::MissingSnapshot(_))));
    }

    #[test]
    fn slope_and_envelope_helpers() {
        let x: Vec<f64> = [10.0f64, 20.0, 40.0].iter().map(|t| t.ln()).collect();
        let y: Vec<f64> = x.iter().map(|l| -0.3 * l + 1.0).collect();
        assert!((fit_slope(&x, &y) + 0.3).abs() < 1e-12);
        assert!(envelope_decreasing(&[1.0, 0.5, 0.7, 0.4, 0.45]));
        assert!(!envelope_decreasing(&[1.0, 0.5, 1.2]));
    }

    #[test]
    fn ramp_replaces_exact_step() {
        let bg = BackgroundParams::new(1.0, 2.0).unwrap();
        let cfg = small_cfg(10.0, 0.1, 1.0);
        let q = initial_field(&InitialProfile::pure_step(bg), &cfg);
        assert!(q[0].norm() < 1e-12 && (q[q.len() - 1].re - 1.0).abs() < 1e-12);
        let j = ((2.0 + 10.0) / 0.1f64).round() as usize;
        assert!((q[j].re - 0.5).abs() < 1e-12);
    }
}
