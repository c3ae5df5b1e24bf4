//! The scalar factor delta(k, xi) that removes the diagonal jump on
//! (-inf, -xi), together with nu(-xi) and chi(k, xi):
//!
//!   ln delta(k) = (1/2 pi i) int_{-inf}^{-xi} L(zeta) / (zeta - k) dzeta,
//!   delta(k)    = (k + xi)^{i nu} e^{chi(k)},
//!
//! where L = ln(1 - r1 r2) = -ln(a1 a2) is continued along the axis from 0
//! at -infinity. The Cauchy integral is evaluated after subtracting L's value
//! on short windows at the endpoint and, for k close to the contour, around
//! Re k; the subtracted piecewise constants integrate in closed form.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::scattering::SpectralData;
use crate::spectrum::{a1a2_real, WindingProfile};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Continuous logarithm L(zeta) = ln(1 - r1 r2)(zeta) = -ln(a1 a2)(zeta) on
/// the negative real axis.
#[derive(Clone)]
pub struct ContinuousLog {
    pub spec: Arc<dyn SpectralData>,
    pub table: Arc<WindingProfile>,
}

impl ContinuousLog {
    pub fn new(spec: Arc<dyn SpectralData>, table: Arc<WindingProfile>) -> Self {
        ContinuousLog { spec, table }
    }

    pub fn eval(&self, zeta: f64) -> Result<Complex64> {
        let v = a1a2_real(self.spec.as_ref(), zeta)?;
        let arg = self.table.arg_at(zeta, v)?;
        Ok(c(-v.norm().ln(), -arg))
    }

    /// Left end of the tabulated range.
    pub fn k_max(&self) -> f64 {
        -self.table.k[0]
    }
}

/// Quadrature cut-off for spectral data without a closed-form tail.
pub const JOST_K_QUAD: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseOptions {
    /// The Cauchy integrals are truncated to (-k_quad, -xi).
    pub k_quad: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Width of the endpoint subtraction window.
    pub h_end: f64,
    /// Distance from the contour below which a local window is subtracted.
    pub near_contour: f64,
}

impl PhaseOptions {
    /// Closed-form data afford a long quadrature range; data obtained by
    /// integrating the Jost equations use a shorter one.
    pub fn for_spec(spec: &dyn SpectralData) -> Self {
        let k_quad = if spec.tail_bound(1.0).is_some() { 1000.0 } else { JOST_K_QUAD };
        PhaseOptions { k_quad, abs_tol: 1e-12, rel_tol: 1e-12, h_end: 1.0, near_contour: 0.25 }
    }
}

/// nu(-xi), chi(-xi, xi), delta(0, xi) and the sector winding index m for
/// one direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseValues {
    pub xi: f64,
    pub nu: Complex64,
    pub chi_at_minus_xi: Complex64,
    pub delta0: Complex64,
    pub m: usize,
}

/// A point k with the phase theta(k, xi) = 4 k xi + 2 k^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub k: Complex64,
    pub xi: f64,
    pub theta: Complex64,
}

impl PhasePoint {
    pub fn new(k: Complex64, xi: f64) -> Self {
        PhasePoint { k, xi, theta: 4.0 * k * xi + 2.0 * k * k }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImNuBranch {
    Low,
    Middle,
    High,
}

/// Which of the three regimes of Im nu relative to m applies.
pub fn im_nu_branch(nu: Complex64, m: usize) -> Result<ImNuBranch> {
    let d = nu.im - m as f64;
    if !(d > -0.5 && d < 0.5) {
        return Err(Error::SectorInconsistency { im_nu: nu.im, m, lo: m as f64 - 0.5, hi: m as f64 + 0.5 });
    }
    // The closed end of the outer bands is honored up to rounding.
    let edge = 1.0 / 6.0 - 1e-12;
    Ok(if d <= -edge {
        ImNuBranch::Low
    } else if d < edge {
        ImNuBranch::Middle
    } else {
        ImNuBranch::High
    })
}

type CacheKey = (u64, u64, u64);

#[derive(Default)]
struct PhaseCache {
    values: RwLock<HashMap<u64, PhaseValues>>,
    deltas: RwLock<HashMap<CacheKey, Complex64>>,
}

/// Evaluates and caches the phase quantities for one spectral data set.
/// Shareable across threads; insertion is idempotent.
pub struct PhaseEngine {
    pub log: ContinuousLog,
    pub opts: PhaseOptions,
    cache: PhaseCache,
}

struct Window {
    a: f64,
    b: f64,
    value: Complex64,
}

impl PhaseEngine {
    pub fn new(log: ContinuousLog, opts: PhaseOptions) -> Result<Self> {
        if opts.k_quad > log.k_max() {
            return Err(Error::Config(format!(
                "quadrature range {} exceeds the winding table range {}",
                opts.k_quad,
                log.k_max()
            )));
        }
        Ok(PhaseEngine { log, opts, cache: PhaseCache::default() })
    }

    pub fn spec(&self) -> &dyn SpectralData {
        self.log.spec.as_ref()
    }

    fn check_xi(&self, xi: f64) -> Result<()> {
        if !(xi.is_finite() && xi > 0.0) {
            return Err(Error::Config(format!("direction xi must be positive, got {xi}")));
        }
        if xi >= self.opts.k_quad {
            return Err(Error::Config(format!("direction xi = {xi} beyond the quadrature range")));
        }
        Ok(())
    }

    /// nu(-xi) = -L(-xi) / 2 pi = (ln|a1 a2| + i Phi) / 2 pi.
    pub fn nu(&self, xi: f64) -> Result<Complex64> {
        self.check_xi(xi)?;
        let v = a1a2_real(self.spec(), -xi)?;
        let one_minus = 1.0 / v.norm();
        if one_minus < 1e-12 {
            return Err(Error::NearSingular(one_minus));
        }
        Ok(-self.log.eval(-xi)? / (2.0 * PI))
    }

    /// Bound on the neglected part of the Cauchy integral over (-inf, -k_quad),
    /// using |ln(1 - r1 r2)| <= 2 |r1 r2| there.
    pub fn tail_bound(&self, k: Complex64) -> Option<f64> {
        let kq = self.opts.k_quad;
        let r = self.spec().tail_bound(kq)?;
        // |r1 r2| <= r (kq/|zeta|)^2, |zeta - k| >= |zeta| - |k|
        let denom = (kq - k.norm()).max(1e-300);
        Some(2.0 * r * kq / denom / (2.0 * PI))
    }

    fn windows(&self, k: Complex64, xi: f64) -> Result<Vec<Window>> {
        let end = -xi;
        let kq = self.opts.k_quad;
        let mut h_end = self.opts.h_end;
        let mut out = Vec::new();
        let z0 = k.re;
        if k.im.abs() < self.opts.near_contour && z0 < end && z0 > -kq {
            let gap = end - z0;
            let h = 0.5f64.min(gap / 2.0).min(z0 + kq);
            if h > 0.0 {
                out.push(Window { a: z0 - h, b: z0 + h, value: self.log.eval(z0)? });
                h_end = h_end.min(gap - h);
            }
        }
        if h_end > 0.0 {
            out.push(Window { a: end - h_end, b: end, value: self.log.eval(end)? });
        }
        Ok(out)
    }

    /// Panels of about one oscillation period of the integrand plus the
    /// window edges.
    fn breaks(&self, xi: f64, windows: &[Window], extra: Option<f64>) -> Vec<f64> {
        let kq = self.opts.k_quad;
        let support = self.log.spec.background().r.max(1e-2);
        let len = (PI / (2.0 * support)).min(1.0);
        let mut b: Vec<f64> = Vec::new();
        let mut x = -kq;
        while x < -xi {
            b.push(x);
            x += len;
        }
        b.push(-xi);
        for w in windows {
            b.push(w.a);
            b.push(w.b);
        }
        if let Some(e) = extra {
            if e > -kq && e < -xi {
                b.push(e);
            }
        }
        b.sort_by(f64::total_cmp);
        b.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        b
    }

    /// The regular part (1/2 pi i) int (L - S)/(zeta - k) of ln delta and the
    /// windows that were subtracted.
    fn regular_part(&self, k: Complex64, xi: f64) -> Result<(Complex64, Vec<Window>)> {
        let windows = self.windows(k, xi)?;
        let breaks = self.breaks(xi, &windows, if k.im.abs() < self.opts.near_contour { Some(k.re) } else { None });
        let err = std::cell::Cell::new(None);
        let f = |zeta: f64| -> Complex64 {
            let l = match self.log.eval(zeta) {
                Ok(v) => v,
                Err(e) => {
                    err.set(Some(e.to_string()));
                    return Complex64::new(0.0, 0.0);
                }
            };
            let s = windows
                .iter()
                .find(|w| zeta >= w.a && zeta <= w.b)
                .map(|w| w.value)
                .unwrap_or(Complex64::new(0.0, 0.0));
            if zeta == k.re && k.im == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            (l - s) / (c(zeta, 0.0) - k)
        };
        let r = quad::integrate_panels(f, &breaks, self.opts.abs_tol, self.opts.rel_tol, 400_000);
        if let Some(e) = err.take() {
            return Err(Error::Nonconvergent(format!("phase integrand: {e}")));
        }
        if !r.converged {
            return Err(Error::Nonconvergent(format!(
                "Cauchy integral at k = {k}, xi = {xi}: error estimate {:.3e}",
                r.error
            )));
        }
        Ok((r.value / (2.0 * PI * I), windows))
    }

    /// ln delta(k, xi) on the principal branch structure fixed by the
    /// contour. k must not lie on (-inf, -xi].
    pub fn ln_delta(&self, k: Complex64, xi: f64) -> Result<Complex64> {
        self.check_xi(xi)?;
        if k.im == 0.0 && k.re <= -xi {
            return Err(Error::Branch(format!("{k} lies on the contour (-inf, {})", -xi)));
        }
        let (reg, windows) = self.regular_part(k, xi)?;
        let mut out = reg;
        for w in &windows {
            out += w.value / (2.0 * PI * I) * ((k - w.b).ln() - (k - w.a).ln());
        }
        Ok(out)
    }

    /// Boundary value of ln delta on the contour from above (`upper`) or
    /// below, from the off-contour values at distances eps and 2 eps with the
    /// first-order term in eps eliminated.
    pub fn ln_delta_boundary(&self, k: f64, xi: f64, upper: bool, eps: f64) -> Result<Complex64> {
        let s = if upper { eps } else { -eps };
        Ok(2.0 * self.ln_delta(c(k, s), xi)? - self.ln_delta(c(k, 2.0 * s), xi)?)
    }

    pub fn delta(&self, k: Complex64, xi: f64) -> Result<Complex64> {
        let key = (xi.to_bits(), k.re.to_bits(), k.im.to_bits());
        if let Some(&v) = self.cache.deltas.read().unwrap().get(&key) {
            return Ok(v);
        }
        let v = self.ln_delta(k, xi)?.exp();
        self.cache.deltas.write().unwrap().insert(key, v);
        Ok(v)
    }

    /// chi(k, xi) = ln delta(k, xi) - i nu(-xi) Log(k + xi).
    pub fn chi(&self, k: Complex64, xi: f64) -> Result<Complex64> {
        let nu = self.nu(xi)?;
        if (k + xi).norm() == 0.0 {
            return self.chi_at_stationary(xi);
        }
        Ok(self.ln_delta(k, xi)? - I * nu * (k + xi).ln())
    }

    /// chi(-xi, xi), the finite limit at the stationary point.
    pub fn chi_at_stationary(&self, xi: f64) -> Result<Complex64> {
        self.check_xi(xi)?;
        let k = c(-xi, 0.0);
        let windows = self.windows(c(xi.abs() + 1.0, 0.0), xi)?;
        let breaks = self.breaks(xi, &windows, None);
        let w = windows.last().expect("endpoint window");
        let err = std::cell::Cell::new(None);
        let f = |zeta: f64| -> Complex64 {
            if zeta >= -xi {
                // (L(zeta) - L(-xi)) / (zeta + xi) -> L'(-xi); the end node of
                // GK15 is never sampled.
                return Complex64::new(0.0, 0.0);
            }
            let l = match self.log.eval(zeta) {
                Ok(v) => v,
                Err(e) => {
                    err.set(Some(e.to_string()));
                    return Complex64::new(0.0, 0.0);
                }
            };
            let s = if zeta >= w.a { w.value } else { Complex64::new(0.0, 0.0) };
            (l - s) / (c(zeta, 0.0) - k)
        };
        let r = quad::integrate_panels(f, &breaks, self.opts.abs_tol, self.opts.rel_tol, 400_000);
        if let Some(e) = err.take() {
            return Err(Error::Nonconvergent(format!("phase integrand: {e}")));
        }
        if !r.converged {
            return Err(Error::Nonconvergent(format!("chi(-xi, xi) at xi = {xi}: error estimate {:.3e}", r.error)));
        }
        let nu = self.nu(xi)?;
        let h = w.b - w.a;
        Ok(r.value / (2.0 * PI * I) - I * nu * h.ln())
    }

    /// All per-direction quantities, cached by xi.
    pub fn phase_values(&self, xi: f64) -> Result<PhaseValues> {
        if let Some(&v) = self.cache.values.read().unwrap().get(&xi.to_bits()) {
            return Ok(v);
        }
        let nu = self.nu(xi)?;
        let m = nu.im.round().max(0.0) as usize;
        let v = PhaseValues {
            xi,
            nu,
            chi_at_minus_xi: self.chi_at_stationary(xi)?,
            delta0: self.delta(c(0.0, 0.0), xi)?,
            m,
        };
        self.cache.values.write().unwrap().insert(xi.to_bits(), v);
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scattering::{BackgroundParams, PureStepSpectral};
    use crate::spectrum::winding_profile;

    fn engine(a: f64, r: f64) -> PhaseEngine {
        let bg = BackgroundParams::new(a, r).unwrap();
        let spec: Arc<dyn SpectralData> = Arc::new(PureStepSpectral::new(bg));
        let table = Arc::new(winding_profile(spec.as_ref(), r).unwrap());
        let opts = PhaseOptions::for_spec(spec.as_ref());
        PhaseEngine::new(ContinuousLog::new(spec, table), opts).unwrap()
    }

    #[test]
    fn branch_classification() {
        assert_eq!(im_nu_branch(c(0.3, 2.0), 2).unwrap(), ImNuBranch::Middle);
        assert_eq!(im_nu_branch(c(0.0, 1.0 - 1.0 / 6.0), 1).unwrap(), ImNuBranch::Low);
        assert_eq!(im_nu_branch(c(0.0, 0.4), 0).unwrap(), ImNuBranch::High);
        assert_eq!(im_nu_branch(c(0.0, 1.0 / 6.0), 0).unwrap(), ImNuBranch::High);
        assert!(im_nu_branch(c(0.0, 0.6), 0).is_err());
    }

    #[test]
    fn theta_at_stationary_point() {
        let p = PhasePoint::new(c(-0.7, 0.0), 0.7);
        assert!((p.theta - c(-2.0 * 0.49, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn nu_real_part_matches_reflection() {
        let e = engine(1.0, 2.0);
        for &xi in &[0.1, 0.5, 1.0, 2.5] {
            let nu = e.nu(xi).unwrap();
            let a1 = e.spec().a1(c(-xi, 0.0)).unwrap();
            assert!((nu.re - a1.norm().ln() / (2.0 * PI)).abs() < 1e-14);
        }
    }

    #[test]
    fn delta_reference_values() {
        let e = engine(1.0, 2.0);
        let pv = e.phase_values(0.5).unwrap();
        assert!((pv.nu - c(0.0952, -0.0683)).norm() < 2e-4, "{}", pv.nu);
        assert!((pv.delta0 - c(0.97421, 0.00413)).norm() < 2e-5, "{}", pv.delta0);
        assert_eq!(pv.m, 0);
    }

    #[test]
    fn zero_background_is_trivial() {
        let e = engine(0.0, 1.0);
        assert_eq!(e.nu(0.3).unwrap(), c(0.0, 0.0));
        assert!((e.delta(c(0.2, 0.4), 0.3).unwrap() - 1.0).norm() < 1e-15);
        assert!(e.chi(c(0.2, 0.4), 0.3).unwrap().norm() < 1e-15);
    }
}
