//! Sector classification and the long-time prediction along rays x = 4 xi t:
//! plateau, oscillatory corrections alpha_1..alpha_6 with their t-powers,
//! remainder class, and the kink profiles along xi = +-Re p_j.
//!
//! Directions xi < 0 are handled through the mirrored direction
//! xi' = -xi > 0: every nu, chi, delta and r_j entering the x < 0 formulas
//! is evaluated with the xi' phase data.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::gamma;
use crate::phase::{im_nu_branch, ContinuousLog, ImNuBranch, PhaseEngine, PhaseOptions, PhaseValues};
use crate::scattering::{BackgroundParams, InitialProfile, PureStepSpectral, SpectralData};
use crate::table::TabulatedSpectral;
use crate::spectrum::{
    find_omegas, find_zeros, pure_step_zeros, verify_assumptions, winding_profile, AssumptionReport, OmegaSet,
    SearchBox, ZeroSet,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// xi in (-Re p_{n-m}, omega_{n-m}): modulated plateau.
    PlateauRight,
    /// xi in (-omega_{n-m}, Re p_{n-m}): decay.
    DecayFarLeft,
    /// xi in (Re p_{n-m}, -omega_{n-m-1}): plateau built from conj(delta(0, -xi)).
    PlateauLeft,
    /// xi in (omega_{n-m-1}, -Re p_{n-m}): decay.
    DecayInner,
}

impl Family {
    pub fn is_plateau(self) -> bool {
        matches!(self, Family::PlateauRight | Family::PlateauLeft)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::PlateauRight => "PlateauRight",
            Family::DecayFarLeft => "DecayFarLeft",
            Family::PlateauLeft => "PlateauLeft",
            Family::DecayInner => "DecayInner",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sector {
    pub family: Family,
    pub m: usize,
}

/// Sorted sector boundaries {0, +-Re p_j, +-omega_j}.
pub fn boundaries(zeros: &ZeroSet, omegas: &OmegaSet) -> Vec<f64> {
    let mut b = vec![0.0];
    for p in &zeros.p {
        b.push(p.re);
        b.push(-p.re);
    }
    for &w in &omegas.omegas {
        b.push(w);
        b.push(-w);
    }
    b.sort_by(f64::total_cmp);
    b
}

/// Relative width of the excluded band around each boundary, as a fraction
/// of the smaller adjacent gap.
pub const GUARD_FRACTION: f64 = 0.05;

pub fn classify(xi: f64, zeros: &ZeroSet, omegas: &OmegaSet) -> Result<Sector> {
    let n = zeros.n();
    if n == 0 {
        return Err(Error::Assumption("no zeros of a1: the sector structure is undefined".into()));
    }
    if !xi.is_finite() {
        return Err(Error::Config(format!("direction must be finite, got {xi}")));
    }
    let b = boundaries(zeros, omegas);
    for i in 0..b.len() {
        let left = if i > 0 { b[i] - b[i - 1] } else { f64::INFINITY };
        let right = if i + 1 < b.len() { b[i + 1] - b[i] } else { f64::INFINITY };
        let width = GUARD_FRACTION * left.min(right);
        if (xi - b[i]).abs() < width {
            return Err(Error::TransitionZone { xi, boundary: b[i], width });
        }
    }
    let xp = xi.abs();
    let m = omegas.omegas.iter().filter(|&&w| w > xp).count();
    let rp = -zeros.p(n - m).re;
    let family = match (xi > 0.0, xp < rp) {
        (true, true) => Family::DecayInner,
        (true, false) => Family::PlateauRight,
        (false, true) => Family::PlateauLeft,
        (false, false) => Family::DecayFarLeft,
    };
    Ok(Sector { family, m })
}

/// Which remainder estimate applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RemainderKind {
    R1,
    R2,
    R3,
}

/// O(t^exponent), or O(t^exponent ln t) when `log` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderClass {
    pub kind: RemainderKind,
    pub exponent: f64,
    pub log: bool,
}

impl RemainderClass {
    /// `d` is Im nu - m at the (mirrored) direction.
    pub fn new(kind: RemainderKind, d: f64) -> Self {
        let at_m = d.abs() < 1e-12;
        let grow = -1.0 + 2.0 * d.abs();
        let exponent = match (kind, at_m) {
            (_, true) => -1.0,
            (RemainderKind::R1, false) => if d > 0.0 { -1.0 } else { grow },
            (RemainderKind::R2, false) => if d > 0.0 { grow } else { -1.0 },
            (RemainderKind::R3, false) => grow,
        };
        RemainderClass { kind, exponent, log: at_m }
    }
}

/// amplitude * t^t_power * exp{i (phase_coeff t + logt_coeff ln t)}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatoryTerm {
    /// j of alpha_j.
    pub index: u8,
    pub amplitude: Complex64,
    pub t_power: f64,
    pub phase_coeff: f64,
    pub logt_coeff: f64,
}

impl OscillatoryTerm {
    pub fn value(&self, t: f64) -> Complex64 {
        self.amplitude * t.powf(self.t_power) * (I * (self.phase_coeff * t + self.logt_coeff * t.ln())).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticPrediction {
    pub xi: f64,
    pub t: f64,
    pub sector: Sector,
    pub branch: Option<ImNuBranch>,
    /// nu at the direction |xi| (nu(-|xi|)).
    pub nu: Complex64,
    pub leading: Complex64,
    pub oscillatory: Vec<OscillatoryTerm>,
    pub remainder: RemainderClass,
}

impl AsymptoticPrediction {
    /// Leading term plus all oscillatory corrections at `self.t`.
    pub fn value(&self) -> Complex64 {
        self.leading + self.oscillatory.iter().map(|o| o.value(self.t)).sum::<Complex64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KinkSide {
    /// x = -4 Re p t + x0.
    XPositive,
    /// x = 4 Re p t - x0.
    XNegative,
}

/// Kink along xi = -+Re p_{n-m}; `f0` is f^as at x0 = 0, t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinkProfile {
    pub m: usize,
    pub side: KinkSide,
    pub p: Complex64,
    pub c0: Complex64,
    pub f0: Complex64,
}

impl KinkProfile {
    pub fn f_as(&self, x0: f64, t: f64) -> Complex64 {
        self.f0 * (2.0 * I * self.p * x0 - 4.0 * I * t * self.p.norm_sqr()).exp()
    }

    pub fn x_of(&self, x0: f64, t: f64) -> f64 {
        match self.side {
            KinkSide::XPositive => -4.0 * self.p.re * t + x0,
            KinkSide::XNegative => 4.0 * self.p.re * t - x0,
        }
    }

    pub fn value(&self, x0: f64, t: f64) -> Result<Complex64> {
        let f = self.f_as(x0, t);
        let p2 = self.p * self.p;
        let den = p2 + self.c0 * f;
        if den.norm() < 1e-8 {
            return Err(Error::KinkBlowUp(den.norm()));
        }
        Ok(match self.side {
            KinkSide::XPositive => 2.0 * I * p2 * self.c0 / den,
            KinkSide::XNegative => -2.0 * I * p2.conj() * f.conj() / den.conj(),
        })
    }
}

/// (c0^as, c0^as#) for direction xi > 0 in sector index m.
pub fn c0_values(xi: f64, m: usize, zeros: &ZeroSet, bg: BackgroundParams, delta0: Complex64) -> Result<(Complex64, Complex64)> {
    if xi == 0.0 {
        return Err(Error::SingularDirection);
    }
    let n = zeros.n();
    if m >= n {
        return Err(Error::Config(format!("sector index {m} out of range for n = {n}")));
    }
    let d2 = delta0 * delta0;
    let mut prod = c(1.0, 0.0);
    for s in 0..m {
        let r = xi / zeros.p(n - s);
        prod *= r * r;
    }
    let pm = zeros.p(n - m);
    let c0 = bg.a * d2 / (2.0 * I) * prod;
    let sharp = 2.0 * I * pm * pm / (bg.a * d2) / prod;
    Ok((c0, sharp))
}

/// beta and gamma of the parabolic-cylinder parametrix from the modified
/// reflection coefficients at -xi and nu_check = nu - i m.
pub fn beta_gamma(r1_check: Complex64, r2_check: Complex64, nu_check: Complex64) -> Result<(Complex64, Complex64)> {
    for r in [r1_check, r2_check] {
        if r.norm() < 1e-14 {
            return Err(Error::DegenerateReflection(r.norm()));
        }
    }
    let pre = (2.0 * PI).sqrt() * (-PI / 2.0 * nu_check).exp();
    let beta = pre * (-3.0 * PI / 4.0 * I).exp() / (r1_check * gamma(-I * nu_check)?);
    let gamma_ = pre * (-PI / 4.0 * I).exp() / (r2_check * gamma(I * nu_check)?);
    Ok((beta, gamma_))
}

/// Everything the asymptotic formulas need: spectral data, phase engine,
/// zeros with norming constants and thresholds, after Assumptions (a)-(c)
/// have been verified.
pub struct AsymptoticModel {
    pub engine: Arc<PhaseEngine>,
    pub zeros: ZeroSet,
    pub omegas: OmegaSet,
    pub report: AssumptionReport,
}

impl AsymptoticModel {
    pub fn new(engine: Arc<PhaseEngine>, zeros: ZeroSet, omegas: OmegaSet, report: AssumptionReport) -> Result<Self> {
        let report = report.into_result()?;
        if !zeros.has_norming_constants() {
            return Err(Error::Config("zero set lacks norming constants".into()));
        }
        Ok(AsymptoticModel { engine, zeros, omegas, report })
    }

    /// Full pipeline for the exact shifted step with closed-form spectral data.
    pub fn for_pure_step(bg: BackgroundParams) -> Result<Self> {
        let spec: Arc<dyn SpectralData> = Arc::new(PureStepSpectral::new(bg));
        let zeros = pure_step_zeros(bg)?.with_norming_constants(&InitialProfile::pure_step(bg))?;
        Self::assemble(spec, zeros, bg.r)
    }

    /// Full pipeline for a sampled profile: Jost-equation spectral data and
    /// an argument-principle zero search.
    pub fn for_profile(profile: InitialProfile) -> Result<Self> {
        let bg = profile.bg;
        if let Some(n) = bg.bifurcation_index() {
            return Err(Error::Bifurcation { r: bg.r, n, half_a: bg.a / 2.0 });
        }
        let support = profile.support_half_width();
        let spec: Arc<dyn SpectralData> = Arc::new(TabulatedSpectral::for_profile(profile.clone())?);
        let a = bg.a.max(1.0);
        let bx = SearchBox::new(-a, a, 1e-3 * a, a);
        let zeros = find_zeros(spec.as_ref(), &bx)?.with_norming_constants(&profile)?;
        Self::assemble(spec, zeros, support)
    }

    fn assemble(spec: Arc<dyn SpectralData>, zeros: ZeroSet, support: f64) -> Result<Self> {
        let table = Arc::new(winding_profile(spec.as_ref(), support)?);
        let omegas = find_omegas(spec.as_ref(), &table, zeros.n())?;
        let report = verify_assumptions(spec.as_ref(), &zeros, &omegas, &table)?;
        let opts = PhaseOptions::for_spec(spec.as_ref());
        let engine = Arc::new(PhaseEngine::new(ContinuousLog::new(spec, table), opts)?);
        Self::new(engine, zeros, omegas, report)
    }

    pub fn spec(&self) -> &dyn SpectralData {
        self.engine.spec()
    }

    pub fn bg(&self) -> BackgroundParams {
        self.spec().background()
    }

    pub fn n(&self) -> usize {
        self.zeros.n()
    }

    pub fn classify(&self, xi: f64) -> Result<Sector> {
        classify(xi, &self.zeros, &self.omegas)
    }

    /// Phase data at the direction |xi|, checked against the sector index.
    fn phase_for(&self, xi: f64, m: usize) -> Result<PhaseValues> {
        let pv = self.engine.phase_values(xi.abs())?;
        im_nu_branch(pv.nu, m)?;
        Ok(pv)
    }

    pub fn c0_values(&self, xi: f64, m: usize) -> Result<(Complex64, Complex64)> {
        let pv = self.engine.phase_values(xi)?;
        c0_values(xi, m, &self.zeros, self.bg(), pv.delta0)
    }

    pub fn plateau(&self, sector: Sector, xi: f64) -> Result<Complex64> {
        let n = self.n();
        let m = sector.m;
        let a = self.bg().a;
        match sector.family {
            Family::DecayFarLeft | Family::DecayInner => Ok(c(0.0, 0.0)),
            Family::PlateauRight => {
                let pv = self.engine.phase_values(xi)?;
                let mut v = a * pv.delta0 * pv.delta0;
                for s in 0..m {
                    let r = xi / self.zeros.p(n - s);
                    v *= r * r;
                }
                Ok(v)
            }
            Family::PlateauLeft => {
                let pv = self.engine.phase_values(-xi)?;
                let pm = self.zeros.p(n - m).conj();
                let mut v = -4.0 * pm * pm / (a * (pv.delta0 * pv.delta0).conj());
                for s in 0..m {
                    let r = self.zeros.p(n - s).conj() / xi;
                    v *= r * r;
                }
                Ok(v)
            }
        }
    }

    /// alpha_j(xi) for the signed direction xi in sector index m; j = 1, 2, 4
    /// need xi > 0 and j = 3, 5, 6 need xi < 0.
    pub fn alpha(&self, j: u8, xi: f64, m: usize) -> Result<Complex64> {
        let n = self.n();
        if m >= n {
            return Err(Error::Config(format!("sector index {m} out of range for n = {n}")));
        }
        let positive = matches!(j, 1 | 2 | 4);
        if !matches!(j, 1..=6) {
            return Err(Error::Config(format!("alpha index must be 1..6, got {j}")));
        }
        if positive != (xi > 0.0) {
            return Err(Error::Config(format!("alpha_{j} is defined for xi {} 0, got {xi}", if positive { ">" } else { "<" })));
        }
        let xp = xi.abs();
        let pv = self.phase_for(xi, m)?;
        let (nu, chi) = (pv.nu, pv.chi_at_minus_xi);
        let mf = m as f64;
        let (r1, r2) = crate::scattering::reflection(self.spec(), -xp)?;
        let sqrt_pi = PI.sqrt();
        let ln2 = 2f64.ln();
        let p = |s: usize| self.zeros.p(n - s);
        let prod_plus = |upper: usize, pow: i32| -> Complex64 {
            (0..upper).map(|s| (xi + p(s)).powi(pow)).product()
        };
        let prod_conj = |upper: usize, pow: i32| -> Complex64 {
            (0..upper).map(|s| (p(s).conj() - xi).powi(pow)).product()
        };
        let nb = nu.conj();
        let cb = chi.conj();
        let value = match j {
            1 => {
                let (c0, _) = c0_values(xp, m, &self.zeros, self.bg(), pv.delta0)?;
                sqrt_pi * c0 * c0 * prod_plus(m, 2) / (xi * xi * r2 * gamma(I * nu + mf)?)
                    * (-PI / 2.0 * (nu - I * mf) + 3.0 * PI / 4.0 * I - 2.0 * chi + 3.0 * (I * nu + mf) * ln2).exp()
            }
            2 => {
                sqrt_pi * prod_plus(m, -2) / (r1 * gamma(-I * nu - mf)?)
                    * (-PI / 2.0 * (nu - I * mf) + PI / 4.0 * I + 2.0 * chi - 3.0 * (I * nu + mf) * ln2).exp()
            }
            4 => {
                sqrt_pi * xi * xi * prod_plus(m + 1, -2) / (r1 * gamma(-I * nu - mf)?)
                    * (-PI / 2.0 * (nu - I * mf) + PI / 4.0 * I + 2.0 * chi - 3.0 * (I * nu + mf) * ln2).exp()
            }
            3 => {
                sqrt_pi * prod_conj(m, 2) / (r2.conj() * gamma(-I * nb + mf)?)
                    * (-PI / 2.0 * (nb + I * mf) + PI / 4.0 * I - 2.0 * cb - 3.0 * (I * nb - mf) * ln2).exp()
            }
            5 => {
                sqrt_pi * prod_conj(m + 1, 2) / (xi * xi * r2.conj() * gamma(-I * nb + mf)?)
                    * (-PI / 2.0 * (nb + I * mf) + PI / 4.0 * I - 2.0 * cb - 3.0 * (I * nb - mf) * ln2).exp()
            }
            _ => {
                let (_, sharp) = c0_values(xp, m, &self.zeros, self.bg(), pv.delta0)?;
                let sb = sharp.conj();
                sqrt_pi * sb * sb * prod_conj(m + 1, -2) / (r1.conj() * gamma(I * nb - mf)?)
                    * (-PI / 2.0 * (nb + I * mf) + 3.0 * PI / 4.0 * I + 2.0 * cb + 3.0 * (I * nb - mf) * ln2).exp()
            }
        };
        Ok(value)
    }

    pub fn predict(&self, xi: f64, t: f64) -> Result<AsymptoticPrediction> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Config(format!("time must be positive, got {t}")));
        }
        let sector = self.classify(xi)?;
        let m = sector.m;
        let pv = self.phase_for(xi, m)?;
        let d = pv.nu.im - m as f64;
        let re_nu = pv.nu.re;
        let x2 = 4.0 * xi * xi;
        let term = |index: u8, t_power: f64, sign: f64| -> Result<OscillatoryTerm> {
            Ok(OscillatoryTerm {
                index,
                amplitude: self.alpha(index, xi, m)?,
                t_power,
                phase_coeff: sign * x2,
                logt_coeff: -sign * re_nu,
            })
        };
        let low = -0.5 - d;
        let high = -0.5 + d;
        let (branch, oscillatory, kind) = match sector.family {
            Family::PlateauRight => {
                let b = im_nu_branch(pv.nu, m)?;
                let terms = match b {
                    ImNuBranch::Low => vec![term(1, low, -1.0)?],
                    ImNuBranch::Middle => vec![term(1, low, -1.0)?, term(2, high, 1.0)?],
                    ImNuBranch::High => vec![term(2, high, 1.0)?],
                };
                (Some(b), terms, branch_remainder(b))
            }
            Family::PlateauLeft => {
                let b = im_nu_branch(pv.nu, m)?;
                let terms = match b {
                    ImNuBranch::Low => vec![term(5, low, 1.0)?],
                    ImNuBranch::Middle => vec![term(5, low, 1.0)?, term(6, high, -1.0)?],
                    ImNuBranch::High => vec![term(6, high, -1.0)?],
                };
                (Some(b), terms, branch_remainder(b))
            }
            Family::DecayInner => (None, vec![term(4, high, 1.0)?], RemainderKind::R2),
            Family::DecayFarLeft => (None, vec![term(3, low, 1.0)?], RemainderKind::R2),
        };
        Ok(AsymptoticPrediction {
            xi,
            t,
            sector,
            branch,
            nu: pv.nu,
            leading: self.plateau(sector, xi)?,
            oscillatory,
            remainder: RemainderClass::new(kind, d),
        })
    }

    /// Kink along xi = -Re p_{n-m} (XPositive) or xi = Re p_{n-m} (XNegative).
    pub fn kink_profile(&self, m: usize, side: KinkSide) -> Result<KinkProfile> {
        let n = self.n();
        if m >= n {
            return Err(Error::Config(format!("sector index {m} out of range for n = {n}")));
        }
        let p = self.zeros.p(n - m);
        let eta = self.zeros.eta(n - m).ok_or_else(|| Error::Config("missing norming constant".into()))?;
        let xk = -p.re;
        let pv = self.engine.phase_values(xk)?;
        let (c0, _) = c0_values(xk, m, &self.zeros, self.bg(), pv.delta0)?;
        let dp = self.engine.delta(p, xk)?;
        let a1dot = self.spec().a1_derivative(p)?;
        let f0 = eta / (a1dot * dp * dp);
        Ok(KinkProfile { m, side, p, c0, f0 })
    }

    pub fn kink(&self, m: usize, side: KinkSide, x0: f64, t: f64) -> Result<Complex64> {
        self.kink_profile(m, side)?.value(x0, t)
    }
}

fn branch_remainder(b: ImNuBranch) -> RemainderKind {
    match b {
        ImNuBranch::Low => RemainderKind::R1,
        ImNuBranch::Middle => RemainderKind::R3,
        ImNuBranch::High => RemainderKind::R2,
    }
}
