//! Jost solutions at the origin and the spectral functions a1, a2, b.
//!
//! Convention: Psi_x + i k sigma3 Psi = U(x) Psi with
//! U(x) = [[0, q(x)], [-sigma conj(q(-x)), 0]] and sigma = -1.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, Mat2, OdeOptions, Vec2};

pub const SIGMA: f64 = -1.0;

/// Smallest |k| accepted by generic evaluation.
pub const K_GUARD: f64 = 1e-3;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundParams {
    pub a: f64,
    pub r: f64,
}

impl BackgroundParams {
    /// Accepts `A >= 0` (A = 0 is the trivial zero-background case) and `R > 0`.
    /// Proximity to a bifurcation value `R = n pi / A` is checked by the
    /// operations that depend on it, see [`BackgroundParams::bifurcation_index`].
    pub fn new(a: f64, r: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::Config(format!("amplitude A must be finite and >= 0, got {a}")));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::Config(format!("shift R must be finite and > 0, got {r}")));
        }
        Ok(BackgroundParams { a, r })
    }

    /// `Some(n)` when `|R A / pi - n| < 1e-6 pi` for a positive integer n.
    pub fn bifurcation_index(&self) -> Option<usize> {
        if self.a == 0.0 {
            return None;
        }
        let ratio = self.r * self.a / std::f64::consts::PI;
        let n = ratio.round();
        if n >= 1.0 && (ratio - n).abs() < 1e-6 * std::f64::consts::PI {
            Some(n as usize)
        } else {
            None
        }
    }

    /// Number of zero pairs of a1 for the pure step, `(n-1) pi/A < R < n pi/A`.
    pub fn zero_count(&self) -> usize {
        if self.a == 0.0 {
            return 0;
        }
        (self.r * self.a / std::f64::consts::PI).ceil() as usize
    }

    pub(crate) fn n_minus(&self, k: Complex64) -> Mat2 {
        [[ONE, ZERO], [SIGMA * self.a / (c(0.0, 2.0) * k), ONE]]
    }

    pub(crate) fn n_plus(&self, k: Complex64) -> Mat2 {
        [[ONE, self.a / (c(0.0, 2.0) * k)], [ZERO, ONE]]
    }
}

/// Step-like initial datum: zero for x <= x_min, A for x >= x_max.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialProfile {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub samples: Vec<Complex64>,
    pub bg: BackgroundParams,
    analytic: bool,
}

impl InitialProfile {
    /// The exact shifted step: 0 for x < R, A for x > R. Samples are kept for
    /// inspection only; evaluation is exact.
    pub fn pure_step(bg: BackgroundParams) -> Self {
        let dx = bg.r / 64.0;
        let x_min = -bg.r - 4.0 * dx;
        let x_max = bg.r + 4.0 * dx;
        let n = ((x_max - x_min) / dx).round() as usize + 1;
        let samples = (0..n)
            .map(|i| {
                let x = x_min + i as f64 * dx;
                if x >= bg.r { c(bg.a, 0.0) } else { ZERO }
            })
            .collect();
        InitialProfile { x_min, x_max, dx, samples, bg, analytic: true }
    }

    pub fn from_samples(x_min: f64, dx: f64, samples: Vec<Complex64>, bg: BackgroundParams) -> Result<Self> {
        if samples.len() < 4 {
            return Err(Error::Config("profile needs at least 4 samples".into()));
        }
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::Config(format!("dx must be positive, got {dx}")));
        }
        let x_max = x_min + (samples.len() - 1) as f64 * dx;
        if !(x_min < -bg.r && bg.r < x_max) {
            return Err(Error::Config(format!(
                "profile support [{x_min}, {x_max}] must strictly contain [-R, R] = [{}, {}]",
                -bg.r, bg.r
            )));
        }
        let tol = 1e-9 * bg.a.max(1.0);
        let first = samples[0];
        let last = *samples.last().unwrap();
        if first.norm() > tol || (last - bg.a).norm() > tol {
            return Err(Error::Config(format!(
                "profile must equal 0 at x_min and A at x_max (got {first} and {last})"
            )));
        }
        Ok(InitialProfile { x_min, x_max, dx, samples, bg, analytic: false })
    }

    /// Samples `f` on the uniform grid x_min, x_min + dx, ..., reaching x_max.
    pub fn from_fn<F: Fn(f64) -> Complex64>(
        bg: BackgroundParams,
        x_min: f64,
        x_max: f64,
        dx: f64,
        f: F,
    ) -> Result<Self> {
        let n = ((x_max - x_min) / dx).round() as usize + 1;
        let samples = (0..n).map(|i| f(x_min + i as f64 * dx)).collect();
        Self::from_samples(x_min, dx, samples, bg)
    }

    pub fn is_analytic(&self) -> bool {
        self.analytic
    }

    /// q0 at x: exact for the pure step, cubic interpolation otherwise.
    pub fn eval(&self, x: f64) -> Complex64 {
        if self.analytic {
            return if x >= self.bg.r { c(self.bg.a, 0.0) } else { ZERO };
        }
        if x <= self.x_min {
            return ZERO;
        }
        if x >= self.x_max {
            return c(self.bg.a, 0.0);
        }
        cubic_interp(&self.samples, (x - self.x_min) / self.dx)
    }

    /// Half-width X such that U(x) equals its background outside [-X, X].
    pub fn support_half_width(&self) -> f64 {
        if self.analytic {
            self.bg.r
        } else {
            self.x_min.abs().max(self.x_max.abs())
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        if self.analytic {
            vec![-self.bg.r, self.bg.r]
        } else {
            vec![self.x_min, -self.x_min, self.x_max, -self.x_max]
        }
    }

    fn potential(&self, x: f64) -> Mat2 {
        [[ZERO, self.eval(x)], [-SIGMA * self.eval(-x).conj(), ZERO]]
    }
}

/// Four-point Lagrange interpolation at fractional index `s`.
pub fn cubic_interp(v: &[Complex64], s: f64) -> Complex64 {
    let n = v.len();
    let i = (s.floor() as isize).clamp(1, n as isize - 3) as usize;
    let t = s - i as f64;
    let (p0, p1, p2, p3) = (v[i - 1], v[i], v[i + 1], v[i + 2]);
    let w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
    let w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    let w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    let w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
    p0 * w0 + p1 * w1 + p2 * w2 + p3 * w3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JostKind {
    Psi1,
    Psi2,
}

/// Psi_1 or Psi_2 at x = 0, t = 0. `entries[row][col]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JostMatrix {
    pub entries: Mat2,
    pub k: Complex64,
    pub which: JostKind,
}

impl JostMatrix {
    pub fn column(&self, j: usize) -> Vec2 {
        [self.entries[0][j], self.entries[1][j]]
    }

    pub fn det(&self) -> Complex64 {
        det2(&self.entries)
    }
}

pub(crate) fn det2(m: &Mat2) -> Complex64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub(crate) fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut r = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

pub(crate) fn mat_inv(m: &Mat2) -> Mat2 {
    let d = det2(m);
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}

fn mat_vec(m: &Mat2, v: &Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn col_det(u: &Vec2, v: &Vec2) -> Complex64 {
    u[0] * v[1] - u[1] * v[0]
}

/// One Jost column at the origin. Psi_1 is integrated forward from -X with
/// normalization N_-, Psi_2 backward from +X with N_+.
pub fn jost_column(profile: &InitialProfile, k: Complex64, which: JostKind, col: usize) -> Result<Vec2> {
    if k == ZERO {
        return Err(Error::SingularPoint);
    }
    let bg = profile.bg;
    let x_edge = profile.support_half_width();
    let (n, u_bg, start) = match which {
        JostKind::Psi1 => (bg.n_minus(k), [[ZERO, ZERO], [c(-SIGMA * bg.a, 0.0), ZERO]], -x_edge),
        JostKind::Psi2 => (bg.n_plus(k), [[ZERO, c(bg.a, 0.0)], [ZERO, ZERO]], x_edge),
    };
    let n_inv = mat_inv(&n);
    let d = if col == 0 { [ZERO, c(0.0, 2.0) * k] } else { [c(0.0, -2.0) * k, ZERO] };
    let kmat = |x: f64| {
        let mut du = profile.potential(x);
        for i in 0..2 {
            for j in 0..2 {
                du[i][j] -= u_bg[i][j];
            }
        }
        mat_mul(&n_inv, &mat_mul(&du, &n))
    };
    let mut z0 = [ZERO, ZERO];
    z0[col] = ONE;
    let z = ode::integrate(d, kmat, start, 0.0, &profile.breakpoints(), z0, &OdeOptions::default())?;
    Ok(mat_vec(&n, &z))
}

pub fn jost_at_origin(profile: &InitialProfile, k: Complex64, which: JostKind) -> Result<JostMatrix> {
    let c0 = jost_column(profile, k, which, 0)?;
    let c1 = jost_column(profile, k, which, 1)?;
    Ok(JostMatrix { entries: [[c0[0], c1[0]], [c0[1], c1[1]]], k, which })
}

/// Spectral functions at one point. Each entry is present only where it is
/// defined: a1 on the closed upper half plane, a2 on the closed lower half
/// plane, b on the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpectralValues {
    pub a1: Option<Complex64>,
    pub a2: Option<Complex64>,
    pub b: Option<Complex64>,
}

pub fn spectral_functions(profile: &InitialProfile, k: Complex64) -> Result<SpectralValues> {
    if k == ZERO {
        return Err(Error::SingularPoint);
    }
    let mut out = SpectralValues::default();
    let need_upper = k.im >= 0.0;
    let need_lower = k.im <= 0.0;
    let p2_1 = if need_lower { Some(jost_column(profile, k, JostKind::Psi2, 0)?) } else { None };
    if need_upper {
        let p1_1 = jost_column(profile, k, JostKind::Psi1, 0)?;
        let p2_2 = jost_column(profile, k, JostKind::Psi2, 1)?;
        out.a1 = Some(col_det(&p1_1, &p2_2));
        if let (Some(p2_1), true) = (p2_1, k.im == 0.0) {
            out.b = Some(col_det(&p2_1, &p1_1));
        }
    }
    if let Some(p2_1) = p2_1 {
        let p1_2 = jost_column(profile, k, JostKind::Psi1, 1)?;
        out.a2 = Some(col_det(&p2_1, &p1_2));
    }
    Ok(out)
}

/// Closed forms for the pure step: returns (a1, a2, b) at k.
pub fn pure_step_spectral(bg: BackgroundParams, k: Complex64) -> Result<(Complex64, Complex64, Complex64)> {
    if k == ZERO {
        return Err(Error::SingularPoint);
    }
    let a = bg.a;
    let i = c(0.0, 1.0);
    let a1 = 1.0 - a * a / (4.0 * k * k) * (4.0 * i * k * bg.r).exp();
    let b = -a / (2.0 * i * k) * (2.0 * i * k * bg.r).exp();
    Ok((a1, ONE, b))
}

/// Values of everything needed on the real axis at a single k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealAxisValues {
    pub a1: Complex64,
    pub a2: Complex64,
    pub b: Complex64,
    /// b(-k)
    pub b_mirror: Complex64,
}

impl RealAxisValues {
    pub fn r1(&self) -> Complex64 {
        self.b / self.a1
    }

    pub fn r2(&self) -> Complex64 {
        self.b_mirror.conj() / self.a2
    }

    /// 1 - r1 r2, evaluated as 1/(a1 a2).
    pub fn one_minus_r1r2(&self) -> Complex64 {
        1.0 / (self.a1 * self.a2)
    }
}

/// Read-only spectral evaluator, shareable across threads.
pub trait SpectralData: Send + Sync {
    fn background(&self) -> BackgroundParams;

    fn a1(&self, k: Complex64) -> Result<Complex64>;

    fn a2(&self, k: Complex64) -> Result<Complex64>;

    fn b(&self, k: f64) -> Result<Complex64>;

    fn real_axis(&self, k: f64) -> Result<RealAxisValues> {
        let kc = c(k, 0.0);
        Ok(RealAxisValues { a1: self.a1(kc)?, a2: self.a2(kc)?, b: self.b(k)?, b_mirror: self.b(-k)? })
    }

    /// da1/dk; the default uses a four-point complex stencil, which needs
    /// a1 analytic in a disc of radius h around k.
    fn a1_derivative(&self, k: Complex64) -> Result<Complex64> {
        let h = 5e-3 * k.norm().clamp(0.1, 1.0);
        let i = c(0.0, 1.0);
        let f = |z| self.a1(z);
        Ok((f(k + h)? - f(k - h)? - i * f(k + i * h)? + i * f(k - i * h)?) / (4.0 * h))
    }

    /// ln(1 - r1 r2) is O(k^-2); this is a bound on |r1 r2| for |k| >= kmax
    /// when known in closed form.
    fn tail_bound(&self, _kmax: f64) -> Option<f64> {
        None
    }

    /// a1 a2 at real k.
    fn a1a2_real(&self, k: f64) -> Result<Complex64> {
        let kc = c(k, 0.0);
        Ok(self.a1(kc)? * self.a2(kc)?)
    }
}

/// (r1, r2) at real k, rejecting real zeros of a1 and a2.
pub fn reflection(spec: &dyn SpectralData, k: f64) -> Result<(Complex64, Complex64)> {
    if k == 0.0 {
        return Err(Error::SingularPoint);
    }
    let v = spec.real_axis(k)?;
    if v.a1.norm() < 1e-12 {
        return Err(Error::SpectralSingularity(k));
    }
    if v.a2.norm() < 1e-12 {
        return Err(Error::Assumption(format!("a2 vanishes at k = {k}")));
    }
    Ok((v.r1(), v.r2()))
}

/// Closed-form spectral data of the pure shifted step.
#[derive(Debug, Clone, Copy)]
pub struct PureStepSpectral {
    pub bg: BackgroundParams,
}

impl PureStepSpectral {
    pub fn new(bg: BackgroundParams) -> Self {
        PureStepSpectral { bg }
    }
}

impl SpectralData for PureStepSpectral {
    fn background(&self) -> BackgroundParams {
        self.bg
    }

    fn a1(&self, k: Complex64) -> Result<Complex64> {
        Ok(pure_step_spectral(self.bg, k)?.0)
    }

    fn a2(&self, k: Complex64) -> Result<Complex64> {
        if k == ZERO && self.bg.a != 0.0 {
            return Ok(ONE);
        }
        Ok(pure_step_spectral(self.bg, k)?.1)
    }

    fn b(&self, k: f64) -> Result<Complex64> {
        Ok(pure_step_spectral(self.bg, c(k, 0.0))?.2)
    }

    fn a1_derivative(&self, k: Complex64) -> Result<Complex64> {
        if k == ZERO {
            return Err(Error::SingularPoint);
        }
        let i = c(0.0, 1.0);
        let a2 = self.bg.a * self.bg.a;
        Ok(a2 / 4.0 * (4.0 * i * k * self.bg.r).exp() * (2.0 / (k * k * k) - 4.0 * i * self.bg.r / (k * k)))
    }

    fn tail_bound(&self, kmax: f64) -> Option<f64> {
        let a = self.bg.a;
        let r1r2 = a * a / (4.0 * kmax * kmax);
        Some(r1r2 / (1.0 - r1r2).max(1e-300))
    }
}

/// Spectral data computed from a sampled (or analytic) profile by
/// integrating the Jost equations.
#[derive(Debug, Clone)]
pub struct ProfileSpectral {
    pub profile: InitialProfile,
}

impl ProfileSpectral {
    pub fn new(profile: InitialProfile) -> Self {
        ProfileSpectral { profile }
    }
}

impl SpectralData for ProfileSpectral {
    fn background(&self) -> BackgroundParams {
        self.profile.bg
    }

    fn a1(&self, k: Complex64) -> Result<Complex64> {
        if k.im < 0.0 {
            return Err(Error::Config(format!("a1 is defined on the closed upper half plane, got k = {k}")));
        }
        let p1 = jost_column(&self.profile, k, JostKind::Psi1, 0)?;
        let p2 = jost_column(&self.profile, k, JostKind::Psi2, 1)?;
        Ok(col_det(&p1, &p2))
    }

    fn a2(&self, k: Complex64) -> Result<Complex64> {
        if k.im > 0.0 {
            return Err(Error::Config(format!("a2 is defined on the closed lower half plane, got k = {k}")));
        }
        let p2 = jost_column(&self.profile, k, JostKind::Psi2, 0)?;
        let p1 = jost_column(&self.profile, k, JostKind::Psi1, 1)?;
        Ok(col_det(&p2, &p1))
    }

    fn b(&self, k: f64) -> Result<Complex64> {
        let kc = c(k, 0.0);
        let p2 = jost_column(&self.profile, kc, JostKind::Psi2, 0)?;
        let p1 = jost_column(&self.profile, kc, JostKind::Psi1, 0)?;
        Ok(col_det(&p2, &p1))
    }

    fn real_axis(&self, k: f64) -> Result<RealAxisValues> {
        let kc = c(k, 0.0);
        let psi1 = jost_at_origin(&self.profile, kc, JostKind::Psi1)?;
        let psi2 = jost_at_origin(&self.profile, kc, JostKind::Psi2)?;
        let b_mirror = self.b(-k)?;
        Ok(RealAxisValues {
            a1: col_det(&psi1.column(0), &psi2.column(1)),
            a2: col_det(&psi2.column(0), &psi1.column(1)),
            b: col_det(&psi2.column(0), &psi1.column(0)),
            b_mirror,
        })
    }
}

/// eta with Psi_1^(1)(0,0,p) = eta Psi_2^(2)(0,0,p).
pub fn norming_constant(profile: &InitialProfile, p: Complex64) -> Result<Complex64> {
    if p.im <= 0.0 {
        return Err(Error::Config(format!("norming constants are defined at zeros in the upper half plane, got {p}")));
    }
    let u = jost_column(profile, p, JostKind::Psi1, 0)?;
    let v = jost_column(profile, p, JostKind::Psi2, 1)?;
    proportionality(u, v, p)
}

fn proportionality(u: Vec2, v: Vec2, p: Complex64) -> Result<Complex64> {
    let eta1 = u[0] / v[0];
    let eta2 = u[1] / v[1];
    let mismatch = (eta1 - eta2).norm() / eta1.norm().max(eta2.norm());
    if !(mismatch <= 1e-6) {
        return Err(Error::NotAZero { re: p.re, im: p.im, mismatch });
    }
    Ok(eta1)
}

/// Exact Jost matrices at the origin for the pure step, assembled from
/// matrix exponentials over the constant-coefficient pieces
/// (-inf, -R), (-R, R), (R, inf). Returns (Psi_1(0), Psi_2(0)).
pub fn transfer_jost_oracle(bg: BackgroundParams, k: Complex64) -> Result<(Mat2, Mat2)> {
    if k == ZERO {
        return Err(Error::SingularPoint);
    }
    let r = bg.r;
    let lax = |q_here: f64, q_mirror: f64| -> Mat2 {
        [[c(0.0, -1.0) * k, c(q_here, 0.0)], [c(-SIGMA * q_mirror, 0.0), c(0.0, 1.0) * k]]
    };
    let e_diag = |s: f64| -> Mat2 { [[(c(0.0, -1.0) * k * s).exp(), ZERO], [ZERO, (c(0.0, 1.0) * k * s).exp()]] };
    // Phi_1 = N_- e^{-ikx sigma3} on (-inf, -R); propagate through the
    // middle piece, where U = 0, up to x = 0.
    let phi1_left = mat_mul(&bg.n_minus(k), &e_diag(-r));
    let phi1_0 = mat_mul(&expm2(&lax(0.0, 0.0), r), &phi1_left);
    let phi2_right = mat_mul(&bg.n_plus(k), &e_diag(r));
    let phi2_0 = mat_mul(&expm2(&lax(0.0, 0.0), -r), &phi2_right);
    // At x = 0 the normalized Psi coincides with Phi.
    Ok((phi1_0, phi2_0))
}

/// S(k) = Psi_2(0)^{-1} Psi_1(0) for the pure step.
pub fn transfer_matrix_oracle(bg: BackgroundParams, k: Complex64) -> Result<Mat2> {
    let (psi1, psi2) = transfer_jost_oracle(bg, k)?;
    Ok(mat_mul(&mat_inv(&psi2), &psi1))
}

/// eta for the pure step from the exact piecewise solution.
pub fn norming_constant_oracle(bg: BackgroundParams, p: Complex64) -> Result<Complex64> {
    let (psi1, psi2) = transfer_jost_oracle(bg, p)?;
    proportionality([psi1[0][0], psi1[1][0]], [psi2[0][1], psi2[1][1]], p)
}

/// exp(M s) for a traceless 2x2 matrix M.
fn expm2(m: &Mat2, s: f64) -> Mat2 {
    let mu2 = -det2(m);
    let mu = mu2.sqrt();
    let (ch, sh_over_mu) = if mu.norm() * s.abs() < 1e-8 {
        (ONE + mu2 * s * s / 2.0, c(s, 0.0) * (1.0 + mu2 * s * s / 6.0))
    } else {
        ((mu * s).cosh(), (mu * s).sinh() / mu)
    };
    [[ch + sh_over_mu * m[0][0], sh_over_mu * m[0][1]], [sh_over_mu * m[1][0], ch + sh_over_mu * m[1][1]]]
}
