//! Zeros of a1, the winding of arg(a1 a2) along the negative real axis, the
//! thresholds omega_j, and the checks of Assumptions (a)-(c).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scattering::{norming_constant, BackgroundParams, InitialProfile, SpectralData};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Complex number in the `{re, im}` JSON layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JsonComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for JsonComplex {
    fn from(z: Complex64) -> Self {
        JsonComplex { re: z.re, im: z.im }
    }
}

impl From<JsonComplex> for Complex64 {
    fn from(z: JsonComplex) -> Self {
        c(z.re, z.im)
    }
}

/// Zeros p_1, ..., p_n of a1 in the second quadrant, ordered so that
/// Re p_n < ... < Re p_1 < 0 (`p[0]` is p_1). The mirrors -conj(p_j) are implied.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZeroSet {
    pub p: Vec<Complex64>,
    pub eta: Vec<Complex64>,
}

impl ZeroSet {
    pub fn n(&self) -> usize {
        self.p.len()
    }

    /// p_j with the 1-based index used throughout.
    pub fn p(&self, j: usize) -> Complex64 {
        self.p[j - 1]
    }

    pub fn eta(&self, j: usize) -> Option<Complex64> {
        self.eta.get(j - 1).copied()
    }

    pub fn has_norming_constants(&self) -> bool {
        self.eta.len() == self.p.len()
    }

    /// Attaches eta_j computed from the profile's Jost solutions.
    pub fn with_norming_constants(mut self, profile: &InitialProfile) -> Result<Self> {
        self.eta = self.p.iter().map(|&p| norming_constant(profile, p)).collect::<Result<_>>()?;
        Ok(self)
    }
}

/// omega_1 < ... < omega_{n-1}; omega_0 = 0 and omega_n = +inf are implied.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OmegaSet {
    pub omegas: Vec<f64>,
}

impl OmegaSet {
    /// omega_j for j = 0..=n with the conventions at both ends.
    pub fn omega(&self, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else if j > self.omegas.len() {
            f64::INFINITY
        } else {
            self.omegas[j - 1]
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SpectralJson {
    n: usize,
    p: Vec<JsonComplex>,
    eta: Vec<JsonComplex>,
    omegas: Vec<f64>,
}

pub fn to_json(zeros: &ZeroSet, omegas: &OmegaSet) -> Result<String> {
    let doc = SpectralJson {
        n: zeros.n(),
        p: zeros.p.iter().map(|&z| z.into()).collect(),
        eta: zeros.eta.iter().map(|&z| z.into()).collect(),
        omegas: omegas.omegas.clone(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn from_json(s: &str) -> Result<(ZeroSet, OmegaSet)> {
    let doc: SpectralJson = serde_json::from_str(s)?;
    if doc.p.len() != doc.n || (!doc.eta.is_empty() && doc.eta.len() != doc.n) {
        return Err(Error::Config(format!("zero set lists {} zeros and {} constants for n = {}", doc.p.len(), doc.eta.len(), doc.n)));
    }
    Ok((
        ZeroSet { p: doc.p.into_iter().map(Into::into).collect(), eta: doc.eta.into_iter().map(Into::into).collect() },
        OmegaSet { omegas: doc.omegas },
    ))
}

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl SearchBox {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        SearchBox { re_min, re_max, im_min, im_max }
    }

    /// Box for the background-induced zeros: all of them satisfy |k| < A/2.
    /// The floor sits just above the real axis because zeros born at a
    /// bifurcation start there.
    pub fn for_background(bg: BackgroundParams) -> Self {
        let a = bg.a.max(1e-3);
        SearchBox::new(-a, a, 1e-9 * a, a)
    }

    /// The box as rectangles that avoid [-w, w] x [im_min, w] around k = 0,
    /// where a1 ~ k^-2 has no zeros.
    fn pieces(&self, w: f64) -> Vec<SearchBox> {
        if self.re_min < -w && self.re_max > w && self.im_min < w && self.im_max > w {
            vec![
                SearchBox::new(self.re_min, -w, self.im_min, self.im_max),
                SearchBox::new(-w, w, w, self.im_max),
                SearchBox::new(w, self.re_max, self.im_min, self.im_max),
            ]
        } else {
            vec![*self]
        }
    }

    fn diameter(&self) -> f64 {
        (self.re_max - self.re_min).hypot(self.im_max - self.im_min)
    }

    fn center(&self) -> Complex64 {
        c(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.re_min - slack && z.re <= self.re_max + slack && z.im >= self.im_min - slack && z.im <= self.im_max + slack
    }

    fn split(&self, fx: f64, fy: f64) -> [SearchBox; 4] {
        let xm = self.re_min + fx * (self.re_max - self.re_min);
        let ym = self.im_min + fy * (self.im_max - self.im_min);
        [
            SearchBox::new(self.re_min, xm, self.im_min, ym),
            SearchBox::new(xm, self.re_max, self.im_min, ym),
            SearchBox::new(self.re_min, xm, ym, self.im_max),
            SearchBox::new(xm, self.re_max, ym, self.im_max),
        ]
    }
}

pub type Analytic<'a> = dyn Fn(Complex64) -> Result<Complex64> + Sync + 'a;

const EDGE_POINTS: usize = 256;
const MAX_ARG_STEP: f64 = PI / 4.0;

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI { PI } else { y }
}

/// Change of arg f along the segment z0 -> z1, with samples refined until no
/// step exceeds pi/4.
fn edge_variation(f: &Analytic, z0: Complex64, z1: Complex64, scale: f64) -> Result<f64> {
    let mut total = 0.0;
    let mut prev_z = z0;
    let mut prev = f(z0)?;
    for i in 1..=EDGE_POINTS {
        let z = z0 + (z1 - z0) * (i as f64 / EDGE_POINTS as f64);
        let v = f(z)?;
        total += refine_step(f, prev_z, prev, z, v, scale, 0)?;
        prev_z = z;
        prev = v;
    }
    Ok(total)
}

fn refine_step(f: &Analytic, za: Complex64, fa: Complex64, zb: Complex64, fb: Complex64, scale: f64, depth: u32) -> Result<f64> {
    if fa.norm() < 1e-14 * scale || fb.norm() < 1e-14 * scale {
        return Err(Error::BoxTouchesZero(f64::NAN));
    }
    let d = wrap(fb.arg() - fa.arg());
    if d.abs() <= MAX_ARG_STEP {
        return Ok(d);
    }
    if depth > 30 {
        return Err(Error::BoxTouchesZero(f64::NAN));
    }
    let zm = 0.5 * (za + zb);
    let fm = f(zm)?;
    Ok(refine_step(f, za, fa, zm, fm, scale, depth + 1)? + refine_step(f, zm, fm, zb, fb, scale, depth + 1)?)
}

/// Argument-principle zero count (boundary winding number / 2 pi). Errors
/// when the winding is not within 0.01 of an integer.
pub fn winding_number(f: &Analytic, bx: &SearchBox) -> Result<usize> {
    let corners = [
        c(bx.re_min, bx.im_min),
        c(bx.re_max, bx.im_min),
        c(bx.re_max, bx.im_max),
        c(bx.re_min, bx.im_max),
    ];
    let scale = corners.iter().map(|&z| f(z).map(|v| v.norm())).collect::<Result<Vec<_>>>()?;
    let scale = scale.into_iter().fold(0.0f64, f64::max).max(1e-300);
    let mut total = 0.0;
    for i in 0..4 {
        total += edge_variation(f, corners[i], corners[(i + 1) % 4], scale)?;
    }
    let w = total / (2.0 * PI);
    let n = w.round();
    if (w - n).abs() > 0.01 || n < 0.0 {
        return Err(Error::BoxTouchesZero(w));
    }
    Ok(n as usize)
}

fn derivative(f: &Analytic, z: Complex64, h: f64) -> Result<Complex64> {
    let i = c(0.0, 1.0);
    Ok((f(z + h)? - f(z - h)? - i * f(z + i * h)? + i * f(z - i * h)?) / (4.0 * h))
}

/// Newton iteration to |f(z)| <= tol, with a four-point complex-stencil derivative.
pub fn newton(f: &Analytic, z0: Complex64, tol: f64) -> Result<Complex64> {
    let mut z = z0;
    let h = 1e-4 * (1.0 + z0.norm()).min(10.0);
    for _ in 0..60 {
        let v = f(z)?;
        if v.norm() <= tol {
            // One more step tightens the root without loosening the residual.
            let d = derivative(f, z, h)?;
            let z2 = z - v / d;
            if f(z2)?.norm() <= v.norm() {
                return Ok(z2);
            }
            return Ok(z);
        }
        let d = derivative(f, z, h)?;
        if d.norm() == 0.0 || !d.is_finite() {
            break;
        }
        let mut step = v / d;
        let cap = 0.1 * (1.0 + z.norm());
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        z -= step;
        if !z.is_finite() {
            break;
        }
    }
    Err(Error::Refinement { re: z0.re, im: z0.im })
}

const NEWTON_TOL: f64 = 1e-10;
const MIN_DIAMETER: f64 = 1e-2;

fn search(f: &Analytic, bx: SearchBox, count: usize, depth: u32) -> Result<Vec<Complex64>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let diam = bx.diameter();
    if count == 1 {
        if let Ok(z) = newton(f, bx.center(), NEWTON_TOL) {
            if bx.contains(z, 1e-12) {
                return Ok(vec![z]);
            }
        }
        if diam < MIN_DIAMETER {
            let z = newton(f, bx.center(), NEWTON_TOL)?;
            if bx.contains(z, diam) {
                return Ok(vec![z]);
            }
            return Err(Error::Refinement { re: bx.center().re, im: bx.center().im });
        }
    }
    if diam < 1e-9 || depth > 60 {
        return Err(Error::Refinement { re: bx.center().re, im: bx.center().im });
    }
    let offsets = [0.5, 0.4623, 0.5371, 0.4189, 0.5813];
    let mut last_err = None;
    for (attempt, &fx) in offsets.iter().enumerate() {
        let fy = offsets[(attempt + 2) % offsets.len()];
        let children = bx.split(fx, fy);
        let counts: Result<Vec<usize>> = children.par_iter().map(|b| winding_number(f, b)).collect();
        match counts {
            Ok(counts) if counts.iter().sum::<usize>() == count => {
                let found: Result<Vec<Vec<Complex64>>> = children
                    .par_iter()
                    .zip(counts.par_iter())
                    .map(|(b, &n)| search(f, *b, n, depth + 1))
                    .collect();
                return Ok(found?.into_iter().flatten().collect());
            }
            Ok(counts) => {
                last_err = Some(Error::BoxTouchesZero(counts.iter().sum::<usize>() as f64));
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or(Error::Refinement { re: bx.center().re, im: bx.center().im }))
}

/// Half-width of the excluded square around k = 0.
const NOTCH: f64 = 0.01;

/// The box minus the notch at the origin, with the notch size nudged when a
/// zero sits on an internal edge. Returns the pieces and their zero counts.
fn region_counts(f: &Analytic, bx: &SearchBox) -> Result<Vec<(SearchBox, usize)>> {
    let mut last = None;
    for scale in [1.0, 1.37, 0.73, 1.9] {
        let pieces = bx.pieces(NOTCH * scale);
        match pieces.iter().map(|b| winding_number(f, b)).collect::<Result<Vec<_>>>() {
            Ok(counts) => return Ok(pieces.into_iter().zip(counts).collect()),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Argument-principle zero count over the box minus the notch at k = 0.
pub fn zero_count(f: &Analytic, bx: &SearchBox) -> Result<usize> {
    Ok(region_counts(f, bx)?.iter().map(|p| p.1).sum())
}

/// All zeros of `f` inside the box (minus the notch at k = 0), sorted by
/// (Re, Im). The number found always equals the boundary winding number.
pub fn find_zeros_in_box(f: &Analytic, bx: &SearchBox) -> Result<Vec<Complex64>> {
    let pieces = region_counts(f, bx)?;
    let count: usize = pieces.iter().map(|p| p.1).sum();
    let mut zeros = Vec::with_capacity(count);
    for (b, n) in pieces {
        zeros.extend(search(f, b, n, 0)?);
    }
    zeros.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    for w in zeros.windows(2) {
        if (w[0] - w[1]).norm() < 1e-8 {
            return Err(Error::Refinement { re: w[0].re, im: w[0].im });
        }
    }
    if zeros.len() != count {
        return Err(Error::Refinement { re: bx.center().re, im: bx.center().im });
    }
    Ok(zeros)
}

/// Zeros of a1 in the box, reduced to the ZeroSet of second-quadrant zeros.
/// First-quadrant zeros must be the mirrors -conj(p_j); anything else is an
/// assumption violation. Norming constants are not attached.
pub fn find_zeros(spec: &dyn SpectralData, bx: &SearchBox) -> Result<ZeroSet> {
    let f = |k: Complex64| spec.a1(k);
    let all = find_zeros_in_box(&f, bx)?;
    let (mut left, right): (Vec<Complex64>, Vec<Complex64>) = all.into_iter().partition(|z| z.re < 0.0);
    for &q in &right {
        if !left.iter().any(|&p| (p + q.conj()).norm() < 1e-7 * (1.0 + p.norm())) {
            return Err(Error::Assumption(format!("zero {q} has no mirror partner")));
        }
    }
    if left.len() != right.len() {
        return Err(Error::Assumption(format!(
            "{} zeros with Re k < 0 but {} with Re k > 0",
            left.len(),
            right.len()
        )));
    }
    left.sort_by(|a, b| b.re.total_cmp(&a.re));
    Ok(ZeroSet { p: left, eta: Vec::new() })
}

/// Zeros of the pure-step a1 from the real transcendental equation for
/// Re p_j on each bracketing interval, polished by Newton on the closed form.
pub fn pure_step_zeros(bg: BackgroundParams) -> Result<ZeroSet> {
    if bg.a == 0.0 {
        return Ok(ZeroSet::default());
    }
    if let Some(n) = bg.bifurcation_index() {
        return Err(Error::Bifurcation { r: bg.r, n, half_a: bg.a / 2.0 });
    }
    let n = bg.zero_count();
    let (a, r) = (bg.a, bg.r);
    let mut p = Vec::with_capacity(n);
    for j in 1..=n {
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        let g = |k1: f64| k1 - sign * 0.5 * a * (2.0 * k1 * r).cos() * (-2.0 * k1 * r * (2.0 * k1 * r).tan()).exp();
        let mut lo = (j - 1) as f64 * PI / (2.0 * r);
        let mut hi = (2 * j - 1) as f64 * PI / (4.0 * r);
        // g < 0 at the left end (since R > (j-1) pi / A), g -> hi > 0 at the right end.
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let k1 = 0.5 * (lo + hi);
        let z = c(-k1, k1 * (2.0 * k1 * r).tan());
        p.push(polish_pure_step(bg, z)?);
    }
    Ok(ZeroSet { p, eta: Vec::new() })
}

fn polish_pure_step(bg: BackgroundParams, z0: Complex64) -> Result<Complex64> {
    let spec = crate::scattering::PureStepSpectral::new(bg);
    let mut z = z0;
    for _ in 0..8 {
        let v = spec.a1(z)?;
        let d = spec.a1_derivative(z)?;
        let step = v / d;
        if !step.is_finite() {
            return Err(Error::Refinement { re: z0.re, im: z0.im });
        }
        z -= step;
        if step.norm() < 1e-16 * z.norm() {
            break;
        }
    }
    if (z - z0).norm() > 1e-6 * (1.0 + z0.norm()) {
        return Err(Error::Refinement { re: z0.re, im: z0.im });
    }
    Ok(z)
}

/// Real zeros of a1 on [k_lo, k_hi] (excluding the guard band around 0),
/// located as local minima of |a1| that Newton drives to zero. Used to
/// detect spectral singularities such as +-A/2 at R = n pi / A.
pub fn real_axis_zeros(spec: &dyn SpectralData, k_lo: f64, k_hi: f64, samples: usize) -> Result<Vec<f64>> {
    let ks: Vec<f64> = (0..=samples).map(|i| k_lo + (k_hi - k_lo) * i as f64 / samples as f64).collect();
    let vals: Vec<f64> = ks
        .par_iter()
        .map(|&k| if k.abs() < crate::scattering::K_GUARD { Ok(f64::INFINITY) } else { spec.a1(c(k, 0.0)).map(|v| v.norm()) })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for i in 1..samples {
        if vals[i] < vals[i - 1] && vals[i] <= vals[i + 1] && vals[i] < 0.1 {
            // Golden-section on |a1| restricted to the real axis.
            let (mut lo, mut hi) = (ks[i - 1], ks[i + 1]);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let fa = |k: f64| spec.a1(c(k, 0.0)).map(|v| v.norm());
            for _ in 0..200 {
                let m1 = hi - g * (hi - lo);
                let m2 = lo + g * (hi - lo);
                if fa(m1)? < fa(m2)? {
                    hi = m2;
                } else {
                    lo = m1;
                }
                if hi - lo < 1e-13 {
                    break;
                }
            }
            let k = 0.5 * (lo + hi);
            if fa(k)? < 1e-6 {
                out.push(k);
            }
        }
    }
    Ok(out)
}

/// Continuous arg(a1 a2) along the real axis from -k_max up to -k_min,
/// starting from the principal value at -k_max (where a1 a2 is within
/// `tail` of 1).
#[derive(Debug, Clone)]
pub struct WindingProfile {
    /// Sample points in increasing order (all negative).
    pub k: Vec<f64>,
    /// a1 a2 at the samples.
    pub value: Vec<Complex64>,
    /// Continuous argument at the samples.
    pub arg: Vec<f64>,
    /// Bound on |arg| at the left end, i.e. the neglected tail.
    pub tail: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct WindingOptions {
    pub k_max: f64,
    pub k_min: f64,
    /// Uniform spacing used for |k| <= k_near.
    pub h_near: f64,
    pub k_near: f64,
    pub max_step: f64,
}

impl WindingOptions {
    /// Grid adapted to the background: the near region resolves the
    /// e^{4ikX} oscillation of a1, the far region is geometric out to the
    /// point where |r1 r2| <= 1e-10 (closed form) or 1e4 otherwise.
    pub fn for_spec(spec: &dyn SpectralData, support: f64) -> Self {
        let bg = spec.background();
        let k_max = match spec.tail_bound(1.0) {
            Some(_) => (bg.a.max(1e-3) * 0.5 * 1e5).max(2000.0),
            None => 1e3,
        };
        let h_near = (PI / (2.0 * support.max(1e-3))) / 32.0;
        WindingOptions { k_max, k_min: 1e-3, h_near: h_near.min(0.05), k_near: 4.0 * bg.a.max(1.0) + 2.0, max_step: PI / 4.0 }
    }
}

impl WindingProfile {
    pub fn build(f: &(dyn Fn(f64) -> Result<Complex64> + Sync), opts: &WindingOptions) -> Result<Self> {
        let mut ks = Vec::new();
        // Geometric part from -k_max to -k_near.
        let ratio: f64 = 1.02;
        let mut k = opts.k_max;
        while k > opts.k_near {
            ks.push(-k);
            k /= ratio;
        }
        let n_near = ((opts.k_near - opts.k_min) / opts.h_near).ceil() as usize;
        for i in 0..=n_near {
            ks.push(-opts.k_near + (opts.k_near - opts.k_min) * i as f64 / n_near as f64);
        }
        let values: Vec<Complex64> = ks.par_iter().map(|&k| f(k)).collect::<Result<_>>()?;
        let mut out_k = vec![ks[0]];
        let mut out_v = vec![values[0]];
        let mut out_a = vec![values[0].arg()];
        for i in 1..ks.len() {
            Self::append_refined(f, &mut out_k, &mut out_v, &mut out_a, ks[i], values[i], opts.max_step, 0)?;
        }
        let tail = values[0].arg().abs() + (values[0] - 1.0).norm();
        Ok(WindingProfile { k: out_k, value: out_v, arg: out_a, tail })
    }

    #[allow(clippy::too_many_arguments)]
    fn append_refined(
        f: &(dyn Fn(f64) -> Result<Complex64> + Sync),
        ks: &mut Vec<f64>,
        vs: &mut Vec<Complex64>,
        args: &mut Vec<f64>,
        k: f64,
        v: Complex64,
        max_step: f64,
        depth: u32,
    ) -> Result<()> {
        let prev_v = *vs.last().unwrap();
        let prev_k = *ks.last().unwrap();
        let d = wrap(v.arg() - prev_v.arg());
        if d.abs() <= max_step {
            let a = *args.last().unwrap() + d;
            ks.push(k);
            vs.push(v);
            args.push(a);
            return Ok(());
        }
        if depth > 40 || v.norm() < 1e-13 {
            return Err(Error::NearZeroOnContour(k));
        }
        let km = 0.5 * (prev_k + k);
        let vm = f(km)?;
        Self::append_refined(f, ks, vs, args, km, vm, max_step, depth + 1)?;
        Self::append_refined(f, ks, vs, args, k, v, max_step, depth + 1)
    }

    /// Continuous arg at a point k inside the table range, anchored to the
    /// nearest sample at or to the left of k.
    pub fn arg_at(&self, k: f64, value: Complex64) -> Result<f64> {
        if k < self.k[0] || k > *self.k.last().unwrap() {
            return Err(Error::Config(format!("k = {k} outside the winding table [{}, {}]", self.k[0], self.k.last().unwrap())));
        }
        let i = match self.k.binary_search_by(|x| x.total_cmp(&k)) {
            Ok(i) => return Ok(self.arg[i]),
            Err(i) => i - 1,
        };
        let d = wrap(value.arg() - self.value[i].arg());
        let d_right = wrap(self.value[i + 1].arg() - value.arg());
        if d.abs() > PI / 2.0 || d_right.abs() > PI / 2.0 {
            return Err(Error::NearZeroOnContour(k));
        }
        Ok(self.arg[i] + d)
    }

    /// Phi(xi): continuous variation of arg(a1 a2) over (-inf, -xi).
    pub fn phi(&self, spec_value: &dyn Fn(f64) -> Result<Complex64>, xi: f64) -> Result<f64> {
        let k = -xi;
        self.arg_at(k, spec_value(k)?)
    }

    /// Phi at a table sample index (no extra evaluation).
    pub fn phi_at_index(&self, i: usize) -> f64 {
        self.arg[i]
    }
}

/// a1 a2 on the real axis.
pub fn a1a2_real(spec: &dyn SpectralData, k: f64) -> Result<Complex64> {
    spec.a1a2_real(k)
}

/// Winding table for a spectral evaluator; `support` is the half-width of
/// the profile's non-background region, which sets the oscillation scale.
pub fn winding_profile(spec: &dyn SpectralData, support: f64) -> Result<WindingProfile> {
    let opts = WindingOptions::for_spec(spec, support);
    let f = |k: f64| a1a2_real(spec, k);
    WindingProfile::build(&f, &opts)
}

/// Phi(xi) for a single direction.
pub fn winding_at(spec: &dyn SpectralData, table: &WindingProfile, xi: f64) -> Result<f64> {
    table.phi(&|k| a1a2_real(spec, k), xi)
}

/// omega_m solving Phi(omega) = (2(n-m)-1) pi for m = 1..n-1.
pub fn find_omegas(spec: &dyn SpectralData, table: &WindingProfile, n: usize) -> Result<OmegaSet> {
    let mut omegas = Vec::with_capacity(n.saturating_sub(1));
    for m in 1..n {
        let level = (2 * (n - m) - 1) as f64 * PI;
        let mut crossings = Vec::new();
        for i in 1..table.k.len() {
            let (a0, a1) = (table.arg[i - 1] - level, table.arg[i] - level);
            if a0 == 0.0 || a0.signum() != a1.signum() {
                crossings.push(i);
            }
        }
        let i = match crossings.as_slice() {
            [] => return Err(Error::MissingCrossing { index: m, level }),
            [i] => *i,
            _ => {
                return Err(Error::Assumption(format!(
                    "winding crosses the level {:.4} pi {} times",
                    level / PI,
                    crossings.len()
                )))
            }
        };
        let phi = |k: f64| -> Result<f64> { table.arg_at(k, a1a2_real(spec, k)?) };
        let (mut lo, mut hi) = (table.k[i - 1], table.k[i]);
        let s_lo = (table.arg[i - 1] - level).signum();
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (phi(mid)? - level).signum() == s_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        omegas.push(-0.5 * (lo + hi));
    }
    omegas.sort_by(f64::total_cmp);
    Ok(OmegaSet { omegas })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub zeros_ok: bool,
    pub a2_nonvanishing: bool,
    pub interleaving_ok: bool,
    pub winding_bands_ok: bool,
    pub diagnostics: Vec<String>,
}

impl AssumptionReport {
    pub fn all_ok(&self) -> bool {
        self.zeros_ok && self.a2_nonvanishing && self.interleaving_ok && self.winding_bands_ok
    }

    pub fn into_result(self) -> Result<Self> {
        if self.all_ok() {
            Ok(self)
        } else {
            Err(Error::Assumption(self.diagnostics.join("; ")))
        }
    }
}

const ORDER_MARGIN: f64 = 1e-8;

/// Checks Assumptions (a)-(c). Violations are reported, never thrown,
/// except for evaluation failures of the spectral functions themselves.
pub fn verify_assumptions(
    spec: &dyn SpectralData,
    zeros: &ZeroSet,
    omegas: &OmegaSet,
    table: &WindingProfile,
) -> Result<AssumptionReport> {
    let mut rep = AssumptionReport { zeros_ok: true, a2_nonvanishing: true, interleaving_ok: true, winding_bands_ok: true, diagnostics: Vec::new() };
    let bg = spec.background();
    let n = zeros.n();

    // (a)
    if n == 0 {
        rep.zeros_ok = false;
        rep.diagnostics.push("a1 has no zeros in the upper half plane (n = 0)".into());
    }
    for (j, &p) in zeros.p.iter().enumerate() {
        if p.im <= 0.0 {
            rep.zeros_ok = false;
            rep.diagnostics.push(format!("p_{} = {p} is not in the open upper half plane", j + 1));
        }
        let d = spec.a1_derivative(p)?;
        if d.norm() <= 1e-8 {
            rep.zeros_ok = false;
            rep.diagnostics.push(format!("p_{} = {p} is not simple (|a1'| = {:.3e})", j + 1, d.norm()));
        }
    }
    if let Some(&p1) = zeros.p.first() {
        if p1.re >= -ORDER_MARGIN {
            rep.zeros_ok = false;
            rep.diagnostics.push(format!("Re p_1 = {} is not negative", p1.re));
        }
    }
    for j in 1..n {
        if zeros.p[j].re >= zeros.p[j - 1].re - ORDER_MARGIN {
            rep.zeros_ok = false;
            rep.diagnostics.push(format!("Re p_{} >= Re p_{} (ordering not strict)", j + 1, j));
        }
    }
    let half = 0.5 * bg.a.max(1.0) + 1.0;
    let real = real_axis_zeros(spec, -2.0 * half, 2.0 * half, 4000)?;
    if !real.is_empty() {
        rep.zeros_ok = false;
        rep.diagnostics.push(format!("a1 has real zeros at {real:?}"));
    }
    if bg.a > 0.0 {
        let bx = SearchBox::for_background(bg);
        match zero_count(&|k| spec.a1(k), &bx) {
            Ok(count) if count != 2 * n => {
                rep.zeros_ok = false;
                rep.diagnostics.push(format!("a1 has {count} zeros in the search box but the zero set lists {n} pairs"));
            }
            Ok(_) => {}
            Err(e) => {
                rep.zeros_ok = false;
                rep.diagnostics.push(format!("zero count on the search box failed: {e}"));
            }
        }
    }

    // (b)
    let kb = 2.0 * half;
    let mut min_a2 = f64::INFINITY;
    for i in 0..=24 {
        for j in 0..=12 {
            let k = c(-kb + 2.0 * kb * i as f64 / 24.0, -kb * j as f64 / 12.0);
            if k.norm() < crate::scattering::K_GUARD {
                continue;
            }
            min_a2 = min_a2.min(spec.a2(k)?.norm());
        }
    }
    if min_a2 <= 1e-6 {
        rep.a2_nonvanishing = false;
        rep.diagnostics.push(format!("min |a2| over the lower half-plane sample is {min_a2:.3e}"));
    }

    // (c)
    if omegas.omegas.len() != n.saturating_sub(1) {
        rep.interleaving_ok = false;
        rep.diagnostics.push(format!("expected {} thresholds, found {}", n.saturating_sub(1), omegas.omegas.len()));
    } else {
        for m in 1..n {
            let w = omegas.omega(m);
            // Re p_{m+1} < -omega_m < Re p_m
            let (lo, hi) = (zeros.p(m + 1).re, zeros.p(m).re);
            if !(lo < -w - ORDER_MARGIN && -w < hi - ORDER_MARGIN) {
                rep.interleaving_ok = false;
                rep.diagnostics.push(format!("-omega_{m} = {} does not separate Re p_{} and Re p_{m}", -w, m + 1));
            }
        }
        let value = |k: f64| a1a2_real(spec, k);
        for m in 1..n {
            let target = (2 * m - 1) as f64 * PI;
            let phi = table.phi(&value, omegas.omega(n - m))?;
            if (phi - target).abs() > 1e-3 * PI {
                rep.winding_bands_ok = false;
                rep.diagnostics.push(format!("Phi(omega_{}) = {:.6} pi, expected {}", n - m, phi / PI, 2 * m - 1));
            }
        }
        for m in 0..n {
            let lo = omegas.omega(n - m - 1);
            let hi = omegas.omega(n - m).min(table.k[0].abs());
            let hi = if hi.is_finite() { hi } else { lo + 10.0 };
            for s in 1..16 {
                let xi = lo + (hi - lo) * s as f64 / 16.0;
                if xi < 1e-2 {
                    continue;
                }
                let phi = table.phi(&value, xi)?;
                let (a, b) = ((2.0 * m as f64 - 1.0) * PI, (2.0 * m as f64 + 1.0) * PI);
                if !(phi > a && phi < b) {
                    rep.winding_bands_ok = false;
                    rep.diagnostics.push(format!("Phi({xi:.4}) = {:.4} pi outside ({}, {}) pi", phi / PI, 2 * m as i64 - 1, 2 * m + 1));
                    break;
                }
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scattering::PureStepSpectral;

    #[test]
    fn pure_step_zero_counts_and_brackets() {
        for &(a, r, n) in &[(1.0, 0.5, 1), (1.0, 2.0, 1), (1.0, 4.0, 2), (1.0, 7.0, 3), (1.0, 9.7, 4), (2.0, 1.0, 1)] {
            let bg = BackgroundParams::new(a, r).unwrap();
            let z = pure_step_zeros(bg).unwrap();
            assert_eq!(z.n(), n, "A={a} R={r}");
            let spec = PureStepSpectral::new(bg);
            for (j0, &p) in z.p.iter().enumerate() {
                let j = (j0 + 1) as f64;
                assert!(p.re > -(2.0 * j - 1.0) * PI / (4.0 * r) && p.re < -(j - 1.0) * PI / (2.0 * r));
                assert!((p.im - p.re * (2.0 * p.re * r).tan()).abs() < 1e-12);
                assert!(spec.a1(p).unwrap().norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn bifurcation_guard() {
        let bg = BackgroundParams::new(1.0, PI).unwrap();
        assert!(matches!(pure_step_zeros(bg), Err(Error::Bifurcation { n: 1, .. })));
        let below = pure_step_zeros(BackgroundParams::new(1.0, PI - 0.01).unwrap()).unwrap();
        let above = pure_step_zeros(BackgroundParams::new(1.0, PI + 0.01).unwrap()).unwrap();
        assert_eq!((below.n(), above.n()), (1, 2));
    }

    #[test]
    fn argument_principle_matches_pure_step() {
        let bg = BackgroundParams::new(1.0, 4.0).unwrap();
        let spec = PureStepSpectral::new(bg);
        let z = find_zeros(&spec, &SearchBox::for_background(bg)).unwrap();
        let exact = pure_step_zeros(bg).unwrap();
        assert_eq!(z.n(), exact.n());
        for (a, b) in z.p.iter().zip(&exact.p) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn zero_background_has_no_zeros() {
        let bg = BackgroundParams::new(0.0, 1.0).unwrap();
        let spec = PureStepSpectral::new(bg);
        assert_eq!(find_zeros(&spec, &SearchBox::for_background(bg)).unwrap().n(), 0);
        assert_eq!(pure_step_zeros(bg).unwrap().n(), 0);
    }

    #[test]
    fn winding_thresholds_pure_step() {
        let bg = BackgroundParams::new(1.0, 7.0).unwrap();
        let spec = PureStepSpectral::new(bg);
        let table = winding_profile(&spec, bg.r).unwrap();
        let om = find_omegas(&spec, &table, 3).unwrap();
        assert_eq!(om.omegas.len(), 2);
        for (j, &w) in om.omegas.iter().enumerate() {
            assert!((w - (j + 1) as f64 * PI / 14.0).abs() < 1e-6, "{w}");
        }
        let zeros = pure_step_zeros(bg).unwrap();
        let rep = verify_assumptions(&spec, &zeros, &om, &table).unwrap();
        assert!(rep.all_ok(), "{:?}", rep.diagnostics);
    }

    #[test]
    fn json_round_trip() {
        let z = ZeroSet { p: vec![c(-0.2, 0.1)], eta: vec![c(0.3, -0.4)] };
        let o = OmegaSet { omegas: vec![] };
        let s = to_json(&z, &o).unwrap();
        assert!(s.contains("\"n\": 1"));
        let (z2, o2) = from_json(&s).unwrap();
        assert_eq!(z, z2);
        assert_eq!(o, o2);
    }
}
