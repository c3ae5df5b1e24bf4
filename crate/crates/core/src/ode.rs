//! Integrating-factor (Lawson) Dormand-Prince 5(4) for the two-component
//! linear system z' = (diag(d) + K(x)) z.
//!
//! Each step is taken in the frame v(s) = exp(-diag(d) s) z(x + s), so the
//! diagonal part is propagated exactly and only the coupling K is resolved
//! by the Runge-Kutta stages.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Vec2 = [Complex64; 2];
pub type Mat2 = [[Complex64; 2]; 2];

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-12, atol: 1e-12, max_steps: 2_000_000 }
    }
}

fn mat_vec(m: &Mat2, v: &Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Integrates from `x0` to `x1` (either direction), splitting at the given
/// interior breakpoints where K may be discontinuous.
pub fn integrate<F>(d: Vec2, k: F, x0: f64, x1: f64, breaks: &[f64], z0: Vec2, opts: &OdeOptions) -> Result<Vec2>
where
    F: Fn(f64) -> Mat2,
{
    let dir = (x1 - x0).signum();
    let mut pts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&b| (b - x0) * dir > 0.0 && (x1 - b) * dir > 0.0)
        .collect();
    pts.sort_by(|a, b| ((a - x0) * dir).total_cmp(&((b - x0) * dir)));
    let mut z = z0;
    let mut start = x0;
    for &end in pts.iter().chain(std::iter::once(&x1)) {
        z = integrate_smooth(d, &k, start, end, z, opts)?;
        start = end;
    }
    Ok(z)
}

fn integrate_smooth<F>(d: Vec2, k: &F, x0: f64, x1: f64, z0: Vec2, opts: &OdeOptions) -> Result<Vec2>
where
    F: Fn(f64) -> Mat2,
{
    let span = x1 - x0;
    if span == 0.0 {
        return Ok(z0);
    }
    let dir = span.signum();
    let dd = d[1] - d[0];
    let freq = dd.norm().max(d[0].norm()).max(d[1].norm());
    // Keep the exponential factors of a single step bounded.
    let h_cap = if freq > 0.0 { 4.0 / freq.max(1e-300) } else { f64::INFINITY };
    let h_cap = h_cap.max(1e-3).min(span.abs());
    let mut h = (1.0 / (1.0 + freq)).min(h_cap) * dir;
    let mut x = x0;
    let mut z = z0;
    let mut steps = 0usize;
    let rhs = |s: f64, tau: f64, v: &Vec2| -> Vec2 {
        let km = k(s + tau);
        let e = (dd * tau).exp();
        let m = [[km[0][0], km[0][1] * e], [km[1][0] / e, km[1][1]]];
        mat_vec(&m, v)
    };
    while (x1 - x) * dir > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Nonconvergent(format!("step budget exhausted at x = {x}")));
        }
        if (x + h - x1) * dir > 0.0 {
            h = x1 - x;
        }
        let mut stages = [[Complex64::new(0.0, 0.0); 2]; 7];
        for i in 0..7 {
            let mut v = z;
            for (j, stage) in stages.iter().enumerate().take(i) {
                let a = A[i][j];
                if a != 0.0 {
                    v[0] += stage[0] * (a * h);
                    v[1] += stage[1] * (a * h);
                }
            }
            stages[i] = rhs(x, C[i] * h, &v);
        }
        let mut v5 = z;
        let mut err = [Complex64::new(0.0, 0.0); 2];
        for i in 0..7 {
            for c in 0..2 {
                v5[c] += stages[i][c] * (B5[i] * h);
                err[c] += stages[i][c] * ((B5[i] - B4[i]) * h);
            }
        }
        let mut en = 0.0f64;
        for c in 0..2 {
            let sc = opts.atol + opts.rtol * z[c].norm().max(v5[c].norm());
            en = en.max(err[c].norm() / sc);
        }
        if !en.is_finite() {
            return Err(Error::Nonconvergent(format!("non-finite state at x = {x}")));
        }
        if en <= 1.0 {
            x += h;
            z = [v5[0] * (d[0] * h).exp(), v5[1] * (d[1] * h).exp()];
            let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h.abs() * fac).min(h_cap) * dir;
        } else {
            h *= (0.9 * en.powf(-0.2)).clamp(0.1, 0.9);
            if h.abs() < 1e-14 * (1.0 + x.abs()) {
                return Err(Error::Nonconvergent(format!("step size underflow at x = {x}")));
            }
        }
    }
    Ok(z)
}
