//! Piecewise Chebyshev interpolation of k^2 a1(k) a2(k) on a stretch of the
//! negative real axis, so that quadratures over the continuous logarithm do
//! not integrate the Jost equations at every node.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::phase::JOST_K_QUAD;
use crate::scattering::{BackgroundParams, InitialProfile, ProfileSpectral, RealAxisValues, SpectralData};

/// Chebyshev-Lobatto nodes per panel (N + 1 values).
const NODES: usize = 32;
const MAX_SPLITS: usize = 10;

#[derive(Debug, Clone)]
struct Panel {
    a: f64,
    b: f64,
    values: Vec<Complex64>,
}

fn node(a: f64, b: f64, j: usize) -> f64 {
    let t = (PI * j as f64 / NODES as f64).cos();
    0.5 * (a + b) + 0.5 * (b - a) * t
}

impl Panel {
    fn eval(&self, k: f64) -> Complex64 {
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        for (j, v) in self.values.iter().enumerate() {
            let d = k - node(self.a, self.b, j);
            if d == 0.0 {
                return *v;
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == NODES {
                w *= 0.5;
            }
            num += v * (w / d);
            den += w / d;
        }
        num / den
    }
}

/// k^2 a1 a2 on [lo, hi] with hi < 0.
#[derive(Debug, Clone)]
pub struct ProductTable {
    panels: Vec<Panel>,
    pub lo: f64,
    pub hi: f64,
}

impl ProductTable {
    /// Adaptive build: panels start at width `h0` and are halved until two
    /// off-node checks agree with `f` to `tol` relative to the panel scale.
    pub fn build(f: &(dyn Fn(f64) -> Result<Complex64> + Sync), lo: f64, hi: f64, h0: f64, tol: f64) -> Result<Self> {
        if !(lo < hi && hi < 0.0 && h0 > 0.0) {
            return Err(Error::Config(format!("bad table range [{lo}, {hi}] with width {h0}")));
        }
        let n0 = ((hi - lo) / h0).ceil() as usize;
        let mut pending: Vec<(f64, f64, usize)> =
            (0..n0).map(|i| (lo + (hi - lo) * i as f64 / n0 as f64, lo + (hi - lo) * (i + 1) as f64 / n0 as f64, 0)).collect();
        let mut done = Vec::new();
        let g = |k: f64| f(k).map(|v| v * k * k);
        while !pending.is_empty() {
            let built: Vec<(Panel, bool, usize)> = pending
                .par_iter()
                .map(|&(a, b, depth)| {
                    let values = (0..=NODES).map(|j| g(node(a, b, j))).collect::<Result<Vec<_>>>()?;
                    let p = Panel { a, b, values };
                    let scale = p.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
                    let mut ok = true;
                    for j in [NODES / 4, 3 * NODES / 4] {
                        let t = (PI * (j as f64 + 0.5) / NODES as f64).cos();
                        let k = 0.5 * (a + b) + 0.5 * (b - a) * t;
                        if (p.eval(k) - g(k)?).norm() > tol * scale {
                            ok = false;
                        }
                    }
                    Ok((p, ok, depth))
                })
                .collect::<Result<_>>()?;
            pending.clear();
            for (p, ok, depth) in built {
                if ok {
                    done.push(p);
                } else if depth >= MAX_SPLITS {
                    return Err(Error::Nonconvergent(format!("real-axis table on [{}, {}]", p.a, p.b)));
                } else {
                    let m = 0.5 * (p.a + p.b);
                    pending.push((p.a, m, depth + 1));
                    pending.push((m, p.b, depth + 1));
                }
            }
        }
        done.sort_by(|x, y| x.a.total_cmp(&y.a));
        Ok(ProductTable { panels: done, lo, hi })
    }

    pub fn contains(&self, k: f64) -> bool {
        k >= self.lo && k <= self.hi
    }

    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }

    /// a1 a2 at k inside the table.
    pub fn a1a2(&self, k: f64) -> Complex64 {
        let i = self.panels.partition_point(|p| p.b < k).min(self.panels.len() - 1);
        self.panels[i].eval(k) / (k * k)
    }
}

/// Spectral data with a1 a2 on part of the negative real axis served from a
/// [`ProductTable`]; everything else is delegated.
pub struct TabulatedSpectral<S> {
    pub inner: S,
    pub table: ProductTable,
}

impl<S: SpectralData> TabulatedSpectral<S> {
    /// Tabulates on [-k_max, -k_min]. `reach` bounds |x| over the
    /// non-background part of the profile and sets the initial panel width.
    pub fn new(inner: S, k_min: f64, k_max: f64, reach: f64) -> Result<Self> {
        let h0 = (5.0 / reach.max(0.25)).min(2.0);
        let f = |k: f64| inner.a1a2_real(k);
        let table = ProductTable::build(&f, -k_max, -k_min, h0, 1e-9)?;
        Ok(TabulatedSpectral { inner, table })
    }
}

impl TabulatedSpectral<ProfileSpectral> {
    /// Jost-equation data of a sampled profile, tabulated over the range the
    /// phase quadratures use.
    pub fn for_profile(profile: InitialProfile) -> Result<Self> {
        let reach = profile.support_half_width();
        Self::new(ProfileSpectral::new(profile), 1e-3, JOST_K_QUAD, reach)
    }
}

impl<S: SpectralData> SpectralData for TabulatedSpectral<S> {
    fn background(&self) -> BackgroundParams {
        self.inner.background()
    }

    fn a1(&self, k: Complex64) -> Result<Complex64> {
        self.inner.a1(k)
    }

    fn a2(&self, k: Complex64) -> Result<Complex64> {
        self.inner.a2(k)
    }

    fn b(&self, k: f64) -> Result<Complex64> {
        self.inner.b(k)
    }

    fn real_axis(&self, k: f64) -> Result<RealAxisValues> {
        self.inner.real_axis(k)
    }

    fn a1_derivative(&self, k: Complex64) -> Result<Complex64> {
        self.inner.a1_derivative(k)
    }

    fn tail_bound(&self, kmax: f64) -> Option<f64> {
        self.inner.tail_bound(kmax)
    }

    fn a1a2_real(&self, k: f64) -> Result<Complex64> {
        if self.table.contains(k) {
            Ok(self.table.a1a2(k))
        } else {
            self.inner.a1a2_real(k)
        }
    }
}
