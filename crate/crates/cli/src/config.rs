use std::fs;
use std::path::{Path, PathBuf};

use nnls_core::io::{read_profile, read_sidecar, ProfileSidecar};
use nnls_core::pde::SimulationConfig;
use nnls_core::scattering::{BackgroundParams, InitialProfile};
use nnls_core::{Error, Result};
use serde::Deserialize;

/// Inclusive uniform grid `a:b:n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Config(format!("grid '{s}' is not of the form a:b:n"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let a = parts[0].trim().parse::<f64>().map_err(|_| bad())?;
        let b = parts[1].trim().parse::<f64>().map_err(|_| bad())?;
        let n = parts[2].trim().parse::<usize>().map_err(|_| bad())?;
        if n == 0 || !a.is_finite() || !b.is_finite() || (n == 1 && a != b) {
            return Err(bad());
        }
        Ok(GridSpec { a, b, n })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.a];
        }
        let d = (self.n - 1) as f64;
        (0..self.n).map(|i| ((d - i as f64) * self.a + i as f64 * self.b) / d).collect()
    }
}

pub fn parse_t_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            let t = p.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad time '{p}' in t-list")))?;
            if t > 0.0 && t.is_finite() {
                Ok(t)
            } else {
                Err(Error::Config(format!("times must be positive, got {t}")))
            }
        })
        .collect()
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub background: Option<BackgroundSection>,
    pub profile: Option<ProfileSection>,
    #[serde(default)]
    pub grid: GridSection,
    pub simulation: Option<SimulationSection>,
    pub kink: Option<KinkSection>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundSection {
    pub a: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub csv: PathBuf,
    pub sidecar: Option<PathBuf>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub k: Option<String>,
    pub xi: Option<String>,
    pub t: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub l: f64,
    pub dx: f64,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub sponge_width: Option<f64>,
    pub sponge_strength: Option<f64>,
    pub ramp_width: Option<f64>,
    pub blowup_threshold: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinkSection {
    pub x0: Option<String>,
    pub t: Option<Vec<f64>>,
    pub m: Option<usize>,
}

/// Profile source after resolution.
#[derive(Debug, Clone)]
pub enum ProfileSource {
    PureStep,
    Csv(PathBuf),
}

/// Everything a command needs, after merging file and flags.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub profile: InitialProfile,
    pub source: ProfileSource,
    pub k_grid: GridSpec,
    pub xi_grid: GridSpec,
    pub t_list: Vec<f64>,
    pub simulation: Option<SimulationSection>,
    pub kink_x0: GridSpec,
    pub kink_t: Vec<f64>,
    pub kink_m: usize,
    pub out: PathBuf,
}

pub struct Overrides {
    pub a: Option<f64>,
    pub r: Option<f64>,
    pub xi_grid: Option<String>,
    pub t_list: Option<String>,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>, ov: Overrides) -> Result<Self> {
        let (file, base) = match path {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
                let cfg: FileConfig =
                    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                (cfg, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (FileConfig::default(), PathBuf::new()),
        };
        let bg_file = file.background;
        let a = ov.a.or(bg_file.map(|b| b.a));
        let r = ov.r.or(bg_file.map(|b| b.r));
        let (profile, source) = match (&file.profile, a, r) {
            (Some(p), _, _) => {
                let csv = base.join(&p.csv);
                let sidecar = match &p.sidecar {
                    Some(s) => read_sidecar(&base.join(s))?,
                    None => {
                        let (Some(a), Some(r), Some(x_min), Some(x_max)) = (a, r, p.x_min, p.x_max) else {
                            return Err(Error::Config(
                                "a profile without sidecar needs background a, r and profile x_min, x_max".into(),
                            ));
                        };
                        ProfileSidecar { a, r, x_min, x_max }
                    }
                };
                (read_profile(&csv, &sidecar)?, ProfileSource::Csv(csv))
            }
            (None, Some(a), Some(r)) => (InitialProfile::pure_step(BackgroundParams::new(a, r)?), ProfileSource::PureStep),
            _ => return Err(Error::Config("no background: give [background] a, r in the config or --a/--r".into())),
        };
        let k_grid = GridSpec::parse(file.grid.k.as_deref().unwrap_or("0.05:20:200"))?;
        let xi_grid = GridSpec::parse(ov.xi_grid.as_deref().or(file.grid.xi.as_deref()).unwrap_or("-1:1:21"))?;
        let t_list = match ov.t_list {
            Some(s) => parse_t_list(&s)?,
            None => file.grid.t.clone().unwrap_or_else(|| vec![10.0, 20.0, 40.0]),
        };
        if t_list.is_empty() || t_list.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Config("t-list must contain positive times".into()));
        }
        let kink = file.kink.clone();
        let kink_x0 = GridSpec::parse(kink.as_ref().and_then(|k| k.x0.as_deref()).unwrap_or("-5:5:41"))?;
        let kink_t = kink.as_ref().and_then(|k| k.t.clone()).unwrap_or_else(|| t_list.clone());
        let kink_m = kink.as_ref().and_then(|k| k.m).unwrap_or(0);
        Ok(ExperimentConfig {
            profile,
            source,
            k_grid,
            xi_grid,
            t_list,
            simulation: file.simulation,
            kink_x0,
            kink_t,
            kink_m,
            out: ov.out,
        })
    }

    pub fn bg(&self) -> BackgroundParams {
        self.profile.bg
    }

    /// Solver configuration with snapshots at `times`.
    pub fn simulation_config(&self, times: &[f64]) -> Result<SimulationConfig> {
        let s = self
            .simulation
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs a [simulation] section".into()))?;
        let t_max = times.iter().copied().fold(0.0, f64::max);
        let t_end = s.t_end.unwrap_or(t_max).max(t_max);
        let mut cfg = SimulationConfig::new(s.l, s.dx, t_end, times.to_vec());
        if let Some(v) = s.dt {
            cfg.dt = v;
        }
        if let Some(v) = s.sponge_width {
            cfg.sponge_width = v;
        }
        if let Some(v) = s.sponge_strength {
            cfg.sponge_strength = v;
        }
        if let Some(v) = s.blowup_threshold {
            cfg.blowup_threshold = v;
        }
        cfg.ramp_width = s.ramp_width;
        cfg.validate()?;
        Ok(cfg)
    }
}
