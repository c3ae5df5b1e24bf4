use std::fmt;

use thiserror::Error;

/// Coarse failure categories. The CLI maps each class to its own exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Numeric,
    Assumption,
    BlowUp,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Numeric => 3,
            ErrorClass::Assumption => 4,
            ErrorClass::BlowUp => 5,
        }
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ErrorClass::Config => "config",
            ErrorClass::Numeric => "numeric",
            ErrorClass::Assumption => "assumption",
            ErrorClass::BlowUp => "blow-up",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("spectral parameter k = 0 is a singular point")]
    SingularPoint,
    #[error("integration failed to converge: {0}")]
    Nonconvergent(String),
    #[error("point {re:.6e}{im:+.6e}i is not a zero of a1 (column mismatch {mismatch:.3e})")]
    NotAZero { re: f64, im: f64, mismatch: f64 },
    #[error("a1 vanishes on the real axis near k = {0:.6e}")]
    SpectralSingularity(f64),
    #[error("R = {r} is within the guard band of the bifurcation value {n}*pi/A; real zeros at +-{half_a}")]
    Bifurcation { r: f64, n: usize, half_a: f64 },
    #[error("search box boundary passes too close to a zero (winding {0:.4})")]
    BoxTouchesZero(f64),
    #[error("Newton refinement failed near {re:.6e}{im:+.6e}i")]
    Refinement { re: f64, im: f64 },
    #[error("argument unwrapping failed near k = {0:.6e}: a1*a2 nearly vanishes on the contour")]
    NearZeroOnContour(f64),
    #[error("winding never reaches the level {level:.6} (threshold index {index})")]
    MissingCrossing { index: usize, level: f64 },
    #[error("|1 - r1 r2| = {0:.3e} at the stationary point")]
    NearSingular(f64),
    #[error("branch of log(k - zeta) cannot be resolved at k = {0}")]
    Branch(String),
    #[error("Im nu = {im_nu:.6} is outside the band ({lo}, {hi}) of sector index {m}")]
    SectorInconsistency { im_nu: f64, m: usize, lo: f64, hi: f64 },
    #[error("xi = {xi:.6} lies in the transition zone around {boundary:.6} (guard width {width:.3e})")]
    TransitionZone { xi: f64, boundary: f64, width: f64 },
    #[error("xi = 0 is singular for the sharp residue constant")]
    SingularDirection,
    #[error("modified reflection coefficient is degenerate (|r| = {0:.3e})")]
    DegenerateReflection(f64),
    #[error("Gamma function pole at {0}")]
    GammaPole(String),
    #[error("kink denominator vanishes (|p^2 + c0 f| = {0:.3e})")]
    KinkBlowUp(f64),
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error("solution blew up at t ~ {t_est:.4} (last finite time {t_last:.4}, max |q| = {max_abs:.3e} at x = {x_at:.3})")]
    BlowUp { t_last: f64, t_est: f64, max_abs: f64, x_at: f64 },
    #[error("ray x = {x:.4} leaves the trusted region |x| <= {limit:.4}")]
    OutOfDomain { x: f64, limit: f64 },
    #[error("no snapshot at t = {0}")]
    MissingSnapshot(f64),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            Config(_) | OutOfDomain { .. } | MissingSnapshot(_) | Io(_) | Csv(_) | Json(_) => {
                ErrorClass::Config
            }
            SingularPoint | Nonconvergent(_) | NotAZero { .. } | BoxTouchesZero(_)
            | Refinement { .. } | NearZeroOnContour(_) | NearSingular(_) | Branch(_)
            | SingularDirection | DegenerateReflection(_) | GammaPole(_) => ErrorClass::Numeric,
            SpectralSingularity(_) | Bifurcation { .. } | MissingCrossing { .. }
            | SectorInconsistency { .. } | TransitionZone { .. } | Assumption(_) => {
                ErrorClass::Assumption
            }
            BlowUp { .. } | KinkBlowUp(_) => ErrorClass::BlowUp,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
