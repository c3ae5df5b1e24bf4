//! Inverse-scattering long-time asymptotics for the defocusing nonlocal NLS
//! equation `i q_t + q_xx - 2 q^2 conj(q(-x, t)) = 0` with step-like data,
//! together with a direct finite-difference solver used to check them.

pub mod error;
pub mod gamma;
pub mod ode;
pub mod quad;
pub mod scattering;
pub mod spectrum;
pub mod table;
pub mod phase;
pub mod asymptotics;
pub mod pde;
pub mod io;

pub use error::{Error, ErrorClass, Result};
pub use num_complex::Complex64;
pub use scattering::{
    jost_at_origin, norming_constant, pure_step_spectral, reflection, spectral_functions,
    transfer_matrix_oracle, BackgroundParams, InitialProfile, JostKind, JostMatrix, ProfileSpectral,
    PureStepSpectral, SpectralData,
};
