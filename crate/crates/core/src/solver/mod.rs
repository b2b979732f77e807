//! Mode solver for radially stratified isotropic media.
//!
//! Fields are expanded in TE and TM vector spherical waves. For a TE mode
//! `E = (U/r) Φ̂_nm`; for a TM mode `H = (V/r) Φ̂_nm`. In both cases `U` and
//! `V` are `r` times the tangential E and H coefficients and satisfy a
//! first-order 2×2 system in `r` that depends on `(n, polarization)` only, so
//! one radial solve serves every `m`. Exterior amplitudes refer to
//!
//! | polarization | regular wave | outgoing wave |
//! |---|---|---|
//! | TE | `E = j_n(kr) Φ̂_nm` | `E = h_n(kr) Φ̂_nm` |
//! | TM | `E = ∇×(j_n(kr) Φ̂_nm)/k` | `E = ∇×(h_n(kr) Φ̂_nm)/k` |

mod field;
mod incident;
mod norms;
mod ode;
mod radial;
pub mod vsh;

pub use field::{
    assemble_field, reflect_solution, Bundle, FieldExpansion, LinearCombination,
    ModeSolution, RadialField, Reflected, RemovedSingularity,
};
pub use incident::{IncidentSpec, NmaxChoice, Source, NMAX_CAP};
pub use norms::{
    data_functional, hcurl_shell_misfit, jump_norm, JumpReport, outgoing_residual, panels, pair_hcurl_norm,
    pair_l2_norm, shell_norms, stability_ratio, ShellNorms,
};
pub use ode::Tolerances;
pub use radial::{solve, FreeWave, RadialSolution, RadialStack, WaveKind};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::media::MediaError;
use crate::specfun::SpecfunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    TE,
    TM,
}

/// `(n, m, polarization)` with `n >= 1` and `|m| <= n`. Orders by `n`, then `m`,
/// then polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub n: usize,
    pub m: i32,
    pub pol: Polarization,
}

impl ModeIndex {
    pub fn new(n: usize, m: i32, pol: Polarization) -> Result<Self, SolverError> {
        if n == 0 || m.unsigned_abs() as usize > n {
            return Err(SolverError::InvalidMode { n, m });
        }
        Ok(Self { n, m, pol })
    }

    /// All modes with `1 <= n <= nmax`, sorted.
    pub fn all(nmax: usize) -> Vec<Self> {
        let mut out = Vec::new();
        for n in 1..=nmax {
            for m in -(n as i32)..=(n as i32) {
                for pol in [Polarization::TE, Polarization::TM] {
                    out.push(Self { n, m, pol });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("invalid mode index n = {n}, m = {m}")]
    InvalidMode { n: usize, m: i32 },
    #[error("wavenumber must be positive and finite, got {0}")]
    Wavenumber(f64),
    #[error("step-size control failed near r = {radius} (step {step:e})")]
    StepControl { radius: f64, step: f64 },
    #[error("matching system for n = {n}, {pol:?} is resonance-dominated: condition number {condition:e}")]
    IllConditioned {
        n: usize,
        pol: Polarization,
        condition: f64,
    },
    #[error("layout has a lossless negative-index layer; set a positive loss or allow it explicitly")]
    LosslessNegativeIndex,
    #[error("field evaluation at the origin is not supported")]
    Origin,
    #[error("only Kelvin inversions preserve the mode index")]
    NotKelvin,
    #[error("empty shell [{a}, {b}]")]
    EmptyShell { a: f64, b: f64 },
    #[error("loss parameter must be positive, got {0}")]
    Delta(f64),
    #[error("invalid source: {0}")]
    Source(String),
    #[error("incompatible expansions: {0}")]
    Incompatible(String),
    #[error(transparent)]
    Media(#[from] MediaError),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
}

/// Solver controls.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tolerances: Tolerances,
    /// Largest accepted condition number of the scaled matching system.
    pub max_condition: f64,
    /// Solve lossless layouts with negative-index layers anyway.
    pub allow_lossless_negative: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            max_condition: 1e14,
            allow_lossless_negative: false,
        }
    }
}

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
