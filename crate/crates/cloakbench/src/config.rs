//! Experiment configuration, read from JSON and validated before any solve.

use std::path::Path;

use cloak::geomap::{CVector, Point};
use cloak::media::{build_kelvin_scheme, MaterialLayout, RadialProfile};
use cloak::solver::{IncidentSpec, NMAX_CAP};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::BenchError;

/// Largest truncation degree used when the config leaves `nmax` open.
pub const DEFAULT_NMAX_LIMIT: usize = 40;

/// `1e-1, 3e-2, 1e-2, …, 1e-5`.
pub fn default_deltas() -> Vec<f64> {
    vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5]
}

/// A real number or an `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

impl Scalar {
    pub fn value(self) -> Complex64 {
        match self {
            Scalar::Real(x) => Complex64::new(x, 0.0),
            Scalar::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

impl Default for Scalar {
    fn default() -> Self {
        Scalar::Real(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    /// `(I, I)`: nothing to hide.
    #[default]
    Vacuum,
    /// Constant isotropic `(εI, μI)` on `[r₂, 2r₂]`.
    Constant,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectSpec {
    pub kind: ObjectKind,
    pub eps: Scalar,
    pub mu: Scalar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    #[default]
    PlaneWave,
    /// Point dipole at `position` with moment `polarization`.
    Dipole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSpec {
    pub kind: SourceKind,
    /// Propagation direction of a plane wave.
    pub direction: [f64; 3],
    /// Plane-wave polarization or dipole moment.
    pub polarization: [Scalar; 3],
    /// Dipole location.
    pub position: Option<[f64; 3]>,
}

impl Default for SourceSpec {
    fn default() -> Self {
        Self {
            kind: SourceKind::PlaneWave,
            direction: [0.0, 0.0, 1.0],
            polarization: [Scalar::Real(1.0), Scalar::Real(0.0), Scalar::Real(0.0)],
            position: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub k: f64,
    pub r2: f64,
    /// `ℓ = r₃ / r₂`.
    pub ratio: f64,
    pub object: ObjectSpec,
    pub source: SourceSpec,
    /// Loss parameters, positive and strictly decreasing.
    pub deltas: Vec<f64>,
    /// Misfit shell `[a, b]`; defaults to `[r₃, 2r₃]`.
    pub shell: Option<[f64; 2]>,
    /// Truncation degree; defaults to the tail criterion at `b`, capped at 40.
    pub nmax: Option<usize>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            k: 1.0,
            r2: 0.25,
            ratio: 20.0,
            object: ObjectSpec::default(),
            source: SourceSpec::default(),
            deltas: default_deltas(),
            shell: None,
            nmax: None,
            seed: 0,
        }
    }
}

fn usage(msg: impl Into<String>) -> BenchError {
    BenchError::Usage(msg.into())
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self, BenchError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| usage(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn r3(&self) -> f64 {
        self.ratio * self.r2
    }

    pub fn shell(&self) -> [f64; 2] {
        self.shell.unwrap_or([self.r3(), 2.0 * self.r3()])
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(usage(format!("k must be positive, got {}", self.k)));
        }
        if !(self.r2 > 0.0 && self.r2.is_finite()) {
            return Err(usage(format!("r2 must be positive, got {}", self.r2)));
        }
        if !(self.ratio > 2.0 && self.ratio.is_finite()) {
            return Err(usage(format!("ratio must exceed 2, got {}", self.ratio)));
        }
        if self.deltas.is_empty() {
            return Err(usage("delta list is empty"));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(usage(format!("delta values must be positive, got {d}")));
        }
        if self.deltas.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(usage("delta values must be strictly decreasing"));
        }
        let [a, b] = self.shell();
        if !(a >= self.r3() && b > a && b.is_finite()) {
            return Err(usage(format!("shell [{a}, {b}] must satisfy r3 = {} <= a < b", self.r3())));
        }
        if let Some(n) = self.nmax {
            if n == 0 || n > NMAX_CAP {
                return Err(usage(format!("nmax must lie in 1..={NMAX_CAP}, got {n}")));
            }
        }
        self.object_profile()?;
        self.incident()?;
        Ok(())
    }

    /// The object on `[r₂, 2r₂]`, with the tightest ellipticity constant.
    pub fn object_profile(&self) -> Result<RadialProfile, BenchError> {
        self.object_profile_at(self.r2)
    }

    pub fn object_profile_at(&self, r2: f64) -> Result<RadialProfile, BenchError> {
        match self.object.kind {
            ObjectKind::Vacuum => Ok(RadialProfile::vacuum(r2)),
            ObjectKind::Constant => {
                let (eps, mu) = (self.object.eps.value(), self.object.mu.value());
                if !(eps.re > 0.0 && mu.re > 0.0) {
                    return Err(usage("object eps and mu need positive real parts"));
                }
                let lam = [eps.re, mu.re].iter().map(|v| v.max(1.0 / v)).fold(1.0, f64::max);
                Ok(RadialProfile::constant(r2, eps, mu, lam))
            }
        }
    }

    pub fn incident(&self) -> Result<IncidentSpec, BenchError> {
        let p = CVector::new(
            self.source.polarization[0].value(),
            self.source.polarization[1].value(),
            self.source.polarization[2].value(),
        );
        let spec = match self.source.kind {
            SourceKind::PlaneWave => IncidentSpec::plane_wave(self.k, Point::from(self.source.direction), p),
            SourceKind::Dipole => {
                let x = self.source.position.ok_or_else(|| usage("dipole source needs a position"))?;
                let x = Point::from(x);
                if x.norm() <= self.shell()[1] {
                    return Err(usage("dipole must sit outside the misfit shell"));
                }
                IncidentSpec::dipole(self.k, x, p)
            }
        };
        spec.map_err(|e| usage(e.to_string()))
    }

    /// Truncation degree for this experiment.
    pub fn resolved_nmax(&self) -> Result<usize, BenchError> {
        match self.nmax {
            Some(n) => Ok(n),
            None => {
                let choice = self
                    .incident()?
                    .choose_nmax(self.shell()[1])
                    .map_err(|e| BenchError::Numerical(e.to_string()))?;
                Ok(choice.nmax.min(DEFAULT_NMAX_LIMIT))
            }
        }
    }

    pub fn cloak_layout(&self, delta: f64) -> Result<MaterialLayout, BenchError> {
        Ok(build_kelvin_scheme(&self.object_profile()?, self.r2, self.r3(), delta)?)
    }

    /// Same experiment at another `ℓ`, holding `r₃` fixed.
    pub fn with_ratio_fixed_r3(&self, ratio: f64) -> Self {
        let r3 = self.r3();
        Self { ratio, r2: r3 / ratio, ..self.clone() }
    }
}
