//! Incident fields as regular-wave coefficients.

use num_complex::Complex64;

use super::vsh::AngularTable;
use super::{c, ModeIndex, Polarization, SolverError};
use crate::geomap::{CVector, Point};
use crate::specfun::SphericalArrays;

/// Hard cap on the truncation degree.
pub const NMAX_CAP: usize = 80;

/// Relative size below which the coefficient tail is dropped.
const TAIL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// `E = p e^{ik d·x}`, `H = d × E`.
    PlaneWave { direction: Point, polarization: CVector },
    /// Point current `j = p δ(x - x₀)`; the expansion holds for `|x| < |x₀|`.
    Dipole { position: Point, moment: CVector },
    /// Explicit regular-wave coefficients.
    Coefficients(Vec<(ModeIndex, Complex64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncidentSpec {
    pub k: f64,
    pub source: Source,
}

/// Truncation degree and whether the cap was hit before the tail criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NmaxChoice {
    pub nmax: usize,
    pub truncated: bool,
}

fn check_k(k: f64) -> Result<(), SolverError> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(SolverError::Wavenumber(k))
    }
}

fn hermitian(a: &CVector, b: &CVector) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

impl IncidentSpec {
    pub fn plane_wave(k: f64, direction: Point, polarization: CVector) -> Result<Self, SolverError> {
        check_k(k)?;
        let dn = direction.norm();
        let pn = polarization.norm();
        if !(dn > 0.0) || !(pn > 0.0) {
            return Err(SolverError::Source("direction and polarization must be nonzero".into()));
        }
        let d = direction / dn;
        let dc = d.map(|v| c(v, 0.0));
        if dc.dot(&polarization).norm() > 1e-12 * pn {
            return Err(SolverError::Source("polarization must be orthogonal to the direction".into()));
        }
        Ok(Self { k, source: Source::PlaneWave { direction: d, polarization } })
    }

    pub fn dipole(k: f64, position: Point, moment: CVector) -> Result<Self, SolverError> {
        check_k(k)?;
        if !(position.norm() > 0.0) {
            return Err(SolverError::Source("dipole must not sit at the origin".into()));
        }
        Ok(Self { k, source: Source::Dipole { position, moment } })
    }

    pub fn coefficients_only(k: f64, coefficients: Vec<(ModeIndex, Complex64)>) -> Result<Self, SolverError> {
        check_k(k)?;
        Ok(Self { k, source: Source::Coefficients(coefficients) })
    }

    /// Source strength `‖j‖`: `|p|` for plane waves, `|p| k²` for dipoles,
    /// the `ℓ²` norm of explicit coefficients. Homogeneous of degree one.
    pub fn strength(&self) -> f64 {
        match &self.source {
            Source::PlaneWave { polarization, .. } => polarization.norm(),
            Source::Dipole { moment, .. } => moment.norm() * self.k * self.k,
            Source::Coefficients(v) => v.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt(),
        }
    }

    /// Scale the source by a real factor.
    pub fn scaled(&self, factor: f64) -> Self {
        let f = c(factor, 0.0);
        let source = match &self.source {
            Source::PlaneWave { direction, polarization } => Source::PlaneWave {
                direction: *direction,
                polarization: polarization * f,
            },
            Source::Dipole { position, moment } => Source::Dipole { position: *position, moment: moment * f },
            Source::Coefficients(v) => Source::Coefficients(v.iter().map(|(m, a)| (*m, a * f)).collect()),
        };
        Self { k: self.k, source }
    }

    /// Coefficients for every mode with `n <= nmax`, sorted. Entries below
    /// `1e-14` of the largest of the same degree are dropped (they are
    /// rounding noise for symmetric sources).
    pub fn coefficients(&self, nmax: usize) -> Result<Vec<(ModeIndex, Complex64)>, SolverError> {
        let k = self.k;
        let mut out: Vec<(ModeIndex, Complex64)> = match &self.source {
            Source::Coefficients(v) => v.iter().filter(|(m, _)| m.n <= nmax).cloned().collect(),
            Source::PlaneWave { direction, polarization } => {
                let table = AngularTable::new(nmax, direction).expect("direction is nonzero");
                let dc = direction.map(|v| c(v, 0.0));
                let dxp = dc.cross(polarization);
                let mut v = Vec::new();
                for n in 1..=nmax {
                    let pref = Complex64::i().powu(n as u32) * (4.0 * std::f64::consts::PI);
                    for m in -(n as i32)..=(n as i32) {
                        let phi = table.phi(n, m);
                        v.push((ModeIndex { n, m, pol: Polarization::TE }, pref * hermitian(phi, polarization)));
                        v.push((ModeIndex { n, m, pol: Polarization::TM }, pref * Complex64::i() * hermitian(phi, &dxp)));
                    }
                }
                v
            }
            Source::Dipole { position, moment } => {
                let r0 = position.norm();
                let table = AngularTable::new(nmax, position).expect("position is nonzero");
                let a = SphericalArrays::new(nmax, c(k * r0, 0.0))?;
                let rh = table.frame.r_hat.map(|v| c(v, 0.0));
                let mut v = Vec::new();
                for n in 1..=nmax {
                    let (h, hp) = a.hankel(n);
                    let l = ((n * (n + 1)) as f64).sqrt();
                    let drh = h + hp * (k * r0);
                    for m in -(n as i32)..=(n as i32) {
                        let te = -h * k * k * hermitian(table.phi(n, m), moment);
                        // Angular-conjugated N^h(x₀)·p.
                        let nh = -(h * l / (k * r0)) * table.y(n, m).conj() * rh.dot(moment)
                            - drh / (k * r0) * hermitian(table.psi(n, m), moment);
                        let tm = -nh * k * k;
                        v.push((ModeIndex { n, m, pol: Polarization::TE }, te));
                        v.push((ModeIndex { n, m, pol: Polarization::TM }, tm));
                    }
                }
                v
            }
        };
        let mut max_n = vec![0.0f64; nmax + 1];
        for (m, a) in &out {
            max_n[m.n] = max_n[m.n].max(a.norm());
        }
        out.retain(|(m, a)| a.norm() > 1e-14 * max_n[m.n]);
        out.sort_by_key(|(m, _)| *m);
        Ok(out)
    }

    /// Smallest degree beyond which `max_m |a_nm| |j_n(kR)|` stays below
    /// `1e-12` of its maximum, capped at [`NMAX_CAP`].
    pub fn choose_nmax(&self, radius: f64) -> Result<NmaxChoice, SolverError> {
        let coefs = self.coefficients(NMAX_CAP)?;
        let a = SphericalArrays::new(NMAX_CAP, c(self.k * radius.max(1e-300), 0.0))?;
        let mut size = vec![0.0f64; NMAX_CAP + 1];
        for (m, v) in &coefs {
            let w = v.norm() * (a.j[m.n].norm() + a.j_prime[m.n].norm());
            size[m.n] = size[m.n].max(w);
        }
        let max = size.iter().cloned().fold(0.0, f64::max);
        let last = (1..=NMAX_CAP).rev().find(|&n| size[n] >= TAIL * max).unwrap_or(1);
        Ok(NmaxChoice { nmax: last, truncated: last == NMAX_CAP && max > 0.0 })
    }
}

