//! Radial fields, their Kelvin reflections, and synthesis of Cartesian fields.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::radial::{FreeWave, RadialSolution, WaveKind};
use super::vsh::AngularTable;
use super::{c, ModeIndex, Polarization, SolverError};
use crate::geomap::{CVector, DiffeoMap, Point};

type C3 = [Complex64; 3];

fn zero3() -> C3 {
    [c(0.0, 0.0); 3]
}

/// Radial coefficients of `E`, `H`, `∇×E`, `∇×H` in the `(Y r̂, Ψ̂, Φ̂)` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bundle {
    pub e: C3,
    pub h: C3,
    pub curl_e: C3,
    pub curl_h: C3,
}

impl Bundle {
    pub fn zero() -> Self {
        Self { e: zero3(), h: zero3(), curl_e: zero3(), curl_h: zero3() }
    }

    /// Bundle of a Maxwell solution from `(U, V)` and the local material.
    pub fn from_state(
        n: usize,
        pol: Polarization,
        k: f64,
        eps: Complex64,
        mu: Complex64,
        r: f64,
        state: [Complex64; 2],
    ) -> Self {
        let [u, v] = state;
        let l = ((n * (n + 1)) as f64).sqrt();
        let i = Complex64::i();
        let z = c(0.0, 0.0);
        let (e, h) = match pol {
            Polarization::TE => ([z, z, u / r], [i * l * u / (k * mu * r * r), v / r, z]),
            Polarization::TM => ([-i * l * v / (k * eps * r * r), u / r, z], [z, z, v / r]),
        };
        let ik = c(0.0, k);
        Self {
            e,
            h,
            curl_e: h.map(|x| ik * mu * x),
            curl_h: e.map(|x| -ik * eps * x),
        }
    }

    fn combine(&self, a: Complex64, other: &Bundle, b: Complex64) -> Bundle {
        let f = |x: &C3, y: &C3| [x[0] * a + y[0] * b, x[1] * a + y[1] * b, x[2] * a + y[2] * b];
        Bundle {
            e: f(&self.e, &other.e),
            h: f(&self.h, &other.h),
            curl_e: f(&self.curl_e, &other.curl_e),
            curl_h: f(&self.curl_h, &other.curl_h),
        }
    }

    pub fn scaled(&self, a: Complex64) -> Bundle {
        self.combine(a, &Bundle::zero(), c(0.0, 0.0))
    }

    pub fn add(&self, other: &Bundle) -> Bundle {
        self.combine(c(1.0, 0.0), other, c(1.0, 0.0))
    }

    pub fn sub(&self, other: &Bundle) -> Bundle {
        self.combine(c(1.0, 0.0), other, c(-1.0, 0.0))
    }

    /// Pull back through the Kelvin map about `radius`, evaluated at the image
    /// radius `rho`: fields scale by `a = R²/ρ²` with the radial part negated,
    /// curls by `a²` with the tangential part negated.
    fn kelvin(&self, radius: f64, rho: f64) -> Bundle {
        let a = radius * radius / (rho * rho);
        let field = |x: &C3| [-x[0] * a, x[1] * a, x[2] * a];
        let curl = |x: &C3| [x[0] * (a * a), -x[1] * (a * a), -x[2] * (a * a)];
        Bundle {
            e: field(&self.e),
            h: field(&self.h),
            curl_e: curl(&self.curl_e),
            curl_h: curl(&self.curl_h),
        }
    }

    /// Tangential E components `(ψ, φ)`.
    pub fn e_tangential(&self) -> [Complex64; 2] {
        [self.e[1], self.e[2]]
    }

    pub fn h_tangential(&self) -> [Complex64; 2] {
        [self.h[1], self.h[2]]
    }
}

/// The radial part of one `(n, polarization)` family of fields.
pub trait RadialField: Send + Sync {
    fn degree(&self) -> usize;
    fn polarization(&self) -> Polarization;
    fn bundle(&self, r: f64) -> Result<Bundle, SolverError>;
    /// Outgoing amplitude for a unit incident wave, when defined.
    fn outgoing(&self) -> Option<Complex64> {
        None
    }
    /// Radii where the profile may be discontinuous.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl RadialField for RadialSolution {
    fn degree(&self) -> usize {
        self.n
    }
    fn polarization(&self) -> Polarization {
        self.pol
    }
    fn bundle(&self, r: f64) -> Result<Bundle, SolverError> {
        if !(r > 0.0) {
            return Err(SolverError::Origin);
        }
        let (eps, mu) = self.material(r);
        Ok(Bundle::from_state(self.n, self.pol, self.k, eps, mu, r, self.state(r)?))
    }
    fn outgoing(&self) -> Option<Complex64> {
        Some(self.outgoing)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.interfaces()
    }
}

impl RadialField for FreeWave {
    fn degree(&self) -> usize {
        self.n
    }
    fn polarization(&self) -> Polarization {
        self.pol
    }
    fn bundle(&self, r: f64) -> Result<Bundle, SolverError> {
        if !(r > 0.0) {
            return Err(SolverError::Origin);
        }
        let one = c(1.0, 0.0);
        Ok(Bundle::from_state(self.n, self.pol, self.k, one, one, r, self.state(r)?))
    }
    fn outgoing(&self) -> Option<Complex64> {
        Some(match self.kind {
            WaveKind::Regular => c(0.0, 0.0),
            WaveKind::Outgoing => c(1.0, 0.0),
        })
    }
}

/// Kelvin reflection of a radial field about the sphere of radius `radius`.
#[derive(Clone)]
pub struct Reflected {
    pub inner: Arc<dyn RadialField>,
    pub radius: f64,
}

impl RadialField for Reflected {
    fn degree(&self) -> usize {
        self.inner.degree()
    }
    fn polarization(&self) -> Polarization {
        self.inner.polarization()
    }
    fn bundle(&self, rho: f64) -> Result<Bundle, SolverError> {
        if !(rho > 0.0) {
            return Err(SolverError::Origin);
        }
        let r = self.radius * self.radius / rho;
        Ok(self.inner.bundle(r)?.kelvin(self.radius, rho))
    }
    fn breakpoints(&self) -> Vec<f64> {
        let r2 = self.radius * self.radius;
        self.inner.breakpoints().into_iter().filter(|&r| r > 0.0).map(|r| r2 / r).collect()
    }
}

/// `Σ cᵢ fᵢ` over radial fields of one `(n, polarization)`.
#[derive(Clone)]
pub struct LinearCombination {
    pub parts: Vec<(Complex64, Arc<dyn RadialField>)>,
}

impl RadialField for LinearCombination {
    fn degree(&self) -> usize {
        self.parts.first().map(|p| p.1.degree()).unwrap_or(1)
    }
    fn polarization(&self) -> Polarization {
        self.parts.first().map(|p| p.1.polarization()).unwrap_or(Polarization::TE)
    }
    fn bundle(&self, r: f64) -> Result<Bundle, SolverError> {
        let mut out = Bundle::zero();
        for (a, f) in &self.parts {
            out = out.add(&f.bundle(r)?.scaled(*a));
        }
        Ok(out)
    }
    fn outgoing(&self) -> Option<Complex64> {
        self.parts
            .iter()
            .map(|(a, f)| f.outgoing().map(|s| a * s))
            .sum::<Option<Complex64>>()
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.parts.iter().flat_map(|p| p.1.breakpoints()).collect()
    }
}

/// Field with the localized singularity removed: the solution outside `r₃`,
/// `E - E¹ + E²` on `[2r₂, r₃]` and `E²` inside `2r₂`, where `E¹` reflects
/// the solution about `r₂` and `E²` reflects `E¹` about `r₃`.
#[derive(Clone)]
pub struct RemovedSingularity {
    pub solution: Arc<dyn RadialField>,
    pub first: Arc<dyn RadialField>,
    pub second: Arc<dyn RadialField>,
    pub r2: f64,
    pub r3: f64,
}

impl RemovedSingularity {
    pub fn new(solution: Arc<dyn RadialField>, r2: f64, r3: f64) -> Self {
        let first: Arc<dyn RadialField> = Arc::new(Reflected { inner: solution.clone(), radius: r2 });
        let second: Arc<dyn RadialField> = Arc::new(Reflected { inner: first.clone(), radius: r3 });
        Self { solution, first, second, r2, r3 }
    }

    /// The three pieces evaluated at the same radius: `(outer, middle, inner)`.
    pub fn pieces(&self, r: f64) -> Result<(Bundle, Bundle, Bundle), SolverError> {
        let e = self.solution.bundle(r)?;
        let e1 = self.first.bundle(r)?;
        let e2 = self.second.bundle(r)?;
        Ok((e, e.sub(&e1).add(&e2), e2))
    }

    /// Tangential jumps `(E, H)` of outside minus inside across `∂B_{r₃}`.
    pub fn jump_outer(&self) -> Result<Bundle, SolverError> {
        let (o, m, _) = self.pieces(self.r3)?;
        Ok(o.sub(&m))
    }

    /// Tangential jumps `(E, H)` of outside minus inside across `∂B_{2r₂}`.
    pub fn jump_inner(&self) -> Result<Bundle, SolverError> {
        let (_, m, i) = self.pieces(2.0 * self.r2)?;
        Ok(m.sub(&i))
    }
}

impl RadialField for RemovedSingularity {
    fn degree(&self) -> usize {
        self.solution.degree()
    }
    fn polarization(&self) -> Polarization {
        self.solution.polarization()
    }
    fn bundle(&self, r: f64) -> Result<Bundle, SolverError> {
        if r > self.r3 {
            self.solution.bundle(r)
        } else if r > 2.0 * self.r2 {
            let (_, m, _) = self.pieces(r)?;
            Ok(m)
        } else {
            self.second.bundle(r)
        }
    }
    fn breakpoints(&self) -> Vec<f64> {
        let mut out = vec![2.0 * self.r2, self.r3];
        out.extend(self.solution.breakpoints());
        out.extend(self.first.breakpoints());
        out.extend(self.second.breakpoints());
        out
    }
}

/// One mode of a field: its index, its incident amplitude, and the radial
/// profile for a unit amplitude.
#[derive(Clone)]
pub struct ModeSolution {
    pub mode: ModeIndex,
    pub amplitude: Complex64,
    pub radial: Arc<dyn RadialField>,
}

impl std::fmt::Debug for ModeSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModeSolution")
            .field("mode", &self.mode)
            .field("amplitude", &self.amplitude)
            .field("outgoing", &self.outgoing())
            .finish()
    }
}

impl ModeSolution {
    /// Outgoing amplitude `s` of this mode, when defined.
    pub fn outgoing(&self) -> Option<Complex64> {
        self.radial.outgoing().map(|s| s * self.amplitude)
    }

    pub fn bundle(&self, r: f64) -> Result<Bundle, SolverError> {
        Ok(self.radial.bundle(r)?.scaled(self.amplitude))
    }

    /// `(u, v)`: `r` times the tangential E and H coefficients carried by this
    /// mode (the `Φ̂` component for the field that has one, `Ψ̂` for the other).
    pub fn uv(&self, r: f64) -> Result<(Complex64, Complex64), SolverError> {
        let b = self.bundle(r)?;
        Ok(match self.mode.pol {
            Polarization::TE => (b.e[2] * r, b.h[1] * r),
            Polarization::TM => (b.e[1] * r, b.h[2] * r),
        })
    }

    /// `{mode: {n, m, pol}, outgoing: [re, im], grid, u, v}` sampled on `grid`.
    pub fn to_json(&self, grid: &[f64]) -> Result<Value, SolverError> {
        let mut u = Vec::with_capacity(grid.len());
        let mut v = Vec::with_capacity(grid.len());
        for &r in grid {
            let (a, b) = self.uv(r)?;
            u.push([a.re, a.im]);
            v.push([b.re, b.im]);
        }
        let s = self.outgoing().unwrap_or(c(0.0, 0.0));
        Ok(json!({
            "mode": {"n": self.mode.n, "m": self.mode.m, "pol": self.mode.pol},
            "outgoing": [s.re, s.im],
            "grid": grid,
            "u": u,
            "v": v,
        }))
    }
}

/// Reflect a solution through a Kelvin map; other maps are rejected.
pub fn reflect_solution(solution: &ModeSolution, map: &DiffeoMap) -> Result<ModeSolution, SolverError> {
    let radius = map.kelvin_radius().ok_or(SolverError::NotKelvin)?;
    Ok(ModeSolution {
        mode: solution.mode,
        amplitude: solution.amplitude,
        radial: Arc::new(Reflected { inner: solution.radial.clone(), radius }),
    })
}

/// A field as a sorted list of modes sharing one radial profile per
/// `(n, polarization)`.
#[derive(Clone, Debug)]
pub struct FieldExpansion {
    pub k: f64,
    pub modes: Vec<ModeSolution>,
}

impl FieldExpansion {
    /// Attach radial solutions to incident amplitudes.
    pub fn from_solutions(
        k: f64,
        amplitudes: &[(ModeIndex, Complex64)],
        solutions: &[Arc<RadialSolution>],
    ) -> Result<Self, SolverError> {
        let by_key: BTreeMap<(usize, Polarization), Arc<dyn RadialField>> = solutions
            .iter()
            .map(|s| ((s.n, s.pol), s.clone() as Arc<dyn RadialField>))
            .collect();
        let mut modes = Vec::with_capacity(amplitudes.len());
        for (mode, a) in amplitudes {
            let radial = by_key
                .get(&(mode.n, mode.pol))
                .ok_or_else(|| SolverError::Incompatible(format!("no radial solution for n = {}, {:?}", mode.n, mode.pol)))?
                .clone();
            modes.push(ModeSolution { mode: *mode, amplitude: *a, radial });
        }
        modes.sort_by_key(|m| m.mode);
        Ok(Self { k, modes })
    }

    /// The incident field itself: regular vacuum waves.
    pub fn incident(k: f64, amplitudes: &[(ModeIndex, Complex64)]) -> Self {
        let mut cache: BTreeMap<(usize, Polarization), Arc<dyn RadialField>> = BTreeMap::new();
        let mut modes: Vec<ModeSolution> = amplitudes
            .iter()
            .map(|(mode, a)| {
                let radial = cache
                    .entry((mode.n, mode.pol))
                    .or_insert_with(|| {
                        Arc::new(FreeWave { kind: WaveKind::Regular, n: mode.n, pol: mode.pol, k })
                    })
                    .clone();
                ModeSolution { mode: *mode, amplitude: *a, radial }
            })
            .collect();
        modes.sort_by_key(|m| m.mode);
        Self { k, modes }
    }

    pub fn nmax(&self) -> usize {
        self.modes.iter().map(|m| m.mode.n).max().unwrap_or(0)
    }

    /// Distinct radial profiles keyed by `(n, polarization)`, with
    /// `Σ_m |amplitude|²`.
    pub fn radial_groups(&self) -> Vec<(Arc<dyn RadialField>, f64)> {
        let mut groups: BTreeMap<(usize, Polarization), (Arc<dyn RadialField>, f64)> = BTreeMap::new();
        for m in &self.modes {
            groups
                .entry((m.mode.n, m.mode.pol))
                .or_insert_with(|| (m.radial.clone(), 0.0))
                .1 += m.amplitude.norm_sqr();
        }
        groups.into_values().collect()
    }

    /// Replace every radial profile by `f(profile)`, once per `(n, polarization)`.
    pub fn map_radial<F>(&self, f: F) -> Self
    where
        F: Fn(&Arc<dyn RadialField>) -> Arc<dyn RadialField>,
    {
        let mut cache: BTreeMap<(usize, Polarization), Arc<dyn RadialField>> = BTreeMap::new();
        let modes = self
            .modes
            .iter()
            .map(|m| {
                let radial = cache.entry((m.mode.n, m.mode.pol)).or_insert_with(|| f(&m.radial)).clone();
                ModeSolution { mode: m.mode, amplitude: m.amplitude, radial }
            })
            .collect();
        Self { k: self.k, modes }
    }

    /// `Σ cᵢ · expansionᵢ` for expansions with identical modes and amplitudes.
    pub fn combine(parts: &[(Complex64, &FieldExpansion)]) -> Result<Self, SolverError> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| SolverError::Incompatible("nothing to combine".into()))?;
        for (_, other) in &parts[1..] {
            if other.modes.len() != first.modes.len()
                || other
                    .modes
                    .iter()
                    .zip(&first.modes)
                    .any(|(a, b)| a.mode != b.mode || a.amplitude != b.amplitude)
            {
                return Err(SolverError::Incompatible(
                    "expansions must share modes and amplitudes".into(),
                ));
            }
        }
        let mut cache: BTreeMap<(usize, Polarization), Arc<dyn RadialField>> = BTreeMap::new();
        let mut modes = Vec::with_capacity(first.modes.len());
        for (i, m) in first.modes.iter().enumerate() {
            let radial = cache
                .entry((m.mode.n, m.mode.pol))
                .or_insert_with(|| {
                    Arc::new(LinearCombination {
                        parts: parts.iter().map(|(a, e)| (*a, e.modes[i].radial.clone())).collect(),
                    })
                })
                .clone();
            modes.push(ModeSolution { mode: m.mode, amplitude: m.amplitude, radial });
        }
        Ok(Self { k: first.k, modes })
    }

    /// `(E, H)` at the given points.
    pub fn evaluate(&self, points: &[Point]) -> Result<Vec<(CVector, CVector)>, SolverError> {
        assemble_field(&self.modes, points)
    }
}

/// Synthesize `(E, H)` from mode solutions at each point.
pub fn assemble_field(
    solutions: &[ModeSolution],
    points: &[Point],
) -> Result<Vec<(CVector, CVector)>, SolverError> {
    let nmax = solutions.iter().map(|m| m.mode.n).max().unwrap_or(0);
    points
        .par_iter()
        .map(|x| {
            let mut e = CVector::zeros();
            let mut h = CVector::zeros();
            if solutions.is_empty() {
                return Ok((e, h));
            }
            let table = AngularTable::new(nmax, x).ok_or(SolverError::Origin)?;
            let r = x.norm();
            let mut cache: Vec<(*const (), Bundle)> = Vec::new();
            for s in solutions {
                let key = Arc::as_ptr(&s.radial) as *const ();
                let b = match cache.iter().find(|(k, _)| *k == key) {
                    Some((_, b)) => *b,
                    None => {
                        let b = s.radial.bundle(r)?;
                        cache.push((key, b));
                        b
                    }
                };
                e += table.synthesize(s.mode.n, s.mode.m, &b.e) * s.amplitude;
                h += table.synthesize(s.mode.n, s.mode.m, &b.h) * s.amplitude;
            }
            Ok((e, h))
        })
        .collect()
}
