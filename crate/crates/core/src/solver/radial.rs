//! Per-mode radial solve.
//!
//! In terms of `U` and `V` (see the module docs) and `L² = n(n+1)`:
//!
//! ```text
//! TE:  U' = -ikμ V,                 V' = (-ikε + iL²/(kμr²)) U
//! TM:  V' =  ikε U,                 U' = ( ikμ - iL²/(kεr²)) V
//! ```
//!
//! The core carries the regular solution only, started from its power series
//! near the origin. Every other layer carries two solutions, one integrated
//! outwards and one inwards, each normalized where it starts. Continuity of
//! `(U, V)` at every interface plus `incident + s·outgoing` outside gives a
//! small dense system, solved after column and row equilibration.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::ode::{State, Trajectory};
use super::{c, Polarization, SolverError, SolverOptions};
use crate::media::{MaterialLayout, RadialCoefficient, RadialLayer};
use crate::specfun::SphericalArrays;

/// Regular or outgoing vacuum wave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WaveKind {
    Regular,
    Outgoing,
}

/// `(U, V)` of a unit vacuum wave of the given kind.
pub(crate) fn free_state(
    kind: WaveKind,
    n: usize,
    pol: Polarization,
    k: f64,
    r: f64,
) -> Result<State, SolverError> {
    let zero = c(0.0, 0.0);
    if r == 0.0 {
        return Ok([zero, zero]);
    }
    let a = SphericalArrays::new(n, c(k * r, 0.0))?;
    let (f, fp) = match kind {
        WaveKind::Regular => (a.j[n], a.j_prime[n]),
        WaveKind::Outgoing => a.hankel(n),
    };
    // d/dr (r f(kr))
    let d = f + fp * (k * r);
    let i = Complex64::i();
    Ok(match pol {
        Polarization::TE => [f * r, i * d / k],
        Polarization::TM => [-d / k, -i * f * r],
    })
}

/// Coefficients of the radial system in one layer.
#[derive(Debug, Clone)]
struct LayerSystem {
    eps: RadialCoefficient,
    mu: RadialCoefficient,
    k: f64,
    l2: f64,
    pol: Polarization,
}

impl LayerSystem {
    fn f(&self, r: f64, y: &State) -> State {
        let ik = c(0.0, self.k);
        let eps = self.eps.eval(r);
        let mu = self.mu.eval(r);
        let centrifugal = c(0.0, self.l2 / (self.k * r * r));
        match self.pol {
            Polarization::TE => [-ik * mu * y[1], (-ik * eps + centrifugal / mu) * y[0]],
            Polarization::TM => [(ik * mu - centrifugal / eps) * y[1], ik * eps * y[0]],
        }
    }
}

/// `(U, V)` direction of the `r^{p}`-like local solution, `U'/U = p/r` for TE
/// and `V'/V = p/r` for TM.
fn power_direction(sys: &LayerSystem, r: f64, p: f64) -> State {
    let i = Complex64::i();
    match sys.pol {
        Polarization::TE => [c(1.0, 0.0), i * p / (sys.k * sys.mu.eval(r) * r)],
        Polarization::TM => [-i * p / (sys.k * sys.eps.eval(r) * r), c(1.0, 0.0)],
    }
}

/// Truncated power series of the regular solution in a homogeneous core,
/// scaled by `(r/r0)^{n+1}`.
#[derive(Debug, Clone)]
struct CoreSeries {
    r0: f64,
    n: usize,
    kappa2: Complex64,
    eps: Complex64,
    mu: Complex64,
    k: f64,
    pol: Polarization,
}

impl CoreSeries {
    fn state(&self, r: f64) -> State {
        let nf = self.n as f64;
        let a = 2.0 * (2.0 * nf + 3.0);
        let b = 8.0 * (2.0 * nf + 3.0) * (2.0 * nf + 5.0);
        let x2 = self.kappa2 * r * r;
        let s = c(1.0, 0.0) - x2 / a + x2 * x2 / b;
        let ds = -self.kappa2 * r * (2.0 / a) + self.kappa2 * self.kappa2 * r.powi(3) * (4.0 / b);
        let scale = (r / self.r0).powi(self.n as i32 + 1);
        let w = s * scale;
        let dw = (s * ((nf + 1.0) / r) + ds) * scale;
        let i = Complex64::i();
        match self.pol {
            Polarization::TE => [w, i * dw / (self.k * self.mu)],
            Polarization::TM => [-i * dw / (self.k * self.eps), w],
        }
    }
}

/// A solution basis function inside a layer with its coefficient
/// `mantissa · exp(log)`.
#[derive(Debug, Clone)]
struct Part {
    trajectory: Trajectory,
    mantissa: Complex64,
    log: f64,
}

#[derive(Debug, Clone)]
struct SolvedLayer {
    r_min: f64,
    r_max: f64,
    system: LayerSystem,
    parts: Vec<Part>,
}

impl SolvedLayer {
    fn state(&self, r: f64) -> State {
        let f = |t: f64, y: &State| self.system.f(t, y);
        let mut out = [c(0.0, 0.0); 2];
        for p in &self.parts {
            let (y, ls) = p.trajectory.eval(&f, r);
            let w = p.mantissa * (ls + p.log).exp();
            out[0] += y[0] * w;
            out[1] += y[1] * w;
        }
        out
    }
}

/// Layers of a layout prepared for repeated mode solves.
#[derive(Debug, Clone)]
pub struct RadialStack {
    pub layers: Vec<RadialLayer>,
    pub options: SolverOptions,
}

impl RadialStack {
    pub fn from_layout(layout: &MaterialLayout, options: SolverOptions) -> Result<Self, SolverError> {
        let layers = layout.radial_layers()?;
        if !options.allow_lossless_negative && has_lossless_negative(&layers) {
            return Err(SolverError::LosslessNegativeIndex);
        }
        Ok(Self { layers, options })
    }

    /// Radius beyond which the medium is vacuum.
    pub fn outer_radius(&self) -> f64 {
        self.layers.last().map(|l| l.r_max).unwrap_or(0.0)
    }

    /// Solve for the unit regular wave of degree `n` incident from outside.
    pub fn solve(&self, k: f64, n: usize, pol: Polarization) -> Result<RadialSolution, SolverError> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(SolverError::Wavenumber(k));
        }
        if n == 0 {
            return Err(SolverError::InvalidMode { n, m: 0 });
        }
        let l2 = (n * (n + 1)) as f64;
        let tol = self.options.tolerances;
        let systems: Vec<LayerSystem> = self
            .layers
            .iter()
            .map(|l| LayerSystem {
                eps: l.eps.clone(),
                mu: l.mu.clone(),
                k,
                l2,
                pol,
            })
            .collect();
        if systems.is_empty() {
            return Ok(RadialSolution {
                n,
                pol,
                k,
                outgoing: c(0.0, 0.0),
                condition: 1.0,
                outer: 0.0,
                layers: vec![],
                core: None,
            });
        }

        // Core: regular solution from the series.
        let core_layer = &self.layers[0];
        let r1 = core_layer.r_max;
        let r0 = (1e-3 * r1).min(1e-4);
        let (eps0, mu0) = (core_layer.eps.eval(r0), core_layer.mu.eval(r0));
        let series = CoreSeries {
            r0,
            n,
            kappa2: eps0 * mu0 * k * k,
            eps: eps0,
            mu: mu0,
            k,
            pol,
        };
        let f0 = |t: f64, y: &State| systems[0].f(t, y);
        let core_traj = Trajectory::integrate(&f0, r0, r1, series.state(r0), tol)?;

        // Other layers: outward and inward bases.
        let mut bases = Vec::with_capacity(systems.len() - 1);
        for (l, sys) in self.layers.iter().zip(&systems).skip(1) {
            let f = |t: f64, y: &State| sys.f(t, y);
            let grow = power_direction(sys, l.r_min, n as f64 + 1.0);
            let decay = power_direction(sys, l.r_max, -(n as f64));
            let out = Trajectory::integrate(&f, l.r_min, l.r_max, grow, tol)?;
            let inw = Trajectory::integrate(&f, l.r_max, l.r_min, decay, tol)?;
            bases.push((out, inw));
        }

        // Matching system with entries stored as (mantissa, log-magnitude).
        let m = bases.len();
        let size = 2 * (m + 1);
        let mut entries: Vec<Vec<(usize, Complex64, f64)>> = vec![Vec::new(); size];
        let put = |entries: &mut Vec<Vec<(usize, Complex64, f64)>>, col: usize, iface: usize, sign: f64, y: &State, ls: f64| {
            entries[col].push((2 * iface, y[0] * sign, ls));
            entries[col].push((2 * iface + 1, y[1] * sign, ls));
        };
        let e = core_traj.end();
        put(&mut entries, 0, 0, 1.0, &e.y, e.log_scale);
        for (i, (out, inw)) in bases.iter().enumerate() {
            let (ca, cb) = (1 + 2 * i, 2 + 2 * i);
            let (s, e) = (out.start(), out.end());
            put(&mut entries, ca, i, -1.0, &s.y, s.log_scale);
            put(&mut entries, ca, i + 1, 1.0, &e.y, e.log_scale);
            let (s, e) = (inw.start(), inw.end());
            put(&mut entries, cb, i + 1, 1.0, &s.y, s.log_scale);
            put(&mut entries, cb, i, -1.0, &e.y, e.log_scale);
        }
        let outer = self.outer_radius();
        let out_wave = free_state(WaveKind::Outgoing, n, pol, k, outer)?;
        let inc_wave = free_state(WaveKind::Regular, n, pol, k, outer)?;
        put(&mut entries, size - 1, m, -1.0, &out_wave, 0.0);

        let mut col_log = vec![0.0; size];
        let mut a = DMatrix::<Complex64>::zeros(size, size);
        for (j, col) in entries.iter().enumerate() {
            let lmax = col
                .iter()
                .filter(|(_, v, _)| v.norm() > 0.0)
                .map(|(_, v, l)| v.norm().ln() + l)
                .fold(f64::NEG_INFINITY, f64::max);
            let lmax = if lmax.is_finite() { lmax } else { 0.0 };
            col_log[j] = lmax;
            for &(row, v, l) in col {
                a[(row, j)] += v * (l - lmax).exp();
            }
        }
        let mut rhs = nalgebra::DVector::<Complex64>::zeros(size);
        rhs[2 * m] = inc_wave[0];
        rhs[2 * m + 1] = inc_wave[1];
        for i in 0..size {
            let s = a.row(i).iter().map(|v| v.norm()).fold(0.0, f64::max);
            if s > 0.0 {
                for j in 0..size {
                    a[(i, j)] /= s;
                }
                rhs[i] /= s;
            }
        }
        let sv = a.clone().singular_values();
        let smax = sv.max();
        let smin = sv.min();
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !(condition <= self.options.max_condition) {
            return Err(SolverError::IllConditioned { n, pol, condition });
        }
        let x = a
            .full_piv_lu()
            .solve(&rhs)
            .ok_or(SolverError::IllConditioned { n, pol, condition: f64::INFINITY })?;

        let mut layers = Vec::with_capacity(m + 1);
        layers.push(SolvedLayer {
            r_min: 0.0,
            r_max: r1,
            system: systems[0].clone(),
            parts: vec![Part {
                trajectory: core_traj,
                mantissa: x[0],
                log: -col_log[0],
            }],
        });
        for (i, ((out, inw), (l, sys))) in bases
            .into_iter()
            .zip(self.layers.iter().zip(&systems).skip(1))
            .enumerate()
        {
            layers.push(SolvedLayer {
                r_min: l.r_min,
                r_max: l.r_max,
                system: sys.clone(),
                parts: vec![
                    Part { trajectory: out, mantissa: x[1 + 2 * i], log: -col_log[1 + 2 * i] },
                    Part { trajectory: inw, mantissa: x[2 + 2 * i], log: -col_log[2 + 2 * i] },
                ],
            });
        }
        let outgoing = x[size - 1] * (-col_log[size - 1]).exp();
        let core_coef = layers[0].parts[0].mantissa * layers[0].parts[0].log.exp();
        Ok(RadialSolution {
            n,
            pol,
            k,
            outgoing,
            condition,
            outer,
            layers,
            core: Some((series, core_coef)),
        })
    }
}

fn has_lossless_negative(layers: &[RadialLayer]) -> bool {
    layers.iter().any(|l| {
        (0..=4).any(|i| {
            let r = l.r_min + (l.r_max - l.r_min) * (0.05 + 0.225 * i as f64);
            let (e, m) = (l.eps.eval(r), l.mu.eval(r));
            (e.re < 0.0 || m.re < 0.0) && e.im <= 0.0 && m.im <= 0.0
        })
    })
}

/// Radial profile of one `(n, polarization)` for a unit incident regular wave.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub n: usize,
    pub pol: Polarization,
    pub k: f64,
    /// Outgoing amplitude `s`.
    pub outgoing: Complex64,
    /// Condition number of the equilibrated matching system.
    pub condition: f64,
    outer: f64,
    layers: Vec<SolvedLayer>,
    /// Series used below the integration start, and its coefficient.
    core: Option<(CoreSeries, Complex64)>,
}

impl RadialSolution {
    /// `(U, V)` at radius `r`.
    pub fn state(&self, r: f64) -> Result<State, SolverError> {
        if r >= self.outer {
            let a = free_state(WaveKind::Regular, self.n, self.pol, self.k, r)?;
            if self.outgoing == c(0.0, 0.0) {
                return Ok(a);
            }
            let b = free_state(WaveKind::Outgoing, self.n, self.pol, self.k, r)?;
            return Ok([a[0] + self.outgoing * b[0], a[1] + self.outgoing * b[1]]);
        }
        if let Some((series, coef)) = &self.core {
            if r < series.r0 {
                let s = series.state(r);
                return Ok([s[0] * coef, s[1] * coef]);
            }
        }
        let layer = self
            .layers
            .iter()
            .find(|l| r < l.r_max)
            .unwrap_or_else(|| self.layers.last().expect("nonempty"));
        Ok(layer.state(r))
    }

    /// `(ε, μ)` at `r`; the layer on the outer side at an interface.
    pub fn material(&self, r: f64) -> (Complex64, Complex64) {
        match self.layers.iter().find(|l| r < l.r_max) {
            Some(l) if r < self.outer => (l.system.eps.eval(r), l.system.mu.eval(r)),
            _ => (c(1.0, 0.0), c(1.0, 0.0)),
        }
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer
    }

    /// Interface radii, innermost first.
    pub fn interfaces(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.r_max).collect()
    }

    /// Radii of the accepted integration steps of every basis function, sorted.
    pub fn integration_nodes(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .layers
            .iter()
            .flat_map(|l| l.parts.iter().flat_map(|p| p.trajectory.nodes.iter().map(|n| n.r)))
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    #[doc(hidden)]
    pub fn layer_bounds(&self) -> Vec<(f64, f64)> {
        self.layers.iter().map(|l| (l.r_min, l.r_max)).collect()
    }
}

/// Solve every `(n, polarization)` with `1 <= n <= nmax` in parallel.
/// Results are ordered by `n`, then polarization.
pub fn solve(
    layout: &MaterialLayout,
    k: f64,
    nmax: usize,
    options: SolverOptions,
) -> Result<Vec<Arc<RadialSolution>>, SolverError> {
    use rayon::prelude::*;
    let stack = RadialStack::from_layout(layout, options)?;
    let jobs: Vec<(usize, Polarization)> = (1..=nmax)
        .flat_map(|n| [(n, Polarization::TE), (n, Polarization::TM)])
        .collect();
    jobs.par_iter()
        .map(|&(n, pol)| stack.solve(k, n, pol).map(Arc::new))
        .collect()
}

/// Unit vacuum wave, regular or outgoing, as a radial field.
#[derive(Debug, Clone, Copy)]
pub struct FreeWave {
    pub kind: WaveKind,
    pub n: usize,
    pub pol: Polarization,
    pub k: f64,
}

impl FreeWave {
    pub fn state(&self, r: f64) -> Result<State, SolverError> {
        free_state(self.kind, self.n, self.pol, self.k, r)
    }
}
