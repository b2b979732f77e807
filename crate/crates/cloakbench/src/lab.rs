//! Three-sphere experiments on Helmholtz solutions and on solved Maxwell fields.

use cloak::media::{MaterialLayout, PowerTerm, RadialCoefficient};
use cloak::shellnorm::{
    default_q_grid, interpolation_exponent, monte_carlo_three_sphere, rate_bookkeeping, single_mode_limit,
    system_three_sphere_probe, system_trace_norm, three_sphere_check, Dimension, HelmholtzCoefficients,
    ProbeReport, RateReport, ShellTrace, SphereNorms, ThreeSphereReport,
};
use cloak::solver::{solve, FieldExpansion, ModeIndex, SolverOptions};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::BenchError;

/// Radii for single-mode checks: small enough that `(kR₃)²/n` is small at `n = 40`.
pub const SINGLE_MODE_RADII: [f64; 3] = [0.5, 1.0, 2.0];
pub const MONTE_CARLO_RADII: [f64; 3] = [0.5, 2.0, 10.0];
pub const MONTE_CARLO_DRAWS: usize = 200;
pub const MAX_DEGREE: usize = 40;

/// Monte-Carlo summary for one dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub dimension: u8,
    pub max_ratio: f64,
    pub max_first_half: f64,
    pub max_second_half: f64,
}

impl MonteCarloSummary {
    fn new(dimension: Dimension, reports: &[ThreeSphereReport]) -> Self {
        let half = reports.len() / 2;
        let max = |s: &[ThreeSphereReport]| s.iter().map(|r| r.ratio).fold(0.0, f64::max);
        Self {
            dimension: dimension.as_u8(),
            max_ratio: max(reports),
            max_first_half: max(&reports[..half]),
            max_second_half: max(&reports[half..]),
        }
    }

    /// Bounded by 50 with no growth from the first half to the second.
    pub fn bounded(&self) -> bool {
        self.max_ratio <= 50.0 && self.max_second_half <= 1.5 * self.max_first_half
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThreeSphereRun {
    pub single_mode_3d: Vec<ThreeSphereReport>,
    pub single_mode_2d: Vec<ThreeSphereReport>,
    pub single_mode_limit: f64,
    pub monte_carlo_3d: Vec<ThreeSphereReport>,
    pub monte_carlo_2d: Vec<ThreeSphereReport>,
    pub summary_3d: MonteCarloSummary,
    pub summary_2d: MonteCarloSummary,
    /// Largest `|R₁^α R₃^{1-α} - R₂| / R₂` over random radii.
    pub alpha_identity_error: f64,
    pub rate: RateReport,
    pub probe: ProbeReport,
    #[serde(skip)]
    pub trace: ShellTrace,
}

fn wrap(e: impl std::fmt::Display) -> BenchError {
    BenchError::Numerical(e.to_string())
}

/// Largest relative error of `R₂ = R₁^α R₃^{1-α}` over `samples` random radii.
pub fn alpha_identity_error(samples: usize, seed: u64) -> Result<f64, BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let r1 = rng.gen_range(0.01..10.0);
        let r2 = r1 * rng.gen_range(1.001..10.0);
        let r3 = r2 * rng.gen_range(1.001..10.0);
        let a = interpolation_exponent([r1, r2, r3]).map_err(wrap)?;
        worst = worst.max((r1.powf(a) * r3.powf(1.0 - a) - r2).abs() / r2);
    }
    Ok(worst)
}

fn single_modes(dim: Dimension) -> Result<Vec<ThreeSphereReport>, BenchError> {
    (1..=MAX_DEGREE)
        .map(|n| {
            let v = HelmholtzCoefficients::single_regular(dim, 1.0, n).map_err(wrap)?;
            three_sphere_check(&v, SINGLE_MODE_RADII).map_err(wrap)
        })
        .collect()
}

/// Graded medium `ε = 2 + s r`, `μ = 1.5 + s r²/4` on `B_3`.
pub fn graded_layout(slope: f64) -> MaterialLayout {
    let c = |v: f64| Complex64::new(v, 0.0);
    let eps = RadialCoefficient { terms: vec![PowerTerm { coef: c(2.0), power: 0.0 }, PowerTerm { coef: c(slope), power: 1.0 }] };
    let mu = RadialCoefficient { terms: vec![PowerTerm { coef: c(1.5), power: 0.0 }, PowerTerm { coef: c(0.25 * slope), power: 2.0 }] };
    MaterialLayout::layered(&[(3.0, eps, mu)]).expect("valid layers")
}

/// System norms on the single-mode radii for every unit mode with `n <= 4`
/// of the graded medium.
pub fn graded_probe_samples(slope: f64) -> Result<Vec<SphereNorms>, BenchError> {
    let k = 1.0;
    let sols = solve(&graded_layout(slope), k, 4, SolverOptions::default()).map_err(wrap)?;
    ModeIndex::all(4)
        .into_iter()
        .map(|m| {
            let f = FieldExpansion::from_solutions(k, &[(m, Complex64::new(1.0, 0.0))], &sols).map_err(wrap)?;
            let mut out = [0.0; 3];
            for (slot, r) in out.iter_mut().zip(SINGLE_MODE_RADII) {
                *slot = system_trace_norm(&f, r).map_err(wrap)?;
            }
            Ok(out)
        })
        .collect()
}

pub fn run_three_sphere(seed: u64) -> Result<ThreeSphereRun, BenchError> {
    let mc = |dim| monte_carlo_three_sphere(dim, 1.0, MONTE_CARLO_RADII, MONTE_CARLO_DRAWS, MAX_DEGREE, seed).map_err(wrap);
    let monte_carlo_3d = mc(Dimension::Three)?;
    let monte_carlo_2d = mc(Dimension::Two)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trace = HelmholtzCoefficients::random(Dimension::Three, 1.0, 6, &mut rng)
        .trace(MONTE_CARLO_RADII[1])
        .map_err(wrap)?;
    let probe = system_three_sphere_probe(&graded_probe_samples(1.0)?, SINGLE_MODE_RADII, &default_q_grid()).map_err(wrap)?;
    Ok(ThreeSphereRun {
        single_mode_3d: single_modes(Dimension::Three)?,
        single_mode_2d: single_modes(Dimension::Two)?,
        single_mode_limit: single_mode_limit(SINGLE_MODE_RADII).map_err(wrap)?,
        summary_3d: MonteCarloSummary::new(Dimension::Three, &monte_carlo_3d),
        summary_2d: MonteCarloSummary::new(Dimension::Two, &monte_carlo_2d),
        monte_carlo_3d,
        monte_carlo_2d,
        alpha_identity_error: alpha_identity_error(1000, seed)?,
        rate: rate_bookkeeping(1.0, 0.25, 5.0).map_err(wrap)?,
        probe,
        trace,
    })
}
