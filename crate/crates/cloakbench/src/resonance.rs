//! Region-by-region field norms across a loss sweep.

use cloak::media::MaterialLayout;
use cloak::solver::{pair_l2_norm, shell_norms, FieldExpansion, SolverError};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::sweep::solve_field;
use crate::BenchError;

pub const REGION_NAMES: [&str; 5] = ["core", "complementary", "object", "buffer", "exterior"];

/// What to solve at each `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResonanceTarget {
    Cloak,
    /// Vacuum everywhere; the region norms cannot depend on `δ`.
    Vacuum,
}

/// `L²` pair norms over `B_{r₁}`, `[r₁, r₂]`, `[r₂, 2r₂]`, `[2r₂, r₃]`, `[r₃, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionNorms {
    pub delta: f64,
    pub core: f64,
    pub complementary: f64,
    pub object: f64,
    pub buffer: f64,
    pub exterior: f64,
}

impl RegionNorms {
    pub fn values(&self) -> [f64; 5] {
        [self.core, self.complementary, self.object, self.buffer, self.exterior]
    }
}

/// How one region's norm evolves as `δ` decreases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionGrowth {
    pub region: &'static str,
    /// Norm at the smallest `δ` over the norm at the largest.
    pub factor: f64,
    /// Nondecreasing as `δ` decreases.
    pub monotone: bool,
    /// `factor > 2`.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonanceReport {
    pub rows: Vec<RegionNorms>,
    pub growth: Vec<RegionGrowth>,
    /// Every exterior norm within a factor 2 of the first one.
    pub exterior_bounded: bool,
}

fn region_norms_of(cfg: &ExperimentConfig, field: &FieldExpansion, delta: f64) -> Result<RegionNorms, SolverError> {
    let (r2, r3) = (cfg.r2, cfg.r3());
    let r1 = r2 * r2 / r3;
    let b = cfg.shell()[1];
    let edges = [0.0, r1, r2, 2.0 * r2, r3, b];
    let mut v = [0.0; 5];
    for i in 0..5 {
        v[i] = pair_l2_norm(&shell_norms(field, edges[i], edges[i + 1])?);
    }
    Ok(RegionNorms { delta, core: v[0], complementary: v[1], object: v[2], buffer: v[3], exterior: v[4] })
}

/// Region norms of one solve at loss `delta`.
pub fn resonance_profile(cfg: &ExperimentConfig, target: ResonanceTarget, delta: f64) -> Result<RegionNorms, BenchError> {
    let nmax = cfg.resolved_nmax()?;
    let layout = match target {
        ResonanceTarget::Cloak => cfg.cloak_layout(delta)?,
        ResonanceTarget::Vacuum => MaterialLayout::vacuum(),
    };
    let wrap = |source| BenchError::Solver { delta, source };
    let field = solve_field(cfg, &layout, nmax).map_err(wrap)?;
    region_norms_of(cfg, &field, delta).map_err(wrap)
}

/// Region norms at every configured `δ`, with growth flags.
pub fn resonance_sweep(cfg: &ExperimentConfig, target: ResonanceTarget) -> Result<ResonanceReport, BenchError> {
    cfg.validate()?;
    let rows: Vec<RegionNorms> = cfg
        .deltas
        .par_iter()
        .map(|&d| resonance_profile(cfg, target, d))
        .collect::<Result<_, _>>()?;
    let growth = (0..5)
        .map(|i| {
            let series: Vec<f64> = rows.iter().map(|r| r.values()[i]).collect();
            let factor = series[series.len() - 1] / series[0];
            RegionGrowth {
                region: REGION_NAMES[i],
                factor,
                monotone: series.windows(2).all(|w| w[1] >= w[0]),
                flagged: factor > 2.0,
            }
        })
        .collect();
    let e0 = rows[0].exterior;
    let exterior_bounded = rows.iter().all(|r| r.exterior <= 2.0 * e0 && r.exterior >= 0.5 * e0);
    Ok(ResonanceReport { rows, growth, exterior_bounded })
}
