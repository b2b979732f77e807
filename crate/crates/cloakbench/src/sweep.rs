//! Loss sweeps, log-log fits and control runs.

use cloak::media::{Material, MaterialLayout, RegionRole};
use cloak::solver::{
    data_functional, hcurl_shell_misfit, pair_l2_norm, shell_norms, solve, FieldExpansion, SolverError,
    SolverOptions,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::BenchError;

/// Diagnostics of one cloaked solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRecord {
    pub delta: f64,
    /// `H(curl)` misfit against the free-space field over the shell.
    pub misfit: f64,
    /// `L²` pair norm over `2r₂ < |x| < r₃`.
    pub interior_norm: f64,
    /// Trace jump of the removed-singularity field across `|x| = 2r₂`.
    pub jump_2r2: f64,
    pub data_functional: f64,
    pub stability_ratio: f64,
    /// Trace jump across `|x| = r₃` (zero up to rounding).
    pub jump_r3: f64,
    /// Trace norm of the solution on `|x| = r₃`.
    pub trace_r3: f64,
}

/// Least-squares line `y = slope x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Ok,
    /// Fewer than three points.
    TooFewPoints,
    /// A value was zero or negative, so its logarithm is undefined.
    NonPositive,
}

/// Fit `log y` against `log x`.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> Result<LineFit, FitStatus> {
    assert_eq!(x.len(), y.len());
    if x.len() < 3 {
        return Err(FitStatus::TooFewPoints);
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(FitStatus::NonPositive);
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LineFit { slope, intercept, r_squared })
}

/// Contents of `fit.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub status: FitStatus,
    pub points: usize,
    /// Slope of `log misfit` against `log δ`.
    pub gamma_hat: Option<f64>,
    pub intercept: Option<f64>,
    pub r_squared: Option<f64>,
    /// Slope of `log(jump_2r2 / data_functional)` against `log δ`.
    pub jump_slope: Option<f64>,
    pub ratio: f64,
    pub nmax: usize,
}

impl FitReport {
    pub fn from_records(records: &[SweepRecord], ratio: f64, nmax: usize) -> Self {
        let x: Vec<f64> = records.iter().map(|r| r.delta).collect();
        let misfit: Vec<f64> = records.iter().map(|r| r.misfit).collect();
        let jump: Vec<f64> = records.iter().map(|r| r.jump_2r2 / r.data_functional).collect();
        let base = Self {
            status: FitStatus::Ok,
            points: records.len(),
            gamma_hat: None,
            intercept: None,
            r_squared: None,
            jump_slope: None,
            ratio,
            nmax,
        };
        match log_log_fit(&x, &misfit) {
            Ok(fit) => Self {
                gamma_hat: Some(fit.slope),
                intercept: Some(fit.intercept),
                r_squared: Some(fit.r_squared),
                jump_slope: log_log_fit(&x, &jump).ok().map(|f| f.slope),
                ..base
            },
            Err(status) => Self { status, ..base },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
    pub fit: FitReport,
}

/// Total field of `layout` for the configured source.
pub fn solve_field(cfg: &ExperimentConfig, layout: &MaterialLayout, nmax: usize) -> Result<FieldExpansion, SolverError> {
    let incident = cfg.incident().expect("validated config");
    let coefs = incident.coefficients(nmax)?;
    let sols = solve(layout, cfg.k, nmax, SolverOptions::default())?;
    FieldExpansion::from_solutions(cfg.k, &coefs, &sols)
}

/// The free-space field of the configured source.
pub fn free_field(cfg: &ExperimentConfig, nmax: usize) -> Result<FieldExpansion, SolverError> {
    let coefs = cfg.incident().expect("validated config").coefficients(nmax)?;
    Ok(FieldExpansion::incident(cfg.k, &coefs))
}

fn at_delta<T>(delta: f64, r: Result<T, SolverError>) -> Result<T, BenchError> {
    r.map_err(|source| BenchError::Solver { delta, source })
}

/// Diagnostics of one cloaked solve at loss `delta`.
pub fn sweep_point(cfg: &ExperimentConfig, delta: f64, nmax: usize, free: &FieldExpansion) -> Result<SweepRecord, BenchError> {
    let (r2, r3) = (cfg.r2, cfg.r3());
    let [a, b] = cfg.shell();
    let layout = cfg.cloak_layout(delta)?;
    let field = at_delta(delta, solve_field(cfg, &layout, nmax))?;
    let source_norm = cfg.incident()?.strength();
    let misfit = at_delta(delta, hcurl_shell_misfit(&field, free, a, b))?;
    let interior_norm = pair_l2_norm(&at_delta(delta, shell_norms(&field, 2.0 * r2, r3))?);
    let jumps = at_delta(delta, field.removed_singularity_jumps(r2, r3))?;
    let data = at_delta(delta, data_functional(&field, source_norm, delta, r3, b))?;
    let stability = at_delta(delta, cloak::solver::stability_ratio(&field, source_norm, delta, a, b))?;
    let rec = SweepRecord {
        delta,
        misfit,
        interior_norm,
        jump_2r2: jumps.inner,
        data_functional: data,
        stability_ratio: stability,
        jump_r3: jumps.outer,
        trace_r3: jumps.outer_reference,
    };
    let finite = [rec.misfit, rec.interior_norm, rec.jump_2r2, rec.data_functional, rec.stability_ratio, rec.jump_r3];
    if finite.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(BenchError::Numerical(format!("non-finite diagnostics at delta = {delta}: {rec:?}")));
    }
    Ok(rec)
}

/// Solve the cloaked problem at every `δ`, in parallel, and fit the exponents.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult, BenchError> {
    cfg.validate()?;
    let nmax = cfg.resolved_nmax()?;
    let free = at_delta(f64::NAN, free_field(cfg, nmax))?;
    let records: Vec<SweepRecord> = cfg
        .deltas
        .par_iter()
        .map(|&d| sweep_point(cfg, d, nmax, &free))
        .collect::<Result<_, _>>()?;
    let fit = FitReport::from_records(&records, cfg.ratio, nmax);
    Ok(SweepResult { records, fit })
}

/// The cloak with its complementary layer replaced by vacuum.
pub fn anti_cloak_layout(cfg: &ExperimentConfig, delta: f64) -> Result<MaterialLayout, BenchError> {
    let mut layout = cfg.cloak_layout(delta)?;
    for g in layout.regions.iter_mut().filter(|g| g.role == RegionRole::Complementary) {
        g.material = Material::vacuum();
    }
    Ok(layout)
}

/// Exterior misfit of the anti-cloak control at every `δ`.
pub fn anti_cloak_misfits(cfg: &ExperimentConfig) -> Result<Vec<(f64, f64)>, BenchError> {
    cfg.validate()?;
    let nmax = cfg.resolved_nmax()?;
    let free = at_delta(f64::NAN, free_field(cfg, nmax))?;
    let [a, b] = cfg.shell();
    cfg.deltas
        .par_iter()
        .map(|&d| {
            let field = at_delta(d, solve_field(cfg, &anti_cloak_layout(cfg, d)?, nmax))?;
            Ok((d, at_delta(d, hcurl_shell_misfit(&field, &free, a, b))?))
        })
        .collect()
}

/// Exterior misfit of the object alone: no core, no complementary layer.
pub fn uncloaked_misfit(cfg: &ExperimentConfig) -> Result<f64, BenchError> {
    cfg.validate()?;
    let nmax = cfg.resolved_nmax()?;
    let free = at_delta(f64::NAN, free_field(cfg, nmax))?;
    let layout = MaterialLayout::object_only(&cfg.object_profile()?, cfg.r2)?;
    let field = at_delta(f64::NAN, solve_field(cfg, &layout, nmax))?;
    let [a, b] = cfg.shell();
    at_delta(f64::NAN, hcurl_shell_misfit(&field, &free, a, b))
}

/// Cloak against both controls at one `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlRow {
    pub delta: f64,
    pub misfit: f64,
    pub anti_cloak_misfit: f64,
    pub uncloaked_misfit: f64,
}

/// Comparative report of the cloak against the anti-cloak and the bare object.
pub fn control_report(cfg: &ExperimentConfig, records: &[SweepRecord]) -> Result<Vec<ControlRow>, BenchError> {
    let anti = anti_cloak_misfits(cfg)?;
    let bare = uncloaked_misfit(cfg)?;
    Ok(records
        .iter()
        .zip(anti)
        .map(|(r, (_, a))| ControlRow { delta: r.delta, misfit: r.misfit, anti_cloak_misfit: a, uncloaked_misfit: bare })
        .collect())
}

/// One row of a ratio scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioScanRow {
    pub ratio: f64,
    pub r2: f64,
    pub nmax: usize,
    pub status: FitStatus,
    pub gamma_hat: Option<f64>,
    pub r_squared: Option<f64>,
    pub jump_slope: Option<f64>,
}

/// `γ̂(ℓ)` for each ratio, holding `r₃` fixed.
pub fn ratio_scan(cfg: &ExperimentConfig, ratios: &[f64]) -> Result<Vec<RatioScanRow>, BenchError> {
    ratios
        .iter()
        .map(|&ratio| {
            let c = cfg.with_ratio_fixed_r3(ratio);
            let res = run_sweep(&c)?;
            Ok(RatioScanRow {
                ratio,
                r2: c.r2,
                nmax: res.fit.nmax,
                status: res.fit.status,
                gamma_hat: res.fit.gamma_hat,
                r_squared: res.fit.r_squared,
                jump_slope: res.fit.jump_slope,
            })
        })
        .collect()
}

/// Scale a configuration's source by a real factor.
pub fn scaled_source(cfg: &ExperimentConfig, factor: f64) -> ExperimentConfig {
    let mut c = cfg.clone();
    for p in c.source.polarization.iter_mut() {
        *p = crate::config::Scalar::Complex({
            let v = p.value() * Complex64::new(factor, 0.0);
            [v.re, v.im]
        });
    }
    c
}
