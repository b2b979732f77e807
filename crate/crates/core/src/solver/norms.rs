//! Mode-space norms over spherical shells and spheres.
//!
//! Volume norms use Gauss–Legendre panels in `r`, split at every breakpoint of
//! the radial profiles; the angular integrals are exact by orthonormality.

use std::num::NonZeroUsize;
use std::sync::{Arc, OnceLock};

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;

use super::field::{Bundle, FieldExpansion, RadialField, RemovedSingularity};
use super::SolverError;

const NODES: usize = 16;
const PANEL_RATIO: f64 = 1.15;
/// Below this fraction of a segment that starts at the origin the integrand
/// is integrated by a single panel.
const ORIGIN_FRACTION: f64 = 1e-3;

fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        GaussLegendre::new(NonZeroUsize::new(NODES).expect("nonzero"))
            .as_node_weight_pairs()
            .to_vec()
    })
}

/// Quadrature panels covering `[a, b]`: split at `breaks`, geometric with
/// ratio 1.15 away from the origin, no wider than `0.5/k`.
pub fn panels(a: f64, b: f64, breaks: &[f64], k: f64) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = breaks.iter().cloned().filter(|&r| r > a && r < b).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * y.abs().max(1e-300));
    let max_width = 0.5 / k;
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mut seg = Vec::new();
        let mut top = hi;
        let floor = if lo > 0.0 { lo } else { hi * ORIGIN_FRACTION };
        while top > floor * (1.0 + 1e-12) {
            let bottom = (top / PANEL_RATIO).max(top - max_width).max(floor);
            seg.push((bottom, top));
            top = bottom;
        }
        if lo == 0.0 {
            seg.push((0.0, floor));
        }
        seg.reverse();
        out.extend(seg);
    }
    out
}

/// `L²` norms of `E`, `H`, `∇×E`, `∇×H` over a shell.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShellNorms {
    pub e: f64,
    pub h: f64,
    pub curl_e: f64,
    pub curl_h: f64,
}

fn sq(v: &[Complex64; 3]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

fn group_squares(radial: &Arc<dyn RadialField>, a: f64, b: f64, k: f64) -> Result<[f64; 4], SolverError> {
    let mut acc = [0.0; 4];
    for (lo, hi) in panels(a, b, &radial.breakpoints(), k) {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for &(x, w) in rule() {
            let r = mid + half * x;
            let bd: Bundle = radial.bundle(r)?;
            let f = w * half * r * r;
            acc[0] += f * sq(&bd.e);
            acc[1] += f * sq(&bd.h);
            acc[2] += f * sq(&bd.curl_e);
            acc[3] += f * sq(&bd.curl_h);
        }
    }
    Ok(acc)
}

/// Norms of a field over the shell `a <= |x| <= b`.
pub fn shell_norms(field: &FieldExpansion, a: f64, b: f64) -> Result<ShellNorms, SolverError> {
    if !(a < b) || a < 0.0 {
        return Err(SolverError::EmptyShell { a, b });
    }
    let groups = field.radial_groups();
    let parts: Vec<[f64; 4]> = groups
        .par_iter()
        .map(|(radial, w)| group_squares(radial, a, b, field.k).map(|s| s.map(|v| v * w)))
        .collect::<Result<_, _>>()?;
    let mut tot = [0.0; 4];
    for p in &parts {
        for i in 0..4 {
            tot[i] += p[i];
        }
    }
    Ok(ShellNorms {
        e: tot[0].sqrt(),
        h: tot[1].sqrt(),
        curl_e: tot[2].sqrt(),
        curl_h: tot[3].sqrt(),
    })
}

/// `(‖E‖² + ‖H‖²)^{1/2}`.
pub fn pair_l2_norm(n: &ShellNorms) -> f64 {
    n.e.hypot(n.h)
}

/// `‖E‖_{H(curl)} + ‖H‖_{H(curl)}` with `‖u‖_{H(curl)} = ‖u‖ + ‖∇×u‖`.
pub fn pair_hcurl_norm(n: &ShellNorms) -> f64 {
    n.e + n.curl_e + n.h + n.curl_h
}

/// `H(curl)` norm of the difference of two fields over the shell `[a, b]`.
pub fn hcurl_shell_misfit(
    first: &FieldExpansion,
    second: &FieldExpansion,
    a: f64,
    b: f64,
) -> Result<f64, SolverError> {
    let diff = FieldExpansion::combine(&[(Complex64::new(1.0, 0.0), first), (Complex64::new(-1.0, 0.0), second)])?;
    Ok(pair_hcurl_norm(&shell_norms(&diff, a, b)?))
}

/// `((1/δ) ‖(E, H)‖_{L²(r₃ < |x| < R₀)} ‖j‖ + ‖j‖²)^{1/2}`.
pub fn data_functional(
    field: &FieldExpansion,
    source_norm: f64,
    delta: f64,
    r3: f64,
    r0: f64,
) -> Result<f64, SolverError> {
    if !(delta > 0.0) {
        return Err(SolverError::Delta(delta));
    }
    let l2 = pair_l2_norm(&shell_norms(field, r3, r0)?);
    Ok((l2 * source_norm / delta + source_norm * source_norm).sqrt())
}

/// `‖(E, H)‖²_{H(curl, B_b)} / ((1/δ) ‖j‖ ‖(E, H)‖_{L²(a < |x| < b)} + ‖j‖²)`.
pub fn stability_ratio(
    field: &FieldExpansion,
    source_norm: f64,
    delta: f64,
    a: f64,
    b: f64,
) -> Result<f64, SolverError> {
    if !(delta > 0.0) {
        return Err(SolverError::Delta(delta));
    }
    let ball = pair_hcurl_norm(&shell_norms(field, 0.0, b)?);
    let shell = pair_l2_norm(&shell_norms(field, a, b)?);
    Ok(ball * ball / (shell * source_norm / delta + source_norm * source_norm))
}

/// Squared mode-weighted `H^{-1/2}(div)` norm of the tangential trace `E × r̂`
/// of one mode on the sphere of radius `radius`. With `E × r̂ = αΨ̂ + βΦ̂` and
/// `w = (1 + L²)^{1/2}` the weight is `w⁻¹(|α|² + |β|²) + w⁻³ L² |α|²`.
pub fn jump_norm(n: usize, tangential: [Complex64; 2], radius: f64) -> f64 {
    let l2 = (n * (n + 1)) as f64;
    let w = (1.0 + l2).sqrt();
    // E × r̂ = e_φ Ψ̂ - e_ψ Φ̂
    let alpha = tangential[1].norm_sqr();
    let beta = tangential[0].norm_sqr();
    radius * radius * ((alpha + beta) / w + l2 * alpha / (w * w * w))
}

/// Jumps of the removed-singularity field across `∂B_{r₃}` and `∂B_{2r₂}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpReport {
    /// Pair trace norm of the jump across `∂B_{r₃}`.
    pub outer: f64,
    /// Pair trace norm of the solution on `∂B_{r₃}`, for relative comparisons.
    pub outer_reference: f64,
    /// Pair trace norm of the jump across `∂B_{2r₂}`.
    pub inner: f64,
}

impl FieldExpansion {
    /// Trace jumps of the removed-singularity field built from this solution.
    pub fn removed_singularity_jumps(&self, r2: f64, r3: f64) -> Result<JumpReport, SolverError> {
        let groups = self.radial_groups();
        let parts: Vec<[f64; 3]> = groups
            .par_iter()
            .map(|(radial, w)| {
                let n = radial.degree();
                let rs = RemovedSingularity::new(radial.clone(), r2, r3);
                let (o, m, _) = rs.pieces(r3)?;
                let jo = o.sub(&m);
                let (_, m2, i2) = rs.pieces(2.0 * r2)?;
                let ji = m2.sub(&i2);
                let pair = |b: &Bundle, r: f64| jump_norm(n, b.e_tangential(), r) + jump_norm(n, b.h_tangential(), r);
                Ok([w * pair(&jo, r3), w * pair(&o, r3), w * pair(&ji, 2.0 * r2)])
            })
            .collect::<Result<_, SolverError>>()?;
        let mut t = [0.0; 3];
        for p in &parts {
            for i in 0..3 {
                t[i] += p[i];
            }
        }
        Ok(JumpReport { outer: t[0].sqrt(), outer_reference: t[1].sqrt(), inner: t[2].sqrt() })
    }
}

/// `‖E × r̂ + H‖_{L²(∂B_R)}`; decays like `1/R` for outgoing fields.
pub fn outgoing_residual(field: &FieldExpansion, radius: f64) -> Result<f64, SolverError> {
    let mut tot = 0.0;
    for (radial, w) in field.radial_groups() {
        let b = radial.bundle(radius)?;
        let comps = [b.h[0], b.e[2] + b.h[1], -b.e[1] + b.h[2]];
        tot += w * comps.iter().map(|x| x.norm_sqr()).sum::<f64>();
    }
    Ok(radius * (tot).sqrt())
}
