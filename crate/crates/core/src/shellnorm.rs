//! Mode-space norms on spheres and three-sphere inequality checks.
//!
//! A trace on the sphere `|x| = r` is a list of value coefficients `c` and
//! radial-derivative coefficients `d` per spherical (3D) or circular (2D)
//! harmonic. The `𝐇(∂B_r)` norm is defined by the mode weights
//!
//! ```text
//! ‖v‖²  =  Σ n |c_nm|² + n⁻¹ |d_nm|²        (+ |a₀|² + |b₀|² in 2D)
//! ```
//!
//! with no further radius factors.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::solver::{Bundle, FieldExpansion, SolverError};
use crate::specfun::{CylindricalArrays, SpecfunError, SphericalArrays};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ShellnormError {
    #[error("radii must satisfy 0 < R1 < R2 < R3, got {0:?}")]
    Radii([f64; 3]),
    #[error("mode (n = {n}, m = {m}) is not valid in dimension {dim}")]
    Mode { n: usize, m: i32, dim: u8 },
    #[error("expected a {expected}D trace or solution")]
    Dimension { expected: u8 },
    #[error("need at least 3 field samples, got {0}")]
    TooFewSamples(usize),
    #[error("empty q grid")]
    EmptyGrid,
    #[error("rate bookkeeping needs q >= 1 and r3 > 4 r2: {0}")]
    Rate(String),
    #[error("wavenumber must be positive and finite, got {0}")]
    Wavenumber(f64),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dimension {
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "3")]
    Three,
}

impl Dimension {
    pub fn as_u8(self) -> u8 {
        match self {
            Dimension::Two => 2,
            Dimension::Three => 3,
        }
    }

    /// 3D: `|m| <= n`. 2D: `m = ±n` stands for `e^{±inθ}`.
    fn check_mode(self, n: usize, m: i32) -> Result<(), ShellnormError> {
        let ok = n >= 1
            && match self {
                Dimension::Three => m.unsigned_abs() as usize <= n,
                Dimension::Two => m.unsigned_abs() as usize == n,
            };
        if ok {
            Ok(())
        } else {
            Err(ShellnormError::Mode { n, m, dim: self.as_u8() })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceMode {
    pub n: usize,
    pub m: i32,
    /// Value coefficient `c`.
    pub value: Complex64,
    /// Radial-derivative coefficient `d`.
    pub derivative: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShellTrace {
    pub radius: f64,
    pub dimension: Dimension,
    pub modes: Vec<TraceMode>,
    /// 2D zero-mode pair `(a₀, b₀)`.
    pub zero_mode: Option<(Complex64, Complex64)>,
}

impl ShellTrace {
    pub fn new(
        radius: f64,
        dimension: Dimension,
        modes: Vec<TraceMode>,
        zero_mode: Option<(Complex64, Complex64)>,
    ) -> Result<Self, ShellnormError> {
        for t in &modes {
            dimension.check_mode(t.n, t.m)?;
        }
        if zero_mode.is_some() && dimension == Dimension::Three {
            return Err(ShellnormError::Dimension { expected: 2 });
        }
        Ok(Self { radius, dimension, modes, zero_mode })
    }

    /// `(n, m, |c|, |d|)` rows; the 2D zero mode is reported as `n = m = 0`
    /// with `(|a₀|, |b₀|)`.
    pub fn rows(&self) -> Vec<(usize, i32, f64, f64)> {
        let mut out = Vec::with_capacity(self.modes.len() + 1);
        if let Some((a, b)) = self.zero_mode {
            out.push((0, 0, a.norm(), b.norm()));
        }
        out.extend(self.modes.iter().map(|t| (t.n, t.m, t.value.norm(), t.derivative.norm())));
        out
    }
}

/// `(Σ n|c|² + n⁻¹|d|² + |a₀|² + |b₀|²)^{1/2}`.
pub fn bold_h_norm(trace: &ShellTrace) -> f64 {
    let mut s: f64 = trace
        .modes
        .iter()
        .map(|t| {
            let n = t.n as f64;
            n * t.value.norm_sqr() + t.derivative.norm_sqr() / n
        })
        .sum();
    if let Some((a, b)) = trace.zero_mode {
        s += a.norm_sqr() + b.norm_sqr();
    }
    s.sqrt()
}

/// Coefficients `(a, b)` of one mode of `a f̂_n(k|x|) + b ĝ_n(k|x|)`, where
/// `(f̂, ĝ)` is `(ĵ, ŷ)` in 3D and `(Ĵ, Ŷ)` in 2D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCoefficients {
    pub n: usize,
    pub m: i32,
    pub a: Complex64,
    pub b: Complex64,
}

/// A Helmholtz solution in an annulus, by its mode coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct HelmholtzCoefficients {
    pub dimension: Dimension,
    pub k: f64,
    pub modes: Vec<ModeCoefficients>,
    /// 2D only: `a₀ J₀(k|x|) + b₀ Y₀(k|x|)`.
    pub zero_mode: Option<(Complex64, Complex64)>,
}

impl HelmholtzCoefficients {
    pub fn new(
        dimension: Dimension,
        k: f64,
        modes: Vec<ModeCoefficients>,
        zero_mode: Option<(Complex64, Complex64)>,
    ) -> Result<Self, ShellnormError> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(ShellnormError::Wavenumber(k));
        }
        for t in &modes {
            dimension.check_mode(t.n, t.m)?;
        }
        if zero_mode.is_some() && dimension == Dimension::Three {
            return Err(ShellnormError::Dimension { expected: 2 });
        }
        Ok(Self { dimension, k, modes, zero_mode })
    }

    /// The zero solution.
    pub fn zero(dimension: Dimension, k: f64) -> Self {
        Self { dimension, k, modes: Vec::new(), zero_mode: None }
    }

    /// One regular mode `f̂_n(k|x|) Y` with unit coefficient.
    pub fn single_regular(dimension: Dimension, k: f64, n: usize) -> Result<Self, ShellnormError> {
        let m = if dimension == Dimension::Two { n as i32 } else { 0 };
        Self::new(
            dimension,
            k,
            vec![ModeCoefficients { n, m, a: Complex64::new(1.0, 0.0), b: Complex64::new(0.0, 0.0) }],
            None,
        )
    }

    /// Random coefficients: degree cutoff uniform in `1..=nmax`, complex
    /// standard-normal `a`, `b` for every mode up to the cutoff.
    pub fn random(dimension: Dimension, k: f64, nmax: usize, rng: &mut ChaCha8Rng) -> Self {
        let top = rng.gen_range(1..=nmax.max(1));
        let mut draw = || Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let mut modes = Vec::new();
        for n in 1..=top {
            let orders: Vec<i32> = match dimension {
                Dimension::Three => (-(n as i32)..=n as i32).collect(),
                Dimension::Two => vec![-(n as i32), n as i32],
            };
            for m in orders {
                modes.push(ModeCoefficients { n, m, a: draw(), b: draw() });
            }
        }
        let zero_mode = match dimension {
            Dimension::Two => Some((draw(), draw())),
            Dimension::Three => None,
        };
        Self { dimension, k, modes, zero_mode }
    }

    fn nmax(&self) -> usize {
        self.modes.iter().map(|t| t.n).max().unwrap_or(0)
    }

    /// Value and `∂_r` traces on `|x| = r`.
    pub fn trace(&self, r: f64) -> Result<ShellTrace, ShellnormError> {
        let z = Complex64::new(self.k * r, 0.0);
        let nmax = self.nmax();
        let (f, fp, g, gp) = match self.dimension {
            Dimension::Three => {
                let a = SphericalArrays::new(nmax, z)?;
                (a.j_hat, a.j_hat_prime, a.y_hat, a.y_hat_prime)
            }
            Dimension::Two => {
                let a = CylindricalArrays::new(nmax, z)?;
                (a.j_hat, a.j_hat_prime, a.y_hat, a.y_hat_prime)
            }
        };
        let modes = self
            .modes
            .iter()
            .map(|t| TraceMode {
                n: t.n,
                m: t.m,
                value: t.a * f[t.n] + t.b * g[t.n],
                derivative: (t.a * fp[t.n] + t.b * gp[t.n]) * self.k,
            })
            .collect();
        Ok(ShellTrace { radius: r, dimension: self.dimension, modes, zero_mode: self.zero_mode })
    }

    /// Coefficient-side norm of the trace at `r` (with `ρ = kr`):
    /// 3D `Σ n ρ^{2n}|a|² + n ρ^{-2n}|b|²`;
    /// 2D `|a₀|² + |b₀|² + Σ n ρ^{2n}|a|² + n⁻¹ ρ^{-2n}|b|²` (asymmetric weights as printed).
    pub fn coefficient_norm(&self, r: f64) -> f64 {
        let rho = self.k * r;
        let mut s: f64 = self
            .modes
            .iter()
            .map(|t| {
                let n = t.n as f64;
                let p = rho.powf(2.0 * n);
                let wb = match self.dimension {
                    Dimension::Three => n,
                    Dimension::Two => 1.0 / n,
                };
                n * p * t.a.norm_sqr() + wb / p * t.b.norm_sqr()
            })
            .sum();
        if let Some((a, b)) = self.zero_mode {
            s += a.norm_sqr() + b.norm_sqr();
        }
        s.sqrt()
    }
}

/// `ln(R₃/R₂) / ln(R₃/R₁)`.
pub fn interpolation_exponent(radii: [f64; 3]) -> Result<f64, ShellnormError> {
    check_radii(radii)?;
    let [r1, r2, r3] = radii;
    Ok((r3 / r2).ln() / (r3 / r1).ln())
}

fn check_radii(radii: [f64; 3]) -> Result<(), ShellnormError> {
    let [r1, r2, r3] = radii;
    if r1 > 0.0 && r1 < r2 && r2 < r3 && r3.is_finite() {
        Ok(())
    } else {
        Err(ShellnormError::Radii(radii))
    }
}

/// Both sides of `‖v‖(R₂) ≤ C ‖v‖(R₁)^α ‖v‖(R₃)^{1-α}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThreeSphereReport {
    pub radii: [f64; 3],
    pub alpha: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; 1 when both sides vanish.
    pub ratio: f64,
}

fn report(radii: [f64; 3], alpha: f64, norms: [f64; 3]) -> ThreeSphereReport {
    let lhs = norms[1];
    let rhs = norms[0].powf(alpha) * norms[2].powf(1.0 - alpha);
    let ratio = if lhs == 0.0 && rhs == 0.0 { 1.0 } else { lhs / rhs };
    ThreeSphereReport { radii, alpha, lhs, rhs, ratio }
}

/// Three-sphere check for a Helmholtz solution given by coefficients.
pub fn three_sphere_check(v: &HelmholtzCoefficients, radii: [f64; 3]) -> Result<ThreeSphereReport, ShellnormError> {
    let alpha = interpolation_exponent(radii)?;
    let mut norms = [0.0; 3];
    for (slot, r) in norms.iter_mut().zip(radii) {
        *slot = bold_h_norm(&v.trace(r)?);
    }
    Ok(report(radii, alpha, norms))
}

pub fn three_sphere_check_3d(v: &HelmholtzCoefficients, radii: [f64; 3]) -> Result<ThreeSphereReport, ShellnormError> {
    if v.dimension != Dimension::Three {
        return Err(ShellnormError::Dimension { expected: 3 });
    }
    three_sphere_check(v, radii)
}

pub fn three_sphere_check_2d(v: &HelmholtzCoefficients, radii: [f64; 3]) -> Result<ThreeSphereReport, ShellnormError> {
    if v.dimension != Dimension::Two {
        return Err(ShellnormError::Dimension { expected: 2 });
    }
    three_sphere_check(v, radii)
}

/// Large-degree limit of the three-sphere ratio of a single regular mode.
///
/// Replacing `f̂_n(kr)` by `(kr)^n` gives `‖·‖² = n (kr)^{2n} (1 + r⁻²)`; the
/// powers cancel against `α`, leaving a degree-independent ratio.
pub fn single_mode_limit(radii: [f64; 3]) -> Result<f64, ShellnormError> {
    let alpha = interpolation_exponent(radii)?;
    let w = radii.map(|r| (1.0 + 1.0 / (r * r)).ln());
    Ok((0.5 * (w[1] - alpha * w[0] - (1.0 - alpha) * w[2])).exp())
}

/// Monte-Carlo draws of random Helmholtz solutions.
pub fn monte_carlo_three_sphere(
    dimension: Dimension,
    k: f64,
    radii: [f64; 3],
    draws: usize,
    nmax: usize,
    seed: u64,
) -> Result<Vec<ThreeSphereReport>, ShellnormError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..draws)
        .map(|_| three_sphere_check(&HelmholtzCoefficients::random(dimension, k, nmax, &mut rng), radii))
        .collect()
}

/// `(R₂^{-q} - R₃^{-q}) / (R₁^{-q} - R₃^{-q})`.
pub fn system_exponent(q: f64, radii: [f64; 3]) -> Result<f64, ShellnormError> {
    check_radii(radii)?;
    let [r1, r2, r3] = radii;
    Ok((r2.powf(-q) - r3.powf(-q)) / (r1.powf(-q) - r3.powf(-q)))
}

/// `𝐇(∂B_r)` norms of one field sample on the three spheres.
pub type SphereNorms = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub radii: [f64; 3],
    /// `(q, α(q), C(q))` with `C(q)` the largest ratio over the samples.
    pub scan: Vec<(f64, f64, f64)>,
    pub best_q: f64,
    pub constant: f64,
}

/// Scan `q` and report the smallest implied constant.
pub fn system_three_sphere_probe(
    samples: &[SphereNorms],
    radii: [f64; 3],
    q_grid: &[f64],
) -> Result<ProbeReport, ShellnormError> {
    if samples.len() < 3 {
        return Err(ShellnormError::TooFewSamples(samples.len()));
    }
    if q_grid.is_empty() {
        return Err(ShellnormError::EmptyGrid);
    }
    let mut scan = Vec::with_capacity(q_grid.len());
    for &q in q_grid {
        let alpha = system_exponent(q, radii)?;
        let c = samples
            .iter()
            .map(|s| report(radii, alpha, *s).ratio)
            .fold(0.0, f64::max);
        scan.push((q, alpha, c));
    }
    let &(best_q, _, constant) = scan
        .iter()
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .expect("grid is nonempty");
    Ok(ProbeReport { radii, scan, best_q, constant })
}

/// The default q grid `{1, 1.5, …, 8}`.
pub fn default_q_grid() -> Vec<f64> {
    (0..=14).map(|i| 1.0 + 0.5 * i as f64).collect()
}

/// System norm `Σ_k ‖V_k‖_{𝐇(∂B_r)}` of `V = (E, H)` on `|x| = r`.
///
/// The six scalar unknowns are the `(Y r̂, Ψ̂, Φ̂)` coefficients of `E` and
/// `H`; their co-normal traces are `ε ∂_r` (for `E`) and `μ ∂_r` (for `H`),
/// with the radial derivative taken by central differences. `r` must lie
/// inside a layer where the material is smooth.
pub fn system_trace_norm(field: &FieldExpansion, r: f64) -> Result<f64, ShellnormError> {
    let h = 1e-5 * r;
    let mut sq = [0.0f64; 6];
    for (radial, w) in field.radial_groups() {
        if w == 0.0 {
            continue;
        }
        let n = radial.degree() as f64;
        let b: Bundle = radial.bundle(r)?;
        let (bp, bm) = (radial.bundle(r + h)?, radial.bundle(r - h)?);
        // Materials from the Maxwell relations: curl E = ikμH, curl H = -ikεE.
        let (eps, mu) = materials_from_bundle(&b, field.k);
        for i in 0..3 {
            let de = (bp.e[i] - bm.e[i]) / (2.0 * h) * eps;
            let dh = (bp.h[i] - bm.h[i]) / (2.0 * h) * mu;
            sq[i] += w * (n * b.e[i].norm_sqr() + de.norm_sqr() / n);
            sq[3 + i] += w * (n * b.h[i].norm_sqr() + dh.norm_sqr() / n);
        }
    }
    Ok(sq.iter().map(|s| s.sqrt()).sum())
}

/// Recover `(ε, μ)` from `∇×E = ikμH` and `∇×H = -ikεE` by least squares.
fn materials_from_bundle(b: &Bundle, k: f64) -> (Complex64, Complex64) {
    let ik = Complex64::new(0.0, k);
    let fit = |x: &[Complex64; 3], y: &[Complex64; 3]| {
        let den: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        if den > 0.0 {
            x.iter().zip(y).map(|(a, b)| a.conj() * b).sum::<Complex64>() / den
        } else {
            Complex64::new(1.0, 0.0)
        }
    };
    (-fit(&b.e, &b.curl_h) / ik, fit(&b.h, &b.curl_e) / ik)
}

/// `(α, β, ρ)` of the proof's rate bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateReport {
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
}

/// `α = (2^{-q} - 4^{-q})/(2^q - 4^{-q})`, `β = ln(r₃/(4r₂))/ln(r₃/(2r₂))`,
/// `ρ = α/(1 - (1-α)β)`.
pub fn rate_bookkeeping(q: f64, r2: f64, r3: f64) -> Result<RateReport, ShellnormError> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(ShellnormError::Rate(format!("q = {q}")));
    }
    if !(r2 > 0.0 && r3 > 4.0 * r2 && r3.is_finite()) {
        return Err(ShellnormError::Rate(format!("r2 = {r2}, r3 = {r3}")));
    }
    let alpha = (2f64.powf(-q) - 4f64.powf(-q)) / (2f64.powf(q) - 4f64.powf(-q));
    let beta = (r3 / (4.0 * r2)).ln() / (r3 / (2.0 * r2)).ln();
    let rho = alpha / (1.0 - (1.0 - alpha) * beta);
    Ok(RateReport { alpha, beta, rho })
}
