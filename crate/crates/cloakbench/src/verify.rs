//! Invariant suites behind `verify`.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use cloak::geomap::{change_of_variables_residual, push_tensor, CMatrix, CVector, DiffeoMap, Patch, Point, TensorPair};
use cloak::media::{build_kelvin_scheme, MaterialLayout, RadialCoefficient, RadialProfile};
use cloak::solver::{solve, FieldExpansion, FreeWave, IncidentSpec, Polarization, RadialStack, SolverOptions, WaveKind};
use cloak::specfun::{wronskian_residuals, CylindricalArrays, SphericalArrays};
use nalgebra::Matrix3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::lab::run_three_sphere;
use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Geomap,
    Media,
    SolverOracles,
    Specfun,
    Threesphere,
}

impl Suite {
    /// Sorted by name.
    pub const ALL: [Suite; 5] = [Suite::Geomap, Suite::Media, Suite::SolverOracles, Suite::Specfun, Suite::Threesphere];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Geomap => "geomap",
            Suite::Media => "media",
            Suite::SolverOracles => "solver-oracles",
            Suite::Specfun => "specfun",
            Suite::Threesphere => "threesphere",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Suite names accepted on the command line; `all` expands to every suite.
pub fn parse_suites(name: &str) -> Result<Vec<Suite>, BenchError> {
    if name == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    Ok(vec![name.parse()?])
}

impl FromStr for Suite {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| BenchError::Usage(format!("unknown suite '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, relation: Relation::AtMost, bound, pass: value <= bound }
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, relation: Relation::AtLeast, bound, pass: value >= bound }
    }

    /// A yes/no property reported as 1 or 0.
    pub fn holds(name: &str, ok: bool) -> Self {
        Self::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub pass: bool,
    pub seconds: f64,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySummary {
    pub pass: bool,
    pub suites: Vec<SuiteReport>,
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<SuiteReport, BenchError> {
    let start = Instant::now();
    let checks = match suite {
        Suite::Specfun => specfun_checks()?,
        Suite::Geomap => geomap_checks(seed)?,
        Suite::Media => media_checks(seed)?,
        Suite::SolverOracles => solver_checks()?,
        Suite::Threesphere => threesphere_checks(seed)?,
    };
    Ok(SuiteReport {
        suite,
        pass: checks.iter().all(|c| c.pass),
        seconds: start.elapsed().as_secs_f64(),
        checks,
    })
}

pub fn run_suites(suites: &[Suite], seed: u64) -> Result<VerifySummary, BenchError> {
    let mut sorted = suites.to_vec();
    sorted.sort();
    sorted.dedup();
    let reports = sorted.iter().map(|&s| run_suite(s, seed)).collect::<Result<Vec<_>, _>>()?;
    Ok(VerifySummary { pass: reports.iter().all(|r| r.pass), suites: reports })
}

fn num(e: impl fmt::Display) -> BenchError {
    BenchError::Numerical(e.to_string())
}

/// Radii of the Wronskian table: five decades.
pub const WRONSKIAN_RADII: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];
pub const WRONSKIAN_MAX_ORDER: usize = 60;

/// `(n, r, spherical_residual, cylindrical_residual)` rows.
pub fn specfun_residual_table() -> Result<Vec<(usize, f64, f64, f64)>, BenchError> {
    let mut rows = Vec::new();
    for &r in &WRONSKIAN_RADII {
        for n in 0..=WRONSKIAN_MAX_ORDER {
            let (s, c) = wronskian_residuals(n, r).map_err(num)?;
            rows.push((n, r, s, c));
        }
    }
    Ok(rows)
}

/// Largest deviation of the four hat functions at order 20 from their
/// leading powers, over small arguments.
pub fn hat_ratio_error() -> Result<f64, BenchError> {
    let n = 20;
    let mut worst: f64 = 0.0;
    for &r in &[1e-3, 1e-2, 0.1] {
        let z = Complex64::new(r, 0.0);
        let s = SphericalArrays::new(n, z).map_err(num)?;
        let c = CylindricalArrays::new(n, z).map_err(num)?;
        let p = r.powi(n as i32);
        for d in [
            (s.j_hat[n] / p - 1.0).norm(),
            (s.y_hat[n] * p * r - 1.0).norm(),
            (c.j_hat[n] / p - 1.0).norm(),
            (c.y_hat[n] * p + Complex64::i()).norm(),
        ] {
            worst = worst.max(d);
        }
    }
    Ok(worst)
}

fn specfun_checks() -> Result<Vec<Check>, BenchError> {
    let table = specfun_residual_table()?;
    let sph = table.iter().map(|r| r.2).fold(0.0, f64::max);
    let cyl = table.iter().map(|r| r.3).fold(0.0, f64::max);
    Ok(vec![
        Check::at_most("spherical_wronskian_max", sph, 1e-10),
        Check::at_most("cylindrical_wronskian_max", cyl, 1e-10),
        Check::at_most("hat_ratio_error_n20", hat_ratio_error()?, 0.05),
    ])
}

fn random_point(rng: &mut ChaCha8Rng, rmin: f64, rmax: f64) -> Point {
    loop {
        let v = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if v.norm() > 1e-2 && v.norm() <= 1.0 {
            return v.normalize() * rng.gen_range(rmin..rmax);
        }
    }
}

fn random_tensor(rng: &mut ChaCha8Rng) -> CMatrix {
    let a = CMatrix::from_fn(|_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-0.2..0.2)));
    a + a.transpose() + CMatrix::identity() * Complex64::new(3.0, 0.0)
}

/// Largest relative round-trip error of `T⁻¹_* T_*` over `samples` random
/// symmetric complex tensors per map.
pub fn push_round_trip_error(samples: usize, seed: u64) -> Result<f64, BenchError> {
    let maps = [
        DiffeoMap::kelvin(0.9).map_err(num)?,
        DiffeoMap::scaling(3.5).map_err(num)?,
        DiffeoMap::kelvin(2.0).map_err(num)?.after(&DiffeoMap::kelvin(0.5).map_err(num)?),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for map in &maps {
        let inv = map.inverse_map();
        for _ in 0..samples {
            let x = random_point(&mut rng, 0.1, 3.0);
            let t = TensorPair { eps: random_tensor(&mut rng), mu: random_tensor(&mut rng) };
            let y = map.forward(&x).map_err(num)?;
            let pushed = push_tensor(map, |_: &Point| t, &y).map_err(num)?;
            let back = push_tensor(&inv, |_: &Point| pushed, &x).map_err(num)?;
            worst = worst.max(back.distance(&t) / t.eps.norm().max(t.mu.norm()));
        }
    }
    Ok(worst)
}

/// Largest relative deviation of the two composed Kelvin maps from the
/// scaling `(r₃/r₂)² x`, in values and Jacobians.
pub fn kelvin_composition_error(samples: usize, seed: u64) -> Result<f64, BenchError> {
    let (r2, r3) = (0.25, 5.0);
    let gf = DiffeoMap::kelvin(r3).map_err(num)?.after(&DiffeoMap::kelvin(r2).map_err(num)?);
    let lambda = r3 * r3 / (r2 * r2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = random_point(&mut rng, 1e-4, r2 * r2 / r3);
        let y = gf.forward(&x).map_err(num)?;
        worst = worst.max((y - x * lambda).norm() / (x * lambda).norm());
        let a = gf.jacobian(&x).map_err(num)?;
        worst = worst.max((a - Matrix3::identity() * lambda).norm() / lambda);
    }
    Ok(worst)
}

fn plane_wave(k: f64, x: &Point) -> (CVector, CVector) {
    // Travelling along z, polarized along x.
    let phase = Complex64::new(0.0, k * x[2]).exp();
    let z = Complex64::new(0.0, 0.0);
    (CVector::new(phase, z, z), CVector::new(z, phase, z))
}

fn observed_order(residuals: &[(f64, f64)]) -> f64 {
    let (h0, r0) = residuals[0];
    let (h1, r1) = residuals[residuals.len() - 1];
    (r0 / r1).ln() / (h0 / h1).ln()
}

fn geomap_checks(seed: u64) -> Result<Vec<Check>, BenchError> {
    let k = 1.0;
    let f = DiffeoMap::kelvin(1.0).map_err(num)?;
    let e = move |x: &Point| plane_wave(k, x).0;
    let h = move |x: &Point| plane_wave(k, x).1;
    let vacuum = |_: &Point| TensorPair::identity();
    let mut res = Vec::new();
    for half in [0.04, 0.02, 0.01] {
        let patch = Patch::new(Point::new(0.5, 0.1, 0.2), half, 5).map_err(num)?;
        let r = change_of_variables_residual(&f, &e, &h, &vacuum, k, &patch).map_err(num)?;
        res.push((patch.spacing(), r.output.0.max(r.output.1)));
    }
    Ok(vec![
        Check::at_most("push_round_trip_1000", push_round_trip_error(1000, seed)?, 1e-10),
        Check::at_most("kelvin_composition_is_scaling", kelvin_composition_error(1000, seed)?, 1e-12),
        Check::at_least("kelvin_plane_wave_residual_order", observed_order(&res), 0.9),
    ])
}

/// Largest deviation of the key identity at `δ = 0` for the vacuum object and
/// the constant `(2I, 3I)` object.
pub fn key_identity_error(samples: usize, seed: u64) -> Result<f64, BenchError> {
    let (r2, r3) = (0.25, 5.0);
    let objects = [
        RadialProfile::vacuum(r2),
        RadialProfile::constant(r2, Complex64::new(2.0, 0.0), Complex64::new(3.0, 0.0), 3.0),
    ];
    let mut worst: f64 = 0.0;
    for obj in &objects {
        let layout = build_kelvin_scheme(obj, r2, r3, 0.0)?;
        worst = worst.max(layout.verify_key_identity(samples, seed)?.max_deviation);
    }
    Ok(worst)
}

fn media_checks(seed: u64) -> Result<Vec<Check>, BenchError> {
    let (r2, r3) = (0.25, 5.0);
    let obj = RadialProfile::constant(r2, Complex64::new(2.0, 0.0), Complex64::new(3.0, 0.0), 3.0);
    let mut devs = Vec::new();
    for delta in [1e-4, 1e-3, 1e-2, 1e-1] {
        devs.push(build_kelvin_scheme(&obj, r2, r3, delta)?.verify_key_identity(200, seed)?.max_deviation);
    }
    let layout = build_kelvin_scheme(&obj, r2, r3, 1e-3)?;
    let [r1, _, _] = layout.radii;
    Ok(vec![
        Check::at_most("key_identity_at_zero_loss", key_identity_error(1000, seed)?, 1e-10),
        Check::holds("identity_deviation_grows_with_loss", devs.windows(2).all(|w| w[1] > w[0])),
        Check::at_most("inner_radius_is_r2_squared_over_r3", (r1 - r2 * r2 / r3).abs(), 1e-15),
        Check::holds("lossy_layout_has_negative_layer", layout.has_negative_region()),
    ])
}

/// Closed-form exterior amplitude of a homogeneous sphere of radius `a`,
/// written with Riccati functions `ψ = z j_n`, `ξ = z h_n`.
pub fn mie_coefficient(n: usize, pol: Polarization, k: f64, a: f64, eps: Complex64, mu: Complex64) -> Result<Complex64, BenchError> {
    let k1 = k * (eps * mu).sqrt();
    let x = Complex64::new(k * a, 0.0);
    let y = k1 * a;
    let out = SphericalArrays::new(n, x).map_err(num)?;
    let inn = SphericalArrays::new(n, y).map_err(num)?;
    let psi = out.j[n] * x;
    let dpsi = out.j[n] + x * out.j_prime[n];
    let (h, hp) = out.hankel(n);
    let xi = h * x;
    let dxi = h + x * hp;
    let log_deriv = (inn.j[n] + y * inn.j_prime[n]) / (inn.j[n] * y);
    let m = match pol {
        Polarization::TE => k1 / (k * mu),
        Polarization::TM => k1 / (k * eps),
    };
    Ok((dpsi - m * log_deriv * psi) / (m * log_deriv * xi - dxi))
}

/// Largest relative error of the solver against the closed form for a
/// dielectric and a lossy magnetic sphere, `n <= nmax`.
pub fn mie_error(nmax: usize) -> Result<f64, BenchError> {
    let cases = [
        (1.0, 1.0, Complex64::new(4.0, 0.0), Complex64::new(1.0, 0.0)),
        (1.4, 0.8, Complex64::new(2.5, 0.3), Complex64::new(1.7, 0.1)),
    ];
    let mut worst: f64 = 0.0;
    for (k, a, eps, mu) in cases {
        let layout = MaterialLayout::layered(&[(a, RadialCoefficient::constant(eps), RadialCoefficient::constant(mu))])?;
        for s in solve(&layout, k, nmax, SolverOptions::default()).map_err(num)? {
            let want = mie_coefficient(s.n, s.pol, k, a, eps, mu)?;
            worst = worst.max((s.outgoing - want).norm() / want.norm().max(1e-300));
        }
    }
    Ok(worst)
}

/// Largest `|s|` of the all-vacuum layout, with and without artificial interfaces.
pub fn vacuum_scattering(nmax: usize) -> Result<f64, BenchError> {
    let one = || RadialCoefficient::real(1.0);
    let layouts = [
        MaterialLayout::vacuum(),
        MaterialLayout::layered(&[(0.3, one(), one()), (1.0, one(), one()), (2.5, one(), one())])?,
    ];
    let mut worst: f64 = 0.0;
    for layout in &layouts {
        for s in solve(layout, 1.0, nmax, SolverOptions::default()).map_err(num)? {
            worst = worst.max(s.outgoing.norm());
        }
    }
    Ok(worst)
}

/// Relative error of representing the solved `(U, V)` in a vacuum shell by
/// regular plus outgoing waves fitted at the shell's inner edge.
pub fn free_space_span_error() -> Result<f64, BenchError> {
    let layout = MaterialLayout::layered(&[
        (1.0, RadialCoefficient::real(4.0), RadialCoefficient::real(1.0)),
        (2.0, RadialCoefficient::real(1.0), RadialCoefficient::real(1.0)),
    ])?;
    let stack = RadialStack::from_layout(&layout, SolverOptions::default()).map_err(num)?;
    let mut worst: f64 = 0.0;
    for n in [1, 2, 5, 12, 20] {
        for pol in [Polarization::TE, Polarization::TM] {
            let sol = stack.solve(1.0, n, pol).map_err(num)?;
            let reg = FreeWave { kind: WaveKind::Regular, n, pol, k: 1.0 };
            let out = FreeWave { kind: WaveKind::Outgoing, n, pol, k: 1.0 };
            let (y0, a0, b0) = (sol.state(1.0).map_err(num)?, reg.state(1.0).map_err(num)?, out.state(1.0).map_err(num)?);
            let det = a0[0] * b0[1] - a0[1] * b0[0];
            let alpha = (y0[0] * b0[1] - y0[1] * b0[0]) / det;
            let beta = (a0[0] * y0[1] - a0[1] * y0[0]) / det;
            for r in [1.05, 1.3, 1.5, 1.77, 1.99] {
                let got = sol.state(r).map_err(num)?;
                let (a, b) = (reg.state(r).map_err(num)?, out.state(r).map_err(num)?);
                for i in 0..2 {
                    let scale = (alpha * a[i]).norm().max((beta * b[i]).norm());
                    worst = worst.max((got[i] - alpha * a[i] - beta * b[i]).norm() / scale);
                }
            }
        }
    }
    Ok(worst)
}

/// Observed order of the Maxwell residual of a solved field pushed through a
/// Kelvin map, over patch half widths 0.04, 0.02, 0.01.
pub fn solved_push_order() -> Result<f64, BenchError> {
    let k = 1.0;
    let layout = crate::lab::graded_layout(1.0);
    let inc = IncidentSpec::plane_wave(k, Point::new(0.0, 0.0, 1.0), CVector::new(
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
    ))
    .map_err(num)?;
    let coefs = inc.coefficients(6).map_err(num)?;
    let field = FieldExpansion::from_solutions(k, &coefs, &solve(&layout, k, 6, SolverOptions::default()).map_err(num)?)
        .map_err(num)?;
    let nan = CVector::repeat(Complex64::new(f64::NAN, f64::NAN));
    let eval = |x: &Point| field.evaluate(&[*x]).map(|v| v[0]).unwrap_or((nan, nan));
    let e = |x: &Point| eval(x).0;
    let h = |x: &Point| eval(x).1;
    let mat = |x: &Point| layout.tensor_at(x);
    let f = DiffeoMap::kelvin(1.0).map_err(num)?;
    let mut res = Vec::new();
    for half in [0.04, 0.02, 0.01] {
        let patch = Patch::new(Point::new(1.2, 0.5, 0.9), half, 5).map_err(num)?;
        let r = change_of_variables_residual(&f, &e, &h, &mat, k, &patch).map_err(num)?;
        res.push((patch.spacing(), r.output.0.max(r.output.1)));
    }
    Ok(observed_order(&res))
}

fn solver_checks() -> Result<Vec<Check>, BenchError> {
    Ok(vec![
        Check::at_most("vacuum_outgoing_max_n40", vacuum_scattering(40)?, 1e-9),
        Check::at_most("mie_relative_error_n20", mie_error(20)?, 1e-8),
        Check::at_most("free_space_span_error", free_space_span_error()?, 1e-8),
        Check::at_least("change_of_variables_residual_order", solved_push_order()?, 0.9),
    ])
}

fn threesphere_checks(seed: u64) -> Result<Vec<Check>, BenchError> {
    let run = run_three_sphere(seed)?;
    let single = |v: &[cloak::shellnorm::ThreeSphereReport]| (v[v.len() - 1].ratio / run.single_mode_limit - 1.0).abs();
    let band = |v: &[cloak::shellnorm::ThreeSphereReport]| v.iter().all(|r| (1.0 / 3.0..=3.0).contains(&r.ratio));
    Ok(vec![
        Check::at_most("single_mode_3d_n40_vs_limit", single(&run.single_mode_3d), 0.1),
        Check::at_most("single_mode_2d_n40_vs_limit", single(&run.single_mode_2d), 0.1),
        Check::holds("single_modes_in_band", band(&run.single_mode_3d) && band(&run.single_mode_2d)),
        Check::at_most("monte_carlo_3d_max_ratio", run.summary_3d.max_ratio, 50.0),
        Check::at_most("monte_carlo_2d_max_ratio", run.summary_2d.max_ratio, 50.0),
        Check::holds("monte_carlo_no_growth", run.summary_3d.bounded() && run.summary_2d.bounded()),
        Check::at_most("alpha_identity_error", run.alpha_identity_error, 1e-12),
        Check::at_most("rate_alpha_q1", (run.rate.alpha - 1.0 / 7.0).abs(), 1e-15),
    ])
}
