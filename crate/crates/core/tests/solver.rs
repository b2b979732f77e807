mod common;

use std::sync::Arc;

use cloak::geomap::{curl_residual, elliptic_residual, push_field, CVector, DiffeoMap, Patch, Point, TensorPair};
use cloak::media::{build_kelvin_scheme, MaterialLayout, PowerTerm, RadialCoefficient, RadialProfile};
use cloak::solver::vsh::AngularTable;
use cloak::solver::{
    assemble_field, data_functional, hcurl_shell_misfit, outgoing_residual, pair_hcurl_norm, pair_l2_norm,
    reflect_solution, shell_norms, solve, stability_ratio, FieldExpansion, FreeWave, IncidentSpec, ModeIndex,
    ModeSolution, Polarization, RadialField, RadialStack, Reflected, RemovedSingularity, SolverError,
    SolverOptions, WaveKind,
};
use cloak::specfun::SphericalArrays;
use common::{cvec, dipole, plane_wave};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TE: Polarization = Polarization::TE;
const TM: Polarization = Polarization::TM;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn constant(v: f64) -> RadialCoefficient {
    RadialCoefficient::real(v)
}

fn dielectric_sphere(extra: &[f64]) -> MaterialLayout {
    let mut layers: Vec<(f64, RadialCoefficient, RadialCoefficient)> = Vec::new();
    for &r in extra.iter().filter(|&&r| r < 1.0) {
        layers.push((r, constant(4.0), constant(1.0)));
    }
    layers.push((1.0, constant(4.0), constant(1.0)));
    for &r in extra.iter().filter(|&&r| r > 1.0) {
        layers.push((r, constant(1.0), constant(1.0)));
    }
    MaterialLayout::layered(&layers).unwrap()
}

fn z_plane_wave(k: f64) -> IncidentSpec {
    IncidentSpec::plane_wave(k, Point::new(0.0, 0.0, 1.0), cvec([1.0, 0.0, 0.0])).unwrap()
}

fn random_point(rng: &mut ChaCha8Rng, rmin: f64, rmax: f64) -> Point {
    loop {
        let v = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if v.norm() > 1e-2 && v.norm() <= 1.0 {
            return v.normalize() * rng.gen_range(rmin..rmax);
        }
    }
}

/// Closed-form exterior amplitude of a homogeneous sphere of radius `a`,
/// written with Riccati functions `ψ = z j_n`, `ξ = z h_n`.
fn mie_oracle(n: usize, pol: Polarization, k: f64, a: f64, eps: Complex64, mu: Complex64) -> Complex64 {
    let k1 = k * (eps * mu).sqrt();
    let x = c(k * a, 0.0);
    let y = k1 * a;
    let out = SphericalArrays::new(n, x).unwrap();
    let inn = SphericalArrays::new(n, y).unwrap();
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
    (dpsi - m * log_deriv * psi) / (m * log_deriv * xi - dxi)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

#[test]
fn free_space_layers_are_spanned_by_spherical_bessel_waves() {
    // Vacuum shell [1, 2] between a dielectric core and the exterior: fit the
    // solved (U, V) at the inner edge by regular and outgoing waves, then check
    // the fit elsewhere in the shell.
    let layout = dielectric_sphere(&[2.0]);
    let stack = RadialStack::from_layout(&layout, opts()).unwrap();
    for n in [1, 2, 5, 12, 20] {
        for pol in [TE, TM] {
            let sol = stack.solve(1.0, n, pol).unwrap();
            let reg = FreeWave { kind: WaveKind::Regular, n, pol, k: 1.0 };
            let out = FreeWave { kind: WaveKind::Outgoing, n, pol, k: 1.0 };
            let (y0, a0, b0) = (sol.state(1.0).unwrap(), reg.state(1.0).unwrap(), out.state(1.0).unwrap());
            let det = a0[0] * b0[1] - a0[1] * b0[0];
            let alpha = (y0[0] * b0[1] - y0[1] * b0[0]) / det;
            let beta = (a0[0] * y0[1] - a0[1] * y0[0]) / det;
            for r in [1.05, 1.3, 1.5, 1.77, 1.99] {
                let got = sol.state(r).unwrap();
                let (a, b) = (reg.state(r).unwrap(), out.state(r).unwrap());
                for i in 0..2 {
                    let want = alpha * a[i] + beta * b[i];
                    let scale = (alpha * a[i]).norm().max((beta * b[i]).norm());
                    assert!((got[i] - want).norm() < 1e-8 * scale, "n={n} {pol:?} r={r}: {} vs {}", got[i], want);
                }
            }
            // Above the outermost interface the representation is exact by construction.
            if n <= 2 {
                assert!(rel(beta, sol.outgoing) < 1e-8 && rel(alpha, c(1.0, 0.0)) < 1e-8);
            }
        }
    }
}

#[test]
fn vacuum_scatters_nothing() {
    for layout in [
        MaterialLayout::vacuum(),
        MaterialLayout::layered(&[(0.3, constant(1.0), constant(1.0)), (1.0, constant(1.0), constant(1.0)), (2.5, constant(1.0), constant(1.0))])
            .unwrap(),
    ] {
        let sols = solve(&layout, 1.0, 40, opts()).unwrap();
        assert_eq!(sols.len(), 80);
        for s in &sols {
            assert!(s.outgoing.norm() <= 1e-9, "n={} {:?}: |s| = {:e}", s.n, s.pol, s.outgoing.norm());
        }
    }
}

#[test]
fn vacuum_solution_reproduces_the_incident_field() {
    let k = 1.0;
    let layout = MaterialLayout::layered(&[(1.0, constant(1.0), constant(1.0)), (3.0, constant(1.0), constant(1.0))]).unwrap();
    let inc = z_plane_wave(k);
    let co = inc.coefficients(30).unwrap();
    let field = FieldExpansion::from_solutions(k, &co, &solve(&layout, k, 30, opts()).unwrap()).unwrap();
    let pts = [Point::new(0.2, 0.1, -0.4), Point::new(1.5, -2.0, 1.0), Point::new(3.5, 0.0, 1.0)];
    for (x, (e, h)) in pts.iter().zip(field.evaluate(&pts).unwrap()) {
        let (we, wh) = plane_wave(k, Point::new(0.0, 0.0, 1.0), Point::new(1.0, 0.0, 0.0), x);
        assert!((e - we).norm() < 1e-9 && (h - wh).norm() < 1e-9);
    }
}

#[test]
fn dielectric_sphere_matches_closed_form_mie_coefficients() {
    let layout = dielectric_sphere(&[]);
    let sols = solve(&layout, 1.0, 20, opts()).unwrap();
    for s in &sols {
        let want = mie_oracle(s.n, s.pol, 1.0, 1.0, c(4.0, 0.0), c(1.0, 0.0));
        assert!(rel(s.outgoing, want) <= 1e-8, "n={} {:?}: {} vs {}", s.n, s.pol, s.outgoing, want);
    }
}

#[test]
fn lossy_magnetic_sphere_matches_closed_form() {
    let layout = MaterialLayout::layered(&[(0.8, RadialCoefficient::constant(c(2.5, 0.3)), RadialCoefficient::constant(c(1.7, 0.1)))])
        .unwrap();
    let sols = solve(&layout, 1.4, 12, opts()).unwrap();
    for s in &sols {
        let want = mie_oracle(s.n, s.pol, 1.4, 0.8, c(2.5, 0.3), c(1.7, 0.1));
        assert!(rel(s.outgoing, want) <= 1e-8, "n={} {:?}", s.n, s.pol);
        // Absorption: the one-port reflection has modulus below 1.
        let m = (c(1.0, 0.0) + 2.0 * s.outgoing).norm();
        assert!(m <= 1.0 + 1e-12);
        if s.n <= 3 {
            assert!(m < 1.0 - 1e-6);
        }
    }
}

#[test]
fn lossless_modes_are_unitary() {
    let layout = MaterialLayout::layered(&[
        (0.4, constant(6.0), constant(2.0)),
        (1.0, constant(2.0), constant(1.0)),
        (1.5, constant(1.0), constant(3.0)),
    ])
    .unwrap();
    for s in solve(&layout, 1.0, 20, opts()).unwrap() {
        let m = (c(1.0, 0.0) + 2.0 * s.outgoing).norm();
        assert!((m - 1.0).abs() <= 1e-8, "n={} {:?}: |1+2s| = {m}", s.n, s.pol);
    }
}

#[test]
fn artificial_interfaces_change_nothing() {
    let plain = solve(&dielectric_sphere(&[]), 1.0, 15, opts()).unwrap();
    let split = solve(&dielectric_sphere(&[0.3, 0.7, 1.6, 2.2]), 1.0, 15, opts()).unwrap();
    for (a, b) in plain.iter().zip(&split) {
        assert!((a.outgoing - b.outgoing).norm() <= 1e-9 * a.outgoing.norm().max(1e-3));
        for r in [0.1, 0.5, 0.95, 1.8] {
            let (sa, sb) = (a.state(r).unwrap(), b.state(r).unwrap());
            for i in 0..2 {
                assert!((sa[i] - sb[i]).norm() <= 1e-9 * sa[i].norm().max(1e-12), "n={} r={r}", a.n);
            }
        }
    }
}

#[test]
fn traces_are_continuous_and_regular_at_the_origin() {
    let layout = MaterialLayout::layered(&[
        (0.5, constant(3.0), constant(1.0)),
        (
            1.2,
            RadialCoefficient { terms: vec![PowerTerm { coef: c(1.0, 0.0), power: 0.0 }, PowerTerm { coef: c(0.5, 0.1), power: 1.0 }] },
            constant(2.0),
        ),
    ])
    .unwrap();
    let stack = RadialStack::from_layout(&layout, opts()).unwrap();
    for n in [1, 3, 8] {
        for pol in [TE, TM] {
            let sol = stack.solve(1.0, n, pol).unwrap();
            for r in sol.interfaces() {
                let (below, above) = (sol.state(r * (1.0 - 1e-12)).unwrap(), sol.state(r).unwrap());
                for i in 0..2 {
                    assert!((below[i] - above[i]).norm() <= 1e-9 * above[i].norm().max(1e-300));
                }
            }
            // The component carrying the Φ̂ part grows like r^{n+1} near the origin.
            let lead = if pol == TE { 0 } else { 1 };
            let ratio = |r: f64| sol.state(r).unwrap()[lead] / r.powi(n as i32 + 1);
            assert!(rel(ratio(1e-5), ratio(2e-5)) < 1e-6, "n={n} {pol:?}");
        }
    }
}

#[test]
fn plane_wave_expansion_matches_the_exponential() {
    let k = 1.0;
    let d = Point::new(0.3, -0.5, 0.8).normalize();
    let p = d.cross(&Point::new(1.0, 0.0, 0.0)).normalize();
    let inc = IncidentSpec::plane_wave(k, d, cvec([p[0], p[1], p[2]])).unwrap();
    let field = FieldExpansion::incident(k, &inc.coefficients(40).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts: Vec<Point> = (0..60).map(|_| random_point(&mut rng, 0.01, 5.0)).collect();
    for (x, (e, h)) in pts.iter().zip(field.evaluate(&pts).unwrap()) {
        let (we, wh) = plane_wave(k, d, p, x);
        assert!((e - we).norm() <= 1e-8 && (h - wh).norm() <= 1e-8, "x = {x:?}");
    }
}

#[test]
fn circular_polarization_is_expanded_too() {
    let k = 1.3;
    let d = Point::new(0.0, 1.0, 0.0);
    let pol = CVector::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    let field = FieldExpansion::incident(k, &IncidentSpec::plane_wave(k, d, pol).unwrap().coefficients(30).unwrap());
    let x = Point::new(0.7, -1.1, 0.4);
    let (e, h) = field.evaluate(&[x]).unwrap()[0];
    let phase = c(0.0, k * d.dot(&x)).exp();
    let dc = cvec([0.0, 1.0, 0.0]);
    assert!((e - pol * phase).norm() < 1e-10);
    assert!((h - dc.cross(&pol) * phase).norm() < 1e-10);
}

#[test]
fn dipole_expansion_matches_the_closed_form_inside_the_source_sphere() {
    let k = 1.0;
    let x0 = Point::new(0.7, 1.9, -2.2);
    let p = CVector::new(c(0.3, 0.1), c(-0.2, 0.0), c(0.5, -0.4));
    let inc = IncidentSpec::dipole(k, x0, p).unwrap();
    assert!((inc.strength() - p.norm()).abs() < 1e-15);
    let field = FieldExpansion::incident(k, &inc.coefficients(60).unwrap());
    let pts = [Point::new(0.4, -0.3, 0.5), Point::new(-1.0, 0.5, 0.7), Point::new(0.1, 0.2, 0.05)];
    for (x, (e, h)) in pts.iter().zip(field.evaluate(&pts).unwrap()) {
        let (we, wh) = dipole(k, x0, p, x);
        assert!((e - we).norm() <= 1e-8 * we.norm(), "{x:?}");
        assert!((h - wh).norm() <= 1e-8 * wh.norm(), "{x:?}");
    }
}

#[test]
fn source_validation_and_truncation() {
    let z = Point::new(0.0, 0.0, 1.0);
    assert!(matches!(IncidentSpec::plane_wave(1.0, z, cvec([0.0, 0.0, 1.0])), Err(SolverError::Source(_))));
    assert!(matches!(IncidentSpec::plane_wave(0.0, z, cvec([1.0, 0.0, 0.0])), Err(SolverError::Wavenumber(_))));
    assert!(matches!(IncidentSpec::dipole(1.0, Point::zeros(), cvec([1.0, 0.0, 0.0])), Err(SolverError::Source(_))));
    assert!(matches!(ModeIndex::new(0, 0, TE), Err(SolverError::InvalidMode { .. })));
    assert!(matches!(ModeIndex::new(2, -3, TM), Err(SolverError::InvalidMode { .. })));
    assert_eq!(ModeIndex::all(3).len(), 2 * (3 + 5 + 7));

    let inc = z_plane_wave(1.0);
    let small = inc.choose_nmax(10.0).unwrap();
    assert!(!small.truncated && small.nmax > 10 && small.nmax < 80);
    // The tail criterion holds at the chosen degree.
    let big = inc.choose_nmax(500.0).unwrap();
    assert!(big.truncated && big.nmax == 80);
    // A z-directed x-polarized wave only excites m = ±1.
    assert!(inc.coefficients(10).unwrap().iter().all(|(m, _)| m.m.abs() == 1));
    assert!(inc.coefficients(10).unwrap().windows(2).all(|w| w[0].0 < w[1].0));
}

#[test]
fn assembly_is_linear_and_rejects_the_origin() {
    let k = 1.0;
    let co = z_plane_wave(k).coefficients(12).unwrap();
    let sols = solve(&dielectric_sphere(&[]), k, 12, opts()).unwrap();
    let field = FieldExpansion::from_solutions(k, &co, &sols).unwrap();
    let doubled: Vec<_> = co.iter().map(|(m, a)| (*m, a * 2.0)).collect();
    let field2 = FieldExpansion::from_solutions(k, &doubled, &sols).unwrap();
    let pts = [Point::new(0.3, 0.2, 0.1), Point::new(2.0, -1.0, 0.5)];
    let (a, b) = (field.evaluate(&pts).unwrap(), field2.evaluate(&pts).unwrap());
    for ((e1, h1), (e2, h2)) in a.iter().zip(&b) {
        assert!((e1 * c(2.0, 0.0) - e2).norm() <= 1e-12 * e2.norm());
        assert!((h1 * c(2.0, 0.0) - h2).norm() <= 1e-12 * h2.norm());
    }
    let empty = assemble_field(&[], &pts).unwrap();
    assert!(empty.iter().all(|(e, h)| e.norm() == 0.0 && h.norm() == 0.0));
    assert!(matches!(field.evaluate(&[Point::zeros()]), Err(SolverError::Origin)));
}

#[test]
fn misfit_of_identical_and_scaled_fields() {
    let k = 1.0;
    let co = z_plane_wave(k).coefficients(25).unwrap();
    let f = FieldExpansion::incident(k, &co);
    assert_eq!(hcurl_shell_misfit(&f, &f, 5.0, 10.0).unwrap(), 0.0);
    let scaled = FieldExpansion::combine(&[(c(1.0 + 1e-6, 0.0), &f)]).unwrap();
    let mis = hcurl_shell_misfit(&f, &scaled, 5.0, 10.0).unwrap();
    let norm = pair_hcurl_norm(&shell_norms(&f, 5.0, 10.0).unwrap());
    assert!((mis / (1e-6 * norm) - 1.0).abs() < 0.01);
    assert!(matches!(hcurl_shell_misfit(&f, &f, 3.0, 3.0), Err(SolverError::EmptyShell { .. })));
    let other = FieldExpansion::incident(k, &co[..4]);
    assert!(matches!(hcurl_shell_misfit(&f, &other, 5.0, 10.0), Err(SolverError::Incompatible(_))));
}

/// `h₁(z) = -e^{iz}(1/z + i/z²)` and its derivative.
fn h1(z: f64) -> (Complex64, Complex64) {
    let e = c(0.0, z).exp();
    let i = Complex64::i();
    let h = -e * (1.0 / z + i / (z * z));
    let hp = -i * e * (1.0 / z + i / (z * z)) - e * (-1.0 / (z * z) - 2.0 * i / (z * z * z));
    (h, hp)
}

#[test]
fn unit_outgoing_mode_norm_matches_direct_quadrature() {
    // TE n = 1: E = h₁ Φ̂, H = (iL h₁/(kr), i(h₁ + kr h₁')/(kr), 0), curls ikH and -ikE.
    let k = 1.0;
    let mode = ModeIndex::new(1, 0, TE).unwrap();
    let radial: Arc<dyn RadialField> = Arc::new(FreeWave { kind: WaveKind::Outgoing, n: 1, pol: TE, k });
    let field = FieldExpansion { k, modes: vec![ModeSolution { mode, amplitude: c(1.0, 0.0), radial }] };
    let got = pair_hcurl_norm(&shell_norms(&field, 2.0, 3.0).unwrap());

    // Composite Simpson on 20000 intervals.
    let steps = 20_000;
    let hstep = 1.0 / steps as f64;
    let (mut e2, mut h2) = (0.0, 0.0);
    for i in 0..=steps {
        let r = 2.0 + i as f64 * hstep;
        let w = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        let (h, hp) = h1(k * r);
        e2 += w * r * r * h.norm_sqr();
        h2 += w * r * r * (2.0 * h.norm_sqr() + (h + k * r * hp).norm_sqr()) / (k * r).powi(2);
    }
    let (e, h) = ((e2 * hstep / 3.0).sqrt(), (h2 * hstep / 3.0).sqrt());
    let want = e + k * h + h + k * e;
    assert!((got - want).abs() <= 1e-8 * want, "{got} vs {want}");
}

#[test]
fn reflection_preserves_traces_on_the_fixed_sphere_and_is_an_involution() {
    let k = 1.0;
    let sols = solve(&dielectric_sphere(&[]), k, 6, opts()).unwrap();
    let r2 = 0.8;
    let f = DiffeoMap::kelvin(r2).unwrap();
    for s in &sols {
        let mode = ModeSolution { mode: ModeIndex::new(s.n, 0, s.pol).unwrap(), amplitude: c(0.7, -0.2), radial: s.clone() };
        let once = reflect_solution(&mode, &f).unwrap();
        let (a, b) = (mode.bundle(r2).unwrap(), once.bundle(r2).unwrap());
        for (x, y) in a.e_tangential().iter().chain(&a.h_tangential()).zip(b.e_tangential().iter().chain(&b.h_tangential())) {
            assert!((x - y).norm() <= 1e-14 * x.norm().max(1e-300));
        }
        let twice = reflect_solution(&once, &f.inverse_map()).unwrap();
        for r in [0.2, 0.5, 1.1, 2.7] {
            let (a, b) = (mode.bundle(r).unwrap(), twice.bundle(r).unwrap());
            for (x, y) in [a.e, a.h, a.curl_e, a.curl_h].iter().flatten().zip([b.e, b.h, b.curl_e, b.curl_h].iter().flatten()) {
                assert!((x - y).norm() <= 1e-10 * x.norm().max(1e-12));
            }
        }
    }
    assert!(matches!(
        reflect_solution(
            &ModeSolution { mode: ModeIndex::new(1, 0, TE).unwrap(), amplitude: c(1.0, 0.0), radial: sols[0].clone() },
            &DiffeoMap::scaling(2.0).unwrap()
        ),
        Err(SolverError::NotKelvin)
    ));
}

#[test]
fn reflection_agrees_with_grid_level_push_forward() {
    let k = 1.0;
    let r2 = 1.0;
    let f = DiffeoMap::kelvin(r2).unwrap();
    let modes: Vec<ModeSolution> = [(2, 1, TE), (3, -2, TM), (1, 0, TM)]
        .iter()
        .map(|&(n, m, pol)| ModeSolution {
            mode: ModeIndex::new(n, m, pol).unwrap(),
            amplitude: c(0.4, 0.9),
            radial: Arc::new(FreeWave { kind: WaveKind::Regular, n, pol, k }),
        })
        .collect();
    let reflected: Vec<ModeSolution> = modes.iter().map(|m| reflect_solution(m, &f).unwrap()).collect();
    let dir = Point::new(0.3, -0.6, 0.74).normalize();
    for i in 0..50 {
        let r = 0.3 + 2.7 * i as f64 / 49.0;
        let x = dir * r;
        let (e, h) = assemble_field(&modes, &[x]).unwrap()[0];
        let (y, pe) = push_field(&f, &x, &e).unwrap();
        let (_, ph) = push_field(&f, &x, &h).unwrap();
        let (re, rh) = assemble_field(&reflected, &[y]).unwrap()[0];
        assert!((re - pe).norm() <= 1e-10 * pe.norm(), "r = {r}");
        assert!((rh - ph).norm() <= 1e-10 * ph.norm(), "r = {r}");
    }
}

#[test]
fn removed_singularity_of_a_zero_field_is_zero() {
    let k = 1.0;
    let layout = build_kelvin_scheme(&RadialProfile::vacuum(0.25), 0.25, 5.0, 0.1).unwrap();
    let sols = solve(&layout, k, 5, opts()).unwrap();
    let zeros: Vec<_> = ModeIndex::all(5).into_iter().map(|m| (m, c(0.0, 0.0))).collect();
    let field = FieldExpansion::from_solutions(k, &zeros, &sols).unwrap();
    let rs = field.map_radial(|r| Arc::new(RemovedSingularity::new(r.clone(), 0.25, 5.0)) as Arc<dyn RadialField>);
    let pts = [Point::new(0.1, 0.0, 0.0), Point::new(0.0, 1.0, 2.0), Point::new(6.0, 1.0, 0.0)];
    for (e, h) in rs.evaluate(&pts).unwrap() {
        assert_eq!(e.norm() + h.norm(), 0.0);
    }
    let j = field.removed_singularity_jumps(0.25, 5.0).unwrap();
    assert_eq!(j.outer + j.inner, 0.0);
}

fn trivial_cloak(delta: f64, nmax: usize) -> (FieldExpansion, FieldExpansion) {
    let k = 1.0;
    let (r2, r3) = (0.25, 5.0);
    let co = z_plane_wave(k).coefficients(nmax).unwrap();
    let layout = build_kelvin_scheme(&RadialProfile::vacuum(r2), r2, r3, delta).unwrap();
    let field = FieldExpansion::from_solutions(k, &co, &solve(&layout, k, nmax, opts()).unwrap()).unwrap();
    (field, FieldExpansion::incident(k, &co))
}

#[test]
fn removed_singularity_is_continuous_across_the_outer_sphere() {
    for delta in [1e-1, 1e-3] {
        let (field, _) = trivial_cloak(delta, 20);
        let j = field.removed_singularity_jumps(0.25, 5.0).unwrap();
        assert!(j.outer <= 1e-9 * j.outer_reference, "{delta}: {:e}", j.outer);
        assert!(j.inner > 0.0);
        // Pointwise, the three pieces agree with the definition.
        let rs = RemovedSingularity::new(field.modes[0].radial.clone(), 0.25, 5.0);
        let (o, m, i) = rs.pieces(3.0).unwrap();
        assert_eq!(rs.bundle(3.0).unwrap(), m);
        assert_eq!(rs.bundle(6.0).unwrap(), rs.pieces(6.0).unwrap().0);
        assert_eq!(rs.bundle(0.3).unwrap(), rs.pieces(0.3).unwrap().2);
        assert_eq!(m, o.sub(&rs.first.bundle(3.0).unwrap()).add(&i));
    }
}

fn fitted_slope(deltas: &[f64], values: &[f64]) -> f64 {
    let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|j| j.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
}

fn inner_jump(delta: f64, amplitudes: &[(ModeIndex, Complex64)]) -> f64 {
    let k = 1.0;
    let layout = build_kelvin_scheme(&RadialProfile::vacuum(0.25), 0.25, 5.0, delta).unwrap();
    let nmax = amplitudes.iter().map(|a| a.0.n).max().unwrap();
    let field = FieldExpansion::from_solutions(k, amplitudes, &solve(&layout, k, nmax, opts()).unwrap()).unwrap();
    field.removed_singularity_jumps(0.25, 5.0).unwrap().inner
}

#[test]
fn inner_jump_decays_with_the_loss() {
    // A dipole-like source of degree 1 from delta = 1.
    let single = [(ModeIndex::new(1, 0, TE).unwrap(), c(1.0, 0.0)), (ModeIndex::new(1, 1, TM).unwrap(), c(0.0, 1.0))];
    let deltas = [1.0, 0.5, 0.2, 0.1];
    let jumps: Vec<f64> = deltas.iter().map(|&d| inner_jump(d, &single)).collect();
    let slope = fitted_slope(&deltas, &jumps);
    assert!(slope >= 0.9, "slope {slope}, jumps {jumps:?}");
    // A plane wave over the decade below 0.1; from delta = 1 its degrees 2 to 5
    // are still saturated and the slope is smaller.
    let co = z_plane_wave(1.0).coefficients(20).unwrap();
    let deltas = [1e-1, 5e-2, 2e-2, 1e-2];
    let jumps: Vec<f64> = deltas.iter().map(|&d| inner_jump(d, &co)).collect();
    let slope = fitted_slope(&deltas, &jumps);
    assert!(slope >= 0.9, "slope {slope}, jumps {jumps:?}");
}

#[test]
fn data_functional_examples() {
    let k = 1.0;
    let empty = FieldExpansion { k, modes: vec![] };
    assert_eq!(data_functional(&empty, 1.0, 0.3, 5.0, 10.0).unwrap(), 1.0);
    assert!(matches!(data_functional(&empty, 1.0, 0.0, 5.0, 10.0), Err(SolverError::Delta(_))));
    assert!(matches!(stability_ratio(&empty, 1.0, -1.0, 5.0, 10.0), Err(SolverError::Delta(_))));

    let inc = z_plane_wave(k);
    let nmax = inc.choose_nmax(10.0).unwrap().nmax;
    let co = inc.coefficients(nmax).unwrap();
    let layout = MaterialLayout::layered(&[(5.0, constant(1.0), constant(1.0))]).unwrap();
    let field = FieldExpansion::from_solutions(k, &co, &solve(&layout, k, nmax, opts()).unwrap()).unwrap();
    // |E| = |H| = 1 pointwise, so the squared pair norm is twice the shell volume.
    let l2 = (2.0 * 4.0 / 3.0 * std::f64::consts::PI * (1000.0 - 125.0)).sqrt();
    assert!((pair_l2_norm(&shell_norms(&field, 5.0, 10.0).unwrap()) / l2 - 1.0).abs() < 1e-8);
    let data = data_functional(&field, 1.0, 0.01, 5.0, 10.0).unwrap();
    let want = (l2 / 0.01 + 1.0).sqrt();
    assert!((data / want - 1.0).abs() <= 1e-6, "{data} vs {want}");
    let halved = data_functional(&field, 1.0, 0.005, 5.0, 10.0).unwrap();
    assert!(halved / data > 1.0 && halved / data <= 2f64.sqrt());
}

#[test]
fn scattered_field_satisfies_the_radiation_condition() {
    let k = 1.0;
    let co = z_plane_wave(k).coefficients(6).unwrap();
    let sols = solve(&dielectric_sphere(&[]), k, 6, opts()).unwrap();
    let total = FieldExpansion::from_solutions(k, &co, &sols).unwrap();
    let inc = FieldExpansion::incident(k, &co);
    let scattered = FieldExpansion::combine(&[(c(1.0, 0.0), &total), (c(-1.0, 0.0), &inc)]).unwrap();
    for radius in [20.0, 40.0] {
        let ratio = outgoing_residual(&scattered, radius).unwrap() / outgoing_residual(&scattered, 2.0 * radius).unwrap();
        assert!((1.8..=2.2).contains(&ratio), "R = {radius}: {ratio}");
    }
}

fn graded_layout() -> MaterialLayout {
    let eps = RadialCoefficient { terms: vec![PowerTerm { coef: c(2.0, 0.0), power: 0.0 }, PowerTerm { coef: c(1.0, 0.0), power: 1.0 }] };
    let mu = RadialCoefficient { terms: vec![PowerTerm { coef: c(1.5, 0.0), power: 0.0 }, PowerTerm { coef: c(0.25, 0.0), power: 2.0 }] };
    MaterialLayout::layered(&[(1.5, eps, mu)]).unwrap()
}

#[test]
fn solved_fields_satisfy_maxwell_and_the_elliptic_system() {
    let k = 1.0;
    let layout = graded_layout();
    let sols = solve(&layout, k, 3, opts()).unwrap();
    let co: Vec<_> = [(1, 0, TE, c(1.0, 0.0)), (2, 1, TM, c(0.5, 0.5)), (3, -2, TE, c(0.0, 0.8))]
        .iter()
        .map(|&(n, m, p, a)| (ModeIndex::new(n, m, p).unwrap(), a))
        .collect();
    let field = FieldExpansion::from_solutions(k, &co, &sols).unwrap();
    let e = |x: &Point| field.evaluate(&[*x]).unwrap()[0].0;
    let h = |x: &Point| field.evaluate(&[*x]).unwrap()[0].1;
    let mat = |x: &Point| {
        let r = x.norm();
        TensorPair::isotropic(c(2.0 + r, 0.0), c(1.5 + 0.25 * r * r, 0.0))
    };
    let center = Point::new(0.4, 0.3, 0.5);
    let mut residuals = Vec::new();
    for half in [0.04, 0.02, 0.01] {
        let patch = Patch::new(center, half, 5).unwrap();
        let (re, rh) = curl_residual(&e, &h, &mat, k, &patch).unwrap();
        residuals.push((patch.spacing(), elliptic_residual(&e, &h, &mat, k, &patch).unwrap(), re.max(rh)));
    }
    let order = |i: usize, j: usize, sel: fn(&(f64, f64, f64)) -> f64| {
        (sel(&residuals[i]) / sel(&residuals[j])).ln() / (residuals[i].0 / residuals[j].0).ln()
    };
    assert!(order(0, 2, |t| t.1) >= 0.9, "{residuals:?}");
    assert!(order(0, 2, |t| t.2) >= 0.9, "{residuals:?}");
    assert!(residuals[2].2 < 1e-4);
}

#[test]
fn solver_error_paths() {
    let lossless = build_kelvin_scheme(&RadialProfile::vacuum(0.25), 0.25, 5.0, 0.0).unwrap();
    assert!(matches!(RadialStack::from_layout(&lossless, opts()), Err(SolverError::LosslessNegativeIndex)));
    let mut allow = opts();
    allow.allow_lossless_negative = true;
    assert!(RadialStack::from_layout(&lossless, allow).is_ok());

    let lossy = build_kelvin_scheme(&RadialProfile::vacuum(0.25), 0.25, 5.0, 1e-2).unwrap();
    let mut strict = opts();
    strict.max_condition = 1.0;
    let err = RadialStack::from_layout(&lossy, strict).unwrap().solve(1.0, 3, TM).unwrap_err();
    match err {
        SolverError::IllConditioned { n, pol, condition } => assert!(n == 3 && pol == TM && condition > 1.0),
        other => panic!("{other:?}"),
    }
    let stack = RadialStack::from_layout(&lossy, opts()).unwrap();
    assert!(matches!(stack.solve(-1.0, 1, TE), Err(SolverError::Wavenumber(_))));
    assert!(matches!(stack.solve(1.0, 0, TE), Err(SolverError::InvalidMode { .. })));

    let tensor = MaterialLayout::object_only(
        &RadialProfile::tensor(
            0.25,
            Arc::new(|_: &Point| TensorPair::isotropic(c(2.0, 0.0), c(1.0, 0.0))),
            4.0,
        ),
        0.25,
    )
    .unwrap();
    assert!(matches!(RadialStack::from_layout(&tensor, opts()), Err(SolverError::Media(_))));
}

#[test]
fn mode_json_export() {
    let sols = solve(&dielectric_sphere(&[]), 1.0, 2, opts()).unwrap();
    let mode = ModeSolution { mode: ModeIndex::new(2, -1, TM).unwrap(), amplitude: c(1.0, 0.0), radial: sols[3].clone() };
    let grid = [0.5, 1.0, 1.5];
    let v = mode.to_json(&grid).unwrap();
    assert_eq!(v["mode"]["n"], 2);
    assert_eq!(v["mode"]["m"], -1);
    assert_eq!(v["mode"]["pol"], "TM");
    assert_eq!(v["u"].as_array().unwrap().len(), 3);
    assert_eq!(v["grid"][1], 1.0);
    let s = mode.outgoing().unwrap();
    assert_eq!(v["outgoing"][0].as_f64().unwrap(), s.re);
    let (u, w) = mode.uv(1.5).unwrap();
    assert_eq!(v["v"][2][1].as_f64().unwrap(), w.im);
    assert_eq!(v["u"][2][0].as_f64().unwrap(), u.re);
}

fn sphere_rule(order: usize) -> Vec<(Point, f64)> {
    use gauss_quad::legendre::GaussLegendre;
    let gl = GaussLegendre::new(std::num::NonZeroUsize::new(order).unwrap());
    let nphi = 2 * order;
    let mut out = Vec::new();
    for (x, w) in gl.as_node_weight_pairs() {
        let (x, w): (f64, f64) = (*x, *w);
        let s = (1.0 - x * x).sqrt();
        for j in 0..nphi {
            let phi = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / nphi as f64;
            out.push((Point::new(s * phi.cos(), s * phi.sin(), x), w * 2.0 * std::f64::consts::PI / nphi as f64));
        }
    }
    out
}

#[test]
fn vector_harmonics_are_orthonormal() {
    let nmax = 5;
    let rule = sphere_rule(12);
    let tables: Vec<(AngularTable, f64)> = rule.iter().map(|(x, w)| (AngularTable::new(nmax, x).unwrap(), *w)).collect();
    let idx: Vec<(usize, i32)> = (1..=nmax).flat_map(|n| (-(n as i32)..=n as i32).map(move |m| (n, m))).collect();
    for &(n, m) in &idx {
        for &(p, q) in &idx {
            let (mut yy, mut ss, mut ff, mut sf) = (c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
            for (t, w) in &tables {
                yy += t.y(n, m).conj() * t.y(p, q) * *w;
                ss += t.psi(n, m).dotc(t.psi(p, q)) * *w;
                ff += t.phi(n, m).dotc(t.phi(p, q)) * *w;
                sf += t.psi(n, m).dotc(t.phi(p, q)) * *w;
            }
            let want = if (n, m) == (p, q) { 1.0 } else { 0.0 };
            for v in [yy, ss, ff] {
                assert!((v - want).norm() < 1e-12, "({n},{m}) ({p},{q}): {v}");
            }
            assert!(sf.norm() < 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn harmonics_relations_hold_pointwise(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0, n in 1usize..12, m in 0i32..12) {
        let p = Point::new(x, y, z);
        prop_assume!(p.norm() > 1e-3);
        let m = m.min(n as i32);
        let t = AngularTable::new(n, &p).unwrap();
        let rh = t.frame.r_hat.map(|v| c(v, 0.0));
        // Y_{n,-m} = (-1)^m conj(Y_nm); Φ̂ = r̂ × Ψ̂; both tangential.
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((t.y(n, -m) - t.y(n, m).conj() * sign).norm() < 1e-12);
        prop_assert!((t.phi(n, m) - rh.cross(t.psi(n, m))).norm() < 1e-12);
        prop_assert!(rh.dot(t.psi(n, m)).norm() < 1e-12);
        // Ψ̂ = r ∇Y / L by central differences.
        let h = 1e-6 * p.norm();
        let l = ((n * (n + 1)) as f64).sqrt();
        let mut g = CVector::zeros();
        for j in 0..3 {
            let mut e = Point::zeros();
            e[j] = h;
            let yp = AngularTable::new(n, &(p + e)).unwrap().y(n, m);
            let ym = AngularTable::new(n, &(p - e)).unwrap().y(n, m);
            g[j] = (yp - ym) / (2.0 * h) * p.norm() / l;
        }
        prop_assert!((g - t.psi(n, m)).norm() < 1e-6 * (1.0 + g.norm()));
    }

    #[test]
    fn reflection_is_an_involution(radius in 0.2f64..3.0, r in 0.1f64..5.0, n in 1usize..10, te in any::<bool>()) {
        let pol = if te { TE } else { TM };
        let base: Arc<dyn RadialField> = Arc::new(FreeWave { kind: WaveKind::Outgoing, n, pol, k: 1.3 });
        let once: Arc<dyn RadialField> = Arc::new(Reflected { inner: base.clone(), radius });
        let twice = Reflected { inner: once, radius };
        let (a, b) = (base.bundle(r).unwrap(), twice.bundle(r).unwrap());
        for (x, y) in [a.e, a.h, a.curl_e, a.curl_h].iter().flatten().zip([b.e, b.h, b.curl_e, b.curl_h].iter().flatten()) {
            prop_assert!((x - y).norm() <= 1e-12 * x.norm().max(1e-300));
        }
    }

    #[test]
    fn assembly_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, seed in 0u64..1000) {
        let k = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let co: Vec<_> = ModeIndex::all(4).into_iter().map(|m| (m, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))).collect();
        let f = FieldExpansion::incident(k, &co);
        let g = FieldExpansion::combine(&[(c(a, 0.0), &f), (c(0.0, b), &f)]).unwrap();
        let x = random_point(&mut rng, 0.1, 3.0);
        let (e1, h1) = f.evaluate(&[x]).unwrap()[0];
        let (e2, h2) = g.evaluate(&[x]).unwrap()[0];
        let s = c(a, b);
        prop_assert!((e1 * s - e2).norm() <= 1e-12 * (1.0 + e2.norm()));
        prop_assert!((h1 * s - h2).norm() <= 1e-12 * (1.0 + h2.norm()));
    }
}

#[test]
fn source_strength_scales_linearly() {
    let pol = cvec([0.0, 3.0, 4.0]);
    let inc = IncidentSpec::plane_wave(2.0, Point::new(1.0, 0.0, 0.0), pol).unwrap();
    assert!((inc.strength() - 5.0).abs() < 1e-15);
    assert!((inc.scaled(10.0).strength() - 50.0).abs() < 1e-13);
    let coefs = inc.coefficients(4).unwrap();
    let explicit = IncidentSpec::coefficients_only(2.0, coefs.clone()).unwrap();
    let l2 = coefs.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt();
    assert!((explicit.strength() - l2).abs() < 1e-14);
    assert!((explicit.scaled(10.0).strength() - 10.0 * l2).abs() < 1e-12);
}
