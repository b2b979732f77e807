use cloak::media::{MaterialLayout, PowerTerm, RadialCoefficient};
use cloak::shellnorm::*;
use cloak::solver::{solve, FieldExpansion, ModeIndex, Polarization, SolverOptions};
use cloak::specfun::{spherical_bessel_real, BesselKind, SphericalArrays};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `(j_n, j_n', y_n, y_n')` at a real argument.
fn bessel(n: usize, x: f64) -> (f64, f64, f64, f64) {
    let j = spherical_bessel_real(n, x, BesselKind::Regular).unwrap();
    let y = spherical_bessel_real(n, x, BesselKind::Irregular).unwrap();
    (j.value.re, j.derivative.re, y.value.re, y.derivative.re)
}

fn single(dim: Dimension, n: usize, a: Complex64, b: Complex64) -> HelmholtzCoefficients {
    let m = if dim == Dimension::Two { n as i32 } else { 0 };
    HelmholtzCoefficients::new(dim, 1.0, vec![ModeCoefficients { n, m, a, b }], None).unwrap()
}

#[test]
fn bold_norm_examples() {
    let zero = ShellTrace::new(1.0, Dimension::Three, vec![], None).unwrap();
    assert_eq!(bold_h_norm(&zero), 0.0);

    let one = ShellTrace::new(
        1.0,
        Dimension::Three,
        vec![TraceMode { n: 1, m: 0, value: c(1.0, 0.0), derivative: c(0.0, 0.0) }],
        None,
    )
    .unwrap();
    assert_eq!(bold_h_norm(&one), 1.0);

    // ĵ₁ = 3 j₁ at r = 2, from the closed form j₁(z) = sin z / z² - cos z / z.
    let z: f64 = 2.0;
    let j1 = z.sin() / (z * z) - z.cos() / z;
    // j₁' = j₀ - 2 j₁ / z.
    let j1p = z.sin() / z - 2.0 * j1 / z;
    let expected = (9.0 * j1 * j1 + 9.0 * j1p * j1p).sqrt();
    let t = single(Dimension::Three, 1, c(1.0, 0.0), c(0.0, 0.0)).trace(2.0).unwrap();
    assert!((bold_h_norm(&t) - expected).abs() < 1e-14 * expected);
}

#[test]
fn traces_use_hat_functions_and_radial_derivatives() {
    let v = single(Dimension::Three, 3, c(0.5, -1.0), c(0.25, 0.0));
    let (k, r) = (1.0, 1.7);
    let t = v.trace(r).unwrap();
    let a = SphericalArrays::new(3, c(k * r, 0.0)).unwrap();
    // ĵ₃ = 7!! j₃ = 105 j₃, ŷ₃ = -y₃ / 5!! = -y₃ / 15.
    let (j, jp, y, yp) = bessel(3, k * r);
    let value = c(0.5, -1.0) * 105.0 * j - c(0.25, 0.0) * y / 15.0;
    let deriv = c(0.5, -1.0) * 105.0 * jp - c(0.25, 0.0) * yp / 15.0;
    assert!((t.modes[0].value - value).norm() < 1e-12 * value.norm());
    assert!((t.modes[0].derivative - deriv).norm() < 1e-12 * deriv.norm());
    assert!((a.j_hat[3] - 105.0 * j).norm() < 1e-12);
    let rows = t.rows();
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].0, rows[0].1), (3, 0));
    assert!((rows[0].2 - value.norm()).abs() < 1e-15 * value.norm().max(1.0));

    // Wavenumber scaling: derivative picks up a factor k.
    let w = HelmholtzCoefficients::new(Dimension::Three, 2.0, v.modes.clone(), None).unwrap();
    let tw = w.trace(r / 2.0).unwrap();
    assert!((tw.modes[0].value - value).norm() < 1e-12 * value.norm());
    assert!((tw.modes[0].derivative - deriv * 2.0).norm() < 1e-12 * deriv.norm());
}

#[test]
fn two_dimensional_zero_mode_enters_by_its_coefficients() {
    let v = HelmholtzCoefficients::new(Dimension::Two, 1.0, vec![], Some((c(3.0, 0.0), c(0.0, 4.0)))).unwrap();
    for r in [0.5, 1.0, 7.0] {
        let t = v.trace(r).unwrap();
        assert_eq!(bold_h_norm(&t), 5.0);
        assert_eq!(t.rows(), vec![(0, 0, 3.0, 4.0)]);
    }
    assert_eq!(v.coefficient_norm(2.0), 5.0);
}

#[test]
fn mode_validation() {
    assert!(matches!(
        HelmholtzCoefficients::new(Dimension::Three, 1.0, vec![ModeCoefficients { n: 2, m: 3, a: c(1.0, 0.0), b: c(0.0, 0.0) }], None),
        Err(ShellnormError::Mode { n: 2, m: 3, dim: 3 })
    ));
    assert!(HelmholtzCoefficients::new(Dimension::Two, 1.0, vec![ModeCoefficients { n: 2, m: 1, a: c(1.0, 0.0), b: c(0.0, 0.0) }], None).is_err());
    assert!(HelmholtzCoefficients::new(Dimension::Three, 1.0, vec![ModeCoefficients { n: 0, m: 0, a: c(1.0, 0.0), b: c(0.0, 0.0) }], None).is_err());
    assert!(HelmholtzCoefficients::new(Dimension::Three, 1.0, vec![], Some((c(1.0, 0.0), c(0.0, 0.0)))).is_err());
    assert!(matches!(HelmholtzCoefficients::new(Dimension::Three, 0.0, vec![], None), Err(ShellnormError::Wavenumber(_))));
    assert!(ShellTrace::new(1.0, Dimension::Two, vec![TraceMode { n: 1, m: 0, value: c(1.0, 0.0), derivative: c(0.0, 0.0) }], None).is_err());
    let v = single(Dimension::Three, 1, c(1.0, 0.0), c(0.0, 0.0));
    assert!(matches!(three_sphere_check_2d(&v, [0.5, 1.0, 2.0]), Err(ShellnormError::Dimension { expected: 2 })));
    let w = single(Dimension::Two, 1, c(1.0, 0.0), c(0.0, 0.0));
    assert!(matches!(three_sphere_check_3d(&w, [0.5, 1.0, 2.0]), Err(ShellnormError::Dimension { expected: 3 })));
}

#[test]
fn zero_solution_has_unit_ratio() {
    for dim in [Dimension::Three, Dimension::Two] {
        let rep = three_sphere_check(&HelmholtzCoefficients::zero(dim, 1.0), [0.5, 2.0, 10.0]).unwrap();
        assert_eq!((rep.lhs, rep.rhs, rep.ratio), (0.0, 0.0, 1.0));
    }
}

#[test]
fn radii_out_of_order_are_rejected() {
    let v = single(Dimension::Three, 2, c(1.0, 0.0), c(0.0, 0.0));
    for radii in [[2.0, 1.0, 3.0], [1.0, 3.0, 2.0], [0.0, 1.0, 2.0], [1.0, 1.0, 2.0], [-1.0, 1.0, 2.0]] {
        assert!(matches!(three_sphere_check_3d(&v, radii), Err(ShellnormError::Radii(_))));
        assert!(interpolation_exponent(radii).is_err());
    }
}

/// Radii for the single-mode checks: `(kR₃)² / n` must be small for the
/// large-degree regime to set in by `n = 40`.
const SINGLE_MODE_RADII: [f64; 3] = [0.5, 1.0, 2.0];

#[test]
fn single_regular_modes_stay_in_a_bounded_band() {
    for dim in [Dimension::Three, Dimension::Two] {
        for n in 1..=40 {
            let r = three_sphere_check(&HelmholtzCoefficients::single_regular(dim, 1.0, n).unwrap(), SINGLE_MODE_RADII)
                .unwrap()
                .ratio;
            assert!((1.0 / 3.0..=3.0).contains(&r), "{dim:?} n = {n}: {r}");
        }
    }
}

#[test]
fn single_mode_ratio_approaches_the_power_law_limit() {
    let limit = single_mode_limit(SINGLE_MODE_RADII).unwrap();
    for dim in [Dimension::Three, Dimension::Two] {
        let at = |n| {
            three_sphere_check(&HelmholtzCoefficients::single_regular(dim, 1.0, n).unwrap(), SINGLE_MODE_RADII)
                .unwrap()
                .ratio
        };
        assert!((at(40) / limit - 1.0).abs() < 0.1);
        // The error shrinks with the degree.
        assert!((at(40) / limit - 1.0).abs() < (at(10) / limit - 1.0).abs());
    }
}

#[test]
fn monte_carlo_ratios_stay_bounded() {
    for dim in [Dimension::Three, Dimension::Two] {
        let reps = monte_carlo_three_sphere(dim, 1.0, [0.5, 2.0, 10.0], 200, 40, 11).unwrap();
        assert_eq!(reps.len(), 200);
        let first = reps[..100].iter().map(|r| r.ratio).fold(0.0, f64::max);
        let second = reps[100..].iter().map(|r| r.ratio).fold(0.0, f64::max);
        assert!(first.max(second) <= 50.0);
        assert!(second <= 1.5 * first);
        assert!(reps.iter().all(|r| r.ratio.is_finite() && r.ratio > 0.0));
        // Deterministic for a fixed seed.
        assert_eq!(reps, monte_carlo_three_sphere(dim, 1.0, [0.5, 2.0, 10.0], 200, 40, 11).unwrap());
    }
}

#[test]
fn three_dimensional_norm_equivalence_has_bounded_factors() {
    for n in 1..=40 {
        for (a, b) in [(c(1.0, 0.0), c(0.0, 0.0)), (c(0.0, 0.0), c(1.0, 0.0)), (c(0.3, 1.0), c(-2.0, 0.5))] {
            let v = single(Dimension::Three, n, a, b);
            for i in 0..=35 {
                let r = 0.5 + 0.1 * i as f64;
                let q = bold_h_norm(&v.trace(r).unwrap()) / v.coefficient_norm(r);
                assert!((0.1..=10.0).contains(&q), "n = {n}, r = {r}: {q}");
            }
        }
    }
}

#[test]
fn two_dimensional_weights_are_asymmetric() {
    // The regular family is equivalent with bounded factors; the singular one
    // carries `n⁻¹` on the coefficient side while the trace norm carries `n`,
    // so the factor grows linearly in the degree.
    for n in 1..=40 {
        for i in 0..=35 {
            let r = 0.5 + 0.1 * i as f64;
            let reg = single(Dimension::Two, n, c(1.0, 0.0), c(0.0, 0.0));
            let q = bold_h_norm(&reg.trace(r).unwrap()) / reg.coefficient_norm(r);
            assert!((0.1..=10.0).contains(&q), "regular n = {n}, r = {r}: {q}");
            let sing = single(Dimension::Two, n, c(0.0, 0.0), c(1.0, 0.0));
            let q = bold_h_norm(&sing.trace(r).unwrap()) / sing.coefficient_norm(r) / n as f64;
            assert!((0.1..=10.0).contains(&q), "singular n = {n}, r = {r}: {q}");
        }
    }
    let sing = single(Dimension::Two, 40, c(0.0, 0.0), c(1.0, 0.0));
    assert!(bold_h_norm(&sing.trace(1.0).unwrap()) / sing.coefficient_norm(1.0) > 20.0);
}

#[test]
fn rate_bookkeeping_values_and_limits() {
    let rep = rate_bookkeeping(1.0, 1.0, 10.0).unwrap();
    assert!((rep.alpha - 1.0 / 7.0).abs() < 1e-15);
    let beta = (10.0f64 / 4.0).ln() / 5.0f64.ln();
    assert!((rep.beta - beta).abs() < 1e-15);
    assert!((rep.rho - rep.alpha / (1.0 - (1.0 - rep.alpha) * beta)).abs() < 1e-15);

    // Both limits are logarithmic in r₃/r₂.
    let rhos: Vec<RateReport> = [1e3, 1e12, 1e100, 1e300].iter().map(|&r3| rate_bookkeeping(2.0, 1.0, r3).unwrap()).collect();
    assert!(rhos.windows(2).all(|w| w[1].rho > w[0].rho && w[1].beta > w[0].beta));
    let far = rhos[3];
    assert!((far.beta - 1.0).abs() < 0.01);
    assert!((far.rho - 1.0).abs() < 0.05);

    let near = rate_bookkeeping(1.5, 1.0, 4.0 * (1.0 + 1e-9)).unwrap();
    assert!(near.beta.abs() < 1e-8);
    assert!((near.rho - near.alpha).abs() < 1e-8);

    assert!(matches!(rate_bookkeeping(1.0, 1.0, 4.0), Err(ShellnormError::Rate(_))));
    assert!(matches!(rate_bookkeeping(1.0, 1.0, 3.0), Err(ShellnormError::Rate(_))));
    assert!(matches!(rate_bookkeeping(0.99, 1.0, 10.0), Err(ShellnormError::Rate(_))));
    assert!(rate_bookkeeping(f64::NAN, 1.0, 10.0).is_err());
}

#[test]
fn probe_needs_three_samples_and_a_grid() {
    let radii = [0.5, 1.0, 2.0];
    assert!(matches!(system_three_sphere_probe(&[[1.0; 3]; 2], radii, &default_q_grid()), Err(ShellnormError::TooFewSamples(2))));
    assert!(matches!(system_three_sphere_probe(&[[1.0; 3]; 3], radii, &[]), Err(ShellnormError::EmptyGrid)));
    assert!(matches!(system_three_sphere_probe(&[[1.0; 3]; 3], [1.0, 0.5, 2.0], &[1.0]), Err(ShellnormError::Radii(_))));
}

#[test]
fn probe_on_zero_fields_gives_unit_constant() {
    let rep = system_three_sphere_probe(&[[0.0; 3]; 4], [0.5, 1.0, 2.0], &default_q_grid()).unwrap();
    assert_eq!(rep.constant, 1.0);
    assert_eq!(rep.scan.len(), 15);
    assert_eq!(rep.scan[0].0, 1.0);
    assert_eq!(rep.scan[14].0, 8.0);
}

#[test]
fn probe_exponent_and_minimum() {
    let radii = [0.5, 1.0, 2.0];
    let q = 2.0;
    let a = system_exponent(q, radii).unwrap();
    assert!((a - (1.0 - 0.25) / (4.0 - 0.25)).abs() < 1e-15);
    let samples = [[1.0, 2.0, 3.0], [2.0, 1.0, 1.0], [0.5, 0.7, 4.0]];
    let rep = system_three_sphere_probe(&samples, radii, &default_q_grid()).unwrap();
    for &(q, alpha, cq) in &rep.scan {
        let direct = samples
            .iter()
            .map(|s| s[1] / (s[0].powf(alpha) * s[2].powf(1.0 - alpha)))
            .fold(0.0, f64::max);
        assert!((cq - direct).abs() < 1e-14 * direct);
        assert!((alpha - system_exponent(q, radii).unwrap()).abs() < 1e-15);
        assert!(rep.constant <= cq);
    }
    assert!(rep.scan.iter().any(|&(q, _, cq)| q == rep.best_q && cq == rep.constant));
}

fn graded(slope: f64) -> MaterialLayout {
    let eps = RadialCoefficient { terms: vec![PowerTerm { coef: c(2.0, 0.0), power: 0.0 }, PowerTerm { coef: c(slope, 0.0), power: 1.0 }] };
    let mu = RadialCoefficient { terms: vec![PowerTerm { coef: c(1.5, 0.0), power: 0.0 }, PowerTerm { coef: c(0.25 * slope, 0.0), power: 2.0 }] };
    MaterialLayout::layered(&[(3.0, eps, mu)]).unwrap()
}

#[test]
fn system_trace_norm_of_a_vacuum_te_mode_matches_closed_form() {
    let (k, r, n) = (1.3, 0.9, 2usize);
    let mode = ModeIndex::new(n, 1, Polarization::TE).unwrap();
    let field = FieldExpansion::incident(k, &[(mode, c(1.0, 0.0))]);
    let (j, jp, _, _) = bessel(n, k * r);
    let z = k * r;
    let nn = (n * (n + 1)) as f64;
    let jpp = -2.0 / z * jp - (1.0 - nn / (z * z)) * j;
    let l = nn.sqrt();
    let i = c(0.0, 1.0);
    // E = j Φ̂, H_r = iL j/(kr), H_ψ = (i/k)(j/r + k j').
    let comps = [
        (c(j, 0.0), c(k * jp, 0.0)),
        (i * l * j / (k * r), i * l / k * (k * jp / r - j / (r * r))),
        (i / k * (j / r + k * jp), i / k * (k * jp / r - j / (r * r) + k * k * jpp)),
    ];
    let nf = n as f64;
    let expected: f64 = comps.iter().map(|(v, d)| (nf * v.norm_sqr() + d.norm_sqr() / nf).sqrt()).sum();
    let got = system_trace_norm(&field, r).unwrap();
    assert!((got - expected).abs() < 1e-7 * expected, "{got} vs {expected}");

    let doubled = FieldExpansion::incident(k, &[(mode, c(0.0, 2.0))]);
    assert!((system_trace_norm(&doubled, r).unwrap() - 2.0 * got).abs() < 1e-12 * got);
}

fn probe_samples(slope: f64) -> Vec<SphereNorms> {
    let k = 1.0;
    let sols = solve(&graded(slope), k, 3, SolverOptions::default()).unwrap();
    let sets: [&[(usize, i32, Polarization, Complex64)]; 4] = [
        &[(1, 0, Polarization::TE, c(1.0, 0.0))],
        &[(2, 1, Polarization::TM, c(0.0, 1.0))],
        &[(3, -2, Polarization::TE, c(0.5, 0.5)), (1, 1, Polarization::TM, c(1.0, 0.0))],
        &[(2, 0, Polarization::TE, c(1.0, 0.0)), (3, 3, Polarization::TM, c(0.2, -0.4))],
    ];
    sets.iter()
        .map(|set| {
            let co: Vec<_> = set.iter().map(|&(n, m, p, a)| (ModeIndex::new(n, m, p).unwrap(), a)).collect();
            let f = FieldExpansion::from_solutions(k, &co, &sols).unwrap();
            [0.5, 1.0, 2.0].map(|r| system_trace_norm(&f, r).unwrap())
        })
        .collect()
}

#[test]
fn probe_on_solved_fields_in_a_graded_medium() {
    let radii = [0.5, 1.0, 2.0];
    let samples = probe_samples(1.0);
    assert!(samples.iter().flatten().all(|v| v.is_finite() && *v > 0.0));
    let rep = system_three_sphere_probe(&samples, radii, &default_q_grid()).unwrap();
    assert!(rep.constant.is_finite() && rep.constant > 0.0);
    // Steeper grading is reported, not asserted.
    let steeper = system_three_sphere_probe(&probe_samples(2.0), radii, &default_q_grid()).unwrap();
    assert!(steeper.constant.is_finite());
}

proptest! {
    #[test]
    fn exponent_interpolates_the_middle_radius(r1 in 0.01f64..10.0, f2 in 1.001f64..10.0, f3 in 1.001f64..10.0) {
        let radii = [r1, r1 * f2, r1 * f2 * f3];
        let a = interpolation_exponent(radii).unwrap();
        prop_assert!(a > 0.0 && a < 1.0);
        let rebuilt = radii[0].powf(a) * radii[2].powf(1.0 - a);
        prop_assert!((rebuilt - radii[1]).abs() <= 1e-12 * radii[1]);
    }

    #[test]
    fn ratio_is_scale_invariant(n in 1usize..30, re in -3.0f64..3.0, im in -3.0f64..3.0, s in 0.01f64..100.0) {
        prop_assume!(re.abs() + im.abs() > 1e-3);
        let radii = [0.5, 1.0, 2.0];
        let v = single(Dimension::Three, n, c(re, im), c(0.0, 0.0));
        let w = single(Dimension::Three, n, c(re, im) * s, c(0.0, 0.0));
        let (a, b) = (three_sphere_check(&v, radii).unwrap(), three_sphere_check(&w, radii).unwrap());
        prop_assert!((a.ratio - b.ratio).abs() <= 1e-12 * a.ratio);
    }

    #[test]
    fn bold_norm_is_a_norm(vals in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0), 1..8), s in -4.0f64..4.0) {
        let mk = |f: &dyn Fn(usize, &(f64, f64, f64, f64)) -> (Complex64, Complex64)| {
            let modes = vals.iter().enumerate().map(|(i, v)| {
                let (value, derivative) = f(i, v);
                TraceMode { n: i + 1, m: 0, value, derivative }
            }).collect();
            ShellTrace::new(1.0, Dimension::Three, modes, None).unwrap()
        };
        let x = mk(&|_, v| (c(v.0, v.1), c(v.2, v.3)));
        let y = mk(&|i, v| (c(v.3, i as f64), c(v.0, -v.1)));
        let sum = mk(&|i, v| (c(v.0, v.1) + c(v.3, i as f64), c(v.2, v.3) + c(v.0, -v.1)));
        let scaled = mk(&|_, v| (c(v.0, v.1) * s, c(v.2, v.3) * s));
        prop_assert!(bold_h_norm(&sum) <= bold_h_norm(&x) + bold_h_norm(&y) + 1e-12);
        prop_assert!((bold_h_norm(&scaled) - s.abs() * bold_h_norm(&x)).abs() <= 1e-12 * (1.0 + bold_h_norm(&x)));
    }

    #[test]
    fn rate_exponents_stay_in_the_unit_interval(q in 1.0f64..8.0, ratio in 4.001f64..1e6) {
        let rep = rate_bookkeeping(q, 1.0, ratio).unwrap();
        prop_assert!(rep.alpha > 0.0 && rep.alpha < 1.0);
        prop_assert!(rep.beta > 0.0 && rep.beta < 1.0);
        prop_assert!(rep.rho >= rep.alpha && rep.rho < 1.0);
    }
}
