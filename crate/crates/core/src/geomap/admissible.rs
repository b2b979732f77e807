use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DiffeoMap, GeomapError, Point};

/// Outcome of a sampled admissibility check.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub inner_radius: f64,
    pub samples: usize,
    /// Largest relative round-trip error `|T⁻¹(T(x)) - x| / |x|` seen for either map.
    pub max_roundtrip: f64,
}

fn random_direction(rng: &mut ChaCha8Rng) -> Point {
    loop {
        let v = Point::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

fn fail(condition: &'static str, detail: String) -> GeomapError {
    GeomapError::Admissibility { condition, detail }
}

/// Radius `r₁ < r₂` whose sphere the inner map sends onto `∂B_{r₃}`, found by
/// bisection along the positive z axis.
pub fn inner_radius(f: &DiffeoMap, r2: f64, r3: f64) -> Result<f64, GeomapError> {
    if !(r3 > r2 && r2 > 0.0) {
        return Err(GeomapError::InvalidParameter(format!(
            "need r3 > r2 > 0, got r2 = {r2}, r3 = {r3}"
        )));
    }
    let axis = Point::new(0.0, 0.0, 1.0);
    let g = |r: f64| -> Result<f64, GeomapError> { Ok(f.forward(&(axis * r))?.norm() - r3) };
    let (mut lo, mut hi) = (r2 * 1e-9, r2);
    if g(lo)? <= 0.0 {
        return Err(fail(
            "inner map sends a neighbourhood of the origin outside B_r3",
            format!("|F({lo:e} e_z)| <= r3"),
        ));
    }
    if g(hi)? >= 0.0 {
        return Err(fail("inner map fixes the sphere of radius r2", "|F(r2 e_z)| >= r3".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * r2 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Sampled check that `(F, G)` is a reflecting pair for radii `r₂ < r₃`.
///
/// Conditions checked on `samples` random points each:
/// `F = id` on `∂B_{r₂}`, `F` sends `B_{r₂} \ {0}` outside `B̄_{r₂}`, `F` sends
/// `∂B_{r₁}` onto `∂B_{r₃}`, `G = id` on `∂B_{r₃}`, `G` sends the exterior of
/// `B̄_{r₃}` into `B_{r₃} \ {0}`, both maps invert correctly with nonsingular
/// Jacobians.
pub fn check_admissible_pair(
    f: &DiffeoMap,
    g: &DiffeoMap,
    r2: f64,
    r3: f64,
    samples: usize,
    seed: u64,
) -> Result<AdmissibilityReport, GeomapError> {
    let r1 = inner_radius(f, r2, r3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = 1e-9;
    let mut max_roundtrip: f64 = 0.0;
    for _ in 0..samples {
        let d = random_direction(&mut rng);

        let on2 = d * r2;
        let e = (f.forward(&on2)? - on2).norm();
        if e > tol * r2 {
            return Err(fail("F is the identity on the sphere of radius r2", format!("|F(x) - x| = {e:e}")));
        }
        let on1 = f.forward(&(d * r1))?;
        if (on1.norm() - r3).abs() > 1e-7 * r3 {
            return Err(fail(
                "F maps the sphere of radius r1 onto the sphere of radius r3",
                format!("|F(x)| = {}", on1.norm()),
            ));
        }
        let inside = d * (r2 * rng.gen_range(1e-3..0.999));
        let y = f.forward(&inside)?;
        if y.norm() <= r2 {
            return Err(fail("F maps B_r2 \\ {0} outside the closed ball of radius r2", format!("|F(x)| = {}", y.norm())));
        }
        let back = f.inverse(&y)?;
        max_roundtrip = max_roundtrip.max((back - inside).norm() / inside.norm());
        let det = f.signed_det(&inside)?;
        if !det.is_finite() || det == 0.0 {
            return Err(fail("F has a nonsingular Jacobian", format!("det = {det}")));
        }

        let on3 = d * r3;
        let e = (g.forward(&on3)? - on3).norm();
        if e > tol * r3 {
            return Err(fail("G is the identity on the sphere of radius r3", format!("|G(x) - x| = {e:e}")));
        }
        let outside = d * (r3 * rng.gen_range(1.001..50.0));
        let y = g.forward(&outside)?;
        if y.norm() >= r3 || y.norm() == 0.0 {
            return Err(fail("G maps the exterior of B_r3 into B_r3 \\ {0}", format!("|G(x)| = {}", y.norm())));
        }
        let back = g.inverse(&y)?;
        max_roundtrip = max_roundtrip.max((back - outside).norm() / outside.norm());
        let det = g.signed_det(&outside)?;
        if !det.is_finite() || det == 0.0 {
            return Err(fail("G has a nonsingular Jacobian", format!("det = {det}")));
        }
    }
    if max_roundtrip > 1e-8 {
        return Err(fail("maps invert consistently", format!("round-trip error {max_roundtrip:e}")));
    }
    Ok(AdmissibilityReport {
        inner_radius: r1,
        samples,
        max_roundtrip,
    })
}
