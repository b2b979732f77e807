//! Finite-difference residuals of the Maxwell system and its elliptic form on
//! small Cartesian patches.

use num_complex::Complex64;

use super::{push_field, push_tensor, CMatrix, CVector, DiffeoMap, GeomapError, Point, TensorPair};

type FieldFn<'a> = &'a (dyn Fn(&Point) -> CVector + Sync);
type MaterialFn<'a> = &'a (dyn Fn(&Point) -> TensorPair + Sync);

/// A cube of `points³` equispaced nodes centred at `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Patch {
    pub center: Point,
    pub half_width: f64,
    pub points: usize,
}

impl Patch {
    pub fn new(center: Point, half_width: f64, points: usize) -> Result<Self, GeomapError> {
        if points < 5 {
            return Err(GeomapError::GridTooCoarse { points });
        }
        if !(half_width > 0.0) {
            return Err(GeomapError::InvalidParameter(format!(
                "patch half-width must be positive, got {half_width}"
            )));
        }
        Ok(Self {
            center,
            half_width,
            points,
        })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    pub fn nodes(&self) -> Vec<Point> {
        let h = self.spacing();
        let start = self.center - Point::repeat(self.half_width);
        let n = self.points;
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out.push(start + Point::new(i as f64 * h, j as f64 * h, k as f64 * h));
                }
            }
        }
        out
    }
}

/// `ε_{abc}`: the sign of the permutation `(a, b, c)` of `(0, 1, 2)`, zero otherwise.
pub fn levi_civita(a: usize, b: usize, c: usize) -> i8 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
        _ => 0,
    }
}

fn unit(j: usize) -> Point {
    let mut e = Point::zeros();
    e[j] = 1.0;
    e
}

/// Central-difference Jacobian of a complex vector field: `out[(i, j)] = ∂_j F_i`.
fn gradient(f: FieldFn, x: &Point, h: f64) -> CMatrix {
    let mut g = CMatrix::zeros();
    for j in 0..3 {
        let e = unit(j) * h;
        let d = (f(&(x + e)) - f(&(x - e))) / Complex64::new(2.0 * h, 0.0);
        g.set_column(j, &d);
    }
    g
}

fn curl_from_gradient(g: &CMatrix) -> CVector {
    CVector::new(
        g[(2, 1)] - g[(1, 2)],
        g[(0, 2)] - g[(2, 0)],
        g[(1, 0)] - g[(0, 1)],
    )
}

/// Supremum over the patch of `|∇×E - ikμH|` and `|∇×H + ikεE|`.
pub fn curl_residual(
    e: FieldFn,
    h: FieldFn,
    materials: MaterialFn,
    k: f64,
    patch: &Patch,
) -> Result<(f64, f64), GeomapError> {
    let step = patch.spacing();
    let ik = Complex64::new(0.0, k);
    let mut re: f64 = 0.0;
    let mut rh: f64 = 0.0;
    for x in patch.nodes() {
        let m = materials(&x);
        let ce = curl_from_gradient(&gradient(e, &x, step));
        let ch = curl_from_gradient(&gradient(h, &x, step));
        re = re.max((ce - m.mu * h(&x) * ik).norm());
        rh = rh.max((ch + m.eps * e(&x) * ik).norm());
    }
    Ok((re, rh))
}

/// Residuals before and after a change of variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovResidual {
    /// Residuals of the original fields on a patch of the same spacing around `T⁻¹(center)`.
    pub input: (f64, f64),
    /// Residuals of the pushed fields with the pushed tensors on the requested patch.
    pub output: (f64, f64),
}

/// Push `(E, H)` and the tensors through `map` and measure the Maxwell residual
/// on `patch` (given in the codomain).
pub fn change_of_variables_residual(
    map: &DiffeoMap,
    e: FieldFn,
    h: FieldFn,
    materials: MaterialFn,
    k: f64,
    patch: &Patch,
) -> Result<CovResidual, GeomapError> {
    if patch.points < 5 {
        return Err(GeomapError::GridTooCoarse {
            points: patch.points,
        });
    }
    let pre_center = map.inverse(&patch.center)?;
    let pre_patch = Patch::new(pre_center, patch.half_width, patch.points)?;
    let input = curl_residual(e, h, materials, k, &pre_patch)?;

    // Any failure inside the closures is reported as NaN so it cannot pass silently.
    let nan = CVector::repeat(Complex64::new(f64::NAN, f64::NAN));
    let pushed = |f: FieldFn, y: &Point| -> CVector {
        map.inverse(y)
            .and_then(|x| push_field(map, &x, &f(&x)))
            .map(|(_, v)| v)
            .unwrap_or(nan)
    };
    let e2 = |y: &Point| pushed(e, y);
    let h2 = |y: &Point| pushed(h, y);
    let m2 = |y: &Point| {
        push_tensor(map, materials, y).unwrap_or(TensorPair {
            eps: CMatrix::repeat(Complex64::new(f64::NAN, 0.0)),
            mu: CMatrix::repeat(Complex64::new(f64::NAN, 0.0)),
        })
    };
    let output = curl_residual(&e2, &h2, &m2, k, patch)?;
    if !(output.0.is_finite() && output.1.is_finite()) {
        return Err(GeomapError::Singular {
            point: [patch.center[0], patch.center[1], patch.center[2]],
        });
    }
    Ok(CovResidual { input, output })
}

/// Supremum over the patch and `a = 1, 2, 3` of the residuals of
/// `div(μ∇H_a) + div(∂_aμ H - ikμ εᵃ εE)` and
/// `div(ε∇E_a) + div(∂_aε E + ikε εᵃ μH)`, where `(εᵃ)_{bc} = ε_{abc}`.
pub fn elliptic_residual(
    e: FieldFn,
    h: FieldFn,
    materials: MaterialFn,
    k: f64,
    patch: &Patch,
) -> Result<f64, GeomapError> {
    let step = patch.spacing();
    let ik = Complex64::new(0.0, k);
    let levi = |a: usize| {
        CMatrix::from_fn(|b, c| Complex64::new(levi_civita(a, b, c) as f64, 0.0))
    };
    let dmat = |x: &Point, a: usize| -> TensorPair {
        let d = unit(a) * step;
        let (p, m) = (materials(&(x + d)), materials(&(x - d)));
        let s = Complex64::new(0.5 / step, 0.0);
        TensorPair {
            eps: (p.eps - m.eps) * s,
            mu: (p.mu - m.mu) * s,
        }
    };
    // Flux vectors whose divergence should vanish.
    let flux = |x: &Point, a: usize| -> (CVector, CVector) {
        let m = materials(x);
        let dm = dmat(x, a);
        let ea = levi(a);
        let gh = gradient(h, x, step);
        let ge = gradient(e, x, step);
        let grad_ha = gh.row(a).transpose();
        let grad_ea = ge.row(a).transpose();
        let (ev, hv) = (e(x), h(x));
        let wh = m.mu * grad_ha + dm.mu * hv - m.mu * ea * m.eps * ev * ik;
        let we = m.eps * grad_ea + dm.eps * ev + m.eps * ea * m.mu * hv * ik;
        (wh, we)
    };
    let mut worst: f64 = 0.0;
    for x in patch.nodes() {
        for a in 0..3 {
            let mut div_h = Complex64::new(0.0, 0.0);
            let mut div_e = Complex64::new(0.0, 0.0);
            for j in 0..3 {
                let d = unit(j) * step;
                let (p, m) = (flux(&(x + d), a), flux(&(x - d), a));
                div_h += (p.0[j] - m.0[j]) / (2.0 * step);
                div_e += (p.1[j] - m.1[j]) / (2.0 * step);
            }
            worst = worst.max(div_h.norm()).max(div_e.norm());
        }
    }
    Ok(worst)
}
