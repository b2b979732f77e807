//! Closed-form vacuum solutions of `∇×E = ikH`, `∇×H = -ikE` used as oracles.
#![allow(dead_code)]

use cloak::geomap::{CVector, Point};
use num_complex::Complex64;

pub fn cvec(v: [f64; 3]) -> CVector {
    CVector::new(
        Complex64::new(v[0], 0.0),
        Complex64::new(v[1], 0.0),
        Complex64::new(v[2], 0.0),
    )
}

/// `E = p e^{ik d·x}`, `H = (d × p) e^{ik d·x}` with `d` a unit vector, `p ⟂ d`.
pub fn plane_wave(k: f64, d: Point, p: Point, x: &Point) -> (CVector, CVector) {
    let phase = Complex64::new(0.0, k * d.dot(x)).exp();
    (cvec([p[0], p[1], p[2]]) * phase, cvec({
        let q = d.cross(&p);
        [q[0], q[1], q[2]]
    }) * phase)
}

/// Field of a point dipole with moment `p` at `x0`, source `j = p δ_{x0}`.
pub fn dipole(k: f64, x0: Point, p: CVector, x: &Point) -> (CVector, CVector) {
    let d = x - x0;
    let r = d.norm();
    let u = d / r;
    let uc = cvec([u[0], u[1], u[2]]);
    let i = Complex64::i();
    let kr = k * r;
    let g = (i * kr).exp() / (4.0 * std::f64::consts::PI * r);
    let up = uc.dot(&p);
    let a = 1.0 + i / kr - 1.0 / (kr * kr);
    let b = -1.0 - 3.0 * i / kr + 3.0 / (kr * kr);
    let e = (p * a + uc * (up * b)) * (i * k * g);
    let h = uc.cross(&p) * (g * (i * k - 1.0 / r));
    (e, h)
}
