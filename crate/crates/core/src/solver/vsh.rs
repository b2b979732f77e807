//! Orthonormal scalar and vector spherical harmonics.
//!
//! `Y_nm` carries the Condon–Shortley phase and unit `L²(S²)` norm, with
//! `Y_{n,-m} = (-1)^m conj(Y_nm)`. The tangential fields are
//! `Ψ̂_nm = r∇Y_nm / L` and `Φ̂_nm = r̂ × Ψ̂_nm` with `L = sqrt(n(n+1))`, so
//! `{Y r̂, Ψ̂, Φ̂}` is orthonormal over the sphere for every `(n, m)`.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::geomap::{CVector, Point};

/// Spherical angles and the local orthonormal frame at a direction.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub cos_theta: f64,
    pub sin_theta: f64,
    pub phi: f64,
    pub r_hat: Vector3<f64>,
    pub theta_hat: Vector3<f64>,
    pub phi_hat: Vector3<f64>,
}

impl Frame {
    /// Frame at the direction of `x`; `None` at the origin.
    pub fn at(x: &Point) -> Option<Self> {
        let r = x.norm();
        if !(r > 0.0) {
            return None;
        }
        let rho = x[0].hypot(x[1]);
        let cos_theta = x[2] / r;
        let sin_theta = rho / r;
        let phi = x[1].atan2(x[0]);
        let (sp, cp) = phi.sin_cos();
        Some(Self {
            cos_theta,
            sin_theta,
            phi,
            r_hat: Vector3::new(sin_theta * cp, sin_theta * sp, cos_theta),
            theta_hat: Vector3::new(cos_theta * cp, cos_theta * sp, -sin_theta),
            phi_hat: Vector3::new(-sp, cp, 0.0),
        })
    }
}

/// `Y_nm`, `Ψ̂_nm`, `Φ̂_nm` at one direction for all `1 <= n <= nmax`, `|m| <= n`.
#[derive(Debug, Clone)]
pub struct AngularTable {
    pub nmax: usize,
    pub frame: Frame,
    y: Vec<Complex64>,
    psi: Vec<CVector>,
    phi: Vec<CVector>,
}

fn slot(n: usize, m: i32) -> usize {
    // n = 0 occupies slot 0.
    (n * n) as usize + (m + n as i32) as usize
}

impl AngularTable {
    pub fn new(nmax: usize, x: &Point) -> Option<Self> {
        let frame = Frame::at(x)?;
        let (p, u, tau) = legendre_tables(nmax, frame.cos_theta, frame.sin_theta);
        let size = (nmax + 1) * (nmax + 1);
        let zero = Complex64::new(0.0, 0.0);
        let mut y = vec![zero; size];
        let mut psi = vec![CVector::zeros(); size];
        let mut phi = vec![CVector::zeros(); size];
        let th = frame.theta_hat.map(|v| Complex64::new(v, 0.0));
        let ph = frame.phi_hat.map(|v| Complex64::new(v, 0.0));
        y[0] = Complex64::new(p[idx(0, 0)], 0.0);
        for n in 1..=nmax {
            let l = ((n * (n + 1)) as f64).sqrt();
            for m in -(n as i32)..=(n as i32) {
                let am = m.unsigned_abs() as usize;
                let sign = if m < 0 && am % 2 == 1 { -1.0 } else { 1.0 };
                let e = Complex64::from_polar(1.0, m as f64 * frame.phi);
                let pv = sign * p[idx(n, am)];
                let tv = sign * tau[idx(n, am)];
                // m P/sinθ, finite at the poles
                let mu = m as f64 * sign * u[idx(n, am)];
                let s = slot(n, m);
                y[s] = e * pv;
                let dtheta = e * (tv / l);
                let dphi = e * Complex64::new(0.0, mu / l);
                psi[s] = th * dtheta + ph * dphi;
                phi[s] = ph * dtheta - th * dphi;
            }
        }
        Some(Self { nmax, frame, y, psi, phi })
    }

    pub fn y(&self, n: usize, m: i32) -> Complex64 {
        self.y[slot(n, m)]
    }

    pub fn psi(&self, n: usize, m: i32) -> &CVector {
        &self.psi[slot(n, m)]
    }

    pub fn phi(&self, n: usize, m: i32) -> &CVector {
        &self.phi[slot(n, m)]
    }

    /// `c_r Y r̂ + c_ψ Ψ̂ + c_φ Φ̂` as a Cartesian vector.
    pub fn synthesize(&self, n: usize, m: i32, c: &[Complex64; 3]) -> CVector {
        let rh = self.frame.r_hat.map(|v| Complex64::new(v, 0.0));
        rh * (c[0] * self.y(n, m)) + self.psi(n, m) * c[1] + self.phi(n, m) * c[2]
    }
}

fn idx(n: usize, m: usize) -> usize {
    n * (n + 1) / 2 + m
}

/// Normalized associated Legendre values `P̄_n^m(cosθ)` (so that
/// `Y_nm = P̄_n^m e^{imφ}`), `P̄_n^m / sinθ` for `m >= 1`, and `dP̄_n^m/dθ`,
/// for `0 <= m <= n <= nmax`, packed by `idx`.
fn legendre_tables(nmax: usize, x: f64, s: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let size = idx(nmax, nmax) + 1;
    let mut p = vec![0.0; size];
    let mut u = vec![0.0; size];
    let mut tau = vec![0.0; size];
    let upward = |v: &mut Vec<f64>, m: usize| {
        for n in (m + 1)..=nmax {
            let nf = n as f64;
            let mf = m as f64;
            let a = ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt();
            let prev2 = if n >= m + 2 {
                let b = (((nf - 1.0).powi(2) - mf * mf) / (4.0 * (nf - 1.0).powi(2) - 1.0)).sqrt();
                b * v[idx(n - 2, m)]
            } else {
                0.0
            };
            v[idx(n, m)] = a * (x * v[idx(n - 1, m)] - prev2);
        }
    };
    // Sectoral seeds: P̄_m^m = -sqrt((2m+1)/(2m)) sinθ P̄_{m-1}^{m-1}.
    let mut pmm = (0.25 / PI).sqrt();
    p[idx(0, 0)] = pmm;
    for m in 1..=nmax {
        let c = -((2.0 * m as f64 + 1.0) / (2.0 * m as f64)).sqrt();
        u[idx(m, m)] = c * pmm;
        pmm *= c * s;
        p[idx(m, m)] = pmm;
    }
    for m in 0..=nmax {
        upward(&mut p, m);
        if m >= 1 {
            upward(&mut u, m);
        }
    }
    for n in 1..=nmax {
        let nf = n as f64;
        tau[idx(n, 0)] = (nf * (nf + 1.0)).sqrt() * s * u[idx(n, 1)];
        for m in 1..=n {
            let mf = m as f64;
            let prev = if n > m {
                ((2.0 * nf + 1.0) / (2.0 * nf - 1.0) * (nf * nf - mf * mf)).sqrt() * u[idx(n - 1, m)]
            } else {
                0.0
            };
            tau[idx(n, m)] = nf * x * u[idx(n, m)] - prev;
        }
    }
    (p, u, tau)
}
