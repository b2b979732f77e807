//! Spherical and cylindrical Bessel functions of integer order.
//!
//! Raw values follow the usual conventions (`j_n`, `y_n`, `h_n = j_n + i y_n`,
//! `J_n`, `Y_n`). The hat-normalized variants remove the leading small-argument
//! behaviour so that high orders at small radii stay representable:
//!
//! | function | definition | as `z -> 0` |
//! |---|---|---|
//! | `ĵ_n` | `(2n+1)!! j_n` | `z^n` |
//! | `ŷ_n` | `-y_n / (2n-1)!!` | `z^(-n-1)` |
//! | `Ĵ_n` | `2^n n! J_n` | `z^n` |
//! | `Ŷ_n` | `πi / (2^n (n-1)!) Y_n` | `-i z^(-n)` |

mod cylindrical;
mod spherical;

pub use cylindrical::{cylindrical_bessel, CylindricalArrays};
pub use spherical::{spherical_bessel, spherical_bessel_real, SphericalArrays};

use num_complex::Complex64;

/// Which family of functions to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BesselKind {
    /// Regular function (`j_n` or `J_n`).
    Regular,
    /// Irregular function (`y_n` or `Y_n`).
    Irregular,
    /// Outgoing Hankel function (`h_n = j_n + i y_n`, `H_n = J_n + i Y_n`).
    Outgoing,
}

/// Raw or hat normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    Raw,
    Hat,
}

/// A function value together with its derivative in the argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEval {
    pub order: usize,
    pub argument: Complex64,
    pub value: Complex64,
    pub derivative: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum SpecfunError {
    #[error("{function} is not defined at z = 0")]
    ZeroArgument { function: &'static str },
    #[error("{function} requires order n >= {min}, got {order}")]
    Order {
        function: &'static str,
        order: usize,
        min: usize,
    },
    #[error("{what} is not supported")]
    Unsupported { what: &'static str },
    #[error("argument {argument} is not finite")]
    NonFinite { argument: Complex64 },
    #[error("raw {function} of order {order} at |z| = {modulus:e} is not representable in f64; use the hat normalization")]
    Unrepresentable {
        function: &'static str,
        order: usize,
        modulus: f64,
    },
}

/// Double factorials `(2n+1)!!` for `n = 0..=nmax`, built by repeated products.
///
/// `odd_double_factorials(n)[k] = 1 * 3 * ... * (2k+1)`.
pub fn odd_double_factorials(nmax: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    let mut acc = 1.0;
    for k in 0..=nmax {
        acc *= (2 * k + 1) as f64;
        out.push(acc);
    }
    out
}

/// `(2n-1)!!` with the convention `(-1)!! = 1`.
pub(crate) fn lower_double_factorial(table: &[f64], n: usize) -> f64 {
    if n == 0 {
        1.0
    } else {
        table[n - 1]
    }
}

/// Wronskian residuals at real argument `r > 0` for order `n`.
///
/// Returns `(|j_n y_n' - j_n' y_n - 1/r^2|, |J_n Y_n' - J_n' Y_n - 2/(π r)|)`,
/// computed through the hat functions so large orders at small radii do not
/// overflow. The hat Wronskians are compared against their exact values and the
/// residual is reported relative to the raw Wronskian scale.
pub fn wronskian_residuals(n: usize, r: f64) -> Result<(f64, f64), SpecfunError> {
    if r == 0.0 {
        return Err(SpecfunError::ZeroArgument {
            function: "wronskian_residuals",
        });
    }
    let z = Complex64::new(r, 0.0);
    let sph = SphericalArrays::new(n, z)?;
    // j y' - j' y = 1/z^2  <=>  ĵ ŷ' - ĵ' ŷ = -(2n+1)/z^2.
    let w_hat = sph.j_hat[n] * sph.y_hat_prime[n] - sph.j_hat_prime[n] * sph.y_hat[n];
    let exact_hat = -((2 * n + 1) as f64) / (r * r);
    let sph_res = (w_hat - exact_hat).norm() / (2 * n + 1) as f64;

    let cyl_res = if n == 0 {
        let c = CylindricalArrays::new(0, z)?;
        let w = c.j[0] * c.y_prime[0] - c.j_prime[0] * c.y[0];
        (w - 2.0 / (std::f64::consts::PI * r)).norm()
    } else {
        let c = CylindricalArrays::new(n, z)?;
        // Ĵ Ŷ' - Ĵ' Ŷ = 2n i / z.
        let w_hat = c.j_hat[n] * c.y_hat_prime[n] - c.j_hat_prime[n] * c.y_hat[n];
        let exact_hat = Complex64::new(0.0, 2.0 * n as f64 / r);
        (w_hat - exact_hat).norm() / (2.0 * n as f64) * 2.0 / std::f64::consts::PI
    };
    Ok((sph_res, cyl_res))
}

/// Complex division that stays finite when `|b|^2` would leave the f64 range.
pub(crate) fn cdiv(a: Complex64, b: Complex64) -> Complex64 {
    let m = b.norm();
    (a * (b.conj() / m)) / m
}

pub(crate) fn check_argument(z: Complex64, function: &'static str) -> Result<(), SpecfunError> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(SpecfunError::NonFinite { argument: z });
    }
    if z == Complex64::new(0.0, 0.0) {
        return Err(SpecfunError::ZeroArgument { function });
    }
    Ok(())
}
