use num_complex::Complex64;

use super::{
    cdiv, check_argument, lower_double_factorial, odd_double_factorials, BesselEval, BesselKind,
    Normalization, SpecfunError,
};

/// Below this modulus the hat functions come from their ascending series.
const SERIES_RADIUS: f64 = 0.5;
const SERIES_TERMS: usize = 40;
const RESCALE: f64 = 1e100;

/// Spherical Bessel values and derivatives for all orders `0..=nmax` at one argument.
///
/// Raw entries that fall outside the f64 range are stored as they come out of
/// the arithmetic (zero or infinity); the hat entries stay finite.
#[derive(Debug, Clone)]
pub struct SphericalArrays {
    pub argument: Complex64,
    pub j: Vec<Complex64>,
    pub j_prime: Vec<Complex64>,
    pub y: Vec<Complex64>,
    pub y_prime: Vec<Complex64>,
    pub j_hat: Vec<Complex64>,
    pub j_hat_prime: Vec<Complex64>,
    pub y_hat: Vec<Complex64>,
    pub y_hat_prime: Vec<Complex64>,
}

impl SphericalArrays {
    pub fn new(nmax: usize, z: Complex64) -> Result<Self, SpecfunError> {
        check_argument(z, "spherical Bessel functions")?;
        let dfact = odd_double_factorials(nmax + 1);
        let arrays = if z.norm() < SERIES_RADIUS {
            Self::from_series(nmax, z, &dfact)
        } else {
            Self::from_recurrence(nmax, z, &dfact)
        };
        Ok(arrays)
    }

    /// Outgoing Hankel function `h_n = j_n + i y_n` and its derivative.
    pub fn hankel(&self, n: usize) -> (Complex64, Complex64) {
        let i = Complex64::i();
        (self.j[n] + i * self.y[n], self.j_prime[n] + i * self.y_prime[n])
    }

    fn from_series(nmax: usize, z: Complex64, dfact: &[f64]) -> Self {
        let half = -z * z * 0.5;
        let mut j_hat = Vec::with_capacity(nmax + 1);
        let mut j_hat_prime = Vec::with_capacity(nmax + 1);
        let mut y_hat = Vec::with_capacity(nmax + 1);
        let mut y_hat_prime = Vec::with_capacity(nmax + 1);
        for n in 0..=nmax {
            let nf = n as f64;
            // ĵ_n = z^n Σ_k (-z²/2)^k / (k! Π_{i=1..k} (2n+2i+1))
            let mut term = Complex64::new(1.0, 0.0);
            let mut sum = term;
            let mut dsum = term * nf;
            for k in 1..SERIES_TERMS {
                let kf = k as f64;
                term *= half / (kf * (2.0 * nf + 2.0 * kf + 1.0));
                sum += term;
                dsum += term * (nf + 2.0 * kf);
                if term.norm() < 1e-18 * sum.norm() {
                    break;
                }
            }
            let zn = z.powu(n as u32);
            j_hat.push(zn * sum);
            j_hat_prime.push(zn * dsum / z);

            // ŷ_n = z^(-n-1) Σ_k (-z²/2)^k / (k! Π_{i=1..k} (2i-1-2n)).
            // 2i-1-2n is odd, so no factor of the product vanishes.
            let mut term = Complex64::new(1.0, 0.0);
            let mut sum = term;
            let mut dsum = term * (-(nf + 1.0));
            for k in 1..SERIES_TERMS {
                let kf = k as f64;
                term *= half / (kf * (2.0 * kf - 1.0 - 2.0 * nf));
                sum += term;
                dsum += term * (2.0 * kf - nf - 1.0);
                if term.norm() < 1e-18 * sum.norm() {
                    break;
                }
            }
            let zinv_pow = (Complex64::new(1.0, 0.0) / z).powu(n as u32 + 1);
            y_hat.push(sum * zinv_pow);
            y_hat_prime.push(dsum * zinv_pow / z);
        }
        let mut j = Vec::with_capacity(nmax + 1);
        let mut j_prime = Vec::with_capacity(nmax + 1);
        let mut y = Vec::with_capacity(nmax + 1);
        let mut y_prime = Vec::with_capacity(nmax + 1);
        for n in 0..=nmax {
            let scale_j = dfact[n];
            let scale_y = lower_double_factorial(dfact, n);
            j.push(j_hat[n] / scale_j);
            j_prime.push(j_hat_prime[n] / scale_j);
            y.push(-y_hat[n] * scale_y);
            y_prime.push(-y_hat_prime[n] * scale_y);
        }
        Self {
            argument: z,
            j,
            j_prime,
            y,
            y_prime,
            j_hat,
            j_hat_prime,
            y_hat,
            y_hat_prime,
        }
    }

    fn from_recurrence(nmax: usize, z: Complex64, dfact: &[f64]) -> Self {
        let top = nmax + 1;
        let (sin, cos) = (z.sin(), z.cos());
        let j0 = sin / z;
        let j1 = sin / (z * z) - cos / z;
        let y0 = -cos / z;
        let y1 = -cos / (z * z) - sin / z;

        let mut j = vec![Complex64::new(0.0, 0.0); top + 1];
        j[0] = j0;
        j[1] = j1;
        if (top as f64) < z.norm() {
            for n in 1..top {
                j[n + 1] = j[n] * ((2 * n + 1) as f64) / z - j[n - 1];
            }
        } else {
            miller_spherical(&mut j, z, j0, j1);
        }

        let mut y = vec![Complex64::new(0.0, 0.0); top + 1];
        y[0] = y0;
        y[1] = y1;
        for n in 1..top {
            y[n + 1] = y[n] * ((2 * n + 1) as f64) / z - y[n - 1];
        }

        let mut j_prime = Vec::with_capacity(nmax + 1);
        let mut y_prime = Vec::with_capacity(nmax + 1);
        j_prime.push(-j[1]);
        y_prime.push(-y[1]);
        for n in 1..=nmax {
            let c = (n + 1) as f64 / z;
            j_prime.push(j[n - 1] - j[n] * c);
            y_prime.push(y[n - 1] - y[n] * c);
        }
        j.truncate(nmax + 1);
        y.truncate(nmax + 1);

        let mut j_hat = Vec::with_capacity(nmax + 1);
        let mut j_hat_prime = Vec::with_capacity(nmax + 1);
        let mut y_hat = Vec::with_capacity(nmax + 1);
        let mut y_hat_prime = Vec::with_capacity(nmax + 1);
        for n in 0..=nmax {
            let scale_j = dfact[n];
            let scale_y = lower_double_factorial(dfact, n);
            j_hat.push(j[n] * scale_j);
            j_hat_prime.push(j_prime[n] * scale_j);
            y_hat.push(-y[n] / scale_y);
            y_hat_prime.push(-y_prime[n] / scale_y);
        }
        Self {
            argument: z,
            j,
            j_prime,
            y,
            y_prime,
            j_hat,
            j_hat_prime,
            y_hat,
            y_hat_prime,
        }
    }
}

/// Downward recurrence for `j_n`, normalized against the larger of `j_0`, `j_1`.
fn miller_spherical(j: &mut [Complex64], z: Complex64, j0: Complex64, j1: Complex64) {
    let top = j.len() - 1;
    let start = top + 20 + (10.0 * ((top as f64) + z.norm()).sqrt()) as usize;
    let mut buf = vec![Complex64::new(0.0, 0.0); start + 2];
    buf[start] = Complex64::new(1.0, 0.0);
    for n in (1..=start).rev() {
        buf[n - 1] = buf[n] * ((2 * n + 1) as f64) / z - buf[n + 1];
        if buf[n - 1].norm() > RESCALE {
            for v in buf[n - 1..].iter_mut() {
                *v /= RESCALE;
            }
        }
    }
    let scale = if j0.norm() >= j1.norm() {
        cdiv(j0, buf[0])
    } else {
        cdiv(j1, buf[1])
    };
    for (dst, src) in j.iter_mut().zip(buf.iter()) {
        *dst = *src * scale;
    }
}

/// Spherical Bessel function of order `n` at complex `z != 0`.
pub fn spherical_bessel(
    n: usize,
    z: Complex64,
    kind: BesselKind,
    normalization: Normalization,
) -> Result<BesselEval, SpecfunError> {
    let a = SphericalArrays::new(n, z)?;
    let (value, derivative) = match (kind, normalization) {
        (BesselKind::Regular, Normalization::Raw) => (a.j[n], a.j_prime[n]),
        (BesselKind::Irregular, Normalization::Raw) => (a.y[n], a.y_prime[n]),
        (BesselKind::Outgoing, Normalization::Raw) => a.hankel(n),
        (BesselKind::Regular, Normalization::Hat) => (a.j_hat[n], a.j_hat_prime[n]),
        (BesselKind::Irregular, Normalization::Hat) => (a.y_hat[n], a.y_hat_prime[n]),
        (BesselKind::Outgoing, Normalization::Hat) => {
            return Err(SpecfunError::Unsupported {
                what: "hat normalization of the outgoing function",
            })
        }
    };
    if normalization == Normalization::Raw && !(value.is_finite() && derivative.is_finite()) {
        return Err(SpecfunError::Unrepresentable {
            function: "spherical Bessel",
            order: n,
            modulus: z.norm(),
        });
    }
    if normalization == Normalization::Raw
        && kind == BesselKind::Regular
        && value == Complex64::new(0.0, 0.0)
        && n > 0
    {
        return Err(SpecfunError::Unrepresentable {
            function: "spherical Bessel j",
            order: n,
            modulus: z.norm(),
        });
    }
    Ok(BesselEval {
        order: n,
        argument: z,
        value,
        derivative,
    })
}

/// Real-argument regular and irregular functions, allowing `x = 0` for `j_n`.
///
/// At `x = 0`: `j_0 = 1`, `j_n = 0` for `n >= 1`, and `j_n'(0)` is `1/3` for `n = 1`
/// and zero otherwise. `y_n` rejects `x = 0`.
pub fn spherical_bessel_real(n: usize, x: f64, kind: BesselKind) -> Result<BesselEval, SpecfunError> {
    if x == 0.0 {
        return match kind {
            BesselKind::Regular => Ok(BesselEval {
                order: n,
                argument: Complex64::new(0.0, 0.0),
                value: Complex64::new(if n == 0 { 1.0 } else { 0.0 }, 0.0),
                derivative: Complex64::new(if n == 1 { 1.0 / 3.0 } else { 0.0 }, 0.0),
            }),
            _ => Err(SpecfunError::ZeroArgument {
                function: "spherical Bessel y_n",
            }),
        };
    }
    spherical_bessel(n, Complex64::new(x, 0.0), kind, Normalization::Raw)
}
