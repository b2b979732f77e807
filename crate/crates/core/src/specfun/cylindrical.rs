use std::f64::consts::PI;

use num_complex::Complex64;

use super::{cdiv, check_argument, BesselEval, BesselKind, Normalization, SpecfunError};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_RADIUS: f64 = 2.0;
const RESCALE: f64 = 1e100;

/// Cylindrical Bessel values and derivatives for orders `0..=nmax` at one argument.
///
/// `y_hat[0]` and `y_hat_prime[0]` are NaN: the zero mode has no hat form and is
/// handled through `y[0]`, `y_prime[0]`.
#[derive(Debug, Clone)]
pub struct CylindricalArrays {
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

impl CylindricalArrays {
    pub fn new(nmax: usize, z: Complex64) -> Result<Self, SpecfunError> {
        check_argument(z, "cylindrical Bessel functions")?;
        let zero = Complex64::new(0.0, 0.0);
        let i = Complex64::i();

        // Regular functions on an extended range; the tail feeds the Neumann series.
        let (jt, j_hat_direct) = if z.norm() < SERIES_RADIUS {
            let top = (nmax + 1).max(40);
            let (raw, hat) = series_j(top, z);
            (raw, Some(hat))
        } else {
            (miller_j(nmax.max(z.norm().ceil() as usize) + 1, z), None)
        };

        // Y_0 and Y_1 from the Neumann series.
        let log_term = (z * 0.5).ln() + EULER_GAMMA;
        let mut s0 = zero;
        let mut s1 = zero;
        let mut k = 1;
        while 2 * k + 1 < jt.len() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s0 += jt[2 * k] * (sign / k as f64);
            s1 += (jt[2 * k - 1] - jt[2 * k + 1]) * (sign / k as f64);
            k += 1;
        }
        let y0 = (log_term * jt[0] - s0 * 2.0) * (2.0 / PI);
        let y1 = -(jt[0] / z - log_term * jt[1]) * (2.0 / PI) + s1 * (2.0 / PI);

        let mut j = jt[..=nmax].to_vec();
        let mut j_prime = Vec::with_capacity(nmax + 1);
        j_prime.push(-jt[1]);
        for n in 1..=nmax {
            j_prime.push(jt[n - 1] - jt[n] * (n as f64) / z);
        }

        // Hat-normalized regular functions.
        let mut j_hat = Vec::with_capacity(nmax + 1);
        match j_hat_direct {
            Some(hat) => j_hat.extend_from_slice(&hat[..=nmax]),
            None => {
                let mut scale = 1.0;
                for (n, v) in j.iter().enumerate() {
                    if n > 0 {
                        scale *= 2.0 * n as f64;
                    }
                    j_hat.push(*v * scale);
                }
            }
        }
        let mut j_hat_prime = Vec::with_capacity(nmax + 1);
        j_hat_prime.push(j_prime[0]);
        for n in 1..=nmax {
            j_hat_prime.push(j_hat[n - 1] * (2.0 * n as f64) - j_hat[n] * (n as f64) / z);
        }

        // Irregular functions: hat recurrence never overflows for representable
        // hat values, the raw values follow by rescaling.
        let nan = Complex64::new(f64::NAN, f64::NAN);
        let mut y_hat = vec![nan; nmax + 1];
        let mut y_hat_prime = vec![nan; nmax + 1];
        if nmax >= 1 {
            y_hat[1] = i * PI * 0.5 * y1;
        }
        if nmax >= 2 {
            y_hat[2] = y_hat[1] / z - i * PI * 0.25 * y0;
        }
        for n in 2..nmax {
            let nf = n as f64;
            y_hat[n + 1] = y_hat[n] / z - y_hat[n - 1] / (4.0 * nf * (nf - 1.0));
        }
        if nmax >= 1 {
            y_hat_prime[1] = i * PI * 0.5 * y0 - y_hat[1] / z;
        }
        for n in 2..=nmax {
            let nf = n as f64;
            y_hat_prime[n] = y_hat[n - 1] / (2.0 * (nf - 1.0)) - y_hat[n] * nf / z;
        }

        let mut y = Vec::with_capacity(nmax + 1);
        let mut y_prime = Vec::with_capacity(nmax + 1);
        y.push(y0);
        y_prime.push(-y1);
        // Y_n = Ŷ_n 2^n (n-1)! / (πi)
        let mut scale = 1.0 / PI;
        for n in 1..=nmax {
            scale *= if n == 1 { 2.0 } else { 2.0 * (n - 1) as f64 };
            y.push(-i * y_hat[n] * scale);
            y_prime.push(-i * y_hat_prime[n] * scale);
        }
        j.truncate(nmax + 1);

        Ok(Self {
            argument: z,
            j,
            j_prime,
            y,
            y_prime,
            j_hat,
            j_hat_prime,
            y_hat,
            y_hat_prime,
        })
    }

    /// Outgoing Hankel function `H_n = J_n + i Y_n` and its derivative.
    pub fn hankel(&self, n: usize) -> (Complex64, Complex64) {
        let i = Complex64::i();
        (self.j[n] + i * self.y[n], self.j_prime[n] + i * self.y_prime[n])
    }
}

/// Ascending series; returns raw `J_n` and `Ĵ_n` for `n = 0..=top`.
fn series_j(top: usize, z: Complex64) -> (Vec<Complex64>, Vec<Complex64>) {
    let quarter = -z * z * 0.25;
    let mut raw = Vec::with_capacity(top + 1);
    let mut hat = Vec::with_capacity(top + 1);
    let mut prefactor = Complex64::new(1.0, 0.0); // (z/2)^n / n!
    let mut zn = Complex64::new(1.0, 0.0);
    for n in 0..=top {
        if n > 0 {
            prefactor *= z / (2.0 * n as f64);
            zn *= z;
        }
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..60 {
            term *= quarter / (k as f64 * (n + k) as f64);
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        raw.push(prefactor * sum);
        hat.push(zn * sum);
    }
    (raw, hat)
}

/// Downward recurrence normalized by `J_0 + 2 Σ J_{2k} = 1`.
fn miller_j(top: usize, z: Complex64) -> Vec<Complex64> {
    let mut start = top + 30 + (10.0 * (top as f64).sqrt()) as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); start + 2];
    buf[start] = Complex64::new(1.0, 0.0);
    for n in (1..=start).rev() {
        buf[n - 1] = buf[n] * (2.0 * n as f64) / z - buf[n + 1];
        if buf[n - 1].norm() > RESCALE {
            for v in buf[n - 1..].iter_mut() {
                *v /= RESCALE;
            }
        }
    }
    let mut norm = buf[0];
    let mut k = 2;
    while k <= start {
        norm += buf[k] * 2.0;
        k += 2;
    }
    buf.truncate(start + 1);
    for v in buf.iter_mut() {
        *v = cdiv(*v, norm);
    }
    buf
}

/// Cylindrical Bessel function of order `n` at complex `z != 0`.
///
/// The hat form of the irregular function requires `n >= 1`.
pub fn cylindrical_bessel(
    n: usize,
    z: Complex64,
    kind: BesselKind,
    normalization: Normalization,
) -> Result<BesselEval, SpecfunError> {
    if normalization == Normalization::Hat && kind == BesselKind::Irregular && n == 0 {
        return Err(SpecfunError::Order {
            function: "hat-normalized Y_n",
            order: 0,
            min: 1,
        });
    }
    let a = CylindricalArrays::new(n, z)?;
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
            function: "cylindrical Bessel",
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
