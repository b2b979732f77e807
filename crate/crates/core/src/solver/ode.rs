//! Adaptive Dormand–Prince 5(4) integration of linear two-component complex
//! systems, with renormalization of the state and dense evaluation.

use num_complex::Complex64;

use super::SolverError;

pub type State = [Complex64; 2];

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const RESCALE_HIGH: f64 = 1e3;
const RESCALE_LOW: f64 = 1e-3;
const MAX_STEPS: usize = 200_000;

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12 }
    }
}

/// Accepted point of a trajectory; the true state is `y · exp(log_scale)`.
#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub r: f64,
    pub y: State,
    pub log_scale: f64,
}

fn norm(y: &State) -> f64 {
    (y[0].norm_sqr() + y[1].norm_sqr()).sqrt()
}

fn axpy(y: &State, h: f64, ks: &[State], w: &[f64]) -> State {
    let mut out = *y;
    for (k, &c) in ks.iter().zip(w) {
        if c != 0.0 {
            out[0] += k[0] * (h * c);
            out[1] += k[1] * (h * c);
        }
    }
    out
}

/// One Dormand–Prince step; returns the fifth-order state and the error estimate.
fn step<F: Fn(f64, &State) -> State>(f: &F, r: f64, y: &State, h: f64) -> (State, State) {
    let mut k: [State; 7] = [[Complex64::new(0.0, 0.0); 2]; 7];
    k[0] = f(r, y);
    for s in 1..7 {
        let ys = axpy(y, h, &k[..s], &A[s][..s]);
        k[s] = f(r + C[s] * h, &ys);
    }
    let y_new = axpy(y, h, &k[..6], &A[6][..6]);
    let mut err = [Complex64::new(0.0, 0.0); 2];
    for (s, ks) in k.iter().enumerate() {
        err[0] += ks[0] * (h * E[s]);
        err[1] += ks[1] * (h * E[s]);
    }
    (y_new, err)
}

/// Solution of `y' = f(r, y)` from `start` to `end` (either direction).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub nodes: Vec<Node>,
    forward: bool,
}

impl Trajectory {
    pub fn integrate<F: Fn(f64, &State) -> State>(
        f: &F,
        start: f64,
        end: f64,
        y0: State,
        tol: Tolerances,
    ) -> Result<Self, SolverError> {
        let forward = end >= start;
        let dir = if forward { 1.0 } else { -1.0 };
        let span = (end - start).abs();
        let n0 = norm(&y0);
        let mut node = Node {
            r: start,
            y: [y0[0] / n0, y0[1] / n0],
            log_scale: n0.ln(),
        };
        let mut nodes = vec![node];
        if span == 0.0 {
            return Ok(Self { nodes, forward });
        }
        let mut h = span * 1e-3;
        for _ in 0..MAX_STEPS {
            let remaining = (end - node.r).abs();
            if remaining <= 1e-15 * end.abs().max(start.abs()) {
                break;
            }
            let last = h >= remaining;
            let hh = if last { remaining } else { h };
            let (y_new, err) = step(f, node.r, &node.y, dir * hh);
            let mut e: f64 = 0.0;
            for i in 0..2 {
                let sc = tol.atol + tol.rtol * node.y[i].norm().max(y_new[i].norm());
                e += (err[i].norm() / sc).powi(2);
            }
            let e = (e / 2.0).sqrt();
            if !e.is_finite() {
                return Err(SolverError::StepControl { radius: node.r, step: hh });
            }
            if e <= 1.0 {
                let r_new = if last { end } else { node.r + dir * hh };
                let mut ny = y_new;
                let mut ls = node.log_scale;
                let nn = norm(&ny);
                if !(nn > 0.0) || !nn.is_finite() {
                    return Err(SolverError::StepControl { radius: r_new, step: hh });
                }
                if !(RESCALE_LOW..=RESCALE_HIGH).contains(&nn) {
                    ny = [ny[0] / nn, ny[1] / nn];
                    ls += nn.ln();
                }
                node = Node { r: r_new, y: ny, log_scale: ls };
                nodes.push(node);
                if last {
                    return Ok(Self { nodes, forward });
                }
            }
            let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
            h = hh * factor;
            if h < 1e-14 * node.r.abs().max(span) {
                return Err(SolverError::StepControl { radius: node.r, step: h });
            }
        }
        Err(SolverError::StepControl { radius: node.r, step: h })
    }

    pub fn start(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn end(&self) -> &Node {
        self.nodes.last().expect("trajectory has a start node")
    }

    /// State at `r` as `(y, log_scale)`: one step from the nearest preceding node.
    pub fn eval<F: Fn(f64, &State) -> State>(&self, f: &F, r: f64) -> (State, f64) {
        // Nodes are monotone in r along the integration direction.
        let i = if self.forward {
            self.nodes.partition_point(|nd| nd.r <= r)
        } else {
            self.nodes.partition_point(|nd| nd.r >= r)
        };
        let node = &self.nodes[i.saturating_sub(1).min(self.nodes.len() - 1)];
        let h = r - node.r;
        if h == 0.0 {
            return (node.y, node.log_scale);
        }
        let (y, _) = step(f, node.r, &node.y, h);
        (y, node.log_scale)
    }
}
