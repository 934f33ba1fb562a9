//! Legendre-Gauss-Lobatto nodes, quadrature weights, Lagrange interpolation
//! and the collocation derivative matrix.

use crate::error::{Error, Result};

/// Evaluates `(P_N(x), P_N'(x))` by the three-term recurrence.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    match n {
        0 => (1.0, 0.0),
        1 => (x, 1.0),
        _ => {
            let (mut l2, mut l1) = (1.0, x);
            let (mut d2, mut d1) = (0.0, 1.0);
            for k in 2..=n {
                let kf = k as f64;
                let l = (2.0 * kf - 1.0) / kf * x * l1 - (kf - 1.0) / kf * l2;
                let d = d2 + (2.0 * kf - 1.0) * l1;
                l2 = l1;
                l1 = l;
                d2 = d1;
                d1 = d;
            }
            (l1, d1)
        }
    }
}

/// Returns `q = P_{N+1} - P_{N-1}`, `q'` and `P_N`; the roots of `q` are the LGL nodes.
fn q_and_l(n: usize, x: f64) -> (f64, f64, f64) {
    let (lnm1, _) = legendre(n - 1, x);
    let (ln, _) = legendre(n, x);
    let nf = n as f64;
    let lnp1 = (2.0 * nf + 1.0) / (nf + 1.0) * x * ln - nf / (nf + 1.0) * lnm1;
    let q = lnp1 - lnm1;
    let dq = (2.0 * nf + 1.0) * ln;
    (q, dq, ln)
}

/// LGL nodes and weights on [-1, 1] for polynomial degree `n`.
pub fn gauss_lobatto(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 1 {
        return Err(Error::InvalidDegree(n));
    }
    let nf = n as f64;
    let mut x = vec![0.0; n + 1];
    let mut w = vec![0.0; n + 1];
    x[0] = -1.0;
    x[n] = 1.0;
    w[0] = 2.0 / (nf * (nf + 1.0));
    w[n] = w[0];
    let pi = std::f64::consts::PI;
    for j in 1..(n + 1) / 2 {
        let jf = j as f64 + 0.25;
        let mut xj = -(jf * pi / nf - 3.0 / (8.0 * nf * pi * jf)).cos();
        for _ in 0..100 {
            let (q, dq, _) = q_and_l(n, xj);
            let delta = -q / dq;
            xj += delta;
            if delta.abs() <= 4.0 * f64::EPSILON * xj.abs() {
                break;
            }
        }
        let (_, _, ln) = q_and_l(n, xj);
        x[j] = xj;
        x[n - j] = -xj;
        w[j] = 2.0 / (nf * (nf + 1.0) * ln * ln);
        w[n - j] = w[j];
    }
    if n % 2 == 0 {
        let (_, _, ln) = q_and_l(n, 0.0);
        x[n / 2] = 0.0;
        w[n / 2] = 2.0 / (nf * (nf + 1.0) * ln * ln);
    }
    Ok((x, w))
}

/// Barycentric weights for Lagrange interpolation through `nodes`.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let m = nodes.len();
    (0..m)
        .map(|j| {
            let mut p = 1.0;
            for k in 0..m {
                if k != j {
                    p *= nodes[j] - nodes[k];
                }
            }
            1.0 / p
        })
        .collect()
}

/// Values of all Lagrange basis polynomials at `x`.
pub fn lagrange_values(nodes: &[f64], bary: &[f64], x: f64) -> Vec<f64> {
    let m = nodes.len();
    let mut out = vec![0.0; m];
    for j in 0..m {
        if (x - nodes[j]).abs() < 1e-15 {
            out[j] = 1.0;
            return out;
        }
    }
    let mut s = 0.0;
    for j in 0..m {
        let t = bary[j] / (x - nodes[j]);
        out[j] = t;
        s += t;
    }
    for v in &mut out {
        *v /= s;
    }
    out
}

/// Collocation derivative matrix, row-major: `d[i*m + j] = l_j'(x_i)`.
pub fn derivative_matrix(nodes: &[f64]) -> Vec<f64> {
    let m = nodes.len();
    let bary = barycentric_weights(nodes);
    let mut d = vec![0.0; m * m];
    for i in 0..m {
        let mut diag = 0.0;
        for j in 0..m {
            if i != j {
                let v = bary[j] / bary[i] / (nodes[i] - nodes[j]);
                d[i * m + j] = v;
                diag -= v;
            }
        }
        d[i * m + i] = diag;
    }
    d
}

/// Interpolation matrix from `nodes` to `points`, row-major `[points.len() x nodes.len()]`.
pub fn interpolation_matrix(nodes: &[f64], points: &[f64]) -> Vec<f64> {
    let bary = barycentric_weights(nodes);
    let mut out = Vec::with_capacity(points.len() * nodes.len());
    for &p in points {
        out.extend(lagrange_values(nodes, &bary, p));
    }
    out
}

/// One-dimensional LGL collocation basis of degree `n`.
#[derive(Clone, Debug)]
pub struct Basis1d {
    pub n: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub bary: Vec<f64>,
    /// `d[i*(n+1) + j] = l_j'(x_i)`
    pub d: Vec<f64>,
    /// Weak-form divergence matrix `dw[i*(n+1) + m] = (w_m / w_i) d[m][i]`.
    pub dw: Vec<f64>,
}

impl Basis1d {
    pub fn new(n: usize) -> Result<Self> {
        let (nodes, weights) = gauss_lobatto(n)?;
        let bary = barycentric_weights(&nodes);
        let d = derivative_matrix(&nodes);
        let m = n + 1;
        let mut dw = vec![0.0; m * m];
        for i in 0..m {
            for k in 0..m {
                dw[i * m + k] = weights[k] / weights[i] * d[k * m + i];
            }
        }
        Ok(Self { n, nodes, weights, bary, d, dw })
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lagrange(&self, x: f64) -> Vec<f64> {
        lagrange_values(&self.nodes, &self.bary, x)
    }

    /// Max-norm of `Q + Q^T - B` with `Q = W D`.
    pub fn sbp_defect(&self) -> f64 {
        let m = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let q_ij = self.weights[i] * self.d[i * m + j];
                let q_ji = self.weights[j] * self.d[j * m + i];
                let b = if i == j && i == 0 {
                    -1.0
                } else if i == j && i == m - 1 {
                    1.0
                } else {
                    0.0
                };
                worst = worst.max((q_ij + q_ji - b).abs());
            }
        }
        worst
    }
}
