//! Entropy bookkeeping and case observables.

use crate::dg::{DgOperator, Workspace};
use crate::error::{Error, Result};
use crate::mesh::{BoundaryKind, FaceKind};
use crate::physics::{State, Vec3, NVARS};
use serde::Serialize;

/// Entropy quantities of one residual evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EntropyReport {
    /// Extended entropy including the interface penalty term.
    pub e_total: f64,
    /// Time derivative of `e_total` along the semi-discrete flow.
    pub dedt: f64,
    pub dissipation: f64,
    /// `d/dt (E + surface free energy) + dissipation`.
    pub remainder: f64,
    /// Wall free energy.
    pub surface_fw: f64,
    /// Time derivative of the wall free energy.
    pub surface_fw_rate: f64,
}

fn is_wall(kind: FaceKind) -> bool {
    matches!(kind, FaceKind::Boundary(BoundaryKind::FreeSlip) | FaceKind::Boundary(BoundaryKind::NoSlip))
}

/// Volume quadrature of the entropy density plus the penalty term; requires `ws.gc`.
pub fn total_entropy(op: &DgOperator, q: &[State], ws: &Workspace) -> f64 {
    let p = &op.params;
    let vol: f64 = (0..q.len()).map(|g| op.jw(g) * p.entropy_density(&q[g], &ws.gc[g])).sum();
    vol + penalty_energy(op, q)
}

/// `3/4 sigma epsilon sum_faces int beta [[C]]^2`.
pub fn penalty_energy(op: &DgOperator, q: &[State]) -> f64 {
    let mut s = 0.0;
    for (fi, f) in op.mesh.faces.iter().enumerate() {
        if f.kind != FaceKind::Interior {
            continue;
        }
        for k in 0..f.len() {
            let jump = q[f.nodes_r[k]][0] - q[f.nodes_l[k]][0];
            s += f.wq[k] * f.jf[k] * op.beta[fi][k] * jump * jump;
        }
    }
    0.75 * op.params.sigma * op.params.epsilon * s
}

/// Wall free energy `sum over wall faces of int f_w(C)`.
pub fn surface_free_energy(op: &DgOperator, q: &[State]) -> f64 {
    let mut s = 0.0;
    for f in op.mesh.faces.iter().filter(|f| is_wall(f.kind)) {
        for k in 0..f.len() {
            s += f.wq[k] * f.jf[k] * op.params.fw(q[f.nodes_l[k]][0]);
        }
    }
    s
}

fn surface_free_energy_rate(op: &DgOperator, q: &[State], qt: &[State]) -> f64 {
    let mut s = 0.0;
    for f in op.mesh.faces.iter().filter(|f| is_wall(f.kind)) {
        for k in 0..f.len() {
            let g = f.nodes_l[k];
            s += f.wq[k] * f.jf[k] * op.params.fw_prime(q[g][0]) * qt[g][0];
        }
    }
    s
}

/// `sum_e <J m Q_t, W>`; requires a completed residual.
pub fn contraction(op: &DgOperator, ws: &Workspace) -> f64 {
    let mut s = 0.0;
    for g in 0..ws.rhs.len() {
        let w = op.wvol[g % op.mesh.np];
        let r = &ws.rhs[g];
        let wv = &ws.w[g];
        let mut d = 0.0;
        for m in 0..NVARS {
            d += r[m] * wv[m];
        }
        s += w * d;
    }
    s
}

/// `sum_e <J (M0 |G_mu|^2 + 2 eta S:S), 1>`.
pub fn dissipation(op: &DgOperator, q: &[State], ws: &Workspace) -> f64 {
    (0..q.len()).map(|g| op.jw(g) * op.params.dissipation(q[g][0], &ws.grad[g])).sum()
}

/// Full entropy report from a completed residual.
pub fn entropy_report(op: &DgOperator, q: &[State], ws: &Workspace) -> EntropyReport {
    let e_total = total_entropy(op, q, ws);
    let rate = contraction(op, ws);
    let diss = dissipation(op, q, ws);
    let fw_rate = surface_free_energy_rate(op, q, &ws.qt);
    EntropyReport {
        e_total,
        dedt: rate - fw_rate,
        dissipation: diss,
        remainder: rate + diss,
        surface_fw: surface_free_energy(op, q),
        surface_fw_rate: fw_rate,
    }
}

/// Chain-rule time derivative of the extended entropy plus wall free energy,
/// evaluated directly from `dq/dt` without the discrete contraction.
pub fn entropy_rate_direct(op: &DgOperator, q: &[State], ws: &mut Workspace) -> f64 {
    let p = &op.params;
    let ct: Vec<f64> = ws.qt.iter().map(|s| s[0]).collect();
    let mut gct = vec![[0.0; 3]; ct.len()];
    op.scalar_gradient(&ct, &mut gct, ws);
    let kappa = p.kappa();
    let mut s = 0.0;
    for g in 0..q.len() {
        let qg = &q[g];
        let qt = &ws.qt[g];
        let gc = &ws.gc[g];
        let grad_term = gc[0] * gct[g][0] + gc[1] * gct[g][1] + gc[2] * gct[g][2];
        let v = p.f0_prime(qg[0]) * qt[0]
            + kappa * grad_term
            + qg[1] * qt[1]
            + qg[2] * qt[2]
            + qg[3] * qt[3]
            + qg[4] * qt[4] / p.bulk();
        s += op.jw(g) * v;
    }
    let mut pen = 0.0;
    for (fi, f) in op.mesh.faces.iter().enumerate() {
        if f.kind != FaceKind::Interior {
            continue;
        }
        for k in 0..f.len() {
            let (gl, gr) = (f.nodes_l[k], f.nodes_r[k]);
            pen += f.wq[k] * f.jf[k] * op.beta[fi][k] * (q[gr][0] - q[gl][0]) * (ct[gr] - ct[gl]);
        }
    }
    s + kappa * pen + surface_free_energy_rate(op, q, &ws.qt)
}

/// Centroid and volume of the `C ~ 0` phase, weighted by `1 - C`.
pub fn bubble_centroid(op: &DgOperator, q: &[State]) -> Result<(Vec3, f64)> {
    let mut a = 0.0;
    let mut xc = [0.0; 3];
    for g in 0..q.len() {
        let w = op.jw(g) * (1.0 - q[g][0]);
        a += w;
        for d in 0..3 {
            xc[d] += w * op.mesh.x[g][d];
        }
    }
    if !(a > 0.0) {
        return Err(Error::Config(format!("bubble measure must be positive, got {a}")));
    }
    Ok((xc.map(|v| v / a), a))
}

/// Mean velocity of the `C ~ 0` phase.
pub fn bubble_velocity(op: &DgOperator, q: &[State]) -> Result<Vec3> {
    let mut a = 0.0;
    let mut vc = [0.0; 3];
    for g in 0..q.len() {
        let w = op.jw(g) * (1.0 - q[g][0]);
        let u = op.params.velocity(&q[g]);
        a += w;
        for d in 0..3 {
            vc[d] += w * u[d];
        }
    }
    if !(a > 0.0) {
        return Err(Error::Config(format!("bubble measure must be positive, got {a}")));
    }
    Ok(vc.map(|v| v / a))
}

/// Discrete L2 error of each state variable against `exact`.
pub fn l2_errors<F: Fn(&Vec3) -> State>(op: &DgOperator, q: &[State], exact: F) -> State {
    let mut e = [0.0; NVARS];
    for g in 0..q.len() {
        let ex = exact(&op.mesh.x[g]);
        let w = op.jw(g);
        for m in 0..NVARS {
            e[m] += w * (q[g][m] - ex[m]).powi(2);
        }
    }
    e.map(f64::sqrt)
}

/// Value of a nodal field at a physical point.
pub fn point_value(op: &DgOperator, field: &[f64], x: &Vec3) -> Result<f64> {
    let (e, xi) = op.mesh.locate(x)?;
    let np = op.mesh.np;
    Ok(op.mesh.interpolate(&field[e * np..(e + 1) * np], &xi))
}

/// Static pressure `p - (F - mu C)`; requires `ws.gc` and `ws.mu`.
pub fn static_pressure(op: &DgOperator, q: &[State], ws: &Workspace) -> Vec<f64> {
    (0..q.len())
        .map(|g| q[g][4] - (op.params.free_energy(q[g][0], &ws.gc[g]) - ws.mu[g] * q[g][0]))
        .collect()
}

/// Largest `|dq/dt|` over all nodes and variables.
pub fn residual_norm(ws: &Workspace) -> f64 {
    ws.qt.iter().flat_map(|s| s.iter()).fold(0.0, |a, v| a.max(v.abs()))
}

/// Max-norm of the velocity.
pub fn velocity_norm(op: &DgOperator, q: &[State]) -> f64 {
    q.iter()
        .map(|s| {
            let u = op.params.velocity(s);
            (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt()
        })
        .fold(0.0, f64::max)
}

/// Radius of the `C = 1/2` contour along a ray from `center` in direction `dir`.
pub fn contour_radius(op: &DgOperator, q: &[State], center: &Vec3, dir: &Vec3, r_max: f64) -> Result<f64> {
    let c: Vec<f64> = q.iter().map(|s| s[0]).collect();
    let at = |r: f64| -> Result<f64> {
        let x = [center[0] + r * dir[0], center[1] + r * dir[1], center[2] + r * dir[2]];
        Ok(point_value(op, &c, &x)? - 0.5)
    };
    let n = 200;
    let mut prev = at(0.0)?;
    for i in 1..=n {
        let r = r_max * i as f64 / n as f64;
        let cur = at(r)?;
        if prev.signum() != cur.signum() {
            let (mut a, mut b) = (r - r_max / n as f64, r);
            let mut fa = prev;
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                let fm = at(m)?;
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            return Ok(0.5 * (a + b));
        }
        prev = cur;
    }
    Err(Error::Config("no C = 1/2 crossing along the probe ray".into()))
}
