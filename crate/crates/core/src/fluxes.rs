//! Interface fluxes: central and exact-Riemann-solver variants of the
//! conservative numerical flux and the non-conservative diamond fluxes,
//! plus BR1 viscous fluxes.
//!
//! All interface quantities are dotted with the left-side normal `n` and
//! returned in Cartesian components.

use crate::physics::{dot, PhysParams, State, Vec3, NVARS};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FluxMode {
    Central,
    Ers,
}

/// Orthonormal frame attached to a face node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub n: Vec3,
    pub t1: Vec3,
    pub t2: Vec3,
}

impl Frame {
    pub fn from_normal(n: Vec3) -> Self {
        let a = if n[0].abs() <= n[1].abs() && n[0].abs() <= n[2].abs() {
            [1.0, 0.0, 0.0]
        } else if n[1].abs() <= n[2].abs() {
            [0.0, 1.0, 0.0]
        } else {
            [0.0, 0.0, 1.0]
        };
        let an = dot(&a, &n);
        let mut t1 = [a[0] - an * n[0], a[1] - an * n[1], a[2] - an * n[2]];
        let l = dot(&t1, &t1).sqrt();
        t1.iter_mut().for_each(|v| *v /= l);
        let t2 = cross(&n, &t1);
        Self { n, t1, t2 }
    }

    /// Rotated velocity components `(U_n, V_t1, V_t2)`.
    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        [dot(v, &self.n), dot(v, &self.t1), dot(v, &self.t2)]
    }

    /// Inverse rotation of the momentum rows of a rotated 5-vector.
    pub fn unrotate(&self, r: &State) -> State {
        let mut out = [r[0], 0.0, 0.0, 0.0, r[4]];
        for d in 0..3 {
            out[1 + d] = r[1] * self.n[d] + r[2] * self.t1[d] + r[3] * self.t2[d];
        }
        out
    }
}

pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Side values needed by the interface solvers.
#[derive(Clone, Copy, Debug)]
pub struct Side {
    pub c: f64,
    pub rho: f64,
    pub un: f64,
    pub vt: [f64; 2],
    pub p: f64,
    pub mu: f64,
}

impl Side {
    pub fn new(params: &PhysParams, q: &State, mu: f64, frame: &Frame) -> Self {
        let rho = params.density(q[0]);
        let s = rho.sqrt();
        let v = [q[1] / s, q[2] / s, q[3] / s];
        let r = frame.rotate(&v);
        Self { c: q[0], rho, un: r[0], vt: [r[1], r[2]], p: q[4], mu }
    }
}

/// Star-region state of the exact Riemann solver for the artificial-compressibility system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarState {
    pub u: f64,
    pub p: f64,
    pub rho_l: f64,
    pub rho_r: f64,
    /// Density and tangential velocity selected by the sign of `u`.
    pub rho: f64,
    pub vt: [f64; 2],
}

pub fn ers_star(bulk: f64, l: &Side, r: &Side) -> StarState {
    let al = (l.un * l.un + 4.0 * bulk / l.rho).sqrt();
    let ar = (r.un * r.un + 4.0 * bulk / r.rho).sqrt();
    let lpl = 0.5 * (l.un + al);
    let lml = 0.5 * (l.un - al);
    let lpr = 0.5 * (r.un + ar);
    let lmr = 0.5 * (r.un - ar);
    let u = (l.p - r.p + l.rho * l.un * lpl - r.rho * r.un * lmr) / (l.rho * lpl - r.rho * lmr);
    let p = l.p + l.rho * lpl * (l.un - u);
    let rho_l = l.rho * lpl / (u - lml);
    let rho_r = r.rho * lmr / (u - lpr);
    let (rho, vt) = if u >= 0.0 { (rho_l, l.vt) } else { (rho_r, r.vt) };
    StarState { u, p, rho_l, rho_r, rho, vt }
}

/// Conservative flux and the two diamond fluxes on an interface node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterfaceFlux {
    pub fstar: State,
    pub diamond_l: State,
    pub diamond_r: State,
}

pub fn interface_flux(
    params: &PhysParams,
    mode: FluxMode,
    ql: &State,
    mul: f64,
    qr: &State,
    mur: f64,
    frame: &Frame,
) -> InterfaceFlux {
    let l = Side::new(params, ql, mul, frame);
    let r = Side::new(params, qr, mur, frame);
    interface_flux_sides(params.bulk(), mode, &l, &r, frame)
}

pub fn interface_flux_sides(bulk: f64, mode: FluxMode, l: &Side, r: &Side, frame: &Frame) -> InterfaceFlux {
    let mu_avg = 0.5 * (l.mu + r.mu);
    let cu_avg = 0.5 * (l.c * l.un + r.c * r.un);
    match mode {
        FluxMode::Central => {
            let un_avg = 0.5 * (l.un + r.un);
            let vt_avg = [0.5 * (l.vt[0] + r.vt[0]), 0.5 * (l.vt[1] + r.vt[1])];
            let half = |s: &Side, a: f64| 0.5 * s.rho * s.un * a;
            let fs = [
                cu_avg,
                0.5 * (half(l, l.un) + l.p + half(r, r.un) + r.p),
                0.5 * (half(l, l.vt[0]) + half(r, r.vt[0])),
                0.5 * (half(l, l.vt[1]) + half(r, r.vt[1])),
                0.0,
            ];
            let dia = |s: &Side| {
                [
                    0.0,
                    half(s, un_avg) + s.c * mu_avg,
                    half(s, vt_avg[0]),
                    half(s, vt_avg[1]),
                    bulk * un_avg,
                ]
            };
            InterfaceFlux {
                fstar: frame.unrotate(&fs),
                diamond_l: frame.unrotate(&dia(l)),
                diamond_r: frame.unrotate(&dia(r)),
            }
        }
        FluxMode::Ers => {
            let st = ers_star(bulk, l, r);
            let hs = 0.5 * st.rho * st.u;
            let fs = [cu_avg, hs * st.u + st.p, hs * st.vt[0], hs * st.vt[1], 0.0];
            let dia = |s: &Side| {
                let hl = 0.5 * s.rho * s.un;
                [
                    0.0,
                    hs * st.u + hl * s.un - hs * s.un + s.c * mu_avg,
                    hs * st.vt[0] + hl * s.vt[0] - hs * s.vt[0],
                    hs * st.vt[1] + hl * s.vt[1] - hs * s.vt[1],
                    bulk * st.u,
                ]
            };
            InterfaceFlux {
                fstar: frame.unrotate(&fs),
                diamond_l: frame.unrotate(&dia(l)),
                diamond_r: frame.unrotate(&dia(r)),
            }
        }
    }
}

/// Local normal flux `F.n` and non-conservative product `sum_m Phi_m W_m . n`.
pub fn local_normal_terms(params: &PhysParams, q: &State, mu: f64, n: &Vec3) -> (State, State) {
    let rho = params.density(q[0]);
    let s = rho.sqrt();
    let u = [q[1] / s, q[2] / s, q[3] / s];
    let un = dot(&u, n);
    let h = 0.5 * rho * un;
    let fe = [
        q[0] * un,
        h * u[0] + q[4] * n[0],
        h * u[1] + q[4] * n[1],
        h * u[2] + q[4] * n[2],
        0.0,
    ];
    let pw = [
        0.0,
        h * u[0] + mu * q[0] * n[0],
        h * u[1] + mu * q[0] * n[1],
        h * u[2] + mu * q[0] * n[2],
        params.bulk() * un,
    ];
    (fe, pw)
}

/// Ghost state mirroring the normal velocity.
pub fn wall_ghost(q: &State, n: &Vec3) -> State {
    let mn = q[1] * n[0] + q[2] * n[1] + q[3] * n[2];
    [q[0], q[1] - 2.0 * mn * n[0], q[2] - 2.0 * mn * n[1], q[3] - 2.0 * mn * n[2], q[4]]
}

/// BR1 viscous flux `<F_v> + beta [[mu]] e_1 n` dotted with `n`.
pub fn br1_viscous_flux(fvl: &[State; 3], fvr: &[State; 3], beta: f64, mu_l: f64, mu_r: f64, n: &Vec3) -> State {
    let mut out = [0.0; NVARS];
    for m in 0..NVARS {
        out[m] = 0.5 * ((fvl[0][m] + fvr[0][m]) * n[0] + (fvl[1][m] + fvr[1][m]) * n[1] + (fvl[2][m] + fvr[2][m]) * n[2]);
    }
    out[0] += beta * (mu_r - mu_l);
    out
}

/// Rate of entropy change generated at an interface node, positive means production.
/// Zero for central fluxes and non-positive for the exact Riemann solver.
pub fn interface_entropy_rate(
    params: &PhysParams,
    mode: FluxMode,
    ql: &State,
    mul: f64,
    qr: &State,
    mur: f64,
    n: &Vec3,
) -> f64 {
    let frame = Frame::from_normal(*n);
    let fl = interface_flux(params, mode, ql, mul, qr, mur, &frame);
    let wl = params.entropy_vars(ql, mul);
    let wr = params.entropy_vars(qr, mur);
    let (fel, _) = local_normal_terms(params, ql, mul, n);
    let (fer, _) = local_normal_terms(params, qr, mur, n);
    let mut left = 0.0;
    let mut right = 0.0;
    for m in 0..NVARS {
        left += wl[m] * (fl.fstar[m] + fl.diamond_l[m] - fel[m]);
        right += wr[m] * (fl.fstar[m] + fl.diamond_r[m] - fer[m]);
    }
    right - left
}
