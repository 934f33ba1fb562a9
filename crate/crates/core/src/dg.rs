//! Semi-discrete split-form DGSEM operator: concentration gradient,
//! chemical potential, entropy-variable gradients and the time derivative.

use crate::error::{Error, Result};
use crate::fluxes::{br1_viscous_flux, interface_flux, local_normal_terms, wall_ghost, FluxMode};
use crate::mesh::{BoundaryKind, Face, FaceKind, Mesh};
use crate::physics::{dot, Grad, PhysParams, State, Vec3, NVARS};
use std::sync::Arc;

/// Body force added to the right-hand side, `s(x, t)`.
pub type SourceFn = Arc<dyn Fn(&Vec3, f64) -> State + Send + Sync>;
/// Prescribed inflow concentration and velocity at a boundary point.
pub type InflowFn = Arc<dyn Fn(&Vec3) -> (f64, Vec3) + Send + Sync>;

/// Intermediate and final fields of one residual evaluation.
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    pub gc: Vec<Vec3>,
    pub mu: Vec<f64>,
    pub w: Vec<State>,
    /// Lifted gradients of the entropy variables.
    pub grad: Vec<Grad>,
    /// `J`-scaled volume gradients of the entropy variables.
    pub jgv: Vec<Grad>,
    pub fv: Vec<[State; 3]>,
    /// `J m dq/dt`
    pub rhs: Vec<State>,
    pub qt: Vec<State>,
    g_tmp: Vec<Vec3>,
    s_a: Vec<f64>,
    s_b: Vec<f64>,
    v_a: Vec<State>,
    v_b: Vec<State>,
}

impl Workspace {
    pub fn new(n_nodes: usize, np: usize) -> Self {
        Self {
            gc: vec![[0.0; 3]; n_nodes],
            mu: vec![0.0; n_nodes],
            w: vec![[0.0; NVARS]; n_nodes],
            grad: vec![[[0.0; 3]; NVARS]; n_nodes],
            jgv: vec![[[0.0; 3]; NVARS]; n_nodes],
            fv: vec![[[0.0; NVARS]; 3]; n_nodes],
            rhs: vec![[0.0; NVARS]; n_nodes],
            qt: vec![[0.0; NVARS]; n_nodes],
            g_tmp: vec![[0.0; 3]; n_nodes],
            s_a: vec![0.0; np],
            s_b: vec![0.0; np],
            v_a: vec![[0.0; NVARS]; np],
            v_b: vec![[0.0; NVARS]; np],
        }
    }
}

#[derive(Clone)]
pub struct DgOperator {
    pub mesh: Mesh,
    pub params: PhysParams,
    pub mode: FluxMode,
    pub kappa_beta: f64,
    pub source: Option<SourceFn>,
    pub inflow: Option<InflowFn>,
    /// Penalty per face node.
    pub beta: Vec<Vec<f64>>,
    /// Volume quadrature weights of one element.
    pub wvol: Vec<f64>,
}

impl DgOperator {
    pub fn new(mesh: Mesh, params: PhysParams, mode: FluxMode, kappa_beta: f64) -> Result<Self> {
        params.validate()?;
        if !(kappa_beta >= 0.0) {
            return Err(Error::InvalidParams(format!("kappa_beta must be non-negative, got {kappa_beta}")));
        }
        let beta = mesh
            .faces
            .iter()
            .map(|f| {
                if f.kind != FaceKind::Interior {
                    return vec![0.0; f.len()];
                }
                let n = f.degree_n as f64;
                (0..f.len())
                    .map(|k| {
                        let inv = 0.5 * (1.0 / mesh.jac[f.nodes_l[k]] + 1.0 / mesh.jac[f.nodes_r[k]]);
                        kappa_beta * n * (n + 1.0) / 2.0 * f.jf[k] * inv
                    })
                    .collect()
            })
            .collect();
        let wvol = mesh.weights();
        Ok(Self { mesh, params, mode, kappa_beta, source: None, inflow: None, beta, wvol })
    }

    pub fn with_source(mut self, s: SourceFn) -> Self {
        self.source = Some(s);
        self
    }

    pub fn with_inflow(mut self, f: InflowFn) -> Self {
        self.inflow = Some(f);
        self
    }

    pub fn n_nodes(&self) -> usize {
        self.mesh.n_nodes()
    }

    pub fn workspace(&self) -> Workspace {
        Workspace::new(self.n_nodes(), self.mesh.np)
    }

    /// `J w` at a global node.
    pub fn jw(&self, g: usize) -> f64 {
        self.mesh.jac[g] * self.wvol[g % self.mesh.np]
    }

    /// BR1 gradient of a scalar nodal field with averaged interface values and
    /// boundary traces taken from the interior.
    pub fn scalar_gradient(&self, u: &[f64], out: &mut [Vec3], ws: &mut Workspace) {
        let mesh = &self.mesh;
        let np = mesh.np;
        for e in 0..mesh.n_elem {
            let ue = &u[e * np..(e + 1) * np];
            let oe = &mut out[e * np..(e + 1) * np];
            oe.iter_mut().for_each(|v| *v = [0.0; 3]);
            for d in 0..3 {
                mesh.ref_derivative(ue, d, &mut ws.s_a);
                for l in 0..np {
                    let a = mesh.ja[e * np + l][d];
                    let t = ws.s_a[l];
                    oe[l][0] += a[0] * t;
                    oe[l][1] += a[1] * t;
                    oe[l][2] += a[2] * t;
                }
            }
        }
        for f in mesh.faces.iter().filter(|f| f.kind == FaceKind::Interior) {
            for k in 0..f.len() {
                let (gl, gr) = (f.nodes_l[k], f.nodes_r[k]);
                let half = 0.5 * (u[gr] - u[gl]);
                let n = f.frames[k].n;
                let sl = half * f.jf[k] * f.lift_l;
                let sr = half * f.jf[k] * f.lift_r;
                for d in 0..3 {
                    out[gl][d] += sl * n[d];
                    out[gr][d] += sr * n[d];
                }
            }
        }
        for (g, v) in out.iter_mut().enumerate() {
            let j = mesh.jac[g];
            v[0] /= j;
            v[1] /= j;
            v[2] /= j;
        }
    }

    /// `J` times the weak divergence of a scalar flux `g` with BR1 interface flux
    /// `<g>.n + scale beta [[u]]`. `bflux(face, k, g.n)` gives the outward boundary flux.
    fn scalar_weak_div<B: Fn(&Face, usize, f64) -> f64>(
        &self,
        g: &[Vec3],
        u: &[f64],
        scale: f64,
        bflux: B,
        out: &mut [f64],
        ws: &mut Workspace,
    ) {
        let mesh = &self.mesh;
        let np = mesh.np;
        for e in 0..mesh.n_elem {
            let oe = &mut out[e * np..(e + 1) * np];
            oe.iter_mut().for_each(|v| *v = 0.0);
            for d in 0..3 {
                for l in 0..np {
                    ws.s_a[l] = dot(&mesh.ja[e * np + l][d], &g[e * np + l]);
                }
                crate::mesh::apply_1d(&mesh.bases[d].dw, mesh.degrees, d, &ws.s_a, &mut ws.s_b);
                for l in 0..np {
                    oe[l] -= ws.s_b[l];
                }
            }
        }
        for (fi, f) in mesh.faces.iter().enumerate() {
            match f.kind {
                FaceKind::Interior => {
                    for k in 0..f.len() {
                        let (gl, gr) = (f.nodes_l[k], f.nodes_r[k]);
                        let n = &f.frames[k].n;
                        let gs = 0.5 * (dot(&g[gl], n) + dot(&g[gr], n)) + scale * self.beta[fi][k] * (u[gr] - u[gl]);
                        out[gl] += gs * f.jf[k] * f.lift_l;
                        out[gr] -= gs * f.jf[k] * f.lift_r;
                    }
                }
                FaceKind::Boundary(_) => {
                    for k in 0..f.len() {
                        let gl = f.nodes_l[k];
                        let gs = bflux(f, k, dot(&g[gl], &f.frames[k].n));
                        out[gl] += gs * f.jf[k] * f.lift_l;
                    }
                }
            }
        }
    }

    /// Homogeneous scalar Laplacian used by the implicit Cahn-Hilliard operator:
    /// zero normal flux on walls and zero-jump flux on inflow/outflow faces.
    pub fn scalar_laplacian(&self, u: &[f64], penalty_scale: f64, out: &mut [f64], ws: &mut Workspace) {
        let mut g = std::mem::take(&mut ws.g_tmp);
        g.resize(u.len(), [0.0; 3]);
        self.scalar_gradient(u, &mut g, ws);
        self.scalar_weak_div(&g, u, penalty_scale, natural_or_wall_zero, out, ws);
        for (gi, v) in out.iter_mut().enumerate() {
            *v /= self.mesh.jac[gi];
        }
        ws.g_tmp = g;
    }

    /// Linear fourth-order Cahn-Hilliard operator `kappa M0 L(L(c))` with the
    /// interface penalties used at runtime.
    pub fn biharmonic(&self, c: &[f64], out: &mut [f64], ws: &mut Workspace) {
        let scale = self.params.mobility() * self.params.kappa();
        let mut tmp = vec![0.0; c.len()];
        self.scalar_laplacian(c, 1.0, &mut tmp, ws);
        self.scalar_laplacian(&tmp, 1.0, out, ws);
        for v in out.iter_mut() {
            *v *= scale;
        }
    }

    /// Concentration gradient `G_c` into `ws.gc`.
    pub fn concentration_gradient(&self, q: &[State], ws: &mut Workspace) {
        let c: Vec<f64> = q.iter().map(|s| s[0]).collect();
        let mut g = std::mem::take(&mut ws.gc);
        g.resize(c.len(), [0.0; 3]);
        self.scalar_gradient(&c, &mut g, ws);
        ws.gc = g;
    }

    /// Chemical potential into `ws.mu`; requires `ws.gc`.
    pub fn chemical_potential(&self, q: &[State], ws: &mut Workspace) {
        let p = &self.params;
        let kappa = p.kappa();
        let c: Vec<f64> = q.iter().map(|s| s[0]).collect();
        let gc = std::mem::take(&mut ws.gc);
        let mut jdiv = std::mem::take(&mut ws.mu);
        jdiv.resize(c.len(), 0.0);
        let bflux = |f: &Face, k: usize, gn: f64| match f.kind {
            FaceKind::Boundary(BoundaryKind::FreeSlip) | FaceKind::Boundary(BoundaryKind::NoSlip) => {
                -p.fw_prime(c[f.nodes_l[k]]) / kappa
            }
            _ => gn,
        };
        self.scalar_weak_div(&gc, &c, 1.0, bflux, &mut jdiv, ws);
        for g in 0..c.len() {
            jdiv[g] = p.f0_prime(c[g]) - kappa * jdiv[g] / self.mesh.jac[g];
        }
        ws.mu = jdiv;
        ws.gc = gc;
    }

    /// Entropy variables and their lifted gradients; requires `ws.mu`.
    pub fn entropy_gradients(&self, q: &[State], ws: &mut Workspace) {
        let mesh = &self.mesh;
        let np = mesh.np;
        let p = &self.params;
        for g in 0..q.len() {
            ws.w[g] = p.entropy_vars(&q[g], ws.mu[g]);
        }
        for e in 0..mesh.n_elem {
            let r = e * np..(e + 1) * np;
            for l in 0..np {
                ws.jgv[e * np + l] = [[0.0; 3]; NVARS];
            }
            for d in 0..3 {
                apply_1d_vec(&mesh.bases[d].d, mesh.degrees, d, &ws.w[r.clone()], &mut ws.v_a);
                for l in 0..np {
                    let a = mesh.ja[e * np + l][d];
                    let t = &ws.v_a[l];
                    let jg = &mut ws.jgv[e * np + l];
                    for m in 0..NVARS {
                        jg[m][0] += a[0] * t[m];
                        jg[m][1] += a[1] * t[m];
                        jg[m][2] += a[2] * t[m];
                    }
                }
            }
        }
        ws.grad.copy_from_slice(&ws.jgv);
        for f in &mesh.faces {
            for k in 0..f.len() {
                let gl = f.nodes_l[k];
                let n = f.frames[k].n;
                let wl = ws.w[gl];
                let (dl, dr): (State, Option<(usize, State)>) = match f.kind {
                    FaceKind::Interior => {
                        let gr = f.nodes_r[k];
                        let wr = ws.w[gr];
                        let h: State = std::array::from_fn(|m| 0.5 * (wr[m] - wl[m]));
                        (h, Some((gr, h)))
                    }
                    FaceKind::Boundary(BoundaryKind::FreeSlip) => ([0.0; NVARS], None),
                    FaceKind::Boundary(BoundaryKind::NoSlip) => ([0.0, -wl[1], -wl[2], -wl[3], 0.0], None),
                    FaceKind::Boundary(BoundaryKind::Inflow) => {
                        let (_, uin) = self.inflow_data(&mesh.x[gl]);
                        ([0.0, 0.5 * (uin[0] - wl[1]), 0.5 * (uin[1] - wl[2]), 0.5 * (uin[2] - wl[3]), 0.0], None)
                    }
                    FaceKind::Boundary(BoundaryKind::Outflow) => ([0.0, 0.0, 0.0, 0.0, -0.5 * wl[4]], None),
                    FaceKind::Boundary(BoundaryKind::Periodic) => unreachable!("periodic faces are interior"),
                };
                let sl = f.jf[k] * f.lift_l;
                for m in 0..NVARS {
                    for d in 0..3 {
                        ws.grad[gl][m][d] += dl[m] * n[d] * sl;
                    }
                }
                if let Some((gr, h)) = dr {
                    let sr = f.jf[k] * f.lift_r;
                    for m in 0..NVARS {
                        for d in 0..3 {
                            ws.grad[gr][m][d] += h[m] * n[d] * sr;
                        }
                    }
                }
            }
        }
        for g in 0..q.len() {
            let j = mesh.jac[g];
            for m in 0..NVARS {
                for d in 0..3 {
                    ws.grad[g][m][d] /= j;
                }
            }
            ws.fv[g] = p.viscous_flux(q[g][0], &ws.grad[g]);
        }
    }

    fn inflow_data(&self, x: &Vec3) -> (f64, Vec3) {
        match &self.inflow {
            Some(f) => f(x),
            None => (0.0, [0.0; 3]),
        }
    }

    fn ghost(&self, kind: BoundaryKind, q: &State, x: &Vec3, n: &Vec3) -> State {
        match kind {
            BoundaryKind::FreeSlip | BoundaryKind::NoSlip => wall_ghost(q, n),
            BoundaryKind::Inflow => {
                let (cin, uin) = self.inflow_data(x);
                let mut g = self.params.state_from_primitive(cin, uin, 0.0);
                g[4] = q[4];
                g
            }
            BoundaryKind::Outflow => [q[0], q[1], q[2], q[3], 0.0],
            BoundaryKind::Periodic => unreachable!("periodic faces are interior"),
        }
    }

    /// Full residual: fills every field of the workspace and returns nothing;
    /// `ws.qt` holds `dq/dt`.
    pub fn residual(&self, q: &[State], t: f64, ws: &mut Workspace) {
        self.concentration_gradient(q, ws);
        self.chemical_potential(q, ws);
        self.entropy_gradients(q, ws);
        self.time_derivative(q, t, ws);
    }

    /// Residual with a finiteness check of the result.
    pub fn checked_residual(&self, q: &[State], t: f64, ws: &mut Workspace) -> Result<()> {
        self.residual(q, t, ws);
        check_finite("dq/dt", &ws.qt, t)
    }

    /// Time derivative from the state and the fields in the workspace.
    pub fn time_derivative(&self, q: &[State], t: f64, ws: &mut Workspace) {
        let mesh = &self.mesh;
        let np = mesh.np;
        let p = &self.params;
        let bulk = p.bulk();
        for e in 0..mesh.n_elem {
            let base = e * np;
            for l in 0..np {
                ws.rhs[base + l] = [0.0; NVARS];
            }
            for d in 0..3 {
                // contravariant inviscid flux
                for l in 0..np {
                    let g = base + l;
                    let s = &q[g];
                    let rho = p.density(s[0]);
                    let sr = rho.sqrt();
                    let u = [s[1] / sr, s[2] / sr, s[3] / sr];
                    let a = mesh.ja[g][d];
                    let ud = dot(&a, &u);
                    let h = 0.5 * rho * ud;
                    ws.v_a[l] = [s[0] * ud, h * u[0] + s[4] * a[0], h * u[1] + s[4] * a[1], h * u[2] + s[4] * a[2], 0.0];
                }
                apply_1d_vec(&mesh.bases[d].d, mesh.degrees, d, &ws.v_a, &mut ws.v_b);
                // contravariant viscous flux, weak form
                for l in 0..np {
                    let g = base + l;
                    let a = mesh.ja[g][d];
                    let fv = &ws.fv[g];
                    ws.v_a[l] = std::array::from_fn(|m| a[0] * fv[0][m] + a[1] * fv[1][m] + a[2] * fv[2][m]);
                }
                for l in 0..np {
                    let r = &mut ws.rhs[base + l];
                    for m in 0..NVARS {
                        r[m] -= ws.v_b[l][m];
                    }
                }
                apply_1d_vec(&mesh.bases[d].dw, mesh.degrees, d, &ws.v_a, &mut ws.v_b);
                for l in 0..np {
                    let r = &mut ws.rhs[base + l];
                    for m in 0..NVARS {
                        r[m] -= ws.v_b[l][m];
                    }
                }
            }
            // non-conservative terms and sources
            for l in 0..np {
                let g = base + l;
                let s = &q[g];
                let rho = p.density(s[0]);
                let sr = rho.sqrt();
                let u = [s[1] / sr, s[2] / sr, s[3] / sr];
                let jg = &ws.jgv[g];
                let r = &mut ws.rhs[g];
                for a in 0..3 {
                    r[1 + a] -= s[0] * jg[0][a] + 0.5 * rho * dot(&u, &jg[1 + a]);
                }
                r[4] -= bulk * (jg[1][0] + jg[2][1] + jg[3][2]);
                let j = mesh.jac[g];
                if p.gravity != [0.0; 3] {
                    let src = p.source(s);
                    for m in 0..NVARS {
                        r[m] += j * src[m];
                    }
                }
                if let Some(sf) = &self.source {
                    let src = sf(&mesh.x[g], t);
                    for m in 0..NVARS {
                        r[m] += j * src[m];
                    }
                }
            }
        }
        let m0 = p.mobility();
        for (fi, f) in mesh.faces.iter().enumerate() {
            for k in 0..f.len() {
                let gl = f.nodes_l[k];
                let frame = &f.frames[k];
                let n = &frame.n;
                let ql = &q[gl];
                let mul = ws.mu[gl];
                let (fel, pwl) = local_normal_terms(p, ql, mul, n);
                let sl = f.jf[k] * f.lift_l;
                match f.kind {
                    FaceKind::Interior => {
                        let gr = f.nodes_r[k];
                        let qr = &q[gr];
                        let mur = ws.mu[gr];
                        let fl = interface_flux(p, self.mode, ql, mul, qr, mur, frame);
                        let (fer, pwr) = local_normal_terms(p, qr, mur, n);
                        let fvs = br1_viscous_flux(&ws.fv[gl], &ws.fv[gr], m0 * self.beta[fi][k], mul, mur, n);
                        let sr = f.jf[k] * f.lift_r;
                        for m in 0..NVARS {
                            ws.rhs[gl][m] += (fvs[m] - (fl.fstar[m] - fel[m] + fl.diamond_l[m] - pwl[m])) * sl;
                            ws.rhs[gr][m] -= (fvs[m] - (fl.fstar[m] - fer[m] + fl.diamond_r[m] - pwr[m])) * sr;
                        }
                    }
                    FaceKind::Boundary(kind) => {
                        let gq = self.ghost(kind, ql, &mesh.x[gl], n);
                        let fl = interface_flux(p, self.mode, ql, mul, &gq, mul, frame);
                        let fvl = &ws.fv[gl];
                        let fvn: State = std::array::from_fn(|m| fvl[0][m] * n[0] + fvl[1][m] * n[1] + fvl[2][m] * n[2]);
                        let fvs = match kind {
                            BoundaryKind::FreeSlip => [0.0; NVARS],
                            BoundaryKind::NoSlip => [0.0, fvn[1], fvn[2], fvn[3], 0.0],
                            _ => fvn,
                        };
                        for m in 0..NVARS {
                            ws.rhs[gl][m] += (fvs[m] - (fl.fstar[m] - fel[m] + fl.diamond_l[m] - pwl[m])) * sl;
                        }
                    }
                }
            }
        }
        for g in 0..q.len() {
            let j = mesh.jac[g];
            let m = p.mass_diag(q[g][0]);
            for v in 0..NVARS {
                ws.qt[g][v] = ws.rhs[g][v] / (j * m[v]);
            }
        }
    }
}

fn natural_or_wall_zero(f: &Face, _k: usize, gn: f64) -> f64 {
    match f.kind {
        FaceKind::Boundary(BoundaryKind::Inflow) | FaceKind::Boundary(BoundaryKind::Outflow) => gn,
        _ => 0.0,
    }
}

pub fn check_finite(field: &'static str, v: &[State], t: f64) -> Result<()> {
    for (g, s) in v.iter().enumerate() {
        if s.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { field, node: g, t });
        }
    }
    Ok(())
}

/// Applies a 1D operator along direction `d` to an array of 5-vectors.
pub fn apply_1d_vec(op: &[f64], degrees: [usize; 3], d: usize, u: &[State], out: &mut [State]) {
    let nx = degrees[0] + 1;
    let ny = degrees[1] + 1;
    let nz = degrees[2] + 1;
    let (n, stride) = match d {
        0 => (nx, 1),
        1 => (ny, nx),
        _ => (nz, nx * ny),
    };
    let total = nx * ny * nz;
    for idx in 0..total {
        let i = (idx / stride) % n;
        let base = idx - i * stride;
        let o = &op[i * n..(i + 1) * n];
        let mut s = [0.0; NVARS];
        for m in 0..n {
            let v = &u[base + m * stride];
            let c = o[m];
            for r in 0..NVARS {
                s[r] += c * v[r];
            }
        }
        out[idx] = s;
    }
}
