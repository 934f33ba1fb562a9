//! Case library: parameter sets, initial conditions, manufactured sources and
//! case observables.

use crate::config::{CaseConfig, CaseKind, InitialPressure, Mapping};
use crate::dg::{DgOperator, InflowFn, SourceFn, Workspace};
use crate::diagnostics;
use crate::error::{Error, Result};
use crate::mesh::{CartesianSpec, Mesh};
use crate::physics::{PhysParams, State, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

pub type ExactFn = Arc<dyn Fn(&Vec3, f64) -> State + Send + Sync>;

pub fn manufactured_params() -> PhysParams {
    PhysParams {
        rho1: 1.0,
        rho2: 2.0,
        eta1: 1e-3,
        eta2: 1e-3,
        epsilon: 1.0 / 2f64.sqrt(),
        t_ch: 1e3,
        c0_sq: 1e3,
        sigma: 6.236e-3,
        gravity: [0.0; 3],
        theta_w_deg: 90.0,
    }
}

pub fn random_params() -> PhysParams {
    PhysParams {
        rho1: 1000.0,
        rho2: 1.0,
        eta1: 1e-3,
        eta2: 1e-4,
        epsilon: 0.75,
        t_ch: 10.0,
        c0_sq: 1e2,
        sigma: 1.0,
        gravity: [0.0; 3],
        theta_w_deg: 90.0,
    }
}

/// Static bubble parameters for the `16^2`, `32^2` and `64^2` grids (`row` 0, 1, 2).
pub fn static_bubble_params(row: usize) -> PhysParams {
    let epsilon = [0.16, 0.08, 0.05][row.min(2)];
    PhysParams {
        rho1: 1.0,
        rho2: 1.0,
        eta1: 1.0,
        eta2: 1.0,
        epsilon,
        t_ch: 7.0,
        c0_sq: 1e3,
        sigma: 1.0,
        gravity: [0.0; 3],
        theta_w_deg: 90.0,
    }
}

/// Rising bubble parameters of test 1 or test 2.
pub fn rising_bubble_params(test: usize) -> PhysParams {
    let g = [0.0, -0.98, 0.0];
    if test == 2 {
        PhysParams {
            rho1: 1000.0,
            rho2: 1.0,
            eta1: 10.0,
            eta2: 0.1,
            epsilon: 0.04,
            t_ch: 1e4,
            c0_sq: 1e3,
            sigma: 1.96,
            gravity: g,
            theta_w_deg: 90.0,
        }
    } else {
        PhysParams {
            rho1: 1000.0,
            rho2: 100.0,
            eta1: 10.0,
            eta2: 1.0,
            epsilon: 0.03,
            t_ch: 1e3,
            c0_sq: 1e3,
            sigma: 24.5,
            gravity: g,
            theta_w_deg: 90.0,
        }
    }
}

fn inflow_params() -> PhysParams {
    PhysParams {
        rho1: 10.0,
        rho2: 1.0,
        eta1: 1e-2,
        eta2: 1e-3,
        epsilon: 0.1,
        t_ch: 10.0,
        c0_sq: 1e2,
        sigma: 0.1,
        gravity: [0.0; 3],
        theta_w_deg: 90.0,
    }
}

pub fn default_params(kind: CaseKind) -> PhysParams {
    match kind {
        CaseKind::Manufactured => manufactured_params(),
        CaseKind::Random => random_params(),
        CaseKind::StaticBubble => static_bubble_params(0),
        CaseKind::RisingBubble => rising_bubble_params(1),
        CaseKind::InflowOutflow => inflow_params(),
        CaseKind::FreeStream => manufactured_params(),
    }
}

/// Manufactured solution on `[-1, 1]^2` and its source.
pub mod mms {
    use super::*;

    /// Exact `(c, u, v, p)` at `(x, y, t)`.
    pub fn fields(x: f64, y: f64, t: f64) -> [f64; 4] {
        let (sx, cx) = (PI * x).sin_cos();
        let (sy, cy) = (PI * y).sin_cos();
        let st = t.sin();
        [0.5 * (1.0 + cx * cy * st), 2.0 * sx * cy * st, -2.0 * cx * sy * st, 2.0 * sx * sy * t.cos()]
    }

    pub fn state(params: &PhysParams, x: &Vec3, t: f64) -> State {
        let [c, u, v, p] = fields(x[0], x[1], t);
        params.state_from_primitive(c, [u, v, 0.0], p)
    }

    /// Strong-form residual of the exact fields, added to the right-hand side.
    pub fn source(params: &PhysParams, x: f64, y: f64, t: f64) -> State {
        let (sx, cx) = (PI * x).sin_cos();
        let (sy, cy) = (PI * y).sin_cos();
        let (st, ct) = t.sin_cos();
        let [c, u, v, _] = fields(x, y, t);
        let c_t = 0.5 * cx * cy * ct;
        let c_x = -0.5 * PI * sx * cy * st;
        let c_y = -0.5 * PI * cx * sy * st;
        let a = 12.0 * params.sigma / params.epsilon;
        let kappa = params.kappa();
        let f0pp = a * (2.0 - 12.0 * c + 12.0 * c * c);
        let f0ppp = a * (24.0 * c - 12.0);
        let lap_c = -2.0 * PI * PI * (c - 0.5);
        let g = f0pp + 2.0 * kappa * PI * PI;
        let (mu_x, mu_y) = (g * c_x, g * c_y);
        let lap_mu = f0ppp * (c_x * c_x + c_y * c_y) + g * lap_c;

        let rho = params.rho1 * c + params.rho2 * (1.0 - c);
        let eta = params.eta1 * c + params.eta2 * (1.0 - c);
        let drho = params.rho1 - params.rho2;
        let deta = params.eta1 - params.eta2;
        let u_t = 2.0 * sx * cy * ct;
        let v_t = -2.0 * cx * sy * ct;
        let (u_x, u_y) = (2.0 * PI * cx * cy * st, -2.0 * PI * sx * sy * st);
        let (v_x, v_y) = (2.0 * PI * sx * sy * st, -2.0 * PI * cx * cy * st);
        let p_t = -2.0 * sx * sy * st;
        let (p_x, p_y) = (2.0 * PI * cx * sy * ct, 2.0 * PI * sx * cy * ct);
        let u_grad_rho = drho * (u * c_x + v * c_y);

        let s_c = c_t + u * c_x + v * c_y - params.mobility() * lap_mu;
        let s_u = rho * u_t + 0.5 * drho * c_t * u + 0.5 * u * u_grad_rho + rho * (u * u_x + v * u_y) + c * mu_x + p_x
            - deta * (c_x * 2.0 * u_x + c_y * (u_y + v_x))
            + eta * 2.0 * PI * PI * u;
        let s_v = rho * v_t + 0.5 * drho * c_t * v + 0.5 * v * u_grad_rho + rho * (u * v_x + v * v_y) + c * mu_y + p_y
            - deta * (c_x * (v_x + u_y) + c_y * 2.0 * v_y)
            + eta * 2.0 * PI * PI * v;
        [s_c, s_u, s_v, 0.0, p_t]
    }
}

/// Concentration entering through the inflow faces: a two-layer stream split at `y = 1/2`.
pub fn inflow_concentration(params: &PhysParams, x: &Vec3) -> f64 {
    0.5 + 0.5 * ((x[1] - 0.5) / params.epsilon).tanh()
}

/// Builds the mesh described by a configuration.
pub fn build_mesh(cfg: &CaseConfig) -> Result<Mesh> {
    let mc = &cfg.mesh;
    let mut mesh = if let Some(file) = &mc.file {
        Mesh::read_file(Path::new(file), cfg.degrees)?
    } else {
        let counts = mc.counts.ok_or_else(|| Error::Config("mesh.counts missing".into()))?;
        let tags = mc.boundary.ok_or_else(|| Error::Config("mesh.boundary missing".into()))?;
        let spec = CartesianSpec {
            counts,
            lo: mc.lo.unwrap_or([0.0; 3]),
            hi: mc.hi.unwrap_or([1.0; 3]),
            tags: tags.as_array(),
        };
        Mesh::cartesian(&spec, cfg.degrees)?
    };
    if let Mapping::Sinusoidal { amplitude } = mc.mapping {
        let (lo, hi) = bounding_box(&mesh);
        mesh.apply_mapping(|p| {
            let mut s = amplitude;
            for d in 0..3 {
                s *= (PI * (p[d] - lo[d]) / (hi[d] - lo[d])).sin();
            }
            [p[0] + s, p[1] + s, p[2] + s]
        })?;
    }
    Ok(mesh)
}

fn bounding_box(mesh: &Mesh) -> (Vec3, Vec3) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for v in &mesh.vertices {
        for d in 0..3 {
            lo[d] = lo[d].min(v[d]);
            hi[d] = hi[d].max(v[d]);
        }
    }
    (lo, hi)
}

/// Initial rising-bubble concentration: a disc of radius 1/4 centred at `(0.5, 0.5)` with `C = 0` inside.
pub fn rising_bubble_concentration(params: &PhysParams, x: f64, y: f64) -> f64 {
    let r = ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt();
    1.0 - 0.5 * ((-2.0 * (r - 0.25) / params.epsilon).tanh() + 1.0)
}

/// `-g_y` times the integral of the initial density from `y` up to `top`, by composite Gauss-Legendre quadrature.
pub fn hydrostatic_pressure(params: &PhysParams, x: f64, y: f64, top: f64) -> f64 {
    const NODES: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
    let cells = 400;
    let h = (top - y) / cells as f64;
    let mut s = 0.0;
    for i in 0..cells {
        let mid = y + (i as f64 + 0.5) * h;
        for xi in NODES {
            s += 0.5 * h * params.density(rising_bubble_concentration(params, x, mid + 0.5 * h * xi));
        }
    }
    -params.gravity[1] * s
}

/// An initialized problem.
pub struct Problem {
    pub kind: CaseKind,
    pub op: DgOperator,
    pub q: Vec<State>,
    pub exact: Option<ExactFn>,
    pub seed: u64,
}

impl Problem {
    pub fn from_config(cfg: &CaseConfig) -> Result<Self> {
        let params = cfg.params.clone().unwrap_or_else(|| default_params(cfg.case));
        params.validate()?;
        let mesh = build_mesh(cfg)?;
        let (lo, hi) = bounding_box(&mesh);
        let mut op = DgOperator::new(mesh, params.clone(), cfg.flux_mode, cfg.kappa_beta)?;
        let mut exact: Option<ExactFn> = None;
        let q: Vec<State> = match cfg.case {
            CaseKind::Manufactured => {
                if (lo[0] + 1.0).abs() > 1e-12 || (lo[1] + 1.0).abs() > 1e-12 || (hi[0] - 1.0).abs() > 1e-12 || (hi[1] - 1.0).abs() > 1e-12 {
                    return Err(Error::Config("manufactured case needs the domain [-1, 1]^2".into()));
                }
                let sp = params.clone();
                let src: SourceFn = Arc::new(move |x: &Vec3, t: f64| mms::source(&sp, x[0], x[1], t));
                op = op.with_source(src);
                let ep = params.clone();
                exact = Some(Arc::new(move |x: &Vec3, t: f64| mms::state(&ep, x, t)));
                op.mesh.x.iter().map(|x| mms::state(&params, x, 0.0)).collect()
            }
            CaseKind::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                (0..op.n_nodes())
                    .map(|_| {
                        let c = rng.gen_range(0.0..1.0);
                        let u = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                        let p = rng.gen_range(-1.0..1.0);
                        params.state_from_primitive(c, u, p)
                    })
                    .collect()
            }
            CaseKind::StaticBubble => op
                .mesh
                .x
                .iter()
                .map(|x| {
                    let r = ((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)).sqrt();
                    let c = 0.5 * (1.0 - (-(r - 0.25) / 2.5e-3).tanh());
                    params.state_from_primitive(c, [0.0; 3], 0.0)
                })
                .collect(),
            CaseKind::RisingBubble => {
                let top = op.mesh.x.iter().fold(f64::NEG_INFINITY, |m, x| m.max(x[1]));
                op.mesh
                    .x
                    .iter()
                    .map(|x| {
                        let c = rising_bubble_concentration(&params, x[0], x[1]);
                        let p = match cfg.initial_pressure {
                            InitialPressure::Zero => 0.0,
                            InitialPressure::Hydrostatic => hydrostatic_pressure(&params, x[0], x[1], top),
                        };
                        params.state_from_primitive(c, [0.0; 3], p)
                    })
                    .collect()
            }
            CaseKind::InflowOutflow => {
                let speed = cfg.inflow_speed.unwrap_or(1.0);
                let ip = params.clone();
                let inflow: InflowFn = Arc::new(move |x: &Vec3| (inflow_concentration(&ip, x), [speed, 0.0, 0.0]));
                op = op.with_inflow(inflow);
                op.mesh
                    .x
                    .iter()
                    .map(|x| params.state_from_primitive(inflow_concentration(&params, x), [speed, 0.0, 0.0], 0.0))
                    .collect()
            }
            CaseKind::FreeStream => {
                let s = params.state_from_primitive(0.3, [0.7, -0.4, 0.2], 0.5);
                vec![s; op.n_nodes()]
            }
        };
        Ok(Self { kind: cfg.case, op, q, exact, seed: cfg.seed })
    }

    /// Discrete L2 errors against the exact solution at time `t`, if one exists.
    pub fn errors(&self, q: &[State], t: f64) -> Option<State> {
        self.exact.as_ref().map(|ex| diagnostics::l2_errors(&self.op, q, |x| ex(x, t)))
    }
}

/// Static bubble pressure jump against the Laplace law.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PressureJump {
    /// Radius of the `C = 1/2` contour.
    pub radius: f64,
    pub p_inside: f64,
    pub p_outside: f64,
    pub jump: f64,
    /// `sigma / radius`.
    pub jump_exact: f64,
    pub rel_error: f64,
}

/// Static pressure probes at `(0.5, 0.5)` and `(1.0, 0.5)`; the radius is averaged
/// over eight rays of the `C = 1/2` contour.
pub fn pressure_jump(op: &DgOperator, q: &[State], ws: &mut Workspace) -> Result<PressureJump> {
    op.residual(q, 0.0, ws);
    let ps = diagnostics::static_pressure(op, q, ws);
    let (lo, hi) = bounding_box(&op.mesh);
    let z = 0.5 * (lo[2] + hi[2]);
    let center = [0.5, 0.5, z];
    let p_inside = diagnostics::point_value(op, &ps, &center)?;
    let p_outside = diagnostics::point_value(op, &ps, &[1.0, 0.5, z])?;
    let mut radius = 0.0;
    for k in 0..8 {
        let a = k as f64 * PI / 4.0;
        radius += diagnostics::contour_radius(op, q, &center, &[a.cos(), a.sin(), 0.0], 0.49)? / 8.0;
    }
    let jump = p_inside - p_outside;
    let jump_exact = op.params.sigma / radius;
    Ok(PressureJump { radius, p_inside, p_outside, jump, jump_exact, rel_error: (jump - jump_exact).abs() / jump_exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{BoundaryTags, InitialPressure, MeshConfig};
    use crate::fluxes::FluxMode;
    use crate::mesh::BoundaryKind;
    use crate::time::Integrator;

    fn config(case: CaseKind, counts: [usize; 3], lo: Vec3, hi: Vec3, tags: BoundaryTags) -> CaseConfig {
        CaseConfig {
            case,
            params: None,
            mesh: MeshConfig { counts: Some(counts), lo: Some(lo), hi: Some(hi), file: None, mapping: Mapping::Identity, boundary: Some(tags) },
            degrees: [3, 3, 1],
            flux_mode: FluxMode::Ers,
            kappa_beta: 1.0,
            integrator: Integrator::Rk3,
            dt: 1e-5,
            t_final: 0.0,
            cadence: 1,
            snapshot_cadence: 0,
            seed: 7,
            steady_tol: None,
            inflow_speed: None,
            initial_pressure: InitialPressure::Zero,
        }
    }

    #[test]
    fn manufactured_initial_state() {
        let cfg = config(CaseKind::Manufactured, [2, 2, 1], [-1.0, -1.0, 0.0], [1.0, 1.0, 1.0], BoundaryTags::all(BoundaryKind::Periodic));
        let pb = Problem::from_config(&cfg).unwrap();
        for s in &pb.q {
            assert!((s[0] - 0.5).abs() < 1e-15 && s[1] == 0.0 && s[2] == 0.0);
        }
        let e = pb.errors(&pb.q, 0.0).unwrap();
        assert!(e.iter().all(|v| *v < 1e-15));
        let bad = config(CaseKind::Manufactured, [2, 2, 1], [0.0; 3], [1.0; 3], BoundaryTags::all(BoundaryKind::Periodic));
        assert!(Problem::from_config(&bad).is_err());
    }

    #[test]
    fn random_case_is_deterministic() {
        let cfg = config(CaseKind::Random, [2, 2, 2], [0.0; 3], [1.0; 3], BoundaryTags::all(BoundaryKind::Periodic));
        let a = Problem::from_config(&cfg).unwrap();
        let b = Problem::from_config(&cfg).unwrap();
        assert_eq!(a.q, b.q);
        let p = &a.op.params;
        for s in &a.q {
            let u = p.velocity(s);
            assert!((0.0..1.0).contains(&s[0]) && u.iter().all(|v| v.abs() <= 1.0) && s[4].abs() <= 1.0);
        }
        let mut other = cfg.clone();
        other.seed = 8;
        assert_ne!(Problem::from_config(&other).unwrap().q, a.q);
    }

    #[test]
    fn hydrostatic_pressure_integrates_column_weight() {
        let p = rising_bubble_params(1);
        let g = -p.gravity[1];
        let liquid = hydrostatic_pressure(&p, 0.02, 0.3, 2.0);
        assert!((liquid - g * p.rho1 * 1.7).abs() <= 1e-9 * liquid, "{liquid}");
        let through = hydrostatic_pressure(&p, 0.5, 0.0, 2.0);
        let expect = g * (p.rho1 * 1.5 + p.rho2 * 0.5);
        assert!((through - expect).abs() <= 1e-6 * expect, "{through} vs {expect}");
        assert_eq!(hydrostatic_pressure(&p, 0.3, 2.0, 2.0), 0.0);
    }

    #[test]
    fn rising_bubble_initial_observables() {
        let tags = BoundaryTags {
            x_minus: BoundaryKind::FreeSlip,
            x_plus: BoundaryKind::FreeSlip,
            y_minus: BoundaryKind::NoSlip,
            y_plus: BoundaryKind::NoSlip,
            z_minus: BoundaryKind::Periodic,
            z_plus: BoundaryKind::Periodic,
        };
        let cfg = config(CaseKind::RisingBubble, [4, 8, 1], [0.0; 3], [1.0, 2.0, 1.0], tags);
        let pb = Problem::from_config(&cfg).unwrap();
        let (xc, _) = diagnostics::bubble_centroid(&pb.op, &pb.q).unwrap();
        assert!((xc[0] - 0.5).abs() < 1e-12 && (xc[1] - 0.5).abs() < 1e-3, "{xc:?}");
        let vc = diagnostics::bubble_velocity(&pb.op, &pb.q).unwrap();
        assert!(vc.iter().all(|v| *v == 0.0));
    }
}
