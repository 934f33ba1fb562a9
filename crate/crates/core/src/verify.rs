//! Quick property checks behind `espdg verify`.

use crate::basis::Basis1d;
use crate::cases::{self, Problem};
use crate::config::{BoundaryTags, CaseConfig, CaseKind, InitialPressure, Mapping, MeshConfig};
use crate::diagnostics;
use crate::fluxes::FluxMode;
use crate::mesh::BoundaryKind;
use crate::physics::NVARS;
use crate::time::{Integrator, Stepper};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tol: f64,
}

impl Check {
    pub fn pass(&self) -> bool {
        self.value <= self.tol
    }
}

/// Desk-scale default configuration of each case.
pub fn preset(kind: CaseKind) -> CaseConfig {
    let periodic = BoundaryTags::all(BoundaryKind::Periodic);
    let walls = BoundaryTags {
        x_minus: BoundaryKind::FreeSlip,
        x_plus: BoundaryKind::FreeSlip,
        y_minus: BoundaryKind::NoSlip,
        y_plus: BoundaryKind::NoSlip,
        z_minus: BoundaryKind::Periodic,
        z_plus: BoundaryKind::Periodic,
    };
    let channel = BoundaryTags {
        x_minus: BoundaryKind::Inflow,
        x_plus: BoundaryKind::Outflow,
        y_minus: BoundaryKind::NoSlip,
        y_plus: BoundaryKind::NoSlip,
        z_minus: BoundaryKind::Periodic,
        z_plus: BoundaryKind::Periodic,
    };
    let (counts, lo, hi, tags, degrees, kb, integrator, dt, t_final) = match kind {
        CaseKind::Manufactured => ([8, 8, 1], [-1.0, -1.0, 0.0], [1.0; 3], periodic, [4, 4, 1], 0.0, Integrator::Imex { order: 2 }, 5e-5, 0.1),
        CaseKind::Random => ([2, 2, 2], [0.0; 3], [1.0; 3], periodic, [3, 3, 3], 1.0, Integrator::Imex { order: 2 }, 5e-5, 1.0),
        CaseKind::StaticBubble => ([16, 16, 1], [0.0; 3], [1.0; 3], periodic, [2, 2, 1], 1.0, Integrator::Imex { order: 1 }, 1e-5, 2.0),
        CaseKind::RisingBubble => ([8, 16, 1], [0.0; 3], [1.0, 2.0, 1.0], walls, [3, 3, 1], 1.0, Integrator::Imex { order: 2 }, 2e-5, 0.1),
        CaseKind::InflowOutflow => ([8, 4, 1], [0.0; 3], [2.0, 1.0, 1.0], channel, [3, 3, 1], 1.0, Integrator::Imex { order: 2 }, 1e-4, 0.01),
        CaseKind::FreeStream => ([4, 4, 4], [0.0; 3], [1.0; 3], periodic, [4, 4, 4], 1.0, Integrator::Rk3, 1e-4, 0.0),
    };
    let mapping = if kind == CaseKind::FreeStream { Mapping::Sinusoidal { amplitude: 0.1 } } else { Mapping::Identity };
    CaseConfig {
        case: kind,
        params: Some(cases::default_params(kind)),
        mesh: MeshConfig { counts: Some(counts), lo: Some(lo), hi: Some(hi), file: None, mapping, boundary: Some(tags) },
        degrees,
        flux_mode: FluxMode::Ers,
        kappa_beta: kb,
        integrator,
        dt,
        t_final,
        cadence: 10,
        snapshot_cadence: 0,
        seed: 0,
        steady_tol: if kind == CaseKind::StaticBubble { Some(1e-7) } else { None },
        inflow_speed: if kind == CaseKind::InflowOutflow { Some(1.0) } else { None },
        initial_pressure: if kind == CaseKind::RisingBubble { InitialPressure::Hydrostatic } else { InitialPressure::Zero },
    }
}

fn sbp() -> f64 {
    (1..=10).map(|n| Basis1d::new(n).map(|b| b.sbp_defect()).unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
}

fn free_stream() -> f64 {
    let cfg = preset(CaseKind::FreeStream);
    match Problem::from_config(&cfg) {
        Ok(pb) => {
            let mut ws = pb.op.workspace();
            pb.op.residual(&pb.q, 0.0, &mut ws);
            diagnostics::residual_norm(&ws)
        }
        Err(_) => f64::INFINITY,
    }
}

fn contraction() -> f64 {
    let p = cases::random_params();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let u = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let q = p.state_from_primitive(rng.gen_range(-0.2..1.2), u, rng.gen_range(-5.0..5.0));
        let w = p.entropy_vars(&q, rng.gen_range(-5.0..5.0));
        for d in 0..3 {
            let f = p.inviscid_flux(&q, d);
            let phi = p.noncons_matrix(&q, d);
            for m in 0..NVARS {
                let terms: Vec<f64> = (0..NVARS).map(|k| w[k] * phi[m][k]).collect();
                let scale = terms.iter().map(|v| v.abs()).sum::<f64>().max(f[m].abs());
                if scale > 0.0 {
                    worst = worst.max((f[m] - terms.iter().sum::<f64>()).abs() / scale);
                }
            }
        }
    }
    worst
}

/// Largest `|R| / E` for central fluxes and largest `R / E` for the ERS over 20 RK3 steps.
fn remainder(mode: FluxMode) -> f64 {
    let mut cfg = preset(CaseKind::Random);
    cfg.flux_mode = mode;
    cfg.kappa_beta = 0.0;
    cfg.seed = 5;
    let Ok(pb) = Problem::from_config(&cfg) else { return f64::INFINITY };
    let op = &pb.op;
    let mut q = pb.q.clone();
    let Ok(mut st) = Stepper::new(op, Integrator::Rk3, 1e-5, 0.0) else { return f64::INFINITY };
    let mut ws = op.workspace();
    let mut worst = f64::NEG_INFINITY;
    for k in 0..=20 {
        if k > 0 && st.step(op, &mut q).is_err() {
            return f64::INFINITY;
        }
        op.residual(&q, st.t, &mut ws);
        let r = diagnostics::entropy_report(op, &q, &ws);
        let v = if mode == FluxMode::Central { r.remainder.abs() } else { r.remainder };
        worst = worst.max(v / r.e_total);
    }
    worst
}

pub fn run_checks() -> Vec<Check> {
    vec![
        Check { name: "SBP identity, N = 1..10", value: sbp(), tol: 1e-13 },
        Check { name: "free-stream residual, curved 4^3 mesh, N = 4", value: free_stream(), tol: 1e-10 },
        Check { name: "entropy contraction, 1000 random states", value: contraction(), tol: 1e-12 },
        Check { name: "central remainder |R|/E", value: remainder(FluxMode::Central), tol: 1e-9 },
        Check { name: "ERS remainder R/E", value: remainder(FluxMode::Ers), tol: 1e-12 },
    ]
}
