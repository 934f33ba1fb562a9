//! Time loop driver with diagnostics, snapshots and restarts.

use crate::cases::{self, Problem};
use crate::config::{CaseConfig, CaseKind};
use crate::dg::{DgOperator, Workspace};
use crate::diagnostics;
use crate::error::{Error, Result};
use crate::output::{write_vtk, CsvWriter, DiagRow, Restart, Summary};
use crate::physics::State;
use crate::time::Stepper;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub restart: Option<PathBuf>,
    /// Overwrites the state with NaN before this step; used to exercise failure handling.
    pub inject_nan_at: Option<usize>,
    /// Skips VTK snapshots.
    pub no_fields: bool,
}

pub struct RunOutcome {
    pub summary: Summary,
    pub rows: Vec<DiagRow>,
    pub q: Vec<State>,
}

/// Diagnostics of the state `q` at time `t`; leaves a fresh residual in `ws`.
pub fn diagnose(op: &DgOperator, q: &[State], t: f64, ws: &mut Workspace) -> DiagRow {
    op.residual(q, t, ws);
    let report = diagnostics::entropy_report(op, q, ws);
    let (xc, area) = diagnostics::bubble_centroid(op, q).unwrap_or(([0.0; 3], 0.0));
    let vc = diagnostics::bubble_velocity(op, q).unwrap_or([0.0; 3]);
    DiagRow { t, report, xc, vc, area }
}

fn snapshot(dir: &Path, name: &str, op: &DgOperator, q: &[State], ws: &mut Workspace, opts: &RunOptions) -> Result<()> {
    if opts.no_fields {
        return Ok(());
    }
    op.concentration_gradient(q, ws);
    op.chemical_potential(q, ws);
    write_vtk(&dir.join(name), &op.mesh, &op.params, q, &ws.mu)
}

pub fn run(cfg: &CaseConfig, opts: &RunOptions) -> Result<RunOutcome> {
    cfg.validate()?;
    let pb = Problem::from_config(cfg)?;
    let op = &pb.op;
    let dir = &opts.out_dir;
    std::fs::create_dir_all(dir)?;
    let mut q = pb.q.clone();
    let mut stepper = Stepper::new(op, cfg.integrator, cfg.dt, 0.0)?;
    if let Some(path) = &opts.restart {
        let r = Restart::read(path)?;
        if r.q.len() != q.len() {
            return Err(Error::Config(format!("restart has {} nodes, mesh has {}", r.q.len(), q.len())));
        }
        q = r.q;
        stepper.t = r.t;
        stepper.steps = r.steps;
        if let Some(prev) = r.prev {
            stepper.set_history(prev, r.steps);
        }
    }
    let mut ws = op.workspace();
    let mut csv = CsvWriter::create(&dir.join("diagnostics.csv"))?;
    let mut rows = Vec::new();
    let row = diagnose(op, &q, stepper.t, &mut ws);
    csv.write(&row)?;
    rows.push(row);
    snapshot(dir, &format!("fields_{:07}.vtk", stepper.steps), op, &q, &mut ws, opts)?;

    let total = cfg.n_steps();
    let mut status = "ok".to_string();
    let mut failure = None;
    let mut last_good = q.clone();
    let start = stepper.steps;
    while stepper.steps < total.max(start) {
        last_good.copy_from_slice(&q);
        let prev_good = stepper.history().map(|h| h.to_vec());
        if Some(stepper.steps) == opts.inject_nan_at {
            q[0][1] = f64::NAN;
        }
        if let Err(e) = stepper.step(op, &mut q) {
            status = format!("failed: {e}");
            csv.flush()?;
            let steps = stepper.steps.saturating_sub(1);
            Restart { t: stepper.t - cfg.dt, steps, q: last_good.clone(), prev: prev_good }.write(&dir.join("restart_last_good.json"))?;
            snapshot(dir, "fields_last_good.vtk", op, &last_good, &mut ws, opts)?;
            q.copy_from_slice(&last_good);
            failure = Some(e);
            break;
        }
        let n = stepper.steps;
        let at_end = n >= total;
        if n % cfg.cadence == 0 || at_end {
            let row = diagnose(op, &q, stepper.t, &mut ws);
            csv.write(&row)?;
            rows.push(row);
            if let Some(tol) = cfg.steady_tol {
                if diagnostics::residual_norm(&ws) < tol {
                    status = "steady".to_string();
                    break;
                }
            }
        }
        if cfg.snapshot_cadence > 0 && n % cfg.snapshot_cadence == 0 && !at_end {
            snapshot(dir, &format!("fields_{n:07}.vtk"), op, &q, &mut ws, opts)?;
        }
    }
    csv.flush()?;

    if failure.is_none() {
        if stepper.steps > start {
            snapshot(dir, &format!("fields_{:07}.vtk", stepper.steps), op, &q, &mut ws, opts)?;
        }
        Restart { t: stepper.t, steps: stepper.steps, q: q.clone(), prev: stepper.history().map(|h| h.to_vec()) }
            .write(&dir.join("restart.json"))?;
    }

    op.residual(&q, stepper.t, &mut ws);
    let mut extra = serde_json::Map::new();
    if cfg.case == CaseKind::StaticBubble && failure.is_none() {
        if let Ok(pj) = cases::pressure_jump(op, &q, &mut ws) {
            extra.insert("pressure_jump".into(), serde_json::to_value(pj).unwrap_or_default());
        }
        op.residual(&q, stepper.t, &mut ws);
    }
    let summary = Summary {
        case: cfg.case.name().to_string(),
        status,
        seed: cfg.seed,
        params: op.params.clone(),
        degrees: cfg.degrees,
        n_elem: op.mesh.n_elem,
        steps: stepper.steps,
        t: stepper.t,
        dt: cfg.dt,
        residual_norm: diagnostics::residual_norm(&ws),
        velocity_norm: diagnostics::velocity_norm(op, &q),
        e_total: rows.last().map_or(0.0, |r| r.report.e_total),
        max_remainder: rows.iter().map(|r| r.report.remainder).fold(f64::NEG_INFINITY, f64::max),
        l2_errors: pb.errors(&q, stepper.t),
        extra: serde_json::Value::Object(extra),
    };
    summary.write(&dir.join("summary.json"))?;
    match failure {
        Some(e) => Err(e),
        None => Ok(RunOutcome { summary, rows, q }),
    }
}
