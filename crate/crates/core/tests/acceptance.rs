//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run a subset with `cargo test --test acceptance -- 1 4`.

use espdg_core::basis::Basis1d;
use espdg_core::cases::{self, Problem};
use espdg_core::config::{BoundaryTags, CaseConfig, CaseKind, InitialPressure, Mapping, MeshConfig};
use espdg_core::diagnostics;
use espdg_core::fluxes::FluxMode;
use espdg_core::mesh::BoundaryKind;
use espdg_core::physics::{State, NVARS};
use espdg_core::time::{imex_scalar, ImplicitOperator, Integrator, Stepper};
use espdg_core::verify::preset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

const ENTROPY_GROWTH_BOUND: f64 = 1e-3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn cartesian(counts: [usize; 3], lo: [f64; 3], hi: [f64; 3], tags: BoundaryTags) -> MeshConfig {
    MeshConfig { counts: Some(counts), lo: Some(lo), hi: Some(hi), file: None, mapping: Mapping::Identity, boundary: Some(tags) }
}

fn config(case: CaseKind, mesh: MeshConfig, degrees: [usize; 3], mode: FluxMode, kappa_beta: f64, integrator: Integrator, dt: f64) -> CaseConfig {
    CaseConfig {
        case,
        params: None,
        mesh,
        degrees,
        flux_mode: mode,
        kappa_beta,
        integrator,
        dt,
        t_final: 0.0,
        cadence: 1,
        snapshot_cadence: 0,
        seed: 0,
        steady_tol: None,
        inflow_speed: None,
        initial_pressure: InitialPressure::Zero,
    }
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 1..=10 {
        worst = worst.max(Basis1d::new(n).unwrap().sbp_defect());
    }
    Outcome { pass: worst <= 1e-13, detail: format!("max |Q + Q^T - B| = {worst:.2e} (tol 1e-13)") }
}

fn criterion_2() -> Outcome {
    let mut mesh = cartesian([4, 4, 4], [0.0; 3], [1.0; 3], BoundaryTags::all(BoundaryKind::Periodic));
    mesh.mapping = Mapping::Sinusoidal { amplitude: 0.1 };
    let cfg = config(CaseKind::FreeStream, mesh, [4, 4, 4], FluxMode::Ers, 1.0, Integrator::Rk3, 1e-4);
    let pb = Problem::from_config(&cfg).unwrap();
    let mut ws = pb.op.workspace();
    pb.op.residual(&pb.q, 0.0, &mut ws);
    let r = diagnostics::residual_norm(&ws);
    Outcome { pass: r <= 1e-10, detail: format!("max |dq/dt| = {r:.2e} (tol 1e-10)") }
}

fn criterion_3() -> Outcome {
    let p = cases::random_params();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let c = rng.gen_range(-0.2..1.2);
        let u = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let q = p.state_from_primitive(c, u, rng.gen_range(-5.0..5.0));
        let mu = rng.gen_range(-5.0..5.0);
        let w = p.entropy_vars(&q, mu);
        for d in 0..3 {
            let f = p.inviscid_flux(&q, d);
            let phi = p.noncons_matrix(&q, d);
            for m in 0..NVARS {
                let lhs = f[m];
                let rhs: f64 = (0..NVARS).map(|k| w[k] * phi[m][k]).sum();
                let scale: f64 = (0..NVARS).map(|k| (w[k] * phi[m][k]).abs()).sum::<f64>().max(lhs.abs());
                if scale > 0.0 {
                    worst = worst.max((lhs - rhs).abs() / scale);
                }
            }
        }
    }
    Outcome { pass: worst <= 1e-12, detail: format!("max relative defect = {worst:.2e} (tol 1e-12)") }
}

fn random_remainders(mode: FluxMode, kappa_beta: f64) -> (f64, Vec<f64>) {
    let mesh = cartesian([2, 2, 2], [0.0; 3], [1.0; 3], BoundaryTags::all(BoundaryKind::Periodic));
    let mut cfg = config(CaseKind::Random, mesh, [3, 3, 3], mode, kappa_beta, Integrator::Rk3, 1e-5);
    cfg.seed = 11;
    let pb = Problem::from_config(&cfg).unwrap();
    let op = &pb.op;
    let mut q = pb.q.clone();
    let mut st = Stepper::new(op, Integrator::Rk3, 1e-5, 0.0).unwrap();
    let mut ws = op.workspace();
    op.residual(&q, 0.0, &mut ws);
    let e0 = diagnostics::entropy_report(op, &q, &ws).e_total;
    let mut rem = vec![diagnostics::entropy_report(op, &q, &ws).remainder];
    for _ in 0..200 {
        st.step(op, &mut q).unwrap();
        op.residual(&q, st.t, &mut ws);
        rem.push(diagnostics::entropy_report(op, &q, &ws).remainder);
    }
    (e0, rem)
}

fn criterion_4() -> Outcome {
    let (e0, rc) = random_remainders(FluxMode::Central, 0.0);
    let central = rc.iter().fold(0.0f64, |m, r| m.max(r.abs())) / e0.abs();
    let (e0s, rs) = random_remainders(FluxMode::Ers, 0.0);
    let ers = rs.iter().fold(f64::NEG_INFINITY, |m, r| m.max(*r)) / e0s.abs();
    Outcome {
        pass: central <= 1e-9 && ers <= 1e-12,
        detail: format!("central max|R|/E0 = {central:.2e} (tol 1e-9), ERS max R/E0 = {ers:.2e} (tol 1e-12)"),
    }
}

fn criterion_5() -> Outcome {
    let mut pass = true;
    let mut failures = 0;
    let mut worst_rise: f64 = f64::NEG_INFINITY;
    let mut final_ratio: Vec<f64> = Vec::new();
    for seed in 0..10 {
        let mut cfg = preset(CaseKind::Random);
        cfg.seed = seed;
        let pb = Problem::from_config(&cfg).unwrap();
        let op = &pb.op;
        let mut q = pb.q.clone();
        let mut st = Stepper::new(op, cfg.integrator, cfg.dt, 0.0).unwrap();
        let mut ws = op.workspace();
        op.residual(&q, 0.0, &mut ws);
        let e0 = diagnostics::entropy_report(op, &q, &ws).e_total;
        let mut prev = e0;
        let n = cfg.n_steps();
        let mut ok = true;
        for k in 1..=n {
            if st.step(op, &mut q).is_err() {
                ok = false;
                break;
            }
            if k % 10 == 0 || k == n {
                op.residual(&q, st.t, &mut ws);
                let e = diagnostics::entropy_report(op, &q, &ws).e_total;
                worst_rise = worst_rise.max((e - prev) / e0);
                prev = e;
            }
        }
        failures += usize::from(!ok);
        pass &= ok;
        final_ratio.push(prev / e0);
    }
    pass &= worst_rise <= 1e-8;
    let lo = final_ratio.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = final_ratio.iter().cloned().fold(0.0, f64::max);
    Outcome {
        pass,
        detail: format!(
            "10 seeds to t = 1: {failures} non-finite failures, max entropy rise between samples {worst_rise:.2e} E0 (tol 1e-8), E(1)/E0 in [{lo:.3}, {hi:.3}]"
        ),
    }
}

fn mms_errors(n: usize, m: usize) -> State {
    let mesh = cartesian([m, m, 1], [-1.0, -1.0, 0.0], [1.0, 1.0, 1.0], BoundaryTags::all(BoundaryKind::Periodic));
    let dt = 5e-5;
    let mut cfg = config(CaseKind::Manufactured, mesh, [n, n, 1], FluxMode::Ers, 0.0, Integrator::Imex { order: 2 }, dt);
    cfg.t_final = 0.1;
    let pb = Problem::from_config(&cfg).unwrap();
    let mut q = pb.q.clone();
    let mut st = Stepper::new(&pb.op, cfg.integrator, dt, 0.0).unwrap();
    for _ in 0..cfg.n_steps() {
        st.step(&pb.op, &mut q).unwrap();
    }
    pb.errors(&q, st.t).unwrap()
}

fn criterion_6() -> Outcome {
    // c, sqrt(rho) u, sqrt(rho) v, p at 16^2 and the order between 8^2 and 16^2
    let reference: [(usize, [f64; 4], [f64; 4]); 2] =
        [(2, [5.35e-5, 9.23e-4, 9.23e-4, 8.67e-3], [3.08, 2.75, 2.75, 2.50]), (4, [1.94e-8, 3.61e-7, 3.61e-7, 4.42e-6], [5.12, 5.05, 5.05, 4.68])];
    let mut pass = true;
    let mut detail = String::new();
    for (n, err_ref, ord_ref) in reference {
        let e: Vec<State> = [4, 8, 16].iter().map(|&m| mms_errors(n, m)).collect();
        let vars = [0, 1, 2, 4];
        for (k, &v) in vars.iter().enumerate() {
            let order = (e[1][v] / e[2][v]).log2();
            let ratio = e[2][v] / err_ref[k];
            let ok_order = (order - ord_ref[k]).abs() <= 0.4;
            let ok_mag = (1.0 / 3.0..=3.0).contains(&ratio);
            pass &= ok_order && ok_mag;
            detail += &format!(
                "\n    N={n} var {v}: errors {:.2e} {:.2e} {:.2e}, order {order:.2} (ref {:.2}), error/ref {ratio:.2}",
                e[0][v], e[1][v], e[2][v], ord_ref[k]
            );
        }
    }
    Outcome { pass, detail }
}

fn criterion_7() -> Outcome {
    let cfg = preset(CaseKind::StaticBubble);
    let pb = Problem::from_config(&cfg).unwrap();
    let op = &pb.op;
    let mut q = pb.q.clone();
    let mut st = Stepper::new(op, cfg.integrator, cfg.dt, 0.0).unwrap();
    let mut ws = op.workspace();
    let tol = cfg.steady_tol.unwrap();
    let mut res = f64::INFINITY;
    for k in 1..=cfg.n_steps() {
        st.step(op, &mut q).unwrap();
        if k % 100 == 0 {
            op.residual(&q, st.t, &mut ws);
            res = diagnostics::residual_norm(&ws);
            if res < tol {
                break;
            }
        }
    }
    let vel = diagnostics::velocity_norm(op, &q);
    let pj = cases::pressure_jump(op, &q, &mut ws).unwrap();
    Outcome {
        pass: res < tol && pj.rel_error <= 2.5e-2 && vel <= 1e-6,
        detail: format!(
            "t = {:.4}, residual {res:.2e} (tol {tol:.0e}), R = {:.4}, dp = {:.4} vs sigma/R = {:.4}, relative error {:.2e} (tol 2.5e-2), velocity {vel:.2e} (tol 1e-6)",
            st.t, pj.radius, pj.jump, pj.jump_exact, pj.rel_error
        ),
    }
}

fn criterion_8() -> Outcome {
    let mesh = cartesian([3, 3, 1], [0.0; 3], [1.0; 3], BoundaryTags {
        x_minus: BoundaryKind::FreeSlip,
        x_plus: BoundaryKind::FreeSlip,
        y_minus: BoundaryKind::NoSlip,
        y_plus: BoundaryKind::NoSlip,
        z_minus: BoundaryKind::Periodic,
        z_plus: BoundaryKind::Periodic,
    });
    let cfg = config(CaseKind::StaticBubble, mesh, [3, 3, 1], FluxMode::Ers, 1.0, Integrator::Imex { order: 2 }, 1e-5);
    let pb = Problem::from_config(&cfg).unwrap();
    let op = &pb.op;
    let imp = ImplicitOperator::assemble(op, 1.5, 1e-5, true).unwrap();
    let mut ws = op.workspace();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = op.n_nodes();
    let np = op.mesh.np;
    let nxy = (op.mesh.degrees[0] + 1) * (op.mesh.degrees[1] + 1);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let layer: Vec<f64> = (0..op.mesh.n_elem * nxy).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|g| layer[(g / np) * nxy + (g % np) % nxy]).collect();
        let mut a = vec![0.0; n];
        imp.apply(&v, &mut a).unwrap();
        let mut b = vec![0.0; n];
        op.biharmonic(&v, &mut b, &mut ws);
        let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for g in 0..n {
            worst = worst.max((a[g] - (1.5e5 * v[g] + b[g])).abs() / scale);
        }
    }
    let order = |j: usize| {
        let err = |steps: usize| (imex_scalar(-3.0, -1.0, 1.0, 1.0 / steps as f64, steps, j).unwrap() - (-4.0f64).exp()).abs();
        (err(200) / err(400)).log2()
    };
    let (o1, o2) = (order(1), order(2));
    Outcome {
        pass: worst <= 1e-10 && (o1 - 1.0).abs() <= 0.1 && (o2 - 2.0).abs() <= 0.1,
        detail: format!("matrix vs matrix-free {worst:.2e} (tol 1e-10), BDF1 order {o1:.3}, BDF2 order {o2:.3} (tol 0.1)"),
    }
}

fn criterion_9() -> Outcome {
    let cfg = preset(CaseKind::RisingBubble);
    let pb = Problem::from_config(&cfg).unwrap();
    let op = &pb.op;
    let mut q = pb.q.clone();
    let mut st = Stepper::new(op, cfg.integrator, cfg.dt, 0.0).unwrap();
    let (x0, _) = diagnostics::bubble_centroid(op, &q).unwrap();
    let v0 = diagnostics::bubble_velocity(op, &q).unwrap();
    let start_ok = (x0[0] - 0.5).abs() <= 1e-10 && (x0[1] - 0.5).abs() <= 1e-10 && v0.iter().all(|v| v.abs() <= 1e-14);
    let transient = 0.02;
    let mut monotone = true;
    let mut rising = true;
    let mut last_y = f64::NEG_INFINITY;
    let mut min_v = f64::INFINITY;
    let mut ok_rb = true;
    for k in 1..=cfg.n_steps() {
        if st.step(op, &mut q).is_err() {
            ok_rb = false;
            break;
        }
        if k % 50 == 0 && st.t >= transient {
            let (x, _) = diagnostics::bubble_centroid(op, &q).unwrap();
            let v = diagnostics::bubble_velocity(op, &q).unwrap();
            monotone &= x[1] > last_y;
            rising &= v[1] > 0.0;
            last_y = x[1];
            min_v = min_v.min(v[1]);
        }
    }
    let rise = last_y - x0[1];

    let io = preset(CaseKind::InflowOutflow);
    let pbi = Problem::from_config(&io).unwrap();
    let opi = &pbi.op;
    let mut qi = pbi.q.clone();
    let mut sti = Stepper::new(opi, io.integrator, io.dt, 0.0).unwrap();
    let mut ws = opi.workspace();
    opi.residual(&qi, 0.0, &mut ws);
    let e0 = diagnostics::entropy_report(opi, &qi, &ws).e_total;
    let mut e_max: f64 = e0;
    let mut ok_io = true;
    for _ in 0..100 {
        if sti.step(opi, &mut qi).is_err() {
            ok_io = false;
            break;
        }
        opi.residual(&qi, sti.t, &mut ws);
        let r = diagnostics::entropy_report(opi, &qi, &ws);
        ok_io &= r.e_total.is_finite() && r.dedt.is_finite();
        e_max = e_max.max(r.e_total);
    }
    let bound = ENTROPY_GROWTH_BOUND;
    let pass = start_ok && ok_rb && monotone && rising && ok_io && e_max <= (1.0 + bound) * e0;
    Outcome {
        pass,
        detail: format!(
            "rising bubble to t = {:.2}: start at (0.5, 0.5) at rest {start_ok}, Xc_y monotone after t = {transient} {monotone}, min Vc_y {min_v:.3e}, rise {rise:.3e}; inflow/outflow 100 steps finite {ok_io}, max E/E0 - 1 = {:.3e} (bound {bound:.0e})",
            st.t,
            e_max / e0 - 1.0
        ),
    }
}

type Criterion = (usize, &'static str, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "SBP identity", criterion_1),
        (2, "free-stream preservation", criterion_2),
        (3, "entropy contraction", criterion_3),
        (4, "entropy remainder", criterion_4),
        (5, "random-state robustness", criterion_5),
        (6, "manufactured convergence", criterion_6),
        (7, "static bubble", criterion_7),
        (8, "implicit operator and BDF orders", criterion_8),
        (9, "rising bubble and inflow/outflow", criterion_9),
    ];
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("criterion {id} [{tag}] {name} ({secs:.1} s): {}", out.detail);
        failed += usize::from(!out.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
