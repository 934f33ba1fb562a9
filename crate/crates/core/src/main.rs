use clap::{Parser, Subcommand};
use espdg_core::config::{CaseConfig, CaseKind};
use espdg_core::run::{run, RunOptions};
use espdg_core::verify::{preset, run_checks};
use espdg_core::Error;
use rayon::prelude::*;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "espdg", version, about = "Entropy-stable DG solver for incompressible Navier-Stokes/Cahn-Hilliard flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a case from a TOML configuration file.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Continue from a restart file.
        #[arg(long)]
        restart: Option<PathBuf>,
        /// Skip VTK snapshots.
        #[arg(long)]
        no_fields: bool,
        #[arg(long, hide = true)]
        inject_nan: Option<usize>,
    },
    /// Run the quick property checks.
    Verify,
    /// Run one case per seed, in parallel.
    Sweep {
        #[arg(long, value_parser = parse_case)]
        case: CaseKind,
        /// Inclusive seed range `A..B`.
        #[arg(long)]
        seeds: String,
        /// Base configuration; defaults to the built-in preset of the case.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
    },
    /// Print the built-in configuration of a case.
    Preset {
        #[arg(value_parser = parse_case)]
        case: CaseKind,
    },
}

fn parse_case(s: &str) -> Result<CaseKind, String> {
    toml::Value::String(s.to_string()).try_into::<CaseKind>().map_err(|e| e.to_string())
}

fn parse_seeds(s: &str) -> Result<(u64, u64), Error> {
    let bad = || Error::Config(format!("seeds: expected A..B, got {s:?}"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    if b < a {
        return Err(bad());
    }
    Ok((a, b))
}

fn exit_code(e: &Error) -> ExitCode {
    match e {
        Error::NonFinite { .. } => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, Error> {
    rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build().map_err(|e| Error::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, threads, out, restart, no_fields, inject_nan } => {
            let result = CaseConfig::read(&config).and_then(|mut cfg| {
                if let Some(s) = seed {
                    cfg.seed = s;
                }
                let opts = RunOptions { out_dir: out.clone(), restart, inject_nan_at: inject_nan, no_fields };
                pool(threads)?.install(|| run(&cfg, &opts))
            });
            match result {
                Ok(o) => {
                    let s = &o.summary;
                    println!(
                        "{}: {} after {} steps, t = {:.6e}, residual {:.3e}, velocity {:.3e}; outputs in {}",
                        s.case,
                        s.status,
                        s.steps,
                        s.t,
                        s.residual_norm,
                        s.velocity_norm,
                        out.display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code(&e)
                }
            }
        }
        Command::Verify => {
            let mut ok = true;
            for c in run_checks() {
                let tag = if c.pass() { "PASS" } else { "FAIL" };
                println!("[{tag}] {}: {:.3e} (tol {:.0e})", c.name, c.value, c.tol);
                ok &= c.pass();
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Sweep { case, seeds, config, threads, out } => {
            let setup = (|| {
                let (a, b) = parse_seeds(&seeds)?;
                let base = match &config {
                    Some(p) => CaseConfig::read(p)?,
                    None => preset(case),
                };
                if base.case != case {
                    return Err(Error::Config(format!("config case {} does not match --case {}", base.case.name(), case.name())));
                }
                Ok((a, b, base, pool(threads)?))
            })();
            let (a, b, base, pool) = match setup {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let results: Vec<(u64, Result<String, Error>)> = pool.install(|| {
                (a..=b)
                    .into_par_iter()
                    .map(|seed| {
                        let mut cfg = base.clone();
                        cfg.seed = seed;
                        let opts = RunOptions { out_dir: out.join(format!("seed_{seed}")), no_fields: true, ..Default::default() };
                        (seed, run(&cfg, &opts).map(|o| format!("{} at t = {:.4e}", o.summary.status, o.summary.t)))
                    })
                    .collect()
            });
            let mut failures = 0;
            for (seed, r) in &results {
                match r {
                    Ok(msg) => println!("seed {seed}: {msg}"),
                    Err(e) => {
                        failures += 1;
                        println!("seed {seed}: failed: {e}");
                    }
                }
            }
            println!("{} of {} runs failed", failures, results.len());
            if failures == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Command::Preset { case } => match preset(case).to_toml() {
            Ok(t) => {
                print!("{t}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}
