//! `nse-lab`: certify, verify, simulate and sweep from a flat config file.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use nse_lab::config::{RunConfig, SweepSpec};
use nse_lab::workflow::{self, EXIT_FAILED, EXIT_OK, EXIT_USAGE};
use nse_lab::LabError;

const THREADS_ENV: &str = "NSE_LAB_THREADS";

#[derive(Parser)]
#[command(name = "nse-lab", version, about = "Renormed-norm dissipativity certificates for 3D Navier-Stokes on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate constants and thresholds and certify dissipativity on the admissible annulus.
    Certify(Common),
    /// Re-check every inequality on fresh samples.
    Verify(Common),
    /// Integrate by implicit Euler and monitor the solution class.
    Simulate(Common),
    /// Tabulate thresholds over the sweep axes.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file; defaults are used for absent keys.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed for every randomized procedure.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Set one config key; applied after the file, in order.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn resolve(&self) -> nse_lab::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        for o in &self.overrides {
            cfg.apply_override(o)?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| anyhow!(LabError::Config {
            key: THREADS_ENV.into(),
            message: format!("expected a positive integer, got {raw:?}"),
        }))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("building the worker pool")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "complex".to_string(), |x| format!("{x:e}"))
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    configure_threads()?;
    match cli.command {
        Command::Certify(common) => {
            let cfg = common.resolve()?;
            let out = workflow::cmd_certify(&cfg)?;
            let r = &out.value;
            let th = &r.thresholds;
            println!(
                "gamma={:e} u_minus={} u_plus={} delta={} nu_min={:e} admissible={}",
                th.gamma,
                fmt_opt(th.u_minus),
                fmt_opt(th.u_plus),
                fmt_opt(th.delta),
                th.nu_min,
                r.admissible
            );
            for c in &r.checks {
                println!("{} {} worst_margin={:e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.worst_margin);
            }
            if let Some(c) = &r.continuity {
                println!("{} continuity worst_ratio={:e}", if c.pass { "PASS" } else { "FAIL" }, c.worst_ratio);
            }
            if !r.admissible {
                eprintln!("infeasible: gamma >= 1 (nu = {} <= nu_min = {:e})", th.nu, th.nu_min);
            }
            println!("report: {}", out.written[0].display());
            Ok(out.exit_code)
        }
        Command::Verify(common) => {
            let cfg = common.resolve()?;
            let out = workflow::cmd_verify(&cfg)?;
            for c in &out.value.checks {
                println!(
                    "{} {} worst_ratio={}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.worst_ratio.map_or_else(|| "undefined".into(), |x| format!("{x:e}"))
                );
                if !c.pass {
                    eprintln!("failing inequality: {} (witness seed {:?})", c.name, c.witness_seed);
                    for f in &c.witness_files {
                        eprintln!("  witness: {}", f.display());
                    }
                }
            }
            println!("reports: {}", cfg.out_dir.join("verify").display());
            Ok(out.exit_code)
        }
        Command::Simulate(common) => {
            let cfg = common.resolve()?;
            let out = workflow::cmd_simulate(&cfg)?;
            let r = &out.value;
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            if let Some(m) = &r.monitor {
                println!(
                    "steps={} final_time={} ball_exit_events={} energy_integral={:e} sup_norm_V={:e} max_divergence={:e}",
                    m.steps, m.final_time, m.ball_exit_events, m.energy_integral, m.sup_norm_v, m.max_divergence
                );
            }
            if let (Some(step), Some(e)) = (r.failed_step, &r.error) {
                eprintln!("error: resolvent solve failed at step {step}: {e}");
            }
            println!("outputs: {}", cfg.out_dir.display());
            Ok(out.exit_code)
        }
        Command::Sweep(common) => {
            let cfg = common.resolve()?;
            eprintln!("sweep: {} cells", SweepSpec::from_config(&cfg).cell_count());
            let out = workflow::cmd_sweep(&cfg)?;
            for row in out.value.iter().filter(|r| r.error.is_some()) {
                eprintln!(
                    "cell nu={} r={} f={} n={} failed: {}",
                    row.nu,
                    row.r,
                    row.f,
                    row.n,
                    row.error.as_deref().unwrap_or("")
                );
            }
            println!("table: {}", out.written[0].display());
            Ok(out.exit_code)
        }
    }
}

fn exit_code_for(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<LabError>() {
        Some(LabError::Config { .. } | LabError::InvalidArgument(_)) => EXIT_USAGE,
        _ => EXIT_FAILED,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code_for(&e)
        }
    };
    ExitCode::from(code as u8)
}
