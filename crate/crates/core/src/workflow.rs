//! The `certify`, `verify`, `simulate` and `sweep` workflows behind the
//! command-line front end. Each returns its documents and an exit code.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::certificate::{
    certify_strong_dissipative, certify_zero_dissipative, check_reverse_poincare, compute_alpha,
    compute_thresholds, continuity_samples, estimate_smoothing_constant, verify_continuity_modulus,
    AlphaMethod, CheckStats, ConstantsEstimate, ConstantsSettings, ContinuityReport, ThresholdReport,
};
use crate::config::{InitKind, RunConfig, SweepSpec};
use crate::error::{LabError, Result};
use crate::evolution::{
    evolve_implicit_euler, holder_pairs, monitor_solution_class, verify_holder_modulus, ForcingKind,
    ForcingModel, IntegratorSettings, NavierStokesOperator, ResolventSettings, SolutionClassReport,
};
use crate::field::FourierField;
use crate::grid::Grid;
use crate::nonlinear::{
    oracle_discrepancy, verify_renormed_corpus, verify_trilinear_corpus, ExponentTriple,
    TrilinearConstant, TrilinearCorpus, TrilinearSample,
};
use crate::operators::SpectralMultiplier;
use crate::renorm::{renormed_norm, RenormContext};
use crate::seeds::{derive, SeedPlan, Stream};
use crate::snapshot::{write_snapshot, SnapshotManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_RESOLVENT: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

/// Oracle agreement demanded by `verify`.
pub const ORACLE_TOL: f64 = 1e-10;

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn config_block(cfg: &RunConfig) -> BTreeMap<String, String> {
    cfg.entries()
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Everything derived from a config before any randomized check runs.
#[derive(Debug, Clone)]
pub struct Setup {
    pub config: RunConfig,
    pub grid: Grid,
    pub ctx: RenormContext,
    pub constants: ConstantsEstimate,
    pub op: NavierStokesOperator,
    pub thresholds: ThresholdReport,
}

/// Divergence-free forcing with `sup_t ‖f(t)‖_{H,1}` equal to the
/// configured amplitude.
pub fn build_forcing(cfg: &RunConfig, ctx: &RenormContext) -> Result<ForcingModel> {
    let grid = ctx.grid;
    if cfg.forcing_kind == ForcingKind::Zero {
        return Ok(ForcingModel::zero(grid));
    }
    let seed = cfg
        .forcing_seed
        .unwrap_or_else(|| derive(cfg.seed, Stream::Forcing, 0));
    let raw = FourierField::random(grid, seed, cfg.spectrum_decay)?;
    let base = raw.scale(cfg.forcing_amplitude / renormed_norm(&raw, ctx)?);
    match cfg.forcing_kind {
        ForcingKind::ConstantField => Ok(ForcingModel::constant(base)),
        _ => ForcingModel::holder_modulated(base, cfg.forcing_theta, cfg.forcing_d),
    }
}

fn constants_settings(cfg: &RunConfig) -> ConstantsSettings {
    ConstantsSettings {
        plan: SeedPlan::new(cfg.seed, Stream::TrilinearEstimate, cfg.samples_constants),
        spectrum_decay: cfg.spectrum_decay,
        alpha_method: cfg.alpha_method,
        c_scale: cfg.c_scale,
    }
}

fn setup_with(cfg: &RunConfig, trilinear: Option<TrilinearConstant>) -> Result<Setup> {
    cfg.validate()?;
    let grid = Grid::new(cfg.n)?;
    let ctx = RenormContext::new(grid, cfg.r, cfg.omega)?;
    let constants = match trilinear {
        Some(t) => ConstantsEstimate::from_trilinear(&ctx, t, cfg.alpha_method, cfg.c_scale)?,
        None => ConstantsEstimate::estimate(&ctx, &constants_settings(cfg))?,
    };
    let forcing = build_forcing(cfg, &ctx)?;
    let f_sup = forcing.sup_norm(&ctx)?;
    let op = NavierStokesOperator::new(cfg.nu, forcing, ctx)?;
    let thresholds = compute_thresholds(cfg.nu, f_sup, &constants, &ctx)?;
    Ok(Setup {
        config: cfg.clone(),
        grid,
        ctx,
        constants,
        op,
        thresholds,
    })
}

pub fn prepare(cfg: &RunConfig) -> Result<Setup> {
    setup_with(cfg, None)
}

impl Setup {
    /// Evaluation time of the dissipativity checks: the first instant the
    /// forcing reaches its supremum.
    pub fn check_time(&self) -> f64 {
        match self.op.forcing.kind {
            ForcingKind::HolderModulated => (1.0 / self.op.forcing.d).powf(1.0 / self.op.forcing.theta),
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateReport {
    pub generated_at: u64,
    pub config: BTreeMap<String, String>,
    pub constants: ConstantsEstimate,
    pub thresholds: ThresholdReport,
    pub check_time: f64,
    pub checks: Vec<CheckStats>,
    pub continuity: Option<ContinuityReport>,
    pub admissible: bool,
    pub pass: bool,
}

impl CertificateReport {
    /// The report without its timestamp, for reproducibility comparisons.
    pub fn numeric_content(&self) -> Result<Value> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("generated_at");
        }
        Ok(v)
    }
}

#[derive(Debug, Clone)]
pub struct Outcome<T> {
    pub value: T,
    pub exit_code: i32,
    pub written: Vec<PathBuf>,
}

/// Builds the certificate without touching the filesystem.
pub fn certify(cfg: &RunConfig) -> Result<(CertificateReport, i32)> {
    let s = prepare(cfg)?;
    let th = &s.thresholds;
    let t = s.check_time();
    let mut checks = Vec::new();
    let mut continuity = None;
    if th.admissible {
        checks.push(certify_zero_dissipative(
            &s.op,
            th,
            SeedPlan::new(cfg.seed, Stream::ZeroDissipative, cfg.samples_zero_dissipative),
            cfg.spectrum_decay,
            t,
        )?);
        checks.push(certify_strong_dissipative(
            &s.op,
            th,
            SeedPlan::new(cfg.seed, Stream::StrongDissipative, cfg.samples_strong_dissipative),
            cfg.spectrum_decay,
            t,
        )?);
        checks.push(check_reverse_poincare(
            &s.ctx,
            s.constants.alpha,
            SeedPlan::new(cfg.seed, Stream::ReversePoincare, cfg.samples_reverse_poincare),
            cfg.spectrum_decay,
        )?);
        let samples = continuity_samples(
            &s.op,
            th,
            SeedPlan::new(cfg.seed, Stream::Continuity, cfg.samples_continuity),
            cfg.spectrum_decay,
            8,
        )?;
        continuity = Some(verify_continuity_modulus(&s.op, &samples, &s.constants, th)?);
    }
    let admissible = th.admissible;
    let pass = admissible
        && checks.iter().all(|c| c.pass)
        && continuity.as_ref().is_none_or(|c| c.pass);
    let exit_code = if !admissible {
        EXIT_INFEASIBLE
    } else if pass {
        EXIT_OK
    } else {
        EXIT_FAILED
    };
    Ok((
        CertificateReport {
            generated_at: timestamp(),
            config: config_block(cfg),
            constants: s.constants,
            thresholds: s.thresholds,
            check_time: t,
            checks,
            continuity,
            admissible,
            pass,
        },
        exit_code,
    ))
}

/// `certify` plus `certificate.json` under the output directory.
pub fn cmd_certify(cfg: &RunConfig) -> Result<Outcome<CertificateReport>> {
    let (report, exit_code) = certify(cfg)?;
    let path = cfg.out_dir.join("certificate.json");
    write_json(&path, &report)?;
    Ok(Outcome {
        value: report,
        exit_code,
        written: vec![path],
    })
}

/// One inequality's verification document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub pass: bool,
    pub worst_ratio: Option<f64>,
    pub sample_count: usize,
    pub seeds: Option<SeedPlan>,
    pub witness_seed: Option<u64>,
    pub witness_files: Vec<PathBuf>,
    pub details: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyBundle {
    pub generated_at: u64,
    pub config: BTreeMap<String, String>,
    pub checks: Vec<InequalityCheck>,
    pub failing: Vec<String>,
    pub pass: bool,
}

fn check_from_stats(stats: &CheckStats, ratio: f64) -> InequalityCheck {
    InequalityCheck {
        name: stats.name.clone(),
        pass: stats.pass,
        worst_ratio: Some(ratio),
        sample_count: stats.count,
        seeds: stats.plan,
        witness_seed: stats.witness_seed,
        witness_files: Vec::new(),
        details: serde_json::to_value(stats).unwrap_or(Value::Null),
    }
}

/// `‖A^z T(r)u‖ ≤ (c_z / r^z) ‖u‖` on random fields for `z ∈ {1/4, 1/2, 1}`.
pub fn verify_smoothing(ctx: &RenormContext, plan: SeedPlan, spectrum_decay: f64) -> Result<InequalityCheck> {
    let mut per_z = Vec::new();
    let mut worst: (f64, Option<u64>) = (0.0, None);
    for z in [0.25, 0.5, 1.0] {
        let cz = estimate_smoothing_constant(ctx, z)?;
        let op = |u: &FourierField| SpectralMultiplier::Power(z).apply(&SpectralMultiplier::Heat(ctx.r).apply(u));
        let rows = plan
            .seeds()
            .into_par_iter()
            .map(|s| -> Result<(u64, f64)> {
                let u = FourierField::random(ctx.grid, s, spectrum_decay)?;
                Ok((s, op(&u).norm() / (cz / ctx.r.powf(z) * u.norm())))
            })
            .collect::<Result<Vec<_>>>()?;
        let (seed, q) = rows
            .into_iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((0, 0.0));
        if q > worst.0 {
            worst = (q, Some(seed));
        }
        per_z.push(json!({ "z": z, "c_z": cz, "worst_ratio": q }));
    }
    Ok(InequalityCheck {
        name: "smoothing".into(),
        pass: worst.0 <= 1.0 + 1e-12,
        worst_ratio: Some(worst.0),
        sample_count: plan.count,
        seeds: Some(plan),
        witness_seed: worst.1,
        witness_files: Vec::new(),
        details: Value::Array(per_z),
    })
}

fn write_witness(dir: &Path, name: &str, sample: &TrilinearSample, ctx: &RenormContext) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for (label, field) in [("u", &sample.u), ("v", &sample.v), ("w", &sample.w)] {
        let path = dir.join(format!("witness_{name}_{label}.nsfld"));
        let mut manifest = SnapshotManifest::describe(field, Some(ctx))?;
        manifest.seed = Some(sample.seed);
        manifest.params = json!({ "inequality": name, "role": label });
        write_snapshot(&path, field, &manifest)?;
        out.push(path);
    }
    Ok(out)
}

/// Runs every inequality verifier on fresh seeds; witness fields of a
/// failing trilinear check are written under `dir` when one is given.
pub fn verify(cfg: &RunConfig, witness_dir: Option<&Path>) -> Result<VerifyBundle> {
    let s = prepare(cfg)?;
    let ctx = &s.ctx;
    let decay = cfg.spectrum_decay;
    let fresh = SeedPlan::new(cfg.seed, Stream::TrilinearVerify, cfg.samples_verify);
    let corpus = TrilinearCorpus::new(s.grid, fresh, decay);
    let mut checks = Vec::new();

    let tri = verify_trilinear_corpus(&corpus, ctx, ExponentTriple::RENORMED, Some(s.constants.c))?;
    checks.push(InequalityCheck {
        name: "trilinear_estimate".into(),
        pass: tri.pass,
        worst_ratio: tri.worst_ratio,
        sample_count: tri.sample_count,
        seeds: Some(fresh),
        witness_seed: tri.witness_seed,
        witness_files: Vec::new(),
        details: serde_json::to_value(&tri)?,
    });

    let ren = verify_renormed_corpus(ctx, &s.constants, &corpus)?;
    checks.push(InequalityCheck {
        name: "renormed_bounds".into(),
        pass: ren.pass,
        worst_ratio: Some(ren.worst_ratio_trilinear.max(ren.worst_ratio_norm)),
        sample_count: ren.sample_count,
        seeds: Some(fresh),
        witness_seed: ren.witness_seed,
        witness_files: Vec::new(),
        details: serde_json::to_value(&ren)?,
    });

    checks.push(verify_smoothing(
        ctx,
        SeedPlan::new(cfg.seed, Stream::Smoothing, cfg.samples_smoothing),
        decay,
    )?);

    for (name, method) in [
        ("reverse_poincare_construction", AlphaMethod::Lemma7Construction),
        ("reverse_poincare_sharp", AlphaMethod::SharpSpectral),
    ] {
        let mut stats = check_reverse_poincare(
            ctx,
            compute_alpha(ctx, method),
            SeedPlan::new(cfg.seed, Stream::ReversePoincare, cfg.samples_reverse_poincare),
            decay,
        )?;
        stats.name = name.into();
        let ratio = 1.0 + stats.worst_margin;
        checks.push(check_from_stats(&stats, ratio));
    }

    let holder_plan = SeedPlan::new(cfg.seed, Stream::Holder, cfg.samples_holder);
    let u = FourierField::random(s.grid, derive(cfg.seed, Stream::Holder, u64::MAX), decay)?;
    let u = match s.thresholds.ball_radius() {
        Some(radius) => u.scale(0.5 * radius / renormed_norm(&u, ctx)?),
        None => u,
    };
    let horizon = (2.0 * s.check_time()).max(1.0);
    let hold = verify_holder_modulus(&s.op, &u, &holder_pairs(holder_plan, horizon))?;
    checks.push(InequalityCheck {
        name: "holder_modulus".into(),
        pass: hold.pass,
        worst_ratio: Some(hold.worst_ratio_forcing.max(hold.worst_ratio_operator)),
        sample_count: hold.pairs,
        seeds: Some(holder_plan),
        witness_seed: None,
        witness_files: Vec::new(),
        details: serde_json::to_value(&hold)?,
    });

    if cfg.oracle_enabled() {
        let plan = SeedPlan::new(cfg.seed, Stream::OracleCheck, cfg.samples_oracle);
        let gap = oracle_discrepancy(s.grid, plan, decay)?;
        checks.push(InequalityCheck {
            name: "oracle_equivalence".into(),
            pass: gap < ORACLE_TOL,
            worst_ratio: Some(gap / ORACLE_TOL),
            sample_count: plan.count,
            seeds: Some(plan),
            witness_seed: None,
            witness_files: Vec::new(),
            details: json!({ "max_relative_error": gap, "tolerance": ORACLE_TOL }),
        });
    }

    if let Some(dir) = witness_dir {
        for check in checks.iter_mut().filter(|c| !c.pass) {
            if let ("trilinear_estimate" | "renormed_bounds", Some(seed)) = (check.name.as_str(), check.witness_seed) {
                let sample = TrilinearSample::draw(s.grid, seed, decay, ctx)?;
                check.witness_files = write_witness(dir, &check.name, &sample, ctx)?;
            }
        }
    }

    let failing: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
    Ok(VerifyBundle {
        generated_at: timestamp(),
        config: config_block(cfg),
        pass: failing.is_empty(),
        failing,
        checks,
    })
}

/// `verify` plus one JSON document per inequality under `<out>/verify/`.
pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome<VerifyBundle>> {
    let dir = cfg.out_dir.join("verify");
    let bundle = verify(cfg, Some(&dir))?;
    let mut written = Vec::new();
    for check in &bundle.checks {
        let path = dir.join(format!("{}.json", check.name));
        write_json(&path, check)?;
        written.push(path);
        written.extend(check.witness_files.iter().cloned());
    }
    let summary = cfg.out_dir.join("verify.json");
    write_json(&summary, &bundle)?;
    written.push(summary);
    Ok(Outcome {
        exit_code: if bundle.pass { EXIT_OK } else { EXIT_FAILED },
        value: bundle,
        written,
    })
}

/// Initial datum per `init_kind`, scaled to `init_scale · u₊/2`.
pub fn initial_data(s: &Setup) -> Result<FourierField> {
    let cfg = &s.config;
    let raw = match cfg.init_kind {
        InitKind::Snapshot => {
            let path = cfg.init_path.as_ref().expect("validated");
            let u = crate::snapshot::read_snapshot(path)?;
            if u.grid() != s.grid {
                return Err(LabError::Config {
                    key: "init_path".into(),
                    message: format!("snapshot grid {} does not match n = {}", u.grid().n(), s.grid.n()),
                });
            }
            return Ok(u);
        }
        InitKind::Random => FourierField::random(s.grid, derive(cfg.seed, Stream::InitialData, 0), cfg.spectrum_decay)?,
        InitKind::SingleMode => FourierField::single_mode(s.grid, [0, 0, 1], [1.0, 0.0, 0.0])?,
    };
    let radius = s.thresholds.ball_radius().ok_or_else(|| LabError::Config {
        key: "init_scale".into(),
        message: "the thresholds are complex, so no ball radius exists to scale by".into(),
    })?;
    Ok(raw.scale(cfg.init_scale * radius / renormed_norm(&raw, &s.ctx)?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationReport {
    pub generated_at: u64,
    pub config: BTreeMap<String, String>,
    pub thresholds: ThresholdReport,
    pub step_cap: Option<f64>,
    pub monitor: Option<SolutionClassReport>,
    pub warnings: Vec<String>,
    /// Step whose resolvent solve failed.
    pub failed_step: Option<usize>,
    pub error: Option<String>,
    pub healthy: bool,
}

/// Integrates by implicit Euler and writes `trace.csv`, `monitor.json` and
/// any snapshots. A `dt` above the step cap is rejected before running.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<Outcome<SimulationReport>> {
    let s = prepare(cfg)?;
    let cap = s.thresholds.step_cap();
    if let Some(cap) = cap {
        if cfg.dt > cap {
            return Err(LabError::Config {
                key: "dt".into(),
                message: format!("dt = {} exceeds the resolvent step cap {cap}", cfg.dt),
            });
        }
    }
    let mut warnings = Vec::new();
    if !s.thresholds.admissible {
        warnings.push(format!(
            "viscosity is not admissible (gamma = {}); ball membership is not certified",
            s.thresholds.gamma
        ));
    }
    let u0 = initial_data(&s)?;
    let settings = IntegratorSettings {
        resolvent: ResolventSettings {
            tol: cfg.tol,
            max_iter: cfg.max_iter,
        },
        snapshot_every: cfg.snapshot_every,
    };
    let out = &cfg.out_dir;
    fs::create_dir_all(out)?;
    let mut written = Vec::new();
    let result = evolve_implicit_euler(&s.op, &u0, cfg.dt, cfg.t_end, &s.thresholds, settings);
    let mut report = SimulationReport {
        generated_at: timestamp(),
        config: config_block(cfg),
        thresholds: s.thresholds.clone(),
        step_cap: cap,
        monitor: None,
        warnings,
        failed_step: None,
        error: None,
        healthy: false,
    };
    let exit_code = match result {
        Ok(trace) => {
            let trace_path = out.join("trace.csv");
            trace.write_csv(std::io::BufWriter::new(fs::File::create(&trace_path)?))?;
            written.push(trace_path);
            if !trace.snapshots.is_empty() {
                let dir = out.join("snapshots");
                fs::create_dir_all(&dir)?;
                for (step, field) in &trace.snapshots {
                    let path = dir.join(format!("step_{step:06}.nsfld"));
                    let mut manifest = SnapshotManifest::describe(field, Some(&s.ctx))?;
                    manifest.seed = Some(cfg.seed);
                    manifest.step = Some(*step);
                    manifest.time = Some(*step as f64 * cfg.dt);
                    manifest.params = json!({ "nu": cfg.nu, "r": cfg.r, "dt": cfg.dt });
                    write_snapshot(&path, field, &manifest)?;
                    written.push(path);
                }
            }
            let monitor = monitor_solution_class(&trace);
            if monitor.started_outside {
                report
                    .warnings
                    .push("initial data lies outside the annulus [u_minus, u_plus/2]".into());
            }
            report.healthy = true;
            let code = if monitor.ball_exit_events == 0 { EXIT_OK } else { EXIT_FAILED };
            report.monitor = Some(monitor);
            code
        }
        Err(LabError::Step { step, source }) => {
            report.failed_step = Some(step);
            report.error = Some(source.to_string());
            EXIT_RESOLVENT
        }
        Err(e) => return Err(e),
    };
    let monitor_path = out.join("monitor.json");
    write_json(&monitor_path, &report)?;
    written.push(monitor_path);
    Ok(Outcome {
        value: report,
        exit_code,
        written,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub nu: f64,
    pub r: f64,
    pub f: f64,
    pub n: usize,
    pub gamma: Option<f64>,
    pub u_minus: Option<f64>,
    pub u_plus: Option<f64>,
    pub delta: Option<f64>,
    pub nu_min: Option<f64>,
    pub admissible: Option<bool>,
    pub alpha: Option<f64>,
    pub kappa: Option<f64>,
    pub m: Option<f64>,
    pub nonlinear_bound: Option<f64>,
    pub error: Option<String>,
}

pub const SWEEP_CSV_HEADER: &str =
    "nu,r,f,n,gamma,u_minus,u_plus,delta,nu_min,admissible,alpha,kappa,M,nonlinear_bound,error";

impl SweepRow {
    fn csv(&self) -> String {
        fn opt<T: std::fmt::Debug>(v: &Option<T>) -> String {
            v.as_ref().map_or_else(String::new, |x| format!("{x:?}"))
        }
        let error = self.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        format!(
            "{:?},{:?},{:?},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.nu,
            self.r,
            self.f,
            self.n,
            opt(&self.gamma),
            opt(&self.u_minus),
            opt(&self.u_plus),
            opt(&self.delta),
            opt(&self.nu_min),
            opt(&self.admissible),
            opt(&self.alpha),
            opt(&self.kappa),
            opt(&self.m),
            opt(&self.nonlinear_bound),
            error
        )
    }
}

/// Threshold table over the sweep axes. The trilinear constant depends only
/// on the grid, so it is estimated once per `n`; cells run in parallel and a
/// failing cell is recorded in its row.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.template.validate()?;
    let mut trilinear = BTreeMap::new();
    for &n in &spec.n {
        let mut cfg = spec.template.clone();
        cfg.n = n;
        let grid = Grid::new(n)?;
        let settings = constants_settings(&cfg);
        let t = crate::nonlinear::estimate_trilinear_constant(
            grid,
            ExponentTriple::RENORMED,
            settings.plan,
            settings.spectrum_decay,
        );
        trilinear.insert(n, t);
    }
    let rows = spec
        .cells()
        .into_par_iter()
        .map(|cell| {
            let mut row = SweepRow {
                nu: cell.nu,
                r: cell.r,
                f: cell.forcing_amplitude,
                n: cell.n,
                gamma: None,
                u_minus: None,
                u_plus: None,
                delta: None,
                nu_min: None,
                admissible: None,
                alpha: None,
                kappa: None,
                m: None,
                nonlinear_bound: None,
                error: None,
            };
            let setup = match &trilinear[&cell.n] {
                Ok(t) => setup_with(&cell, Some(t.clone())),
                Err(e) => Err(LabError::InvalidArgument(e.to_string())),
            };
            match setup {
                Ok(s) => {
                    let th = &s.thresholds;
                    row.gamma = Some(th.gamma);
                    row.u_minus = th.u_minus;
                    row.u_plus = th.u_plus;
                    row.delta = th.delta;
                    row.nu_min = Some(th.nu_min);
                    row.admissible = Some(th.admissible);
                    row.alpha = Some(s.constants.alpha);
                    row.kappa = Some(s.constants.kappa);
                    row.m = Some(s.constants.m);
                    row.nonlinear_bound = Some(th.nonlinear_bound);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect();
    Ok(rows)
}

/// `sweep` plus `sweep.csv` under the output directory.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Outcome<Vec<SweepRow>>> {
    let spec = SweepSpec::from_config(cfg);
    let rows = sweep(&spec)?;
    fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join("sweep.csv");
    let mut text = String::from(SWEEP_CSV_HEADER);
    text.push('\n');
    for row in &rows {
        text.push_str(&row.csv());
        text.push('\n');
    }
    fs::write(&path, text)?;
    let failed = rows.iter().any(|r| r.error.is_some());
    Ok(Outcome {
        value: rows,
        exit_code: if failed { EXIT_FAILED } else { EXIT_OK },
        written: vec![path],
    })
}
