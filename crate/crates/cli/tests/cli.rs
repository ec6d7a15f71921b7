use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const QUICK: &[&str] = &[
    "samples_constants=40",
    "samples_verify=40",
    "samples_zero_dissipative=20",
    "samples_strong_dissipative=20",
    "samples_continuity=3",
    "samples_holder=20",
    "samples_reverse_poincare=20",
    "samples_smoothing=20",
];

fn nse_lab(sub: &str, out: &Path, extra: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nse-lab"));
    cmd.arg(sub).arg("--out").arg(out).env_remove("NSE_LAB_THREADS");
    for o in QUICK {
        cmd.args(["--override", o]);
    }
    cmd.args(extra);
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn certify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = nse_lab("certify", dir.path(), &["--seed", "7"]);
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
    assert!(stdout(&ok).contains("PASS zero_dissipative"));
    let report = json(&dir.path().join("certificate.json"));
    assert_eq!(report["admissible"], true);
    assert_eq!(report["config"]["seed"], "7");

    let infeasible = nse_lab("certify", dir.path(), &["--override", "nu=0.1"]);
    assert_eq!(code(&infeasible), 2);
    assert!(stderr(&infeasible).contains("infeasible"));
    assert_eq!(json(&dir.path().join("certificate.json"))["admissible"], false);
}

#[test]
fn certify_reads_config_file_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# small run\nn = 8\nforcing_amplitude = 0\n").unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = nse_lab("certify", out, &["--config", cfg.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let strip = |p: &Path| {
        let mut v = json(&p.join("certificate.json"));
        v.as_object_mut().unwrap().remove("generated_at");
        v["config"].as_object_mut().unwrap().remove("out_dir");
        v
    };
    let (ra, rb) = (strip(&a), strip(&b));
    assert_eq!(ra, rb);
    assert_eq!(ra["thresholds"]["u_minus"], 0.0);
    assert_eq!(ra["config"]["n"], "8");
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = nse_lab("verify", dir.path(), &[]);
    assert_eq!(code(&ok), 0, "{}{}", stdout(&ok), stderr(&ok));
    assert!(dir.path().join("verify/renormed_bounds.json").exists());

    let bad = dir.path().join("tampered");
    let tampered = nse_lab("verify", &bad, &["--override", "c_scale=0.1"]);
    assert_eq!(code(&tampered), 1);
    let err = stderr(&tampered);
    assert!(err.contains("failing inequality: renormed_bounds"), "{err}");
    assert!(err.contains("witness:"));
    let doc = json(&bad.join("verify/renormed_bounds.json"));
    assert_eq!(doc["pass"], false);
    for f in doc["witness_files"].as_array().unwrap() {
        assert!(Path::new(f.as_str().unwrap()).exists());
    }
}

#[test]
fn simulate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = nse_lab("simulate", dir.path(), &["--override", "t_end=1", "--override", "snapshot_every=10"]);
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
    let csv = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(
        csv.lines().next(),
        Some("t,norm_H,norm_H1,norm_V,norm_A_half,in_ball,resolvent_iters,residual")
    );
    assert!(dir.path().join("snapshots/step_000020.nsfld").exists());
    assert!(dir.path().join("snapshots/step_000020.nsfld.json").exists());
    assert_eq!(json(&dir.path().join("monitor.json"))["monitor"]["ball_exit_events"], 0);

    let capped = nse_lab("simulate", dir.path(), &["--override", "dt=1"]);
    assert_eq!(code(&capped), 64);
    assert!(stderr(&capped).contains("dt"));

    let stuck = nse_lab(
        "simulate",
        dir.path(),
        &["--override", "max_iter=1", "--override", "tol=1e-15", "--override", "t_end=0.5"],
    );
    assert_eq!(code(&stuck), 3);
    assert!(stderr(&stuck).contains("step 1"));
}

#[test]
fn sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = nse_lab("sweep", dir.path(), &["--override", "sweep_nu=0.5,1,2", "--override", "sweep_r=0.001,0.01"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("6 cells"));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.starts_with("nu,r,f,n,gamma,u_minus,u_plus,delta,nu_min,admissible"));
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = nse_lab("certify", dir.path(), &["--override", "viscosity=1"]);
    assert_eq!(code(&unknown), 64);
    assert!(stderr(&unknown).contains("viscosity"));
    let bad_value = nse_lab("certify", dir.path(), &["--override", "nu=-1"]);
    assert_eq!(code(&bad_value), 64);
    assert!(stderr(&bad_value).contains("nu"));
    let missing = nse_lab("certify", dir.path(), &["--config", "/nonexistent/run.cfg"]);
    assert_eq!(code(&missing), 64);

    let sub = Command::new(env!("CARGO_BIN_EXE_nse-lab")).arg("explode").output().unwrap();
    assert_eq!(code(&sub), 64);
    let help = Command::new(env!("CARGO_BIN_EXE_nse-lab")).arg("--help").output().unwrap();
    assert_eq!(code(&help), 0);
    assert!(stdout(&help).contains("certify"));
}

#[test]
fn thread_count_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_nse-lab"))
            .args(["sweep", "--out"])
            .arg(dir.path())
            .args(["--override", "samples_constants=10"])
            .env("NSE_LAB_THREADS", threads)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("1")), 0);
    let one = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(code(&run("4")), 0);
    assert_eq!(fs::read_to_string(dir.path().join("sweep.csv")).unwrap(), one);
    let bad = run("zero");
    assert_eq!(code(&bad), 64);
    assert!(stderr(&bad).contains("NSE_LAB_THREADS"));
}
