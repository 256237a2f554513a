use std::path::Path;
use std::process::{Command, Output};

fn shearflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shearflow"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn weights_dump_prints_a_weight_table() {
    let out = shearflow(&[
        "weights-dump",
        "--nu",
        "0.01",
        "--eta",
        "10",
        "--t-max",
        "25",
        "--samples",
        "10",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,w,dt_log_w"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0][0], 0.0);
    assert_eq!(rows[0][1], 1.0);
    for r in &rows {
        assert!(r[1] >= 1.0, "weight {} fell below one", r[1]);
        assert!(r[2] >= 0.0, "log derivative {} negative", r[2]);
    }
    for w in rows.windows(2) {
        assert!(w[1][1] >= w[0][1], "weight not nondecreasing in time");
    }
}

#[test]
fn run_records_are_deterministic_and_overrides_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg_path,
        r#"
nu = 1e-2
t_end = 2.0
eps = 0.02
seed = 11

[grid]
nx = 32
ny = 128
l = 2.0

[diag]
frames = false
cadence = 0.5
"#,
    )
    .unwrap();

    let run = |out: &Path| {
        let o = shearflow(&[
            "run",
            "--config",
            cfg_path.to_str().unwrap(),
            "--nu",
            "5e-3",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "stderr: {}", stderr_of(&o));
        let summary: serde_json::Value = serde_json::from_str(&stdout_of(&o)).unwrap();
        summary
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let mut sa = run(&a);
    let mut sb = run(&b);

    assert_eq!(sa["nu"], 5e-3, "flag override should beat the config file");
    assert_eq!(sa["seed"], 11);
    assert!(sa["classification"].is_string());
    // Identical up to wall time.
    sa.as_object_mut().unwrap().remove("wall_secs");
    sb.as_object_mut().unwrap().remove("wall_secs");
    assert_eq!(sa, sb);

    for name in ["config.json", "diagnostics.csv", "bootstrap.json"] {
        let fa = std::fs::read(a.join(name)).unwrap();
        let fb = std::fs::read(b.join(name)).unwrap();
        assert_eq!(fa, fb, "{name} differs between identical runs");
    }
}

#[test]
fn failures_exit_nonzero_with_machine_readable_errors() {
    let out = shearflow(&["run", "--nu", "-1"]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_str(stderr_of(&out).trim())
        .expect("stderr should be one JSON object");
    assert_eq!(err["error"]["kind"], "invalid-config");
    assert!(err["error"]["message"].as_str().unwrap().contains("nu"));

    let out = shearflow(&["decay-fit", "--csv", "/nonexistent.csv", "--column", "vy", "--t-min", "1", "--t-max", "2"]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_str(stderr_of(&out).trim()).unwrap();
    assert_eq!(err["error"]["kind"], "io");
}

#[test]
fn decay_fit_reads_a_run_diagnostics_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("r");
    let o = shearflow(&[
        "run",
        "--nu",
        "1e-2",
        "--eps",
        "0.02",
        "--t-end",
        "4",
        "--nx",
        "32",
        "--ny",
        "128",
        "--aspect",
        "2.0",
        "--seed",
        "3",
        "--linear",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", stderr_of(&o));

    let csv = out_dir.join("diagnostics.csv");
    let o = shearflow(&[
        "decay-fit",
        "--csv",
        csv.to_str().unwrap(),
        "--column",
        "vy",
        "--t-min",
        "0.5",
        "--t-max",
        "4",
    ]);
    assert!(o.status.success(), "stderr: {}", stderr_of(&o));
    let fit: serde_json::Value = serde_json::from_str(&stdout_of(&o)).unwrap();
    assert_eq!(fit["column"], "vy");
    assert!(fit["slope"].as_f64().unwrap().is_finite());
    assert!(fit["points"].as_u64().unwrap() >= 3);

    let o = shearflow(&[
        "decay-fit",
        "--csv",
        csv.to_str().unwrap(),
        "--column",
        "no_such_column",
        "--t-min",
        "0.5",
        "--t-max",
        "4",
    ]);
    assert!(!o.status.success());
    let err: serde_json::Value = serde_json::from_str(stderr_of(&o).trim()).unwrap();
    assert_eq!(err["error"]["kind"], "invalid-argument");
}

#[test]
fn oracle_check_reports_tiny_errors_on_linear_runs() {
    let out = shearflow(&[
        "oracle-check",
        "--nx",
        "32",
        "--ny",
        "128",
        "--t-end",
        "5",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    let last = text.lines().last().unwrap();
    let err: f64 = last
        .trim_start_matches("max relative error ")
        .parse()
        .expect("final line should end in a number");
    assert!(err <= 1e-10, "oracle error {err:.3e}");

    let out = shearflow(&[
        "oracle-check",
        "--nx",
        "32",
        "--ny",
        "128",
        "--t-end",
        "5",
        "--tol",
        "1e-20",
    ]);
    assert!(!out.status.success(), "impossible tolerance should fail");
    let err: serde_json::Value = serde_json::from_str(stderr_of(&out).trim()).unwrap();
    assert_eq!(err["error"]["kind"], "numerical");
}

#[test]
fn sweep_writes_a_summary_over_a_tiny_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("sweep.toml");
    std::fs::write(
        &cfg_path,
        r#"
nu_grid = [5e-3, 1e-2]
eps_bracket = [0.2, 500.0]
bisection_steps = 3
seed = 11

[base]
t_end = 8.0
dt_max = 0.05

[base.grid]
nx = 16
ny = 64
l = 2.0

[base.diag]
frames = false
cadence = 1.0
"#,
    )
    .unwrap();
    let out_dir = dir.path().join("sweep");
    let o = shearflow(&[
        "sweep",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", stderr_of(&o));

    let summary = std::fs::read_to_string(out_dir.join("sweep_summary.csv")).unwrap();
    assert!(stdout_of(&o).contains(&summary));
    let mut lines = summary.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with('#'), "summary CSV should be versioned");
    assert!(lines.clone().count() >= 3, "expected column line plus two rows");
    assert!(out_dir.join("nu_5.000000e-3").is_dir());
}
