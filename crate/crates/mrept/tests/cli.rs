//! Black-box tests of the `mrept` binary: exit codes, artifacts, determinism.

use std::path::Path;
use std::process::{Command, Output};

fn mrept(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrept"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("run.json");
    let config = serde_json::json!({
        "version": 1,
        "grid": { "n": [13, 13, 13], "extent": [0.2, 0.2, 0.2] },
        "scene": {
            "model": "model1",
            "background": { "sigma": 0.5, "eps_rel": 60.0 },
            "anomalies": [
                {
                    "center": [0.03, 0.0],
                    "radius": 0.04,
                    "material": { "sigma": 0.9, "eps_rel": 75.0 }
                }
            ],
            "smooth_xy": 0.01
        },
        "simulate": { "refine": 2, "noise_rel": 0.0, "seed": 7 }
    });
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn malformed_config_exits_2_without_partial_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    std::fs::write(&cfg, "{ this is not json").unwrap();
    let out_dir = tmp.path().join("run");
    let out = mrept(&[
        "phantom",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(!out_dir.exists(), "no partial outputs on config error");
}

#[test]
fn unsupported_version_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("v9.json");
    std::fs::write(
        &cfg,
        r#"{"version": 9, "grid": {"n": [9,9,9], "extent": [0.1,0.1,0.1]},
            "scene": {"model": "model1", "background": {"sigma": 0.5, "eps_rel": 60.0},
                      "smooth_xy": 0.0}}"#,
    )
    .unwrap();
    let out = mrept(&[
        "phantom",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("version"));
}

#[test]
fn phantom_simulate_reconstruct_report_flow() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let run = tmp.path().join("run");
    let run_s = run.to_str().unwrap().to_owned();

    let out = mrept(&["phantom", "--config", &cfg, "--out", &run_s]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    for f in ["sigma_true.raw", "eps_true.raw", "phantom.json", "phantom_manifest.json"] {
        assert!(run.join(f).exists(), "missing {f}");
    }

    let out = mrept(&["simulate", "--config", &cfg, "--out", &run_s]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(run.join("h_meas.raw").exists());
    assert!(run.join("simulate_manifest.json").exists());

    let out = mrept(&[
        "reconstruct",
        "--config",
        &cfg,
        "--out",
        &run_s,
        "--method",
        "direct",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(run.join("sigma_direct.raw").exists());
    assert!(run.join("eps_direct.raw").exists());
    assert!(run.join("reconstruct_manifest.json").exists());

    let out = mrept(&["report", "--run", &run_s]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let report = run.join("report");
    for f in [
        "summary.json",
        "report_manifest.json",
        "sigma_true.pgm",
        "sigma_direct.pgm",
        "error_sigma_direct.csv",
        "h_meas_re.pgm",
    ] {
        assert!(report.join(f).exists(), "missing report artifact {f}");
    }

    // rerun on the same directory is byte-identical
    let first_summary = std::fs::read(report.join("summary.json")).unwrap();
    let first_pgm = std::fs::read(report.join("sigma_direct.pgm")).unwrap();
    let out = mrept(&["report", "--run", &run_s]);
    assert_eq!(code(&out), 0);
    assert_eq!(first_summary, std::fs::read(report.join("summary.json")).unwrap());
    assert_eq!(first_pgm, std::fs::read(report.join("sigma_direct.pgm")).unwrap());
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("run.json");
    let config = serde_json::json!({
        "version": 1,
        "grid": { "n": [11, 11, 11], "extent": [0.2, 0.2, 0.2] },
        "scene": {
            "model": "model1",
            "background": { "sigma": 0.5, "eps_rel": 60.0 },
            "smooth_xy": 0.0
        },
        "simulate": { "refine": 2, "noise_rel": 0.01, "seed": 42 }
    });
    std::fs::write(&cfg_path, serde_json::to_string(&config).unwrap()).unwrap();
    let cfg = cfg_path.to_str().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let out = mrept(&["simulate", "--config", cfg, "--out", dir.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    }
    let da = std::fs::read(a.join("h_meas.raw")).unwrap();
    let db = std::fs::read(b.join("h_meas.raw")).unwrap();
    assert_eq!(da, db, "same seed must give identical data");
}

#[test]
fn newton_without_initial_guess_exits_2_with_instructions() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let run = tmp.path().join("run");
    let run_s = run.to_str().unwrap().to_owned();
    let out = mrept(&["simulate", "--config", &cfg, "--out", &run_s]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let out = mrept(&[
        "reconstruct",
        "--config",
        &cfg,
        "--out",
        &run_s,
        "--method",
        "newton",
    ]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(
        stderr(&out).contains("initial guess"),
        "stderr: {}",
        stderr(&out)
    );
}

#[test]
fn report_on_empty_directory_lists_missing_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let out = mrept(&["report", "--run", empty.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("missing"), "stderr: {err}");
    assert!(err.contains("h_meas.raw"), "stderr: {err}");
}

#[test]
fn reconstruct_without_data_points_at_simulate() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let run = tmp.path().join("run");
    let out = mrept(&[
        "reconstruct",
        "--config",
        &cfg,
        "--out",
        run.to_str().unwrap(),
        "--method",
        "direct",
    ]);
    assert_eq!(code(&out), 4, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("simulate"), "stderr: {}", stderr(&out));
}
