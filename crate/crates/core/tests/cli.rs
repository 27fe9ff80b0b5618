use flamefront::cli::RunManifest;
use sha2::{Digest, Sha256};
use std::path::Path;
use std::process::{Command, Output};

const TWO_LAYER: &str = r#"
kinetics = "arrhenius"
[[layers]]
width = 0.5
a = 1.0
b = 1.0
g = 1.0
A = 1.0
E = 0.0
[[layers]]
width = 0.5
a = 1.0
b = 1.0
g = 1.0
A = 2.0
E = 0.0
"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flamefront"))
        .args(args)
        .output()
        .unwrap()
}

fn write_medium(dir: &Path, text: &str) -> String {
    write_named(dir, "medium.toml", text)
}

fn write_named(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn manifest(out: &Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn invalid_inputs_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_medium(dir.path(), TWO_LAYER);
    let o = run(&["check", "--medium", "/nonexistent/medium.toml"]);
    assert_eq!(o.status.code(), Some(64));

    let bad = write_named(dir.path(), "bad.toml", &TWO_LAYER.replacen("A = 2.0", "A = -2.0", 1));
    let o = run(&["check", "--medium", &bad]);
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("layers[1].A"));

    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    for args in [
        vec!["corrector", "--medium", &good, "--out", out, "--lambda", "-1"],
        vec![
            "corrector",
            "--medium",
            &good,
            "--out",
            out,
            "--lambda",
            "1",
            "--tol",
            "-1",
        ],
        vec!["homogenize", "--medium", &good, "--out", out, "--eps-list", ""],
        vec!["speed-curve", "--medium", &good, "--out", out, "--lambda-grid", "1:2"],
        vec!["wave", "--medium", &good, "--out", out, "--mu", "0"],
        vec!["wave", "--medium", &good],
    ] {
        let o = run(&args);
        assert_eq!(
            o.status.code(),
            Some(64),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn check_reports_assumptions() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_medium(dir.path(), TWO_LAYER);
    let o = run(&["check", "--medium", &m]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["status"], "ok");
    assert_eq!(v["checks"].as_array().unwrap().len(), 6);

    // degenerate kinetics with a large period relative to μ
    let arr = write_named(dir.path(), "arrhenius.toml", &TWO_LAYER.replace("E = 0.0", "E = 1.0"));
    let out = dir.path().join("check");
    let o = run(&["check", "--medium", &arr, "--mu", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let man = manifest(&out);
    assert_eq!(man.certificates.get("small_period"), Some(&false));
    assert!(out.join("check.json").exists());
}

#[test]
fn corrector_manifest_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_medium(dir.path(), TWO_LAYER);
    let out = dir.path().join("cor");
    let o = run(&[
        "corrector",
        "--medium",
        &m,
        "--out",
        out.to_str().unwrap(),
        "--lambda",
        "1",
        "--mu",
        "1",
        "--dat",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let text = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    let man: RunManifest = serde_json::from_str(&text).unwrap();
    let again: RunManifest = serde_json::from_str(&serde_json::to_string(&man).unwrap()).unwrap();
    assert_eq!(man, again);
    assert_eq!(man.exit_code, 0);
    assert_eq!(man.status, "ok");
    assert_eq!(man.medium_sha256, hex::encode(Sha256::digest(TWO_LAYER.as_bytes())));
    let names: Vec<&str> = man.files.iter().map(|f| f.name.as_str()).collect();
    for n in ["corrector.csv", "corrector.dat", "second_order.csv", "summary.json"] {
        assert!(names.contains(&n), "{n} missing from {names:?}");
    }
    for f in &man.files {
        let bytes = std::fs::read(out.join(&f.name)).unwrap();
        assert_eq!(f.sha256, hex::encode(Sha256::digest(&bytes)));
        assert_eq!(f.bytes, bytes.len() as u64);
    }

    let s: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    let c0 = s["c0"].as_f64().unwrap();
    assert!(c0 > 1.5 && c0 < 2.0);
    assert!(s["corrector"]["dc_dlambda"].as_f64().unwrap() < 0.0);
    assert!((s["second_order"]["linear_discrepancy"].as_f64().unwrap().abs() - 0.125).abs() < 1e-12);
}

#[test]
fn limit_regimes_skip_the_corrector() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_medium(dir.path(), TWO_LAYER);
    for (lam, c) in [("inf", 1.5), ("0", 2.0)] {
        let out = dir.path().join(lam);
        let o = run(&[
            "corrector",
            "--medium",
            &m,
            "--out",
            out.to_str().unwrap(),
            "--lambda",
            lam,
        ]);
        assert_eq!(o.status.code(), Some(0));
        let s: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
        assert_eq!(s["c0"].as_f64().unwrap(), c);
        assert!(!out.join("corrector.csv").exists());
    }
}

#[test]
fn short_speed_curve_has_no_limit_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_medium(dir.path(), TWO_LAYER);
    let out = dir.path().join("sc");
    let o = run(&[
        "speed-curve",
        "--medium",
        &m,
        "--out",
        out.to_str().unwrap(),
        "--lambda-grid",
        "0.5:2:4",
        "--tol",
        "1e-10",
        "--sequential",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let man = manifest(&out);
    assert_eq!(man.certificates.get("monotone"), Some(&true));
    assert!(!man.certificates.contains_key("large_lambda_limit"));
    let csv = std::fs::read_to_string(out.join("speed_curve.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("lambda,c,dc_formula,dc_fd,dc_rel_err,rtilde"));
}

#[test]
fn constant_medium_wave() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_medium(
        dir.path(),
        r#"
        kinetics = "saturating"
        [[layers]]
        width = 1.0
        a = 1.0
        b = 1.0
        g = 1.0
        A = 1.0
        K = 1.0
        "#,
    );
    let out = dir.path().join("w");
    let o = run(&[
        "wave",
        "--medium",
        &m,
        "--mu",
        "1",
        "--out",
        out.to_str().unwrap(),
        "--grid",
        "16",
        "--n-xi",
        "64",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let man = manifest(&out);
    assert!(man.certificates.values().all(|v| *v));
    let s: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert!((s["speed"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    for f in ["front.csv", "trace.csv", "temperature.csv", "history.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}
