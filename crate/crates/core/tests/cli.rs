use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_nonlocal-atlas");

const SATURATING: &str = r#"
mesh = { dim = 1, extents = [1.0], nodes = [256] }
nonlinearity = { kind = "saturating", params = { beta0 = 2.0 } }
coefficient = { kind = "abs_sin", k_max = 2 }
functional = { kind = "lp_of_u", gamma = 1.0 }
"#;

fn run(dir: &Path, cmd: &str, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(BIN)
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn unknown_kind_is_a_config_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SATURATING.replace("\"saturating\"", "\"hyperbolic\"");
    let out = run(dir.path(), "analyze", &cfg, &[]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_field_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "qcurve", &format!("{SATURATING}\ncolour = 3\n"), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn powerlike_rejects_p_equal_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
mesh = { dim = 1, extents = [1.0], nodes = [128] }
coefficient = { kind = "abs_sin", k_max = 1 }
functional = { kind = "lp_of_u", gamma = 1.0 }
powerlike = { p = 2.0 }
"#;
    let out = run(dir.path(), "powerlike", cfg, &[]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bounds_rejects_gamma_below_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SATURATING.replace("gamma = 1.0", "gamma = 0.5");
    let out = run(dir.path(), "bounds", &cfg, &[]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_config_file_fails() {
    let out = Command::new(BIN)
        .args(["qcurve", "--config", "/nonexistent/run.toml"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn unattainable_residual_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SATURATING}lambda = {{ values = [1.0] }}\ntolerances = {{ tol_residual = 1e-30 }}\n");
    let out = run(dir.path(), "analyze", &cfg, &["--verify"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("out/verify.json"));
    assert_eq!(report["passed"], Value::Bool(false));
}

#[test]
fn analyze_counts_solutions_below_and_above_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SATURATING}lambda = {{ values = [1.0, 1e6] }}\n");
    let out = run(dir.path(), "analyze", &cfg, &["--verify", "--threads", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let o = dir.path().join("out");
    let mut below = 0;
    for i in 0..2 {
        let small = json(&o.join(format!("window_{i}_lambda_0.json")));
        let tilde = small["lambda0_tilde"]["value"].as_f64().unwrap();
        assert!(tilde < 1e6);
        let fps = small["fixed_points"].as_array().unwrap();
        assert!(fps.len() >= 2, "window {i}: {}", fps.len());
        below += fps.len();
        for fp in fps {
            assert!(fp["pde_residual"].as_f64().unwrap() < 1e-8);
        }
        let large = json(&o.join(format!("window_{i}_lambda_1.json")));
        assert!(large["fixed_points"].as_array().unwrap().is_empty(), "window {i}");
    }
    assert!(below >= 4);
    let listed = String::from_utf8(out.stdout).unwrap();
    assert!(listed.lines().any(|l| l.ends_with("summary.json")));
}

#[test]
fn qcurve_of_power_has_the_homogeneous_slope() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
mesh = { dim = 1, extents = [1.0], nodes = [256] }
nonlinearity = { kind = "power", params = { p = 1.5 } }
functional = { kind = "lp_of_u", gamma = 2.0 }
"#;
    let out = run(dir.path(), "qcurve", cfg, &["--verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/q.csv")).unwrap();
    let rows: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',').map(|x| x.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect();
    assert!(rows.len() >= 16);
    let (a, b) = (rows[0], rows[rows.len() - 1]);
    let slope = (b.1 / a.1).ln() / (b.0 / a.0).ln();
    // γ / (2 - p) = 4
    assert!((slope - 4.0).abs() < 1e-6, "{slope}");
}

#[test]
fn bounds_run_writes_a_consistent_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "bounds", SATURATING, &["--verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("out/bounds.json"));
    for w in report["windows"].as_array().unwrap() {
        assert_eq!(w["contained"], Value::Bool(true), "{w}");
    }
}
