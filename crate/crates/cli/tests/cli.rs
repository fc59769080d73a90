use std::path::Path;
use std::process::{Command, Output};

use rncmc::{slice, SpacetimeParams};
use serde_json::Value;

fn rncmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rncmc"))
        .args(args)
        .env_remove("RNCMC_TOLERANCE")
        .output()
        .expect("spawn rncmc")
}

fn ok_json(args: &[&str]) -> Value {
    let out = rncmc(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_of(out: &Output) -> Value {
    serde_json::from_slice(out.stderr.trim_ascii()).unwrap()
}

fn case_of(doc: &Value) -> &str {
    doc["slices"][0]["case"].as_str().unwrap()
}

#[test]
fn maximal_slice_as_svg() {
    let out = rncmc(&["slice", "--H", "0", "--c", "0", "--format", "svg"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("<svg"));
    assert!(text.trim_end().ends_with("</svg>"));
}

#[test]
fn cylinder_slice() {
    let doc = ok_json(&["slice", "--H", "0.2", "--cylinder", "RH"]);
    assert_eq!(case_of(&doc), "D");
    let cp = slice::critical_points(&SpacetimeParams::new(1.0, 0.6).unwrap(), 0.2).unwrap();
    assert_eq!(doc["slices"][0]["c"].as_f64().unwrap(), cp.c_big);
}

#[test]
fn case_c_above_critical_value() {
    let cp = slice::critical_points(&SpacetimeParams::new(1.0, 0.6).unwrap(), 0.2).unwrap();
    let c = format!("{}", cp.c_big + 0.1);
    let doc = ok_json(&["slice", "--H", "0.2", "--c", &c]);
    assert_eq!(case_of(&doc), "C");
}

#[test]
fn ivp_recovers_maximal_slice() {
    let doc = ok_json(&["ivp", "--H", "0", "--T0", "0", "--X0", "0.3", "--V", "0"]);
    assert!(
        doc["extra"]["c"].as_f64().unwrap().abs() < 1e-8,
        "{}",
        doc["extra"]
    );
}

#[test]
fn null_slope_is_rejected() {
    let out = rncmc(&["ivp", "--H", "0", "--T0", "0", "--X0", "0.3", "--V", "1.0"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_of(&out)["error"], "SpacelikeViolated");
}

#[test]
fn invalid_charge_is_rejected() {
    let out = rncmc(&["--e", "1.5", "slice", "--H", "0", "--c", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_of(&out)["message"].is_string());
}

#[test]
fn dirichlet_is_symmetric() {
    let doc = ok_json(&["dirichlet", "--H", "0.2", "--T0", "0.3", "--X0", "0.5"]);
    let extra = &doc["extra"];
    assert!(
        extra["symmetry_residual"].as_f64().unwrap() < 1e-6,
        "{extra}"
    );
    assert!(extra["miss"].as_f64().unwrap().abs() < 1e-8, "{extra}");
    assert!(extra["iterations"].as_u64().unwrap() <= 200);
}

#[test]
fn fixed_foliation_has_leaves_and_curve() {
    let doc = ok_json(&["foliate", "--mode", "fixed", "--H", "0.2", "--n", "50"]);
    assert!(doc["slices"].as_array().unwrap().len() >= 50);
    assert_eq!(doc["curves"].as_array().unwrap().len(), 1);
}

#[test]
fn fixed_foliation_over_two_copies() {
    let one = ok_json(&["foliate", "--H", "0", "--n", "5"]);
    let two = ok_json(&["foliate", "--H", "0", "--n", "5", "--copies", "2"]);
    assert_eq!(
        two["slices"].as_array().unwrap().len(),
        2 * one["slices"].as_array().unwrap().len()
    );
}

#[test]
fn varied_foliation_has_a_curve_per_segment() {
    let doc = ok_json(&["foliate", "--mode", "varied", "--segments", "4"]);
    assert_eq!(doc["curves"].as_array().unwrap().len(), 4);
    assert_eq!(doc["extra"]["segments"].as_array().unwrap().len(), 4);
}

#[test]
fn envelopes_table() {
    let doc = ok_json(&["envelopes", "--H", "0.2", "--n", "5"]);
    assert_eq!(doc["table"].as_array().unwrap().len(), 5);
    // F and G agree on both horizons.
    for row in [&doc["table"][0], &doc["table"][4]] {
        assert_eq!(row[1], row[2]);
    }
    assert!(doc["C_H"].as_f64().unwrap() > doc["c_H"].as_f64().unwrap());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["slice", "--H", "0.2", "--c", "1.2"];
    assert_eq!(rncmc(&args).stdout, rncmc(&args).stdout);
    let args = ["dirichlet", "--H", "0.2", "--T0", "0.3", "--X0", "0.5"];
    assert_eq!(rncmc(&args).stdout, rncmc(&args).stdout);
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("slice.json");
    let args = ["slice", "--H", "0", "--c", "0.3"];
    let out = rncmc(&[&args[..], &["--output", path.to_str().unwrap()]].concat());
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), rncmc(&args).stdout);
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"M": 2.0, "e": 1.0, "H": 0.0, "c": 0.5}"#);

    let doc = ok_json(&["--config", &cfg, "slice"]);
    assert_eq!(doc["params"]["M"], 2.0);
    assert_eq!(doc["slices"][0]["c"], 0.5);

    let doc = ok_json(&[
        "--config", &cfg, "--M", "1", "--e", "0.6", "slice", "--H", "0.2", "--c", "1.2",
    ]);
    assert_eq!(doc["params"]["M"], 1.0);
    assert_eq!(doc["params"]["e"], 0.6);
    assert_eq!(doc["slices"][0]["H"], 0.2);
}

#[test]
fn unknown_config_key_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"mass": 1.0}"#);
    let out = rncmc(&["--config", &cfg, "slice", "--H", "0", "--c", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tolerance_from_environment() {
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_rncmc"));
        cmd.args(extra).args(["slice", "--H", "0.2", "--c", "1.2"]);
        match env {
            Some(v) => cmd.env("RNCMC_TOLERANCE", v),
            None => cmd.env_remove("RNCMC_TOLERANCE"),
        };
        cmd.output().unwrap()
    };
    let bad = run(Some("loose"), &[]);
    assert_eq!(bad.status.code(), Some(2));
    let negative = run(Some("-1"), &[]);
    assert_eq!(negative.status.code(), Some(2));
    // A loose tolerance changes the profile; a flag overrides the environment.
    assert_ne!(run(Some("1e-3"), &[]).stdout, run(None, &[]).stdout);
    assert_eq!(
        run(Some("1e-3"), &["--tolerance", "1e-10"]).stdout,
        run(None, &[]).stdout
    );
    assert!(run(Some("loose"), &["--tolerance", "1e-10"])
        .status
        .success());
    // The default tolerance is 1e-10, so setting it explicitly changes nothing.
    assert_eq!(run(Some("1e-10"), &[]).stdout, run(None, &[]).stdout);
}

#[test]
fn selftest_reports_every_criterion() {
    let out = rncmc(&["selftest"]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let criteria = doc["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 9);
    let passed = doc["passed"].as_bool().unwrap();
    assert_eq!(passed, criteria.iter().all(|c| c["passed"] == true));
    assert_eq!(out.status.code(), Some(if passed { 0 } else { 3 }));
}
