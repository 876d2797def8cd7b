use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coupling")).args(args).output().expect("binary runs")
}

fn run_on(cmd: &str, file: &str, extra: &[&str]) -> (i32, String) {
    let path = fixture(file);
    let mut args = vec![cmd, path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = run(&args);
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn e1_data_verify() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let (code, text) = run_on("verify-data", "e1.toml", &["--report", report.to_str().unwrap()]);
    assert_eq!(code, 0, "{text}");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["passed"], true);
    let entries = json["reports"][0]["entries"].as_array().unwrap();
    let gating: Vec<&str> =
        entries.iter().filter(|e| e["gating"] == true).map(|e| e["name"].as_str().unwrap()).collect();
    assert_eq!(gating, ["vertical-jacobi", "poisson-connection", "bianchi-F", "curvature-identity"]);
    assert!(entries.iter().all(|e| e["identity"].is_string()));
}

#[test]
fn broken_bianchi_fails() {
    let (code, text) = run_on("algebroid-check", "broken_bianchi.toml", &[]);
    assert_eq!(code, 1);
    assert!(text.contains("[FAIL] bianchi-R"), "{text}");
    assert!(text.contains("residual: 1"));
}

#[test]
fn constant_symplectic_is_poisson() {
    let (code, _) = run_on("check-jacobi", "symplectic.toml", &[]);
    assert_eq!(code, 0);
}

#[test]
fn e1_geometric_series() {
    let (code, text) = run_on("assemble", "e1.toml", &[]);
    assert_eq!(code, 0);
    assert!(text.contains("{xi1,xi2} = 1 + x1 + x1^2 + x1^3 + x1^4 + x1^5 + x1^6"), "{text}");
    let (code, text) = run_on("assemble", "e1.toml", &["--order", "2"]);
    assert_eq!(code, 0);
    assert!(text.contains("{xi1,xi2} = 1 + x1 + x1^2\n"), "{text}");
}

#[test]
fn wong_table() {
    let (code, text) = run_on("algebroid-build", "wong.toml", &[]);
    assert_eq!(code, 0, "{text}");
    for line in ["{xi1,xi2} = xi3*x3", "{xi1,xi3} = 1", "{xi2,xi4} = 1", "{x1,x2} = x3"] {
        assert!(text.contains(line), "missing {line}\n{text}");
    }
    assert!(!text.contains("{xi3,xi4}"));
}

#[test]
fn decompose_round_trip() {
    let (code, text) = run_on("decompose", "e1_tensor.toml", &[]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("F[1,2] = 1 - x1"));
}

#[test]
fn algebroid_pipeline() {
    for cmd in ["algebroid-check", "connection-change", "moser-verify", "linearize", "extract-algebroid"] {
        let (code, text) = run_on(cmd, "e1_algebroid.toml", &[]);
        assert_eq!(code, 0, "{cmd}\n{text}");
    }
    let (code, text) = run_on("extract-algebroid", "e1_algebroid.toml", &[]);
    assert_eq!(code, 0);
    assert!(text.contains("R[1,2,1] = 1"));
}

#[test]
fn coisotropy_points() {
    let (code, text) = run_on("algebroid-check", "lagrangian.toml", &[]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("dim ker R = 2"));
}

#[test]
fn cocycle_of_rescaled_curvature() {
    let (code, text) = run_on("cocycle", "shifted_cocycle.toml", &[]);
    assert_eq!(code, 0);
    assert!(text.contains("(x1)*dxi1^dxi2"));
    assert!(text.contains("[NOTE] vanishes"));
}

#[test]
fn moser_flow_with_points_file() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "# xi1 xi2 x1\n0.2, 0.1, 0.05\n-1 0.5 -0.1").unwrap();
    let (code, text) = run_on(
        "moser-flow",
        "e1.toml",
        &["--points", f.path().to_str().unwrap(), "--steps", "50", "--t-samples", "0,1"],
    );
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("point-2"));
    assert!(!text.contains("point-3"));
    assert!(!text.contains("t=1/2/"));
}

#[test]
fn holonomy_paths() {
    let (code, text) = run_on("holonomy", "so3.toml", &[]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("path-1/evolution") && text.contains("path-2/evolution"));
}

#[test]
fn input_errors_exit_2() {
    assert_eq!(run_on("verify-data", "bad_syntax.toml", &[]).0, 2);
    assert_eq!(run_on("verify-data", "does_not_exist.toml", &[]).0, 2);
    assert_eq!(run_on("check-jacobi", "e1.toml", &[]).0, 2);
    assert_eq!(run_on("holonomy", "e1_algebroid.toml", &[]).0, 2);
    assert_eq!(run(&["no-such-command", "x"]).status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    let a = run_on("holonomy", "so3.toml", &["--steps", "200"]);
    let b = run_on("holonomy", "so3.toml", &["--steps", "200"]);
    assert_eq!(a, b);
}

#[test]
fn quiet_suppresses_text() {
    let (code, text) = run_on("verify-data", "e1.toml", &["--quiet"]);
    assert_eq!(code, 0);
    assert!(text.is_empty());
}
