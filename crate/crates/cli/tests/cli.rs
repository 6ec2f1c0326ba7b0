use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rbdecay::atom::AtomConstants;
use rbdecay::experiments::hyperfine_population;
use rbdecay::fit::FitResult;
use rbdecay::protocol::{ExperimentSpec, ProtocolKind};

fn rbdecay(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbdecay"))
        .args(args)
        .current_dir(cwd)
        .env_remove("RBDECAY_CONFIG_DIR")
        .output()
        .expect("binary runs")
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn simulate_is_byte_identical_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.toml", "protocol = \"A\"\n[output]\nseed = 42\n");
    for out in ["r1", "r2"] {
        let o = rbdecay(&["simulate", "-c", "a.toml", "-o", out, "--noise", "0.02"], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(dir.path().join("r1/trace_A_3.800e11.csv")).unwrap();
    let b = std::fs::read(dir.path().join("r2/trace_A_3.800e11.csv")).unwrap();
    assert_eq!(a, b);
    assert!(String::from_utf8_lossy(&a).contains("# noise_seed=42"));
}

#[test]
fn fit_of_simulated_file_matches_in_process_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.toml", "protocol = \"A\"\n");
    let o = rbdecay(&["simulate", "-c", "a.toml", "-o", "out"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = rbdecay(&["fit", "out/trace_A_3.800e11.csv", "-o", "fit.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    let from_cli: FitResult = serde_json::from_value(report["fits"][0]["fit"].clone()).unwrap();
    let in_process = hyperfine_population(&ExperimentSpec::for_protocol(ProtocolKind::A), &AtomConstants::default(), 3.8e11).unwrap();
    assert_eq!(from_cli, in_process.fit);
}

#[test]
fn config_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "syntax.toml", "protocol = \"A\"\n[vapor\n");
    write(dir.path(), "unknown.toml", "protocol = \"A\"\n[vapor]\nbogus = 1\n");
    write(dir.path(), "unit.toml", "[relaxation]\ngamma0_s = 1.0\n");
    write(dir.path(), "zero.toml", "[vapor]\ndensities_cm3 = [0.0]\n");
    for (file, code, needle) in [
        ("syntax.toml", 4, "line 2"),
        ("unknown.toml", 4, "vapor.bogus"),
        ("unit.toml", 4, "_hz"),
        ("zero.toml", 2, "vapor.densities_cm3"),
        ("missing.toml", 4, "missing.toml"),
    ] {
        let o = rbdecay(&["simulate", "-c", file, "-o", "out"], dir.path());
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(o.status.code(), Some(code), "{file}: {err}");
        assert!(err.contains(needle), "{file}: {err}");
    }
    // lenient mode only warns about the unknown key
    let o = rbdecay(&["simulate", "-c", "unknown.toml", "--lenient", "-o", "out"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn malformed_trace_file_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.csv", "# protocol=A\ntime_s,alpha_raw,alpha_norm\n0,1,1\n1,2\n");
    let o = rbdecay(&["fit", "bad.csv"], dir.path());
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));
}

#[test]
fn untagged_flat_trace_needs_model_and_does_not_converge() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("time_s,alpha_raw,alpha_norm\n");
    for k in 0..20 {
        text += &format!("{},0.5,0.5\n", k as f64 * 1e-3);
    }
    write(dir.path(), "flat.csv", &text);
    let o = rbdecay(&["fit", "flat.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let o = rbdecay(&["fit", "flat.csv", "--model", "exponential"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn validate_quick_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = rbdecay(&["validate", "--quick"], dir.path());
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{out}");
    assert!(out.contains("PASS clebsch_gordan_sigma_plus"));
    assert!(!out.contains("FAIL"));
}

#[test]
fn shipped_defaults_parse_and_resolve_through_config_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_rbdecay"))
        .args(["simulate", "-c", "paper_defaults", "-o", "out", "--density", "1e11"])
        .current_dir(dir.path())
        .env("RBDECAY_CONFIG_DIR", configs_dir())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("out/trace_A_1.000e11.csv").is_file());
}
