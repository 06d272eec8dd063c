//! Black-box tests of the `cosserat-shell` binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cosserat-shell")).args(args).output().expect("binary runs")
}

fn run_path(sub: &str, path: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--scenario", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

const FREE_PLATE: &str = r#"{
  "schema_version": 1,
  "name": "free-plate",
  "chart": { "kind": "plate", "domain": { "u": [0.0, 1.0], "v": [0.0, 1.0] } },
  "grid": { "n_u": 9, "n_v": 9 },
  "material": { "mu": 1.0, "lambda": 1.0, "mu_c": 1.0, "l_c": 0.1, "b1": 1.0, "b2": 1.0, "b3": 1.0, "h": 0.1 },
  "boundary": { "u_min": "free", "u_max": "free", "v_min": "free", "v_max": "free" }
}"#;

/// Field file of the plate stretched by `s` with unrotated frames.
fn stretched_field(n: usize, s: f64) -> String {
    let mut text = String::from("idx,u,v,mx,my,mz,qw,qx,qy,qz\n");
    for j in 0..n {
        for i in 0..n {
            let (u, v) = (i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64);
            writeln!(text, "{},{u:?},{v:?},{:?},{:?},0.0,1.0,0.0,0.0,0.0", j * n + i, s * u, s * v).unwrap();
        }
    }
    text
}

#[test]
fn validate_passes_with_the_default_seed() {
    let out = run(&["validate"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("all suites passed"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn injected_fault_is_caught_by_exactly_one_suite() {
    let out = run(&["validate", "--inject-fault", "flip-coupling-sign"]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    let failing: Vec<_> = text.lines().filter(|l| l.contains("FAIL") && !l.contains("validation")).collect();
    assert_eq!(failing.len(), 1, "{text}");
    assert!(failing[0].contains("energy-form-equivalence"));
}

#[test]
fn validate_reports_semi_definite_material_as_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_path("validate", &scenario("koiter-plate.json"), &["--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("semi-definite, skipped: mu_c = 0"));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("validation.json")).unwrap()).unwrap();
    let skipped = report["suites"].as_array().unwrap().iter().filter(|s| s["status"]["status"] == "skipped").count();
    assert!(skipped >= 1, "{report}");
}

#[test]
fn energy_of_the_reference_configuration_is_zero() {
    let out = run_path("energy", &scenario("cylinder.json"), &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["total_energy"], 0.0);
    for key in ["h_terms", "h3_terms", "curvature", "transverse_shear"] {
        assert_eq!(v["breakdown"][key], 0.0, "{key}");
    }
}

#[test]
fn energy_of_a_uniform_stretch_matches_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("free-plate.json");
    std::fs::write(&scen, FREE_PLATE).unwrap();
    let field = dir.path().join("stretch.csv");
    let s = 1.02;
    std::fs::write(&field, stretched_field(9, s)).unwrap();

    let (mu, lambda, h) = (1.0, 1.0, 0.1);
    let e = s - 1.0;
    // membrane strain e on both axes: mu |E|^2 + mu lambda / (lambda + 2 mu) (tr E)^2
    let expected = h * (2.0 * mu * e * e + 4.0 * mu * lambda / (lambda + 2.0 * mu) * e * e);

    let mut energies = Vec::new();
    for variant in ["harmonic", "arithmetic"] {
        let out = run_path("energy", &scen, &["--config", field.to_str().unwrap(), "--variant", variant]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let got = json(&out)["total_energy"].as_f64().unwrap();
        assert!((got - expected).abs() <= 1e-8 * expected, "{variant}: {got:e} vs {expected:e}");
        energies.push(got);
    }
    // no transverse shear in this state, so the variants agree exactly
    assert_eq!(energies[0], energies[1]);
}

#[test]
fn unloaded_solve_returns_the_reference_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_path("solve", &scenario("clamped-plate-unloaded.json"), &["--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["report"]["final_energy"], 0.0);
    assert_eq!(v["report"]["converged"], true);
    let field = std::fs::read_to_string(dir.path().join("field.csv")).unwrap();
    assert!(field.starts_with("idx,u,v,mx,my,mz,qw,qx,qy,qz"));
    assert_eq!(field.lines().count(), 1 + 17 * 17);
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn loaded_solve_converges_and_warm_starts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = run_path("solve", &scenario("cylinder.json"), &["--out", d]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let first = json(&out);
    assert!(first["report"]["final_energy"].as_f64().unwrap() < 0.0);

    let field = dir.path().join("field.csv");
    let again = run_path("solve", &scenario("cylinder.json"), &["--config", field.to_str().unwrap()]);
    assert_eq!(code(&again), 0, "{}", stderr(&again));
    assert_eq!(json(&again)["report"]["iterations"], 0);
}

#[test]
fn solve_is_independent_of_the_thread_count() {
    let a = run_path("solve", &scenario("clamped-plate.json"), &["--threads", "1"]);
    let b = run_path("solve", &scenario("clamped-plate.json"), &["--threads", "3"]);
    assert_eq!(code(&a), 0);
    assert_eq!(code(&b), 0);
    let (ea, eb) = (json(&a)["report"]["final_energy"].as_f64().unwrap(), json(&b)["report"]["final_energy"].as_f64().unwrap());
    assert!((ea - eb).abs() <= 1e-10 * ea.abs(), "{ea:e} vs {eb:e}");
}

#[test]
fn ill_posed_problem_exits_with_non_convergence() {
    let out = run_path("solve", &scenario("free-plate-ill-posed.json"), &[]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("warning: ill-posed"), "{}", stderr(&out));
    assert_eq!(json(&out)["report"]["converged"], false);
}

#[test]
fn malformed_scenario_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, FREE_PLATE.replace("\"h\": 0.1 }", "\"h\": 0.1, }")).unwrap();
    let out = run_path("energy", &path, &[]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("line 6"), "{}", stderr(&out));
}

#[test]
fn unknown_scenario_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("extra.json");
    std::fs::write(&path, FREE_PLATE.replace("\"name\"", "\"colour\": \"red\", \"name\"")).unwrap();
    let out = run_path("energy", &path, &[]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("colour"), "{}", stderr(&out));
}

#[test]
fn input_errors_exit_with_code_three() {
    assert_eq!(code(&run(&["energy"])), 3);
    assert_eq!(code(&run(&["energy", "--scenario", "/nonexistent/scenario.json"])), 3);
    assert_eq!(code(&run(&["frobnicate"])), 3);
    let out = run_path("solve", &scenario("clamped-plate.json"), &["--threads", "0"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn koiter_compare_plate_has_no_correction() {
    let out = run_path("koiter-compare", &scenario("koiter-plate.json"), &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    for r in v["study"]["reports"].as_array().unwrap() {
        assert_eq!(r["correction"], 0.0);
        assert_eq!(r["max_kl_violation"], 0.0);
    }
}

#[test]
fn koiter_compare_sphere_cap_discrepancy_is_cubic() {
    let out = run_path("koiter-compare", &scenario("koiter-sphere-cap.json"), &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let order = json(&out)["study"]["discrepancy_order"].as_f64().unwrap();
    assert!((2.8..3.2).contains(&order), "{order}");
}

#[test]
fn koiter_compare_zero_amplitude_gives_zero_energies() {
    let out = run_path("koiter-compare", &scenario("koiter-reference.json"), &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    let r = &v["study"]["reports"][0];
    for key in ["w_full_reduced", "w_koiter_leading", "discrepancy", "correction"] {
        assert_eq!(r[key], 0.0, "{key}");
    }
}
