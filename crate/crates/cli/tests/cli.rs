use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mass")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn assert_round_trips(text: &str) -> Value {
    let value: Value = serde_json::from_str(text).expect("valid json");
    let again = serde_json::to_string_pretty(&value).unwrap();
    assert_eq!(text.trim_end(), again, "json output is not canonical");
    value
}

#[test]
fn topo_burns_blowup() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "burns.json", &format!(
        r#"{{"basis": ["E"], "Q": [[-1]], "c1": [1], "areas": [{}]}}"#,
        3.0 * std::f64::consts::PI
    ));
    let out = mass(&["topo", "--input", &input]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("mass = 1.0\n"), "{}", stdout(&out));
}

#[test]
fn topo_singular_form_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "sing.json", r#"{"basis": ["A", "B"], "Q": [[1, 1], [1, 1]], "c1": [0, 1], "areas": [1, 1]}"#);
    let out = mass(&["topo", "--input", &input]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("singular"));
}

#[test]
fn topo_general_formula() {
    // ℂP² data: pairing 3π, ∫s = 12π²; anomaly vanishes
    let pi = std::f64::consts::PI;
    let out = mass(&["--format", "json", "topo", "--m", "2", "--pairing", &(3.0 * pi).to_string(), "--scalar-integral", &(12.0 * pi * pi).to_string()]);
    assert_eq!(code(&out), 0);
    let v = assert_round_trips(&stdout(&out));
    assert!(v["compact_anomaly"].as_f64().unwrap().abs() < 1e-9);
    assert_eq!(code(&mass(&["topo", "--m", "1", "--pairing", "1"])), 1);
}

#[test]
fn adm_schwarzschild_prints_mass_and_table() {
    let out = mass(&["adm", "--family", "schwarzschild", "--n", "3", "--A", "2"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let first = text.lines().next().unwrap();
    let value: f64 = first.trim_start_matches("mass = ").split_whitespace().next().unwrap().parse().unwrap();
    assert!((value - 1.0).abs() < 1e-6);
    assert!(text.contains("rho,mass_at_radius,extrapolant,error_estimate"));
    assert_eq!(text.lines().filter(|l| l.contains(',') && !l.starts_with("rho")).count(), 8);
}

#[test]
fn adm_csv_and_json() {
    let out = mass(&["--format", "csv", "adm", "--family", "schwarzschild", "--param", "n=4", "--param", "A=1"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(text.lines().next().unwrap(), "rho,mass_at_radius,extrapolant,error_estimate");
    for line in text.lines().skip(1) {
        assert_eq!(line.split(',').count(), 4);
    }
    let out = mass(&["--format", "json", "adm", "--family", "radial-kahler", "--param", "m=2", "--param", r#"potential={"kind":"log-shift","a":1.5}"#, "--param", "inner_radius=0", "--logdet"]);
    assert_eq!(code(&out), 0);
    let v = assert_round_trips(&stdout(&out));
    assert_eq!(v["route"], "log-det");
    assert!((v["estimate"]["value"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn adm_non_convergence_exits_2() {
    let out = mass(&["adm", "--family", "schwarzschild", "--n", "3", "--A", "2", "--schedule", "10,20,40", "--extrapolation", "last-sample"]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("not converged"));
}

#[test]
fn adm_bad_inputs_exit_1() {
    assert_eq!(code(&mass(&["adm", "--family", "nope"])), 1);
    assert_eq!(code(&mass(&["adm", "--family", "lebrun"])), 1);
    assert_eq!(code(&mass(&["adm"])), 1);
    assert_eq!(code(&mass(&["adm", "--family", "schwarzschild", "--n", "3", "--A", "2", "--schedule", "1,20,40"])), 1);
    assert_eq!(code(&mass(&["adm", "--family", "schwarzschild", "--n", "3", "--A", "2", "--schedule", "10,x"])), 1);
    assert_eq!(code(&mass(&["not-a-command"])), 1);
}

#[test]
fn lebrun_zero_instance_is_exact() {
    let out = mass(&["lebrun", "--zero-instance", "3"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with("mass = 0 (exact)\n"));
    assert!(text.contains("cross-check: intersection-form route gives 0.0 (agrees)"));
    assert_eq!(code(&mass(&["lebrun", "--zero-instance", "2"])), 1);
    assert_eq!(code(&mass(&["lebrun", "--ell", "3", "--distances", "-1"])), 1);
}

#[test]
fn lebrun_json() {
    let out = mass(&["--format", "json", "lebrun", "--ell", "4"]);
    assert_eq!(code(&out), 0);
    let v = assert_round_trips(&stdout(&out));
    assert_eq!(v["mass_exact"], "-1/6");
}

#[test]
fn penrose_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let div = write(dir.path(), "div.json", r#"{"m": 2, "components": [{"label": "E", "n": 1, "vol": 3.0}]}"#);
    let bound = 1.0 / std::f64::consts::PI;
    assert_eq!(code(&mass(&["penrose", "--input", &div, "--mass", &bound.to_string(), "--scalar-flat"])), 0);
    assert_eq!(code(&mass(&["penrose", "--input", &div, "--mass", &(bound + 0.1).to_string()])), 0);
    assert_eq!(code(&mass(&["penrose", "--input", &div, "--mass", &(bound - 0.1).to_string()])), 3);
    // equality without scalar-flatness contradicts the rigidity statement
    assert_eq!(code(&mass(&["penrose", "--input", &div, "--mass", &bound.to_string()])), 3);
    let bad = write(dir.path(), "bad.json", r#"{"m": 2, "components": [{"label": "E", "n": 0, "vol": 3.0}]}"#);
    assert_eq!(code(&mass(&["penrose", "--input", &bad, "--mass", "1"])), 1);
}

#[test]
fn families_lists_every_family() {
    let out = mass(&["--format", "json", "families"]);
    let v = assert_round_trips(&stdout(&out));
    for name in ["euclidean", "schwarzschild", "gibbons-hawking", "radial-kahler", "lebrun"] {
        assert!(v.get(name).is_some(), "{name}");
    }
}

#[test]
fn reproduce_subset_and_mutation() {
    let out = mass(&["--format", "json", "reproduce", "--only", "lebrun"]);
    assert_eq!(code(&out), 0);
    let v = assert_round_trips(&stdout(&out));
    let criteria = v["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 1);
    assert_eq!(criteria[0]["key"], "lebrun");

    let out = mass(&["reproduce", "--only", "schwarzschild", "--mutate", "sign"]);
    assert_eq!(code(&out), 3);
    assert!(stdout(&out).contains("[FAIL] 1 schwarzschild"));

    assert_eq!(code(&mass(&["reproduce", "--only", "nothing"])), 1);
    assert_eq!(code(&mass(&["reproduce", "--mutate", "typo"])), 1);
}

#[test]
fn reproduce_exit_code_follows_the_matrix() {
    let out = mass(&["--format", "json", "reproduce"]);
    let v = assert_round_trips(&stdout(&out));
    let criteria = v["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 9);
    let all = criteria.iter().all(|c| c["passed"].as_bool().unwrap());
    assert_eq!(code(&out), if all { 0 } else { 3 });
}

#[test]
fn config_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", "# defaults for this run\nformat = json\nfamily = schwarzschild\nparam.n = 5\nparam.A = 4\nquad_order = 4\n");
    let out = mass(&["--config", &cfg, "adm"]);
    assert_eq!(code(&out), 0);
    let v = assert_round_trips(&stdout(&out));
    assert!((v["estimate"]["value"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    // flags win over the file
    let out = mass(&["--config", &cfg, "--format", "csv", "adm", "--A", "2"]);
    assert_eq!(code(&out), 0);
    let last = stdout(&out).lines().last().unwrap().to_string();
    let extrapolant: f64 = last.split(',').nth(2).unwrap().parse().unwrap();
    assert!((extrapolant - 1.0).abs() < 1e-6);
    let broken = write(dir.path(), "broken.cfg", "format json\n");
    assert_eq!(code(&mass(&["--config", &broken, "families"])), 1);
    assert_eq!(code(&mass(&["--config", "/nonexistent/run.cfg", "families"])), 1);
}
