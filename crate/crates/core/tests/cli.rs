use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_netctrl"));
    for var in ["NETCTRL_TOL_RANK", "NETCTRL_TOL_EIG", "NETCTRL_TOL_RES"] {
        c.env_remove(var);
    }
    c
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: stdout {:?}, stderr {:?}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

#[test]
fn example3_theorem_fails_input_reach() {
    let ex3 = fixture("example3.json");
    let out = run(&["check", ex3.to_str().unwrap(), "--method", "theorem"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["verdicts"]["theorem"], "uncontrollable");
    assert_eq!(r["methods"]["theorem"]["conditions"]["input_reach"]["outcome"], "fail");
    assert_eq!(r["methods"]["theorem"]["conditions"]["input_reach"]["node"], 2);
    assert!(r["verdicts"].get("kalman").is_none());
}

#[test]
fn example5_sink_silent_kalman_controllable() {
    let ex5 = fixture("example5.json");
    let out = run(&["check", ex5.to_str().unwrap(), "--method", "all"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["verdicts"]["sink_node"], "not_applicable");
    assert_eq!(r["verdicts"]["kalman"], "controllable");
    assert_eq!(r["methods"]["kalman"]["rank"], 4);
    assert_eq!(r["overall"], "controllable");
}

#[test]
fn report_is_byte_stable_and_out_matches_stdout() {
    let ex2 = fixture("example2.json");
    let a = run(&["check", ex2.to_str().unwrap()]);
    let b = run(&["check", ex2.to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let c = run(&["check", ex2.to_str().unwrap(), "--out", path.to_str().unwrap()]);
    assert_eq!(c.status.code(), Some(0));
    assert!(c.stdout.is_empty());
    assert_eq!(fs::read(&path).unwrap(), a.stdout);
}

#[test]
fn report_numbers_have_17_significant_digits() {
    let ex2 = fixture("example2.json");
    let r = json(&run(&["check", ex2.to_str().unwrap()]));
    let text = r["tolerances"]["rank_rel"].to_string();
    assert_eq!(text, "9.9999999999999998e-13");
    assert_eq!(text.parse::<f64>().unwrap(), 1e-12);
}

#[test]
fn non_square_node_matrix_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(
        &path,
        r#"{"format": "netctrl-system/1", "dims": {"N": 1, "n": 2, "m": 1},
            "node_matrices": [[[1, 0, 0], [0, 1, 0]]], "B": [[1], [0]],
            "H": [[0, 0], [0, 0]], "C": [[0]], "d": [1]}"#,
    )
    .unwrap();
    let out = run(&["check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("node_matrices[0]"));
}

#[test]
fn missing_field_names_it() {
    let text = fs::read_to_string(fixture("example4.json")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v.as_object_mut().unwrap().remove("H");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("noh.json");
    fs::write(&path, v.to_string()).unwrap();
    let out = run(&["check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("H"));
}

#[test]
fn flag_errors_exit_2() {
    let ex1 = fixture("example1.json");
    assert_eq!(run(&["check", ex1.to_str().unwrap(), "--method", "gramian"]).status.code(), Some(2));
    assert_eq!(run(&["check", ex1.to_str().unwrap(), "--tol-rank", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["check", "/nonexistent/system.json"]).status.code(), Some(2));
    assert_eq!(run(&["oracle", "--trials", "many"]).status.code(), Some(2));
    assert_eq!(run(&["oracle", "--control-density", "1.5", "--trials", "1"]).status.code(), Some(2));
}

#[test]
fn tolerance_flags_and_env_fallback() {
    let ex4 = fixture("example4.json");
    let r = json(&run(&["check", ex4.to_str().unwrap(), "--tol-rank", "1e-10"]));
    assert_eq!(r["tolerances"]["rank_rel"].to_string().parse::<f64>().unwrap(), 1e-10);
    let out = bin()
        .env("NETCTRL_TOL_EIG", "1e-6")
        .args(["check", ex4.to_str().unwrap()])
        .output()
        .unwrap();
    let r = json(&out);
    assert_eq!(r["tolerances"]["eig_cluster_rel"].to_string().parse::<f64>().unwrap(), 1e-6);
    let out = bin()
        .env("NETCTRL_TOL_EIG", "1e-6")
        .args(["check", ex4.to_str().unwrap(), "--tol-eig", "1e-7"])
        .output()
        .unwrap();
    assert_eq!(json(&out)["tolerances"]["eig_cluster_rel"].to_string().parse::<f64>().unwrap(), 1e-7);
}

#[test]
fn user_transform_file() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.json");
    fs::write(&t, "[[1, 1], [1, -1]]").unwrap();
    let ex4 = fixture("example4.json");
    let r = json(&run(&["check", ex4.to_str().unwrap(), "--method", "theorem", "--T", t.to_str().unwrap()]));
    assert_eq!(r["methods"]["theorem"]["transform"]["origin"], "user");
    assert_eq!(r["verdicts"]["theorem"], "uncontrollable");

    fs::write(&t, "[[1, 0], [0, 1]]").unwrap();
    let out = run(&["check", ex4.to_str().unwrap(), "--T", t.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_is_deterministic() {
    let a = run(&["oracle", "--trials", "1", "--seed", "7"]);
    let b = run(&["oracle", "--trials", "1", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["summary"]["trials"], 1);
}

#[test]
fn oracle_zero_trials() {
    let out = run(&["oracle", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["summary"]["trials"], 0);
    assert_eq!(r["records"].as_array().unwrap().len(), 0);
}

#[test]
fn oracle_without_inputs_is_uncontrollable() {
    let out = run(&["oracle", "--trials", "10", "--control-density", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["summary"]["disagreements"], 0);
    for rec in r["records"].as_array().unwrap() {
        for m in ["theorem", "kalman", "pbh"] {
            assert_eq!(rec[m]["status"], "uncontrollable", "{rec}");
        }
    }
}

#[test]
fn gen_emits_a_checkable_deterministic_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = run(&["gen", "--seed", "11", "--plant-jordan", "--out", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let doc: Value = serde_json::from_slice(&fs::read(&a).unwrap()).unwrap();
    assert_eq!(doc["provenance"]["spec"]["seed"], 11);
    let out = run(&["check", a.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["consistent"], true);
}

#[test]
fn gen_homogeneous_writes_single_matrix() {
    let out = run(&["gen", "--seed", "3", "--homogeneous", "--max-nodes", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    if doc["dims"]["N"].as_u64().unwrap() > 1 {
        assert_eq!(doc["homogeneous"], true);
    }
}

#[test]
fn dump_dir_receives_disagreement_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("dump");
    let out = run(&["oracle", "--trials", "20", "--seed", "3", "--dump-dir", dump.to_str().unwrap()]);
    assert!(matches!(out.status.code(), Some(0 | 1)));
    let r = json(&out);
    let n = fs::read_dir(&dump).unwrap().count() as u64;
    assert_eq!(n, r["summary"]["disagreements"].as_u64().unwrap());
}
