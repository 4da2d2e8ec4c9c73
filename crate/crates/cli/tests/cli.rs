use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_formality")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.push("--json");
    let out = run(&all);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn quadratic_info_examples() {
    let so3 = json(&["quadratic-info", "--builtin", "so3"]);
    assert_eq!(so3["jacobi"], "pass");
    assert_eq!(so3["cartan3regular"], "yes");
    assert_eq!(so3["killing"], serde_json::json!([["-2", "0", "0"], ["0", "-2", "0"], ["0", "0", "-2"]]));
    let h = json(&["quadratic-info", "--builtin", "heisenberg3"]);
    assert!(h["killing"].as_array().unwrap().iter().flat_map(|r| r.as_array().unwrap()).all(|x| x == "0"));
    assert_eq!(h["cartan3regular"], Value::Null);
    let a = json(&["quadratic-info", "--builtin", "abelian:2"]);
    assert_eq!(a["cartan3regular"], "no");
}

#[test]
fn so3_cohomology_table() {
    let v = json(&["cohomology", "--builtin", "so3", "--dmax", "6"]);
    for row in v["rows"].as_array().unwrap() {
        let m = row["poly"].as_u64().unwrap();
        let dims: Vec<u64> = row["dims"].as_array().unwrap().iter().map(|d| d.as_u64().unwrap()).collect();
        let e = u64::from(m % 2 == 0);
        assert_eq!(dims, vec![e, 0, 0, e], "m = {m}");
    }
}

#[test]
fn so3_transfer_is_cubic() {
    let v = json(&["transfer", "--builtin", "so3"]);
    for r in ["1", "2", "4"] {
        assert!(v["d"][r].as_array().unwrap().is_empty(), "d{r}");
    }
    let d3 = v["d"]["3"].as_array().unwrap();
    assert!(d3.iter().any(|e| e["args"] == serde_json::json!(["q", "q", "qΩ"]) && e["value"]["q^2"] == "-8"));
    assert_eq!(v["residuals"], "vanish");
}

#[test]
fn c3_verdicts_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for (name, dmax, verdict) in [("so3", "6", "non-formal"), ("abelian:2", "4", "formal-order-3")] {
        let cert = json(&["c3", "--builtin", name, "--dmax", dmax]);
        assert_eq!(cert["verdict"], verdict, "{name}");
        let path = write(dir.path(), "c3.json", &serde_json::to_string_pretty(&cert).unwrap());
        let v = json(&["verify", &path]);
        assert_eq!(v["verdict"], verdict);
    }
}

#[test]
fn free_sigma_certificates() {
    let dir = tempfile::tempdir().unwrap();
    for n in ["2", "3"] {
        let cert = json(&["free-sigma", "--dim-n", n]);
        assert_eq!(cert["exactness"], "infeasible");
        let path = write(dir.path(), "fs.json", &serde_json::to_string(&cert).unwrap());
        assert_eq!(json(&["verify", &path])["verified"], true);
        let tampered = serde_json::to_string(&cert).unwrap().replace("infeasible", "exact");
        let path = write(dir.path(), "bad.json", &tampered);
        assert_eq!(run(&["verify", &path]).status.code(), Some(2));
    }
    let one = json(&["free-sigma", "--dim-n", "1"]);
    assert!(one["note"].as_str().unwrap().starts_with("formal"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    for args in [
        &["c3", "--builtin", "so3", "--json"][..],
        &["transfer", "--builtin", "so3", "--json"],
        &["cohomology", "--builtin", "heisenberg3", "--dmax", "3", "--json"],
        &["free-sigma", "--dim-n", "3", "--json"],
    ] {
        assert_eq!(run(args).stdout, run(args).stdout, "{args:?}");
    }
}

#[test]
fn input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let non_lie = write(
        dir.path(),
        "nj.json",
        r#"{"dim":3,"brackets":[{"i":1,"j":2,"out":{"3":"1"}},{"i":1,"j":3,"out":{"1":"1"}},{"i":2,"j":3,"out":{"3":"1"}}]}"#,
    );
    let garbage = write(dir.path(), "g.json", "not json");
    let missing = dir.path().join("missing.json");
    for args in [
        vec!["jacobi", "--builtin", "nope"],
        vec!["jacobi"],
        vec!["jacobi", "--input", &non_lie],
        vec!["c3", "--input", &non_lie],
        vec!["jacobi", "--input", &garbage],
        vec!["jacobi", "--input", missing.to_str().unwrap()],
        vec!["cohomology", "--builtin", "so3", "--dmax", "0"],
        vec!["free-sigma", "--tmax", "2"],
        vec!["verify", &garbage],
    ] {
        assert_eq!(run(&args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn json_input_with_form() {
    let dir = tempfile::tempdir().unwrap();
    let so3 = write(
        dir.path(),
        "so3.json",
        r#"{"dim":3,"brackets":[{"i":1,"j":2,"out":{"3":"1"}},{"i":2,"j":3,"out":{"1":"1"}},{"i":1,"j":3,"out":{"2":"-1"}}],
            "kappa":[["1","0","0"],["0","1","0"],["0","0","1"]]}"#,
    );
    let v = json(&["quadratic-info", "--input", &so3]);
    assert_eq!(v["form"]["source"], "input");
    assert_eq!(v["cartan3regular"], "yes");
}
