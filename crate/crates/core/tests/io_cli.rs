mod common;

use std::path::{Path, PathBuf};

use causal_imputation::io::cli::run;
use causal_imputation::io::{parse_problem, parse_problem_str, strip_timing, Problem, ProblemFile};
use proptest::prelude::*;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn fixtures() -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    out.sort();
    out
}

/// Runs the CLI in process; returns (exit code, stdout, stderr).
fn oci(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("oci").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn result(stdout: &str) -> Value {
    let v: Value = serde_json::from_str(stdout).unwrap();
    v["result"].clone()
}

/// Serializes with every object's keys in reverse order.
fn reversed_json(v: &Value) -> String {
    match v {
        Value::Object(map) => {
            let parts: Vec<String> = map
                .iter()
                .rev()
                .map(|(k, v)| format!("{}: {}", Value::String(k.clone()), reversed_json(v)))
                .collect();
            format!("{{ {} }}", parts.join(",\n "))
        }
        Value::Array(items) => format!("[{}]", items.iter().map(reversed_json).collect::<Vec<_>>().join(", ")),
        other => other.to_string(),
    }
}

#[test]
fn fixtures_round_trip() {
    let all = fixtures();
    assert!(all.len() >= 4);
    for path in all {
        let first = parse_problem(&path).unwrap();
        let second = parse_problem_str(&first.file.to_json()).unwrap();
        assert_eq!(first.file, second.file, "{}", path.display());
        assert_eq!(first.digest, second.digest);
    }
}

#[test]
fn digest_ignores_key_order_and_whitespace() {
    for path in fixtures() {
        let text = std::fs::read_to_string(&path).unwrap();
        let value: Value = serde_json::from_str(&text).unwrap();
        let reordered = reversed_json(&value);
        assert_ne!(reordered, text);
        let a = parse_problem_str(&text).unwrap();
        let b = parse_problem_str(&reordered).unwrap();
        let c = parse_problem_str(&serde_json::to_string(&value).unwrap()).unwrap();
        assert_eq!(a.digest, b.digest, "{}", path.display());
        assert_eq!(a.digest, c.digest);
    }
}

#[test]
fn digest_sees_content_changes() {
    let a = parse_problem(&fixture("linear_gaussian.json")).unwrap();
    let text = std::fs::read_to_string(fixture("linear_gaussian.json"))
        .unwrap()
        .replace("\"sigma2\": 0.5", "\"sigma2\": 0.6");
    let b = parse_problem_str(&text).unwrap();
    assert_ne!(a.digest, b.digest);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_problems_round_trip(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let t = common::random_trellis(&mut rng, 2, 3, false);
        let n = t.state_dim();
        let body = serde_json::json!({
            "a": (0..n).map(|r| (0..n).map(|c| t.a()[(r, c)]).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "sigma2": t.sigma2(),
            "horizon": t.horizon(),
            "q": t.q().as_slice(),
            "delta": t.delta().as_slice(),
            "ybar": t.ybar().as_slice(),
        });
        let text = serde_json::json!({"format_version": "1", "kind": "linear_gaussian", "body": body, "hints": {"samples": 5}}).to_string();
        let first = parse_problem_str(&text).unwrap();
        let Problem::LinearGaussian(parsed) = &first.problem else { panic!() };
        prop_assert_eq!(parsed, &t);
        let again = parse_problem_str(&first.file.to_json()).unwrap();
        prop_assert_eq!(&first.file, &again.file);
        let via_value: ProblemFile = ProblemFile::from_value(serde_json::to_value(&first.file).unwrap()).unwrap();
        prop_assert_eq!(first.file, via_value);
    }
}

#[test]
fn eval_two_node_chain() {
    let p = fixture("chain_sem.json");
    let (code, out, _) = oci(&[
        "eval",
        "--problem",
        p.to_str().unwrap(),
        "--plan",
        r#"{"nodes":[1],"values":[0]}"#,
        "--samples",
        "100000",
        "--seed",
        "1",
    ]);
    assert_eq!(code, 0);
    let r = result(&out);
    assert_eq!(r["objective"], 1.0);
    assert_eq!(r["std_error"], 0.0);

    let (_, out, _) = oci(&[
        "eval",
        "--problem",
        p.to_str().unwrap(),
        "--plan",
        r#"{"nodes":[],"values":[]}"#,
        "--samples",
        "100000",
        "--seed",
        "1",
    ]);
    let r = result(&out);
    let (mean, se) = (r["objective"].as_f64().unwrap(), r["std_error"].as_f64().unwrap());
    assert!((mean - 2.0).abs() < 3.0 * se, "{mean} ± {se}");
}

#[test]
fn check_reports_violating_triple() {
    let p = fixture("supermodular.json");
    let (code, out, _) = oci(&["check", "--problem", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    let r = result(&out);
    assert_eq!(r["submodular"], false);
    let v = &r["submodularity_violation"];
    assert_eq!(
        (v["smaller"].clone(), v["larger"].clone(), v["element"].clone()),
        (serde_json::json!([]), serde_json::json!([1]), serde_json::json!(0))
    );
    assert_eq!(v["excess"], 1.0);
}

#[test]
fn additive_check_lists_hypothesis_results() {
    let p = fixture("additive_chain.json");
    let (code, out, _) = oci(&["check", "--problem", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    let r = result(&out);
    assert_eq!(r["hypothesis_violations"], serde_json::json!([]));
    assert_eq!(r["max_objective"]["submodular"], true);
    assert_eq!(r["max_objective"]["nondecreasing"], true);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        path
    };
    let bad_q = write(
        "bad_q.json",
        r#"{"format_version": "1", "kind": "linear_gaussian",
            "body": {"a": [[1]], "sigma2": 1, "horizon": 1, "q": [0, -1], "delta": [0, 0], "ybar": [0, 0]}}"#,
    );
    let (code, _, err) = oci(&["check", "--problem", bad_q.to_str().unwrap()]);
    assert_eq!(code, 2);
    let e: Value = serde_json::from_str(&err).unwrap();
    assert_eq!(e["error"], "validation");
    assert!(e["message"].as_str().unwrap().contains("body.q[1]"));

    let cyclic = write(
        "cyclic.json",
        r#"{"format_version": "1", "kind": "additive_variance",
            "body": {"nodes": 3, "edges": [[0, 1], [1, 2], [2, 0]], "variances": [1, 1, 1], "target": 2, "cost": {"modular": [0, 0, 0]}}}"#,
    );
    let (code, _, err) = oci(&["check", "--problem", cyclic.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("cycle"), "{err}");

    let big = serde_json::json!({"format_version": "1", "kind": "set_function", "body": {"modular": vec![1.0; 13]}});
    let big = write("big.json", &big.to_string());
    let (code, _, err) = oci(&["check", "--problem", big.to_str().unwrap()]);
    assert_eq!(code, 3, "{err}");

    let diamond = write(
        "diamond.json",
        r#"{"format_version": "1", "kind": "additive_variance",
            "body": {"nodes": 4, "edges": [[0, 1], [0, 2], [1, 3], [2, 3]], "variances": [1, 1, 1, 1], "target": 3, "cost": {"modular": [0, 0, 0, 0]}}}"#,
    );
    let (code, out, _) = oci(&["check", "--problem", diamond.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(result(&out)["hypothesis_violations"][0]["multiple_paths"]["paths"], 2);
    let (code, _, _) = oci(&["solve", "--problem", diamond.to_str().unwrap(), "--method", "brute"]);
    assert_eq!(code, 3);

    let lg = fixture("linear_gaussian.json");
    let (code, _, _) = oci(&["solve", "--problem", lg.to_str().unwrap(), "--method", "greedy-max"]);
    assert_eq!(code, 2);
    let (code, _, _) = oci(&["solve", "--problem", lg.to_str().unwrap(), "--method", "nonsense"]);
    assert_eq!(code, 2);
}

#[test]
fn reported_objective_reproduces_under_eval() {
    let p = fixture("chain_sem.json");
    let p = p.to_str().unwrap();
    let (code, out, _) = oci(&[
        "solve",
        "--problem",
        p,
        "--method",
        "brute",
        "--seed",
        "11",
        "--samples",
        "5000",
        "--grid",
        "-0.5,0.25,1",
    ]);
    assert_eq!(code, 0);
    let r = result(&out);
    for row in r["table"].as_array().unwrap() {
        let plan = serde_json::json!({"nodes": row["nodes"], "values": row["values"]}).to_string();
        let (_, out, _) = oci(&[
            "eval",
            "--problem",
            p,
            "--plan",
            &plan,
            "--seed",
            "11",
            "--samples",
            "5000",
        ]);
        assert_eq!(result(&out)["objective"], row["objective"], "{plan}");
    }
}

#[test]
fn linear_gaussian_eval_matches_enumeration() {
    let p = fixture("linear_gaussian.json");
    let p = p.to_str().unwrap();
    let (_, out, _) = oci(&["solve", "--problem", p, "--method", "enumerate"]);
    let r = result(&out);
    let plan = serde_json::json!({"nodes": r["nodes"], "values": r["values"]}).to_string();
    let (code, out, _) = oci(&["eval", "--problem", p, "--plan", &plan]);
    assert_eq!(code, 0);
    assert_eq!(result(&out)["objective"], r["objective"]);
}

#[test]
fn sample_respects_plan() {
    let p = fixture("binary_sem.json");
    let (code, out, _) = oci(&[
        "sample",
        "--problem",
        p.to_str().unwrap(),
        "--samples",
        "20",
        "--seed",
        "4",
        "--plan",
        r#"{"nodes":[1],"values":[1]}"#,
    ]);
    assert_eq!(code, 0);
    let samples = result(&out)["samples"].as_array().unwrap().clone();
    assert_eq!(samples.len(), 20);
    for s in samples {
        assert_eq!(s["values"][1], serde_json::json!([1.0]));
    }
}

#[test]
fn binary_writes_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture("linear_gaussian_minimal.json");
    let mut texts = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("r{k}.json"));
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_oci"))
            .args([
                "solve",
                "--problem",
                p.to_str().unwrap(),
                "--method",
                "enumerate",
                "--seed",
                "7",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        texts.push(std::fs::read_to_string(out).unwrap());
    }
    assert_eq!(strip_timing(&texts[0]), strip_timing(&texts[1]));
    let r: Value = serde_json::from_str(&texts[0]).unwrap();
    assert_eq!(r["result"]["objective"], 0.0);
    assert_eq!(r["result"]["nodes"], serde_json::json!([0, 1]));
}
