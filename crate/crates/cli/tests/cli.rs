use std::path::PathBuf;
use std::process::{Command, Output};

fn network(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../networks");
    root.join(name).to_string_lossy().into_owned()
}

fn selcond(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_selcond"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("JSON report on stdout")
}

#[test]
fn analyze_reports_lambda_and_dependence() {
    let o = selcond(&[
        "analyze",
        "--network",
        &network("net_a.bnet"),
        "--report",
        "json",
    ]);
    assert!(o.status.success());
    let r = json(&o);
    assert_eq!(r["nodes"][1]["name"], "B");
    assert!((r["nodes"][1]["lambda"].as_f64().unwrap() - 8.0).abs() < 1e-12);
    assert!((r["dependence_value"].as_f64().unwrap() - 64.0).abs() < 1e-9);
}

#[test]
fn analyze_chain_selects_both_parents() {
    let o = selcond(&[
        "analyze",
        "--network",
        &network("net_c.bnet"),
        "--report",
        "json",
    ]);
    assert!(o.status.success());
    let r = json(&o);
    assert_eq!(r["selected_s"], serde_json::json!(["A", "B"]));
    assert!((r["dependence_value"].as_f64().unwrap() - 1296.0).abs() < 1e-6);
    assert!((r["dependence_after"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(r["trace"]["steps"].as_array().unwrap().len(), 2);

    let text = stdout(&selcond(&["analyze", "--network", &network("net_c.bnet")]));
    assert!(text.contains("S = {A, B}"), "{text}");
}

#[test]
fn missing_network_is_an_input_error() {
    let o = selcond(&["analyze", "--network", "/nonexistent/x.bnet"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn malformed_network_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.bnet");
    std::fs::write(&path, "network bad\nnode A\nprior A : 1.5\n").unwrap();
    let o = selcond(&["analyze", "--network", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn infer_with_oracle_comparison() {
    let o = selcond(&[
        "infer",
        "--network",
        &network("net_a.bnet"),
        "--query",
        "A=1",
        "--evidence",
        "B=1",
        "--seed",
        "7",
        "--exact",
        "--report",
        "json",
    ]);
    assert!(o.status.success());
    let r = json(&o);
    let exact = r["oracle"]["value"].as_f64().unwrap();
    assert!((exact - 27.0 / 41.0).abs() < 1e-12);
    let estimate = r["result"]["estimate"].as_f64().unwrap();
    let within = estimate / exact <= 1.1 && exact / estimate <= 1.1;
    assert_eq!(r["oracle"]["satisfies_ras"].as_bool(), Some(within));
    // The query node is protected, so nothing can be conditioned on.
    assert_eq!(r["selected_s_names"], serde_json::json!([]));

    let text = stdout(&selcond(&[
        "infer",
        "--network",
        &network("net_a.bnet"),
        "--query",
        "A=1",
        "--evidence",
        "B=1",
        "--seed",
        "7",
        "--exact",
    ]));
    assert!(text.contains("exact 0.6585366"), "{text}");
}

#[test]
fn direct_strategy_has_empty_conditioning_set() {
    let o = selcond(&[
        "infer",
        "--network",
        &network("arcless.bnet"),
        "--query",
        "X=1",
        "--strategy",
        "direct",
        "--report",
        "json",
    ]);
    assert!(o.status.success());
    let r = json(&o);
    assert_eq!(r["result"]["strategy_used"], "direct");
    assert_eq!(r["result"]["selected_s"], serde_json::json!([]));
}

#[test]
fn invalid_tolerances_are_usage_errors() {
    let net = network("net_a.bnet");
    for extra in [["--epsilon", "0"], ["--delta", "1"], ["--delta", "-0.1"]] {
        let mut args = vec!["infer", "--network", &net, "--query", "A=1"];
        args.extend(extra);
        assert_eq!(selcond(&args).status.code(), Some(2), "{extra:?}");
    }
}

#[test]
fn bad_bindings_are_usage_errors() {
    let net = network("net_a.bnet");
    let cases: [&[&str]; 4] = [
        &["--query", "A=1", "--evidence", "A=1"],
        &["--query", "A=1,A=1"],
        &["--query", "Z=1"],
        &["--query", "A=2"],
    ];
    for case in cases {
        let mut args = vec!["infer", "--network", &net];
        args.extend(case);
        assert_eq!(selcond(&args).status.code(), Some(2), "{case:?}");
    }
}

#[test]
fn exhausted_budget_exits_with_partial_report() {
    let o = selcond(&[
        "infer",
        "--network",
        &network("net_c.bnet"),
        "--query",
        "C=1",
        "--strategy",
        "selective",
        "--sample-cap",
        "10",
        "--report",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(5));
    let r = json(&o);
    assert_eq!(r["budget_exceeded"], true);
    assert_eq!(r["partial"]["selected_s"], serde_json::json!([0, 1]));
    assert!(r["partial"]["trials_so_far"].as_u64().unwrap() >= 10);
}

#[test]
fn json_report_replays() {
    let o = selcond(&[
        "infer",
        "--network",
        &network("diamond.bnet"),
        "--query",
        "Rain=1",
        "--evidence",
        "Wet=1",
        "--epsilon",
        "0.2",
        "--delta",
        "0.1",
        "--seed",
        "11",
        "--report",
        "json",
    ]);
    assert!(o.status.success());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, &o.stdout).unwrap();
    let replay = selcond(&["replay", path.to_str().unwrap()]);
    assert!(replay.status.success(), "{}", stdout(&replay));
    assert!(stdout(&replay).contains("reproduced        true"));

    // Tampering with the recorded estimate makes the replay fail.
    let mut r = json(&o);
    r["result"]["estimate"] = serde_json::json!(0.123);
    std::fs::write(&path, serde_json::to_vec(&r).unwrap()).unwrap();
    assert_eq!(
        selcond(&["replay", path.to_str().unwrap()]).status.code(),
        Some(4)
    );
}

#[test]
fn burn_in_requires_gibbs() {
    let o = selcond(&[
        "infer",
        "--network",
        &network("net_a.bnet"),
        "--query",
        "A=1",
        "--burn-in",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
