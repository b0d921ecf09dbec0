use std::path::Path;
use std::process::{Command, Output};

fn gridplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridplan"))
        .args(args)
        .env_remove("GRIDPLAN_SOLVER")
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn plan_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p");
    let o = gridplan(&["plan", "--instance", "fixture:two_node", "--epsilon", "1e-6", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let plan = read_json(&out.join("plan.json"));
    let obj = plan["objective"].as_f64().unwrap();
    assert!((obj - 2.0).abs() < 1e-6, "{obj}");
    assert!(out.join("trace.csv").exists());
    assert!(out.join("wcd.json").exists());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("scenario 1"), "{stdout}");
}

#[test]
fn robust_plan_has_no_distribution() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p");
    let o = gridplan(&["plan", "--instance", "fixture:two_node", "--mode", "ro", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let plan = read_json(&out.join("plan.json"));
    assert!((plan["objective"].as_f64().unwrap() - 40.0).abs() < 1e-6);
    assert!(!out.join("wcd.json").exists());
}

#[test]
fn non_convergence_exits_2() {
    let o = gridplan(&["plan", "--instance", "fixture:seven_node", "--max-iter", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn infeasible_instance_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut inst = gridplan_core::fixtures::fixture("four_node").unwrap();
    inst.budget_cost = 1.0;
    let path = dir.path().join("tight.json");
    inst.save(&path).unwrap();
    let o = gridplan(&["plan", "--instance", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));
}

#[test]
fn malformed_instance_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"nodes\": 3}").unwrap();
    let o = gridplan(&["plan", "--instance", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solver_env_var_is_honored() {
    let o = Command::new(env!("CARGO_BIN_EXE_gridplan"))
        .args(["plan", "--instance", "fixture:two_node"])
        .env("GRIDPLAN_SOLVER", "nosuchsolver")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nosuchsolver"));

    let o = Command::new(env!("CARGO_BIN_EXE_gridplan"))
        .args(["plan", "--instance", "fixture:two_node"])
        .env("GRIDPLAN_SOLVER", "highs")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn generate_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    let o = gridplan(&["generate", "--case", "33", "--periods", "2", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let inst = gridplan_core::load_instance(out.join("instance.json")).unwrap();
    assert_eq!(inst.nodes.len(), 33);
    let subs: Vec<String> = inst.nodes.iter().filter(|n| n.is_substation).map(|n| n.id.to_string()).collect();
    assert_eq!(subs, ["1", "11", "25"]);
    assert_eq!(inst.periods, 2);
}

#[test]
fn oracle_matches_plan_on_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = gridplan(&["oracle", "--instance", "fixture:four_node", "--epsilon", "1e-6", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = read_json(&out.join("oracle.json"));
    let text = rep.to_string();
    assert!(text.contains("exact"), "{text}");
}
