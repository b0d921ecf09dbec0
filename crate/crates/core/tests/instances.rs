use std::path::PathBuf;

use gridplan_core::{generate_instance, load_instance, parse_instance, InstanceError, InstanceTemplate};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

#[test]
fn shipped_case33_matches_generator() {
    let inst = load_instance(data("case33.json")).unwrap();
    assert_eq!(inst.nodes.len(), 33);
    assert_eq!(inst.periods, 24);
    let subs: Vec<String> = inst.nodes.iter().filter(|n| n.is_substation).map(|n| n.id.to_string()).collect();
    assert_eq!(subs, ["1", "11", "25"]);

    let fresh = generate_instance(&InstanceTemplate::case33(24, 7));
    assert_eq!(fresh.lines.len(), inst.lines.len());
    for (a, b) in fresh.lines.iter().zip(&inst.lines) {
        assert_eq!((a.from.to_string(), a.to.to_string()), (b.from.to_string(), b.to.to_string()));
        approx::assert_relative_eq!(a.cost, b.cost, max_relative = 1e-12);
        approx::assert_relative_eq!(a.resistance, b.resistance, max_relative = 1e-12);
    }
    for (a, b) in fresh.nodes.iter().zip(&inst.nodes) {
        for (x, y) in a.load_p.iter().zip(&b.load_p) {
            approx::assert_relative_eq!(*x, *y, max_relative = 1e-12);
        }
    }
    approx::assert_relative_eq!(fresh.budget_cost, inst.budget_cost, max_relative = 1e-12);
    assert_eq!(fresh.n_z, inst.n_z);
}

#[test]
fn save_and_load_round_trip() {
    let inst = generate_instance(&InstanceTemplate::new(12, vec![1, 7], 1, 3, 5));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("i.json");
    inst.save(&path).unwrap();
    let back = load_instance(&path).unwrap();
    assert_eq!(back.nodes.len(), 12);
    assert_eq!(back.lines.len(), inst.lines.len());
    assert_eq!(back.periods, 3);
}

#[test]
fn unknown_keys_are_rejected() {
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(data("case33.json")).unwrap()).unwrap();
    v["lines"][0]["colour"] = "red".into();
    let err = parse_instance(&v.to_string()).unwrap_err();
    assert!(matches!(err, InstanceError::Parse(_)), "{err:?}");
}
