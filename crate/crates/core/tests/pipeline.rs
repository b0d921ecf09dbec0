use gridplan_core::ccg::{extract_worst_case_distribution, run_ccg, CcgParams};
use gridplan_core::fixtures::{fixture, NAMES};
use gridplan_core::formulation::Mode;
use gridplan_core::oracle::{exact_plan, OracleLimits};
use gridplan_core::AmbiguitySet;

#[test]
fn ccg_matches_enumeration_on_fixtures() {
    for name in NAMES {
        let inst = fixture(name).unwrap();
        let amb = AmbiguitySet::from_instance(&inst);
        for mode in [Mode::Dr, Mode::Ro] {
            let plan = run_ccg(&inst, &amb, &CcgParams::new(mode, 1e-6)).unwrap();
            assert!(plan.converged(), "{name} {mode:?}: {:?}", plan.termination);
            let exact = exact_plan(&inst, &amb, mode, OracleLimits::default()).unwrap();
            let tol = 1e-5 * exact.objective.abs().max(1.0);
            assert!(
                (plan.objective - exact.objective).abs() <= tol,
                "{name} {mode:?}: {} vs {}",
                plan.objective,
                exact.objective
            );
        }
    }
}

#[test]
fn distribution_is_a_probability_vector() {
    let inst = fixture("four_node").unwrap();
    let amb = AmbiguitySet::from_instance(&inst);
    let plan = run_ccg(&inst, &amb, &CcgParams::new(Mode::Dr, 1e-6)).unwrap();
    let wcd = extract_worst_case_distribution(&inst, &amb, &plan).unwrap();
    let total: f64 = wcd.probs.iter().sum();
    assert!((total - 1.0).abs() < 1e-9, "{total}");
    assert!(wcd.probs.iter().all(|&p| p >= 0.0));
}
