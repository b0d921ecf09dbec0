//! Shared workloads for the criterion benches.

use gridplan_core::fixtures::fixture;
use gridplan_core::formulation::Configuration;
use gridplan_core::{AmbiguitySet, ContingencyScenario, NetworkInstance};

/// A fixture with a fixed feasible design and one outage scenario.
pub struct Workload {
    pub instance: NetworkInstance,
    pub ambiguity: AmbiguitySet,
    pub config: Configuration,
    pub scenario: ContingencyScenario,
}

pub fn workload(name: &str) -> Workload {
    let instance = fixture(name).expect("known fixture");
    let (built, dg): (&[usize], &[usize]) = match name {
        "two_node" => (&[0], &[1]),
        "four_node" => (&[0, 1, 2], &[2]),
        _ => (&[0, 2, 3, 5, 7], &[3]),
    };
    let config = Configuration::from_parts(&instance, built, dg);
    let mut scenario = ContingencyScenario::for_instance(&instance);
    scenario.set_failed(built[0], 0, true);
    Workload {
        ambiguity: AmbiguitySet::from_instance(&instance),
        instance,
        config,
        scenario,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gridplan_core::formulation::check_configuration;

    #[test]
    fn workloads_are_feasible() {
        for name in gridplan_core::fixtures::NAMES {
            let w = workload(name);
            check_configuration(&w.instance, &w.config).unwrap();
        }
    }
}
