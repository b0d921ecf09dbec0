//! Small instances bundled with the crate, small enough for brute force.

use crate::grid::{parse_instance, NetworkInstance};

pub const NAMES: [&str; 3] = ["two_node", "four_node", "seven_node"];

const TWO_NODE: &str = include_str!("../fixtures/two_node.json");
const FOUR_NODE: &str = include_str!("../fixtures/four_node.json");
const SEVEN_NODE: &str = include_str!("../fixtures/seven_node.json");

/// Loads a bundled fixture by name; `None` for unknown names.
pub fn fixture(name: &str) -> Option<NetworkInstance> {
    let text = match name {
        "two_node" => TWO_NODE,
        "four_node" => FOUR_NODE,
        "seven_node" => SEVEN_NODE,
        _ => return None,
    };
    Some(parse_instance(text).expect("bundled fixture is valid"))
}

/// Copy of `instance` stretched or cut to `periods` periods. New periods
/// repeat the last one, with loads scaled by `growth` per added period.
pub fn with_periods(instance: &NetworkInstance, periods: usize, growth: f64) -> NetworkInstance {
    assert!(periods >= 1);
    let mut out = instance.clone();
    let old = instance.periods;
    let stretch = |v: &[f64], scale: bool| -> Vec<f64> {
        (0..periods)
            .map(|t| {
                if t < old {
                    v[t]
                } else if scale {
                    v[old - 1] * growth.powi((t + 1 - old) as i32)
                } else {
                    v[old - 1]
                }
            })
            .collect()
    };
    for n in &mut out.nodes {
        n.load_p = stretch(&n.load_p, true);
        n.load_q = stretch(&n.load_q, true);
    }
    for l in &mut out.lines {
        l.mu_max = stretch(&l.mu_max, false);
    }
    out.periods = periods;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_parse_and_validate() {
        for name in NAMES {
            let inst = fixture(name).unwrap();
            inst.validate().unwrap();
        }
        assert!(fixture("nope").is_none());
    }

    #[test]
    fn stretching_keeps_validity() {
        let inst = fixture("four_node").unwrap();
        let two = with_periods(&inst, 2, 1.1);
        two.validate().unwrap();
        assert_eq!(two.nodes[1].load_p, vec![80.0, 88.0]);
        assert_eq!(two.lines[0].mu_max.len(), 2);
        let one = with_periods(&fixture("seven_node").unwrap(), 1, 1.0);
        one.validate().unwrap();
    }
}
