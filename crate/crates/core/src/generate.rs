//! Seeded random instances shaped like the 33- and 69-node planning studies.
//!
//! The candidate set is the standard radial test-feeder topology of the named
//! system plus its customary tie lines and `extra_ties` random short ties.
//! Other node counts get a random radial backbone. Line lengths are Euclidean
//! distances over generated planar coordinates; costs and impedances scale
//! with length.

use std::collections::{HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::grid::{Coord, LineSpec, NetworkInstance, NodeId, NodeSpec};
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceTemplate {
    pub node_count: usize,
    /// One-based node ids hosting substations.
    pub substation_ids: Vec<usize>,
    pub dg_count: usize,
    pub periods: usize,
    pub seed: u64,
    /// Random tie-line candidates added on top of the standard ones.
    pub extra_ties: usize,
    /// Defaults to the study value for 33/69 nodes, otherwise derived from
    /// the cheapest forest. Always raised to keep a feasible forest.
    pub budget_cost: Option<f64>,
    pub n_z: Option<usize>,
    pub tau_rst_max: u32,
}

impl InstanceTemplate {
    pub fn new(node_count: usize, substation_ids: Vec<usize>, dg_count: usize, periods: usize, seed: u64) -> Self {
        Self {
            node_count,
            substation_ids,
            dg_count,
            periods,
            seed,
            extra_ties: 2,
            budget_cost: None,
            n_z: None,
            tau_rst_max: 2,
        }
    }

    /// 33 nodes, substations at 1, 11, 25, two DG units.
    pub fn case33(periods: usize, seed: u64) -> Self {
        Self::new(33, vec![1, 11, 25], 2, periods, seed)
    }

    /// 69 nodes, substations at 1, 13, 39, 61, three DG units.
    pub fn case69(periods: usize, seed: u64) -> Self {
        Self::new(69, vec![1, 13, 39, 61], 3, periods, seed)
    }
}

/// One-based branch list of the 33-bus radial feeder.
const FEEDER33: &[(usize, usize)] = &[
    (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 8), (8, 9), (9, 10), (10, 11),
    (11, 12), (12, 13), (13, 14), (14, 15), (15, 16), (16, 17), (17, 18), (2, 19), (19, 20),
    (20, 21), (21, 22), (3, 23), (23, 24), (24, 25), (6, 26), (26, 27), (27, 28), (28, 29),
    (29, 30), (30, 31), (31, 32), (32, 33),
];
const TIES33: &[(usize, usize)] = &[(8, 21), (9, 15), (12, 22), (18, 33), (25, 29)];

/// One-based branch list of the 69-bus radial feeder.
const FEEDER69: &[(usize, usize)] = &[
    (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 8), (8, 9), (9, 10), (10, 11),
    (11, 12), (12, 13), (13, 14), (14, 15), (15, 16), (16, 17), (17, 18), (18, 19), (19, 20),
    (20, 21), (21, 22), (22, 23), (23, 24), (24, 25), (25, 26), (26, 27), (3, 28), (28, 29),
    (29, 30), (30, 31), (31, 32), (32, 33), (33, 34), (34, 35), (3, 36), (36, 37), (37, 38),
    (38, 39), (39, 40), (40, 41), (41, 42), (42, 43), (43, 44), (44, 45), (45, 46), (4, 47),
    (47, 48), (48, 49), (49, 50), (8, 51), (51, 52), (9, 53), (53, 54), (54, 55), (55, 56),
    (56, 57), (57, 58), (58, 59), (59, 60), (60, 61), (61, 62), (62, 63), (63, 64), (64, 65),
    (11, 66), (66, 67), (12, 68), (68, 69),
];
const TIES69: &[(usize, usize)] = &[(11, 43), (13, 21), (15, 46), (50, 59), (27, 65)];

const DG_CAP_P: f64 = 100.0;
const DG_CAP_Q: f64 = 50.0;
/// Ohm per unit length.
const R_PER_LEN: f64 = 0.35;
const X_PER_LEN: f64 = 0.25;
/// 12.66 kV base: drop (p.u.) = (R[ohm] P[kW] + X[ohm] Q[kVar]) / (1000 V[kV]^2).
const V_REF_12KV: f64 = 1000.0 * 12.66 * 12.66;

/// Builds a seeded instance. Panics if `node_count < 2`, substations are
/// empty or out of range, or `dg_count` exceeds the non-substation nodes.
pub fn generate_instance(template: &InstanceTemplate) -> NetworkInstance {
    let n = template.node_count;
    assert!(n >= 2, "node_count must be at least 2");
    assert!(!template.substation_ids.is_empty(), "substation_ids must be nonempty");
    assert!(template.periods >= 1, "periods must be at least 1");
    let subs: HashSet<usize> = template.substation_ids.iter().map(|&s| s - 1).collect();
    assert!(subs.iter().all(|&s| s < n), "substation id out of range");
    assert!(template.dg_count <= n - subs.len(), "dg_count exceeds candidate nodes");

    let mut rng = substream(template.seed, Stream::Instance);

    let (backbone, standard_ties): (Vec<(usize, usize)>, Vec<(usize, usize)>) = match n {
        33 => (zero_based(FEEDER33), zero_based(TIES33)),
        69 => (zero_based(FEEDER69), zero_based(TIES69)),
        _ => ((1..n).map(|i| (rng.gen_range(0..i), i)).collect(), Vec::new()),
    };

    let coords = layout(n, &backbone, &mut rng);
    let mut pairs = backbone.clone();
    let mut seen: HashSet<(usize, usize)> = pairs.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    for &(a, b) in &standard_ties {
        if seen.insert((a.min(b), a.max(b))) {
            pairs.push((a, b));
        }
    }
    // Random ties: shortest non-adjacent pairs, drawn from a shuffled shortlist.
    let mut shortlist: Vec<(f64, usize, usize)> = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if !seen.contains(&(a, b)) {
                shortlist.push((dist(&coords[a], &coords[b]), a, b));
            }
        }
    }
    shortlist.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    shortlist.truncate((4 * template.extra_ties).max(template.extra_ties));
    shortlist.shuffle(&mut rng);
    for &(_, a, b) in shortlist.iter().take(template.extra_ties) {
        seen.insert((a, b));
        pairs.push((a, b));
    }

    let depth = hop_distance(n, &backbone, &subs);
    let oriented: Vec<(usize, usize)> = pairs
        .iter()
        .map(|&(a, b)| {
            if (depth[a], a) <= (depth[b], b) {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect();

    let t_count = template.periods;
    let load_p: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..t_count).map(|_| round2(rng.gen_range(30.0..=200.0))).collect())
        .collect();
    let load_q: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..t_count).map(|_| round2(rng.gen_range(5.0..=100.0))).collect())
        .collect();
    let peak_p: f64 = load_p.iter().map(|v| v.iter().cloned().fold(0.0, f64::max)).sum();
    let peak_q: f64 = load_q.iter().map(|v| v.iter().cloned().fold(0.0, f64::max)).sum();

    let nodes: Vec<NodeSpec> = (0..n)
        .map(|i| {
            let sub = subs.contains(&i);
            NodeSpec {
                id: NodeId::Int(i as i64 + 1),
                load_p: load_p[i].clone(),
                load_q: load_q[i].clone(),
                is_substation: sub,
                cap_p: if sub { round2(0.6 * peak_p) } else { DG_CAP_P },
                cap_q: if sub { round2(0.6 * peak_q) } else { DG_CAP_Q },
                dg_candidate: !sub,
            }
        })
        .collect();

    // Costs follow length with a random rate, then map affinely onto [40,100].
    let raw: Vec<f64> = oriented
        .iter()
        .map(|&(a, b)| dist(&coords[a], &coords[b]) * rng.gen_range(0.9..=1.1))
        .collect();
    let (lo, hi) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| (lo.min(c), hi.max(c)));
    let span = if hi > lo { hi - lo } else { 1.0 };

    let lines: Vec<LineSpec> = oriented
        .iter()
        .zip(&raw)
        .map(|(&(a, b), &c)| {
            let len = dist(&coords[a], &coords[b]);
            let mu = round4(rng.gen_range(0.0..=0.01));
            LineSpec {
                from: NodeId::Int(a as i64 + 1),
                to: NodeId::Int(b as i64 + 1),
                cost: round2(40.0 + 60.0 * (c - lo) / span),
                resistance: round4(R_PER_LEN * len),
                reactance: round4(X_PER_LEN * len),
                cap_p: round2(rng.gen_range(0.35..=0.65) * peak_p),
                cap_q: round2(rng.gen_range(0.35..=0.65) * peak_q),
                mu_max: vec![mu; t_count],
                tau_rst: rng.gen_range(0..=template.tau_rst_max),
            }
        })
        .collect();

    let mut inst = NetworkInstance {
        nodes,
        lines,
        periods: t_count,
        budget_cost: 0.0,
        budget_dg: template.dg_count,
        n_z: template.n_z.unwrap_or(match n {
            33 => 3,
            69 => 4,
            _ => 1,
        }),
        v_min: 0.95,
        v_max: 1.05,
        v_ref: V_REF_12KV,
        coords: Some(
            coords
                .iter()
                .enumerate()
                .map(|(i, c)| Coord {
                    id: NodeId::Int(i as i64 + 1),
                    x: round4(c.0),
                    y: round4(c.1),
                })
                .collect(),
        ),
    };
    let cheapest = inst
        .cheapest_forest_cost()
        .expect("backbone oriented away from substations spans every node");
    let requested = template.budget_cost.unwrap_or(match n {
        33 => 1770.0,
        69 => 4480.0,
        _ => 1.15 * cheapest,
    });
    inst.budget_cost = round2(requested.max(cheapest * 1.02));
    inst
}

fn zero_based(pairs: &[(usize, usize)]) -> Vec<(usize, usize)> {
    pairs.iter().map(|&(a, b)| (a - 1, b - 1)).collect()
}

fn dist(a: &(f64, f64), b: &(f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn round4(v: f64) -> f64 {
    (v * 10_000.0).round() / 10_000.0
}

/// Places the backbone tree in the plane: each child sits at a random
/// direction and distance from its parent.
fn layout(n: usize, backbone: &[(usize, usize)], rng: &mut impl Rng) -> Vec<(f64, f64)> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in backbone {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut pos = vec![(0.0, 0.0); n];
    let mut placed = vec![false; n];
    placed[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !placed[v] {
                placed[v] = true;
                let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                let len = rng.gen_range(0.5..=1.5);
                pos[v] = (pos[u].0 + len * angle.cos(), pos[u].1 + len * angle.sin());
                queue.push_back(v);
            }
        }
    }
    pos
}

/// Multi-source hop distance from the substations over the backbone.
fn hop_distance(n: usize, backbone: &[(usize, usize)], subs: &HashSet<usize>) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in backbone {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut depth = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    let mut sorted: Vec<usize> = subs.iter().copied().collect();
    sorted.sort_unstable();
    for s in sorted {
        depth[s] = 0;
        queue.push_back(s);
    }
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if depth[v] == usize::MAX {
                depth[v] = depth[u] + 1;
                queue.push_back(v);
            }
        }
    }
    depth
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case33_matches_study_shape() {
        let inst = generate_instance(&InstanceTemplate::case33(24, 7));
        inst.validate().unwrap();
        assert_eq!(inst.node_count(), 33);
        let subs: Vec<_> = inst.substations().iter().map(|&i| inst.nodes[i].id.clone()).collect();
        assert_eq!(subs, vec![NodeId::Int(1), NodeId::Int(11), NodeId::Int(25)]);
        assert_eq!(inst.budget_dg, 2);
        assert_eq!(inst.periods, 24);
        assert_eq!(inst.line_count(), 32 + 5 + 2);
    }

    #[test]
    fn case69_matches_study_shape() {
        let inst = generate_instance(&InstanceTemplate::case69(24, 7));
        inst.validate().unwrap();
        assert_eq!(inst.node_count(), 69);
        assert_eq!(inst.substations().len(), 4);
        assert_eq!(inst.budget_dg, 3);
        assert_eq!(inst.n_z, 4);
    }

    #[test]
    fn generation_is_deterministic() {
        let t = InstanceTemplate::case33(6, 11);
        assert_eq!(generate_instance(&t), generate_instance(&t));
        let other = InstanceTemplate::case33(6, 12);
        assert_ne!(generate_instance(&t), generate_instance(&other));
    }

    #[test]
    fn parameters_within_study_ranges() {
        let inst = generate_instance(&InstanceTemplate::case33(4, 3));
        for node in &inst.nodes {
            assert!(node.load_p.iter().all(|v| (30.0..=200.0).contains(v)));
            assert!(node.load_q.iter().all(|v| (5.0..=100.0).contains(v)));
            if !node.is_substation {
                assert!(node.dg_candidate);
                assert_eq!((node.cap_p, node.cap_q), (100.0, 50.0));
            }
        }
        for line in &inst.lines {
            assert!((40.0..=100.0).contains(&line.cost), "{}", line.cost);
            assert!(line.mu_max.iter().all(|m| (0.0..=0.01).contains(m)));
            assert!(line.mu_max.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn random_backbone_for_other_sizes() {
        let mut t = InstanceTemplate::new(12, vec![1, 7], 2, 3, 5);
        t.extra_ties = 3;
        let inst = generate_instance(&t);
        inst.validate().unwrap();
        assert_eq!(inst.line_count(), 11 + 3);
    }
}
