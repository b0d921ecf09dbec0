//! Network instance data model: candidate nodes and lines, per-period loads,
//! budgets and voltage limits, plus the augmented graph with a synthetic root.
//!
//! Lines are directed arcs `(from, to)`. Power flows and the fictitious
//! spanning-tree flow are both nonnegative along the arc orientation, so a
//! built topology is an arborescence hanging off the synthetic root.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Node identifier as written in instance files: an integer or a string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeId {
    Int(i64),
    Str(String),
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Int(i) => write!(f, "{i}"),
            NodeId::Str(s) => f.write_str(s),
        }
    }
}

impl From<i64> for NodeId {
    fn from(v: i64) -> Self {
        NodeId::Int(v)
    }
}

impl From<&str> for NodeId {
    fn from(v: &str) -> Self {
        NodeId::Str(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: NodeId,
    /// Active load per period, KW.
    pub load_p: Vec<f64>,
    /// Reactive load per period, KVar.
    pub load_q: Vec<f64>,
    pub is_substation: bool,
    /// Active generation capacity (substation or DG unit), KW.
    pub cap_p: f64,
    /// Reactive generation capacity, KVar.
    pub cap_q: f64,
    pub dg_candidate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSpec {
    pub from: NodeId,
    pub to: NodeId,
    pub cost: f64,
    /// Ohm.
    pub resistance: f64,
    /// Ohm.
    pub reactance: f64,
    /// Active flow limit, KW.
    pub cap_p: f64,
    /// Reactive flow limit, KVar.
    pub cap_q: f64,
    /// Upper bound on the failure probability in each period.
    pub mu_max: Vec<f64>,
    /// Minimum restoration time, periods.
    pub tau_rst: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coord {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkInstance {
    pub nodes: Vec<NodeSpec>,
    pub lines: Vec<LineSpec>,
    pub periods: usize,
    /// Line construction budget.
    pub budget_cost: f64,
    /// Number of DG units available.
    pub budget_dg: usize,
    /// Maximum number of simultaneous line outages per period.
    pub n_z: usize,
    pub v_min: f64,
    pub v_max: f64,
    /// Voltage-drop scaling: drop (p.u.) = (resistance * p + reactance * q) / v_ref.
    pub v_ref: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<Coord>>,
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed instance file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid instance:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
    /// Well-formed, but no spanning forest fits the budget.
    #[error("infeasible instance: {0}")]
    Infeasible(String),
}

/// Resolved index view of an instance: line endpoints as node positions.
#[derive(Debug, Clone)]
pub struct Topology {
    pub from: Vec<usize>,
    pub to: Vec<usize>,
    /// Lines leaving each node.
    pub out_lines: Vec<Vec<usize>>,
    /// Lines entering each node.
    pub in_lines: Vec<Vec<usize>>,
    pub substations: Vec<usize>,
}

impl NetworkInstance {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    pub fn node_index(&self) -> HashMap<&NodeId, usize> {
        self.nodes.iter().enumerate().map(|(i, n)| (&n.id, i)).collect()
    }

    pub fn substations(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_substation).collect()
    }

    pub fn dg_candidates(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].dg_candidate && !self.nodes[i].is_substation)
            .collect()
    }

    pub fn find_line(&self, from: &NodeId, to: &NodeId) -> Option<usize> {
        self.lines.iter().position(|l| &l.from == from && &l.to == to)
    }

    /// Total active load over all nodes and periods.
    pub fn total_load_p(&self) -> f64 {
        self.nodes.iter().flat_map(|n| n.load_p.iter()).sum()
    }

    pub fn period_load_p(&self, t: usize) -> f64 {
        self.nodes.iter().map(|n| n.load_p[t]).sum()
    }

    /// Resolves line endpoints. Panics on dangling references, which
    /// `validate` rejects.
    pub fn topology(&self) -> Topology {
        let index = self.node_index();
        let n = self.nodes.len();
        let mut out_lines = vec![Vec::new(); n];
        let mut in_lines = vec![Vec::new(); n];
        let mut from = Vec::with_capacity(self.lines.len());
        let mut to = Vec::with_capacity(self.lines.len());
        for (l, line) in self.lines.iter().enumerate() {
            let a = index[&line.from];
            let b = index[&line.to];
            out_lines[a].push(l);
            in_lines[b].push(l);
            from.push(a);
            to.push(b);
        }
        Topology {
            from,
            to,
            out_lines,
            in_lines,
            substations: self.substations(),
        }
    }

    /// Checks every data invariant, collecting all violations.
    pub fn validate(&self) -> Result<(), InstanceError> {
        let mut errs = Vec::new();
        let t_count = self.periods;
        if t_count == 0 {
            errs.push("periods must be at least 1".to_string());
        }
        let mut ids = HashSet::new();
        for node in &self.nodes {
            if !ids.insert(&node.id) {
                errs.push(format!("duplicate node id {}", node.id));
            }
            if node.load_p.len() != t_count || node.load_q.len() != t_count {
                errs.push(format!("node {}: load vectors must have length {t_count}", node.id));
            }
            if node.load_p.iter().chain(&node.load_q).any(|v| !v.is_finite() || *v < 0.0) {
                errs.push(format!("node {}: loads must be finite and nonnegative", node.id));
            }
            if node
                .load_p
                .iter()
                .zip(&node.load_q)
                .any(|(p, q)| *q > 0.0 && *p <= 0.0)
            {
                errs.push(format!(
                    "node {}: reactive load without active load cannot be shed",
                    node.id
                ));
            }
            if node.cap_p < 0.0 || node.cap_q < 0.0 {
                errs.push(format!("node {}: capacities must be nonnegative", node.id));
            }
            if node.is_substation && node.cap_p <= 0.0 {
                errs.push(format!("node {}: substation needs positive cap_p", node.id));
            }
            if node.is_substation && node.dg_candidate {
                errs.push(format!("node {}: substations cannot be DG candidates", node.id));
            }
        }
        if !self.nodes.iter().any(|n| n.is_substation) {
            errs.push("at least one substation is required".to_string());
        }
        if !(self.v_min < self.v_max) {
            errs.push("v_min must be below v_max".to_string());
        }
        if !(self.v_min <= 1.0 && 1.0 <= self.v_max) {
            errs.push("substation voltage 1.0 p.u. must lie in [v_min, v_max]".to_string());
        }
        if !(self.v_ref > 0.0) {
            errs.push("v_ref must be positive".to_string());
        }
        if !(self.budget_cost >= 0.0) {
            errs.push("budget_cost must be nonnegative".to_string());
        }
        let candidates = self.dg_candidates().len();
        if self.budget_dg > candidates {
            errs.push(format!(
                "budget_dg {} exceeds the {candidates} DG candidate nodes",
                self.budget_dg
            ));
        }

        let mut pairs = HashSet::new();
        for line in &self.lines {
            let tag = format!("line ({},{})", line.from, line.to);
            if !ids.contains(&line.from) || !ids.contains(&line.to) {
                errs.push(format!("{tag}: references an unknown node"));
            }
            if line.from == line.to {
                errs.push(format!("{tag}: self-loop"));
            }
            let key = if line.from <= line.to {
                (&line.from, &line.to)
            } else {
                (&line.to, &line.from)
            };
            if !pairs.insert(key) {
                errs.push(format!("{tag}: duplicate unordered pair"));
            }
            if line.cost < 0.0 || line.cap_p < 0.0 || line.cap_q < 0.0 {
                errs.push(format!("{tag}: cost and capacities must be nonnegative"));
            }
            if line.resistance < 0.0 || line.reactance < 0.0 {
                errs.push(format!("{tag}: impedance must be nonnegative"));
            }
            if line.mu_max.len() != t_count {
                errs.push(format!("{tag}: mu_max must have length {t_count}"));
            }
            if line.mu_max.iter().any(|m| !(0.0..=1.0).contains(m)) {
                errs.push(format!("{tag}: mu_max entries must lie in [0,1]"));
            }
        }
        if let Some(coords) = &self.coords {
            for c in coords {
                if !ids.contains(&c.id) {
                    errs.push(format!("coords: unknown node {}", c.id));
                }
            }
        }

        if !errs.is_empty() {
            return Err(InstanceError::Invalid(errs));
        }
        match self.cheapest_forest_cost() {
            None => Err(InstanceError::Infeasible(
                "no spanning forest rooted at the substations exists over the candidate lines".to_string(),
            )),
            Some(c) if c > self.budget_cost + 1e-9 => Err(InstanceError::Infeasible(format!(
                "no spanning forest within budget: cheapest costs {c} > budget_cost {}",
                self.budget_cost
            ))),
            Some(_) => Ok(()),
        }
    }

    /// Cost of the cheapest spanning forest rooted at the substations, i.e.
    /// the minimum-cost arborescence of the augmented graph. `None` when some
    /// node cannot be reached.
    pub fn cheapest_forest_cost(&self) -> Option<f64> {
        let aug = augment(self);
        let edges: Vec<(usize, usize, f64)> = aug
            .edges
            .iter()
            .map(|e| (e.from, e.to, e.cost))
            .collect();
        min_arborescence_cost(aug.node_count(), aug.root, &edges)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InstanceError> {
        load_instance(path)
    }

    /// Canonical pretty-printed JSON, newline terminated.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), InstanceError> {
        let path = path.as_ref();
        fs::write(path, self.to_canonical_json()).map_err(|source| InstanceError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<NetworkInstance, InstanceError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_instance(&text)
}

pub fn parse_instance(text: &str) -> Result<NetworkInstance, InstanceError> {
    let inst: NetworkInstance = serde_json::from_str(text)?;
    inst.validate()?;
    Ok(inst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentedEdge {
    pub from: usize,
    pub to: usize,
    /// Zero for root edges; they never count against the budget.
    pub cost: f64,
    pub forced: bool,
    /// Index into `NetworkInstance::lines`, `None` for root edges.
    pub line: Option<usize>,
}

/// The candidate graph plus a synthetic root `s` joined to every substation.
/// Node `root == base.node_count()`; edges are the base lines in order,
/// followed by one forced root edge per substation.
#[derive(Debug, Clone)]
pub struct AugmentedGraph<'a> {
    pub base: &'a NetworkInstance,
    pub root: usize,
    pub edges: Vec<AugmentedEdge>,
}

impl AugmentedGraph<'_> {
    pub fn node_count(&self) -> usize {
        self.base.node_count() + 1
    }

    pub fn root_edges(&self) -> impl Iterator<Item = (usize, &AugmentedEdge)> {
        self.edges.iter().enumerate().filter(|(_, e)| e.forced)
    }

    /// Base-line edges, i.e. the original candidate set.
    pub fn base_edges(&self) -> impl Iterator<Item = (usize, &AugmentedEdge)> {
        self.edges.iter().enumerate().filter(|(_, e)| !e.forced)
    }
}

pub fn augment(instance: &NetworkInstance) -> AugmentedGraph<'_> {
    let topo = instance.topology();
    let root = instance.node_count();
    let mut edges: Vec<AugmentedEdge> = (0..instance.line_count())
        .map(|l| AugmentedEdge {
            from: topo.from[l],
            to: topo.to[l],
            cost: instance.lines[l].cost,
            forced: false,
            line: Some(l),
        })
        .collect();
    for &r in &topo.substations {
        edges.push(AugmentedEdge {
            from: root,
            to: r,
            cost: 0.0,
            forced: true,
            line: None,
        });
    }
    AugmentedGraph {
        base: instance,
        root,
        edges,
    }
}

/// Chu-Liu/Edmonds minimum-cost arborescence. Returns `None` if some node is
/// unreachable from `root`.
pub fn min_arborescence_cost(n: usize, root: usize, edges: &[(usize, usize, f64)]) -> Option<f64> {
    let mut n = n;
    let mut root = root;
    let mut edges: Vec<(usize, usize, f64)> = edges.iter().copied().filter(|e| e.0 != e.1).collect();
    let mut total = 0.0;
    loop {
        let mut in_cost = vec![f64::INFINITY; n];
        let mut pre = vec![usize::MAX; n];
        for &(u, v, w) in &edges {
            if u != v && w < in_cost[v] {
                in_cost[v] = w;
                pre[v] = u;
            }
        }
        for v in 0..n {
            if v != root && !in_cost[v].is_finite() {
                return None;
            }
        }
        let mut comp = vec![usize::MAX; n];
        let mut visit = vec![usize::MAX; n];
        let mut count = 0;
        in_cost[root] = 0.0;
        for v in 0..n {
            total += in_cost[v];
            let mut x = v;
            while visit[x] != v && comp[x] == usize::MAX && x != root {
                visit[x] = v;
                x = pre[x];
            }
            if x != root && comp[x] == usize::MAX {
                // x lies on a cycle; label it as one component
                let mut y = pre[x];
                while y != x {
                    comp[y] = count;
                    y = pre[y];
                }
                comp[x] = count;
                count += 1;
            }
        }
        if count == 0 {
            return Some(total);
        }
        for c in comp.iter_mut() {
            if *c == usize::MAX {
                *c = count;
                count += 1;
            }
        }
        edges = edges
            .iter()
            .filter_map(|&(u, v, w)| {
                let (cu, cv) = (comp[u], comp[v]);
                (cu != cv).then(|| (cu, cv, w - in_cost[v]))
            })
            .collect();
        n = count;
        root = comp[root];
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn line(from: i64, to: i64, cost: f64) -> LineSpec {
        LineSpec {
            from: from.into(),
            to: to.into(),
            cost,
            resistance: 0.1,
            reactance: 0.1,
            cap_p: 500.0,
            cap_q: 250.0,
            mu_max: vec![0.01],
            tau_rst: 0,
        }
    }

    pub(crate) fn node(id: i64, sub: bool) -> NodeSpec {
        NodeSpec {
            id: id.into(),
            load_p: vec![if sub { 0.0 } else { 50.0 }],
            load_q: vec![if sub { 0.0 } else { 10.0 }],
            is_substation: sub,
            cap_p: if sub { 1000.0 } else { 100.0 },
            cap_q: if sub { 500.0 } else { 50.0 },
            dg_candidate: !sub,
        }
    }

    fn chain4() -> NetworkInstance {
        NetworkInstance {
            nodes: vec![node(1, true), node(2, false), node(3, false), node(4, false)],
            lines: vec![line(1, 2, 5.0), line(2, 3, 5.0), line(3, 4, 5.0)],
            periods: 1,
            budget_cost: 15.0,
            budget_dg: 1,
            n_z: 1,
            v_min: 0.95,
            v_max: 1.05,
            v_ref: 1000.0,
            coords: None,
        }
    }

    #[test]
    fn well_formed_chain_validates() {
        let inst = chain4();
        inst.validate().unwrap();
        let parsed = parse_instance(&inst.to_canonical_json()).unwrap();
        assert_eq!(parsed.node_count(), 4);
        assert_eq!(parsed, inst);
    }

    #[test]
    fn duplicate_unordered_pair_rejected() {
        let mut inst = chain4();
        inst.lines.push(line(2, 1, 1.0));
        let err = inst.validate().unwrap_err().to_string();
        assert!(err.contains("duplicate unordered pair"), "{err}");
    }

    #[test]
    fn collects_every_violation() {
        let mut inst = chain4();
        inst.v_min = 1.1;
        inst.lines.push(line(4, 4, 1.0));
        inst.nodes[1].load_p = vec![-1.0];
        match inst.validate() {
            Err(InstanceError::Invalid(v)) => assert!(v.len() >= 3, "{v:?}"),
            other => panic!("expected invalid, got {other:?}"),
        }
    }

    #[test]
    fn budget_below_cheapest_forest_rejected() {
        let mut inst = chain4();
        inst.budget_cost = 14.0;
        let err = inst.validate().unwrap_err().to_string();
        assert!(err.contains("within budget"), "{err}");
    }

    #[test]
    fn missing_substation_rejected() {
        let mut inst = chain4();
        inst.nodes[0].is_substation = false;
        inst.nodes[0].dg_candidate = false;
        assert!(inst.validate().is_err());
    }

    #[test]
    fn augment_counts_and_forced_root_edges() {
        let inst = chain4();
        let aug = augment(&inst);
        assert_eq!(aug.node_count(), 5);
        assert_eq!(aug.edges.len(), 4);
        let roots: Vec<_> = aug.root_edges().collect();
        assert_eq!(roots.len(), 1);
        assert!(roots[0].1.forced);
        assert_eq!(roots[0].1.cost, 0.0);
        assert_eq!(aug.base_edges().count(), inst.line_count());
    }

    #[test]
    fn arborescence_picks_cheaper_parent() {
        // root 0 -> 1 (1), 0 -> 2 (10), 1 -> 2 (2), 2 -> 1 (1)
        let edges = [(0, 1, 1.0), (0, 2, 10.0), (1, 2, 2.0), (2, 1, 1.0)];
        assert_eq!(min_arborescence_cost(3, 0, &edges), Some(3.0));
    }

    #[test]
    fn arborescence_contracts_cycles() {
        // cheap 2-cycle between 1 and 2 must be broken by an expensive entry
        let edges = [(0, 1, 10.0), (0, 2, 12.0), (1, 2, 1.0), (2, 1, 1.0), (2, 3, 1.0)];
        assert_eq!(min_arborescence_cost(4, 0, &edges), Some(12.0));
    }

    #[test]
    fn arborescence_unreachable_is_none() {
        let edges = [(0, 1, 1.0)];
        assert_eq!(min_arborescence_cost(3, 0, &edges), None);
    }
}
