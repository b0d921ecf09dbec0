use serde::{Deserialize, Serialize};

use crate::grid::{augment, NetworkInstance};

/// First-stage decisions: built lines, DG placement and the fictitious
/// single-commodity flow over the augmented graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    /// Built flag per candidate line.
    pub y: Vec<bool>,
    /// DG flag per node.
    pub w: Vec<bool>,
    /// Flow per augmented edge (base lines first, then root edges).
    pub f: Vec<f64>,
}

impl Configuration {
    /// Builds a configuration from built lines and DG nodes, deriving the
    /// flow from subtree sizes. The result is only meaningful when the lines
    /// form an arborescence; run [`check_configuration`] to be sure.
    pub fn from_parts(instance: &NetworkInstance, built: &[usize], dg: &[usize]) -> Self {
        let mut y = vec![false; instance.line_count()];
        for &l in built {
            y[l] = true;
        }
        let mut w = vec![false; instance.node_count()];
        for &n in dg {
            w[n] = true;
        }
        let f = tree_flow(instance, &y);
        Self { y, w, f }
    }

    pub fn built_lines(&self) -> Vec<usize> {
        (0..self.y.len()).filter(|&l| self.y[l]).collect()
    }

    pub fn dg_nodes(&self) -> Vec<usize> {
        (0..self.w.len()).filter(|&n| self.w[n]).collect()
    }

    pub fn build_cost(&self, instance: &NetworkInstance) -> f64 {
        self.built_lines().iter().map(|&l| instance.lines[l].cost).sum()
    }

    /// Same built lines and DG nodes; flows are ignored.
    pub fn same_design(&self, other: &Configuration) -> bool {
        self.y == other.y && self.w == other.w
    }
}

/// Flow on each augmented edge when every node consumes one unit: the number
/// of nodes below the edge. Lines whose head is unreachable get zero.
pub fn tree_flow(instance: &NetworkInstance, y: &[bool]) -> Vec<f64> {
    let g = augment(instance);
    let n = instance.node_count();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for (e, edge) in g.edges.iter().enumerate() {
        let on = match edge.line {
            Some(l) => y[l],
            None => true,
        };
        if on {
            children[edge.from].push(e);
        }
    }
    let mut f = vec![0.0; g.edges.len()];
    // Iterative post-order from the root.
    let mut order = Vec::new();
    let mut seen = vec![false; n + 1];
    let mut stack = vec![g.root];
    seen[g.root] = true;
    while let Some(u) = stack.pop() {
        order.push(u);
        for &e in &children[u] {
            let v = g.edges[e].to;
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    let mut size = vec![0.0; n + 1];
    for &u in order.iter().rev() {
        if u != g.root {
            size[u] += 1.0;
        }
        for &e in &children[u] {
            let v = g.edges[e].to;
            f[e] = size[v];
            size[u] += size[v];
        }
    }
    f
}

/// Independent graph check of a configuration: the built lines plus root
/// edges form a spanning arborescence of the augmented graph rooted at the
/// artificial root, and both budgets hold. Returns every violation.
pub fn check_configuration(instance: &NetworkInstance, config: &Configuration) -> Result<(), Vec<String>> {
    let mut errs = Vec::new();
    let n = instance.node_count();
    if config.y.len() != instance.line_count() || config.w.len() != n {
        return Err(vec!["configuration dimensions do not match the instance".into()]);
    }
    let topo = instance.topology();
    let built = config.built_lines();
    let edges = built.len() + topo.substations.len();
    if edges != n {
        errs.push(format!("augmented tree has {edges} edges, expected {n}"));
    }

    // Undirected acyclicity and connectivity over n + 1 nodes.
    let mut parent: Vec<usize> = (0..=n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let root = n;
    let mut pairs: Vec<(usize, usize)> = topo.substations.iter().map(|&r| (root, r)).collect();
    pairs.extend(built.iter().map(|&l| (topo.from[l], topo.to[l])));
    for &(a, b) in &pairs {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            errs.push(format!("cycle through nodes {} and {}", label(instance, a), label(instance, b)));
        } else {
            parent[ra] = rb;
        }
    }
    let r0 = find(&mut parent, root);
    for v in 0..n {
        if find(&mut parent, v) != r0 {
            errs.push(format!("node {} is not connected to a substation", instance.nodes[v].id));
        }
    }

    // Orientation: each load node is fed by exactly one built line and
    // substations by none.
    let mut indeg = vec![0usize; n];
    for &l in &built {
        indeg[topo.to[l]] += 1;
    }
    for v in 0..n {
        let expected = if instance.nodes[v].is_substation { 0 } else { 1 };
        if indeg[v] != expected {
            errs.push(format!(
                "node {} has {} incoming built lines, expected {expected}",
                instance.nodes[v].id, indeg[v]
            ));
        }
    }

    let cost = config.build_cost(instance);
    if cost > instance.budget_cost + 1e-6 {
        errs.push(format!("build cost {cost} exceeds budget {}", instance.budget_cost));
    }
    let dg = config.dg_nodes();
    if dg.len() > instance.budget_dg {
        errs.push(format!("{} DG units exceed budget {}", dg.len(), instance.budget_dg));
    }
    for &v in &dg {
        if !instance.nodes[v].dg_candidate || instance.nodes[v].is_substation {
            errs.push(format!("DG at non-candidate node {}", instance.nodes[v].id));
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

fn label(instance: &NetworkInstance, v: usize) -> String {
    if v == instance.node_count() {
        "root".into()
    } else {
        instance.nodes[v].id.to_string()
    }
}
