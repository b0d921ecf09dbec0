use serde::{Deserialize, Serialize};

use crate::grid::{augment, NetworkInstance};
use crate::opt::{LinExpr, LinearModel, ObjSense, RowId, RowSense, SolveResult, VarId};
use crate::scenario::{AmbiguitySet, ContingencyScenario};

use super::config::Configuration;
use super::restoration::{add_block, Availability, BlockVars, FirstStage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Distributionally robust: worst-case expectation over the ambiguity set.
    Dr,
    /// Robust: worst case over the uncertainty set.
    Ro,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Dr => "dr",
            Mode::Ro => "ro",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dr" => Ok(Mode::Dr),
            "ro" => Ok(Mode::Ro),
            other => Err(format!("unknown mode {other:?}, expected dr or ro")),
        }
    }
}

/// First-stage variables. Root edges carry no `y` variable: they are always
/// built.
#[derive(Debug, Clone)]
pub struct FirstStageVars {
    /// `y[l]` per candidate line.
    pub y: Vec<VarId>,
    /// `w[n]` per node; `None` for substations and non-candidates.
    pub w: Vec<Option<VarId>>,
    /// `f[e]` per augmented edge.
    pub f: Vec<VarId>,
}

impl FirstStageVars {
    pub fn configuration(&self, values: &[f64]) -> Configuration {
        Configuration {
            y: self.y.iter().map(|v| values[v.0] > 0.5).collect(),
            w: self.w.iter().map(|v| v.is_some_and(|v| values[v.0] > 0.5)).collect(),
            f: self.f.iter().map(|v| values[v.0]).collect(),
        }
    }

    /// Pins `y` and `w` to a configuration.
    pub fn fix(&self, model: &mut LinearModel, config: &Configuration) {
        for (l, &v) in self.y.iter().enumerate() {
            let x = if config.y[l] { 1.0 } else { 0.0 };
            model.set_bounds(v, x, x);
        }
        self.fix_dg(model, &config.w);
    }

    pub fn fix_dg(&self, model: &mut LinearModel, w: &[bool]) {
        for (n, v) in self.w.iter().enumerate() {
            if let Some(v) = *v {
                let x = if w[n] { 1.0 } else { 0.0 };
                model.set_bounds(v, x, x);
            }
        }
    }
}

/// Adds the spanning-tree, DG-count and budget constraints over `(y, w, f)`.
///
/// Rows: `root_flow` (the root ships one unit per node), `flow_bal[n]`
/// (every node absorbs one unit), `tree_size` (one edge fewer than nodes in
/// the augmented graph), `flow_cap[e]`, `dg_budget` and `cost_budget`.
pub fn build_first_stage(model: &mut LinearModel, instance: &NetworkInstance) -> FirstStageVars {
    let g = augment(instance);
    let n = instance.node_count();
    let big = n as f64;
    let y: Vec<VarId> = (0..instance.line_count()).map(|l| model.add_binary(format!("y[{l}]"))).collect();
    let w: Vec<Option<VarId>> = instance
        .nodes
        .iter()
        .enumerate()
        .map(|(i, node)| (node.dg_candidate && !node.is_substation).then(|| model.add_binary(format!("w[{i}]"))))
        .collect();
    let f: Vec<VarId> = (0..g.edges.len())
        .map(|e| model.add_continuous(format!("f[{e}]"), 0.0, f64::INFINITY))
        .collect();

    let mut root = LinExpr::new();
    for (e, _) in g.root_edges() {
        root.add(f[e], 1.0);
    }
    model.add_row("root_flow", root, RowSense::Eq, big);

    for v in 0..n {
        let mut e = LinExpr::new();
        for (k, edge) in g.edges.iter().enumerate() {
            if edge.to == v {
                e.add(f[k], 1.0);
            }
            if edge.from == v {
                e.add(f[k], -1.0);
            }
        }
        model.add_row(format!("flow_bal[{v}]"), e, RowSense::Eq, 1.0);
    }

    let mut size = LinExpr::new();
    for &v in &y {
        size.add(v, 1.0);
    }
    // Root edges count as built.
    let roots = g.root_edges().count() as f64;
    model.add_row("tree_size", size, RowSense::Eq, big - roots);

    for (e, edge) in g.edges.iter().enumerate() {
        let (expr, rhs) = match edge.line {
            Some(l) => (LinExpr::term(f[e], 1.0).with(y[l], -big), 0.0),
            None => (LinExpr::term(f[e], 1.0), big),
        };
        model.add_row(format!("flow_cap[{e}]"), expr, RowSense::Le, rhs);
    }

    let mut dg = LinExpr::new();
    for v in w.iter().flatten() {
        dg.add(*v, 1.0);
    }
    model.add_row("dg_budget", dg, RowSense::Le, instance.budget_dg as f64);

    let mut cost = LinExpr::new();
    for (l, &v) in y.iter().enumerate() {
        cost.add(v, instance.lines[l].cost);
    }
    model.add_row("cost_budget", cost, RowSense::Le, instance.budget_cost);

    FirstStageVars { y, w, f }
}

/// CCG master over a scenario pool.
#[derive(Debug, Clone)]
pub struct Master {
    pub model: LinearModel,
    pub mode: Mode,
    pub first: FirstStageVars,
    /// `beta[l,t]` at index `l * periods + t`; empty in robust mode.
    pub beta: Vec<VarId>,
    pub lambda: VarId,
    pub blocks: Vec<BlockVars>,
    /// `cut[j]` per pool scenario.
    pub cuts: Vec<RowId>,
    pub pool: Vec<ContingencyScenario>,
}

impl Master {
    pub fn beta_values(&self, result: &SolveResult) -> Vec<f64> {
        self.beta.iter().map(|&b| result.value(b).max(0.0)).collect()
    }

    pub fn configuration(&self, result: &SolveResult) -> Configuration {
        self.first.configuration(&result.primal)
    }
}

/// Master problem: first stage plus one recourse block and one cut per pool
/// scenario.
///
/// In DR mode the objective is `sum (mu - 1) beta + lambda` with cuts
/// `lambda >= sum s^j + sum z^j beta`. In RO mode `beta` is absent and cuts
/// read `lambda >= sum s^j`. `lambda >= 0` keeps an empty pool bounded; with
/// an empty pool `beta` is also fixed at zero.
pub fn build_master(
    instance: &NetworkInstance,
    pool: &[ContingencyScenario],
    ambiguity: &AmbiguitySet,
    mode: Mode,
) -> Master {
    let topo = instance.topology();
    let periods = instance.periods;
    let mut model = LinearModel::new(format!("master_{mode}"), ObjSense::Minimize);
    let first = build_first_stage(&mut model, instance);
    let lambda = model.add_continuous("lambda", 0.0, f64::INFINITY);
    let mut objective = LinExpr::term(lambda, 1.0);
    let mut beta = Vec::new();
    if mode == Mode::Dr {
        let ub = if pool.is_empty() { 0.0 } else { f64::INFINITY };
        for l in 0..instance.line_count() {
            for t in 0..periods {
                let b = model.add_continuous(format!("beta[{l},{t}]"), 0.0, ub);
                objective.add(b, ambiguity.mu_max(l, t) - 1.0);
                beta.push(b);
            }
        }
    }
    let mut blocks = Vec::with_capacity(pool.len());
    let mut cuts = Vec::with_capacity(pool.len());
    let mut unused = Vec::new();
    for (j, z) in pool.iter().enumerate() {
        let block = add_block(
            &mut model,
            instance,
            &topo,
            Some(j),
            &FirstStage::Vars {
                y: &first.y,
                w: &first.w,
            },
            &Availability::Data(z),
            &mut unused,
        );
        let mut cut = LinExpr::term(lambda, 1.0);
        for (v, c) in block.shed_expr().terms {
            cut.add(v, -c);
        }
        if mode == Mode::Dr {
            for l in 0..instance.line_count() {
                for t in 0..periods {
                    cut.add(beta[l * periods + t], -z.z(l, t));
                }
            }
        }
        cuts.push(model.add_row(format!("cut[{j}]"), cut, RowSense::Ge, 0.0));
        blocks.push(block);
    }
    model.objective = objective;
    Master {
        model,
        mode,
        first,
        beta,
        lambda,
        blocks,
        cuts,
        pool: pool.to_vec(),
    }
}

/// Robust master: [`build_master`] in RO mode.
pub fn build_ro_master(instance: &NetworkInstance, pool: &[ContingencyScenario]) -> Master {
    let amb = AmbiguitySet::uniform(instance.line_count(), instance.periods, 0.0);
    build_master(instance, pool, &amb, Mode::Ro)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::config::check_configuration;
    use crate::formulation::tests::fixture;
    use crate::opt::{solve, SolveParams, SolveStatus};

    fn first_stage_only(inst: &NetworkInstance) -> (LinearModel, FirstStageVars) {
        let mut m = LinearModel::new("fs", ObjSense::Minimize);
        let v = build_first_stage(&mut m, inst);
        (m, v)
    }

    #[test]
    fn first_stage_yields_tree() {
        let inst = fixture("four_node");
        let (m, v) = first_stage_only(&inst);
        let r = solve(&m, &SolveParams::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        let cfg = v.configuration(&r.primal);
        assert_eq!(cfg.built_lines().len() + 1, 4);
        check_configuration(&inst, &cfg).unwrap();
    }

    #[test]
    fn budget_below_cheapest_tree_is_infeasible() {
        let mut inst = fixture("four_node");
        let cheapest = inst.cheapest_forest_cost().unwrap();
        inst.budget_cost = cheapest - 1.0;
        let (m, _) = first_stage_only(&inst);
        assert_eq!(solve(&m, &SolveParams::default()).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn zero_dg_budget_forces_no_dg() {
        let mut inst = fixture("four_node");
        inst.budget_dg = 0;
        let (mut m, v) = first_stage_only(&inst);
        let mut obj = LinExpr::new();
        for w in v.w.iter().flatten() {
            obj.add(*w, 1.0);
        }
        m.set_objective(ObjSense::Maximize, obj);
        let r = solve(&m, &SolveParams::default()).unwrap();
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn empty_pool_master_is_zero() {
        let inst = fixture("four_node");
        let amb = AmbiguitySet::from_instance(&inst);
        let m = build_master(&inst, &[], &amb, Mode::Dr);
        let r = solve(&m.model, &SolveParams::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!(r.objective.abs() < 1e-9);
        assert!(m.beta_values(&r).iter().all(|&b| b == 0.0));
    }

    #[test]
    fn all_ones_pool_on_servable_instance_is_zero() {
        let inst = fixture("four_node");
        let amb = AmbiguitySet::from_instance(&inst);
        let m = build_master(&inst, &[ContingencyScenario::for_instance(&inst)], &amb, Mode::Dr);
        let r = solve(&m.model, &SolveParams::default()).unwrap();
        assert!(r.objective.abs() < 1e-6);
        check_configuration(&inst, &m.configuration(&r)).unwrap();
    }

    #[test]
    fn forced_shed_with_unit_mu() {
        // Two-node instance: the line fails, DG covers 60 of 100 KW.
        let mut inst = fixture("two_node");
        inst.budget_dg = 0;
        let amb = AmbiguitySet::uniform(1, 1, 1.0);
        let z = ContingencyScenario::from_failures(1, 1, &[(0, 0)]);
        let m = build_master(&inst, &[z], &amb, Mode::Dr);
        let r = solve(&m.model, &SolveParams::default()).unwrap();
        assert!((r.objective - 100.0).abs() < 1e-6);
    }

    #[test]
    fn mode_parses() {
        assert_eq!("DR".parse::<Mode>().unwrap(), Mode::Dr);
        assert_eq!("ro".parse::<Mode>().unwrap(), Mode::Ro);
        assert!("x".parse::<Mode>().is_err());
    }
}
