//! Brute-force ground truth for tiny instances: scenario enumeration, the
//! moment LP over the enumerated support, and full planning enumeration.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulation::{build_restoration_reduced, check_configuration, Configuration, Mode};
use crate::grid::NetworkInstance;
use crate::opt::{solve, LinExpr, LinearModel, ObjSense, RowSense, SolveParams, SolveStatus, SolverError};
use crate::scenario::{enumerate_scenarios_over, AmbiguitySet, ContingencyScenario, ScenarioError};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("more than {limit} feasible configurations")]
    TooManyConfigurations { limit: usize },
    #[error("no feasible configuration within the budgets")]
    Infeasible,
    #[error("{0}")]
    Numerical(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub scenarios: usize,
    pub configurations: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            scenarios: 20_000,
            configurations: 5_000,
        }
    }
}

/// Optimal solution of the moment LP
/// `max sum psi_j Q_j` s.t. `sum psi_j (1 - z^j) <= mu`, `sum psi = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentLpSolution {
    pub scenarios: Vec<ContingencyScenario>,
    pub q: Vec<f64>,
    pub psi: Vec<f64>,
    /// Dual of the normalisation row.
    pub gamma: f64,
    /// Duals of the moment rows, `beta[l * periods + t]`; zero where a line
    /// cannot fail.
    pub beta: Vec<f64>,
    pub value: f64,
}

impl MomentLpSolution {
    /// `gamma + sum mu beta`, equal to `value` at optimality.
    pub fn dual_value(&self, ambiguity: &AmbiguitySet) -> f64 {
        let periods = ambiguity.periods();
        let mut v = self.gamma;
        for (i, b) in self.beta.iter().enumerate() {
            v += ambiguity.mu_max(i / periods, i % periods) * b;
        }
        v
    }
}

/// Recourse values for one configuration, cached per period and failure
/// pattern (periods decouple once `z` is fixed).
pub struct RecourseCache<'a> {
    instance: &'a NetworkInstance,
    config: &'a Configuration,
    built: Vec<usize>,
    cache: HashMap<(usize, u128), f64>,
    pub solves: usize,
}

impl<'a> RecourseCache<'a> {
    pub fn new(instance: &'a NetworkInstance, config: &'a Configuration) -> Self {
        let built = config.built_lines();
        assert!(built.len() <= 128, "too many built lines for the cache key");
        Self {
            instance,
            config,
            built,
            cache: HashMap::new(),
            solves: 0,
        }
    }

    /// `Q(config, z)`.
    pub fn value(&mut self, z: &ContingencyScenario) -> Result<f64, OracleError> {
        let periods = self.instance.periods;
        let keys: Vec<(usize, u128)> = (0..periods).map(|t| (t, z.period_mask(t, &self.built))).collect();
        if keys.iter().any(|k| !self.cache.contains_key(k)) {
            let r = build_restoration_reduced(self.instance, self.config, z);
            let res = solve(&r.model, &SolveParams::default())?;
            if res.status != SolveStatus::Optimal {
                return Err(OracleError::Numerical(format!("restoration LP ended {:?}", res.status)));
            }
            self.solves += 1;
            for &(t, mask) in &keys {
                let shed: f64 = r.vars.s.iter().filter_map(|row| row[t]).map(|s| res.value(s)).sum();
                self.cache.entry((t, mask)).or_insert(shed);
            }
        }
        Ok(keys.iter().map(|k| self.cache[k]).sum())
    }
}

/// Admissible scenarios for a configuration: only built lines can fail.
pub fn scenarios_for(
    instance: &NetworkInstance,
    config: &Configuration,
    limit: usize,
) -> Result<Vec<ContingencyScenario>, OracleError> {
    Ok(enumerate_scenarios_over(instance, &config.built_lines(), limit)?)
}

/// Solves the moment LP over given scenarios and recourse values.
pub fn moment_lp(
    instance: &NetworkInstance,
    ambiguity: &AmbiguitySet,
    scenarios: Vec<ContingencyScenario>,
    q: Vec<f64>,
) -> Result<MomentLpSolution, OracleError> {
    let periods = instance.periods;
    let lines = instance.line_count();
    let mut m = LinearModel::new("moment", ObjSense::Maximize);
    let psi: Vec<_> = (0..scenarios.len())
        .map(|j| m.add_continuous(format!("psi[{j}]"), 0.0, f64::INFINITY))
        .collect();
    let mut obj = LinExpr::new();
    for (j, &v) in psi.iter().enumerate() {
        obj.add(v, q[j]);
    }
    m.set_objective(ObjSense::Maximize, obj);
    let norm = m.add_row(
        "norm",
        psi.iter().fold(LinExpr::new(), |e, &v| e.with(v, 1.0)),
        RowSense::Eq,
        1.0,
    );
    let mut moment_rows = Vec::new();
    for l in 0..lines {
        for t in 0..periods {
            let mut e = LinExpr::new();
            for (j, z) in scenarios.iter().enumerate() {
                if !z.works(l, t) {
                    e.add(psi[j], 1.0);
                }
            }
            if e.terms.is_empty() {
                continue;
            }
            let r = m.add_row(format!("moment[{l},{t}]"), e, RowSense::Le, ambiguity.mu_max(l, t));
            moment_rows.push((l * periods + t, r));
        }
    }
    let res = solve(&m, &SolveParams::default())?;
    if res.status != SolveStatus::Optimal {
        return Err(OracleError::Numerical(format!("moment LP ended {:?}", res.status)));
    }
    let mut beta = vec![0.0; lines * periods];
    for (i, r) in moment_rows {
        beta[i] = res.dual(r).unwrap_or(0.0).max(0.0);
    }
    Ok(MomentLpSolution {
        psi: psi.iter().map(|&v| res.value(v).max(0.0)).collect(),
        gamma: res.dual(norm).unwrap_or(0.0),
        beta,
        value: res.objective,
        scenarios,
        q,
    })
}

/// Worst-case expected shedding of `config` over the ambiguity set.
pub fn exact_worst_case_expectation(
    instance: &NetworkInstance,
    config: &Configuration,
    ambiguity: &AmbiguitySet,
    limit: usize,
) -> Result<MomentLpSolution, OracleError> {
    let scenarios = scenarios_for(instance, config, limit)?;
    let mut cache = RecourseCache::new(instance, config);
    let q = scenarios.iter().map(|z| cache.value(z)).collect::<Result<Vec<_>, _>>()?;
    moment_lp(instance, ambiguity, scenarios, q)
}

/// Worst scenario and its shedding; ties go to the lexicographically
/// smallest scenario.
pub fn exact_worst_case_scenario(
    instance: &NetworkInstance,
    config: &Configuration,
    limit: usize,
) -> Result<(ContingencyScenario, f64), OracleError> {
    let scenarios = scenarios_for(instance, config, limit)?;
    let mut cache = RecourseCache::new(instance, config);
    let mut best: Option<(ContingencyScenario, f64)> = None;
    for z in scenarios {
        let v = cache.value(&z)?;
        if best.as_ref().map_or(true, |(_, b)| v > b + 1e-9) {
            best = Some((z, v));
        }
    }
    Ok(best.expect("the all-working scenario is always admissible"))
}

/// Every spanning arborescence within the line budget: each load node picks
/// one incoming line and every node reaches a substation.
pub fn enumerate_trees(instance: &NetworkInstance, limit: usize) -> Result<Vec<Vec<usize>>, OracleError> {
    let topo = instance.topology();
    let n = instance.node_count();
    let loads: Vec<usize> = (0..n).filter(|&v| !instance.nodes[v].is_substation).collect();
    let mut out = Vec::new();
    let mut parent_line = vec![usize::MAX; n];

    #[allow(clippy::too_many_arguments)]
    fn rec(
        k: usize,
        cost: f64,
        loads: &[usize],
        instance: &NetworkInstance,
        topo: &crate::grid::Topology,
        parent_line: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        limit: usize,
    ) -> Result<(), OracleError> {
        if k == loads.len() {
            if reaches_substations(instance, topo, parent_line) {
                if out.len() >= limit {
                    return Err(OracleError::TooManyConfigurations { limit });
                }
                let mut lines: Vec<usize> = loads.iter().map(|&v| parent_line[v]).collect();
                lines.sort_unstable();
                out.push(lines);
            }
            return Ok(());
        }
        let v = loads[k];
        for &l in &topo.in_lines[v] {
            let c = cost + instance.lines[l].cost;
            if c > instance.budget_cost + 1e-9 {
                continue;
            }
            parent_line[v] = l;
            rec(k + 1, c, loads, instance, topo, parent_line, out, limit)?;
        }
        parent_line[v] = usize::MAX;
        Ok(())
    }

    rec(0, 0.0, &loads, instance, &topo, &mut parent_line, &mut out, limit)?;
    out.sort();
    Ok(out)
}

fn reaches_substations(instance: &NetworkInstance, topo: &crate::grid::Topology, parent_line: &[usize]) -> bool {
    let n = instance.node_count();
    for start in 0..n {
        let mut v = start;
        let mut steps = 0;
        while !instance.nodes[v].is_substation {
            v = topo.from[parent_line[v]];
            steps += 1;
            if steps > n {
                return false;
            }
        }
    }
    true
}

/// DG subsets of size at most the DG budget, in lexicographic order.
pub fn enumerate_dg_sets(instance: &NetworkInstance) -> Vec<Vec<usize>> {
    let cands = instance.dg_candidates();
    let mut out = vec![Vec::new()];
    for k in 1..=instance.budget_dg.min(cands.len()) {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            out.push(idx.iter().map(|&i| cands[i]).collect());
            let mut i = k;
            while i > 0 && idx[i - 1] == cands.len() - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactPlan {
    pub config: Configuration,
    pub objective: f64,
    pub mode: Mode,
    /// Configurations evaluated.
    pub evaluated: usize,
}

/// Full enumeration of trees and DG placements; the first configuration
/// (in enumeration order) attaining the minimum wins.
pub fn exact_plan(
    instance: &NetworkInstance,
    ambiguity: &AmbiguitySet,
    mode: Mode,
    limits: OracleLimits,
) -> Result<ExactPlan, OracleError> {
    let trees = enumerate_trees(instance, limits.configurations)?;
    let dgs = enumerate_dg_sets(instance);
    let mut best: Option<(Configuration, f64)> = None;
    let mut evaluated = 0;
    for tree in &trees {
        for dg in &dgs {
            let cfg = Configuration::from_parts(instance, tree, dg);
            debug_assert!(check_configuration(instance, &cfg).is_ok());
            evaluated += 1;
            let v = match mode {
                Mode::Dr => exact_worst_case_expectation(instance, &cfg, ambiguity, limits.scenarios)?.value,
                Mode::Ro => exact_worst_case_scenario(instance, &cfg, limits.scenarios)?.1,
            };
            if best.as_ref().map_or(true, |(_, b)| v < b - 1e-9) {
                best = Some((cfg, v));
            }
        }
    }
    let (config, objective) = best.ok_or(OracleError::Infeasible)?;
    Ok(ExactPlan {
        config,
        objective,
        mode,
        evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fixture;

    #[test]
    fn four_node_trees() {
        let inst = fixture("four_node").unwrap();
        let trees = enumerate_trees(&inst, 100).unwrap();
        assert_eq!(trees, vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 4]]);
        for t in &trees {
            let cfg = Configuration::from_parts(&inst, t, &[]);
            assert!(check_configuration(&inst, &cfg).is_ok());
        }
    }

    #[test]
    fn dg_subsets() {
        let mut inst = fixture("four_node").unwrap();
        assert_eq!(enumerate_dg_sets(&inst), vec![vec![], vec![2], vec![3]]);
        inst.budget_dg = 2;
        assert_eq!(enumerate_dg_sets(&inst), vec![vec![], vec![2], vec![3], vec![2, 3]]);
    }

    #[test]
    fn two_node_by_hand() {
        let inst = fixture("two_node").unwrap();
        let amb = AmbiguitySet::from_instance(&inst);
        let cfg = Configuration::from_parts(&inst, &[0], &[1]);
        let m = exact_worst_case_expectation(&inst, &cfg, &amb, 100).unwrap();
        assert!((m.value - 2.0).abs() < 1e-9);
        assert!((m.dual_value(&amb) - m.value).abs() < 1e-8);
        let (z, v) = exact_worst_case_scenario(&inst, &cfg, 100).unwrap();
        assert!(!z.works(0, 0));
        assert!((v - 40.0).abs() < 1e-9);
        let plan = exact_plan(&inst, &amb, Mode::Dr, OracleLimits::default()).unwrap();
        assert!((plan.objective - 2.0).abs() < 1e-9);
        assert_eq!(plan.evaluated, 2);
    }

    #[test]
    fn limits_and_monotonicity() {
        let inst = fixture("four_node").unwrap();
        let cfg = Configuration::from_parts(&inst, &[0, 1, 2], &[3]);
        let lo = AmbiguitySet::uniform(5, 1, 0.0);
        let mid = AmbiguitySet::from_instance(&inst);
        let hi = AmbiguitySet::uniform(5, 1, 1.0);
        let q1 = RecourseCache::new(&inst, &cfg)
            .value(&ContingencyScenario::for_instance(&inst))
            .unwrap();
        let v0 = exact_worst_case_expectation(&inst, &cfg, &lo, 100).unwrap().value;
        let v1 = exact_worst_case_expectation(&inst, &cfg, &mid, 100).unwrap().value;
        let v2 = exact_worst_case_expectation(&inst, &cfg, &hi, 100).unwrap().value;
        let (_, wcs) = exact_worst_case_scenario(&inst, &cfg, 100).unwrap();
        assert!((v0 - q1).abs() < 1e-9);
        assert!(v0 <= v1 + 1e-9 && v1 <= v2 + 1e-9);
        assert!((v2 - wcs).abs() < 1e-9);
    }

    #[test]
    fn cache_agrees_with_direct_solves() {
        let inst = fixture("seven_node").unwrap();
        let cfg = Configuration::from_parts(&inst, &[0, 2, 3, 5, 7], &[3]);
        let mut cache = RecourseCache::new(&inst, &cfg);
        let all = scenarios_for(&inst, &cfg, 1000).unwrap();
        for z in &all {
            let direct = crate::ccg::restoration_value(&inst, &cfg, z).unwrap();
            assert!((cache.value(z).unwrap() - direct).abs() < 1e-7);
        }
        assert!(cache.solves < all.len());
    }
}
