//! Column-and-constraint generation for the DR and RO planning problems.

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulation::{
    build_master, build_restoration_reduced, build_subproblem, tree_flow, BlockVars, Configuration, Master, Mode,
    DUAL_BOUND_SCALE,
};
use crate::grid::NetworkInstance;
use crate::opt::{solve, ModelError, SolveParams, SolveResult, SolveStatus, SolverError, VarId};
use crate::scenario::{AmbiguitySet, ContingencyScenario};

/// Denominator guard for the relative gap.
pub const GAP_GUARD: f64 = 1e-9;
/// Absolute gap that also counts as converged.
pub const ABS_GAP: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CcgError {
    #[error("infeasible instance: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Numerical(String),
    #[error("ambiguity set dimensions do not match the instance")]
    Dimension,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcgParams {
    pub epsilon: f64,
    pub max_iter: usize,
    pub mode: Mode,
    /// Wall-clock budget for the whole run, seconds.
    pub time_limit: Option<f64>,
    /// Relative MIP gap of master solves; defaults to a tenth of epsilon.
    pub master_gap: Option<f64>,
    /// Relative MIP gap of subproblem solves; defaults to a tenth of
    /// epsilon. The upper bound uses the solver's dual bound, so a loose gap
    /// only slows convergence.
    pub subproblem_gap: Option<f64>,
    pub threads: u32,
    pub seed: i32,
    /// Plan only the second stage for a given first stage.
    pub fixed_config: Option<Configuration>,
    /// Keep lines free but pin DG placement.
    pub fixed_dg: Option<Vec<bool>>,
}

impl Default for CcgParams {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            max_iter: 50,
            mode: Mode::Dr,
            time_limit: None,
            master_gap: None,
            subproblem_gap: None,
            threads: 1,
            seed: 0,
            fixed_config: None,
            fixed_dg: None,
        }
    }
}

impl CcgParams {
    pub fn new(mode: Mode, epsilon: f64) -> Self {
        Self {
            mode,
            epsilon,
            ..Self::default()
        }
    }

    pub fn master_mip_gap(&self) -> f64 {
        self.master_gap.unwrap_or((self.epsilon * 0.1).clamp(1e-9, 1e-4))
    }

    pub fn subproblem_mip_gap(&self) -> f64 {
        self.subproblem_gap.unwrap_or((self.epsilon * 0.1).clamp(1e-9, 1e-4))
    }

    /// Solver settings for subproblem solves.
    pub fn subproblem_params(&self, time_limit: Option<f64>) -> SolveParams {
        SolveParams {
            time_limit,
            mip_gap: self.subproblem_mip_gap(),
            threads: self.threads,
            seed: self.seed,
            mip_feasibility_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    /// The subproblem returned a scenario already in the pool.
    DuplicateScenario,
    MaxIterations,
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub lb: f64,
    pub ub: f64,
    pub gap: f64,
    pub master_objective: f64,
    pub subproblem_objective: f64,
    /// Failures of the scenario returned by the subproblem, `[line, t]`.
    pub scenario: Vec<(usize, usize)>,
    pub pool_size: usize,
    pub master_time_s: f64,
    pub subproblem_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcgState {
    pub lb: f64,
    pub ub: f64,
    pub pool: Vec<ContingencyScenario>,
    pub iteration: usize,
    pub incumbent: Option<(Configuration, Vec<f64>)>,
    pub history: Vec<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub config: Configuration,
    /// `beta[l * periods + t]`; zeros in robust mode.
    pub beta: Vec<f64>,
    /// Worst-case expected (DR) or worst-case (RO) shedding, KW summed over
    /// periods.
    pub objective: f64,
    pub gap: f64,
    pub mode: Mode,
    pub termination: Termination,
    pub state: CcgState,
    pub time_s: f64,
}

impl PlanResult {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
            || (self.termination == Termination::DuplicateScenario && self.gap_closed(1e-5))
    }

    fn gap_closed(&self, eps: f64) -> bool {
        self.gap <= eps || self.state.ub - self.state.lb <= ABS_GAP
    }
}

/// Outcome of one exact worst-case scenario search.
#[derive(Debug, Clone)]
pub struct WorstCase {
    pub scenario: ContingencyScenario,
    /// Upper bound on `max_z Q + beta z` (solver dual bound, never below the
    /// recomputed value at the returned scenario).
    pub bound: f64,
    /// `Q(config, scenario)` from a fresh restoration LP.
    pub q: f64,
    /// `sum beta z` at the scenario.
    pub linear: f64,
    pub attempts: usize,
    pub time_s: f64,
}

/// Recourse value `Q(config, z)`.
pub fn restoration_value(
    instance: &NetworkInstance,
    config: &Configuration,
    z: &ContingencyScenario,
) -> Result<f64, CcgError> {
    Ok(restoration_solution(instance, config, z)?.0)
}

fn restoration_solution(
    instance: &NetworkInstance,
    config: &Configuration,
    z: &ContingencyScenario,
) -> Result<(f64, BlockVars, SolveResult), CcgError> {
    let r = build_restoration_reduced(instance, config, z);
    let res = solve(&r.model, &SolveParams::default())?;
    if res.status != SolveStatus::Optimal {
        return Err(CcgError::Numerical(format!("restoration LP ended {:?}", res.status)));
    }
    Ok((res.objective, r.vars, res))
}

/// Times the dual bounds may be widened tenfold in one search.
pub const MAX_WIDENINGS: usize = 2;

/// One subproblem solve at a fixed dual-bound scale.
struct Attempt {
    wc: WorstCase,
    /// Duals sitting at their artificial bound on available lines.
    pinned: usize,
    /// The solver value matches a fresh restoration LP at the scenario.
    agrees: bool,
}

fn attempt(
    instance: &NetworkInstance,
    config: &Configuration,
    beta: Option<&[f64]>,
    params: &SolveParams,
    scale: f64,
) -> Result<Attempt, CcgError> {
    let start = Instant::now();
    let periods = instance.periods;
    let sp = build_subproblem(instance, config, beta, scale)?;
    let res = solve(&sp.model, params)?;
    if !matches!(res.status, SolveStatus::Optimal | SolveStatus::Limit) {
        return Err(CcgError::Numerical(format!("subproblem ended {:?}", res.status)));
    }
    let mc = sp.mccormick_error(&res);
    if mc > 1e-6 * (1.0 + sp.max_bound()) {
        return Err(CcgError::Numerical(format!("McCormick product off by {mc}")));
    }
    let scenario = sp.scenario(&res);
    let linear = beta.map_or(0.0, |b| {
        (0..instance.line_count())
            .flat_map(|l| (0..periods).map(move |t| (l, t)))
            .map(|(l, t)| b[l * periods + t] * scenario.z(l, t))
            .sum()
    });
    let q = restoration_value(instance, config, &scenario)?;
    let implied = res.objective - linear;
    let pinned = sp.pinned_duals(&res, 1e-7 * (1.0 + sp.max_bound())).len();
    let agrees = (implied - q).abs() <= 1e-6 * (1.0 + q.abs());
    if !agrees {
        log::debug!("subproblem at scale {scale}: value {implied} vs recomputed {q}");
    }
    Ok(Attempt {
        wc: WorstCase {
            scenario,
            bound: res.best_bound.max(res.objective).max(q + linear),
            q,
            linear,
            attempts: 1,
            time_s: start.elapsed().as_secs_f64(),
        },
        pinned,
        agrees,
    })
}

/// Solves the worst-case subproblem. When a dual sits at its bound on an
/// available line, or the value at the returned scenario disagrees with a
/// fresh restoration solve, the bounds are widened tenfold; the search stops
/// once widening no longer moves the value.
pub fn worst_case(
    instance: &NetworkInstance,
    config: &Configuration,
    beta: Option<&[f64]>,
    params: &SolveParams,
) -> Result<WorstCase, CcgError> {
    let mut scale = DUAL_BOUND_SCALE;
    widened_worst_case(instance, config, beta, params, &mut scale, true)
}

/// Widening search starting at `*scale`, which is left at the last scale
/// tried. With `on_pinned = false` only a disagreement triggers widening.
fn widened_worst_case(
    instance: &NetworkInstance,
    config: &Configuration,
    beta: Option<&[f64]>,
    params: &SolveParams,
    scale: &mut f64,
    on_pinned: bool,
) -> Result<WorstCase, CcgError> {
    let start = Instant::now();
    let mut prev: Option<WorstCase> = None;
    for n in 1..=MAX_WIDENINGS + 1 {
        let a = match attempt(instance, config, beta, params, *scale) {
            Ok(a) => a,
            Err(e) => match prev {
                None => return Err(e),
                Some(p) => {
                    log::warn!("widened subproblem failed ({e}); keeping the previous bound");
                    return Ok(p);
                }
            },
        };
        let mut wc = a.wc;
        wc.attempts = n;
        wc.time_s = start.elapsed().as_secs_f64();
        let stable = prev
            .as_ref()
            .is_some_and(|p| (wc.bound - p.bound).abs() <= 1e-6 * (1.0 + p.bound.abs()));
        if (a.agrees && (a.pinned == 0 || !on_pinned)) || stable {
            return Ok(wc);
        }
        if n <= MAX_WIDENINGS {
            log::debug!("{} duals at bound at scale {}; widening", a.pinned, scale);
            *scale *= 10.0;
        }
        prev = Some(wc);
    }
    log::warn!("dual bounds still binding after {} widenings", MAX_WIDENINGS);
    Ok(prev.expect("at least one attempt"))
}

/// Master settings. While the CCG gap is wide the master is solved loosely:
/// its gap follows a tenth of the current CCG gap, capped at 1e-2, down to
/// the configured floor. LB comes from the solver's dual bound either way.
fn master_params(params: &CcgParams, deadline: Option<Instant>, ccg_gap: f64, tight: bool) -> SolveParams {
    let floor = params.master_mip_gap();
    let mip_gap = if params.master_gap.is_some() || tight {
        floor
    } else {
        (0.1 * ccg_gap).min(1e-2).max(floor)
    };
    SolveParams {
        time_limit: remaining(deadline),
        mip_gap,
        threads: params.threads,
        seed: params.seed,
        mip_feasibility_tol: 1e-7,
    }
}

/// Slack allowed when re-checking the upper bound with wider dual bounds.
fn verify_tol(params: &CcgParams, ub: f64) -> f64 {
    (0.1 * params.epsilon * ub.abs()).max(ABS_GAP)
}

fn remaining(deadline: Option<Instant>) -> Option<f64> {
    deadline.map(|d| d.saturating_duration_since(Instant::now()).as_secs_f64().max(0.01))
}

/// Relative gap with a guarded denominator.
pub fn relative_gap(lb: f64, ub: f64) -> f64 {
    if !lb.is_finite() || !ub.is_finite() {
        return f64::INFINITY;
    }
    ((ub - lb) / lb.abs().max(GAP_GUARD)).max(0.0)
}

/// Runs the CCG loop. The pool starts with the all-available scenario,
/// which keeps the DR master bounded in `beta` from the first iteration.
pub fn run_ccg(
    instance: &NetworkInstance,
    ambiguity: &AmbiguitySet,
    params: &CcgParams,
) -> Result<PlanResult, CcgError> {
    if !ambiguity.matches(instance) {
        return Err(CcgError::Dimension);
    }
    let start = Instant::now();
    let deadline = params.time_limit.map(|t| start + std::time::Duration::from_secs_f64(t));
    let periods = instance.periods;
    let lines = instance.line_count();
    let mu_term = |beta: &[f64]| -> f64 {
        if params.mode == Mode::Ro {
            return 0.0;
        }
        (0..lines)
            .flat_map(|l| (0..periods).map(move |t| (l, t)))
            .map(|(l, t)| (ambiguity.mu_max(l, t) - 1.0) * beta[l * periods + t])
            .sum()
    };

    let mut state = CcgState {
        lb: f64::NEG_INFINITY,
        ub: f64::INFINITY,
        pool: vec![ContingencyScenario::for_instance(instance)],
        iteration: 0,
        incumbent: None,
        history: Vec::new(),
    };
    let mut seen: HashSet<ContingencyScenario> = state.pool.iter().cloned().collect();
    let mut termination = Termination::MaxIterations;
    let mut scale = DUAL_BOUND_SCALE;
    let mut tight = false;

    while state.iteration < params.max_iter {
        state.iteration += 1;
        let t_master = Instant::now();
        let mut master = build_master(instance, &state.pool, ambiguity, params.mode);
        if let Some(cfg) = &params.fixed_config {
            master.first.fix(&mut master.model, cfg);
        } else if let Some(w) = &params.fixed_dg {
            master.first.fix_dg(&mut master.model, w);
        }
        let ccg_gap = state.history.last().map_or(f64::INFINITY, |h| h.gap);
        let mparams = master_params(params, deadline, ccg_gap, tight);
        let loose = mparams.mip_gap > params.master_mip_gap();
        let mres = match solve(&master.model, &mparams) {
            Err(SolverError::NoIncumbent) if state.incumbent.is_some() => {
                state.iteration -= 1;
                termination = Termination::TimeLimit;
                break;
            }
            r => r?,
        };
        match mres.status {
            SolveStatus::Optimal | SolveStatus::Limit => {}
            SolveStatus::Infeasible => {
                return Err(CcgError::Infeasible(
                    "master problem infeasible: no spanning forest satisfies the budgets".into(),
                ))
            }
            SolveStatus::Unbounded => return Err(CcgError::Numerical("master problem unbounded".into())),
        }
        let master_time = t_master.elapsed().as_secs_f64();
        log::debug!("master {:.2}s objective {:.6}", master_time, mres.objective);
        state.lb = state.lb.max(mres.best_bound.min(mres.objective));
        let config = master.configuration(&mres);
        let beta = if params.mode == Mode::Dr {
            master.beta_values(&mres)
        } else {
            vec![0.0; lines * periods]
        };

        let beta_arg = (params.mode == Mode::Dr).then_some(beta.as_slice());
        let sub_params = params.subproblem_params(remaining(deadline));
        let wc = match widened_worst_case(instance, &config, beta_arg, &sub_params, &mut scale, false) {
            Err(CcgError::Solver(SolverError::NoIncumbent)) if state.incumbent.is_some() => {
                state.iteration -= 1;
                termination = Termination::TimeLimit;
                break;
            }
            r => r?,
        };
        log::debug!("subproblem {:.2}s in {} attempt(s)", wc.time_s, wc.attempts);
        let candidate = wc.bound + mu_term(&beta);
        if candidate < state.ub || state.incumbent.is_none() {
            state.ub = state.ub.min(candidate);
            state.incumbent = Some((config.clone(), beta.clone()));
        }
        // Bound discipline against solver noise: the lower bound never
        // exceeds the upper bound.
        if state.lb > state.ub {
            state.lb = state.ub;
        }
        let gap = relative_gap(state.lb, state.ub);
        state.history.push(IterationRecord {
            iteration: state.iteration,
            lb: state.lb,
            ub: state.ub,
            gap,
            master_objective: mres.objective,
            subproblem_objective: wc.bound,
            scenario: wc.scenario.failures().collect(),
            pool_size: state.pool.len(),
            master_time_s: master_time,
            subproblem_time_s: wc.time_s,
        });
        log::info!(
            "iter {} lb {:.6} ub {:.6} gap {:.3e} pool {}",
            state.iteration,
            state.lb,
            state.ub,
            gap,
            state.pool.len()
        );
        let closed = gap <= params.epsilon || state.ub - state.lb <= ABS_GAP;
        let repeated = seen.contains(&wc.scenario);
        let mut next = Some(wc.scenario);
        if closed || repeated {
            // Duals are bounded artificially; before stopping, check the
            // incumbent against bounds ten times wider.
            let (cfg, b) = state.incumbent.clone().expect("set above");
            let b_arg = (params.mode == Mode::Dr).then_some(b.as_slice());
            match attempt(instance, &cfg, b_arg, &params.subproblem_params(remaining(deadline)), scale * 10.0) {
                Ok(v) if v.wc.bound + mu_term(&b) > state.ub + verify_tol(params, state.ub) => {
                    let wider = v.wc.bound + mu_term(&b);
                    log::warn!("wider dual bounds raise the upper bound from {} to {wider}; continuing", state.ub);
                    scale *= 10.0;
                    state.ub = wider;
                    let rec = state.history.last_mut().expect("pushed above");
                    rec.ub = wider;
                    rec.gap = relative_gap(state.lb, wider);
                    if !seen.contains(&v.wc.scenario) {
                        next = Some(v.wc.scenario);
                    } else if repeated {
                        next = None;
                    }
                }
                Ok(_) if closed => {
                    termination = Termination::Converged;
                    break;
                }
                Ok(_) => next = None,
                Err(e) => {
                    log::warn!("verification solve failed ({e}); accepting the current bounds");
                    if closed {
                        termination = Termination::Converged;
                        break;
                    }
                    next = None;
                }
            }
        }
        let Some(scenario) = next else {
            if loose {
                // The lower bound may only reflect the loose master gap.
                log::debug!("pooled scenario returned; re-solving the master tightly");
                tight = true;
                continue;
            }
            log::warn!("subproblem returned a pooled scenario; stopping with gap {gap:.3e}");
            termination = Termination::DuplicateScenario;
            break;
        };
        seen.insert(scenario.clone());
        state.pool.push(scenario);
        if deadline.is_some_and(|d| Instant::now() >= d) {
            termination = Termination::TimeLimit;
            break;
        }
    }

    let (config, beta) = state
        .incumbent
        .clone()
        .ok_or_else(|| CcgError::Numerical("no iteration completed".into()))?;
    Ok(PlanResult {
        config,
        beta,
        objective: state.ub,
        gap: relative_gap(state.lb, state.ub),
        mode: params.mode,
        termination,
        state,
        time_s: start.elapsed().as_secs_f64(),
    })
}

/// One row of a worst-case distribution report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub scenario: usize,
    /// Affected lines as `from-to` node ids.
    pub affected_lines: Vec<String>,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseDistribution {
    pub support: Vec<ContingencyScenario>,
    pub probs: Vec<f64>,
    /// `Q(config, z^j)` recomputed per support scenario.
    pub shed: Vec<f64>,
    pub expected_shed: f64,
    /// Optimal value of the residual LP in `(beta, lambda)`.
    pub residual_objective: f64,
}

impl WorstCaseDistribution {
    /// Scenarios with positive probability, in pool order.
    pub fn rows(&self, instance: &NetworkInstance, min_prob: f64) -> Vec<DistributionRow> {
        let mut out = Vec::new();
        for (j, (z, &p)) in self.support.iter().zip(&self.probs).enumerate() {
            if p <= min_prob {
                continue;
            }
            let affected_lines = z
                .affected_lines()
                .iter()
                .map(|&l| format!("{}-{}", instance.lines[l].from, instance.lines[l].to))
                .collect();
            out.push(DistributionRow {
                scenario: j + 1,
                affected_lines,
                probability: p,
            });
        }
        out
    }

    pub fn max_moment_violation(&self, ambiguity: &AmbiguitySet) -> f64 {
        let mut worst: f64 = 0.0;
        for l in 0..ambiguity.lines() {
            for t in 0..ambiguity.periods() {
                let m: f64 = self
                    .support
                    .iter()
                    .zip(&self.probs)
                    .filter(|(z, _)| !z.works(l, t))
                    .map(|(_, &p)| p)
                    .sum();
                worst = worst.max(m - ambiguity.mu_max(l, t));
            }
        }
        worst
    }
}

/// Recovers the worst-case distribution of a converged DR plan: the final
/// master is rebuilt with the configuration and every recourse block fixed
/// (blocks at freshly optimised restoration solutions, so each cut carries
/// `Q(config, z^j)`), leaving an LP in `(beta, lambda)` whose cut duals are
/// the scenario probabilities.
pub fn extract_worst_case_distribution(
    instance: &NetworkInstance,
    ambiguity: &AmbiguitySet,
    result: &PlanResult,
) -> Result<WorstCaseDistribution, CcgError> {
    if result.mode != Mode::Dr {
        return Err(CcgError::Numerical("worst-case distribution needs a DR plan".into()));
    }
    let pool = &result.state.pool;
    let master = build_master(instance, pool, ambiguity, Mode::Dr);
    let mut config = result.config.clone();
    config.f = tree_flow(instance, &config.y);

    let mut fixed: HashMap<VarId, f64> = HashMap::new();
    for (l, &v) in master.first.y.iter().enumerate() {
        fixed.insert(v, if config.y[l] { 1.0 } else { 0.0 });
    }
    for (n, v) in master.first.w.iter().enumerate() {
        if let Some(v) = v {
            fixed.insert(*v, if config.w[n] { 1.0 } else { 0.0 });
        }
    }
    for (e, &v) in master.first.f.iter().enumerate() {
        fixed.insert(v, config.f[e]);
    }
    let mut shed = Vec::with_capacity(pool.len());
    for (j, z) in pool.iter().enumerate() {
        let (q, vars, sol) = restoration_solution(instance, &config, z)?;
        fix_block(&master, j, &vars, &sol, &mut fixed);
        shed.push(q);
    }
    let mut residual = master
        .model
        .substitute(&fixed, 1e-3)
        .map_err(|row| CcgError::Numerical(format!("fixed recourse violates {row}")))?;
    let lambda = residual.var_id("lambda").expect("lambda survives substitution");
    residual.set_bounds(lambda, f64::NEG_INFINITY, f64::INFINITY);
    let res = solve(&residual, &SolveParams::default())?;
    if res.status != SolveStatus::Optimal {
        return Err(CcgError::Numerical(format!("residual LP ended {:?}", res.status)));
    }
    let probs: Vec<f64> = (0..pool.len())
        .map(|j| {
            let row = residual.row_id(&format!("cut[{j}]")).expect("cut rows survive substitution");
            let p = res.dual(row).unwrap_or(0.0);
            if p.abs() < 1e-12 {
                0.0
            } else {
                p
            }
        })
        .collect();
    let expected_shed = probs.iter().zip(&shed).map(|(p, q)| p * q).sum();
    Ok(WorstCaseDistribution {
        support: pool.clone(),
        probs,
        shed,
        expected_shed,
        residual_objective: res.objective,
    })
}

fn fix_block(master: &Master, j: usize, vars: &BlockVars, sol: &SolveResult, fixed: &mut HashMap<VarId, f64>) {
    let block = &master.blocks[j];
    let pairs = [
        (&block.p, &vars.p),
        (&block.q, &vars.q),
        (&block.xp, &vars.xp),
        (&block.xq, &vars.xq),
        (&block.s, &vars.s),
    ];
    for (mv, rv) in pairs {
        for (mrow, rrow) in mv.iter().zip(rv) {
            for (m, r) in mrow.iter().zip(rrow) {
                if let Some(m) = m {
                    fixed.insert(*m, r.map_or(0.0, |r| sol.value(r)));
                }
            }
        }
    }
    for (mrow, rrow) in block.v.iter().zip(&vars.v) {
        for (m, r) in mrow.iter().zip(rrow) {
            fixed.insert(*m, sol.value(*r));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fixture;

    #[test]
    fn no_outages_converge_in_one_iteration() {
        let mut inst = fixture("four_node").unwrap();
        inst.n_z = 0;
        let amb = AmbiguitySet::from_instance(&inst);
        let r = run_ccg(&inst, &amb, &CcgParams::new(Mode::Dr, 1e-6)).unwrap();
        assert_eq!(r.state.iteration, 1);
        assert!(r.converged());
        assert!(r.objective.abs() < 1e-6);
    }

    #[test]
    fn two_node_hand_value() {
        let inst = fixture("two_node").unwrap();
        let amb = AmbiguitySet::from_instance(&inst);
        let r = run_ccg(&inst, &amb, &CcgParams::new(Mode::Dr, 1e-6)).unwrap();
        assert!(r.converged());
        // DG covers 60 of the 100 KW load when the line fails w.p. 0.05.
        assert!((r.objective - 2.0).abs() < 1e-6, "{}", r.objective);
        assert_eq!(r.config.w, vec![false, true]);
        let wcd = extract_worst_case_distribution(&inst, &amb, &r).unwrap();
        assert!((wcd.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((wcd.expected_shed - 2.0).abs() < 1e-6);
        let rows = wcd.rows(&inst, 1e-9);
        assert_eq!(rows.len(), 2);

        let ro = run_ccg(&inst, &amb, &CcgParams::new(Mode::Ro, 1e-6)).unwrap();
        assert!((ro.objective - 40.0).abs() < 1e-6);
        assert!(extract_worst_case_distribution(&inst, &amb, &ro).is_err());
    }

    #[test]
    fn zero_mu_collapses_to_nominal() {
        let inst = fixture("four_node").unwrap();
        let amb = AmbiguitySet::uniform(inst.line_count(), 1, 0.0);
        let r = run_ccg(&inst, &amb, &CcgParams::new(Mode::Dr, 1e-6)).unwrap();
        let q = restoration_value(&inst, &r.config, &ContingencyScenario::for_instance(&inst)).unwrap();
        assert!((r.objective - q).abs() < 1e-6);
        let wcd = extract_worst_case_distribution(&inst, &amb, &r).unwrap();
        let ones = ContingencyScenario::for_instance(&inst);
        let mass: f64 = wcd
            .support
            .iter()
            .zip(&wcd.probs)
            .filter(|(z, _)| **z == ones)
            .map(|(_, p)| p)
            .sum();
        assert!((mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gap_guard() {
        assert_eq!(relative_gap(0.0, 0.0), 0.0);
        assert!(relative_gap(f64::NEG_INFINITY, 1.0).is_infinite());
        assert!((relative_gap(2.0, 2.2) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn budget_too_small_is_reported() {
        let mut inst = fixture("four_node").unwrap();
        inst.budget_cost = 10.0;
        let amb = AmbiguitySet::from_instance(&inst);
        assert!(matches!(
            run_ccg(&inst, &amb, &CcgParams::default()),
            Err(CcgError::Infeasible(_))
        ));
    }
}
