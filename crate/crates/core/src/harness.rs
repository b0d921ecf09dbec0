//! Out-of-sample evaluation, the DR-vs-RO comparison, the DG placement
//! study, budget/contingency sweeps, and report files.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ccg::{
    extract_worst_case_distribution, run_ccg, worst_case, CcgError, CcgParams, PlanResult, Termination,
    WorstCaseDistribution,
};
use crate::formulation::{check_configuration, Configuration, Mode};
use crate::grid::NetworkInstance;
use crate::opt::SolveParams;
use crate::oracle::{exact_worst_case_expectation, exact_worst_case_scenario, OracleError, OracleLimits, RecourseCache};
use crate::rng::{indexed_substream, substream, Stream};
use crate::scenario::{sample_distribution, AmbiguitySet, ContingencyScenario};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Ccg(#[from] CcgError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("configuration is not feasible: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// How WCD and WCS are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// Converged CCG with the configuration fixed, and the robust subproblem.
    Ccg,
    /// Enumeration; tiny instances only.
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalParams {
    pub samples: usize,
    pub seed: u64,
    pub mode: EvalMode,
    pub ccg: CcgParams,
    pub limits: OracleLimits,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            samples: 20,
            seed: 0,
            mode: EvalMode::Ccg,
            ccg: CcgParams::default(),
            limits: OracleLimits::default(),
        }
    }
}

/// Shedding of one configuration under three criteria, KW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub config: Configuration,
    /// Worst-case expected shedding.
    pub wcd: f64,
    /// Worst-case scenario shedding.
    pub wcs: f64,
    /// Mean expected shedding over sampled distributions.
    pub sim: f64,
    /// Standard deviation of the per-distribution expectations.
    pub sim_std: f64,
    /// Shedding without outages.
    pub nominal: f64,
    /// Planning wall time of the configuration.
    pub time_s: f64,
    pub sample_count: usize,
    pub seed: u64,
    pub mode: EvalMode,
}

/// Seed of the `i`-th sampled distribution.
pub fn replication_seed(seed: u64, i: usize) -> u64 {
    indexed_substream(seed, Stream::Sampler, i as u64).gen()
}

pub fn evaluate_configuration(
    instance: &NetworkInstance,
    config: &Configuration,
    ambiguity: &AmbiguitySet,
    params: &EvalParams,
) -> Result<EvaluationReport, HarnessError> {
    check_configuration(instance, config).map_err(HarnessError::Config)?;
    let mut cache = RecourseCache::new(instance, config);
    let nominal = cache.value(&ContingencyScenario::for_instance(instance))?;
    let (wcd, wcs) = match params.mode {
        EvalMode::Oracle => (
            exact_worst_case_expectation(instance, config, ambiguity, params.limits.scenarios)?.value,
            exact_worst_case_scenario(instance, config, params.limits.scenarios)?.1,
        ),
        EvalMode::Ccg => {
            let fixed = CcgParams {
                mode: Mode::Dr,
                fixed_config: Some(config.clone()),
                fixed_dg: None,
                ..params.ccg.clone()
            };
            let wcd = run_ccg(instance, ambiguity, &fixed)?.objective;
            // WCS is reported, so solve it tighter than CCG needs.
            let sp = SolveParams {
                mip_gap: 1e-7,
                ..fixed.subproblem_params(None)
            };
            (wcd, worst_case(instance, config, None, &sp)?.q)
        }
    };
    let mut values = Vec::with_capacity(params.samples);
    for i in 0..params.samples {
        let dist = sample_distribution(ambiguity, instance, replication_seed(params.seed, i));
        let mut e = 0.0;
        for (z, p) in dist.support.iter().zip(&dist.probs) {
            e += p * cache.value(z)?;
        }
        values.push(e);
    }
    let (sim, sim_std) = mean_std(&values);
    Ok(EvaluationReport {
        config: config.clone(),
        wcd,
        wcs,
        sim,
        sim_std,
        nominal,
        time_s: 0.0,
        sample_count: params.samples,
        seed: params.seed,
        mode: params.mode,
    })
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub dr: EvaluationReport,
    pub ro: EvaluationReport,
    pub dr_plan: PlanSummary,
    pub ro_plan: PlanSummary,
    /// `100 (RO - DR) / RO` per criterion; positive when DR sheds less.
    pub wcd_reduction_pct: f64,
    pub wcs_reduction_pct: f64,
    pub sim_reduction_pct: f64,
    pub summary: String,
}

/// Runs both models and cross-evaluates their configurations.
pub fn compare(
    instance: &NetworkInstance,
    ambiguity: &AmbiguitySet,
    params: &EvalParams,
) -> Result<Comparison, HarnessError> {
    let dr_plan = run_ccg(instance, ambiguity, &CcgParams { mode: Mode::Dr, ..params.ccg.clone() })?;
    let ro_plan = run_ccg(instance, ambiguity, &CcgParams { mode: Mode::Ro, ..params.ccg.clone() })?;
    let mut dr = evaluate_configuration(instance, &dr_plan.config, ambiguity, params)?;
    let mut ro = evaluate_configuration(instance, &ro_plan.config, ambiguity, params)?;
    dr.time_s = dr_plan.time_s;
    ro.time_s = ro_plan.time_s;
    let pct = |r: f64, d: f64| if r.abs() > 1e-12 { 100.0 * (r - d) / r } else { 0.0 };
    let wcd_reduction_pct = pct(ro.wcd, dr.wcd);
    let wcs_reduction_pct = pct(ro.wcs, dr.wcs);
    let sim_reduction_pct = pct(ro.sim, dr.sim);
    let summary = format!(
        "DR vs RO: {:.1}% reduction in average load shedding (Sim), {:.1}% under the worst-case distribution, {:.1}% in the worst-case scenario",
        sim_reduction_pct, wcd_reduction_pct, wcs_reduction_pct
    );
    Ok(Comparison {
        dr_plan: PlanSummary::new(&dr_plan),
        ro_plan: PlanSummary::new(&ro_plan),
        dr,
        ro,
        wcd_reduction_pct,
        wcs_reduction_pct,
        sim_reduction_pct,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgStudy {
    pub trials: usize,
    pub optimal_dr: f64,
    pub optimal_ro: f64,
    /// Averages over the random placements.
    pub random_dr: f64,
    pub random_ro: f64,
    pub placements: Vec<Vec<usize>>,
    pub optimal_dg_dr: Vec<usize>,
    pub optimal_dg_ro: Vec<usize>,
}

/// Random DG placement of `budget_dg` candidates per trial.
pub fn random_placements(instance: &NetworkInstance, trials: usize, seed: u64) -> Vec<Vec<bool>> {
    let cands = instance.dg_candidates();
    let k = instance.budget_dg.min(cands.len());
    let mut rng = substream(seed, Stream::Placement);
    (0..trials)
        .map(|_| {
            let mut w = vec![false; instance.node_count()];
            for &n in cands.choose_multiple(&mut rng, k) {
                w[n] = true;
            }
            w
        })
        .collect()
}

/// Optimal versus random DG placement, each with optimal lines.
pub fn dg_value_study(
    instance: &NetworkInstance,
    ambiguity: &AmbiguitySet,
    trials: usize,
    seed: u64,
    ccg: &CcgParams,
) -> Result<DgStudy, HarnessError> {
    let run = |mode: Mode, w: Option<Vec<bool>>| {
        run_ccg(
            instance,
            ambiguity,
            &CcgParams {
                mode,
                fixed_dg: w,
                fixed_config: None,
                ..ccg.clone()
            },
        )
    };
    let dr = run(Mode::Dr, None)?;
    let ro = run(Mode::Ro, None)?;
    let placements = random_placements(instance, trials, seed);
    let (mut rdr, mut rro) = (0.0, 0.0);
    for w in &placements {
        rdr += run(Mode::Dr, Some(w.clone()))?.objective;
        rro += run(Mode::Ro, Some(w.clone()))?.objective;
    }
    let n = trials.max(1) as f64;
    Ok(DgStudy {
        trials,
        optimal_dr: dr.objective,
        optimal_ro: ro.objective,
        random_dr: rdr / n,
        random_ro: rro / n,
        placements: placements
            .iter()
            .map(|w| (0..w.len()).filter(|&i| w[i]).collect())
            .collect(),
        optimal_dg_dr: dr.config.dg_nodes(),
        optimal_dg_ro: ro.config.dg_nodes(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub budget_cost: f64,
    pub n_z: usize,
    /// Objective of the run; `None` when the budget admits no forest.
    pub shed_kw: Option<f64>,
    pub gap: f64,
    pub time_s: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub mode: Mode,
    pub points: Vec<SweepPoint>,
    /// Monotonicity violations beyond the reported gaps.
    pub violations: Vec<String>,
}

impl SweepReport {
    pub fn point(&self, budget_cost: f64, n_z: usize) -> Option<&SweepPoint> {
        self.points
            .iter()
            .find(|p| p.budget_cost == budget_cost && p.n_z == n_z)
    }

    pub fn write_csv(&self, w: impl std::io::Write) -> Result<(), HarnessError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["B_y", "N_z", "shed_kw", "gap", "time_s"])?;
        for p in &self.points {
            out.write_record([
                fmt_num(p.budget_cost),
                p.n_z.to_string(),
                p.shed_kw.map_or_else(|| "infeasible".into(), fmt_num),
                fmt_num(p.gap),
                fmt_num(p.time_s),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Independent CCG run per grid point on up to `jobs` threads. Results are
/// ordered by grid position regardless of completion order.
pub fn sweep(
    instance: &NetworkInstance,
    ambiguity: &AmbiguitySet,
    by_grid: &[f64],
    nz_grid: &[usize],
    ccg: &CcgParams,
    jobs: usize,
) -> Result<SweepReport, HarnessError> {
    let grid: Vec<(f64, usize)> = by_grid
        .iter()
        .flat_map(|&b| nz_grid.iter().map(move |&n| (b, n)))
        .collect();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<SweepPoint, CcgError>>>> = Mutex::new((0..grid.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, grid.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= grid.len() {
                    break;
                }
                let (b, n) = grid[i];
                let mut inst = instance.clone();
                inst.budget_cost = b;
                inst.n_z = n;
                let r = match run_ccg(&inst, ambiguity, ccg) {
                    Ok(plan) => Ok(SweepPoint {
                        budget_cost: b,
                        n_z: n,
                        shed_kw: Some(plan.objective),
                        gap: plan.gap,
                        time_s: plan.time_s,
                        converged: plan.converged(),
                    }),
                    Err(CcgError::Infeasible(_)) => Ok(SweepPoint {
                        budget_cost: b,
                        n_z: n,
                        shed_kw: None,
                        gap: 0.0,
                        time_s: 0.0,
                        converged: true,
                    }),
                    Err(e) => Err(e),
                };
                results.lock().expect("no panics while holding the lock")[i] = Some(r);
            });
        }
    });
    let mut points = Vec::with_capacity(grid.len());
    for r in results.into_inner().expect("workers joined") {
        points.push(r.expect("every grid point ran")?);
    }
    let violations = monotonicity_violations(&points, by_grid, nz_grid);
    Ok(SweepReport {
        mode: ccg.mode,
        points,
        violations,
    })
}

/// Shed must not rise with the budget nor fall with the outage count, up to
/// the larger of the two points' absolute gaps.
pub fn monotonicity_violations(points: &[SweepPoint], by_grid: &[f64], nz_grid: &[usize]) -> Vec<String> {
    let at = |b: f64, n: usize| points.iter().find(|p| p.budget_cost == b && p.n_z == n);
    let slack = |p: &SweepPoint| p.shed_kw.map_or(0.0, |v| p.gap * v.abs()) + 1e-6;
    let mut out = Vec::new();
    let mut by: Vec<f64> = by_grid.to_vec();
    by.sort_by(f64::total_cmp);
    let mut nz: Vec<usize> = nz_grid.to_vec();
    nz.sort_unstable();
    for &n in &nz {
        for w in by.windows(2) {
            if let (Some(a), Some(b)) = (at(w[0], n), at(w[1], n)) {
                if let (Some(sa), Some(sb)) = (a.shed_kw, b.shed_kw) {
                    if sb > sa + slack(a).max(slack(b)) {
                        out.push(format!(
                            "N_z={n}: shed rises from {sa} to {sb} as B_y goes {} -> {}",
                            w[0], w[1]
                        ));
                    }
                }
            }
        }
    }
    for &b in &by {
        for w in nz.windows(2) {
            if let (Some(a), Some(c)) = (at(b, w[0]), at(b, w[1])) {
                if let (Some(sa), Some(sc)) = (a.shed_kw, c.shed_kw) {
                    if sc < sa - slack(a).max(slack(c)) {
                        out.push(format!(
                            "B_y={b}: shed falls from {sa} to {sc} as N_z goes {} -> {}",
                            w[0], w[1]
                        ));
                    }
                }
            }
        }
    }
    out
}

/// Serializable view of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub mode: Mode,
    pub objective: f64,
    pub lb: f64,
    pub ub: f64,
    pub gap: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub converged: bool,
    pub built_lines: Vec<usize>,
    pub dg_nodes: Vec<usize>,
    pub build_cost: f64,
    pub time_s: f64,
}

impl PlanSummary {
    pub fn new(plan: &PlanResult) -> Self {
        Self {
            mode: plan.mode,
            objective: plan.objective,
            lb: plan.state.lb,
            ub: plan.state.ub,
            gap: plan.gap,
            iterations: plan.state.iteration,
            termination: plan.termination,
            converged: plan.converged(),
            built_lines: plan.config.built_lines(),
            dg_nodes: plan.config.dg_nodes(),
            build_cost: 0.0,
            time_s: plan.time_s,
        }
    }

    pub fn with_instance(mut self, instance: &NetworkInstance) -> Self {
        self.build_cost = self
            .built_lines
            .iter()
            .map(|&l| instance.lines[l].cost)
            .sum();
        self
    }
}

/// Fixed-precision number formatting shared by every report.
pub fn fmt_num(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{x:.1}")
    } else {
        format!("{x:.6}")
    }
}

/// Per-iteration trace as CSV.
pub fn write_trace(plan: &PlanResult, w: impl std::io::Write, timing: bool) -> Result<(), HarnessError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["iteration", "lb", "ub", "gap", "pool_size", "failures", "master_s", "subproblem_s"])?;
    for h in &plan.state.history {
        let failures: Vec<String> = h.scenario.iter().map(|(l, t)| format!("{l}@{t}")).collect();
        let t = |x: f64| if timing { fmt_num(x) } else { fmt_num(0.0) };
        out.write_record([
            h.iteration.to_string(),
            fmt_num(h.lb),
            fmt_num(h.ub),
            fmt_num(h.gap),
            h.pool_size.to_string(),
            failures.join(" "),
            t(h.master_time_s),
            t(h.subproblem_time_s),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Distribution report: one entry per scenario with positive probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub expected_shed: f64,
    pub probability_sum: f64,
    pub max_moment_violation: f64,
    pub rows: Vec<crate::ccg::DistributionRow>,
}

impl DistributionReport {
    pub fn new(instance: &NetworkInstance, ambiguity: &AmbiguitySet, wcd: &WorstCaseDistribution) -> Self {
        Self {
            expected_shed: wcd.expected_shed,
            probability_sum: wcd.probs.iter().sum(),
            max_moment_violation: wcd.max_moment_violation(ambiguity),
            rows: wcd.rows(instance, 1e-9),
        }
    }
}

/// Writes `plan.json`, `trace.csv` and, for DR plans, `wcd.json` into `dir`.
pub fn write_plan_artifacts(
    dir: &Path,
    instance: &NetworkInstance,
    ambiguity: &AmbiguitySet,
    plan: &PlanResult,
    timing: bool,
) -> Result<Option<DistributionReport>, HarnessError> {
    std::fs::create_dir_all(dir)?;
    let mut summary = PlanSummary::new(plan).with_instance(instance);
    if !timing {
        summary.time_s = 0.0;
    }
    std::fs::write(dir.join("plan.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    write_trace(plan, std::fs::File::create(dir.join("trace.csv"))?, timing)?;
    if plan.mode == Mode::Dr {
        let wcd = extract_worst_case_distribution(instance, ambiguity, plan)?;
        let report = DistributionReport::new(instance, ambiguity, &wcd);
        std::fs::write(dir.join("wcd.json"), serde_json::to_string_pretty(&report)? + "\n")?;
        return Ok(Some(report));
    }
    Ok(None)
}

/// Table-I-shaped rows: one per model with WCD, WCS, Sim and Time.
pub fn write_comparison_csv(
    label: &str,
    cmp: &Comparison,
    w: impl std::io::Write,
    timing: bool,
) -> Result<(), HarnessError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["instance", "model", "wcd", "wcs", "sim", "time_s"])?;
    for (model, r) in [("dr", &cmp.dr), ("ro", &cmp.ro)] {
        out.write_record([
            label.to_string(),
            model.to_string(),
            fmt_num(r.wcd),
            fmt_num(r.wcs),
            fmt_num(r.sim),
            fmt_num(if timing { r.time_s } else { 0.0 }),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Wall time helper for callers that time whole studies.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed().as_secs_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fixture;

    #[test]
    fn zero_failure_ambiguity_collapses() {
        let inst = fixture("four_node").unwrap();
        let amb = AmbiguitySet::uniform(inst.line_count(), 1, 0.0);
        let mut inst0 = inst.clone();
        inst0.n_z = 0;
        let cfg = Configuration::from_parts(&inst, &[0, 1, 2], &[3]);
        for mode in [EvalMode::Oracle, EvalMode::Ccg] {
            let p = EvalParams {
                mode,
                samples: 3,
                ..EvalParams::default()
            };
            let r = evaluate_configuration(&inst0, &cfg, &amb, &p).unwrap();
            assert!((r.wcd - r.nominal).abs() < 1e-6);
            assert!((r.wcs - r.nominal).abs() < 1e-6);
            assert!((r.sim - r.nominal).abs() < 1e-6);
        }
    }

    #[test]
    fn sandwich_in_oracle_mode() {
        let inst = fixture("seven_node").unwrap();
        let amb = AmbiguitySet::from_instance(&inst);
        let cfg = Configuration::from_parts(&inst, &[0, 2, 3, 5, 7], &[3]);
        let p = EvalParams {
            mode: EvalMode::Oracle,
            samples: 5,
            seed: 3,
            ..EvalParams::default()
        };
        let r = evaluate_configuration(&inst, &cfg, &amb, &p).unwrap();
        assert!(r.nominal <= r.sim + 1e-9);
        assert!(r.sim <= r.wcd + 1e-5);
        assert!(r.wcd <= r.wcs + 1e-5);
        let again = evaluate_configuration(&inst, &cfg, &amb, &p).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn placements_respect_budget() {
        let inst = fixture("seven_node").unwrap();
        let ps = random_placements(&inst, 5, 11);
        assert_eq!(ps.len(), 5);
        for w in &ps {
            let nodes: Vec<usize> = (0..w.len()).filter(|&i| w[i]).collect();
            assert_eq!(nodes.len(), inst.budget_dg);
            assert!(nodes.iter().all(|&n| inst.nodes[n].dg_candidate));
        }
        assert_eq!(ps, random_placements(&inst, 5, 11));
    }

    #[test]
    fn monotonicity_flags() {
        let pt = |b: f64, n: usize, s: f64| SweepPoint {
            budget_cost: b,
            n_z: n,
            shed_kw: Some(s),
            gap: 0.0,
            time_s: 0.0,
            converged: true,
        };
        let ok = vec![pt(1.0, 0, 5.0), pt(2.0, 0, 4.0), pt(1.0, 1, 6.0), pt(2.0, 1, 6.0)];
        assert!(monotonicity_violations(&ok, &[1.0, 2.0], &[0, 1]).is_empty());
        let bad = vec![pt(1.0, 0, 5.0), pt(2.0, 0, 7.0), pt(1.0, 1, 4.0), pt(2.0, 1, 8.0)];
        assert_eq!(monotonicity_violations(&bad, &[1.0, 2.0], &[0, 1]).len(), 3);
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(2.0), "2.0");
        assert_eq!(fmt_num(0.125), "0.125000");
    }
}
