use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use gridplan_core::ccg::{run_ccg, CcgError, CcgParams};
use gridplan_core::fixtures;
use gridplan_core::formulation::{Configuration, Mode};
use gridplan_core::harness::{
    compare, dg_value_study, evaluate_configuration, fmt_num, sweep, write_comparison_csv, write_plan_artifacts,
    EvalMode, EvalParams, HarnessError, PlanSummary,
};
use gridplan_core::opt::{solver_by_name, SOLVER_ENV};
use gridplan_core::oracle::{exact_plan, exact_worst_case_expectation, OracleError, OracleLimits};
use gridplan_core::{generate_instance, load_instance, AmbiguitySet, InstanceError, InstanceTemplate, NetworkInstance};

const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "gridplan", version, about = "Distribution network expansion planning under contingency uncertainty")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan lines and DG placement with column-and-constraint generation.
    Plan(PlanArgs),
    /// Evaluate a planned configuration (WCD, WCS, Sim).
    Evaluate(EvaluateArgs),
    /// Plan with both models and cross-evaluate.
    Compare(CompareArgs),
    /// Plan over a grid of line budgets and outage counts.
    Sweep(SweepArgs),
    /// Exact enumeration on tiny instances, checked against CCG.
    Oracle(OracleArgs),
    /// Write a seeded random instance.
    Generate(GenerateArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Instance file, or `fixture:NAME` for a bundled fixture.
    #[arg(long)]
    instance: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative optimality gap.
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    #[arg(long, default_value = "dr")]
    mode: Mode,
    /// Directory for report files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = SOLVER_ENV)]
    solver: Option<String>,
    /// Wall-clock limit per planning run, seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    /// Solver threads.
    #[arg(long, default_value_t = 1)]
    threads: u32,
    /// Override the instance's outage budget.
    #[arg(long)]
    n_z: Option<usize>,
    /// Write zeros instead of wall times so reports are reproducible.
    #[arg(long)]
    no_timing: bool,
    /// Log progress (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

impl Common {
    fn ccg(&self) -> CcgParams {
        CcgParams {
            epsilon: self.epsilon,
            max_iter: self.max_iter,
            mode: self.mode,
            time_limit: self.time_limit,
            threads: self.threads,
            seed: self.seed as i32,
            ..CcgParams::default()
        }
    }

    fn instance(&self) -> Result<NetworkInstance> {
        let spec = self.instance.as_deref().context("--instance is required")?;
        let mut inst = if let Some(name) = spec.strip_prefix("fixture:") {
            fixtures::fixture(name)
                .with_context(|| format!("unknown fixture {name}; known: {}", fixtures::NAMES.join(", ")))?
        } else {
            load_instance(spec)?
        };
        if let Some(n) = self.n_z {
            inst.n_z = n;
        }
        Ok(inst)
    }

    fn time(&self, t: f64) -> f64 {
        if self.no_timing {
            0.0
        } else {
            t
        }
    }

    fn out_dir(&self) -> Result<Option<&Path>> {
        if let Some(d) = &self.out {
            std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        }
        Ok(self.out.as_deref())
    }
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: Common,
    /// `plan.json` written by `plan`; plans first when omitted.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Sampled distributions for Sim.
    #[arg(long, default_value_t = 20)]
    samples: usize,
    /// Compute WCD and WCS by enumeration.
    #[arg(long)]
    exact: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long)]
    exact: bool,
    /// Also run the DG placement study with this many random placements.
    #[arg(long)]
    dg_trials: Option<usize>,
    /// Row label in the table.
    #[arg(long)]
    label: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Line budgets; defaults to 0.9, 1.0 and 1.2 times the instance budget.
    #[arg(long, value_delimiter = ',')]
    budgets: Vec<f64>,
    /// Outage counts.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0usize, 1, 2])]
    nz: Vec<usize>,
    /// Parallel planning runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 20_000)]
    scenario_limit: usize,
    #[arg(long, default_value_t = 5_000)]
    config_limit: usize,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    /// Standard system: 33 or 69 nodes with their substations and DG counts.
    #[arg(long)]
    case: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    /// One-based substation ids.
    #[arg(long, value_delimiter = ',')]
    substations: Vec<usize>,
    #[arg(long)]
    dg: Option<usize>,
    #[arg(long, default_value_t = 24)]
    periods: usize,
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    extra_ties: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Plan(a) => &a.common,
        Command::Evaluate(a) => &a.common,
        Command::Compare(a) => &a.common,
        Command::Sweep(a) => &a.common,
        Command::Oracle(a) => &a.common,
        Command::Generate(a) => &a.common,
    };
    let level = match common.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    let run = || -> Result<bool> {
        solver_by_name(common.solver.as_deref())?;
        match &cli.command {
            Command::Plan(a) => plan(a),
            Command::Evaluate(a) => evaluate(a),
            Command::Compare(a) => compare_cmd(a),
            Command::Sweep(a) => sweep_cmd(a),
            Command::Oracle(a) => oracle(a),
            Command::Generate(a) => generate(a),
        }
    };
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_NOT_CONVERGED),
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_infeasible(&e) {
                ExitCode::from(EXIT_INFEASIBLE)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn is_infeasible(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        matches!(c.downcast_ref::<InstanceError>(), Some(InstanceError::Infeasible(_)))
            || matches!(c.downcast_ref::<CcgError>(), Some(CcgError::Infeasible(_)))
            || matches!(
                c.downcast_ref::<HarnessError>(),
                Some(HarnessError::Ccg(CcgError::Infeasible(_)))
            )
            || matches!(c.downcast_ref::<OracleError>(), Some(OracleError::Infeasible))
    })
}

fn write_json(dir: Option<&Path>, name: &str, value: &impl serde::Serialize) -> Result<()> {
    if let Some(d) = dir {
        let path = d.join(name);
        std::fs::write(&path, serde_json::to_string_pretty(value)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn plan(a: &PlanArgs) -> Result<bool> {
    let c = &a.common;
    let inst = c.instance()?;
    let amb = AmbiguitySet::from_instance(&inst);
    let result = run_ccg(&inst, &amb, &c.ccg())?;
    let out = c.out_dir()?;
    let wcd = match out {
        Some(d) => write_plan_artifacts(d, &inst, &amb, &result, !c.no_timing)?,
        None => None,
    };
    println!("mode: {}", result.mode);
    println!("objective: {}", fmt_num(result.objective));
    println!("lower bound: {}", fmt_num(result.state.lb));
    println!("gap: {}", fmt_num(result.gap));
    println!("iterations: {}", result.state.iteration);
    println!("termination: {:?}", result.termination);
    println!("built lines: {:?}", line_labels(&inst, &result.config));
    println!("dg nodes: {:?}", node_labels(&inst, &result.config));
    println!("time_s: {}", fmt_num(c.time(result.time_s)));
    if let Some(w) = wcd {
        println!("worst-case distribution (expected shed {}):", fmt_num(w.expected_shed));
        for r in &w.rows {
            let lines = if r.affected_lines.is_empty() { "none".to_string() } else { r.affected_lines.join(" ") };
            println!("  scenario {}: p={} failed: {lines}", r.scenario, fmt_num(r.probability));
        }
    }
    Ok(result.converged())
}

fn line_labels(inst: &NetworkInstance, cfg: &Configuration) -> Vec<String> {
    cfg.built_lines()
        .iter()
        .map(|&l| format!("{}-{}", inst.lines[l].from, inst.lines[l].to))
        .collect()
}

fn node_labels(inst: &NetworkInstance, cfg: &Configuration) -> Vec<String> {
    cfg.dg_nodes().iter().map(|&n| inst.nodes[n].id.to_string()).collect()
}

fn eval_params(c: &Common, samples: usize, exact: bool) -> EvalParams {
    EvalParams {
        samples,
        seed: c.seed,
        mode: if exact { EvalMode::Oracle } else { EvalMode::Ccg },
        ccg: c.ccg(),
        limits: OracleLimits::default(),
    }
}

fn evaluate(a: &EvaluateArgs) -> Result<bool> {
    let c = &a.common;
    let inst = c.instance()?;
    let amb = AmbiguitySet::from_instance(&inst);
    let (config, converged, time_s) = match &a.plan {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let s: PlanSummary = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            if s.built_lines.iter().any(|&l| l >= inst.line_count()) || s.dg_nodes.iter().any(|&n| n >= inst.node_count())
            {
                bail!("plan does not match the instance");
            }
            (Configuration::from_parts(&inst, &s.built_lines, &s.dg_nodes), true, s.time_s)
        }
        None => {
            let r = run_ccg(&inst, &amb, &c.ccg())?;
            (r.config.clone(), r.converged(), r.time_s)
        }
    };
    let mut report = evaluate_configuration(&inst, &config, &amb, &eval_params(c, a.samples, a.exact))?;
    report.time_s = c.time(time_s);
    write_json(c.out_dir()?, "evaluation.json", &report)?;
    println!("wcd: {}", fmt_num(report.wcd));
    println!("wcs: {}", fmt_num(report.wcs));
    println!("sim: {} (std {}, {} samples)", fmt_num(report.sim), fmt_num(report.sim_std), report.sample_count);
    println!("nominal: {}", fmt_num(report.nominal));
    Ok(converged)
}

fn compare_cmd(a: &CompareArgs) -> Result<bool> {
    let c = &a.common;
    let inst = c.instance()?;
    let amb = AmbiguitySet::from_instance(&inst);
    let mut cmp = compare(&inst, &amb, &eval_params(c, a.samples, a.exact))?;
    if c.no_timing {
        for r in [&mut cmp.dr, &mut cmp.ro] {
            r.time_s = 0.0;
        }
        cmp.dr_plan.time_s = 0.0;
        cmp.ro_plan.time_s = 0.0;
    }
    let label = a
        .label
        .clone()
        .or_else(|| c.instance.clone())
        .unwrap_or_default();
    let out = c.out_dir()?;
    write_json(out, "comparison.json", &cmp)?;
    if let Some(d) = out {
        write_comparison_csv(&label, &cmp, std::fs::File::create(d.join("table.csv"))?, !c.no_timing)?;
    }
    write_comparison_csv(&label, &cmp, std::io::stdout(), !c.no_timing)?;
    println!("{}", cmp.summary);
    if let Some(trials) = a.dg_trials {
        let study = dg_value_study(&inst, &amb, trials, c.seed, &c.ccg())?;
        write_json(out, "dg_study.json", &study)?;
        println!(
            "optimal DG: dr {} ro {}; random DG ({} trials): dr {} ro {}",
            fmt_num(study.optimal_dr),
            fmt_num(study.optimal_ro),
            study.trials,
            fmt_num(study.random_dr),
            fmt_num(study.random_ro)
        );
    }
    Ok(cmp.dr_plan.converged && cmp.ro_plan.converged)
}

fn sweep_cmd(a: &SweepArgs) -> Result<bool> {
    let c = &a.common;
    let inst = c.instance()?;
    let amb = AmbiguitySet::from_instance(&inst);
    let budgets = if a.budgets.is_empty() {
        vec![0.9 * inst.budget_cost, inst.budget_cost, 1.2 * inst.budget_cost]
    } else {
        a.budgets.clone()
    };
    let mut report = sweep(&inst, &amb, &budgets, &a.nz, &c.ccg(), a.jobs)?;
    if c.no_timing {
        for p in &mut report.points {
            p.time_s = 0.0;
        }
    }
    let out = c.out_dir()?;
    if let Some(d) = out {
        report.write_csv(std::fs::File::create(d.join("sweep.csv"))?)?;
    }
    write_json(out, "sweep.json", &report)?;
    report.write_csv(std::io::stdout())?;
    for v in &report.violations {
        println!("monotonicity: {v}");
    }
    Ok(report.points.iter().all(|p| p.converged))
}

#[derive(serde::Serialize)]
struct OracleReport {
    mode: Mode,
    exact_objective: f64,
    exact_built_lines: Vec<usize>,
    exact_dg_nodes: Vec<usize>,
    configurations: usize,
    ccg_objective: f64,
    ccg_gap: f64,
    delta: f64,
    distribution: Vec<(String, f64)>,
}

fn oracle(a: &OracleArgs) -> Result<bool> {
    let c = &a.common;
    let inst = c.instance()?;
    let amb = AmbiguitySet::from_instance(&inst);
    let limits = OracleLimits {
        scenarios: a.scenario_limit,
        configurations: a.config_limit,
    };
    let exact = exact_plan(&inst, &amb, c.mode, limits)?;
    let ccg = run_ccg(&inst, &amb, &c.ccg())?;
    let mut distribution = Vec::new();
    if c.mode == Mode::Dr {
        let m = exact_worst_case_expectation(&inst, &exact.config, &amb, limits.scenarios)?;
        for (z, p) in m.scenarios.iter().zip(&m.psi) {
            if *p > 1e-9 {
                let lines: Vec<String> = z
                    .affected_lines()
                    .iter()
                    .map(|&l| format!("{}-{}", inst.lines[l].from, inst.lines[l].to))
                    .collect();
                distribution.push((if lines.is_empty() { "none".into() } else { lines.join(" ") }, *p));
            }
        }
    }
    let report = OracleReport {
        mode: c.mode,
        exact_objective: exact.objective,
        exact_built_lines: exact.config.built_lines(),
        exact_dg_nodes: exact.config.dg_nodes(),
        configurations: exact.evaluated,
        ccg_objective: ccg.objective,
        ccg_gap: ccg.gap,
        delta: ccg.objective - exact.objective,
        distribution,
    };
    write_json(c.out_dir()?, "oracle.json", &report)?;
    println!("exact objective: {}", fmt_num(report.exact_objective));
    println!("configurations: {}", report.configurations);
    println!("exact lines: {:?}", line_labels(&inst, &exact.config));
    println!("exact dg: {:?}", node_labels(&inst, &exact.config));
    for (lines, p) in &report.distribution {
        println!("  p={} failed: {lines}", fmt_num(*p));
    }
    println!("ccg objective: {}", fmt_num(report.ccg_objective));
    println!("delta: {:.3e}", report.delta);
    Ok(ccg.converged())
}

fn generate(a: &GenerateArgs) -> Result<bool> {
    let c = &a.common;
    let mut tpl = match (a.case, a.nodes) {
        (Some(33), None) => InstanceTemplate::case33(a.periods, c.seed),
        (Some(69), None) => InstanceTemplate::case69(a.periods, c.seed),
        (Some(n), None) => bail!("no standard case with {n} nodes; use --nodes"),
        (None, Some(n)) => {
            if a.substations.is_empty() {
                bail!("--substations is required with --nodes");
            }
            InstanceTemplate::new(n, a.substations.clone(), a.dg.unwrap_or(0), a.periods, c.seed)
        }
        _ => bail!("give exactly one of --case and --nodes"),
    };
    if let Some(d) = a.dg {
        tpl.dg_count = d;
    }
    if !a.substations.is_empty() {
        tpl.substation_ids = a.substations.clone();
    }
    if let Some(t) = a.extra_ties {
        tpl.extra_ties = t;
    }
    tpl.budget_cost = a.budget;
    tpl.n_z = c.n_z;
    if tpl.node_count < 2 || tpl.substation_ids.iter().any(|&s| s == 0 || s > tpl.node_count) {
        bail!("need at least 2 nodes and substation ids within 1..=nodes");
    }
    let inst = generate_instance(&tpl);
    inst.validate()?;
    let text = inst.to_canonical_json();
    match c.out_dir()? {
        Some(d) => {
            let path = d.join("instance.json");
            std::fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
            println!(
                "instance: {} nodes, {} candidate lines, {} periods",
                inst.nodes.len(),
                inst.lines.len(),
                inst.periods
            );
        }
        None => print!("{text}"),
    }
    Ok(true)
}
