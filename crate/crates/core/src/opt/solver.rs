use std::ffi::CString;
use std::time::Instant;

use highs::{ColProblem, HighsModelStatus, HighsSolutionStatus, Sense};
use thiserror::Error;

use super::model::{LinearModel, ModelError, ObjSense, RowId, RowSense, VarId, VarKind};

pub const SOLVER_ENV: &str = "GRIDPLAN_SOLVER";
pub const FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Time or iteration limit hit with an incumbent available.
    Limit,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid model: {0}")]
    Model(#[from] ModelError),
    #[error("solver backend failure: {0}")]
    Backend(String),
    #[error("limit reached without an incumbent")]
    NoIncumbent,
    #[error("unknown solver {0:?}; available: highs")]
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveParams {
    pub time_limit: Option<f64>,
    pub mip_gap: f64,
    pub threads: u32,
    pub seed: i32,
    /// Integrality tolerance for MIPs.
    pub mip_feasibility_tol: f64,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            time_limit: None,
            mip_gap: 1e-6,
            threads: 1,
            seed: 0,
            mip_feasibility_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    /// Row duals as d objective / d rhs; LP only.
    pub duals: Option<Vec<f64>>,
    /// Reduced costs as d objective / d variable; LP only.
    pub reduced_costs: Option<Vec<f64>>,
    pub time_s: f64,
    /// Relative MIP gap; 0 for LPs.
    pub mip_gap: f64,
    /// Proven bound on the optimum (dual bound for MIPs, objective for LPs).
    pub best_bound: f64,
}

impl SolveResult {
    pub fn value(&self, v: VarId) -> f64 {
        self.primal[v.0]
    }

    pub fn dual(&self, r: RowId) -> Option<f64> {
        self.duals.as_ref().map(|d| d[r.0])
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    fn without_solution(status: SolveStatus, time_s: f64) -> Self {
        Self {
            status,
            objective: f64::NAN,
            primal: Vec::new(),
            duals: None,
            reduced_costs: None,
            time_s,
            mip_gap: f64::NAN,
            best_bound: f64::NAN,
        }
    }
}

pub trait Solver: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, model: &LinearModel, params: &SolveParams) -> Result<SolveResult, SolverError>;
}

/// Open-source MIP backend.
#[derive(Debug, Default, Clone, Copy)]
pub struct HighsSolver;

impl Solver for HighsSolver {
    fn name(&self) -> &'static str {
        "highs"
    }

    fn solve(&self, model: &LinearModel, params: &SolveParams) -> Result<SolveResult, SolverError> {
        model.validate()?;
        let start = Instant::now();
        let is_lp = model.is_lp();
        let n = model.num_vars();

        if n == 0 {
            let ok = model.max_violation(&[]) <= FEAS_TOL;
            let time_s = start.elapsed().as_secs_f64();
            if !ok {
                return Ok(SolveResult::without_solution(SolveStatus::Infeasible, time_s));
            }
            let obj = model.objective.constant;
            return Ok(SolveResult {
                status: SolveStatus::Optimal,
                objective: obj,
                primal: Vec::new(),
                duals: is_lp.then(|| vec![0.0; model.num_rows()]),
                reduced_costs: is_lp.then(Vec::new),
                time_s,
                mip_gap: 0.0,
                best_bound: obj,
            });
        }

        // Maximisation is passed as minimisation of the negated objective so
        // dual signs only depend on one convention.
        let flip = match model.sense {
            ObjSense::Minimize => 1.0,
            ObjSense::Maximize => -1.0,
        };
        let mut cost = vec![0.0; n];
        for &(v, c) in &model.objective.terms {
            cost[v.0] += flip * c;
        }
        let mut columns: Vec<Vec<(highs::Row, f64)>> = vec![Vec::new(); n];
        let mut pb = ColProblem::new();
        for row in model.rows() {
            let r = match row.sense {
                RowSense::Le => pb.add_row(f64::NEG_INFINITY..=row.rhs),
                RowSense::Ge => pb.add_row(row.rhs..=f64::INFINITY),
                RowSense::Eq => pb.add_row(row.rhs..=row.rhs),
            };
            for &(v, c) in &row.expr.terms {
                if c != 0.0 {
                    columns[v.0].push((r, c));
                }
            }
        }
        for (j, var) in model.vars().iter().enumerate() {
            let integral = var.kind == VarKind::Binary;
            pb.add_column_with_integrality(cost[j], var.lower..=var.upper, &columns[j], integral);
        }

        let mut hm = pb.optimise(Sense::Minimise);
        let set = |hm: &mut highs::Model, key: &str, val: OptVal| -> Result<(), SolverError> {
            let r = match val {
                OptVal::F(x) => hm.try_set_option(key, x),
                OptVal::I(x) => hm.try_set_option(key, x),
                OptVal::S(x) => hm.try_set_option(key, x),
            };
            r.map_err(|e| SolverError::Backend(format!("option {key}: {e:?}")))
        };
        set(&mut hm, "threads", OptVal::I(params.threads.max(1) as i32))?;
        set(&mut hm, "random_seed", OptVal::I(params.seed))?;
        if let Some(t) = params.time_limit {
            set(&mut hm, "time_limit", OptVal::F(t.max(0.0)))?;
        }
        if !is_lp {
            set(&mut hm, "mip_rel_gap", OptVal::F(params.mip_gap))?;
            set(&mut hm, "mip_abs_gap", OptVal::F(1e-9))?;
            set(&mut hm, "mip_feasibility_tolerance", OptVal::F(params.mip_feasibility_tol))?;
        }
        if is_lp {
            set(&mut hm, "solver", OptVal::S("simplex"))?;
        }

        let solved = match hm.try_solve() {
            Ok(s) => s,
            // The MIP's final feasibility check can reject a solution that
            // misses a very tight tolerance on badly scaled rows; one retry
            // with the default tolerance.
            Err(_) if !is_lp && params.mip_feasibility_tol < 1e-6 => {
                log::warn!("backend error at feasibility tolerance {}; retrying", params.mip_feasibility_tol);
                let relaxed = SolveParams {
                    mip_feasibility_tol: 1e-6,
                    ..params.clone()
                };
                return self.solve(model, &relaxed);
            }
            Err(s) => return Err(SolverError::Backend(format!("run failed: {s:?}"))),
        };
        let time_s = start.elapsed().as_secs_f64();
        let status = solved.status();
        let has_primal = solved.primal_solution_status() == HighsSolutionStatus::Feasible;
        let status = match status {
            HighsModelStatus::Optimal => SolveStatus::Optimal,
            HighsModelStatus::Infeasible => SolveStatus::Infeasible,
            HighsModelStatus::Unbounded | HighsModelStatus::UnboundedOrInfeasible => {
                SolveStatus::Unbounded
            }
            HighsModelStatus::ReachedTimeLimit
            | HighsModelStatus::ReachedIterationLimit
            | HighsModelStatus::ReachedSolutionLimit
            | HighsModelStatus::ReachedInterrupt
            | HighsModelStatus::ReachedMemoryLimit => {
                if has_primal {
                    SolveStatus::Limit
                } else {
                    return Err(SolverError::NoIncumbent);
                }
            }
            other => return Err(SolverError::Backend(format!("model status {other:?}"))),
        };
        if matches!(status, SolveStatus::Infeasible | SolveStatus::Unbounded) {
            return Ok(SolveResult::without_solution(status, time_s));
        }

        let sol = solved.get_solution();
        let mut primal = sol.columns().to_vec();
        for (x, v) in primal.iter_mut().zip(model.vars()) {
            if v.kind == VarKind::Binary {
                *x = x.round();
            }
        }
        let objective = model.objective.eval(&primal);
        let (duals, reduced_costs, mip_gap, best_bound) = if is_lp {
            let d = sol.dual_rows().iter().map(|x| flip * x).collect();
            let rc = sol.dual_columns().iter().map(|x| flip * x).collect();
            (Some(d), Some(rc), 0.0, objective)
        } else {
            let bound = info(&solved, "mip_dual_bound")
                .map(|b| flip * b + model.objective.constant)
                .unwrap_or(objective);
            let gap = info(&solved, "mip_gap").unwrap_or(0.0);
            (None, None, gap, bound)
        };
        Ok(SolveResult {
            status,
            objective,
            primal,
            duals,
            reduced_costs,
            time_s,
            mip_gap,
            best_bound,
        })
    }
}

enum OptVal<'a> {
    F(f64),
    I(i32),
    S(&'a str),
}

fn info(m: &highs::SolvedModel, key: &str) -> Option<f64> {
    let k = CString::new(key).ok()?;
    m.double_info_value(&k).ok().filter(|x| x.is_finite())
}

/// Resolves a backend by name, falling back to `GRIDPLAN_SOLVER` and then
/// the default backend.
pub fn solver_by_name(name: Option<&str>) -> Result<Box<dyn Solver>, SolverError> {
    let env = std::env::var(SOLVER_ENV).ok();
    let chosen = name
        .map(str::to_string)
        .or(env)
        .unwrap_or_else(|| "highs".to_string());
    match chosen.to_ascii_lowercase().as_str() {
        "highs" | "" => Ok(Box::new(HighsSolver)),
        _ => Err(SolverError::Unknown(chosen)),
    }
}

/// Solves with the default backend.
pub fn solve(model: &LinearModel, params: &SolveParams) -> Result<SolveResult, SolverError> {
    HighsSolver.solve(model, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opt::model::LinExpr;

    fn p() -> SolveParams {
        SolveParams::default()
    }

    #[test]
    fn min_with_lower_row() {
        let mut m = LinearModel::new("t", ObjSense::Minimize);
        let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY);
        m.add_row("c", LinExpr::term(x, 1.0), RowSense::Ge, 3.0);
        m.objective = LinExpr::term(x, 1.0);
        let r = solve(&m, &p()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 3.0).abs() < 1e-9);
        assert!((r.dual(RowId(0)).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn max_binary() {
        let mut m = LinearModel::new("t", ObjSense::Maximize);
        let x = m.add_binary("x");
        m.add_row("c", LinExpr::term(x, 1.0), RowSense::Le, 5.0);
        m.objective = LinExpr::term(x, 1.0);
        let r = solve(&m, &p()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.objective, 1.0);
        assert!(r.duals.is_none());
    }

    #[test]
    fn infeasible_pair() {
        let mut m = LinearModel::new("t", ObjSense::Minimize);
        let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY);
        m.add_row("a", LinExpr::term(x, 1.0), RowSense::Le, 0.0);
        m.add_row("b", LinExpr::term(x, 1.0), RowSense::Ge, 1.0);
        m.objective = LinExpr::term(x, 1.0);
        assert_eq!(solve(&m, &p()).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut m = LinearModel::new("t", ObjSense::Maximize);
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        m.objective = LinExpr::term(x, 1.0);
        assert_eq!(solve(&m, &p()).unwrap().status, SolveStatus::Unbounded);
    }

    #[test]
    fn dual_signs_are_objective_sensitivities() {
        // Finite differences on the rhs must match the reported duals.
        for sense in [ObjSense::Maximize, ObjSense::Minimize] {
            let s = if sense == ObjSense::Maximize { 1.0 } else { -1.0 };
            let mut m = LinearModel::new("t", sense);
            let x = m.add_continuous("x", 0.0, f64::INFINITY);
            let y = m.add_continuous("y", 0.0, f64::INFINITY);
            let a = m.add_row("a", LinExpr::term(x, 1.0).with(y, 1.0), RowSense::Le, 4.0);
            let b = m.add_row("b", LinExpr::term(y, 1.0), RowSense::Le, 2.0);
            m.objective = LinExpr::term(x, 2.0 * s).with(y, 3.0 * s);
            let base = solve(&m, &p()).unwrap();
            for (row, rhs) in [(a, 4.0), (b, 2.0)] {
                let mut m2 = m.clone();
                m2.set_rhs(row, rhs + 0.5);
                let bumped = solve(&m2, &p()).unwrap();
                let fd = (bumped.objective - base.objective) / 0.5;
                assert!((fd - base.dual(row).unwrap()).abs() < 1e-7, "{sense:?} {row:?}");
            }
        }
    }

    #[test]
    fn objective_constant_is_kept() {
        let mut m = LinearModel::new("t", ObjSense::Maximize);
        let x = m.add_binary("x");
        m.objective = LinExpr::term(x, 1.0).clone();
        m.objective.constant = 7.0;
        let r = solve(&m, &p()).unwrap();
        assert_eq!(r.objective, 8.0);
        assert!((r.best_bound - 8.0).abs() < 1e-6);
    }

    #[test]
    fn unknown_solver_rejected() {
        assert!(matches!(solver_by_name(Some("cplex")), Err(SolverError::Unknown(_))));
        assert_eq!(solver_by_name(Some("HiGHS")).unwrap().name(), "highs");
    }
}
