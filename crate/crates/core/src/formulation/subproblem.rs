use crate::grid::NetworkInstance;
use crate::opt::{dualize, mccormick_binary, LinExpr, LinearModel, ModelError, RowSense, SolveResult, VarId};
use crate::scenario::ContingencyScenario;

use super::config::Configuration;
use super::restoration::{build_restoration, ParamKind, Restoration};

/// Safety factor on the per-row dual bounds, see [`dual_bound`].
pub const DUAL_BOUND_SCALE: f64 = 10.0;

/// A McCormick-linearised product `w = pi * z`.
#[derive(Debug, Clone, Copy)]
pub struct Product {
    pub pi: VarId,
    pub z: VarId,
    pub w: VarId,
    pub line: usize,
    pub t: usize,
    /// Lower bound `L` of `pi`.
    pub bound: f64,
}

/// Worst-case scenario problem `max_z Q(config, z) + sum beta z`, single
/// level after dualising the restoration LP.
#[derive(Debug, Clone)]
pub struct Subproblem {
    pub model: LinearModel,
    /// `z[l,t]` at index `l * periods + t`; `None` for unbuilt lines, which
    /// always stay available.
    pub z: Vec<Option<VarId>>,
    pub products: Vec<Product>,
    pub periods: usize,
    pub lines: usize,
    /// Parametric restoration LP the dual was taken from.
    pub restoration: Restoration,
}

impl Subproblem {
    /// Scenario encoded by a solution.
    pub fn scenario(&self, result: &SolveResult) -> ContingencyScenario {
        let mut s = ContingencyScenario::all_working(self.lines, self.periods);
        for l in 0..self.lines {
            for t in 0..self.periods {
                if let Some(v) = self.z[l * self.periods + t] {
                    if result.value(v) < 0.5 {
                        s.set_failed(l, t, true);
                    }
                }
            }
        }
        s
    }

    /// Products whose dual sits at its artificial bound on an available
    /// line, i.e. where the bound may cut off the true dual.
    pub fn pinned_duals(&self, result: &SolveResult, tol: f64) -> Vec<String> {
        self.products
            .iter()
            .filter(|p| result.value(p.z) > 0.5 && result.value(p.pi) <= p.bound + tol)
            .map(|p| self.model.var(p.pi).name.clone())
            .collect()
    }

    /// Largest `|L|` over all products.
    pub fn max_bound(&self) -> f64 {
        self.products.iter().map(|p| p.bound.abs()).fold(0.0, f64::max)
    }

    /// Largest `|w - pi z|` over all products.
    pub fn mccormick_error(&self, result: &SolveResult) -> f64 {
        self.products
            .iter()
            .map(|p| (result.value(p.w) - result.value(p.pi) * result.value(p.z)).abs())
            .fold(0.0, f64::max)
    }
}

/// Lower bound for the dual of a z-dependent row, before scaling.
///
/// One unit of slack on a row saves at most this much shedding: an active
/// capacity unit carries one KW, a reactive unit serves at most the largest
/// P/Q load ratio, and a unit of (V0-scaled) voltage drop lets `1/r` more KW
/// through the line.
pub fn dual_bound(instance: &NetworkInstance, kind: ParamKind, line: usize) -> f64 {
    let spec = &instance.lines[line];
    let magnitude = match kind {
        ParamKind::CapP => 1.0,
        ParamKind::CapQ => instance
            .nodes
            .iter()
            .flat_map(|n| n.load_p.iter().zip(&n.load_q))
            .filter(|(_, &q)| q > 0.0)
            .map(|(&p, &q)| p / q)
            .fold(1.0, f64::max),
        ParamKind::VoltageDrop => {
            let z = if spec.resistance > 0.0 { spec.resistance } else { spec.reactance };
            if z > 0.0 {
                (1.0 / z).max(1.0)
            } else {
                instance.total_load_p().max(1.0)
            }
        }
    };
    -magnitude
}

/// Builds the subproblem at `config` for the given `beta` (DR) or without
/// it (RO, `beta = None`).
///
/// The restoration LP is built with z-dependent right-hand sides, dualised
/// generically, and every dual of such a row is bounded to
/// `[-bound_scale * load_t, 0]` and multiplied with its availability bit
/// through McCormick. Availability bits exist for built lines only and obey
/// the per-period outage budget and restoration coupling.
pub fn build_subproblem(
    instance: &NetworkInstance,
    config: &Configuration,
    beta: Option<&[f64]>,
    bound_scale: f64,
) -> Result<Subproblem, ModelError> {
    let periods = instance.periods;
    let lines = instance.line_count();
    let ones = ContingencyScenario::for_instance(instance);
    let restoration = build_restoration(instance, config, &ones);
    let dual = dualize(&restoration.model)?;
    let mut model = dual.model;
    model.name = "subproblem".into();

    let mut z: Vec<Option<VarId>> = vec![None; lines * periods];
    for l in config.built_lines() {
        for t in 0..periods {
            z[l * periods + t] = Some(model.add_binary(format!("z[{l},{t}]")));
        }
    }

    let mut products = Vec::with_capacity(restoration.params.len());
    for pr in &restoration.params {
        let pi = dual.row_vars[pr.row.0];
        let zv = z[pr.line * periods + pr.t].expect("parametric rows exist for built lines only");
        let bound = bound_scale * dual_bound(instance, pr.kind, pr.line);
        model.set_bounds(pi, bound, 0.0);
        model.set_obj_coef(pi, pr.a);
        let w_name = format!("mc[{}]", restoration.model.row(pr.row).name);
        let w = mccormick_binary(&mut model, pi, zv, w_name)?;
        model.objective.add(w, pr.b);
        products.push(Product {
            pi,
            z: zv,
            w,
            line: pr.line,
            t: pr.t,
            bound,
        });
    }

    if let Some(beta) = beta {
        for l in 0..lines {
            for t in 0..periods {
                let b = beta[l * periods + t];
                match z[l * periods + t] {
                    Some(v) => {
                        model.objective.add(v, b);
                    }
                    None => {
                        model.objective.add_constant(b);
                    }
                }
            }
        }
    }

    let built = config.built_lines();
    for t in 0..periods {
        let mut e = LinExpr::new();
        for &l in &built {
            e.add(z[l * periods + t].unwrap(), -1.0);
        }
        let rhs = instance.n_z as f64 - built.len() as f64;
        model.add_row(format!("nz[{t}]"), e, RowSense::Le, rhs);
    }
    for &l in &built {
        let tau = instance.lines[l].tau_rst as usize;
        for t in 0..periods {
            for u in (t + 1)..=(t + tau).min(periods - 1) {
                let e = LinExpr::term(z[l * periods + u].unwrap(), 1.0).with(z[l * periods + t].unwrap(), -1.0);
                model.add_row(format!("rst[{l},{t},{u}]"), e, RowSense::Le, 0.0);
            }
        }
    }

    Ok(Subproblem {
        model,
        z,
        products,
        periods,
        lines,
        restoration,
    })
}

/// Robust subproblem `max_z Q(config, z)`.
pub fn build_ro_subproblem(instance: &NetworkInstance, config: &Configuration) -> Result<Subproblem, ModelError> {
    build_subproblem(instance, config, None, DUAL_BOUND_SCALE)
}
