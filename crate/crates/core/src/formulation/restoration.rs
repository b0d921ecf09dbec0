use crate::grid::{NetworkInstance, Topology};
use crate::opt::{LinExpr, LinearModel, ObjSense, RowId, RowSense, VarId};
use crate::scenario::ContingencyScenario;

use super::config::Configuration;

/// Second-stage variables of one recourse block, indexed `[line][t]` or
/// `[node][t]`. `None` marks a variable fixed at zero and left out.
#[derive(Debug, Clone, Default)]
pub struct BlockVars {
    pub p: Vec<Vec<Option<VarId>>>,
    pub q: Vec<Vec<Option<VarId>>>,
    pub xp: Vec<Vec<Option<VarId>>>,
    pub xq: Vec<Vec<Option<VarId>>>,
    pub v: Vec<Vec<VarId>>,
    pub s: Vec<Vec<Option<VarId>>>,
}

impl BlockVars {
    /// Sum of shedding over nodes and periods as an expression.
    pub fn shed_expr(&self) -> LinExpr {
        let mut e = LinExpr::new();
        for row in &self.s {
            for &s in row.iter().flatten() {
                e.add(s, 1.0);
            }
        }
        e
    }

    pub fn all_vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        for group in [&self.p, &self.q, &self.xp, &self.xq, &self.s] {
            for row in group {
                out.extend(row.iter().flatten().copied());
            }
        }
        for row in &self.v {
            out.extend(row.iter().copied());
        }
        out
    }
}

/// A row whose right-hand side is affine in one availability bit:
/// `rhs = a + b * z[line, t]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRow {
    pub row: RowId,
    pub kind: ParamKind,
    pub line: usize,
    pub t: usize,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    CapP,
    CapQ,
    VoltageDrop,
}

/// Restoration LP for a fixed configuration with its z-dependent rows.
#[derive(Debug, Clone)]
pub struct Restoration {
    pub model: LinearModel,
    pub vars: BlockVars,
    pub params: Vec<ParamRow>,
}

impl Restoration {
    /// Rewrites every parametric right-hand side for scenario `z`.
    pub fn set_scenario(&mut self, z: &ContingencyScenario) {
        for pr in &self.params {
            self.model.set_rhs(pr.row, pr.a + pr.b * z.z(pr.line, pr.t));
        }
    }
}

/// Big-M for the voltage-drop rows of line `l`, in per-unit.
pub fn voltage_big_m(instance: &NetworkInstance, l: usize) -> f64 {
    let line = &instance.lines[l];
    (instance.v_max - instance.v_min) + (line.resistance * line.cap_p + line.reactance * line.cap_q) / instance.v_ref
}

/// How a block sees the first-stage decisions.
pub(crate) enum FirstStage<'a> {
    /// Fixed configuration; unbuilt lines and unplaced DG are omitted.
    Fixed(&'a Configuration),
    /// Decision variables (master problem).
    Vars { y: &'a [VarId], w: &'a [Option<VarId>] },
}

/// How a block sees the contingency.
pub(crate) enum Availability<'a> {
    /// Parametric: rows are kept for every built line and their rhs set from
    /// the given scenario.
    Param(&'a ContingencyScenario),
    /// Data: failed lines are dropped from the block.
    Data(&'a ContingencyScenario),
}

fn tagged(symbol: &str, tag: Option<usize>, idx: &[usize]) -> String {
    let mut parts: Vec<String> = Vec::with_capacity(idx.len() + 1);
    if let Some(j) = tag {
        parts.push(j.to_string());
    }
    parts.extend(idx.iter().map(|i| i.to_string()));
    format!("{symbol}[{}]", parts.join(","))
}

/// Adds one recourse block (linearized DistFlow with shedding) to `model`.
/// Names carry the block tag as first index when `tag` is set, e.g.
/// `s[j,n,t]`; otherwise `s[n,t]`.
///
/// Voltage-drop rows are scaled by the reference voltage so that their duals
/// stay on the same scale as the balance duals.
pub(crate) fn add_block(
    model: &mut LinearModel,
    instance: &NetworkInstance,
    topo: &Topology,
    tag: Option<usize>,
    first: &FirstStage<'_>,
    avail: &Availability<'_>,
    params: &mut Vec<ParamRow>,
) -> BlockVars {
    let n = instance.node_count();
    let lines = instance.line_count();
    let periods = instance.periods;
    let v0 = instance.v_ref;
    let mut b = BlockVars {
        p: vec![vec![None; periods]; lines],
        q: vec![vec![None; periods]; lines],
        xp: vec![vec![None; periods]; n],
        xq: vec![vec![None; periods]; n],
        v: Vec::with_capacity(n),
        s: vec![vec![None; periods]; n],
    };

    for node in 0..n {
        let spec = &instance.nodes[node];
        let mut vs = Vec::with_capacity(periods);
        for t in 0..periods {
            let (lo, hi) = if spec.is_substation {
                (1.0, 1.0)
            } else {
                (instance.v_min, instance.v_max)
            };
            vs.push(model.add_continuous(tagged("v", tag, &[node, t]), lo, hi));
            if spec.load_p[t] > 0.0 {
                b.s[node][t] = Some(model.add_continuous(tagged("s", tag, &[node, t]), 0.0, spec.load_p[t]));
            }
        }
        b.v.push(vs);

        if spec.is_substation {
            for t in 0..periods {
                b.xp[node][t] = Some(model.add_continuous(tagged("xp", tag, &[node, t]), 0.0, spec.cap_p));
                b.xq[node][t] = Some(model.add_continuous(tagged("xq", tag, &[node, t]), 0.0, spec.cap_q));
            }
        } else if spec.dg_candidate {
            match first {
                FirstStage::Fixed(cfg) => {
                    if cfg.w[node] {
                        for t in 0..periods {
                            b.xp[node][t] =
                                Some(model.add_continuous(tagged("xp", tag, &[node, t]), 0.0, spec.cap_p));
                            b.xq[node][t] =
                                Some(model.add_continuous(tagged("xq", tag, &[node, t]), 0.0, spec.cap_q));
                        }
                    }
                }
                FirstStage::Vars { w, .. } => {
                    if let Some(wv) = w[node] {
                        for t in 0..periods {
                            let xp = model.add_continuous(tagged("xp", tag, &[node, t]), 0.0, spec.cap_p);
                            let xq = model.add_continuous(tagged("xq", tag, &[node, t]), 0.0, spec.cap_q);
                            model.add_row(
                                tagged("gen_p", tag, &[node, t]),
                                LinExpr::term(xp, 1.0).with(wv, -spec.cap_p),
                                RowSense::Le,
                                0.0,
                            );
                            model.add_row(
                                tagged("gen_q", tag, &[node, t]),
                                LinExpr::term(xq, 1.0).with(wv, -spec.cap_q),
                                RowSense::Le,
                                0.0,
                            );
                            b.xp[node][t] = Some(xp);
                            b.xq[node][t] = Some(xq);
                        }
                    }
                }
            }
        }
    }

    for l in 0..lines {
        let line = &instance.lines[l];
        let (from, to) = (topo.from[l], topo.to[l]);
        let m_v = voltage_big_m(instance, l);
        for t in 0..periods {
            let keep = match (first, avail) {
                (FirstStage::Fixed(cfg), _) if !cfg.y[l] => false,
                (_, Availability::Data(z)) => z.works(l, t),
                _ => true,
            };
            if !keep {
                continue;
            }
            let p = model.add_continuous(tagged("p", tag, &[l, t]), 0.0, f64::INFINITY);
            let q = model.add_continuous(tagged("q", tag, &[l, t]), 0.0, f64::INFINITY);
            b.p[l][t] = Some(p);
            b.q[l][t] = Some(q);
            // drop = V0 (v_to - v_from) + r p + x q
            let drop = LinExpr::term(b.v[to][t], v0)
                .with(b.v[from][t], -v0)
                .with(p, line.resistance)
                .with(q, line.reactance);
            let neg = LinExpr {
                terms: drop.terms.iter().map(|&(v, c)| (v, -c)).collect(),
                constant: 0.0,
            };
            match (first, avail) {
                (FirstStage::Fixed(_), Availability::Param(z)) => {
                    let zl = z.z(l, t);
                    let rows = [
                        (ParamKind::CapP, tagged("cap_p", tag, &[l, t]), LinExpr::term(p, 1.0), 0.0, line.cap_p),
                        (ParamKind::CapQ, tagged("cap_q", tag, &[l, t]), LinExpr::term(q, 1.0), 0.0, line.cap_q),
                        (ParamKind::VoltageDrop, tagged("vdrop_hi", tag, &[l, t]), drop, v0 * m_v, -v0 * m_v),
                        (ParamKind::VoltageDrop, tagged("vdrop_lo", tag, &[l, t]), neg, v0 * m_v, -v0 * m_v),
                    ];
                    for (kind, name, expr, a, bcoef) in rows {
                        let row = model.add_row(name, expr, RowSense::Le, a + bcoef * zl);
                        params.push(ParamRow {
                            row,
                            kind,
                            line: l,
                            t,
                            a,
                            b: bcoef,
                        });
                    }
                }
                (FirstStage::Fixed(_), Availability::Data(_)) => {
                    model.add_row(tagged("cap_p", tag, &[l, t]), LinExpr::term(p, 1.0), RowSense::Le, line.cap_p);
                    model.add_row(tagged("cap_q", tag, &[l, t]), LinExpr::term(q, 1.0), RowSense::Le, line.cap_q);
                    model.add_row(tagged("vdrop_hi", tag, &[l, t]), drop, RowSense::Le, 0.0);
                    model.add_row(tagged("vdrop_lo", tag, &[l, t]), neg, RowSense::Le, 0.0);
                }
                (FirstStage::Vars { y, .. }, _) => {
                    // Only reached for working lines: p <= K y and the drop
                    // equality relaxed by M (1 - y).
                    let yv = y[l];
                    model.add_row(
                        tagged("cap_p", tag, &[l, t]),
                        LinExpr::term(p, 1.0).with(yv, -line.cap_p),
                        RowSense::Le,
                        0.0,
                    );
                    model.add_row(
                        tagged("cap_q", tag, &[l, t]),
                        LinExpr::term(q, 1.0).with(yv, -line.cap_q),
                        RowSense::Le,
                        0.0,
                    );
                    model.add_row(
                        tagged("vdrop_hi", tag, &[l, t]),
                        drop.with(yv, v0 * m_v),
                        RowSense::Le,
                        v0 * m_v,
                    );
                    model.add_row(
                        tagged("vdrop_lo", tag, &[l, t]),
                        neg.with(yv, v0 * m_v),
                        RowSense::Le,
                        v0 * m_v,
                    );
                }
            }
        }
    }

    for node in 0..n {
        let spec = &instance.nodes[node];
        for t in 0..periods {
            let mut ep = LinExpr::new();
            let mut eq = LinExpr::new();
            for &l in &topo.in_lines[node] {
                if let (Some(p), Some(q)) = (b.p[l][t], b.q[l][t]) {
                    ep.add(p, 1.0);
                    eq.add(q, 1.0);
                }
            }
            for &l in &topo.out_lines[node] {
                if let (Some(p), Some(q)) = (b.p[l][t], b.q[l][t]) {
                    ep.add(p, -1.0);
                    eq.add(q, -1.0);
                }
            }
            if let Some(x) = b.xp[node][t] {
                ep.add(x, 1.0);
            }
            if let Some(x) = b.xq[node][t] {
                eq.add(x, 1.0);
            }
            if let Some(s) = b.s[node][t] {
                ep.add(s, 1.0);
                // Shedding keeps the load power factor.
                eq.add(s, spec.load_q[t] / spec.load_p[t]);
            }
            model.add_row(tagged("bal_p", tag, &[node, t]), ep, RowSense::Eq, spec.load_p[t]);
            model.add_row(tagged("bal_q", tag, &[node, t]), eq, RowSense::Eq, spec.load_q[t]);
        }
    }
    b
}

/// Restoration LP `Q(config, z)`: minimise total shedding. Unbuilt lines and
/// unplaced DG are left out; every built line keeps its capacity and
/// voltage-drop rows with right-hand sides affine in `z`.
pub fn build_restoration(instance: &NetworkInstance, config: &Configuration, z: &ContingencyScenario) -> Restoration {
    let topo = instance.topology();
    let mut model = LinearModel::new("restoration", ObjSense::Minimize);
    let mut params = Vec::new();
    let vars = add_block(
        &mut model,
        instance,
        &topo,
        None,
        &FirstStage::Fixed(config),
        &Availability::Param(z),
        &mut params,
    );
    model.objective = vars.shed_expr();
    Restoration { model, vars, params }
}

/// Restoration LP with failed lines removed instead of parametrised.
pub fn build_restoration_reduced(
    instance: &NetworkInstance,
    config: &Configuration,
    z: &ContingencyScenario,
) -> Restoration {
    let topo = instance.topology();
    let mut model = LinearModel::new("restoration", ObjSense::Minimize);
    let mut params = Vec::new();
    let vars = add_block(
        &mut model,
        instance,
        &topo,
        None,
        &FirstStage::Fixed(config),
        &Availability::Data(z),
        &mut params,
    );
    model.objective = vars.shed_expr();
    Restoration { model, vars, params }
}
