use super::model::{LinExpr, LinearModel, ModelError, ObjSense, RowId, RowSense, VarId, VarKind};

/// Which primal bound an extra dual variable prices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    Lower,
    Upper,
    Fixed,
}

/// Result of [`dualize`] with the correspondence back to the primal.
#[derive(Debug, Clone)]
pub struct Dualized {
    pub model: LinearModel,
    /// Dual variable of each primal row, indexed by primal row.
    pub row_vars: Vec<VarId>,
    /// Dual variables of bounds that could not be expressed as sign
    /// restrictions: (primal var, side, dual var).
    pub bound_vars: Vec<(VarId, BoundSide, VarId)>,
    /// Dual constraint of each primal variable.
    pub var_rows: Vec<RowId>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Domain {
    NonNeg,
    NonPos,
    Free,
}

/// Exact LP dual. Dual variables are named `dual[<row>]`, bound duals
/// `dual_lb[<var>]`, `dual_ub[<var>]` or `dual_fix[<var>]`, and dual rows
/// `dualcon[<var>]`.
///
/// Signs follow the sensitivity convention: each dual equals the derivative
/// of the primal optimum with respect to its right-hand side. For a minimising
/// primal that makes duals of `<=` rows nonpositive, of `>=` rows nonnegative
/// and of `=` rows free; a maximising primal mirrors this.
pub fn dualize(model: &LinearModel) -> Result<Dualized, ModelError> {
    model.validate()?;
    if !model.is_lp() {
        return Err(ModelError::NotLinear);
    }
    let minimize = model.sense == ObjSense::Minimize;
    let mut out = LinearModel::new(
        format!("dual_{}", model.name),
        if minimize { ObjSense::Maximize } else { ObjSense::Minimize },
    );
    let mut objective = LinExpr::constant(model.objective.constant);
    // Column view: per primal variable, the (dual var, coefficient) pairs.
    let mut cols: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); model.num_vars()];

    // Sign of a dual variable attached to a row of the given sense.
    let dual_bounds = |sense: RowSense| -> (f64, f64) {
        let nonneg = (0.0, f64::INFINITY);
        let nonpos = (f64::NEG_INFINITY, 0.0);
        match (sense, minimize) {
            (RowSense::Eq, _) => (f64::NEG_INFINITY, f64::INFINITY),
            (RowSense::Le, true) | (RowSense::Ge, false) => nonpos,
            (RowSense::Ge, true) | (RowSense::Le, false) => nonneg,
        }
    };

    let mut row_vars = Vec::with_capacity(model.num_rows());
    for row in model.rows() {
        let (lo, hi) = dual_bounds(row.sense);
        let pi = out.add_continuous(format!("dual[{}]", row.name), lo, hi);
        objective.add(pi, row.rhs);
        for (v, c) in row.expr.compact().terms {
            cols[v.0].push((pi, c));
        }
        row_vars.push(pi);
    }

    let mut bound_vars = Vec::new();
    let mut domains = Vec::with_capacity(model.num_vars());
    for (j, var) in model.vars().iter().enumerate() {
        let (lb, ub) = (var.lower, var.upper);
        let mut extra: Vec<(BoundSide, RowSense, f64)> = Vec::new();
        let domain = if lb == ub {
            extra.push((BoundSide::Fixed, RowSense::Eq, lb));
            Domain::Free
        } else if lb >= 0.0 {
            if lb > 0.0 {
                extra.push((BoundSide::Lower, RowSense::Ge, lb));
            }
            if ub.is_finite() {
                extra.push((BoundSide::Upper, RowSense::Le, ub));
            }
            Domain::NonNeg
        } else if ub <= 0.0 {
            if ub < 0.0 {
                extra.push((BoundSide::Upper, RowSense::Le, ub));
            }
            if lb.is_finite() {
                extra.push((BoundSide::Lower, RowSense::Ge, lb));
            }
            Domain::NonPos
        } else {
            if lb.is_finite() {
                extra.push((BoundSide::Lower, RowSense::Ge, lb));
            }
            if ub.is_finite() {
                extra.push((BoundSide::Upper, RowSense::Le, ub));
            }
            Domain::Free
        };
        for (side, sense, rhs) in extra {
            let tag = match side {
                BoundSide::Lower => "dual_lb",
                BoundSide::Upper => "dual_ub",
                BoundSide::Fixed => "dual_fix",
            };
            let (lo, hi) = dual_bounds(sense);
            let pi = out.add_continuous(format!("{tag}[{}]", var.name), lo, hi);
            objective.add(pi, rhs);
            cols[j].push((pi, 1.0));
            bound_vars.push((VarId(j), side, pi));
        }
        domains.push(domain);
    }

    let mut cost = vec![0.0; model.num_vars()];
    for &(v, c) in &model.objective.terms {
        cost[v.0] += c;
    }
    let mut var_rows = Vec::with_capacity(model.num_vars());
    for (j, var) in model.vars().iter().enumerate() {
        let sense = match (domains[j], minimize) {
            (Domain::Free, _) => RowSense::Eq,
            (Domain::NonNeg, true) | (Domain::NonPos, false) => RowSense::Le,
            (Domain::NonPos, true) | (Domain::NonNeg, false) => RowSense::Ge,
        };
        let expr = LinExpr {
            terms: std::mem::take(&mut cols[j]),
            constant: 0.0,
        };
        var_rows.push(out.add_row(format!("dualcon[{}]", var.name), expr, sense, cost[j]));
    }
    out.objective = objective;
    Ok(Dualized {
        model: out,
        row_vars,
        bound_vars,
        var_rows,
    })
}

/// Adds `w = pi * z` for `pi` in `[L, 0]` and binary `z` through the four
/// McCormick inequalities, exact at integral `z`. Returns `w`.
pub fn mccormick_binary(
    model: &mut LinearModel,
    pi: VarId,
    z: VarId,
    w_name: impl Into<String>,
) -> Result<VarId, ModelError> {
    let pv = model.var(pi).clone();
    let l = pv.lower;
    if !l.is_finite() || l > 0.0 || pv.upper != 0.0 {
        return Err(ModelError::BadMcCormickBound(pv.name));
    }
    let zv = model.var(z);
    if zv.kind != VarKind::Binary {
        return Err(ModelError::BinaryBounds(zv.name.clone()));
    }
    let w_name = w_name.into();
    let w = model.add_continuous(w_name.clone(), l, 0.0);
    model.add_row(
        format!("mc_lo[{w_name}]"),
        LinExpr::term(w, 1.0).with(z, -l),
        RowSense::Ge,
        0.0,
    );
    model.add_row(
        format!("mc_pi[{w_name}]"),
        LinExpr::term(w, 1.0).with(pi, -1.0),
        RowSense::Ge,
        0.0,
    );
    model.add_row(
        format!("mc_hi[{w_name}]"),
        LinExpr::term(w, 1.0).with(pi, -1.0).with(z, -l),
        RowSense::Le,
        -l,
    );
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opt::solver::{solve, SolveParams, SolveStatus};
    use proptest::prelude::*;

    fn obj(m: &LinearModel) -> f64 {
        let r = solve(m, &SolveParams::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal, "{}", m.to_lp_format());
        r.objective
    }

    #[test]
    fn single_row_example() {
        let mut m = LinearModel::new("t", ObjSense::Minimize);
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        m.add_row("c", LinExpr::term(x, 1.0), RowSense::Ge, 3.0);
        m.objective = LinExpr::term(x, 1.0);
        let d = dualize(&m).unwrap();
        assert_eq!(d.model.sense, ObjSense::Maximize);
        let pi = d.model.var(d.row_vars[0]);
        assert_eq!((pi.lower, pi.upper), (0.0, f64::INFINITY));
        let con = d.model.row(d.var_rows[0]);
        assert_eq!((con.sense, con.rhs), (RowSense::Le, 1.0));
        assert!((obj(&d.model) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn le_rows_of_min_get_nonpositive_duals() {
        let mut m = LinearModel::new("t", ObjSense::Minimize);
        let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY);
        m.add_row("a", LinExpr::term(x, 1.0), RowSense::Le, 4.0);
        m.add_row("b", LinExpr::term(x, 1.0), RowSense::Eq, 2.0);
        m.objective = LinExpr::term(x, 1.0);
        let d = dualize(&m).unwrap();
        assert_eq!(d.model.var(d.row_vars[0]).upper, 0.0);
        assert_eq!(d.model.var(d.row_vars[1]).lower, f64::NEG_INFINITY);
        assert_eq!(d.model.row(d.var_rows[0]).sense, RowSense::Eq);
    }

    #[test]
    fn integer_models_rejected() {
        let mut m = LinearModel::new("t", ObjSense::Minimize);
        m.add_binary("b");
        assert_eq!(dualize(&m).unwrap_err(), ModelError::NotLinear);
    }

    #[test]
    fn mccormick_six_points() {
        let l = -10.0;
        for pi_val in [l, l / 2.0, 0.0] {
            for z_val in [0.0, 1.0] {
                for sense in [ObjSense::Minimize, ObjSense::Maximize] {
                    let mut m = LinearModel::new("mc", sense);
                    let pi = m.add_continuous("pi", l, 0.0);
                    let z = m.add_binary("z");
                    let w = mccormick_binary(&mut m, pi, z, "w").unwrap();
                    m.set_bounds(pi, pi_val, pi_val);
                    m.set_bounds(z, z_val, z_val);
                    m.objective = LinExpr::term(w, 1.0);
                    let v = obj(&m);
                    assert!((v - pi_val * z_val).abs() < 1e-9, "pi={pi_val} z={z_val} {sense:?}");
                }
            }
        }
    }

    #[test]
    fn mccormick_needs_finite_bound() {
        let mut m = LinearModel::new("mc", ObjSense::Minimize);
        let pi = m.add_continuous("pi", f64::NEG_INFINITY, 0.0);
        let z = m.add_binary("z");
        assert!(matches!(
            mccormick_binary(&mut m, pi, z, "w"),
            Err(ModelError::BadMcCormickBound(_))
        ));
    }

    /// Random bounded feasible LP: box-bounded variables, rows built around a
    /// known feasible point.
    fn random_lp(
        sense: bool,
        n: usize,
        coefs: Vec<f64>,
        senses: Vec<u8>,
        bounds: Vec<(f64, f64)>,
        cost: Vec<f64>,
    ) -> LinearModel {
        let mut m = LinearModel::new(
            "rand",
            if sense { ObjSense::Minimize } else { ObjSense::Maximize },
        );
        let mut point = Vec::new();
        let vars: Vec<VarId> = (0..n)
            .map(|j| {
                let (a, b) = bounds[j];
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                point.push((lo + hi) / 2.0);
                m.add_continuous(format!("x[{j}]"), lo, hi)
            })
            .collect();
        for (i, s) in senses.iter().enumerate() {
            let mut e = LinExpr::new();
            for j in 0..n {
                e.add(vars[j], coefs[i * n + j]);
            }
            let at = e.eval(&point);
            let (sense, rhs) = match s % 3 {
                0 => (RowSense::Le, at + 1.0),
                1 => (RowSense::Ge, at - 1.0),
                _ => (RowSense::Eq, at),
            };
            m.add_row(format!("r[{i}]"), e, sense, rhs);
        }
        let mut o = LinExpr::constant(1.5);
        for j in 0..n {
            o.add(vars[j], cost[j]);
        }
        m.objective = o;
        m
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn strong_duality_and_bidual(
            sense in any::<bool>(),
            coefs in prop::collection::vec(-5.0f64..5.0, 12),
            senses in prop::collection::vec(0u8..3, 3),
            bounds in prop::collection::vec((-4.0f64..4.0, -4.0f64..4.0), 4),
            cost in prop::collection::vec(-3.0f64..3.0, 4),
        ) {
            let m = random_lp(sense, 4, coefs, senses, bounds, cost);
            let primal = solve(&m, &SolveParams::default()).unwrap();
            prop_assert_eq!(primal.status, SolveStatus::Optimal);
            let d = dualize(&m).unwrap();
            let dual = solve(&d.model, &SolveParams::default()).unwrap();
            prop_assert_eq!(dual.status, SolveStatus::Optimal);
            let tol = 1e-6 * (1.0 + primal.objective.abs());
            prop_assert!((primal.objective - dual.objective).abs() < tol);

            // Reported primal duals are dual-feasible and attain the optimum.
            let duals = primal.duals.as_ref().unwrap();
            let mut at = vec![0.0; d.model.num_vars()];
            for (i, &v) in d.row_vars.iter().enumerate() {
                at[v.0] = duals[i];
            }
            let rc = primal.reduced_costs.as_ref().unwrap();
            for &(x, side, v) in &d.bound_vars {
                let r = rc[x.0];
                at[v.0] = match side {
                    BoundSide::Fixed => r,
                    BoundSide::Lower if (primal.primal[x.0] - m.var(x).lower).abs() < 1e-9 => r,
                    BoundSide::Upper if (primal.primal[x.0] - m.var(x).upper).abs() < 1e-9 => r,
                    _ => 0.0,
                };
            }
            prop_assert!((d.model.objective.eval(&at) - primal.objective).abs() < tol);

            let dd = dualize(&d.model).unwrap();
            prop_assert!((obj(&dd.model) - primal.objective).abs() < tol);
        }
    }
}
