use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for RowSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowSense::Le => "<=",
            RowSense::Eq => "=",
            RowSense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjSense {
    Minimize,
    Maximize,
}

/// Sparse linear expression with a constant term.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn term(var: VarId, coef: f64) -> Self {
        Self {
            terms: vec![(var, coef)],
            constant: 0.0,
        }
    }

    pub fn add(&mut self, var: VarId, coef: f64) -> &mut Self {
        if coef != 0.0 {
            self.terms.push((var, coef));
        }
        self
    }

    pub fn with(mut self, var: VarId, coef: f64) -> Self {
        self.add(var, coef);
        self
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * values[v.0]).sum::<f64>()
    }

    /// Sums duplicate variables and drops zero coefficients, keeping first
    /// appearance order.
    pub fn compact(&self) -> LinExpr {
        let mut pos: HashMap<VarId, usize> = HashMap::new();
        let mut terms: Vec<(VarId, f64)> = Vec::with_capacity(self.terms.len());
        for &(v, c) in &self.terms {
            match pos.get(&v) {
                Some(&i) => terms[i].1 += c,
                None => {
                    pos.insert(v, terms.len());
                    terms.push((v, c));
                }
            }
        }
        terms.retain(|&(_, c)| c != 0.0);
        LinExpr {
            terms,
            constant: self.constant,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// Left-hand side; its constant is folded into `rhs` by `add_row`.
    pub expr: LinExpr,
    pub sense: RowSense,
    pub rhs: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("variable {0} has lower bound above upper bound")]
    BadBounds(String),
    #[error("binary variable {0} has bounds outside [0,1]")]
    BinaryBounds(String),
    #[error("{0} references an undeclared variable")]
    UnknownVariable(String),
    #[error("duplicate name {0}")]
    DuplicateName(String),
    #[error("model has integer variables; an LP is required")]
    NotLinear,
    #[error("McCormick bound for {0} must be finite, nonpositive, with upper bound 0")]
    BadMcCormickBound(String),
    #[error("unknown name {0}")]
    UnknownName(String),
}

/// Solver-agnostic (mixed-integer) linear model.
///
/// Names follow `symbol[index,...]`, e.g. `p[3,0]` or `cut[2]`, and are unique
/// per kind (variables, rows).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub name: String,
    vars: Vec<Variable>,
    rows: Vec<Constraint>,
    pub sense: ObjSense,
    pub objective: LinExpr,
    var_index: HashMap<String, VarId>,
    row_index: HashMap<String, RowId>,
}

impl LinearModel {
    pub fn new(name: impl Into<String>, sense: ObjSense) -> Self {
        Self {
            name: name.into(),
            vars: Vec::new(),
            rows: Vec::new(),
            sense,
            objective: LinExpr::new(),
            var_index: HashMap::new(),
            row_index: HashMap::new(),
        }
    }

    /// Adds a variable. Panics on duplicate names, since names are the
    /// lookup key downstream.
    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, kind: VarKind) -> VarId {
        let name = name.into();
        let id = VarId(self.vars.len());
        let prev = self.var_index.insert(name.clone(), id);
        assert!(prev.is_none(), "duplicate variable name {name}");
        self.vars.push(Variable {
            name,
            lower,
            upper,
            kind,
        });
        id
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.add_var(name, lower, upper, VarKind::Continuous)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, 0.0, 1.0, VarKind::Binary)
    }

    /// Adds `expr sense rhs`; a constant inside `expr` moves to the right.
    pub fn add_row(&mut self, name: impl Into<String>, expr: LinExpr, sense: RowSense, rhs: f64) -> RowId {
        let name = name.into();
        let id = RowId(self.rows.len());
        let prev = self.row_index.insert(name.clone(), id);
        assert!(prev.is_none(), "duplicate row name {name}");
        let rhs = rhs - expr.constant;
        let expr = LinExpr {
            terms: expr.terms,
            constant: 0.0,
        };
        self.rows.push(Constraint { name, expr, sense, rhs });
        id
    }

    pub fn set_objective(&mut self, sense: ObjSense, objective: LinExpr) {
        self.sense = sense;
        self.objective = objective;
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn rows(&self) -> &[Constraint] {
        &self.rows
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn row(&self, id: RowId) -> &Constraint {
        &self.rows[id.0]
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.var_index.get(name).copied()
    }

    pub fn row_id(&self, name: &str) -> Option<RowId> {
        self.row_index.get(name).copied()
    }

    pub fn set_bounds(&mut self, id: VarId, lower: f64, upper: f64) {
        let v = &mut self.vars[id.0];
        v.lower = lower;
        v.upper = upper;
    }

    pub fn set_rhs(&mut self, id: RowId, rhs: f64) {
        self.rows[id.0].rhs = rhs;
    }

    pub fn set_obj_coef(&mut self, id: VarId, coef: f64) {
        self.objective.terms.retain(|&(v, _)| v != id);
        self.objective.add(id, coef);
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_lp(&self) -> bool {
        self.vars.iter().all(|v| v.kind == VarKind::Continuous)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for v in &self.vars {
            if !(v.lower <= v.upper) {
                return Err(ModelError::BadBounds(v.name.clone()));
            }
            if v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(ModelError::BinaryBounds(v.name.clone()));
            }
        }
        let n = self.vars.len();
        for r in &self.rows {
            if r.expr.terms.iter().any(|(v, _)| v.0 >= n) {
                return Err(ModelError::UnknownVariable(r.name.clone()));
            }
        }
        if self.objective.terms.iter().any(|(v, _)| v.0 >= n) {
            return Err(ModelError::UnknownVariable("objective".into()));
        }
        Ok(())
    }

    /// Largest violation of any row or bound by `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &x) in self.vars.iter().zip(values) {
            worst = worst.max(v.lower - x).max(x - v.upper);
        }
        for r in &self.rows {
            let lhs = r.expr.eval(values);
            let viol = match r.sense {
                RowSense::Le => lhs - r.rhs,
                RowSense::Ge => r.rhs - lhs,
                RowSense::Eq => (lhs - r.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Substitutes fixed values for some variables. Fixed variables leave the
    /// model; their contribution moves into row right-hand sides and the
    /// objective constant. Rows left without variables are dropped after
    /// checking they hold within `tol` (an `Err` names the first violated
    /// row). Remaining binaries keep their kind.
    pub fn substitute(&self, fixed: &HashMap<VarId, f64>, tol: f64) -> Result<LinearModel, String> {
        let mut out = LinearModel::new(self.name.clone(), self.sense);
        let mut remap = vec![None; self.vars.len()];
        for (i, v) in self.vars.iter().enumerate() {
            if !fixed.contains_key(&VarId(i)) {
                remap[i] = Some(out.add_var(v.name.clone(), v.lower, v.upper, v.kind));
            }
        }
        let rewrite = |e: &LinExpr| -> LinExpr {
            let mut r = LinExpr::constant(e.constant);
            for &(v, c) in &e.terms {
                match remap[v.0] {
                    Some(nv) => {
                        r.add(nv, c);
                    }
                    None => {
                        r.add_constant(c * fixed[&v]);
                    }
                }
            }
            r
        };
        for row in &self.rows {
            let e = rewrite(&row.expr);
            if e.terms.is_empty() {
                let lhs = e.constant;
                let ok = match row.sense {
                    RowSense::Le => lhs <= row.rhs + tol,
                    RowSense::Ge => lhs >= row.rhs - tol,
                    RowSense::Eq => (lhs - row.rhs).abs() <= tol,
                };
                if !ok {
                    return Err(row.name.clone());
                }
                continue;
            }
            out.add_row(row.name.clone(), e, row.sense, row.rhs);
        }
        out.objective = rewrite(&self.objective);
        Ok(out)
    }

    /// Writes the model in CPLEX LP text format.
    pub fn to_lp_format(&self) -> String {
        use std::fmt::Write;
        let clean = |s: &str| -> String {
            s.chars()
                .map(|c| match c {
                    '[' | ']' | ',' => '_',
                    c => c,
                })
                .collect()
        };
        let fmt_expr = |e: &LinExpr| -> String {
            let mut s = String::new();
            for (i, &(v, c)) in e.compact().terms.iter().enumerate() {
                let sign = if c < 0.0 { "-" } else if i > 0 { "+" } else { "" };
                let _ = write!(s, " {sign} {} {}", c.abs(), clean(&self.vars[v.0].name));
            }
            if s.is_empty() {
                s.push_str(" 0");
            }
            s
        };
        let mut out = String::new();
        let _ = writeln!(out, "\\ {}", self.name);
        let _ = writeln!(
            out,
            "{}",
            match self.sense {
                ObjSense::Minimize => "Minimize",
                ObjSense::Maximize => "Maximize",
            }
        );
        let mut obj = fmt_expr(&self.objective);
        if self.objective.constant != 0.0 {
            let _ = write!(obj, " + {} obj_constant", self.objective.constant);
        }
        let _ = writeln!(out, " obj:{obj}");
        let _ = writeln!(out, "Subject To");
        for r in &self.rows {
            let _ = writeln!(out, " {}:{} {} {}", clean(&r.name), fmt_expr(&r.expr), r.sense, r.rhs);
        }
        let _ = writeln!(out, "Bounds");
        if self.objective.constant != 0.0 {
            let _ = writeln!(out, " obj_constant = 1");
        }
        for v in &self.vars {
            let name = clean(&v.name);
            match (v.lower.is_finite(), v.upper.is_finite()) {
                (false, false) => {
                    let _ = writeln!(out, " {name} free");
                }
                (true, true) => {
                    let _ = writeln!(out, " {} <= {name} <= {}", v.lower, v.upper);
                }
                (true, false) => {
                    let _ = writeln!(out, " {name} >= {}", v.lower);
                }
                (false, true) => {
                    let _ = writeln!(out, " -inf <= {name} <= {}", v.upper);
                }
            }
        }
        let bins: Vec<String> = self
            .vars
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .map(|v| clean(&v.name))
            .collect();
        if !bins.is_empty() {
            let _ = writeln!(out, "Binary\n {}", bins.join(" "));
        }
        let _ = writeln!(out, "End");
        out
    }
}

/// `symbol[i,j,...]`.
pub fn name(symbol: &str, idx: &[usize]) -> String {
    let parts: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
    format!("{symbol}[{}]", parts.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_move_to_rhs() {
        let mut m = LinearModel::new("t", ObjSense::Minimize);
        let x = m.add_continuous("x", 0.0, 10.0);
        let r = m.add_row("r", LinExpr::term(x, 1.0).with(x, 0.0).clone_with_constant(2.0), RowSense::Le, 5.0);
        assert_eq!(m.row(r).rhs, 3.0);
        assert_eq!(m.max_violation(&[3.0]), 0.0);
        assert_eq!(m.max_violation(&[4.0]), 1.0);
    }

    #[test]
    fn substitute_moves_fixed_terms() {
        let mut m = LinearModel::new("t", ObjSense::Minimize);
        let x = m.add_continuous("x", 0.0, 10.0);
        let y = m.add_binary("y");
        m.add_row("a", LinExpr::term(x, 1.0).with(y, 4.0), RowSense::Ge, 5.0);
        m.add_row("b", LinExpr::term(y, 1.0), RowSense::Le, 1.0);
        m.objective = LinExpr::term(x, 2.0).with(y, 3.0);
        let fixed = HashMap::from([(y, 1.0)]);
        let s = m.substitute(&fixed, 1e-9).unwrap();
        assert_eq!(s.num_vars(), 1);
        assert_eq!(s.num_rows(), 1);
        assert_eq!(s.rows()[0].rhs, 1.0);
        assert_eq!(s.objective.constant, 3.0);
        assert!(s.is_lp());

        let bad = HashMap::from([(y, 2.0)]);
        assert_eq!(m.substitute(&bad, 1e-9).unwrap_err(), "b");
    }

    #[test]
    fn validate_catches_bad_bounds() {
        let mut m = LinearModel::new("t", ObjSense::Minimize);
        m.add_continuous("x", 1.0, 0.0);
        assert!(matches!(m.validate(), Err(ModelError::BadBounds(_))));
        let mut m = LinearModel::new("t", ObjSense::Minimize);
        m.add_var("b", -1.0, 1.0, VarKind::Binary);
        assert!(matches!(m.validate(), Err(ModelError::BinaryBounds(_))));
    }

    #[test]
    fn lp_format_lists_sections() {
        let mut m = LinearModel::new("t", ObjSense::Maximize);
        let x = m.add_binary("x[0]");
        m.add_row("c[1]", LinExpr::term(x, 1.0), RowSense::Le, 5.0);
        m.objective = LinExpr::term(x, 1.0);
        let text = m.to_lp_format();
        assert!(text.contains("Maximize"));
        assert!(text.contains("c_1_:"));
        assert!(text.contains("Binary\n x_0_"));
    }

    impl LinExpr {
        fn clone_with_constant(&self, c: f64) -> LinExpr {
            let mut e = self.clone();
            e.constant = c;
            e
        }
    }
}
