//! Solver-agnostic model layer.

pub mod dual;
pub mod model;
pub mod solver;

pub use dual::{dualize, mccormick_binary, BoundSide, Dualized};
pub use model::{
    name, Constraint, LinExpr, LinearModel, ModelError, ObjSense, RowId, RowSense, VarId, VarKind,
    Variable,
};
pub use solver::{
    solve, solver_by_name, HighsSolver, SolveParams, SolveResult, SolveStatus, Solver, SolverError,
    FEAS_TOL, SOLVER_ENV,
};
