//! Model builders: first stage, restoration LP, master and subproblem.
//!
//! Naming contract: first-stage variables `y[l]`, `w[n]`, `f[e]`; DR
//! multipliers `beta[l,t]` and epigraph `lambda`; recourse variables `p`,
//! `q` (per line and period), `xp`, `xq`, `v`, `s` (per node and period),
//! prefixed by the pool index inside the master (`s[j,n,t]`); rows `bal_p`,
//! `bal_q`, `cap_p`, `cap_q`, `vdrop_hi`, `vdrop_lo`, `gen_p`, `gen_q` and
//! `cut[j]`. Subproblem availability bits are `z[l,t]`; dual variables of the
//! restoration LP are `dual[<row>]` and their products `mc[<row>]`.

mod config;
mod master;
mod restoration;
mod subproblem;

pub use config::{check_configuration, tree_flow, Configuration};
pub use master::{build_first_stage, build_master, build_ro_master, FirstStageVars, Master, Mode};
pub use restoration::{
    build_restoration, build_restoration_reduced, voltage_big_m, BlockVars, ParamKind, ParamRow, Restoration,
};
pub use subproblem::{build_ro_subproblem, build_subproblem, dual_bound, Product, Subproblem, DUAL_BOUND_SCALE};

#[cfg(test)]
pub(crate) mod tests {
    use crate::grid::tests::{line, node};
    use crate::grid::NetworkInstance;

    pub(crate) fn fixture(name: &str) -> NetworkInstance {
        crate::fixtures::fixture(name).unwrap()
    }

    /// Substation 1 feeding leaves 2 and 3 over two periods.
    pub(crate) fn star() -> NetworkInstance {
        let mut nodes = vec![node(1, true), node(2, false), node(3, false)];
        for n in &mut nodes {
            n.load_p = vec![n.load_p[0], n.load_p[0] * 1.5];
            n.load_q = vec![n.load_q[0], n.load_q[0]];
            n.dg_candidate = false;
        }
        let mut lines = vec![line(1, 2, 1.0), line(1, 3, 1.0)];
        for l in &mut lines {
            l.mu_max = vec![0.1, 0.1];
        }
        NetworkInstance {
            nodes,
            lines,
            periods: 2,
            budget_cost: 10.0,
            budget_dg: 0,
            n_z: 1,
            v_min: 0.95,
            v_max: 1.05,
            v_ref: 1000.0,
            coords: None,
        }
    }
}
