//! Distributionally robust distribution-network expansion planning.

pub mod ccg;
pub mod fixtures;
pub mod formulation;
pub mod generate;
pub mod grid;
pub mod harness;
pub mod opt;
pub mod oracle;
pub mod rng;
pub mod scenario;

pub use generate::{generate_instance, InstanceTemplate};
pub use grid::{load_instance, parse_instance, InstanceError, LineSpec, NetworkInstance, NodeId, NodeSpec};
pub use opt::{LinearModel, SolveParams, SolveResult, SolveStatus, Solver};
pub use scenario::{AmbiguitySet, ContingencyScenario, FiniteDistribution, ScenarioError};
