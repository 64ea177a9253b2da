//! Constraint-based structure learning: conditional-independence tests, the
//! PC algorithm with tiered background knowledge, and bootstrap edge
//! frequencies.

mod bootstrap;
mod citest;
mod pc;

pub use bootstrap::{bootstrap, infer_nodes, stable_edges, stable_graph, EdgeFrequency, EdgeFrequencyTable};
pub use citest::{ci_test, CiKind, CiResult, CiTest, Covariance};
pub use pc::{brute_force_skeleton, pc, pc_from_covariance, EdgeMark, Pdag, Tiers, MAX_CONDITIONING};
