pub mod causation;
pub mod dataset;
pub mod discovery;
pub mod error;
pub mod evaluate;
pub mod graph;
pub mod intervention;
pub mod nade;
pub mod rng;
pub mod selection;
pub mod world;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use graph::{CausalGraph, InterventionSet, Node, PathPartition, Value, VariableKind};
pub use intervention::{DoEstimate, TrainedModel};
pub use world::{pouring_graph, Overrides, Trial, WorldConfig};
