//! Verification toolkit for aAPP, an affinity-aware language for
//! serverless function scheduling policies.
//!
//! The pipeline is: [`parser`] reads scripts and platform configurations,
//! [`encoder`] resolves them into an [`EncodedPolicy`], [`semantics`]
//! executes the scheduling transition system, [`analysis`] decides
//! reachability and co-occurrence queries, and [`pddl`] emits planning
//! encodings of the same problems.

pub mod analysis;
pub mod encoder;
#[cfg(test)]
mod fixtures;
pub mod model;
pub mod parser;
pub mod pddl;
pub mod semantics;
pub mod yaml;

pub use model::{
    Block, CanonicalState, Configuration, EncodedPolicy, FunctionId, GoalConstraint, GoalSpec,
    InvalidateOpt, Label, ModelError, Polarity, Registry, Strategy, Tag, Trace, WorkerId,
    WorkerSet, WorkerState,
};
