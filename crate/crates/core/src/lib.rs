//! Deterministic dispersion of `n` robots on `n`-node anonymous port-labeled
//! graphs: graph generators, a synchronous round engine, five algorithms, and
//! independent checkers for their round and memory bounds.

pub mod algorithms;
pub mod engine;
pub mod portgraph;
pub mod trace;
pub mod verify;

pub use algorithms::{run_kind, AlgorithmKind, Incompatible};
pub use engine::{Label, Placement, RunOptions, SimError};
pub use portgraph::{FamilyKind, GraphError, GraphFamily, PortGraph};
pub use trace::Trace;
