//! The five transition functions.

use std::fmt;
use std::str::FromStr;

use crate::engine::{self, RunOptions, SimError};
use crate::portgraph::{NodeId, Port, PortGraph};
use crate::trace::Trace;

pub mod graph_logn;
pub mod graph_nlogn;
pub mod prt;
pub mod rooted_graph;
pub mod rooted_tree;

pub use graph_logn::GraphLogN;
pub use graph_nlogn::GraphNLogN;
pub use prt::PathRingTree;
pub use rooted_graph::RootedGraph;
pub use rooted_tree::RootedTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgorithmKind {
    Prt,
    RootedGraph,
    GraphLogN,
    RootedTree,
    GraphNLogN,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 5] = [
        AlgorithmKind::Prt,
        AlgorithmKind::RootedGraph,
        AlgorithmKind::GraphLogN,
        AlgorithmKind::RootedTree,
        AlgorithmKind::GraphNLogN,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Prt => "prt",
            AlgorithmKind::RootedGraph => "rooted-graph",
            AlgorithmKind::GraphLogN => "graph-logn",
            AlgorithmKind::RootedTree => "rooted-tree",
            AlgorithmKind::GraphNLogN => "graph-nlogn",
        }
    }

    /// Loop bound of the algorithm. Rooted-Tree terminates on its own; its
    /// value here is only a safety cap. The 2m loops run at least one round
    /// so that a single-node graph records its settlement.
    pub fn horizon(self, n: usize, m: usize) -> u64 {
        let (n, m) = (n as u64, m as u64);
        match self {
            AlgorithmKind::Prt => 2 * n,
            AlgorithmKind::RootedGraph | AlgorithmKind::GraphNLogN => (2 * m).max(1),
            AlgorithmKind::GraphLogN => 2 * m * n + n * n,
            AlgorithmKind::RootedTree => (3 * n * n).max(3),
        }
    }

    pub fn needs_rooted_placement(self) -> bool {
        matches!(self, AlgorithmKind::RootedGraph | AlgorithmKind::RootedTree)
    }

    pub fn needs_tree(self) -> bool {
        self == AlgorithmKind::RootedTree
    }

    /// Checks that `kind` may run on `g` from `placement`: the graph must be
    /// connected, PRT needs a path, ring or tree, and the rooted algorithms
    /// need every robot on one node.
    pub fn check_instance(self, g: &PortGraph, placement: &[NodeId]) -> Result<(), Incompatible> {
        let n = g.node_count();
        if placement.len() != n {
            return Err(Incompatible(format!("{} robots for {n} nodes", placement.len())));
        }
        if !g.is_connected() {
            return Err(Incompatible("graph is not connected".into()));
        }
        let tree = g.edge_count() + 1 == n;
        if self == AlgorithmKind::Prt && !tree && g.max_degree() > 2 {
            return Err(Incompatible("prt runs on paths, rings and trees only".into()));
        }
        if self.needs_tree() && !tree {
            return Err(Incompatible(format!("{self} needs a tree")));
        }
        let rooted = placement.iter().all(|&v| v == placement[0]);
        if self.needs_rooted_placement() && !rooted {
            return Err(Incompatible(format!("{self} needs all robots on one node")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("incompatible instance: {0}")]
pub struct Incompatible(pub String);

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AlgorithmKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown algorithm {s:?}"))
    }
}

/// Runs `kind` without observing intermediate configurations.
pub fn run_kind(
    kind: AlgorithmKind,
    g: &PortGraph,
    placement: &[NodeId],
    opts: RunOptions,
) -> Result<Trace, SimError> {
    match kind {
        AlgorithmKind::Prt => engine::run(&PathRingTree, g, placement, opts),
        AlgorithmKind::RootedGraph => engine::run(&RootedGraph, g, placement, opts),
        AlgorithmKind::GraphLogN => engine::run(&GraphLogN { n: g.node_count() }, g, placement, opts),
        AlgorithmKind::RootedTree => engine::run(&RootedTree, g, placement, opts),
        AlgorithmKind::GraphNLogN => engine::run(&GraphNLogN { n: g.node_count() }, g, placement, opts),
    }
}

/// `(p + 1) mod degree`, where a robot that never entered through any port
/// starts from port 0.
pub(crate) fn next_port(p: Option<Port>, degree: usize) -> Option<Port> {
    if degree == 0 {
        return None;
    }
    Some(p.map_or(0, |p| (p + 1) % degree))
}
