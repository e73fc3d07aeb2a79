//! Anonymous port-labeled graphs.
//!
//! Every node numbers its incident edges with local ports `0..degree`. The two
//! endpoints of an edge number it independently, so nothing may be inferred
//! from one side's port about the other's. Node ids exist only for simulator
//! bookkeeping and are never handed to a robot.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::{self, Write as _};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub type NodeId = usize;
pub type Port = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("port {port} is out of range at node {node} (degree {degree})")]
    InvalidPort { node: NodeId, port: Port, degree: usize },
    #[error("node {0} does not exist")]
    InvalidNode(NodeId),
    #[error("graph is not connected")]
    NotConnected,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("port table violates {} invariant(s); first: {}", .0.len(), .0[0])]
    Invalid(Vec<Violation>),
}

/// A broken [`PortGraph`] invariant together with its witnesses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// The local ports of `node` are not exactly `0..degree`.
    Contiguity { node: NodeId, ports: Vec<Port> },
    /// Port `port` at `node` maps to `(neighbor, neighbor_port)`, which does
    /// not map back.
    Reciprocity { node: NodeId, port: Port, neighbor: NodeId, neighbor_port: Port },
    /// A neighbor id outside `0..n`.
    DanglingNeighbor { node: NodeId, port: Port, neighbor: NodeId },
    SelfLoop { node: NodeId, port: Port },
    ParallelEdge { node: NodeId, neighbor: NodeId },
    /// Sum of degrees differs from twice the declared edge count.
    DegreeSum { degree_sum: usize, edge_count: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Contiguity { node, ports } => {
                write!(f, "contiguity: node {node} has ports {ports:?}")
            }
            Violation::Reciprocity { node, port, neighbor, neighbor_port } => write!(
                f,
                "reciprocity: ({node},{port}) -> ({neighbor},{neighbor_port}) has no matching back link"
            ),
            Violation::DanglingNeighbor { node, port, neighbor } => {
                write!(f, "dangling: ({node},{port}) points at missing node {neighbor}")
            }
            Violation::SelfLoop { node, port } => write!(f, "self-loop at ({node},{port})"),
            Violation::ParallelEdge { node, neighbor } => {
                write!(f, "parallel edges between {node} and {neighbor}")
            }
            Violation::DegreeSum { degree_sum, edge_count } => {
                write!(f, "degree sum {degree_sum} != 2 * {edge_count}")
            }
        }
    }
}

/// Unchecked port tables: for each node, `(local port, neighbor, neighbor port)`.
pub type RawPorts = Vec<Vec<(Port, NodeId, Port)>>;

/// Checks every port-graph invariant on unchecked tables. An empty result
/// means the tables describe a valid simple port-labeled graph.
pub fn validate_raw(raw: &RawPorts, edge_count: Option<usize>) -> Vec<Violation> {
    let n = raw.len();
    let mut violations = Vec::new();
    let lookup: Vec<BTreeMap<Port, (NodeId, Port)>> = raw
        .iter()
        .map(|entries| entries.iter().map(|&(p, v, q)| (p, (v, q))).collect())
        .collect();

    for (u, entries) in raw.iter().enumerate() {
        let mut ports: Vec<Port> = entries.iter().map(|e| e.0).collect();
        ports.sort_unstable();
        let contiguous = ports.iter().enumerate().all(|(i, &p)| i == p);
        if !contiguous {
            violations.push(Violation::Contiguity { node: u, ports });
        }
        let mut seen = BTreeSet::new();
        for &(p, v, q) in entries {
            if v >= n {
                violations.push(Violation::DanglingNeighbor { node: u, port: p, neighbor: v });
                continue;
            }
            if v == u {
                violations.push(Violation::SelfLoop { node: u, port: p });
            }
            if !seen.insert(v) && u < v {
                violations.push(Violation::ParallelEdge { node: u, neighbor: v });
            }
            if lookup[v].get(&q) != Some(&(u, p)) {
                violations.push(Violation::Reciprocity {
                    node: u,
                    port: p,
                    neighbor: v,
                    neighbor_port: q,
                });
            }
        }
    }
    if let Some(m) = edge_count {
        let degree_sum: usize = raw.iter().map(Vec::len).sum();
        if degree_sum != 2 * m {
            violations.push(Violation::DegreeSum { degree_sum, edge_count: m });
        }
    }
    violations
}

/// A validated simple undirected graph with per-node port numbering.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PortGraph {
    /// `ports[v][p]` is `(neighbor, neighbor's port)`.
    ports: Vec<Vec<(NodeId, Port)>>,
    edge_count: usize,
}

impl PortGraph {
    pub fn from_raw(raw: RawPorts) -> Result<Self, GraphError> {
        if raw.is_empty() {
            return Err(GraphError::InvalidParameter("graph needs at least one node".into()));
        }
        let violations = validate_raw(&raw, None);
        if !violations.is_empty() {
            return Err(GraphError::Invalid(violations));
        }
        let mut ports = Vec::with_capacity(raw.len());
        for mut entries in raw {
            entries.sort_unstable_by_key(|e| e.0);
            ports.push(entries.into_iter().map(|(_, v, q)| (v, q)).collect::<Vec<_>>());
        }
        let degree_sum: usize = ports.iter().map(Vec::len).sum();
        Ok(Self { ports, edge_count: degree_sum / 2 })
    }

    /// Builds a graph from ordered neighbor lists: the i-th entry of
    /// `neighbors[v]` is reached through port i of v.
    pub fn from_neighbor_lists(neighbors: &[Vec<NodeId>]) -> Result<Self, GraphError> {
        let n = neighbors.len();
        let mut index: Vec<BTreeMap<NodeId, Port>> = vec![BTreeMap::new(); n];
        for (u, list) in neighbors.iter().enumerate() {
            for (p, &v) in list.iter().enumerate() {
                if v >= n {
                    return Err(GraphError::InvalidNode(v));
                }
                if index[u].insert(v, p).is_some() {
                    return Err(GraphError::Invalid(vec![Violation::ParallelEdge {
                        node: u,
                        neighbor: v,
                    }]));
                }
            }
        }
        let mut raw: RawPorts = vec![Vec::new(); n];
        for (u, list) in neighbors.iter().enumerate() {
            for (p, &v) in list.iter().enumerate() {
                // a missing back link becomes a reciprocity violation below
                let q = index[v].get(&u).copied().unwrap_or(usize::MAX);
                raw[u].push((p, v, q));
            }
        }
        Self::from_raw(raw)
    }

    /// Builds a graph from an edge list with ports assigned in ascending
    /// neighbor order at every node.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self, GraphError> {
        let mut lists = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::InvalidNode(u.max(v)));
            }
            lists[u].push(v);
            lists[v].push(u);
        }
        for list in &mut lists {
            list.sort_unstable();
        }
        Self::from_neighbor_lists(&lists)
    }

    pub fn node_count(&self) -> usize {
        self.ports.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.ports[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.ports.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn neighbor_via_port(&self, v: NodeId, p: Port) -> Result<(NodeId, Port), GraphError> {
        let table = self.ports.get(v).ok_or(GraphError::InvalidNode(v))?;
        table
            .get(p)
            .copied()
            .ok_or(GraphError::InvalidPort { node: v, port: p, degree: table.len() })
    }

    /// Neighbors of `v` in port order.
    pub fn neighbors(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.ports[v].iter().map(|&(u, _)| u)
    }

    /// Edges as `(u, pu, v, pv)` with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(NodeId, Port, NodeId, Port)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for (u, table) in self.ports.iter().enumerate() {
            for (pu, &(v, pv)) in table.iter().enumerate() {
                if u < v {
                    out.push((u, pu, v, pv));
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn to_raw(&self) -> RawPorts {
        self.ports
            .iter()
            .map(|t| t.iter().enumerate().map(|(p, &(v, q))| (p, v, q)).collect())
            .collect()
    }

    /// Re-checks all invariants.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let violations = validate_raw(&self.to_raw(), Some(self.edge_count));
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    /// Relabels the ports of every node by an independent seeded permutation.
    pub fn permute_ports(&self, seed: u64) -> PortGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let lists: Vec<Vec<NodeId>> = self
            .ports
            .iter()
            .map(|t| {
                let mut l: Vec<NodeId> = t.iter().map(|e| e.0).collect();
                l.shuffle(&mut rng);
                l
            })
            .collect();
        PortGraph::from_neighbor_lists(&lists).expect("permuting ports preserves validity")
    }

    /// BFS distances from `source`; `None` for unreachable nodes.
    pub fn bfs_distances(&self, source: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count()];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for v in self.neighbors(u) {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.bfs_distances(0).iter().all(Option::is_some)
    }

    /// Largest BFS distance from `source` (the depth of the tree rooted there).
    pub fn eccentricity(&self, source: NodeId) -> Result<usize, GraphError> {
        self.bfs_distances(source)
            .into_iter()
            .try_fold(0, |acc, d| d.map(|d| acc.max(d)))
            .ok_or(GraphError::NotConnected)
    }

    pub fn metrics(&self) -> Result<GraphMetrics, GraphError> {
        let is_tree = self.edge_count + 1 == self.node_count();
        let diameter = if is_tree {
            // Double sweep: the farthest node from anywhere ends a longest path.
            let far = self.bfs_distances(0);
            let (end, _) = far
                .iter()
                .enumerate()
                .try_fold((0, 0), |(bv, bd), (v, d)| d.map(|d| if d > bd { (v, d) } else { (bv, bd) }))
                .ok_or(GraphError::NotConnected)?;
            self.eccentricity(end)?
        } else {
            let mut diameter = 0;
            for v in 0..self.node_count() {
                diameter = diameter.max(self.eccentricity(v)?);
            }
            diameter
        };
        Ok(GraphMetrics { diameter, max_degree: self.max_degree(), is_tree })
    }

    /// Line-based text form: header `n m`, then one `u pu v pv` line per edge.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {}", self.node_count(), self.edge_count).unwrap();
        for (u, pu, v, pv) in self.edges() {
            writeln!(out, "{u} {pu} {v} {pv}").unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<PortGraph, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let (header_line, header) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let head = parse_ints(header_line, header, 2)?;
        let (n, m) = (head[0], head[1]);
        if n == 0 {
            return Err(GraphError::Parse { line: header_line, message: "n must be positive".into() });
        }

        let mut raw: RawPorts = vec![Vec::new(); n];
        let mut origin: BTreeMap<(NodeId, Port), usize> = BTreeMap::new();
        let mut count = 0;
        let mut last = None;
        for (line, body) in lines {
            let f = parse_ints(line, body, 4)?;
            let (u, pu, v, pv) = (f[0], f[1], f[2], f[3]);
            let err = |message: String| GraphError::Parse { line, message };
            if u >= v {
                return Err(err(format!("expected u < v, got {u} {v}")));
            }
            if v >= n {
                return Err(err(format!("node {v} out of range for n = {n}")));
            }
            if last.is_some_and(|prev| prev >= (u, pu, v, pv)) {
                return Err(err("edge lines must be sorted and distinct".into()));
            }
            last = Some((u, pu, v, pv));
            for key in [(u, pu), (v, pv)] {
                if let Some(first) = origin.insert(key, line) {
                    return Err(err(format!(
                        "port {} of node {} already used on line {first}",
                        key.1, key.0
                    )));
                }
            }
            raw[u].push((pu, v, pv));
            raw[v].push((pv, u, pu));
            count += 1;
        }
        if count != m {
            return Err(GraphError::Parse {
                line: header_line,
                message: format!("header declares {m} edges, found {count}"),
            });
        }
        let violations = validate_raw(&raw, Some(m));
        if let Some(first) = violations.first() {
            let line = match first {
                Violation::Contiguity { node, ports } => ports
                    .iter()
                    .enumerate()
                    .find(|&(i, &p)| i != p)
                    .and_then(|(_, &p)| origin.get(&(*node, p)).copied()),
                Violation::ParallelEdge { node, neighbor } => raw[*node]
                    .iter()
                    .filter(|e| e.1 == *neighbor)
                    .filter_map(|e| origin.get(&(*node, e.0)).copied())
                    .max(),
                _ => None,
            }
            .unwrap_or(header_line);
            return Err(GraphError::Parse { line, message: first.to_string() });
        }
        PortGraph::from_raw(raw)
    }
}

fn parse_ints(line: usize, body: &str, expected: usize) -> Result<Vec<usize>, GraphError> {
    let fields: Vec<&str> = body.split_whitespace().collect();
    if fields.len() != expected {
        return Err(GraphError::Parse {
            line,
            message: format!("expected {expected} fields, found {}", fields.len()),
        });
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<usize>().map_err(|_| GraphError::Parse {
                line,
                message: format!("not a non-negative integer: {f:?}"),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphMetrics {
    pub diameter: usize,
    pub max_degree: usize,
    pub is_tree: bool,
}

/// Path on `0..n`; port 0 of node i > 0 leads to i - 1.
pub fn build_path(n: usize) -> Result<PortGraph, GraphError> {
    if n == 0 {
        return Err(GraphError::InvalidParameter("path needs n >= 1".into()));
    }
    let lists: Vec<Vec<NodeId>> = (0..n)
        .map(|i| {
            let mut l = Vec::with_capacity(2);
            if i > 0 {
                l.push(i - 1);
            }
            if i + 1 < n {
                l.push(i + 1);
            }
            l
        })
        .collect();
    PortGraph::from_neighbor_lists(&lists)
}

/// Cycle on `0..n`; port 0 of node i leads to i - 1 and port 1 to i + 1 (mod n).
pub fn build_ring(n: usize) -> Result<PortGraph, GraphError> {
    if n < 3 {
        return Err(GraphError::InvalidParameter(format!("ring needs n >= 3, got {n}")));
    }
    let lists: Vec<Vec<NodeId>> = (0..n).map(|i| vec![(i + n - 1) % n, (i + 1) % n]).collect();
    PortGraph::from_neighbor_lists(&lists)
}

fn random_tree_edges(n: usize, rng: &mut ChaCha8Rng) -> Vec<(NodeId, NodeId)> {
    (1..n).map(|v| (rng.gen_range(0..v), v)).collect()
}

fn shuffled_ports(n: usize, edges: &[(NodeId, NodeId)], rng: &mut ChaCha8Rng) -> PortGraph {
    let mut lists = vec![Vec::new(); n];
    for &(u, v) in edges {
        lists[u].push(v);
        lists[v].push(u);
    }
    for l in &mut lists {
        l.sort_unstable();
        l.shuffle(rng);
    }
    PortGraph::from_neighbor_lists(&lists).expect("generated edges form a simple graph")
}

/// Random recursive tree: node v > 0 attaches to a uniformly chosen earlier
/// node; ports are shuffled per node.
pub fn build_random_tree(n: usize, seed: u64) -> Result<PortGraph, GraphError> {
    if n == 0 {
        return Err(GraphError::InvalidParameter("tree needs n >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = random_tree_edges(n, &mut rng);
    Ok(shuffled_ports(n, &edges, &mut rng))
}

/// Random spanning tree plus `m - (n - 1)` distinct extra edges drawn
/// uniformly from the remaining node pairs.
pub fn build_random_connected_graph(n: usize, m: usize, seed: u64) -> Result<PortGraph, GraphError> {
    if n == 0 {
        return Err(GraphError::InvalidParameter("graph needs n >= 1".into()));
    }
    let max_m = n * (n - 1) / 2;
    if m + 1 < n || m > max_m {
        return Err(GraphError::InvalidParameter(format!(
            "m = {m} outside [{}, {max_m}] for n = {n}",
            n - 1
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = random_tree_edges(n, &mut rng);
    let present: BTreeSet<(NodeId, NodeId)> = edges.iter().copied().collect();
    let mut candidates = Vec::with_capacity(max_m - edges.len());
    for u in 0..n {
        for v in u + 1..n {
            if !present.contains(&(u, v)) {
                candidates.push((u, v));
            }
        }
    }
    let extra = m - edges.len();
    let picks = rand::seq::index::sample(&mut rng, candidates.len(), extra);
    let mut picks = picks.into_vec();
    picks.sort_unstable();
    edges.extend(picks.into_iter().map(|i| candidates[i]));
    Ok(shuffled_ports(n, &edges, &mut rng))
}

/// Two equal-degree near-cliques joined by bridges, the worst case for the
/// linear round lower bound. Nodes are the a-clique, then the b-clique, then
/// (for odd n) the hub c.
pub fn build_dumbbell(n: usize) -> Result<PortGraph, GraphError> {
    if n < 6 {
        return Err(GraphError::InvalidParameter(format!("dumbbell needs n >= 6, got {n}")));
    }
    let k = n / 2;
    let mut edges = Vec::new();
    for base in [0, k] {
        for i in 0..k {
            for j in i + 1..k {
                if !(i == 0 && j == k - 1) {
                    edges.push((base + i, base + j));
                }
            }
        }
    }
    let (a1, ak, b1, bk) = (0, k - 1, k, 2 * k - 1);
    if n.is_multiple_of(2) {
        edges.push((a1, b1));
        edges.push((ak, bk));
    } else {
        let c = 2 * k;
        edges.extend([(a1, c), (ak, c), (b1, c), (bk, c)]);
    }
    PortGraph::from_edges(n, &edges)
}

/// The graph families of the experiment sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FamilyKind {
    Path,
    Ring,
    Tree,
    Connected,
    Dumbbell,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 5] = [
        FamilyKind::Path,
        FamilyKind::Ring,
        FamilyKind::Tree,
        FamilyKind::Connected,
        FamilyKind::Dumbbell,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Path => "path",
            FamilyKind::Ring => "ring",
            FamilyKind::Tree => "tree",
            FamilyKind::Connected => "connected",
            FamilyKind::Dumbbell => "dumbbell",
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FamilyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| GraphError::InvalidParameter(format!("unknown family {s:?}")))
    }
}

/// A generator family with its parameters.
///
/// `permute` applies a seeded port relabeling on top of the canonical ports of
/// path, ring and dumbbell. Tree and connected graphs always use seeded ports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GraphFamily {
    pub kind: FamilyKind,
    pub n: usize,
    pub m: Option<usize>,
    pub seed: u64,
    pub permute: bool,
}

impl GraphFamily {
    pub fn new(kind: FamilyKind, n: usize) -> Self {
        Self { kind, n, m: None, seed: 0, permute: false }
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn permuted(mut self, permute: bool) -> Self {
        self.permute = permute;
        self
    }

    pub fn build(&self) -> Result<PortGraph, GraphError> {
        let g = match self.kind {
            FamilyKind::Path => build_path(self.n)?,
            FamilyKind::Ring => build_ring(self.n)?,
            FamilyKind::Tree => return build_random_tree(self.n, self.seed),
            FamilyKind::Connected => {
                let m = self.m.ok_or_else(|| {
                    GraphError::InvalidParameter("connected family needs m".into())
                })?;
                return build_random_connected_graph(self.n, m, self.seed);
            }
            FamilyKind::Dumbbell => build_dumbbell(self.n)?,
        };
        Ok(if self.permute { g.permute_ports(self.seed) } else { g })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn degrees(g: &PortGraph) -> Vec<usize> {
        (0..g.node_count()).map(|v| g.degree(v)).collect()
    }

    #[test]
    fn path_shapes() {
        let g = build_path(1).unwrap();
        assert_eq!((g.node_count(), g.edge_count(), g.degree(0)), (1, 0, 0));
        let g = build_path(2).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.neighbor_via_port(0, 0).unwrap(), (1, 0));
        let g = build_path(5).unwrap();
        assert_eq!(g.edge_count(), 4);
        assert_eq!(degrees(&g), vec![1, 2, 2, 2, 1]);
        for i in 1..5 {
            assert_eq!(g.neighbor_via_port(i, 0).unwrap().0, i - 1);
        }
        assert!(matches!(build_path(0), Err(GraphError::InvalidParameter(_))));
    }

    #[test]
    fn ring_shapes() {
        let g = build_ring(3).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert_eq!(degrees(&g), vec![2, 2, 2]);
        let g = build_ring(4).unwrap();
        assert_eq!(g.edge_count(), 4);
        assert_eq!(g.neighbor_via_port(0, 1).unwrap(), (1, 0));
        assert_eq!(build_ring(6).unwrap().metrics().unwrap().diameter, 3);
        assert!(build_ring(2).is_err());
    }

    #[test]
    fn neighbor_via_port_bounds() {
        let g = build_path(2).unwrap();
        assert_eq!(g.neighbor_via_port(0, 0).unwrap(), (1, 0));
        assert_eq!(
            g.neighbor_via_port(0, 1),
            Err(GraphError::InvalidPort { node: 0, port: 1, degree: 1 })
        );
    }

    #[test]
    fn random_tree_is_tree_and_deterministic() {
        assert_eq!(build_random_tree(1, 99).unwrap().edge_count(), 0);
        let g = build_random_tree(10, 7).unwrap();
        assert_eq!(g.edge_count(), 9);
        assert!(g.is_connected());
        assert!(g.metrics().unwrap().is_tree);
        assert_eq!(g, build_random_tree(10, 7).unwrap());
    }

    #[test]
    fn random_connected_edge_cases() {
        let g = build_random_connected_graph(4, 3, 1).unwrap();
        assert!(g.is_connected() && g.metrics().unwrap().is_tree);
        let g = build_random_connected_graph(4, 6, 1).unwrap();
        assert_eq!(degrees(&g), vec![3, 3, 3, 3]);
        let g = build_random_connected_graph(10, 15, 3).unwrap();
        assert_eq!(g.edge_count(), 15);
        assert!(g.is_connected());
        assert!(g.validate().is_ok());
        assert!(build_random_connected_graph(4, 7, 1).is_err());
        assert!(build_random_connected_graph(4, 2, 1).is_err());
    }

    #[test]
    fn dumbbell_small_cases() {
        let g = build_dumbbell(6).unwrap();
        assert_eq!(g.edge_count(), 6);
        assert!(degrees(&g).iter().all(|&d| d == 2));
        assert_eq!(g.metrics().unwrap().max_degree, 2);
        let g = build_dumbbell(7).unwrap();
        assert_eq!(g.edge_count(), 8);
        let mut d = degrees(&g);
        d.sort_unstable();
        assert_eq!(d, vec![2, 2, 2, 2, 2, 2, 4]);
        assert!(degrees(&build_dumbbell(10).unwrap()).iter().all(|&d| d == 4));
        assert!(build_dumbbell(5).is_err());
    }

    #[test]
    fn validate_reports_reciprocity() {
        // port 0 at node 0 claims (1, 0) but node 1's port 0 points at node 2
        let raw: RawPorts = vec![
            vec![(0, 1, 0)],
            vec![(0, 2, 0), (1, 0, 0)],
            vec![(0, 1, 0)],
        ];
        let v = validate_raw(&raw, None);
        assert!(v.contains(&Violation::Reciprocity { node: 0, port: 0, neighbor: 1, neighbor_port: 0 }));
    }

    #[test]
    fn validate_reports_contiguity() {
        let raw: RawPorts = vec![vec![(0, 1, 0), (2, 2, 0)], vec![(0, 0, 0)], vec![(0, 0, 2)]];
        let v = validate_raw(&raw, None);
        assert_eq!(v, vec![Violation::Contiguity { node: 0, ports: vec![0, 2] }]);
        assert!(PortGraph::from_raw(raw).is_err());
    }

    #[test]
    fn validate_ok_on_generators() {
        assert!(build_ring(5).unwrap().validate().is_ok());
    }

    #[test]
    fn serialize_format() {
        assert_eq!(build_path(2).unwrap().serialize(), "2 1\n0 0 1 0\n");
        let g = build_dumbbell(8).unwrap();
        assert_eq!(PortGraph::parse(&g.serialize()).unwrap(), g);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = PortGraph::parse("2 1\n0 0 1 1\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 2, .. }), "{err:?}");
        let err = PortGraph::parse("3 1\n0 0 x 0\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 2, .. }));
        let err = PortGraph::parse("3 2\n0 0 1 0\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 1, .. }));
        let err = PortGraph::parse("# comment\n\n3 1\n1 0 0 0\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 4, .. }));
    }

    #[test]
    fn parse_accepts_comments() {
        let g = PortGraph::parse("# a path\n2 1 # header\n0 0 1 0\n").unwrap();
        assert_eq!(g, build_path(2).unwrap());
    }

    #[test]
    fn metrics_examples() {
        let m = build_ring(6).unwrap().metrics().unwrap();
        assert_eq!(m, GraphMetrics { diameter: 3, max_degree: 2, is_tree: false });
        let m = build_path(5).unwrap().metrics().unwrap();
        assert_eq!(m, GraphMetrics { diameter: 4, max_degree: 2, is_tree: true });
        let split = PortGraph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(split.metrics(), Err(GraphError::NotConnected));
    }

    #[test]
    fn permuted_ports_keep_topology() {
        let g = build_dumbbell(9).unwrap();
        let p = g.permute_ports(4);
        assert!(p.validate().is_ok());
        let mut a: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.0, e.2)).collect();
        let mut b: Vec<(usize, usize)> = p.edges().iter().map(|e| (e.0, e.2)).collect();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
        assert_eq!(p, g.permute_ports(4));
    }
}
