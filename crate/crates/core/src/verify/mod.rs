//! Checkers that only trust a trace and the graph: replay, dispersion, round
//! bounds, the rooted-tree stage lemma and memory scaling.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{default_horizon, Label, RunOptions, SimError};
use crate::portgraph::{FamilyKind, GraphError, GraphFamily, NodeId, PortGraph};
use crate::trace::Trace;
use crate::{run_kind, AlgorithmKind, Placement};

pub mod oracle;

pub use oracle::small_instance_oracle;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("round {round}: {message}")]
pub struct TraceError {
    pub round: u64,
    pub message: String,
}

impl TraceError {
    fn at(round: u64, message: impl Into<String>) -> Self {
        Self { round, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// True iff positions form a bijection robots → nodes.
pub fn is_dispersed(position: &[NodeId], n: usize) -> bool {
    if position.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    position.iter().all(|&v| v < n && !std::mem::replace(&mut seen[v], true))
}

/// Positions and node assignments rebuilt from a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replay {
    pub position: Vec<NodeId>,
    pub assignment: Vec<Option<Label>>,
    /// Node each label settled at.
    pub home: Vec<Option<NodeId>>,
    pub dispersed_at: Option<u64>,
}

impl Replay {
    /// Every node assigned and every assigned robot standing on its node.
    pub fn settled_dispersion(&self) -> bool {
        self.assignment
            .iter()
            .enumerate()
            .all(|(v, a)| a.is_some_and(|l| self.position[l as usize - 1] == v))
    }
}

/// Replays the moves and settlements of `t`, checking structural consistency
/// (and port-level consistency when `g` is given). `observer` sees the replay
/// after each round.
pub fn replay_with(
    t: &Trace,
    g: Option<&PortGraph>,
    mut observer: impl FnMut(u64, &Replay),
) -> Result<Replay, TraceError> {
    let n = t.n;
    if let Some(g) = g {
        if g.node_count() != n || g.edge_count() != t.m {
            return Err(TraceError::at(
                0,
                format!("trace is for n={} m={}, graph has n={} m={}", n, t.m, g.node_count(), g.edge_count()),
            ));
        }
    }
    if t.placement.len() != n || t.placement.iter().any(|&v| v >= n) {
        return Err(TraceError::at(0, "placement does not put n robots on valid nodes"));
    }
    let may_move_settled = t.algo == AlgorithmKind::RootedTree;
    let mut r = Replay {
        position: t.placement.clone(),
        assignment: vec![None; n],
        home: vec![None; n],
        dispersed_at: None,
    };
    for (i, rec) in t.rounds.iter().enumerate() {
        let round = i as u64 + 1;
        let err = |m: String| TraceError::at(round, m);
        if rec.round != round {
            return Err(err(format!("record numbered {} out of sequence", rec.round)));
        }
        let mut moved = vec![false; n];
        for &(label, node) in &rec.settled {
            let idx = robot_index(label, n).ok_or_else(|| err(format!("unknown label {label}")))?;
            if r.position[idx] != node {
                return Err(err(format!("robot {label} settles at {node} but stands at {}", r.position[idx])));
            }
            if let Some(holder) = r.assignment[node] {
                return Err(err(format!("node {node} already held by robot {holder}")));
            }
            if r.home[idx].is_some() {
                return Err(err(format!("robot {label} settles twice")));
            }
            r.assignment[node] = Some(label);
            r.home[idx] = Some(node);
        }
        for mv in &rec.moves {
            let idx = robot_index(mv.label, n).ok_or_else(|| err(format!("unknown label {}", mv.label)))?;
            if std::mem::replace(&mut moved[idx], true) {
                return Err(err(format!("robot {} moves twice", mv.label)));
            }
            if r.position[idx] != mv.from {
                return Err(err(format!("robot {} moves from {} but stands at {}", mv.label, mv.from, r.position[idx])));
            }
            if r.home[idx].is_some() && !may_move_settled {
                return Err(err(format!("settled robot {} moves", mv.label)));
            }
            if rec.settled.iter().any(|s| s.0 == mv.label) {
                return Err(err(format!("robot {} settles and moves in one round", mv.label)));
            }
            if mv.to >= n {
                return Err(err(format!("robot {} moves to missing node {}", mv.label, mv.to)));
            }
            if let Some(g) = g {
                let (to, _) = g
                    .neighbor_via_port(mv.from, mv.port)
                    .map_err(|e| err(format!("robot {}: {e}", mv.label)))?;
                if to != mv.to {
                    return Err(err(format!(
                        "port {} of node {} leads to {to}, trace says {}",
                        mv.port, mv.from, mv.to
                    )));
                }
            }
        }
        for mv in &rec.moves {
            r.position[mv.label as usize - 1] = mv.to;
        }
        if r.dispersed_at.is_none() && r.settled_dispersion() {
            r.dispersed_at = Some(round);
        }
        observer(round, &r);
    }
    Ok(r)
}

fn robot_index(label: Label, n: usize) -> Option<usize> {
    (label >= 1 && label as usize <= n).then(|| label as usize - 1)
}

pub fn replay(t: &Trace, g: Option<&PortGraph>) -> Result<Replay, TraceError> {
    replay_with(t, g, |_, _| {})
}

/// Earliest round after which every node holds its own settled robot.
pub fn first_dispersion_round(t: &Trace) -> Result<Option<u64>, TraceError> {
    Ok(replay(t, None)?.dispersed_at)
}

/// Full independent check of a trace against a graph: structural replay, the
/// recorded dispersion round, the horizon, and a fresh re-simulation compared
/// record by record.
pub fn verify_trace(t: &Trace, g: &PortGraph) -> Result<Replay, TraceError> {
    let r = replay(t, Some(g))?;
    let last = t.len();
    if r.dispersed_at != t.dispersed_at {
        return Err(TraceError::at(
            r.dispersed_at.or(t.dispersed_at).unwrap_or(last),
            format!("trace claims dispersion at {:?}, replay finds {:?}", t.dispersed_at, r.dispersed_at),
        ));
    }
    let expected_horizon = default_horizon(t.algo, g, &t.placement);
    if t.horizon != expected_horizon {
        return Err(TraceError::at(last, format!("horizon {} != expected {expected_horizon}", t.horizon)));
    }
    if last > t.horizon {
        return Err(TraceError::at(last, "trace runs past its horizon"));
    }
    // A run that stopped exactly at its dispersion round is an early-stop run.
    let stopped_early = last < t.horizon && t.dispersed_at == Some(last);
    let opts = RunOptions { horizon: None, early_stop: stopped_early };
    let fresh = run_kind(t.algo, g, &t.placement, opts).map_err(|e| match e {
        SimError::Fault { round, .. } => TraceError::at(round, format!("re-simulation faults: {e}")),
        other => TraceError::at(0, other.to_string()),
    })?;
    for (a, b) in t.rounds.iter().zip(&fresh.rounds) {
        if a != b {
            return Err(TraceError::at(a.round, "diverges from re-simulation"));
        }
    }
    if fresh.rounds.len() != t.rounds.len() {
        return Err(TraceError::at(
            fresh.len().min(t.len()) + 1,
            format!("re-simulation ran {} rounds, trace has {}", fresh.len(), t.len()),
        ));
    }
    Ok(r)
}

/// The proofs' explicit round bound for `kind` on `g`. Rooted-Tree needs
/// the root to measure depth.
pub fn round_bound(kind: AlgorithmKind, g: &PortGraph, root: Option<NodeId>) -> Result<u64, VerifyError> {
    let (n, m) = (g.node_count() as u64, g.edge_count() as u64);
    Ok(match kind {
        AlgorithmKind::Prt => 2 * n,
        AlgorithmKind::RootedGraph | AlgorithmKind::GraphNLogN => (2 * m).max(1),
        AlgorithmKind::GraphLogN => 2 * m * n + n * n,
        AlgorithmKind::RootedTree => {
            let root = root.ok_or_else(|| VerifyError::InvalidInstance("rooted-tree needs a rooted placement".into()))?;
            if !g.metrics()?.is_tree {
                return Err(VerifyError::InvalidInstance("rooted-tree needs a tree".into()));
            }
            let d = g.eccentricity(root)? as u64;
            (d + 1) * (d + 3)
        }
    })
}

fn common_root(placement: &[NodeId]) -> Option<NodeId> {
    Placement::Explicit(placement.to_vec()).root()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundReport {
    pub family: String,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "D")]
    pub diameter: usize,
    pub seed: u64,
    pub algo: AlgorithmKind,
    pub dispersed_at: Option<u64>,
    pub bound: u64,
    pub pass: bool,
    pub peak_bits: u32,
}

impl BoundReport {
    pub const CSV_HEADER: &'static str = "family,n,m,D,seed,algo,dispersed_at,bound,pass,peak_bits";

    pub fn csv_row(&self) -> String {
        let at = self.dispersed_at.map_or_else(String::new, |r| r.to_string());
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.family, self.n, self.m, self.diameter, self.seed, self.algo, at, self.bound, self.pass, self.peak_bits
        )
    }

    /// The single-run summary: `{algo, n, m, D, dispersed_at, bound, pass, peak_bits}`.
    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary {
            algo: AlgorithmKind,
            n: usize,
            m: usize,
            #[serde(rename = "D")]
            diameter: usize,
            dispersed_at: Option<u64>,
            bound: u64,
            pass: bool,
            peak_bits: u32,
        }
        serde_json::to_string(&Summary {
            algo: self.algo,
            n: self.n,
            m: self.m,
            diameter: self.diameter,
            dispersed_at: self.dispersed_at,
            bound: self.bound,
            pass: self.pass,
            peak_bits: self.peak_bits,
        })
        .expect("summary serializes")
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.csv_row())
    }
}

/// Compares the replayed dispersion round with the proof's bound.
pub fn check_time_bound(t: &Trace, g: &PortGraph, family: &str, seed: u64) -> Result<BoundReport, VerifyError> {
    if t.n != g.node_count() || t.m != g.edge_count() {
        return Err(VerifyError::InvalidInstance(format!(
            "trace is for n={} m={}, graph has n={} m={}",
            t.n,
            t.m,
            g.node_count(),
            g.edge_count()
        )));
    }
    let bound = round_bound(t.algo, g, common_root(&t.placement))?;
    let replayed = replay(t, Some(g))?;
    let verified = replayed.dispersed_at.is_some() && replayed.dispersed_at == t.dispersed_at;
    Ok(BoundReport {
        family: family.to_string(),
        n: t.n,
        m: t.m,
        diameter: g.metrics()?.diameter,
        seed,
        algo: t.algo,
        dispersed_at: replayed.dispersed_at,
        bound,
        pass: verified && replayed.dispersed_at.is_some_and(|r| r <= bound),
        peak_bits: t.peak_bits,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageCheck {
    pub stage: u64,
    /// All nodes at depth ≤ stage - 1 assigned when the stage ends.
    pub lemma: bool,
    /// Every settled robot home after the upward phase (round `2·stage`).
    pub residency: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageAudit {
    pub depth: u64,
    pub stages: Vec<StageCheck>,
    /// Rounds executed; termination means this is below the trace horizon.
    pub rounds: u64,
    pub bound: u64,
    pub terminated: bool,
    pub pass: bool,
}

/// Last global round of stage `i`: Σ_{j≤i} (2j + 1) = i(i + 2).
pub fn stage_end(i: u64) -> u64 {
    i * (i + 2)
}

/// Checks the stage lemma, stage-boundary residency and termination of a
/// Rooted-Tree trace using oracle BFS depths.
pub fn audit_rooted_tree_stages(t: &Trace, g: &PortGraph, root: NodeId) -> Result<StageAudit, VerifyError> {
    if t.algo != AlgorithmKind::RootedTree {
        return Err(VerifyError::InvalidInstance(format!("{} trace is not a rooted-tree run", t.algo)));
    }
    if !g.metrics()?.is_tree {
        return Err(VerifyError::InvalidInstance("graph is not a tree".into()));
    }
    let depth_of: Vec<u64> = g.bfs_distances(root).into_iter().map(|d| d.expect("tree is connected") as u64).collect();
    let d = *depth_of.iter().max().unwrap_or(&0);
    let mut stages: Vec<StageCheck> = (1..=d + 1).map(|i| StageCheck { stage: i, lemma: false, residency: false }).collect();
    replay_with(t, Some(g), |round, r| {
        for check in stages.iter_mut() {
            let i = check.stage;
            if round == stage_end(i) {
                check.lemma = (0..g.node_count()).all(|v| depth_of[v] > i - 1 || r.assignment[v].is_some());
            }
            if round == stage_end(i) - 1 {
                check.residency = r
                    .home
                    .iter()
                    .enumerate()
                    .all(|(idx, h)| h.is_none_or(|v| r.position[idx] == v));
            }
        }
    })?;
    let bound = (d + 1) * (d + 3);
    let rounds = t.len();
    let terminated = rounds < t.horizon && rounds <= bound;
    let pass = terminated && stages.iter().all(|s| s.lemma && s.residency);
    Ok(StageAudit { depth: d, stages, rounds, bound, terminated, pass })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryRow {
    pub n: usize,
    pub peak_bits: u32,
    /// `peak / log₂ n`, or `peak / (n log₂ n)` for Graph-N-LogN.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryReport {
    pub kind: AlgorithmKind,
    pub family: FamilyKind,
    pub rows: Vec<MemoryRow>,
    pub pass: bool,
}

/// Constant `c` in the Graph-N-LogN check `peak ≤ c · n log₂ n`.
pub const NLOGN_CONSTANT: f64 = 4.0;

/// The instance each algorithm is measured on at size `n`.
pub fn memory_instance(kind: AlgorithmKind, n: usize) -> (GraphFamily, Placement) {
    let connected = GraphFamily::new(FamilyKind::Connected, n).with_m((2 * n).min(n * (n - 1) / 2).max(n - 1)).with_seed(1);
    match kind {
        AlgorithmKind::Prt => (GraphFamily::new(FamilyKind::Ring, n), Placement::Rooted(0)),
        AlgorithmKind::RootedGraph => (connected, Placement::Rooted(0)),
        AlgorithmKind::GraphLogN | AlgorithmKind::GraphNLogN => (connected, Placement::Random(1)),
        AlgorithmKind::RootedTree => (GraphFamily::new(FamilyKind::Tree, n).with_seed(1), Placement::Rooted(0)),
    }
}

/// Peak declared bits per robot over a size sweep, with the constant-ratio
/// check: max ratio ≤ 2 × the smallest size's ratio for the O(log n)
/// algorithms, and every ratio ≤ [`NLOGN_CONSTANT`] for Graph-N-LogN.
pub fn memory_scaling(kind: AlgorithmKind, sizes: &[usize]) -> Result<MemoryReport, VerifyError> {
    let mut rows = Vec::with_capacity(sizes.len());
    let mut family = FamilyKind::Ring;
    for &n in sizes {
        let (fam, placement) = memory_instance(kind, n);
        family = fam.kind;
        let g = fam.build()?;
        let nodes = placement.resolve(n)?;
        let t = run_kind(kind, &g, &nodes, RunOptions { horizon: None, early_stop: true })?;
        let log = (n as f64).log2().max(1.0);
        let scale = if kind == AlgorithmKind::GraphNLogN { n as f64 * log } else { log };
        rows.push(MemoryRow { n, peak_bits: t.peak_bits, ratio: t.peak_bits as f64 / scale });
    }
    let pass = match (kind, rows.first()) {
        (_, None) => true,
        (AlgorithmKind::GraphNLogN, _) => rows.iter().all(|r| r.ratio <= NLOGN_CONSTANT),
        (_, Some(first)) => rows.iter().all(|r| r.ratio <= 2.0 * first.ratio),
    };
    Ok(MemoryReport { kind, family, rows, pass })
}
