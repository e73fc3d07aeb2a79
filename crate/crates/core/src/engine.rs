//! The two-step synchronous round model.
//!
//! Every round, robots sharing a node first see one another's round-start
//! snapshot and compute (Phase 1), then all chosen moves happen at once
//! (Phase 2). Transition functions only ever see a [`NodeView`]; node ids stay
//! inside the engine.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::portgraph::{NodeId, Port, PortGraph};
use crate::trace::{Move, RoundRecord, Trace};
use crate::AlgorithmKind;

pub type Label = u32;

/// Field-width parameters for memory accounting. None of this is visible to
/// robots; it only sizes the declared fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
    pub max_degree: usize,
    pub horizon: u64,
    pub max_label: Label,
}

/// What one co-located robot publishes during Phase 1.
#[derive(Debug, Clone, Copy)]
pub struct Peer<'a, S> {
    pub label: Label,
    /// Port through which the robot entered this node; `None` if it never moved.
    pub entry: Option<Port>,
    pub state: &'a S,
}

/// Everything visible at a node in Phase 1, robots sorted by label.
#[derive(Debug, Clone, Copy)]
pub struct NodeView<'a, S> {
    pub degree: usize,
    pub robots: &'a [Peer<'a, S>],
}

/// A single robot's view: its node plus which of the robots it is.
#[derive(Debug, Clone, Copy)]
pub struct LocalView<'a, S> {
    pub node: NodeView<'a, S>,
    pub me: usize,
}

impl<'a, S> LocalView<'a, S> {
    pub fn degree(&self) -> usize {
        self.node.degree
    }

    pub fn label(&self) -> Label {
        self.node.robots[self.me].label
    }

    pub fn entry(&self) -> Option<Port> {
        self.node.robots[self.me].entry
    }

    pub fn peers(&self) -> impl Iterator<Item = &Peer<'a, S>> {
        let me = self.me;
        self.node.robots.iter().enumerate().filter(move |(i, _)| *i != me).map(|(_, p)| p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome<S> {
    pub state: S,
    /// Claims the current node in this round.
    pub settle: bool,
    pub mv: Option<Port>,
}

impl<S> Outcome<S> {
    pub fn stay(state: S) -> Self {
        Self { state, settle: false, mv: None }
    }

    pub fn settle(state: S) -> Self {
        Self { state, settle: true, mv: None }
    }

    pub fn go(state: S, port: Port) -> Self {
        Self { state, settle: false, mv: Some(port) }
    }
}

/// A transition function broke its own contract.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("robot {label}: {message}")]
pub struct AlgoFault {
    pub label: Label,
    pub message: String,
}

impl AlgoFault {
    pub fn new(label: Label, message: impl Into<String>) -> Self {
        Self { label, message: message.into() }
    }
}

/// A deterministic per-robot transition function.
///
/// `step_node` evaluates every robot at one node from the same snapshot. It
/// must give each robot exactly the result [`Algorithm::step`] would, so an
/// implementation is free to share work across co-located robots.
pub trait Algorithm {
    type State: Clone + fmt::Debug + PartialEq;

    fn kind(&self) -> AlgorithmKind;

    /// The initialization block for robots starting together on a node of the
    /// given degree; `labels` is sorted ascending. Returns `(state, settled)`.
    fn init(&self, degree: usize, labels: &[Label]) -> Vec<(Self::State, bool)>;

    /// Appends one outcome per robot of `view`, in order.
    fn step_into(&self, view: &NodeView<'_, Self::State>, out: &mut Vec<Outcome<Self::State>>) -> Result<(), AlgoFault>;

    fn step_node(&self, view: &NodeView<'_, Self::State>) -> Result<Vec<Outcome<Self::State>>, AlgoFault> {
        let mut out = Vec::with_capacity(view.robots.len());
        self.step_into(view, &mut out)?;
        Ok(out)
    }

    fn step(&self, view: &LocalView<'_, Self::State>) -> Result<Outcome<Self::State>, AlgoFault> {
        Ok(self.step_node(&view.node)?.swap_remove(view.me))
    }

    fn is_settled(&self, state: &Self::State) -> bool;

    /// Self-termination; only Rooted-Tree robots ever halt.
    fn is_halted(&self, _state: &Self::State) -> bool {
        false
    }

    /// Declared persistent bits of this state.
    fn bits(&self, state: &Self::State, dims: &Dims) -> u32;

    /// Whether settled robots legitimately leave their node.
    fn settled_may_move(&self) -> bool {
        false
    }
}

/// Initial robot positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Placement {
    /// All robots on one node.
    Rooted(NodeId),
    /// Each robot on an independent uniform node.
    Random(u64),
    /// Robot with label i on node i - 1.
    Identity,
    /// Robot with label i on `nodes[i - 1]`.
    Explicit(Vec<NodeId>),
}

impl Placement {
    pub fn resolve(&self, n: usize) -> Result<Vec<NodeId>, SimError> {
        let nodes = match self {
            Placement::Rooted(v) => vec![*v; n],
            Placement::Random(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            }
            Placement::Identity => (0..n).collect(),
            Placement::Explicit(nodes) => nodes.clone(),
        };
        check_positions(&nodes, n)?;
        Ok(nodes)
    }

    pub fn root(&self) -> Option<NodeId> {
        match self {
            Placement::Rooted(v) => Some(*v),
            Placement::Explicit(nodes) => {
                let first = *nodes.first()?;
                nodes.iter().all(|&v| v == first).then_some(first)
            }
            _ => None,
        }
    }
}

pub(crate) fn check_positions(nodes: &[NodeId], n: usize) -> Result<(), SimError> {
    if nodes.len() != n {
        return Err(SimError::InvalidPlacement(format!(
            "{} robots placed on a {n}-node graph",
            nodes.len()
        )));
    }
    if let Some(v) = nodes.iter().find(|&&v| v >= n) {
        return Err(SimError::InvalidPlacement(format!("node {v} does not exist")));
    }
    Ok(())
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Placement::Rooted(v) => write!(f, "rooted:{v}"),
            Placement::Random(s) => write!(f, "random:{s}"),
            Placement::Identity => f.write_str("identity"),
            Placement::Explicit(nodes) => {
                let parts: Vec<String> = nodes.iter().map(ToString::to_string).collect();
                write!(f, "list:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for Placement {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SimError::InvalidPlacement(format!("cannot parse placement {s:?}"));
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        match head {
            "identity" if rest.is_empty() => Ok(Placement::Identity),
            "rooted" => rest.parse().map(Placement::Rooted).map_err(|_| bad()),
            "random" => rest.parse().map(Placement::Random).map_err(|_| bad()),
            "list" => rest
                .split(',')
                .map(|p| p.trim().parse::<NodeId>())
                .collect::<Result<Vec<_>, _>>()
                .map(Placement::Explicit)
                .map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FaultKind {
    #[error("robot {label} chose port {port} at a node of degree {degree}")]
    InvalidPort { label: Label, port: Port, degree: usize },
    #[error("robot {label} tried to settle at a node already held by robot {holder}")]
    NodeTaken { label: Label, holder: Label },
    #[error("robot {label} tried to settle a second time")]
    Resettle { label: Label },
    #[error("robots {first} and {second} both tried to settle in one round")]
    DoubleSettle { first: Label, second: Label },
    #[error("settled robot {label} tried to move")]
    SettledMoved { label: Label },
    #[error("robot {label} tried to settle and move in one round")]
    SettleAndMove { label: Label },
    #[error("transition returned {got} outcomes for {expected} robots")]
    OutcomeCount { expected: usize, got: usize },
    #[error(transparent)]
    Algorithm(#[from] AlgoFault),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("invalid placement: {0}")]
    InvalidPlacement(String),
    #[error("simulation fault in round {round} at node {node}: {kind}")]
    Fault { round: u64, node: NodeId, kind: FaultKind },
}

/// Robot positions, states and node assignments at a round boundary.
/// Robot `i` carries label `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration<S> {
    pub round: u64,
    pub position: Vec<NodeId>,
    pub state: Vec<S>,
    pub entry: Vec<Option<Port>>,
    /// `assignment[v]` is the label of the robot that settled at `v`.
    pub assignment: Vec<Option<Label>>,
}

impl<S> Configuration<S> {
    pub fn robot_count(&self) -> usize {
        self.position.len()
    }

    /// Every node is assigned and every assigned robot stands on its node.
    pub fn is_dispersed(&self) -> bool {
        self.assignment.iter().enumerate().all(|(v, a)| match a {
            Some(label) => self.position[*label as usize - 1] == v,
            None => false,
        })
    }
}

pub fn label_of(robot: usize) -> Label {
    robot as Label + 1
}

/// Round-0 configuration: robots placed and initialized, with any
/// initialization-block settlements already assigned.
pub fn initial_configuration<A: Algorithm>(
    alg: &A,
    g: &PortGraph,
    placement: &[NodeId],
) -> Result<Configuration<A::State>, SimError> {
    let n = g.node_count();
    check_positions(placement, n)?;
    let mut slots: Vec<Option<A::State>> = vec![None; n];
    let mut assignment = vec![None; n];
    for (v, group) in group_by_node(placement, n).into_iter().enumerate() {
        if group.is_empty() {
            continue;
        }
        let labels: Vec<Label> = group.iter().map(|&r| label_of(r)).collect();
        let init = alg.init(g.degree(v), &labels);
        let mut settled = None;
        for (&r, (state, settle)) in group.iter().zip(init) {
            if settle {
                if let Some(first) = settled {
                    return Err(SimError::Fault {
                        round: 0,
                        node: v,
                        kind: FaultKind::DoubleSettle { first, second: label_of(r) },
                    });
                }
                settled = Some(label_of(r));
            }
            slots[r] = Some(state);
        }
        assignment[v] = settled;
    }
    Ok(Configuration {
        round: 0,
        position: placement.to_vec(),
        state: slots.into_iter().map(|s| s.expect("every robot initialized")).collect(),
        entry: vec![None; n],
        assignment,
    })
}

fn group_by_node(position: &[NodeId], n: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); n];
    for (r, &v) in position.iter().enumerate() {
        groups[v].push(r);
    }
    groups
}

/// Per-round scratch space kept across the rounds of a run.
struct Buffers<S> {
    start: Vec<usize>,
    fill: Vec<usize>,
    order: Vec<usize>,
    next_state: Vec<Option<S>>,
    next_move: Vec<Option<Port>>,
}

impl<S: Clone> Buffers<S> {
    fn new(n: usize, robots: usize) -> Self {
        Self {
            start: vec![0; n + 1],
            fill: vec![0; n + 1],
            order: vec![0; robots],
            next_state: vec![None; robots],
            next_move: vec![None; robots],
        }
    }
}

/// Moves and settlements of one round.
pub type StepOutput = (Vec<Move>, Vec<(Label, NodeId)>);

/// Executes one round in place and returns its moves and settlements.
pub fn step_round<A: Algorithm>(
    alg: &A,
    g: &PortGraph,
    c: &mut Configuration<A::State>,
) -> Result<StepOutput, SimError> {
    step_round_with(alg, g, c, &mut Buffers::new(g.node_count(), c.robot_count()))
}

fn step_round_with<A: Algorithm>(
    alg: &A,
    g: &PortGraph,
    c: &mut Configuration<A::State>,
    buf: &mut Buffers<A::State>,
) -> Result<StepOutput, SimError> {
    let round = c.round + 1;
    let n = g.node_count();
    let mut moves = Vec::new();
    let mut settled = Vec::new();
    let Buffers { start, fill, order, next_state, next_move } = buf;

    // Robots bucketed by node, in label order within each bucket.
    start.fill(0);
    for &v in &c.position {
        start[v + 1] += 1;
    }
    for v in 0..n {
        start[v + 1] += start[v];
    }
    fill.copy_from_slice(start);
    for (r, &v) in c.position.iter().enumerate() {
        order[fill[v]] = r;
        fill[v] += 1;
    }
    let mut peers: Vec<Peer<'_, A::State>> = Vec::new();
    let mut outcomes: Vec<Outcome<A::State>> = Vec::new();

    for v in 0..n {
        let group = &order[start[v]..start[v + 1]];
        if group.is_empty() {
            continue;
        }
        let fault = |kind: FaultKind| SimError::Fault { round, node: v, kind };
        peers.clear();
        peers.extend(group.iter().map(|&r| Peer { label: label_of(r), entry: c.entry[r], state: &c.state[r] }));
        let view = NodeView { degree: g.degree(v), robots: &peers };
        outcomes.clear();
        alg.step_into(&view, &mut outcomes).map_err(|e| fault(e.into()))?;
        if outcomes.len() != group.len() {
            return Err(fault(FaultKind::OutcomeCount { expected: group.len(), got: outcomes.len() }));
        }
        let mut settler: Option<Label> = None;
        for (&r, out) in group.iter().zip(outcomes.drain(..)) {
            let label = label_of(r);
            let was_settled = alg.is_settled(&c.state[r]);
            if out.settle {
                if out.mv.is_some() {
                    return Err(fault(FaultKind::SettleAndMove { label }));
                }
                if was_settled {
                    return Err(fault(FaultKind::Resettle { label }));
                }
                if let Some(holder) = c.assignment[v] {
                    return Err(fault(FaultKind::NodeTaken { label, holder }));
                }
                if let Some(first) = settler {
                    return Err(fault(FaultKind::DoubleSettle { first, second: label }));
                }
                settler = Some(label);
            }
            if let Some(port) = out.mv {
                if was_settled && !alg.settled_may_move() {
                    return Err(fault(FaultKind::SettledMoved { label }));
                }
                if port >= view.degree {
                    return Err(fault(FaultKind::InvalidPort { label, port, degree: view.degree }));
                }
            }
            next_move[r] = out.mv;
            next_state[r] = Some(out.state);
        }
        if let Some(label) = settler {
            c.assignment[v] = Some(label);
            settled.push((label, v));
        }
    }

    for r in 0..c.robot_count() {
        c.state[r] = next_state[r].take().expect("every robot stepped");
        if let Some(port) = next_move[r] {
            let from = c.position[r];
            let (to, back) = g.neighbor_via_port(from, port).expect("port checked above");
            moves.push(Move { label: label_of(r), from, port, to });
            c.position[r] = to;
            c.entry[r] = Some(back);
        }
    }
    c.round = round;
    Ok((moves, settled))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Overrides the algorithm's default horizon.
    pub horizon: Option<u64>,
    /// Stop at the first dispersed round instead of running to the horizon.
    pub early_stop: bool,
}

/// The horizon a run uses when none is given. For Rooted-Tree this is a safety
/// cap: one stage past the depth-derived stage sum when the placement is rooted
/// on a tree, otherwise `3n²`.
pub fn default_horizon(kind: AlgorithmKind, g: &PortGraph, placement: &[NodeId]) -> u64 {
    let (n, m) = (g.node_count(), g.edge_count());
    if kind == AlgorithmKind::RootedTree {
        let first = placement.first().copied();
        let rooted = first.is_some_and(|r| placement.iter().all(|&v| v == r));
        if let (true, Some(root)) = (rooted && m + 1 == n, first) {
            if let Ok(d) = g.eccentricity(root) {
                let d = d as u64;
                return (d + 1) * (d + 3) + 2 * d + 5;
            }
        }
    }
    kind.horizon(n, m)
}

pub fn dims_for(kind: AlgorithmKind, g: &PortGraph, horizon: u64) -> Dims {
    let _ = kind;
    Dims {
        n: g.node_count(),
        m: g.edge_count(),
        max_degree: g.max_degree(),
        horizon,
        max_label: g.node_count() as Label,
    }
}

pub fn run<A: Algorithm>(
    alg: &A,
    g: &PortGraph,
    placement: &[NodeId],
    opts: RunOptions,
) -> Result<Trace, SimError> {
    run_with_observer(alg, g, placement, opts, |_, _| {})
}

/// Runs to the horizon (or to self-termination), calling `observer` after
/// every round with the new configuration.
pub fn run_with_observer<A: Algorithm>(
    alg: &A,
    g: &PortGraph,
    placement: &[NodeId],
    opts: RunOptions,
    mut observer: impl FnMut(&Configuration<A::State>, &RoundRecord),
) -> Result<Trace, SimError> {
    let kind = alg.kind();
    let horizon = opts.horizon.unwrap_or_else(|| default_horizon(kind, g, placement));
    let dims = dims_for(kind, g, horizon);
    let mut c = initial_configuration(alg, g, placement)?;
    let bits_of = |c: &Configuration<A::State>| c.state.iter().map(|s| alg.bits(s, &dims)).max().unwrap_or(0);
    let mut peak_bits = bits_of(&c);
    let mut pending: Vec<(Label, NodeId)> = c
        .assignment
        .iter()
        .enumerate()
        .filter_map(|(v, a)| a.map(|l| (l, v)))
        .collect();
    let mut rounds = Vec::new();
    let mut dispersed_at = None;
    let mut buffers = Buffers::new(g.node_count(), c.robot_count());

    while c.round < horizon {
        if c.state.iter().all(|s| alg.is_halted(s)) {
            break;
        }
        let (moves, mut settled) = step_round_with(alg, g, &mut c, &mut buffers)?;
        if !pending.is_empty() {
            pending.append(&mut settled);
            settled = std::mem::take(&mut pending);
        }
        settled.sort_unstable();
        let bits_max = bits_of(&c);
        peak_bits = peak_bits.max(bits_max);
        let record = RoundRecord { round: c.round, moves, settled, bits_max };
        observer(&c, &record);
        rounds.push(record);
        if dispersed_at.is_none() && c.is_dispersed() {
            dispersed_at = Some(c.round);
            if opts.early_stop {
                break;
            }
        }
    }

    Ok(Trace {
        algo: kind,
        n: g.node_count(),
        m: g.edge_count(),
        placement: placement.to_vec(),
        rounds,
        dispersed_at,
        horizon,
        peak_bits,
    })
}

/// ⌈log₂ x⌉ for x ≥ 1, and 0 for x ≤ 1.
pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

impl Dims {
    pub fn port_width(&self) -> u32 {
        ceil_log2(self.max_degree.max(2) as u64)
    }

    pub fn label_width(&self) -> u32 {
        ceil_log2(self.max_label as u64 + 1)
    }

    /// Width of a counter ranging over `0..=max`.
    pub fn counter_width(max: u64) -> u32 {
        ceil_log2(max + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_log2_values() {
        let got: Vec<u32> = [0, 1, 2, 3, 4, 5, 16, 17, 33].iter().map(|&x| ceil_log2(x)).collect();
        assert_eq!(got, vec![0, 0, 1, 2, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn placement_parsing() {
        for p in [
            Placement::Rooted(3),
            Placement::Random(9),
            Placement::Identity,
            Placement::Explicit(vec![0, 0, 2]),
        ] {
            assert_eq!(p.to_string().parse::<Placement>().unwrap(), p);
        }
        assert!("rooted:x".parse::<Placement>().is_err());
        assert!("bogus".parse::<Placement>().is_err());
    }

    #[test]
    fn placement_counts() {
        assert_eq!(Placement::Rooted(0).resolve(3).unwrap(), vec![0, 0, 0]);
        assert!(Placement::Explicit(vec![0, 1]).resolve(3).is_err());
        assert!(Placement::Rooted(5).resolve(3).is_err());
        let r = Placement::Random(4).resolve(10).unwrap();
        assert_eq!(r, Placement::Random(4).resolve(10).unwrap());
        assert!(r.iter().all(|&v| v < 10));
    }

    #[test]
    fn dispersion_predicate() {
        let c: Configuration<()> = Configuration {
            round: 0,
            position: vec![1, 0],
            state: vec![(), ()],
            entry: vec![None; 2],
            assignment: vec![Some(2), Some(1)],
        };
        assert!(c.is_dispersed());
        let c = Configuration { assignment: vec![Some(1), Some(2)], ..c };
        assert!(!c.is_dispersed());
    }
}
