//! Graph-N-LogN: every robot runs its own DFS and remembers, for each settled
//! robot it has met, the port it first entered that robot's node by.

use crate::engine::{AlgoFault, Algorithm, Dims, Label, NodeView, Outcome};
use crate::portgraph::Port;
use crate::AlgorithmKind;

use super::next_port;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GnPhase {
    Explore,
    Settled,
    Backtrack,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNLogNState {
    pub port_entered: Option<Port>,
    pub phase: GnPhase,
    /// `(label, parent port)` in insertion order; `None` is ⊥.
    pub labels_seen: Vec<(Label, Option<Port>)>,
    pub rnd_cntr: u64,
}

impl GraphNLogNState {
    pub fn lookup(&self, label: Label) -> Option<Option<Port>> {
        self.labels_seen.iter().find(|e| e.0 == label).map(|e| e.1)
    }
}

/// Robots know `n`, the capacity of their table.
#[derive(Debug, Clone, Copy)]
pub struct GraphNLogN {
    pub n: usize,
}

impl GraphNLogN {
    fn record(&self, s: &mut GraphNLogNState, label: Label, port: Option<Port>, me: Label) -> Result<(), AlgoFault> {
        if s.lookup(label).is_some() {
            return Err(AlgoFault::new(me, format!("label {label} recorded twice")));
        }
        if s.labels_seen.len() >= self.n {
            return Err(AlgoFault::new(me, format!("table overflow beyond {} entries", self.n)));
        }
        s.labels_seen.push((label, port));
        Ok(())
    }
}

impl Algorithm for GraphNLogN {
    type State = GraphNLogNState;

    fn kind(&self) -> AlgorithmKind {
        AlgorithmKind::GraphNLogN
    }

    fn init(&self, _degree: usize, labels: &[Label]) -> Vec<(GraphNLogNState, bool)> {
        labels
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let root = i == 0;
                let s = GraphNLogNState {
                    port_entered: None,
                    phase: if root { GnPhase::Settled } else { GnPhase::Explore },
                    // "Add <u, ⊥>": the robot's own label.
                    labels_seen: if root { Vec::new() } else { vec![(l, None)] },
                    rnd_cntr: 0,
                };
                (s, root)
            })
            .collect()
    }

    fn step_into(
        &self,
        view: &NodeView<'_, GraphNLogNState>,
        out: &mut Vec<Outcome<GraphNLogNState>>,
    ) -> Result<(), AlgoFault> {
        let holder = view.robots.iter().find(|r| r.state.phase == GnPhase::Settled).map(|r| r.label);
        let claimer = match holder {
            Some(_) => None,
            None => view.robots.iter().position(|r| r.state.phase == GnPhase::Explore),
        };
        let node_label = holder.or(claimer.map(|c| view.robots[c].label));

        view.robots
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut s = r.state.clone();
                s.rnd_cntr += 1;
                if s.phase == GnPhase::Settled {
                    return Ok(Outcome::stay(s));
                }
                let fault = |m: String| AlgoFault::new(r.label, m);
                s.port_entered = r.entry.or(s.port_entered);
                match s.phase {
                    GnPhase::Explore => {
                        if holder.is_some_and(|v| s.lookup(v).is_some()) {
                            s.phase = GnPhase::Backtrack;
                            let back = s.port_entered.ok_or_else(|| fault("explorer never entered this node".into()))?;
                            return Ok(Outcome::go(s, back));
                        }
                        if claimer == Some(i) {
                            s.phase = GnPhase::Settled;
                            return Ok(Outcome::settle(s));
                        }
                        let v = node_label.expect("an explorer is present");
                        let entered = s.port_entered;
                        self.record(&mut s, v, entered, r.label)?;
                        let p = next_port(s.port_entered, view.degree)
                            .ok_or_else(|| fault("no port to leave an isolated node".into()))?;
                        s.port_entered = Some(p);
                        if s.lookup(v) == Some(Some(p)) {
                            s.phase = GnPhase::Backtrack;
                        }
                        Ok(Outcome::go(s, p))
                    }
                    GnPhase::Backtrack => {
                        let v = holder.ok_or_else(|| fault("backtracked onto an unassigned node".into()))?;
                        let parent = s
                            .lookup(v)
                            .ok_or_else(|| fault(format!("backtracked onto robot {v} missing from its table")))?;
                        let p = next_port(s.port_entered, view.degree)
                            .ok_or_else(|| fault("no port to leave an isolated node".into()))?;
                        s.port_entered = Some(p);
                        if parent != Some(p) {
                            s.phase = GnPhase::Explore;
                        }
                        Ok(Outcome::go(s, p))
                    }
                    GnPhase::Settled => unreachable!(),
                }
            })
            .try_for_each(|o| o.map(|o| out.push(o)))
    }

    fn is_settled(&self, s: &GraphNLogNState) -> bool {
        s.phase == GnPhase::Settled
    }

    fn bits(&self, _s: &GraphNLogNState, d: &Dims) -> u32 {
        // nullable port_entered, 2-bit state, round counter, own label, and
        // a table of n (label, nullable port) slots
        let table = d.n as u32 * (d.label_width() + d.port_width() + 1);
        d.port_width() + 1 + 2 + Dims::counter_width(d.horizon) + d.label_width() + table
    }
}
