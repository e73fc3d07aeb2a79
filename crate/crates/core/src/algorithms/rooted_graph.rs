//! Rooted-Graph-LogN: a shared DFS from the root whose tree edges are the
//! parent pointers of settled robots.

use crate::engine::{AlgoFault, Algorithm, Dims, Label, NodeView, Outcome};
use crate::portgraph::Port;
use crate::AlgorithmKind;

use super::next_port;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RgPhase {
    Explore,
    Settled,
    Backtrack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RootedGraphState {
    /// `None` stands for the initial −1.
    pub port_entered: Option<Port>,
    /// `None` is ⊥ (the root's settler).
    pub parent_ptr: Option<Port>,
    pub phase: RgPhase,
    pub rnd_cntr: u64,
}

impl Default for RootedGraphState {
    fn default() -> Self {
        Self { port_entered: None, parent_ptr: None, phase: RgPhase::Explore, rnd_cntr: 0 }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RootedGraph;

impl Algorithm for RootedGraph {
    type State = RootedGraphState;

    fn kind(&self) -> AlgorithmKind {
        AlgorithmKind::RootedGraph
    }

    fn init(&self, _degree: usize, labels: &[Label]) -> Vec<(RootedGraphState, bool)> {
        vec![(RootedGraphState::default(), false); labels.len()]
    }

    fn step_into(
        &self,
        view: &NodeView<'_, RootedGraphState>,
        out: &mut Vec<Outcome<RootedGraphState>>,
    ) -> Result<(), AlgoFault> {
        let holder = view.robots.iter().find(|r| r.state.phase == RgPhase::Settled);
        // On a free node the lowest explorer claims it with its entry port.
        let claimer = match holder {
            Some(_) => None,
            None => view.robots.iter().position(|r| r.state.phase == RgPhase::Explore),
        };
        let node_parent = match (holder, claimer) {
            (Some(h), _) => h.state.parent_ptr,
            (None, Some(c)) => view.robots[c].entry.or(view.robots[c].state.port_entered),
            (None, None) => None,
        };

        view.robots
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut s = *r.state;
                s.rnd_cntr += 1;
                if s.phase == RgPhase::Settled {
                    return Ok(Outcome::stay(s));
                }
                s.port_entered = r.entry.or(s.port_entered);
                let fault = |m: &str| AlgoFault::new(r.label, m);
                match s.phase {
                    RgPhase::Explore if holder.is_some() => {
                        s.phase = RgPhase::Backtrack;
                        let back = s.port_entered.ok_or_else(|| fault("explorer never entered this node"))?;
                        Ok(Outcome::go(s, back))
                    }
                    RgPhase::Explore if claimer == Some(i) => {
                        s.phase = RgPhase::Settled;
                        s.parent_ptr = s.port_entered;
                        Ok(Outcome::settle(s))
                    }
                    RgPhase::Explore => {
                        let p = next_port(s.port_entered, view.degree)
                            .ok_or_else(|| fault("no port to leave an isolated node"))?;
                        s.port_entered = Some(p);
                        if node_parent == Some(p) {
                            s.phase = RgPhase::Backtrack;
                        }
                        Ok(Outcome::go(s, p))
                    }
                    RgPhase::Backtrack => {
                        if holder.is_none() {
                            return Err(fault("backtracked onto a node with no settled robot"));
                        }
                        let p = next_port(s.port_entered, view.degree)
                            .ok_or_else(|| fault("no port to leave an isolated node"))?;
                        s.port_entered = Some(p);
                        if node_parent != Some(p) {
                            s.phase = RgPhase::Explore;
                        }
                        Ok(Outcome::go(s, p))
                    }
                    RgPhase::Settled => unreachable!(),
                }
            })
            .try_for_each(|o| o.map(|o| out.push(o)))
    }

    fn is_settled(&self, s: &RootedGraphState) -> bool {
        s.phase == RgPhase::Settled
    }

    fn bits(&self, _s: &RootedGraphState, d: &Dims) -> u32 {
        // two nullable ports, 2-bit state, round counter, own label
        2 * (d.port_width() + 1) + 2 + Dims::counter_width(d.horizon) + d.label_width()
    }
}
