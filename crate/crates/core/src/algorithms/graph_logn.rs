//! Graph-LogN: every co-located group starts its own DFS tree; trees merge
//! into the one whose root robot has the smallest label (Convert-If-Needed),
//! and back edges are recognised by comparing distances from the tree root.

use crate::engine::{AlgoFault, Algorithm, Dims, Label, NodeView, Outcome, Peer};
use crate::portgraph::Port;
use crate::AlgorithmKind;

use super::next_port;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlPhase {
    Explore,
    Settled,
    Backtrack,
    BacktrackToRoot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphLogNState {
    pub port_entered: Option<Port>,
    pub parent_ptr: Option<Port>,
    pub phase: GlPhase,
    pub starting_node: Label,
    pub dist_from_start_node: i64,
    pub rnd_cntr: u64,
    /// Steps of the current walk back to a root. Diagnostic only; bounds the
    /// walk at n steps and is not part of the declared memory.
    pub walk: u32,
}

/// Robots know `n`: it fixes their horizon and caps each walk to a root.
#[derive(Debug, Clone, Copy)]
pub struct GraphLogN {
    pub n: usize,
}

/// Convert-If-Needed applied to one robot, given the node's least starting
/// node and its witness `x`.
pub fn convert_if_needed(
    s: &GraphLogNState,
    least: Label,
    x: &Peer<'_, GraphLogNState>,
    label: Label,
) -> Result<GraphLogNState, AlgoFault> {
    let mut s = *s;
    if s.starting_node > least {
        s.starting_node = least;
        if s.phase == GlPhase::Settled {
            s.parent_ptr = Some(x.entry.ok_or_else(|| {
                AlgoFault::new(label, format!("witness {} never entered this node", x.label))
            })?);
            s.dist_from_start_node = x.state.dist_from_start_node + 1;
        } else {
            s.phase = GlPhase::BacktrackToRoot;
            s.walk = 0;
        }
    }
    Ok(s)
}

impl Algorithm for GraphLogN {
    type State = GraphLogNState;

    fn kind(&self) -> AlgorithmKind {
        AlgorithmKind::GraphLogN
    }

    fn init(&self, _degree: usize, labels: &[Label]) -> Vec<(GraphLogNState, bool)> {
        let lowest = labels[0];
        labels
            .iter()
            .map(|&l| {
                let root = l == lowest;
                let s = GraphLogNState {
                    port_entered: None,
                    parent_ptr: None,
                    phase: if root { GlPhase::Settled } else { GlPhase::Explore },
                    starting_node: lowest,
                    // The root sits at distance 0 so that first-round
                    // explorers (incremented to 0) are not taken for back edges.
                    dist_from_start_node: if root { 0 } else { -1 },
                    rnd_cntr: 0,
                    walk: 0,
                };
                (s, root)
            })
            .collect()
    }

    fn step_into(
        &self,
        view: &NodeView<'_, GraphLogNState>,
        out: &mut Vec<Outcome<GraphLogNState>>,
    ) -> Result<(), AlgoFault> {
        let robots = view.robots;
        let least = robots.iter().map(|r| r.state.starting_node).min().expect("non-empty node");
        let x = robots.iter().find(|r| r.state.starting_node == least).expect("least is attained");
        let converted = robots
            .iter()
            .map(|r| convert_if_needed(r.state, least, x, r.label))
            .collect::<Result<Vec<_>, _>>()?;

        // Settled robot of the node, or the explorer that claims it this round.
        let holder = converted.iter().position(|s| s.phase == GlPhase::Settled);
        let claimer = match holder {
            Some(_) => None,
            None => converted.iter().position(|s| s.phase == GlPhase::Explore),
        };
        let anchor: Option<(Label, Option<Port>, i64)> = match (holder, claimer) {
            (Some(h), _) => {
                let s = &converted[h];
                Some((robots[h].label, s.parent_ptr, s.dist_from_start_node))
            }
            (None, Some(c)) => {
                let s = &converted[c];
                Some((robots[c].label, robots[c].entry.or(s.port_entered), s.dist_from_start_node + 1))
            }
            (None, None) => None,
        };

        robots
            .iter()
            .zip(converted)
            .enumerate()
            .map(|(i, (r, mut s))| {
                s.rnd_cntr += 1;
                let fault = |m: String| AlgoFault::new(r.label, m);
                let leave = |p: Option<Port>| p.ok_or_else(|| fault("no port to leave by".into()));
                match s.phase {
                    GlPhase::Settled => Ok(Outcome::stay(s)),
                    GlPhase::Explore => {
                        s.port_entered = r.entry.or(s.port_entered);
                        s.dist_from_start_node += 1;
                        if claimer == Some(i) {
                            s.phase = GlPhase::Settled;
                            s.parent_ptr = s.port_entered;
                            return Ok(Outcome::settle(s));
                        }
                        let (_, parent, dist) = anchor.expect("an explorer always has an anchor");
                        // Back edge by distance; any other entry that is not
                        // the node's parent edge is a forward or cross edge.
                        if s.dist_from_start_node > dist || r.entry != parent {
                            s.phase = GlPhase::Backtrack;
                        } else {
                            s.port_entered = next_port(s.port_entered, view.degree);
                            if s.port_entered.is_some() && s.port_entered == parent {
                                s.phase = GlPhase::Backtrack;
                            }
                        }
                        Ok(Outcome::go(s, leave(s.port_entered)?))
                    }
                    GlPhase::Backtrack => {
                        let (_, parent, _) =
                            anchor.ok_or_else(|| fault("backtracked onto an unassigned node".into()))?;
                        s.port_entered = r.entry.or(s.port_entered);
                        s.dist_from_start_node -= 1;
                        s.port_entered = next_port(s.port_entered, view.degree);
                        if s.port_entered != parent {
                            s.phase = GlPhase::Explore;
                        }
                        Ok(Outcome::go(s, leave(s.port_entered)?))
                    }
                    GlPhase::BacktrackToRoot => {
                        let (holder_label, parent, _) =
                            anchor.ok_or_else(|| fault("walk to root reached an unassigned node".into()))?;
                        if holder_label == s.starting_node {
                            s.phase = GlPhase::Explore;
                            s.dist_from_start_node = 0;
                            s.port_entered = Some(0);
                            s.walk = 0;
                            if view.degree == 0 {
                                return Err(fault("root has no ports".into()));
                            }
                        } else {
                            s.walk += 1;
                            if s.walk as usize > self.n {
                                return Err(fault(format!("walk to root exceeded {} steps", s.walk - 1)));
                            }
                            s.port_entered = Some(parent.ok_or_else(|| {
                                fault(format!("robot {holder_label} has no parent pointer toward root {}", s.starting_node))
                            })?);
                        }
                        Ok(Outcome::go(s, leave(s.port_entered)?))
                    }
                }
            })
            .try_for_each(|o| o.map(|o| out.push(o)))
    }

    fn is_settled(&self, s: &GraphLogNState) -> bool {
        s.phase == GlPhase::Settled
    }

    fn bits(&self, _s: &GraphLogNState, d: &Dims) -> u32 {
        // nullable port_entered and parent_ptr, 2-bit state, starting_node,
        // distance in −1..=n, round counter, own label
        2 * (d.port_width() + 1)
            + 2
            + d.label_width()
            + Dims::counter_width(d.n as u64 + 1)
            + Dims::counter_width(d.horizon)
            + d.label_width()
    }
}
