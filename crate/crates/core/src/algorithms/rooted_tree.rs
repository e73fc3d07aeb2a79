//! Rooted-Tree-LogN: stage `L` lasts `2L + 1` rounds. Explorers walk down from
//! the root to depth `L - 1` (rounds `1..=L`), settled robots shuttle
//! completion counts and robot demands up the tree (rounds `L+1..=2L`), and in
//! round `2L + 1` depth-1 robots step to the root to brief the next stage's
//! explorers.
//!
//! Timing per settled robot at depth `k` within stage `L`:
//! - moves up in rounds `k - 1` and `2L - k` (and `2L + 1` when `k = 1`);
//! - is a visitor at its parent in rounds `k` and `2L - k + 1`, then returns;
//! - is home in every other round, absorbing its visiting children's reports.

use crate::engine::{AlgoFault, Algorithm, Dims, Label, NodeView, Outcome, Peer};
use crate::portgraph::Port;
use crate::AlgorithmKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RtPhase {
    Root,
    Explore,
    Wait,
    Settled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RootedTreeState {
    pub port_entered: Port,
    pub parent_ptr: Option<Port>,
    pub phase: RtPhase,
    pub dist_from_root: u32,
    /// Count of child ports known to lead to fully dispersed subtrees.
    pub fully_dispersed_port: u32,
    pub fully_dispersed: bool,
    pub num_robots_reqd: u64,
    pub lvl_cntr: u32,
    pub rnd_cntr: u32,
    /// Set when the robot leaves the outer loop; it never acts again.
    pub terminated: bool,
}

impl RootedTreeState {
    fn fresh() -> Self {
        Self {
            port_entered: 0,
            parent_ptr: None,
            phase: RtPhase::Explore,
            dist_from_root: 0,
            fully_dispersed_port: 0,
            fully_dispersed: false,
            num_robots_reqd: 0,
            lvl_cntr: 0,
            rnd_cntr: 0,
            terminated: false,
        }
    }

    /// Stage and round this robot executes next.
    pub fn next_clock(&self) -> (u32, u32) {
        if self.lvl_cntr == 0 || self.rnd_cntr == 2 * self.lvl_cntr + 1 {
            (self.lvl_cntr + 1, 1)
        } else {
            (self.lvl_cntr, self.rnd_cntr + 1)
        }
    }

    fn is_active_settled(&self) -> bool {
        self.phase == RtPhase::Settled && !self.terminated
    }

    /// A settled robot away from home in round `rnd` of stage `lvl`.
    pub fn visiting_in(&self, lvl: u32, rnd: u32) -> bool {
        let k = self.dist_from_root;
        self.is_active_settled() && (rnd == k || rnd + k == 2 * lvl + 1)
    }

    /// A settled robot that climbs to its parent in round `rnd` of stage `lvl`.
    pub fn moves_up_in(&self, lvl: u32, rnd: u32) -> bool {
        let k = self.dist_from_root;
        self.is_active_settled()
            && (rnd + 1 == k || rnd + k == 2 * lvl || (k == 1 && rnd == 2 * lvl + 1 && !self.fully_dispersed))
    }
}

/// A child's report heard at its parent: the port leading to it, whether its
/// subtree is full, and how many robots it still needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Report {
    port: Port,
    fully_dispersed: bool,
    reqd: u64,
}

/// Robot-Assignment under the counter formulation.
pub fn robot_assignment(s: &mut RootedTreeState, degree: usize, port_entered: Port) {
    if s.phase == RtPhase::Root {
        s.num_robots_reqd = degree as u64;
    } else {
        s.num_robots_reqd = degree.saturating_sub(1) as u64;
        s.parent_ptr = Some(port_entered);
    }
    s.fully_dispersed_port = 0;
}

/// Further-Explore's port assignment: explorers (sorted by label) are handed
/// out to `targets` in order, `count` robots per port. Returns the port for
/// each explorer, `None` for those left over.
pub fn further_explore(targets: &[(Port, u64)], explorers: usize) -> Vec<Option<Port>> {
    let mut out = Vec::with_capacity(explorers);
    for &(port, count) in targets {
        for _ in 0..count {
            if out.len() == explorers {
                return out;
            }
            out.push(Some(port));
        }
    }
    out.resize(explorers, None);
    out
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RootedTree;

impl Algorithm for RootedTree {
    type State = RootedTreeState;

    fn kind(&self) -> AlgorithmKind {
        AlgorithmKind::RootedTree
    }

    fn init(&self, degree: usize, labels: &[Label]) -> Vec<(RootedTreeState, bool)> {
        labels
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let mut s = RootedTreeState::fresh();
                if i == 0 {
                    s.phase = RtPhase::Root;
                    robot_assignment(&mut s, degree, 0);
                }
                (s, i == 0)
            })
            .collect()
    }

    fn step_into(
        &self,
        view: &NodeView<'_, RootedTreeState>,
        out: &mut Vec<Outcome<RootedTreeState>>,
    ) -> Result<(), AlgoFault> {
        let robots = view.robots;
        let active = robots.iter().find(|r| !r.state.terminated);
        let Some(active) = active else {
            out.extend(robots.iter().map(|r| Outcome::stay(*r.state)));
            return Ok(());
        };
        let (lvl, rnd) = active.state.next_clock();

        let visiting = |p: &Peer<'_, RootedTreeState>| p.state.visiting_in(lvl, rnd);
        let home = robots.iter().find(|r| match r.state.phase {
            RtPhase::Root => true,
            RtPhase::Settled => !visiting(r),
            _ => false,
        });
        let reports: Vec<Report> = robots
            .iter()
            .filter(|r| visiting(r))
            .map(|r| {
                let port = r.entry.ok_or_else(|| AlgoFault::new(r.label, "visitor never moved"))?;
                Ok(Report { port, fully_dispersed: r.state.fully_dispersed, reqd: r.state.num_robots_reqd })
            })
            .collect::<Result<_, AlgoFault>>()?;

        // Explorers at an assigned node, in label order, get their ports here.
        let explorers: Vec<usize> = (0..robots.len()).filter(|&i| robots[i].state.phase == RtPhase::Explore).collect();
        let frontier_claimer = if home.is_none() { explorers.first().copied() } else { None };
        let mut assigned_port = vec![None; robots.len()];
        if let Some(h) = home {
            // Explorers at depth k move on only while k < lvl - 1.
            let descend = explorers.first().is_some_and(|&i| rnd <= lvl && robots[i].state.dist_from_root + 1 < lvl);
            if descend {
                let targets: Vec<(Port, u64)> = if reports.is_empty() {
                    (0..view.degree).filter(|&p| Some(p) != h.state.parent_ptr).map(|p| (p, 1)).collect()
                } else {
                    let mut t: Vec<(Port, u64)> = reports
                        .iter()
                        .filter(|r| !r.fully_dispersed && Some(r.port) != h.state.parent_ptr)
                        .map(|r| (r.port, r.reqd))
                        .collect();
                    t.sort_unstable();
                    t
                };
                for (&i, p) in explorers.iter().zip(further_explore(&targets, explorers.len())) {
                    assigned_port[i] = p;
                }
            }
        }
        let at_root = home.is_some_and(|h| h.state.phase == RtPhase::Root);

        robots
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut s = *r.state;
                if s.terminated {
                    return Ok(Outcome::stay(s));
                }
                (s.lvl_cntr, s.rnd_cntr) = (lvl, rnd);
                let end_of_stage = rnd == 2 * lvl + 1;
                let fault = |m: String| AlgoFault::new(r.label, m);
                let out = match s.phase {
                    RtPhase::Root => {
                        let done = reports.iter().filter(|rep| rep.fully_dispersed).count() as u32;
                        s.fully_dispersed_port += done;
                        if s.fully_dispersed_port as usize == view.degree {
                            s.fully_dispersed = true;
                        }
                        Outcome::stay(s)
                    }
                    RtPhase::Explore => {
                        s.port_entered = r.entry.unwrap_or(s.port_entered);
                        if frontier_claimer == Some(i) {
                            s.phase = RtPhase::Settled;
                            let entered = s.port_entered;
                            robot_assignment(&mut s, view.degree, entered);
                            Outcome::settle(s)
                        } else if let Some(p) = assigned_port[i] {
                            s.dist_from_root += 1;
                            Outcome::go(s, p)
                        } else if at_root {
                            s.phase = RtPhase::Wait;
                            if end_of_stage {
                                s.phase = RtPhase::Explore;
                            }
                            Outcome::stay(s)
                        } else if home.is_none() {
                            return Err(fault("two explorers reached one unassigned node".into()));
                        } else {
                            return Err(fault(format!(
                                "explorer left without a port at depth {} (stage {lvl}, round {rnd})",
                                s.dist_from_root
                            )));
                        }
                    }
                    RtPhase::Wait => {
                        if !at_root {
                            return Err(fault("waiting away from the root".into()));
                        }
                        if end_of_stage {
                            s.phase = RtPhase::Explore;
                        }
                        Outcome::stay(s)
                    }
                    RtPhase::Settled => {
                        let visitor = r.state.visiting_in(lvl, rnd);
                        if !visitor {
                            let others: Vec<&Report> = reports.iter().collect();
                            s.fully_dispersed_port += others.iter().filter(|rep| rep.fully_dispersed).count() as u32;
                            if !others.is_empty() {
                                s.num_robots_reqd = others.iter().map(|rep| rep.reqd).sum();
                            }
                        }
                        if r.state.moves_up_in(lvl, rnd) {
                            if s.fully_dispersed_port as usize + 1 == view.degree {
                                s.fully_dispersed = true;
                            }
                            let up = s.parent_ptr.ok_or_else(|| fault("settled robot without parent".into()))?;
                            Outcome::go(s, up)
                        } else if visitor {
                            s.port_entered = r.entry.ok_or_else(|| fault("visitor never moved".into()))?;
                            Outcome::go(s, s.port_entered)
                        } else {
                            Outcome::stay(s)
                        }
                    }
                };
                let mut out = out;
                if end_of_stage && out.state.fully_dispersed && out.mv.is_none() {
                    out.state.terminated = true;
                }
                Ok(out)
            })
            .try_for_each(|o| o.map(|o| out.push(o)))
    }

    fn is_settled(&self, s: &RootedTreeState) -> bool {
        matches!(s.phase, RtPhase::Root | RtPhase::Settled)
    }

    fn is_halted(&self, s: &RootedTreeState) -> bool {
        s.terminated
    }

    fn settled_may_move(&self) -> bool {
        true
    }

    fn bits(&self, _s: &RootedTreeState, d: &Dims) -> u32 {
        let n = d.n as u64;
        // port_entered, nullable parent_ptr, 2-bit state, dist, port counter,
        // fully_dispersed and terminated flags, demand, stage and round
        // counters, own label
        d.port_width()
            + d.port_width()
            + 1
            + 2
            + Dims::counter_width(n)
            + Dims::counter_width(d.max_degree as u64)
            + 2
            + Dims::counter_width(n)
            + Dims::counter_width(n + 1)
            + Dims::counter_width(2 * n + 3)
            + d.label_width()
    }
}
