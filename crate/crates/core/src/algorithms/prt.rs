//! Path-Ring-Tree-LogN: settle if the node is free and you hold the lowest
//! label, otherwise leave through the port after the one you came in by.

use crate::engine::{AlgoFault, Algorithm, Dims, Label, NodeView, Outcome};
use crate::portgraph::Port;
use crate::AlgorithmKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PrtState {
    pub port_entered: Port,
    pub settled: bool,
    pub rnd_cntr: u64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PathRingTree;

impl Algorithm for PathRingTree {
    type State = PrtState;

    fn kind(&self) -> AlgorithmKind {
        AlgorithmKind::Prt
    }

    fn init(&self, _degree: usize, labels: &[Label]) -> Vec<(PrtState, bool)> {
        vec![(PrtState::default(), false); labels.len()]
    }

    fn step_into(&self, view: &NodeView<'_, PrtState>, out: &mut Vec<Outcome<PrtState>>) -> Result<(), AlgoFault> {
        let assigned = view.robots.iter().any(|r| r.state.settled);
        view.robots
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut s = *r.state;
                s.rnd_cntr += 1;
                if s.settled {
                    return Ok(Outcome::stay(s));
                }
                s.port_entered = r.entry.unwrap_or(s.port_entered);
                if !assigned && i == 0 {
                    s.settled = true;
                    return Ok(Outcome::settle(s));
                }
                if view.degree == 0 {
                    return Err(AlgoFault::new(r.label, "no port to leave an isolated node"));
                }
                s.port_entered = (s.port_entered + 1) % view.degree;
                Ok(Outcome::go(s, s.port_entered))
            })
            .try_for_each(|o| o.map(|o| out.push(o)))
    }

    fn is_settled(&self, s: &PrtState) -> bool {
        s.settled
    }

    fn bits(&self, _s: &PrtState, d: &Dims) -> u32 {
        d.port_width() + 1 + Dims::counter_width(d.horizon) + d.label_width()
    }
}
