//! Round-by-round run records and their JSON-lines form.
//!
//! Line 1 is a header `{"algo","n","m","placement"}`, then one line per round
//! `{"round","moves","settled","bits_max"}`, then `{"dispersed_at","horizon"}`.
//! Field order is fixed so that digests are stable.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::engine::Label;
use crate::portgraph::{NodeId, Port};
use crate::AlgorithmKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Move {
    pub label: Label,
    pub from: NodeId,
    pub port: Port,
    pub to: NodeId,
}

impl Serialize for Move {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (self.label, self.from, self.port, self.to).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Move {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (label, from, port, to) = <(Label, NodeId, Port, NodeId)>::deserialize(d)?;
        Ok(Move { label, from, port, to })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u64,
    pub moves: Vec<Move>,
    /// `(label, node)`; round 1 also lists settlements made during
    /// initialization.
    pub settled: Vec<(Label, NodeId)>,
    pub bits_max: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub algo: AlgorithmKind,
    pub n: usize,
    pub m: usize,
    /// Node of each robot at round 0, indexed by label - 1.
    pub placement: Vec<NodeId>,
    pub rounds: Vec<RoundRecord>,
    pub dispersed_at: Option<u64>,
    pub horizon: u64,
    pub peak_bits: u32,
}

#[derive(Serialize, Deserialize)]
struct Header {
    algo: AlgorithmKind,
    n: usize,
    m: usize,
    placement: Vec<NodeId>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Terminal {
    dispersed_at: Option<u64>,
    horizon: u64,
}

#[derive(Debug, Error)]
pub enum TraceParseError {
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("trace is missing its {0} line")]
    Missing(&'static str),
}

impl Trace {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let header = Header { algo: self.algo, n: self.n, m: self.m, placement: self.placement.clone() };
        push_line(&mut out, &header);
        for r in &self.rounds {
            push_line(&mut out, r);
        }
        push_line(&mut out, &Terminal { dispersed_at: self.dispersed_at, horizon: self.horizon });
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Trace, TraceParseError> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        let json = |line: usize| move |source| TraceParseError::Json { line, source };
        let (&(hl, head), rest) = lines.split_first().ok_or(TraceParseError::Missing("header"))?;
        let header: Header = serde_json::from_str(head).map_err(json(hl))?;
        let (&(tl, tail), body) = rest.split_last().ok_or(TraceParseError::Missing("terminal"))?;
        let terminal: Terminal = serde_json::from_str(tail).map_err(json(tl))?;
        let rounds = body
            .iter()
            .map(|&(l, s)| serde_json::from_str::<RoundRecord>(s).map_err(json(l)))
            .collect::<Result<Vec<_>, _>>()?;
        let peak_bits = rounds.iter().map(|r| r.bits_max).max().unwrap_or(0);
        Ok(Trace {
            algo: header.algo,
            n: header.n,
            m: header.m,
            placement: header.placement,
            rounds,
            dispersed_at: terminal.dispersed_at,
            horizon: terminal.horizon,
            peak_bits,
        })
    }

    /// Hex SHA-256 of the JSON-lines serialization.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_jsonl().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Number of rounds actually executed.
    pub fn len(&self) -> u64 {
        self.rounds.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }
}

fn push_line<T: Serialize>(out: &mut String, value: &T) {
    out.push_str(&serde_json::to_string(value).expect("trace records serialize"));
    out.push('\n');
}

impl Serialize for AlgorithmKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for AlgorithmKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trace {
        Trace {
            algo: AlgorithmKind::Prt,
            n: 2,
            m: 1,
            placement: vec![0, 0],
            rounds: vec![RoundRecord {
                round: 1,
                moves: vec![Move { label: 2, from: 0, port: 0, to: 1 }],
                settled: vec![(1, 0)],
                bits_max: 5,
            }],
            dispersed_at: None,
            horizon: 4,
            peak_bits: 5,
        }
    }

    #[test]
    fn jsonl_layout() {
        let text = sample().to_jsonl();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], r#"{"algo":"prt","n":2,"m":1,"placement":[0,0]}"#);
        assert_eq!(lines[1], r#"{"round":1,"moves":[[2,0,0,1]],"settled":[[1,0]],"bits_max":5}"#);
        assert_eq!(lines[2], r#"{"dispersed_at":null,"horizon":4}"#);
    }

    #[test]
    fn jsonl_round_trip() {
        let t = sample();
        assert_eq!(Trace::from_jsonl(&t.to_jsonl()).unwrap(), t);
        assert_eq!(t.digest().len(), 64);
    }

    #[test]
    fn parse_reports_line() {
        let mut text = sample().to_jsonl();
        text = text.replacen("\"round\":1", "\"round\":\"x\"", 1);
        match Trace::from_jsonl(&text) {
            Err(TraceParseError::Json { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
