//! Sweep configs: blank-line separated blocks of `key = value` lines.
//!
//! ```text
//! # rings for PRT
//! family = ring
//! n = 8, 16, 32
//! seeds = 5
//! algo = prt
//! placement = rooted
//!
//! family = connected
//! n = 16..=20
//! m = n-1, 2n, 4n
//! algo = rooted-graph, graph-nlogn
//! ```
//!
//! `placement` is `rooted` (node `seed mod n`), `rooted:<v>`, `random` (seeded
//! by the instance seed) or `identity`. A block with `trace` and `graph` keys
//! checks an existing trace instead of running one.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dispersion::verify::{check_time_bound, verify_trace, BoundReport};
use dispersion::*;

use crate::{read_graph, simulate, Failure, BAD_INPUT, CHECK_FAILED, FAULT, PASS};

#[derive(Debug, Clone, PartialEq)]
enum EdgeCount {
    Exact(usize),
    TreePlus(isize),
    PerNode(f64),
}

impl EdgeCount {
    fn resolve(&self, n: usize) -> usize {
        let m = match *self {
            EdgeCount::Exact(m) => m,
            EdgeCount::TreePlus(k) => (n as isize - 1 + k).max(0) as usize,
            EdgeCount::PerNode(c) => (c * n as f64).round() as usize,
        };
        m.clamp(n.saturating_sub(1), n * n.saturating_sub(1) / 2)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum PlacementRule {
    RootedBySeed,
    Fixed(Placement),
    RandomBySeed,
}

#[derive(Debug, Clone, PartialEq)]
enum Block {
    Sweep {
        family: FamilyKind,
        sizes: Vec<usize>,
        edges: Vec<EdgeCount>,
        seeds: u64,
        algos: Vec<AlgorithmKind>,
        placement: PlacementRule,
        permute: bool,
        early_stop: bool,
    },
    Check {
        trace: PathBuf,
        graph: PathBuf,
    },
}

fn list<T>(value: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(item).collect()
}

fn sizes(value: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let num = |s: &str| s.trim().parse::<usize>().map_err(|_| format!("bad size {s:?}"));
        if let Some((a, b)) = part.split_once("..=") {
            out.extend(num(a)?..=num(b)?);
        } else {
            out.push(num(part)?);
        }
    }
    Ok(out)
}

fn edge_count(s: &str) -> Result<EdgeCount, String> {
    let bad = || format!("bad edge count {s:?}");
    if let Some(rest) = s.strip_prefix("n-1") {
        let k = rest.trim().strip_prefix('+').map_or(Ok(0), |k| k.trim().parse().map_err(|_| bad()))?;
        return if rest.trim().is_empty() || rest.trim().starts_with('+') { Ok(EdgeCount::TreePlus(k)) } else { Err(bad()) };
    }
    if let Some(c) = s.strip_suffix('n') {
        let c = if c.is_empty() { 1.0 } else { c.parse().map_err(|_| bad())? };
        return Ok(EdgeCount::PerNode(c));
    }
    s.parse().map(EdgeCount::Exact).map_err(|_| bad())
}

fn block(fields: &BTreeMap<String, (usize, String)>) -> Result<Block, String> {
    let get = |k: &str| fields.get(k).map(|(_, v)| v.as_str());
    for (key, (line, _)) in fields {
        let known = [
            "family", "n", "m", "seeds", "algo", "placement", "permute", "early_stop", "trace", "graph",
        ];
        if !known.contains(&key.as_str()) {
            return Err(format!("line {line}: unknown key {key:?}"));
        }
    }
    if let Some(trace) = get("trace") {
        let graph = get("graph").ok_or("a trace block needs a graph")?;
        return Ok(Block::Check { trace: trace.into(), graph: graph.into() });
    }
    let family: FamilyKind = get("family").ok_or("missing family")?.parse().map_err(|e: GraphError| e.to_string())?;
    let sizes = sizes(get("n").ok_or("missing n")?)?;
    let edges = match get("m") {
        Some(v) => list(v, edge_count)?,
        None if family == FamilyKind::Connected => return Err("connected family needs m".into()),
        None => vec![EdgeCount::Exact(0)],
    };
    let seeds = get("seeds").map_or(Ok(1), |v| v.parse().map_err(|_| format!("bad seeds {v:?}")))?;
    let algos = list(get("algo").ok_or("missing algo")?, |s| s.parse::<AlgorithmKind>())?;
    let placement = match get("placement").unwrap_or("rooted") {
        "rooted" => PlacementRule::RootedBySeed,
        "random" => PlacementRule::RandomBySeed,
        other => PlacementRule::Fixed(other.parse().map_err(|e: SimError| e.to_string())?),
    };
    let flag = |k: &str| get(k).map_or(Ok(false), |v| v.parse::<bool>().map_err(|_| format!("bad {k} {v:?}")));
    Ok(Block::Sweep { family, sizes, edges, seeds, algos, placement, permute: flag("permute")?, early_stop: flag("early_stop")? })
}

fn parse_config(text: &str) -> Result<Vec<Block>, String> {
    let mut blocks = Vec::new();
    let mut fields: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut start = 1;
    let mut flush = |fields: &mut BTreeMap<String, (usize, String)>, start: usize| -> Result<(), String> {
        if !fields.is_empty() {
            blocks.push(block(fields).map_err(|e| format!("block at line {start}: {e}"))?);
            fields.clear();
        }
        Ok(())
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            if raw.trim().is_empty() {
                flush(&mut fields, start)?;
            }
            continue;
        }
        if fields.is_empty() {
            start = i + 1;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
        if fields.insert(k.trim().to_string(), (i + 1, v.trim().to_string())).is_some() {
            return Err(format!("line {}: duplicate key {:?}", i + 1, k.trim()));
        }
    }
    flush(&mut fields, start)?;
    Ok(blocks)
}

/// A report row for a run that could not be checked.
fn failed_row(kind: AlgorithmKind, family: &str, g: &PortGraph, seed: u64) -> BoundReport {
    BoundReport {
        family: family.to_string(),
        n: g.node_count(),
        m: g.edge_count(),
        diameter: g.metrics().map(|m| m.diameter).unwrap_or(0),
        seed,
        algo: kind,
        dispersed_at: None,
        bound: 0,
        pass: false,
        peak_bits: 0,
    }
}

fn run_block(b: &Block, rows: &mut Vec<BoundReport>, faults: &mut usize) -> Result<(), Failure> {
    match b {
        Block::Check { trace, graph } => {
            let g = read_graph(graph)?;
            let text = fs::read_to_string(trace).map_err(|e| Failure::input(format!("{}: {e}", trace.display())))?;
            let t = Trace::from_jsonl(&text).map_err(|e| Failure::input(format!("{}: {e}", trace.display())))?;
            let replay = verify_trace(&t, &g);
            let mut row = match check_time_bound(&t, &g, "trace", 0) {
                Ok(row) => row,
                Err(e) => {
                    eprintln!("warning: {}: {e}", trace.display());
                    failed_row(t.algo, "trace", &g, 0)
                }
            };
            if let Err(e) = replay {
                eprintln!("warning: {}: diverges at round {}: {}", trace.display(), e.round, e.message);
                row.pass = false;
            }
            rows.push(row);
        }
        Block::Sweep { family, sizes, edges, seeds, algos, placement, permute, early_stop } => {
            for &n in sizes {
                for m in edges {
                    for seed in 0..*seeds {
                        let mut fam = GraphFamily::new(*family, n).with_seed(seed).permuted(*permute);
                        if *family == FamilyKind::Connected {
                            fam = fam.with_m(m.resolve(n));
                        }
                        let g = fam.build().map_err(|e| Failure::input(format!("{family} n={n}: {e}")))?;
                        let p = match placement {
                            PlacementRule::RootedBySeed => Placement::Rooted(seed as usize % n),
                            PlacementRule::RandomBySeed => Placement::Random(seed),
                            PlacementRule::Fixed(p) => p.clone(),
                        };
                        for &kind in algos {
                            match simulate(kind, &g, &p, *early_stop, family.name(), seed) {
                                Ok((_, row)) => rows.push(row),
                                Err(f) if f.code == FAULT => {
                                    eprintln!("warning: {kind} on {family} n={n} seed={seed}: {}", f.message);
                                    *faults += 1;
                                    rows.push(failed_row(kind, family.name(), &g, seed));
                                }
                                Err(f) => return Err(f),
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn memory_class(kind: AlgorithmKind) -> &'static str {
    match kind {
        AlgorithmKind::GraphNLogN => "O(n log n)",
        _ => "O(log n)",
    }
}

fn bound_formula(kind: AlgorithmKind) -> &'static str {
    match kind {
        AlgorithmKind::Prt => "2n",
        AlgorithmKind::RootedGraph | AlgorithmKind::GraphNLogN => "2m",
        AlgorithmKind::GraphLogN => "2mn + n^2",
        AlgorithmKind::RootedTree => "(d+1)(d+3)",
    }
}

/// One line per (family, algorithm) with measured maxima.
pub(crate) fn markdown(rows: &[BoundReport]) -> String {
    let mut groups: BTreeMap<(String, AlgorithmKind), Vec<&BoundReport>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.family.clone(), r.algo)).or_default().push(r);
    }
    let mut out = String::from(
        "| graph family | algorithm | memory | bound | runs | passed | max rounds | max rounds / bound | peak bits |\n\
         |---|---|---|---|---|---|---|---|---|\n",
    );
    for ((family, algo), rs) in &groups {
        let passed = rs.iter().filter(|r| r.pass).count();
        let max_rounds = rs.iter().filter_map(|r| r.dispersed_at).max();
        let ratio = rs
            .iter()
            .filter_map(|r| r.dispersed_at.map(|d| d as f64 / r.bound.max(1) as f64))
            .fold(0.0f64, f64::max);
        let peak = rs.iter().map(|r| r.peak_bits).max().unwrap_or(0);
        let _ = writeln!(
            out,
            "| {family} | {algo} | {} | {} | {} | {passed} | {} | {ratio:.3} | {peak} |",
            memory_class(*algo),
            bound_formula(*algo),
            rs.len(),
            max_rounds.map_or_else(|| "-".to_string(), |r| r.to_string()),
        );
    }
    out
}

pub(crate) fn cmd_batch(config: &Path, out: Option<&Path>, summary: Option<&Path>) -> Result<u8, Failure> {
    let text = fs::read_to_string(config).map_err(|e| Failure::input(format!("{}: {e}", config.display())))?;
    let blocks = parse_config(&text).map_err(|e| Failure { code: BAD_INPUT, message: format!("{}: {e}", config.display()) })?;
    if blocks.is_empty() {
        eprintln!("warning: {} defines no sweeps", config.display());
    }
    let mut rows = Vec::new();
    let mut faults = 0;
    for b in &blocks {
        run_block(b, &mut rows, &mut faults)?;
    }
    rows.sort_by(|a, b| {
        (&a.family, a.n, a.m, a.seed, a.algo, a.dispersed_at).cmp(&(&b.family, b.n, b.m, b.seed, b.algo, b.dispersed_at))
    });
    let mut csv = format!("{}\n", BoundReport::CSV_HEADER);
    for r in &rows {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    crate::write_or_print(out, &csv)?;
    if let Some(path) = summary {
        crate::write_or_print(Some(path), &markdown(&rows))?;
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    eprintln!("{} rows, {failed} failed", rows.len());
    Ok(if faults > 0 {
        FAULT
    } else if failed > 0 {
        CHECK_FAILED
    } else {
        PASS
    })
}
