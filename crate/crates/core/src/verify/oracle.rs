//! A second, deliberately plain interpreter of the five algorithms for small
//! instances. It evaluates robots one at a time against a round-start
//! snapshot, encodes ⊥ and −1 as `-1`, derives the Rooted-Tree stage clock
//! from the global round number, and computes memory widths on its own. Its
//! traces must match the engine's byte for byte.

use thiserror::Error;

use crate::portgraph::{NodeId, PortGraph};
use crate::trace::{Move, RoundRecord, Trace};
use crate::AlgorithmKind;

pub const ORACLE_MAX_N: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("oracle handles n <= {ORACLE_MAX_N}, got {0}")]
    TooLarge(usize),
    #[error("bad placement")]
    Placement,
    #[error("round {round}: robot {label}: {message}")]
    Fault { round: u64, label: u32, message: String },
}

const EXPLORE: u8 = 0;
const SETTLED: u8 = 1;
const BACK: u8 = 2;
const TO_ROOT: u8 = 3;
const ROOT: u8 = 4;
const WAIT: u8 = 5;

#[derive(Debug, Clone)]
struct Bot {
    at: usize,
    came: i64,
    pe: i64,
    par: i64,
    mode: u8,
    sn: i64,
    dist: i64,
    walk: i64,
    fdp: i64,
    fd: bool,
    req: i64,
    done: bool,
    seen: Vec<(i64, i64)>,
}

impl Bot {
    fn new(at: usize) -> Bot {
        Bot {
            at,
            came: -1,
            pe: -1,
            par: -1,
            mode: EXPLORE,
            sn: 0,
            dist: 0,
            walk: 0,
            fdp: 0,
            fd: false,
            req: 0,
            done: false,
            seen: Vec::new(),
        }
    }
}

struct Decision {
    bot: Bot,
    settle: bool,
    port: i64,
}

fn stay(bot: Bot) -> Result<Decision, String> {
    Ok(Decision { bot, settle: false, port: -1 })
}

fn go(bot: Bot, port: i64) -> Result<Decision, String> {
    if port < 0 {
        return Err("no port to move through".into());
    }
    Ok(Decision { bot, settle: false, port })
}

fn settle(bot: Bot) -> Result<Decision, String> {
    Ok(Decision { bot, settle: true, port: -1 })
}

fn bits_for(x: u64) -> u32 {
    let mut b = 0;
    while (1u64 << b) < x {
        b += 1;
    }
    b
}

fn declared_bits(kind: AlgorithmKind, n: u64, delta: u64, horizon: u64) -> u32 {
    let pw = bits_for(delta.max(2));
    let lw = bits_for(n + 1);
    let rc = bits_for(horizon + 1);
    match kind {
        AlgorithmKind::Prt => pw + 1 + rc + lw,
        AlgorithmKind::RootedGraph => 2 * (pw + 1) + 2 + rc + lw,
        AlgorithmKind::GraphLogN => 2 * (pw + 1) + 2 + lw + bits_for(n + 2) + rc + lw,
        AlgorithmKind::GraphNLogN => pw + 1 + 2 + rc + lw + n as u32 * (lw + pw + 1),
        AlgorithmKind::RootedTree => {
            2 * pw + 3 + bits_for(n + 1) + bits_for(delta + 1) + 2 + bits_for(n + 1) + bits_for(n + 2) + bits_for(2 * n + 4) + lw
        }
    }
}

fn bfs_depth(g: &PortGraph, root: usize) -> Option<u64> {
    let n = g.node_count();
    let mut depth = vec![u64::MAX; n];
    depth[root] = 0;
    let mut frontier = vec![root];
    let mut reached = 1;
    let mut d = 0;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &u in &frontier {
            for p in 0..g.degree(u) {
                let (v, _) = g.neighbor_via_port(u, p).ok()?;
                if depth[v] == u64::MAX {
                    depth[v] = depth[u] + 1;
                    d = d.max(depth[v]);
                    reached += 1;
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    (reached == n).then_some(d)
}

fn oracle_horizon(kind: AlgorithmKind, g: &PortGraph, placement: &[NodeId]) -> u64 {
    let n = g.node_count() as u64;
    let m = g.edge_count() as u64;
    match kind {
        AlgorithmKind::Prt => 2 * n,
        AlgorithmKind::RootedGraph => (2 * m).max(1),
        AlgorithmKind::GraphNLogN => (2 * m).max(1),
        AlgorithmKind::GraphLogN => 2 * m * n + n * n,
        AlgorithmKind::RootedTree => {
            let r = placement[0];
            let rooted = placement.iter().all(|&v| v == r);
            match (rooted && m + 1 == n).then(|| bfs_depth(g, r)).flatten() {
                Some(d) => (d + 1) * (d + 3) + 2 * d + 5,
                None => (3 * n * n).max(3),
            }
        }
    }
}

/// Stage and in-stage round of global round `t` (stage L spans rounds
/// L² .. L² + 2L).
fn stage_clock(t: u64) -> (i64, i64) {
    let mut l = 1;
    while l * (l + 2) < t {
        l += 1;
    }
    (l as i64, (t - (l * l - 1)) as i64)
}

/// Runs `kind` to its horizon (or until every robot has terminated).
pub fn small_instance_oracle(g: &PortGraph, placement: &[NodeId], kind: AlgorithmKind) -> Result<Trace, OracleError> {
    oracle_run(g, placement, kind, false)
}

#[allow(clippy::needless_range_loop)]
pub fn oracle_run(g: &PortGraph, placement: &[NodeId], kind: AlgorithmKind, early_stop: bool) -> Result<Trace, OracleError> {
    let n = g.node_count();
    if n > ORACLE_MAX_N {
        return Err(OracleError::TooLarge(n));
    }
    if placement.len() != n || placement.iter().any(|&v| v >= n) {
        return Err(OracleError::Placement);
    }
    let horizon = oracle_horizon(kind, g, placement);
    let bits = declared_bits(kind, n as u64, g.max_degree() as u64, horizon);

    let mut bots: Vec<Bot> = placement.iter().map(|&v| Bot::new(v)).collect();
    let mut owner: Vec<i64> = vec![-1; n];
    let mut pending = Vec::new();

    // Initialization block: the lowest label at each starting node.
    for v in 0..n {
        let Some(lowest) = (0..n).find(|&i| bots[i].at == v) else { continue };
        let group: Vec<usize> = (0..n).filter(|&i| bots[i].at == v).collect();
        for i in group {
            let b = &mut bots[i];
            match kind {
                AlgorithmKind::GraphLogN => {
                    b.sn = lowest as i64 + 1;
                    if i == lowest {
                        b.mode = SETTLED;
                        b.dist = 0;
                    } else {
                        b.dist = -1;
                    }
                }
                AlgorithmKind::GraphNLogN => {
                    if i == lowest {
                        b.mode = SETTLED;
                    } else {
                        b.seen.push((i as i64 + 1, -1));
                    }
                }
                AlgorithmKind::RootedTree => {
                    b.pe = 0;
                    if i == lowest {
                        b.mode = ROOT;
                        b.req = g.degree(v) as i64;
                    }
                }
                AlgorithmKind::Prt => b.pe = 0,
                AlgorithmKind::RootedGraph => {}
            }
        }
        if matches!(kind, AlgorithmKind::GraphLogN | AlgorithmKind::GraphNLogN | AlgorithmKind::RootedTree) {
            owner[v] = lowest as i64 + 1;
            pending.push((lowest as u32 + 1, v));
        }
    }

    let mut rounds = Vec::new();
    let mut dispersed_at = None;
    let mut t = 0u64;
    while t < horizon {
        if kind == AlgorithmKind::RootedTree && bots.iter().all(|b| b.done) {
            break;
        }
        t += 1;
        let snap = bots.clone();
        let mut decisions = Vec::with_capacity(n);
        for i in 0..n {
            let here: Vec<usize> = (0..n).filter(|&j| snap[j].at == snap[i].at).collect();
            let deg = g.degree(snap[i].at) as i64;
            let d = match kind {
                AlgorithmKind::Prt => prt(i, &snap, &here, deg),
                AlgorithmKind::RootedGraph => rooted_graph(i, &snap, &here, deg),
                AlgorithmKind::GraphLogN => graph_logn(i, &snap, &here, deg, n),
                AlgorithmKind::GraphNLogN => graph_nlogn(i, &snap, &here, deg, n),
                AlgorithmKind::RootedTree => rooted_tree(i, &snap, &here, deg, stage_clock(t)),
            }
            .map_err(|message| OracleError::Fault { round: t, label: i as u32 + 1, message })?;
            decisions.push(d);
        }

        let mut settled = std::mem::take(&mut pending);
        let mut moves = Vec::new();
        for (i, d) in decisions.into_iter().enumerate() {
            let fault = |m: &str| OracleError::Fault { round: t, label: i as u32 + 1, message: m.into() };
            let v = snap[i].at;
            if d.settle {
                if owner[v] >= 0 {
                    return Err(fault("node already owned"));
                }
                owner[v] = i as i64 + 1;
                settled.push((i as u32 + 1, v));
            }
            bots[i] = d.bot;
            bots[i].at = v;
            if d.port >= 0 {
                let (to, back) = g.neighbor_via_port(v, d.port as usize).map_err(|_| fault("invalid port"))?;
                moves.push(Move { label: i as u32 + 1, from: v, port: d.port as usize, to });
                bots[i].at = to;
                bots[i].came = back as i64;
            }
        }
        settled.sort_unstable();
        rounds.push(RoundRecord { round: t, moves, settled, bits_max: bits });
        let done = (0..n).all(|v| owner[v] > 0 && bots[(owner[v] - 1) as usize].at == v);
        if done && dispersed_at.is_none() {
            dispersed_at = Some(t);
            if early_stop {
                break;
            }
        }
    }

    Ok(Trace {
        algo: kind,
        n,
        m: g.edge_count(),
        placement: placement.to_vec(),
        rounds,
        dispersed_at,
        horizon,
        peak_bits: bits,
    })
}

fn prt(i: usize, s: &[Bot], here: &[usize], deg: i64) -> Result<Decision, String> {
    let mut b = s[i].clone();
    if b.mode == SETTLED {
        return stay(b);
    }
    if b.came >= 0 {
        b.pe = b.came;
    }
    let owned = here.iter().any(|&j| s[j].mode == SETTLED);
    if !owned && here[0] == i {
        b.mode = SETTLED;
        return settle(b);
    }
    if deg == 0 {
        return Err("isolated".into());
    }
    b.pe = (b.pe + 1) % deg;
    let p = b.pe;
    go(b, p)
}

fn rooted_graph(i: usize, s: &[Bot], here: &[usize], deg: i64) -> Result<Decision, String> {
    let mut b = s[i].clone();
    if b.mode == SETTLED {
        return stay(b);
    }
    if b.came >= 0 {
        b.pe = b.came;
    }
    let holder = here.iter().copied().find(|&j| s[j].mode == SETTLED);
    if b.mode == EXPLORE {
        if holder.is_some() {
            b.mode = BACK;
            let p = b.pe;
            return go(b, p);
        }
        let claimer = here.iter().copied().find(|&j| s[j].mode == EXPLORE).unwrap();
        if claimer == i {
            b.mode = SETTLED;
            b.par = b.pe;
            return settle(b);
        }
        let claimer_par = if s[claimer].came >= 0 { s[claimer].came } else { s[claimer].pe };
        if deg == 0 {
            return Err("isolated".into());
        }
        b.pe = (b.pe + 1) % deg;
        if b.pe == claimer_par {
            b.mode = BACK;
        }
        let p = b.pe;
        return go(b, p);
    }
    let Some(h) = holder else { return Err("backtrack onto free node".into()) };
    b.pe = (b.pe + 1) % deg;
    if b.pe != s[h].par {
        b.mode = EXPLORE;
    }
    let p = b.pe;
    go(b, p)
}

fn graph_logn(i: usize, s: &[Bot], here: &[usize], deg: i64, n: usize) -> Result<Decision, String> {
    let least = here.iter().map(|&j| s[j].sn).min().unwrap();
    let x = here.iter().copied().find(|&j| s[j].sn == least).unwrap();
    let convert = |j: usize| -> Result<Bot, String> {
        let mut c = s[j].clone();
        if c.sn > least {
            c.sn = least;
            if c.mode == SETTLED {
                if s[x].came < 0 {
                    return Err("witness never moved".into());
                }
                c.par = s[x].came;
                c.dist = s[x].dist + 1;
            } else {
                c.mode = TO_ROOT;
                c.walk = 0;
            }
        }
        Ok(c)
    };
    let conv: Vec<Bot> = here.iter().map(|&j| convert(j)).collect::<Result<_, _>>()?;
    let pos = |j: usize| here.iter().position(|&k| k == j).unwrap();
    let holder = here.iter().copied().find(|&j| conv[pos(j)].mode == SETTLED);
    let claimer = if holder.is_none() { here.iter().copied().find(|&j| conv[pos(j)].mode == EXPLORE) } else { None };
    // (label, parent, dist) of the node's robot
    let anchor = match (holder, claimer) {
        (Some(h), _) => Some((h as i64 + 1, conv[pos(h)].par, conv[pos(h)].dist)),
        (None, Some(c)) => {
            let cb = &conv[pos(c)];
            Some((c as i64 + 1, if s[c].came >= 0 { s[c].came } else { cb.pe }, cb.dist + 1))
        }
        _ => None,
    };

    let mut b = conv[pos(i)].clone();
    match b.mode {
        SETTLED => stay(b),
        EXPLORE => {
            if b.came >= 0 {
                b.pe = b.came;
            }
            b.dist += 1;
            if claimer == Some(i) {
                b.mode = SETTLED;
                b.par = b.pe;
                return settle(b);
            }
            let (_, par, dist) = anchor.unwrap();
            if b.dist > dist || s[i].came != par {
                b.mode = BACK;
            } else {
                if deg == 0 {
                    return Err("isolated".into());
                }
                b.pe = (b.pe + 1) % deg;
                if b.pe == par {
                    b.mode = BACK;
                }
            }
            let p = b.pe;
            go(b, p)
        }
        BACK => {
            let Some((_, par, _)) = anchor else { return Err("backtrack onto free node".into()) };
            if b.came >= 0 {
                b.pe = b.came;
            }
            b.dist -= 1;
            b.pe = (b.pe + 1) % deg;
            if b.pe != par {
                b.mode = EXPLORE;
            }
            let p = b.pe;
            go(b, p)
        }
        _ => {
            let Some((label, par, _)) = anchor else { return Err("walk reached a free node".into()) };
            if label == b.sn {
                b.mode = EXPLORE;
                b.dist = 0;
                b.pe = 0;
                b.walk = 0;
                if deg == 0 {
                    return Err("isolated".into());
                }
            } else {
                b.walk += 1;
                if b.walk > n as i64 {
                    return Err("walk too long".into());
                }
                b.pe = par;
            }
            let p = b.pe;
            go(b, p)
        }
    }
}

fn graph_nlogn(i: usize, s: &[Bot], here: &[usize], deg: i64, n: usize) -> Result<Decision, String> {
    let mut b = s[i].clone();
    if b.mode == SETTLED {
        return stay(b);
    }
    if b.came >= 0 {
        b.pe = b.came;
    }
    let holder = here.iter().copied().find(|&j| s[j].mode == SETTLED).map(|j| j as i64 + 1);
    let claimer = if holder.is_none() { here.iter().copied().find(|&j| s[j].mode == EXPLORE) } else { None };
    let find = |seen: &[(i64, i64)], l: i64| seen.iter().find(|e| e.0 == l).map(|e| e.1);
    if b.mode == EXPLORE {
        if let Some(h) = holder {
            if find(&b.seen, h).is_some() {
                b.mode = BACK;
                let p = b.pe;
                return go(b, p);
            }
        }
        if claimer == Some(i) {
            b.mode = SETTLED;
            return settle(b);
        }
        let v = holder.unwrap_or_else(|| claimer.unwrap() as i64 + 1);
        if find(&b.seen, v).is_some() || b.seen.len() >= n {
            return Err("table misuse".into());
        }
        b.seen.push((v, b.pe));
        if deg == 0 {
            return Err("isolated".into());
        }
        b.pe = (b.pe + 1) % deg;
        if find(&b.seen, v) == Some(b.pe) {
            b.mode = BACK;
        }
        let p = b.pe;
        return go(b, p);
    }
    let Some(h) = holder else { return Err("backtrack onto free node".into()) };
    let Some(par) = find(&b.seen, h) else { return Err("holder not tabled".into()) };
    b.pe = (b.pe + 1) % deg;
    if b.pe != par {
        b.mode = EXPLORE;
    }
    let p = b.pe;
    go(b, p)
}

fn rooted_tree(i: usize, s: &[Bot], here: &[usize], deg: i64, (l, r): (i64, i64)) -> Result<Decision, String> {
    let mut b = s[i].clone();
    if b.done {
        return stay(b);
    }
    let visitor = |j: usize| s[j].mode == SETTLED && !s[j].done && (r == s[j].dist || r == 2 * l - s[j].dist + 1);
    let climber = |j: usize| {
        let k = s[j].dist;
        s[j].mode == SETTLED
            && !s[j].done
            && (r == k - 1 || r == 2 * l - k || (k == 1 && r == 2 * l + 1 && !s[j].fd))
    };
    let home = here.iter().copied().find(|&j| s[j].mode == ROOT || (s[j].mode == SETTLED && !visitor(j)));
    let visitors: Vec<usize> = here.iter().copied().filter(|&j| visitor(j)).collect();
    for &v in &visitors {
        if s[v].came < 0 {
            return Err("visitor never moved".into());
        }
    }
    let heard_fd = visitors.iter().filter(|&&v| s[v].fd).count() as i64;
    let last_round = r == 2 * l + 1;

    let mut d = match b.mode {
        ROOT => {
            b.fdp += heard_fd;
            if b.fdp == deg {
                b.fd = true;
            }
            stay(b)?
        }
        EXPLORE => {
            if b.came >= 0 {
                b.pe = b.came;
            }
            let explorers: Vec<usize> = here.iter().copied().filter(|&j| s[j].mode == EXPLORE).collect();
            match home {
                None => {
                    if explorers[0] != i {
                        return Err("two explorers on a free node".into());
                    }
                    b.mode = SETTLED;
                    b.req = (deg - 1).max(0);
                    b.par = b.pe;
                    b.fdp = 0;
                    settle(b)?
                }
                Some(h) => {
                    let mut port = -1;
                    if r <= l && s[explorers[0]].dist + 1 < l {
                        let mut slots: Vec<i64> = Vec::new();
                        if visitors.is_empty() {
                            for p in 0..deg {
                                if p != s[h].par {
                                    slots.push(p);
                                }
                            }
                        } else {
                            let mut vs = visitors.clone();
                            vs.sort_by_key(|&v| s[v].came);
                            for v in vs {
                                if !s[v].fd && s[v].came != s[h].par {
                                    for _ in 0..s[v].req {
                                        slots.push(s[v].came);
                                    }
                                }
                            }
                        }
                        let rank = explorers.iter().position(|&j| j == i).unwrap();
                        if rank < slots.len() {
                            port = slots[rank];
                        }
                    }
                    if port >= 0 {
                        b.dist += 1;
                        go(b, port)?
                    } else if s[h].mode == ROOT {
                        b.mode = if last_round { EXPLORE } else { WAIT };
                        stay(b)?
                    } else {
                        return Err("explorer stranded below the root".into());
                    }
                }
            }
        }
        WAIT => {
            if !home.is_some_and(|h| s[h].mode == ROOT) {
                return Err("waiting away from the root".into());
            }
            if last_round {
                b.mode = EXPLORE;
            }
            stay(b)?
        }
        _ => {
            if !visitor(i) {
                b.fdp += heard_fd;
                if !visitors.is_empty() {
                    b.req = visitors.iter().map(|&v| s[v].req).sum();
                }
            }
            if climber(i) {
                if b.fdp == deg - 1 {
                    b.fd = true;
                }
                let p = b.par;
                go(b, p)?
            } else if visitor(i) {
                b.pe = b.came;
                let p = b.pe;
                go(b, p)?
            } else {
                stay(b)?
            }
        }
    };
    if last_round && d.bot.fd && d.port < 0 {
        d.bot.done = true;
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_clock_boundaries() {
        assert_eq!(stage_clock(1), (1, 1));
        assert_eq!(stage_clock(3), (1, 3));
        assert_eq!(stage_clock(4), (2, 1));
        assert_eq!(stage_clock(8), (2, 5));
        assert_eq!(stage_clock(9), (3, 1));
        assert_eq!(stage_clock(15), (3, 7));
    }

    #[test]
    fn width_helper() {
        assert_eq!((bits_for(0), bits_for(1), bits_for(2), bits_for(17)), (0, 0, 1, 5));
    }
}
