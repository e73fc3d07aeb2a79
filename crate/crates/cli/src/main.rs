//! `disperse`: generate graphs, run simulations and sweeps, verify traces.
//!
//! Exit status: 0 every check passed, 1 a check failed, 2 bad usage or input,
//! 3 the simulation faulted.

mod batch;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dispersion::verify::{self, check_time_bound, verify_trace, BoundReport};
use dispersion::*;

const PASS: u8 = 0;
const CHECK_FAILED: u8 = 1;
const BAD_INPUT: u8 = 2;
const FAULT: u8 = 3;

#[derive(Parser)]
#[command(name = "disperse", version, about = "Dispersion of mobile robots on port-labeled graphs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a graph in the text format and print n, m, D, Δ.
    Gen {
        #[command(flatten)]
        family: FamilyArgs,
        /// Output file; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one simulation and check it against its round bound.
    Run(RunArgs),
    /// Run the sweeps of a config file and write CSV and Markdown reports.
    Batch {
        config: PathBuf,
        /// CSV report; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Markdown summary table.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Replay a trace against a graph, re-simulate it and check the bound.
    Verify {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        graph: PathBuf,
    },
}

#[derive(Args, Clone)]
struct FamilyArgs {
    /// path, ring, tree, connected or dumbbell.
    #[arg(long)]
    family: Option<FamilyKind>,
    #[arg(long)]
    n: Option<usize>,
    /// Edge count (connected family only).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relabel the ports of path, ring and dumbbell by a seeded permutation.
    #[arg(long)]
    permute: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Graph file in the text format, instead of a generator family.
    #[arg(long, conflicts_with = "family")]
    graph: Option<PathBuf>,
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long)]
    algo: AlgorithmKind,
    /// rooted:<node>, random:<seed>, identity, or list:<n0>,<n1>,...
    #[arg(long, default_value = "rooted:0")]
    placement: Placement,
    /// JSON-lines trace output.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Summary JSON output; printed to standard output if omitted.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Stop at the first dispersed round instead of running to the horizon.
    #[arg(long)]
    early_stop: bool,
}

/// A failure carrying its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl ToString) -> Self {
        Failure { code: BAD_INPUT, message: message.to_string() }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let code = if matches!(e, SimError::Fault { .. }) { FAULT } else { BAD_INPUT };
        Failure { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Gen { family, out } => cmd_gen(&family, out.as_deref()),
        Cmd::Run(args) => cmd_run(&args),
        Cmd::Batch { config, out, summary } => batch::cmd_batch(&config, out.as_deref(), summary.as_deref()),
        Cmd::Verify { trace, graph } => cmd_verify(&trace, &graph),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("disperse: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

impl FamilyArgs {
    fn family(&self) -> Result<GraphFamily, Failure> {
        let kind = self.family.ok_or_else(|| Failure::input("--family is required"))?;
        let n = self.n.ok_or_else(|| Failure::input("--n is required"))?;
        let mut fam = GraphFamily::new(kind, n).with_seed(self.seed).permuted(self.permute);
        if let Some(m) = self.m {
            fam = fam.with_m(m);
        }
        Ok(fam)
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub(crate) fn read_graph(path: &Path) -> Result<PortGraph, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    PortGraph::parse(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn cmd_gen(args: &FamilyArgs, out: Option<&Path>) -> Result<u8, Failure> {
    let g = args.family()?.build().map_err(Failure::input)?;
    let metrics = g.metrics().map_err(Failure::input)?;
    write_or_print(out, &g.serialize())?;
    let line = format!("n={} m={} D={} Δ={}", g.node_count(), g.edge_count(), metrics.diameter, metrics.max_degree);
    if out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(PASS)
}

/// Runs `kind` after the compatibility check and reports it against its bound.
pub(crate) fn simulate(
    kind: AlgorithmKind,
    g: &PortGraph,
    placement: &Placement,
    early_stop: bool,
    family: &str,
    seed: u64,
) -> Result<(Trace, BoundReport), Failure> {
    let p = placement.resolve(g.node_count())?;
    kind.check_instance(g, &p).map_err(Failure::input)?;
    let t = run_kind(kind, g, &p, RunOptions { horizon: None, early_stop })?;
    let report = check_time_bound(&t, g, family, seed).map_err(|e| Failure { code: CHECK_FAILED, message: e.to_string() })?;
    Ok((t, report))
}

fn cmd_run(args: &RunArgs) -> Result<u8, Failure> {
    let (g, family, seed) = match &args.graph {
        Some(path) => (read_graph(path)?, "file".to_string(), 0),
        None => {
            let fam = args.family.family()?;
            (fam.build().map_err(Failure::input)?, fam.kind.name().to_string(), fam.seed)
        }
    };
    let (t, report) = simulate(args.algo, &g, &args.placement, args.early_stop, &family, seed)?;
    if let Some(path) = &args.trace {
        write_or_print(Some(path), &t.to_jsonl())?;
    }
    write_or_print(args.summary.as_deref(), &format!("{}\n", report.summary_json()))?;
    Ok(if report.pass { PASS } else { CHECK_FAILED })
}

fn cmd_verify(trace: &Path, graph: &Path) -> Result<u8, Failure> {
    let g = read_graph(graph)?;
    let text = fs::read_to_string(trace).map_err(|e| Failure::input(format!("{}: {e}", trace.display())))?;
    let t = Trace::from_jsonl(&text).map_err(|e| Failure::input(format!("{}: {e}", trace.display())))?;
    if let Err(e) = verify_trace(&t, &g) {
        println!("diverges at round {}: {}", e.round, e.message);
        return Ok(CHECK_FAILED);
    }
    let report = check_time_bound(&t, &g, "file", 0).map_err(|e| Failure { code: CHECK_FAILED, message: e.to_string() })?;
    let dispersed = verify::first_dispersion_round(&t).ok().flatten();
    println!(
        "replay ok: {} rounds, dispersed at {}, bound {} ({})",
        t.len(),
        dispersed.map_or_else(|| "never".to_string(), |r| r.to_string()),
        report.bound,
        if report.pass { "pass" } else { "fail" }
    );
    Ok(if report.pass { PASS } else { CHECK_FAILED })
}
