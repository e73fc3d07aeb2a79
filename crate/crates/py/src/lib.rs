//! Python bindings: graphs, runs, traces and the checkers.

use dispersion::engine::default_horizon;
use dispersion::verify::{self, BoundReport};
use dispersion::{AlgorithmKind, GraphFamily, Placement, RunOptions, SimError};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(dispersion_py, SimulationFault, PyException, "A transition function broke its contract.");
create_exception!(dispersion_py, TraceDivergence, PyException, "A trace does not replay against its graph.");

/// Report rows and the overall pass flag.
type Rows<T> = (Vec<T>, bool);

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn sim_err(e: SimError) -> PyErr {
    match e {
        SimError::Fault { .. } => SimulationFault::new_err(e.to_string()),
        other => value_err(other),
    }
}

fn algo(name: &str) -> PyResult<AlgorithmKind> {
    name.parse().map_err(value_err)
}

/// An anonymous port-labeled graph.
#[pyclass(name = "PortGraph", module = "dispersion_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPortGraph {
    inner: dispersion::PortGraph,
}

#[pymethods]
impl PyPortGraph {
    /// Builds a graph from a generator family: path, ring, tree, connected or dumbbell.
    #[staticmethod]
    #[pyo3(signature = (family, n, m=None, seed=0, permute=false))]
    fn generate(family: &str, n: usize, m: Option<usize>, seed: u64, permute: bool) -> PyResult<Self> {
        let kind = family.parse().map_err(value_err)?;
        let mut fam = GraphFamily::new(kind, n).with_seed(seed).permuted(permute);
        if let Some(m) = m {
            fam = fam.with_m(m);
        }
        Ok(Self { inner: fam.build().map_err(value_err)? })
    }

    /// Parses the line-based text format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self { inner: dispersion::PortGraph::parse(text).map_err(value_err)? })
    }

    /// Builds a graph from an edge list; ports follow insertion order.
    #[staticmethod]
    fn from_edges(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(Self { inner: dispersion::PortGraph::from_edges(n, &edges).map_err(value_err)? })
    }

    fn serialize(&self) -> String {
        self.inner.serialize()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.edge_count()
    }

    fn degree(&self, v: usize) -> PyResult<usize> {
        if v >= self.inner.node_count() {
            return Err(value_err(format!("no node {v}")));
        }
        Ok(self.inner.degree(v))
    }

    /// `(neighbor, neighbor's port)` behind port `p` of node `v`.
    fn neighbor_via_port(&self, v: usize, p: usize) -> PyResult<(usize, usize)> {
        self.inner.neighbor_via_port(v, p).map_err(value_err)
    }

    /// `{"diameter", "max_degree", "is_tree"}`.
    fn metrics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let m = self.inner.metrics().map_err(value_err)?;
        let d = PyDict::new(py);
        d.set_item("diameter", m.diameter)?;
        d.set_item("max_degree", m.max_degree)?;
        d.set_item("is_tree", m.is_tree)?;
        Ok(d)
    }

    /// Violated invariants, empty when the graph is valid.
    fn validate(&self) -> Vec<String> {
        match self.inner.validate() {
            Ok(()) => Vec::new(),
            Err(vs) => vs.iter().map(|v| format!("{v:?}")).collect(),
        }
    }

    fn __repr__(&self) -> String {
        format!("PortGraph(n={}, m={})", self.inner.node_count(), self.inner.edge_count())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

/// The round-by-round record of one run.
#[pyclass(name = "Trace", module = "dispersion_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTrace {
    inner: dispersion::Trace,
}

#[pymethods]
impl PyTrace {
    #[staticmethod]
    fn from_jsonl(text: &str) -> PyResult<Self> {
        Ok(Self { inner: dispersion::Trace::from_jsonl(text).map_err(value_err)? })
    }

    fn to_jsonl(&self) -> String {
        self.inner.to_jsonl()
    }

    /// SHA-256 of the JSON-lines form.
    fn digest(&self) -> String {
        self.inner.digest()
    }

    #[getter]
    fn algo(&self) -> &'static str {
        self.inner.algo.name()
    }

    #[getter]
    fn dispersed_at(&self) -> Option<u64> {
        self.inner.dispersed_at
    }

    #[getter]
    fn horizon(&self) -> u64 {
        self.inner.horizon
    }

    #[getter]
    fn peak_bits(&self) -> u32 {
        self.inner.peak_bits
    }

    #[getter]
    fn placement(&self) -> Vec<usize> {
        self.inner.placement.clone()
    }

    /// Moves of round `r` (1-based) as `(label, from, port, to)`.
    fn moves(&self, r: usize) -> PyResult<Vec<(u32, usize, usize, usize)>> {
        let rec = r
            .checked_sub(1)
            .and_then(|i| self.inner.rounds.get(i))
            .ok_or_else(|| value_err(format!("no round {r}")))?;
        Ok(rec.moves.iter().map(|m| (m.label, m.from, m.port, m.to)).collect())
    }

    /// Settlements of round `r` as `(label, node)`.
    fn settled(&self, r: usize) -> PyResult<Vec<(u32, usize)>> {
        let rec = r
            .checked_sub(1)
            .and_then(|i| self.inner.rounds.get(i))
            .ok_or_else(|| value_err(format!("no round {r}")))?;
        Ok(rec.settled.clone())
    }

    fn __len__(&self) -> usize {
        self.inner.rounds.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Trace(algo={}, rounds={}, dispersed_at={:?})",
            self.inner.algo,
            self.inner.rounds.len(),
            self.inner.dispersed_at
        )
    }
}

fn report_dict<'py>(py: Python<'py>, r: &BoundReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("algo", r.algo.name())?;
    d.set_item("family", &r.family)?;
    d.set_item("n", r.n)?;
    d.set_item("m", r.m)?;
    d.set_item("D", r.diameter)?;
    d.set_item("seed", r.seed)?;
    d.set_item("dispersed_at", r.dispersed_at)?;
    d.set_item("bound", r.bound)?;
    d.set_item("pass", r.pass)?;
    d.set_item("peak_bits", r.peak_bits)?;
    Ok(d)
}

/// Runs `algo` on `graph` from `placement` (`rooted:<v>`, `random:<seed>`,
/// `identity` or a list of nodes).
#[pyfunction]
#[pyo3(signature = (graph, algo, placement=None, early_stop=false, horizon=None, check=true))]
fn run(
    graph: &PyPortGraph,
    algo: &str,
    placement: Option<&Bound<'_, PyAny>>,
    early_stop: bool,
    horizon: Option<u64>,
    check: bool,
) -> PyResult<PyTrace> {
    let kind = self::algo(algo)?;
    let g = &graph.inner;
    let placement = match placement {
        None => Placement::Rooted(0),
        Some(p) => match p.extract::<Vec<usize>>() {
            Ok(nodes) => Placement::Explicit(nodes),
            Err(_) => p.extract::<String>()?.parse().map_err(sim_err)?,
        },
    };
    let p = placement.resolve(g.node_count()).map_err(sim_err)?;
    if check {
        kind.check_instance(g, &p).map_err(value_err)?;
    }
    let t = dispersion::run_kind(kind, g, &p, RunOptions { horizon, early_stop }).map_err(sim_err)?;
    Ok(PyTrace { inner: t })
}

/// Replays and re-simulates `trace` on `graph`; raises `TraceDivergence`
/// naming the first bad round.
#[pyfunction]
fn verify_trace(trace: &PyTrace, graph: &PyPortGraph) -> PyResult<Option<u64>> {
    verify::verify_trace(&trace.inner, &graph.inner)
        .map(|r| r.dispersed_at)
        .map_err(|e| TraceDivergence::new_err(e.to_string()))
}

/// The bound report of `trace` as a dict.
#[pyfunction]
#[pyo3(signature = (trace, graph, family="", seed=0))]
fn check_time_bound<'py>(
    py: Python<'py>,
    trace: &PyTrace,
    graph: &PyPortGraph,
    family: &str,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = verify::check_time_bound(&trace.inner, &graph.inner, family, seed).map_err(value_err)?;
    report_dict(py, &r)
}

/// The proof's round bound for `algo` on `graph`.
#[pyfunction]
#[pyo3(signature = (algo, graph, root=None))]
fn round_bound(algo: &str, graph: &PyPortGraph, root: Option<usize>) -> PyResult<u64> {
    verify::round_bound(self::algo(algo)?, &graph.inner, root).map_err(value_err)
}

/// The horizon a run of `algo` uses from `placement` (a node list).
#[pyfunction]
fn horizon(algo: &str, graph: &PyPortGraph, placement: Vec<usize>) -> PyResult<u64> {
    Ok(default_horizon(self::algo(algo)?, &graph.inner, &placement))
}

#[pyfunction]
fn is_dispersed(positions: Vec<usize>, n: usize) -> bool {
    verify::is_dispersed(&positions, n)
}

/// Peak declared bits per robot over `sizes`, as `(n, bits, ratio)` rows and
/// the pass flag.
#[pyfunction]
fn memory_scaling(algo: &str, sizes: Vec<usize>) -> PyResult<Rows<(usize, u32, f64)>> {
    let r = verify::memory_scaling(self::algo(algo)?, &sizes).map_err(value_err)?;
    Ok((r.rows.iter().map(|row| (row.n, row.peak_bits, row.ratio)).collect(), r.pass))
}

/// Per-stage `(stage, lemma, residency)` checks of a Rooted-Tree trace and
/// the overall pass flag.
#[pyfunction]
fn audit_rooted_tree(trace: &PyTrace, graph: &PyPortGraph, root: usize) -> PyResult<Rows<(u64, bool, bool)>> {
    let a = verify::audit_rooted_tree_stages(&trace.inner, &graph.inner, root).map_err(value_err)?;
    Ok((a.stages.iter().map(|s| (s.stage, s.lemma, s.residency)).collect(), a.pass))
}

/// Digest of the reference interpreter's trace (graphs of at most 16 nodes).
#[pyfunction]
fn oracle_digest(graph: &PyPortGraph, algo: &str, placement: Vec<usize>) -> PyResult<String> {
    verify::small_instance_oracle(&graph.inner, &placement, self::algo(algo)?)
        .map(|t| t.digest())
        .map_err(value_err)
}

#[pyfunction]
fn algorithms() -> Vec<&'static str> {
    AlgorithmKind::ALL.iter().map(|k| k.name()).collect()
}

#[pymodule]
fn dispersion_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPortGraph>()?;
    m.add_class::<PyTrace>()?;
    m.add("SimulationFault", m.py().get_type::<SimulationFault>())?;
    m.add("TraceDivergence", m.py().get_type::<TraceDivergence>())?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(verify_trace, m)?)?;
    m.add_function(wrap_pyfunction!(check_time_bound, m)?)?;
    m.add_function(wrap_pyfunction!(round_bound, m)?)?;
    m.add_function(wrap_pyfunction!(horizon, m)?)?;
    m.add_function(wrap_pyfunction!(is_dispersed, m)?)?;
    m.add_function(wrap_pyfunction!(memory_scaling, m)?)?;
    m.add_function(wrap_pyfunction!(audit_rooted_tree, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_digest, m)?)?;
    m.add_function(wrap_pyfunction!(algorithms, m)?)?;
    Ok(())
}
