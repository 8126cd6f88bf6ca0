//! Python bindings: a `Simulation` wrapper plus the exact oracles.

use dymatch::adversary::{build_lb_instance, Update};
use dymatch::driver::{apply_update, run_lb_trial, Algorithm, UpdateOutcome};
use dymatch::{oracle, Graph, Matching, Partition, SimConfig, Vertex};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn err(e: dymatch::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn outcome<'py>(py: Python<'py>, o: &UpdateOutcome) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("rounds", o.rounds)?;
    d.set_item("tokens", o.tokens)?;
    d.set_item("max_link_tokens", o.max_link_tokens)?;
    if let Some(b) = &o.batch {
        d.set_item("minibatches", b.minibatches.len())?;
    }
    Ok(d)
}

fn certificate<'py>(py: Python<'py>, c: &oracle::Certificate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("ok", c.ok())?;
    d.set_item("maximal", c.maximal)?;
    d.set_item("free_edge", c.free_edge)?;
    d.set_item("three_aug_count", c.three_aug_count)?;
    d.set_item("matching_size", c.matching_size)?;
    d.set_item("mcm", c.mcm)?;
    d.set_item("mcm_exhaustive", c.mcm_exhaustive)?;
    d.set_item("ratio", c.ratio)?;
    Ok(d)
}

#[pyclass(name = "Simulation")]
struct PySimulation {
    sim: dymatch::Simulation,
    alg: Algorithm,
}

#[pymethods]
impl PySimulation {
    /// `partition` is "round-robin" or "contiguous".
    #[new]
    #[pyo3(signature = (n, k, beta=1, seed=0, algorithm="fullydyn", partition="round-robin"))]
    fn new(n: usize, k: usize, beta: usize, seed: u64, algorithm: &str, partition: &str) -> PyResult<Self> {
        if k == 0 {
            return Err(PyValueError::new_err("k must be positive"));
        }
        let part = match partition {
            "round-robin" => Partition::round_robin(n, k),
            "contiguous" => Partition::contiguous(n, k),
            _ => return Err(PyValueError::new_err(format!("unknown partition {partition:?}"))),
        };
        let sim = dymatch::Simulation::new(SimConfig::new(n, k, beta, seed), part).map_err(err)?;
        Ok(Self {
            sim,
            alg: algorithm.parse().map_err(err)?,
        })
    }

    fn insert<'py>(&mut self, py: Python<'py>, u: Vertex, v: Vertex) -> PyResult<Bound<'py, PyDict>> {
        self.apply(py, Update::Insert { u, v })
    }

    fn delete<'py>(&mut self, py: Python<'py>, u: Vertex, v: Vertex) -> PyResult<Bound<'py, PyDict>> {
        self.apply(py, Update::Delete { u, v })
    }

    fn insert_batch<'py>(&mut self, py: Python<'py>, edges: Vec<(Vertex, Vertex)>) -> PyResult<Bound<'py, PyDict>> {
        self.apply(py, Update::InsertBatch { edges })
    }

    fn matching(&self) -> Vec<(Vertex, Vertex)> {
        self.sim.matching().edges()
    }

    fn edges(&self) -> Vec<(Vertex, Vertex)> {
        self.sim.graph().edges()
    }

    #[getter]
    fn rounds(&self) -> u64 {
        self.sim.round()
    }

    fn metrics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let m = self.sim.metrics();
        let d = PyDict::new(py);
        d.set_item("rounds_total", m.rounds_total)?;
        d.set_item("rounds_per_update", m.rounds_per_update.clone())?;
        d.set_item("tokens_total", m.tokens_total)?;
        d.set_item("max_link_tokens_per_round", m.max_link_tokens_per_round)?;
        d.set_item("spreading_invocations", m.spreading_invocations)?;
        d.set_item("bits_received_per_player", m.bits_received_per_player.clone())?;
        Ok(d)
    }

    /// Full oracle check of the current matching.
    #[pyo3(signature = (cap=None))]
    fn certify<'py>(&self, py: Python<'py>, cap: Option<usize>) -> PyResult<Bound<'py, PyDict>> {
        let c = oracle::certify(self.sim.graph(), self.sim.matching(), cap.unwrap_or_else(oracle::oracle_cap));
        certificate(py, &c)
    }
}

impl PySimulation {
    fn apply<'py>(&mut self, py: Python<'py>, up: Update) -> PyResult<Bound<'py, PyDict>> {
        let o = apply_update(&mut self.sim, self.alg, &up).map_err(err)?;
        outcome(py, &o)
    }
}

fn graph_and_matching(n: usize, edges: &[(Vertex, Vertex)], matching: &[(Vertex, Vertex)]) -> PyResult<(Graph, Matching)> {
    let g = Graph::from_edges(n, edges).map_err(err)?;
    let m = Matching::from_pairs(n, matching);
    m.validate(&g).map_err(err)?;
    Ok((g, m))
}

/// Exact maximum matching size (blossom).
#[pyfunction]
fn maximum_matching_size(n: usize, edges: Vec<(Vertex, Vertex)>) -> PyResult<usize> {
    Ok(oracle::maximum_matching(&Graph::from_edges(n, &edges).map_err(err)?).size())
}

/// A free-free edge, or `None` when `matching` is maximal.
#[pyfunction]
fn free_edge(n: usize, edges: Vec<(Vertex, Vertex)>, matching: Vec<(Vertex, Vertex)>) -> PyResult<Option<(Vertex, Vertex)>> {
    let (g, m) = graph_and_matching(n, &edges, &matching)?;
    Ok(oracle::is_maximal(&g, &m))
}

/// All 3-augmenting paths `(a, b, c, d)`.
#[pyfunction]
fn three_aug_paths(
    n: usize,
    edges: Vec<(Vertex, Vertex)>,
    matching: Vec<(Vertex, Vertex)>,
) -> PyResult<Vec<(Vertex, Vertex, Vertex, Vertex)>> {
    let (g, m) = graph_and_matching(n, &edges, &matching)?;
    Ok(oracle::find_3aug_paths(&g, &m))
}

/// One lower-bound trial with the batch algorithm.
#[pyfunction]
#[pyo3(signature = (n, k, ell, beta=1, seed=0))]
fn lb_trial<'py>(py: Python<'py>, n: usize, k: usize, ell: usize, beta: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let inst = build_lb_instance(n, k, ell, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(err)?;
    let t = run_lb_trial(&inst, beta, seed).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("p", t.p)?;
    d.set_item("ell", t.ell)?;
    d.set_item("bits_to_p", t.bits_to_p)?;
    d.set_item("reference_bits", t.reference_bits)?;
    d.set_item("flips_required", t.flips_required)?;
    d.set_item("flips_observed", t.flips_observed)?;
    d.set_item("segments_with_3aug", t.segments_with_3aug)?;
    d.set_item("ok", t.ok())?;
    Ok(d)
}

#[pymodule]
fn dymatch_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySimulation>()?;
    m.add_function(wrap_pyfunction!(maximum_matching_size, m)?)?;
    m.add_function(wrap_pyfunction!(free_edge, m)?)?;
    m.add_function(wrap_pyfunction!(three_aug_paths, m)?)?;
    m.add_function(wrap_pyfunction!(lb_trial, m)?)?;
    Ok(())
}
