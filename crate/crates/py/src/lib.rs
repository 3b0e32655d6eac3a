//! Python module `dynmis`: the engine, the auditors and the stream tools.

use std::collections::BTreeMap;
use std::sync::{Mutex, MutexGuard};

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use dynmis::stats::{replay as replay_stream, ReplayOptions};
use dynmis::streams::{gen_forest_union, gen_preferential};
use dynmis::verify::{check_invariants, check_mis as audit_mis};
use dynmis::{ChangeLog, Engine, MisChange, Update, UpdateStream, Vertex};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn changes(log: ChangeLog) -> Vec<(Vertex, &'static str)> {
    log.events
        .into_iter()
        .map(|(v, c)| {
            (
                v,
                match c {
                    MisChange::Added => "added",
                    MisChange::Removed => "removed",
                },
            )
        })
        .collect()
}

/// Maximal independent set maintained under edge insertions and deletions.
#[pyclass(name = "Engine", module = "dynmis")]
struct PyEngine {
    inner: Mutex<Engine>,
}

impl PyEngine {
    fn engine(&self) -> PyResult<MutexGuard<'_, Engine>> {
        self.inner
            .lock()
            .map_err(|_| PyRuntimeError::new_err("engine poisoned by an earlier panic"))
    }
}

#[pymethods]
impl PyEngine {
    #[new]
    #[pyo3(signature = (n, alpha=1, strict=false))]
    fn new(n: usize, alpha: usize, strict: bool) -> PyResult<Self> {
        let mut engine = Engine::with_alpha(n, alpha).map_err(value_err)?;
        engine.set_strict(strict);
        Ok(PyEngine {
            inner: Mutex::new(engine),
        })
    }

    /// Inserts edge {u, v}; returns the MIS changes as (vertex, "added" | "removed").
    fn insert(&self, u: Vertex, v: Vertex) -> PyResult<Vec<(Vertex, &'static str)>> {
        let log = self.engine()?.insert(u, v).map_err(value_err)?;
        Ok(changes(log))
    }

    fn delete(&self, u: Vertex, v: Vertex) -> PyResult<Vec<(Vertex, &'static str)>> {
        let log = self.engine()?.delete(u, v).map_err(value_err)?;
        Ok(changes(log))
    }

    fn mis(&self) -> PyResult<Vec<Vertex>> {
        Ok(self.engine()?.mis().into_iter().collect())
    }

    fn is_in_mis(&self, v: Vertex) -> PyResult<bool> {
        let e = self.engine()?;
        if v >= e.n() {
            return Err(value_err(format!("vertex {v} out of range")));
        }
        Ok(e.is_in_mis(v))
    }

    fn mis_size(&self) -> PyResult<usize> {
        Ok(self.engine()?.mis_size())
    }

    #[getter]
    fn n(&self) -> PyResult<usize> {
        Ok(self.engine()?.n())
    }

    #[getter]
    fn alpha(&self) -> PyResult<usize> {
        Ok(self.engine()?.params().alpha)
    }

    /// Current edges as (tail, head) in the maintained orientation.
    fn oriented_edges(&self) -> PyResult<Vec<(Vertex, Vertex)>> {
        Ok(self.engine()?.graph().oriented_edges())
    }

    fn max_out_degree(&self) -> PyResult<usize> {
        Ok(self.engine()?.graph().max_out_degree())
    }

    fn counters(&self) -> PyResult<BTreeMap<&'static str, u64>> {
        let e = self.engine()?;
        let c = e.counters();
        Ok(BTreeMap::from([
            ("updates", c.updates),
            ("mis_additions", c.mis_additions),
            ("mis_removals", c.mis_removals),
            ("sum_s_plus", c.sum_s_plus),
            ("sum_s_minus", c.sum_s_minus),
            ("flips", c.flips),
            ("elem_ops", c.elem_ops),
            ("lemma_violations", c.lemma_violations),
        ]))
    }

    /// Full audit; returns (invariant, witness, description) per violation.
    fn audit(&self) -> PyResult<Vec<(String, String, String)>> {
        let report = check_invariants(&*self.engine()?);
        Ok(report
            .violations
            .into_iter()
            .map(|v| (v.invariant.to_string(), v.witness.to_string(), v.description))
            .collect())
    }

    fn __repr__(&self) -> PyResult<String> {
        let e = self.engine()?;
        Ok(format!(
            "Engine(n={}, alpha={}, edges={}, mis_size={})",
            e.n(),
            e.params().alpha,
            e.graph().edge_count(),
            e.mis_size()
        ))
    }
}

/// True iff `mis` is a maximal independent set of the graph on `0..n`.
#[pyfunction]
fn check_mis(n: usize, edges: Vec<(Vertex, Vertex)>, mis: Vec<Vertex>) -> PyResult<bool> {
    if let Some(&(u, v)) = edges.iter().find(|&&(u, v)| u >= n || v >= n) {
        return Err(value_err(format!("edge ({u}, {v}) out of range")));
    }
    Ok(audit_mis(n, &edges, &mis.into_iter().collect()).ok())
}

/// Forest-union stream in the text format.
#[pyfunction]
#[pyo3(signature = (n, k, ops, churn=0.3, seed=0))]
fn forest_stream(n: usize, k: usize, ops: usize, churn: f64, seed: u64) -> PyResult<String> {
    if k == 0 || !(0.0..=1.0).contains(&churn) {
        return Err(value_err("need k >= 1 and churn in [0, 1]"));
    }
    Ok(gen_forest_union(n, k, ops, churn, seed).serialize())
}

/// Preferential-attachment stream in the text format.
#[pyfunction]
#[pyo3(signature = (n, m, seed=0))]
fn preferential_stream(n: usize, m: usize, seed: u64) -> PyResult<String> {
    if m == 0 {
        return Err(value_err("need m >= 1"));
    }
    Ok(gen_preferential(n, m, seed).serialize())
}

/// Parses a stream; returns (n, alpha, [("+" | "-", u, v), ...]).
#[pyfunction]
fn parse_stream(text: &str) -> PyResult<(usize, usize, Vec<(&'static str, Vertex, Vertex)>)> {
    let s = UpdateStream::parse(text).map_err(value_err)?;
    let ops = s
        .ops
        .iter()
        .map(|op| match *op {
            Update::Insert(u, v) => ("+", u, v),
            Update::Delete(u, v) => ("-", u, v),
        })
        .collect();
    Ok((s.n, s.alpha_hint, ops))
}

/// Replays a stream and returns its counters plus the final MIS.
#[pyfunction]
#[pyo3(signature = (text, audit_every=0, strict=false))]
fn replay(
    text: &str,
    audit_every: usize,
    strict: bool,
) -> PyResult<(BTreeMap<&'static str, u64>, Vec<Vertex>)> {
    let s = UpdateStream::parse(text).map_err(value_err)?;
    s.validate().map_err(value_err)?;
    let opts = ReplayOptions {
        audit_every,
        strict,
        ..ReplayOptions::default()
    };
    let out = replay_stream(&s, None, &opts).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let st = out.stats;
    let stats = BTreeMap::from([
        ("updates", st.updates),
        ("mis_additions", st.mis_additions),
        ("mis_removals", st.mis_removals),
        ("sum_s_plus", st.sum_s_plus),
        ("sum_s_minus", st.sum_s_minus),
        ("flips", st.flips),
        ("elem_ops", st.elem_ops),
        ("lemma_violations", st.lemma_violations),
    ]);
    Ok((stats, out.engine.mis().into_iter().collect()))
}

#[pymodule(name = "dynmis")]
pub fn dynmis_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEngine>()?;
    m.add_function(wrap_pyfunction!(check_mis, m)?)?;
    m.add_function(wrap_pyfunction!(forest_stream, m)?)?;
    m.add_function(wrap_pyfunction!(preferential_stream, m)?)?;
    m.add_function(wrap_pyfunction!(parse_stream, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    Ok(())
}
