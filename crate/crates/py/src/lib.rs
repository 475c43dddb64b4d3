//! Python bindings: graphs, PPR, attribute relevance, the justification
//! objective, greedy selection, baselines and the axiom grid.

use std::collections::{BTreeMap, BTreeSet};

use pyo3::create_exception;
use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use recjust::axioms::{axiom_suite, axiom_table as grade};
use recjust::baselines::{BaselineConfig, DEFAULT_EXPLOD_WEIGHT};
use recjust::query::{DEFAULT_BUDGET, DEFAULT_RHO};
use recjust::scorer::{builtin_names, scorer_with_params, AttributeScorer};
use recjust::scoring::{Candidate, NormalizationBounds, ScoreBreakdown};
use recjust::selector::greedy_on;
use recjust::{Error, Personalization, PprConfig, ProductGraph, Query};

create_exception!(recjust_py, RecjustError, PyValueError, "Invalid graph, query or configuration.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::UnknownNode(id) => PyKeyError::new_err(format!("unknown node id `{id}`")),
        e => RecjustError::new_err(e.to_string()),
    }
}

fn ppr_config(damping: f64, tolerance: f64, max_iterations: usize) -> PprConfig {
    PprConfig {
        damping,
        tolerance,
        max_iterations,
    }
}

/// An immutable product graph.
#[pyclass(frozen, module = "recjust_py")]
pub struct Graph {
    inner: ProductGraph,
}

#[pymethods]
impl Graph {
    /// Parses tab-separated node and edge text.
    #[staticmethod]
    fn from_text(nodes: &str, edges: &str) -> PyResult<Self> {
        recjust::load_graph(nodes, edges).map(|inner| Graph { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn from_files(nodes: std::path::PathBuf, edges: std::path::PathBuf) -> PyResult<Self> {
        recjust::load_graph_files(nodes, edges)?
            .map(|inner| Graph { inner })
            .map_err(to_py)
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn products(&self) -> Vec<String> {
        self.inner.product_ids().into_iter().map(String::from).collect()
    }

    fn attributes_of(&self, product: &str) -> PyResult<Vec<String>> {
        let attrs = self.inner.attributes_of(product).map_err(to_py)?;
        Ok(attrs.into_iter().map(String::from).collect())
    }

    /// `"product"`, `"attribute"` or `"entity"`.
    fn kind(&self, id: &str) -> PyResult<&'static str> {
        let k = self.inner.kind(self.inner.resolve(id).map_err(to_py)?);
        Ok(if k.is_product() {
            "product"
        } else if k.is_attribute() {
            "attribute"
        } else {
            "entity"
        })
    }

    fn type_label(&self, id: &str) -> PyResult<Option<String>> {
        let i = self.inner.resolve(id).map_err(to_py)?;
        Ok(self.inner.kind(i).type_label().map(String::from))
    }

    fn topics(&self, id: &str) -> PyResult<Vec<String>> {
        let i = self.inner.resolve(id).map_err(to_py)?;
        Ok(self.inner.kind(i).topics().map(|t| t.iter().cloned().collect()).unwrap_or_default())
    }

    fn neighbors(&self, id: &str) -> PyResult<Vec<(String, f64)>> {
        let i = self.inner.resolve(id).map_err(to_py)?;
        Ok(self.inner.neighbors(i).map(|(j, w)| (self.inner.id(j).to_string(), w)).collect())
    }

    /// Copy with every edge weight multiplied by `factor`.
    fn scaled(&self, factor: f64) -> PyResult<Graph> {
        self.inner.scaled(factor).map(|inner| Graph { inner }).map_err(to_py)
    }

    fn to_node_text(&self) -> String {
        self.inner.to_node_text()
    }

    fn to_edge_text(&self) -> String {
        self.inner.to_edge_text()
    }

    fn __repr__(&self) -> String {
        format!("Graph(nodes={}, edges={})", self.inner.node_count(), self.inner.edge_count())
    }
}

/// PPR scores keyed by node id. `sinks` keep their inflow but emit nothing;
/// `deleted` nodes are removed with their edges. At most one may be given.
#[pyfunction]
#[pyo3(signature = (graph, restart, *, sinks=None, deleted=None, damping=0.85, tolerance=1e-9, max_iterations=200))]
#[allow(clippy::too_many_arguments)]
fn ppr(
    py: Python<'_>,
    graph: &Graph,
    restart: BTreeMap<String, f64>,
    sinks: Option<BTreeSet<String>>,
    deleted: Option<BTreeSet<String>>,
    damping: f64,
    tolerance: f64,
    max_iterations: usize,
) -> PyResult<BTreeMap<String, f64>> {
    let g = &graph.inner;
    let cfg = ppr_config(damping, tolerance, max_iterations);
    let v = Personalization::new(restart).map_err(to_py)?;
    let s = py
        .detach(|| match (sinks, deleted) {
            (Some(_), Some(_)) => Err(Error::InvalidArgument("give sinks or deleted, not both".into())),
            (Some(s), None) => recjust::ppr_sink(g, &v, &s, &cfg),
            (None, Some(d)) => recjust::ppr_delete(g, &v, &d, &cfg),
            (None, None) => recjust::ppr(g, &v, &cfg),
        })
        .map_err(to_py)?;
    Ok(g.nodes().iter().zip(&s.scores).map(|(n, &x)| (n.id.clone(), x)).collect())
}

#[pyclass(frozen, get_all, module = "recjust_py")]
pub struct Relevance {
    /// Relevance of every attribute of the recommended product.
    per_attribute: BTreeMap<String, f64>,
    /// Normalized proximity of each feedback product to the recommendation.
    feedback_weights: BTreeMap<String, f64>,
    fallback_used: bool,
    converged: bool,
}

#[pyfunction]
#[pyo3(signature = (graph, recommended, feedback, rho=DEFAULT_RHO, *, damping=0.85, tolerance=1e-9, max_iterations=200))]
#[allow(clippy::too_many_arguments)]
fn relevance(
    py: Python<'_>,
    graph: &Graph,
    recommended: &str,
    feedback: Vec<String>,
    rho: f64,
    damping: f64,
    tolerance: f64,
    max_iterations: usize,
) -> PyResult<Relevance> {
    let cfg = ppr_config(damping, tolerance, max_iterations);
    let r = py
        .detach(|| recjust::relevance_scores(&graph.inner, recommended, &feedback, rho, &cfg))
        .map_err(to_py)?;
    Ok(Relevance {
        per_attribute: r.per_attribute,
        feedback_weights: r.feedback_weights,
        fallback_used: r.fallback_used,
        converged: r.converged,
    })
}

/// Per-attribute scores from `jrecs` or any baseline, by method name.
#[pyfunction]
#[pyo3(signature = (graph, method, recommended, feedback, *, rho=DEFAULT_RHO, alpha=DEFAULT_EXPLOD_WEIGHT, beta=DEFAULT_EXPLOD_WEIGHT, damping=0.85, tolerance=1e-9, max_iterations=200))]
#[allow(clippy::too_many_arguments)]
fn attribute_scores(
    py: Python<'_>,
    graph: &Graph,
    method: &str,
    recommended: &str,
    feedback: Vec<String>,
    rho: f64,
    alpha: f64,
    beta: f64,
    damping: f64,
    tolerance: f64,
    max_iterations: usize,
) -> PyResult<BTreeMap<String, f64>> {
    let scorer = resolve(method, rho, alpha, beta)?;
    let cfg = BaselineConfig::from(ppr_config(damping, tolerance, max_iterations));
    py.detach(|| scorer.score(&graph.inner, recommended, &feedback, &cfg)).map_err(to_py)
}

fn resolve(method: &str, rho: f64, alpha: f64, beta: f64) -> PyResult<Box<dyn AttributeScorer>> {
    scorer_with_params(method, rho, alpha, beta).ok_or_else(|| {
        RecjustError::new_err(format!("unknown method `{method}`; expected one of {}", builtin_names().join(", ")))
    })
}

/// Names accepted by `attribute_scores` and `axiom_table`.
#[pyfunction]
fn methods() -> Vec<&'static str> {
    builtin_names()
}

fn breakdown_dict(b: &ScoreBreakdown) -> BTreeMap<&'static str, f64> {
    BTreeMap::from([
        ("relevance_raw", b.relevance_raw),
        ("relevance_norm", b.relevance_norm),
        ("type_coverage", b.type_coverage as f64),
        ("type_norm", b.type_norm),
        ("topic_coverage", b.topic_coverage as f64),
        ("topic_norm", b.topic_norm),
        ("total", b.total),
    ])
}

fn bounds_dict(b: &NormalizationBounds) -> BTreeMap<&'static str, f64> {
    BTreeMap::from([
        ("budget", b.budget as f64),
        ("r_min", b.r_min),
        ("r_max", b.r_max),
        ("type_min", b.type_min as f64),
        ("type_max", b.type_max as f64),
        ("topic_min", b.topic_min as f64),
        ("topic_max", b.topic_max as f64),
    ])
}

#[pyclass(frozen, get_all, module = "recjust_py")]
pub struct Selected {
    id: String,
    type_label: String,
    topics: Vec<String>,
    relevance: f64,
    marginal_gain: f64,
    /// Objective after adding this attribute.
    score_after: f64,
}

#[pymethods]
impl Selected {
    fn __repr__(&self) -> String {
        format!("Selected({:?}, gain={:.6})", self.id, self.marginal_gain)
    }
}

#[pyclass(frozen, get_all, module = "recjust_py")]
pub struct Justification {
    selected: Vec<Py<Selected>>,
    /// Term breakdown of the final set; empty if nothing was selected.
    breakdown: BTreeMap<&'static str, f64>,
    bounds: BTreeMap<&'static str, f64>,
    relevance: BTreeMap<String, f64>,
    converged: bool,
}

#[pymethods]
impl Justification {
    fn ids(&self) -> Vec<String> {
        self.selected.iter().map(|s| s.get().id.clone()).collect()
    }

    fn __len__(&self) -> usize {
        self.selected.len()
    }
}

/// Greedy budgeted justification set for `recommended` given `feedback`.
#[pyfunction]
#[pyo3(signature = (graph, recommended, feedback, *, budget=DEFAULT_BUDGET, rho=DEFAULT_RHO, lambda1=0.0, lambda2=0.0, damping=0.85, tolerance=1e-9, max_iterations=200))]
#[allow(clippy::too_many_arguments)]
fn justify(
    py: Python<'_>,
    graph: &Graph,
    recommended: &str,
    feedback: Vec<String>,
    budget: usize,
    rho: f64,
    lambda1: f64,
    lambda2: f64,
    damping: f64,
    tolerance: f64,
    max_iterations: usize,
) -> PyResult<Justification> {
    let q = Query::new(recommended, feedback)
        .with_budget(budget)
        .with_rho(rho)
        .with_lambdas(lambda1, lambda2);
    let cfg = ppr_config(damping, tolerance, max_iterations);
    let set = py.detach(|| recjust::greedy_select(&graph.inner, &q, &cfg)).map_err(to_py)?;
    let selected = set
        .selected
        .iter()
        .map(|s| {
            Py::new(
                py,
                Selected {
                    id: s.id.clone(),
                    type_label: s.type_label.clone(),
                    topics: s.topics.clone(),
                    relevance: s.relevance,
                    marginal_gain: s.marginal_gain,
                    score_after: s.breakdown_after.total,
                },
            )
        })
        .collect::<PyResult<_>>()?;
    Ok(Justification {
        selected,
        breakdown: set.final_breakdown().map(breakdown_dict).unwrap_or_default(),
        bounds: bounds_dict(&set.bounds),
        relevance: set.relevance.per_attribute,
        converged: set.converged,
    })
}

/// The normalized type/topic/relevance objective over an explicit pool.
#[pyclass(frozen, module = "recjust_py")]
pub struct Objective {
    inner: recjust::Objective,
}

#[pymethods]
impl Objective {
    /// `candidates` holds `(id, relevance, type_label, topics)` tuples.
    #[new]
    #[pyo3(signature = (candidates, budget, lambda1=0.0, lambda2=0.0))]
    fn new(candidates: Vec<(String, f64, String, Vec<String>)>, budget: usize, lambda1: f64, lambda2: f64) -> PyResult<Self> {
        let pool = candidates
            .into_iter()
            .map(|(id, relevance, type_label, topics)| Candidate {
                id,
                relevance,
                type_label,
                topics: topics.into_iter().collect(),
            })
            .collect();
        recjust::Objective::new(pool, budget, lambda1, lambda2)
            .map(|inner| Objective { inner })
            .map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn bounds(&self) -> BTreeMap<&'static str, f64> {
        bounds_dict(self.inner.bounds())
    }

    /// Objective of a set of candidate indices; the empty set scores the
    /// baseline the gains are measured from.
    fn score(&self, indices: Vec<usize>) -> PyResult<f64> {
        if indices.is_empty() {
            return Ok(self.inner.empty_value());
        }
        self.inner.score(&indices).map(|b| b.total).map_err(to_py)
    }

    fn breakdown(&self, indices: Vec<usize>) -> PyResult<BTreeMap<&'static str, f64>> {
        self.inner.score(&indices).map(|b| breakdown_dict(&b)).map_err(to_py)
    }

    fn marginal_gain(&self, base: Vec<usize>, candidate: usize) -> PyResult<f64> {
        self.inner.marginal_gain(&base, candidate).map_err(to_py)
    }

    /// Greedy picks as `(index, gain)` pairs.
    #[pyo3(signature = (budget=None))]
    fn greedy(&self, budget: Option<usize>) -> Vec<(usize, f64)> {
        let b = budget.unwrap_or(self.inner.bounds().budget);
        greedy_on(&self.inner, b).into_iter().map(|(i, gain, _)| (i, gain)).collect()
    }
}

/// Grades scorers against the built-in axiom fixtures. Returns one
/// `(method, {axiom_slug: passed})` pair per method, in the given order.
#[pyfunction]
#[pyo3(signature = (methods=None, *, rho=DEFAULT_RHO))]
fn axiom_table(py: Python<'_>, methods: Option<Vec<String>>, rho: f64) -> PyResult<Vec<(String, BTreeMap<&'static str, bool>)>> {
    let names = methods.unwrap_or_else(|| builtin_names().into_iter().map(String::from).collect());
    let scorers = names
        .iter()
        .map(|n| resolve(n, rho, DEFAULT_EXPLOD_WEIGHT, DEFAULT_EXPLOD_WEIGHT))
        .collect::<PyResult<Vec<_>>>()?;
    let table = py.detach(|| {
        let refs: Vec<&dyn AttributeScorer> = scorers.iter().map(|s| s.as_ref()).collect();
        grade(&refs, &axiom_suite(), &BaselineConfig::default())
    });
    Ok(table
        .rows
        .into_iter()
        .map(|row| {
            let cells = row.cells.iter().map(|c| (c.axiom.slug(), c.passed)).collect();
            (row.scorer, cells)
        })
        .collect())
}

#[pyfunction]
fn mrr(ranks: Vec<f64>) -> PyResult<f64> {
    recjust::eval::mrr(&ranks).map_err(to_py)
}

#[pymodule]
pub fn recjust_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RecjustError", m.py().get_type::<RecjustError>())?;
    m.add_class::<Graph>()?;
    m.add_class::<Relevance>()?;
    m.add_class::<Selected>()?;
    m.add_class::<Justification>()?;
    m.add_class::<Objective>()?;
    m.add_function(wrap_pyfunction!(ppr, m)?)?;
    m.add_function(wrap_pyfunction!(relevance, m)?)?;
    m.add_function(wrap_pyfunction!(attribute_scores, m)?)?;
    m.add_function(wrap_pyfunction!(methods, m)?)?;
    m.add_function(wrap_pyfunction!(justify, m)?)?;
    m.add_function(wrap_pyfunction!(axiom_table, m)?)?;
    m.add_function(wrap_pyfunction!(mrr, m)?)?;
    Ok(())
}
