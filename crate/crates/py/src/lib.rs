//! Python bindings. Matrices cross the boundary as lists of rows and reports
//! as plain dicts, so the module needs nothing beyond the standard library.

use std::path::PathBuf;

use concept_gae::{backbone, dynamics, eval, graph, io, optim, synth, Error};
use ndarray::Array2;
use pyo3::create_exception;
use pyo3::exceptions::{PyArithmeticError, PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::de::DeserializeOwned;
use serde::Serialize;

create_exception!(concept_gae, InfeasibleError, PyRuntimeError, "No model satisfies the concept cap.");

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Io { .. } => PyIOError::new_err(msg),
        Error::Infeasible { .. } => InfeasibleError::new_err(msg),
        Error::Divergence { .. } | Error::NonFinite(_) | Error::ProxNonConvergence { .. } | Error::StaleCache => {
            PyArithmeticError::new_err(msg)
        }
        _ => PyValueError::new_err(msg),
    }
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_dict<T: DeserializeOwned + Default>(py: Python<'_>, value: Option<&Bound<'_, PyDict>>) -> PyResult<T> {
    let Some(value) = value else {
        return Ok(T::default());
    };
    let text: String = py.import("json")?.call_method1("dumps", (value,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != width) {
        return Err(PyValueError::new_err("rows have different lengths"));
    }
    let n = rows.len();
    Array2::from_shape_vec((n, width), rows.into_iter().flatten().collect())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Undirected simple graph with named nodes.
#[pyclass(name = "Graph", frozen)]
struct PyGraph(graph::Graph);

#[pymethods]
impl PyGraph {
    #[new]
    fn new(nodes: Vec<String>, edges: Vec<(String, String)>) -> PyResult<Self> {
        graph::build_graph(&nodes, &edges).map(PyGraph).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        io::read_graph(&path).map(PyGraph).map_err(to_py)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::write_graph(&path, &self.0).map_err(to_py)
    }

    #[getter]
    fn nodes(&self) -> Vec<String> {
        self.0.node_names().to_vec()
    }

    /// Edges as (name, name) pairs.
    #[getter]
    fn edges(&self) -> Vec<(String, String)> {
        let names = self.0.node_names();
        self.0.edges().iter().map(|&(i, j)| (names[i].clone(), names[j].clone())).collect()
    }

    fn __len__(&self) -> usize {
        self.0.n_nodes()
    }

    fn normalized_adjacency(&self) -> Vec<Vec<f64>> {
        rows(&graph::normalized_adjacency(&self.0).to_dense())
    }

    fn __repr__(&self) -> String {
        format!("Graph(nodes={}, edges={})", self.0.n_nodes(), self.0.n_edges())
    }
}

/// Train/dev/test edge partition with frozen evaluation negatives.
#[pyclass(name = "EdgeSplit", frozen)]
struct PySplit(graph::EdgeSplit);

#[pymethods]
impl PySplit {
    #[staticmethod]
    fn load(path: PathBuf, graph: &PyGraph) -> PyResult<Self> {
        io::read_split(&path, &graph.0).map(PySplit).map_err(to_py)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::write_split(&path, &self.0).map_err(to_py)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.0)
    }
}

/// Per-node concept counts and framing projections.
#[pyclass(name = "FeatureBundle", frozen)]
struct PyFeatures(concept_gae::features::FeatureBundle);

#[pymethods]
impl PyFeatures {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        io::read_features(&path).map(PyFeatures).map_err(to_py)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::write_features(&path, &self.0).map_err(to_py)
    }

    #[getter]
    fn nodes(&self) -> Vec<String> {
        self.0.node_names().to_vec()
    }

    #[getter]
    fn concepts(&self) -> Vec<String> {
        self.0.concepts().to_vec()
    }
}

/// A trained encoder together with the data it was trained on.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    model: optim::TrainedModel,
    data: optim::TrainingData,
    concepts: Vec<String>,
}

#[pymethods]
impl PyModel {
    #[getter]
    fn epoch(&self) -> usize {
        self.model.epoch
    }

    /// Names of the concepts whose weight rows survived pruning.
    #[getter]
    fn active_concepts(&self) -> Vec<String> {
        self.model.active_concepts.iter().map(|&c| self.concepts[c].clone()).collect()
    }

    fn history<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.model.history)
    }

    fn embeddings(&self) -> PyResult<Vec<Vec<f64>>> {
        self.data.embed(&self.model.params, &self.model.config).map(|z| rows(&z)).map_err(to_py)
    }

    /// AUC and AP on the "dev" or "test" pairs.
    fn evaluate<'py>(&self, py: Python<'py>, part: &str) -> PyResult<Bound<'py, PyAny>> {
        let part = match part {
            "dev" => graph::SplitPart::Dev,
            "test" => graph::SplitPart::Test,
            other => return Err(PyValueError::new_err(format!("unknown part `{other}`"))),
        };
        let m = self.data.evaluate(&self.model.params, &self.model.config, part).map_err(to_py)?;
        to_dict(py, &m)
    }

    fn analyze<'py>(&self, py: Python<'py>, features: &PyFeatures) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &optim::analyze(&self.model, &features.0))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let z = self.data.embed(&self.model.params, &self.model.config).map_err(to_py)?;
        let saved = io::SavedModel::new(&self.model, self.data.graph.node_names().to_vec(), self.concepts.clone(), z);
        io::write_checkpoint(&path, &saved).map_err(to_py)
    }
}

fn prepare(
    py: Python<'_>,
    graph: &PyGraph,
    features: &PyFeatures,
    split: &PySplit,
    config: Option<&Bound<'_, PyDict>>,
) -> PyResult<(optim::TrainConfig, optim::TrainingData)> {
    let config: optim::TrainConfig = from_dict(py, config)?;
    let data =
        optim::TrainingData::new(&graph.0, &features.0, &split.0, config.standardize).map_err(to_py)?;
    Ok((config, data))
}

/// Splits edges into train/dev/test with the given ratios.
#[pyfunction]
#[pyo3(signature = (graph, ratios = (0.6, 0.2, 0.2), seed = 0))]
fn split_edges(graph: &PyGraph, ratios: (f64, f64, f64), seed: u64) -> PyResult<PySplit> {
    graph::split_edges(&graph.0, [ratios.0, ratios.1, ratios.2], seed).map(PySplit).map_err(to_py)
}

/// Planted benchmark; `config` overrides generator defaults.
#[pyfunction]
#[pyo3(signature = (config = None))]
fn generate_planted<'py>(
    py: Python<'py>,
    config: Option<&Bound<'py, PyDict>>,
) -> PyResult<(PyGraph, PyFeatures, Bound<'py, PyAny>)> {
    let cfg: synth::PlantedConfig = from_dict(py, config)?;
    let (g, features, truth) = synth::generate_planted(&cfg).map_err(to_py)?;
    Ok((PyGraph(g), PyFeatures(features), to_dict(py, &truth)?))
}

/// Trains one configuration; `config` keys follow the JSON config file.
#[pyfunction]
#[pyo3(signature = (graph, features, split, config = None))]
fn train(
    py: Python<'_>,
    graph: &PyGraph,
    features: &PyFeatures,
    split: &PySplit,
    config: Option<&Bound<'_, PyDict>>,
) -> PyResult<PyModel> {
    let (config, data) = prepare(py, graph, features, split, config)?;
    let (model, _) = py
        .detach(|| optim::train_with_policy(&data, &config, None))
        .map_err(to_py)?;
    Ok(PyModel {
        model,
        data,
        concepts: features.0.concepts().to_vec(),
    })
}

/// Grid search under a cap of `theta` surviving concepts. Returns the best
/// model and the per-cell leaderboard.
#[pyfunction]
#[pyo3(signature = (graph, features, split, config = None, grid = None, theta = Some(optim::DEFAULT_THETA), jobs = 1))]
fn sweep<'py>(
    py: Python<'py>,
    graph: &PyGraph,
    features: &PyFeatures,
    split: &PySplit,
    config: Option<&Bound<'py, PyDict>>,
    grid: Option<&Bound<'py, PyDict>>,
    theta: Option<usize>,
    jobs: usize,
) -> PyResult<(PyModel, Bound<'py, PyAny>)> {
    let (config, data) = prepare(py, graph, features, split, config)?;
    let grid: optim::SweepGrid = from_dict(py, grid)?;
    let out = py.detach(|| optim::sweep(&data, &config, &grid, theta, jobs)).map_err(to_py)?;
    let board = to_dict(py, &out.cells)?;
    Ok((
        PyModel {
            model: out.best,
            data,
            concepts: features.0.concepts().to_vec(),
        },
        board,
    ))
}

#[pyfunction]
fn auc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    eval::auc(&scores, &labels).map_err(to_py)
}

#[pyfunction]
fn average_precision(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    eval::average_precision(&scores, &labels).map_err(to_py)
}

/// Weighted group-lasso proximal step for one weight row.
#[pyfunction]
fn prox_group_row(row: Vec<f64>, threshold: f64, weights: Vec<f64>) -> PyResult<Vec<f64>> {
    optim::prox_group_row(&row, threshold, &weights, &optim::NewtonConfig::default()).map_err(to_py)
}

/// Significance-filtered backbone of a weighted network given as
/// (node, node, weight) triples.
#[pyfunction]
fn extract_backbone<'py>(
    py: Python<'py>,
    triples: Vec<(String, String, f64)>,
    deltas: Vec<f64>,
) -> PyResult<(PyGraph, Bound<'py, PyAny>)> {
    let net = backbone::WeightedNetwork::from_triples(&triples).map_err(to_py)?;
    let (g, report) = backbone::backbone(&net, &deltas).map_err(to_py)?;
    Ok((PyGraph(g), to_dict(py, &report)?))
}

/// Louvain modularity with a degree-preserving null model.
#[pyfunction]
#[pyo3(signature = (graph, n_shuffles = 100, seed = 0))]
fn modularity_null<'py>(py: Python<'py>, graph: &PyGraph, n_shuffles: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let result = py
        .detach(|| backbone::degree_preserving_null(&graph.0, n_shuffles, seed))
        .map_err(to_py)?;
    to_dict(py, &result)
}

/// Orthogonal map `R` minimizing `‖source · R − target‖`; returns (R, residual).
#[pyfunction]
fn procrustes_align(source: Vec<Vec<f64>>, target: Vec<Vec<f64>>) -> PyResult<(Vec<Vec<f64>>, f64)> {
    let a = dynamics::procrustes_align(&matrix(source)?, &matrix(target)?).map_err(to_py)?;
    Ok((rows(&a.rotation), a.residual))
}

/// Drift ranking over ordered periods given as (label, node names, embeddings).
#[pyfunction]
fn drift_ranking<'py>(
    py: Python<'py>,
    periods: Vec<(String, Vec<String>, Vec<Vec<f64>>)>,
) -> PyResult<Bound<'py, PyAny>> {
    let periods = periods
        .into_iter()
        .map(|(label, names, z)| dynamics::Period::new(label, names, matrix(z)?).map_err(to_py))
        .collect::<PyResult<Vec<_>>>()?;
    let series = dynamics::EmbeddingSeries::new(periods).map_err(to_py)?;
    to_dict(py, &series.ranking())
}

#[pymodule]
#[pyo3(name = "concept_gae")]
fn concept_gae_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PySplit>()?;
    m.add_class::<PyFeatures>()?;
    m.add_class::<PyModel>()?;
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    m.add_function(wrap_pyfunction!(split_edges, m)?)?;
    m.add_function(wrap_pyfunction!(generate_planted, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(average_precision, m)?)?;
    m.add_function(wrap_pyfunction!(prox_group_row, m)?)?;
    m.add_function(wrap_pyfunction!(extract_backbone, m)?)?;
    m.add_function(wrap_pyfunction!(modularity_null, m)?)?;
    m.add_function(wrap_pyfunction!(procrustes_align, m)?)?;
    m.add_function(wrap_pyfunction!(drift_ranking, m)?)?;
    Ok(())
}
