//! Python bindings. Data crosses the boundary as lists of rows.

use growclusters::gendata::{self, CorpusConfig, GenConfig};
use growclusters::isomap::{self as iso, Disconnected};
use growclusters::selection::{adjusted_rand_index as ari, select_and_fit, DEFAULT_FOLDS};
use growclusters::text::{self, Corpus, Encoding};
use growclusters::{
    calinski_harabasz as ch, silhouette_score, Dataset, DpConfig, Error, GroupedDataset,
    HierConfig, LambdaGrid, Score, SelectionMethod,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Usage(_) | Error::Data(_) | Error::Schema(_) | Error::DisconnectedGraph { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

type Rows = Vec<Vec<f64>>;
type Documents = Vec<(String, String)>;
type Counts = Vec<Vec<u32>>;

fn dataset(rows: Vec<Vec<f64>>) -> PyResult<Dataset> {
    Dataset::from_rows(rows).map_err(py_err)
}

fn score(s: Score) -> Option<f64> {
    match s {
        Score::Value(v) => Some(v),
        Score::Infinite => Some(f64::INFINITY),
        Score::Undefined => None,
    }
}

/// A single-source partition.
#[pyclass(frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
pub struct Partition {
    labels: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    k: usize,
    objective: f64,
    iterations: usize,
    sizes: Vec<usize>,
    converged: bool,
}

impl From<growclusters::Partition> for Partition {
    fn from(p: growclusters::Partition) -> Self {
        Self {
            labels: p.labels,
            centroids: p.centroids,
            k: p.k,
            objective: p.objective,
            iterations: p.iterations,
            sizes: p.sizes,
            converged: p.converged,
        }
    }
}

#[pymethods]
impl Partition {
    /// Nearest-centroid labels for new rows.
    fn predict(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<usize>> {
        let p = growclusters::Partition {
            labels: self.labels.clone(),
            centroids: self.centroids.clone(),
            k: self.k,
            objective: self.objective,
            iterations: self.iterations,
            sizes: self.sizes.clone(),
            converged: self.converged,
        };
        growclusters::predict(&p, &dataset(rows)?).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Partition(k={}, objective={})", self.k, self.objective)
    }
}

/// A two-level partition of grouped data.
#[pyclass(frozen, get_all)]
pub struct HierPartition {
    labels_global: Vec<usize>,
    labels_local: Vec<usize>,
    global_centroids: Vec<Vec<f64>>,
    k_global: usize,
    n_local: usize,
    objective: f64,
    iterations: usize,
    converged: bool,
}

#[pymethods]
impl HierPartition {
    fn __repr__(&self) -> String {
        format!(
            "HierPartition(k_global={}, n_local={}, objective={})",
            self.k_global, self.n_local, self.objective
        )
    }
}

/// Scores of a lambda grid search.
#[pyclass(frozen, get_all)]
pub struct SelectionReport {
    method: String,
    grid: Vec<f64>,
    scores: Vec<Option<f64>>,
    k_per_lambda: Vec<usize>,
    chosen_lambda: f64,
    chosen_k: usize,
    partition: Partition,
}

#[pymethods]
impl SelectionReport {
    fn __repr__(&self) -> String {
        format!(
            "SelectionReport(method={}, chosen_lambda={}, chosen_k={})",
            self.method, self.chosen_lambda, self.chosen_k
        )
    }
}

#[pyfunction]
#[pyo3(signature = (rows, lam, max_clusters=100, max_iter=100, tol=1e-8, seed=0, standardize=false))]
fn dp_means(
    rows: Vec<Vec<f64>>,
    lam: f64,
    max_clusters: usize,
    max_iter: usize,
    tol: f64,
    seed: u64,
    standardize: bool,
) -> PyResult<Partition> {
    let config = DpConfig {
        lambda: lam,
        max_clusters,
        max_iter,
        tol,
        seed,
        standardize,
    };
    let data = dataset(rows)?;
    growclusters::dp_means(&data, &config)
        .map(Into::into)
        .map_err(py_err)
}

/// `WSS + lam * K` of the partition given by `labels`.
#[pyfunction]
fn objective(rows: Vec<Vec<f64>>, labels: Vec<usize>, lam: f64) -> PyResult<f64> {
    let data = dataset(rows)?;
    let p = growclusters::Partition::from_labels(&data, &labels, lam).map_err(py_err)?;
    Ok(p.objective)
}

#[pyfunction]
#[pyo3(signature = (rows, groups, lambda_local, lambda_global, max_global_clusters=100, max_iter=100, seed=0))]
fn hdp_means(
    rows: Vec<Vec<f64>>,
    groups: Vec<String>,
    lambda_local: f64,
    lambda_global: f64,
    max_global_clusters: usize,
    max_iter: usize,
    seed: u64,
) -> PyResult<HierPartition> {
    let data = GroupedDataset::new(dataset(rows)?, &groups).map_err(py_err)?;
    let config = HierConfig {
        max_global_clusters,
        max_iter,
        seed,
        ..HierConfig::with_penalties(lambda_local, lambda_global)
    };
    let hp = growclusters::hdp_means(&data, &config).map_err(py_err)?;
    Ok(HierPartition {
        k_global: hp.k_global(),
        n_local: hp.n_local(),
        labels_global: hp.labels_global,
        labels_local: hp.labels_local,
        global_centroids: hp.global_centroids,
        objective: hp.objective,
        iterations: hp.iterations,
        converged: hp.converged,
    })
}

/// Mean silhouette width; `None` when undefined (a single cluster).
#[pyfunction]
fn silhouette(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> PyResult<Option<f64>> {
    silhouette_score(&dataset(rows)?, &labels)
        .map(score)
        .map_err(py_err)
}

/// Calinski-Harabasz index; `None` when undefined, `inf` for zero within-cluster scatter.
#[pyfunction]
fn calinski_harabasz(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> PyResult<Option<f64>> {
    ch(&dataset(rows)?, &labels).map(score).map_err(py_err)
}

#[pyfunction]
fn adjusted_rand_index(a: Vec<usize>, b: Vec<usize>) -> PyResult<f64> {
    ari(&a, &b).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (rows, method, grid, folds=DEFAULT_FOLDS, max_clusters=100, seed=0))]
fn select_lambda(
    rows: Vec<Vec<f64>>,
    method: &str,
    grid: Vec<f64>,
    folds: usize,
    max_clusters: usize,
    seed: u64,
) -> PyResult<SelectionReport> {
    let method: SelectionMethod = method.parse().map_err(py_err)?;
    let grid = LambdaGrid::new(grid).map_err(py_err)?;
    let config = DpConfig {
        lambda: grid.values()[0],
        max_clusters,
        seed,
        ..DpConfig::default()
    };
    let (report, fit) =
        select_and_fit(&dataset(rows)?, method, &grid, &config, folds).map_err(py_err)?;
    Ok(SelectionReport {
        method: report.method.to_string(),
        grid: report.grid.values().to_vec(),
        scores: report.scores.into_iter().map(score).collect(),
        k_per_lambda: report.k_per_lambda,
        chosen_lambda: report.chosen_lambda,
        chosen_k: report.chosen_k,
        partition: fit.into(),
    })
}

/// Returns `(coords, eigenvalues, kept_rows)`.
#[pyfunction]
#[pyo3(signature = (rows, neighbors=iso::DEFAULT_NEIGHBORS, dim=2, largest_component=false))]
fn isomap(
    rows: Vec<Vec<f64>>,
    neighbors: usize,
    dim: usize,
    largest_component: bool,
) -> PyResult<(Rows, Vec<f64>, Vec<String>)> {
    let policy = if largest_component {
        Disconnected::LargestComponent
    } else {
        Disconnected::Error
    };
    let emb = iso::isomap(&dataset(rows)?, neighbors, dim, policy).map_err(py_err)?;
    Ok((emb.coords, emb.eigenvalues, emb.row_ids))
}

/// Document-term counts for `(id, text)` pairs. Returns `(doc_ids, terms, counts)`.
#[pyfunction]
#[pyo3(signature = (documents, mode="raw", stopwords=Vec::new()))]
fn encode(
    documents: Documents,
    mode: &str,
    stopwords: Vec<String>,
) -> PyResult<(Vec<String>, Vec<String>, Counts)> {
    let encoding: Encoding = mode.parse().map_err(py_err)?;
    let corpus = Corpus::new(documents, stopwords.into_iter().collect()).map_err(py_err)?;
    let vocab = text::build_vocabulary(&corpus).map_err(py_err)?;
    let m = text::encode(&corpus, &vocab, encoding);
    Ok((m.doc_ids, m.terms, m.counts))
}

/// Gaussian blobs with planted labels. Returns `(rows, labels)`.
#[pyfunction]
#[pyo3(signature = (k=3, n=50, dim=2, sep=8.0, sigma=1.0, seed=42))]
fn gen_blobs(
    k: usize,
    n: usize,
    dim: usize,
    sep: f64,
    sigma: f64,
    seed: u64,
) -> PyResult<(Vec<Vec<f64>>, Vec<usize>)> {
    let g = gendata::generate_single(&GenConfig {
        k_true: k,
        n_per_cluster: n,
        sizes: None,
        d: dim,
        separation: sep,
        sigma,
        seed,
    })
    .map_err(py_err)?;
    Ok((g.data.to_rows(), g.labels))
}

/// Returns `(rows, intrinsic)` where `intrinsic` holds the `(t, h)` sheet coordinates.
#[pyfunction]
#[pyo3(signature = (n=500, seed=1))]
fn swiss_roll(n: usize, seed: u64) -> PyResult<(Rows, Vec<[f64; 2]>)> {
    let (data, intrinsic) = gendata::swiss_roll_lite(n, seed).map_err(py_err)?;
    Ok((data.to_rows(), intrinsic))
}

/// Topic-structured documents. Returns `(documents, topics, stopwords)`.
#[pyfunction]
#[pyo3(signature = (n_docs=60, topics=3, seed=42))]
fn gen_corpus(
    n_docs: usize,
    topics: usize,
    seed: u64,
) -> PyResult<(Documents, Vec<usize>, Vec<String>)> {
    let config = CorpusConfig {
        n_docs,
        topics,
        seed,
        ..CorpusConfig::default()
    };
    let (corpus, labels) = gendata::generate_corpus(&config).map_err(py_err)?;
    let mut stop: Vec<String> = corpus.stopwords().iter().cloned().collect();
    stop.sort();
    Ok((corpus.documents().to_vec(), labels, stop))
}

#[pymodule]
pub fn pygrowclusters(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Partition>()?;
    m.add_class::<HierPartition>()?;
    m.add_class::<SelectionReport>()?;
    m.add_function(wrap_pyfunction!(dp_means, m)?)?;
    m.add_function(wrap_pyfunction!(objective, m)?)?;
    m.add_function(wrap_pyfunction!(hdp_means, m)?)?;
    m.add_function(wrap_pyfunction!(silhouette, m)?)?;
    m.add_function(wrap_pyfunction!(calinski_harabasz, m)?)?;
    m.add_function(wrap_pyfunction!(adjusted_rand_index, m)?)?;
    m.add_function(wrap_pyfunction!(select_lambda, m)?)?;
    m.add_function(wrap_pyfunction!(isomap, m)?)?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(gen_blobs, m)?)?;
    m.add_function(wrap_pyfunction!(swiss_roll, m)?)?;
    m.add_function(wrap_pyfunction!(gen_corpus, m)?)?;
    Ok(())
}
