//! Job parameters, execution and the in-memory job table.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Instant;

use growclusters::io::{Loaded, ResultArchive};
use growclusters::selection::{select_and_fit, DEFAULT_FOLDS};
use growclusters::workspace::Workspace;
use growclusters::{dp_means, hdp_means, DpConfig, HierConfig, LambdaGrid, SelectionMethod};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobKind {
    Cluster,
    Hcluster,
    Select,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub job_id: String,
    pub kind: JobKind,
    pub state: JobState,
    pub progress: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct JobRequest {
    pub kind: JobKind,
    pub dataset_id: String,
    #[serde(default)]
    pub params: serde_json::Value,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClusterParams {
    lambda: f64,
    max_clusters: Option<usize>,
    max_iter: Option<usize>,
    tol: Option<f64>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    standardize: bool,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum GridSpec {
    Range(String),
    Values(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectParams {
    method: String,
    grid: GridSpec,
    folds: Option<usize>,
    max_clusters: Option<usize>,
    max_iter: Option<usize>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    standardize: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HclusterParams {
    lambda_global: f64,
    lambda_local: f64,
    max_global_clusters: Option<usize>,
    max_iter: Option<usize>,
    tol: Option<f64>,
    #[serde(default)]
    seed: u64,
}

/// A validated unit of work.
#[derive(Debug, Clone)]
pub enum Work {
    Cluster(DpConfig),
    Select {
        method: SelectionMethod,
        grid: LambdaGrid,
        folds: usize,
        config: DpConfig,
    },
    Hcluster(HierConfig),
}

fn parse<T: serde::de::DeserializeOwned>(params: serde_json::Value) -> Result<T, ApiError> {
    let params = if params.is_null() {
        serde_json::Value::Object(Default::default())
    } else {
        params
    };
    serde_json::from_value(params).map_err(|e| ApiError::invalid(format!("invalid params: {e}")))
}

impl Work {
    pub fn from_request(kind: JobKind, params: serde_json::Value) -> Result<Self, ApiError> {
        let defaults = DpConfig::default();
        let work = match kind {
            JobKind::Cluster => {
                let p: ClusterParams = parse(params)?;
                Work::Cluster(DpConfig {
                    lambda: p.lambda,
                    max_clusters: p.max_clusters.unwrap_or(defaults.max_clusters),
                    max_iter: p.max_iter.unwrap_or(defaults.max_iter),
                    tol: p.tol.unwrap_or(defaults.tol),
                    seed: p.seed,
                    standardize: p.standardize,
                })
            }
            JobKind::Select => {
                let p: SelectParams = parse(params)?;
                let grid = match p.grid {
                    GridSpec::Range(s) => s.parse()?,
                    GridSpec::Values(v) => LambdaGrid::new(v)?,
                };
                let folds = p.folds.unwrap_or(DEFAULT_FOLDS);
                if folds < 2 {
                    return Err(ApiError::invalid("folds must be at least 2"));
                }
                Work::Select {
                    method: p.method.parse()?,
                    grid: grid.clone(),
                    folds,
                    config: DpConfig {
                        lambda: grid.values()[0],
                        max_clusters: p.max_clusters.unwrap_or(defaults.max_clusters),
                        max_iter: p.max_iter.unwrap_or(defaults.max_iter),
                        seed: p.seed,
                        standardize: p.standardize,
                        ..defaults
                    },
                }
            }
            JobKind::Hcluster => {
                let p: HclusterParams = parse(params)?;
                let hd = HierConfig::default();
                Work::Hcluster(HierConfig {
                    lambda_global: p.lambda_global,
                    lambda_local: p.lambda_local,
                    max_global_clusters: p.max_global_clusters.unwrap_or(hd.max_global_clusters),
                    max_iter: p.max_iter.unwrap_or(hd.max_iter),
                    tol: p.tol.unwrap_or(hd.tol),
                    seed: p.seed,
                })
            }
        };
        match &work {
            Work::Cluster(c) | Work::Select { config: c, .. } => c.validate()?,
            Work::Hcluster(config) => config.validate()?,
        }
        Ok(work)
    }

    /// Loads the dataset and runs the fit. Blocking.
    pub fn run(
        &self,
        workspace: &Workspace,
        dataset_id: &str,
    ) -> growclusters::Result<ResultArchive> {
        let started = Instant::now();
        let mut archive = match self {
            Work::Cluster(config) => {
                let data = workspace.load(dataset_id, None)?.into_single();
                ResultArchive::single(config.clone(), dp_means(&data, config)?)
            }
            Work::Select {
                method,
                grid,
                folds,
                config,
            } => {
                let data = workspace.load(dataset_id, None)?.into_single();
                let (report, fit) = select_and_fit(&data, *method, grid, config, *folds)?;
                ResultArchive::selected(config.clone(), report, fit)
            }
            Work::Hcluster(config) => match workspace.load(dataset_id, None)? {
                Loaded::Grouped(data) => {
                    ResultArchive::hierarchical(config.clone(), hdp_means(&data, config)?)
                }
                Loaded::Single(_) => {
                    return Err(growclusters::Error::Data(format!(
                        "dataset '{dataset_id}' has no '{}' column",
                        growclusters::io::DEFAULT_GROUP_COLUMN
                    )))
                }
            },
        };
        archive.dataset = Some(dataset_id.to_string());
        archive.timings.fit_seconds = started.elapsed().as_secs_f64();
        Ok(archive)
    }
}

/// Job table. Transitions happen under one lock; terminal states never change.
#[derive(Debug, Default)]
pub struct JobTable {
    jobs: Mutex<HashMap<String, Job>>,
}

impl JobTable {
    pub fn insert(&self, kind: JobKind) -> String {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let job = Job {
            job_id: id.clone(),
            kind,
            state: JobState::Queued,
            progress: 0.0,
            result_id: None,
            error: None,
        };
        self.jobs
            .lock()
            .expect("job table poisoned")
            .insert(id.clone(), job);
        id
    }

    pub fn get(&self, id: &str) -> Option<Job> {
        self.jobs
            .lock()
            .expect("job table poisoned")
            .get(id)
            .cloned()
    }

    fn update(&self, id: &str, f: impl FnOnce(&mut Job)) {
        let mut jobs = self.jobs.lock().expect("job table poisoned");
        if let Some(job) = jobs.get_mut(id) {
            if !job.state.is_terminal() {
                let before = job.progress;
                f(job);
                job.progress = job.progress.max(before);
            }
        }
    }

    pub fn start(&self, id: &str) {
        self.update(id, |j| {
            j.state = JobState::Running;
            j.progress = 0.1;
        });
    }

    pub fn finish(&self, id: &str, result_id: String) {
        self.update(id, |j| {
            j.state = JobState::Done;
            j.progress = 1.0;
            j.result_id = Some(result_id);
        });
    }

    pub fn fail(&self, id: &str, error: String) {
        self.update(id, |j| {
            j.state = JobState::Failed;
            j.progress = 1.0;
            j.error = Some(error);
        });
    }
}
