//! HTTP/JSON backend: dataset management, clustering jobs and plot-ready views.

pub mod error;
pub mod jobs;
pub mod views;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::{BytesRejection, JsonRejection};
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use growclusters::io::ResultArchive;
use growclusters::workspace::{ManifestEntry, Workspace};
use growclusters::Dataset;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Semaphore;
use tower_http::cors::CorsLayer;

pub use error::{ApiError, ApiResult};
pub use jobs::{Job, JobKind, JobState};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub port: u16,
    pub workspace_dir: PathBuf,
    pub max_upload_mb: usize,
    pub workers: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            port: 8080,
            workspace_dir: PathBuf::from("workspace"),
            max_upload_mb: 50,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    workspace: Arc<Workspace>,
    jobs: Arc<jobs::JobTable>,
    workers: Arc<Semaphore>,
}

impl AppState {
    pub fn new(workspace: Workspace, workers: usize) -> Self {
        Self {
            workspace: Arc::new(workspace),
            jobs: Arc::default(),
            workers: Arc::new(Semaphore::new(workers.max(1))),
        }
    }

    pub fn workspace(&self) -> &Workspace {
        &self.workspace
    }
}

async fn blocking<T, F>(state: &AppState, f: F) -> ApiResult<T>
where
    F: FnOnce(&Workspace) -> growclusters::Result<T> + Send + 'static,
    T: Send + 'static,
{
    let ws = state.workspace.clone();
    tokio::task::spawn_blocking(move || f(&ws))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(ApiError::from)
}

pub fn router(state: AppState, max_upload_mb: usize) -> Router {
    let api = Router::new()
        .route("/datasets", post(upload_dataset).get(list_datasets))
        .route("/datasets/{id}/preview", get(preview_dataset))
        .route("/jobs", post(submit_job))
        .route("/jobs/{id}", get(get_job))
        .route("/results/{id}", get(get_result))
        .route("/results/{id}/scatter", get(scatter_view))
        .route("/results/{id}/parallel", get(parallel_view))
        .route("/results/{id}/counts", get(counts_view));
    Router::new()
        .nest("/api/v1", api)
        .layer(DefaultBodyLimit::max(
            max_upload_mb.saturating_mul(1024 * 1024),
        ))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Binds and serves until the process is stopped.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let workspace = Workspace::open(&config.workspace_dir).map_err(std::io::Error::other)?;
    let app = router(
        AppState::new(workspace, config.workers),
        config.max_upload_mb,
    );
    let addr = SocketAddr::from(([0, 0, 0, 0], config.port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub id: String,
    pub n: usize,
    pub d: usize,
    pub grouped: bool,
    pub sha256: String,
}

impl From<ManifestEntry> for DatasetInfo {
    fn from(e: ManifestEntry) -> Self {
        Self {
            id: e.name,
            n: e.rows,
            d: e.cols,
            grouped: e.grouped,
            sha256: e.sha256,
        }
    }
}

#[derive(Debug, Deserialize)]
struct UploadQuery {
    name: Option<String>,
}

async fn upload_dataset(
    State(state): State<AppState>,
    Query(q): Query<UploadQuery>,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<(StatusCode, Json<DatasetInfo>)> {
    let body = body.map_err(|e| {
        let status = e.status();
        let code = if status == StatusCode::PAYLOAD_TOO_LARGE {
            "too_large"
        } else {
            "bad_request"
        };
        ApiError::new(status, code, e.body_text())
    })?;
    let name = q
        .name
        .unwrap_or_else(|| format!("ds-{}", &growclusters::workspace::sha256_hex(&body)[..12]));
    let entry = blocking(&state, move |ws| {
        ws.register_bytes(&name, &body).map_err(|e| match e {
            growclusters::Error::Usage(m) => growclusters::Error::Data(m),
            other => other,
        })
    })
    .await?;
    Ok((StatusCode::CREATED, Json(entry.into())))
}

async fn list_datasets(State(state): State<AppState>) -> ApiResult<Json<Vec<DatasetInfo>>> {
    let entries = blocking(&state, |ws| ws.list()).await?;
    Ok(Json(entries.into_iter().map(Into::into).collect()))
}

#[derive(Debug, Deserialize)]
struct PreviewQuery {
    rows: Option<usize>,
}

async fn load_dataset(state: &AppState, id: &str) -> ApiResult<Dataset> {
    let name = id.to_string();
    let found = blocking(state, move |ws| {
        ws.entry(&name)?.map(|_| ws.load(&name, None)).transpose()
    })
    .await?;
    found
        .map(|l| l.into_single())
        .ok_or_else(|| ApiError::not_found("dataset", id))
}

async fn preview_dataset(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<PreviewQuery>,
) -> ApiResult<Json<Value>> {
    let data = load_dataset(&state, &id).await?;
    let take = q.rows.unwrap_or(10).min(data.n());
    let rows: Vec<Value> = (0..take)
        .map(|i| json!({ "id": data.row_ids()[i], "values": data.row(i) }))
        .collect();
    Ok(Json(json!({
        "id": id,
        "n": data.n(),
        "var_names": data.var_names(),
        "rows": rows,
    })))
}

async fn submit_job(
    State(state): State<AppState>,
    body: Result<Json<jobs::JobRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let Json(req) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let work = jobs::Work::from_request(req.kind, req.params)?;
    let name = req.dataset_id.clone();
    if blocking(&state, move |ws| ws.entry(&name)).await?.is_none() {
        return Err(ApiError::not_found("dataset", &req.dataset_id));
    }
    let job_id = state.jobs.insert(req.kind);
    let st = state.clone();
    let id = job_id.clone();
    tokio::spawn(async move {
        let Ok(_permit) = st.workers.clone().acquire_owned().await else {
            st.jobs.fail(&id, "worker pool closed".into());
            return;
        };
        st.jobs.start(&id);
        let dataset = req.dataset_id;
        let outcome = blocking(&st, move |ws| {
            let archive = work.run(ws, &dataset)?;
            ws.save_result(&archive)
        })
        .await;
        match outcome {
            Ok(result_id) => st.jobs.finish(&id, result_id),
            Err(e) => st.jobs.fail(&id, e.message),
        }
    });
    Ok((StatusCode::ACCEPTED, Json(json!({ "job_id": job_id }))))
}

async fn get_job(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Job>> {
    state
        .jobs
        .get(&id)
        .map(Json)
        .ok_or_else(|| ApiError::not_found("job", &id))
}

async fn load_result(state: &AppState, id: &str) -> ApiResult<ResultArchive> {
    let rid = id.to_string();
    blocking(state, move |ws| ws.load_result(&rid))
        .await?
        .ok_or_else(|| ApiError::not_found("result", id))
}

async fn result_with_data(state: &AppState, id: &str) -> ApiResult<(ResultArchive, Dataset)> {
    let archive = load_result(state, id).await?;
    let name = archive
        .dataset
        .clone()
        .ok_or_else(|| ApiError::conflict("result does not reference a workspace dataset"))?;
    let data = load_dataset(state, &name).await?;
    Ok((archive, data))
}

async fn get_result(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<ResultArchive>> {
    load_result(&state, &id).await.map(Json)
}

#[derive(Debug, Deserialize)]
struct ScatterQuery {
    vars: Option<String>,
}

async fn scatter_view(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ScatterQuery>,
) -> ApiResult<Json<views::ScatterView>> {
    let (archive, data) = result_with_data(&state, &id).await?;
    views::scatter(&archive, &data, q.vars.as_deref()).map(Json)
}

#[derive(Debug, Deserialize)]
struct ParallelQuery {
    highlight: Option<usize>,
}

async fn parallel_view(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ParallelQuery>,
) -> ApiResult<Json<views::ParallelView>> {
    let (archive, data) = result_with_data(&state, &id).await?;
    views::parallel(&archive, &data, q.highlight).map(Json)
}

#[derive(Debug, Deserialize)]
struct CountsQuery {
    by: Option<views::CountBy>,
}

async fn counts_view(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<CountsQuery>,
) -> ApiResult<Json<views::CountsView>> {
    let archive = load_result(&state, &id).await?;
    views::counts(&archive, q.by.unwrap_or(views::CountBy::Cluster)).map(Json)
}
