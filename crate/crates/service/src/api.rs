//! HTTP API consumed by the web UI.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use grounding_core::eval::load_scenes_dir;
use grounding_core::{
    BBox, Grounder, NodeId, Question, Reply, SceneDocument, SceneGraph, SessionError, SessionState,
    SessionStatus,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::store::{lock, new_session_id, SessionStore, TranscriptLine};

pub struct SceneCatalog {
    dir: PathBuf,
    scenes: BTreeMap<String, SceneGraph>,
}

impl SceneCatalog {
    pub fn load(dir: &Path) -> anyhow::Result<Self> {
        let scenes = load_scenes_dir(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            scenes,
        })
    }

    pub fn get(&self, id: &str) -> Option<&SceneGraph> {
        self.scenes.get(id)
    }

    pub fn len(&self) -> usize {
        self.scenes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenes.is_empty()
    }

    /// The image file for a scene, only if it lies inside the scenes
    /// directory.
    pub fn image_path(&self, scene: &SceneGraph) -> Option<PathBuf> {
        let rel = scene.image_ref.as_deref()?;
        let root = self.dir.canonicalize().ok()?;
        let path = root.join(rel).canonicalize().ok()?;
        (path.starts_with(&root) && path.is_file()).then_some(path)
    }
}

#[derive(Clone)]
pub struct AppState {
    pub scenes: Arc<SceneCatalog>,
    pub grounder: Arc<Grounder>,
    pub store: Arc<SessionStore>,
}

impl AppState {
    pub fn new(scenes: SceneCatalog, grounder: Grounder, store: SessionStore) -> Self {
        Self {
            scenes: Arc::new(scenes),
            grounder: Arc::new(grounder),
            store: Arc::new(store),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSummary {
    pub scene_id: String,
    pub object_count: usize,
    pub has_image: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundedNode {
    pub node_id: NodeId,
    pub name: String,
    pub bbox: Option<BBox>,
}

/// Wire view of a session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiSession {
    pub session_id: String,
    pub scene_id: String,
    pub expression: String,
    #[serde(flatten)]
    pub status: SessionStatus,
    pub question: Option<Question>,
    pub interactions: u32,
    pub grounded: Option<GroundedNode>,
}

impl ApiSession {
    pub fn project(state: &SessionState, scene: &SceneGraph) -> Self {
        let grounded = state.grounded_node().map(|id| {
            let node = scene.node(id);
            GroundedNode {
                node_id: id,
                name: node.map(|n| n.describe()).unwrap_or_default(),
                bbox: node.and_then(|n| n.bbox),
            }
        });
        Self {
            session_id: state.session_id.clone(),
            scene_id: state.scene_id.clone(),
            expression: state.expression.clone(),
            status: state.status.clone(),
            question: state.pending.clone(),
            interactions: state.interactions,
            grounded,
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct StartRequest {
    pub scene_id: String,
    pub expression: String,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum WireReply {
    Option { option: usize },
    Confirm { confirm: bool },
    None { none: bool },
}

#[derive(Debug, Deserialize)]
struct AnswerRequest {
    reply: WireReply,
}

impl TryFrom<WireReply> for Reply {
    type Error = ApiError;

    fn try_from(w: WireReply) -> Result<Self, ApiError> {
        Ok(match w {
            WireReply::Option { option } => Reply::Option(option),
            WireReply::Confirm { confirm: true } => Reply::Yes,
            WireReply::Confirm { confirm: false } => Reply::No,
            WireReply::None { none: true } => Reply::None,
            WireReply::None { none: false } => {
                return Err(ApiError::bad_request("\"none\" must be true"))
            }
        })
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown {what} {id:?}"))
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match e {
            SessionError::NotAwaiting => StatusCode::CONFLICT,
            SessionError::InvalidOption { .. } | SessionError::WrongReplyKind { .. } => {
                StatusCode::BAD_REQUEST
            }
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/scenes", get(list_scenes))
        .route("/api/scenes/{id}", get(scene_document))
        .route("/api/scenes/{id}/image", get(scene_image))
        .route("/api/sessions", post(start_session))
        .route("/api/sessions/{id}", get(session_snapshot))
        .route("/api/sessions/{id}/answer", post(answer_session))
        .route("/api/sessions/{id}/transcript", get(session_transcript))
        .with_state(state)
}

async fn list_scenes(State(app): State<AppState>) -> Json<Vec<SceneSummary>> {
    let list = app
        .scenes
        .scenes
        .values()
        .map(|s| SceneSummary {
            scene_id: s.scene_id.clone(),
            object_count: s.nodes().len(),
            has_image: app.scenes.image_path(s).is_some(),
        })
        .collect();
    Json(list)
}

async fn scene_document(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<SceneDocument>, ApiError> {
    let scene = app
        .scenes
        .get(&id)
        .ok_or_else(|| ApiError::not_found("scene", &id))?;
    Ok(Json(scene.to_document()))
}

fn content_type(path: &Path) -> &'static str {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("gif") => "image/gif",
        Some("webp") => "image/webp",
        Some("svg") => "image/svg+xml",
        _ => "application/octet-stream",
    }
}

async fn scene_image(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    let scene = app
        .scenes
        .get(&id)
        .ok_or_else(|| ApiError::not_found("scene", &id))?;
    let path = app.scenes.image_path(scene).ok_or_else(|| {
        ApiError::new(StatusCode::NOT_FOUND, format!("scene {id:?} has no image"))
    })?;
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response())
}

async fn start_session(
    State(app): State<AppState>,
    body: Bytes,
) -> Result<Json<ApiSession>, ApiError> {
    let req: StartRequest = parse_body(&body)?;
    let scene = app
        .scenes
        .get(&req.scene_id)
        .ok_or_else(|| ApiError::not_found("scene", &req.scene_id))?;
    let state = app.grounder.start(scene, &req.expression, new_session_id());
    let snapshot = ApiSession::project(&state, scene);
    app.store.insert(state);
    Ok(Json(snapshot))
}

async fn session_snapshot(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<ApiSession>, ApiError> {
    let entry = app
        .store
        .get(&id)
        .ok_or_else(|| ApiError::not_found("session", &id))?;
    let entry = lock(&entry);
    let scene = app
        .scenes
        .get(&entry.state.scene_id)
        .ok_or_else(|| ApiError::not_found("scene", &entry.state.scene_id))?;
    Ok(Json(ApiSession::project(&entry.state, scene)))
}

async fn answer_session(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<ApiSession>, ApiError> {
    let entry = app
        .store
        .get(&id)
        .ok_or_else(|| ApiError::not_found("session", &id))?;
    let req: AnswerRequest = parse_body(&body)?;
    let mut entry = lock(&entry);
    if entry.state.is_terminal() {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "session already finished",
        ));
    }
    let reply = Reply::try_from(req.reply)?;
    let scene = app
        .scenes
        .get(&entry.state.scene_id)
        .ok_or_else(|| ApiError::not_found("scene", &entry.state.scene_id))?;
    app.grounder.answer(scene, &mut entry.state, reply)?;
    entry.sync_transcript();
    Ok(Json(ApiSession::project(&entry.state, scene)))
}

async fn session_transcript(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<Vec<TranscriptLine>>, ApiError> {
    let entry = app
        .store
        .get(&id)
        .ok_or_else(|| ApiError::not_found("session", &id))?;
    let transcript = lock(&entry).transcript.clone();
    Ok(Json(transcript))
}
