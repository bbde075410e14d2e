//! HTTP API over the extraction pipeline.
//!
//! Graphs live in in-memory sessions. Propagated scores are cached per session,
//! keyed by the settings that affect them (node/edge interest specs, hops and
//! aggregator), so changing only `k`, `theta`, seeds or edge mode re-runs just
//! the expansion stage.

mod error;
mod session;

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Path, Query, Request, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use gudie::export::{unit_view, UnitEdge, UnitNode, UnitView};
use gudie::graph::{GraphSummary, PropertyGraph};
use gudie::io::{read_graph, NODES_FILE, TRANSACTIONS_FILE};
use gudie::pipeline::expand_and_assemble;
use gudie::{
    fixtures, Aggregator, Decay, EdgeInterestSpec, EdgeMode, ExpansionStats, GraphUnit, NodeInterestSpec, RunConfig,
    RunReport,
};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

pub use error::ApiError;
pub use session::{Session, SessionStore};

/// Largest accepted upload.
pub const MAX_BODY_BYTES: usize = 512 * 1024 * 1024;
pub const DEFAULT_TTL: Duration = Duration::from_secs(60 * 60);

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: Uuid,
    pub summary: GraphSummary,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FixtureRequest {
    fixture: String,
}

/// Body of `POST /sessions/{id}/graphunits`; absent fields take the run defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphUnitQuery {
    pub seeds: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Aggregator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Decay>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vudie: Option<NodeInterestSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ludie: Option<EdgeInterestSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_mode: Option<EdgeMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_path_length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
}

impl GraphUnitQuery {
    /// The run configuration this query denotes.
    pub fn to_config(&self) -> RunConfig {
        let d = RunConfig::default();
        RunConfig {
            seeds: self.seeds.clone(),
            h: self.h.unwrap_or(d.h),
            k: self.k.unwrap_or(d.k),
            gamma: self.gamma.unwrap_or(d.gamma),
            theta: self.theta.unwrap_or(d.theta),
            vudie: self.vudie.clone().unwrap_or(d.vudie.clone()),
            ludie: self.ludie.clone().unwrap_or(d.ludie.clone()),
            edge_mode: self.edge_mode.unwrap_or(d.edge_mode),
            max_path_length: self.max_path_length.or(d.max_path_length),
            budget: self.budget.unwrap_or(d.budget),
            ..d
        }
    }

    pub fn from_config(config: &RunConfig) -> Self {
        GraphUnitQuery {
            seeds: config.seeds.clone(),
            h: Some(config.h),
            k: Some(config.k),
            gamma: Some(config.gamma),
            theta: Some(config.theta),
            vudie: Some(config.vudie.clone()),
            ludie: Some(config.ludie.clone()),
            edge_mode: Some(config.edge_mode),
            max_path_length: config.max_path_length,
            budget: Some(config.budget),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphUnitResponse {
    pub units: Vec<UnitView>,
    pub stats: ExpansionStats,
}

#[derive(Debug, Deserialize)]
struct NeighborhoodParams {
    node: String,
    #[serde(default = "default_radius")]
    radius: usize,
}

fn default_radius() -> usize {
    1
}

/// Raw subgraph around a node; scores are those of the session's most recent
/// query, or absent when nothing has been computed yet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodResponse {
    pub center: String,
    pub radius: usize,
    pub nodes: Vec<NeighborhoodNode>,
    pub edges: Vec<NeighborhoodEdge>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodNode {
    pub id: String,
    #[serde(rename = "type")]
    pub node_type: gudie::NodeType,
    pub score: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodEdge {
    pub src: String,
    pub dst: String,
    pub score: Option<f64>,
    pub fraud_rate: f64,
    pub transactions: usize,
    pub total_amount: f64,
}

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/summary", get(summary))
        .route("/sessions/{id}/graphunits", post(graphunits))
        .route("/sessions/{id}/neighborhood", get(neighborhood))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .layer(middleware::from_fn(cors))
        .with_state(store)
}

/// Permissive CORS so a browser front end on another origin can call the API.
async fn cors(req: Request, next: Next) -> Response {
    let preflight = req.method() == Method::OPTIONS;
    let mut res = if preflight {
        StatusCode::NO_CONTENT.into_response()
    } else {
        next.run(req).await
    };
    let h = res.headers_mut();
    h.insert(header::ACCESS_CONTROL_ALLOW_ORIGIN, HeaderValue::from_static("*"));
    if preflight {
        h.insert(
            header::ACCESS_CONTROL_ALLOW_METHODS,
            HeaderValue::from_static("GET, POST, OPTIONS"),
        );
        h.insert(
            header::ACCESS_CONTROL_ALLOW_HEADERS,
            HeaderValue::from_static("content-type"),
        );
    }
    res
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn create_session(State(store): State<Arc<SessionStore>>, req: Request) -> Result<Response, ApiError> {
    let is_multipart = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    let graph = if is_multipart {
        let multipart = Multipart::from_request(req, &())
            .await
            .map_err(|e| ApiError::bad_request(e.body_text()))?;
        graph_from_multipart(multipart).await?
    } else {
        let body = Bytes::from_request(req, &())
            .await
            .map_err(|e| ApiError::bad_request(e.body_text()))?;
        if body.iter().all(u8::is_ascii_whitespace) {
            return Err(ApiError::bad_request(
                "empty body: send a multipart nodes/transactions pair or {\"fixture\": name}",
            ));
        }
        let request: FixtureRequest =
            serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("invalid request: {e}")))?;
        fixtures::example_by_name(&request.fixture)
            .map_err(|e| ApiError::bad_request(e.to_string()))?
            .graph
    };
    let summary = graph.summary();
    let session_id = store.insert(graph);
    Ok((StatusCode::CREATED, Json(SessionCreated { session_id, summary })).into_response())
}

async fn graph_from_multipart(mut multipart: Multipart) -> Result<PropertyGraph, ApiError> {
    let mut nodes = None;
    let mut transactions = None;
    while let Some(field) = multipart
        .next_field()
        .await
        .map_err(|e| ApiError::bad_request(e.body_text()))?
    {
        let name = field.name().unwrap_or_default().to_string();
        let data = field.bytes().await.map_err(|e| ApiError::bad_request(e.body_text()))?;
        match name.as_str() {
            "nodes" => nodes = Some(data),
            "transactions" => transactions = Some(data),
            other => return Err(ApiError::bad_request(format!("unexpected multipart field `{other}`"))),
        }
    }
    let (Some(nodes), Some(transactions)) = (nodes, transactions) else {
        return Err(ApiError::bad_request(
            "multipart upload needs `nodes` and `transactions` fields",
        ));
    };
    tokio::task::spawn_blocking(move || {
        read_graph(nodes.as_ref(), NODES_FILE, transactions.as_ref(), TRANSACTIONS_FILE)
    })
    .await
    .map_err(ApiError::internal)?
    .map_err(|e| ApiError::bad_request(e.to_string()))
}

async fn summary(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
) -> Result<Json<SessionCreated>, ApiError> {
    let session = store.lookup(&id)?;
    Ok(Json(SessionCreated {
        session_id: session_id(&id)?,
        summary: session.graph().summary(),
    }))
}

fn session_id(raw: &str) -> Result<Uuid, ApiError> {
    raw.parse()
        .map_err(|_| ApiError::not_found(format!("no session {raw}")))
}

/// Runs a query against a session; shared by the HTTP handler and in-process callers.
pub fn query_graphunits(session: &Session, query: &GraphUnitQuery) -> Result<(GraphUnitResponse, bool), ApiError> {
    let config = query.to_config();
    config.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
    if config.seeds.is_empty() {
        return Err(ApiError::bad_request("at least one seed is required"));
    }
    let (scores, hit) = session.scores(&config)?;
    let graph = session.graph();
    let mut report = RunReport::default();
    let (_index, units) = expand_and_assemble(graph, &scores.propagated, &config, &mut report)?;
    Ok((
        GraphUnitResponse {
            units: units
                .iter()
                .map(|u: &GraphUnit| unit_view(graph, u, &scores.propagated.scores, &scores.state.edge_scores))
                .collect(),
            stats: report.expansion,
        },
        hit,
    ))
}

async fn graphunits(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let session = store.lookup(&id)?;
    let query: GraphUnitQuery =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("invalid query: {e}")))?;
    let (response, hit) = tokio::task::spawn_blocking(move || query_graphunits(&session, &query))
        .await
        .map_err(ApiError::internal)??;
    let mut res = Json(response).into_response();
    res.headers_mut().insert(
        "x-propagation-cache",
        HeaderValue::from_static(if hit { "hit" } else { "miss" }),
    );
    Ok(res)
}

async fn neighborhood(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    Query(params): Query<NeighborhoodParams>,
) -> Result<Json<NeighborhoodResponse>, ApiError> {
    let session = store.lookup(&id)?;
    if params.radius == 0 {
        return Err(ApiError::bad_request("radius must be at least 1"));
    }
    let graph = session.graph();
    let center = graph
        .node_ix(&params.node)
        .ok_or_else(|| ApiError::bad_request(format!("unknown node `{}`", params.node)))?;
    let scores = session.latest_scores();
    let members = graph.ball(center, params.radius);
    let mut unit = GraphUnit::new(center);
    unit.nodes.extend(members);
    let unit = gudie::graphunits::induce(graph, &unit).map_err(ApiError::internal)?;
    let view: UnitView = match &scores {
        Some(s) => unit_view(graph, &unit, &s.propagated.scores, &s.state.edge_scores),
        None => {
            let zeros_n = vec![0.0f64; graph.node_count()];
            let zeros_e = vec![0.0f64; graph.edge_count()];
            unit_view(graph, &unit, &zeros_n, &zeros_e)
        }
    };
    let has = scores.is_some();
    Ok(Json(NeighborhoodResponse {
        center: params.node,
        radius: params.radius,
        nodes: view
            .nodes
            .into_iter()
            .map(|UnitNode { id, node_type, score }| NeighborhoodNode {
                id,
                node_type,
                score: has.then_some(score),
            })
            .collect(),
        edges: view
            .edges
            .into_iter()
            .map(|e: UnitEdge| NeighborhoodEdge {
                src: e.src,
                dst: e.dst,
                score: has.then_some(e.score),
                fraud_rate: e.fraud_rate,
                transactions: e.transactions,
                total_amount: e.total_amount,
            })
            .collect(),
    }))
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, ttl: Duration) -> std::io::Result<()> {
    let store = Arc::new(SessionStore::new(ttl));
    let sweeper = store.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(ttl.min(Duration::from_secs(60)).max(Duration::from_secs(1)));
        loop {
            tick.tick().await;
            sweeper.evict_expired();
        }
    });
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(store)).await
}
