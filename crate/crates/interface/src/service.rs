//! HTTP service: an in-memory store of games and simulations behind a JSON API.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use costshare_core::simulation::{FormationSimulation, SimulationError};
use costshare_core::{ActorNetwork, Budgets, CostGame, NetworkError, ProposalPolicy};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tower_http::services::ServeDir;

use crate::document::{parse_game, DocumentError, GameDocument};
use crate::solution::{parse_method, solve, SolutionDocument, SolveError, SolveOptions};
use crate::trace::{IncentiveDoc, TraceDocument};

pub const DEFAULT_MAX_ROUNDS: u64 = 100;

#[derive(Debug)]
pub struct StoredGame {
    pub document: GameDocument,
    pub game: CostGame,
    pub budgets: Option<Budgets>,
}

#[derive(Debug)]
struct StoredSim {
    game_id: String,
    sim: FormationSimulation,
    steps: u64,
}

#[derive(Debug, Default)]
pub struct AppState {
    games: RwLock<HashMap<String, Arc<StoredGame>>>,
    sims: RwLock<HashMap<String, Arc<RwLock<StoredSim>>>>,
}

fn new_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

impl AppState {
    pub fn new() -> AppState {
        AppState::default()
    }

    pub fn game(&self, id: &str) -> Option<Arc<StoredGame>> {
        self.games.read().expect("game store poisoned").get(id).cloned()
    }

    fn insert_game(&self, id: String, text: &str) -> Result<Arc<StoredGame>, DocumentError> {
        let parsed = parse_game(text)?;
        let stored = Arc::new(StoredGame { document: parsed.document, game: parsed.game, budgets: parsed.budgets });
        self.games.write().expect("game store poisoned").insert(id, stored.clone());
        Ok(stored)
    }

    /// Stores a game document and returns its id.
    pub fn create_game(&self, text: &str) -> Result<(String, Arc<StoredGame>), DocumentError> {
        let id = new_id();
        let stored = self.insert_game(id.clone(), text)?;
        Ok((id, stored))
    }

    fn sim(&self, id: &str) -> Option<Arc<RwLock<StoredSim>>> {
        self.sims.read().expect("simulation store poisoned").get(id).cloned()
    }

    fn insert_sim(&self, id: String, sim: StoredSim) {
        self.sims.write().expect("simulation store poisoned").insert(id, Arc::new(RwLock::new(sim)));
    }

    pub fn snapshot(&self) -> Snapshot {
        let games = self.games.read().expect("game store poisoned");
        let mut game_entries: Vec<SnapshotGame> =
            games.iter().map(|(id, g)| SnapshotGame { id: id.clone(), document: g.document.clone() }).collect();
        game_entries.sort_by(|a, b| a.id.cmp(&b.id));
        let sims = self.sims.read().expect("simulation store poisoned");
        let mut sim_entries: Vec<SnapshotSim> = sims
            .iter()
            .map(|(id, s)| {
                let s = s.read().expect("simulation poisoned");
                SnapshotSim {
                    id: id.clone(),
                    game_id: s.game_id.clone(),
                    policy: s.sim.policy().as_str().to_string(),
                    seed: s.sim.seed(),
                    max_rounds: s.sim.max_rounds(),
                    steps: s.steps,
                }
            })
            .collect();
        sim_entries.sort_by(|a, b| a.id.cmp(&b.id));
        Snapshot { games: game_entries, simulations: sim_entries }
    }

    /// Rebuilds a store from a snapshot; simulations are replayed step by step.
    pub fn restore(snapshot: &Snapshot) -> Result<AppState, SnapshotError> {
        let state = AppState::new();
        for g in &snapshot.games {
            state
                .insert_game(g.id.clone(), &g.document.to_json())
                .map_err(|e| SnapshotError::Invalid(format!("game {}: {e}", g.id)))?;
        }
        for s in &snapshot.simulations {
            let game = state.game(&s.game_id).ok_or_else(|| SnapshotError::Invalid(format!("simulation {}: unknown game", s.id)))?;
            let policy = s.policy.parse().map_err(|e| SnapshotError::Invalid(format!("simulation {}: {e}", s.id)))?;
            let mut sim = FormationSimulation::new(game.game.clone(), policy, s.max_rounds, s.seed)
                .map_err(|e| SnapshotError::Invalid(format!("simulation {}: {e}", s.id)))?;
            for _ in 0..s.steps {
                sim.step().map_err(|e| SnapshotError::Invalid(format!("simulation {}: {e}", s.id)))?;
            }
            state.insert_sim(s.id.clone(), StoredSim { game_id: s.game_id.clone(), sim, steps: s.steps });
        }
        Ok(state)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotGame {
    pub id: String,
    pub document: GameDocument,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotSim {
    pub id: String,
    pub game_id: String,
    pub policy: String,
    pub seed: u64,
    pub max_rounds: u64,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Snapshot {
    pub games: Vec<SnapshotGame>,
    pub simulations: Vec<SnapshotSim>,
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot io: {0}")]
    Io(#[from] std::io::Error),
    #[error("snapshot format: {0}")]
    Format(#[from] serde_json::Error),
    #[error("snapshot content: {0}")]
    Invalid(String),
}

pub fn save_snapshot(state: &AppState, path: &Path) -> Result<(), SnapshotError> {
    let text = serde_json::to_string_pretty(&state.snapshot())?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Loads a snapshot file, or an empty store if the file does not exist.
pub fn load_snapshot(path: &Path) -> Result<AppState, SnapshotError> {
    match std::fs::read_to_string(path) {
        Ok(text) => AppState::restore(&serde_json::from_str(&text)?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(AppState::new()),
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            body: ErrorBody { error: error.to_string(), message: message.into(), field: None, line: None, column: None },
        }
    }

    fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    fn not_found(what: &str, id: &str) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no {what} with id `{id}`"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<DocumentError> for ApiError {
    fn from(e: DocumentError) -> Self {
        let mut err = ApiError::new(StatusCode::BAD_REQUEST, "invalid_document", e.to_string());
        match &e {
            DocumentError::Syntax { line, column, .. } => {
                err.body.line = Some(*line);
                err.body.column = Some(*column);
            }
            DocumentError::Invalid { field, line, .. } => {
                err.body.field = Some(field.clone());
                err.body.line = *line;
            }
        }
        err
    }
}

impl From<SolveError> for ApiError {
    fn from(e: SolveError) -> Self {
        if e.cap().is_some() {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "cap_exceeded", e.to_string())
        } else {
            ApiError::bad_request(e.to_string())
        }
    }
}

impl From<NetworkError> for ApiError {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::StaleReport { .. } | NetworkError::SplitsBlock => {
                ApiError::new(StatusCode::CONFLICT, "stale", e.to_string())
            }
            NetworkError::Shapley(costshare_core::ShapleyError::Cap(_)) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "cap_exceeded", e.to_string())
            }
            _ => ApiError::bad_request(e.to_string()),
        }
    }
}

impl From<SimulationError> for ApiError {
    fn from(e: SimulationError) -> Self {
        match e {
            SimulationError::Network(n) => n.into(),
            other => ApiError::bad_request(other.to_string()),
        }
    }
}

fn parse_body<T: DeserializeOwned>(body: &str) -> Result<T, ApiError> {
    let text = if body.trim().is_empty() { "{}" } else { body };
    serde_json::from_str(text).map_err(|e| {
        let mut err = ApiError::bad_request(e.to_string());
        err.body.line = Some(e.line());
        err.body.column = Some(e.column());
        err
    })
}

type Shared = Arc<AppState>;
type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Serialize, Deserialize)]
pub struct CreatedGame {
    pub id: String,
    pub document: GameDocument,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GameSummary {
    pub id: String,
    pub players: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process_tag: Option<String>,
}

async fn create_game(State(state): State<Shared>, body: String) -> ApiResult<(StatusCode, Json<CreatedGame>)> {
    let (id, stored) = state.create_game(&body)?;
    tracing::info!(%id, players = stored.game.n(), "game created");
    Ok((StatusCode::CREATED, Json(CreatedGame { id, document: stored.document.clone() })))
}

async fn list_games(State(state): State<Shared>) -> Json<Vec<GameSummary>> {
    let games = state.games.read().expect("game store poisoned");
    let mut out: Vec<GameSummary> = games
        .iter()
        .map(|(id, g)| GameSummary {
            id: id.clone(),
            players: g.document.players.clone(),
            process_tag: g.document.process_tag.clone(),
        })
        .collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Json(out)
}

fn lookup(state: &AppState, id: &str) -> ApiResult<Arc<StoredGame>> {
    state.game(id).ok_or_else(|| ApiError::not_found("game", id))
}

async fn read_game(State(state): State<Shared>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<GameDocument>> {
    Ok(Json(lookup(&state, &id)?.document.clone()))
}

#[derive(Debug, Default, Deserialize)]
pub struct SolutionQuery {
    pub method: Option<String>,
    #[serde(default)]
    pub table: bool,
    #[serde(default)]
    pub axioms: bool,
    #[serde(default)]
    pub core: bool,
    /// Include the budget section, using the budgets stored with the game.
    #[serde(default)]
    pub budgets: bool,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
}

pub fn solve_stored(game: &StoredGame, query: &SolutionQuery) -> Result<SolutionDocument, ApiError> {
    let defaults = SolveOptions::default();
    let method = match query.method.as_deref() {
        None | Some("") => defaults.method,
        Some(m) => parse_method(m).map_err(|e| ApiError::bad_request(e.to_string()))?,
    };
    let budgets = if query.budgets {
        Some(game.budgets.clone().ok_or_else(|| ApiError::bad_request("game has no budgets"))?)
    } else {
        None
    };
    let options = SolveOptions {
        method,
        table: query.table,
        axioms: query.axioms,
        core: query.core,
        budgets,
        samples: query.samples.unwrap_or(defaults.samples),
        seed: query.seed.unwrap_or(defaults.seed),
    };
    Ok(solve(&game.game, &options)?)
}

async fn solution(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    query: Result<Query<SolutionQuery>, axum::extract::rejection::QueryRejection>,
) -> ApiResult<Json<SolutionDocument>> {
    let Query(query) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let game = lookup(&state, &id)?;
    let doc = tokio::task::spawn_blocking(move || solve_stored(&game, &query))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(Json(doc))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WhatIfRequest {
    coalition: Vec<String>,
    /// Evaluate against this simulation's current structure.
    #[serde(default)]
    simulation: Option<String>,
    /// Structure revision the caller last saw.
    #[serde(default)]
    revision: Option<u64>,
}

async fn whatif(State(state): State<Shared>, UrlPath(id): UrlPath<String>, body: String) -> ApiResult<Json<IncentiveDoc>> {
    let req: WhatIfRequest = parse_body(&body)?;
    let game = lookup(&state, &id)?;
    let players = game.game.players();
    let coalition = players.coalition(req.coalition.iter()).map_err(|e| {
        let mut err = ApiError::bad_request(e.to_string());
        err.body.field = Some("coalition".into());
        err
    })?;
    let report = match &req.simulation {
        None => {
            if let Some(r) = req.revision.filter(|&r| r != 0) {
                return Err(ApiError::new(
                    StatusCode::CONFLICT,
                    "stale",
                    format!("revision {r} given without a simulation"),
                ));
            }
            ActorNetwork::new(game.game.clone()).incentive_report(coalition)?
        }
        Some(sim_id) => {
            let sim = state.sim(sim_id).ok_or_else(|| ApiError::not_found("simulation", sim_id))?;
            let sim = sim.read().expect("simulation poisoned");
            if sim.game_id != id {
                return Err(ApiError::bad_request(format!("simulation `{sim_id}` belongs to another game")));
            }
            let net = sim.sim.network();
            if let Some(r) = req.revision.filter(|&r| r != net.revision()) {
                return Err(NetworkError::StaleReport { report: r, current: net.revision() }.into());
            }
            net.incentive_report(coalition)?
        }
    };
    Ok(Json(IncentiveDoc::new(players, &report)))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulationRequest {
    #[serde(default)]
    policy: Option<String>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    max_rounds: Option<u64>,
    /// Run to completion before responding.
    #[serde(default)]
    run: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreatedSimulation {
    pub sim_id: String,
    pub trace: TraceDocument,
}

async fn create_simulation(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: String,
) -> ApiResult<(StatusCode, Json<CreatedSimulation>)> {
    let req: SimulationRequest = parse_body(&body)?;
    let game = lookup(&state, &id)?;
    let policy: ProposalPolicy = match req.policy.as_deref() {
        None => ProposalPolicy::default(),
        Some(p) => p.parse().map_err(|e: costshare_core::simulation::UnknownPolicy| {
            let mut err = ApiError::bad_request(e.to_string());
            err.body.field = Some("policy".into());
            err
        })?,
    };
    let mut sim = FormationSimulation::new(
        game.game.clone(),
        policy,
        req.max_rounds.unwrap_or(DEFAULT_MAX_ROUNDS),
        req.seed.unwrap_or(0),
    )?;
    let mut steps = 0;
    if req.run {
        while !sim.is_done() {
            sim.step()?;
            steps += 1;
        }
    }
    let trace = TraceDocument::new(&sim);
    let sim_id = new_id();
    state.insert_sim(sim_id.clone(), StoredSim { game_id: id, sim, steps });
    tracing::info!(%sim_id, %policy, "simulation created");
    Ok((StatusCode::CREATED, Json(CreatedSimulation { sim_id, trace })))
}

async fn read_trace(State(state): State<Shared>, UrlPath(sim_id): UrlPath<String>) -> ApiResult<Json<TraceDocument>> {
    let sim = state.sim(&sim_id).ok_or_else(|| ApiError::not_found("simulation", &sim_id))?;
    let sim = sim.read().expect("simulation poisoned");
    Ok(Json(TraceDocument::new(&sim.sim)))
}

async fn step_simulation(State(state): State<Shared>, UrlPath(sim_id): UrlPath<String>) -> ApiResult<Json<TraceDocument>> {
    let sim = state.sim(&sim_id).ok_or_else(|| ApiError::not_found("simulation", &sim_id))?;
    let mut sim = sim.write().expect("simulation poisoned");
    if !sim.sim.is_done() {
        sim.sim.step()?;
        sim.steps += 1;
    }
    Ok(Json(TraceDocument::new(&sim.sim)))
}

const INDEX: &str = include_str!("index.html");

async fn index() -> Html<&'static str> {
    Html(INDEX)
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

/// The API routes, with static assets from `static_dir` (or a built-in
/// index page) at `/`.
pub fn router(state: Shared, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/games", post(create_game).get(list_games))
        .route("/games/{id}", get(read_game))
        .route("/games/{id}/solution", get(solution))
        .route("/games/{id}/whatif", post(whatif))
        .route("/games/{id}/simulations", post(create_simulation))
        .route("/simulations/{sim_id}/trace", get(read_trace))
        .route("/simulations/{sim_id}/step", post(step_simulation))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(index)).fallback(not_found),
    }
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub addr: SocketAddr,
    pub snapshot: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("server failed: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
}

/// Runs until ctrl-c, then writes the snapshot if one is configured.
pub async fn serve(config: ServeConfig) -> Result<(), ServeError> {
    let state = Arc::new(match &config.snapshot {
        Some(path) => load_snapshot(path)?,
        None => AppState::new(),
    });
    let listener = tokio::net::TcpListener::bind(config.addr)
        .await
        .map_err(|source| ServeError::Bind { addr: config.addr, source })?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    let app = router(state.clone(), config.static_dir.as_deref());
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    if let Some(path) = &config.snapshot {
        save_snapshot(&state, path)?;
        tracing::info!(path = %path.display(), "snapshot written");
    }
    Ok(())
}
