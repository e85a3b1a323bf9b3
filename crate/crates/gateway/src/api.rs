//! HTTP/JSON service: value lookups and bidding-game sessions.
//!
//! Exact values are serialised as `{"num": "...", "den": "...", "approx": f64}`.
//! Sessions follow the open bidding scheme; the engine answers automatically
//! whenever the phase belongs to the side the human does not play. Every
//! protocol event is logged as one structured line.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use bidchess_core::analytics;
use bidchess_core::board::{Color, PieceKind, Position, Square};
use bidchess_core::json::Exact;
use bidchess_core::session::{self, Action, Choice, GameSession, SessionError};
use bidchess_core::solution::MoveValue;
use bidchess_core::Error;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::tables::TableSet;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> ApiError {
        ApiError { status, message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, message)
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> ApiError {
        let status = match e {
            SessionError::Setup(_) => StatusCode::BAD_REQUEST,
            SessionError::BidOutOfRange { .. } | SessionError::Unaffordable { .. } | SessionError::IllegalMove(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            SessionError::WrongPhase(_) | SessionError::WrongSide { .. } | SessionError::Over => StatusCode::CONFLICT,
        };
        ApiError::new(status, e.to_string())
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> ApiError {
        match e {
            Error::Session(s) => s.into(),
            Error::NotInSpace(_) => ApiError::new(StatusCode::NOT_FOUND, e.to_string()),
            Error::Fen(_) | Error::InvalidPosition(_) | Error::InvalidDims { .. } | Error::SquareOutOfRange(_) | Error::InvalidPieceSet(..) => {
                ApiError::bad_request(e.to_string())
            }
            Error::TerminalPosition | Error::IllegalMove(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        }
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> ApiError {
        ApiError::bad_request(e.body_text())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> ApiError {
        ApiError::bad_request(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

struct SessionEntry {
    session: GameSession,
    table: usize,
}

pub struct AppState {
    tables: TableSet,
    sessions: Mutex<HashMap<String, Arc<Mutex<SessionEntry>>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(tables: TableSet) -> Arc<AppState> {
        Arc::new(AppState { tables, sessions: Mutex::new(HashMap::new()), next_id: AtomicU64::new(1) })
    }

    pub fn tables(&self) -> &TableSet {
        &self.tables
    }

    fn entry(&self, id: &str) -> ApiResult<Arc<Mutex<SessionEntry>>> {
        self.sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session {id:?}")))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/value", get(value))
        .route("/v1/report", get(report))
        .route("/v1/options", get(options))
        .route("/v1/session", post(create_session))
        .route("/v1/session/{id}", get(get_session))
        .route("/v1/session/{id}/bid", post(bid))
        .route("/v1/session/{id}/choice", post(choice))
        .route("/v1/session/{id}/move", post(make_move))
        .with_state(state)
}

#[derive(Deserialize)]
struct FenQuery {
    fen: String,
}

fn parse_fen(q: Result<Query<FenQuery>, QueryRejection>) -> ApiResult<Position> {
    let Query(q) = q?;
    Ok(q.fen.parse::<Position>()?)
}

async fn value(State(st): State<Arc<AppState>>, q: Result<Query<FenQuery>, QueryRejection>) -> ApiResult<Json<Value>> {
    let pos = parse_fen(q)?;
    let v = st.tables.lookup(&pos)?.value(&pos)?;
    Ok(Json(json!({
        "fen": pos.to_fen(),
        "num": v.numer().to_string(),
        "den": v.denom().to_string(),
        "approx": analytics::approx(&v),
    })))
}

async fn report(State(st): State<Arc<AppState>>, q: Result<Query<FenQuery>, QueryRejection>) -> ApiResult<Json<Value>> {
    let pos = parse_fen(q)?;
    let rep = analytics::report(st.tables.lookup(&pos)?, &pos)?;
    Ok(Json(serde_json::to_value(rep).expect("report serialises")))
}

async fn options(State(st): State<Arc<AppState>>, q: Result<Query<FenQuery>, QueryRejection>) -> ApiResult<Json<Value>> {
    let pos = parse_fen(q)?;
    let sol = st.tables.lookup(&pos)?;
    let status = pos.status();
    let list = |c: Color| -> ApiResult<Vec<MoveValue>> {
        if status.is_terminal() {
            Ok(Vec::new())
        } else {
            Ok(sol.options(&pos, c)?)
        }
    };
    Ok(Json(json!({
        "fen": pos.to_fen(),
        "status": format!("{status:?}"),
        "value": Exact(&sol.value(&pos)?),
        "white": list(Color::White)?,
        "black": list(Color::Black)?,
    })))
}

#[derive(Serialize)]
struct SessionView<'a> {
    #[serde(flatten)]
    session: &'a GameSession,
    dims: String,
    engine_side: Color,
}

fn view(e: &SessionEntry) -> Json<Value> {
    let v = SessionView { session: &e.session, dims: e.session.position.dims().to_string(), engine_side: e.session.human_side.opponent() };
    Json(serde_json::to_value(v).expect("session serialises"))
}

fn log_events(s: &GameSession, from: usize) {
    for ev in &s.history[from..] {
        tracing::info!(session = %s.id, event = %serde_json::to_string(ev).unwrap_or_default(), "protocol event");
    }
}

#[derive(Deserialize)]
struct NewSession {
    fen: String,
    chips_total: u64,
    human_side: Color,
    /// White's initial chips; defaults to half of the total, rounded down.
    white_chips: Option<u64>,
}

async fn create_session(State(st): State<Arc<AppState>>, body: Result<Json<NewSession>, JsonRejection>) -> ApiResult<(StatusCode, Json<Value>)> {
    let Json(req) = body?;
    let pos: Position = req.fen.parse()?;
    let table = st.tables.find(&pos).ok_or_else(|| ApiError::from(Error::NotInSpace(pos.to_fen())))?;
    let id = format!("s{}", st.next_id.fetch_add(1, Ordering::Relaxed));
    let white = req.white_chips.unwrap_or(req.chips_total / 2);
    let mut session = GameSession::new(id.clone(), pos, req.chips_total, white, req.human_side)?;
    session::run_engine(st.tables.get(table), &mut session)?;
    log_events(&session, 0);
    let entry = SessionEntry { session, table };
    let out = view(&entry);
    st.sessions.lock().unwrap().insert(id, Arc::new(Mutex::new(entry)));
    Ok((StatusCode::CREATED, out))
}

async fn get_session(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let entry = st.entry(&id)?;
    let e = entry.lock().unwrap();
    Ok(view(&e))
}

/// Applies the human's action, then lets the engine play until it is the
/// human's turn again. Events of one session are serialised by its lock.
fn act(st: &AppState, id: &str, action: Action) -> ApiResult<Json<Value>> {
    let entry = st.entry(id)?;
    let mut e = entry.lock().unwrap();
    let from = e.session.history.len();
    let human = e.session.human_side;
    e.session.apply(human, action)?;
    let sol = st.tables.get(e.table);
    let res = session::run_engine(sol, &mut e.session);
    log_events(&e.session, from);
    res?;
    Ok(view(&e))
}

#[derive(Deserialize)]
struct BidBody {
    amount: i64,
}

async fn bid(State(st): State<Arc<AppState>>, Path(id): Path<String>, body: Result<Json<BidBody>, JsonRejection>) -> ApiResult<Json<Value>> {
    let Json(b) = body?;
    act(&st, &id, Action::Bid { amount: b.amount })
}

#[derive(Deserialize)]
struct ChoiceBody {
    choice: Choice,
}

async fn choice(State(st): State<Arc<AppState>>, Path(id): Path<String>, body: Result<Json<ChoiceBody>, JsonRejection>) -> ApiResult<Json<Value>> {
    let Json(c) = body?;
    act(&st, &id, Action::Choose { choice: c.choice })
}

#[derive(Deserialize)]
struct MoveBody {
    from: Square,
    to: Square,
    promotion: Option<PieceKind>,
}

async fn make_move(State(st): State<Arc<AppState>>, Path(id): Path<String>, body: Result<Json<MoveBody>, JsonRejection>) -> ApiResult<Json<Value>> {
    let Json(m) = body?;
    act(&st, &id, Action::Move { from: m.from, to: m.to, promotion: m.promotion })
}
