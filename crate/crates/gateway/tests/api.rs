use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use bidchess_core::board::{BoardDims, Position};
use bidchess_core::{PositionSpace, Solution, SpaceOptions};
use bidchess_gateway::api::{router, AppState};
use bidchess_gateway::tables::TableSet;
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

fn solve(dims: BoardDims, set: &str, symmetry: bool, n: u32) -> Solution {
    let space = PositionSpace::for_closure(dims, &[set.parse().unwrap()], SpaceOptions { symmetry }).unwrap();
    let (sol, v) = Solution::solve(space, n).unwrap();
    assert_eq!(v.count, 0);
    assert!(sol.is_certified());
    sol
}

fn state() -> Arc<AppState> {
    static STATE: OnceLock<Arc<AppState>> = OnceLock::new();
    STATE
        .get_or_init(|| {
            let mut t = TableSet::new();
            t.push("KRk-8x8", solve(BoardDims::STANDARD, "KRk", true, 340));
            t.push("KNk-4x4", solve(BoardDims::new(4, 4).unwrap(), "KNk", false, 400));
            AppState::new(t)
        })
        .clone()
}

fn app() -> Router {
    router(state())
}

fn rook() -> Position {
    Position::from_algebraic(BoardDims::STANDARD, &["Kd6", "Rh8"], &["Kd8"]).unwrap()
}

fn small_zugzwang() -> Position {
    Position::from_algebraic(BoardDims::new(4, 4).unwrap(), &["Ka1", "Nd1"], &["Kd4"]).unwrap()
}

fn enc(s: &str) -> String {
    s.bytes()
        .map(|b| match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'.' | b'_' => (b as char).to_string(),
            _ => format!("%{b:02X}"),
        })
        .collect()
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    call(app, "GET", uri, None).await
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    call(app, "POST", uri, Some(body)).await
}

#[tokio::test]
async fn value_lookup_returns_exact_fraction() {
    let app = app();
    let (s, v) = get(&app, &format!("/v1/value?fen={}", enc(&rook().to_fen()))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!((v["num"].as_str(), v["den"].as_str()), (Some("3"), Some("4")));
    assert_eq!(v["approx"].as_f64(), Some(0.75));

    let p = Position::from_algebraic(BoardDims::STANDARD, &["Kd1", "Rd5"], &["Kf6"]).unwrap();
    let (_, v) = get(&app, &format!("/v1/value?fen={}", enc(&p.to_fen()))).await;
    assert_eq!((v["num"].as_str(), v["den"].as_str()), (Some("249"), Some("320")));
}

#[tokio::test]
async fn black_extra_material_is_served_by_colour_flip() {
    let p = Position::from_algebraic(BoardDims::STANDARD, &["Kd1"], &["Kd3", "Rh1"]).unwrap();
    let (s, v) = get(&app(), &format!("/v1/value?fen={}", enc(&p.to_fen()))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!((v["num"].as_str(), v["den"].as_str()), (Some("1"), Some("4")));
}

#[tokio::test]
async fn lookup_errors() {
    let app = app();
    let (s, v) = get(&app, "/v1/value?fen=not-a-fen").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(v["error"].is_string());
    let (s, _) = get(&app, "/v1/value").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let queen = Position::from_algebraic(BoardDims::STANDARD, &["Kd6", "Qh8"], &["Kd8"]).unwrap();
    let (s, _) = get(&app, &format!("/v1/report?fen={}", enc(&queen.to_fen()))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn options_list_every_legal_move_with_successor_value() {
    let p = rook();
    let (s, v) = get(&app(), &format!("/v1/options?fen={}", enc(&p.to_fen()))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["white"].as_array().unwrap().len(), p.white_options().unwrap().len());
    assert_eq!(v["black"].as_array().unwrap().len(), p.black_options().unwrap().len());
    // rook takes king
    assert!(v["white"].as_array().unwrap().iter().any(|m| m["value"]["num"] == "1" && m["value"]["den"] == "1"));
    assert_eq!(v["value"]["den"], "4");
}

#[tokio::test]
async fn report_flags_zugzwang_with_negative_bid() {
    let (s, v) = get(&app(), &format!("/v1/report?fen={}", enc(&small_zugzwang().to_fen()))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["classification"], "Zugzwang");
    assert_eq!((v["value"]["num"].as_str(), v["value"]["den"].as_str()), (Some("31"), Some("48")));
    assert_eq!((v["richman_bid_white"]["num"].as_str(), v["richman_bid_white"]["den"].as_str()), (Some("-1"), Some("96")));
    assert_eq!(v["best_white_moves"].as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn session_protocol_errors() {
    let app = app();
    let (s, v) = post(&app, "/v1/session", json!({"fen": rook().to_fen(), "chips_total": 100, "human_side": "black"})).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(v["phase"], json!({"phase": "awaiting_bid", "bidder": "black"}));
    assert_eq!(v["chips"], json!({"white": 50, "black": 50}));
    let id = v["id"].as_str().unwrap().to_owned();

    let (s, _) = post(&app, &format!("/v1/session/{id}/bid"), json!({"amount": 51})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = post(&app, &format!("/v1/session/{id}/bid"), json!({"amount": -51})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = post(&app, &format!("/v1/session/{id}/move"), json!({"from": "d8", "to": "c8"})).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, _) = post(&app, &format!("/v1/session/{id}/choice"), json!({"choice": "accept"})).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, _) = post(&app, &format!("/v1/session/{id}/bid"), json!({"amount": "ten"})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    // bid 50 and the engine (White) answers, then it is the human's turn again
    let (s, v) = post(&app, &format!("/v1/session/{id}/bid"), json!({"amount": 50})).await;
    assert_eq!(s, StatusCode::OK);
    let h = v["history"].as_array().unwrap();
    assert_eq!(h[0], json!({"event": "bid", "by": "black", "amount": 50}));
    assert_eq!(h[1]["event"], "choice");
    assert_eq!(h[1]["by"], "white");

    let (s, _) = get(&app, "/v1/session/nope").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = post(&app, "/v1/session/nope/bid", json!({"amount": 1})).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = post(&app, "/v1/session", json!({"fen": "junk", "chips_total": 100, "human_side": "black"})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn illegal_move_is_rejected() {
    let app = app();
    // human White, engine Black bids first
    let (_, v) = post(&app, "/v1/session", json!({"fen": rook().to_fen(), "chips_total": 10, "human_side": "white", "white_chips": 9})).await;
    let id = v["id"].as_str().unwrap().to_owned();
    assert_eq!(v["phase"]["phase"], "awaiting_choice");
    let (s, v) = post(&app, &format!("/v1/session/{id}/choice"), json!({"choice": "reject"})).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["phase"], json!({"phase": "awaiting_move", "mover": "white"}));
    let (s, _) = post(&app, &format!("/v1/session/{id}/move"), json!({"from": "h8", "to": "a1"})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, v) = post(&app, &format!("/v1/session/{id}/move"), json!({"from": "h8", "to": "d8"})).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["phase"], json!({"phase": "finished", "winner": "white"}));
    let (s, _) = post(&app, &format!("/v1/session/{id}/bid"), json!({"amount": 0})).await;
    assert_eq!(s, StatusCode::CONFLICT);
}

#[tokio::test]
async fn engine_bids_negative_in_zugzwang() {
    let app = app();
    let fen = small_zugzwang().to_fen();
    let (s, v) = post(&app, "/v1/session", json!({"fen": fen, "chips_total": 1000, "human_side": "white", "white_chips": 646})).await;
    assert_eq!(s, StatusCode::CREATED);
    let first = &v["history"][0];
    assert_eq!(first["event"], "bid");
    assert_eq!(first["by"], "black");
    assert_eq!(first["amount"], -10);
}

/// Random legal human actions through the API until the session ends.
#[tokio::test]
async fn random_sessions_terminate_and_conserve_chips() {
    let app = app();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..20 {
        let human = if k % 2 == 0 { "black" } else { "white" };
        let (_, mut v) = post(&app, "/v1/session", json!({"fen": rook().to_fen(), "chips_total": 100, "human_side": human, "white_chips": 60})).await;
        let id = v["id"].as_str().unwrap().to_owned();
        let mut steps = 0;
        while !matches!(v["phase"]["phase"].as_str(), Some("finished" | "unresolved")) {
            steps += 1;
            assert!(steps < 2000);
            let mine = v["chips"][human].as_i64().unwrap();
            let (uri, body) = match v["phase"]["phase"].as_str().unwrap() {
                "awaiting_bid" => ("bid", json!({"amount": rng.random_range(-mine..=mine)})),
                "awaiting_choice" => {
                    let bid = v["phase"]["bid"].as_i64().unwrap();
                    // the chooser pays on accepting a negative bid or rejecting a positive one
                    let pays = |c: &str| (c == "accept" && bid < 0) || (c == "reject" && bid > 0);
                    let mut c = if rng.random_bool(0.5) { "accept" } else { "reject" };
                    if pays(c) && bid.abs() > mine {
                        c = if c == "accept" { "reject" } else { "accept" };
                    }
                    ("choice", json!({"choice": c}))
                }
                "awaiting_move" => {
                    let pos: Position = v["position"].as_str().unwrap().parse().unwrap();
                    let color = if human == "white" { bidchess_core::board::Color::White } else { bidchess_core::board::Color::Black };
                    let opts = pos.options(color).unwrap();
                    let (m, _) = &opts[rng.random_range(0..opts.len())];
                    ("move", json!({"from": m.from.to_string(), "to": m.to.to_string(), "promotion": m.promotion}))
                }
                p => panic!("unexpected phase {p}"),
            };
            let (s, nv) = post(&app, &format!("/v1/session/{id}/{uri}"), body).await;
            assert_eq!(s, StatusCode::OK, "{nv}");
            assert_eq!(nv["chips"]["white"].as_u64().unwrap() + nv["chips"]["black"].as_u64().unwrap(), 100);
            v = nv;
        }
        let (_, g) = get(&app, &format!("/v1/session/{id}")).await;
        assert_eq!(g["history"], v["history"]);
    }
}
