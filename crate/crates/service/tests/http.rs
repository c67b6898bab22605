use std::time::Duration;

use axum::body::{to_bytes, Body};
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use offcut_core::design::{Axis, PlankDesign};
use offcut_core::fixtures::{bookshelf, coffee_table};
use offcut_core::io::{export_svg, load_design, replay_snapshot, save_design, DesignDocument, RunDoc};
use offcut_core::optimizer::OptimizerConfig;
use offcut_core::protocol::{
    EditMode, EditRequest, EditResponse, EditStatus, LockRequest, PathPointDoc, RunState, SessionCreated, SizeLock, StatusDoc,
    SuggestionsDoc,
};
use offcut_service::{router, AppState, ErrorBody};
use serde::de::DeserializeOwned;
use tower::ServiceExt;

struct Reply {
    status: StatusCode,
    content_type: String,
    body: Vec<u8>,
}

impl Reply {
    fn json<T: DeserializeOwned>(&self) -> T {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }
}

async fn call(app: &Router, method: Method, uri: &str, body: Vec<u8>) -> Reply {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json").body(Body::from(body)).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let content_type = res.headers().get("content-type").map(|v| v.to_str().unwrap().to_string()).unwrap_or_default();
    let body = to_bytes(res.into_body(), usize::MAX).await.unwrap().to_vec();
    Reply { status, content_type, body }
}

fn shelf_doc() -> DesignDocument {
    let f = bookshelf();
    DesignDocument::from_problem("bookshelf", 18.0, &f.problem, &f.x)
}

fn quick_config(seed: u64) -> OptimizerConfig {
    OptimizerConfig { seed, generations: 1, keep: 3, improve_iterations: 2, workers: 2, ..Default::default() }
}

async fn create(app: &Router, doc: &DesignDocument) -> String {
    let r = call(app, Method::POST, "/sessions", save_design(doc)).await;
    assert_eq!(r.status, StatusCode::CREATED);
    r.json::<SessionCreated>().id
}

async fn wait_for(app: &Router, id: &str) -> StatusDoc {
    for _ in 0..6000 {
        let st: StatusDoc = call(app, Method::GET, &format!("/sessions/{id}/status"), vec![]).await.json();
        if st.state != RunState::Running {
            return st;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    panic!("optimization did not finish");
}

async fn optimize(app: &Router, id: &str, config: &OptimizerConfig) -> StatusDoc {
    let r = call(app, Method::POST, &format!("/sessions/{id}/optimize"), serde_json::to_vec(config).unwrap()).await;
    assert_eq!(r.status, StatusCode::ACCEPTED, "{}", String::from_utf8_lossy(&r.body));
    wait_for(app, id).await
}

#[tokio::test]
async fn created_session_serves_its_document() {
    let app = router(AppState::default());
    let doc = shelf_doc();
    let id = create(&app, &doc).await;
    let r = call(&app, Method::GET, &format!("/sessions/{id}/design"), vec![]).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.content_type, "application/json");
    assert_eq!(r.body, save_design(&doc));
}

#[tokio::test]
async fn schema_violations_are_unprocessable_with_a_path() {
    let app = router(AppState::default());
    let mut doc = shelf_doc();
    doc.boards[0].width = 0.0;
    let r = call(&app, Method::POST, "/sessions", save_design(&doc)).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json::<ErrorBody>().path.as_deref(), Some("boards[0].width"));

    let mut v: serde_json::Value = serde_json::from_slice(&save_design(&shelf_doc())).unwrap();
    v["material"]["grain"] = serde_json::json!("long");
    let r = call(&app, Method::POST, "/sessions", serde_json::to_vec(&v).unwrap()).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(r.json::<ErrorBody>().path.unwrap().starts_with("material"));
}

#[tokio::test]
async fn unknown_sessions_and_suggestions_are_not_found() {
    let app = router(AppState::default());
    for uri in ["/sessions/nope/design", "/sessions/nope/status", "/sessions/nope/plan.svg", "/sessions/nope/suggestions/0/path/0"] {
        assert_eq!(call(&app, Method::GET, uri, vec![]).await.status, StatusCode::NOT_FOUND, "{uri}");
    }
    let id = create(&app, &shelf_doc()).await;
    let r = call(&app, Method::GET, &format!("/sessions/{id}/suggestions/0/path/0"), vec![]).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    let r = call(&app, Method::POST, &format!("/sessions/{id}/select"), br#"{"k":0}"#.to_vec()).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    let r = call(&app, Method::GET, &format!("/sessions/{id}/suggestions"), vec![]).await;
    assert_eq!(r.status, StatusCode::OK);
    assert!(r.json::<SuggestionsDoc>().suggestions.is_empty());
}

#[tokio::test]
async fn optimize_suggest_select_round_trip() {
    let app = router(AppState::default());
    let doc = shelf_doc();
    let id = create(&app, &doc).await;
    let st = optimize(&app, &id, &quick_config(3)).await;
    assert_eq!(st.state, RunState::Done, "{:?}", st.error);
    assert_eq!((st.generations_done, st.progress), (1, 1.0));

    let sugg: SuggestionsDoc = call(&app, Method::GET, &format!("/sessions/{id}/suggestions"), vec![]).await.json();
    assert!(!sugg.suggestions.is_empty() && sugg.suggestions.len() <= 3);
    let run: RunDoc = call(&app, Method::GET, &format!("/sessions/{id}/run"), vec![]).await.json();
    for s in &sugg.suggestions {
        assert_eq!(s.wastage, run.results[s.result].wastage);
        assert!(s.wastage <= sugg.start_wastage);
    }

    let first: PathPointDoc = call(&app, Method::GET, &format!("/sessions/{id}/suggestions/0/path/0"), vec![]).await.json();
    assert_eq!(first.params.values, doc.values());
    let len = sugg.suggestions[0].path_length;
    let last: PathPointDoc = call(&app, Method::GET, &format!("/sessions/{id}/suggestions/0/path/{}", len - 1), vec![]).await.json();
    assert_eq!(last.layout, sugg.suggestions[0].layout);
    assert_eq!(last.wastage, sugg.suggestions[0].wastage);
    let r = call(&app, Method::GET, &format!("/sessions/{id}/suggestions/0/path/{len}"), vec![]).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    let r = call(&app, Method::GET, &format!("/sessions/{id}/suggestions/7/path/0"), vec![]).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);

    let r = call(&app, Method::POST, &format!("/sessions/{id}/select"), br#"{"k":0}"#.to_vec()).await;
    assert_eq!(r.status, StatusCode::OK);
    let design = call(&app, Method::GET, &format!("/sessions/{id}/design"), vec![]).await;
    let selected = load_design(&design.body).unwrap();
    assert_eq!(selected.values(), last.params.values);

    let svg = call(&app, Method::GET, &format!("/sessions/{id}/plan.svg"), vec![]).await;
    assert_eq!(svg.status, StatusCode::OK);
    assert_eq!(svg.content_type, "image/svg+xml");
    let (problem, _) = selected.to_problem().unwrap();
    let snap = run.results[sugg.suggestions[0].result].path.last().unwrap();
    let replayed = replay_snapshot(&problem, snap, run.settings.raster_res).unwrap();
    let expected = export_svg(&replayed.layout, &replayed.parts, &problem.boards, run.settings.raster_res);
    assert_eq!(String::from_utf8(svg.body).unwrap(), expected[0]);
    let r = call(&app, Method::GET, &format!("/sessions/{id}/plan.svg?board=3"), vec![]).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn locked_sizes_survive_optimization() {
    let app = router(AppState::default());
    let doc = shelf_doc();
    let id = create(&app, &doc).await;
    let lock = LockRequest { sizes: vec![SizeLock { part: "side_left".into(), size: 1, value: Some(700.0) }], parameters: vec![] };
    let r = call(&app, Method::POST, &format!("/sessions/{id}/lock"), serde_json::to_vec(&lock).unwrap()).await;
    assert_eq!(r.status, StatusCode::OK, "{}", String::from_utf8_lossy(&r.body));
    let st = optimize(&app, &id, &quick_config(5)).await;
    assert_eq!(st.state, RunState::Done, "{:?}", st.error);
    let run: RunDoc = call(&app, Method::GET, &format!("/sessions/{id}/run"), vec![]).await.json();
    let var = PlankDesign::length_var(0, Axis::Z);
    for r in &run.results {
        assert_eq!(r.params.values[var], 700.0);
        for snap in &r.path {
            assert_eq!(snap.params[var], 700.0);
        }
    }
}

#[tokio::test]
async fn lock_not_satisfied_by_the_design_is_rejected() {
    let app = router(AppState::default());
    let id = create(&app, &shelf_doc()).await;
    let lock = LockRequest { sizes: vec![SizeLock { part: "top".into(), size: 0, value: Some(300.0) }], parameters: vec![] };
    let r = call(&app, Method::POST, &format!("/sessions/{id}/lock"), serde_json::to_vec(&lock).unwrap()).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let design = call(&app, Method::GET, &format!("/sessions/{id}/design"), vec![]).await;
    assert_eq!(design.body, save_design(&shelf_doc()));
}

#[tokio::test]
async fn edit_modes() {
    let app = router(AppState::default());
    let doc = shelf_doc();
    let id = create(&app, &doc).await;
    let n = doc.parameters.len();
    let right_height = PlankDesign::length_var(1, Axis::Z);

    let mut u = vec![0.0; n];
    u[right_height] = 30.0;
    let r = call(&app, Method::POST, &format!("/sessions/{id}/edit"), serde_json::to_vec(&EditRequest { u: u.clone(), mode: EditMode::Strict }).unwrap()).await;
    assert_eq!(r.status, StatusCode::OK);
    let applied: EditResponse = r.json();
    assert_eq!(applied.status, EditStatus::Applied);
    assert_eq!(applied.params.values[PlankDesign::length_var(0, Axis::Z)], 730.0);

    let lock = serde_json::json!({"parameters": [{"name": "side_left.lz"}]});
    assert_eq!(call(&app, Method::POST, &format!("/sessions/{id}/lock"), serde_json::to_vec(&lock).unwrap()).await.status, StatusCode::OK);
    let r = call(&app, Method::POST, &format!("/sessions/{id}/edit"), serde_json::to_vec(&EditRequest { u: u.clone(), mode: EditMode::Strict }).unwrap()).await;
    assert_eq!(r.status, StatusCode::CONFLICT);

    let r = call(&app, Method::POST, &format!("/sessions/{id}/edit"), serde_json::to_vec(&EditRequest { u, mode: EditMode::Override }).unwrap()).await;
    assert_eq!(r.status, StatusCode::OK);
    let over: EditResponse = r.json();
    assert_eq!(over.status, EditStatus::Overridden);
    let kinds: Vec<_> = over.violated_rows.iter().map(|d| d.kind).collect();
    assert!(kinds.contains(&offcut_core::constraints::ConstraintKind::EqualLength), "{kinds:?}");

    let st = call(&app, Method::POST, &format!("/sessions/{id}/optimize"), vec![]).await;
    assert_eq!(st.status, StatusCode::UNPROCESSABLE_ENTITY);
    let bad = call(&app, Method::POST, &format!("/sessions/{id}/edit"), br#"{"u":[1.0],"mode":"sideways"}"#.to_vec()).await;
    assert_eq!(bad.status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn running_optimization_is_exclusive_and_cancellable() {
    let app = router(AppState::default());
    let f = coffee_table();
    let id = create(&app, &DesignDocument::from_problem("coffee table", 12.0, &f.problem, &f.x)).await;
    let config = OptimizerConfig { generations: 50, workers: 1, ..Default::default() };
    let r = call(&app, Method::POST, &format!("/sessions/{id}/optimize"), serde_json::to_vec(&config).unwrap()).await;
    assert_eq!(r.status, StatusCode::ACCEPTED);
    let again = call(&app, Method::POST, &format!("/sessions/{id}/optimize"), serde_json::to_vec(&config).unwrap()).await;
    assert_eq!(again.status, StatusCode::CONFLICT);
    let st: StatusDoc = call(&app, Method::GET, &format!("/sessions/{id}/status"), vec![]).await.json();
    assert_eq!((st.state, st.generations), (RunState::Running, 50));
    assert!(st.progress < 1.0);

    assert_eq!(call(&app, Method::DELETE, &format!("/sessions/{id}/optimize"), vec![]).await.status, StatusCode::ACCEPTED);
    let st = wait_for(&app, &id).await;
    assert_eq!(st.state, RunState::Cancelled);
    assert_eq!(call(&app, Method::DELETE, &format!("/sessions/{id}/optimize"), vec![]).await.status, StatusCode::CONFLICT);
    assert_eq!(call(&app, Method::GET, &format!("/sessions/{id}/run"), vec![]).await.status, StatusCode::NOT_FOUND);
}
