use std::path::PathBuf;
use std::sync::Arc;

use factful_core::engine::{render_transcript, Engine, EngineConfig, Session, SessionPhase};
use factful_core::fixtures;
use factful_service::api::{router, AppState, CreatedSession, ErrorBody, Limits, SessionView, TurnResponse};
use factful_service::persist::SessionStore;
use reqwest::{Client, StatusCode};
use tokio::task::JoinHandle;

const SCRIPT: &[&str] = &[
    "find pancakes",
    "the first one",
    "yes",
    "next",
    "next",
    "yes",
    "next",
    "next",
    "next",
    "next",
    "yes",
    "next",
];

fn engine() -> Arc<Engine> {
    Arc::new(
        Engine::new(
            Arc::new(fixtures::corpus()),
            Arc::new(fixtures::fact_index()),
            EngineConfig::default(),
        )
        .unwrap(),
    )
}

struct Server {
    base: String,
    state: Arc<AppState>,
    task: JoinHandle<()>,
}

async fn start(store: Option<SessionStore>, ready: bool) -> Server {
    let state = Arc::new(AppState::new(store.clone(), Limits::default()));
    if ready {
        let recovered = match &store {
            Some(s) => {
                let report = s.recover(&engine()).unwrap();
                assert!(report.failures.is_empty(), "{:?}", report.failures);
                report.sessions.into_iter().map(|r| r.session).collect()
            }
            None => Vec::new(),
        };
        state.set_ready(engine(), recovered);
    }
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let app = router(state.clone());
    let task = tokio::spawn(async move {
        axum::serve(listener, app).await.unwrap();
    });
    Server { base, state, task }
}

async fn create(c: &Client, base: &str) -> String {
    let res = c.post(format!("{base}/v1/sessions")).send().await.unwrap();
    assert_eq!(res.status(), StatusCode::CREATED);
    res.json::<CreatedSession>().await.unwrap().session_id
}

async fn say(c: &Client, base: &str, id: &str, utterance: &str) -> reqwest::Response {
    c.post(format!("{base}/v1/sessions/{id}/turns"))
        .json(&serde_json::json!({ "utterance": utterance }))
        .send()
        .await
        .unwrap()
}

async fn turn(c: &Client, base: &str, id: &str, utterance: &str) -> TurnResponse {
    let res = say(c, base, id, utterance).await;
    assert_eq!(res.status(), StatusCode::OK, "{utterance}");
    res.json().await.unwrap()
}

async fn view(c: &Client, base: &str, id: &str) -> SessionView {
    let res = c.get(format!("{base}/v1/sessions/{id}")).send().await.unwrap();
    assert_eq!(res.status(), StatusCode::OK);
    res.json().await.unwrap()
}

fn engine_run(id: &str, script: &[&str]) -> Session {
    engine().replay(id, script.iter().copied()).unwrap()
}

fn golden_prefix(turns: usize) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/c2_execution_facts.txt");
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().take(2 * turns).map(|l| format!("{l}\n")).collect()
}

#[tokio::test]
async fn create_returns_distinct_ids() {
    let s = start(None, true).await;
    let c = Client::new();
    let a = create(&c, &s.base).await;
    let b = create(&c, &s.base).await;
    assert_ne!(a, b);
    assert_eq!(a.len(), 32);
    assert_eq!(s.state.session_count(), 2);
    assert_eq!(view(&c, &s.base, &a).await.phase, SessionPhase::Searching);
}

#[tokio::test]
async fn not_ready_answers_503() {
    let s = start(None, false).await;
    let c = Client::new();
    let res = c.post(format!("{}/v1/sessions", s.base)).send().await.unwrap();
    assert_eq!(res.status(), StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(res.json::<ErrorBody>().await.unwrap().code, "not_ready");
    let health = c.get(format!("{}/healthz", s.base)).send().await.unwrap();
    assert_eq!(health.status(), StatusCode::SERVICE_UNAVAILABLE);

    s.state.set_ready(engine(), Vec::new());
    let health = c.get(format!("{}/healthz", s.base)).send().await.unwrap();
    assert_eq!(health.status(), StatusCode::OK);
    create(&c, &s.base).await;
}

#[tokio::test]
async fn scripted_conversation_matches_engine_and_golden() {
    let s = start(None, true).await;
    let c = Client::new();
    let id = create(&c, &s.base).await;

    let first = turn(&c, &s.base, &id, SCRIPT[0]).await;
    let card = first.display.fact_card.as_ref().expect("search-phase fact");
    assert!(!card.source_url.is_empty() && !card.provider.is_empty());
    assert_eq!(first.display.results.len(), 2);
    assert_eq!(first.policy_trace.len(), 1);
    assert!(first.policy_trace[0].decision.show);

    let mut responses = vec![first];
    for u in &SCRIPT[1..] {
        responses.push(turn(&c, &s.base, &id, u).await);
    }
    // "yes" at a permission prompt delivers a credited fact.
    for (i, u) in SCRIPT.iter().enumerate() {
        if *u == "yes" && i >= 3 {
            let card = responses[i].display.fact_card.as_ref().expect("fact after yes");
            assert!(!card.source_url.is_empty());
        }
    }
    assert!(responses[3].display.fact_card.is_none());

    let v = view(&c, &s.base, &id).await;
    let expected = engine_run(&id, SCRIPT);
    assert_eq!(v.turns, expected.turn_log);
    assert_eq!(v.policy_traces, expected.traces);
    assert_eq!(v.phase, SessionPhase::AwaitingRating);
    assert!(v.outcome.is_none());

    let mut rebuilt = engine().new_session(id.clone());
    rebuilt.turn_log = v.turns.clone();
    assert_eq!(render_transcript(&rebuilt), golden_prefix(SCRIPT.len()));

    for (r, t) in responses.iter().zip(expected.turn_log.iter().skip(1).step_by(2)) {
        assert_eq!(r.assistant_text, t.text);
        assert_eq!(r.turn_index, t.index);
        assert_eq!(Some(r.phase), t.phase);
    }
}

#[tokio::test]
async fn ended_session_has_outcome_and_rejects_turns() {
    let s = start(None, true).await;
    let c = Client::new();
    let id = create(&c, &s.base).await;
    for u in ["find pancakes", "the first one", "stop", "rate 4"] {
        turn(&c, &s.base, &id, u).await;
    }
    let v = view(&c, &s.base, &id).await;
    assert_eq!(v.turns.len(), 8);
    let outcome = v.outcome.expect("outcome once ended");
    assert_eq!(outcome.rating, Some(4));
    assert!(!outcome.completed);

    let res = say(&c, &s.base, &id, "next").await;
    assert_eq!(res.status(), StatusCode::CONFLICT);
    assert_eq!(res.json::<ErrorBody>().await.unwrap().code, "session_ended");
}

#[tokio::test]
async fn request_errors() {
    let s = start(None, true).await;
    let c = Client::new();
    let res = say(&c, &s.base, "nope", "hi").await;
    assert_eq!(res.status(), StatusCode::NOT_FOUND);
    let res = c.get(format!("{}/v1/sessions/nope", s.base)).send().await.unwrap();
    assert_eq!(res.status(), StatusCode::NOT_FOUND);

    let id = create(&c, &s.base).await;
    assert_eq!(say(&c, &s.base, &id, "   ").await.status(), StatusCode::BAD_REQUEST);
    let long = "a".repeat(501);
    assert_eq!(say(&c, &s.base, &id, &long).await.status(), StatusCode::BAD_REQUEST);
    let res = c
        .post(format!("{}/v1/sessions/{id}/turns", s.base))
        .header("content-type", "application/json")
        .body("{\"text\":1}")
        .send()
        .await
        .unwrap();
    assert_eq!(res.status(), StatusCode::BAD_REQUEST);
    let res = c
        .post(format!("{}/v1/sessions/{id}/turns", s.base))
        .header("content-type", "application/json")
        .body(format!("{{\"utterance\":\"{}\"}}", "a".repeat(20_000)))
        .send()
        .await
        .unwrap();
    assert_eq!(res.status(), StatusCode::BAD_REQUEST);
    // None of the rejected requests touched the session.
    assert!(view(&c, &s.base, &id).await.turns.is_empty());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_turns_on_one_session_are_serialized() {
    let s = start(None, true).await;
    let c = Client::new();
    let id = create(&c, &s.base).await;
    let sends = (0..16).map(|_| {
        let (c, base, id) = (c.clone(), s.base.clone(), id.clone());
        tokio::spawn(async move { say(&c, &base, &id, "find pancakes").await.status() })
    });
    let mut ok = 0;
    for h in sends {
        match h.await.unwrap() {
            StatusCode::OK => ok += 1,
            StatusCode::CONFLICT => {}
            other => panic!("unexpected {other}"),
        }
    }
    assert!(ok >= 1);
    let v = view(&c, &s.base, &id).await;
    assert_eq!(v.turns.len(), 2 * ok);
    for (i, t) in v.turns.iter().enumerate() {
        assert_eq!(t.index, i);
    }
}

#[tokio::test]
async fn restart_resumes_sessions_identically() {
    let dir = tempfile::tempdir().unwrap();
    let c = Client::new();
    let s = start(Some(SessionStore::open(dir.path()).unwrap()), true).await;
    let id = create(&c, &s.base).await;
    for u in &SCRIPT[..5] {
        turn(&c, &s.base, &id, u).await;
    }
    s.task.abort();
    drop(s);

    let s = start(Some(SessionStore::open(dir.path()).unwrap()), true).await;
    let mut after = Vec::new();
    for u in &SCRIPT[5..] {
        after.push(turn(&c, &s.base, &id, u).await.assistant_text);
    }
    let expected = engine_run(&id, SCRIPT);
    let expected_after: Vec<_> = expected.turn_log[10..]
        .iter()
        .skip(1)
        .step_by(2)
        .map(|t| t.text.clone())
        .collect();
    assert_eq!(after, expected_after);
    assert_eq!(view(&c, &s.base, &id).await.turns, expected.turn_log);
}
