use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};

use factful_core::curation::{candidates_to_jsonl, AnnotatedToken, CandidateFact, Role};
use factful_core::{fixtures, Corpus, Entity, FactStore, FeatureLabels, Task, TaskStep};

const BIN: &str = env!("CARGO_BIN_EXE_factful");

fn factful(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("FACTFUL_FACT_STORE")
        .env_remove("FACTFUL_CORPUS")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn validate_bundled_and_explicit_store() {
    let o = factful(&["validate"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("50 facts, 0 violations"), "{}", stdout(&o));

    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "facts.jsonl", fixtures::FACTS_JSONL);
    let o = factful(&["validate", "--store", &path]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("50 facts"));
}

#[test]
fn validate_fails_on_bad_score() {
    let dir = tempfile::tempdir().unwrap();
    let mut store = fixtures::fact_store();
    store.facts[4].score = 0.05;
    let path = write(dir.path(), "bad.jsonl", &store.to_jsonl());
    let o = factful(&["validate", "--store", &path]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("1 violations"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(factful(&["validate", "--nope"]).status.code(), Some(2));
    assert_eq!(factful(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(factful(&["simulate", "--n", "many"]).status.code(), Some(2));
}

#[test]
fn missing_or_bad_files_exit_1() {
    assert_eq!(factful(&["validate", "--store", "/nonexistent.jsonl"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[policy]\nmax_facts = \"lots\"\n");
    assert_eq!(factful(&["--config", &cfg, "validate"]).status.code(), Some(1));
}

#[test]
fn stats_on_three_fact_store() {
    let dir = tempfile::tempdir().unwrap();
    let mut store = fixtures::fact_store();
    store.facts.truncate(3);
    let words: usize = store.facts.iter().map(|f| f.text.split_whitespace().count()).sum();
    let path = write(dir.path(), "three.jsonl", &store.to_jsonl());
    let o = factful(&["stats", "--store", &path]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("facts:      3"), "{out}");
    assert!(out.contains(&format!("mean words: {:.2}", words as f64 / 3.0)), "{out}");
}

#[test]
fn simulate_single_session_is_deterministic() {
    let a = factful(&["simulate", "--n", "1", "--seed", "7"]);
    let b = factful(&["simulate", "--n", "1", "--seed", "7", "--sequential"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    let out = stdout(&a);
    assert!(out.contains("control") && out.contains("treatment"));
    assert!(out.contains("significance: n/a"));
    assert!(!out.contains("p="));
}

#[test]
fn simulate_ab_table() {
    let o = factful(&["simulate", "--n", "40", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("n=40 per arm"), "{out}");
    assert!(out.contains("mean turns"));
    let j = factful(&["simulate", "--n", "40", "--seed", "3", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&j.stdout).unwrap();
    assert_eq!(v["n_per_arm"], 40);
}

fn toks(pattern: &str) -> Vec<AnnotatedToken> {
    pattern.split_whitespace()
        .map(|t| match t.split_once('/') {
            Some((w, "s")) => AnnotatedToken::new(w, Role::Subject),
            _ => AnnotatedToken::new(t, Role::Other),
        })
        .collect()
}

#[test]
fn curate_writes_a_valid_store() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = Corpus::new(vec![Task {
        id: "cake".into(),
        title: "Chocolate Cake".into(),
        steps: vec![TaskStep {
            index: 0,
            text: "Sift the baking soda.".into(),
            entities: vec![Entity::ingredient("baking soda")],
        }],
    }])
    .unwrap();
    let candidate = |id: &str, text: &str, ann: &str| CandidateFact {
        id: id.into(),
        raw_text: text.into(),
        source_url: format!("https://example.org/{id}"),
        provider: "example.org".into(),
        token_annotations: Some(vec![toks(ann)]),
        embedding: None,
        sentence_embeddings: None,
        annotator_labels: Some(FeatureLabels::all(true)),
        overall_interesting: None,
    };
    let cands = vec![
        candidate(
            "c1",
            "Baking soda can clean burnt pans in a recipe pinch.",
            "baking/s soda/s can clean burnt pans in a recipe pinch",
        ),
        candidate("c2", "Opera houses are loud.", "opera/s houses are loud"),
    ];
    let cpath = write(dir.path(), "cands.jsonl", &candidates_to_jsonl(&cands));
    let kpath = write(dir.path(), "corpus.jsonl", &corpus.to_jsonl());
    let cfg = write(
        dir.path(),
        "c.toml",
        "[curation]\ndomain_lexicon = [\"baking\", \"soda\", \"recipe\", \"pans\"]\nexec = \"sequential\"\n",
    );
    let out = dir.path().join("store.jsonl");
    let dumps = dir.path().join("dumps");
    let o = factful(&[
        "--config",
        &cfg,
        "curate",
        "--candidates",
        &cpath,
        "--corpus",
        &kpath,
        "--out",
        out.to_str().unwrap(),
        "--dump-stages",
        dumps.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("stored 1 facts from 2 candidates"), "{}", stdout(&o));
    let store = FactStore::read(&out).unwrap();
    assert_eq!(store.facts.len(), 1);
    assert!(store.validate().is_valid());
    assert!(std::fs::read_dir(&dumps).unwrap().count() > 0);
}

#[test]
fn chat_reads_stdin() {
    let mut child = Command::new(BIN)
        .arg("chat")
        .env("RUST_LOG", "error")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"find pancakes\nthe first one\nexit\nrate 5\n")
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("Fluffy Pancakes"));
    assert!(out.contains("Goodbye"));
}

struct Served {
    child: Child,
    base: String,
}

impl Drop for Served {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn serve(session_dir: &Path) -> Served {
    let mut child = Command::new(BIN)
        .args(["serve", "--listen", "127.0.0.1:0", "--session-dir"])
        .arg(session_dir)
        .env("RUST_LOG", "warn")
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").expect("listen line").to_string();
    Served {
        child,
        base: format!("http://{addr}"),
    }
}

async fn wait_ready(c: &reqwest::Client, base: &str) {
    for _ in 0..200 {
        if let Ok(r) = c.get(format!("{base}/healthz")).send().await {
            if r.status().is_success() {
                return;
            }
        }
        tokio::time::sleep(std::time::Duration::from_millis(25)).await;
    }
    panic!("service never became ready");
}

async fn say(c: &reqwest::Client, base: &str, id: &str, u: &str) -> serde_json::Value {
    let r = c
        .post(format!("{base}/v1/sessions/{id}/turns"))
        .json(&serde_json::json!({ "utterance": u }))
        .send()
        .await
        .unwrap();
    assert!(r.status().is_success(), "{u}: {}", r.status());
    r.json().await.unwrap()
}

#[tokio::test]
async fn killed_server_resumes_from_session_dir() {
    let script = ["find pancakes", "the first one", "yes", "next", "next", "yes", "next", "rate 5"];
    let dir = tempfile::tempdir().unwrap();
    let c = reqwest::Client::new();

    let mut first = serve(dir.path());
    wait_ready(&c, &first.base).await;
    let r = c.post(format!("{}/v1/sessions", first.base)).send().await.unwrap();
    let id = r.json::<serde_json::Value>().await.unwrap()["session_id"]
        .as_str()
        .unwrap()
        .to_string();
    for u in &script[..4] {
        say(&c, &first.base, &id, u).await;
    }
    first.child.kill().unwrap();
    first.child.wait().unwrap();
    // Simulate a crash in the middle of the next append.
    let mut f = std::fs::OpenOptions::new()
        .append(true)
        .open(dir.path().join(format!("{id}.jsonl")))
        .unwrap();
    f.write_all(b"{\"index\":8,\"speaker\":\"us").unwrap();
    drop(f);

    let second = serve(dir.path());
    wait_ready(&c, &second.base).await;
    let mut texts = Vec::new();
    for u in &script[4..7] {
        texts.push(say(&c, &second.base, &id, u).await["assistant_text"].as_str().unwrap().to_string());
    }

    let engine = factful_core::engine::Engine::new(
        std::sync::Arc::new(fixtures::corpus()),
        std::sync::Arc::new(fixtures::fact_index()),
        Default::default(),
    )
    .unwrap();
    let expected = engine.replay(&id, script[..7].iter().copied()).unwrap();
    let expected_texts: Vec<_> = expected.turn_log[9..].iter().step_by(2).map(|t| t.text.clone()).collect();
    assert_eq!(texts, expected_texts);
    let v: serde_json::Value = c
        .get(format!("{}/v1/sessions/{id}", second.base))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(v["turns"].as_array().unwrap().len(), 14);
}

#[test]
fn serve_exits_1_on_invalid_store() {
    let dir = tempfile::tempdir().unwrap();
    let mut store = fixtures::fact_store();
    store.facts[0].source_url.clear();
    let path = write(dir.path(), "bad.jsonl", &store.to_jsonl());
    let o = Command::new(BIN)
        .args(["serve", "--listen", "127.0.0.1:0", "--session-dir"])
        .arg(dir.path().join("s"))
        .env("FACTFUL_FACT_STORE", &path)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("violation"));
}
