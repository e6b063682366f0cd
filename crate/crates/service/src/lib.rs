//! Conversation service and command-line front end.

pub mod api;
pub mod cli;
pub mod config;
pub mod persist;

use std::future::Future;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use factful_core::engine::{Engine, EngineConfig, EngineError};
use factful_core::policy::FactIndex;
use factful_core::store::FormatError;
use factful_core::{fixtures, Corpus, FactStore};
use thiserror::Error;
use tokio::net::TcpListener;

use crate::api::{AppState, Limits};
use crate::config::AppConfig;
use crate::persist::{PersistError, SessionStore};

#[derive(Debug, Error)]
pub enum StartupError {
    #[error("fact store: {0}")]
    Store(FormatError),
    #[error("fact store {path} has {count} violation(s); first: {first}")]
    InvalidStore {
        path: String,
        count: usize,
        first: String,
    },
    #[error("corpus: {0}")]
    Corpus(FormatError),
    #[error("engine: {0}")]
    Engine(#[from] EngineError),
    #[error("session dir: {0}")]
    Persist(#[from] PersistError),
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
}

/// Reads the configured fact store, falling back to the bundled sample.
pub fn load_fact_store(path: Option<&Path>) -> Result<(FactStore, String), FormatError> {
    match path {
        Some(p) => Ok((FactStore::read(p)?, p.display().to_string())),
        None => {
            tracing::warn!("no fact store configured; using the bundled sample store");
            Ok((fixtures::fact_store(), "<bundled>".into()))
        }
    }
}

pub fn load_corpus(path: Option<&Path>) -> Result<Corpus, FormatError> {
    match path {
        Some(p) => Corpus::read(p),
        None => {
            tracing::warn!("no corpus configured; using the bundled sample corpus");
            Ok(fixtures::corpus())
        }
    }
}

/// Loads and validates both data files and builds the engine.
pub fn load_engine(config: &AppConfig) -> Result<Engine, StartupError> {
    let (store, origin) =
        load_fact_store(config.service.fact_store_path.as_deref()).map_err(StartupError::Store)?;
    let report = store.validate();
    if let Some(first) = report.violations.first() {
        return Err(StartupError::InvalidStore {
            path: origin,
            count: report.violations.len(),
            first: first.to_string(),
        });
    }
    let corpus = load_corpus(config.service.corpus_path.as_deref()).map_err(StartupError::Corpus)?;
    let engine = Engine::new(
        Arc::new(corpus),
        Arc::new(FactIndex::new(store.facts)),
        EngineConfig {
            policy: config.policy,
            facts_enabled: config.service.facts_enabled,
            ..EngineConfig::default()
        },
    )?;
    Ok(engine)
}

pub fn limits(config: &AppConfig) -> Limits {
    Limits {
        max_body_bytes: config.service.max_body_bytes,
        max_utterance_chars: config.service.max_utterance_chars,
    }
}

/// Loads the engine and recovers persisted sessions, then marks `state`
/// ready. Sessions that cannot be recovered are logged and left on disk.
pub fn prepare(config: &AppConfig, state: &AppState, store: Option<&SessionStore>) -> Result<(), StartupError> {
    let engine = load_engine(config)?;
    let mut sessions = Vec::new();
    if let Some(store) = store {
        let report = store.recover(&engine)?;
        for failure in &report.failures {
            tracing::error!("session not recovered: {failure}");
        }
        for r in report.sessions {
            if r.repaired {
                tracing::warn!(session = %r.session.id, "discarded a partially written turn");
            }
            sessions.push(r.session);
        }
        tracing::info!(recovered = sessions.len(), dir = %store.dir().display(), "session log loaded");
    }
    state.set_ready(Arc::new(engine), sessions);
    Ok(())
}

/// Binds, starts answering (503 until ready), loads everything, then serves
/// until `shutdown` resolves. `on_bound` sees the actual listen address.
pub async fn serve(
    config: AppConfig,
    on_bound: impl FnOnce(SocketAddr),
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), StartupError> {
    let listener = TcpListener::bind(&config.service.listen)
        .await
        .map_err(|source| StartupError::Bind {
            addr: config.service.listen.clone(),
            source,
        })?;
    let addr = listener.local_addr().map_err(|source| StartupError::Bind {
        addr: config.service.listen.clone(),
        source,
    })?;
    let store = SessionStore::open(&config.service.session_dir)?;
    let state = Arc::new(AppState::new(Some(store.clone()), limits(&config)));
    let app = api::router(state.clone());
    let server = tokio::spawn(async move {
        axum::serve(listener, app).with_graceful_shutdown(shutdown).await
    });
    tracing::info!(%addr, "listening");
    on_bound(addr);

    let ready = {
        let state = state.clone();
        tokio::task::spawn_blocking(move || prepare(&config, &state, Some(&store)))
            .await
            .expect("startup task panicked")
    };
    if let Err(e) = ready {
        server.abort();
        return Err(e);
    }
    tracing::info!("ready");
    match server.await {
        Ok(Ok(())) => Ok(()),
        Ok(Err(source)) => Err(StartupError::Bind {
            addr: addr.to_string(),
            source,
        }),
        Err(_) => Ok(()),
    }
}
