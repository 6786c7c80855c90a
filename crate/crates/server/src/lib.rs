//! HTTP annotation service and command-line front end.

pub mod api;
pub mod cli;
pub mod config;
pub mod render;

use std::net::SocketAddr;

use iisa::corpus::{CorpusError, CorpusManifest};
use iisa::study::{Study, StudyError, StudyStore};
use thiserror::Error;

pub use api::{router, AppState};
pub use config::ServerConfig;
pub use render::Renderer;

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    CorruptStore(String),
    #[error(transparent)]
    Study(#[from] StudyError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

fn recovery_instructions(path: &str, detail: &str) -> String {
    format!(
        "refusing to start: the study store is corrupt ({path}: {detail}).\n\
         To recover:\n\
         \x20 1. stop every process writing to the store and copy the study directory aside;\n\
         \x20 2. truncate events.jsonl after the last line that parses and continues the seq numbering;\n\
         \x20 3. delete snapshot.json if its seq is newer than the last remaining event;\n\
         \x20 4. restart; the state is rebuilt by replaying the log."
    )
}

/// Opens the configured study, mapping log corruption to a refusal with
/// recovery instructions.
pub fn open_study(cfg: &ServerConfig) -> Result<Study, ServerError> {
    let store = StudyStore::new(&cfg.store);
    let id = match &cfg.study {
        Some(id) => id.clone(),
        None => {
            let ids = store.list()?;
            match ids.as_slice() {
                [one] => one.clone(),
                [] => return Err(ServerError::Config(format!("no study in {}", cfg.store.display()))),
                _ => {
                    return Err(ServerError::Config(format!(
                        "store holds {} studies; set `study` in the config",
                        ids.len()
                    )))
                }
            }
        }
    };
    store.open(&id).map_err(|e| match e {
        StudyError::Corrupt { path, detail } => ServerError::CorruptStore(recovery_instructions(&path, &detail)),
        other => other.into(),
    })
}

/// Builds the shared state from a config without binding a socket.
pub fn build_state(cfg: &ServerConfig) -> Result<AppState, ServerError> {
    let study = open_study(cfg)?;
    let corpus = CorpusManifest::read(&cfg.corpus)?;
    let renderer = Renderer::new(corpus, study.config().slider(), cfg.render_workers());
    Ok(AppState::new(study, renderer, cfg.admin_token.clone()))
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        if let Ok(mut s) = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            s.recv().await;
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}

/// Serves until SIGINT or SIGTERM, then flushes and snapshots the study.
pub async fn serve(cfg: ServerConfig) -> Result<(), ServerError> {
    let state = build_state(&cfg)?;
    let addr = format!("{}:{}", cfg.bind, cfg.port);
    let parsed: SocketAddr = addr
        .parse()
        .map_err(|_| ServerError::Config(format!("invalid bind address {addr}")))?;
    let listener = tokio::net::TcpListener::bind(parsed)
        .await
        .map_err(|source| ServerError::Bind { addr: addr.clone(), source })?;
    tracing::info!(%addr, "serving");
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(shutdown_signal())
        .await?;
    let study = state.study.clone();
    tokio::task::spawn_blocking(move || -> Result<(), ServerError> {
        let mut guard = study
            .lock()
            .map_err(|_| ServerError::Config("study lock poisoned".into()))?;
        guard.close()?;
        Ok(())
    })
    .await
    .map_err(|e| ServerError::Config(e.to_string()))??;
    tracing::info!("event log flushed");
    Ok(())
}
