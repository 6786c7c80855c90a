//! In-process HTTP harness over the service router.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use iisa::corpus::{CorpusEntry, CorpusManifest};
use iisa::study::{StudyConfig, StudyStore, TrainingItem};
use iisa::Image;
use iisa_server::{build_state, router, AppState, ServerConfig};
use serde_json::Value;
use tower::ServiceExt;

pub struct Harness {
    pub dir: tempfile::TempDir,
    pub app: Router,
    pub state: AppState,
    pub clock: Arc<AtomicU64>,
    pub config: ServerConfig,
}

pub fn write_corpus(dir: &Path, n: usize, w: u32, h: u32) -> PathBuf {
    let mut entries = Vec::new();
    for i in 0..n {
        let id = format!("img{i:02}");
        let samples: Vec<u8> = (0..w * h * 3).map(|k| ((k as usize * 7 + i * 31) % 256) as u8).collect();
        let path = dir.join(format!("{id}.png"));
        Image::new(&id, w, h, 3, samples).unwrap().save_png(&path).unwrap();
        entries.push(CorpusEntry {
            image_id: id,
            file_path: path,
            width: w,
            height: h,
            source_tag: "synthetic".into(),
            content_tags: vec![],
        });
    }
    let manifest = dir.join("corpus.jsonl");
    CorpusManifest::new(entries).unwrap().write(&manifest).unwrap();
    manifest
}

impl Harness {
    pub fn new(n_images: usize, config: StudyConfig, training: Vec<TrainingItem>, admin: Option<&str>) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let corpus = write_corpus(dir.path(), n_images, 24, 16);
        let store = dir.path().join("store");
        let ids = CorpusManifest::read(&corpus).unwrap().ids();
        let mut study = StudyStore::new(&store).create(&ids, training, config, 42, 0).unwrap();
        study.close().unwrap();
        let cfg = ServerConfig {
            store,
            corpus,
            study: None,
            bind: "127.0.0.1".into(),
            port: 0,
            admin_token: admin.map(str::to_string),
            render_workers: Some(2),
        };
        let mut state = build_state(&cfg).unwrap();
        let clock = Arc::new(AtomicU64::new(1));
        let c = clock.clone();
        state.clock = Arc::new(move || c.load(Ordering::SeqCst));
        Self {
            app: router(state.clone()),
            state,
            dir,
            clock,
            config: cfg,
        }
    }

    pub fn advance(&self, ms: u64) {
        self.clock.fetch_add(ms, Ordering::SeqCst);
    }

    pub async fn raw(&self, method: Method, uri: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Vec<u8>) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(serde_json::to_vec(&b).unwrap())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        (status, bytes)
    }

    pub async fn json(&self, method: Method, uri: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
        let (s, b) = self.raw(method, uri, token, body).await;
        let v = if b.is_empty() { Value::Null } else { serde_json::from_slice(&b).unwrap_or(Value::Null) };
        (s, v)
    }

    pub async fn get(&self, uri: &str, token: Option<&str>) -> (StatusCode, Value) {
        self.json(Method::GET, uri, token, None).await
    }

    pub async fn post(&self, uri: &str, token: &str, body: Value) -> (StatusCode, Value) {
        self.json(Method::POST, uri, Some(token), Some(body)).await
    }

    /// Completes the participant's current assignment, answering each image
    /// with `answer(image_id, repetition)` as a slider position.
    pub async fn annotate_next(&self, token: &str, answer: &dyn Fn(&str, u8) -> u32) -> Option<(u32, u8, Value)> {
        let (s, next) = self.get("/api/v1/batch/next", Some(token)).await;
        assert_eq!(s, StatusCode::OK, "{next}");
        if next["status"] != "assignment" {
            return None;
        }
        let batch = next["batch_id"].as_u64().unwrap() as u32;
        let rep = next["repetition"].as_u64().unwrap() as u8;
        let mut last = Value::Null;
        for img in next["remaining"].as_array().unwrap() {
            let img = img.as_str().unwrap();
            let (s, body) = self
                .post(
                    "/api/v1/opinion",
                    token,
                    serde_json::json!({
                        "batch_id": batch,
                        "repetition": rep,
                        "image_id": img,
                        "slider_position": answer(img, rep),
                        "duration_ms": 1200,
                        "request_token": format!("{token}-{batch}-{rep}-{img}-{}", next["generation"]),
                    }),
                )
                .await;
            assert_eq!(s, StatusCode::OK, "{body}");
            last = body;
        }
        Some((batch, rep, last))
    }
}
