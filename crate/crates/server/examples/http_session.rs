//! One participant's session against the API, in process: slider grid,
//! training, both viewings of a batch, and the resulting gate.
//!
//! cargo run -p iisa-server --example http_session

use axum::body::Body;
use axum::http::{Method, Request};
use http_body_util::BodyExt;
use iisa::corpus::{CorpusEntry, CorpusManifest};
use iisa::study::{StudyConfig, StudyStore, TrainingItem};
use iisa::Image;
use iisa_server::{build_state, router, ServerConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &axum::Router, method: Method, uri: &str, body: Option<Value>) -> Value {
    let mut req = Request::builder().method(method).uri(uri).header("authorization", "Bearer p1");
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    serde_json::from_slice(&bytes).unwrap_or(Value::Null)
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let mut entries = Vec::new();
    for i in 0..4u32 {
        let id = format!("img{i}");
        let path = dir.path().join(format!("{id}.png"));
        Image::filled(&id, 40, 30, 3, (i * 60) as u8)?.save_png(&path)?;
        entries.push(CorpusEntry { image_id: id, file_path: path, width: 40, height: 30, source_tag: String::new(), content_tags: vec![] });
    }
    let corpus = CorpusManifest::new(entries)?;
    corpus.write(dir.path().join("corpus.jsonl"))?;
    let training = vec![TrainingItem {
        item_id: "t1".into(),
        image_id: "img0".into(),
        accepted_iis_range: (0.3, 0.6),
        hint_text: "look closer at the texture".into(),
    }];
    let cfg = StudyConfig { batch_size: 4, min_repetition_gap_ms: 0, ..StudyConfig::default() };
    StudyStore::new(dir.path().join("store")).create(&corpus.ids(), training, cfg, 3, 0)?.close()?;
    let state = build_state(&ServerConfig {
        store: dir.path().join("store"),
        corpus: dir.path().join("corpus.jsonl"),
        study: None,
        bind: "127.0.0.1".into(),
        port: 0,
        admin_token: None,
        render_workers: Some(2),
    })?;
    let app = router(state);

    let grid = call(&app, Method::GET, "/api/v1/slider-grid", None).await;
    println!("slider: {} steps from {}", grid["steps"], grid["s_lb"]);
    println!("next: {}", call(&app, Method::GET, "/api/v1/batch/next", None).await);
    let miss = json!({"item_id": "t1", "slider_position": 99});
    println!("training miss: {}", call(&app, Method::POST, "/api/v1/training/opinion", Some(miss)).await);
    let hit = json!({"item_id": "t1", "slider_position": 70});
    println!("training hit: {}", call(&app, Method::POST, "/api/v1/training/opinion", Some(hit)).await);

    loop {
        let next = call(&app, Method::GET, "/api/v1/batch/next", None).await;
        if next["status"] != "assignment" {
            println!("next: {next}");
            break;
        }
        let rep = next["repetition"].as_u64().unwrap();
        for (k, img) in next["remaining"].as_array().unwrap().iter().enumerate() {
            let img = img.as_str().unwrap();
            let rendered = app
                .clone()
                .oneshot(Request::get(format!("/api/v1/image/{img}/render?scale=0.5")).body(Body::empty())?)
                .await?;
            let position = 20 + 20 * img[3..].parse::<u32>()?;
            let body = json!({
                "batch_id": next["batch_id"], "repetition": rep, "image_id": img,
                "slider_position": position, "duration_ms": 900 + 100 * k as u64,
            });
            let out = call(&app, Method::POST, "/api/v1/opinion", Some(body)).await;
            println!("rep {rep} {img} (render {}): scale {:.3} gate {}", rendered.status(), out["opinion"]["scale_value"].as_f64().unwrap_or(f64::NAN), out["gate"]);
        }
    }
    println!("progress: {}", call(&app, Method::GET, "/api/v1/progress", None).await);
    Ok(())
}
