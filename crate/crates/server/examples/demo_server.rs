//! Creates a small synthetic study under a directory and serves it.
//!
//! cargo run -p iisa-server --example demo_server -- [dir] [port]
//!
//! Then, for instance:
//!   curl -H 'Authorization: Bearer p1' localhost:8080/api/v1/batch/next
//!   curl localhost:8080/api/v1/slider-grid

use iisa::corpus::{CorpusEntry, CorpusManifest};
use iisa::study::{StudyConfig, StudyStore, TrainingItem};
use iisa::Image;
use iisa_server::{serve, ServerConfig};

fn build(dir: &std::path::Path) -> Result<ServerConfig, Box<dyn std::error::Error>> {
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for i in 0..8u32 {
        let id = format!("demo{i}");
        let (w, h) = (320, 240);
        let px: Vec<u8> = (0..w * h * 3).map(|k| ((k / 3 % w) * (i + 1) % 256) as u8).collect();
        let path = dir.join(format!("{id}.png"));
        Image::new(&id, w, h, 3, px)?.save_png(&path)?;
        entries.push(CorpusEntry {
            image_id: id,
            file_path: path,
            width: w,
            height: h,
            source_tag: "demo".into(),
            content_tags: vec![],
        });
    }
    let corpus = CorpusManifest::new(entries)?;
    let manifest = dir.join("corpus.jsonl");
    corpus.write(&manifest)?;
    let store = StudyStore::new(dir.join("store"));
    if store.list()?.is_empty() {
        let training = vec![TrainingItem {
            item_id: "t1".into(),
            image_id: "demo0".into(),
            accepted_iis_range: (0.05, 1.0),
            hint_text: "any answer passes in the demo".into(),
        }];
        let cfg = StudyConfig { batch_size: 4, min_repetition_gap_ms: 0, ..StudyConfig::default() };
        store.create(&corpus.ids(), training, cfg, 1, iisa::study::now_ms())?.close()?;
    }
    Ok(ServerConfig {
        store: store.root().to_path_buf(),
        corpus: manifest,
        study: None,
        bind: "127.0.0.1".into(),
        port: 8080,
        admin_token: Some("admin".into()),
        render_workers: None,
    })
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    tracing_subscriber::fmt().init();
    let mut args = std::env::args().skip(1);
    let dir = std::path::PathBuf::from(args.next().unwrap_or_else(|| "iisa-demo".into()));
    let mut cfg = build(&dir)?;
    if let Some(port) = args.next() {
        cfg.port = port.parse()?;
    }
    println!("serving {} on http://{}:{}", dir.display(), cfg.bind, cfg.port);
    serve(cfg).await?;
    Ok(())
}
