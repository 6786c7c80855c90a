//! Server-side stimulus rendering with a slider-grid-bounded cache.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use iisa::corpus::CorpusManifest;
use iisa::resample::{downscale, Image, ResampleSpec, ScaleFactor};
use iisa::study::SliderGrid;
use thiserror::Error;
use tokio::sync::Semaphore;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("scale below s_lb={0}")]
    BelowLowerBound(f64),
    #[error("scale must be at most 1, got {0}")]
    AboveOne(f64),
    #[error("unknown image {0}")]
    UnknownImage(String),
    #[error("render failed: {0}")]
    Failed(String),
}

type CacheKey = (String, u32, String);

pub struct Renderer {
    corpus: CorpusManifest,
    grid: SliderGrid,
    cache: Mutex<HashMap<CacheKey, Arc<Vec<u8>>>>,
    permits: Arc<Semaphore>,
}

impl Renderer {
    pub fn new(corpus: CorpusManifest, grid: SliderGrid, workers: usize) -> Self {
        Self {
            corpus,
            grid,
            cache: Mutex::new(HashMap::new()),
            permits: Arc::new(Semaphore::new(workers.max(1))),
        }
    }

    pub fn grid(&self) -> SliderGrid {
        self.grid
    }

    pub fn cached_entries(&self) -> usize {
        self.cache.lock().expect("render cache poisoned").len()
    }

    fn check(&self, image_id: &str, scale: f64) -> Result<(), RenderError> {
        if !(scale >= self.grid.s_lb) {
            return Err(RenderError::BelowLowerBound(self.grid.s_lb));
        }
        if scale > 1.0 {
            return Err(RenderError::AboveOne(scale));
        }
        if self.corpus.get(image_id).is_none() {
            return Err(RenderError::UnknownImage(image_id.to_string()));
        }
        Ok(())
    }

    /// PNG bytes of `image_id` downscaled to `scale`, computed without the cache.
    pub fn render_uncached(&self, image_id: &str, scale: f64, spec: &ResampleSpec) -> Result<Vec<u8>, RenderError> {
        self.check(image_id, scale)?;
        let entry = self.corpus.get(image_id).expect("checked");
        let fail = |e: iisa::resample::ResampleError| RenderError::Failed(e.to_string());
        let img = Image::open(&entry.file_path, image_id).map_err(fail)?;
        let s = ScaleFactor::new(scale).map_err(fail)?;
        downscale(&img, s, spec).map_err(fail)?.encode_png().map_err(fail)
    }

    /// Renders on the bounded worker pool. On-grid scales are cached; other
    /// scales are rendered exactly and not stored.
    pub async fn render(self: &Arc<Self>, image_id: &str, scale: f64, spec: ResampleSpec) -> Result<Arc<Vec<u8>>, RenderError> {
        self.check(image_id, scale)?;
        let position = self.grid.exact_position(scale);
        // On-grid requests render the canonical grid value so a key always
        // maps to one byte string.
        let scale = position.map_or(scale, |p| self.grid.scale(p).expect("on grid"));
        let key = position.map(|p| (image_id.to_string(), p, spec.tag()));
        if let Some(k) = &key {
            if let Some(hit) = self.cache.lock().expect("render cache poisoned").get(k) {
                return Ok(hit.clone());
            }
        }
        let _permit = self.permits.acquire().await.map_err(|e| RenderError::Failed(e.to_string()))?;
        let this = self.clone();
        let id = image_id.to_string();
        let bytes = tokio::task::spawn_blocking(move || this.render_uncached(&id, scale, &spec))
            .await
            .map_err(|e| RenderError::Failed(e.to_string()))??;
        let bytes = Arc::new(bytes);
        if let Some(k) = key {
            self.cache
                .lock()
                .expect("render cache poisoned")
                .entry(k)
                .or_insert_with(|| bytes.clone());
        }
        Ok(bytes)
    }
}
