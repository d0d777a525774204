//! HTTP service over the glyphctl pipeline.
//!
//! | method | path        | body                                  |
//! |--------|-------------|---------------------------------------|
//! | GET    | `/healthz`  |                                       |
//! | GET    | `/fonts`    |                                       |
//! | POST   | `/fonts`    | multipart: `font` file, optional `name` |
//! | POST   | `/bundle`   | JSON, or multipart `request` + `image` |
//! | POST   | `/edit`     | JSON, or multipart `request` + `image` |
//! | POST   | `/evaluate` | JSON                                  |
//!
//! Errors are `{"code", "message", "detail"}` with a 4xx status for bad
//! input, 502 for backend failures and 503 when the job queue is full.

mod api;
mod error;
mod fonts;

use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::extract::DefaultBodyLimit;
use axum::routing::{get, post};
use axum::Router;
use tokio::sync::Semaphore;

use glyphctl::backend::{BackendSettings, GeneratorBackend};
use glyphctl::fontio::Font;
use glyphctl::fontmetric::{build_reference_classifier, MetricError, ReferenceClassifier};

pub use api::{BundleRequest, BundleResponse, EditRequest, EditResponse, EvaluateRequest, EvaluateResponse, LineRequest, QuadInput};
pub use error::ApiError;
pub use fonts::{font_id, FontInfo, FontRegistry};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub backends: BackendSettings,
    /// Jobs running at once.
    pub workers: usize,
    /// Jobs allowed to wait for a worker before requests get 503.
    pub queue_depth: usize,
    pub max_body_bytes: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(2);
        ServiceConfig { backends: BackendSettings::default(), workers, queue_depth: 16, max_body_bytes: 64 << 20 }
    }
}

pub const DEFAULT_PROBE: &str = "HELLO";
const PROBE_TEMPERATURE: f64 = 0.1;
const PROBE_HEIGHT: u32 = 48;

/// Reference classifier over `fonts`, each rendering `probe` (default
/// [`DEFAULT_PROBE`]) on a canvas 32 px wide per character.
pub fn probe_classifier(fonts: &[(String, Arc<Font>)], probe: Option<&str>) -> Result<ReferenceClassifier, MetricError> {
    let probe = probe.unwrap_or(DEFAULT_PROBE);
    let width = (probe.chars().count() as u32 * 32).max(64);
    build_reference_classifier(fonts, probe, (width, PROBE_HEIGHT), PROBE_TEMPERATURE)
}

/// Bounded job queue: `workers` jobs run, `queue_depth` more wait, the
/// rest are refused.
pub(crate) struct JobGate {
    running: Semaphore,
    admitted: AtomicUsize,
    capacity: usize,
}

struct Admission<'a>(&'a AtomicUsize);

impl Drop for Admission<'_> {
    fn drop(&mut self) {
        self.0.fetch_sub(1, Ordering::SeqCst);
    }
}

impl JobGate {
    fn new(workers: usize, queue_depth: usize) -> Self {
        let workers = workers.max(1);
        JobGate { running: Semaphore::new(workers), admitted: AtomicUsize::new(0), capacity: workers + queue_depth }
    }

    pub(crate) async fn run<T: Send + 'static>(&self, job: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
        if self.admitted.fetch_add(1, Ordering::SeqCst) >= self.capacity {
            self.admitted.fetch_sub(1, Ordering::SeqCst);
            return Err(ApiError::busy());
        }
        let _admission = Admission(&self.admitted);
        let _permit = self.running.acquire().await.expect("semaphore is never closed");
        tokio::task::spawn_blocking(job)
            .await
            .map_err(|e| ApiError::new(axum::http::StatusCode::INTERNAL_SERVER_ERROR, "internal_error", format!("job failed: {e}")))
    }
}

#[derive(Clone)]
pub struct AppState {
    pub(crate) config: Arc<ServiceConfig>,
    pub(crate) fonts: Arc<FontRegistry>,
    pub(crate) gate: Arc<JobGate>,
    pub(crate) generator: Arc<dyn GeneratorBackend>,
}

impl AppState {
    pub fn new(config: ServiceConfig, fonts: FontRegistry) -> Self {
        let generator: Arc<dyn GeneratorBackend> = Arc::from(config.backends.generator());
        AppState {
            gate: Arc::new(JobGate::new(config.workers, config.queue_depth)),
            config: Arc::new(config),
            fonts: Arc::new(fonts),
            generator,
        }
    }

    /// Replaces the configured generator, e.g. with a test double.
    pub fn with_generator(mut self, generator: Arc<dyn GeneratorBackend>) -> Self {
        self.generator = generator;
        self
    }

    pub fn fonts(&self) -> &FontRegistry {
        &self.fonts
    }
}

pub fn router(state: AppState) -> Router {
    let limit = state.config.max_body_bytes;
    Router::new()
        .route("/healthz", get(api::healthz))
        .route("/fonts", get(api::list_fonts).post(api::upload_font))
        .route("/bundle", post(api::bundle))
        .route("/edit", post(api::edit))
        .route("/evaluate", post(api::evaluate))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

/// Serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[cfg(test)]
mod tests {
    use super::*;

    #[tokio::test]
    async fn gate_refuses_beyond_capacity() {
        let gate = Arc::new(JobGate::new(1, 1));
        let (tx, rx) = std::sync::mpsc::channel::<()>();
        let rx = Arc::new(std::sync::Mutex::new(rx));
        let mut running = Vec::new();
        for _ in 0..2 {
            let (gate, rx) = (gate.clone(), rx.clone());
            running.push(tokio::spawn(async move { gate.run(move || rx.lock().unwrap().recv().unwrap()).await }));
        }
        while gate.admitted.load(Ordering::SeqCst) < 2 {
            tokio::task::yield_now().await;
        }
        let refused = gate.run(|| ()).await.unwrap_err();
        assert_eq!(refused.code, "busy");
        tx.send(()).unwrap();
        tx.send(()).unwrap();
        for r in running {
            r.await.unwrap().unwrap();
        }
        assert_eq!(gate.admitted.load(Ordering::SeqCst), 0);
        gate.run(|| ()).await.unwrap();
    }
}
