//! Survey ingestion service.
//!
//! Uploads are stored in a directory-per-survey [`Catalog`], analysed in the
//! background by the core pipeline and served back over HTTP. A webhook
//! accepts bot-style updates so a messenger bridge can forward files.

pub mod api;
pub mod catalog;
pub mod config;
pub mod error;
pub mod metadata;
pub mod service;

use std::future::Future;
use std::sync::Arc;

pub use api::router;
pub use catalog::{Catalog, Submission, SurveyFilter, SurveyRecord, SurveyStatus};
pub use config::ServiceConfig;
pub use error::{Result, ServiceError};
pub use metadata::{HeaderPatterns, SurveyMetadata};
pub use service::{ReportBundle, Service};

/// Serves on an already bound listener until `shutdown` resolves.
pub async fn serve_on<F>(
    service: Arc<Service>,
    listener: tokio::net::TcpListener,
    shutdown: F,
) -> Result<()>
where
    F: Future<Output = ()> + Send + 'static,
{
    let resumed = service.resume_pending();
    if resumed > 0 {
        tracing::info!(count = resumed, "resuming interrupted surveys");
    }
    let addr = listener.local_addr().ok();
    tracing::info!(?addr, "listening");
    axum::serve(listener, router(service.clone()))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|e| ServiceError::io("listener", e))?;
    service.wait_idle().await;
    Ok(())
}

/// Binds `config.bind` and serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<()> {
    let bind = config.bind;
    let service = Service::open(config)?;
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .map_err(|e| ServiceError::io(bind.to_string(), e))?;
    serve_on(service, listener, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
