use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use chrono::Utc;
use gardentrack_core::behaviour::{cluster_hotspots, Hotspot, StopEvent};
use gardentrack_core::pipeline::{analyze_fixes, parse_text, SurveyAnalysis};
use gardentrack_core::report::{write_bundle, REPORT_JSON};
use gardentrack_core::track::{load_polyline, Polyline};
use gardentrack_core::TransverseMercator;
use serde::Serialize;
use tokio::sync::{Notify, Semaphore};

use crate::catalog::{
    Catalog, Submission, SurveyFilter, SurveyRecord, SurveyStatus, REPORT_DIR, REPORT_OLD,
    REPORT_PARTIAL,
};
use crate::config::ServiceConfig;
use crate::error::{Result, ServiceError};
use crate::metadata::{HeaderExtractor, SurveyMetadata};

/// Inputs shared read-only by every processing job.
struct PipelineContext {
    config: gardentrack_core::pipeline::PipelineConfig,
    polyline: Option<Polyline<f64>>,
    tm: TransverseMercator<f64>,
}

/// Latest analysis of one survey plus the bundle file names.
#[derive(Debug, Clone, Serialize)]
pub struct ReportBundle {
    pub record: SurveyRecord,
    pub files: Vec<String>,
    pub analysis: SurveyAnalysis,
}

pub struct Service {
    config: ServiceConfig,
    catalog: Arc<Catalog>,
    headers: HeaderExtractor,
    ctx: Arc<PipelineContext>,
    workers: Arc<Semaphore>,
    /// One lock per survey so a survey never runs two jobs at once.
    job_locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
    pending: AtomicUsize,
    idle: Notify,
}

impl Service {
    /// Validates the config and opens the catalog. Call [`Service::resume_pending`]
    /// from inside a runtime to pick up work interrupted by a restart.
    pub fn open(config: ServiceConfig) -> Result<Arc<Self>> {
        config.validate()?;
        let headers = config.headers.compile()?;
        let tm = config.pipeline.projection()?;
        let polyline = match &config.polyline {
            Some(p) => Some(load_polyline(p, &tm).map_err(gardentrack_core::Error::from)?),
            None => None,
        };
        let catalog = Arc::new(Catalog::open(&config.catalog_root)?);
        Ok(Arc::new(Self {
            workers: Arc::new(Semaphore::new(config.worker_budget)),
            ctx: Arc::new(PipelineContext {
                config: config.pipeline.clone(),
                polyline,
                tm,
            }),
            config,
            catalog,
            headers,
            job_locks: Mutex::new(HashMap::new()),
            pending: AtomicUsize::new(0),
            idle: Notify::new(),
        }))
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn projection(&self) -> &TransverseMercator<f64> {
        &self.ctx.tm
    }

    /// Stores an upload and queues it for processing. Known content returns
    /// the existing record and queues nothing.
    pub async fn submit_survey(
        self: &Arc<Self>,
        bytes: Vec<u8>,
        user_handle: &str,
        declared: SurveyMetadata,
    ) -> Result<Submission> {
        if user_handle.trim().is_empty() {
            return Err(ServiceError::BadRequest("user_handle is required".into()));
        }
        if bytes.is_empty() {
            return Err(ServiceError::UnreadableFile("empty upload".into()));
        }
        let text = std::str::from_utf8(&bytes)
            .map_err(|e| ServiceError::UnreadableFile(format!("not UTF-8 text: {e}")))?;
        let header = self.headers.extract(text);
        let (metadata, conflicts) = SurveyMetadata::merge(&declared, &header);
        for c in &conflicts {
            tracing::warn!(
                field = %c.field,
                declared = %c.declared,
                header = %c.header,
                "declared metadata overrides the file header"
            );
        }
        let catalog = self.catalog.clone();
        let user = user_handle.trim().to_string();
        let submission = tokio::task::spawn_blocking(move || {
            catalog.insert(&bytes, &user, metadata, conflicts, Utc::now())
        })
        .await
        .expect("catalog insert task")?;
        match &submission {
            Submission::Created(r) => {
                tracing::info!(survey_id = %r.survey_id, user = %r.user_handle, "survey received");
                self.enqueue(&r.survey_id);
            }
            Submission::Duplicate(r) => {
                tracing::info!(survey_id = %r.survey_id, "duplicate upload");
            }
        }
        Ok(submission)
    }

    /// Starts processing in the background.
    pub fn enqueue(self: &Arc<Self>, id: &str) {
        self.pending.fetch_add(1, Ordering::SeqCst);
        let this = self.clone();
        let id = id.to_string();
        tokio::spawn(async move {
            if let Err(e) = this.process_survey(&id).await {
                tracing::error!(survey_id = %id, error = %e, "processing could not record its outcome");
            }
            if this.pending.fetch_sub(1, Ordering::SeqCst) == 1 {
                this.idle.notify_waiters();
            }
        });
    }

    /// Queues every survey left received or parsed by an earlier run.
    pub fn resume_pending(self: &Arc<Self>) -> usize {
        let pending: Vec<_> = self
            .catalog
            .list(&SurveyFilter::default())
            .into_iter()
            .filter(|r| r.status.is_pending())
            .collect();
        for r in &pending {
            self.enqueue(&r.survey_id);
        }
        pending.len()
    }

    /// Resolves once no queued job remains.
    pub async fn wait_idle(&self) {
        loop {
            let notified = self.idle.notified();
            if self.pending.load(Ordering::SeqCst) == 0 {
                return;
            }
            notified.await;
        }
    }

    /// Runs the pipeline for one survey within the worker budget. Analysis
    /// failures end up in the record status, not in the return value.
    pub async fn process_survey(&self, id: &str) -> Result<SurveyRecord> {
        let lock = self
            .job_locks
            .lock()
            .expect("job lock map")
            .entry(id.to_string())
            .or_default()
            .clone();
        let _job = lock.lock().await;
        let _permit = self.workers.acquire().await.expect("semaphore open");
        let catalog = self.catalog.clone();
        let ctx = self.ctx.clone();
        let id = id.to_string();
        tokio::task::spawn_blocking(move || run_pipeline(&catalog, &ctx, &id))
            .await
            .expect("pipeline task")
    }

    pub fn get_survey(&self, id: &str) -> Result<SurveyRecord> {
        self.catalog.get(id)
    }

    pub fn list_surveys(&self, filter: &SurveyFilter) -> Vec<SurveyRecord> {
        self.catalog.list(filter)
    }

    pub fn get_report(&self, id: &str) -> Result<ReportBundle> {
        let record = self.catalog.get(id)?;
        if record.status != SurveyStatus::Analyzed {
            return Err(ServiceError::ReportNotReady {
                id: id.to_string(),
                status: record.status.to_string(),
            });
        }
        let analysis = self.read_analysis(id)?;
        let files = record
            .report_paths
            .iter()
            .filter_map(|p| Path::new(p).file_name())
            .map(|n| n.to_string_lossy().into_owned())
            .collect();
        Ok(ReportBundle {
            record,
            files,
            analysis,
        })
    }

    /// Raw bytes of one file of an analyzed survey's bundle.
    pub fn report_file(&self, id: &str, name: &str) -> Result<Vec<u8>> {
        let bundle = self.get_report(id)?;
        if !bundle.files.iter().any(|f| f == name) {
            return Err(ServiceError::UnknownSurvey(format!("{id}/{name}")));
        }
        let path = self.catalog.report_dir(id).join(name);
        fs::read(&path).map_err(|e| ServiceError::io(path, e))
    }

    fn read_analysis(&self, id: &str) -> Result<SurveyAnalysis> {
        let path = self.catalog.report_dir(id).join(REPORT_JSON);
        let bytes = fs::read(&path).map_err(|e| ServiceError::io(&path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| ServiceError::Corrupt {
            path,
            reason: e.to_string(),
        })
    }

    /// Clusters the stop events of every analyzed survey matching `filter`.
    pub async fn cluster_all(
        self: &Arc<Self>,
        filter: &SurveyFilter,
        merge_radius_m: f64,
    ) -> Result<Vec<Hotspot<f64>>> {
        if !(merge_radius_m > 0.0 && merge_radius_m.is_finite()) {
            return Err(ServiceError::BadRequest("merge_radius_m must be > 0".into()));
        }
        let analyzed: Vec<_> = self
            .catalog
            .list(filter)
            .into_iter()
            .filter(|r| r.status == SurveyStatus::Analyzed)
            .collect();
        if analyzed.is_empty() {
            return Err(ServiceError::NoAnalyzedSurveys);
        }
        let this = self.clone();
        tokio::task::spawn_blocking(move || {
            let mut events: Vec<StopEvent<f64>> = Vec::new();
            for r in &analyzed {
                events.extend(this.read_analysis(&r.survey_id)?.stops);
            }
            Ok(cluster_hotspots(&events, merge_radius_m))
        })
        .await
        .expect("cluster task")
    }
}

fn failure_reason(e: &gardentrack_core::Error) -> String {
    format!("{}: {e}", e.kind())
}

fn run_pipeline(catalog: &Catalog, ctx: &PipelineContext, id: &str) -> Result<SurveyRecord> {
    let record = catalog.get(id)?;
    if matches!(record.status, SurveyStatus::Failed { .. }) {
        return Ok(record);
    }
    let source = catalog.source_path(id);
    let bytes = match fs::read(&source) {
        Ok(b) => b,
        Err(e) => {
            return catalog.advance(
                id,
                SurveyStatus::Failed {
                    reason: format!("Io: {}: {e}", source.display()),
                },
            )
        }
    };
    let text = String::from_utf8_lossy(&bytes);
    let (fixes, parse) = match parse_text(&text, &ctx.config) {
        Ok(v) => v,
        Err(e) => {
            tracing::warn!(survey_id = %id, error = %e, "survey failed to parse");
            return catalog.advance(id, SurveyStatus::Failed { reason: failure_reason(&e) });
        }
    };
    if record.status == SurveyStatus::Received {
        let first = parse.first_timestamp;
        catalog.update(id, |r| {
            r.status = SurveyStatus::Parsed;
            // start time falls back to the first fix
            if r.start_time.is_none() {
                r.start_time = first;
            }
            Ok(())
        })?;
    }
    let analysis = match analyze_fixes(&fixes, parse, ctx.polyline.as_ref(), &ctx.config, id) {
        Ok(a) => a,
        Err(e) => {
            tracing::warn!(survey_id = %id, error = %e, "survey analysis failed");
            return catalog.advance(id, SurveyStatus::Failed { reason: failure_reason(&e) });
        }
    };
    let files = match publish_report(catalog, ctx, id, &analysis) {
        Ok(f) => f,
        Err(e) => {
            return catalog.advance(
                id,
                SurveyStatus::Failed {
                    reason: format!("{}: {e}", e.kind()),
                },
            )
        }
    };
    let record = catalog.update(id, |r| {
        r.status = SurveyStatus::Analyzed;
        r.report_paths = files;
        Ok(())
    })?;
    tracing::info!(survey_id = %id, stops = analysis.stops.len(), "survey analyzed");
    Ok(record)
}

/// Writes the bundle beside the survey and swaps it in by directory rename.
fn publish_report(
    catalog: &Catalog,
    ctx: &PipelineContext,
    id: &str,
    analysis: &SurveyAnalysis,
) -> Result<Vec<String>> {
    let dir = catalog.survey_dir(id);
    let partial = dir.join(REPORT_PARTIAL);
    let old = dir.join(REPORT_OLD);
    let live = dir.join(REPORT_DIR);
    for p in [&partial, &old] {
        if p.exists() {
            fs::remove_dir_all(p).map_err(|e| ServiceError::io(p, e))?;
        }
    }
    let written = write_bundle(&partial, analysis, &ctx.tm)?;
    if live.exists() {
        fs::rename(&live, &old).map_err(|e| ServiceError::io(&live, e))?;
    }
    fs::rename(&partial, &live).map_err(|e| ServiceError::io(&live, e))?;
    if old.exists() {
        let _ = fs::remove_dir_all(&old);
    }
    Ok(written
        .iter()
        .map(|p| format!("{REPORT_DIR}/{}", p.display()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use gardentrack_core::simulate::{emit_nmea, simulate_survey, ErrorModel, Scenario};

    fn service(dir: &Path) -> Arc<Service> {
        Service::open(ServiceConfig {
            catalog_root: dir.to_path_buf(),
            ..Default::default()
        })
        .unwrap()
    }

    fn survey(seed: u64) -> Vec<u8> {
        let sc = Scenario::field_protocol();
        let sim = simulate_survey(&sc, &ErrorModel { seed, ..Default::default() }).unwrap();
        emit_nmea(&sim.fixes, "Xiaomi - Redmi Note 8T", sc.start).into_bytes()
    }

    #[tokio::test]
    async fn submit_process_report() {
        let dir = tempfile::tempdir().unwrap();
        let svc = service(dir.path());
        let sub = svc.submit_survey(survey(1), "alice", SurveyMetadata::default()).await.unwrap();
        let id = sub.record().survey_id.clone();
        assert_eq!(sub.record().device_model.as_deref(), Some("Xiaomi - Redmi Note 8T"));
        assert_eq!(sub.record().start_time.unwrap().to_rfc3339(), "2021-06-15T09:00:00+00:00");
        svc.wait_idle().await;
        let bundle = svc.get_report(&id).unwrap();
        assert_eq!(bundle.record.status, SurveyStatus::Analyzed);
        assert_eq!(bundle.analysis.stops.len(), 4);
        // no polyline configured
        assert!(bundle.analysis.accuracy.available().is_none());
        assert!(bundle.files.contains(&"stops.geojson".to_string()));
    }

    #[tokio::test]
    async fn empty_and_binary_uploads_are_unreadable() {
        let dir = tempfile::tempdir().unwrap();
        let svc = service(dir.path());
        let e = svc.submit_survey(vec![], "a", SurveyMetadata::default()).await.unwrap_err();
        assert_eq!(e.kind(), "UnreadableFile");
        let e = svc.submit_survey(vec![0xff, 0xfe], "a", SurveyMetadata::default()).await.unwrap_err();
        assert_eq!(e.kind(), "UnreadableFile");
        let e = svc.submit_survey(b"x".to_vec(), " ", SurveyMetadata::default()).await.unwrap_err();
        assert_eq!(e.kind(), "BadRequest");
        assert!(svc.catalog().is_empty());
    }

    #[tokio::test]
    async fn zero_fixes_fails_with_reason() {
        let dir = tempfile::tempdir().unwrap();
        let svc = service(dir.path());
        let sub = svc
            .submit_survey(b"# device_model: x\n$GPTXT,hello*00\n".to_vec(), "a", SurveyMetadata::default())
            .await
            .unwrap();
        svc.wait_idle().await;
        let r = svc.get_survey(&sub.record().survey_id).unwrap();
        match r.status {
            SurveyStatus::Failed { reason } => assert!(reason.starts_with("EmptyStream"), "{reason}"),
            s => panic!("{s}"),
        }
        let e = svc.get_report(&r.survey_id).unwrap_err();
        assert_eq!(e.kind(), "ReportNotReady");
    }

    #[tokio::test]
    async fn reprocessing_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let svc = service(dir.path());
        let id = svc
            .submit_survey(survey(2), "a", SurveyMetadata::default())
            .await
            .unwrap()
            .record()
            .survey_id
            .clone();
        svc.wait_idle().await;
        let first = svc.report_file(&id, "report.json").unwrap();
        let stops = svc.report_file(&id, "stops.geojson").unwrap();
        let r = svc.process_survey(&id).await.unwrap();
        assert_eq!(r.status, SurveyStatus::Analyzed);
        assert_eq!(svc.report_file(&id, "report.json").unwrap(), first);
        assert_eq!(svc.report_file(&id, "stops.geojson").unwrap(), stops);
    }

    #[tokio::test]
    async fn interrupted_work_resumes_after_restart() {
        let dir = tempfile::tempdir().unwrap();
        let id = {
            let cat = Catalog::open(dir.path()).unwrap();
            let sub = cat
                .insert(&survey(3), "a", SurveyMetadata::default(), vec![], Utc::now())
                .unwrap();
            sub.record().survey_id.clone()
        };
        let svc = service(dir.path());
        assert_eq!(svc.resume_pending(), 1);
        svc.wait_idle().await;
        assert_eq!(svc.get_survey(&id).unwrap().status, SurveyStatus::Analyzed);
    }

    #[tokio::test]
    async fn clustering_needs_analyzed_surveys() {
        let dir = tempfile::tempdir().unwrap();
        let svc = service(dir.path());
        let e = svc.cluster_all(&SurveyFilter::default(), 10.0).await.unwrap_err();
        assert_eq!(e.kind(), "NoAnalyzedSurveys");
        svc.submit_survey(survey(4), "a", SurveyMetadata::default()).await.unwrap();
        svc.wait_idle().await;
        let hs = svc.cluster_all(&SurveyFilter::default(), 10.0).await.unwrap();
        let bundle = svc.list_surveys(&SurveyFilter::default());
        let analysis = svc.get_report(&bundle[0].survey_id).unwrap().analysis;
        // lead and tail statics share a hotspot
        assert_eq!(hs.len(), analysis.stops.len() - 1);
        let none = SurveyFilter {
            user: Some("nobody".into()),
            ..Default::default()
        };
        let e = svc.cluster_all(&none, 10.0).await.unwrap_err();
        assert_eq!(e.kind(), "NoAnalyzedSurveys");
    }
}
