use std::collections::BTreeMap;
use std::path::Path;

use geojson::FeatureCollection;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::feature_collection;
use super::report::{
    emit_accuracy_report, summary_csv, summary_text, track_miles, AccuracyReport, ConservationAudit, DatasetSummary,
    NOMINAL_CAPTURE_SPACING_FT,
};
use super::store::{write_metadata_sidecar, write_text, DatasetStore};
use super::{ingest_track, nominal_miles, Backend, DatasetConfig, PhotoCapture, PipelineConfig, PipelineError};
use crate::cluster::{cluster_observations, ClusteringOutcome, ObjectEstimate};
use crate::detector::{bbox_to_bearing, estimate_range, Detector, HttpDetector, MockDetector};
use crate::imaging::{crop_functional, slice_cardinals, CardinalSlice, Photosphere};
use crate::triangulate::BearingObservation;

/// Bounded worker pool for per-capture work.
pub struct Workers(rayon::ThreadPool);

impl Workers {
    /// `jobs == 0` uses every core.
    pub fn new(jobs: usize) -> Self {
        Self(
            rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .expect("thread pool"),
        )
    }

    fn map<T: Sync, R: Send>(&self, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
        self.0.install(|| items.par_iter().map(f).collect())
    }
}

fn store_for(cfg: &PipelineConfig, ds: &DatasetConfig) -> DatasetStore {
    DatasetStore::new(cfg.dataset_dir(&ds.id))
}

/// Parses the track and caches it as `output/captures.json`.
pub fn stage_ingest(cfg: &PipelineConfig, ds: &DatasetConfig) -> Result<Vec<PhotoCapture>, PipelineError> {
    let captures = ingest_track(&cfg.track_path(ds), &ds.id, &cfg.columns, ds.longitude_convention)?;
    let store = store_for(cfg, ds);
    store.ensure()?;
    store.write_json(&store.output().join("captures.json"), &captures)?;
    log::info!("{}: ingested {} captures", ds.id, captures.len());
    Ok(captures)
}

/// Cached captures when present, otherwise a fresh ingest.
pub fn load_captures(cfg: &PipelineConfig, ds: &DatasetConfig) -> Result<Vec<PhotoCapture>, PipelineError> {
    let store = store_for(cfg, ds);
    let cached = store.output().join("captures.json");
    if cached.is_file() {
        store.read_json(&cached)
    } else {
        stage_ingest(cfg, ds)
    }
}

pub fn build_detector(cfg: &PipelineConfig, ds: &DatasetConfig) -> Result<Box<dyn Detector>, PipelineError> {
    Ok(match cfg.detection.backend {
        Backend::Mock => {
            let path = cfg.scene_path(ds);
            Box::new(MockDetector::from_file(&path, cfg.imaging.clone()).map_err(|e| PipelineError::Io {
                path: path.clone(),
                reason: e.to_string(),
            })?)
        }
        Backend::Http => Box::new(HttpDetector::new(cfg.detection.http.clone())?),
    })
}

fn slices_for(
    cfg: &PipelineConfig,
    store: &DatasetStore,
    capture: &PhotoCapture,
) -> Result<Vec<CardinalSlice>, PipelineError> {
    let photo = match store.load_photosphere(capture)? {
        Some(p) => p,
        // mock detections come from ground truth, so any raster will do
        None if cfg.detection.backend == Backend::Mock => {
            Photosphere::placeholder(&capture.image_id, &capture.capture_id, &cfg.imaging)
        }
        None => {
            return Err(PipelineError::Io {
                path: store.photospheres().join(&capture.image_id),
                reason: "photosphere not found".into(),
            })
        }
    };
    let err = |e: crate::imaging::ImagingError| PipelineError::Io {
        path: store.photospheres().join(&capture.image_id),
        reason: e.to_string(),
    };
    let band = crop_functional(&photo, &cfg.imaging).map_err(err)?;
    slice_cardinals(&band, &capture.image_id, &capture.capture_id, capture.heading, &cfg.imaging).map_err(err)
}

/// Writes every cardinal raster; returns (written, failed captures).
pub fn stage_slice(cfg: &PipelineConfig, ds: &DatasetConfig, workers: &Workers) -> Result<(u64, u64), PipelineError> {
    let captures = load_captures(cfg, ds)?;
    let store = store_for(cfg, ds);
    store.ensure()?;
    let results = workers.map(&captures, |c| -> Result<u64, PipelineError> {
        let slices = slices_for(cfg, &store, c)?;
        for s in &slices {
            store.write_cardinal(s)?;
        }
        Ok(slices.len() as u64)
    });
    let mut written = 0;
    let mut failed = 0;
    for (c, r) in captures.iter().zip(results) {
        match r {
            Ok(n) => written += n,
            Err(e) => {
                log::warn!("{}: {e}", c.capture_id);
                failed += 1;
            }
        }
    }
    Ok((written, failed))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectTally {
    pub photospheres: u64,
    pub cardinals: u64,
    pub queried: u64,
    pub failed_slices: u64,
    pub detections_in: u64,
    pub discarded: u64,
    pub detections_by_class: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectOutput {
    pub tally: DetectTally,
    pub observations: Vec<BearingObservation>,
}

struct CaptureResult {
    tally: DetectTally,
    observations: Vec<BearingObservation>,
}

fn detect_capture(
    cfg: &PipelineConfig,
    store: &DatasetStore,
    detector: &dyn Detector,
    capture: &PhotoCapture,
) -> CaptureResult {
    let mut tally = DetectTally {
        photospheres: 1,
        ..Default::default()
    };
    let mut observations = Vec::new();
    let slices = match slices_for(cfg, store, capture) {
        Ok(s) => s,
        Err(e) => {
            log::warn!("{}: {e}", capture.capture_id);
            tally.failed_slices += u64::from(cfg.imaging.cardinal_count);
            return CaptureResult { tally, observations };
        }
    };
    let origin = if cfg.apply_lever_arm {
        cfg.sensor.camera_origin(capture.projected, capture.heading)
    } else {
        capture.projected
    };
    for slice in &slices {
        tally.cardinals += 1;
        if cfg.write_cardinals {
            if let Err(e) = store.write_cardinal(slice) {
                log::warn!("{e}");
            }
        }
        let queried = cfg.detection.all_cardinals || slice.cardinal_index == 1;
        let mut detections = Vec::new();
        if queried {
            tally.queried += 1;
            match detector.detect(slice, cfg.detection.min_confidence) {
                Ok(resp) => detections = resp.detections,
                Err(e) => {
                    log::warn!("{} C{}: {e}", capture.capture_id, slice.cardinal_index);
                    tally.failed_slices += 1;
                }
            }
        }
        if let Err(e) = write_metadata_sidecar(store, capture, slice, queried, &detections) {
            log::warn!("{e}");
        }
        for d in detections {
            tally.detections_in += 1;
            *tally.detections_by_class.entry(d.object_class.to_string()).or_default() += 1;
            if estimate_range(&d, &cfg.imaging).is_some_and(|r| r > cfg.detection.max_detection_range) {
                tally.discarded += 1;
                continue;
            }
            match bbox_to_bearing(&d, slice, capture.heading, &cfg.imaging) {
                Ok(bearing) => observations.push(BearingObservation {
                    origin,
                    bearing,
                    capture_ref: capture.capture_id.clone(),
                    object_class: d.object_class,
                    confidence: d.confidence,
                    sequence_index: capture.sequence_index,
                }),
                Err(e) => {
                    log::warn!("{} C{}: {e}", capture.capture_id, slice.cardinal_index);
                    tally.discarded += 1;
                }
            }
        }
    }
    CaptureResult { tally, observations }
}

/// Slices, queries the detector, writes sidecars and caches the resulting
/// rays as `output/observations.json`. Slice failures are logged and
/// counted, never fatal.
pub fn stage_detect(
    cfg: &PipelineConfig,
    ds: &DatasetConfig,
    captures: &[PhotoCapture],
    detector: &dyn Detector,
    workers: &Workers,
) -> Result<DetectOutput, PipelineError> {
    let store = store_for(cfg, ds);
    store.ensure()?;
    let per_capture = workers.map(captures, |c| detect_capture(cfg, &store, detector, c));
    let mut out = DetectOutput::default();
    for r in per_capture {
        let t = &mut out.tally;
        t.photospheres += r.tally.photospheres;
        t.cardinals += r.tally.cardinals;
        t.queried += r.tally.queried;
        t.failed_slices += r.tally.failed_slices;
        t.detections_in += r.tally.detections_in;
        t.discarded += r.tally.discarded;
        for (k, v) in r.tally.detections_by_class {
            *t.detections_by_class.entry(k).or_default() += v;
        }
        out.observations.extend(r.observations);
    }
    store.write_json(&store.output().join("observations.json"), &out)?;
    log::info!(
        "{}: {} cardinals, {} queried, {} detections, {} rays",
        ds.id,
        out.tally.cardinals,
        out.tally.queried,
        out.tally.detections_in,
        out.observations.len()
    );
    Ok(out)
}

/// Clusters the rays and writes `output/features.geojson` and `output/estimates.json`.
pub fn stage_locate(
    cfg: &PipelineConfig,
    ds: &DatasetConfig,
    observations: &[BearingObservation],
) -> Result<(ClusteringOutcome, FeatureCollection), PipelineError> {
    let store = store_for(cfg, ds);
    store.ensure()?;
    let outcome = cluster_observations(observations, &cfg.cluster);
    let features = feature_collection(&outcome.estimates, &ds.id);
    let mut text = serde_json::to_string_pretty(&features).map_err(|e| PipelineError::Io {
        path: store.output().join("features.geojson"),
        reason: e.to_string(),
    })?;
    text.push('\n');
    write_text(&store.output().join("features.geojson"), &text)?;
    store.write_json(&store.output().join("estimates.json"), &outcome.estimates)?;
    Ok((outcome, features))
}

fn summarize(
    ds: &DatasetConfig,
    captures: &[PhotoCapture],
    detect: &DetectOutput,
    estimates: &[ObjectEstimate],
    members: u64,
    noise: u64,
) -> DatasetSummary {
    let mut objects_by_class = BTreeMap::new();
    for e in estimates {
        *objects_by_class.entry(e.object_class.to_string()).or_default() += 1;
    }
    DatasetSummary {
        dataset_id: ds.id.clone(),
        area: ds.area.clone(),
        photosphere_count: captures.len() as u64,
        cardinal_count: detect.tally.cardinals,
        queried_cardinals: detect.tally.queried,
        failed_slices: detect.tally.failed_slices,
        miles_travelled: track_miles(captures),
        nominal_miles: nominal_miles(captures.len() as u64, NOMINAL_CAPTURE_SPACING_FT),
        detections_by_class: detect.tally.detections_by_class.clone(),
        objects_by_class,
        conservation: ConservationAudit {
            detections_in: detect.tally.detections_in,
            cluster_members: members,
            noise,
            discarded: detect.tally.discarded,
        },
    }
}

/// Writes `output/summary.{json,csv,txt}` and `output/accuracy.{csv,txt}`.
pub fn stage_report(
    cfg: &PipelineConfig,
    ds: &DatasetConfig,
    captures: &[PhotoCapture],
    detect: &DetectOutput,
    outcome: &ClusteringOutcome,
) -> Result<(DatasetSummary, AccuracyReport), PipelineError> {
    let summary = summarize(
        ds,
        captures,
        detect,
        &outcome.estimates,
        outcome.member_count() as u64,
        outcome.noise.len() as u64,
    );
    if !summary.conservation.balanced() {
        log::error!("{}: conservation audit failed: {:?}", ds.id, summary.conservation);
    }
    let area_estimates: Vec<(String, ObjectEstimate)> =
        outcome.estimates.iter().map(|e| (ds.area.clone(), e.clone())).collect();
    let accuracy = emit_accuracy_report(&area_estimates);
    write_reports_to(&store_for(cfg, ds).output(), std::slice::from_ref(&summary), &accuracy)?;
    store_for(cfg, ds).write_json(&store_for(cfg, ds).output().join("summary.json"), &summary)?;
    Ok((summary, accuracy))
}

pub fn write_reports_to(dir: &Path, summaries: &[DatasetSummary], accuracy: &AccuracyReport) -> Result<(), PipelineError> {
    write_text(&dir.join("summary.csv"), &summary_csv(summaries))?;
    write_text(&dir.join("summary.txt"), &summary_text(summaries))?;
    write_text(&dir.join("accuracy.csv"), &accuracy.to_csv())?;
    write_text(&dir.join("accuracy.txt"), &accuracy.to_text())
}

#[derive(Debug, Clone)]
pub struct DatasetRun {
    pub features: FeatureCollection,
    pub summary: DatasetSummary,
    pub accuracy: AccuracyReport,
    pub outcome: ClusteringOutcome,
}

impl DatasetRun {
    /// Some slices were skipped because the detector or imaging failed.
    pub fn is_partial(&self) -> bool {
        self.summary.failed_slices > 0
    }
}

pub fn run_dataset_with(
    cfg: &PipelineConfig,
    ds: &DatasetConfig,
    detector: &dyn Detector,
    workers: &Workers,
) -> Result<DatasetRun, PipelineError> {
    let captures = stage_ingest(cfg, ds)?;
    let detect = stage_detect(cfg, ds, &captures, detector, workers)?;
    let (outcome, features) = stage_locate(cfg, ds, &detect.observations)?;
    let (summary, accuracy) = stage_report(cfg, ds, &captures, &detect, &outcome)?;
    Ok(DatasetRun {
        features,
        summary,
        accuracy,
        outcome,
    })
}

/// All stages for one dataset with the configured detector backend.
pub fn run_dataset(dataset_id: &str, cfg: &PipelineConfig) -> Result<DatasetRun, PipelineError> {
    let ds = cfg.dataset(dataset_id);
    let detector = build_detector(cfg, &ds)?;
    run_dataset_with(cfg, &ds, detector.as_ref(), &Workers::new(cfg.jobs))
}
