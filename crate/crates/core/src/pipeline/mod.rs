//! Dataset orchestration: ingest a GNSS track, slice each photosphere,
//! query the detector, turn boxes into bearing rays, cluster and locate
//! objects, then write features, sidecars and reports.

mod config;
mod features;
mod ingest;
mod report;
mod run;
mod store;

pub use config::{Backend, DatasetConfig, DetectionConfig, PipelineConfig, API_KEY_ENV};
pub use features::{feature_collection, feature_record};
pub use ingest::{ingest_track, ColumnMap, LongitudeConvention};
pub use report::{
    emit_accuracy_report, expected_cardinals, nominal_miles, summary_csv, summary_text, track_miles, AccuracyReport,
    AccuracyRow, ClassRates, ConservationAudit, DatasetSummary, DISPLAY_SCALE, FEET_PER_MILE,
    NOMINAL_CAPTURE_SPACING_FT,
};
pub use run::{
    build_detector, load_captures, run_dataset, run_dataset_with, stage_detect, stage_ingest, stage_locate,
    stage_report, stage_slice, write_reports_to, DatasetRun, DetectOutput, DetectTally, Workers,
};
pub use store::{write_metadata_sidecar, DatasetStore, Sidecar};

use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::DetectorError;
use crate::geodesy::{CompassBearing, GeoPoint, ProjectedPoint};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config {path}: {reason}")]
    Config { path: PathBuf, reason: String },
    #[error("{path}: missing column {column:?}")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: track has {rows} usable row(s); at least two are needed")]
    EmptyTrack { path: PathBuf, rows: usize },
    #[error("{path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("detector setup: {0}")]
    Detector(#[from] DetectorError),
}

/// One photosphere capture with its corrected heading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotoCapture {
    pub capture_id: String,
    pub image_id: String,
    pub dataset_id: String,
    pub timestamp: Option<DateTime<Utc>>,
    pub position: GeoPoint,
    pub projected: ProjectedPoint,
    pub heading: CompassBearing,
    pub sequence_index: u64,
}
