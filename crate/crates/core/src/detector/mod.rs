//! Object-detection boundary.
//!
//! Backends implement [`Detector`]; the pipeline only sees [`Detection`]
//! records in slice pixel coordinates. [`HttpDetector`] speaks a generic JSON
//! vision protocol and [`MockDetector`] answers from a synthetic scene.

mod http;
mod mock;

pub use http::{HttpDetector, HttpDetectorConfig, WireDetection};
pub use mock::MockDetector;

use std::fmt;
use std::str::FromStr;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodesy::CompassBearing;
use crate::imaging::{pixel_bearing, CardinalSlice, ImagingConfig, ImagingError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectorError {
    #[error("detector backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("detector rate limited")]
    RateLimited { retry_after: Option<Duration> },
    #[error("malformed detector response: {reason}")]
    MalformedResponse { reason: String, payload: Vec<u8> },
    #[error("detector rejected request with status {status}")]
    Rejected { status: u16 },
    #[error("empty slice raster")]
    EmptySlice,
}

impl DetectorError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, Self::BackendUnavailable(_) | Self::RateLimited { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjectClass {
    StopSign,
    FireHydrant,
    Other(String),
}

impl ObjectClass {
    pub fn as_str(&self) -> &str {
        match self {
            ObjectClass::StopSign => "stop_sign",
            ObjectClass::FireHydrant => "fire_hydrant",
            ObjectClass::Other(s) => s,
        }
    }

    /// Typical physical width in feet, used to estimate range from bbox width.
    pub fn nominal_width_ft(&self) -> Option<f64> {
        match self {
            // 30-inch octagon
            ObjectClass::StopSign => Some(2.5),
            ObjectClass::FireHydrant => Some(1.5),
            ObjectClass::Other(_) => None,
        }
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectClass {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        Ok(match norm.as_str() {
            "stop_sign" | "stopsign" => ObjectClass::StopSign,
            "fire_hydrant" | "firehydrant" | "hydrant" => ObjectClass::FireHydrant,
            _ => ObjectClass::Other(s.trim().to_string()),
        })
    }
}

impl Serialize for ObjectClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ObjectClass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(s.parse().unwrap_or_else(|e| match e {}))
    }
}

/// Axis-aligned box in slice pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BBox {
    pub fn center_x(&self) -> f64 {
        (self.x_min + self.x_max) / 2.0
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn is_valid_within(&self, width: f64, height: f64) -> bool {
        let ok = |v: f64| v.is_finite();
        ok(self.x_min)
            && ok(self.x_max)
            && ok(self.y_min)
            && ok(self.y_max)
            && 0.0 <= self.x_min
            && self.x_min < self.x_max
            && self.x_max <= width
            && 0.0 <= self.y_min
            && self.y_min < self.y_max
            && self.y_max <= height
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub capture_ref: String,
    pub cardinal_index: u8,
    pub object_class: ObjectClass,
    pub bbox: BBox,
    pub confidence: f64,
}

#[derive(Debug, Clone)]
pub struct DetectorResponse {
    pub detections: Vec<Detection>,
    pub latency_ms: f64,
    pub raw_payload: Vec<u8>,
}

pub trait Detector: Send + Sync {
    fn detect(&self, slice: &CardinalSlice, min_confidence: f64) -> Result<DetectorResponse, DetectorError>;
}

/// Keep detections at or above the threshold, highest confidence first.
/// Ties fall back to the box center so output order is deterministic.
pub fn filter_and_rank(mut detections: Vec<Detection>, min_confidence: f64) -> Vec<Detection> {
    detections.retain(|d| d.confidence >= min_confidence);
    detections.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then(a.bbox.center_x().total_cmp(&b.bbox.center_x()))
    });
    detections
}

/// Azimuth of the detection's box center (the object direction).
pub fn detection_bearing(d: &Detection, heading: CompassBearing, cfg: &ImagingConfig) -> Result<CompassBearing, ImagingError> {
    let cw = f64::from(cfg.cardinal_width());
    if d.cardinal_index == 0 || u32::from(d.cardinal_index) > cfg.cardinal_count {
        return Err(ImagingError::ColumnOutOfRange {
            column: f64::NAN,
            width: cfg.width,
        });
    }
    let column = cw * f64::from(d.cardinal_index - 1) + d.bbox.center_x();
    pixel_bearing(heading, column, cfg)
}

pub fn bbox_to_bearing(
    d: &Detection,
    slice: &CardinalSlice,
    heading: CompassBearing,
    cfg: &ImagingConfig,
) -> Result<CompassBearing, ImagingError> {
    if d.cardinal_index != slice.cardinal_index || d.capture_ref != slice.capture_ref {
        return Err(ImagingError::DimensionMismatch(format!(
            "detection for {} C{} applied to slice {} C{}",
            d.capture_ref, d.cardinal_index, slice.capture_ref, slice.cardinal_index
        )));
    }
    detection_bearing(d, heading, cfg)
}

/// Range implied by the box width for an object of known physical width.
pub fn estimate_range(d: &Detection, cfg: &ImagingConfig) -> Option<f64> {
    let size = d.object_class.nominal_width_ft()?;
    let angle = (d.bbox.width() * cfg.degrees_per_pixel()).to_radians();
    (angle > 0.0).then(|| size / (2.0 * (angle / 2.0).tan()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay_ms: 1000,
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, attempt: u32) -> Duration {
        Duration::from_millis(self.base_delay_ms.saturating_mul(1u64 << attempt.min(16)))
    }

    /// Runs `op` until it succeeds, fails permanently, or attempts run out.
    pub fn run<T>(&self, mut op: impl FnMut() -> Result<T, DetectorError>) -> Result<T, DetectorError> {
        let attempts = self.attempts.max(1);
        let mut attempt = 0;
        loop {
            match op() {
                Ok(v) => return Ok(v),
                Err(e) if e.is_retryable() && attempt + 1 < attempts => {
                    let wait = match &e {
                        DetectorError::RateLimited { retry_after: Some(d) } => (*d).max(self.delay(attempt)),
                        _ => self.delay(attempt),
                    };
                    log::warn!("detector attempt {} failed ({e}); retrying in {wait:?}", attempt + 1);
                    thread::sleep(wait);
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}
