use std::io::Cursor;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{filter_and_rank, BBox, Detection, Detector, DetectorError, DetectorResponse, RetryPolicy};
use crate::imaging::CardinalSlice;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpDetectorConfig {
    pub endpoint: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    /// Header carrying the key; the value is sent as `Bearer <key>` for
    /// `Authorization` and verbatim otherwise.
    pub api_key_header: String,
    pub timeout_ms: u64,
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
}

impl Default for HttpDetectorConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            api_key: None,
            api_key_header: "Authorization".into(),
            timeout_ms: 30_000,
            max_in_flight: 8,
            retry: RetryPolicy::default(),
        }
    }
}

/// One element of the JSON reply array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireDetection {
    pub class: String,
    pub bbox: [f64; 4],
    pub score: f64,
}

/// Counting gate bounding concurrent requests.
struct InFlight {
    limit: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a InFlight);

impl InFlight {
    fn acquire(&self) -> Permit<'_> {
        let mut n = self.active.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.limit {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.active.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}

pub struct HttpDetector {
    cfg: HttpDetectorConfig,
    client: reqwest::blocking::Client,
    gate: InFlight,
}

impl HttpDetector {
    pub fn new(cfg: HttpDetectorConfig) -> Result<Self, DetectorError> {
        if cfg.endpoint.is_empty() {
            return Err(DetectorError::BackendUnavailable("no endpoint configured".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(cfg.timeout_ms))
            .build()
            .map_err(|e| DetectorError::BackendUnavailable(e.to_string()))?;
        let gate = InFlight {
            limit: cfg.max_in_flight.max(1),
            active: Mutex::new(0),
            freed: Condvar::new(),
        };
        Ok(Self { cfg, client, gate })
    }

    fn encode(slice: &CardinalSlice) -> Result<Vec<u8>, DetectorError> {
        let mut buf = Cursor::new(Vec::new());
        slice
            .raster
            .write_to(&mut buf, image::ImageFormat::Jpeg)
            .map_err(|e| DetectorError::BackendUnavailable(format!("jpeg encode: {e}")))?;
        Ok(buf.into_inner())
    }

    fn post_once(&self, body: &[u8], slice: &CardinalSlice) -> Result<Vec<u8>, DetectorError> {
        let _permit = self.gate.acquire();
        let mut req = self
            .client
            .post(&self.cfg.endpoint)
            .header("Content-Type", "image/jpeg")
            .header("X-Capture-Ref", slice.capture_ref.as_str())
            .header("X-Cardinal-Index", slice.cardinal_index.to_string())
            .body(body.to_vec());
        if let Some(key) = &self.cfg.api_key {
            let value = if self.cfg.api_key_header.eq_ignore_ascii_case("authorization") {
                format!("Bearer {key}")
            } else {
                key.clone()
            };
            req = req.header(self.cfg.api_key_header.as_str(), value);
        }
        let resp = req
            .send()
            .map_err(|e| DetectorError::BackendUnavailable(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 429 {
            let retry_after = resp
                .headers()
                .get("Retry-After")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u64>().ok())
                .map(Duration::from_secs);
            return Err(DetectorError::RateLimited { retry_after });
        }
        if status.is_server_error() {
            return Err(DetectorError::BackendUnavailable(format!("status {status}")));
        }
        if !status.is_success() {
            return Err(DetectorError::Rejected {
                status: status.as_u16(),
            });
        }
        resp.bytes()
            .map(|b| b.to_vec())
            .map_err(|e| DetectorError::BackendUnavailable(e.to_string()))
    }
}

/// Converts a reply body into detections for `slice`.
pub(crate) fn parse_reply(payload: &[u8], slice: &CardinalSlice) -> Result<Vec<Detection>, DetectorError> {
    let malformed = |reason: String| DetectorError::MalformedResponse {
        reason,
        payload: payload.to_vec(),
    };
    let wire: Vec<WireDetection> = serde_json::from_slice(payload).map_err(|e| malformed(e.to_string()))?;
    let (w, h) = (f64::from(slice.raster.width()), f64::from(slice.raster.height()));
    wire.into_iter()
        .map(|d| {
            let [x_min, y_min, x_max, y_max] = d.bbox;
            let bbox = BBox {
                x_min,
                y_min,
                x_max,
                y_max,
            };
            if !bbox.is_valid_within(w, h) {
                return Err(malformed(format!("bbox {:?} outside {w}x{h} slice", d.bbox)));
            }
            if !(0.0..=1.0).contains(&d.score) {
                return Err(malformed(format!("score {} outside [0, 1]", d.score)));
            }
            Ok(Detection {
                capture_ref: slice.capture_ref.clone(),
                cardinal_index: slice.cardinal_index,
                object_class: d.class.parse().unwrap_or_else(|e| match e {}),
                bbox,
                confidence: d.score,
            })
        })
        .collect()
}

impl Detector for HttpDetector {
    fn detect(&self, slice: &CardinalSlice, min_confidence: f64) -> Result<DetectorResponse, DetectorError> {
        if slice.raster.width() == 0 || slice.raster.height() == 0 {
            return Err(DetectorError::EmptySlice);
        }
        let body = Self::encode(slice)?;
        let start = Instant::now();
        let payload = self.cfg.retry.run(|| self.post_once(&body, slice))?;
        let detections = filter_and_rank(parse_reply(&payload, slice)?, min_confidence);
        Ok(DetectorResponse {
            detections,
            latency_ms: start.elapsed().as_secs_f64() * 1e3,
            raw_payload: payload,
        })
    }
}
