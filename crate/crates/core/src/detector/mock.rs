use std::collections::HashMap;
use std::path::Path;

use super::{filter_and_rank, Detector, DetectorError, DetectorResponse};
use crate::imaging::{CardinalSlice, ImagingConfig};
use crate::synth::{ground_truth_detect, SynthError, SyntheticScene};

/// Answers from a synthetic scene instead of looking at pixels.
pub struct MockDetector {
    scene: SyntheticScene,
    imaging: ImagingConfig,
    by_capture: HashMap<String, usize>,
}

impl MockDetector {
    pub fn new(scene: SyntheticScene, imaging: ImagingConfig) -> Self {
        let by_capture = scene
            .track
            .iter()
            .enumerate()
            .map(|(k, c)| (c.capture_id.clone(), k))
            .collect();
        Self {
            scene,
            imaging,
            by_capture,
        }
    }

    pub fn from_file(path: &Path, imaging: ImagingConfig) -> Result<Self, SynthError> {
        Ok(Self::new(SyntheticScene::load(path)?, imaging))
    }

    pub fn scene(&self) -> &SyntheticScene {
        &self.scene
    }
}

impl Detector for MockDetector {
    fn detect(&self, slice: &CardinalSlice, min_confidence: f64) -> Result<DetectorResponse, DetectorError> {
        if slice.raster.width() == 0 || slice.raster.height() == 0 {
            return Err(DetectorError::EmptySlice);
        }
        let detections = match self.by_capture.get(&slice.capture_ref) {
            Some(&k) => ground_truth_detect(&self.scene, k, &self.imaging)
                .into_iter()
                .filter(|d| d.cardinal_index == slice.cardinal_index)
                .collect(),
            None => Vec::new(),
        };
        let raw_payload = serde_json::to_vec(&detections).expect("detections serialize");
        Ok(DetectorResponse {
            detections: filter_and_rank(detections, min_confidence),
            latency_ms: 0.0,
            raw_payload,
        })
    }
}
