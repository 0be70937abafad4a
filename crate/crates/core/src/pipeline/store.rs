use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{PhotoCapture, PipelineError};
use crate::detector::Detection;
use crate::imaging::{CardinalSlice, Photosphere};

/// On-disk layout of one dataset:
/// `datasets/<id>/{photospheres,cardinals,sidecars,output}`.
#[derive(Debug, Clone)]
pub struct DatasetStore {
    root: PathBuf,
}

impl DatasetStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn photospheres(&self) -> PathBuf {
        self.root.join("photospheres")
    }

    pub fn cardinals(&self) -> PathBuf {
        self.root.join("cardinals")
    }

    pub fn sidecars(&self) -> PathBuf {
        self.root.join("sidecars")
    }

    pub fn output(&self) -> PathBuf {
        self.root.join("output")
    }

    pub fn ensure(&self) -> Result<(), PipelineError> {
        for dir in [self.photospheres(), self.cardinals(), self.sidecars(), self.output()] {
            fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        }
        Ok(())
    }

    /// Existing photosphere file for an image id, any supported extension.
    pub fn find_photosphere(&self, image_id: &str) -> Option<PathBuf> {
        ["jpg", "jpeg", "png", "JPG", "JPEG", "PNG"]
            .iter()
            .map(|ext| self.photospheres().join(format!("{image_id}.{ext}")))
            .find(|p| p.is_file())
    }

    pub fn load_photosphere(&self, capture: &PhotoCapture) -> Result<Option<Photosphere>, PipelineError> {
        let Some(path) = self.find_photosphere(&capture.image_id) else {
            return Ok(None);
        };
        let pixels = image::open(&path)
            .map_err(|e| PipelineError::Io {
                path: path.clone(),
                reason: e.to_string(),
            })?
            .to_rgb8();
        Ok(Some(Photosphere {
            image_id: capture.image_id.clone(),
            capture_ref: capture.capture_id.clone(),
            pixels,
        }))
    }

    pub fn write_cardinal(&self, slice: &CardinalSlice) -> Result<PathBuf, PipelineError> {
        let path = self.cardinals().join(format!("{}.png", slice.stem()));
        slice
            .raster
            .save_with_format(&path, image::ImageFormat::Png)
            .map_err(|e| PipelineError::Io {
                path: path.clone(),
                reason: e.to_string(),
            })?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, path: &Path, value: &T) -> Result<(), PipelineError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| PipelineError::Io {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        text.push('\n');
        write_text(path, &text)
    }

    pub fn read_json<T: for<'de> Deserialize<'de>>(&self, path: &Path) -> Result<T, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Io {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }
}

pub(crate) fn io_err(path: &Path, e: std::io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Per-cardinal metadata record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub capture_id: String,
    pub image_id: String,
    pub dataset_id: String,
    pub cardinal_index: u8,
    pub center_bearing: f64,
    pub directional_class: String,
    pub directional_code: String,
    pub latitude: f64,
    pub longitude: f64,
    pub heading: f64,
    /// Whether the slice was sent to the detector.
    pub queried: bool,
    pub detections: Vec<Detection>,
}

impl Sidecar {
    pub fn new(capture: &PhotoCapture, slice: &CardinalSlice, queried: bool, detections: Vec<Detection>) -> Self {
        Self {
            capture_id: capture.capture_id.clone(),
            image_id: capture.image_id.clone(),
            dataset_id: capture.dataset_id.clone(),
            cardinal_index: slice.cardinal_index,
            center_bearing: slice.center_bearing.degrees(),
            directional_class: slice.directional_class.label(),
            directional_code: slice.directional_class.code.to_string(),
            latitude: capture.position.latitude,
            longitude: capture.position.longitude,
            heading: capture.heading.degrees(),
            queried,
            detections,
        }
    }
}

/// Writes `<image_id>_C<i>_<Dcode>.json`, replacing any previous file.
pub fn write_metadata_sidecar(
    store: &DatasetStore,
    capture: &PhotoCapture,
    slice: &CardinalSlice,
    queried: bool,
    detections: &[Detection],
) -> Result<PathBuf, PipelineError> {
    let path = store.sidecars().join(format!("{}.json", slice.stem()));
    store.write_json(&path, &Sidecar::new(capture, slice, queried, detections.to_vec()))?;
    Ok(path)
}
