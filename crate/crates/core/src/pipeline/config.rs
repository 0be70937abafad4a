use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ingest::{ColumnMap, LongitudeConvention};
use super::PipelineError;
use crate::cluster::ClusterParams;
use crate::detector::HttpDetectorConfig;
use crate::geodesy::SensorLayout;
use crate::imaging::ImagingConfig;

pub const API_KEY_ENV: &str = "PANOLOC_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Ground truth from each dataset's synthetic scene file.
    #[default]
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionConfig {
    pub backend: Backend,
    pub min_confidence: f64,
    /// Query every cardinal instead of only the first.
    pub all_cardinals: bool,
    /// Detections implying a farther range (from box width) are discarded, feet.
    pub max_detection_range: f64,
    pub http: HttpDetectorConfig,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Mock,
            min_confidence: 0.5,
            all_cardinals: false,
            max_detection_range: 150.0,
            http: HttpDetectorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub id: String,
    /// Reporting area label.
    pub area: String,
    /// Track CSV; defaults to `<dataset dir>/track.csv`.
    pub track: Option<PathBuf>,
    /// Synthetic scene for the mock backend; defaults to `<dataset dir>/scene.json`.
    pub scene: Option<PathBuf>,
    pub longitude_convention: LongitudeConvention,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            id: String::new(),
            area: "default".into(),
            track: None,
            scene: None,
            longitude_convention: LongitudeConvention::EastPositive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Parent of the `datasets/` tree.
    pub data_root: PathBuf,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
    /// Write cardinal rasters to disk during slicing.
    pub write_cardinals: bool,
    /// Shift camera origins by the antenna-to-camera offset.
    pub apply_lever_arm: bool,
    pub sensor: SensorLayout,
    pub imaging: ImagingConfig,
    pub detection: DetectionConfig,
    pub cluster: ClusterParams,
    pub columns: ColumnMap,
    pub datasets: Vec<DatasetConfig>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            data_root: PathBuf::from("."),
            jobs: 0,
            write_cardinals: true,
            apply_lever_arm: false,
            sensor: SensorLayout::default(),
            imaging: ImagingConfig::default(),
            detection: DetectionConfig::default(),
            cluster: ClusterParams::default(),
            columns: ColumnMap::default(),
            datasets: Vec::new(),
        }
    }
}

impl PipelineConfig {
    /// Reads a TOML file. Relative `data_root` resolves against the file's
    /// directory, and the detector key may come from the environment.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::Config {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let mut cfg: PipelineConfig = toml::from_str(&text).map_err(|e| PipelineError::Config {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        if cfg.data_root.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.data_root = base.join(&cfg.data_root);
        }
        if let Ok(key) = std::env::var(API_KEY_ENV) {
            if !key.is_empty() {
                cfg.detection.http.api_key = Some(key);
            }
        }
        cfg.validate().map_err(|reason| PipelineError::Config {
            path: path.to_path_buf(),
            reason,
        })?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), String> {
        self.imaging.validate().map_err(|e| e.to_string())?;
        let c = &self.cluster;
        if c.eps.is_nan() || c.eps <= 0.0 || c.min_pts == 0 {
            return Err(format!("cluster eps {} / min_pts {} must be positive", c.eps, c.min_pts));
        }
        if !(0.0..=1.0).contains(&self.detection.min_confidence) {
            return Err(format!("min_confidence {} outside [0, 1]", self.detection.min_confidence));
        }
        if self.sensor.gps_to_camera_offset < 0.0 {
            return Err("gps_to_camera_offset must be non-negative".into());
        }
        let mut ids: Vec<&str> = self.datasets.iter().map(|d| d.id.as_str()).collect();
        ids.sort_unstable();
        if ids.iter().any(|id| id.is_empty()) || ids.windows(2).any(|w| w[0] == w[1]) {
            return Err("dataset ids must be non-empty and unique".into());
        }
        Ok(())
    }

    /// The configured dataset, or a default entry when the id is unlisted.
    pub fn dataset(&self, id: &str) -> DatasetConfig {
        self.datasets.iter().find(|d| d.id == id).cloned().unwrap_or_else(|| DatasetConfig {
            id: id.to_string(),
            ..DatasetConfig::default()
        })
    }

    pub fn dataset_dir(&self, id: &str) -> PathBuf {
        self.data_root.join("datasets").join(id)
    }

    pub fn track_path(&self, ds: &DatasetConfig) -> PathBuf {
        ds.track.clone().unwrap_or_else(|| self.dataset_dir(&ds.id).join("track.csv"))
    }

    pub fn scene_path(&self, ds: &DatasetConfig) -> PathBuf {
        ds.scene.clone().unwrap_or_else(|| self.dataset_dir(&ds.id).join("scene.json"))
    }
}
