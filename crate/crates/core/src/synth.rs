//! Synthetic drive-by scenes with analytically exact detections.
//!
//! A scene is a GNSS track, a set of planted point objects and a noise model.
//! [`ground_truth_detect`] renders what a perfect detector would report for
//! one capture, optionally perturbing the bearing before it is quantized into
//! a slice column. Everything is reproducible from the seed.

use std::fs;
use std::path::Path;

use chrono::{DateTime, Duration as ChronoDuration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::{BBox, Detection, ObjectClass};
use crate::geodesy::{
    bearing_add, correct_heading, project, signed_offset, unproject, CompassBearing, GeoPoint, GeodesyError,
    ProjectedPoint,
};
use crate::imaging::ImagingConfig;
use crate::pipeline::PhotoCapture;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Geodesy(#[from] GeodesyError),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("scene file {path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    /// Gaussian bearing noise, degrees.
    pub bearing_sd: f64,
    /// Gaussian GNSS noise per axis, feet.
    pub position_sd: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            bearing_sd: 0.045,
            position_sd: 0.1,
        }
    }
}

impl NoiseSpec {
    pub const ZERO: NoiseSpec = NoiseSpec {
        bearing_sd: 0.0,
        position_sd: 0.0,
    };
}

/// A run of captures turning by a fixed amount per step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurnSegment {
    pub start: usize,
    pub steps: usize,
    pub turn_per_step: f64,
}

/// Object placed relative to the camera at an anchor capture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectPlacement {
    pub class: ObjectClass,
    pub anchor: usize,
    pub range_ft: f64,
    /// Clockwise offset from the anchor capture's heading, degrees.
    pub offset_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomObjects {
    pub class: ObjectClass,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlacementRules {
    pub min_range_ft: f64,
    pub max_range_ft: f64,
    pub min_offset_deg: f64,
    pub max_offset_deg: f64,
    /// Minimum distance between any two planted objects.
    pub min_spacing_ft: f64,
    /// Captures that must see the object inside the first cardinal.
    pub min_views: usize,
}

impl Default for PlacementRules {
    fn default() -> Self {
        Self {
            min_range_ft: 20.0,
            max_range_ft: 60.0,
            min_offset_deg: 10.0,
            max_offset_deg: 40.0,
            min_spacing_ft: 150.0,
            min_views: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub dataset_id: String,
    pub seed: u64,
    pub origin: GeoPoint,
    pub captures: usize,
    pub step_ft: f64,
    /// Initial direction of travel.
    pub travel_bearing: f64,
    pub turns: Vec<TurnSegment>,
    pub objects: Vec<ObjectPlacement>,
    pub random_objects: Vec<RandomObjects>,
    pub placement: PlacementRules,
    pub noise: Option<NoiseSpec>,
    /// Objects farther than this are not seen.
    pub max_detection_range: f64,
    pub start_time: DateTime<Utc>,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            dataset_id: "synth".into(),
            seed: 7,
            origin: GeoPoint {
                latitude: 33.8144,
                longitude: -117.9673,
                altitude: Some(31.7),
            },
            captures: 200,
            step_ft: 10.0,
            travel_bearing: 90.0,
            turns: Vec::new(),
            objects: Vec::new(),
            random_objects: Vec::new(),
            placement: PlacementRules::default(),
            noise: None,
            max_detection_range: 100.0,
            start_time: Utc.with_ymd_and_hms(2019, 3, 1, 18, 0, 0).unwrap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedObject {
    pub id: usize,
    pub class: ObjectClass,
    pub position: ProjectedPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScene {
    pub spec: SceneSpec,
    /// Captures as the GNSS reports them (noisy positions, true heading).
    pub track: Vec<PhotoCapture>,
    pub true_positions: Vec<ProjectedPoint>,
    pub objects: Vec<PlantedObject>,
    pub noise: NoiseSpec,
}

fn invalid(msg: impl Into<String>) -> SynthError {
    SynthError::InvalidSpec(msg.into())
}

fn validate(spec: &SceneSpec) -> Result<(), SynthError> {
    if spec.captures < 2 {
        return Err(invalid("need at least two captures"));
    }
    if !(spec.step_ft.is_finite() && spec.step_ft > 0.0) {
        return Err(invalid(format!("step {} must be positive", spec.step_ft)));
    }
    if !spec.travel_bearing.is_finite() {
        return Err(invalid("travel bearing must be finite"));
    }
    if spec.max_detection_range.is_nan() || spec.max_detection_range <= 0.0 {
        return Err(invalid("max_detection_range must be positive"));
    }
    let p = &spec.placement;
    if !(0.0 < p.min_range_ft && p.min_range_ft <= p.max_range_ft) {
        return Err(invalid("placement range must satisfy 0 < min <= max"));
    }
    if p.min_offset_deg > p.max_offset_deg {
        return Err(invalid("placement offsets must satisfy min <= max"));
    }
    for t in &spec.turns {
        if !t.turn_per_step.is_finite() {
            return Err(invalid("turn rate must be finite"));
        }
    }
    for o in &spec.objects {
        if o.anchor >= spec.captures {
            return Err(invalid(format!("anchor {} beyond {} captures", o.anchor, spec.captures)));
        }
        if !(o.range_ft > 0.0 && o.offset_deg.is_finite()) {
            return Err(invalid("object range must be positive and offset finite"));
        }
    }
    if let Some(n) = spec.noise {
        if !(n.bearing_sd >= 0.0 && n.position_sd >= 0.0) {
            return Err(invalid("noise deviations must be non-negative"));
        }
    }
    GeoPoint::new(spec.origin.latitude, spec.origin.longitude)?;
    Ok(())
}

fn turn_at(spec: &SceneSpec, step: usize) -> f64 {
    spec.turns
        .iter()
        .filter(|t| step >= t.start && step < t.start + t.steps)
        .map(|t| t.turn_per_step)
        .sum()
}

/// Heading per capture from consecutive true positions; the first capture
/// inherits the second's.
pub(crate) fn track_headings(positions: &[ProjectedPoint]) -> Result<Vec<CompassBearing>, GeodesyError> {
    let mut out = Vec::with_capacity(positions.len());
    for w in positions.windows(2) {
        out.push(correct_heading(
            w[1].easting - w[0].easting,
            w[1].northing - w[0].northing,
        )?);
    }
    let first = *out.first().ok_or(GeodesyError::ZeroDisplacement)?;
    out.insert(0, first);
    Ok(out)
}

fn place(true_pos: &[ProjectedPoint], headings: &[CompassBearing], p: &ObjectPlacement) -> ProjectedPoint {
    true_pos[p.anchor].offset(bearing_add(headings[p.anchor], p.offset_deg), p.range_ft)
}

fn first_cardinal_views(
    obj: &ProjectedPoint,
    true_pos: &[ProjectedPoint],
    headings: &[CompassBearing],
    max_range: f64,
    span: f64,
) -> usize {
    true_pos
        .iter()
        .zip(headings)
        .filter(|(cam, h)| {
            let r = cam.distance(obj);
            r > 0.0
                && r <= max_range
                && cam
                    .bearing_to(obj)
                    .map(|b| {
                        let off = signed_offset(**h, b);
                        off > 0.0 && off < span
                    })
                    .unwrap_or(false)
        })
        .count()
}

pub fn generate(spec: &SceneSpec) -> Result<SyntheticScene, SynthError> {
    validate(spec)?;
    let noise = spec.noise.unwrap_or(NoiseSpec::ZERO);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let start = project(&spec.origin)?;
    let mut true_positions = Vec::with_capacity(spec.captures);
    let mut travel = spec.travel_bearing;
    let mut pos = start;
    for k in 0..spec.captures {
        true_positions.push(pos);
        travel += turn_at(spec, k);
        pos = pos.offset(CompassBearing::new(travel), spec.step_ft);
    }
    let headings = track_headings(&true_positions)?;

    let mut objects: Vec<PlantedObject> = spec
        .objects
        .iter()
        .enumerate()
        .map(|(id, p)| PlantedObject {
            id,
            class: p.class.clone(),
            position: place(&true_positions, &headings, p),
        })
        .collect();

    let rules = spec.placement;
    let lo = spec.captures / 20;
    let hi = (spec.captures * 19 / 20).max(lo + 1);
    for group in &spec.random_objects {
        for _ in 0..group.count {
            let mut placed = None;
            for _ in 0..2000 {
                let p = ObjectPlacement {
                    class: group.class.clone(),
                    anchor: rng.gen_range(lo..hi),
                    range_ft: rng.gen_range(rules.min_range_ft..=rules.max_range_ft),
                    offset_deg: rng.gen_range(rules.min_offset_deg..=rules.max_offset_deg),
                };
                let candidate = place(&true_positions, &headings, &p);
                let spaced = objects
                    .iter()
                    .all(|o| o.position.distance(&candidate) >= rules.min_spacing_ft);
                let views =
                    first_cardinal_views(&candidate, &true_positions, &headings, spec.max_detection_range, 45.0);
                if spaced && views >= rules.min_views {
                    placed = Some(candidate);
                    break;
                }
            }
            let position = placed.ok_or_else(|| {
                invalid(format!(
                    "could not place {} {} objects with {} ft spacing",
                    group.count, group.class, rules.min_spacing_ft
                ))
            })?;
            objects.push(PlantedObject {
                id: objects.len(),
                class: group.class.clone(),
                position,
            });
        }
    }

    let gps = Normal::new(0.0, noise.position_sd.max(f64::MIN_POSITIVE)).expect("finite sd");
    let mut track = Vec::with_capacity(spec.captures);
    for (k, (truth, heading)) in true_positions.iter().zip(&headings).enumerate() {
        let reported = if noise.position_sd > 0.0 {
            ProjectedPoint::new(truth.easting + gps.sample(&mut rng), truth.northing + gps.sample(&mut rng))
        } else {
            *truth
        };
        let position = unproject(&reported)?.with_altitude(spec.origin.altitude);
        let id = format!("{}_{k:05}", spec.dataset_id);
        track.push(PhotoCapture {
            capture_id: id.clone(),
            image_id: id,
            dataset_id: spec.dataset_id.clone(),
            timestamp: Some(spec.start_time + ChronoDuration::seconds(k as i64)),
            position,
            projected: reported,
            heading: *heading,
            sequence_index: k as u64,
        });
    }

    Ok(SyntheticScene {
        spec: spec.clone(),
        track,
        true_positions,
        objects,
        noise,
    })
}

fn aspect(class: &ObjectClass) -> f64 {
    match class {
        ObjectClass::FireHydrant => 1.6,
        _ => 1.0,
    }
}

/// What a perfect detector reports for capture `k`, across all cardinals.
pub fn ground_truth_detect(scene: &SyntheticScene, k: usize, cfg: &ImagingConfig) -> Vec<Detection> {
    let (Some(cam), Some(capture)) = (scene.true_positions.get(k), scene.track.get(k)) else {
        return Vec::new();
    };
    let heading = capture.heading;
    let dpp = cfg.degrees_per_pixel();
    let cw = f64::from(cfg.cardinal_width());
    let width = f64::from(cfg.width);
    let mut out = Vec::new();
    for obj in &scene.objects {
        let r = cam.distance(&obj.position);
        if r <= 0.0 || r > scene.spec.max_detection_range {
            continue;
        }
        let Some(truth) = cam.bearing_to(&obj.position) else {
            continue;
        };
        if signed_offset(heading, truth).abs() >= 90.0 {
            continue;
        }
        let mut seen = truth.degrees();
        if scene.noise.bearing_sd > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(scene.spec.seed);
            rng.set_stream(((k as u64) << 24) ^ obj.id as u64);
            let n = Normal::new(0.0, scene.noise.bearing_sd).expect("finite sd");
            seen += n.sample(&mut rng);
        }
        let mut column = (seen - heading.degrees()).rem_euclid(360.0) / dpp;
        if column >= width {
            column = 0.0;
        }
        let idx = ((column / cw).floor() as u32).min(cfg.cardinal_count - 1);
        let x = (column - cw * f64::from(idx)).clamp(1e-3, cw - 1e-3);

        let box_w = match obj.class.nominal_width_ft() {
            Some(size) => 2.0 * (size / 2.0 / r).atan().to_degrees() / dpp,
            None => cw * 0.04,
        };
        let half_w = (box_w / 2.0).min(x).min(cw - x);
        let half_h = (box_w * aspect(&obj.class) / 2.0).min(cw / 2.0);
        out.push(Detection {
            capture_ref: capture.capture_id.clone(),
            cardinal_index: (idx + 1) as u8,
            object_class: obj.class.clone(),
            bbox: BBox {
                x_min: x - half_w,
                y_min: cw / 2.0 - half_h,
                x_max: x + half_w,
                y_max: cw / 2.0 + half_h,
            },
            confidence: 1.0,
        });
    }
    out.sort_by(|a, b| {
        a.cardinal_index
            .cmp(&b.cardinal_index)
            .then(a.bbox.center_x().total_cmp(&b.bbox.center_x()))
    });
    out
}

impl SyntheticScene {
    pub fn capture_index(&self, capture_id: &str) -> Option<usize> {
        self.track.iter().position(|c| c.capture_id == capture_id)
    }

    pub fn load(path: &Path) -> Result<Self, SynthError> {
        let text = fs::read_to_string(path).map_err(|source| SynthError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| SynthError::Json {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), SynthError> {
        let io = |source| SynthError::Io {
            path: path.display().to_string(),
            source,
        };
        let text = serde_json::to_string_pretty(self).expect("scene serializes");
        fs::write(path, text).map_err(io)
    }

    /// Track as CSV with the default column names.
    pub fn write_track_csv(&self, path: &Path) -> Result<(), SynthError> {
        let io = |source| SynthError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
        w.write_record(["image_id", "timestamp", "latitude", "longitude", "altitude", "heading"])
            .map_err(|e| io(e.into()))?;
        for c in &self.track {
            w.write_record([
                c.image_id.clone(),
                c.timestamp.map(|t| t.to_rfc3339()).unwrap_or_default(),
                c.position.latitude.to_string(),
                c.position.longitude.to_string(),
                c.position.altitude.map(|a| a.to_string()).unwrap_or_default(),
                c.heading.degrees().to_string(),
            ])
            .map_err(|e| io(e.into()))?;
        }
        w.flush().map_err(io)
    }
}
