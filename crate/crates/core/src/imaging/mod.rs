//! Photosphere handling: functional-band crop, cardinal slicing and the
//! column-to-azimuth mapping of an equirectangular panorama.

mod tables;

pub use tables::{
    classify_directional, classify_nominal, DirectionalClass, NominalCardinal, DIRECTIONAL_CLASSES,
    DIRECTIONAL_WIDTH, NOMINAL_CARDINALS,
};

use image::{GenericImageView, RgbImage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodesy::{bearing_add, CompassBearing};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImagingError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("column {column} outside [0, {width})")]
    ColumnOutOfRange { column: f64, width: u32 },
    #[error("invalid imaging configuration: {0}")]
    InvalidConfig(String),
}

/// Geometry of the source panoramas and their slicing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImagingConfig {
    /// Photosphere width in pixels; `degrees_per_pixel = 360 / width`.
    pub width: u32,
    pub height: u32,
    /// `[top_row, bottom_row)` of the retained band.
    pub functional_band: (u32, u32),
    pub cardinal_count: u32,
    /// Require the 8000×4000 source format.
    pub strict: bool,
}

impl Default for ImagingConfig {
    fn default() -> Self {
        Self::scaled(8000)
    }
}

impl ImagingConfig {
    /// Eight square cardinals over a `width × width/2` panorama with the
    /// band centered vertically.
    pub fn scaled(width: u32) -> Self {
        let height = width / 2;
        let cw = width / 8;
        let top = height / 2 - cw / 2;
        Self {
            width,
            height,
            functional_band: (top, top + cw),
            cardinal_count: 8,
            strict: false,
        }
    }

    pub fn degrees_per_pixel(&self) -> f64 {
        360.0 / f64::from(self.width)
    }

    pub fn cardinal_width(&self) -> u32 {
        self.width / self.cardinal_count.max(1)
    }

    /// Angular span of one cardinal slice.
    pub fn cardinal_span(&self) -> f64 {
        360.0 / f64::from(self.cardinal_count)
    }

    pub fn validate(&self) -> Result<(), ImagingError> {
        let bad = |m: String| Err(ImagingError::InvalidConfig(m));
        if self.cardinal_count == 0 || self.width < self.cardinal_count {
            return bad(format!("width {} too small for {} cardinals", self.width, self.cardinal_count));
        }
        if !self.width.is_multiple_of(self.cardinal_count) {
            return bad(format!("width {} not divisible by {}", self.width, self.cardinal_count));
        }
        let (top, bottom) = self.functional_band;
        if bottom <= top || bottom > self.height {
            return bad(format!("functional band {top}..{bottom} outside height {}", self.height));
        }
        if bottom - top != self.cardinal_width() {
            return bad(format!(
                "band height {} differs from cardinal width {}",
                bottom - top,
                self.cardinal_width()
            ));
        }
        if self.strict && (self.width != 8000 || self.height != 4000) {
            return bad(format!("strict mode expects 8000x4000, got {}x{}", self.width, self.height));
        }
        Ok(())
    }
}

/// A full equirectangular capture.
#[derive(Debug, Clone)]
pub struct Photosphere {
    pub image_id: String,
    pub capture_ref: String,
    pub pixels: RgbImage,
}

impl Photosphere {
    /// Flat-colored stand-in raster, used when detections come from ground truth.
    pub fn placeholder(image_id: &str, capture_ref: &str, cfg: &ImagingConfig) -> Self {
        let shade = image_id.bytes().fold(0u8, |a, b| a.wrapping_mul(31).wrapping_add(b));
        Self {
            image_id: image_id.to_string(),
            capture_ref: capture_ref.to_string(),
            pixels: RgbImage::from_pixel(cfg.width, cfg.height, image::Rgb([shade, 128, 64])),
        }
    }
}

/// One 45° sub-image of the functional band.
#[derive(Debug, Clone)]
pub struct CardinalSlice {
    pub parent_id: String,
    pub capture_ref: String,
    /// 1-based.
    pub cardinal_index: u8,
    pub raster: RgbImage,
    pub center_bearing: CompassBearing,
    pub directional_class: &'static DirectionalClass,
}

impl CardinalSlice {
    /// `<image_id>_C<i>_<Dcode>` without extension.
    pub fn stem(&self) -> String {
        slice_stem(&self.parent_id, self.cardinal_index, self.directional_class)
    }
}

pub fn slice_stem(image_id: &str, cardinal_index: u8, class: &DirectionalClass) -> String {
    format!("{image_id}_C{cardinal_index}_{}", class.code)
}

/// Rows `[top, bottom)` of every column.
pub fn crop_functional(p: &Photosphere, cfg: &ImagingConfig) -> Result<RgbImage, ImagingError> {
    cfg.validate()?;
    let (top, bottom) = cfg.functional_band;
    if p.pixels.width() != cfg.width {
        return Err(ImagingError::DimensionMismatch(format!(
            "photosphere {} is {} px wide, expected {}",
            p.image_id,
            p.pixels.width(),
            cfg.width
        )));
    }
    if p.pixels.height() < bottom || (cfg.strict && p.pixels.height() != cfg.height) {
        return Err(ImagingError::DimensionMismatch(format!(
            "photosphere {} is {} px high, band needs rows {top}..{bottom}",
            p.image_id,
            p.pixels.height()
        )));
    }
    Ok(p.pixels.view(0, top, cfg.width, bottom - top).to_image())
}

/// Centers of the cardinal slices: first at `heading + span/2`, then
/// successive `+span` steps, each wrapped mod 360.
pub fn cardinal_centers(heading: CompassBearing, cfg: &ImagingConfig) -> Vec<CompassBearing> {
    let span = cfg.cardinal_span();
    let mut out = Vec::with_capacity(cfg.cardinal_count as usize);
    let mut current = bearing_add(heading, span / 2.0);
    for _ in 0..cfg.cardinal_count {
        out.push(current);
        current = bearing_add(current, span);
    }
    out
}

pub fn slice_cardinals(
    band: &RgbImage,
    parent_id: &str,
    capture_ref: &str,
    heading: CompassBearing,
    cfg: &ImagingConfig,
) -> Result<Vec<CardinalSlice>, ImagingError> {
    cfg.validate()?;
    let cw = cfg.cardinal_width();
    if band.width() != cfg.width || !band.width().is_multiple_of(cfg.cardinal_count) {
        return Err(ImagingError::DimensionMismatch(format!(
            "band width {} incompatible with {} cardinals of {cw}",
            band.width(),
            cfg.cardinal_count
        )));
    }
    if band.height() == 0 {
        return Err(ImagingError::DimensionMismatch("empty band".into()));
    }
    Ok(cardinal_centers(heading, cfg)
        .into_iter()
        .enumerate()
        .map(|(i, center)| CardinalSlice {
            parent_id: parent_id.to_string(),
            capture_ref: capture_ref.to_string(),
            cardinal_index: (i + 1) as u8,
            raster: band.view(i as u32 * cw, 0, cw, band.height()).to_image(),
            center_bearing: center,
            directional_class: classify_directional(center),
        })
        .collect())
}

/// Line-of-sight azimuth of a (possibly fractional) global pixel column.
pub fn pixel_bearing(heading: CompassBearing, column: f64, cfg: &ImagingConfig) -> Result<CompassBearing, ImagingError> {
    if !(column.is_finite() && column >= 0.0 && column < f64::from(cfg.width)) {
        return Err(ImagingError::ColumnOutOfRange {
            column,
            width: cfg.width,
        });
    }
    Ok(bearing_add(heading, column * cfg.degrees_per_pixel()))
}
