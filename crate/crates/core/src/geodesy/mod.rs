//! Coordinate types, the working projected plane and compass arithmetic.
//!
//! Geographic positions are WGS84 decimal degrees with signed longitudes
//! (west negative). The working plane is NAD83 / California zone 6 in US
//! survey feet, where easting and northing are the `x` and `y` of every
//! planimetric computation downstream.

mod bearing;
mod lcc;

pub use bearing::{bearing_add, correct_heading, signed_offset, CompassBearing};
pub use lcc::{project, unproject, CA_ZONE6};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One US survey foot in meters.
pub const US_SURVEY_FOOT_M: f64 = 1200.0 / 3937.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeodesyError {
    #[error("zero displacement between consecutive fixes")]
    ZeroDisplacement,
    #[error("coordinate out of projection domain: {0}")]
    OutOfDomain(String),
    #[error("inverse projection did not converge for ({easting}, {northing})")]
    NonConvergence { easting: f64, northing: f64 },
}

/// Geographic position, WGS84 degrees. Altitude is feet above sea level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub latitude: f64,
    pub longitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub altitude: Option<f64>,
}

impl GeoPoint {
    pub fn new(latitude: f64, longitude: f64) -> Result<Self, GeodesyError> {
        if !(latitude.is_finite() && (-90.0..=90.0).contains(&latitude)) {
            return Err(GeodesyError::OutOfDomain(format!("latitude {latitude}")));
        }
        if !(longitude.is_finite() && (-180.0..=180.0).contains(&longitude)) {
            return Err(GeodesyError::OutOfDomain(format!("longitude {longitude}")));
        }
        Ok(Self {
            latitude,
            longitude,
            altitude: None,
        })
    }

    pub fn with_altitude(mut self, altitude: Option<f64>) -> Self {
        self.altitude = altitude;
        self
    }
}

/// Easting/northing on the working plane, US survey feet.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProjectedPoint {
    pub easting: f64,
    pub northing: f64,
}

impl ProjectedPoint {
    pub const fn new(easting: f64, northing: f64) -> Self {
        Self { easting, northing }
    }

    pub fn is_finite(&self) -> bool {
        self.easting.is_finite() && self.northing.is_finite()
    }

    pub fn distance(&self, other: &ProjectedPoint) -> f64 {
        (other.easting - self.easting).hypot(other.northing - self.northing)
    }

    /// Point `distance` feet away along a compass bearing.
    pub fn offset(&self, bearing: CompassBearing, distance: f64) -> ProjectedPoint {
        let (s, c) = bearing.radians().sin_cos();
        ProjectedPoint::new(self.easting + distance * s, self.northing + distance * c)
    }

    /// Compass bearing from `self` toward `other`, `None` when coincident.
    pub fn bearing_to(&self, other: &ProjectedPoint) -> Option<CompassBearing> {
        let de = other.easting - self.easting;
        let dn = other.northing - self.northing;
        if de == 0.0 && dn == 0.0 {
            return None;
        }
        Some(CompassBearing::new(de.atan2(dn).to_degrees()))
    }
}

/// Physical layout of the sensors on the vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorLayout {
    /// GNSS antenna to camera distance, feet.
    pub gps_to_camera_offset: f64,
}

impl Default for SensorLayout {
    fn default() -> Self {
        Self {
            gps_to_camera_offset: 3.28084,
        }
    }
}

impl SensorLayout {
    /// Camera origin for a GNSS fix: shifted `d` feet along `heading + 180°`.
    pub fn camera_origin(&self, gps: ProjectedPoint, heading: CompassBearing) -> ProjectedPoint {
        gps.offset(bearing_add(heading, 180.0), self.gps_to_camera_offset.max(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geopoint_rejects_out_of_range() {
        assert!(GeoPoint::new(91.0, 0.0).is_err());
        assert!(GeoPoint::new(0.0, -180.5).is_err());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
        assert!(GeoPoint::new(33.8, -117.9).is_ok());
    }

    #[test]
    fn offset_follows_compass_convention() {
        let o = ProjectedPoint::new(0.0, 0.0);
        let east = o.offset(CompassBearing::new(90.0), 30.0);
        assert!((east.easting - 30.0).abs() < 1e-12 && east.northing.abs() < 1e-12);
        let north = o.offset(CompassBearing::new(0.0), 10.0);
        assert!(north.easting.abs() < 1e-12 && (north.northing - 10.0).abs() < 1e-12);
    }

    #[test]
    fn lever_arm_shifts_backwards() {
        let layout = SensorLayout::default();
        let cam = layout.camera_origin(ProjectedPoint::new(100.0, 100.0), CompassBearing::new(0.0));
        assert!((cam.northing - (100.0 - 3.28084)).abs() < 1e-9);
        assert!((cam.easting - 100.0).abs() < 1e-9);
    }
}
