use std::fmt;

use serde::{Deserialize, Serialize};

use super::GeodesyError;

/// Azimuth in degrees clockwise from true north, always in `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(into = "f64", try_from = "f64")]
pub struct CompassBearing(f64);

impl CompassBearing {
    /// Normalizes any finite angle into `[0, 360)`.
    ///
    /// Panics on non-finite input; callers validate external data first.
    pub fn new(degrees: f64) -> Self {
        assert!(degrees.is_finite(), "non-finite bearing {degrees}");
        let mut d = degrees.rem_euclid(360.0);
        // rem_euclid rounds tiny negatives up to exactly 360.0
        if d >= 360.0 {
            d = 0.0;
        }
        Self(d + 0.0)
    }

    pub fn try_new(degrees: f64) -> Option<Self> {
        degrees.is_finite().then(|| Self::new(degrees))
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }
}

impl From<CompassBearing> for f64 {
    fn from(b: CompassBearing) -> f64 {
        b.0
    }
}

impl TryFrom<f64> for CompassBearing {
    type Error = String;

    fn try_from(v: f64) -> Result<Self, Self::Error> {
        CompassBearing::try_new(v).ok_or_else(|| format!("non-finite bearing {v}"))
    }
}

impl fmt::Display for CompassBearing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}°", self.0)
    }
}

/// `(b + delta) mod 360`.
pub fn bearing_add(b: CompassBearing, delta: f64) -> CompassBearing {
    CompassBearing::new(b.0 + delta)
}

/// Signed angle from `from` to `to`, in `(-180, 180]`.
pub fn signed_offset(from: CompassBearing, to: CompassBearing) -> f64 {
    let d = (to.0 - from.0).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

/// Heading from a consecutive-fix displacement on the working plane.
///
/// `θ = deg(atan2(ΔE, ΔN)) − 180`, wrapped into `[0, 360)` when negative.
/// Due-north motion therefore yields 180°; column 0 of the photosphere is
/// assigned this angle.
pub fn correct_heading(delta_easting: f64, delta_northing: f64) -> Result<CompassBearing, GeodesyError> {
    if delta_easting == 0.0 && delta_northing == 0.0 {
        return Err(GeodesyError::ZeroDisplacement);
    }
    let theta = delta_easting.atan2(delta_northing).to_degrees() - 180.0;
    let corrected = if theta < 0.0 {
        (theta + 360.0) % 360.0
    } else {
        theta
    };
    Ok(CompassBearing::new(corrected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn circ_diff(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(360.0);
        d.min(360.0 - d)
    }

    // Reference four-quadrant arctangent written out by quadrant.
    fn reference_heading(de: f64, dn: f64) -> f64 {
        let base = (de / dn).atan().to_degrees();
        let az = if dn > 0.0 {
            base
        } else if dn < 0.0 {
            base + 180.0
        } else if de > 0.0 {
            90.0
        } else {
            -90.0
        };
        (az - 180.0).rem_euclid(360.0)
    }

    #[test]
    fn heading_examples() {
        assert_eq!(correct_heading(0.0, -1.0).unwrap().degrees(), 0.0);
        assert_eq!(correct_heading(0.0, 1.0).unwrap().degrees(), 180.0);
        assert_eq!(correct_heading(1.0, 0.0).unwrap().degrees(), 270.0);
        for (de, dn) in [(0.0, -1.0), (0.0, 1.0), (1.0, 0.0), (3.0, -4.0), (-2.0, 7.0)] {
            let got = correct_heading(de, dn).unwrap().degrees();
            assert!(circ_diff(got, reference_heading(de, dn)) < 1e-12);
        }
    }

    #[test]
    fn heading_zero_displacement() {
        assert_eq!(correct_heading(0.0, 0.0), Err(GeodesyError::ZeroDisplacement));
    }

    #[test]
    fn bearing_add_examples() {
        assert!((bearing_add(CompassBearing::new(350.0), 22.5).degrees() - 12.5).abs() < 1e-12);
        assert!((bearing_add(CompassBearing::new(268.780), 22.5).degrees() - 291.280).abs() < 1e-9);
        let z = bearing_add(CompassBearing::new(0.0), -0.0).degrees();
        assert_eq!(z, 0.0);
        assert!(z.is_sign_positive());
    }

    #[test]
    fn normalization_edges() {
        assert_eq!(CompassBearing::new(-1e-20).degrees(), 0.0);
        assert_eq!(CompassBearing::new(360.0).degrees(), 0.0);
        assert_eq!(CompassBearing::new(-90.0).degrees(), 270.0);
        assert_eq!(CompassBearing::new(720.5).degrees(), 0.5);
        assert!(CompassBearing::try_new(f64::NAN).is_none());
    }

    #[test]
    fn signed_offset_range() {
        let a = CompassBearing::new(350.0);
        assert!((signed_offset(a, CompassBearing::new(10.0)) - 20.0).abs() < 1e-12);
        assert!((signed_offset(CompassBearing::new(10.0), a) + 20.0).abs() < 1e-12);
        assert_eq!(signed_offset(CompassBearing::new(0.0), CompassBearing::new(180.0)), 180.0);
    }

    proptest! {
        #[test]
        fn heading_in_range(de in -1e4f64..1e4, dn in -1e4f64..1e4) {
            prop_assume!(de != 0.0 || dn != 0.0);
            let h = correct_heading(de, dn).unwrap().degrees();
            prop_assert!((0.0..360.0).contains(&h));
            prop_assert!(circ_diff(h, reference_heading(de, dn)) < 1e-9);
        }

        #[test]
        fn heading_scale_invariant(de in -1e3f64..1e3, dn in -1e3f64..1e3, k in 1e-3f64..1e3) {
            prop_assume!(de.abs() > 1e-6 || dn.abs() > 1e-6);
            let a = correct_heading(de, dn).unwrap().degrees();
            let b = correct_heading(k * de, k * dn).unwrap().degrees();
            prop_assert!(circ_diff(a, b) < 1e-9);
        }

        #[test]
        fn bearing_add_associative(b in 0f64..360.0, d1 in -1e3f64..1e3, d2 in -1e3f64..1e3) {
            let b = CompassBearing::new(b);
            let lhs = bearing_add(bearing_add(b, d1), d2).degrees();
            let rhs = bearing_add(b, d1 + d2).degrees();
            prop_assert!((0.0..360.0).contains(&lhs));
            prop_assert!(circ_diff(lhs, rhs) < 1e-9);
        }
    }
}
