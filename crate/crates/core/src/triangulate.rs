//! Closed-form intersection of two bearing rays on the working plane.
//!
//! Compass bearings map onto line slopes with `x = easting`, `y = northing`:
//! `μ = cos(b) / sin(b)`. The two-line solution is
//!
//! ```text
//! x_C = (y_B − y_A + μ_A·x_A − μ_B·x_B) / (μ_A − μ_B)
//! y_C = y_A − μ_A·(x_A − x_C)
//! ```
//!
//! Near-vertical rays (due north/south) have no finite slope, so the solve
//! runs in an axis-swapped frame instead, or a 45°-rotated frame when one ray
//! is vertical in each of the first two.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::ObjectClass;
use crate::geodesy::{CompassBearing, ProjectedPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TriangulationError {
    #[error("bearing {0} is within the vertical tolerance of due north/south")]
    VerticalRay(f64),
    #[error("rays are parallel or separated by less than {min_separation}° ({separation}°)")]
    ParallelRays { separation: f64, min_separation: f64 },
    #[error("intersection lies behind the sensor")]
    BehindSensor,
    #[error("observations share the same origin")]
    CoincidentOrigins,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TriangulationParams {
    /// Minimum angular separation (mod 180) of a usable pair, degrees.
    pub min_separation: f64,
    /// Rays closer than this to due north/south are treated as vertical, degrees.
    pub vertical_epsilon: f64,
}

impl Default for TriangulationParams {
    fn default() -> Self {
        Self {
            min_separation: 2.0,
            vertical_epsilon: 0.05,
        }
    }
}

/// A half-line from a camera position toward a detected object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BearingObservation {
    pub origin: ProjectedPoint,
    pub bearing: CompassBearing,
    pub capture_ref: String,
    pub object_class: ObjectClass,
    pub confidence: f64,
    pub sequence_index: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairIntersection {
    pub position: ProjectedPoint,
    pub dist_a: f64,
    pub dist_b: f64,
    pub source_pair: (String, String),
    /// Angular separation of the two rays, degrees in `(0, 90]`.
    pub conditioning: f64,
}

/// Slope `Δnorthing/Δeasting` of a compass ray.
pub fn bearing_to_slope(b: CompassBearing, vertical_epsilon: f64) -> Result<f64, TriangulationError> {
    let (s, c) = b.radians().sin_cos();
    if s.abs() < vertical_epsilon.to_radians().sin() {
        return Err(TriangulationError::VerticalRay(b.degrees()));
    }
    Ok(c / s)
}

pub fn ray_distance(origin: &ProjectedPoint, target: &ProjectedPoint) -> f64 {
    origin.distance(target)
}

/// Angular separation of two undirected lines, in `[0, 90]`.
pub fn line_separation(a: CompassBearing, b: CompassBearing) -> f64 {
    let s = (a.degrees() - b.degrees()).abs() % 180.0;
    s.min(180.0 - s)
}

// Frames tried in order; each maps a compass bearing to a frame bearing and a
// point to frame coordinates.
#[derive(Clone, Copy)]
enum Frame {
    Identity,
    Swapped,
    Rotated45,
}

const FRAMES: [Frame; 3] = [Frame::Identity, Frame::Swapped, Frame::Rotated45];

impl Frame {
    fn bearing(self, b: CompassBearing) -> CompassBearing {
        match self {
            Frame::Identity => b,
            Frame::Swapped => CompassBearing::new(90.0 - b.degrees()),
            Frame::Rotated45 => CompassBearing::new(b.degrees() + 45.0),
        }
    }

    fn to_frame(self, x: f64, y: f64) -> (f64, f64) {
        match self {
            Frame::Identity => (x, y),
            Frame::Swapped => (y, x),
            // rotating the scene clockwise by 45° adds 45° to every bearing
            Frame::Rotated45 => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                (h * (x + y), h * (y - x))
            }
        }
    }

    fn unframe(self, x: f64, y: f64) -> (f64, f64) {
        match self {
            Frame::Identity => (x, y),
            Frame::Swapped => (y, x),
            Frame::Rotated45 => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                (h * (x - y), h * (x + y))
            }
        }
    }
}

/// Solve the two-line system in local coordinates.
fn solve_slopes(a: (f64, f64), mu_a: f64, b: (f64, f64), mu_b: f64) -> Option<(f64, f64)> {
    let denom = mu_a - mu_b;
    if denom == 0.0 || !denom.is_finite() {
        return None;
    }
    let (xa, ya) = a;
    let (xb, yb) = b;
    let xc = (yb - ya + mu_a * xa - mu_b * xb) / denom;
    // evaluate y on the flatter of the two lines to keep the error small
    let yc = if mu_a.abs() <= mu_b.abs() {
        ya - mu_a * (xa - xc)
    } else {
        yb - mu_b * (xb - xc)
    };
    (xc.is_finite() && yc.is_finite()).then_some((xc, yc))
}

pub fn intersect(
    a: &BearingObservation,
    b: &BearingObservation,
    params: &TriangulationParams,
) -> Result<PairIntersection, TriangulationError> {
    if a.origin == b.origin {
        return Err(TriangulationError::CoincidentOrigins);
    }
    let separation = line_separation(a.bearing, b.bearing);
    if separation < params.min_separation || separation == 0.0 {
        return Err(TriangulationError::ParallelRays {
            separation,
            min_separation: params.min_separation,
        });
    }

    // Local origin at the pair midpoint: symmetric in (a, b) and keeps the
    // arithmetic away from state-plane magnitudes.
    let mid_e = (a.origin.easting + b.origin.easting) / 2.0;
    let mid_n = (a.origin.northing + b.origin.northing) / 2.0;
    let la = (a.origin.easting - mid_e, a.origin.northing - mid_n);
    let lb = (b.origin.easting - mid_e, b.origin.northing - mid_n);

    let mut solved = None;
    for frame in FRAMES {
        let (Ok(mu_a), Ok(mu_b)) = (
            bearing_to_slope(frame.bearing(a.bearing), params.vertical_epsilon),
            bearing_to_slope(frame.bearing(b.bearing), params.vertical_epsilon),
        ) else {
            continue;
        };
        let fa = frame.to_frame(la.0, la.1);
        let fb = frame.to_frame(lb.0, lb.1);
        if let Some((xc, yc)) = solve_slopes(fa, mu_a, fb, mu_b) {
            solved = Some(frame.unframe(xc, yc));
            break;
        }
    }
    let Some((xc, yc)) = solved else {
        return Err(TriangulationError::ParallelRays {
            separation,
            min_separation: params.min_separation,
        });
    };

    for (origin, bearing) in [(la, a.bearing), (lb, b.bearing)] {
        let (s, c) = bearing.radians().sin_cos();
        let t = (xc - origin.0) * s + (yc - origin.1) * c;
        if t <= 0.0 {
            return Err(TriangulationError::BehindSensor);
        }
    }

    let position = ProjectedPoint::new(mid_e + xc, mid_n + yc);
    Ok(PairIntersection {
        dist_a: (xc - la.0).hypot(yc - la.1),
        dist_b: (xc - lb.0).hypot(yc - lb.1),
        position,
        source_pair: (a.capture_ref.clone(), b.capture_ref.clone()),
        conditioning: separation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn obs(e: f64, n: f64, b: f64, id: &str) -> BearingObservation {
        BearingObservation {
            origin: ProjectedPoint::new(e, n),
            bearing: CompassBearing::new(b),
            capture_ref: id.into(),
            object_class: ObjectClass::StopSign,
            confidence: 1.0,
            sequence_index: 0,
        }
    }

    // Parametric line solve (Cramer's rule on origin + t·direction); shares
    // nothing with the slope form above.
    fn oracle(a: &BearingObservation, b: &BearingObservation) -> (f64, f64) {
        let (sa, ca) = a.bearing.radians().sin_cos();
        let (sb, cb) = b.bearing.radians().sin_cos();
        let rx = b.origin.easting - a.origin.easting;
        let ry = b.origin.northing - a.origin.northing;
        let det = -sa * cb + ca * sb;
        let t = (-rx * cb + ry * sb) / det;
        (a.origin.easting + t * sa, a.origin.northing + t * ca)
    }

    #[test]
    fn slope_examples() {
        assert!(bearing_to_slope(CompassBearing::new(90.0), 0.05).unwrap().abs() < 1e-15);
        assert!((bearing_to_slope(CompassBearing::new(45.0), 0.05).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            bearing_to_slope(CompassBearing::new(0.0), 0.05),
            Err(TriangulationError::VerticalRay(_))
        ));
        assert!(bearing_to_slope(CompassBearing::new(180.02), 0.05).is_err());
    }

    #[test]
    fn isoceles() {
        let r = intersect(&obs(0.0, 0.0, 45.0, "a"), &obs(2.0, 0.0, 315.0, "b"), &Default::default()).unwrap();
        assert!((r.position.easting - 1.0).abs() < 1e-12);
        assert!((r.position.northing - 1.0).abs() < 1e-12);
        assert!((r.dist_a - 2f64.sqrt()).abs() < 1e-12);
        assert!((r.dist_b - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.conditioning, 90.0);
    }

    #[test]
    fn parallel() {
        let e = intersect(&obs(0.0, 0.0, 45.0, "a"), &obs(2.0, 0.0, 45.0, "b"), &Default::default());
        assert!(matches!(e, Err(TriangulationError::ParallelRays { .. })));
        let e = intersect(&obs(0.0, 0.0, 45.0, "a"), &obs(2.0, 0.0, 46.5, "b"), &Default::default());
        assert!(matches!(e, Err(TriangulationError::ParallelRays { .. })));
    }

    #[test]
    fn behind() {
        let e = intersect(&obs(0.0, 0.0, 225.0, "a"), &obs(2.0, 0.0, 135.0, "b"), &Default::default());
        assert_eq!(e, Err(TriangulationError::BehindSensor));
    }

    #[test]
    fn coincident() {
        let e = intersect(&obs(1.0, 1.0, 10.0, "a"), &obs(1.0, 1.0, 80.0, "b"), &Default::default());
        assert_eq!(e, Err(TriangulationError::CoincidentOrigins));
    }

    #[test]
    fn vertical_fallbacks() {
        // a due north; b due east -> swap frame makes b vertical, rotated frame solves
        let r = intersect(&obs(0.0, 0.0, 0.0, "a"), &obs(-10.0, 20.0, 90.0, "b"), &Default::default()).unwrap();
        assert!(r.position.easting.abs() < 1e-9 && (r.position.northing - 20.0).abs() < 1e-9);
        let r = intersect(&obs(5.0, 0.0, 180.0, "a"), &obs(0.0, -30.0, 45.0, "b"), &Default::default()).unwrap();
        assert!((r.position.easting - 5.0).abs() < 1e-9 && (r.position.northing + 25.0).abs() < 1e-9);
    }

    #[test]
    fn ray_distance_examples() {
        let o = ProjectedPoint::new(0.0, 0.0);
        assert_eq!(ray_distance(&o, &ProjectedPoint::new(3.0, 4.0)), 5.0);
        assert_eq!(ray_distance(&o, &o), 0.0);
    }

    proptest! {
        #[test]
        fn matches_parametric_oracle(
            ae in -500f64..500.0, an in -500f64..500.0,
            oe in -500f64..500.0, on in -500f64..500.0,
            be in -500f64..500.0, bn in -500f64..500.0,
        ) {
            let target = ProjectedPoint::new(oe, on);
            let a0 = ProjectedPoint::new(ae, an);
            let b0 = ProjectedPoint::new(be, bn);
            prop_assume!(a0.distance(&target) > 1.0 && b0.distance(&target) > 1.0);
            let a = obs(ae, an, a0.bearing_to(&target).unwrap().degrees(), "a");
            let b = obs(be, bn, b0.bearing_to(&target).unwrap().degrees(), "b");
            prop_assume!(line_separation(a.bearing, b.bearing) >= 2.0);
            let r = intersect(&a, &b, &Default::default()).unwrap();
            let (ox, oy) = oracle(&a, &b);
            prop_assert!((r.position.easting - ox).abs() < 1e-6);
            prop_assert!((r.position.northing - oy).abs() < 1e-6);
            prop_assert!(r.position.distance(&target) < 1e-6);
            let rev = intersect(&b, &a, &Default::default()).unwrap();
            prop_assert!(r.position.distance(&rev.position) < 1e-9);
        }
    }
}
