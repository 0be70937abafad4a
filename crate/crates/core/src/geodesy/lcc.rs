//! Lambert conformal conic (two standard parallels) on the GRS80 ellipsoid,
//! parameterized for NAD83 / California zone 6 in US survey feet.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use super::{GeoPoint, GeodesyError, ProjectedPoint, US_SURVEY_FOOT_M};

const MAX_ITERATIONS: usize = 20;
const CONVERGENCE_RAD: f64 = 1e-13;

/// Published zone definition; angles in degrees, offsets in US survey feet.
#[derive(Debug, Clone, Copy)]
pub struct ZoneDefinition {
    pub semi_major_m: f64,
    pub inverse_flattening: f64,
    pub standard_parallel_1: f64,
    pub standard_parallel_2: f64,
    pub origin_latitude: f64,
    pub central_meridian: f64,
    pub false_easting_ft: f64,
    pub false_northing_ft: f64,
}

/// NAD83 California zone 6 (33°53′ / 32°47′, origin 32°10′ N 116°15′ W).
pub const CA_ZONE6: ZoneDefinition = ZoneDefinition {
    semi_major_m: 6_378_137.0,
    inverse_flattening: 298.257_222_101,
    standard_parallel_1: 33.0 + 53.0 / 60.0,
    standard_parallel_2: 32.0 + 47.0 / 60.0,
    origin_latitude: 32.0 + 10.0 / 60.0,
    central_meridian: -116.25,
    false_easting_ft: 6_561_666.667,
    false_northing_ft: 1_640_416.667,
};

/// Derived cone constants, all lengths in US survey feet.
#[derive(Debug, Clone, Copy)]
struct Cone {
    e: f64,
    n: f64,
    a_f: f64,
    rho0: f64,
    lon0: f64,
    fe: f64,
    fn_: f64,
}

fn msfn(phi: f64, e: f64) -> f64 {
    let s = phi.sin();
    phi.cos() / (1.0 - e * e * s * s).sqrt()
}

fn tsfn(phi: f64, e: f64) -> f64 {
    let es = e * phi.sin();
    (FRAC_PI_4 - phi / 2.0).tan() / ((1.0 - es) / (1.0 + es)).powf(e / 2.0)
}

impl Cone {
    fn new(z: &ZoneDefinition) -> Self {
        let f = 1.0 / z.inverse_flattening;
        let e = (2.0 * f - f * f).sqrt();
        let a_ft = z.semi_major_m / US_SURVEY_FOOT_M;
        let p1 = z.standard_parallel_1.to_radians();
        let p2 = z.standard_parallel_2.to_radians();
        let p0 = z.origin_latitude.to_radians();
        let (m1, m2) = (msfn(p1, e), msfn(p2, e));
        let (t1, t2, t0) = (tsfn(p1, e), tsfn(p2, e), tsfn(p0, e));
        let n = (m1.ln() - m2.ln()) / (t1.ln() - t2.ln());
        let big_f = m1 / (n * t1.powf(n));
        let a_f = a_ft * big_f;
        Self {
            e,
            n,
            a_f,
            rho0: a_f * t0.powf(n),
            lon0: z.central_meridian.to_radians(),
            fe: z.false_easting_ft,
            fn_: z.false_northing_ft,
        }
    }
}

fn zone6() -> &'static Cone {
    use std::sync::OnceLock;
    static CONE: OnceLock<Cone> = OnceLock::new();
    CONE.get_or_init(|| Cone::new(&CA_ZONE6))
}

/// WGS84 degrees to zone 6 easting/northing (US survey feet).
pub fn project(p: &GeoPoint) -> Result<ProjectedPoint, GeodesyError> {
    if !p.latitude.is_finite() || !p.longitude.is_finite() {
        return Err(GeodesyError::OutOfDomain("non-finite coordinate".into()));
    }
    if p.latitude.abs() >= 90.0 {
        return Err(GeodesyError::OutOfDomain(format!("latitude {} at or beyond a pole", p.latitude)));
    }
    if p.longitude.abs() > 180.0 {
        return Err(GeodesyError::OutOfDomain(format!("longitude {}", p.longitude)));
    }
    let c = zone6();
    let phi = p.latitude.to_radians();
    let rho = c.a_f * tsfn(phi, c.e).powf(c.n);
    let mut dlon = p.longitude.to_radians() - c.lon0;
    // keep the cone angle continuous across the antimeridian
    if dlon > std::f64::consts::PI {
        dlon -= 2.0 * std::f64::consts::PI;
    } else if dlon < -std::f64::consts::PI {
        dlon += 2.0 * std::f64::consts::PI;
    }
    let gamma = c.n * dlon;
    Ok(ProjectedPoint::new(
        c.fe + rho * gamma.sin(),
        c.fn_ + c.rho0 - rho * gamma.cos(),
    ))
}

/// Inverse of [`project`]; altitude is not recovered.
pub fn unproject(p: &ProjectedPoint) -> Result<GeoPoint, GeodesyError> {
    let fail = GeodesyError::NonConvergence {
        easting: p.easting,
        northing: p.northing,
    };
    if !p.is_finite() {
        return Err(fail);
    }
    let c = zone6();
    let x = p.easting - c.fe;
    let y = c.rho0 - (p.northing - c.fn_);
    let rho = x.hypot(y).copysign(c.n);
    if rho == 0.0 {
        return Ok(GeoPoint {
            latitude: 90f64.copysign(c.n),
            longitude: c.lon0.to_degrees(),
            altitude: None,
        });
    }
    let t = (rho / c.a_f).powf(1.0 / c.n);
    let gamma = if c.n < 0.0 { (-x).atan2(-y) } else { x.atan2(y) };
    let lon = gamma / c.n + c.lon0;

    let mut phi = FRAC_PI_2 - 2.0 * t.atan();
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let es = c.e * phi.sin();
        let next = FRAC_PI_2 - 2.0 * (t * ((1.0 - es) / (1.0 + es)).powf(c.e / 2.0)).atan();
        let delta = (next - phi).abs();
        phi = next;
        if delta < CONVERGENCE_RAD {
            converged = true;
            break;
        }
    }
    if !converged || !phi.is_finite() || !lon.is_finite() {
        return Err(fail);
    }
    let mut lon_deg = lon.to_degrees();
    if lon_deg > 180.0 {
        lon_deg -= 360.0;
    } else if lon_deg < -180.0 {
        lon_deg += 360.0;
    }
    Ok(GeoPoint {
        latitude: phi.to_degrees(),
        longitude: lon_deg,
        altitude: None,
    })
}
