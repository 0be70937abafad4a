//! C ABI over the panoloc core.
//!
//! Every fallible function returns a [`PanolocStatus`]; on failure a
//! human-readable message is available from [`panoloc_last_error`] on the
//! same thread. Collections are exposed as opaque handles that the caller
//! must release with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use panoloc::cluster::{cluster_observations, ClusterParams, ObjectEstimate};
use panoloc::geodesy::{self, CompassBearing, GeoPoint, GeodesyError, ProjectedPoint};
use panoloc::imaging::{self, ImagingConfig, DIRECTIONAL_CLASSES};
use panoloc::pipeline::{run_dataset, PipelineConfig, PipelineError};
use panoloc::triangulate::{self, BearingObservation, TriangulationError, TriangulationParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PanolocStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfDomain = 3,
    NoConvergence = 4,
    /// Rays are parallel, vertical or separated by less than the floor.
    IllConditioned = 5,
    BehindSensor = 6,
    Io = 7,
    Config = 8,
    /// The run finished but some slices were skipped.
    Partial = 9,
    Panic = 10,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: PanolocStatus, msg: impl Into<String>) -> PanolocStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> PanolocStatus) -> PanolocStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(PanolocStatus::Panic, "internal panic"),
    }
}

fn geodesy_status(e: GeodesyError) -> PanolocStatus {
    let status = match e {
        GeodesyError::NonConvergence { .. } => PanolocStatus::NoConvergence,
        GeodesyError::ZeroDisplacement => PanolocStatus::InvalidArgument,
        GeodesyError::OutOfDomain(_) => PanolocStatus::OutOfDomain,
    };
    fail(status, e.to_string())
}

fn triangulation_status(e: TriangulationError) -> PanolocStatus {
    let status = match e {
        TriangulationError::BehindSensor => PanolocStatus::BehindSensor,
        TriangulationError::CoincidentOrigins => PanolocStatus::InvalidArgument,
        TriangulationError::VerticalRay(_) | TriangulationError::ParallelRays { .. } => PanolocStatus::IllConditioned,
    };
    fail(status, e.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, PanolocStatus> {
    if p.is_null() {
        return Err(fail(PanolocStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(PanolocStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn panoloc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn panoloc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Geographic degrees to state-plane feet.
///
/// # Safety
/// `easting` and `northing` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn panoloc_project(latitude: f64, longitude: f64, easting: *mut f64, northing: *mut f64) -> PanolocStatus {
    guard(|| {
        if easting.is_null() || northing.is_null() {
            return fail(PanolocStatus::NullPointer, "output pointer is null");
        }
        let p = match GeoPoint::new(latitude, longitude).and_then(|g| geodesy::project(&g)) {
            Ok(p) => p,
            Err(e) => return geodesy_status(e),
        };
        *easting = p.easting;
        *northing = p.northing;
        PanolocStatus::Ok
    })
}

/// State-plane feet to geographic degrees.
///
/// # Safety
/// `latitude` and `longitude` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn panoloc_unproject(easting: f64, northing: f64, latitude: *mut f64, longitude: *mut f64) -> PanolocStatus {
    guard(|| {
        if latitude.is_null() || longitude.is_null() {
            return fail(PanolocStatus::NullPointer, "output pointer is null");
        }
        match geodesy::unproject(&ProjectedPoint::new(easting, northing)) {
            Ok(g) => {
                *latitude = g.latitude;
                *longitude = g.longitude;
                PanolocStatus::Ok
            }
            Err(e) => geodesy_status(e),
        }
    })
}

/// Corrected heading from a displacement between consecutive fixes.
///
/// # Safety
/// `heading` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn panoloc_correct_heading(delta_easting: f64, delta_northing: f64, heading: *mut f64) -> PanolocStatus {
    guard(|| {
        if heading.is_null() {
            return fail(PanolocStatus::NullPointer, "heading is null");
        }
        match geodesy::correct_heading(delta_easting, delta_northing) {
            Ok(h) => {
                *heading = h.degrees();
                PanolocStatus::Ok
            }
            Err(e) => geodesy_status(e),
        }
    })
}

/// Azimuth of a photosphere column for a panorama `width` pixels wide.
///
/// # Safety
/// `bearing` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn panoloc_pixel_bearing(heading: f64, column: f64, width: u32, bearing: *mut f64) -> PanolocStatus {
    guard(|| {
        if bearing.is_null() {
            return fail(PanolocStatus::NullPointer, "bearing is null");
        }
        let Some(h) = CompassBearing::try_new(heading) else {
            return fail(PanolocStatus::InvalidArgument, format!("heading {heading} is not finite"));
        };
        if width == 0 {
            return fail(PanolocStatus::InvalidArgument, "width is zero");
        }
        match imaging::pixel_bearing(h, column, &ImagingConfig::scaled(width)) {
            Ok(b) => {
                *bearing = b.degrees();
                PanolocStatus::Ok
            }
            Err(e) => fail(PanolocStatus::OutOfDomain, e.to_string()),
        }
    })
}

/// Directional class id (1..=32) of a bearing; 0 for a non-finite input.
#[no_mangle]
pub extern "C" fn panoloc_classify_directional(bearing: f64) -> u8 {
    CompassBearing::try_new(bearing).map_or(0, |b| imaging::classify_directional(b).id)
}

/// Static code ("N", "NbE", ...) for a directional class id, or NULL.
#[no_mangle]
pub extern "C" fn panoloc_directional_code(id: u8) -> *const c_char {
    static CODES: [&str; 32] = [
        "N\0", "NbE\0", "NNE\0", "NEbN\0", "NE\0", "NEbE\0", "ENE\0", "EbN\0", "E\0", "EbS\0", "ESE\0", "SEbE\0",
        "SE\0", "SEbS\0", "SSE\0", "SbE\0", "S\0", "SbW\0", "SSW\0", "SWbS\0", "SW\0", "SWbW\0", "WSW\0", "WbS\0",
        "W\0", "WbN\0", "WNW\0", "NWbW\0", "NW\0", "NWbN\0", "NNW\0", "NbW\0",
    ];
    match id {
        1..=32 => {
            let code = CODES[usize::from(id - 1)];
            debug_assert_eq!(code.trim_end_matches('\0'), DIRECTIONAL_CLASSES[usize::from(id - 1)].code);
            code.as_ptr().cast()
        }
        _ => ptr::null(),
    }
}

/// A bearing ray on the working plane.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PanolocRay {
    pub easting: f64,
    pub northing: f64,
    pub bearing: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PanolocIntersection {
    pub easting: f64,
    pub northing: f64,
    pub dist_a: f64,
    pub dist_b: f64,
    /// Angular separation of the rays, degrees.
    pub separation: f64,
}

fn observation(r: &PanolocRay, id: &str) -> Option<BearingObservation> {
    Some(BearingObservation {
        origin: ProjectedPoint::new(r.easting, r.northing),
        bearing: CompassBearing::try_new(r.bearing)?,
        capture_ref: id.into(),
        object_class: panoloc::detector::ObjectClass::Other(String::new()),
        confidence: 1.0,
        sequence_index: 0,
    })
}

/// Intersects two rays. A separation floor of 2° and a vertical tolerance
/// of 0.05° are typical.
///
/// # Safety
/// `a`, `b` must point to valid rays and `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn panoloc_intersect(
    a: *const PanolocRay,
    b: *const PanolocRay,
    min_separation: f64,
    vertical_epsilon: f64,
    out: *mut PanolocIntersection,
) -> PanolocStatus {
    guard(|| {
        if a.is_null() || b.is_null() || out.is_null() {
            return fail(PanolocStatus::NullPointer, "ray or output pointer is null");
        }
        let (Some(oa), Some(ob)) = (observation(&*a, "a"), observation(&*b, "b")) else {
            return fail(PanolocStatus::InvalidArgument, "bearing is not finite");
        };
        let params = TriangulationParams {
            min_separation,
            vertical_epsilon,
        };
        match triangulate::intersect(&oa, &ob, &params) {
            Ok(hit) => {
                *out = PanolocIntersection {
                    easting: hit.position.easting,
                    northing: hit.position.northing,
                    dist_a: hit.dist_a,
                    dist_b: hit.dist_b,
                    separation: hit.conditioning,
                };
                PanolocStatus::Ok
            }
            Err(e) => triangulation_status(e),
        }
    })
}

/// Growable set of bearing observations.
pub struct PanolocObservationSet {
    items: Vec<BearingObservation>,
}

/// Located objects from [`panoloc_locate`].
pub struct PanolocResult {
    objects: Vec<ObjectEstimate>,
    classes: Vec<CString>,
    noise: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PanolocObject {
    pub latitude: f64,
    pub longitude: f64,
    pub easting: f64,
    pub northing: f64,
    pub latitude_sd: f64,
    pub longitude_sd: f64,
    pub object_distance_mean: f64,
    pub observation_count: usize,
    pub retained_pairs: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PanolocClusterParams {
    pub eps: f64,
    pub min_pts: usize,
    pub min_separation: f64,
    pub vertical_epsilon: f64,
    pub max_detection_range: f64,
    pub nominal_range: f64,
}

impl From<PanolocClusterParams> for ClusterParams {
    fn from(p: PanolocClusterParams) -> Self {
        ClusterParams {
            eps: p.eps,
            min_pts: p.min_pts,
            min_separation: p.min_separation,
            vertical_epsilon: p.vertical_epsilon,
            max_detection_range: p.max_detection_range,
            nominal_range: p.nominal_range,
        }
    }
}

#[no_mangle]
pub extern "C" fn panoloc_cluster_params_default() -> PanolocClusterParams {
    let d = ClusterParams::default();
    PanolocClusterParams {
        eps: d.eps,
        min_pts: d.min_pts,
        min_separation: d.min_separation,
        vertical_epsilon: d.vertical_epsilon,
        max_detection_range: d.max_detection_range,
        nominal_range: d.nominal_range,
    }
}

#[no_mangle]
pub extern "C" fn panoloc_observations_new() -> *mut PanolocObservationSet {
    Box::into_raw(Box::new(PanolocObservationSet { items: Vec::new() }))
}

/// Appends one observation. `class_name` is e.g. "stop_sign";
/// `capture_ref` identifies the capture and may be NULL.
///
/// # Safety
/// `set` must come from [`panoloc_observations_new`]; strings must be
/// NUL-terminated or NULL where allowed.
#[no_mangle]
pub unsafe extern "C" fn panoloc_observations_push(
    set: *mut PanolocObservationSet,
    ray: PanolocRay,
    class_name: *const c_char,
    capture_ref: *const c_char,
    confidence: f64,
    sequence_index: u64,
) -> PanolocStatus {
    guard(|| {
        let Some(set) = set.as_mut() else {
            return fail(PanolocStatus::NullPointer, "observation set is null");
        };
        let class = match str_arg(class_name, "class_name") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let id = if capture_ref.is_null() {
            format!("obs{}", set.items.len())
        } else {
            match str_arg(capture_ref, "capture_ref") {
                Ok(s) => s.to_string(),
                Err(s) => return s,
            }
        };
        if !(ray.easting.is_finite() && ray.northing.is_finite()) {
            return fail(PanolocStatus::InvalidArgument, "origin is not finite");
        }
        let Some(mut obs) = observation(&ray, &id) else {
            return fail(PanolocStatus::InvalidArgument, "bearing is not finite");
        };
        obs.object_class = class.parse().unwrap_or_else(|e| match e {});
        obs.confidence = confidence;
        obs.sequence_index = sequence_index;
        set.items.push(obs);
        PanolocStatus::Ok
    })
}

/// # Safety
/// `set` must come from [`panoloc_observations_new`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn panoloc_observations_len(set: *const PanolocObservationSet) -> usize {
    set.as_ref().map_or(0, |s| s.items.len())
}

/// # Safety
/// `set` must come from [`panoloc_observations_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn panoloc_observations_free(set: *mut PanolocObservationSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Clusters the observations and locates one object per cluster.
/// `params` may be NULL for defaults. On success `*out` owns a result that
/// must be released with [`panoloc_result_free`].
///
/// # Safety
/// `set` must be a live observation set and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn panoloc_locate(
    set: *const PanolocObservationSet,
    params: *const PanolocClusterParams,
    out: *mut *mut PanolocResult,
) -> PanolocStatus {
    guard(|| {
        let (Some(set), false) = (set.as_ref(), out.is_null()) else {
            return fail(PanolocStatus::NullPointer, "observation set or output is null");
        };
        let params: ClusterParams = params.as_ref().map_or_else(ClusterParams::default, |p| (*p).into());
        if params.eps.is_nan() || params.eps <= 0.0 || params.min_pts == 0 {
            return fail(PanolocStatus::InvalidArgument, "eps and min_pts must be positive");
        }
        let outcome = cluster_observations(&set.items, &params);
        let classes = outcome
            .estimates
            .iter()
            .map(|e| CString::new(e.object_class.as_str().replace('\0', " ")).expect("no interior NUL"))
            .collect();
        *out = Box::into_raw(Box::new(PanolocResult {
            objects: outcome.estimates,
            classes,
            noise: outcome.noise.len(),
        }));
        PanolocStatus::Ok
    })
}

/// # Safety
/// `result` must come from [`panoloc_locate`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn panoloc_result_len(result: *const PanolocResult) -> usize {
    result.as_ref().map_or(0, |r| r.objects.len())
}

/// Observations DBSCAN labelled as noise.
///
/// # Safety
/// `result` must come from [`panoloc_locate`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn panoloc_result_noise(result: *const PanolocResult) -> usize {
    result.as_ref().map_or(0, |r| r.noise)
}

/// # Safety
/// `result` must come from [`panoloc_locate`]; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn panoloc_result_get(result: *const PanolocResult, index: usize, out: *mut PanolocObject) -> PanolocStatus {
    guard(|| {
        let (Some(r), false) = (result.as_ref(), out.is_null()) else {
            return fail(PanolocStatus::NullPointer, "result or output is null");
        };
        let Some(e) = r.objects.get(index) else {
            return fail(PanolocStatus::InvalidArgument, format!("index {index} out of range"));
        };
        *out = PanolocObject {
            latitude: e.latitude,
            longitude: e.longitude,
            easting: e.position.easting,
            northing: e.position.northing,
            latitude_sd: e.latitude_sd,
            longitude_sd: e.longitude_sd,
            object_distance_mean: e.object_distance_mean,
            observation_count: e.observation_count,
            retained_pairs: e.retained_pairs,
        };
        PanolocStatus::Ok
    })
}

/// Class name of object `index`, owned by the result; NULL when out of range.
///
/// # Safety
/// `result` must come from [`panoloc_locate`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn panoloc_result_class(result: *const PanolocResult, index: usize) -> *const c_char {
    result
        .as_ref()
        .and_then(|r| r.classes.get(index))
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// # Safety
/// `result` must come from [`panoloc_locate`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn panoloc_result_free(result: *mut PanolocResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Runs every stage for one dataset of a TOML configuration and reports
/// the number of located objects. Returns `Partial` when slices were skipped.
///
/// # Safety
/// Strings must be NUL-terminated; `object_count` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn panoloc_run_dataset(
    config_path: *const c_char,
    dataset_id: *const c_char,
    object_count: *mut usize,
) -> PanolocStatus {
    guard(|| {
        let path = match str_arg(config_path, "config_path") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let id = match str_arg(dataset_id, "dataset_id") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let cfg = match PipelineConfig::load(Path::new(path)) {
            Ok(c) => c,
            Err(e) => return fail(PanolocStatus::Config, e.to_string()),
        };
        match run_dataset(id, &cfg) {
            Ok(run) => {
                if let Some(n) = object_count.as_mut() {
                    *n = run.outcome.estimates.len();
                }
                if run.is_partial() {
                    fail(
                        PanolocStatus::Partial,
                        format!("{} slices skipped", run.summary.failed_slices),
                    )
                } else {
                    PanolocStatus::Ok
                }
            }
            Err(e @ PipelineError::Config { .. }) => fail(PanolocStatus::Config, e.to_string()),
            Err(e) => fail(PanolocStatus::Io, e.to_string()),
        }
    })
}
