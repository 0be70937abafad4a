use serde::{Deserialize, Serialize};

use super::{ClusterError, ClusterGroup, ClusterParams};
use crate::detector::ObjectClass;
use crate::geodesy::{project, unproject, CompassBearing, GeoPoint, ProjectedPoint};
use crate::triangulate::intersect;

/// Located object with its dispersion and support statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectEstimate {
    pub object_id: String,
    pub object_class: ObjectClass,
    pub latitude: f64,
    pub longitude: f64,
    pub position: ProjectedPoint,
    /// Sample standard deviation of the pair intersections, degrees.
    pub latitude_sd: f64,
    pub longitude_sd: f64,
    /// Distance between consecutive member cameras, feet.
    pub drive_step_mean: f64,
    pub drive_step_sd: f64,
    /// Camera-to-intersection distance over all retained pairs, feet.
    pub object_distance_mean: f64,
    pub object_distance_sd: f64,
    pub observation_count: usize,
    pub pair_count: usize,
    pub retained_pairs: usize,
    pub best_capture: String,
    pub best_bearing: CompassBearing,
    pub best_confidence: f64,
    pub members: Vec<String>,
}

/// Mean and sample standard deviation (`n − 1`); the deviation is zero for a
/// single value and both are `None` for none.
pub fn sample_mean_sd(values: &[f64]) -> Option<(f64, f64)> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Some((mean, 0.0));
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    Some((mean, (ss / (n - 1) as f64).sqrt()))
}

/// Intersects every pair of member rays and averages what survives the
/// separation, forward and range checks.
pub fn estimate_cluster(group: &ClusterGroup, params: &ClusterParams) -> Result<ObjectEstimate, ClusterError> {
    let tri = params.triangulation();
    let members = &group.members;
    let mut lats = Vec::new();
    let mut lons = Vec::new();
    let mut dists = Vec::new();
    let mut pairs = 0;
    for i in 0..members.len() {
        for j in i + 1..members.len() {
            pairs += 1;
            let Ok(hit) = intersect(&members[i], &members[j], &tri) else {
                continue;
            };
            if hit.dist_a > params.max_detection_range || hit.dist_b > params.max_detection_range {
                continue;
            }
            let geo = unproject(&hit.position)?;
            lats.push(geo.latitude);
            lons.push(geo.longitude);
            dists.extend([hit.dist_a, hit.dist_b]);
        }
    }
    let no_pairs = || ClusterError::NoValidPairs {
        class: group.object_class.clone(),
        cluster_id: group.cluster_id,
        pairs,
    };
    let (latitude, latitude_sd) = sample_mean_sd(&lats).ok_or_else(no_pairs)?;
    let (longitude, longitude_sd) = sample_mean_sd(&lons).ok_or_else(no_pairs)?;
    let (object_distance_mean, object_distance_sd) = sample_mean_sd(&dists).ok_or_else(no_pairs)?;

    let steps: Vec<f64> = members.windows(2).map(|w| w[0].origin.distance(&w[1].origin)).collect();
    let (drive_step_mean, drive_step_sd) = sample_mean_sd(&steps).unwrap_or((0.0, 0.0));

    let best = members
        .iter()
        .reduce(|a, b| if b.confidence > a.confidence { b } else { a })
        .ok_or_else(no_pairs)?;
    let position = project(&GeoPoint {
        latitude,
        longitude,
        altitude: None,
    })?;

    Ok(ObjectEstimate {
        object_id: format!("{}-{}", group.object_class, group.cluster_id),
        object_class: group.object_class.clone(),
        latitude,
        longitude,
        position,
        latitude_sd,
        longitude_sd,
        drive_step_mean,
        drive_step_sd,
        object_distance_mean,
        object_distance_sd,
        observation_count: members.len(),
        pair_count: pairs,
        retained_pairs: lats.len(),
        best_capture: best.capture_ref.clone(),
        best_bearing: best.bearing,
        best_confidence: best.confidence,
        members: members.iter().map(|m| m.capture_ref.clone()).collect(),
    })
}
