//! Groups bearing observations that point at the same object and reduces
//! each group to a position estimate.
//!
//! Each ray is represented by a seed point a nominal distance along it; seeds
//! are density-clustered per object class, then every pair of rays inside a
//! cluster is intersected and the intersections are averaged.

mod dbscan;
mod estimate;

pub use dbscan::dbscan;
pub use estimate::{estimate_cluster, sample_mean_sd, ObjectEstimate};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::ObjectClass;
use crate::geodesy::{GeodesyError, ProjectedPoint};
use crate::triangulate::{BearingObservation, TriangulationParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("cluster {cluster_id} ({class}) has no usable ray pairs out of {pairs}")]
    NoValidPairs {
        class: ObjectClass,
        cluster_id: usize,
        pairs: usize,
    },
    #[error(transparent)]
    Geodesy(#[from] GeodesyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterParams {
    /// Neighborhood radius, feet.
    pub eps: f64,
    /// Points (self included) needed for a core point.
    pub min_pts: usize,
    pub min_separation: f64,
    pub vertical_epsilon: f64,
    /// Intersections farther than this from either camera are dropped.
    pub max_detection_range: f64,
    /// Distance along each ray at which its seed point is placed.
    pub nominal_range: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            eps: 15.0,
            min_pts: 2,
            min_separation: 2.0,
            vertical_epsilon: 0.05,
            max_detection_range: 150.0,
            nominal_range: 30.0,
        }
    }
}

impl ClusterParams {
    pub fn triangulation(&self) -> TriangulationParams {
        TriangulationParams {
            min_separation: self.min_separation,
            vertical_epsilon: self.vertical_epsilon,
        }
    }
}

pub fn seed_point(obs: &BearingObservation, nominal_range: f64) -> ProjectedPoint {
    obs.origin.offset(obs.bearing, nominal_range)
}

/// Observations assigned to one cluster, in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterGroup {
    pub object_class: ObjectClass,
    pub cluster_id: usize,
    pub members: Vec<BearingObservation>,
}

#[derive(Debug, Clone, Default)]
pub struct ClusteringOutcome {
    pub estimates: Vec<ObjectEstimate>,
    pub noise: Vec<BearingObservation>,
    /// Clusters that produced no estimate, with the reason.
    pub failed: Vec<(ClusterGroup, ClusterError)>,
}

impl ClusteringOutcome {
    pub fn member_count(&self) -> usize {
        self.estimates.iter().map(|e| e.observation_count).sum::<usize>()
            + self.failed.iter().map(|(g, _)| g.members.len()).sum::<usize>()
    }
}

fn canonical(a: &BearingObservation, b: &BearingObservation) -> std::cmp::Ordering {
    a.sequence_index
        .cmp(&b.sequence_index)
        .then_with(|| a.capture_ref.cmp(&b.capture_ref))
        .then_with(|| a.bearing.degrees().total_cmp(&b.bearing.degrees()))
}

/// Splits observations by class and clusters each class independently.
pub fn group_observations(observations: &[BearingObservation], params: &ClusterParams) -> (Vec<ClusterGroup>, Vec<BearingObservation>) {
    let mut by_class: BTreeMap<ObjectClass, Vec<BearingObservation>> = BTreeMap::new();
    for o in observations {
        by_class.entry(o.object_class.clone()).or_default().push(o.clone());
    }
    let mut groups = Vec::new();
    let mut noise = Vec::new();
    for (class, mut obs) in by_class {
        obs.sort_by(canonical);
        let seeds: Vec<ProjectedPoint> = obs.iter().map(|o| seed_point(o, params.nominal_range)).collect();
        let labels = dbscan(&seeds, params.eps, params.min_pts);
        let count = labels.iter().flatten().max().map_or(0, |m| m + 1);
        let mut members: Vec<Vec<BearingObservation>> = vec![Vec::new(); count];
        for (o, label) in obs.into_iter().zip(labels) {
            match label {
                Some(id) => members[id].push(o),
                None => noise.push(o),
            }
        }
        groups.extend(members.into_iter().enumerate().map(|(cluster_id, members)| ClusterGroup {
            object_class: class.clone(),
            cluster_id,
            members,
        }));
    }
    (groups, noise)
}

pub fn cluster_observations(observations: &[BearingObservation], params: &ClusterParams) -> ClusteringOutcome {
    let (groups, noise) = group_observations(observations, params);
    let mut out = ClusteringOutcome {
        noise,
        ..Default::default()
    };
    let mut per_class: BTreeMap<ObjectClass, usize> = BTreeMap::new();
    for g in groups {
        match estimate_cluster(&g, params) {
            Ok(mut e) => {
                let n = per_class.entry(g.object_class.clone()).or_default();
                *n += 1;
                e.object_id = format!("{}-{:03}", g.object_class, n);
                out.estimates.push(e);
            }
            Err(err) => {
                log::warn!("{err}");
                out.failed.push((g, err));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesy::CompassBearing;

    fn ray(e: f64, n: f64, b: f64, seq: u64, class: ObjectClass) -> BearingObservation {
        BearingObservation {
            origin: ProjectedPoint::new(e, n),
            bearing: CompassBearing::new(b),
            capture_ref: format!("cap{seq:03}"),
            object_class: class,
            confidence: 0.9,
            sequence_index: seq,
        }
    }

    fn toward(target: ProjectedPoint, from: ProjectedPoint, seq: u64, class: ObjectClass) -> BearingObservation {
        let b = from.bearing_to(&target).unwrap();
        ray(from.easting, from.northing, b.degrees(), seq, class)
    }

    #[test]
    fn two_objects_two_classes() {
        let sign = ProjectedPoint::new(1000.0, 1030.0);
        let hydrant = ProjectedPoint::new(1400.0, 975.0);
        let mut obs = Vec::new();
        for k in 0..8 {
            let cam = ProjectedPoint::new(960.0 + 10.0 * k as f64, 1000.0);
            obs.push(toward(sign, cam, k, ObjectClass::StopSign));
            let cam = ProjectedPoint::new(1360.0 + 10.0 * k as f64, 1000.0);
            obs.push(toward(hydrant, cam, 100 + k, ObjectClass::FireHydrant));
        }
        let out = cluster_observations(&obs, &ClusterParams::default());
        assert_eq!(out.estimates.len(), 2);
        assert!(out.noise.is_empty());
        let s = out.estimates.iter().find(|e| e.object_class == ObjectClass::StopSign).unwrap();
        assert!(s.position.distance(&sign) < 1e-6, "{:?}", s.position);
        assert_eq!(s.object_id, "stop_sign-001");
        let h = out.estimates.iter().find(|e| e.object_class == ObjectClass::FireHydrant).unwrap();
        assert!(h.position.distance(&hydrant) < 1e-6);
        assert_eq!(out.member_count() + out.noise.len(), obs.len());
    }

    #[test]
    fn classes_never_share_a_cluster() {
        let target = ProjectedPoint::new(0.0, 40.0);
        let obs: Vec<_> = (0..6)
            .map(|k| {
                let class = if k % 2 == 0 { ObjectClass::StopSign } else { ObjectClass::FireHydrant };
                toward(target, ProjectedPoint::new(-30.0 + 10.0 * k as f64, 0.0), k, class)
            })
            .collect();
        let (groups, _) = group_observations(&obs, &ClusterParams::default());
        for g in groups {
            assert!(g.members.iter().all(|m| m.object_class == g.object_class));
        }
    }

    #[test]
    fn isolated_ray_is_noise() {
        let obs = vec![ray(0.0, 0.0, 45.0, 0, ObjectClass::StopSign)];
        let out = cluster_observations(&obs, &ClusterParams::default());
        assert!(out.estimates.is_empty());
        assert_eq!(out.noise.len(), 1);
    }

    #[test]
    fn parallel_cluster_fails_cleanly() {
        // seeds coincide closely but every pair is below the separation floor
        let obs: Vec<_> = (0..3).map(|k| ray(k as f64, 0.0, 45.0, k, ObjectClass::StopSign)).collect();
        let out = cluster_observations(&obs, &ClusterParams::default());
        assert!(out.estimates.is_empty());
        assert!(matches!(out.failed[0].1, ClusterError::NoValidPairs { pairs: 3, .. }));
        assert_eq!(out.member_count(), 3);
    }
}
