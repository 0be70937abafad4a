use geojson::{Feature, FeatureCollection, Geometry, JsonObject, Value};
use serde_json::json;

use crate::cluster::ObjectEstimate;
use crate::imaging::classify_directional;

/// Point feature for one located object, coordinates `[longitude, latitude]`.
pub fn feature_record(estimate: &ObjectEstimate, dataset_id: &str) -> Feature {
    let direction = classify_directional(estimate.best_bearing);
    let mut props = JsonObject::new();
    let mut put = |k: &str, v: serde_json::Value| {
        props.insert(k.to_string(), v);
    };
    put("object_id", json!(estimate.object_id));
    put("object_class", json!(estimate.object_class.as_str()));
    put("dataset_id", json!(dataset_id));
    put("latitude", json!(estimate.latitude));
    put("longitude", json!(estimate.longitude));
    put("latitude_sd", json!(estimate.latitude_sd));
    put("longitude_sd", json!(estimate.longitude_sd));
    put("drive_step_mean_ft", json!(estimate.drive_step_mean));
    put("drive_step_sd_ft", json!(estimate.drive_step_sd));
    put("object_distance_mean_ft", json!(estimate.object_distance_mean));
    put("object_distance_sd_ft", json!(estimate.object_distance_sd));
    put("observations", json!(estimate.observation_count));
    put("pairs", json!(estimate.pair_count));
    put("retained_pairs", json!(estimate.retained_pairs));
    put("best_capture", json!(estimate.best_capture));
    put("best_bearing", json!(estimate.best_bearing.degrees()));
    put("best_confidence", json!(estimate.best_confidence));
    put("directional_class", json!(direction.label()));
    put("directional_code", json!(direction.code));
    Feature {
        bbox: None,
        geometry: Some(Geometry::new(Value::Point(vec![estimate.longitude, estimate.latitude]))),
        id: None,
        properties: Some(props),
        foreign_members: None,
    }
}

pub fn feature_collection(estimates: &[ObjectEstimate], dataset_id: &str) -> FeatureCollection {
    FeatureCollection {
        bbox: None,
        features: estimates.iter().map(|e| feature_record(e, dataset_id)).collect(),
        foreign_members: None,
    }
}
