//! Synthetic scene -> ground-truth detections -> rays -> clusters, in memory.

use panoloc::cluster::{cluster_observations, ClusterParams};
use panoloc::detector::{detection_bearing, ObjectClass};
use panoloc::imaging::ImagingConfig;
use panoloc::synth::{generate, ground_truth_detect, NoiseSpec, RandomObjects, SceneSpec, SyntheticScene, TurnSegment};
use panoloc::triangulate::BearingObservation;

fn rays(scene: &SyntheticScene, cfg: &ImagingConfig, cardinal_one_only: bool) -> Vec<BearingObservation> {
    let mut out = Vec::new();
    for (k, cap) in scene.track.iter().enumerate() {
        for d in ground_truth_detect(scene, k, cfg) {
            if cardinal_one_only && d.cardinal_index != 1 {
                continue;
            }
            out.push(BearingObservation {
                origin: cap.projected,
                bearing: detection_bearing(&d, cap.heading, cfg).unwrap(),
                capture_ref: cap.capture_id.clone(),
                object_class: d.object_class,
                confidence: d.confidence,
                sequence_index: cap.sequence_index,
            });
        }
    }
    out
}

fn spec(seed: u64) -> SceneSpec {
    SceneSpec {
        seed,
        travel_bearing: (seed as f64 * 37.0) % 360.0,
        turns: vec![TurnSegment {
            start: 80,
            steps: 40,
            turn_per_step: if seed.is_multiple_of(2) { 2.0 } else { -2.0 },
        }],
        random_objects: vec![
            RandomObjects {
                class: ObjectClass::StopSign,
                count: 5,
            },
            RandomObjects {
                class: ObjectClass::FireHydrant,
                count: 2,
            },
        ],
        ..SceneSpec::default()
    }
}

#[test]
fn zero_noise_recovery_across_seeds() {
    let cfg = ImagingConfig::scaled(800);
    for seed in 0..40 {
        let scene = generate(&spec(seed)).unwrap();
        let obs = rays(&scene, &cfg, true);
        let out = cluster_observations(&obs, &ClusterParams::default());
        assert_eq!(out.estimates.len(), scene.objects.len(), "seed {seed}: spurious or merged objects");
        assert!(out.failed.is_empty(), "seed {seed}");
        for obj in &scene.objects {
            let err = out
                .estimates
                .iter()
                .filter(|e| e.object_class == obj.class)
                .map(|e| e.position.distance(&obj.position))
                .fold(f64::INFINITY, f64::min);
            assert!(err < 1e-3, "seed {seed} object {} off by {err}", obj.id);
        }
    }
}

#[test]
fn noisy_recovery_stays_close() {
    let cfg = ImagingConfig::default();
    for seed in 0..10 {
        let mut s = spec(seed);
        s.noise = Some(NoiseSpec::default());
        let scene = generate(&s).unwrap();
        let out = cluster_observations(&rays(&scene, &cfg, true), &ClusterParams::default());
        for obj in &scene.objects {
            let err = out
                .estimates
                .iter()
                .filter(|e| e.object_class == obj.class)
                .map(|e| e.position.distance(&obj.position))
                .fold(f64::INFINITY, f64::min);
            assert!(err < 2.0, "seed {seed} object {} off by {err} ft", obj.id);
        }
    }
}
