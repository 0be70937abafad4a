use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn panoloc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_panoloc"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn features(dir: &Path, id: &str) -> serde_json::Value {
    let text = fs::read_to_string(dir.join("datasets").join(id).join("output/features.geojson")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn synth_then_run_all_recovers_objects() {
    let dir = tempfile::tempdir().unwrap();
    let out = panoloc(dir.path(), &["synth", "--seed", "7", "--objects", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("panoloc.toml").is_file());

    let out = panoloc(dir.path(), &["run-all", "--jobs", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let fc = features(dir.path(), "synth");
    assert_eq!(fc["features"].as_array().unwrap().len(), 5);
    assert!(dir.path().join("reports/accuracy.txt").is_file());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("balanced"), "{stdout}");
}

#[test]
fn stages_run_individually() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(panoloc(p, &["synth", "--dataset", "337p1", "--objects", "3", "--hydrants", "1"]).status.success());
    for stage in ["ingest", "slice", "detect", "locate", "report"] {
        let out = panoloc(p, &[stage, "--dataset", "337p1"]);
        assert_eq!(out.status.code(), Some(0), "{stage}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(features(p, "337p1")["features"].as_array().unwrap().len(), 4);
    let cardinals = fs::read_dir(p.join("datasets/337p1/cardinals")).unwrap().count();
    assert_eq!(cardinals, 8 * 200);
}

#[test]
fn run_all_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(panoloc(p, &["synth", "--objects", "4", "--noise"]).status.success());
    let grab = || {
        let mut files = Vec::new();
        for sub in ["datasets/synth/output", "datasets/synth/sidecars", "reports"] {
            let mut names: Vec<_> = fs::read_dir(p.join(sub)).unwrap().map(|e| e.unwrap().path()).collect();
            names.sort();
            files.extend(names.into_iter().map(|n| (n.clone(), fs::read(n).unwrap())));
        }
        files
    };
    assert!(panoloc(p, &["run-all"]).status.success());
    let first = grab();
    assert!(panoloc(p, &["run-all", "--jobs", "1"]).status.success());
    assert_eq!(first, grab());
}

#[test]
fn missing_config_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = panoloc(dir.path(), &["locate", "--config", "nope.toml", "--dataset", "337p1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.toml"));
}

#[test]
fn locate_before_detect_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(panoloc(dir.path(), &["synth", "--objects", "1"]).status.success());
    let out = panoloc(dir.path(), &["locate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("observations.json"));
}

#[test]
fn unreachable_detector_is_partial_failure() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(panoloc(p, &["synth", "--objects", "1", "--captures", "20"]).status.success());
    let cfg = fs::read_to_string(p.join("panoloc.toml")).unwrap();
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let cfg = cfg.replace("backend = \"mock\"", "backend = \"http\"").replace(
        "endpoint = \"\"",
        &format!("endpoint = \"http://127.0.0.1:{port}/\""),
    );
    let cfg = cfg.replace("base_delay_ms = 1000", "base_delay_ms = 1");
    fs::write(p.join("panoloc.toml"), cfg).unwrap();
    let out = panoloc(p, &["run-all"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}
