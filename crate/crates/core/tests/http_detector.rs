use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use panoloc::detector::{Detector, DetectorError, HttpDetector, HttpDetectorConfig, ObjectClass, RetryPolicy};
use panoloc::geodesy::CompassBearing;
use panoloc::imaging::{classify_directional, CardinalSlice};

struct Reply {
    status: u16,
    headers: Vec<(&'static str, String)>,
    body: String,
    delay: Duration,
}

fn reply(status: u16, body: &str) -> Reply {
    Reply {
        status,
        headers: vec![],
        body: body.into(),
        delay: Duration::ZERO,
    }
}

#[derive(Default)]
struct Seen {
    requests: AtomicUsize,
    active: AtomicUsize,
    peak: AtomicUsize,
    headers: Mutex<Vec<String>>,
}

fn read_request(stream: &mut TcpStream, seen: &Seen) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut len = 0;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
            break;
        }
        let lower = line.to_ascii_lowercase();
        if let Some(v) = lower.strip_prefix("content-length:") {
            len = v.trim().parse().unwrap();
        }
        seen.headers.lock().unwrap().push(line.trim_end().to_string());
    }
    let mut body = vec![0; len];
    reader.read_exact(&mut body).unwrap();
}

/// Serves the queued replies in order, one connection each, repeating the last one.
fn serve(replies: Vec<Reply>) -> (String, Arc<Seen>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let seen = Arc::new(Seen::default());
    let replies = Arc::new(replies);
    let s = seen.clone();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let seen = s.clone();
            let replies = replies.clone();
            thread::spawn(move || {
                let n = seen.requests.fetch_add(1, Ordering::SeqCst);
                read_request(&mut stream, &seen);
                let now = seen.active.fetch_add(1, Ordering::SeqCst) + 1;
                seen.peak.fetch_max(now, Ordering::SeqCst);
                let r = &replies[n.min(replies.len() - 1)];
                thread::sleep(r.delay);
                let mut head = format!(
                    "HTTP/1.1 {} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n",
                    r.status,
                    r.body.len()
                );
                for (k, v) in &r.headers {
                    head.push_str(&format!("{k}: {v}\r\n"));
                }
                head.push_str("\r\n");
                seen.active.fetch_sub(1, Ordering::SeqCst);
                let _ = stream.write_all(head.as_bytes());
                let _ = stream.write_all(r.body.as_bytes());
            });
        }
    });
    (format!("http://{addr}/detect"), seen)
}

fn detector(endpoint: String) -> HttpDetector {
    HttpDetector::new(HttpDetectorConfig {
        endpoint,
        api_key: Some("secret".into()),
        timeout_ms: 5_000,
        retry: RetryPolicy {
            attempts: 3,
            base_delay_ms: 1,
        },
        ..HttpDetectorConfig::default()
    })
    .unwrap()
}

fn slice() -> CardinalSlice {
    let center = CompassBearing::new(22.5);
    CardinalSlice {
        parent_id: "img".into(),
        capture_ref: "cap7".into(),
        cardinal_index: 1,
        raster: image::RgbImage::from_pixel(100, 100, image::Rgb([10, 20, 30])),
        center_bearing: center,
        directional_class: classify_directional(center),
    }
}

const TWO: &str = r#"[
  {"class": "stop sign", "bbox": [10, 10, 20, 20], "score": 0.7},
  {"class": "fire_hydrant", "bbox": [40, 40, 50, 60], "score": 0.95},
  {"class": "bench", "bbox": [1, 1, 2, 2], "score": 0.2}
]"#;

#[test]
fn parses_filters_and_ranks() {
    let (url, seen) = serve(vec![reply(200, TWO)]);
    let r = detector(url).detect(&slice(), 0.5).unwrap();
    let classes: Vec<_> = r.detections.iter().map(|d| d.object_class.clone()).collect();
    assert_eq!(classes, vec![ObjectClass::FireHydrant, ObjectClass::StopSign]);
    assert_eq!(r.detections[0].capture_ref, "cap7");
    assert_eq!(r.raw_payload, TWO.as_bytes());
    let headers = seen.headers.lock().unwrap().join("\n").to_ascii_lowercase();
    assert!(headers.contains("authorization: bearer secret"));
    assert!(headers.contains("content-type: image/jpeg"));
    assert!(headers.contains("x-cardinal-index: 1"));
}

#[test]
fn retries_unavailable_then_succeeds() {
    let (url, seen) = serve(vec![reply(503, ""), reply(502, ""), reply(200, TWO)]);
    let r = detector(url).detect(&slice(), 0.0).unwrap();
    assert_eq!(r.detections.len(), 3);
    assert_eq!(seen.requests.load(Ordering::SeqCst), 3);
}

#[test]
fn gives_up_after_three_attempts() {
    let (url, seen) = serve(vec![reply(500, "")]);
    let e = detector(url).detect(&slice(), 0.0).unwrap_err();
    assert!(matches!(e, DetectorError::BackendUnavailable(_)));
    assert_eq!(seen.requests.load(Ordering::SeqCst), 3);
}

#[test]
fn rate_limit_honours_retry_after() {
    let mut limited = reply(429, "");
    limited.headers.push(("Retry-After", "0".into()));
    let (url, seen) = serve(vec![limited, reply(200, "[]")]);
    let r = detector(url).detect(&slice(), 0.0).unwrap();
    assert!(r.detections.is_empty());
    assert_eq!(seen.requests.load(Ordering::SeqCst), 2);
}

#[test]
fn malformed_payload_is_retained() {
    let (url, seen) = serve(vec![reply(200, "{not json")]);
    match detector(url).detect(&slice(), 0.0) {
        Err(DetectorError::MalformedResponse { payload, .. }) => assert_eq!(payload, b"{not json"),
        other => panic!("{other:?}"),
    }
    assert_eq!(seen.requests.load(Ordering::SeqCst), 1);
}

#[test]
fn box_outside_slice_is_malformed() {
    let (url, _) = serve(vec![reply(200, r#"[{"class":"stop_sign","bbox":[90,10,120,20],"score":0.9}]"#)]);
    assert!(matches!(
        detector(url).detect(&slice(), 0.0),
        Err(DetectorError::MalformedResponse { .. })
    ));
}

#[test]
fn client_error_is_not_retried() {
    let (url, seen) = serve(vec![reply(401, "")]);
    assert!(matches!(
        detector(url).detect(&slice(), 0.0),
        Err(DetectorError::Rejected { status: 401 })
    ));
    assert_eq!(seen.requests.load(Ordering::SeqCst), 1);
}

#[test]
fn refused_connection_is_unavailable() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let e = detector(format!("http://127.0.0.1:{port}/")).detect(&slice(), 0.0).unwrap_err();
    assert!(matches!(e, DetectorError::BackendUnavailable(_)));
}

#[test]
fn in_flight_cap_is_respected() {
    let mut slow = reply(200, "[]");
    slow.delay = Duration::from_millis(60);
    let (url, seen) = serve(vec![slow]);
    let det = Arc::new(
        HttpDetector::new(HttpDetectorConfig {
            endpoint: url,
            max_in_flight: 2,
            ..HttpDetectorConfig::default()
        })
        .unwrap(),
    );
    let handles: Vec<_> = (0..8)
        .map(|_| {
            let det = det.clone();
            thread::spawn(move || det.detect(&slice(), 0.0).unwrap())
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    assert_eq!(seen.requests.load(Ordering::SeqCst), 8);
    assert!(seen.peak.load(Ordering::SeqCst) <= 2, "peak {}", seen.peak.load(Ordering::SeqCst));
}
