use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{PhotoCapture, PipelineError};
use crate::geodesy::{project, CompassBearing, GeoPoint};
use crate::synth::track_headings;

/// Spacing above which consecutive fixes are reported as suspicious, feet.
const SPACING_WARN_FT: f64 = 50.0;

/// Header names of the track CSV fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub image_id: String,
    pub timestamp: String,
    pub latitude: String,
    pub longitude: String,
    pub altitude: Option<String>,
    pub heading: Option<String>,
    pub delimiter: char,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            image_id: "image_id".into(),
            timestamp: "timestamp".into(),
            latitude: "latitude".into(),
            longitude: "longitude".into(),
            altitude: Some("altitude".into()),
            heading: Some("heading".into()),
            delimiter: ',',
        }
    }
}

impl ColumnMap {
    /// Field names of a typical GNSS/INS post-processing export.
    pub fn gnss_export() -> Self {
        Self {
            image_id: "Filename".into(),
            timestamp: "GPS Time".into(),
            latitude: "Latitude".into(),
            longitude: "Longitude".into(),
            altitude: Some("Altitude".into()),
            heading: None,
            delimiter: ',',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LongitudeConvention {
    #[default]
    EastPositive,
    /// Longitudes printed as positive degrees west.
    WestPositive,
}

fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M:%S%.f", "%Y/%m/%d %H:%M:%S%.f"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc());
        }
    }
    // bare seconds since the epoch
    let secs: f64 = s.parse().ok()?;
    DateTime::from_timestamp_micros((secs * 1e6).round() as i64)
}

struct Row {
    line: u64,
    image_id: String,
    timestamp: Option<DateTime<Utc>>,
    position: GeoPoint,
    heading: Option<CompassBearing>,
}

/// Reads a GNSS track, projects every fix and fills in headings.
///
/// Rows that fail to parse are skipped with a warning naming the line.
/// Headings come from the heading column when mapped and present, otherwise
/// from consecutive fixes; the first capture inherits the second's.
pub fn ingest_track(
    path: &Path,
    dataset_id: &str,
    columns: &ColumnMap,
    convention: LongitudeConvention,
) -> Result<Vec<PhotoCapture>, PipelineError> {
    let io = |reason: String| PipelineError::Io {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(u8::try_from(columns.delimiter).map_err(|_| io("delimiter must be ASCII".into()))?)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| io(e.to_string()))?;
    let headers = reader.headers().map_err(|e| io(e.to_string()))?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| PipelineError::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })
    };
    let id_col = find(&columns.image_id)?;
    let lat_col = find(&columns.latitude)?;
    let lon_col = find(&columns.longitude)?;
    let ts_col = headers.iter().position(|h| h == columns.timestamp);
    let alt_col = columns.altitude.as_deref().and_then(|n| headers.iter().position(|h| h == n));
    let hdg_col = columns.heading.as_deref().and_then(|n| headers.iter().position(|h| h == n));

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let parsed = record.map_err(|e| e.to_string()).and_then(|r| {
            let field = |c: usize| r.get(c).unwrap_or("").trim();
            let num = |c: usize| field(c).parse::<f64>().map_err(|_| format!("bad number {:?}", field(c)));
            let image_id = field(id_col);
            if image_id.is_empty() {
                return Err("empty image id".to_string());
            }
            let lat = num(lat_col)?;
            let mut lon = num(lon_col)?;
            if convention == LongitudeConvention::WestPositive {
                lon = -lon;
            }
            let altitude = alt_col.and_then(|c| field(c).parse::<f64>().ok());
            let position = GeoPoint::new(lat, lon).map_err(|e| e.to_string())?.with_altitude(altitude);
            let timestamp = match ts_col.map(field).filter(|s| !s.is_empty()) {
                Some(s) => Some(parse_timestamp(s).ok_or_else(|| format!("bad timestamp {s:?}"))?),
                None => None,
            };
            let heading = hdg_col
                .map(field)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().ok().and_then(CompassBearing::try_new).ok_or(format!("bad heading {s:?}")))
                .transpose()?;
            Ok(Row {
                line,
                image_id: image_id.to_string(),
                timestamp,
                position,
                heading,
            })
        });
        match parsed {
            Ok(row) => rows.push(row),
            Err(reason) => log::warn!("{}:{line}: skipping row: {reason}", path.display()),
        }
    }
    if rows.len() < 2 {
        return Err(PipelineError::EmptyTrack {
            path: path.to_path_buf(),
            rows: rows.len(),
        });
    }
    // stable: untimed rows keep file order
    rows.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then(a.line.cmp(&b.line)));

    let projected = rows
        .iter()
        .map(|r| project(&r.position))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| io(e.to_string()))?;
    for (k, w) in projected.windows(2).enumerate() {
        let gap = w[0].distance(&w[1]);
        if gap > SPACING_WARN_FT {
            log::warn!(
                "{}: {} and {} are {gap:.1} ft apart",
                dataset_id,
                rows[k].image_id,
                rows[k + 1].image_id
            );
        }
    }
    let derived = if rows.iter().all(|r| r.heading.is_some()) {
        None
    } else {
        Some(track_headings(&projected).map_err(|e| io(format!("cannot derive headings: {e}")))?)
    };

    Ok(rows
        .into_iter()
        .zip(projected)
        .enumerate()
        .map(|(k, (row, projected))| PhotoCapture {
            capture_id: row.image_id.clone(),
            image_id: row.image_id,
            dataset_id: dataset_id.to_string(),
            timestamp: row.timestamp,
            position: row.position,
            projected,
            heading: row.heading.or_else(|| derived.as_ref().map(|d| d[k])).expect("heading available"),
            sequence_index: k as u64,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    const TABLE_ROWS: &str = "image_id,timestamp,latitude,longitude
a,2019-03-01T18:00:00Z,33.814440,117.967288
b,2019-03-01T18:00:01Z,33.814441,117.967317
c,2019-03-01T18:00:02Z,33.814442,117.967345
d,2019-03-01T18:00:03Z,33.814444,117.967374
e,2019-03-01T18:00:04Z,33.814447,117.967401
f,2019-03-01T18:00:05Z,33.814450,117.967429
";

    #[test]
    fn west_positive_rows() {
        let f = write(TABLE_ROWS);
        let caps = ingest_track(f.path(), "337p1", &ColumnMap::default(), LongitudeConvention::WestPositive).unwrap();
        assert_eq!(caps.len(), 6);
        assert!(caps.iter().all(|c| c.position.longitude < 0.0));
        assert!((caps[0].projected.easting - 6040058.391656111).abs() < 1e-3);
        for w in caps.windows(2) {
            let d = w[0].projected.distance(&w[1].projected);
            assert!((7.0..11.0).contains(&d), "spacing {d}");
        }
        // travelling west: motion bearing ~270, literal correction gives ~90
        assert!((caps[1].heading.degrees() - 90.0).abs() < 10.0);
        assert_eq!(caps[0].heading, caps[1].heading);
    }

    #[test]
    fn sorted_by_timestamp() {
        let f = write(
            "image_id,timestamp,latitude,longitude\n\
             late,2019-03-01T18:00:05Z,33.8145,-117.9674\n\
             early,2019-03-01T18:00:00Z,33.8144,-117.9673\n",
        );
        let caps = ingest_track(f.path(), "d", &ColumnMap::default(), LongitudeConvention::EastPositive).unwrap();
        assert_eq!(caps[0].image_id, "early");
        assert_eq!((caps[0].sequence_index, caps[1].sequence_index), (0, 1));
    }

    #[test]
    fn single_row_is_empty_track() {
        let f = write("image_id,timestamp,latitude,longitude\na,,33.8,-117.9\n");
        assert!(matches!(
            ingest_track(f.path(), "d", &ColumnMap::default(), LongitudeConvention::EastPositive),
            Err(PipelineError::EmptyTrack { rows: 1, .. })
        ));
    }

    #[test]
    fn missing_column_named() {
        let f = write("image_id,lat,longitude\na,33.8,-117.9\n");
        match ingest_track(f.path(), "d", &ColumnMap::default(), LongitudeConvention::EastPositive) {
            Err(PipelineError::MissingColumn { column, .. }) => assert_eq!(column, "latitude"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_rows_skipped() {
        let f = write(
            "image_id,timestamp,latitude,longitude\n\
             a,,33.8144,-117.9673\n\
             b,,not-a-number,-117.9673\n\
             c,,33.8145,-117.9673\n",
        );
        let caps = ingest_track(f.path(), "d", &ColumnMap::default(), LongitudeConvention::EastPositive).unwrap();
        let ids: Vec<_> = caps.iter().map(|c| c.image_id.as_str()).collect();
        assert_eq!(ids, ["a", "c"]);
    }

    #[test]
    fn heading_column_used_verbatim() {
        let f = write(
            "image_id,timestamp,latitude,longitude,heading\n\
             a,,33.8144,-117.9673,12.5\n\
             b,,33.8145,-117.9673,13.5\n",
        );
        let caps = ingest_track(f.path(), "d", &ColumnMap::default(), LongitudeConvention::EastPositive).unwrap();
        assert_eq!(caps[0].heading.degrees(), 12.5);
        assert_eq!(caps[1].heading.degrees(), 13.5);
    }
}
