use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::PhotoCapture;
use crate::cluster::{sample_mean_sd, ObjectEstimate};

pub const FEET_PER_MILE: f64 = 5280.0;
/// Nominal distance between consecutive captures, feet.
pub const NOMINAL_CAPTURE_SPACING_FT: f64 = 10.0;
/// Dispersion columns are printed multiplied by this.
pub const DISPLAY_SCALE: f64 = 1e4;

pub fn expected_cardinals(photospheres: u64, cardinals_per_photosphere: u32) -> u64 {
    photospheres * u64::from(cardinals_per_photosphere)
}

pub fn nominal_miles(captures: u64, spacing_ft: f64) -> f64 {
    captures as f64 * spacing_ft / FEET_PER_MILE
}

/// Path length of the track, miles.
pub fn track_miles(captures: &[PhotoCapture]) -> f64 {
    captures
        .windows(2)
        .map(|w| w[0].projected.distance(&w[1].projected))
        .sum::<f64>()
        / FEET_PER_MILE
}

/// Every detection that entered clustering is accounted for exactly once.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConservationAudit {
    pub detections_in: u64,
    pub cluster_members: u64,
    pub noise: u64,
    /// Dropped before clustering (implausible range or unusable bearing).
    pub discarded: u64,
}

impl ConservationAudit {
    pub fn balanced(&self) -> bool {
        self.detections_in == self.cluster_members + self.noise + self.discarded
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub dataset_id: String,
    pub area: String,
    pub photosphere_count: u64,
    pub cardinal_count: u64,
    pub queried_cardinals: u64,
    pub failed_slices: u64,
    pub miles_travelled: f64,
    pub nominal_miles: f64,
    pub detections_by_class: BTreeMap<String, u64>,
    pub objects_by_class: BTreeMap<String, u64>,
    pub conservation: ConservationAudit,
}

/// Detection and object rates for one class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassRates {
    pub class: String,
    pub detections: u64,
    pub objects: u64,
    pub detections_per_mile: f64,
    pub detections_per_photosphere: f64,
    pub objects_per_mile: f64,
}

fn ratio(n: u64, d: f64) -> f64 {
    if d > 0.0 {
        n as f64 / d
    } else {
        0.0
    }
}

impl DatasetSummary {
    /// Per-class rates; both the per-mile and the per-photosphere
    /// denominators are reported. The last row aggregates all classes.
    pub fn rates(&self) -> Vec<ClassRates> {
        let mut classes: Vec<&String> = self.detections_by_class.keys().chain(self.objects_by_class.keys()).collect();
        classes.sort();
        classes.dedup();
        let row = |class: String, detections: u64, objects: u64| ClassRates {
            class,
            detections,
            objects,
            detections_per_mile: ratio(detections, self.miles_travelled),
            detections_per_photosphere: ratio(detections, self.photosphere_count as f64),
            objects_per_mile: ratio(objects, self.miles_travelled),
        };
        let mut out: Vec<ClassRates> = classes
            .iter()
            .map(|c| {
                row(
                    (*c).clone(),
                    self.detections_by_class.get(*c).copied().unwrap_or(0),
                    self.objects_by_class.get(*c).copied().unwrap_or(0),
                )
            })
            .collect();
        out.push(row(
            "all".into(),
            self.detections_by_class.values().sum(),
            self.objects_by_class.values().sum(),
        ));
        out
    }
}

const SUMMARY_HEADER: [&str; 13] = [
    "dataset_id",
    "area",
    "class",
    "photospheres",
    "cardinals",
    "queried_cardinals",
    "miles",
    "nominal_miles",
    "detections",
    "objects",
    "detections_per_mile",
    "detections_per_photosphere",
    "objects_per_mile",
];

fn summary_rows(summaries: &[DatasetSummary]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for s in summaries {
        for r in s.rates() {
            rows.push(vec![
                s.dataset_id.clone(),
                s.area.clone(),
                r.class,
                s.photosphere_count.to_string(),
                s.cardinal_count.to_string(),
                s.queried_cardinals.to_string(),
                format!("{:.3}", s.miles_travelled),
                format!("{:.3}", s.nominal_miles),
                r.detections.to_string(),
                r.objects.to_string(),
                format!("{:.3}", r.detections_per_mile),
                format!("{:.4}", r.detections_per_photosphere),
                format!("{:.3}", r.objects_per_mile),
            ]);
        }
    }
    rows
}

fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn aligned(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = cells.zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut out, &mut header.iter().copied());
    let total = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
    let _ = writeln!(out, "{}", "-".repeat(total));
    for r in rows {
        line(&mut out, &mut r.iter().map(String::as_str));
    }
    out
}

pub fn summary_csv(summaries: &[DatasetSummary]) -> String {
    to_csv(&SUMMARY_HEADER, &summary_rows(summaries))
}

pub fn summary_text(summaries: &[DatasetSummary]) -> String {
    let mut out = aligned(&SUMMARY_HEADER, &summary_rows(summaries));
    for s in summaries {
        let c = &s.conservation;
        let _ = writeln!(
            out,
            "{}: detections in {} = members {} + noise {} + discarded {} [{}]; failed slices {}",
            s.dataset_id,
            c.detections_in,
            c.cluster_members,
            c.noise,
            c.discarded,
            if c.balanced() { "balanced" } else { "UNBALANCED" },
            s.failed_slices
        );
    }
    out
}

/// Dispersion statistics of the per-object standard deviations, degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub area: String,
    pub class: String,
    pub n: usize,
    pub latitude_sd_mean: f64,
    pub latitude_sd_sd: f64,
    pub latitude_sd_max: f64,
    pub longitude_sd_mean: f64,
    pub longitude_sd_sd: f64,
    pub longitude_sd_max: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub rows: Vec<AccuracyRow>,
}

const ACCURACY_HEADER: [&str; 9] = [
    "area",
    "object",
    "n",
    "sigma_lat_mean",
    "sigma_lat_sd",
    "sigma_lat_max",
    "sigma_lon_mean",
    "sigma_lon_sd",
    "sigma_lon_max",
];

fn accuracy_row(area: &str, class: &str, estimates: &[&ObjectEstimate]) -> AccuracyRow {
    let stats = |f: fn(&ObjectEstimate) -> f64| {
        let v: Vec<f64> = estimates.iter().map(|e| f(e)).collect();
        let (mean, sd) = sample_mean_sd(&v).unwrap_or((0.0, 0.0));
        (mean, sd, v.iter().copied().fold(0.0, f64::max))
    };
    let (lat_mean, lat_sd, lat_max) = stats(|e| e.latitude_sd);
    let (lon_mean, lon_sd, lon_max) = stats(|e| e.longitude_sd);
    AccuracyRow {
        area: area.to_string(),
        class: class.to_string(),
        n: estimates.len(),
        latitude_sd_mean: lat_mean,
        latitude_sd_sd: lat_sd,
        latitude_sd_max: lat_max,
        longitude_sd_mean: lon_mean,
        longitude_sd_sd: lon_sd,
        longitude_sd_max: lon_max,
    }
}

/// Rows per (area, class), each area closed by an `all` row.
pub fn emit_accuracy_report(estimates: &[(String, ObjectEstimate)]) -> AccuracyReport {
    let mut by_area: BTreeMap<&str, BTreeMap<&str, Vec<&ObjectEstimate>>> = BTreeMap::new();
    for (area, e) in estimates {
        by_area
            .entry(area.as_str())
            .or_default()
            .entry(e.object_class.as_str())
            .or_default()
            .push(e);
    }
    let mut rows = Vec::new();
    for (area, classes) in by_area {
        let mut all = Vec::new();
        for (class, list) in classes {
            rows.push(accuracy_row(area, class, &list));
            all.extend(list);
        }
        rows.push(accuracy_row(area, "all", &all));
    }
    AccuracyReport { rows }
}

impl AccuracyReport {
    fn display_rows(&self) -> Vec<Vec<String>> {
        let s = |v: f64| format!("{:.4}", v * DISPLAY_SCALE);
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.area.clone(),
                    r.class.clone(),
                    r.n.to_string(),
                    s(r.latitude_sd_mean),
                    s(r.latitude_sd_sd),
                    s(r.latitude_sd_max),
                    s(r.longitude_sd_mean),
                    s(r.longitude_sd_sd),
                    s(r.longitude_sd_max),
                ]
            })
            .collect()
    }

    /// Dispersion columns scaled by [`DISPLAY_SCALE`].
    pub fn to_csv(&self) -> String {
        to_csv(&ACCURACY_HEADER, &self.display_rows())
    }

    pub fn to_text(&self) -> String {
        let mut out = aligned(&ACCURACY_HEADER, &self.display_rows());
        out.push_str("Displayed values scaled ×10⁻⁴\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::ObjectClass;
    use crate::geodesy::{CompassBearing, ProjectedPoint};

    fn est(class: ObjectClass, lat_sd: f64, lon_sd: f64) -> ObjectEstimate {
        ObjectEstimate {
            object_id: String::new(),
            object_class: class,
            latitude: 0.0,
            longitude: 0.0,
            position: ProjectedPoint::default(),
            latitude_sd: lat_sd,
            longitude_sd: lon_sd,
            drive_step_mean: 0.0,
            drive_step_sd: 0.0,
            object_distance_mean: 0.0,
            object_distance_sd: 0.0,
            observation_count: 0,
            pair_count: 0,
            retained_pairs: 0,
            best_capture: String::new(),
            best_bearing: CompassBearing::new(0.0),
            best_confidence: 0.0,
            members: vec![],
        }
    }

    #[test]
    fn bookkeeping_formulas() {
        assert_eq!(expected_cardinals(11_239, 8), 89_912);
        assert_eq!(expected_cardinals(102_901, 8), 823_208);
        assert!((nominal_miles(102_901, NOMINAL_CAPTURE_SPACING_FT) - 194.888).abs() < 1e-3);
    }

    #[test]
    fn accuracy_layout() {
        let r = emit_accuracy_report(&[
            ("North".into(), est(ObjectClass::StopSign, 1e-5, 2e-5)),
            ("North".into(), est(ObjectClass::StopSign, 3e-5, 4e-5)),
            ("North".into(), est(ObjectClass::FireHydrant, 0.0, 0.0)),
        ]);
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "area,object,n,sigma_lat_mean,sigma_lat_sd,sigma_lat_max,sigma_lon_mean,sigma_lon_sd,sigma_lon_max"
        );
        assert_eq!(lines.next().unwrap(), "North,fire_hydrant,1,0.0000,0.0000,0.0000,0.0000,0.0000,0.0000");
        assert_eq!(lines.next().unwrap(), "North,stop_sign,2,0.2000,0.1414,0.3000,0.3000,0.1414,0.4000");
        assert!(lines.next().unwrap().starts_with("North,all,3,"));
        assert!(r.to_text().ends_with("Displayed values scaled ×10⁻⁴\n"));
    }

    #[test]
    fn rates_use_both_denominators() {
        let s = DatasetSummary {
            dataset_id: "d".into(),
            area: "a".into(),
            photosphere_count: 100,
            cardinal_count: 800,
            queried_cardinals: 100,
            failed_slices: 0,
            miles_travelled: 0.5,
            nominal_miles: nominal_miles(100, 10.0),
            detections_by_class: BTreeMap::from([("stop_sign".into(), 20)]),
            objects_by_class: BTreeMap::from([("stop_sign".into(), 2)]),
            conservation: ConservationAudit::default(),
        };
        let r = &s.rates()[0];
        assert_eq!(r.detections_per_mile, 40.0);
        assert_eq!(r.detections_per_photosphere, 0.2);
        assert_eq!(r.objects_per_mile, 4.0);
        assert_eq!(s.rates().last().unwrap().class, "all");
    }
}
