//! Azimuth lookup tables: eight nominal cardinals and 32 directional classes.
//! All buckets are half-open `[low, high)`.

use serde::Serialize;

use crate::geodesy::CompassBearing;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NominalCardinal {
    pub id: u8,
    pub code: &'static str,
    pub description: &'static str,
}

impl NominalCardinal {
    pub fn label(&self) -> String {
        format!("C{}", self.id)
    }

    pub fn range(&self) -> (f64, f64) {
        let low = f64::from(self.id - 1) * 45.0;
        (low, low + 45.0)
    }
}

const fn nc(id: u8, code: &'static str, description: &'static str) -> NominalCardinal {
    NominalCardinal { id, code, description }
}

pub const NOMINAL_CARDINALS: [NominalCardinal; 8] = [
    nc(1, "NNE", "North Northeast"),
    nc(2, "ENE", "East Northeast"),
    nc(3, "ESE", "East Southeast"),
    nc(4, "SSE", "South Southeast"),
    nc(5, "SSW", "South Southwest"),
    nc(6, "WSW", "West Southwest"),
    nc(7, "WNW", "West Northwest"),
    nc(8, "NNW", "North Northwest"),
];

/// One of the 32 compass-point classes, 11.25° wide and centered on
/// `(id - 1) * 11.25°`. D1 wraps through north.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DirectionalClass {
    pub id: u8,
    pub code: &'static str,
    pub description: &'static str,
}

pub const DIRECTIONAL_WIDTH: f64 = 11.25;

impl DirectionalClass {
    pub fn label(&self) -> String {
        format!("D{}", self.id)
    }

    /// `[low, high)`; for D1 `low > high` and the range wraps through 0°.
    pub fn range(&self) -> (f64, f64) {
        let center = f64::from(self.id - 1) * DIRECTIONAL_WIDTH;
        let low = (center - DIRECTIONAL_WIDTH / 2.0).rem_euclid(360.0);
        let high = center + DIRECTIONAL_WIDTH / 2.0;
        (low, high)
    }

    pub fn contains(&self, bearing: CompassBearing) -> bool {
        let (low, high) = self.range();
        let b = bearing.degrees();
        if low > high {
            b >= low || b < high
        } else {
            b >= low && b < high
        }
    }

    pub fn by_id(id: u8) -> Option<&'static DirectionalClass> {
        DIRECTIONAL_CLASSES.get(usize::from(id).checked_sub(1)?)
    }
}

const fn dc(id: u8, code: &'static str, description: &'static str) -> DirectionalClass {
    DirectionalClass { id, code, description }
}

pub const DIRECTIONAL_CLASSES: [DirectionalClass; 32] = [
    dc(1, "N", "North"),
    dc(2, "NbE", "North by East"),
    dc(3, "NNE", "North Northeast"),
    dc(4, "NEbN", "Northeast by North"),
    dc(5, "NE", "Northeast"),
    dc(6, "NEbE", "Northeast by East"),
    dc(7, "ENE", "East Northeast"),
    dc(8, "EbN", "East by North"),
    dc(9, "E", "East"),
    dc(10, "EbS", "East by South"),
    dc(11, "ESE", "East Southeast"),
    dc(12, "SEbE", "Southeast by East"),
    dc(13, "SE", "Southeast"),
    dc(14, "SEbS", "Southeast by South"),
    dc(15, "SSE", "South Southeast"),
    dc(16, "SbE", "South by East"),
    dc(17, "S", "South"),
    dc(18, "SbW", "South by West"),
    dc(19, "SSW", "South Southwest"),
    dc(20, "SWbS", "Southwest by South"),
    dc(21, "SW", "Southwest"),
    dc(22, "SWbW", "Southwest by West"),
    dc(23, "WSW", "West Southwest"),
    dc(24, "WbS", "West by South"),
    dc(25, "W", "West"),
    dc(26, "WbN", "West by North"),
    dc(27, "WNW", "West Northwest"),
    dc(28, "NWbW", "Northwest by West"),
    dc(29, "NW", "Northwest"),
    dc(30, "NWbN", "Northwest by North"),
    dc(31, "NNW", "North Northwest"),
    dc(32, "NbW", "North by West"),
];

pub fn classify_nominal(bearing: CompassBearing) -> &'static NominalCardinal {
    let idx = (bearing.degrees() / 45.0).floor() as usize;
    &NOMINAL_CARDINALS[idx.min(7)]
}

pub fn classify_directional(bearing: CompassBearing) -> &'static DirectionalClass {
    // class edges are multiples of 1/8 degree, so this sum is exact at the edges
    let shifted = (bearing.degrees() + DIRECTIONAL_WIDTH / 2.0) % 360.0;
    let idx = (shifted / DIRECTIONAL_WIDTH).floor() as usize;
    &DIRECTIONAL_CLASSES[idx.min(31)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nominal_examples() {
        assert_eq!(classify_nominal(CompassBearing::new(0.0)).code, "NNE");
        let c6 = classify_nominal(CompassBearing::new(225.0));
        assert_eq!((c6.id, c6.code), (6, "WSW"));
        assert_eq!(classify_nominal(CompassBearing::new(359.999)).id, 8);
    }

    #[test]
    fn directional_examples() {
        let d = classify_directional(CompassBearing::new(0.0));
        assert_eq!((d.id, d.code), (1, "N"));
        let d = classify_directional(CompassBearing::new(291.280));
        assert_eq!((d.id, d.code), (27, "WNW"));
        assert_eq!(classify_directional(CompassBearing::new(354.375)).id, 1);
        assert_eq!(classify_directional(CompassBearing::new(354.375 - 1e-9)).id, 32);
        // 12.5 sits inside 5.625..16.875
        assert_eq!(classify_directional(CompassBearing::new(12.5)).code, "NbE");
        assert_eq!(classify_directional(CompassBearing::new(16.875)).code, "NNE");
    }

    #[test]
    fn printed_ranges() {
        assert_eq!(DIRECTIONAL_CLASSES[0].range(), (354.375, 5.625));
        assert_eq!(DIRECTIONAL_CLASSES[26].range(), (286.875, 298.125));
        assert_eq!(DIRECTIONAL_CLASSES[31].range(), (343.125, 354.375));
        assert_eq!(NOMINAL_CARDINALS[5].range(), (225.0, 270.0));
    }
}
