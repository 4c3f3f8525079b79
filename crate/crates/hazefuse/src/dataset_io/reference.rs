//! Geometry published with the HVAQ deployment: GPS coordinates of the ten
//! stations and the pairwise distance table released alongside them.

use super::{GeoPoint, StationId};

pub const PUBLISHED_STATION_COUNT: usize = 10;

/// (longitude, latitude) for stations P1..P10.
const STATION_COORDS: [(f64, f64); PUBLISHED_STATION_COUNT] = [
    (120.153173, 30.269884),
    (120.15488, 30.268726),
    (120.153894, 30.27096),
    (120.156252, 30.270242),
    (120.153905, 30.27358),
    (120.15936, 30.273139),
    (120.155162, 30.278369),
    (120.161912, 30.276465),
    (120.164792, 30.279437),
    (120.156541, 30.283932),
];

/// Pairwise station distances in meters as released (upper triangle mirrored).
const PUBLISHED_DISTANCES_M: [[f64; PUBLISHED_STATION_COUNT]; PUBLISHED_STATION_COUNT] = [
    [0.0, 113.0, 168.0, 281.0, 464.0, 697.0, 1012.0, 1150.0, 1730.0, 1625.0],
    [113.0, 0.0, 211.0, 190.0, 509.0, 603.0, 1040.0, 1089.0, 1537.0, 1660.0],
    [168.0, 211.0, 0.0, 245.0, 296.0, 575.0, 844.0, 1000.0, 1450.0, 1457.0],
    [281.0, 190.0, 245.0, 0.0, 388.0, 413.0, 871.0, 899.0, 1347.0, 1510.0],
    [464.0, 509.0, 296.0, 388.0, 0.0, 464.0, 548.0, 819.0, 1250.0, 1161.0],
    [697.0, 603.0, 575.0, 413.0, 464.0, 0.0, 625.0, 486.0, 934.0, 1170.0],
    [1012.0, 1040.0, 844.0, 871.0, 548.0, 625.0, 0.0, 656.0, 918.0, 613.0],
    [1150.0, 1089.0, 1000.0, 899.0, 819.0, 486.0, 656.0, 0.0, 448.0, 953.0],
    [1730.0, 1537.0, 1450.0, 1347.0, 1250.0, 934.0, 918.0, 448.0, 0.0, 877.0],
    [1625.0, 1660.0, 1457.0, 1510.0, 1161.0, 1170.0, 613.0, 953.0, 877.0, 0.0],
];

/// Station geometry of the published ten-station deployment.
pub fn reference_stations() -> Vec<(StationId, GeoPoint)> {
    STATION_COORDS
        .iter()
        .enumerate()
        .map(|(i, &(lon, lat))| {
            (
                StationId::new(i as u8 + 1).expect("index in range"),
                GeoPoint::new(lon, lat).expect("published coordinates valid"),
            )
        })
        .collect()
}

/// Published pairwise distance table in meters, indexed `[i][j]` for
/// stations `P(i+1)`, `P(j+1)`.
pub fn published_distances_m() -> [[f64; PUBLISHED_STATION_COUNT]; PUBLISHED_STATION_COUNT] {
    PUBLISHED_DISTANCES_M
}
