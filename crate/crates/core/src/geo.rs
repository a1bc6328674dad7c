//! Coordinates, distances on the Earth and centroids.
//!
//! Distances default to the ellipsoidal geodesic on WGS84 (Karney's
//! algorithm). A spherical haversine metric is available as a faster,
//! less accurate alternative.

use std::fmt;

use geographiclib_rs::{Geodesic, InverseGeodesic};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// WGS84 semi-major axis in meters.
pub const WGS84_A: f64 = 6_378_137.0;
/// WGS84 flattening.
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;
/// Mean Earth radius used by the haversine metric, in meters.
pub const MEAN_EARTH_RADIUS: f64 = 6_371_008.8;

/// A position in degrees: longitude east and latitude north.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coordinate {
    lon: f64,
    lat: f64,
}

impl Coordinate {
    pub fn new(lon: f64, lat: f64) -> Result<Self> {
        if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::Domain(format!(
                "longitude {lon} outside [-180, 180]"
            )));
        }
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(Error::Domain(format!("latitude {lat} outside [-90, 90]")));
        }
        Ok(Self { lon, lat })
    }

    #[inline]
    pub fn lon(&self) -> f64 {
        self.lon
    }

    #[inline]
    pub fn lat(&self) -> f64 {
        self.lat
    }

    /// Bit-exact key, used to group repeat detections at the same position.
    pub(crate) fn bits(&self) -> (u64, u64) {
        // -0.0 and 0.0 describe the same place.
        ((self.lon + 0.0).to_bits(), (self.lat + 0.0).to_bits())
    }
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lon, self.lat)
    }
}

/// How the distance between two hotspots is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    /// Geodesic on the WGS84 ellipsoid.
    #[default]
    Geodesic,
    /// Great-circle distance on a sphere of radius [`MEAN_EARTH_RADIUS`].
    Haversine,
}

impl DistanceMetric {
    #[inline]
    pub fn distance(self, a: &Coordinate, b: &Coordinate) -> f64 {
        match self {
            DistanceMetric::Geodesic => geodesic_distance(a, b),
            DistanceMetric::Haversine => haversine_distance(a, b),
        }
    }

    /// Cartesian embedding whose straight-line (chord) distance never
    /// exceeds [`DistanceMetric::distance`]. Spatial indexes bucket these
    /// points so that a chord bound prunes candidate pairs exactly.
    pub(crate) fn embed(self, c: &Coordinate) -> [f64; 3] {
        let (sin_lat, cos_lat) = c.lat.to_radians().sin_cos();
        let (sin_lon, cos_lon) = c.lon.to_radians().sin_cos();
        match self {
            DistanceMetric::Geodesic => {
                let e2 = WGS84_F * (2.0 - WGS84_F);
                let n = WGS84_A / (1.0 - e2 * sin_lat * sin_lat).sqrt();
                [
                    n * cos_lat * cos_lon,
                    n * cos_lat * sin_lon,
                    n * (1.0 - e2) * sin_lat,
                ]
            }
            DistanceMetric::Haversine => [
                MEAN_EARTH_RADIUS * cos_lat * cos_lon,
                MEAN_EARTH_RADIUS * cos_lat * sin_lon,
                MEAN_EARTH_RADIUS * sin_lat,
            ],
        }
    }
}

/// Geodesic distance in meters between two coordinates on WGS84.
pub fn geodesic_distance(a: &Coordinate, b: &Coordinate) -> f64 {
    if a == b {
        return 0.0;
    }
    let s12: f64 = wgs84().inverse(a.lat, a.lon, b.lat, b.lon);
    s12.abs()
}

/// Great-circle distance in meters on a sphere of mean Earth radius.
pub fn haversine_distance(a: &Coordinate, b: &Coordinate) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * MEAN_EARTH_RADIUS * h.sqrt().min(1.0).asin()
}

fn wgs84() -> &'static Geodesic {
    use std::sync::OnceLock;
    static WGS84: OnceLock<Geodesic> = OnceLock::new();
    WGS84.get_or_init(Geodesic::wgs84)
}

/// Arithmetic mean of longitudes and latitudes.
///
/// The sum is taken over sorted components, so the result does not depend
/// on the order of `points`.
pub fn centroid(points: &[Coordinate]) -> Result<Coordinate> {
    if points.is_empty() {
        return Err(Error::Domain("centroid of an empty point list".into()));
    }
    let n = points.len() as f64;
    let lon = sorted_sum(points.iter().map(|p| p.lon)) / n;
    let lat = sorted_sum(points.iter().map(|p| p.lat)) / n;
    // The mean of in-range values stays in range.
    Ok(Coordinate { lon, lat })
}

fn sorted_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}
