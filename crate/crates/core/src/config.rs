use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::DistanceMetric;
use crate::temporal::TimeConfig;

/// How an ignition point is located when several hotspots share the
/// earliest observation of a cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IgnitionCenter {
    /// Arithmetic mean of longitudes and latitudes.
    #[default]
    Mean,
}

/// Parameters of the clustering pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    /// Number of time indices a fire may stay undetected and still be the
    /// same fire.
    #[serde(rename = "activeTime")]
    pub active_time: u32,
    /// Maximum distance in meters joining two hotspots.
    #[serde(rename = "adjDist")]
    pub adj_dist: f64,
    /// Minimum number of hotspots in a fire.
    #[serde(rename = "minPts")]
    pub min_pts: u32,
    /// Minimum duration of a fire, in `time.unit`.
    #[serde(rename = "minTime")]
    pub min_time: f64,
    #[serde(rename = "ignitionCenter")]
    pub ignition_center: IgnitionCenter,
    #[serde(flatten)]
    pub time: TimeConfig,
    pub metric: DistanceMetric,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            active_time: 24,
            adj_dist: 3000.0,
            min_pts: 4,
            min_time: 3.0,
            ignition_center: IgnitionCenter::Mean,
            time: TimeConfig::default(),
            metric: DistanceMetric::Geodesic,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.adj_dist.is_finite() && self.adj_dist > 0.0) {
            return Err(Error::Config(format!(
                "adjDist must be a positive distance, got {}",
                self.adj_dist
            )));
        }
        if self.min_pts == 0 {
            return Err(Error::Config("minPts must be at least 1".into()));
        }
        if !(self.min_time.is_finite() && self.min_time >= 0.0) {
            return Err(Error::Config(format!(
                "minTime must be non-negative, got {}",
                self.min_time
            )));
        }
        self.time.validate()
    }
}
