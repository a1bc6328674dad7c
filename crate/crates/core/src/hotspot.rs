use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::Coordinate;
use crate::temporal::{assign_time_index, TimeConfig};

/// A raw observation as read from input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HotspotRecord {
    pub coord: Coordinate,
    pub obs_time: NaiveDateTime,
}

impl HotspotRecord {
    pub fn new(lon: f64, lat: f64, obs_time: NaiveDateTime) -> Result<Self> {
        Ok(Self {
            coord: Coordinate::new(lon, lat)?,
            obs_time,
        })
    }
}

/// An observation with its position in the dataset and its time index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hotspot {
    pub id: usize,
    pub coord: Coordinate,
    pub obs_time: NaiveDateTime,
    pub time_id: u32,
}

/// Assigns time indices relative to the earliest observation.
pub fn index_hotspots(records: &[HotspotRecord], time: &TimeConfig) -> Result<Vec<Hotspot>> {
    let origin = records
        .iter()
        .map(|r| r.obs_time)
        .min()
        .ok_or(Error::EmptyDataset)?;
    records
        .iter()
        .enumerate()
        .map(|(id, r)| {
            Ok(Hotspot {
                id,
                coord: r.coord,
                obs_time: r.obs_time,
                time_id: assign_time_index(r.obs_time, origin, time)?,
            })
        })
        .collect()
}
