//! Synthetic hotspot datasets with known ground truth.
//!
//! Fires grow on a regular lon/lat grid (0.02 degrees by default, like the
//! real product) by a random walk from their ignition cell. Every new
//! detection lies next to, or on, a detection of the same fire from the
//! previous detected index, and is strictly closer to that parent than to
//! any detection of another fire. Fires may therefore touch without their
//! memberships becoming ambiguous.
//!
//! The ground truth assumes `adjDist` is at least one grid step (about
//! 2.2 km) and below the scenario clearance.

use std::collections::{BTreeSet, HashMap};

use chrono::{Duration, NaiveDateTime};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ClusterConfig;
use crate::error::{Error, Result};
use crate::geo::{geodesic_distance, Coordinate};
use crate::hotspot::HotspotRecord;
use crate::noise::NOISE;
use crate::temporal::{parse_timestamp, TimeConfig};

/// One fire: ignition position, first index and number of indices it burns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FireSpec {
    pub lon: f64,
    pub lat: f64,
    pub start_index: u32,
    pub duration: u32,
}

/// Indices during which a fire burns undetected. `start` counts from the
/// fire's first index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SmolderGap {
    pub fire: usize,
    pub start: u32,
    pub len: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct FireScenario {
    pub fires: Vec<FireSpec>,
    /// Maximum growth of a fire's radius per index, in meters.
    pub spread_rate: f64,
    pub detections_per_index: u32,
    pub smolder_gaps: Vec<SmolderGap>,
    /// Isolated spurious detections.
    pub noise_points: u32,
    /// Minimum distance in meters between noise points and anything else,
    /// and between a fire's first detections and other fires.
    pub clearance: f64,
    pub seed: u64,
    pub start_time: NaiveDateTime,
    pub time: TimeConfig,
    pub grid_degrees: f64,
}

impl Default for FireScenario {
    fn default() -> Self {
        Self {
            fires: Vec::new(),
            spread_rate: 300.0,
            detections_per_index: 3,
            smolder_gaps: Vec::new(),
            noise_points: 0,
            clearance: 9000.0,
            seed: 0,
            start_time: parse_timestamp("2019-12-01 00:00:00").expect("valid literal"),
            time: TimeConfig::default(),
            grid_degrees: 0.02,
        }
    }
}

/// A generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub records: Vec<HotspotRecord>,
    /// Fire of each record; `None` for noise points.
    pub fire: Vec<Option<usize>>,
    /// Scenario index of each record.
    pub index: Vec<u32>,
}

type Cell = (i64, i64);

const MAX_NOISE_ATTEMPTS: usize = 100_000;

impl FireScenario {
    /// `count` fires with random ignitions at least `spacing` meters apart
    /// inside `bbox` (lon_min, lat_min, lon_max, lat_max), starting within
    /// the first `horizon` indices.
    pub fn scattered(
        count: usize,
        bbox: (f64, f64, f64, f64),
        spacing: f64,
        horizon: u32,
        durations: (u32, u32),
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut fires: Vec<FireSpec> = Vec::with_capacity(count);
        let mut attempts = 0;
        while fires.len() < count {
            attempts += 1;
            if attempts > count * 1000 {
                return Err(Error::Domain(format!(
                    "cannot place {count} ignitions {spacing} m apart in {bbox:?}"
                )));
            }
            let at = Coordinate::new(rng.gen_range(bbox.0..bbox.2), rng.gen_range(bbox.1..bbox.3))?;
            if fires.iter().any(|f| {
                geodesic_distance(&at, &Coordinate::new(f.lon, f.lat).expect("placed")) < spacing
            }) {
                continue;
            }
            fires.push(FireSpec {
                lon: at.lon(),
                lat: at.lat(),
                start_index: rng.gen_range(1..=horizon.max(1)),
                duration: rng.gen_range(durations.0.max(1)..=durations.1.max(durations.0.max(1))),
            });
        }
        Ok(Self {
            fires,
            seed,
            ..Self::default()
        })
    }

    fn validate(&self) -> Result<()> {
        if self.fires.is_empty() {
            return Err(Error::Domain("scenario has no fires".into()));
        }
        if self.detections_per_index == 0 {
            return Err(Error::Domain(
                "detectionsPerIndex must be at least 1".into(),
            ));
        }
        if let Some(f) = self
            .fires
            .iter()
            .find(|f| f.duration == 0 || f.start_index == 0)
        {
            return Err(Error::Domain(format!(
                "fire at ({}, {}) needs startIndex >= 1 and duration >= 1",
                f.lon, f.lat
            )));
        }
        if let Some(g) = self
            .smolder_gaps
            .iter()
            .find(|g| g.fire >= self.fires.len())
        {
            return Err(Error::Domain(format!(
                "smolder gap refers to unknown fire {}",
                g.fire
            )));
        }
        if !(self.spread_rate.is_finite() && self.spread_rate >= 0.0) {
            return Err(Error::Domain("spreadRate must be non-negative".into()));
        }
        if !(self.grid_degrees.is_finite() && self.grid_degrees > 0.0) {
            return Err(Error::Domain("gridDegrees must be positive".into()));
        }
        if !(self.clearance.is_finite() && self.clearance >= 0.0) {
            return Err(Error::Domain("clearance must be non-negative".into()));
        }
        self.time.validate()
    }

    /// Generates the dataset. Identical scenarios give identical data.
    pub fn generate(&self) -> Result<SyntheticData> {
        self.validate()?;
        Generator::new(self).run()
    }
}

struct Generator<'a> {
    sc: &'a FireScenario,
    rng: ChaCha8Rng,
    owner: HashMap<Cell, usize>,
    out: SyntheticData,
    first_index: u32,
}

impl<'a> Generator<'a> {
    fn new(sc: &'a FireScenario) -> Self {
        Self {
            sc,
            rng: ChaCha8Rng::seed_from_u64(sc.seed),
            owner: HashMap::new(),
            out: SyntheticData {
                records: Vec::new(),
                fire: Vec::new(),
                index: Vec::new(),
            },
            first_index: sc.fires.iter().map(|f| f.start_index).min().unwrap_or(1),
        }
    }

    fn coord(&self, cell: Cell) -> Coordinate {
        let g = self.sc.grid_degrees;
        let lon = (cell.0 as f64 * g).clamp(-180.0, 180.0);
        let lat = (cell.1 as f64 * g).clamp(-90.0, 90.0);
        Coordinate::new(lon, lat).expect("clamped into range")
    }

    fn snap(&self, lon: f64, lat: f64) -> Cell {
        let g = self.sc.grid_degrees;
        ((lon / g).round() as i64, (lat / g).round() as i64)
    }

    /// Cells of other fires within `radius` meters of `cell`.
    fn others_within(&self, cell: Cell, fire: Option<usize>, radius: f64) -> bool {
        let at = self.coord(cell);
        let step_lat = 110_000.0 * self.sc.grid_degrees;
        let step_lon = (111_000.0 * at.lat().to_radians().cos() * self.sc.grid_degrees).max(1.0);
        let dy = (radius / step_lat).ceil() as i64 + 1;
        let dx = ((radius / step_lon).ceil() as i64 + 1).min(10_000);
        for x in cell.0 - dx..=cell.0 + dx {
            for y in cell.1 - dy..=cell.1 + dy {
                if let Some(&f) = self.owner.get(&(x, y)) {
                    if Some(f) != fire && geodesic_distance(&at, &self.coord((x, y))) <= radius {
                        return true;
                    }
                }
            }
        }
        false
    }

    fn obs_time(&mut self, index: u32, earliest: bool) -> NaiveDateTime {
        let interval_ms = self.sc.time.step * self.sc.time.unit.millis() as f64;
        let slots = ((interval_ms / 600_000.0).floor() as i64).max(1);
        let slot = if earliest {
            0
        } else {
            self.rng.gen_range(0..slots)
        };
        let offset = (index - self.first_index) as f64 * interval_ms;
        self.sc.start_time
            + Duration::milliseconds(offset.round() as i64)
            + Duration::minutes(10 * slot)
    }

    fn push(&mut self, cell: Cell, fire: Option<usize>, index: u32) {
        let earliest = self.out.records.is_empty();
        let obs_time = self.obs_time(index, earliest);
        let coord = self.coord(cell);
        self.out.records.push(HotspotRecord { coord, obs_time });
        self.out.fire.push(fire);
        self.out.index.push(index);
        if let Some(f) = fire {
            self.owner.insert(cell, f);
        }
    }

    fn run(mut self) -> Result<SyntheticData> {
        let sc = self.sc;
        let gaps: Vec<BTreeSet<u32>> = (0..sc.fires.len())
            .map(|f| {
                sc.smolder_gaps
                    .iter()
                    .filter(|g| g.fire == f)
                    .flat_map(|g| {
                        let s = sc.fires[f].start_index + g.start;
                        s..s + g.len
                    })
                    .collect()
            })
            .collect();
        let last_index = sc
            .fires
            .iter()
            .map(|f| f.start_index + f.duration - 1)
            .max()
            .unwrap_or(self.first_index);

        let mut previous: Vec<Vec<Cell>> = vec![Vec::new(); sc.fires.len()];
        let mut resumed: Vec<bool> = vec![true; sc.fires.len()];
        for k in self.first_index..=last_index {
            // Cells of fires whose detections restart at this index.
            let mut fresh: Vec<(usize, Cell)> = Vec::new();
            for (f, spec) in sc.fires.iter().enumerate() {
                let burning = spec.start_index <= k && k < spec.start_index + spec.duration;
                if !burning || gaps[f].contains(&k) {
                    if burning {
                        resumed[f] = true;
                    }
                    continue;
                }
                let origin = self.snap(spec.lon, spec.lat);
                let radius = sc.spread_rate * (k - spec.start_index + 1) as f64;
                let restarting = resumed[f];
                resumed[f] = false;
                let mut batch: Vec<Cell> = Vec::new();
                for d in 0..sc.detections_per_index {
                    let cell = if k == spec.start_index && d == 0 {
                        if self.others_within(origin, Some(f), sc.clearance)
                            || fresh.iter().any(|&(g, c)| {
                                g != f
                                    && geodesic_distance(&self.coord(origin), &self.coord(c))
                                        <= sc.clearance
                            })
                        {
                            return Err(Error::Domain(format!(
                                "fire {f} ignites within {} m of another fire",
                                sc.clearance
                            )));
                        }
                        origin
                    } else {
                        // Founding and restarted batches grow from their own first cell.
                        let chained = k == spec.start_index || (restarting && d > 0);
                        let parents = if previous[f].is_empty() || chained {
                            &batch
                        } else {
                            &previous[f]
                        };
                        let parent = *parents.choose(&mut self.rng).expect("parent exists");
                        self.step(f, parent, origin, radius, restarting, &fresh)
                    };
                    self.push(cell, Some(f), k);
                    batch.push(cell);
                    if restarting {
                        fresh.push((f, cell));
                    }
                }
                previous[f] = batch;
            }
        }
        self.add_noise(last_index)?;
        Ok(self.out)
    }

    /// Picks the cell of a new detection next to `parent`.
    fn step(
        &mut self,
        fire: usize,
        parent: Cell,
        origin: Cell,
        radius: f64,
        restarting: bool,
        fresh: &[(usize, Cell)],
    ) -> Cell {
        let sc = self.sc;
        let origin_at = self.coord(origin);
        let candidates = [
            parent,
            (parent.0 + 1, parent.1),
            (parent.0 - 1, parent.1),
            (parent.0, parent.1 + 1),
            (parent.0, parent.1 - 1),
        ];
        let parent_at = self.coord(parent);
        let allowed: Vec<Cell> = candidates
            .into_iter()
            .filter(|&c| {
                if c == parent {
                    return true;
                }
                let at = self.coord(c);
                if geodesic_distance(&origin_at, &at) > radius {
                    return false;
                }
                if self.owner.get(&c).is_some_and(|&g| g != fire) {
                    return false;
                }
                if self.others_within(c, Some(fire), geodesic_distance(&parent_at, &at)) {
                    return false;
                }
                if restarting && self.others_within(c, Some(fire), sc.clearance) {
                    return false;
                }
                !fresh.iter().any(|&(g, other)| {
                    g != fire && geodesic_distance(&at, &self.coord(other)) <= sc.clearance
                })
            })
            .collect();
        if allowed.len() > 1 && self.rng.gen_bool(0.5) {
            // Push outward half of the time so fronts expand.
            *allowed
                .iter()
                .max_by(|a, b| {
                    geodesic_distance(&origin_at, &self.coord(**a))
                        .total_cmp(&geodesic_distance(&origin_at, &self.coord(**b)))
                })
                .expect("non-empty")
        } else {
            *allowed
                .choose(&mut self.rng)
                .expect("parent is always allowed")
        }
    }

    fn add_noise(&mut self, last_index: u32) -> Result<()> {
        let sc = self.sc;
        if sc.noise_points == 0 {
            return Ok(());
        }
        let pad = sc.clearance / 100_000.0 * 2.0 + sc.grid_degrees;
        let (mut lon0, mut lat0, mut lon1, mut lat1) = (180.0f64, 90.0f64, -180.0f64, -90.0f64);
        for r in &self.out.records {
            lon0 = lon0.min(r.coord.lon());
            lon1 = lon1.max(r.coord.lon());
            lat0 = lat0.min(r.coord.lat());
            lat1 = lat1.max(r.coord.lat());
        }
        let (lon0, lon1) = ((lon0 - pad).max(-180.0), (lon1 + pad).min(180.0));
        let (lat0, lat1) = ((lat0 - pad).max(-90.0), (lat1 + pad).min(90.0));
        let mut placed: Vec<Coordinate> = Vec::new();
        for _ in 0..sc.noise_points {
            let mut attempts = 0;
            loop {
                attempts += 1;
                if attempts > MAX_NOISE_ATTEMPTS {
                    return Err(Error::Domain(
                        "no room for noise points at the requested clearance".into(),
                    ));
                }
                let (lon, lat) = (
                    self.rng.gen_range(lon0..=lon1),
                    self.rng.gen_range(lat0..=lat1),
                );
                let cell = self.snap(lon, lat);
                let at = self.coord(cell);
                if self.others_within(cell, None, sc.clearance)
                    || placed
                        .iter()
                        .any(|p| geodesic_distance(p, &at) < sc.clearance)
                {
                    continue;
                }
                let index = self.rng.gen_range(self.first_index..=last_index);
                placed.push(at);
                self.push(cell, None, index);
                break;
            }
        }
        Ok(())
    }
}

impl SyntheticData {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Fire number (1-based) of each record, or -1 for noise points.
    pub fn truth(&self) -> Vec<i64> {
        self.fire
            .iter()
            .map(|f| f.map_or(NOISE, |f| f as i64 + 1))
            .collect()
    }

    /// The memberships a correct clustering under `cfg` must produce.
    ///
    /// A fire whose detections pause for `activeTime` indices or more
    /// splits into separate clusters, and clusters failing `minPts` or
    /// `minTime` are noise. Labels are numbered by first observation.
    pub fn expected_labels(&self, cfg: &ClusterConfig) -> Vec<i64> {
        let fires = self
            .fire
            .iter()
            .flatten()
            .copied()
            .max()
            .map_or(0, |m| m + 1);
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        for f in 0..fires {
            let mut ids: Vec<usize> = (0..self.len())
                .filter(|&i| self.fire[i] == Some(f))
                .collect();
            ids.sort_by_key(|&i| (self.index[i], i));
            let mut current: Vec<usize> = Vec::new();
            for id in ids {
                if let Some(&prev) = current.last() {
                    if self.index[id] - self.index[prev] > cfg.active_time {
                        clusters.push(std::mem::take(&mut current));
                    }
                }
                current.push(id);
            }
            if !current.is_empty() {
                clusters.push(current);
            }
        }
        let unit_ms = cfg.time.unit.millis() as f64;
        let mut kept: Vec<(NaiveDateTime, usize, &Vec<usize>)> = clusters
            .iter()
            .filter_map(|c| {
                let first = c.iter().map(|&i| self.records[i].obs_time).min()?;
                let last = c.iter().map(|&i| self.records[i].obs_time).max()?;
                let span = (last - first).num_milliseconds() as f64 / unit_ms;
                (c.len() >= cfg.min_pts as usize && span >= cfg.min_time)
                    .then(|| (first, *c.iter().min().expect("non-empty"), c))
            })
            .collect();
        kept.sort_by_key(|k| (k.0, k.1));
        let mut labels = vec![NOISE; self.len()];
        for (n, (_, _, members)) in kept.iter().enumerate() {
            for &i in members.iter() {
                labels[i] = n as i64 + 1;
            }
        }
        labels
    }
}
