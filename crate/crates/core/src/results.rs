//! The clustering result and analytics derived from it.

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDateTime;
use serde::Serialize;

use crate::config::ClusterConfig;
use crate::error::{Error, Result};
use crate::geo::{centroid, Coordinate};
use crate::hotspot::Hotspot;
use crate::noise::NOISE;

/// One input hotspot with its final membership.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct HotspotRow {
    pub lon: f64,
    pub lat: f64,
    pub obs_time: NaiveDateTime,
    #[serde(rename = "timeID")]
    pub time_id: u32,
    pub membership: i64,
    pub noise: bool,
    /// Meters from the cluster's ignition point; `None` for noise.
    pub dist_to_ignition: Option<f64>,
    /// Time since ignition in the configured unit; `None` for noise.
    pub time_from_ignition: Option<f64>,
}

/// Ignition point and extent of one cluster.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IgnitionRow {
    pub membership: i64,
    pub lon: f64,
    pub lat: f64,
    pub obs_time: NaiveDateTime,
    #[serde(rename = "timeID")]
    pub time_id: u32,
    pub obs_in_cluster: usize,
    pub cluster_time_len: f64,
}

/// Labelled hotspots, ignition table and the settings that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    hotspots: Vec<HotspotRow>,
    ignition: Vec<IgnitionRow>,
    settings: ClusterConfig,
}

/// Assembles the result from final memberships (`-1` or `1..=K`).
///
/// A cluster's ignition point is its earliest observation, or the mean
/// position of all members sharing that earliest timestamp.
pub fn build_result(
    hotspots: &[Hotspot],
    labels: &[i64],
    cfg: &ClusterConfig,
) -> Result<ClusterResult> {
    if labels.len() != hotspots.len() {
        return Err(Error::Domain(format!(
            "{} labels for {} hotspots",
            labels.len(),
            hotspots.len()
        )));
    }
    let mut members: BTreeMap<i64, Vec<&Hotspot>> = BTreeMap::new();
    for (h, &m) in hotspots.iter().zip(labels) {
        if m != NOISE && m < 1 {
            return Err(Error::Domain(format!("invalid membership {m}")));
        }
        if m != NOISE {
            members.entry(m).or_default().push(h);
        }
    }
    for (expected, &m) in (1..).zip(members.keys()) {
        if m != expected {
            return Err(Error::Domain(format!(
                "memberships must be contiguous from 1; missing {expected}"
            )));
        }
    }

    let unit = cfg.time.unit;
    let mut ignition = Vec::with_capacity(members.len());
    for (&m, group) in &members {
        let first = group.iter().map(|h| h.obs_time).min().expect("non-empty");
        let last = group.iter().map(|h| h.obs_time).max().expect("non-empty");
        let founders: Vec<&&Hotspot> = group.iter().filter(|h| h.obs_time == first).collect();
        let coords: Vec<Coordinate> = founders.iter().map(|h| h.coord).collect();
        let at = centroid(&coords)?;
        ignition.push(IgnitionRow {
            membership: m,
            lon: at.lon(),
            lat: at.lat(),
            obs_time: first,
            time_id: founders[0].time_id,
            obs_in_cluster: group.len(),
            cluster_time_len: unit.span(first, last),
        });
    }

    let rows = hotspots
        .iter()
        .zip(labels)
        .map(|(h, &m)| {
            let (dist, since) = if m == NOISE {
                (None, None)
            } else {
                let ig = &ignition[m as usize - 1];
                let at = Coordinate::new(ig.lon, ig.lat)?;
                (
                    Some(cfg.metric.distance(&h.coord, &at)),
                    Some(unit.span(ig.obs_time, h.obs_time)),
                )
            };
            Ok(HotspotRow {
                lon: h.coord.lon(),
                lat: h.coord.lat(),
                obs_time: h.obs_time,
                time_id: h.time_id,
                membership: m,
                noise: m == NOISE,
                dist_to_ignition: dist,
                time_from_ignition: since,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ClusterResult {
        hotspots: rows,
        ignition,
        settings: cfg.clone(),
    })
}

/// What a row of [`ClusterResult::extract_fire`] represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowType {
    Hotspot,
    Ignition,
    Noise,
}

impl RowType {
    pub fn as_str(self) -> &'static str {
        match self {
            RowType::Hotspot => "hotspot",
            RowType::Ignition => "ignition",
            RowType::Noise => "noise",
        }
    }
}

/// Flattened hotspot or ignition row.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FireRow {
    pub lon: f64,
    pub lat: f64,
    pub obs_time: NaiveDateTime,
    #[serde(rename = "timeID")]
    pub time_id: u32,
    pub membership: i64,
    pub noise: bool,
    pub dist_to_ignition: Option<f64>,
    pub time_from_ignition: Option<f64>,
    #[serde(rename = "type")]
    pub kind: RowType,
    pub obs_in_cluster: Option<usize>,
    pub cluster_time_len: Option<f64>,
}

/// Five-number summary plus mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Distribution {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
}

impl Distribution {
    /// `None` for an empty sample. Quartiles interpolate linearly between
    /// order statistics.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let quantile = |p: f64| {
            let h = (v.len() - 1) as f64 * p;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(v.len() - 1);
            v[lo] + (h - lo as f64) * (v[hi] - v[lo])
        };
        Some(Self {
            min: v[0],
            q1: quantile(0.25),
            median: quantile(0.5),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            q3: quantile(0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Summary {
    pub clusters: usize,
    pub hotspots: usize,
    pub noise: usize,
    pub time_unit: String,
    pub obs_in_cluster: Option<Distribution>,
    pub cluster_time_len: Option<Distribution>,
    pub dist_to_ignition: Option<Distribution>,
    pub time_from_ignition: Option<Distribution>,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} clusters | {} hot spots (including noise points)",
            self.clusters, self.hotspots
        )?;
        let line = |f: &mut fmt::Formatter<'_>, name: &str, d: &Option<Distribution>| {
            match d {
            Some(d) => writeln!(
                f,
                "  {name:<28} min {:>10.2}  q1 {:>10.2}  median {:>10.2}  mean {:>10.2}  q3 {:>10.2}  max {:>10.2}",
                d.min, d.q1, d.median, d.mean, d.q3, d.max
            ),
            None => writeln!(f, "  {name:<28} (no clusters)"),
        }
        };
        writeln!(f, "Clusters")?;
        line(f, "observations", &self.obs_in_cluster)?;
        line(
            f,
            &format!("duration ({})", self.time_unit),
            &self.cluster_time_len,
        )?;
        writeln!(f, "Hotspots")?;
        line(f, "distance to ignition (m)", &self.dist_to_ignition)?;
        line(
            f,
            &format!("time from ignition ({})", self.time_unit),
            &self.time_from_ignition,
        )?;
        writeln!(f, "Noise")?;
        write!(f, "  {} hot spots", self.noise)
    }
}

/// One block of a fire's movement path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PathPoint {
    /// First time index covered by the block.
    pub block_start: u32,
    pub centroid: Coordinate,
    pub obs_count: usize,
}

/// Time-ordered centroids of one cluster in blocks of `step` indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirePath {
    pub membership: i64,
    pub step: u32,
    pub points: Vec<PathPoint>,
}

impl ClusterResult {
    pub fn hotspots(&self) -> &[HotspotRow] {
        &self.hotspots
    }

    pub fn ignition(&self) -> &[IgnitionRow] {
        &self.ignition
    }

    pub fn settings(&self) -> &ClusterConfig {
        &self.settings
    }

    pub fn cluster_count(&self) -> usize {
        self.ignition.len()
    }

    pub fn noise_count(&self) -> usize {
        self.hotspots.iter().filter(|h| h.noise).count()
    }

    /// Final membership of every hotspot, in input order.
    pub fn memberships(&self) -> Vec<i64> {
        self.hotspots.iter().map(|h| h.membership).collect()
    }

    fn ignition_of(&self, membership: i64) -> Result<&IgnitionRow> {
        if membership < 1 {
            return Err(Error::UnknownCluster(membership));
        }
        self.ignition
            .get(membership as usize - 1)
            .ok_or(Error::UnknownCluster(membership))
    }

    /// Hotspot and ignition rows of the selected clusters, plus noise rows
    /// when `include_noise` is set.
    ///
    /// `None` or an empty selection means every cluster. Rows are grouped
    /// by cluster in ascending order, then by observation time; each
    /// ignition row follows the hotspots observed at or before it. Noise
    /// rows come last.
    pub fn extract_fire(
        &self,
        clusters: Option<&[i64]>,
        include_noise: bool,
    ) -> Result<Vec<FireRow>> {
        let selected: Vec<i64> = match clusters {
            Some(ids) if !ids.is_empty() => {
                let mut ids = ids.to_vec();
                ids.sort_unstable();
                ids.dedup();
                for &id in &ids {
                    self.ignition_of(id)?;
                }
                ids
            }
            _ => self.ignition.iter().map(|i| i.membership).collect(),
        };

        let mut by_cluster: BTreeMap<i64, Vec<&HotspotRow>> = BTreeMap::new();
        let mut noise = Vec::new();
        for h in &self.hotspots {
            if h.noise {
                noise.push(h);
            } else {
                by_cluster.entry(h.membership).or_default().push(h);
            }
        }

        let mut rows = Vec::new();
        for m in selected {
            let ig = self.ignition_of(m)?;
            let mut members = by_cluster.remove(&m).unwrap_or_default();
            members.sort_by_key(|h| h.obs_time);
            let split = members.partition_point(|h| h.obs_time <= ig.obs_time);
            let cluster_row = |h: &HotspotRow| FireRow {
                lon: h.lon,
                lat: h.lat,
                obs_time: h.obs_time,
                time_id: h.time_id,
                membership: m,
                noise: false,
                dist_to_ignition: h.dist_to_ignition,
                time_from_ignition: h.time_from_ignition,
                kind: RowType::Hotspot,
                obs_in_cluster: Some(ig.obs_in_cluster),
                cluster_time_len: Some(ig.cluster_time_len),
            };
            rows.extend(members[..split].iter().map(|h| cluster_row(h)));
            rows.push(FireRow {
                lon: ig.lon,
                lat: ig.lat,
                obs_time: ig.obs_time,
                time_id: ig.time_id,
                membership: m,
                noise: false,
                dist_to_ignition: Some(0.0),
                time_from_ignition: Some(0.0),
                kind: RowType::Ignition,
                obs_in_cluster: Some(ig.obs_in_cluster),
                cluster_time_len: Some(ig.cluster_time_len),
            });
            rows.extend(members[split..].iter().map(|h| cluster_row(h)));
        }
        if include_noise {
            noise.sort_by_key(|h| h.obs_time);
            rows.extend(noise.into_iter().map(|h| FireRow {
                lon: h.lon,
                lat: h.lat,
                obs_time: h.obs_time,
                time_id: h.time_id,
                membership: NOISE,
                noise: true,
                dist_to_ignition: None,
                time_from_ignition: None,
                kind: RowType::Noise,
                obs_in_cluster: None,
                cluster_time_len: None,
            }));
        }
        Ok(rows)
    }

    pub fn summary(&self) -> Summary {
        let clustered = || self.hotspots.iter().filter(|h| !h.noise);
        Summary {
            clusters: self.cluster_count(),
            hotspots: self.hotspots.len(),
            noise: self.noise_count(),
            time_unit: self.settings.time.unit.symbol().to_string(),
            obs_in_cluster: Distribution::of(self.ignition.iter().map(|i| i.obs_in_cluster as f64)),
            cluster_time_len: Distribution::of(self.ignition.iter().map(|i| i.cluster_time_len)),
            dist_to_ignition: Distribution::of(clustered().filter_map(|h| h.dist_to_ignition)),
            time_from_ignition: Distribution::of(clustered().filter_map(|h| h.time_from_ignition)),
        }
    }

    /// Movement path of one cluster: members are grouped into consecutive
    /// blocks of `step` time indices starting at the cluster's first index,
    /// and each non-empty block contributes the centroid of its members.
    pub fn fire_movement(&self, membership: i64, step: u32) -> Result<FirePath> {
        if step == 0 {
            return Err(Error::Domain("step must be at least 1".into()));
        }
        let ig = self.ignition_of(membership)?;
        let mut blocks: BTreeMap<u32, Vec<Coordinate>> = BTreeMap::new();
        for h in self.hotspots.iter().filter(|h| h.membership == membership) {
            let block = (h.time_id - ig.time_id) / step;
            blocks
                .entry(block)
                .or_default()
                .push(Coordinate::new(h.lon, h.lat)?);
        }
        let points = blocks
            .into_iter()
            .map(|(block, coords)| {
                Ok(PathPoint {
                    block_start: ig.time_id + block * step,
                    centroid: centroid(&coords)?,
                    obs_count: coords.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FirePath {
            membership,
            step,
            points,
        })
    }

    /// Observation times per membership, for timeline plots.
    pub fn timeline(&self) -> Vec<(NaiveDateTime, i64, bool)> {
        let mut rows: Vec<_> = self
            .hotspots
            .iter()
            .map(|h| (h.obs_time, h.membership, h.noise))
            .collect();
        rows.sort_by_key(|r| (r.0, r.1));
        rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::temporal::parse_timestamp;

    fn hs(id: usize, lon: f64, lat: f64, time: &str, time_id: u32) -> Hotspot {
        Hotspot {
            id,
            coord: Coordinate::new(lon, lat).unwrap(),
            obs_time: parse_timestamp(time).unwrap(),
            time_id,
        }
    }

    /// Start of the published sample: two detections at 13:10, one at 13:30.
    fn sample_start() -> Vec<Hotspot> {
        vec![
            hs(0, 149.30, -37.75999, "2019-12-29 13:10:00", 1),
            hs(1, 149.30, -37.78000, "2019-12-29 13:10:00", 1),
            hs(2, 149.32, -37.78000, "2019-12-29 13:30:00", 1),
            hs(3, 149.30, -37.75999, "2019-12-29 14:10:00", 2),
            hs(4, 149.32, -37.78000, "2019-12-29 17:20:00", 5),
            hs(5, 150.50, -37.00000, "2019-12-29 15:00:00", 2),
        ]
    }

    fn sample_result() -> ClusterResult {
        build_result(
            &sample_start(),
            &[1, 1, 1, 1, 1, -1],
            &ClusterConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn ignition_is_mean_of_earliest_timestamp() {
        let r = sample_result();
        let ig = &r.ignition()[0];
        assert!((ig.lon - 149.30).abs() < 1e-9);
        assert!((ig.lat - (-37.769995)).abs() < 1e-9);
        assert_eq!(ig.time_id, 1);
        assert_eq!(ig.obs_in_cluster, 5);
        assert!((ig.cluster_time_len - 250.0 / 60.0).abs() < 1e-12);
        let h = r.hotspots();
        // Meridian offsets of 0.010005 degrees either side of the ignition.
        let (d0, d1) = (
            h[0].dist_to_ignition.unwrap(),
            h[1].dist_to_ignition.unwrap(),
        );
        assert!((d0 - d1).abs() < 0.01);
        assert!((h[0].dist_to_ignition.unwrap() - 1111.885).abs() / 1111.885 < 2e-3);
        assert!((h[2].dist_to_ignition.unwrap() - 2080.914).abs() / 2080.914 < 2e-3);
        assert!((h[2].time_from_ignition.unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(h[5].noise && h[5].dist_to_ignition.is_none());
    }

    #[test]
    fn single_founder_is_the_ignition() {
        let hotspots = vec![
            hs(0, 149.30, -37.76, "2019-12-29 13:10:00", 1),
            hs(1, 149.32, -37.76, "2019-12-29 13:20:00", 1),
        ];
        let r = build_result(&hotspots, &[1, 1], &ClusterConfig::default()).unwrap();
        assert_eq!(r.hotspots()[0].dist_to_ignition, Some(0.0));
        assert_eq!(r.hotspots()[0].time_from_ignition, Some(0.0));
    }

    #[test]
    fn two_member_founding_frame_uses_midpoint() {
        let hotspots = vec![
            hs(0, 0.0, 0.0, "2020-01-01 00:00:00", 1),
            hs(1, 0.0, 0.02, "2020-01-01 00:00:00", 1),
        ];
        let r = build_result(&hotspots, &[1, 1], &ClusterConfig::default()).unwrap();
        let ig = &r.ignition()[0];
        assert_eq!((ig.lon, ig.lat), (0.0, 0.01));
    }

    #[test]
    fn rejects_gaps_in_memberships() {
        let h = sample_start();
        assert!(build_result(&h, &[1, 1, 3, 3, 3, -1], &ClusterConfig::default()).is_err());
        assert!(build_result(&h, &[1, 1, 0, 1, 1, -1], &ClusterConfig::default()).is_err());
        assert!(build_result(&h[..2], &[1], &ClusterConfig::default()).is_err());
    }

    #[test]
    fn extract_places_ignition_after_founders() {
        let r = sample_result();
        let rows = r.extract_fire(None, true).unwrap();
        assert_eq!(rows.len(), 7);
        let kinds: Vec<_> = rows.iter().map(|r| r.kind).collect();
        assert_eq!(
            kinds,
            [
                RowType::Hotspot,
                RowType::Hotspot,
                RowType::Ignition,
                RowType::Hotspot,
                RowType::Hotspot,
                RowType::Hotspot,
                RowType::Noise
            ]
        );
        assert_eq!(r.extract_fire(None, false).unwrap().len(), 6);
        assert_eq!(r.extract_fire(Some(&[]), false).unwrap().len(), 6);
        assert!(matches!(
            r.extract_fire(Some(&[2]), true),
            Err(Error::UnknownCluster(2))
        ));
        assert!(r.extract_fire(Some(&[-1]), true).is_err());
    }

    #[test]
    fn summary_counts() {
        let s = sample_result().summary();
        assert_eq!((s.clusters, s.hotspots, s.noise), (1, 6, 1));
        let obs = s.obs_in_cluster.unwrap();
        assert_eq!(
            (obs.min, obs.q1, obs.median, obs.q3, obs.max),
            (5.0, 5.0, 5.0, 5.0, 5.0)
        );
        let text = s.to_string();
        assert!(text.contains("1 clusters | 6 hot spots"));
    }

    #[test]
    fn distribution_quartiles() {
        let d = Distribution::of([4.0, 8.0]).unwrap();
        assert_eq!(d.mean, 6.0);
        assert_eq!(d.q1, 5.0);
        let d = Distribution::of([1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!((d.q1, d.median, d.q3), (2.0, 3.0, 4.0));
        assert!(Distribution::of(std::iter::empty()).is_none());
    }

    #[test]
    fn movement_blocks() {
        let r = sample_result();
        let path = r.fire_movement(1, 12).unwrap();
        assert_eq!(path.points.len(), 1);
        assert_eq!(path.points[0].obs_count, 5);
        let path = r.fire_movement(1, 2).unwrap();
        let starts: Vec<u32> = path.points.iter().map(|p| p.block_start).collect();
        assert_eq!(starts, vec![1, 5]);
        assert!(r.fire_movement(-1, 2).is_err());
        assert!(r.fire_movement(7, 2).is_err());
        assert!(r.fire_movement(1, 0).is_err());
    }
}
