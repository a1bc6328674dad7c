//! Demotes small or short-lived clusters to noise.

use std::collections::BTreeMap;

use chrono::NaiveDateTime;

use crate::config::ClusterConfig;
use crate::error::{Error, Result};
use crate::hotspot::Hotspot;

/// Membership of hotspots that belong to no fire.
pub const NOISE: i64 = -1;

struct Extent {
    count: u32,
    first: NaiveDateTime,
    last: NaiveDateTime,
    min_id: usize,
}

/// Replaces raw sweep labels by final memberships.
///
/// A cluster survives when it has at least `min_pts` hotspots and lasts at
/// least `min_time` (in the configured time unit, from exact timestamps).
/// Survivors are renumbered `1..=K` by ignition time, ties broken by the
/// smallest hotspot id; everything else becomes [`NOISE`].
pub fn apply_noise_filter(
    labels: &[u32],
    hotspots: &[Hotspot],
    cfg: &ClusterConfig,
) -> Result<Vec<i64>> {
    if labels.len() != hotspots.len() {
        return Err(Error::Domain(format!(
            "{} labels for {} hotspots",
            labels.len(),
            hotspots.len()
        )));
    }
    let mut extents: BTreeMap<u32, Extent> = BTreeMap::new();
    for (h, &label) in hotspots.iter().zip(labels) {
        extents
            .entry(label)
            .and_modify(|e| {
                e.count += 1;
                e.first = e.first.min(h.obs_time);
                e.last = e.last.max(h.obs_time);
                e.min_id = e.min_id.min(h.id);
            })
            .or_insert(Extent {
                count: 1,
                first: h.obs_time,
                last: h.obs_time,
                min_id: h.id,
            });
    }

    let mut survivors: Vec<(u32, &Extent)> = extents
        .iter()
        .filter(|(_, e)| {
            e.count >= cfg.min_pts && cfg.time.unit.span(e.first, e.last) >= cfg.min_time
        })
        .map(|(&l, e)| (l, e))
        .collect();
    survivors.sort_by_key(|(_, e)| (e.first, e.min_id));
    let renumber: BTreeMap<u32, i64> = survivors
        .iter()
        .enumerate()
        .map(|(k, (l, _))| (*l, k as i64 + 1))
        .collect();

    Ok(labels
        .iter()
        .map(|l| renumber.get(l).copied().unwrap_or(NOISE))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Coordinate;
    use crate::temporal::parse_timestamp;

    fn at(id: usize, minutes: i64) -> Hotspot {
        Hotspot {
            id,
            coord: Coordinate::new(0.0, 0.0).unwrap(),
            obs_time: parse_timestamp("2020-01-01 00:00:00").unwrap()
                + chrono::Duration::minutes(minutes),
            time_id: (minutes / 60) as u32 + 1,
        }
    }

    #[test]
    fn too_few_points_is_noise() {
        let hotspots: Vec<_> = (0..3).map(|i| at(i, i as i64 * 120)).collect();
        let out = apply_noise_filter(&[1, 1, 1], &hotspots, &ClusterConfig::default()).unwrap();
        assert_eq!(out, vec![NOISE; 3]);
    }

    #[test]
    fn too_short_is_noise() {
        let hotspots: Vec<_> = (0..10).map(|i| at(i, 0)).collect();
        let out = apply_noise_filter(&[7; 10], &hotspots, &ClusterConfig::default()).unwrap();
        assert_eq!(out, vec![NOISE; 10]);
    }

    #[test]
    fn thresholds_are_inclusive() {
        // Exactly 4 points spanning exactly 3 hours.
        let hotspots: Vec<_> = [0, 60, 120, 180]
            .iter()
            .enumerate()
            .map(|(i, &m)| at(i, m))
            .collect();
        let out = apply_noise_filter(&[5; 4], &hotspots, &ClusterConfig::default()).unwrap();
        assert_eq!(out, vec![1; 4]);
    }

    #[test]
    fn renumbers_by_ignition_time() {
        // Raw label 9 ignites first, raw label 3 second.
        let mut hotspots = Vec::new();
        let mut labels = Vec::new();
        for i in 0..4 {
            hotspots.push(at(hotspots.len(), 600 + i * 90));
            labels.push(3);
        }
        for i in 0..4 {
            hotspots.push(at(hotspots.len(), i * 90));
            labels.push(9);
        }
        hotspots.push(at(hotspots.len(), 5));
        labels.push(4);
        let out = apply_noise_filter(&labels, &hotspots, &ClusterConfig::default()).unwrap();
        assert_eq!(out, vec![2, 2, 2, 2, 1, 1, 1, 1, NOISE]);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(apply_noise_filter(&[1, 2], &[at(0, 0)], &ClusterConfig::default()).is_err());
    }
}
