//! Spatial clustering inside a time window and label propagation across
//! consecutive windows.
//!
//! Each window `S_t` is clustered into the connected components of the
//! graph joining hotspots at most `adjDist` apart. Hotspots seen in an
//! earlier window keep their label; a new hotspot takes the label of the
//! nearest labelled hotspot in its component, and components made only of
//! new hotspots start a new cluster. Components holding several existing
//! labels are therefore split back along those labels.

use std::cmp::Ordering;
use std::collections::HashMap;

use chrono::NaiveDateTime;
use rayon::prelude::*;

use crate::config::ClusterConfig;
use crate::error::{Error, Result};
use crate::geo::{Coordinate, DistanceMetric};
use crate::hotspot::Hotspot;
use crate::temporal::window_for;
use crate::union_find::UnionFind;

/// Distances closer than this are treated as equal when choosing the
/// nearest labelled hotspot.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Slack added to chord bounds to absorb rounding in the embedding.
const CHORD_SLACK: f64 = 1e-6;

/// Below this many new hotspots in a component the nearest-label search
/// runs on the calling thread.
const PARALLEL_THRESHOLD: usize = 64;

/// A set partition of points `0..len`.
///
/// Components are numbered in order of their first member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    count: usize,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn component_count(&self) -> usize {
        self.count
    }

    pub fn component_of(&self, point: usize) -> usize {
        self.assignment[point]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Members of each component, ascending, indexed by component number.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.count];
        for (point, &c) in self.assignment.iter().enumerate() {
            groups[c].push(point);
        }
        groups
    }
}

/// Distinct positions of a point list, with their embeddings.
struct Sites {
    coords: Vec<Coordinate>,
    embedded: Vec<[f64; 3]>,
    of_point: Vec<usize>,
}

impl Sites {
    fn new(points: &[Coordinate], metric: DistanceMetric) -> Self {
        let mut index: HashMap<(u64, u64), usize> = HashMap::with_capacity(points.len());
        let mut coords = Vec::new();
        let mut of_point = Vec::with_capacity(points.len());
        for p in points {
            let site = *index.entry(p.bits()).or_insert_with(|| {
                coords.push(*p);
                coords.len() - 1
            });
            of_point.push(site);
        }
        let embedded = coords.iter().map(|c| metric.embed(c)).collect();
        Self {
            coords,
            embedded,
            of_point,
        }
    }
}

#[inline]
fn chord(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn cell_of(p: &[f64; 3], size: f64) -> [i64; 3] {
    [
        (p[0] / size).floor() as i64,
        (p[1] / size).floor() as i64,
        (p[2] / size).floor() as i64,
    ]
}

/// Connected components of the graph joining points at most `adj_dist`
/// meters apart.
///
/// Points are bucketed in a 3-D grid of the metric's embedding with cells
/// of side `adj_dist`. The chord between two points never exceeds their
/// distance, so joined pairs always sit in neighbouring cells.
pub fn local_components(
    points: &[Coordinate],
    adj_dist: f64,
    metric: DistanceMetric,
) -> Result<Partition> {
    if !(adj_dist.is_finite() && adj_dist > 0.0) {
        return Err(Error::Domain(format!(
            "adjDist must be positive, got {adj_dist}"
        )));
    }
    let sites = Sites::new(points, metric);
    let n = sites.coords.len();
    let mut uf = UnionFind::new(n);

    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, e) in sites.embedded.iter().enumerate() {
        grid.entry(cell_of(e, adj_dist)).or_default().push(i);
    }
    let reach = adj_dist + CHORD_SLACK;
    for (i, e) in sites.embedded.iter().enumerate() {
        let [cx, cy, cz] = cell_of(e, adj_dist);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(bucket) = grid.get(&[cx + dx, cy + dy, cz + dz]) else {
                        continue;
                    };
                    for &j in bucket {
                        if j <= i || chord(e, &sites.embedded[j]) > reach {
                            continue;
                        }
                        if metric.distance(&sites.coords[i], &sites.coords[j]) <= adj_dist {
                            uf.union(i, j);
                        }
                    }
                }
            }
        }
    }

    let mut number: HashMap<usize, usize> = HashMap::new();
    let assignment = sites
        .of_point
        .iter()
        .map(|&s| {
            let root = uf.find(s);
            let next = number.len();
            *number.entry(root).or_insert(next)
        })
        .collect();
    Ok(Partition {
        assignment,
        count: number.len(),
    })
}

/// Cluster labels assigned so far during a sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MembershipState {
    labels: Vec<Option<u32>>,
    next_label: u32,
    first_seen: Vec<u32>,
}

impl MembershipState {
    pub fn new(hotspot_count: usize) -> Self {
        Self {
            labels: vec![None; hotspot_count],
            next_label: 1,
            first_seen: Vec::new(),
        }
    }

    pub fn label(&self, id: usize) -> Option<u32> {
        self.labels[id]
    }

    pub fn labels(&self) -> &[Option<u32>] {
        &self.labels
    }

    /// The label the next new cluster will receive.
    pub fn next_label(&self) -> u32 {
        self.next_label
    }

    pub fn cluster_count(&self) -> usize {
        self.first_seen.len()
    }

    /// Index of the window in which `label` was created.
    pub fn first_seen_window(&self, label: u32) -> Option<u32> {
        let idx = usize::try_from(label).ok()?.checked_sub(1)?;
        self.first_seen.get(idx).copied()
    }

    fn fresh(&mut self, t: u32) -> u32 {
        let label = self.next_label;
        self.next_label += 1;
        self.first_seen.push(t);
        label
    }

    /// Final labels; fails if any hotspot was never labelled.
    pub fn into_labels(self) -> Result<Vec<u32>> {
        self.labels
            .into_iter()
            .enumerate()
            .map(|(id, l)| {
                l.ok_or_else(|| Error::Invariant(format!("hotspot {id} was never labelled")))
            })
            .collect()
    }
}

struct LabelledSite {
    coord: Coordinate,
    embedded: [f64; 3],
    label: u32,
}

/// Label of the labelled site nearest to `p`; ties within
/// [`TIE_TOLERANCE`] go to the smaller label.
fn nearest_label(p: &Coordinate, sites: &[LabelledSite], metric: DistanceMetric) -> u32 {
    let pe = metric.embed(p);
    let chords: Vec<f64> = sites.iter().map(|s| chord(&pe, &s.embedded)).collect();
    let closest = chords
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("component has a labelled site");
    // Distance is never below the chord, so only sites whose chord is
    // within the first candidate's distance can win.
    let bound = metric.distance(p, &sites[closest].coord) + TIE_TOLERANCE + CHORD_SLACK;
    let scored: Vec<(f64, u32)> = sites
        .iter()
        .zip(&chords)
        .filter(|(_, &c)| c <= bound)
        .map(|(s, _)| (metric.distance(p, &s.coord), s.label))
        .collect();
    let best = scored.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    scored
        .iter()
        .filter(|s| s.0 <= best + TIE_TOLERANCE)
        .map(|s| s.1)
        .min()
        .expect("closest site is always scored")
}

/// Orders new components for label numbering: earliest observation, then
/// smallest longitude and latitude. Distinct components never share a
/// position, so the key is unique and independent of input row order.
fn founding_key(members: &[&Hotspot]) -> (NaiveDateTime, f64, f64) {
    members
        .iter()
        .map(|h| (h.obs_time, h.coord.lon(), h.coord.lat()))
        .min_by(cmp_key)
        .expect("component is non-empty")
}

fn cmp_key(a: &(NaiveDateTime, f64, f64), b: &(NaiveDateTime, f64, f64)) -> Ordering {
    a.0.cmp(&b.0)
        .then(a.1.total_cmp(&b.1))
        .then(a.2.total_cmp(&b.2))
}

/// Labels the hotspots of window `t` that first appear at index `t`.
///
/// `window` lists ids into `hotspots`. Every hotspot with a time index
/// below `t` must already be labelled and every hotspot at `t` unlabelled.
pub fn propagate_labels(
    hotspots: &[Hotspot],
    window: &[usize],
    state: &mut MembershipState,
    adj_dist: f64,
    metric: DistanceMetric,
    t: u32,
) -> Result<()> {
    let mut any_new = false;
    for &id in window {
        let h = &hotspots[id];
        match (h.time_id.cmp(&t), state.label(id)) {
            (Ordering::Greater, _) => {
                return Err(Error::Invariant(format!(
                    "hotspot {id} with index {} is in window {t}",
                    h.time_id
                )))
            }
            (Ordering::Less, None) => {
                return Err(Error::Invariant(format!(
                    "hotspot {id} from index {} is unlabelled at window {t}",
                    h.time_id
                )))
            }
            (Ordering::Equal, Some(_)) => {
                return Err(Error::Invariant(format!(
                    "new hotspot {id} is already labelled at window {t}"
                )))
            }
            (Ordering::Equal, None) => any_new = true,
            (Ordering::Less, Some(_)) => {}
        }
    }
    if !any_new {
        return Ok(());
    }

    let coords: Vec<Coordinate> = window.iter().map(|&id| hotspots[id].coord).collect();
    let partition = local_components(&coords, adj_dist, metric)?;

    let mut founding: Vec<((NaiveDateTime, f64, f64), Vec<usize>)> = Vec::new();
    let mut inherited: Vec<(usize, u32)> = Vec::new();
    for group in partition.groups() {
        let ids: Vec<usize> = group.iter().map(|&w| window[w]).collect();
        let (old, new): (Vec<usize>, Vec<usize>) =
            ids.iter().partition(|&&id| state.label(id).is_some());
        if new.is_empty() {
            continue;
        }
        if old.is_empty() {
            let members: Vec<&Hotspot> = new.iter().map(|&id| &hotspots[id]).collect();
            founding.push((founding_key(&members), new));
            continue;
        }

        let mut by_position: HashMap<(u64, u64), LabelledSite> = HashMap::new();
        for &id in &old {
            let h = &hotspots[id];
            let label = state.label(id).expect("partitioned as labelled");
            by_position
                .entry(h.coord.bits())
                .and_modify(|s| s.label = s.label.min(label))
                .or_insert_with(|| LabelledSite {
                    coord: h.coord,
                    embedded: metric.embed(&h.coord),
                    label,
                });
        }
        let sites: Vec<LabelledSite> = by_position.into_values().collect();
        let nearest = |&id: &usize| (id, nearest_label(&hotspots[id].coord, &sites, metric));
        if new.len() >= PARALLEL_THRESHOLD {
            inherited.par_extend(new.par_iter().map(nearest));
        } else {
            inherited.extend(new.iter().map(nearest));
        }
    }

    for (id, label) in inherited {
        state.labels[id] = Some(label);
    }
    founding.sort_by(|a, b| cmp_key(&a.0, &b.0));
    for (_, members) in founding {
        let label = state.fresh(t);
        for id in members {
            state.labels[id] = Some(label);
        }
    }
    Ok(())
}

/// Runs the window sweep over the whole dataset and returns one raw label
/// per hotspot, before noise filtering.
pub fn cluster_sweep(hotspots: &[Hotspot], cfg: &ClusterConfig) -> Result<Vec<u32>> {
    cluster_sweep_observed(hotspots, cfg, |_, _| {})
}

/// [`cluster_sweep`], calling `observe` with the state after every window
/// that introduced new hotspots.
pub fn cluster_sweep_observed(
    hotspots: &[Hotspot],
    cfg: &ClusterConfig,
    mut observe: impl FnMut(u32, &MembershipState),
) -> Result<Vec<u32>> {
    cfg.validate()?;
    if hotspots.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some((pos, h)) = hotspots.iter().enumerate().find(|(i, h)| h.id != *i) {
        return Err(Error::Domain(format!(
            "hotspot at position {pos} has id {}; ids must be dense and in order",
            h.id
        )));
    }
    let last = hotspots.iter().map(|h| h.time_id).max().unwrap_or(1);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); last as usize + 1];
    for h in hotspots {
        if h.time_id == 0 {
            return Err(Error::Domain(format!("hotspot {} has time index 0", h.id)));
        }
        buckets[h.time_id as usize].push(h.id);
    }

    let mut state = MembershipState::new(hotspots.len());
    for t in 1..=last {
        if buckets[t as usize].is_empty() {
            continue;
        }
        let w = window_for(t, cfg.active_time)?;
        let window: Vec<usize> = buckets[w.lo as usize..=w.hi as usize].concat();
        propagate_labels(hotspots, &window, &mut state, cfg.adj_dist, cfg.metric, t)?;
        observe(t, &state);
    }
    state.into_labels()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::temporal::parse_timestamp;

    fn c(lon: f64, lat: f64) -> Coordinate {
        Coordinate::new(lon, lat).unwrap()
    }

    /// Moves `meters` north of `origin` along a meridian, approximately.
    fn north(origin: Coordinate, meters: f64) -> Coordinate {
        c(origin.lon(), origin.lat() + meters / 111_000.0)
    }

    fn hs(id: usize, coord: Coordinate, time_id: u32) -> Hotspot {
        let base = parse_timestamp("2020-01-01 00:00:00").unwrap();
        Hotspot {
            id,
            coord,
            obs_time: base + chrono::Duration::hours(time_id as i64 - 1),
            time_id,
        }
    }

    #[test]
    fn one_edge_or_none() {
        let a = c(149.0, -37.0);
        let near =
            local_components(&[a, north(a, 2000.0)], 3000.0, DistanceMetric::Geodesic).unwrap();
        assert_eq!(near.component_count(), 1);
        let far =
            local_components(&[a, north(a, 5000.0)], 3000.0, DistanceMetric::Geodesic).unwrap();
        assert_eq!(far.component_count(), 2);
    }

    #[test]
    fn rejects_non_positive_threshold() {
        assert!(local_components(&[c(0.0, 0.0)], 0.0, DistanceMetric::Geodesic).is_err());
        assert!(local_components(&[c(0.0, 0.0)], -5.0, DistanceMetric::Haversine).is_err());
    }

    #[test]
    fn duplicates_share_a_component() {
        let p = c(146.7, -36.99);
        let part =
            local_components(&[p, p, c(10.0, 10.0), p], 1.0, DistanceMetric::Geodesic).unwrap();
        assert_eq!(part.assignment(), &[0, 0, 1, 0]);
    }

    #[test]
    fn chains_join_across_the_antimeridian() {
        let pts = [c(179.99, 0.0), c(-179.995, 0.0), c(-179.98, 0.0)];
        let part = local_components(&pts, 2000.0, DistanceMetric::Geodesic).unwrap();
        assert_eq!(part.component_count(), 1);
    }

    #[test]
    fn new_point_takes_nearest_label_in_merged_component() {
        // Clusters 2 and 4 touch through a new point; it joins the nearer one.
        let base = c(149.0, -37.0);
        let hotspots = vec![
            hs(0, base, 1),                // A
            hs(1, north(base, 1000.0), 1), // B
            hs(2, north(base, 5000.0), 1), // C
            hs(3, north(base, 6000.0), 1), // D
            hs(4, north(base, 3800.0), 2), // E, new
        ];
        let mut state = MembershipState::new(5);
        state.labels = vec![Some(2), Some(2), Some(4), Some(4), None];
        state.next_label = 5;
        state.first_seen = vec![1, 1, 1, 1];
        propagate_labels(
            &hotspots,
            &[0, 1, 2, 3, 4],
            &mut state,
            3000.0,
            DistanceMetric::Geodesic,
            2,
        )
        .unwrap();
        assert_eq!(state.label(4), Some(4));
        assert_eq!(state.labels()[..4], [Some(2), Some(2), Some(4), Some(4)]);
        assert_eq!(state.next_label(), 5);
    }

    #[test]
    fn isolated_new_pair_gets_one_fresh_label() {
        let base = c(149.0, -37.0);
        let far = c(150.0, -37.0);
        let hotspots = vec![hs(0, base, 1), hs(1, far, 2), hs(2, north(far, 1000.0), 2)];
        let mut state = MembershipState::new(3);
        state.labels[0] = Some(1);
        state.next_label = 2;
        state.first_seen = vec![1];
        propagate_labels(
            &hotspots,
            &[0, 1, 2],
            &mut state,
            3000.0,
            DistanceMetric::Geodesic,
            2,
        )
        .unwrap();
        assert_eq!(state.label(1), Some(2));
        assert_eq!(state.label(2), Some(2));
        assert_eq!(state.first_seen_window(2), Some(2));
    }

    #[test]
    fn window_without_new_points_is_a_no_op() {
        let hotspots = vec![hs(0, c(0.0, 0.0), 1)];
        let mut state = MembershipState::new(1);
        state.labels[0] = Some(1);
        state.next_label = 2;
        state.first_seen = vec![1];
        let before = state.clone();
        propagate_labels(
            &hotspots,
            &[0],
            &mut state,
            3000.0,
            DistanceMetric::Geodesic,
            2,
        )
        .unwrap();
        assert_eq!(state, before);
    }

    #[test]
    fn precondition_violations_are_reported() {
        let hotspots = vec![hs(0, c(0.0, 0.0), 1), hs(1, c(0.0, 0.01), 2)];
        let mut state = MembershipState::new(2);
        let err = propagate_labels(
            &hotspots,
            &[0, 1],
            &mut state,
            3000.0,
            DistanceMetric::Geodesic,
            2,
        );
        assert!(matches!(err, Err(Error::Invariant(_))));
        let err = propagate_labels(
            &hotspots,
            &[0, 1],
            &mut state,
            3000.0,
            DistanceMetric::Geodesic,
            1,
        );
        assert!(matches!(err, Err(Error::Invariant(_))));
    }

    #[test]
    fn equidistant_new_point_goes_to_smaller_label() {
        let mid = c(149.0, -37.0);
        let east = c(149.02, -37.0);
        let west = c(148.98, -37.0);
        let hotspots = vec![hs(0, east, 1), hs(1, west, 1), hs(2, mid, 2)];
        let mut state = MembershipState::new(3);
        state.labels = vec![Some(1), Some(2), None];
        state.next_label = 3;
        state.first_seen = vec![1, 1];
        propagate_labels(
            &hotspots,
            &[0, 1, 2],
            &mut state,
            3000.0,
            DistanceMetric::Geodesic,
            2,
        )
        .unwrap();
        assert_eq!(state.label(2), Some(1));
    }

    #[test]
    fn sweep_single_hotspot() {
        let labels = cluster_sweep(&[hs(0, c(0.0, 0.0), 1)], &ClusterConfig::default()).unwrap();
        assert_eq!(labels, vec![1]);
        assert!(matches!(
            cluster_sweep(&[], &ClusterConfig::default()),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn dormant_cluster_is_not_revived() {
        // Same place, 30 indices apart, activeTime 24: two separate fires.
        let p = c(149.0, -37.0);
        let hotspots = vec![hs(0, p, 1), hs(1, p, 31)];
        let labels = cluster_sweep(&hotspots, &ClusterConfig::default()).unwrap();
        assert_eq!(labels, vec![1, 2]);
        // 24 indices apart is still within the window.
        let hotspots = vec![hs(0, p, 1), hs(1, p, 25)];
        let labels = cluster_sweep(&hotspots, &ClusterConfig::default()).unwrap();
        assert_eq!(labels, vec![1, 1]);
    }
}
