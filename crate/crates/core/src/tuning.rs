//! Noise-percentage scans over a grid of `activeTime` and `adjDist` values,
//! the data behind scree-style parameter selection.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::ClusterConfig;
use crate::engine::cluster_sweep;
use crate::error::{Error, Result};
use crate::hotspot::{index_hotspots, Hotspot, HotspotRecord};
use crate::noise::{apply_noise_filter, NOISE};

#[derive(Debug, Clone, PartialEq)]
pub struct TuningGrid {
    active_times: Vec<u32>,
    adj_dists: Vec<f64>,
    fixed: ClusterConfig,
}

impl TuningGrid {
    /// Both axes must be non-empty and strictly ascending. The remaining
    /// parameters come from `fixed`; its own `active_time` and `adj_dist`
    /// are ignored.
    pub fn new(active_times: Vec<u32>, adj_dists: Vec<f64>, fixed: ClusterConfig) -> Result<Self> {
        if active_times.is_empty() || adj_dists.is_empty() {
            return Err(Error::Config("tuning grid axes must be non-empty".into()));
        }
        if active_times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "activeTime values must be strictly ascending".into(),
            ));
        }
        if adj_dists
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        {
            return Err(Error::Config(
                "adjDist values must be strictly ascending".into(),
            ));
        }
        Ok(Self {
            active_times,
            adj_dists,
            fixed,
        })
    }

    pub fn active_times(&self) -> &[u32] {
        &self.active_times
    }

    pub fn adj_dists(&self) -> &[f64] {
        &self.adj_dists
    }

    /// Configuration of one grid cell.
    pub fn config(&self, active_time: u32, adj_dist: f64) -> ClusterConfig {
        ClusterConfig {
            active_time,
            adj_dist,
            ..self.fixed.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CellStats {
    pub noise_percent: f64,
    pub cluster_count: usize,
}

/// One cell of a scan. A failed cell keeps its error message.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub active_time: u32,
    pub adj_dist: f64,
    pub outcome: std::result::Result<CellStats, String>,
}

fn run_cell(hotspots: &[Hotspot], cfg: &ClusterConfig) -> Result<CellStats> {
    let raw = cluster_sweep(hotspots, cfg)?;
    let labels = apply_noise_filter(&raw, hotspots, cfg)?;
    let noise = labels.iter().filter(|&&l| l == NOISE).count();
    Ok(CellStats {
        noise_percent: 100.0 * noise as f64 / labels.len() as f64,
        cluster_count: labels.iter().copied().max().unwrap_or(0).max(0) as usize,
    })
}

/// Runs the pipeline on every grid cell, in parallel. Rows are ordered by
/// `(activeTime, adjDist)`.
pub fn noise_scan(records: &[HotspotRecord], grid: &TuningGrid) -> Result<Vec<ScanRow>> {
    grid.fixed.time.validate()?;
    let hotspots = index_hotspots(records, &grid.fixed.time)?;
    let cells: Vec<(u32, f64)> = grid
        .active_times
        .iter()
        .flat_map(|&a| grid.adj_dists.iter().map(move |&d| (a, d)))
        .collect();
    Ok(cells
        .into_par_iter()
        .map(|(active_time, adj_dist)| ScanRow {
            active_time,
            adj_dist,
            outcome: run_cell(&hotspots, &grid.config(active_time, adj_dist))
                .map_err(|e| e.to_string()),
        })
        .collect())
}

/// Which parameter varies along a scan line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Axis {
    ActiveTime,
    AdjDist,
}

/// The cell just after the largest fall in noise percentage along one
/// line of the grid. A suggestion for the eye, not a selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ElbowHint {
    pub axis: Axis,
    pub active_time: u32,
    pub adj_dist: f64,
    /// Drop in percentage points from the previous cell.
    pub drop: f64,
}

/// Largest-drop hints along every row (varying adjDist) and column
/// (varying activeTime) of a scan. Lines without any decrease get none.
pub fn largest_drops(rows: &[ScanRow]) -> Vec<ElbowHint> {
    let mut active_times: Vec<u32> = rows.iter().map(|r| r.active_time).collect();
    active_times.sort_unstable();
    active_times.dedup();
    let mut adj_dists: Vec<f64> = rows.iter().map(|r| r.adj_dist).collect();
    adj_dists.sort_by(f64::total_cmp);
    adj_dists.dedup();

    let mut hints = Vec::new();
    let mut scan_line = |axis: Axis, line: Vec<&ScanRow>| {
        let mut best: Option<(f64, &ScanRow)> = None;
        for pair in line.windows(2) {
            let (Ok(prev), Ok(next)) = (&pair[0].outcome, &pair[1].outcome) else {
                continue;
            };
            let drop = prev.noise_percent - next.noise_percent;
            if drop > 0.0 && best.is_none_or(|(b, _)| drop > b) {
                best = Some((drop, pair[1]));
            }
        }
        if let Some((drop, row)) = best {
            hints.push(ElbowHint {
                axis,
                active_time: row.active_time,
                adj_dist: row.adj_dist,
                drop,
            });
        }
    };
    for &a in &active_times {
        let mut line: Vec<&ScanRow> = rows.iter().filter(|r| r.active_time == a).collect();
        line.sort_by(|x, y| x.adj_dist.total_cmp(&y.adj_dist));
        scan_line(Axis::AdjDist, line);
    }
    for &d in &adj_dists {
        let mut line: Vec<&ScanRow> = rows.iter().filter(|r| r.adj_dist == d).collect();
        line.sort_by_key(|r| r.active_time);
        scan_line(Axis::ActiveTime, line);
    }
    hints
}
