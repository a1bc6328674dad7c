use crate::config::ClusterConfig;
use crate::engine::cluster_sweep;
use crate::error::Result;
use crate::hotspot::{index_hotspots, HotspotRecord};
use crate::noise::apply_noise_filter;
use crate::results::{build_result, ClusterResult};

/// Clusters hotspot observations into fires: time indexing, the window
/// sweep, noise filtering and result assembly.
pub fn hotspot_cluster(records: &[HotspotRecord], cfg: &ClusterConfig) -> Result<ClusterResult> {
    cfg.validate()?;
    let hotspots = index_hotspots(records, &cfg.time)?;
    let raw = cluster_sweep(&hotspots, cfg)?;
    let labels = apply_noise_filter(&raw, &hotspots, cfg)?;
    build_result(&hotspots, &labels, cfg)
}
