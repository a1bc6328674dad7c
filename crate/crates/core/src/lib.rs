//! Spatiotemporal clustering of satellite fire hotspots.
//!
//! Hotspots are bucketed into integer time indices, clustered spatially
//! inside sliding windows of `activeTime + 1` indices, and linked from one
//! window to the next so that each cluster follows one fire from its
//! ignition. Small or short-lived clusters are finally marked as noise.

pub mod config;
pub mod engine;
pub mod error;
pub mod geo;
pub mod hotspot;
pub mod io;
pub mod noise;
mod pipeline;
pub mod results;
pub mod synth;
pub mod temporal;
pub mod tuning;
mod union_find;

pub use config::{ClusterConfig, IgnitionCenter};
pub use error::{Error, Result};
pub use geo::{Coordinate, DistanceMetric};
pub use hotspot::{Hotspot, HotspotRecord};
pub use noise::NOISE;
pub use pipeline::hotspot_cluster;
pub use results::{ClusterResult, FirePath, FireRow, RowType, Summary};
pub use temporal::{TimeConfig, TimeUnit};
