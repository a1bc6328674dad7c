//! CSV ingestion and the files written for a clustering result.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geo::Coordinate;
use crate::hotspot::HotspotRecord;
use crate::results::{ClusterResult, FirePath, FireRow};
use crate::temporal::{format_timestamp, parse_timestamp};
use crate::tuning::ScanRow;

/// Inclusive longitude/latitude box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub lon_min: f64,
    pub lat_min: f64,
    pub lon_max: f64,
    pub lat_max: f64,
}

impl BBox {
    pub fn new(lon_min: f64, lat_min: f64, lon_max: f64, lat_max: f64) -> Result<Self> {
        if !(lon_min <= lon_max && lat_min <= lat_max) {
            return Err(Error::Config(format!(
                "bounding box ({lon_min}, {lat_min}, {lon_max}, {lat_max}) is inverted"
            )));
        }
        Ok(Self {
            lon_min,
            lat_min,
            lon_max,
            lat_max,
        })
    }

    pub fn contains(&self, c: &Coordinate) -> bool {
        (self.lon_min..=self.lon_max).contains(&c.lon())
            && (self.lat_min..=self.lat_max).contains(&c.lat())
    }
}

/// Keeps rows whose irradiance is strictly above `min` (W/m²).
#[derive(Debug, Clone, PartialEq)]
pub struct IrradianceFilter {
    pub column: String,
    pub min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestSpec {
    pub path: PathBuf,
    pub lon_column: String,
    pub lat_column: String,
    pub time_column: String,
    pub irradiance: Option<IrradianceFilter>,
    pub bbox: Option<BBox>,
    /// Skip unparseable rows instead of failing.
    pub lenient: bool,
}

impl IngestSpec {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            lon_column: "lon".into(),
            lat_column: "lat".into(),
            time_column: "obsTime".into(),
            irradiance: None,
            bbox: None,
            lenient: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    /// Parsed rows sorted by observation time, ties in file order.
    pub records: Vec<HotspotRecord>,
    pub rows_read: usize,
    /// Unparseable rows skipped in lenient mode.
    pub skipped: usize,
    /// Rows removed by the irradiance or bounding-box filters.
    pub filtered: usize,
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::MissingColumn {
            column: name.to_string(),
            path: path.to_path_buf(),
        })
}

fn parse_f64(raw: &str, what: &str) -> std::result::Result<f64, String> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| format!("invalid {what} `{raw}`"))
}

/// Reads hotspots from a CSV file with a header row.
pub fn ingest(spec: &IngestSpec) -> Result<Ingested> {
    let path = spec.path.as_path();
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let lon_i = column(&headers, &spec.lon_column, path)?;
    let lat_i = column(&headers, &spec.lat_column, path)?;
    let time_i = column(&headers, &spec.time_column, path)?;
    let irr = match &spec.irradiance {
        Some(f) => Some((column(&headers, &f.column, path)?, f.min)),
        None => None,
    };

    let mut records = Vec::new();
    let (mut rows_read, mut skipped, mut filtered) = (0, 0, 0);
    for row in reader.records() {
        let row = row.map_err(csv_err)?;
        rows_read += 1;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(i).unwrap_or("");
        let parsed = (|| -> std::result::Result<(HotspotRecord, bool), String> {
            let lon = parse_f64(field(lon_i), "longitude")?;
            let lat = parse_f64(field(lat_i), "latitude")?;
            let obs_time = parse_timestamp(field(time_i)).map_err(|e| e.to_string())?;
            let record = HotspotRecord::new(lon, lat, obs_time).map_err(|e| e.to_string())?;
            let mut keep = spec.bbox.is_none_or(|b| b.contains(&record.coord));
            if let Some((i, min)) = irr {
                keep &= parse_f64(field(i), "irradiance")? > min;
            }
            Ok((record, keep))
        })();
        match parsed {
            Ok((record, true)) => records.push(record),
            Ok((_, false)) => filtered += 1,
            Err(_) if spec.lenient => skipped += 1,
            Err(message) => {
                return Err(Error::Row {
                    path: path.to_path_buf(),
                    line,
                    message,
                })
            }
        }
    }
    records.sort_by_key(|r| r.obs_time);
    Ok(Ingested {
        records,
        rows_read,
        skipped,
        filtered,
    })
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn write_hotspots_csv(result: &ClusterResult, w: impl Write) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "lon",
        "lat",
        "obsTime",
        "timeID",
        "membership",
        "noise",
        "distToIgnition",
        "timeFromIgnition",
    ])?;
    for h in result.hotspots() {
        out.write_record([
            num(h.lon),
            num(h.lat),
            format_timestamp(&h.obs_time),
            h.time_id.to_string(),
            h.membership.to_string(),
            h.noise.to_string(),
            opt(h.dist_to_ignition),
            opt(h.time_from_ignition),
        ])?;
    }
    out.flush()
}

pub fn write_ignitions_csv(result: &ClusterResult, w: impl Write) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "membership",
        "lon",
        "lat",
        "obsTime",
        "timeID",
        "obsInCluster",
        "clusterTimeLen",
    ])?;
    for ig in result.ignition() {
        out.write_record([
            ig.membership.to_string(),
            num(ig.lon),
            num(ig.lat),
            format_timestamp(&ig.obs_time),
            ig.time_id.to_string(),
            ig.obs_in_cluster.to_string(),
            num(ig.cluster_time_len),
        ])?;
    }
    out.flush()
}

pub fn write_timeline_csv(result: &ClusterResult, w: impl Write) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["obsTime", "membership", "noise"])?;
    for (t, m, noise) in result.timeline() {
        out.write_record([format_timestamp(&t), m.to_string(), noise.to_string()])?;
    }
    out.flush()
}

/// Rows of [`ClusterResult::extract_fire`].
pub fn write_fire_rows_csv(rows: &[FireRow], w: impl Write) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "lon",
        "lat",
        "obsTime",
        "timeID",
        "membership",
        "noise",
        "distToIgnition",
        "timeFromIgnition",
        "type",
        "obsInCluster",
        "clusterTimeLen",
    ])?;
    for r in rows {
        out.write_record([
            num(r.lon),
            num(r.lat),
            format_timestamp(&r.obs_time),
            r.time_id.to_string(),
            r.membership.to_string(),
            r.noise.to_string(),
            opt(r.dist_to_ignition),
            opt(r.time_from_ignition),
            r.kind.as_str().to_string(),
            r.obs_in_cluster.map(|n| n.to_string()).unwrap_or_default(),
            opt(r.cluster_time_len),
        ])?;
    }
    out.flush()
}

pub fn write_paths_csv(paths: &[FirePath], w: impl Write) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["membership", "blockStart", "lon", "lat", "obsCount"])?;
    for path in paths {
        for p in &path.points {
            out.write_record([
                path.membership.to_string(),
                p.block_start.to_string(),
                num(p.centroid.lon()),
                num(p.centroid.lat()),
                p.obs_count.to_string(),
            ])?;
        }
    }
    out.flush()
}

/// Scan table; failed cells carry their error and empty statistics.
pub fn write_scan_csv(rows: &[ScanRow], w: impl Write) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "activeTime",
        "adjDist",
        "noisePercent",
        "clusterCount",
        "error",
    ])?;
    for r in rows {
        let (noise, clusters, error) = match &r.outcome {
            Ok(s) => (
                num(s.noise_percent),
                s.cluster_count.to_string(),
                String::new(),
            ),
            Err(e) => (String::new(), String::new(), e.clone()),
        };
        out.write_record([
            r.active_time.to_string(),
            num(r.adj_dist),
            noise,
            clusters,
            error,
        ])?;
    }
    out.flush()
}

/// Hotspots in the ingest schema, with an optional `truth` column.
pub fn write_records_csv(
    records: &[HotspotRecord],
    truth: Option<&[i64]>,
    w: impl Write,
) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["lon", "lat", "obsTime"];
    if truth.is_some() {
        header.push("truth");
    }
    out.write_record(&header)?;
    for (i, r) in records.iter().enumerate() {
        let mut row = vec![
            num(r.coord.lon()),
            num(r.coord.lat()),
            format_timestamp(&r.obs_time),
        ];
        if let Some(t) = truth {
            row.push(t[i].to_string());
        }
        out.write_record(&row)?;
    }
    out.flush()
}

fn point(lon: f64, lat: f64) -> Value {
    json!({ "type": "Point", "coordinates": [lon, lat] })
}

/// Hotspots and ignition points as a GeoJSON FeatureCollection.
pub fn clusters_geojson(result: &ClusterResult) -> Value {
    let mut features: Vec<Value> = result
        .hotspots()
        .iter()
        .map(|h| {
            json!({
                "type": "Feature",
                "geometry": point(h.lon, h.lat),
                "properties": {
                    "type": if h.noise { "noise" } else { "hotspot" },
                    "membership": h.membership,
                    "timeID": h.time_id,
                    "obsTime": format_timestamp(&h.obs_time),
                    "noise": h.noise,
                },
            })
        })
        .collect();
    features.extend(result.ignition().iter().map(|ig| {
        json!({
            "type": "Feature",
            "geometry": point(ig.lon, ig.lat),
            "properties": {
                "type": "ignition",
                "membership": ig.membership,
                "timeID": ig.time_id,
                "obsTime": format_timestamp(&ig.obs_time),
                "noise": false,
            },
        })
    }));
    json!({ "type": "FeatureCollection", "features": features })
}

/// Movement paths as LineStrings; a path with a single centroid is a Point.
pub fn paths_geojson(paths: &[FirePath]) -> Value {
    let features: Vec<Value> = paths
        .iter()
        .map(|p| {
            let coords: Vec<[f64; 2]> = p
                .points
                .iter()
                .map(|q| [q.centroid.lon(), q.centroid.lat()])
                .collect();
            let geometry = if coords.len() == 1 {
                point(coords[0][0], coords[0][1])
            } else {
                json!({ "type": "LineString", "coordinates": coords })
            };
            json!({
                "type": "Feature",
                "geometry": geometry,
                "properties": {
                    "membership": p.membership,
                    "step": p.step,
                    "blockStart": p.points.iter().map(|q| q.block_start).collect::<Vec<_>>(),
                    "obsCount": p.points.iter().map(|q| q.obs_count).collect::<Vec<_>>(),
                },
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}

fn write_file(
    path: PathBuf,
    f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> Result<PathBuf> {
    let io_err = |source| Error::Io {
        path: path.clone(),
        source,
    };
    let mut w = BufWriter::new(File::create(&path).map_err(io_err)?);
    f(&mut w).and_then(|_| w.flush()).map_err(io_err)?;
    Ok(path)
}

fn write_json(w: &mut impl Write, value: &impl serde::Serialize) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)
}

/// Writes hotspots.csv, ignitions.csv, clusters.geojson, timeline.csv and
/// settings.json into `out_dir`, plus paths.geojson when `movement_step`
/// is given. Returns the paths written.
pub fn write_outputs(
    result: &ClusterResult,
    out_dir: &Path,
    movement_step: Option<u32>,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut written = vec![
        write_file(out_dir.join("hotspots.csv"), |w| {
            write_hotspots_csv(result, w)
        })?,
        write_file(out_dir.join("ignitions.csv"), |w| {
            write_ignitions_csv(result, w)
        })?,
        write_file(out_dir.join("clusters.geojson"), |w| {
            write_json(w, &clusters_geojson(result))
        })?,
        write_file(out_dir.join("timeline.csv"), |w| {
            write_timeline_csv(result, w)
        })?,
        write_file(out_dir.join("settings.json"), |w| {
            write_json(w, result.settings())
        })?,
    ];
    if let Some(step) = movement_step {
        let paths = result
            .ignition()
            .iter()
            .map(|ig| result.fire_movement(ig.membership, step))
            .collect::<Result<Vec<_>>>()?;
        written.push(write_file(out_dir.join("paths.geojson"), |w| {
            write_json(w, &paths_geojson(&paths))
        })?);
    }
    Ok(written)
}
