use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::builder::RangedU64ValueParser;
use clap::{Args, Parser, Subcommand, ValueEnum};
use firecluster::io::{
    ingest, paths_geojson, write_fire_rows_csv, write_outputs, write_paths_csv, write_records_csv,
    write_scan_csv, BBox, IngestSpec, IrradianceFilter,
};
use firecluster::synth::FireScenario;
use firecluster::tuning::{largest_drops, noise_scan, Axis, TuningGrid};
use firecluster::{
    hotspot_cluster, ClusterConfig, ClusterResult, DistanceMetric, HotspotRecord, TimeConfig,
    TimeUnit,
};
use log::info;

#[derive(Parser)]
#[command(
    name = "firecluster",
    version,
    about = "Cluster satellite fire hotspots into individual bushfires"
)]
struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true, env = "FIRECLUSTER_THREADS", value_parser = RangedU64ValueParser::<usize>::new().range(1..=4096))]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster hotspots and write hotspots, ignitions, GeoJSON, timeline and settings files.
    Cluster(ClusterCmd),
    /// Write the combined hotspot and ignition table for selected clusters.
    Extract(ExtractCmd),
    /// Print summary statistics of a clustering.
    Summary(SummaryCmd),
    /// Write the movement path of one or all clusters.
    Movement(MovementCmd),
    /// Scan a grid of activeTime and adjDist values and report noise percentages.
    Tune(TuneCmd),
    /// Generate a synthetic hotspot dataset.
    Simulate(SimulateCmd),
}

#[derive(Args)]
struct InputArgs {
    /// Hotspot CSV file with a header row.
    input: PathBuf,
    #[arg(long, default_value = "lon")]
    lon_col: String,
    #[arg(long, default_value = "lat")]
    lat_col: String,
    #[arg(long, default_value = "obsTime")]
    time_col: String,
    /// Keep only rows whose irradiance is above this value (W/m²).
    #[arg(long)]
    irradiance_min: Option<f64>,
    #[arg(long, default_value = "irradiance")]
    irradiance_col: String,
    /// Keep only rows inside LON_MIN,LAT_MIN,LON_MAX,LAT_MAX.
    #[arg(long, value_parser = parse_bbox, allow_hyphen_values = true)]
    bbox: Option<BBox>,
    /// Skip unparseable rows instead of failing.
    #[arg(long)]
    lenient: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Geodesic,
    Haversine,
}

#[derive(Args)]
struct FixedArgs {
    /// Minimum hotspots in a cluster.
    #[arg(long, default_value_t = 4, value_parser = RangedU64ValueParser::<u32>::new().range(1..=u32::MAX as u64))]
    min_pts: u32,
    /// Minimum cluster duration, in time units.
    #[arg(long, default_value_t = 3.0, value_parser = non_negative)]
    min_time: f64,
    /// Time unit: s, mins, h or days.
    #[arg(long, default_value = "h", value_parser = parse_unit)]
    time_unit: TimeUnit,
    /// Time units per time index.
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    time_step: f64,
    #[arg(long, value_enum, default_value_t = Metric::Geodesic)]
    metric: Metric,
}

#[derive(Args)]
struct ClusterArgs {
    /// Time indices a cluster stays active without new hotspots.
    #[arg(long, default_value_t = 24)]
    active_time: u32,
    /// Distance joining two hotspots, in meters.
    #[arg(long, default_value_t = 3000.0, value_parser = positive)]
    adj_dist: f64,
    #[command(flatten)]
    fixed: FixedArgs,
}

#[derive(Args)]
struct ClusterCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    params: ClusterArgs,
    /// Output directory.
    #[arg(long, default_value = "firecluster-out")]
    out: PathBuf,
    /// Also write paths.geojson, combining this many time indices per point.
    #[arg(long, value_parser = RangedU64ValueParser::<u32>::new().range(1..=u32::MAX as u64))]
    step: Option<u32>,
}

#[derive(Args)]
struct ExtractCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    params: ClusterArgs,
    /// Comma-separated cluster ids; all clusters when omitted.
    #[arg(long, value_delimiter = ',')]
    clusters: Vec<i64>,
    /// Include noise hotspots.
    #[arg(long)]
    include_noise: bool,
    /// Output CSV file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SummaryCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    params: ClusterArgs,
}

#[derive(Args)]
struct MovementCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    params: ClusterArgs,
    /// Cluster id; all clusters when omitted.
    #[arg(long)]
    cluster: Option<i64>,
    /// Time indices combined per path point.
    #[arg(long, default_value_t = 1, value_parser = RangedU64ValueParser::<u32>::new().range(1..=u32::MAX as u64))]
    step: u32,
    /// Output file; GeoJSON when it ends in .geojson, CSV otherwise.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TuneCmd {
    #[command(flatten)]
    input: InputArgs,
    /// Ascending activeTime values.
    #[arg(long, value_delimiter = ',', default_values_t = [12u32, 24, 36, 48])]
    active_times: Vec<u32>,
    /// Ascending adjDist values in meters.
    #[arg(long, value_delimiter = ',', default_values_t = [1000.0, 2000.0, 3000.0, 4000.0, 5000.0])]
    adj_dists: Vec<f64>,
    #[command(flatten)]
    fixed: FixedArgs,
    /// Also write the table to this CSV file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateCmd {
    /// JSON scenario file; overrides the quick options.
    #[arg(long, conflicts_with_all = ["fires", "bbox", "noise_points", "seed"])]
    scenario: Option<PathBuf>,
    /// Number of fires.
    #[arg(long, default_value_t = 5)]
    fires: usize,
    /// Area for ignitions: LON_MIN,LAT_MIN,LON_MAX,LAT_MAX.
    #[arg(long, value_parser = parse_bbox, allow_hyphen_values = true)]
    bbox: Option<BBox>,
    /// Isolated single hotspots to add.
    #[arg(long, default_value_t = 0)]
    noise_points: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV file.
    #[arg(long)]
    out: PathBuf,
    /// Add a `truth` column with the generating fire (-1 for noise).
    #[arg(long)]
    truth: bool,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(format!("`{s}` is not a non-negative number")),
    }
}

fn parse_unit(s: &str) -> Result<TimeUnit, String> {
    s.parse().map_err(|e: firecluster::Error| e.to_string())
}

fn parse_bbox(s: &str) -> Result<BBox, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("`{s}` is not four comma-separated numbers"))?;
    match v[..] {
        [a, b, c, d] => BBox::new(a, b, c, d).map_err(|e| e.to_string()),
        _ => Err(format!("`{s}` is not four comma-separated numbers")),
    }
}

impl FixedArgs {
    fn config(&self, active_time: u32, adj_dist: f64) -> ClusterConfig {
        ClusterConfig {
            active_time,
            adj_dist,
            min_pts: self.min_pts,
            min_time: self.min_time,
            time: TimeConfig {
                unit: self.time_unit,
                step: self.time_step,
            },
            metric: match self.metric {
                Metric::Geodesic => DistanceMetric::Geodesic,
                Metric::Haversine => DistanceMetric::Haversine,
            },
            ..ClusterConfig::default()
        }
    }
}

impl ClusterArgs {
    fn config(&self) -> ClusterConfig {
        self.fixed.config(self.active_time, self.adj_dist)
    }
}

fn read_hotspots(args: &InputArgs) -> Result<Vec<HotspotRecord>> {
    let spec = IngestSpec {
        lon_column: args.lon_col.clone(),
        lat_column: args.lat_col.clone(),
        time_column: args.time_col.clone(),
        irradiance: args.irradiance_min.map(|min| IrradianceFilter {
            column: args.irradiance_col.clone(),
            min,
        }),
        bbox: args.bbox,
        lenient: args.lenient,
        ..IngestSpec::new(&args.input)
    };
    let data = ingest(&spec)?;
    info!(
        "read {} rows from {}: {} kept, {} filtered, {} skipped",
        data.rows_read,
        args.input.display(),
        data.records.len(),
        data.filtered,
        data.skipped
    );
    Ok(data.records)
}

fn run_clustering(input: &InputArgs, params: &ClusterArgs) -> Result<ClusterResult> {
    let records = read_hotspots(input)?;
    let started = Instant::now();
    let result = hotspot_cluster(&records, &params.config())?;
    info!(
        "{} clusters | {} hot spots (including noise points)",
        result.cluster_count(),
        result.hotspots().len()
    );
    info!("{} noise", result.noise_count());
    info!("clustered in {:.2?}", started.elapsed());
    Ok(result)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush()
        .with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn cluster(cmd: ClusterCmd) -> Result<()> {
    let result = run_clustering(&cmd.input, &cmd.params)?;
    for path in write_outputs(&result, &cmd.out, cmd.step)? {
        info!("wrote {}", path.display());
    }
    println!("{}", result.summary());
    Ok(())
}

fn extract(cmd: ExtractCmd) -> Result<()> {
    let result = run_clustering(&cmd.input, &cmd.params)?;
    let selection = (!cmd.clusters.is_empty()).then_some(cmd.clusters.as_slice());
    let rows = result.extract_fire(selection, cmd.include_noise)?;
    let mut w = create(&cmd.out)?;
    write_fire_rows_csv(&rows, &mut w).with_context(|| format!("writing {}", cmd.out.display()))?;
    finish(w, &cmd.out)?;
    println!("{} rows", rows.len());
    Ok(())
}

fn summary(cmd: SummaryCmd) -> Result<()> {
    let result = run_clustering(&cmd.input, &cmd.params)?;
    println!("{}", result.summary());
    Ok(())
}

fn movement(cmd: MovementCmd) -> Result<()> {
    let result = run_clustering(&cmd.input, &cmd.params)?;
    let ids: Vec<i64> = match cmd.cluster {
        Some(id) => vec![id],
        None => result.ignition().iter().map(|ig| ig.membership).collect(),
    };
    let paths = ids
        .iter()
        .map(|&id| result.fire_movement(id, cmd.step))
        .collect::<firecluster::Result<Vec<_>>>()?;
    let mut w = create(&cmd.out)?;
    if cmd.out.extension().is_some_and(|e| e == "geojson") {
        serde_json::to_writer_pretty(&mut w, &paths_geojson(&paths))?;
        writeln!(w)?;
    } else {
        write_paths_csv(&paths, &mut w)
            .with_context(|| format!("writing {}", cmd.out.display()))?;
    }
    finish(w, &cmd.out)?;
    for p in &paths {
        println!("cluster {}: {} path points", p.membership, p.points.len());
    }
    Ok(())
}

fn tune(cmd: TuneCmd) -> Result<()> {
    let records = read_hotspots(&cmd.input)?;
    let grid = TuningGrid::new(cmd.active_times, cmd.adj_dists, cmd.fixed.config(0, 1.0))?;
    let started = Instant::now();
    let rows = noise_scan(&records, &grid)?;
    info!("scanned {} cells in {:.2?}", rows.len(), started.elapsed());
    if let Some(out) = &cmd.out {
        let mut w = create(out)?;
        write_scan_csv(&rows, &mut w).with_context(|| format!("writing {}", out.display()))?;
        finish(w, out)?;
    }
    println!(
        "{:>10} {:>10} {:>12} {:>10}",
        "activeTime", "adjDist", "noise %", "clusters"
    );
    for r in &rows {
        match &r.outcome {
            Ok(s) => println!(
                "{:>10} {:>10} {:>12.2} {:>10}",
                r.active_time, r.adj_dist, s.noise_percent, s.cluster_count
            ),
            Err(e) => println!("{:>10} {:>10} failed: {e}", r.active_time, r.adj_dist),
        }
    }
    for h in largest_drops(&rows) {
        let line = match h.axis {
            Axis::AdjDist => format!("activeTime {}", h.active_time),
            Axis::ActiveTime => format!("adjDist {}", h.adj_dist),
        };
        println!(
            "largest drop along {line}: activeTime {} adjDist {} (-{:.2} points)",
            h.active_time, h.adj_dist, h.drop
        );
    }
    Ok(())
}

fn simulate(cmd: SimulateCmd) -> Result<()> {
    let scenario: FireScenario = match &cmd.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => {
            let b = cmd
                .bbox
                .unwrap_or(BBox::new(145.0, -38.0, 149.0, -35.0).expect("valid box"));
            FireScenario::scattered(
                cmd.fires,
                (b.lon_min, b.lat_min, b.lon_max, b.lat_max),
                30_000.0,
                100,
                (10, 48),
                cmd.seed,
            )
            .map(|sc| FireScenario {
                noise_points: cmd.noise_points,
                ..sc
            })?
        }
    };
    let data = scenario.generate()?;
    let truth = cmd.truth.then(|| data.truth());
    let mut w = create(&cmd.out)?;
    write_records_csv(&data.records, truth.as_deref(), &mut w)
        .with_context(|| format!("writing {}", cmd.out.display()))?;
    finish(w, &cmd.out)?;
    println!(
        "{} hotspots from {} fires",
        data.len(),
        scenario.fires.len()
    );
    Ok(())
}

fn is_usage_error(e: &anyhow::Error) -> bool {
    matches!(
        e.downcast_ref::<firecluster::Error>(),
        Some(
            firecluster::Error::Config(_)
                | firecluster::Error::MissingColumn { .. }
                | firecluster::Error::UnknownCluster(_)
        )
    )
}

/// The error and its causes, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in e.chain() {
        let part = cause.to_string();
        if !text.contains(&part) {
            if !text.is_empty() {
                text.push_str(": ");
            }
            text.push_str(&part);
        }
    }
    text
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let outcome = match cli.command {
        Command::Cluster(c) => cluster(c),
        Command::Extract(c) => extract(c),
        Command::Summary(c) => summary(c),
        Command::Movement(c) => movement(c),
        Command::Tune(c) => tune(c),
        Command::Simulate(c) => simulate(c),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(if is_usage_error(&e) { 2 } else { 1 })
        }
    }
}
