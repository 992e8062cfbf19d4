use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono_tz::Tz;
use clap::{Args, Parser, Subcommand, ValueEnum};

use triplink::config::KeyValues;
use triplink::grid::GridSpec;
use triplink::ingest::{
    filter_year, preprocess, read_assignment_csv, read_geolife, read_trips_csv, write_assignment_csv,
    write_trips_csv, PreprocessConfig,
};
use triplink::metrics::{evaluate, write_characteristics_csv, write_median_f_csv, write_reid_csv, ReidConfig};
use triplink::obfuscate::{truncate_dataset, write_drop_report, TruncationSpec};
use triplink::synth::{generate, SynthConfig};
use triplink::{run_attack, AttackParams, BBox, ClusterAssignment};

/// Trajectory-user linking attack, truncation and evaluation for GPS trips.
#[derive(Debug, Parser)]
#[command(name = "triplink", version)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Link trips to pseudonymous users; writes one assignment per stage.
    Attack(AttackArgs),
    /// Truncate trip endpoints by random radii.
    Obfuscate(ObfuscateArgs),
    /// Score assignments against ground truth and run re-identification.
    Evaluate(EvaluateArgs),
    /// Write a synthetic labelled trips CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Geolife,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum City {
    Berlin,
    Beijing,
}

#[derive(Debug, Args)]
struct Region {
    /// City preset: bounding box, time zone and batch size.
    #[arg(long, value_enum)]
    city: Option<City>,
    /// Custom bounding box `lat_min,lon_min,lat_max,lon_max`; overrides the preset's box.
    #[arg(long, value_name = "BOX")]
    bbox: Option<String>,
    /// IANA time zone for the morning and evening windows.
    #[arg(long)]
    timezone: Option<Tz>,
}

#[derive(Debug, Args)]
struct AttackArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Clock of GeoLife timestamps.
    #[arg(long, default_value = "UTC")]
    clock: Tz,
    /// Keep only trips starting in this year (local time).
    #[arg(long)]
    year: Option<i32>,
    #[command(flatten)]
    region: Region,
    /// `key = value` file; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_name = "M")]
    s_cell: Option<f64>,
    #[arg(long, value_name = "HOURS")]
    h_concat: Option<f64>,
    #[arg(long, value_name = "M")]
    lcss_epsilon: Option<f64>,
    #[arg(long, value_name = "M")]
    s_cell_tfidf: Option<f64>,
    #[arg(long)]
    n_matches: Option<usize>,
    #[arg(long)]
    q_match: Option<f64>,
    /// Attack the input as is, without length/density/box filtering.
    #[arg(long)]
    no_preprocess: bool,
    /// Truncate trips before attacking them.
    #[arg(long)]
    obfuscate: bool,
    #[arg(long, value_name = "M")]
    radius_min: Option<f64>,
    #[arg(long, value_name = "M")]
    radius_max: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ObfuscateArgs {
    /// Trips CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_name = "M")]
    radius_min: Option<f64>,
    #[arg(long, value_name = "M")]
    radius_max: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Output directory of `attack`: reads trips.csv and the stage files.
    #[arg(long, conflicts_with_all = ["trips", "assignment"])]
    run: Option<PathBuf>,
    /// Labelled trips CSV.
    #[arg(long, requires = "assignment")]
    trips: Option<PathBuf>,
    /// Assignment CSV; repeat for several stages, the last is used for re-identification.
    #[arg(long)]
    assignment: Vec<PathBuf>,
    #[command(flatten)]
    region: Region,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Points known to the attacker per target.
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Name of this run in the report.
    #[arg(long)]
    label: Option<String>,
    /// Mark the evaluated data as truncated (implied for `--run` directories
    /// holding a drop report).
    #[arg(long)]
    obfuscated: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    days: Option<usize>,
    #[arg(long, value_name = "M")]
    home_separation: Option<f64>,
    #[arg(long)]
    routine_strength: Option<f64>,
    /// Per-point jitter standard deviation in meters.
    #[arg(long, value_name = "M")]
    noise: Option<f64>,
    #[arg(long)]
    points_per_km: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    region: Region,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Trips CSV to write.
    #[arg(long)]
    out: PathBuf,
}

/// Bad flag values detected after parsing; exits with status 2 like clap's
/// own usage errors.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Flag value if given, else config value, else `default`.
fn pick<T: std::str::FromStr>(flag: Option<T>, cfg: &KeyValues, key: &str, default: T) -> Result<T> {
    if let Some(v) = flag {
        return Ok(v);
    }
    Ok(cfg.get(key)?.unwrap_or(default))
}

fn load_config(path: Option<&Path>, known: &[&str]) -> Result<KeyValues> {
    let kv = match path {
        Some(p) => KeyValues::load(p)?,
        None => KeyValues::default(),
    };
    kv.reject_unknown(known).map_err(|e| usage(e.to_string()))?;
    Ok(kv)
}

fn parse_bbox(s: &str) -> Result<BBox> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("bad bounding box {s:?}")))?;
    if v.len() != 4 {
        return Err(usage(format!("bounding box needs 4 numbers, got {s:?}")));
    }
    BBox::new(v[0], v[1], v[2], v[3]).map_err(|e| usage(e.to_string()))
}

fn city_of(flag: Option<City>, cfg: &KeyValues) -> Result<Option<City>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match cfg.get_str("city") {
        None => Ok(None),
        Some(s) => City::from_str(s, true).map(Some).map_err(|_| usage(format!("unknown city {s:?}"))),
    }
}

/// Preset defaults overlaid with config values and flags.
fn resolve_region(region: &Region, cfg: &KeyValues) -> Result<AttackParams> {
    let mut p = match city_of(region.city, cfg)? {
        Some(City::Beijing) => AttackParams::beijing(),
        Some(City::Berlin) | None => AttackParams::berlin(),
    };
    if let Some(b) = region.bbox.as_deref().or(cfg.get_str("bbox")) {
        p.bbox = parse_bbox(b)?;
    }
    p.timezone = pick(region.timezone, cfg, "timezone", p.timezone)?;
    Ok(p)
}

const REGION_KEYS: [&str; 3] = ["city", "bbox", "timezone"];

fn truncation_spec(min: Option<f64>, max: Option<f64>, seed: Option<u64>, cfg: &KeyValues) -> Result<TruncationSpec> {
    let d = TruncationSpec::default();
    let min = pick(min, cfg, "radius_min", d.radius_min_m)?;
    let max = pick(max, cfg, "radius_max", d.radius_max_m)?;
    let seed = pick(seed, cfg, "seed", d.rng_seed)?;
    TruncationSpec::new(min, max, seed).map_err(|e| usage(e.to_string()))
}

/// Files of one command, written only after everything was computed.
struct Outputs(Vec<(PathBuf, Vec<u8>)>);

impl Outputs {
    fn new() -> Self {
        Self(Vec::new())
    }

    fn add(&mut self, path: PathBuf, fill: impl FnOnce(&mut Vec<u8>) -> triplink::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        self.0.push((path, buf));
        Ok(())
    }

    fn add_json<T: serde::Serialize>(&mut self, path: PathBuf, value: &T) -> Result<()> {
        let mut buf = serde_json::to_vec_pretty(value)?;
        buf.push(b'\n');
        self.0.push((path, buf));
        Ok(())
    }

    fn commit(self) -> Result<()> {
        for (path, bytes) in self.0 {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

fn cmd_attack(a: AttackArgs) -> Result<()> {
    const KEYS: [&str; 13] = [
        "city", "bbox", "timezone", "year", "s_cell", "h_concat", "lcss_epsilon", "s_cell_tfidf", "n_matches",
        "q_match", "radius_min", "radius_max", "seed",
    ];
    let cfg = load_config(a.config.as_deref(), &KEYS)?;
    let mut params = resolve_region(&a.region, &cfg)?;
    params.s_cell_m = pick(a.s_cell, &cfg, "s_cell", params.s_cell_m)?;
    params.h_concat = pick(a.h_concat, &cfg, "h_concat", params.h_concat)?;
    params.lcss_epsilon_m = pick(a.lcss_epsilon, &cfg, "lcss_epsilon", params.lcss_epsilon_m)?;
    params.s_cell_tfidf_m = pick(a.s_cell_tfidf, &cfg, "s_cell_tfidf", params.s_cell_tfidf_m)?;
    params.n_matches = pick(a.n_matches, &cfg, "n_matches", params.n_matches)?;
    params.q_match = pick(a.q_match, &cfg, "q_match", params.q_match)?;
    params.validate().map_err(|e| usage(e.to_string()))?;
    let year: Option<i32> = match a.year {
        Some(y) => Some(y),
        None => cfg.get("year")?,
    };
    let spec = if a.obfuscate {
        Some(truncation_spec(a.radius_min, a.radius_max, a.seed, &cfg)?)
    } else {
        None
    };

    let (mut ds, read_report) = match a.format {
        Format::Csv => read_trips_csv(&a.input)?,
        Format::Geolife => read_geolife(&a.input, a.clock)?,
    };
    for d in &read_report.diagnostics {
        eprintln!("warning: {d}");
    }
    if let Some(y) = year {
        ds = filter_year(&ds, y, params.timezone);
    }
    let pre_report = if a.no_preprocess {
        None
    } else {
        let (kept, report) = preprocess(&ds, &PreprocessConfig::with_bbox(params.bbox))?;
        ds = kept;
        Some(report)
    };

    let mut out = Outputs::new();
    if let Some(spec) = spec {
        let (truncated, drops) = truncate_dataset(&ds, &spec);
        ds = truncated;
        out.add(a.out.join("drop_report.csv"), |b| write_drop_report(&drops, b))?;
    }
    if ds.is_empty() {
        bail!("no trips left to attack");
    }
    let outcome = run_attack(&ds, &params)?;

    for (k, stage) in outcome.snapshots.iter().enumerate() {
        out.add(a.out.join(format!("stage{}_assignment.csv", k + 1)), |b| write_assignment_csv(stage, b))?;
    }
    out.add(a.out.join("trips.csv"), |b| write_trips_csv(&ds, b))?;
    out.add_json(
        a.out.join("preprocess_report.json"),
        &serde_json::json!({ "read": read_report, "preprocess": pre_report }),
    )?;
    let mut audit = String::from("iteration,user_a,user_b,locsim,theta\n");
    for m in &outcome.refine.merges {
        audit.push_str(&format!("{},{},{},{},{}\n", m.iteration, m.user_a, m.user_b, m.locsim, m.theta));
    }
    out.0.push((a.out.join("refine_audit.csv"), audit.into_bytes()));
    out.commit()?;
    eprintln!(
        "{} trips -> {} users after concatenation, {} after home locations ({} homes), {} after refinement",
        ds.len(),
        outcome.snapshots[0].n_clusters(),
        outcome.snapshots[1].n_clusters(),
        outcome.home_locations.len(),
        outcome.snapshots[2].n_clusters()
    );
    Ok(())
}

fn cmd_obfuscate(a: ObfuscateArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref(), &["radius_min", "radius_max", "seed"])?;
    let spec = truncation_spec(a.radius_min, a.radius_max, a.seed, &cfg)?;
    let (ds, report) = read_trips_csv(&a.input)?;
    for d in &report.diagnostics {
        eprintln!("warning: {d}");
    }
    let (truncated, drops) = truncate_dataset(&ds, &spec);
    let mut out = Outputs::new();
    out.add(a.out.join("trips.csv"), |b| write_trips_csv(&truncated, b))?;
    out.add(a.out.join("drop_report.csv"), |b| write_drop_report(&drops, b))?;
    out.commit()?;
    eprintln!("{} of {} trips kept", truncated.len(), ds.len());
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let mut keys = vec!["p", "samples", "seed", "label"];
    keys.extend(REGION_KEYS);
    let cfg = load_config(a.config.as_deref(), &keys)?;
    let reid_cfg = ReidConfig {
        p: pick(a.p, &cfg, "p", 4)?,
        n_samples: pick(a.samples, &cfg, "samples", 100)?,
        rng_seed: pick(a.seed, &cfg, "seed", 0)?,
    };
    if reid_cfg.p == 0 || reid_cfg.n_samples == 0 {
        return Err(usage("--p and --samples must be positive"));
    }
    let params = resolve_region(&a.region, &cfg)?;

    let (trips_path, assignment_paths): (PathBuf, Vec<PathBuf>) = match (&a.run, &a.trips) {
        (Some(run), _) => (
            run.join("trips.csv"),
            (1..=3).map(|k| run.join(format!("stage{k}_assignment.csv"))).collect(),
        ),
        (None, Some(t)) => (t.clone(), a.assignment.clone()),
        (None, None) => return Err(usage("give --run DIR or --trips FILE with --assignment FILE")),
    };
    let (ds, _) = read_trips_csv(&trips_path)?;
    if ds.ground_truth().is_none() {
        return Err(triplink::Error::MissingLabels.into());
    }
    let stages: Vec<(String, ClusterAssignment)> = assignment_paths
        .iter()
        .map(|p| {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((name, read_assignment_csv(p)?))
        })
        .collect::<Result<_>>()?;
    let label = a
        .label
        .clone()
        .or_else(|| cfg.get_str("label").map(str::to_string))
        .unwrap_or_else(|| trips_path.display().to_string());
    let grid = GridSpec::new(ds.extent().map(|e| cover(&params.bbox, &e)).unwrap_or(params.bbox), params.s_cell_m)?;
    let obfuscated = a.obfuscated || a.run.as_ref().is_some_and(|r| r.join("drop_report.csv").is_file());
    let ev = evaluate(&ds, &stages, &reid_cfg, &grid, &label, obfuscated)?;

    let mut out = Outputs::new();
    out.add_json(a.out.join("report.json"), &ev)?;
    out.add(a.out.join("reid_per_user.csv"), |b| write_reid_csv(&ev.reid, b))?;
    out.add(a.out.join("characteristics.csv"), |b| write_characteristics_csv(&ev.characteristics, &ev.reid, b))?;
    out.add(a.out.join("median_f.csv"), |b| write_median_f_csv(&ev.report, b))?;
    out.commit()?;
    for s in &ev.report.stages {
        eprintln!(
            "{}: ARI {:.4} AMI {:.4} homogeneity {:.4} completeness {:.4} ({} clusters)",
            s.stage, s.scores.ari, s.scores.ami, s.scores.homogeneity, s.scores.completeness, s.scores.n_clusters
        );
    }
    if let Some(m) = ev.report.reid.median_f_score {
        eprintln!("median F-score over {} users: {m:.4}", ev.report.reid.eligible_users);
    }
    Ok(())
}

/// Smallest box holding both; the evaluation grid must contain every point
/// even when the data was never filtered to the city box.
fn cover(a: &BBox, b: &BBox) -> BBox {
    BBox {
        lat_min: a.lat_min.min(b.lat_min),
        lon_min: a.lon_min.min(b.lon_min),
        lat_max: a.lat_max.max(b.lat_max),
        lon_max: a.lon_max.max(b.lon_max),
    }
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let mut keys = vec![
        "users", "days", "home_separation", "routine_strength", "noise", "points_per_km", "seed",
    ];
    keys.extend(REGION_KEYS);
    let cfg = load_config(a.config.as_deref(), &keys)?;
    let region = resolve_region(&a.region, &cfg)?;
    let d = SynthConfig::default();
    let sc = SynthConfig {
        n_users: pick(a.users, &cfg, "users", d.n_users)?,
        days: pick(a.days, &cfg, "days", d.days)?,
        bbox: region.bbox,
        home_separation_m: pick(a.home_separation, &cfg, "home_separation", d.home_separation_m)?,
        routine_strength: pick(a.routine_strength, &cfg, "routine_strength", d.routine_strength)?,
        noise_sigma_m: pick(a.noise, &cfg, "noise", d.noise_sigma_m)?,
        points_per_km: pick(a.points_per_km, &cfg, "points_per_km", d.points_per_km)?,
        rng_seed: pick(a.seed, &cfg, "seed", d.rng_seed)?,
        timezone: region.timezone,
        start_date: d.start_date,
    };
    sc.validate().map_err(|e| usage(e.to_string()))?;
    let ds = generate(&sc)?;
    let mut out = Outputs::new();
    out.add(a.out.clone(), |b| write_trips_csv(&ds, b))?;
    out.commit()?;
    eprintln!("{} trips for {} users", ds.len(), sc.n_users);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Attack(a) => cmd_attack(a),
        Command::Obfuscate(a) => cmd_obfuscate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
