//! Command-line front end tying together simulation, pair-set enumeration,
//! per-zone calibration, tracking, and evaluation.
//!
//! Every subcommand reads and writes plain structured text (JSON documents
//! for plans, rules, and zone plans; delimited text for logs, tracks, and
//! ECDF tables), so runs are scriptable and diffable. Outputs are
//! deterministic given identical inputs and seeds.
//!
//! Exit codes: 0 on success, 2 when calibration leaves zones uncalibrated
//! (the report is still written), 64 for command-line usage errors, and 1
//! for any other failure (malformed files are reported with file and line).

use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use tdoa_zones::calibrate::CalibrationConfig;
use tdoa_zones::eval::{grid_points, StaticEvalConfig};
use tdoa_zones::geometry::point_to_polyline_distance;
use tdoa_zones::io;
use tdoa_zones::measure::all_pairs;
use tdoa_zones::tracker::TrackerConfig;
use tdoa_zones::{
    calibrate, ecdf, enumerate_pair_sets, init_tracker, sample_path, simulate_drive,
    static_point_eval, step, summarize, EnumerationRule, Error, EvalReport, PairSet, Point2,
    Result, TrackedFix,
};

#[derive(Parser)]
#[command(
    name = "tdoa-zones",
    version,
    about = "Zone-adaptive anchor-pair selection toolkit for TDOA positioning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a measurement drive along a path and write the logs.
    Simulate(SimulateArgs),
    /// Enumerate admissible anchor-pair sets and print the count.
    Enumerate(EnumerateArgs),
    /// Sweep all candidate sets over a drive and write the zone plan.
    Calibrate(CalibrateArgs),
    /// Replay a measurement log through the zone-adaptive tracker.
    Track(TrackArgs),
    /// Score a track against a reference trajectory and write its ECDF.
    Eval(EvalArgs),
    /// Benchmark fixed sets against the zone-adaptive source on static points.
    StaticEval(StaticEvalArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Floor plan file (JSON).
    #[arg(long)]
    plan: PathBuf,
    /// Path specification file (JSON: waypoints, speed, rate).
    #[arg(long)]
    path: PathBuf,
    /// Noise model file (JSON).
    #[arg(long)]
    noise: PathBuf,
    /// Output measurement log (CSV).
    #[arg(long)]
    out_meas: PathBuf,
    /// Output reference trajectory (CSV).
    #[arg(long)]
    out_ref: PathBuf,
}

#[derive(Args)]
struct EnumerateArgs {
    /// Floor plan file (JSON); provides the anchor list.
    #[arg(long)]
    plan: PathBuf,
    /// Minimum number of pairs in a set.
    #[arg(long, default_value_t = 3)]
    min: usize,
    /// Maximum number of pairs in a set.
    #[arg(long, default_value_t = 5)]
    max: usize,
    /// Maximum number of pairs any single anchor may appear in.
    #[arg(long, default_value_t = 3)]
    max_uses: usize,
    /// Also print every set, one per line, after the count.
    #[arg(long)]
    list: bool,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Floor plan file (JSON).
    #[arg(long)]
    plan: PathBuf,
    /// Measurement log from a calibration drive (CSV).
    #[arg(long)]
    meas: PathBuf,
    /// Reference trajectory aligned with the log (CSV).
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Enumeration rule file (JSON).
    #[arg(long)]
    rule: PathBuf,
    /// Output zone plan (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Optional per-set, per-zone RMSE matrix output (CSV).
    #[arg(long)]
    matrix: Option<PathBuf>,
}

#[derive(Args)]
struct TrackArgs {
    /// Floor plan file (JSON).
    #[arg(long)]
    plan: PathBuf,
    /// Zone plan produced by `calibrate` (JSON).
    #[arg(long)]
    zoneplan: PathBuf,
    /// Measurement log to replay (CSV).
    #[arg(long)]
    meas: PathBuf,
    /// Output track (CSV).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Track file produced by `track` (CSV).
    #[arg(long)]
    track: PathBuf,
    /// Reference trajectory: either a reference CSV or a path spec JSON.
    #[arg(long)]
    refpath: PathBuf,
    /// Output ECDF table (CSV).
    #[arg(long)]
    out_ecdf: PathBuf,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("locations").required(true)))]
struct StaticEvalArgs {
    /// Floor plan file (JSON).
    #[arg(long)]
    plan: PathBuf,
    /// Test point list (CSV with x,y columns).
    #[arg(long, group = "locations")]
    points: Option<PathBuf>,
    /// Generate test points on a grid with this spacing in metres.
    #[arg(long, group = "locations")]
    grid: Option<f64>,
    /// Zone plan providing the fixed sets and the adaptive source (JSON).
    #[arg(long)]
    zoneplan: PathBuf,
    /// Noise model file (JSON).
    #[arg(long)]
    noise: PathBuf,
    /// Measurement epochs simulated per point.
    #[arg(long, default_value_t = 50)]
    repeats: usize,
    /// Output evaluation report (JSON).
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = err.print();
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(64);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Enumerate(args) => enumerate(args),
        Command::Calibrate(args) => run_calibrate(args),
        Command::Track(args) => track(args),
        Command::Eval(args) => eval(args),
        Command::StaticEval(args) => static_eval(args),
    }
}

fn simulate(args: SimulateArgs) -> Result<ExitCode> {
    let plan = io::read_plan(&args.plan)?;
    let path = io::read_path_spec(&args.path)?;
    let noise = io::read_noise(&args.noise)?;
    let ids: Vec<_> = plan.anchors().iter().map(|a| a.id).collect();
    let pairs = all_pairs(&ids);
    let drive = simulate_drive(&path, &plan, &pairs, &noise)?;
    io::write_measurements(&args.out_meas, &drive.bundles)?;
    io::write_reference(&args.out_ref, &drive.reference)?;
    println!(
        "simulated {} epochs over {:.1} s across {} pairs",
        drive.bundles.len(),
        drive.bundles.last().map(|b| b.t).unwrap_or(0.0),
        pairs.len(),
    );
    Ok(ExitCode::SUCCESS)
}

fn enumerate(args: EnumerateArgs) -> Result<ExitCode> {
    let plan = io::read_plan(&args.plan)?;
    let rule = EnumerationRule {
        min_pairs: args.min,
        max_pairs: args.max,
        max_anchor_uses: args.max_uses,
    };
    let ids: Vec<_> = plan.anchors().iter().map(|a| a.id).collect();
    let sets = enumerate_pair_sets(&ids, &rule)?;
    println!("{}", sets.len());
    if args.list {
        for set in &sets {
            println!("{set}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_calibrate(args: CalibrateArgs) -> Result<ExitCode> {
    let plan = io::read_plan(&args.plan)?;
    let bundles = io::read_measurements(&args.meas)?;
    let reference = io::read_reference(&args.reference)?;
    let rule = io::read_rule(&args.rule)?;
    let outcome = calibrate(
        &bundles,
        &reference,
        &plan,
        &rule,
        &CalibrationConfig::default(),
    )?;
    io::write_zone_plan(&args.out, &outcome.plan)?;
    if let Some(matrix) = &args.matrix {
        io::write_rmse_matrix(matrix, &outcome)?;
    }
    println!(
        "calibrated {} zones from {} candidate sets ({} bundles dropped)",
        outcome.plan.zones.len(),
        outcome.candidates.len(),
        outcome.dropped_bundles,
    );
    for (zone, entry) in &outcome.plan.zones {
        println!(
            "zone {zone}: [{}] rmse {:.4} m over {} samples",
            entry.set, entry.rmse, entry.samples
        );
    }
    println!(
        "default: [{}] rmse {:.4} m",
        outcome.plan.default_set, outcome.plan.default_rmse
    );
    if outcome.plan.uncalibrated.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        let ids: Vec<String> = outcome
            .plan
            .uncalibrated
            .iter()
            .map(|z| z.to_string())
            .collect();
        eprintln!("uncalibrated zones: {}", ids.join(", "));
        Ok(ExitCode::from(2))
    }
}

fn track(args: TrackArgs) -> Result<ExitCode> {
    let plan = io::read_plan(&args.plan)?;
    let zone_plan = io::read_zone_plan(&args.zoneplan)?;
    let bundles = io::read_measurements(&args.meas)?;
    let Some(first) = bundles.first() else {
        return Err(Error::EmptySample("measurement log"));
    };
    let cfg = TrackerConfig::default();
    let mut state = init_tracker(&plan, &zone_plan, first, &cfg)?;
    let mut track: Vec<TrackedFix<f64>> = Vec::with_capacity(bundles.len());
    track.push(TrackedFix {
        t: first.t,
        position: state.gaussian.position(),
        zone: state.active_zone,
        set_used: state.active_set.clone(),
        rough: None,
    });
    for bundle in &bundles[1..] {
        let (next, fix) = step(&state, bundle, &plan, &zone_plan, &cfg)?;
        state = next;
        track.push(fix);
    }
    io::write_track(&args.out, &track, &zone_plan)?;
    println!("tracked {} epochs", track.len());
    Ok(ExitCode::SUCCESS)
}

fn eval(args: EvalArgs) -> Result<ExitCode> {
    let rows = io::read_track(&args.track)?;
    let polyline = read_reference_polyline(&args.refpath)?;
    let errors: Vec<f64> = rows
        .iter()
        .map(|row| point_to_polyline_distance(row.position, &polyline))
        .collect::<Result<_>>()?;
    let table = ecdf(&errors)?;
    io::write_ecdf(&args.out_ecdf, &table)?;
    let mut report = EvalReport::default();
    report.sources.insert("track".into(), summarize(&errors)?);
    print_report(&report);
    Ok(ExitCode::SUCCESS)
}

/// Loads the reference trajectory for `eval` as a polyline: either a path
/// spec (JSON object) sampled to positions, or a reference trajectory CSV.
fn read_reference_polyline(path: &PathBuf) -> Result<Vec<Point2<f64>>> {
    let head = io::read_to_string(path)?;
    if head.trim_start().starts_with('{') {
        let spec = io::read_path_spec(path)?;
        Ok(sample_path(&spec)?.into_iter().map(|(_, p)| p).collect())
    } else {
        let fixes = io::read_reference(path)?;
        Ok(fixes.into_iter().map(|f| f.position).collect())
    }
}

fn static_eval(args: StaticEvalArgs) -> Result<ExitCode> {
    let plan = io::read_plan(&args.plan)?;
    let zone_plan = io::read_zone_plan(&args.zoneplan)?;
    let noise = io::read_noise(&args.noise)?;
    let points = match (&args.points, args.grid) {
        (Some(file), None) => io::read_points(file)?,
        (None, Some(spacing)) => grid_points(&plan, spacing),
        _ => unreachable!("clap enforces exactly one point source"),
    };
    let repeats = NonZeroUsize::new(args.repeats)
        .ok_or(Error::EmptySample("static evaluation repeats"))?;

    // Benchmark sources: the default set plus each zone winner, deduplicated,
    // as fixed sources, against the zone-adaptive source.
    let mut sets: Vec<PairSet> = vec![zone_plan.default_set.clone()];
    for entry in zone_plan.zones.values() {
        if !sets.contains(&entry.set) {
            sets.push(entry.set.clone());
        }
    }
    let report = static_point_eval(
        &points,
        &plan,
        &noise,
        &sets,
        Some(&zone_plan),
        repeats,
        &StaticEvalConfig::default(),
    )?;
    io::write_eval_report(&args.out, &report)?;
    println!("{} points, {} repeats", points.len(), repeats);
    print_report(&report);
    Ok(ExitCode::SUCCESS)
}

fn print_report(report: &EvalReport<f64>) {
    for (label, stats) in &report.sources {
        println!(
            "{label}: rmse {:.4} m, median {:.4} m, p80 {:.4} m, max {:.4} m, samples {}",
            stats.rmse, stats.median, stats.p80, stats.max, stats.samples
        );
    }
}
