//! File formats: plans, configurations, logs, tracks and reports.
//!
//! Everything is plain structured text — JSON documents for object-shaped
//! data (floor plans, configurations, zone plans, reports) and headered
//! comma-delimited text for row-shaped data (measurement logs, reference
//! trajectories, tracks, point lists, ECDF tables).
//!
//! Numeric columns are written with six decimals, so files round-trip
//! losslessly at micrometre / microsecond precision, locale-independently.
//! Every reading error names the file and, where applicable, the 1-based
//! line: `path:line: message`.
//!
//! This module works at the `f64` precision the file formats are defined at;
//! use the crate's generic types for in-memory work at other precisions.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calibrate::{CalibrationOutcome, ZoneEntry, ZonePlan};
use crate::error::{Error, Result};
use crate::eval::{EcdfTable, EvalReport, SourceStats};
use crate::geometry::Point2;
use crate::measure::{AnchorPair, PairSet, ReferenceFix, TdoaBundle, TrackedFix};
use crate::pairs::EnumerationRule;
use crate::plan::{Anchor, FloorPlan, Obstacle, Wall, Zone, ZoneId};
use crate::sim::{NoiseModel, PathSpec};

/// Init policy recorded in zone-plan reports: calibration solves start each
/// sample at the previous sample's estimate.
pub const INIT_POLICY: &str = "previous-estimate";

// ---------------------------------------------------------------------------
// Generic helpers
// ---------------------------------------------------------------------------

/// Reads a whole file, attributing IO failures to the file path.
pub fn read_to_string(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    fs::read_to_string(path).map_err(|e| Error::file(path, e.to_string()))
}

fn write_string(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::file(path, e.to_string()))
}

fn parse_json<'a, D: Deserialize<'a>>(path: &Path, text: &'a str) -> Result<D> {
    serde_json::from_str(text).map_err(|e| {
        if e.line() > 0 {
            Error::file_line(path, e.line(), e.to_string())
        } else {
            Error::file(path, e.to_string())
        }
    })
}

fn to_json_pretty<S: Serialize>(path: &Path, value: &S) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::file(path, e.to_string()))
}

/// Splits delimited text into non-empty lines with their 1-based numbers and
/// checks the header line.
fn delimited_lines<'a>(
    path: &Path,
    text: &'a str,
    expected_header: &str,
) -> Result<Vec<(usize, &'a str)>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, header)) if header == expected_header => {}
        Some((n, header)) => {
            return Err(Error::file_line(
                path,
                n,
                format!("expected header '{expected_header}', found '{header}'"),
            ))
        }
        None => return Err(Error::file(path, "file is empty")),
    }
    Ok(lines.collect())
}

fn split_columns<'a>(
    path: &Path,
    line_no: usize,
    line: &'a str,
    expected: usize,
) -> Result<Vec<&'a str>> {
    let cols: Vec<&str> = line.split(',').map(str::trim).collect();
    if cols.len() != expected {
        return Err(Error::file_line(
            path,
            line_no,
            format!("expected {expected} columns, found {}", cols.len()),
        ));
    }
    Ok(cols)
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line_no: usize,
    name: &str,
    raw: &str,
) -> Result<T> {
    raw.parse().map_err(|_| {
        Error::file_line(path, line_no, format!("cannot parse {name} from '{raw}'"))
    })
}

// ---------------------------------------------------------------------------
// Floor plan JSON
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct AnchorRow {
    id: u16,
    x: f64,
    y: f64,
}

#[derive(Serialize, Deserialize)]
struct WallRow {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
    delay_ns: f64,
}

#[derive(Serialize, Deserialize)]
struct ObstacleRow {
    vertices: Vec<Point2<f64>>,
    delay_ns: f64,
}

#[derive(Serialize, Deserialize)]
struct ZoneRow {
    id: u16,
    vertices: Vec<Point2<f64>>,
}

#[derive(Serialize, Deserialize)]
struct PlanFile {
    anchors: Vec<AnchorRow>,
    #[serde(default)]
    walls: Vec<WallRow>,
    #[serde(default)]
    obstacles: Vec<ObstacleRow>,
    zones: Vec<ZoneRow>,
}

/// Reads and validates a floor plan document.
pub fn read_plan(path: impl AsRef<Path>) -> Result<FloorPlan<f64>> {
    let path = path.as_ref();
    let file: PlanFile = parse_json(path, &read_to_string(path)?)?;
    let anchors = file
        .anchors
        .into_iter()
        .map(|a| Anchor { id: a.id, position: Point2::new(a.x, a.y) })
        .collect();
    let walls = file
        .walls
        .into_iter()
        .map(|w| Wall {
            start: Point2::new(w.x1, w.y1),
            end: Point2::new(w.x2, w.y2),
            delay_ns: w.delay_ns,
        })
        .collect();
    let obstacles = file
        .obstacles
        .into_iter()
        .map(|o| Obstacle { boundary: o.vertices, delay_ns: o.delay_ns })
        .collect();
    let zones = file
        .zones
        .into_iter()
        .map(|z| Zone { id: z.id, boundary: z.vertices })
        .collect();
    FloorPlan::new(anchors, walls, obstacles, zones)
        .map_err(|e| Error::file(path, e.to_string()))
}

/// Writes a floor plan document.
pub fn write_plan(path: impl AsRef<Path>, plan: &FloorPlan<f64>) -> Result<()> {
    let path = path.as_ref();
    let file = PlanFile {
        anchors: plan
            .anchors()
            .iter()
            .map(|a| AnchorRow { id: a.id, x: a.position.x, y: a.position.y })
            .collect(),
        walls: plan
            .walls()
            .iter()
            .map(|w| WallRow {
                x1: w.start.x,
                y1: w.start.y,
                x2: w.end.x,
                y2: w.end.y,
                delay_ns: w.delay_ns,
            })
            .collect(),
        obstacles: plan
            .obstacles()
            .iter()
            .map(|o| ObstacleRow { vertices: o.boundary.clone(), delay_ns: o.delay_ns })
            .collect(),
        zones: plan
            .zones()
            .iter()
            .map(|z| ZoneRow { id: z.id, vertices: z.boundary.clone() })
            .collect(),
    };
    write_string(path, &to_json_pretty(path, &file)?)
}

// ---------------------------------------------------------------------------
// Configuration JSON (noise, path, enumeration rule)
// ---------------------------------------------------------------------------

/// Reads a noise-model configuration document.
pub fn read_noise(path: impl AsRef<Path>) -> Result<NoiseModel<f64>> {
    let path = path.as_ref();
    parse_json(path, &read_to_string(path)?)
}

/// Writes a noise-model configuration document.
pub fn write_noise(path: impl AsRef<Path>, noise: &NoiseModel<f64>) -> Result<()> {
    let path = path.as_ref();
    write_string(path, &to_json_pretty(path, noise)?)
}

/// Reads and validates a path specification document.
pub fn read_path_spec(path: impl AsRef<Path>) -> Result<PathSpec<f64>> {
    let path = path.as_ref();
    let spec: PathSpec<f64> = parse_json(path, &read_to_string(path)?)?;
    // Sampling validates the full specification; report problems against the
    // file rather than at first use.
    crate::sim::sample_path(&spec)
        .map(|_| spec)
        .map_err(|e| Error::file(path, e.to_string()))
}

/// Writes a path specification document.
pub fn write_path_spec(path: impl AsRef<Path>, spec: &PathSpec<f64>) -> Result<()> {
    let path = path.as_ref();
    write_string(path, &to_json_pretty(path, spec)?)
}

/// Reads and validates an enumeration-rule document.
pub fn read_rule(path: impl AsRef<Path>) -> Result<EnumerationRule> {
    let path = path.as_ref();
    let rule: EnumerationRule = parse_json(path, &read_to_string(path)?)?;
    rule.validate().map_err(|e| Error::file(path, e.to_string()))?;
    Ok(rule)
}

/// Writes an enumeration-rule document.
pub fn write_rule(path: impl AsRef<Path>, rule: &EnumerationRule) -> Result<()> {
    let path = path.as_ref();
    write_string(path, &to_json_pretty(path, rule)?)
}

// ---------------------------------------------------------------------------
// Measurement log CSV
// ---------------------------------------------------------------------------

const MEASUREMENT_HEADER: &str = "t,pair_first,pair_second,tdoa_m";

/// Writes a measurement log: one row per pair value, bundles in order.
pub fn write_measurements(path: impl AsRef<Path>, bundles: &[TdoaBundle<f64>]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from(MEASUREMENT_HEADER);
    out.push('\n');
    for bundle in bundles {
        for (pair, value) in bundle.iter() {
            writeln!(
                out,
                "{:.6},{},{},{:.6}",
                bundle.t,
                pair.first(),
                pair.second(),
                value
            )
            .expect("writing to a string cannot fail");
        }
    }
    write_string(path, &out)
}

/// Reads a measurement log, grouping consecutive rows with equal timestamps
/// into bundles.
pub fn read_measurements(path: impl AsRef<Path>) -> Result<Vec<TdoaBundle<f64>>> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut bundles: Vec<TdoaBundle<f64>> = Vec::new();
    for (line_no, line) in delimited_lines(path, &text, MEASUREMENT_HEADER)? {
        let cols = split_columns(path, line_no, line, 4)?;
        let t: f64 = parse_field(path, line_no, "t", cols[0])?;
        let first: u16 = parse_field(path, line_no, "pair_first", cols[1])?;
        let second: u16 = parse_field(path, line_no, "pair_second", cols[2])?;
        let tdoa: f64 = parse_field(path, line_no, "tdoa_m", cols[3])?;
        let pair = AnchorPair::new(first, second)
            .map_err(|e| Error::file_line(path, line_no, e.to_string()))?;
        match bundles.last_mut() {
            Some(last) if last.t == t => last.insert(pair, tdoa),
            _ => {
                let mut bundle = TdoaBundle::new(t);
                bundle.insert(pair, tdoa);
                bundles.push(bundle);
            }
        }
    }
    Ok(bundles)
}

// ---------------------------------------------------------------------------
// Reference trajectory CSV
// ---------------------------------------------------------------------------

const REFERENCE_HEADER: &str = "t,x,y";

/// Writes a reference trajectory.
pub fn write_reference(path: impl AsRef<Path>, fixes: &[ReferenceFix<f64>]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from(REFERENCE_HEADER);
    out.push('\n');
    for fix in fixes {
        writeln!(out, "{:.6},{:.6},{:.6}", fix.t, fix.position.x, fix.position.y)
            .expect("writing to a string cannot fail");
    }
    write_string(path, &out)
}

/// Reads a reference trajectory.
pub fn read_reference(path: impl AsRef<Path>) -> Result<Vec<ReferenceFix<f64>>> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut fixes = Vec::new();
    for (line_no, line) in delimited_lines(path, &text, REFERENCE_HEADER)? {
        let cols = split_columns(path, line_no, line, 3)?;
        fixes.push(ReferenceFix {
            t: parse_field(path, line_no, "t", cols[0])?,
            position: Point2::new(
                parse_field(path, line_no, "x", cols[1])?,
                parse_field(path, line_no, "y", cols[2])?,
            ),
        });
    }
    Ok(fixes)
}

// ---------------------------------------------------------------------------
// Static point list CSV
// ---------------------------------------------------------------------------

const POINTS_HEADER: &str = "x,y";

/// Writes a list of static evaluation points.
pub fn write_points(path: impl AsRef<Path>, points: &[Point2<f64>]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from(POINTS_HEADER);
    out.push('\n');
    for p in points {
        writeln!(out, "{:.6},{:.6}", p.x, p.y).expect("writing to a string cannot fail");
    }
    write_string(path, &out)
}

/// Reads a list of static evaluation points.
pub fn read_points(path: impl AsRef<Path>) -> Result<Vec<Point2<f64>>> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut points = Vec::new();
    for (line_no, line) in delimited_lines(path, &text, POINTS_HEADER)? {
        let cols = split_columns(path, line_no, line, 2)?;
        points.push(Point2::new(
            parse_field(path, line_no, "x", cols[0])?,
            parse_field(path, line_no, "y", cols[1])?,
        ));
    }
    Ok(points)
}

// ---------------------------------------------------------------------------
// Track CSV
// ---------------------------------------------------------------------------

const TRACK_HEADER: &str = "t,x,y,zone_id,set_index,rough_x,rough_y";

/// One parsed row of a track file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackRow {
    /// Epoch timestamp, seconds.
    pub t: f64,
    /// Filtered position, metres.
    pub position: Point2<f64>,
    /// Zone the tracker reported, if any.
    pub zone: Option<ZoneId>,
    /// Pair set used: 0 = zone-plan default, `k` ≥ 1 = the `k`-th calibrated
    /// zone entry in ascending zone-id order, −1 = none of those.
    pub set_index: i64,
    /// Rough least-squares fix, when the epoch produced one.
    pub rough: Option<Point2<f64>>,
}

/// The `set_index` column value for a set under a zone plan: 0 for the
/// default set, `k` ≥ 1 for the `k`-th calibrated zone entry in ascending
/// zone-id order, −1 for any other set.
pub fn set_index(zone_plan: &ZonePlan<f64>, set: &PairSet) -> i64 {
    if *set == zone_plan.default_set {
        return 0;
    }
    for (k, entry) in zone_plan.zones.values().enumerate() {
        if entry.set == *set {
            return k as i64 + 1;
        }
    }
    -1
}

/// Writes tracker output rows; sets are encoded through [`set_index`].
pub fn write_track(
    path: impl AsRef<Path>,
    track: &[TrackedFix<f64>],
    zone_plan: &ZonePlan<f64>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from(TRACK_HEADER);
    out.push('\n');
    for fix in track {
        let zone = fix.zone.map(i64::from).unwrap_or(-1);
        let (rx, ry) = match fix.rough {
            Some(p) => (format!("{:.6}", p.x), format!("{:.6}", p.y)),
            None => ("nan".into(), "nan".into()),
        };
        writeln!(
            out,
            "{:.6},{:.6},{:.6},{},{},{},{}",
            fix.t,
            fix.position.x,
            fix.position.y,
            zone,
            set_index(zone_plan, &fix.set_used),
            rx,
            ry,
        )
        .expect("writing to a string cannot fail");
    }
    write_string(path, &out)
}

/// Reads tracker output rows.
pub fn read_track(path: impl AsRef<Path>) -> Result<Vec<TrackRow>> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut rows = Vec::new();
    for (line_no, line) in delimited_lines(path, &text, TRACK_HEADER)? {
        let cols = split_columns(path, line_no, line, 7)?;
        let zone_raw: i64 = parse_field(path, line_no, "zone_id", cols[3])?;
        let zone = if zone_raw < 0 {
            None
        } else {
            Some(u16::try_from(zone_raw).map_err(|_| {
                Error::file_line(path, line_no, format!("zone_id {zone_raw} out of range"))
            })?)
        };
        let rx: f64 = parse_field(path, line_no, "rough_x", cols[5])?;
        let ry: f64 = parse_field(path, line_no, "rough_y", cols[6])?;
        rows.push(TrackRow {
            t: parse_field(path, line_no, "t", cols[0])?,
            position: Point2::new(
                parse_field(path, line_no, "x", cols[1])?,
                parse_field(path, line_no, "y", cols[2])?,
            ),
            zone,
            set_index: parse_field(path, line_no, "set_index", cols[4])?,
            rough: if rx.is_nan() || ry.is_nan() {
                None
            } else {
                Some(Point2::new(rx, ry))
            },
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// ECDF CSV
// ---------------------------------------------------------------------------

const ECDF_HEADER: &str = "error_m,probability";

/// Writes an ECDF table as plot-ready delimited text.
pub fn write_ecdf(path: impl AsRef<Path>, table: &EcdfTable<f64>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from(ECDF_HEADER);
    out.push('\n');
    for (v, p) in table.values.iter().zip(&table.probabilities) {
        writeln!(out, "{v:.6},{p:.6}").expect("writing to a string cannot fail");
    }
    write_string(path, &out)
}

// ---------------------------------------------------------------------------
// Zone plan JSON
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ZonePlanEntryFile {
    zone: u16,
    pairs: Vec<(u16, u16)>,
    rmse_m: f64,
    samples: usize,
}

#[derive(Serialize, Deserialize)]
struct ZonePlanFile {
    zones: Vec<ZonePlanEntryFile>,
    default_pairs: Vec<(u16, u16)>,
    default_rmse_m: f64,
    uncalibrated: Vec<u16>,
    init_policy: String,
}

fn pairs_to_tuples(set: &PairSet) -> Vec<(u16, u16)> {
    set.iter().map(|p| (p.first(), p.second())).collect()
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

/// Writes a zone plan report. RMSE values are rounded to 4 decimals
/// (sub-millimetre), mirroring how such selections are usually tabulated.
pub fn write_zone_plan(path: impl AsRef<Path>, plan: &ZonePlan<f64>) -> Result<()> {
    let path = path.as_ref();
    let file = ZonePlanFile {
        zones: plan
            .zones
            .iter()
            .map(|(&zone, entry)| ZonePlanEntryFile {
                zone,
                pairs: pairs_to_tuples(&entry.set),
                rmse_m: round4(entry.rmse),
                samples: entry.samples,
            })
            .collect(),
        default_pairs: pairs_to_tuples(&plan.default_set),
        default_rmse_m: round4(plan.default_rmse),
        uncalibrated: plan.uncalibrated.clone(),
        init_policy: INIT_POLICY.into(),
    };
    write_string(path, &to_json_pretty(path, &file)?)
}

/// Reads a zone plan report back into its in-memory form.
pub fn read_zone_plan(path: impl AsRef<Path>) -> Result<ZonePlan<f64>> {
    let path = path.as_ref();
    let file: ZonePlanFile = parse_json(path, &read_to_string(path)?)?;
    let build_set = |tuples: &[(u16, u16)]| -> Result<PairSet> {
        PairSet::from_ids(tuples).map_err(|e| Error::file(path, e.to_string()))
    };
    let mut zones = BTreeMap::new();
    for entry in &file.zones {
        let previous = zones.insert(
            entry.zone,
            ZoneEntry {
                set: build_set(&entry.pairs)?,
                rmse: entry.rmse_m,
                samples: entry.samples,
            },
        );
        if previous.is_some() {
            return Err(Error::file(
                path,
                format!("zone {} appears more than once", entry.zone),
            ));
        }
    }
    Ok(ZonePlan {
        zones,
        default_set: build_set(&file.default_pairs)?,
        default_rmse: file.default_rmse_m,
        uncalibrated: file.uncalibrated,
    })
}

// ---------------------------------------------------------------------------
// Calibration RMSE matrix CSV
// ---------------------------------------------------------------------------

/// Writes the full calibration score sheet: one row per candidate set, one
/// column per zone that received samples, plus the overall column.
pub fn write_rmse_matrix(path: impl AsRef<Path>, outcome: &CalibrationOutcome<f64>) -> Result<()> {
    let path = path.as_ref();
    let mut zone_ids: Vec<ZoneId> = outcome
        .evaluations
        .iter()
        .flat_map(|e| e.per_zone.keys().copied())
        .collect();
    zone_ids.sort_unstable();
    zone_ids.dedup();

    let mut out = String::from("set_index,pairs");
    for id in &zone_ids {
        write!(out, ",zone_{id}").expect("writing to a string cannot fail");
    }
    out.push_str(",overall\n");

    for (index, (set, eval)) in outcome
        .candidates
        .iter()
        .zip(&outcome.evaluations)
        .enumerate()
    {
        write!(out, "{index},{set}").expect("writing to a string cannot fail");
        for id in &zone_ids {
            match eval.per_zone.get(id) {
                Some(score) => write!(out, ",{:.4}", score.rmse),
                None => write!(out, ",nan"),
            }
            .expect("writing to a string cannot fail");
        }
        writeln!(out, ",{:.4}", eval.overall.rmse).expect("writing to a string cannot fail");
    }
    write_string(path, &out)
}

// ---------------------------------------------------------------------------
// Evaluation report JSON
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SourceStatsFile {
    rmse_m: f64,
    median_m: f64,
    p80_m: f64,
    max_m: f64,
    samples: usize,
}

#[derive(Serialize, Deserialize)]
struct EvalReportFile {
    sources: BTreeMap<String, SourceStatsFile>,
}

/// Writes an evaluation report document.
pub fn write_eval_report(path: impl AsRef<Path>, report: &EvalReport<f64>) -> Result<()> {
    let path = path.as_ref();
    let file = EvalReportFile {
        sources: report
            .sources
            .iter()
            .map(|(label, s)| {
                (
                    label.clone(),
                    SourceStatsFile {
                        rmse_m: s.rmse,
                        median_m: s.median,
                        p80_m: s.p80,
                        max_m: s.max,
                        samples: s.samples,
                    },
                )
            })
            .collect(),
    };
    write_string(path, &to_json_pretty(path, &file)?)
}

/// Reads an evaluation report document.
pub fn read_eval_report(path: impl AsRef<Path>) -> Result<EvalReport<f64>> {
    let path = path.as_ref();
    let file: EvalReportFile = parse_json(path, &read_to_string(path)?)?;
    Ok(EvalReport {
        sources: file
            .sources
            .into_iter()
            .map(|(label, s)| {
                (
                    label,
                    SourceStats {
                        rmse: s.rmse_m,
                        median: s.median_m,
                        p80: s.p80_m,
                        max: s.max_m,
                        samples: s.samples,
                    },
                )
            })
            .collect(),
    })
}
