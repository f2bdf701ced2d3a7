//! Command-line behaviour: exit codes, error attribution, and the
//! zero-noise end-to-end chain.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tdoa_zones::geometry::point_to_polyline_distance;
use tdoa_zones::io::{read_path_spec, read_track, read_zone_plan};
use tdoa_zones::percentile;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tdoa-zones"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn CLI")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/apartment")
}

/// Writes a minimal line-of-sight fixture (no walls, no obstacles, zero
/// noise) with two side-by-side zones and four corner anchors.
fn write_los_fixture(dir: &Path) {
    let write = |name: &str, contents: &str| {
        std::fs::write(dir.join(name), contents).expect("write fixture file");
    };
    write(
        "plan.json",
        r#"{
  "anchors": [
    {"id": 1, "x": 0.0, "y": 0.0},
    {"id": 2, "x": 12.0, "y": 0.0},
    {"id": 3, "x": 12.0, "y": 6.0},
    {"id": 4, "x": 0.0, "y": 6.0}
  ],
  "zones": [
    {"id": 1, "vertices": [{"x": 0.0, "y": 0.0}, {"x": 6.0, "y": 0.0}, {"x": 6.0, "y": 6.0}, {"x": 0.0, "y": 6.0}]},
    {"id": 2, "vertices": [{"x": 6.0, "y": 0.0}, {"x": 12.0, "y": 0.0}, {"x": 12.0, "y": 6.0}, {"x": 6.0, "y": 6.0}]}
  ]
}"#,
    );
    write(
        "noise.json",
        r#"{"toa_sigma_ns": 0.0, "reference_sigma_m": 0.0, "seed": 3}"#,
    );
    write(
        "rule.json",
        r#"{"min_pairs": 3, "max_pairs": 5, "max_anchor_uses": 3}"#,
    );
    // A loop through both zones, and a variant confined to zone 1.
    write(
        "calib_both.json",
        r#"{
  "waypoints": [
    {"x": 1.1, "y": 1.0}, {"x": 10.9, "y": 1.0},
    {"x": 10.9, "y": 5.0}, {"x": 1.1, "y": 5.0}
  ],
  "speed_mps": 1.0,
  "rate_hz": 5.0
}"#,
    );
    write(
        "calib_zone1.json",
        r#"{
  "waypoints": [
    {"x": 1.1, "y": 1.0}, {"x": 4.9, "y": 1.0},
    {"x": 4.9, "y": 5.0}, {"x": 1.1, "y": 5.0}
  ],
  "speed_mps": 1.0,
  "rate_hz": 5.0
}"#,
    );
    write(
        "walk.json",
        r#"{
  "waypoints": [{"x": 1.1, "y": 3.0}, {"x": 10.9, "y": 3.0}],
  "speed_mps": 0.5,
  "rate_hz": 10.0
}"#,
    );
}

#[test]
fn help_prints_usage_and_exits_zero() {
    let output = run(&["--help"]);
    assert_eq!(output.status.code(), Some(0));
    assert!(stdout_of(&output).contains("Usage"));
}

#[test]
fn unknown_flag_exits_64() {
    let output = run(&["enumerate", "--bogus"]);
    assert_eq!(output.status.code(), Some(64), "{}", stderr_of(&output));
    assert!(stderr_of(&output).contains("--bogus"));

    let output = run(&["frobnicate"]);
    assert_eq!(output.status.code(), Some(64), "{}", stderr_of(&output));
}

#[test]
fn malformed_plan_error_names_file_and_line() {
    let dir = tempfile::tempdir().expect("tempdir");
    let plan = dir.path().join("plan.json");
    std::fs::write(&plan, "{\n  \"anchors\": [\n    {\"id\": 1, \"x\": oops}\n").unwrap();
    let output = run(&["enumerate", "--plan", plan.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1), "{}", stderr_of(&output));
    let expected = format!("{}:3:", plan.display());
    assert!(
        stderr_of(&output).contains(&expected),
        "stderr missing '{expected}': {}",
        stderr_of(&output)
    );
}

#[test]
fn malformed_measurement_row_names_file_and_line() {
    let dir = tempfile::tempdir().expect("tempdir");
    write_los_fixture(dir.path());
    let arg = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let output = run(&[
        "simulate",
        "--plan",
        &arg("plan.json"),
        "--path",
        &arg("calib_both.json"),
        "--noise",
        &arg("noise.json"),
        "--out-meas",
        &arg("meas.csv"),
        "--out-ref",
        &arg("ref.csv"),
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));

    // Corrupt the second data row (line 3: line 1 is the header).
    let meas = dir.path().join("meas.csv");
    let text = std::fs::read_to_string(&meas).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[2] = "0.2,1,2,not-a-number";
    std::fs::write(&meas, lines.join("\n")).unwrap();

    let output = run(&[
        "calibrate",
        "--plan",
        &arg("plan.json"),
        "--meas",
        &arg("meas.csv"),
        "--ref",
        &arg("ref.csv"),
        "--rule",
        &arg("rule.json"),
        "--out",
        &arg("zoneplan.json"),
    ]);
    assert_eq!(output.status.code(), Some(1), "{}", stderr_of(&output));
    let expected = format!("{}:3:", meas.display());
    assert!(
        stderr_of(&output).contains(&expected),
        "stderr missing '{expected}': {}",
        stderr_of(&output)
    );
}

#[test]
fn calibrate_exits_2_when_a_zone_is_uncalibrated() {
    let dir = tempfile::tempdir().expect("tempdir");
    write_los_fixture(dir.path());
    let arg = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let output = run(&[
        "simulate",
        "--plan",
        &arg("plan.json"),
        "--path",
        &arg("calib_zone1.json"),
        "--noise",
        &arg("noise.json"),
        "--out-meas",
        &arg("meas.csv"),
        "--out-ref",
        &arg("ref.csv"),
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));

    let output = run(&[
        "calibrate",
        "--plan",
        &arg("plan.json"),
        "--meas",
        &arg("meas.csv"),
        "--ref",
        &arg("ref.csv"),
        "--rule",
        &arg("rule.json"),
        "--out",
        &arg("zoneplan.json"),
    ]);
    assert_eq!(output.status.code(), Some(2), "{}", stderr_of(&output));
    assert!(
        stderr_of(&output).contains("uncalibrated"),
        "stderr: {}",
        stderr_of(&output)
    );

    // The report is still written, with zone 2 listed as uncalibrated.
    let plan = read_zone_plan(dir.path().join("zoneplan.json")).expect("report written");
    assert!(plan.zones.contains_key(&1));
    assert_eq!(plan.uncalibrated, vec![2]);
}

#[test]
fn zero_noise_chain_tracks_below_a_millimetre() {
    let dir = tempfile::tempdir().expect("tempdir");
    write_los_fixture(dir.path());
    let arg = |name: &str| dir.path().join(name).to_string_lossy().into_owned();

    for (path, meas, reference) in [
        ("calib_both.json", "meas.csv", "ref.csv"),
        ("walk.json", "walk_meas.csv", "walk_ref.csv"),
    ] {
        let output = run(&[
            "simulate",
            "--plan",
            &arg("plan.json"),
            "--path",
            &arg(path),
            "--noise",
            &arg("noise.json"),
            "--out-meas",
            &arg(meas),
            "--out-ref",
            &arg(reference),
        ]);
        assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
    }

    let output = run(&[
        "calibrate",
        "--plan",
        &arg("plan.json"),
        "--meas",
        &arg("meas.csv"),
        "--ref",
        &arg("ref.csv"),
        "--rule",
        &arg("rule.json"),
        "--out",
        &arg("zoneplan.json"),
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));

    let output = run(&[
        "track",
        "--plan",
        &arg("plan.json"),
        "--zoneplan",
        &arg("zoneplan.json"),
        "--meas",
        &arg("walk_meas.csv"),
        "--out",
        &arg("track.csv"),
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));

    let output = run(&[
        "eval",
        "--track",
        &arg("track.csv"),
        "--refpath",
        &arg("walk.json"),
        "--out-ecdf",
        &arg("ecdf.csv"),
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
    assert!(stdout_of(&output).contains("median"));
    assert!(dir.path().join("ecdf.csv").exists());

    let track = read_track(dir.path().join("track.csv")).expect("track readable");
    let walk = read_path_spec(dir.path().join("walk.json")).expect("walk readable");
    let errors: Vec<f64> = track
        .iter()
        .map(|row| point_to_polyline_distance(row.position, &walk.waypoints).expect("distance"))
        .collect();
    let median = percentile(&errors, 50.0).expect("median");
    assert!(
        median < 1e-3,
        "zero-noise chain median {median:.6} m is not below 1 mm"
    );
}

#[test]
fn static_eval_runs_on_a_grid_and_requires_one_location_source() {
    let dir = tempfile::tempdir().expect("tempdir");
    write_los_fixture(dir.path());
    let arg = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let output = run(&[
        "simulate",
        "--plan",
        &arg("plan.json"),
        "--path",
        &arg("calib_both.json"),
        "--noise",
        &arg("noise.json"),
        "--out-meas",
        &arg("meas.csv"),
        "--out-ref",
        &arg("ref.csv"),
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
    let output = run(&[
        "calibrate",
        "--plan",
        &arg("plan.json"),
        "--meas",
        &arg("meas.csv"),
        "--ref",
        &arg("ref.csv"),
        "--rule",
        &arg("rule.json"),
        "--out",
        &arg("zoneplan.json"),
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));

    let output = run(&[
        "static-eval",
        "--plan",
        &arg("plan.json"),
        "--grid",
        "2.0",
        "--zoneplan",
        &arg("zoneplan.json"),
        "--noise",
        &arg("noise.json"),
        "--repeats",
        "3",
        "--out",
        &arg("static.json"),
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
    assert!(stdout_of(&output).contains("adaptive"));
    assert!(dir.path().join("static.json").exists());

    // Location sources are mutually exclusive, and one is required.
    let (plan, zoneplan, noise, out) = (
        arg("plan.json"),
        arg("zoneplan.json"),
        arg("noise.json"),
        arg("static.json"),
    );
    let base = [
        "static-eval",
        "--plan",
        &plan,
        "--zoneplan",
        &zoneplan,
        "--noise",
        &noise,
        "--out",
        &out,
    ];
    let mut both = base.to_vec();
    both.extend(["--grid", "2.0", "--points", "points.csv"]);
    let output = bin().args(&both).output().expect("spawn CLI");
    assert_eq!(output.status.code(), Some(64), "{}", stderr_of(&output));
    let output = bin().args(base).output().expect("spawn CLI");
    assert_eq!(output.status.code(), Some(64), "{}", stderr_of(&output));
}

#[test]
fn enumerate_prints_4487_for_the_bundled_plan() {
    let plan = scenario_dir().join("plan.json");
    let output = run(&["enumerate", "--plan", plan.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
    assert_eq!(stdout_of(&output).lines().next(), Some("4487"));
}
