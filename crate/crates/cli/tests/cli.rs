use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;
use std::process::{Command, Output};

use qsl_cli::report::{read_csv, rows_from_json, Metric, ReportRow};

fn qsl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsl")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = qsl(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    stdout(&out)
}

fn value(m: Option<Metric>) -> f64 {
    m.and_then(Metric::value).expect("numeric metric")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn builtin_fixtures_match_their_reference_values() {
    for name in ["example1", "example2", "stationary", "sigma-x", "gue-d4-seed7"] {
        ok(&["bounds", "--scenario", name]);
        ok(&["verify-ur", "--scenario", name]);
    }
    ok(&["bounds", "--scenario", "example1", "--tolerance-profile", "strict"]);
    for name in ["qubit-flip", "qubit-plus"] {
        ok(&["optimize", "--scenario", name]);
    }
}

#[test]
fn example1_report() {
    let rows = rows_from_json(&ok(&["bounds", "--scenario", "example1"])).unwrap();
    let row = &rows[0];
    for t in [row.t_imt, row.t_exact_2d, row.t_actual] {
        assert!((value(t) - FRAC_PI_2).abs() < 1e-6);
    }
    assert!((value(row.theta) - (1.0f64 / 3.0).sqrt().acos()).abs() < 1e-12);
    assert_eq!(row.chain_holds, Some(true));
}

#[test]
fn stationary_reports_degenerate() {
    let row = &rows_from_json(&ok(&["verify-ur", "--scenario", "stationary"])).unwrap()[0];
    assert_eq!(row.ur_residual_max, Some(Metric::Degenerate));
    assert!(row.notes.as_deref().unwrap_or("").contains("stationary"));
    let row = &rows_from_json(&ok(&["bounds", "--scenario", "stationary"])).unwrap()[0];
    assert_eq!(row.t_imt, Some(Metric::Degenerate));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    for args in [
        &["bounds", "--scenario", "gue-d4-seed7"][..],
        &["verify-ur", "--scenario", "example2", "--format", "csv"][..],
        &["optimize", "--scenario", "qubit-plus"][..],
    ] {
        assert_eq!(ok(args), ok(args), "{args:?}");
    }
    let serial = ok(&["sweep", "--scenario", "sigma-x", "--axis", "horizon_T", "--range", "0.2:1.4:7", "--jobs", "1"]);
    let parallel = ok(&["sweep", "--scenario", "sigma-x", "--axis", "horizon_T", "--range", "0.2:1.4:7", "--jobs", "4"]);
    assert_eq!(serial, parallel);
}

#[test]
fn timing_is_opt_in() {
    let row = &rows_from_json(&ok(&["bounds", "--scenario", "sigma-x"])).unwrap()[0];
    assert_eq!(row.runtime_ms, None);
    let row = &rows_from_json(&ok(&["bounds", "--scenario", "sigma-x", "--timing"])).unwrap()[0];
    assert!(row.runtime_ms.is_some());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    assert_eq!(qsl(&["bounds", "--scenario", "no-such-scenario"]).status.code(), Some(2));

    let bad = write(
        dir.path(),
        "bad.json",
        "{\n  \"name\": \"bad\",\n  \"dimension\": 2,\n  \"hamiltonian\": {\"kind\": \"matrix-literal\",\n    \"matrix\": [[0, 1], [0, 0]]},\n  \"initial_state\": \"0\",\n  \"horizon_T\": 1.0\n}",
    );
    let out = qsl(&["bounds", "--scenario", &bad]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(":5:5: hamiltonian.matrix"), "{err}");

    let coarse = write(
        dir.path(),
        "coarse.json",
        r#"{"name": "coarse", "dimension": 4, "hamiltonian": {"kind": "gue-random", "seed": 3, "scale": 200.0},
            "initial_state": "random", "horizon_T": 1.0, "steps": 8}"#,
    );
    assert_eq!(qsl(&["bounds", "--scenario", &coarse]).status.code(), Some(3));
    assert_eq!(qsl(&["bounds", "--scenario", &coarse, "--steps", "auto"]).status.code(), Some(0));

    let wrong = write(
        dir.path(),
        "wrong.json",
        r#"{"name": "wrong", "dimension": 2, "hamiltonian": {"kind": "pauli-axis", "axis": [1, 0, 0]},
            "initial_state": "0", "horizon_T": 1.0, "expect": {"bounds": {"t_imt": {"value": 2.0, "abs_tol": 1e-9}}}}"#,
    );
    let out = qsl(&["bounds", "--scenario", &wrong]);
    assert_eq!(out.status.code(), Some(4));
    // The row is still written before the mismatch is reported.
    assert!((value(rows_from_json(&stdout(&out)).unwrap()[0].t_imt) - 1.0).abs() < 1e-6);
}

#[test]
fn strict_profile_tightens_fixture_tolerances() {
    let dir = tempfile::tempdir().unwrap();
    let loose = write(
        dir.path(),
        "loose.json",
        r#"{"name": "loose", "dimension": 2, "hamiltonian": {"kind": "pauli-axis", "axis": [1, 0, 0]},
            "initial_state": "0", "horizon_T": 1.0, "expect": {"bounds": {"t_imt": {"value": 1.00005, "abs_tol": 1e-4}}}}"#,
    );
    assert_eq!(qsl(&["bounds", "--scenario", &loose]).status.code(), Some(0));
    assert_eq!(qsl(&["bounds", "--scenario", &loose, "--tolerance-profile", "strict"]).status.code(), Some(4));
}

#[test]
fn sweep_over_axis_tilt_saturates() {
    let text = ok(&["sweep", "--scenario", "example1", "--axis", "n_z", "--range", "0.1:0.9:9", "--jobs", "3"]);
    let rows = read_csv(&text).unwrap();
    assert_eq!(rows.len(), 9);
    for (i, row) in rows.iter().enumerate() {
        let nz = 0.1 + 0.1 * i as f64;
        assert!((row.parameter_value.unwrap() - nz).abs() < 1e-12);
        assert_eq!(row.error, None);
        assert!((value(row.t_imt) - FRAC_PI_2).abs() < 1e-6, "n_z = {nz}");
        assert!((value(row.theta) - nz.acos()).abs() < 1e-9);
    }
}

#[test]
fn sweep_over_horizon_matches_two_level_time() {
    let text = ok(&["sweep", "--scenario", "sigma-x", "--axis", "horizon_T", "--values", "0.1,0.4,0.8,1.2,1.5"]);
    for row in read_csv(&text).unwrap() {
        let t = row.parameter_value.unwrap();
        assert!((value(row.t_exact_2d) - t).abs() < 1e-6 * t, "T = {t}");
        assert_eq!(row.chain_holds, Some(true));
    }
}

#[test]
fn sweep_over_dimension_keeps_self_inverse_saturation() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "si.json",
        r#"{"name": "self-inverse", "dimension": 2, "hamiltonian": {"kind": "self-inverse-random", "seed": 11},
            "initial_state": "random", "seed": 5, "horizon_T": 1.2}"#,
    );
    let rows = read_csv(&ok(&["sweep", "--scenario", &path, "--axis", "dimension", "--values", "2,3,4,6,8", "--jobs", "2"])).unwrap();
    assert_eq!(rows.len(), 5);
    for row in rows {
        assert_eq!(row.error, None);
        assert_eq!(row.dimension, Some(row.parameter_value.unwrap() as usize));
        assert_eq!(row.saturated_imt, Some(true), "{row:?}");
        assert!((value(row.t_imt) - 1.2).abs() < 1e-6);
    }
}

#[test]
fn sweep_errors_land_in_the_error_column() {
    let text = ok(&["sweep", "--scenario", "example1", "--axis", "n_z", "--values", "0.5,1.5"]);
    let rows = read_csv(&text).unwrap();
    assert_eq!(rows[0].error, None);
    assert!(rows[1].error.as_deref().unwrap().contains("n_z"));
}

#[test]
fn optimize_reaches_orthogonal_and_equatorial_targets() {
    for (name, theta) in [("qubit-flip", FRAC_PI_2), ("qubit-plus", PI / 4.0)] {
        let out: serde_json::Value = serde_json::from_str(&ok(&["optimize", "--scenario", name])).unwrap();
        let t_opt = out["result"]["t_opt"].as_f64().unwrap();
        assert!((t_opt - theta).abs() <= 0.02 * theta, "{name}: {t_opt}");
        assert!(out["result"]["classical_norm"].as_f64().unwrap() < 1e-3);
        assert_eq!(out["row"]["form_match"], serde_json::Value::Bool(true));
        assert_eq!(out["result"]["h_opt"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn report_merges_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", &ok(&["bounds", "--scenario", "example1"]));
    let b = write(dir.path(), "b.csv", &ok(&["sweep", "--scenario", "sigma-x", "--axis", "horizon_T", "--values", "0.5,1.0"]));
    let c = write(dir.path(), "c.json", &ok(&["optimize", "--scenario", "qubit-flip"]));
    let rows: Vec<ReportRow> = read_csv(&ok(&["report", &a, &b, &c])).unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r.scenario.as_str()).collect();
    assert_eq!(names, ["example1", "sigma-x", "sigma-x", "qubit-flip"]);
    let out = dir.path().join("merged.json");
    ok(&["report", &a, &b, "--format", "json", "--output", out.to_str().unwrap()]);
    assert_eq!(rows_from_json(&std::fs::read_to_string(out).unwrap()).unwrap(), rows[..3]);
}
