use std::path::Path;
use std::process::{Command, Output};

use dicke_cli::{
    data_section, parse_request, render, run_sweep, to_csv, Format, Grid, ParamSource, Quantity, SweepRequest,
    FLAG_POLE,
};
use dicke_core::DickeParams;

fn dicke(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dicke"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn request(quantity: Quantity, lambda: Grid) -> SweepRequest {
    SweepRequest {
        quantity,
        params: ParamSource::Dicke(DickeParams::canonical()),
        lambda,
        nu: None,
        theta: None,
        phi: None,
        format: Format::Csv,
        output: None,
    }
}

#[test]
fn eigenvalue_table_has_one_row_per_coupling() {
    let table = run_sweep(&request(Quantity::Eigenvalues, Grid { min: 0.0, max: 1.4, steps: 141 })).unwrap();
    assert_eq!(table.rows.len(), 141);
    assert_eq!(table.columns.len(), 10);
    assert!(table.metadata.point_errors.is_empty());
    for row in &table.rows {
        assert_eq!(row[9], 0.0);
        // the spectrum is closed under conjugation and damped
        let im_sum: f64 = [2, 4, 6, 8].iter().map(|&k| row[k]).sum();
        assert!(im_sum.abs() < 1e-9, "{row:?}");
        assert!([1, 3, 5, 7].iter().all(|&k| row[k] <= 1e-12));
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = [
        "spectrum", "homodyne", "--lambda-min", "0.2", "--lambda-max", "0.8", "--lambda-steps", "4", "--theta", "0.3",
    ];
    let a = dicke(&args);
    let b = dicke(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn emitted_files_reproduce_themselves() {
    let dir = tempfile::tempdir().unwrap();
    for (ext, format) in [("csv", "csv"), ("json", "json")] {
        let first = dir.path().join(format!("first.{ext}"));
        let second = dir.path().join(format!("second.{ext}"));
        let out = dicke(&[
            "entanglement", "epr", "--lambda-min", "0.1", "--lambda-max", "0.9", "--lambda-steps", "5", "--kappa",
            "0.3", "--format", format, "--output", first.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        let out = dicke(&["sweep", "--request", first.to_str().unwrap(), "--output", second.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let a = std::fs::read_to_string(&first).unwrap();
        let b = std::fs::read_to_string(&second).unwrap();
        let ra = parse_request(&a).unwrap();
        let rb = parse_request(&b).unwrap();
        assert_eq!(ra.quantity, rb.quantity);
        assert_eq!(ra.params, rb.params);
        assert_eq!(ra.lambda, rb.lambda);
        if format == "csv" {
            assert_eq!(data_section(&a), data_section(&b));
        } else {
            let ja: serde_json::Value = serde_json::from_str(&a).unwrap();
            let jb: serde_json::Value = serde_json::from_str(&b).unwrap();
            assert_eq!(ja["rows"], jb["rows"]);
        }
    }
}

#[test]
fn metadata_round_trips_through_both_formats() {
    let mut req = request(Quantity::Fluorescence, Grid { min: 0.3, max: 0.6, steps: 2 });
    req.nu = Some(Grid { min: -2.0, max: 2.0, steps: 9 });
    let table = run_sweep(&req).unwrap();
    for format in [Format::Csv, Format::Json] {
        let text = render(&table, format).unwrap();
        assert_eq!(parse_request(&text).unwrap(), req);
    }
    let bare = serde_json::to_string(&req).unwrap();
    assert_eq!(parse_request(&bare).unwrap(), req);
}

#[test]
fn csv_values_round_trip_exactly() {
    let table = run_sweep(&request(Quantity::PhotonFlux, Grid { min: 0.0, max: 1.0, steps: 7 })).unwrap();
    let text = to_csv(&table).unwrap();
    let data = data_section(&text);
    let mut lines = data.lines();
    assert_eq!(lines.next().unwrap(), table.columns.join(","));
    for (line, row) in lines.zip(&table.rows) {
        for (cell, v) in line.split(',').zip(row) {
            if v.is_nan() {
                assert_eq!(cell, "nan");
            } else {
                assert_eq!(cell.parse::<f64>().unwrap(), *v);
            }
        }
    }
    assert!(!text.contains('\r'));
}

#[test]
fn empty_or_reversed_grids_are_rejected_before_computing() {
    let empty = request(Quantity::Eigenvalues, Grid { min: 0.0, max: 1.0, steps: 0 });
    assert!(run_sweep(&empty).is_err());
    let reversed = request(Quantity::Eigenvalues, Grid { min: 1.0, max: 0.0, steps: 3 });
    assert!(run_sweep(&reversed).is_err());
    let out = dicke(&["eigenvalues", "--lambda-min", "0", "--lambda-max", "1", "--lambda-steps", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn real_poles_become_flagged_nan() {
    // At lambda_c one eigenvalue sits on the real axis at zero.
    let p = DickeParams::canonical();
    let lc = p.lambda_c();
    let mut req = request(Quantity::Fluorescence, Grid::point(lc));
    req.nu = Some(Grid { min: -1.0, max: 1.0, steps: 5 });
    let table = run_sweep(&req).unwrap();
    let pole = table.rows.iter().find(|r| r[1] == 0.0).unwrap();
    assert!(pole[2].is_nan());
    assert_eq!(pole[4], FLAG_POLE);
    let others: Vec<_> = table.rows.iter().filter(|r| r[1] != 0.0).collect();
    assert!(others.iter().all(|r| r[2].is_finite() && r[4] == 0.0));

    let json = render(&table, Format::Json).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    let row = doc["rows"].as_array().unwrap().iter().find(|r| r[1] == 0.0).unwrap();
    assert!(row[2].is_null());
    assert_eq!(row[4], 1);
}

#[test]
fn point_failures_do_not_abort_the_sweep() {
    // v1/v2 is defined only above threshold.
    let table = run_sweep(&request(Quantity::V1v2, Grid { min: 0.3, max: 1.5, steps: 3 })).unwrap();
    assert_eq!(table.rows.len(), 3);
    assert_eq!(table.rows[0][7], 2.0);
    assert!(table.rows[0][3].is_nan());
    assert_eq!(table.metadata.point_errors.len(), 1);
    assert_eq!(table.metadata.point_errors[0].row, 0);
    assert!(table.rows[2][3].is_finite() && table.rows[2][7] == 0.0);
}

#[test]
fn steady_state_lists_every_branch() {
    let table = run_sweep(&request(Quantity::SteadyState, Grid { min: 0.3, max: 0.7, steps: 2 })).unwrap();
    let below: Vec<_> = table.rows.iter().filter(|r| r[0] == 0.3).collect();
    let above: Vec<_> = table.rows.iter().filter(|r| r[0] == 0.7).collect();
    assert_eq!(below.len(), 2);
    assert_eq!(above.len(), 4);
    // exactly one stable pair above threshold, one stable state below
    assert_eq!(below.iter().filter(|r| r[7] == 1.0).count(), 1);
    assert_eq!(above.iter().filter(|r| r[7] == 1.0).count(), 2);
}

#[test]
fn exit_codes() {
    assert_eq!(dicke(&["--help"]).status.code(), Some(0));
    assert_eq!(dicke(&["--version"]).status.code(), Some(0));
    assert_eq!(dicke(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(dicke(&["eigenvalues"]).status.code(), Some(1));
    assert_eq!(dicke(&["eigenvalues", "--lambda", "0.3", "--kappa", "-1"]).status.code(), Some(1));

    let missing = Path::new("/nonexistent-dir/out.csv");
    let out = dicke(&["eigenvalues", "--lambda", "0.3", "--output", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent-dir/out.csv"));

    let out = dicke(&["sweep", "--request", "/nonexistent-dir/req.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn raman_records_map_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("raman.json");
    let raman = serde_json::json!({
        "unit": "two_pi_kilohertz",
        "g_r": 20.0, "g_s": 20.0,
        "rabi_r": 30000.0, "rabi_s": 30000.0,
        "detuning_r": 1.0e6, "detuning_s": 1.0e6,
        "kappa": 100.0, "n_atoms": 1.0e5,
        "gamma": 3000.0,
        "cavity_detuning": -30.0,
        "ground_splitting": 6.8e6, "ground_splitting_ref": 6.79975e6
    });
    std::fs::write(&path, raman.to_string()).unwrap();
    let out = dicke(&["map-params", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["normalized"]["omega0"], 1.0);
    assert!(doc["lambda_c"].as_f64().unwrap() > 0.0);

    let out = dicke(&["eigenvalues", "--raman", path.to_str().unwrap(), "--lambda", "0.2", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
