use std::process::{Command, Output};

use oscilspec::cli::{render, Format, GridRecord, MomentRecord, SpectrumRecord, VerifyRecord};

fn oscilspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oscilspec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn spectrum_json_round_trips() {
    let out = oscilspec(&["spectrum", "--preset", "A", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let records: Vec<SpectrumRecord> = serde_json::from_str(&text).unwrap();
    assert_eq!(records.len(), 4);
    assert!(records[1].energy.starts_with("-1.772726698991350330"));
    assert_eq!(render(&records, Format::Json).unwrap(), text);
}

#[test]
fn spectrum_table_groups_digits() {
    let out = oscilspec(&["spectrum", "--preset", "H", "--levels", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("0.807 741 647 209 432 44"));
}

#[test]
fn box_csv_with_override() {
    let out = oscilspec(&[
        "spectrum", "--preset", "box", "--L", "2", "--levels", "2", "--format", "csv",
    ]);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "potential,L,level,parity,nodes,energy,converged_digits,doublet"
    );
    // (pi / 4)^2
    assert!(lines.next().unwrap().contains(",0.61685027506808491368,"));
}

#[test]
fn config_file_with_two_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"[{"name": "quartic", "potential": {"x^4": "1"}, "L": "5", "levels": 2},
            {"name": "box", "potential": {}, "L": "1", "digits": 25, "levels": 1}]"#,
    )
    .unwrap();
    let out_path = dir.path().join("out.csv");
    let out = oscilspec(&[
        "spectrum",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "csv",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).is_empty());
    let text = std::fs::read_to_string(out_path).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("quartic,5,0,even,0,1.0603620904"));
    assert!(rows[2].starts_with("box,1,0,even,0,2.4674011002723396547086"));
}

#[test]
fn moments_json_round_trips() {
    let out = oscilspec(&[
        "moments",
        "--preset",
        "box",
        "--levels",
        "1",
        "--moments",
        "0,1",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let records: Vec<MomentRecord> = serde_json::from_str(&text).unwrap();
    assert_eq!(records[0].m, 0);
    assert!(records[0].value.starts_with("1.000000"));
    assert_eq!(records[0].converged_digits, None);
    // 1/3 - 2/pi^2
    assert!(records[1].value.starts_with("0.13069096604"));
    assert_eq!(render(&records, Format::Json).unwrap(), text);
}

#[test]
fn wavefunction_csv_for_odd_state() {
    let out = oscilspec(&[
        "wavefunction",
        "--preset",
        "B",
        "--level",
        "1",
        "--points",
        "11",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,psi");
    assert_eq!(lines.len(), 12);
    assert_eq!(lines[1], "-4,0");
    assert_eq!(lines[6], "0,0");
    assert_eq!(lines[11], "4,0");
    let json = oscilspec(&[
        "wavefunction",
        "--preset",
        "B",
        "--level",
        "1",
        "--points",
        "5",
        "--format",
        "json",
    ]);
    let grid: Vec<GridRecord> = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(grid.len(), 5);
}

#[test]
fn verify_box_against_analytic_levels() {
    let out = oscilspec(&[
        "verify", "--preset", "box", "--levels", "2", "--format", "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows: Vec<VerifyRecord> = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(rows.iter().all(|r| r.pass));
    assert_eq!(rows[0].analytic.as_deref(), Some("2.467401100272"));
    assert!(stderr(&out).contains("2/2 levels agree"));
}

#[test]
fn exit_codes() {
    let bad = oscilspec(&["spectrum", "--preset", "nope"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("unknown preset"));

    let missing = oscilspec(&["spectrum", "--config", "/nonexistent/run.json"]);
    assert_eq!(missing.status.code(), Some(1));

    let low = oscilspec(&["reproduce", "1", "--digits", "10"]);
    assert_eq!(low.status.code(), Some(1));
    assert!(stderr(&low).contains("insufficient precision requested"));

    let starved = oscilspec(&["spectrum", "--preset", "A", "--order-ceiling", "40"]);
    assert_eq!(starved.status.code(), Some(2));
    assert!(stderr(&starved).contains("precision exhausted"));
}
