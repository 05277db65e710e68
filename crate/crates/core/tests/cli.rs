//! End-to-end tests of the `risran` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn risran(args: &[&str], out_root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_risran"))
        .args(args)
        .env("RIS_SIM_OUT", out_root)
        .output()
        .expect("spawn risran")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv" || x == "toml"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn catalog_lists_eight_configurations() {
    let tmp = tempfile::tempdir().unwrap();
    let o = risran(&["catalog"], tmp.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 9);
    for id in ["I", "II", "III", "IV", "V", "VI", "VII", "VIII"] {
        assert!(text.lines().any(|l| l.split_whitespace().next() == Some(id)), "{id}");
    }
}

#[test]
fn run_twice_gives_byte_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let o = risran(
            &["run", "--config", "VIII", "--seed", "42", "--trace", "--out", dir.to_str().unwrap()],
            tmp.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (fa, fb) = (csv_files(&a), csv_files(&b));
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["kpm.csv", "ris_gains.csv", "scenario.toml", "summary.csv", "trace.csv"]);
    assert_eq!(fa, fb);
}

#[test]
fn run_uses_the_output_root_and_writes_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let o = risran(&["run", "--config", "II", "--seed", "3", "--duration", "2"], tmp.path());
    assert!(o.status.success());
    let dir = tmp.path().join("II-seed3");
    assert!(stdout(&o).contains("kpm.csv"));
    let kpm = fs::read_to_string(dir.join("kpm.csv")).unwrap();
    let mut lines = kpm.lines();
    assert_eq!(
        lines.next().unwrap(),
        "timestamp_ms,ue_id,slice,throughput_bps,buffer_bytes,cqi,mcs,granted_prbs,requested_prbs"
    );
    assert_eq!(lines.count(), 20);
    let summary = fs::read_to_string(dir.join("summary.csv")).unwrap();
    assert!(summary.starts_with("config_id,slice,metric,median,p25,p75,mean\n"));
    assert!(!dir.join("trace.csv").exists());
}

#[test]
fn scenario_file_round_trips_through_the_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let (first, second) = (tmp.path().join("first"), tmp.path().join("second"));
    let o = risran(&["run", "--config", "VI", "--duration", "1", "--out", first.to_str().unwrap()], tmp.path());
    assert!(o.status.success());
    let scenario = first.join("scenario.toml");
    let o = risran(
        &["run", "--config", scenario.to_str().unwrap(), "--out", second.to_str().unwrap()],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_files(&first), csv_files(&second));
}

#[test]
fn compare_prints_medians_for_every_pair() {
    let tmp = tempfile::tempdir().unwrap();
    let table = tmp.path().join("cmp.csv");
    let o = risran(
        &["compare", "--configs", "V,VI", "--seeds", "1-3", "--duration", "2", "--out", table.to_str().unwrap()],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let written = fs::read_to_string(&table).unwrap();
    assert_eq!(written, stdout(&o));
    assert!(written.lines().count() > 1);
}

#[test]
fn bad_input_fails_with_a_message() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        vec!["run", "--config", "IX"],
        vec!["compare", "--configs", "I", "--seeds", "9-1"],
        vec!["run", "--config", "/nonexistent/scenario.toml"],
    ] {
        let o = risran(&args, tmp.path());
        assert!(!o.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"), "{args:?}");
    }
}
