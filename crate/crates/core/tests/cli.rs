use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use efres::config::KEYS;

fn efres(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_efres")).args(args).output().expect("spawn efres")
}

fn manifest_value(dir: &Path, key: &str) -> String {
    let text = fs::read_to_string(dir.join("manifest")).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing from manifest"))
        .trim()
        .to_string()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn help_lists_every_config_key() {
    let out = efres(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for (key, _, _) in KEYS {
        assert!(text.contains(key), "--help does not mention {key}");
    }
    for cmd in ["spectrum", "spectroscopy", "calibrate", "tomo", "sweep", "decay", "compare"] {
        assert!(text.contains(cmd), "--help does not list {cmd}");
    }
}

#[test]
fn spectrum_reports_kerr_sign_change() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("s");
    let out = efres(&["spectrum", "--params-preset", "paper", "--levels", "4", "--output", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let n: usize = manifest_value(&dir, "sign_change_n").parse().unwrap();
    assert!((16..=24).contains(&n), "{n}");
    assert!(dir.join("data.csv").exists() && dir.join("transitions.csv").exists());
    assert!(!dir.join("plot.svg").exists());
}

#[test]
fn synthetic_calibration_recovers_k() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("c");
    let out = efres(&["calibrate", "--synthetic", "--seed", "7", "--format", "csv+svg", "--output", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let k: f64 = manifest_value(&dir, "fit.k").parse().unwrap();
    assert!((k - 2.29).abs() <= 0.01 * 2.29, "k = {k}");
    assert!(dir.join("plot.svg").exists());
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    for cmd in ["calibrate", "spectroscopy", "compare"] {
        let a = tmp.path().join(format!("{cmd}_a"));
        let b = tmp.path().join(format!("{cmd}_b"));
        let ra = efres(&[cmd, "--seed", "11", "--jobs", "1", "--format", "csv+svg", "--output", a.to_str().unwrap()]);
        let rb = efres(&[cmd, "--seed", "11", "--jobs", "4", "--format", "csv+svg", "--output", b.to_str().unwrap()]);
        assert_eq!((ra.status.code(), rb.status.code()), (Some(0), Some(0)), "{cmd}");
        assert_eq!(files(&a), files(&b), "{cmd} outputs differ");
    }
}

#[test]
fn configuration_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad_key = tmp.path().join("bad.toml");
    fs::write(&bad_key, "[run]\nsed = 3\n").unwrap();
    let missing = tmp.path().join("missing.toml");
    let bad_params = tmp.path().join("params.toml");
    fs::write(&bad_params, "[params]\nlevels = 5\n").unwrap();
    let no_data = tmp.path().join("nodata.toml");
    fs::write(&no_data, "[calibrate]\ndata = \"/nonexistent/cal.csv\"\n").unwrap();
    let out_dir = tmp.path().join("o");
    let o = out_dir.to_str().unwrap();
    for args in [
        vec!["spectrum", "--config", bad_key.to_str().unwrap(), "--output", o],
        vec!["spectrum", "--config", missing.to_str().unwrap(), "--output", o],
        vec!["spectrum", "--config", bad_params.to_str().unwrap(), "--output", o],
        vec!["calibrate", "--config", no_data.to_str().unwrap(), "--output", o],
        vec!["spectrum", "--params-preset", "other"],
        vec!["nonsense"],
    ] {
        let out = efres(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn numeric_failure_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("sweep.toml");
    fs::write(&cfg, "[sweep]\npowers_dbm = [-126.0]\nn_max_limit = 12\n").unwrap();
    let out = efres(&["sweep", "--config", cfg.to_str().unwrap(), "--output", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
