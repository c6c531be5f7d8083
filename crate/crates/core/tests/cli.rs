//! The `abe` binary end to end, including byte-identical output across
//! worker counts.

use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = "dim = 2\nn = 600\nk = 3\nseeds = 4\ndistances = [1.0, 3.0]\ndims = [1, 2]\n";

fn abe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abe")).args(args).output().expect("run abe")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn sweep_csv_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let mut outputs = Vec::new();
    for jobs in ["1", "2", "5"] {
        let out = abe(&["sweep-distance", "--config", &cfg, "--jobs", jobs, "--seed", "11"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(out.stdout);
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    let text = String::from_utf8(outputs.pop().unwrap()).unwrap();
    assert!(text.starts_with("# abe "));
    assert!(text.contains("seed = 11"));
}

#[test]
fn every_subcommand_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    for cmd in ["estimate", "compare-losses", "sweep-distance", "sweep-dimension", "theory"] {
        let csv = dir.path().join(format!("{cmd}.csv"));
        let out = abe(&[cmd, "--config", &cfg, "--out", &s(&csv), "--jobs", "2"]);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let text = std::fs::read_to_string(&csv).unwrap();
        assert!(text.lines().any(|l| !l.starts_with('#')), "{cmd} wrote no rows");
    }
    let svg = dir.path().join("distance.svg");
    let out = abe(&["plot", &s(&dir.path().join("sweep-distance.csv")), "--out", &s(&svg)]);
    assert!(out.status.success());
    let first = std::fs::read(&svg).unwrap();
    abe(&["plot", &s(&dir.path().join("sweep-distance.csv")), "--out", &s(&svg)]);
    assert_eq!(first, std::fs::read(&svg).unwrap());
    let text = String::from_utf8(first).unwrap();
    for est in ["none", "geometric", "arithmetic", "two_step", "two_step_trig"] {
        assert!(text.contains(&format!(">{est}</text>")), "series {est} missing");
    }
}

#[test]
fn compare_losses_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seeds = 6\nn = 2000\ndim = 3\n");
    let out = abe(&["compare-losses", "--config", &cfg]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 6 * 3 + 3);
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let col = rdr.headers().unwrap().iter().position(|h| h == "true_log_z").unwrap();
    for rec in rdr.records() {
        assert_eq!(&rec.unwrap()[col], "0");
    }
}

#[test]
fn paper_scale_flag_sets_budget() {
    let dir = tempfile::tempdir().unwrap();
    // theory only, so the full-scale budget costs nothing to run
    let cfg = write_config(dir.path(), "distances = [2.0]\n");
    let out = abe(&["theory", "--config", &cfg, "--paper-scale"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("n = 50000") && text.contains("seeds = 100") && text.contains("dim = 50"));
}

#[test]
fn config_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seedz = 3\n");
    let out = abe(&["sweep-distance", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seedz"));

    let cfg = write_config(dir.path(), "seeds = 1\n");
    let out = abe(&["sweep-dimension", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "row_type,sweep_value\nsummary,1\n").unwrap();
    let out = abe(&["plot", &s(&bad), "--out", &s(&dir.path().join("x.svg"))]);
    assert_eq!(out.status.code(), Some(2));
}
