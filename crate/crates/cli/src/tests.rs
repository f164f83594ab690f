//! End-to-end runs of the subcommands through the same entry point as the
//! binary.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use cqed::transit::switch_window;

use super::*;

fn cli(args: &[&str]) -> Cli {
    Cli::try_parse_from(std::iter::once("cqed").chain(args.iter().copied())).unwrap()
}

fn run_in(dir: &Path, args: &[&str]) -> anyhow::Result<bool> {
    let mut all = vec!["--out", dir.to_str().unwrap()];
    all.extend_from_slice(args);
    execute(cli(&all))
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn unknown_subcommand_prints_usage() {
    let err = Cli::try_parse_from(["cqed", "frobnicate"]).unwrap_err();
    assert_eq!(err.kind(), clap::error::ErrorKind::InvalidSubcommand);
    assert_ne!(err.exit_code(), 0);
    assert!(err.render().to_string().contains("Usage"));
    assert!(Cli::try_parse_from(["cqed"]).is_err());
}

#[test]
fn only_csv_format_and_known_presets() {
    assert!(Cli::try_parse_from(["cqed", "--format", "json", "params"]).is_err());
    assert!(Cli::try_parse_from(["cqed", "--preset", "other", "params"]).is_err());
    assert_eq!(cli(&["--format", "csv", "params"]).format, Format::Csv);
}

#[test]
fn transit_windows_shrink_with_power() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_in(tmp.path(), &["--preset", "paper-2003", "transit"]).unwrap());
    let mut durations = Vec::new();
    for i in 0..4 {
        let trace = commands::read_trace(&tmp.path().join(format!("trace_{i:02}.csv"))).unwrap();
        let (a, b) = switch_window(&trace, 0.15, 0.30).expect("trace switches");
        durations.push(b - a);
    }
    assert!(durations.windows(2).all(|w| w[1] < w[0]), "{durations:?}");
    assert!(!tmp.path().join("trace_04.csv").exists());
}

#[test]
fn every_output_carries_the_run_header() {
    let tmp = tempfile::tempdir().unwrap();
    for cmd in ["params", "trap", "bistability", "transport", "transit"] {
        assert!(run_in(tmp.path(), &["--preset", "paper-2003", "--seed", "17", cmd]).unwrap(), "{cmd}");
    }
    let found = files(tmp.path());
    assert!(found.len() >= 15, "{found:?}");
    for f in found {
        let text = fs::read_to_string(&f).unwrap();
        if f.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert_eq!(v["seed"], 17, "{f:?}");
            assert_eq!(v["config_sha256"].as_str().unwrap().len(), 64);
            assert!(v["scenario"]["cavity"]["g0"].is_number());
        } else {
            let head: Vec<&str> = text.lines().take(5).collect();
            assert!(head[0].starts_with("# tool: cqed "), "{f:?}");
            assert!(head.iter().any(|l| l.starts_with("# config_sha256: ")), "{f:?}");
            assert!(head.contains(&"# seed: 17"), "{f:?}");
        }
    }
    let transit = fs::read_to_string(tmp.path().join("transit.meta.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&transit).unwrap();
    let eps = v["results"]["calibration"]["epsilon"].as_f64().unwrap();
    assert!((eps - 2.02).abs() < 0.01, "{eps}");
}

#[test]
fn csv_columns_match_the_documented_schemas() {
    let tmp = tempfile::tempdir().unwrap();
    for cmd in ["bistability", "transport", "transit"] {
        run_in(tmp.path(), &["--preset", "paper-2003", cmd]).unwrap();
    }
    let header = |name: &str| {
        fs::read_to_string(tmp.path().join(name))
            .unwrap()
            .lines()
            .find(|l| !l.starts_with('#'))
            .unwrap()
            .to_string()
    };
    assert_eq!(header("s_curve.csv"), "y,x,branch");
    assert!(header("hysteresis.csv").starts_with("y,x,branch"));
    assert_eq!(header("trajectory.csv"), "t,z,v,delta");
    assert_eq!(header("trace_00.csv"), "t,p_in,p_out,branch,C,n_eff");
}

const NOISY: &str = r#"
preset = "paper-2003"
seed = 5
[cloud]
mode = "discrete"
[probe]
powers = ["6.4 pW", "20 pW"]
[detector]
noise_floor = "0.05 pW"
[transit]
dt = "2 us"
"#;

#[test]
fn same_seed_gives_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "noisy.toml", NOISY);
    let cfg = cfg.to_str().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    run_in(&a, &["--config", cfg, "transit"]).unwrap();
    run_in(&b, &["--config", cfg, "transit"]).unwrap();
    run_in(&c, &["--config", cfg, "--seed", "6", "transit"]).unwrap();
    let (fa, fb) = (files(&a), files(&b));
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{x:?}");
    }
    let body = |d: &Path| {
        fs::read_to_string(d.join("trace_00.csv"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_ne!(body(&a), body(&c));
}

#[test]
fn seed_flag_beats_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", "preset = \"paper-2003\"\nseed = 3\n");
    run_in(tmp.path(), &["--config", cfg.to_str().unwrap(), "--seed", "99", "params"]).unwrap();
    let text = fs::read_to_string(tmp.path().join("params.csv")).unwrap();
    assert!(text.contains("# seed: 99"));
}

#[test]
fn output_dir_from_environment_only_when_flag_absent() {
    // the only test that touches the variable
    std::env::set_var(OUT_DIR_ENV, "/tmp/from-env");
    let from_env = Cli::try_parse_from(["cqed", "params"]).unwrap();
    let from_flag = Cli::try_parse_from(["cqed", "--out", "/tmp/from-flag", "params"]).unwrap();
    std::env::remove_var(OUT_DIR_ENV);
    assert_eq!(from_env.out, Some(PathBuf::from("/tmp/from-env")));
    assert_eq!(from_flag.out, Some(PathBuf::from("/tmp/from-flag")));
}

#[test]
fn invalid_config_exits_nonzero_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", "preset = \"paper-2003\"\n\n[cavity_typo]\nx = 1\n");
    let err = run_in(tmp.path(), &["--config", cfg.to_str().unwrap(), "params"]).unwrap_err();
    let msg = format!("{err:#}");
    assert!(msg.contains("bad.toml") && msg.contains("line 3"), "{msg}");
    assert_eq!(status(Err(err)), EXIT_CONFIG);

    let cfg = write_config(tmp.path(), "neg.toml", "preset = \"paper-2003\"\n[bistability]\ncoop = -4\n");
    let err = run_in(tmp.path(), &["--config", cfg.to_str().unwrap(), "bistability"]).unwrap_err();
    assert!(format!("{err:#}").contains("neg.toml:3"), "{err:#}");
    assert_eq!(status(Err(err)), EXIT_CONFIG);

    let missing = tmp.path().join("nope.toml");
    let err = run_in(tmp.path(), &["--config", missing.to_str().unwrap(), "params"]).unwrap_err();
    assert_ne!(status(Err(err)), 0);
    assert!(files(tmp.path()).iter().all(|f| f.extension().is_some_and(|e| e == "toml")));
}

#[test]
fn estimate_needs_existing_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("trace_00.csv");
    let err = run_in(tmp.path(), &["--preset", "paper-2003", "estimate", "--input", missing.to_str().unwrap()])
        .unwrap_err();
    assert!(format!("{err:#}").contains("does not exist"));
    assert_ne!(status(Err(err)), 0);
    let err = run_in(tmp.path(), &["--preset", "paper-2003", "estimate"]).unwrap_err();
    assert_ne!(status(Err(err)), 0);
}

const TIMELINE: &str = r#"
preset = "paper-2003"
[cloud]
peak_coop = 5400
[probe]
powers = ["240 pW", "758 pW", "2400 pW", "7580 pW", "31214 pW"]
[detector]
ideal = true
[transit]
dt = "2 us"
[estimate]
inputs = ["traces/trace_00.csv", "traces/trace_01.csv", "traces/trace_02.csv", "traces/trace_03.csv", "traces/trace_04.csv"]
"#;

#[test]
fn estimate_reads_back_what_transit_wrote() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "timeline.toml", TIMELINE);
    let cfg = cfg.to_str().unwrap();
    let traces_dir = tmp.path().join("traces");
    run_in(&traces_dir, &["--config", cfg, "transit"]).unwrap();
    let est = tmp.path().join("est");
    assert!(run_in(&est, &["--config", cfg, "estimate"]).unwrap());

    // the CSV round trip is exact, so the timeline matches the in-memory pipeline
    let loaded = config::load(Some(Path::new(cfg)), &Overrides::default()).unwrap();
    let ctx = RunContext::new("transit", traces_dir.clone(), loaded.scenario.clone());
    let traces = commands::run_transits(&ctx).unwrap();
    for (i, t) in traces.iter().enumerate() {
        let back = commands::read_trace(&traces_dir.join(format!("trace_{i:02}.csv"))).unwrap();
        assert_eq!(back.samples, t.samples);
    }
    let s = &loaded.scenario;
    let cal = cqed::transit::Calibration::new(&s.cavity, &s.atom, s.detector.input_coupling).unwrap();
    let direct = cqed::estimator::extract_timeline(&traces, s.cavity.normalized_detuning(), &cal, &s.estimate.switch).unwrap();
    let text = fs::read_to_string(est.join("timeline.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), direct.timeline.samples.len());
    for (row, sample) in rows.iter().zip(&direct.timeline.samples) {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[0].parse::<f64>().unwrap(), sample.t);
        assert_eq!(cols[1].parse::<f64>().unwrap(), sample.coop);
    }
    let report = fs::read_to_string(est.join("fit_report.txt")).unwrap();
    let peak: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("peak cooperativity: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((peak / 5400.0 - 1.0).abs() < 0.05, "{peak}");
    assert!(text.contains("# input: trace_00.csv sha256:"));
}

#[test]
fn selftest_exit_reflects_every_check() {
    let checks = selftest::run_checks().unwrap();
    assert!(checks.len() >= 20);
    let all = checks.iter().all(|c| c.pass);
    assert_eq!(execute(cli(&["selftest"])).unwrap(), all);
}
