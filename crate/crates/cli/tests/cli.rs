use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hypowalk::stats::matched_series;

fn hypowalk(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypowalk"))
        .args(args)
        .current_dir(cwd)
        .env_remove("HYPOWALK_DATA_DIR")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SPEC: &str = r#"
symbols = 6
days = 520
benchmark = "BENCH"
[[episodes]]
kind = "accumulation"
symbol = 1
start = 300
markup = 0.04
markup_days = 10
[[episodes]]
kind = "accumulation"
symbol = 3
start = 420
markup = 0.04
markup_days = 10
"#;

const CONFIG: &str = r#"
[data]
dir = "data"
benchmark = "BENCH"
[stats]
bootstrap_resamples = 1000
permutations = 1000
[run]
seed = 5
output_dir = "out"
"#;

fn fixture() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("spec.toml"), SPEC).unwrap();
    fs::write(dir.path().join("run.toml"), CONFIG).unwrap();
    let o = hypowalk(
        &["synth", "--spec", "spec.toml", "--out", "data", "--seed", "3"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    dir
}

#[test]
fn run_writes_report_files() {
    let dir = fixture();
    let o = hypowalk(&["run", "run.toml"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in [
        "report.json",
        "folds.csv",
        "trades.csv",
        "manifest.json",
        "plots/cumulative_return.csv",
    ] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
}

#[test]
fn missing_data_file_is_exit_2_naming_the_file() {
    let dir = fixture();
    fs::remove_file(dir.path().join("data/S002.csv")).unwrap();
    let o = hypowalk(&["run", "run.toml"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("S002.csv"), "{}", stderr(&o));
}

#[test]
fn out_of_range_epsilon_is_exit_1_with_field() {
    let dir = fixture();
    fs::write(
        dir.path().join("bad.toml"),
        format!("{CONFIG}\n[agent]\nepsilon_train = 1.5\n"),
    )
    .unwrap();
    let o = hypowalk(&["run", "bad.toml"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("agent.epsilon_train"), "{}", stderr(&o));

    fs::write(dir.path().join("junk.toml"), "[agent\n").unwrap();
    assert_eq!(code(&hypowalk(&["run", "junk.toml"], dir.path())), 1);
    assert_eq!(code(&hypowalk(&["run", "absent.toml"], dir.path())), 1);
    assert_eq!(code(&hypowalk(&["frobnicate"], dir.path())), 1);
}

#[test]
fn data_dir_flag_and_env_override_config() {
    let dir = fixture();
    fs::write(dir.path().join("nodir.toml"), CONFIG.replace("dir = \"data\"\n", "")).unwrap();
    assert_eq!(code(&hypowalk(&["run", "nodir.toml"], dir.path())), 1);
    let o = hypowalk(&["run", "nodir.toml", "--data-dir", "data"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = Command::new(env!("CARGO_BIN_EXE_hypowalk"))
        .args(["run", "nodir.toml"])
        .current_dir(dir.path())
        .env("HYPOWALK_DATA_DIR", dir.path().join("data"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn report_is_byte_identical_across_jobs_and_repeats() {
    let dir = fixture();
    let mut reports = Vec::new();
    for (jobs, out) in [("1", "o1"), ("8", "o8"), ("8", "o8b")] {
        let o = hypowalk(&["run", "run.toml", "--jobs", jobs, "--out", out], dir.path());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        reports.push(fs::read(dir.path().join(out).join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[1], reports[2]);
    let o = hypowalk(&["run", "run.toml", "--seed", "6", "--out", "o6"], dir.path());
    assert_eq!(code(&o), 0);
    assert_ne!(reports[0], fs::read(dir.path().join("o6/report.json")).unwrap());
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        assert_eq!(code(&hypowalk(&["synth", "--out", out, "--seed", "17"], dir.path())), 0);
    }
    let names: Vec<_> = fs::read_dir(dir.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(names.len(), 11);
    for n in names {
        assert_eq!(
            fs::read(dir.path().join("a").join(&n)).unwrap(),
            fs::read(dir.path().join("b").join(&n)).unwrap(),
            "{n:?}"
        );
    }
    fs::write(dir.path().join("bad.toml"), "symbols = 0\n").unwrap();
    assert_eq!(
        code(&hypowalk(&["synth", "--spec", "bad.toml", "--out", "c"], dir.path())),
        1
    );
}

#[test]
fn injected_pattern_drives_a_type1_trade() {
    let dir = fixture();
    let cfg = format!(
        "{CONFIG}\n[hypotheses.type2]\nenabled = false\n[hypotheses.type3]\nenabled = false\n\
         [hypotheses.type4]\nenabled = false\n[hypotheses.type5]\nenabled = false\n"
    );
    fs::write(dir.path().join("t1.toml"), cfg).unwrap();
    let o = hypowalk(&["run", "t1.toml"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(dir.path().join("out/trades.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| &r[2] == "1"));
}

#[test]
fn stats_on_matched_summary_series() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = matched_series(34, 0.0014, 0.0082, 4)
        .iter()
        .map(|r| format!("{r}\n"))
        .collect();
    fs::write(dir.path().join("f.csv"), format!("fold_return\n{rows}")).unwrap();
    let o = hypowalk(&["stats", "f.csv"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let s = v["strategy"]["sharpe_ratio"].as_f64().unwrap();
    assert!((s - 0.34).abs() < 0.005, "{s}");
}

#[test]
fn stats_single_row_reports_unavailable() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("f.csv"), "fold_return\n0.01\n").unwrap();
    let o = hypowalk(&["stats", "f.csv"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["strategy"]["sharpe_ratio"].is_null());
    assert!(v["tests"]["t_test"].is_null());
    assert_eq!(v["strategy"]["mean_return"].as_f64(), Some(0.01));
}

#[test]
fn stats_malformed_csv_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("f.csv"), "fold_return\nnot-a-number\n").unwrap();
    assert_eq!(code(&hypowalk(&["stats", "f.csv"], dir.path())), 2);
    assert_eq!(code(&hypowalk(&["stats", "missing.csv"], dir.path())), 2);
}

#[test]
fn schedule_prints_folds() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypowalk(&["schedule", "--days", "2475"], dir.path());
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 35);
    fs::write(dir.path().join("c.toml"), "[walkforward]\ndrop_partial_final = true\n").unwrap();
    let o = hypowalk(&["schedule", "--days", "2475", "--config", "c.toml"], dir.path());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 34);
}

#[test]
fn defaults_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypowalk(&["defaults"], dir.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let parsed: hypowalk::config::RunConfig = toml::from_str(&text).unwrap();
    assert_eq!(parsed, hypowalk::config::RunConfig::default());
}
