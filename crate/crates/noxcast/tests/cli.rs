//! End-to-end runs of the `noxcast` binary on small synthetic data.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn noxcast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noxcast")).args(args).output().expect("spawn noxcast")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const MODELS: &str = "\
[[models]]
kind = \"QLR\"

[[models]]
kind = \"QKNN\"
k = 20

[[models]]
kind = \"QGB\"
rounds = 40
";

/// Synthetic data plus a small config in `dir`; returns the config path.
fn setup(dir: &Path, extra_top: &str) -> String {
    let d = dir.to_str().unwrap();
    let o = noxcast(&["synth", "--days", "150", "--seed", "5", "--out", d]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cfg = format!(
        "seed = 9\noutput = \"out\"\nhorizons = [1, 9]\n{extra_top}\n{MODELS}\n\
         [data]\nseries = [\"no2.csv\", \"o3.csv\", \"exo_no2.csv\"]\ncalendar = \"calendar.csv\"\n\n\
         [cv]\nfolds = 3\n"
    );
    let path = dir.join("run.toml");
    fs::write(&path, cfg).unwrap();
    path.to_str().unwrap().to_string()
}

fn data_lines(path: &Path) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let units = lines.next().unwrap();
    assert!(units.starts_with("# units:"), "{}: {units}", path.display());
    lines.map(str::to_string).collect()
}

#[test]
fn synth_writes_series_calendar_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = noxcast(&["synth", "--days", "40", "--seed", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["no2.csv", "o3.csv", "exo_no2.csv", "calendar.csv", "noxcast.toml"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let rows = data_lines(&dir.path().join("no2.csv"));
    assert_eq!(rows[0], "timestamp,no2");
    assert_eq!(rows.len(), 1 + 40 * 24);
}

#[test]
fn evaluate_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), "");
    let o = noxcast(&["evaluate", "--config", &cfg]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("out");

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("experiment.json")).unwrap()).unwrap();
    let cells = report["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 3 * 2);
    for c in cells {
        assert!(c["crps_mean"].as_f64().unwrap() > 0.0);
        assert_eq!(c["folds"].as_u64(), Some(3));
    }
    assert!(report["units"].is_object());
    assert!(!fs::read_to_string(out.join("experiment.json")).unwrap().contains("seconds"));

    let scores = data_lines(&out.join("scores.csv"));
    assert_eq!(scores[0], "horizon,QLR,QKNN,QGB");
    assert_eq!(scores.len(), 3);

    let quade: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("quade.json")).unwrap()).unwrap();
    assert_eq!(quade["algorithms"].as_array().unwrap().len(), 3);
    let timings: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("timings.json")).unwrap()).unwrap();
    assert!(timings["total_seconds"].as_f64().unwrap() >= 0.0);

    let other = dir.path().join("cmp");
    let scores_path = out.join("scores.csv");
    let o = noxcast(&[
        "compare",
        "--scores",
        scores_path.to_str().unwrap(),
        "--alpha",
        "0.1",
        "--out",
        other.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let again: serde_json::Value = serde_json::from_str(&fs::read_to_string(other.join("quade.json")).unwrap()).unwrap();
    assert_eq!(again["statistic"], quade["statistic"]);
    assert_eq!(again["alpha"].as_f64(), Some(0.1));
}

#[test]
fn features_train_predict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), "");
    let out = dir.path().join("out");

    let o = noxcast(&["features", "--config", &cfg, "--horizon", "9"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = data_lines(&out.join("features_h9.csv"));
    assert!(rows[0].starts_with("issue_time,"), "{}", rows[0]);
    assert!(rows.len() > 100);

    let o = noxcast(&["train", "--config", &cfg, "--model", "QGB", "--horizon", "9"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let model = out.join("model_QGB_h9.json");
    assert!(model.exists());

    let o = noxcast(&["predict", "--config", &cfg, "--model", model.to_str().unwrap(), "--at", "2017-03-01T10:00:00Z"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = data_lines(&out.join("forecast_QGB_h9.csv"));
    assert_eq!(rows[0], "issue_time,horizon,q05,q25,q50,q75,q95,mu,sigma,p_exceed_180");
    let fields: Vec<f64> = rows[1].split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    assert_eq!(fields[0], 9.0);
    assert!(fields[1..6].windows(2).all(|w| w[0] <= w[1]), "{rows:?}");
    assert!((0.0..=1.0).contains(&fields[8]));
}

#[test]
fn peaks_emits_event_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), "");
    let o = noxcast(&["peaks", "--config", &cfg, "--model", "QLR", "--threshold", "60", "--p-alarm", "0.5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("out");
    let rows = data_lines(&out.join("peaks.csv"));
    assert_eq!(rows[0], "issue_time,horizon,p_exceed,alarm,label");
    assert!(rows.len() > 1);
    for r in &rows[1..] {
        let f: Vec<&str> = r.split(',').collect();
        assert_eq!(f.len(), 5);
        let p: f64 = f[2].parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert_eq!(f[3], if p > 0.5 { "1" } else { "0" });
    }
    assert!(out.join("roc.csv").exists());
    assert!(out.join("peaks_summary.json").exists());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&noxcast(&["frobnicate"])), 2);
    assert_eq!(code(&noxcast(&[])), 2);
    assert_eq!(code(&noxcast(&["--help"])), 0);
    assert_eq!(code(&noxcast(&["synth", "--days", "abc"])), 2);
}

#[test]
fn invalid_config_exits_two_with_field_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), "");
    let text = fs::read_to_string(&cfg).unwrap().replace("horizons = [1, 9]", "horizons = [1, 61]");
    fs::write(&cfg, text).unwrap();
    let o = noxcast(&["evaluate", "--config", &cfg]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("horizons[1]"), "{}", stderr(&o));

    let cfg = setup(dir.path(), "bogus = 1");
    let o = noxcast(&["evaluate", "--config", &cfg]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));

    let cfg = setup(dir.path(), "");
    fs::remove_file(dir.path().join("o3.csv")).unwrap();
    let o = noxcast(&["evaluate", "--config", &cfg]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn bad_data_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), "");
    let path = dir.path().join("no2.csv");
    let mut lines: Vec<String> = fs::read_to_string(&path).unwrap().lines().map(str::to_string).collect();
    lines.swap(5, 6);
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let o = noxcast(&["evaluate", "--config", &cfg]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));

    let o = noxcast(&["synth", "--days", "150", "--seed", "5", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&path).unwrap().replacen(",", ",abc", 2);
    fs::write(&path, text).unwrap();
    let o = noxcast(&["features", "--config", &cfg, "--horizon", "1"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}
