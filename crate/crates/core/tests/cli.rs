use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use progst::cli::mean_std;
use progst::pipeline::RunReport;

fn progst(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_progst")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = progst(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

/// Writes a small synthetic benchmark into `dir/data`.
fn small_data(dir: &Path) {
    ok(dir, &["synth", "--out", "data", "--set", "synth_n_source=200", "--set", "synth_n_target=300"]);
}

const DATA: [&str; 6] = ["--source", "data/source.tsv", "--target", "data/target.tsv", "--lexicon", "data/lexicon_a.txt"];

fn with_data<'a>(args: &[&'a str]) -> Vec<&'a str> {
    args.iter().copied().chain(DATA).collect()
}

fn entries(dir: &Path) -> BTreeSet<String> {
    fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect()
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(progst(dir.path(), &["run", "--method", "bogus"]).status.code(), Some(2));
    assert_eq!(progst(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(progst(dir.path(), &["run", "--k", "two"]).status.code(), Some(2));
    assert_eq!(progst(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_1_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = progst(dir.path(), &["run", "--out", "o", "--source", "missing.tsv", "--target", "missing.tsv", "--script-detector", "latin"]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "io");

    fs::write(dir.path().join("bad.conf"), "k = 2\nflavour = mint\n").unwrap();
    let out = progst(dir.path(), &["run", "--config", "bad.conf"]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "parse");
    assert!(err["message"].as_str().unwrap().contains(":2:"));
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        ok(dir.path(), &["synth", "--out", out, "--seed", "3", "--set", "synth_n_target=100"]);
    }
    for f in ["source.tsv", "target.tsv", "lexicon_a.txt", "synth.json"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn run_writes_valid_report_and_stays_in_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    small_data(dir.path());
    let before = entries(dir.path());
    ok(dir.path(), &with_data(&["run", "--out", "r1", "--seed", "1"]));
    ok(dir.path(), &with_data(&["run", "--out", "r2", "--seed", "1"]));
    let after = entries(dir.path());
    assert_eq!(after.difference(&before).cloned().collect::<Vec<_>>(), ["r1", "r2"]);
    assert_eq!(entries(&dir.path().join("r1")), BTreeSet::from(["metrics.json".to_string(), "report.json".to_string()]));

    let a = fs::read_to_string(dir.path().join("r1/report.json")).unwrap();
    let b = fs::read_to_string(dir.path().join("r2/report.json")).unwrap();
    assert_eq!(a, b);
    let report: RunReport = serde_json::from_str(&a).unwrap();
    assert_eq!(report.final_predictions.len(), 300);
    assert_eq!(report.config.seed, 1);

    // eval on the written report reproduces the run's metrics
    ok(dir.path(), &["eval", "--report", "r1/report.json", "--gold", "data/target.tsv", "--out", "e"]);
    let run: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r1/metrics.json")).unwrap()).unwrap();
    let eval: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("e/metrics.json")).unwrap()).unwrap();
    assert_eq!(run["global"], eval["global"]);
    assert_eq!(run["per_bucket"], eval["per_bucket"]);
}

#[test]
fn eval_on_golden_report() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let dir = tempfile::tempdir().unwrap();
    let out = ok(
        dir.path(),
        &[
            "eval",
            "--report",
            fixtures.join("golden_report.json").to_str().unwrap(),
            "--gold",
            fixtures.join("golden_gold.tsv").to_str().unwrap(),
        ],
    );
    let m: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // predictions P P N N against gold P N N N
    let close = |v: &serde_json::Value, x: f64| (v.as_f64().unwrap() - x).abs() < 1e-12;
    assert!(close(&m["global"]["accuracy"], 0.75));
    assert!(close(&m["global"]["per_class_f1"]["positive"], 2.0 / 3.0));
    assert!(close(&m["global"]["per_class_f1"]["negative"], 0.8));
    assert!(close(&m["global"]["macro_f1"], (2.0 / 3.0 + 0.8) / 2.0));
    assert!(close(&m["per_bucket"][0]["metrics"]["accuracy"], 0.5));
    assert!(close(&m["per_bucket"][1]["metrics"]["accuracy"], 1.0));
}

#[test]
fn mean_std_hand_values() {
    let (m, s) = mean_std(&[0.8, 0.9, 0.7]);
    assert!((m - 0.8).abs() < 1e-12);
    assert!((s - 0.1).abs() < 1e-12);
    assert_eq!(mean_std(&[0.5]), (0.5, 0.0));
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn sweep_cells_aggregate_their_runs() {
    let dir = tempfile::tempdir().unwrap();
    small_data(dir.path());
    ok(dir.path(), &with_data(&["sweep", "--out", "s", "--ks", "1,2", "--deltas", "0.5", "--seeds", "0,1,2"]));
    let runs = csv_rows(&dir.path().join("s/sweep_runs.csv"));
    let cells = csv_rows(&dir.path().join("s/sweep.csv"));
    assert_eq!(runs.len(), 2 * 3);
    assert_eq!(cells.len(), 2);
    for cell in &cells {
        let macros: Vec<f64> = runs.iter().filter(|r| r[0] == cell[0]).map(|r| r[3].parse().unwrap()).collect();
        assert_eq!(macros.len(), 3);
        let mean = (macros[0] + macros[1] + macros[2]) / 3.0;
        let var = macros.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 2.0;
        assert_eq!(cell[3], "0");
        assert!((cell[4].parse::<f64>().unwrap() - mean).abs() < 1e-12);
        assert!((cell[5].parse::<f64>().unwrap() - var.sqrt()).abs() < 1e-12);
    }

    // A 1x1x1 grid is the same run as `run`.
    ok(dir.path(), &with_data(&["sweep", "--out", "one", "--ks", "2", "--deltas", "0.5", "--seeds", "1"]));
    ok(dir.path(), &with_data(&["run", "--out", "single", "--k", "2", "--seed", "1"]));
    let one = csv_rows(&dir.path().join("one/sweep_runs.csv"));
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("single/metrics.json")).unwrap()).unwrap();
    assert_eq!(one[0][3].parse::<f64>().unwrap(), metrics["global"]["macro_f1"].as_f64().unwrap());
}

#[test]
fn probe_ood_reports_default_alphas() {
    let dir = tempfile::tempdir().unwrap();
    small_data(dir.path());
    ok(dir.path(), &with_data(&["probe-ood", "--out", "p", "--seed", "4"]));
    let j: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("p/ood.json")).unwrap()).unwrap();
    assert_eq!(j["seed"], 4);
    let csv = fs::read_to_string(dir.path().join("p/ood.csv")).unwrap();
    for alpha in ["0.01", "0.05", "0.1"] {
        assert!(csv.lines().skip(1).any(|l| l.starts_with(&format!("{alpha},"))), "{alpha}\n{csv}");
    }
}

#[test]
fn bucket_stats_show_two_spikes() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "--out", "data", "--set", "synth_n_source=20"]);
    ok(dir.path(), &["bucket-stats", "--out", "b", "--target", "data/target.tsv", "--lexicon", "data/lexicon_a.txt", "--bins", "10"]);
    let j: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("b/bucket_stats.json")).unwrap()).unwrap();
    let hist: Vec<u64> = j["histogram"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    let peaks: Vec<usize> =
        (0..hist.len()).filter(|&i| hist[i] > 0 && (i == 0 || hist[i - 1] < hist[i]) && (i + 1 == hist.len() || hist[i + 1] <= hist[i])).collect();
    assert_eq!(peaks.len(), 2, "{hist:?}");
    assert!(peaks[0] <= 2 && peaks[1] >= 6, "{hist:?}");
    assert!(hist[4] == 0 && hist[5] == 0, "{hist:?}");
    let b1 = &j["buckets"][0];
    assert!(b1["f_eng_min"].as_f64().unwrap() >= j["buckets"][1]["f_eng_max"].as_f64().unwrap());
    assert!(fs::read_to_string(dir.path().join("b/histogram.txt")).unwrap().lines().count() == 10);
}

#[test]
fn pretrain_writes_dev_metrics() {
    let dir = tempfile::tempdir().unwrap();
    small_data(dir.path());
    ok(dir.path(), &["pretrain", "--out", "m", "--source", "data/source.tsv", "--script-detector", "latin"]);
    let j: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("m/pretrain.json")).unwrap()).unwrap();
    assert_eq!(j["dev_size"], 40);
    assert!(j["dev_metrics"]["macro_f1"].as_f64().unwrap() > 0.5);
}
