//! End-to-end tests driving the `csps` binary: artifact layout, determinism,
//! exit codes, and the full simulate → fit → predict → diagnose flow.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_csps"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("csps_cli_tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed with {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn small_fit_config(out_dir: &Path, extra: &str) -> String {
    format!(
        r#"
[model]
rho = 0.0
tau2 = 4.0
gamma1 = 5.0
gamma2 = 15.0

[sampler]
iterations = 300
burn_in = 100
thin = 10
seeds = [5, 6]
starts = ["empty", "full"]
q_proposal_scale = 0.5
workers = 1

[data]
scenario = 1
scenario_seed = 3

[output]
dir = "{}"
{extra}
"#,
        out_dir.display()
    )
}

#[test]
fn simulate_is_deterministic_and_validates_scenario() {
    let dir = tmp("simulate");
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    run_ok(bin().args(["simulate", "--scenario", "1", "--seed", "7"]).arg("--out-dir").arg(&out_a));
    run_ok(bin().args(["simulate", "--scenario", "1", "--seed", "7"]).arg("--out-dir").arg(&out_b));
    let a = read(&out_a.join("dataset.csv"));
    let b = read(&out_b.join("dataset.csv"));
    assert_eq!(a, b, "same seed must write identical bytes");
    assert_eq!(a.lines().count(), 251, "250 rows plus header");
    assert_eq!(a.lines().next().unwrap().split(',').count(), 16);
    let truth = read(&out_a.join("true_beta.csv"));
    assert_eq!(truth.lines().count(), 6, "5 classes plus header");

    let out = bin()
        .args(["simulate", "--scenario", "3", "--seed", "7"])
        .arg("--out-dir")
        .arg(dir.join("c"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "unknown scenario is a validation error");
}

#[test]
fn fit_writes_artifacts_and_reruns_identically() {
    let dir = tmp("fit");
    let out_dir = dir.join("out");
    let config = write_config(&dir, &small_fit_config(&out_dir, ""));

    run_ok(bin().arg("fit").arg("--config").arg(&config));
    for name in [
        "inclusion.csv",
        "inclusion_0.csv",
        "inclusion_1.csv",
        "beta_mean.csv",
        "median_model.csv",
        "beta_conditional.csv",
        "q_trace.csv",
        "m_draws_0.csv",
        "m_draws_1.csv",
        "beta_draws_0.csv",
        "beta_draws_1.csv",
        "agreement.csv",
        "transform.toml",
        "metadata.toml",
    ] {
        assert!(out_dir.join(name).exists(), "missing artifact {name}");
    }
    let metadata = read(&out_dir.join("metadata.toml"));
    assert!(metadata.contains("[config.sampler]"), "metadata echoes the config");
    assert!(metadata.contains("seeds = [5, 6]") || metadata.contains("seeds = [\n    5,\n    6,\n]"));

    let first = read(&out_dir.join("inclusion.csv"));
    let q_first = read(&out_dir.join("q_trace.csv"));
    run_ok(bin().arg("fit").arg("--config").arg(&config));
    assert_eq!(first, read(&out_dir.join("inclusion.csv")), "rerun overwrites identically");
    assert_eq!(q_first, read(&out_dir.join("q_trace.csv")));

    // A flag override changes the artifact (different seed stream).
    run_ok(
        bin()
            .arg("fit")
            .arg("--config")
            .arg(&config)
            .args(["--seeds", "15,16"]),
    );
    assert_ne!(first, read(&out_dir.join("inclusion.csv")));

    // rho = 1 engages the whole-predictor sampler: every draw's columns are
    // all-or-nothing across classes.
    run_ok(bin().arg("fit").arg("--config").arg(&config).args(["--rho", "1.0"]));
    assert!(read(&out_dir.join("metadata.toml")).contains("rho = 1.0"));
    let draws = read(&out_dir.join("m_draws_0.csv"));
    for line in draws.lines().skip(1) {
        let bits: Vec<&str> = line.split(',').skip(1).collect();
        for k in 1..=15 {
            let count: usize = (0..5)
                .map(|j| bits[j * 16 + k].parse::<usize>().unwrap())
                .sum();
            assert!(count == 0 || count == 5, "mixed column under rho = 1");
        }
    }
}

#[test]
fn fit_then_predict_round_trip() {
    let dir = tmp("predict");
    let out_dir = dir.join("out");
    let config = write_config(&dir, &small_fit_config(&out_dir, ""));
    run_ok(bin().arg("fit").arg("--config").arg(&config));

    // Single covariate row with the training column names.
    let header: Vec<String> = (1..=15).map(|k| format!("x{k}")).collect();
    let row: Vec<String> = (1..=15).map(|k| format!("{:.2}", 0.1 * k as f64)).collect();
    let one = dir.join("one.csv");
    std::fs::write(&one, format!("{}\n{}\n", header.join(","), row.join(","))).unwrap();
    let preds = dir.join("preds.csv");
    run_ok(
        bin()
            .arg("predict")
            .arg("--artifacts")
            .arg(&out_dir)
            .arg("--data")
            .arg(&one)
            .arg("--out")
            .arg(&preds),
    );
    let text = read(&preds);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("unit,p_0,p_1,p_2,p_3,p_4,p_5,predicted"));
    let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
    let total: f64 = fields[1..=6].iter().map(|f| f.parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9, "probabilities sum to 1, got {total}");

    // Scoring mode: echo the true label and its predictive probability.
    run_ok(bin().args(["simulate", "--scenario", "1", "--seed", "3"]).arg("--out-dir").arg(dir.join("sim")));
    let labeled_preds = dir.join("labeled_preds.csv");
    run_ok(
        bin()
            .arg("predict")
            .arg("--artifacts")
            .arg(&out_dir)
            .arg("--data")
            .arg(dir.join("sim").join("dataset.csv"))
            .arg("--out")
            .arg(&labeled_preds)
            .arg("--with-labels"),
    );
    let text = read(&labeled_preds);
    assert!(text.lines().next().unwrap().ends_with("predicted,true,p_true"));
    assert_eq!(text.lines().count(), 251);

    // Missing feature columns are a validation error.
    let bad = dir.join("bad.csv");
    std::fs::write(&bad, "x1,x2\n0.0,0.0\n").unwrap();
    let out = bin()
        .arg("predict")
        .arg("--artifacts")
        .arg(&out_dir)
        .arg("--data")
        .arg(&bad)
        .arg("--out")
        .arg(dir.join("bad_preds.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

fn toy_csv(path: &Path, n: usize) {
    let mut body = String::from("u,v,label\n");
    for i in 0..n {
        let u = (i as f64 * 0.37).sin();
        let v = (i as f64 * 0.61).cos();
        let label = if u + v > 0.0 { "pos" } else { "neg" };
        body.push_str(&format!("{u:.6},{v:.6},{label}\n"));
    }
    std::fs::write(path, body).unwrap();
}

#[test]
fn cv_kfold_and_loocv() {
    let dir = tmp("cv");
    let data = dir.join("toy.csv");
    toy_csv(&data, 22);

    let out_dir = dir.join("out_kfold");
    let config = write_config(
        &dir,
        &format!(
            r#"
[model]
rho = 0.0

[sampler]
iterations = 150
burn_in = 50
thin = 10
seeds = [3]
starts = ["empty"]
workers = 1

[data]
input = "{}"
label_column = "label"
standardize = true

[cv]
mode = "kfold"
k = 3
split_seed = 9

[output]
dir = "{}"
"#,
            data.display(),
            out_dir.display()
        ),
    );
    run_ok(bin().arg("cv").arg("--config").arg(&config));
    let summary = read(&out_dir.join("cv_summary.csv"));
    assert_eq!(summary.lines().count(), 5, "3 folds + overall + header");
    assert!(summary.lines().last().unwrap().starts_with("overall,22,"));
    let preds = read(&out_dir.join("cv_predictions.csv"));
    assert_eq!(preds.lines().count(), 23, "each unit scored once");
    assert!(preds.lines().next().unwrap().contains("p_true"));
    assert!(out_dir.join("cv_confusion.csv").exists());

    // LOOCV on the 22-row input runs 22 fit/predict cycles.
    let out_loocv = dir.join("out_loocv");
    let config = write_config(
        &dir,
        &format!(
            r#"
[model]
rho = 0.0

[sampler]
iterations = 150
burn_in = 50
thin = 10
seeds = [3]
starts = ["empty"]
workers = 1

[data]
input = "{}"
label_column = "label"

[cv]
mode = "loocv"

[output]
dir = "{}"
"#,
            data.display(),
            out_loocv.display()
        ),
    );
    run_ok(bin().arg("cv").arg("--config").arg(&config));
    let summary = read(&out_loocv.join("cv_summary.csv"));
    assert_eq!(summary.lines().count(), 24, "22 blocks + overall + header");
}

#[test]
fn cv_with_rbf_features_fits_knots_per_fold() {
    let dir = tmp("cv_rbf");
    let data = dir.join("toy.csv");
    toy_csv(&data, 24);
    let out_dir = dir.join("out");
    let config = write_config(
        &dir,
        &format!(
            r#"
[sampler]
iterations = 150
burn_in = 50
thin = 10
seeds = [3]
starts = ["empty"]
workers = 1

[data]
input = "{}"
label_column = "label"
standardize = true

[data.rbf]
knots = 4
bandwidth = 4.0
knot_seed = 2

[cv]
mode = "kfold"
k = 3
split_seed = 5

[output]
dir = "{}"
"#,
            data.display(),
            out_dir.display()
        ),
    );
    run_ok(bin().arg("cv").arg("--config").arg(&config));
    let summary = read(&out_dir.join("cv_summary.csv"));
    assert!(summary.lines().last().unwrap().starts_with("overall,24,"));
}

#[test]
fn cv_repeated_split_counts_blocks() {
    let dir = tmp("cv_split");
    let data = dir.join("toy.csv");
    toy_csv(&data, 20);
    let out_dir = dir.join("out");
    let config = write_config(
        &dir,
        &format!(
            r#"
[sampler]
iterations = 150
burn_in = 50
thin = 10
seeds = [3]
starts = ["empty"]
workers = 1

[data]
input = "{}"
label_column = "label"

[cv]
mode = "repeated-split"
count = 3
fraction = 0.5
split_seed = 4

[output]
dir = "{}"
"#,
            data.display(),
            out_dir.display()
        ),
    );
    run_ok(bin().arg("cv").arg("--config").arg(&config));
    let preds = read(&out_dir.join("cv_predictions.csv"));
    assert_eq!(preds.lines().count(), 1 + 3 * 10, "3 splits × 10 held-out units");
}

#[test]
fn diagnose_emits_scatter_files_and_handles_single_chain() {
    let dir = tmp("diagnose");
    let out_dir = dir.join("out");
    let config = write_config(&dir, &small_fit_config(&out_dir, ""));
    run_ok(bin().arg("fit").arg("--config").arg(&config));
    run_ok(bin().arg("diagnose").arg("--artifacts").arg(&out_dir));
    for name in ["switch_rates_0.csv", "switch_rates_1.csv", "agreement.csv"] {
        assert!(out_dir.join(name).exists(), "missing {name}");
    }
    let scatter = read(&out_dir.join("switch_rates_0.csv"));
    assert!(scatter.lines().next().unwrap() == "row,col,x,y");
    assert_eq!(scatter.lines().count(), 1 + 5 * 15);

    // Single chain: agreement is skipped with a warning, exit code 0.
    let solo_dir = dir.join("solo");
    let config = write_config(
        &dir,
        &format!(
            r#"
[sampler]
iterations = 300
burn_in = 100
thin = 10
seeds = [5]
starts = ["empty"]
workers = 1

[data]
scenario = 1
scenario_seed = 3

[output]
dir = "{}"
"#,
            solo_dir.display()
        ),
    );
    run_ok(bin().arg("fit").arg("--config").arg(&config));
    let _ = std::fs::remove_file(solo_dir.join("agreement.csv"));
    let out = run_ok(bin().arg("diagnose").arg("--artifacts").arg(&solo_dir));
    assert!(String::from_utf8_lossy(&out.stderr).contains("single chain"));
    assert!(!solo_dir.join("agreement.csv").exists());
}

#[test]
fn screen_ranks_univariate_predictors() {
    let dir = tmp("screen");
    let data = dir.join("toy.csv");
    // Three predictors, only the first informative.
    let mut body = String::from("a,b,c,label\n");
    for i in 0..60 {
        let a = if i % 2 == 0 { 1.2 } else { -1.2 };
        let b = (i as f64 * 0.17).sin() * 0.1;
        let c = (i as f64 * 0.23).cos() * 0.1;
        let label = if a > 0.0 { "x" } else { "y" };
        body.push_str(&format!("{a:.4},{b:.4},{c:.4},{label}\n"));
    }
    std::fs::write(&data, body).unwrap();

    let out_dir = dir.join("out");
    let config = write_config(
        &dir,
        &format!(
            r#"
[sampler]
iterations = 800
burn_in = 200
thin = 5
seeds = [2]
starts = ["empty"]
workers = 1

[data]
input = "{}"
label_column = "label"

[screen]
threshold = 0.5

[output]
dir = "{}"
"#,
            data.display(),
            out_dir.display()
        ),
    );
    run_ok(bin().arg("screen").arg("--config").arg(&config));
    let text = read(&out_dir.join("screen.csv"));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4, "3 predictors plus header");
    assert!(lines[0].contains("incl_y"), "per-class inclusion columns present");
    assert!(!lines[0].contains("inclusion_diff"), "diff column only for 3-class data");
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first[1], "a");
    let incl_a: f64 = first[2].parse().unwrap();
    assert!(incl_a > 0.5, "informative predictor retained, got {incl_a}");
    let retained = read(&out_dir.join("screen_retained.csv"));
    assert!(retained.lines().any(|l| l == "a"));
}

#[test]
fn screen_emits_diff_column_for_three_classes() {
    let dir = tmp("screen3");
    let data = dir.join("toy.csv");
    let mut body = String::from("a,b,label\n");
    for i in 0..45 {
        let a = (i % 3) as f64 - 1.0;
        let b = (i as f64 * 0.13).sin();
        let label = ["r", "s", "t"][i % 3];
        body.push_str(&format!("{a:.4},{b:.4},{label}\n"));
    }
    std::fs::write(&data, body).unwrap();
    let out_dir = dir.join("out");
    let config = write_config(
        &dir,
        &format!(
            r#"
[sampler]
iterations = 400
burn_in = 100
thin = 5
seeds = [2]
starts = ["empty"]
workers = 1

[data]
input = "{}"
label_column = "label"

[output]
dir = "{}"
"#,
            data.display(),
            out_dir.display()
        ),
    );
    run_ok(bin().arg("screen").arg("--config").arg(&config));
    let text = read(&out_dir.join("screen.csv"));
    assert!(text.lines().next().unwrap().ends_with("inclusion_diff"));
}

#[test]
fn config_errors_exit_with_code_one() {
    let dir = tmp("errors");
    let missing = bin()
        .arg("fit")
        .arg("--config")
        .arg(dir.join("nope.toml"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));

    let bad = write_config(&dir, "[sampler]\nburn_in = \"lots\"\n");
    let out = bin().arg("fit").arg("--config").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // burn_in >= iterations is caught by validation.
    let invalid = write_config(
        &dir,
        r#"
[sampler]
iterations = 10
burn_in = 20

[data]
scenario = 1

[output]
dir = "/tmp/csps_cli_tests/errors/out"
"#,
    );
    let out = bin().arg("fit").arg("--config").arg(&invalid).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
