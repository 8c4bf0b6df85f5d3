use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use csps::data::{kfold_splits, loocv_splits, train_test_split, Dataset};
use csps::diagnostics::{confusion_matrix, misclassification_rate};
use csps::estimators::pooled_predictive_distribution;
use csps::exec::parallel_map;
use csps::sampler::run_chain;

use crate::artifacts::fmt;
use crate::commands::{apply_features, load_input, prepare_features};
use crate::config::RunConfig;
use crate::CliError;

struct UnitPrediction {
    unit: usize,
    block: usize,
    truth: usize,
    predicted: usize,
    probs: Vec<f64>,
}

/// Fit on the training rows and predict the held-out rows, with the feature
/// pipeline (standardization, RBF knots) fitted on the training block only.
fn fit_and_predict(
    full: &Dataset,
    train_idx: &[usize],
    test_idx: &[usize],
    block: usize,
    cfg: &RunConfig,
) -> Result<Vec<UnitPrediction>, CliError> {
    let train_raw = full.subset(train_idx);
    let test_raw = full.subset(test_idx);
    let prepared = prepare_features(&train_raw, cfg, block as u64)?;
    let test = apply_features(&test_raw, prepared.standardization.as_ref(), prepared.rbf.as_ref())?;
    let shape = prepared.data.shape();

    let mut chain_configs = cfg.chain_configs(shape.c, shape.p)?;
    for cc in &mut chain_configs {
        // Per-block seed stream, still deterministic from the config seeds.
        cc.seed = cc.seed.wrapping_add(1_000_003u64.wrapping_mul(block as u64));
    }
    let outputs: Vec<_> = chain_configs
        .iter()
        .map(|cc| run_chain(&prepared.data, cc))
        .collect::<Result<_, _>>()
        .map_err(CliError::from)?;

    test_idx
        .iter()
        .enumerate()
        .map(|(row, &unit)| {
            let x: Vec<f64> = (0..test.design.ncols()).map(|k| test.design[(row, k)]).collect();
            let dist = pooled_predictive_distribution(&outputs, &x).map_err(CliError::from)?;
            Ok(UnitPrediction {
                unit,
                block,
                truth: full.labels[unit],
                predicted: dist.mode(),
                probs: dist.probs().to_vec(),
            })
        })
        .collect()
}

#[derive(Serialize)]
struct CvMetadata {
    command: String,
    mode: String,
    blocks: usize,
    wall_seconds: f64,
    overall_misclassification: f64,
    config: RunConfig,
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let (full, _) = load_input(cfg)?;
    let n = full.shape().n;
    let names = full.label_map.names.clone();

    // (train, test) index pairs per block.
    let blocks: Vec<(Vec<usize>, Vec<usize>)> = match cfg.cv.mode.as_str() {
        "kfold" => kfold_splits(n, cfg.cv.k, cfg.cv.split_seed)
            .map_err(CliError::from)?
            .into_iter()
            .map(|fold| {
                let train: Vec<usize> = (0..n).filter(|i| !fold.contains(i)).collect();
                (train, fold)
            })
            .collect(),
        "loocv" => loocv_splits(n)
            .into_iter()
            .map(|fold| {
                let train: Vec<usize> = (0..n).filter(|i| !fold.contains(i)).collect();
                (train, fold)
            })
            .collect(),
        "repeated-split" => (0..cfg.cv.count)
            .map(|s| {
                train_test_split(n, cfg.cv.fraction, cfg.cv.split_seed.wrapping_add(s as u64))
                    .map_err(CliError::from)
            })
            .collect::<Result<_, _>>()?,
        other => {
            return Err(CliError::validation(format!(
                "unknown cv mode '{other}' (expected kfold|loocv|repeated-split)"
            )))
        }
    };
    let n_blocks = blocks.len();

    let indexed: Vec<(usize, (Vec<usize>, Vec<usize>))> = blocks.into_iter().enumerate().collect();
    let results: Vec<Result<Vec<UnitPrediction>, CliError>> =
        parallel_map(indexed, cfg.sampler.workers, |(b, (train, test))| {
            fit_and_predict(&full, &train, &test, b, cfg)
        });
    let mut predictions: Vec<UnitPrediction> = Vec::new();
    for r in results {
        predictions.extend(r?);
    }

    let dir = Path::new(&cfg.output.dir);
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))?;

    // Per-unit predictions with the predictive probability of the true class.
    let mut pred_file = std::io::BufWriter::new(
        std::fs::File::create(dir.join("cv_predictions.csv")).map_err(CliError::io)?,
    );
    let mut header = vec!["unit".to_string(), "block".into(), "true".into(), "predicted".into(),
        "p_true".into()];
    header.extend(names.iter().map(|n| format!("p_{n}")));
    writeln!(pred_file, "{}", header.join(",")).map_err(CliError::io)?;
    for p in &predictions {
        let mut fields = vec![
            p.unit.to_string(),
            p.block.to_string(),
            names[p.truth].clone(),
            names[p.predicted].clone(),
            fmt(p.probs[p.truth]),
        ];
        fields.extend(p.probs.iter().map(|&v| fmt(v)));
        writeln!(pred_file, "{}", fields.join(",")).map_err(CliError::io)?;
    }
    drop(pred_file);

    // Per-block and overall scores.
    let mut summary = std::io::BufWriter::new(
        std::fs::File::create(dir.join("cv_summary.csv")).map_err(CliError::io)?,
    );
    writeln!(summary, "block,units,correct,misclassification").map_err(CliError::io)?;
    for b in 0..n_blocks {
        let block_preds: Vec<&UnitPrediction> =
            predictions.iter().filter(|p| p.block == b).collect();
        let correct = block_preds.iter().filter(|p| p.predicted == p.truth).count();
        let units = block_preds.len();
        writeln!(
            summary,
            "{b},{units},{correct},{}",
            fmt(1.0 - correct as f64 / units as f64)
        )
        .map_err(CliError::io)?;
    }
    let pred_classes: Vec<usize> = predictions.iter().map(|p| p.predicted).collect();
    let true_classes: Vec<usize> = predictions.iter().map(|p| p.truth).collect();
    let overall = misclassification_rate(&pred_classes, &true_classes).map_err(CliError::from)?;
    writeln!(
        summary,
        "overall,{},{},{}",
        predictions.len(),
        predictions.iter().filter(|p| p.predicted == p.truth).count(),
        fmt(overall)
    )
    .map_err(CliError::io)?;
    drop(summary);

    // Confusion matrix over all scored units (kfold/loocv score each unit
    // once; repeated splits score units across splits).
    let cm = confusion_matrix(&pred_classes, &true_classes, names.len()).map_err(CliError::from)?;
    let mut cm_file = std::io::BufWriter::new(
        std::fs::File::create(dir.join("cv_confusion.csv")).map_err(CliError::io)?,
    );
    let mut header = vec!["true\\pred".to_string()];
    header.extend(names.iter().cloned());
    writeln!(cm_file, "{}", header.join(",")).map_err(CliError::io)?;
    for (t, row) in cm.iter().enumerate() {
        let mut fields = vec![names[t].clone()];
        fields.extend(row.iter().map(|c| c.to_string()));
        writeln!(cm_file, "{}", fields.join(",")).map_err(CliError::io)?;
    }
    drop(cm_file);

    let metadata = CvMetadata {
        command: "cv".into(),
        mode: cfg.cv.mode.clone(),
        blocks: n_blocks,
        wall_seconds: started.elapsed().as_secs_f64(),
        overall_misclassification: overall,
        config: cfg.clone(),
    };
    std::fs::write(
        dir.join("metadata.toml"),
        toml::to_string_pretty(&metadata)
            .map_err(|e| CliError::runtime(format!("cannot serialize metadata: {e}")))?,
    )
    .map_err(CliError::io)?;

    println!(
        "cv ({}) over {n_blocks} blocks: overall misclassification {:.4}; artifacts in {}",
        cfg.cv.mode,
        overall,
        dir.display()
    );
    Ok(())
}
