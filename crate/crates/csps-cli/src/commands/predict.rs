use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use csps::data::Dataset;
use csps::estimators::pooled_predictive_distribution;
use csps::sampler::{AcceptanceStats, ChainOutput, StartModel};

use crate::artifacts::{beta_draw_files, fmt, read_beta_draws, TransformSpec};
use crate::commands::apply_features;
use crate::CliError;

/// Read the covariate columns named in the transform from a CSV, in the
/// recorded order; the label column, if requested, is mapped through the
/// fitted label set.
fn read_new_data(
    path: &str,
    spec: &TransformSpec,
    with_labels: bool,
) -> Result<(DMatrix<f64>, Option<Vec<usize>>), CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::validation(format!("cannot read {path}: {e}")))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::validation(format!("bad header in {path}: {e}")))?
        .clone();
    let mut col_idx = Vec::with_capacity(spec.predictor_names.len());
    for name in &spec.predictor_names {
        let idx = headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::validation(format!(
                "{path} is missing predictor column '{name}' required by the fitted artifacts"
            ))
        })?;
        col_idx.push(idx);
    }
    let label_idx = if with_labels {
        Some(
            headers
                .iter()
                .position(|h| h == spec.label_column)
                .ok_or_else(|| {
                    CliError::validation(format!(
                        "{path} has no label column '{}'",
                        spec.label_column
                    ))
                })?,
        )
    } else {
        None
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record
            .map_err(|e| CliError::validation(format!("bad row {} in {path}: {e}", r + 2)))?;
        let mut row = Vec::with_capacity(col_idx.len());
        for (&idx, name) in col_idx.iter().zip(&spec.predictor_names) {
            let cell = record.get(idx).unwrap_or("").trim();
            let value: f64 = cell.parse().map_err(|_| {
                CliError::validation(format!(
                    "row {} column '{name}' in {path}: '{cell}' is not numeric",
                    r + 2
                ))
            })?;
            row.push(value);
        }
        rows.push(row);
        if let Some(idx) = label_idx {
            let cell = record.get(idx).unwrap_or("").trim();
            let class = spec
                .label_names
                .iter()
                .position(|n| n == cell)
                .ok_or_else(|| {
                    CliError::validation(format!(
                        "row {} in {path}: label '{cell}' was not seen at fit time",
                        r + 2
                    ))
                })?;
            labels.push(class);
        }
    }
    let n = rows.len();
    let d = spec.predictor_names.len();
    let covariates = DMatrix::from_fn(n, d, |i, k| rows[i][k]);
    Ok((covariates, label_idx.map(|_| labels)))
}

pub fn run(artifacts: &str, data_path: &str, out: &str, with_labels: bool) -> Result<(), CliError> {
    let dir = Path::new(artifacts);
    let spec = TransformSpec::load(dir)?;
    let (covariates, labels) = read_new_data(data_path, &spec, with_labels)?;
    let n = covariates.nrows();
    if n == 0 {
        return Err(CliError::validation(format!("{data_path} has no data rows")));
    }

    // Wrap the raw covariates as a dataset so the fitted pipeline applies.
    let placeholder = vec![0usize; n];
    let raw = Dataset::from_predictors(
        covariates,
        placeholder,
        spec.label_map(),
        spec.predictor_names.clone(),
    )
    .map_err(CliError::from)?;
    let features = apply_features(&raw, spec.standardization().as_ref(), spec.rbf_config().as_ref())?;

    // Rehydrate the β draws into minimal chain outputs for model averaging.
    let outputs: Vec<ChainOutput> = beta_draw_files(dir)?
        .iter()
        .map(|path| -> Result<ChainOutput, CliError> {
            let beta_draws = read_beta_draws(path)?;
            Ok(ChainOutput {
                m_draws: vec![],
                q_draws: vec![],
                beta_draws,
                acceptance: AcceptanceStats {
                    row_proposals: vec![],
                    row_accepts: vec![],
                    q_proposals: 0,
                    q_accepts: 0,
                },
                variance_floor_hits: 0,
                seed: 0,
                start: StartModel::Empty,
            })
        })
        .collect::<Result<_, _>>()?;
    let expected_width = features.shape().p + 1;
    if let Some(first) = outputs[0].beta_draws.first() {
        if first.predictors() + 1 != expected_width {
            return Err(CliError::validation(format!(
                "fitted coefficients expect {} feature columns, data yields {}",
                first.predictors() + 1,
                expected_width
            )));
        }
    }

    let mut writer = std::io::BufWriter::new(
        std::fs::File::create(out)
            .map_err(|e| CliError::runtime(format!("cannot write {out}: {e}")))?,
    );
    let mut header = vec!["unit".to_string()];
    header.extend(spec.label_names.iter().map(|n| format!("p_{n}")));
    header.push("predicted".into());
    if labels.is_some() {
        header.push("true".into());
        header.push("p_true".into());
    }
    writeln!(writer, "{}", header.join(",")).map_err(CliError::io)?;

    for i in 0..n {
        let x: Vec<f64> = (0..features.design.ncols())
            .map(|k| features.design[(i, k)])
            .collect();
        let dist = pooled_predictive_distribution(&outputs, &x).map_err(CliError::from)?;
        let mode = dist.mode();
        let mut fields = vec![i.to_string()];
        fields.extend(dist.probs().iter().map(|&p| fmt(p)));
        fields.push(spec.label_names[mode].clone());
        if let Some(labels) = &labels {
            fields.push(spec.label_names[labels[i]].clone());
            fields.push(fmt(dist.probs()[labels[i]]));
        }
        writeln!(writer, "{}", fields.join(",")).map_err(CliError::io)?;
    }
    println!("wrote predictions for {n} units to {out}");
    Ok(())
}
