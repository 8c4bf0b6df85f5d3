pub mod cv;
pub mod diagnose;
pub mod fit;
pub mod predict;
pub mod screen;
pub mod simulate;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use csps::data::{
    apply_standardization, load_csv, rbf_features, select_knots, simulate_scenario1,
    simulate_scenario2, standardize, Dataset, RbfConfig, Standardization,
};

use crate::config::RunConfig;
use crate::CliError;

pub(crate) const DEFAULT_LABEL_COLUMN: &str = "label";

/// Resolve the configured input into a raw dataset (CSV or synthetic
/// scenario) plus the label-column name used.
pub(crate) fn load_input(cfg: &RunConfig) -> Result<(Dataset, String), CliError> {
    match (&cfg.data.input, cfg.data.scenario) {
        (Some(_), Some(_)) => Err(CliError::validation(
            "data.input and data.scenario are mutually exclusive".into(),
        )),
        (None, None) => Err(CliError::validation(
            "no data source: set data.input or data.scenario".into(),
        )),
        (Some(path), None) => {
            let label_column = cfg
                .data
                .label_column
                .clone()
                .unwrap_or_else(|| DEFAULT_LABEL_COLUMN.to_string());
            let ds = load_csv(path, &label_column, cfg.model.reference_class.as_deref())?;
            Ok((ds, label_column))
        }
        (None, Some(scenario)) => {
            let seed = cfg.data.scenario_seed.unwrap_or(1);
            let (ds, _) = match scenario {
                1 => simulate_scenario1(seed),
                2 => simulate_scenario2(seed),
                other => {
                    return Err(CliError::validation(format!(
                        "unknown scenario {other}; expected 1 or 2"
                    )))
                }
            };
            Ok((ds, DEFAULT_LABEL_COLUMN.to_string()))
        }
    }
}

/// A dataset pushed through the configured feature pipeline, with the fitted
/// transform parameters retained for held-out data.
pub(crate) struct Prepared {
    pub data: Dataset,
    pub standardization: Option<Standardization>,
    pub rbf: Option<RbfConfig>,
    pub warnings: Vec<String>,
}

/// Fit the feature pipeline on (training) data: optional standardization,
/// then optional RBF expansion with knots drawn from these rows only.
pub(crate) fn prepare_features(
    raw: &Dataset,
    cfg: &RunConfig,
    knot_seed_offset: u64,
) -> Result<Prepared, CliError> {
    let mut warnings = Vec::new();
    let (mut data, standardization) = if cfg.data.standardize.unwrap_or(false) {
        let (ds, s) = standardize(raw)?;
        (ds, Some(s))
    } else {
        (raw.clone(), None)
    };

    let rbf = if let Some(block) = &cfg.data.rbf {
        let covariates = data.predictors();
        let mut rng = ChaCha8Rng::seed_from_u64(block.knot_seed.wrapping_add(knot_seed_offset));
        let knots = select_knots(&covariates, block.knots, &mut rng)?;
        let (rbf_cfg, rbf_warnings) = RbfConfig::fit(&covariates, knots, block.bandwidth)?;
        warnings.extend(rbf_warnings);
        let features = rbf_features(&covariates, &rbf_cfg)?;
        let names = (1..=block.knots).map(|k| format!("rbf{k}")).collect();
        data = Dataset::from_predictors(features, data.labels.clone(), data.label_map.clone(), names)?;
        Some(rbf_cfg)
    } else {
        None
    };

    Ok(Prepared {
        data,
        standardization,
        rbf,
        warnings,
    })
}

/// Apply an already-fitted pipeline to held-out rows.
pub(crate) fn apply_features(
    raw: &Dataset,
    standardization: Option<&Standardization>,
    rbf: Option<&RbfConfig>,
) -> Result<Dataset, CliError> {
    let mut data = match standardization {
        Some(s) => apply_standardization(raw, s)?,
        None => raw.clone(),
    };
    if let Some(cfg) = rbf {
        let features = rbf_features(&data.predictors(), cfg)?;
        let names = (1..=cfg.knots.len()).map(|k| format!("rbf{k}")).collect();
        data = Dataset::from_predictors(features, data.labels.clone(), data.label_map.clone(), names)?;
    }
    Ok(data)
}

pub(crate) fn warn_duplicate_seeds(seeds: &[u64]) {
    let mut sorted = seeds.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != seeds.len() {
        eprintln!("warning: duplicate seeds across chains; the chains will be identical");
    }
}
