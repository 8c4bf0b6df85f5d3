use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use csps::diagnostics::chain_agreement;
use csps::estimators::{
    conditional_beta_estimate, inclusion_probabilities, median_probability_model,
    pooled_inclusion_probabilities, pooled_posterior_mean_beta,
};
use csps::exec::parallel_map;
use csps::sampler::{run_chain, ChainOutput};

use crate::artifacts::{
    write_beta_draws, write_indicator_matrix, write_inclusion, write_m_draws, write_q_trace,
    write_real_matrix, write_scatter, TransformSpec,
};
use crate::commands::{load_input, prepare_features, warn_duplicate_seeds};
use crate::config::RunConfig;
use crate::CliError;

#[derive(Serialize)]
struct ChainMeta {
    seed: u64,
    start: String,
    retained_draws: usize,
    row_acceptance: Vec<f64>,
    q_acceptance: f64,
    variance_floor_hits: u64,
}

#[derive(Serialize)]
struct FitMetadata {
    command: String,
    wall_seconds: f64,
    classes: usize,
    predictors: usize,
    units: usize,
    warnings: Vec<String>,
    chains: Vec<ChainMeta>,
    config: RunConfig,
}

fn chain_meta(out: &ChainOutput) -> ChainMeta {
    let row_acceptance = out
        .acceptance
        .row_accepts
        .iter()
        .zip(&out.acceptance.row_proposals)
        .map(|(&a, &p)| if p == 0 { 0.0 } else { a as f64 / p as f64 })
        .collect();
    ChainMeta {
        seed: out.seed,
        start: out.start.to_string(),
        retained_draws: out.m_draws.len(),
        row_acceptance,
        q_acceptance: if out.acceptance.q_proposals == 0 {
            0.0
        } else {
            out.acceptance.q_accepts as f64 / out.acceptance.q_proposals as f64
        },
        variance_floor_hits: out.variance_floor_hits,
    }
}

/// Fit chains and emit the full artifact set; returns the output directory.
pub fn run(cfg: &RunConfig) -> Result<Vec<ChainOutput>, CliError> {
    let started = Instant::now();
    let (raw, label_column) = load_input(cfg)?;
    let raw_predictor_names = raw.predictor_names.clone();
    let prepared = prepare_features(&raw, cfg, 0)?;
    for w in &prepared.warnings {
        eprintln!("warning: {w}");
    }
    let data = prepared.data;
    let shape = data.shape();

    let chain_configs = cfg.chain_configs(shape.c, shape.p)?;
    warn_duplicate_seeds(&cfg.sampler.seeds);
    let outputs: Vec<ChainOutput> = parallel_map(chain_configs, cfg.sampler.workers, |cc| {
        run_chain(&data, &cc)
    })
    .into_iter()
    .collect::<Result<_, _>>()
    .map_err(CliError::from)?;

    let dir = Path::new(&cfg.output.dir);
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))?;

    let mhat = pooled_inclusion_probabilities(&outputs)?;
    if cfg.emits("inclusion") {
        write_inclusion(&dir.join("inclusion.csv"), &mhat)?;
        for (i, out) in outputs.iter().enumerate() {
            let per = inclusion_probabilities(out)?;
            write_inclusion(&dir.join(format!("inclusion_{i}.csv")), &per)?;
        }
    }
    if cfg.emits("beta") {
        let beta = pooled_posterior_mean_beta(&outputs)?;
        write_real_matrix(&dir.join("beta_mean.csv"), beta.classes(), beta.predictors(), |j, k| {
            beta.get(j, k)
        })?;
    }
    if cfg.emits("median-model") {
        let mstar = median_probability_model(&mhat);
        write_indicator_matrix(&dir.join("median_model.csv"), &mstar)?;
        // Conditional posterior mean under the median probability model.
        let mut cond_cfg = cfg.chain_configs(shape.c, shape.p)?.remove(0);
        cond_cfg.seed = cond_cfg.seed.wrapping_add(7919);
        let cond = conditional_beta_estimate(&data, &mstar, &cond_cfg)?;
        write_real_matrix(
            &dir.join("beta_conditional.csv"),
            cond.classes(),
            cond.predictors(),
            |j, k| cond.get(j, k),
        )?;
    }
    if cfg.emits("q-trace") {
        write_q_trace(&dir.join("q_trace.csv"), &outputs)?;
    }
    if cfg.emits("m-draws") {
        for (i, out) in outputs.iter().enumerate() {
            write_m_draws(&dir.join(format!("m_draws_{i}.csv")), out)?;
        }
    }
    if cfg.emits("beta-draws") {
        for (i, out) in outputs.iter().enumerate() {
            write_beta_draws(&dir.join(format!("beta_draws_{i}.csv")), out)?;
        }
    }
    if cfg.emits("diagnostics") && outputs.len() >= 2 {
        let a = inclusion_probabilities(&outputs[0])?;
        let b = inclusion_probabilities(&outputs[1])?;
        let report = chain_agreement(&a, &b)?;
        write_scatter(&dir.join("agreement.csv"), &report.pairs)?;
        println!(
            "chain agreement: max |diff| = {:.4}, rms = {:.4}",
            report.max_abs_diff, report.rms_diff
        );
    }

    TransformSpec::new(
        &data,
        &label_column,
        prepared.standardization.as_ref(),
        prepared.rbf.as_ref(),
        raw_predictor_names,
    )
    .save(&dir.join("transform.toml"))?;

    let metadata = FitMetadata {
        command: "fit".into(),
        wall_seconds: started.elapsed().as_secs_f64(),
        classes: shape.c,
        predictors: shape.p,
        units: shape.n,
        warnings: prepared.warnings.clone(),
        chains: outputs.iter().map(chain_meta).collect(),
        config: cfg.clone(),
    };
    let text = toml::to_string_pretty(&metadata)
        .map_err(|e| CliError::runtime(format!("cannot serialize metadata: {e}")))?;
    std::fs::write(dir.join("metadata.toml"), text).map_err(CliError::io)?;

    println!(
        "fit complete: {} chains, {} retained draws each, artifacts in {}",
        outputs.len(),
        outputs[0].m_draws.len(),
        dir.display()
    );
    Ok(outputs)
}
