use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use csps::estimators::pooled_inclusion_probabilities;
use csps::exec::parallel_map;
use csps::sampler::run_chain;

use crate::artifacts::fmt;
use crate::commands::{load_input, prepare_features};
use crate::config::RunConfig;
use crate::CliError;

struct ScreenRow {
    predictor: usize,
    name: String,
    /// Per-class inclusion probability of the single predictor.
    inclusion: Vec<f64>,
}

#[derive(Serialize)]
struct ScreenMetadata {
    command: String,
    predictors: usize,
    threshold: f64,
    retained: usize,
    wall_seconds: f64,
    config: RunConfig,
}

/// One univariate selection fit per predictor; a predictor is retained when
/// any class's inclusion probability clears the threshold.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let (raw, _) = load_input(cfg)?;
    let prepared = prepare_features(&raw, cfg, 0)?;
    let data = prepared.data;
    let shape = data.shape();

    let jobs: Vec<usize> = (1..=shape.p).collect();
    let rows: Vec<Result<ScreenRow, CliError>> =
        parallel_map(jobs, cfg.sampler.workers, |k| -> Result<ScreenRow, CliError> {
            let uni = data.single_predictor(k).map_err(CliError::from)?;
            let mut chain_configs = cfg.chain_configs(shape.c, 1)?;
            for cc in &mut chain_configs {
                cc.seed = cc.seed.wrapping_add(99_991u64.wrapping_mul(k as u64));
            }
            let outputs: Vec<_> = chain_configs
                .iter()
                .map(|cc| run_chain(&uni, cc))
                .collect::<Result<_, _>>()
                .map_err(CliError::from)?;
            let mhat = pooled_inclusion_probabilities(&outputs).map_err(CliError::from)?;
            Ok(ScreenRow {
                predictor: k,
                name: data.predictor_names[k - 1].clone(),
                inclusion: (0..shape.c).map(|j| mhat.get(j, 1)).collect(),
            })
        });
    let rows: Vec<ScreenRow> = rows.into_iter().collect::<Result<_, _>>()?;

    let dir = Path::new(&cfg.output.dir);
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))?;

    let threshold = cfg.screen.threshold;
    let class_names = &data.label_map.names;
    let emit_diff = shape.c == 2;

    let mut file = std::io::BufWriter::new(
        std::fs::File::create(dir.join("screen.csv")).map_err(CliError::io)?,
    );
    let mut header = vec!["predictor".to_string(), "name".into()];
    header.extend((1..=shape.c).map(|j| format!("incl_{}", class_names[j])));
    header.push("max_inclusion".into());
    header.push("retained".into());
    if emit_diff {
        header.push("inclusion_diff".into());
    }
    writeln!(file, "{}", header.join(",")).map_err(CliError::io)?;

    let mut retained = Vec::new();
    for row in &rows {
        let max = row.inclusion.iter().cloned().fold(0.0f64, f64::max);
        let keep = max > threshold;
        if keep {
            retained.push(row.name.clone());
        }
        let mut fields = vec![row.predictor.to_string(), row.name.clone()];
        fields.extend(row.inclusion.iter().map(|&v| fmt(v)));
        fields.push(fmt(max));
        fields.push(u8::from(keep).to_string());
        if emit_diff {
            fields.push(fmt(row.inclusion[0] - row.inclusion[1]));
        }
        writeln!(file, "{}", fields.join(",")).map_err(CliError::io)?;
    }
    drop(file);

    let mut subset = std::io::BufWriter::new(
        std::fs::File::create(dir.join("screen_retained.csv")).map_err(CliError::io)?,
    );
    writeln!(subset, "name").map_err(CliError::io)?;
    for name in &retained {
        writeln!(subset, "{name}").map_err(CliError::io)?;
    }
    drop(subset);

    let metadata = ScreenMetadata {
        command: "screen".into(),
        predictors: shape.p,
        threshold,
        retained: retained.len(),
        wall_seconds: started.elapsed().as_secs_f64(),
        config: cfg.clone(),
    };
    std::fs::write(
        dir.join("metadata.toml"),
        toml::to_string_pretty(&metadata)
            .map_err(|e| CliError::runtime(format!("cannot serialize metadata: {e}")))?,
    )
    .map_err(CliError::io)?;

    println!(
        "screened {} predictors, retained {} at threshold {}; artifacts in {}",
        shape.p,
        retained.len(),
        threshold,
        dir.display()
    );
    Ok(())
}
