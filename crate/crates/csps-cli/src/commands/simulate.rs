use std::path::Path;

use csps::data::{simulate_scenario1, simulate_scenario2};

use crate::artifacts::write_real_matrix;
use crate::commands::DEFAULT_LABEL_COLUMN;
use crate::CliError;

pub fn run(scenario: u32, seed: u64, out_dir: &str) -> Result<(), CliError> {
    let (data, truth) = match scenario {
        1 => simulate_scenario1(seed),
        2 => simulate_scenario2(seed),
        other => {
            return Err(CliError::validation(format!(
                "unknown scenario {other}; expected 1 or 2"
            )))
        }
    };
    let dir = Path::new(out_dir);
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::runtime(format!("cannot create {out_dir}: {e}")))?;
    data.write_csv(dir.join("dataset.csv"), DEFAULT_LABEL_COLUMN)?;
    write_real_matrix(
        &dir.join("true_beta.csv"),
        truth.classes(),
        truth.predictors(),
        |j, k| truth.get(j, k),
    )?;
    println!(
        "wrote scenario {scenario} (seed {seed}): {}/dataset.csv, {}/true_beta.csv",
        out_dir, out_dir
    );
    Ok(())
}
