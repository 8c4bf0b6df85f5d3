use std::path::Path;

use csps::diagnostics::{chain_agreement, iid_switch_reference, switch_rates};
use csps::estimators::InclusionMatrix;
use csps::model::IndicatorMatrix;

use crate::artifacts::{m_draw_files, read_m_draws, write_scatter};
use crate::CliError;

fn inclusion_of(draws: &[IndicatorMatrix]) -> Result<InclusionMatrix, CliError> {
    let (c, p) = (draws[0].classes(), draws[0].predictors());
    let mut sums = vec![0.0f64; c * (p + 1)];
    for m in draws {
        for j in 0..c {
            for k in 0..=p {
                if m.get(j, k) {
                    sums[j * (p + 1) + k] += 1.0;
                }
            }
        }
    }
    for s in &mut sums {
        *s /= draws.len() as f64;
    }
    InclusionMatrix::from_entries(c, p, sums).map_err(CliError::from)
}

pub fn run(artifacts: &str) -> Result<(), CliError> {
    let dir = Path::new(artifacts);
    let files = m_draw_files(dir)?;

    let mut inclusions = Vec::new();
    for (i, file) in files.iter().enumerate() {
        let draws = read_m_draws(file)?;
        if draws.len() < 2 {
            return Err(CliError::validation(format!(
                "{} has fewer than 2 draws; switch rates are undefined",
                file.display()
            )));
        }
        let shat = switch_rates(&draws).map_err(CliError::from)?;
        let mhat = inclusion_of(&draws)?;
        let reference = iid_switch_reference(&mhat);
        let mut pairs = Vec::new();
        for j in 0..mhat.classes() {
            for k in 1..=mhat.predictors() {
                pairs.push((j, k, reference.get(j, k), shat.get(j, k)));
            }
        }
        write_scatter(&dir.join(format!("switch_rates_{i}.csv")), &pairs)?;
        inclusions.push(mhat);
    }

    if inclusions.len() >= 2 {
        let report = chain_agreement(&inclusions[0], &inclusions[1]).map_err(CliError::from)?;
        write_scatter(&dir.join("agreement.csv"), &report.pairs)?;
        println!(
            "agreement between chains 0 and 1: max |diff| = {:.4}, rms = {:.4}",
            report.max_abs_diff, report.rms_diff
        );
    } else {
        eprintln!("warning: single chain; skipping the agreement report");
    }
    println!(
        "diagnostics written for {} chain(s) in {}",
        files.len(),
        dir.display()
    );
    Ok(())
}
