//! CSV and TOML artifact writers/readers. Numerics are serialized with 17
//! significant digits so every value round-trips exactly.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use csps::data::{Dataset, LabelMap, RbfConfig, Standardization};
use csps::estimators::InclusionMatrix;
use csps::model::{CoefficientMatrix, IndicatorMatrix};
use csps::sampler::ChainOutput;

use crate::CliError;

pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", parent.display())))?;
    }
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(std::io::BufWriter::new(file))
}

fn matrix_header(p: usize) -> String {
    let mut fields = vec!["class".to_string()];
    fields.extend((0..=p).map(|k| format!("col{k}")));
    fields.join(",")
}

pub fn write_real_matrix<F: Fn(usize, usize) -> f64>(
    path: &Path,
    c: usize,
    p: usize,
    value: F,
) -> Result<(), CliError> {
    let mut out = create(path)?;
    writeln!(out, "{}", matrix_header(p)).map_err(CliError::io)?;
    for j in 0..c {
        let mut fields = vec![j.to_string()];
        fields.extend((0..=p).map(|k| fmt(value(j, k))));
        writeln!(out, "{}", fields.join(",")).map_err(CliError::io)?;
    }
    Ok(())
}

pub fn write_indicator_matrix(path: &Path, m: &IndicatorMatrix) -> Result<(), CliError> {
    let mut out = create(path)?;
    writeln!(out, "{}", matrix_header(m.predictors())).map_err(CliError::io)?;
    for j in 0..m.classes() {
        let mut fields = vec![j.to_string()];
        fields.extend((0..=m.predictors()).map(|k| u8::from(m.get(j, k)).to_string()));
        writeln!(out, "{}", fields.join(",")).map_err(CliError::io)?;
    }
    Ok(())
}

/// Scatter-pair CSV with the documented columns row, col, x, y.
pub fn write_scatter(path: &Path, pairs: &[(usize, usize, f64, f64)]) -> Result<(), CliError> {
    let mut out = create(path)?;
    writeln!(out, "row,col,x,y").map_err(CliError::io)?;
    for &(row, col, x, y) in pairs {
        writeln!(out, "{row},{col},{},{}", fmt(x), fmt(y)).map_err(CliError::io)?;
    }
    Ok(())
}

pub fn write_q_trace(path: &Path, outputs: &[ChainOutput]) -> Result<(), CliError> {
    let mut out = create(path)?;
    writeln!(out, "chain,draw,q").map_err(CliError::io)?;
    for (chain, output) in outputs.iter().enumerate() {
        for (draw, q) in output.q_draws.iter().enumerate() {
            writeln!(out, "{chain},{draw},{}", fmt(*q)).map_err(CliError::io)?;
        }
    }
    Ok(())
}

pub fn write_m_draws(path: &Path, output: &ChainOutput) -> Result<(), CliError> {
    let mut out = create(path)?;
    let first = output
        .m_draws
        .first()
        .ok_or_else(|| CliError::runtime("chain produced no draws".into()))?;
    let (c, p) = (first.classes(), first.predictors());
    let mut header = vec!["draw".to_string()];
    for j in 0..c {
        for k in 0..=p {
            header.push(format!("m_{j}_{k}"));
        }
    }
    writeln!(out, "{}", header.join(",")).map_err(CliError::io)?;
    for (d, m) in output.m_draws.iter().enumerate() {
        let mut fields = vec![d.to_string()];
        for j in 0..c {
            for k in 0..=p {
                fields.push(u8::from(m.get(j, k)).to_string());
            }
        }
        writeln!(out, "{}", fields.join(",")).map_err(CliError::io)?;
    }
    Ok(())
}

pub fn read_m_draws(path: &Path) -> Result<Vec<IndicatorMatrix>, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::validation(format!("bad header in {}: {e}", path.display())))?
        .clone();
    // Header cells look like m_<class>_<column>; infer the shape.
    let mut c = 0usize;
    let mut p = 0usize;
    for h in headers.iter().skip(1) {
        let mut parts = h.splitn(3, '_');
        let (_, j, k) = (parts.next(), parts.next(), parts.next());
        let (Some(j), Some(k)) = (j, k) else {
            return Err(CliError::validation(format!(
                "unexpected column '{h}' in {}",
                path.display()
            )));
        };
        let j: usize = j
            .parse()
            .map_err(|_| CliError::validation(format!("bad class index in '{h}'")))?;
        let k: usize = k
            .parse()
            .map_err(|_| CliError::validation(format!("bad column index in '{h}'")))?;
        c = c.max(j + 1);
        p = p.max(k);
    }
    let mut draws = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| CliError::validation(format!("bad row in {}: {e}", path.display())))?;
        let mut m = IndicatorMatrix::empty(c, p);
        for (cell, header) in record.iter().skip(1).zip(headers.iter().skip(1)) {
            let mut parts = header.splitn(3, '_');
            parts.next();
            let j: usize = parts.next().unwrap().parse().unwrap();
            let k: usize = parts.next().unwrap().parse().unwrap();
            if k >= 1 && cell.trim() == "1" {
                m.set(j, k, true);
            }
        }
        draws.push(m);
    }
    Ok(draws)
}

pub fn write_beta_draws(path: &Path, output: &ChainOutput) -> Result<(), CliError> {
    let mut out = create(path)?;
    let first = output
        .beta_draws
        .first()
        .ok_or_else(|| CliError::runtime("chain produced no draws".into()))?;
    let (c, p) = (first.classes(), first.predictors());
    let mut header = vec!["draw".to_string()];
    for j in 0..c {
        for k in 0..=p {
            header.push(format!("b_{j}_{k}"));
        }
    }
    writeln!(out, "{}", header.join(",")).map_err(CliError::io)?;
    for (d, b) in output.beta_draws.iter().enumerate() {
        let mut fields = vec![d.to_string()];
        for j in 0..c {
            for k in 0..=p {
                fields.push(fmt(b.get(j, k)));
            }
        }
        writeln!(out, "{}", fields.join(",")).map_err(CliError::io)?;
    }
    Ok(())
}

pub fn read_beta_draws(path: &Path) -> Result<Vec<CoefficientMatrix>, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::validation(format!("bad header in {}: {e}", path.display())))?
        .clone();
    let mut c = 0usize;
    let mut p = 0usize;
    for h in headers.iter().skip(1) {
        let mut parts = h.splitn(3, '_');
        parts.next();
        let (Some(j), Some(k)) = (parts.next(), parts.next()) else {
            return Err(CliError::validation(format!(
                "unexpected column '{h}' in {}",
                path.display()
            )));
        };
        let j: usize = j
            .parse()
            .map_err(|_| CliError::validation(format!("bad class index in '{h}'")))?;
        let k: usize = k
            .parse()
            .map_err(|_| CliError::validation(format!("bad column index in '{h}'")))?;
        c = c.max(j + 1);
        p = p.max(k);
    }
    let mut draws = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| CliError::validation(format!("bad row in {}: {e}", path.display())))?;
        let mut b = CoefficientMatrix::zeros(c, p);
        for (cell, header) in record.iter().skip(1).zip(headers.iter().skip(1)) {
            let mut parts = header.splitn(3, '_');
            parts.next();
            let j: usize = parts.next().unwrap().parse().unwrap();
            let k: usize = parts.next().unwrap().parse().unwrap();
            let v: f64 = cell.trim().parse().map_err(|_| {
                CliError::validation(format!("non-numeric cell in {}", path.display()))
            })?;
            b.set(j, k, v);
        }
        draws.push(b);
    }
    Ok(draws)
}

pub fn write_inclusion(path: &Path, mhat: &InclusionMatrix) -> Result<(), CliError> {
    write_real_matrix(path, mhat.classes(), mhat.predictors(), |j, k| mhat.get(j, k))
}

/// Everything predict needs to map raw covariates into model features and
/// class indices back to labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransformSpec {
    pub label_names: Vec<String>,
    pub predictor_names: Vec<String>,
    pub label_column: String,
    pub standardization: Option<StandardizationSpec>,
    pub rbf: Option<RbfSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StandardizationSpec {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RbfSpec {
    pub bandwidth: f64,
    pub offsets: Vec<f64>,
    pub scales: Vec<f64>,
    pub knots: Vec<Vec<f64>>,
}

impl TransformSpec {
    pub fn new(
        data: &Dataset,
        label_column: &str,
        standardization: Option<&Standardization>,
        rbf: Option<&RbfConfig>,
        raw_predictor_names: Vec<String>,
    ) -> Self {
        Self {
            label_names: data.label_map.names.clone(),
            predictor_names: raw_predictor_names,
            label_column: label_column.to_string(),
            standardization: standardization.map(|s| StandardizationSpec {
                shift: s.shift.clone(),
                scale: s.scale.clone(),
            }),
            rbf: rbf.map(|r| RbfSpec {
                bandwidth: r.bandwidth,
                offsets: r.offsets.clone(),
                scales: r.scales.clone(),
                knots: r.knots.clone(),
            }),
        }
    }

    pub fn standardization(&self) -> Option<Standardization> {
        self.standardization.as_ref().map(|s| Standardization {
            shift: s.shift.clone(),
            scale: s.scale.clone(),
        })
    }

    pub fn rbf_config(&self) -> Option<RbfConfig> {
        self.rbf.as_ref().map(|r| RbfConfig {
            knots: r.knots.clone(),
            bandwidth: r.bandwidth,
            offsets: r.offsets.clone(),
            scales: r.scales.clone(),
        })
    }

    pub fn label_map(&self) -> LabelMap {
        LabelMap {
            names: self.label_names.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| CliError::runtime(format!("cannot serialize transform: {e}")))?;
        std::fs::write(path, text)
            .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
    }

    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join("transform.toml");
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::validation(format!("cannot parse {}: {e}", path.display())))
    }
}

pub fn beta_draw_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", dir.display())))?;
    for entry in entries {
        let entry = entry.map_err(CliError::io)?;
        let name = entry.file_name().to_string_lossy().to_string();
        if name.starts_with("beta_draws_") && name.ends_with(".csv") {
            files.push(entry.path());
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(CliError::validation(format!(
            "no beta_draws_*.csv artifacts in {}",
            dir.display()
        )));
    }
    Ok(files)
}

pub fn m_draw_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", dir.display())))?;
    for entry in entries {
        let entry = entry.map_err(CliError::io)?;
        let name = entry.file_name().to_string_lossy().to_string();
        if name.starts_with("m_draws_") && name.ends_with(".csv") {
            files.push(entry.path());
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(CliError::validation(format!(
            "no m_draws_*.csv artifacts in {}",
            dir.display()
        )));
    }
    Ok(files)
}
