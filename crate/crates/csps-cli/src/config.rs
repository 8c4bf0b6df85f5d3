//! Run configuration: a single TOML file with model / sampler / data /
//! output blocks (plus command-specific cv and screen blocks), overridable
//! by command-line flags. The resolved configuration is echoed into the run
//! metadata so any run can be reproduced bit for bit.

use serde::{Deserialize, Serialize};

use csps::model::Hyperparameters;
use csps::sampler::{ChainConfig, StartModel};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelBlock,
    #[serde(default)]
    pub sampler: SamplerBlock,
    #[serde(default)]
    pub data: DataBlock,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub cv: CvBlock,
    #[serde(default)]
    pub screen: ScreenBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelBlock {
    /// Label mapped to class 0; defaults to the first label in sorted order.
    pub reference_class: Option<String>,
    /// Indicator column coupling ρ ∈ [0, 1]; 1 selects whole predictors.
    pub rho: f64,
    /// Within-row prior spread τ². 4 suits standardized predictors; 25 is
    /// the diffuse choice. Selection quality is sensitive to this knob, so
    /// it is surfaced here rather than buried in code.
    pub tau2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Optional override of the intercept prior center (defaults to the
    /// uniform-simplex value for the class count at hand).
    pub mu0: Option<f64>,
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self {
            reference_class: None,
            rho: 0.0,
            tau2: 4.0,
            gamma1: 5.0,
            gamma2: 15.0,
            mu0: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerBlock {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// One seed per chain; explicit, never wall-clock derived.
    pub seeds: Vec<u64>,
    /// One start per chain: "empty", "full", or "random". A single entry is
    /// broadcast across chains.
    pub starts: Vec<String>,
    pub q_proposal_scale: f64,
    /// Worker threads for chains and folds; 0 = available parallelism.
    pub workers: usize,
}

impl Default for SamplerBlock {
    fn default() -> Self {
        Self {
            iterations: 30_000,
            burn_in: 10_000,
            thin: 10,
            seeds: vec![1],
            starts: vec!["empty".into()],
            q_proposal_scale: 0.5,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct DataBlock {
    /// CSV input path; mutually exclusive with `scenario`.
    pub input: Option<String>,
    /// Synthetic benchmark number (1 or 2); mutually exclusive with `input`.
    pub scenario: Option<u32>,
    pub scenario_seed: Option<u64>,
    pub label_column: Option<String>,
    /// Standardize predictor columns before fitting (training-fold
    /// parameters are reused on held-out data).
    pub standardize: Option<bool>,
    pub rbf: Option<RbfBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbfBlock {
    /// Number of knots drawn from the (training) covariate rows.
    pub knots: usize,
    #[serde(default = "default_bandwidth")]
    pub bandwidth: f64,
    #[serde(default = "default_knot_seed")]
    pub knot_seed: u64,
}

fn default_bandwidth() -> f64 {
    4.0
}

fn default_knot_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: String,
    /// Artifact groups to emit; defaults to everything.
    pub emit: Vec<String>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            emit: vec![
                "inclusion".into(),
                "beta".into(),
                "median-model".into(),
                "q-trace".into(),
                "m-draws".into(),
                "beta-draws".into(),
                "diagnostics".into(),
            ],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvBlock {
    /// "kfold", "loocv", or "repeated-split".
    pub mode: String,
    pub k: usize,
    /// Number of repeated random splits.
    pub count: usize,
    /// Training fraction for repeated splits.
    pub fraction: f64,
    pub split_seed: u64,
}

impl Default for CvBlock {
    fn default() -> Self {
        Self {
            mode: "kfold".into(),
            k: 10,
            count: 25,
            fraction: 0.5,
            split_seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScreenBlock {
    /// Retention threshold on the per-class inclusion probability.
    pub threshold: f64,
}

impl Default for ScreenBlock {
    fn default() -> Self {
        Self { threshold: 0.5 }
    }
}

impl RunConfig {
    pub fn load(path: &str) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read config {path}: {e}")))?;
        toml::from_str(&text)
            .map_err(|e| CliError::validation(format!("cannot parse config {path}: {e}")))
    }

    pub fn parse_starts(&self) -> Result<Vec<StartModel>, CliError> {
        let parse = |s: &str| -> Result<StartModel, CliError> {
            match s {
                "empty" => Ok(StartModel::Empty),
                "full" => Ok(StartModel::Full),
                "random" => Ok(StartModel::Random),
                other => Err(CliError::validation(format!(
                    "unknown start model '{other}' (expected empty|full|random)"
                ))),
            }
        };
        let n = self.sampler.seeds.len();
        if n == 0 {
            return Err(CliError::validation("sampler.seeds must not be empty".into()));
        }
        let starts = &self.sampler.starts;
        if starts.len() == 1 {
            let one = parse(&starts[0])?;
            return Ok(vec![one; n]);
        }
        if starts.len() != n {
            return Err(CliError::validation(format!(
                "{} starts for {} seeds; give one start or one per chain",
                starts.len(),
                n
            )));
        }
        starts.iter().map(|s| parse(s)).collect()
    }

    /// Hyperparameters for a problem with c classes and p predictors.
    pub fn hyperparameters(&self, c: usize, p: usize) -> Result<Hyperparameters, CliError> {
        let mut hp = Hyperparameters::with_default_mu(
            c,
            p,
            self.model.tau2,
            self.model.rho,
            self.model.gamma1,
            self.model.gamma2,
        )
        .map_err(CliError::from)?;
        if let Some(mu0) = self.model.mu0 {
            hp.mu[0] = mu0;
            hp.validate(p).map_err(CliError::from)?;
        }
        Ok(hp)
    }

    /// One ChainConfig per configured chain.
    pub fn chain_configs(&self, c: usize, p: usize) -> Result<Vec<ChainConfig>, CliError> {
        let hp = self.hyperparameters(c, p)?;
        let starts = self.parse_starts()?;
        Ok(self
            .sampler
            .seeds
            .iter()
            .zip(starts)
            .map(|(&seed, start)| ChainConfig {
                iterations: self.sampler.iterations,
                burn_in: self.sampler.burn_in,
                thin: self.sampler.thin,
                seed,
                q_proposal_scale: self.sampler.q_proposal_scale,
                start,
                hp: hp.clone(),
            })
            .collect())
    }

    pub fn emits(&self, group: &str) -> bool {
        self.output.emit.iter().any(|e| e == group)
    }
}
