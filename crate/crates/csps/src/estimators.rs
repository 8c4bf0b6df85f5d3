//! Posterior summaries and posterior-predictive classification.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::math::{integrate_adaptive, ln_normal_cdf, ln_normal_pdf};
use crate::model::{CoefficientMatrix, IndicatorMatrix};
use crate::sampler::{run_conditional_chain, ChainConfig, ChainOutput};

/// Marginal posterior inclusion frequencies M̂_jk ∈ [0,1], c×(p+1) with the
/// intercept column identically one.
#[derive(Debug, Clone, PartialEq)]
pub struct InclusionMatrix {
    c: usize,
    p: usize,
    entries: Vec<f64>,
}

impl InclusionMatrix {
    pub fn classes(&self) -> usize {
        self.c
    }

    pub fn predictors(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, class: usize, column: usize) -> f64 {
        self.entries[class * (self.p + 1) + column]
    }

    pub fn from_entries(c: usize, p: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != c * (p + 1) {
            return Err(Error::Shape("inclusion entries have the wrong length".into()));
        }
        if entries.iter().any(|&e| !(0.0..=1.0).contains(&e)) {
            return Err(Error::Data("inclusion probabilities must lie in [0,1]".into()));
        }
        Ok(Self { c, p, entries })
    }
}

/// A probability distribution over the c+1 classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistribution {
    probs: Vec<f64>,
}

impl ClassDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Modal class (smallest index on exact ties).
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (j, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = j;
            }
        }
        best
    }
}

/// Entrywise mean of the thinned indicator draws.
pub fn inclusion_probabilities(output: &ChainOutput) -> Result<InclusionMatrix> {
    pooled_inclusion_probabilities(std::slice::from_ref(output))
}

/// Inclusion frequencies pooled across chains, weighting every retained draw
/// equally.
pub fn pooled_inclusion_probabilities(outputs: &[ChainOutput]) -> Result<InclusionMatrix> {
    let draws: usize = outputs.iter().map(|o| o.m_draws.len()).sum();
    if draws == 0 {
        return Err(Error::Data("no indicator draws to average".into()));
    }
    let first = outputs
        .iter()
        .find_map(|o| o.m_draws.first())
        .expect("nonzero draw count");
    let (c, p) = (first.classes(), first.predictors());
    let mut sums = vec![0.0f64; c * (p + 1)];
    for out in outputs {
        for m in &out.m_draws {
            for j in 0..c {
                for k in 0..=p {
                    if m.get(j, k) {
                        sums[j * (p + 1) + k] += 1.0;
                    }
                }
            }
        }
    }
    for s in &mut sums {
        *s /= draws as f64;
    }
    InclusionMatrix::from_entries(c, p, sums)
}

/// Model-averaged posterior mean of β: the entrywise mean of the thinned
/// coefficient draws (zeros included with their posterior weight).
pub fn posterior_mean_beta(output: &ChainOutput) -> Result<CoefficientMatrix> {
    pooled_posterior_mean_beta(std::slice::from_ref(output))
}

/// Posterior-mean β pooled across chains.
pub fn pooled_posterior_mean_beta(outputs: &[ChainOutput]) -> Result<CoefficientMatrix> {
    let draws: usize = outputs.iter().map(|o| o.beta_draws.len()).sum();
    if draws == 0 {
        return Err(Error::Data("no coefficient draws to average".into()));
    }
    let first = outputs
        .iter()
        .find_map(|o| o.beta_draws.first())
        .expect("nonzero draw count");
    let (c, p) = (first.classes(), first.predictors());
    let mut mean = CoefficientMatrix::zeros(c, p);
    for out in outputs {
        for b in &out.beta_draws {
            for j in 0..c {
                for k in 0..=p {
                    mean.set(j, k, mean.get(j, k) + b.get(j, k));
                }
            }
        }
    }
    for j in 0..c {
        for k in 0..=p {
            mean.set(j, k, mean.get(j, k) / draws as f64);
        }
    }
    Ok(mean)
}

/// Median probability model: include exactly the pairs with M̂_jk ≥ 0.5.
/// An exact tie at 0.5 is included (it only arises from finite sampling, and
/// the inclusive rule is the conservative, richer-model choice).
pub fn median_probability_model(mhat: &InclusionMatrix) -> IndicatorMatrix {
    let mut m = IndicatorMatrix::empty(mhat.classes(), mhat.predictors());
    for j in 0..mhat.classes() {
        for k in 1..=mhat.predictors() {
            if mhat.get(j, k) >= 0.5 {
                m.set(j, k, true);
            }
        }
    }
    m
}

/// E(β | M = M*, D): posterior-mean coefficients from a conditional chain
/// with the model held fixed at M*.
pub fn conditional_beta_estimate(
    data: &Dataset,
    mstar: &IndicatorMatrix,
    config: &ChainConfig,
) -> Result<CoefficientMatrix> {
    let output = run_conditional_chain(data, mstar, config)?;
    posterior_mean_beta(&output)
}

/// Class probabilities under fixed coefficients for one predictor vector
/// (length p+1, leading 1).
///
/// With propensity means m_j = β_j•·x and unit latent noise:
/// P(Y=0) = ∏_j Φ(−m_j) and P(Y=j) = ∫₀^∞ φ(t−m_j) ∏_{k≠j} Φ(t−m_k) dt.
/// The orthant integrals run over (0, max(m̄,0)+10) with adaptive
/// Gauss–Legendre panels (200 nodes initially, refined to 1e−12); the
/// integrand is assembled in the log domain so extreme propensities stay
/// inside the representable range.
pub fn class_probabilities(beta: &CoefficientMatrix, x: &[f64]) -> Result<ClassDistribution> {
    let c = beta.classes();
    let p = beta.predictors();
    if x.len() != p + 1 {
        return Err(Error::Shape(format!(
            "predictor vector of length {} does not match p+1 = {}",
            x.len(),
            p + 1
        )));
    }
    if x[0] != 1.0 {
        return Err(Error::Data("predictor vector must carry a leading intercept 1".into()));
    }
    let means: Vec<f64> = (0..c)
        .map(|j| beta.row(j).iter().zip(x).map(|(b, v)| b * v).sum())
        .collect();
    Ok(class_probabilities_from_means(&means))
}

pub(crate) fn class_probabilities_from_means(means: &[f64]) -> ClassDistribution {
    let c = means.len();
    let p0 = means.iter().map(|&m| ln_normal_cdf(-m)).sum::<f64>().exp();
    let hi = means.iter().cloned().fold(0.0f64, f64::max) + 10.0;
    let mut probs = Vec::with_capacity(c + 1);
    probs.push(p0);
    for j in 0..c {
        let f = |t: f64| {
            let mut ln_val = ln_normal_pdf(t - means[j]);
            for (k, &mk) in means.iter().enumerate() {
                if k != j {
                    ln_val += ln_normal_cdf(t - mk);
                }
            }
            ln_val.exp()
        };
        probs.push(integrate_adaptive(&f, 0.0, hi, 10, 1e-12));
    }
    ClassDistribution { probs }
}

/// Model-averaged predictive distribution: the mean of the per-draw class
/// probabilities over the retained β draws.
pub fn predictive_distribution(output: &ChainOutput, x: &[f64]) -> Result<ClassDistribution> {
    pooled_predictive_distribution(std::slice::from_ref(output), x)
}

/// Predictive distribution pooled across chains.
pub fn pooled_predictive_distribution(
    outputs: &[ChainOutput],
    x: &[f64],
) -> Result<ClassDistribution> {
    let draws: usize = outputs.iter().map(|o| o.beta_draws.len()).sum();
    if draws == 0 {
        return Err(Error::Data("no coefficient draws to average".into()));
    }
    let mut acc: Option<Vec<f64>> = None;
    for out in outputs {
        for b in &out.beta_draws {
            let dist = class_probabilities(b, x)?;
            match &mut acc {
                None => acc = Some(dist.probs),
                Some(a) => {
                    for (s, v) in a.iter_mut().zip(&dist.probs) {
                        *s += v;
                    }
                }
            }
        }
    }
    let mut probs = acc.expect("nonzero draw count");
    for v in &mut probs {
        *v /= draws as f64;
    }
    Ok(ClassDistribution { probs })
}

/// Mean squared difference over all c×(p+1) coefficient entries.
pub fn average_squared_error(
    estimate: &CoefficientMatrix,
    truth: &CoefficientMatrix,
) -> Result<f64> {
    if estimate.classes() != truth.classes() || estimate.predictors() != truth.predictors() {
        return Err(Error::Shape(format!(
            "estimate is {}×{}, truth is {}×{}",
            estimate.classes(),
            estimate.predictors() + 1,
            truth.classes(),
            truth.predictors() + 1
        )));
    }
    let total: f64 = estimate
        .entries()
        .iter()
        .zip(truth.entries())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(total / estimate.entries().len() as f64)
}
