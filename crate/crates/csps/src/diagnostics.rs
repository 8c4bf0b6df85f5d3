//! MCMC mixing diagnostics on thinned indicator draws, plus classification
//! scoring.

use crate::error::{Error, Result};
use crate::estimators::InclusionMatrix;
use crate::model::IndicatorMatrix;

/// Per-entry switch rates Ŝ_jk ∈ [0,1] over a thinned draw sequence; the
/// intercept column never switches and is identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchMatrix {
    c: usize,
    p: usize,
    entries: Vec<f64>,
}

impl SwitchMatrix {
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
}

/// Fraction of consecutive thinned draws in which each indicator entry
/// differs from its predecessor.
pub fn switch_rates(m_draws: &[IndicatorMatrix]) -> Result<SwitchMatrix> {
    if m_draws.len() < 2 {
        return Err(Error::Data(format!(
            "switch rates need at least 2 thinned draws, got {}",
            m_draws.len()
        )));
    }
    let (c, p) = (m_draws[0].classes(), m_draws[0].predictors());
    let mut switches = vec![0u64; c * (p + 1)];
    for pair in m_draws.windows(2) {
        for j in 0..c {
            for k in 1..=p {
                if pair[0].get(j, k) != pair[1].get(j, k) {
                    switches[j * (p + 1) + k] += 1;
                }
            }
        }
    }
    let pairs = (m_draws.len() - 1) as f64;
    let entries = switches.into_iter().map(|s| s as f64 / pairs).collect();
    Ok(SwitchMatrix { c, p, entries })
}

/// The i.i.d.-sampling reference 2M̂_jk(1 − M̂_jk): the switch rate an
/// independent Bernoulli sequence with the same inclusion frequency would
/// show. Thinned output of a well-mixing reversible chain falls below it.
pub fn iid_switch_reference(mhat: &InclusionMatrix) -> SwitchMatrix {
    let (c, p) = (mhat.classes(), mhat.predictors());
    let mut entries = vec![0.0; c * (p + 1)];
    for j in 0..c {
        for k in 1..=p {
            let m = mhat.get(j, k);
            entries[j * (p + 1) + k] = 2.0 * m * (1.0 - m);
        }
    }
    SwitchMatrix { c, p, entries }
}

/// Agreement summary between two inclusion estimates (typically chains with
/// different starts), with the scatter pairs exported for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport {
    pub max_abs_diff: f64,
    pub rms_diff: f64,
    /// (class, column, M̂ᵃ, M̂ᵇ) per non-intercept entry.
    pub pairs: Vec<(usize, usize, f64, f64)>,
}

/// Compare two inclusion estimates entrywise; symmetric in its arguments up
/// to the order inside each scatter pair.
pub fn chain_agreement(a: &InclusionMatrix, b: &InclusionMatrix) -> Result<AgreementReport> {
    if a.classes() != b.classes() || a.predictors() != b.predictors() {
        return Err(Error::Shape(format!(
            "inclusion matrices are {}×{} and {}×{}",
            a.classes(),
            a.predictors() + 1,
            b.classes(),
            b.predictors() + 1
        )));
    }
    let mut pairs = Vec::new();
    let mut max_abs: f64 = 0.0;
    let mut sum_sq = 0.0;
    for j in 0..a.classes() {
        for k in 1..=a.predictors() {
            let (va, vb) = (a.get(j, k), b.get(j, k));
            let diff = va - vb;
            max_abs = max_abs.max(diff.abs());
            sum_sq += diff * diff;
            pairs.push((j, k, va, vb));
        }
    }
    let rms = (sum_sq / pairs.len() as f64).sqrt();
    Ok(AgreementReport {
        max_abs_diff: max_abs,
        rms_diff: rms,
        pairs,
    })
}

/// Fraction of predictions that disagree with the truth.
pub fn misclassification_rate(predictions: &[usize], truth: &[usize]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} truths",
            predictions.len(),
            truth.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Data("cannot score an empty prediction set".into()));
    }
    let errors = predictions
        .iter()
        .zip(truth)
        .filter(|(p, t)| p != t)
        .count();
    Ok(errors as f64 / predictions.len() as f64)
}

/// (c+1)×(c+1) confusion counts: rows are truth, columns predictions.
pub fn confusion_matrix(
    predictions: &[usize],
    truth: &[usize],
    n_classes: usize,
) -> Result<Vec<Vec<u64>>> {
    if predictions.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} truths",
            predictions.len(),
            truth.len()
        )));
    }
    let mut counts = vec![vec![0u64; n_classes]; n_classes];
    for (&pred, &t) in predictions.iter().zip(truth) {
        if pred >= n_classes || t >= n_classes {
            return Err(Error::Data(format!(
                "class index out of range for {n_classes} classes"
            )));
        }
        counts[t][pred] += 1;
    }
    Ok(counts)
}
