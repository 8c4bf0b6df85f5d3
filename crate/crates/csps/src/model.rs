//! Domain types for the selection model and every prior-density /
//! prior-sampling computation over (β, M, q).

use rand::Rng;

use crate::error::{Error, Result};
use crate::math::{logsumexp2, normal_quantile};

/// Dimensions of a problem instance: n units, c non-reference classes
/// (c+1 classes in total), p predictors. The design matrix has p+1 columns
/// with column 0 the intercept of ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProblemShape {
    pub n: usize,
    pub c: usize,
    pub p: usize,
}

impl ProblemShape {
    pub fn new(n: usize, c: usize, p: usize) -> Result<Self> {
        if c < 1 {
            return Err(Error::Config(format!(
                "need at least one non-reference class, got c = {c}"
            )));
        }
        if p < 1 {
            return Err(Error::Config(format!(
                "need at least one predictor, got p = {p}"
            )));
        }
        Ok(Self { n, c, p })
    }
}

/// User-specified hyperparameters of the hierarchical prior.
///
/// `mu` has length p+1 (coefficient prior centers), `tau2` is the per-row
/// prior spread τ², `rho` the within-column indicator coupling, and
/// (`gamma1`, `gamma2`) shape the Beta prior on the active proportion q.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    pub mu: Vec<f64>,
    pub tau2: f64,
    pub rho: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl Hyperparameters {
    /// Default centers: intercept at [`default_intercept_mean`], everything
    /// else at zero.
    pub fn with_default_mu(c: usize, p: usize, tau2: f64, rho: f64, gamma1: f64, gamma2: f64) -> Result<Self> {
        let mut mu = vec![0.0; p + 1];
        mu[0] = default_intercept_mean(c);
        let hp = Self {
            mu,
            tau2,
            rho,
            gamma1,
            gamma2,
        };
        hp.validate(p)?;
        Ok(hp)
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.mu.len() != p + 1 {
            return Err(Error::Config(format!(
                "mu has length {}, expected p+1 = {}",
                self.mu.len(),
                p + 1
            )));
        }
        if !(self.tau2 > 0.0) {
            return Err(Error::Config(format!("tau2 must be > 0, got {}", self.tau2)));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::Config(format!("rho must lie in [0,1], got {}", self.rho)));
        }
        if !(self.gamma1 > 0.0) || !(self.gamma2 > 0.0) {
            return Err(Error::Config(format!(
                "Beta shape parameters must be > 0, got ({}, {})",
                self.gamma1, self.gamma2
            )));
        }
        if self.mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::Config("mu entries must be finite".into()));
        }
        Ok(())
    }

    /// Prior mean of q.
    pub fn q_prior_mean(&self) -> f64 {
        self.gamma1 / (self.gamma1 + self.gamma2)
    }
}

/// Binary activity pattern M of the coefficient matrix: c×(p+1), with the
/// intercept column structurally fixed at ones.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndicatorMatrix {
    c: usize,
    p: usize,
    entries: Vec<bool>,
}

impl IndicatorMatrix {
    /// Intercept-only model.
    pub fn empty(c: usize, p: usize) -> Self {
        let mut m = Self {
            c,
            p,
            entries: vec![false; c * (p + 1)],
        };
        for j in 0..c {
            m.entries[j * (p + 1)] = true;
        }
        m
    }

    /// All entries active.
    pub fn full(c: usize, p: usize) -> Self {
        Self {
            c,
            p,
            entries: vec![true; c * (p + 1)],
        }
    }

    pub fn classes(&self) -> usize {
        self.c
    }

    pub fn predictors(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, class: usize, column: usize) -> bool {
        self.entries[class * (self.p + 1) + column]
    }

    /// Set a non-intercept entry. Column 0 is structurally constant and
    /// rejecting writes to it keeps the M•0 = 1 invariant unconditional.
    #[inline]
    pub fn set(&mut self, class: usize, column: usize, value: bool) {
        assert!(column >= 1, "intercept column is fixed active");
        self.entries[class * (self.p + 1) + column] = value;
    }

    #[inline]
    pub fn toggle(&mut self, class: usize, column: usize) {
        assert!(column >= 1, "intercept column is fixed active");
        let idx = class * (self.p + 1) + column;
        self.entries[idx] = !self.entries[idx];
    }

    /// M_j+ : number of active coefficients in a class row, intercept included.
    pub fn row_active_count(&self, class: usize) -> usize {
        let base = class * (self.p + 1);
        self.entries[base..base + self.p + 1]
            .iter()
            .filter(|&&b| b)
            .count()
    }

    /// Ascending indices of the active columns in a class row (always starts
    /// with 0).
    pub fn active_columns(&self, class: usize) -> Vec<usize> {
        let base = class * (self.p + 1);
        (0..=self.p).filter(|&k| self.entries[base + k]).collect()
    }

    /// M+k : number of active entries in a non-intercept column.
    pub fn column_active_count(&self, column: usize) -> usize {
        (0..self.c).filter(|&j| self.get(j, column)).count()
    }
}

/// Real-valued coefficient matrix β, c×(p+1) row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    c: usize,
    p: usize,
    entries: Vec<f64>,
}

impl CoefficientMatrix {
    pub fn zeros(c: usize, p: usize) -> Self {
        Self {
            c,
            p,
            entries: vec![0.0; c * (p + 1)],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let c = rows.len();
        if c == 0 {
            return Err(Error::Shape("coefficient matrix needs at least one row".into()));
        }
        let width = rows[0].len();
        if width < 2 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::Shape("coefficient rows must share length p+1 >= 2".into()));
        }
        Ok(Self {
            c,
            p: width - 1,
            entries: rows.into_iter().flatten().collect(),
        })
    }

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

    #[inline]
    pub fn set(&mut self, class: usize, column: usize, value: f64) {
        self.entries[class * (self.p + 1) + column] = value;
    }

    pub fn row(&self, class: usize) -> &[f64] {
        let base = class * (self.p + 1);
        &self.entries[base..base + self.p + 1]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// Prior intercept center Φ⁻¹{1 − (c+1)^(−1/c)}: with every class mean at
/// this value the implied class distribution is uniform over {0, …, c}.
pub fn default_intercept_mean(c: usize) -> f64 {
    assert!(c >= 1, "need at least one non-reference class");
    let cf = c as f64;
    let p = 1.0 - (cf + 1.0).powf(-1.0 / cf);
    normal_quantile(p)
}

/// Entrywise prior mean and variance of β given M: mean μ_k·M_jk, variance
/// τ²/M_j+ on active entries and 0 elsewhere, so each row's variances sum to
/// τ² exactly.
pub fn prior_moments(
    m: &IndicatorMatrix,
    hp: &Hyperparameters,
) -> (CoefficientMatrix, CoefficientMatrix) {
    let (c, p) = (m.classes(), m.predictors());
    let mut mean = CoefficientMatrix::zeros(c, p);
    let mut var = CoefficientMatrix::zeros(c, p);
    for j in 0..c {
        let row_var = hp.tau2 / m.row_active_count(j) as f64;
        for k in 0..=p {
            if m.get(j, k) {
                mean.set(j, k, hp.mu[k]);
                var.set(j, k, row_var);
            }
        }
    }
    (mean, var)
}

/// Mixture component probabilities of the column prior.
#[inline]
pub(crate) fn column_mixture_probs(q: f64, rho: f64) -> (f64, f64) {
    let s = rho.sqrt();
    ((1.0 - s) * q, (1.0 - s) * q + s)
}

/// Log prior contribution of one non-intercept column with `active` of `c`
/// entries set, under mixing proportion q and coupling rho.
///
/// ρ = 1 is the degenerate all-or-nothing mixture and is special-cased so no
/// 0·log 0 ever forms; mixed columns get −∞ there.
pub fn log_prior_column_count(active: usize, c: usize, q: f64, rho: f64) -> f64 {
    debug_assert!(active <= c);
    debug_assert!(q > 0.0 && q < 1.0, "column prior needs q in (0,1), got {q}");
    if rho >= 1.0 {
        return if active == 0 {
            (-q).ln_1p()
        } else if active == c {
            q.ln()
        } else {
            f64::NEG_INFINITY
        };
    }
    let (p0, p1) = column_mixture_probs(q, rho);
    let a = active as f64;
    let rest = (c - active) as f64;
    // p0 = 0 only at q = 0 (excluded); p1 = 1 only at q = 1 (excluded).
    let term0 = (-q).ln_1p() + a * p0.ln() + rest * (-p0).ln_1p();
    let term1 = q.ln() + a * p1.ln() + rest * (-p1).ln_1p();
    logsumexp2(term0, term1)
}

/// Log prior density of M given (q, ρ): the product over non-intercept
/// columns of the two-component mixture. −∞ is a legal value signaling zero
/// prior mass (mixed columns at ρ = 1).
pub fn log_prior_indicator(m: &IndicatorMatrix, q: f64, rho: f64) -> f64 {
    let mut total = 0.0;
    for k in 1..=m.predictors() {
        total += log_prior_column_count(m.column_active_count(k), m.classes(), q, rho);
        if total == f64::NEG_INFINITY {
            return total;
        }
    }
    total
}

/// Draw an indicator matrix from the column-mixture prior: each non-intercept
/// column independently picks the sparse (probability 1−q) or dense
/// (probability q) Bernoulli component. Marginally Pr(M_jk = 1) = q and
/// within-column correlation is ρ.
pub fn sample_indicator_prior<R: Rng + ?Sized>(
    shape: &ProblemShape,
    q: f64,
    rho: f64,
    rng: &mut R,
) -> IndicatorMatrix {
    assert!(q > 0.0 && q < 1.0, "prior draw needs q in (0,1), got {q}");
    let (p0, p1) = column_mixture_probs(q, rho);
    let mut m = IndicatorMatrix::empty(shape.c, shape.p);
    for k in 1..=shape.p {
        let component = if rng.random::<f64>() < q { p1 } else { p0 };
        for j in 0..shape.c {
            if rng.random::<f64>() < component {
                m.set(j, k, true);
            }
        }
    }
    m
}

/// All 2^(c·p) indicator matrices for a small shape, for enumeration oracles.
pub fn enumerate_indicators(c: usize, p: usize) -> Vec<IndicatorMatrix> {
    let bits = c * p;
    assert!(bits <= 20, "enumeration only intended for tiny shapes");
    (0..1usize << bits)
        .map(|code| {
            let mut m = IndicatorMatrix::empty(c, p);
            for b in 0..bits {
                if code >> b & 1 == 1 {
                    m.set(b / p, 1 + b % p, true);
                }
            }
            m
        })
        .collect()
}
