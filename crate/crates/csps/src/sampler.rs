//! The marginalized MCMC kernel over (Z, M, q) with β integrated out, plus
//! β post-processing draws and multi-chain orchestration.
//!
//! One iteration is the fixed composition Z → M → q: a systematic
//! truncated-normal sweep over the latent matrix, one toggle proposal per
//! class row (one column-block proposal at ρ = 1), and a logit random walk
//! for q (an exact Beta draw at ρ = 1). Class-row posteriors are kept as
//! Cholesky caches, updated incrementally inside a latent sweep and rebuilt
//! from fresh sufficient statistics at every indicator update so the state
//! never accumulates drift.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec;
use crate::gaussian::{
    log_marginal_from_posterior, posterior_from_parts, CoefficientPosterior, VARIANCE_FLOOR,
};
use crate::math::{ln_beta_pdf, sample_truncated_normal};
use crate::model::{
    log_prior_column_count, sample_indicator_prior, CoefficientMatrix, Hyperparameters,
    IndicatorMatrix, ProblemShape,
};

/// Initial indicator configuration of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartModel {
    /// Intercepts only.
    Empty,
    /// Every class-predictor pair active.
    Full,
    /// A draw from the indicator prior at q₀ = γ₁/(γ₁+γ₂).
    Random,
}

impl std::fmt::Display for StartModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StartModel::Empty => "empty",
            StartModel::Full => "full",
            StartModel::Random => "random",
        })
    }
}

/// Per-chain run configuration.
#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub q_proposal_scale: f64,
    pub start: StartModel,
    pub hp: Hyperparameters,
}

impl ChainConfig {
    pub fn validate(&self, shape: &ProblemShape) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::Config("thin must be >= 1".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "burn_in = {} must be smaller than iterations = {}",
                self.burn_in, self.iterations
            )));
        }
        if !(self.q_proposal_scale >= 0.0) || !self.q_proposal_scale.is_finite() {
            return Err(Error::Config(format!(
                "q proposal scale must be a finite nonnegative number, got {}",
                self.q_proposal_scale
            )));
        }
        self.hp.validate(shape.p)
    }

    /// Number of retained draws.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// Metropolis bookkeeping for a chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcceptanceStats {
    pub row_proposals: Vec<u64>,
    pub row_accepts: Vec<u64>,
    pub q_proposals: u64,
    pub q_accepts: u64,
}

impl AcceptanceStats {
    fn new(c: usize) -> Self {
        Self {
            row_proposals: vec![0; c],
            row_accepts: vec![0; c],
            q_proposals: 0,
            q_accepts: 0,
        }
    }
}

/// Thinned output of one chain.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub m_draws: Vec<IndicatorMatrix>,
    pub q_draws: Vec<f64>,
    pub beta_draws: Vec<CoefficientMatrix>,
    pub acceptance: AcceptanceStats,
    pub variance_floor_hits: u64,
    pub seed: u64,
    pub start: StartModel,
}

/// Truncation region S[y]: the latent vectors consistent with label y.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncationRegion {
    pub label: usize,
    pub classes: usize,
}

/// Region description for a label: y = 0 requires every propensity negative,
/// y > 0 requires Z_y strictly largest and positive.
pub fn truncation_region(y: usize, c: usize) -> Result<TruncationRegion> {
    if y > c {
        return Err(Error::Data(format!("label {y} out of range 0..={c}")));
    }
    Ok(TruncationRegion {
        label: y,
        classes: c,
    })
}

impl TruncationRegion {
    /// Membership test for a latent row (length c, coordinate j holding
    /// Z_{j+1}).
    pub fn contains(&self, z_row: &[f64]) -> bool {
        debug_assert_eq!(z_row.len(), self.classes);
        if self.label == 0 {
            return z_row.iter().all(|&z| z < 0.0);
        }
        let w = self.label - 1;
        let zw = z_row[w];
        zw > 0.0
            && z_row
                .iter()
                .enumerate()
                .all(|(j, &z)| j == w || z < zw)
    }

    /// Conditional interval for coordinate j given the other coordinates of
    /// the row: the values keeping the row inside the region.
    pub fn bounds(&self, j: usize, z_row: &[f64]) -> (f64, f64) {
        if self.label == 0 {
            return (f64::NEG_INFINITY, 0.0);
        }
        let w = self.label - 1;
        if j == w {
            let other_max = z_row
                .iter()
                .enumerate()
                .filter(|&(t, _)| t != w)
                .map(|(_, &z)| z)
                .fold(f64::NEG_INFINITY, f64::max);
            (other_max.max(0.0), f64::INFINITY)
        } else {
            (f64::NEG_INFINITY, z_row[w])
        }
    }
}

struct ClassCache {
    post: CoefficientPosterior,
    active: Vec<usize>,
}

/// Full state of one chain: the latent matrix, the indicator matrix, q, and
/// per-class coefficient-posterior caches consistent with (Z, M).
pub struct ChainState {
    pub z: DMatrix<f64>,
    pub m: IndicatorMatrix,
    pub q: f64,
    pub hp: Hyperparameters,
    pub q_proposal_scale: f64,
    pub acceptance: AcceptanceStats,
    pub variance_floor_hits: u64,
    caches: Vec<ClassCache>,
    gram: DMatrix<f64>,
}

impl ChainState {
    /// Initialize from a start model: M per the configuration, q at its prior
    /// mean, and Z built unit by unit inside its truncation region (winner
    /// first from N(0,1) truncated to (0,∞), the rest truncated below it).
    pub fn init<R: Rng + ?Sized>(
        data: &Dataset,
        config: &ChainConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let shape = data.shape();
        config.validate(&shape)?;
        let m = match config.start {
            StartModel::Empty => IndicatorMatrix::empty(shape.c, shape.p),
            StartModel::Full => IndicatorMatrix::full(shape.c, shape.p),
            StartModel::Random => {
                let q0 = config.hp.q_prior_mean();
                sample_indicator_prior(&shape, q0, config.hp.rho, rng)
            }
        };
        Self::init_with_model(data, config, m, rng)
    }

    /// Initialize with an explicitly fixed indicator matrix.
    pub fn init_with_model<R: Rng + ?Sized>(
        data: &Dataset,
        config: &ChainConfig,
        m: IndicatorMatrix,
        rng: &mut R,
    ) -> Result<Self> {
        let shape = data.shape();
        config.validate(&shape)?;
        if m.classes() != shape.c || m.predictors() != shape.p {
            return Err(Error::Shape(format!(
                "indicator matrix is {}×{}, data needs {}×{}",
                m.classes(),
                m.predictors() + 1,
                shape.c,
                shape.p + 1
            )));
        }
        if data.labels.iter().any(|&y| y > shape.c) {
            return Err(Error::Data("label outside the declared class range".into()));
        }

        let mut z = DMatrix::zeros(shape.n, shape.c);
        for i in 0..shape.n {
            let y = data.labels[i];
            if y > 0 {
                let w = y - 1;
                let zw = sample_truncated_normal(0.0, 1.0, 0.0, f64::INFINITY, rng);
                z[(i, w)] = zw;
                for j in 0..shape.c {
                    if j != w {
                        z[(i, j)] = sample_truncated_normal(0.0, 1.0, f64::NEG_INFINITY, zw, rng);
                    }
                }
            } else {
                for j in 0..shape.c {
                    z[(i, j)] = sample_truncated_normal(0.0, 1.0, f64::NEG_INFINITY, 0.0, rng);
                }
            }
        }

        let gram = data.design.transpose() * &data.design;
        let mut state = Self {
            z,
            m,
            q: config.hp.q_prior_mean(),
            hp: config.hp.clone(),
            q_proposal_scale: config.q_proposal_scale,
            acceptance: AcceptanceStats::new(shape.c),
            variance_floor_hits: 0,
            caches: Vec::new(),
            gram,
        };
        state.rebuild_caches(data)?;
        Ok(state)
    }

    fn row_prior(&self, active: &[usize]) -> (DVector<f64>, DVector<f64>) {
        let m_act = active.len();
        let mean = DVector::from_iterator(m_act, active.iter().map(|&k| self.hp.mu[k]));
        let var = DVector::from_element(m_act, self.hp.tau2 / m_act as f64);
        (mean, var)
    }

    fn gather_gram(&self, active: &[usize]) -> DMatrix<f64> {
        let m_act = active.len();
        DMatrix::from_fn(m_act, m_act, |a, b| self.gram[(active[a], active[b])])
    }

    fn gather_xtz(&self, t: &DMatrix<f64>, active: &[usize], class: usize) -> DVector<f64> {
        DVector::from_iterator(active.len(), active.iter().map(|&k| t[(k, class)]))
    }

    fn class_posterior(
        &self,
        t: &DMatrix<f64>,
        class: usize,
        active: &[usize],
    ) -> Result<CoefficientPosterior> {
        let (pm, pv) = self.row_prior(active);
        let gram_sub = self.gather_gram(active);
        let xtz = self.gather_xtz(t, active, class);
        posterior_from_parts(&gram_sub, &xtz, &pm, &pv)
    }

    /// Rebuild every class cache from fresh sufficient statistics.
    pub fn rebuild_caches(&mut self, data: &Dataset) -> Result<()> {
        let c = data.shape().c;
        let t = data.design.transpose() * &self.z;
        let mut caches = Vec::with_capacity(c);
        for j in 0..c {
            let active = self.m.active_columns(j);
            let post = self.class_posterior(&t, j, &active)?;
            caches.push(ClassCache { post, active });
        }
        self.caches = caches;
        Ok(())
    }

    /// Leave-one-out conditional moments for (unit, class) — exposed for
    /// verification against dense conditioning.
    pub fn latent_moments(&self, data: &Dataset, unit: usize, class: usize) -> Result<(f64, f64)> {
        let cache = &self.caches[class];
        let x = DVector::from_iterator(
            cache.active.len(),
            cache.active.iter().map(|&k| data.design[(unit, k)]),
        );
        let s = cache.post.smoother(&x);
        cache.post.latent_moments(&x, &s, self.z[(unit, class)])
    }
}

/// One systematic truncated-normal sweep over the latent matrix. Every entry
/// is redrawn from its exact conditional under the marginalized joint,
/// truncated so the unit's row stays inside its label's region; the class
/// caches are refreshed incrementally.
pub fn update_latents<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &Dataset,
    rng: &mut R,
) -> Result<()> {
    let shape = data.shape();
    let mut workspaces: Vec<(DVector<f64>, DVector<f64>)> = state
        .caches
        .iter()
        .map(|cache| {
            let m = cache.active.len();
            (DVector::zeros(m), DVector::zeros(m))
        })
        .collect();

    for i in 0..shape.n {
        let region = truncation_region(data.labels[i], shape.c)?;
        for j in 0..shape.c {
            let cache = &mut state.caches[j];
            let (x, s) = &mut workspaces[j];
            for (t, &col) in cache.active.iter().enumerate() {
                x[t] = data.design[(i, col)];
            }
            cache.post.smoother_into(x, s);
            let z_old = state.z[(i, j)];
            let (mean, var_raw) = cache.post.latent_moments(x, s, z_old)?;
            let var = if var_raw < VARIANCE_FLOOR {
                state.variance_floor_hits += 1;
                VARIANCE_FLOOR
            } else {
                var_raw
            };
            let row: Vec<f64> = (0..shape.c).map(|t| state.z[(i, t)]).collect();
            let (lo, hi) = region.bounds(j, &row);
            let z_new = sample_truncated_normal(mean, var.sqrt(), lo, hi, rng);
            cache.post.apply_latent_delta(x, s, z_new - z_old);
            state.z[(i, j)] = z_new;
        }
        #[cfg(debug_assertions)]
        {
            let row: Vec<f64> = (0..shape.c).map(|t| state.z[(i, t)]).collect();
            debug_assert!(
                region.contains(&row),
                "latent row {i} left its truncation region: {row:?} for label {}",
                data.labels[i]
            );
        }
    }
    Ok(())
}

/// Indicator update. For ρ < 1: one uniformly chosen column toggle per class
/// row, accepted through the marginal-likelihood and column-prior ratios.
/// For ρ = 1: a single column-block proposal flipping M_•k, whose acceptance
/// multiplies the per-class marginal ratios. Class caches are rebuilt from
/// fresh statistics on every call.
pub fn update_indicators<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &Dataset,
    rng: &mut R,
) -> Result<()> {
    let shape = data.shape();
    let t = data.design.transpose() * &state.z;
    let ztz: Vec<f64> = (0..shape.c)
        .map(|j| {
            let col = state.z.column(j);
            col.dot(&col)
        })
        .collect();

    if state.hp.rho >= 1.0 {
        return update_indicators_block(state, data, &t, &ztz, rng);
    }

    for j in 0..shape.c {
        let active = state.m.active_columns(j);
        let current = state.class_posterior(&t, j, &active)?;
        let cur_lm = log_marginal_from_posterior(&current, ztz[j], shape.n);

        let k = rng.random_range(1..=shape.p);
        let currently_active = state.m.get(j, k);
        let col_count = state.m.column_active_count(k);
        let new_count = if currently_active {
            col_count - 1
        } else {
            col_count + 1
        };
        let d_prior = log_prior_column_count(new_count, shape.c, state.q, state.hp.rho)
            - log_prior_column_count(col_count, shape.c, state.q, state.hp.rho);

        let mut proposed_active = active.clone();
        if currently_active {
            proposed_active.retain(|&col| col != k);
        } else {
            let pos = proposed_active.partition_point(|&col| col < k);
            proposed_active.insert(pos, k);
        }
        let proposed = state.class_posterior(&t, j, &proposed_active)?;
        let prop_lm = log_marginal_from_posterior(&proposed, ztz[j], shape.n);

        state.acceptance.row_proposals[j] += 1;
        let log_ratio = prop_lm - cur_lm + d_prior;
        if rng.random::<f64>().ln() < log_ratio {
            state.acceptance.row_accepts[j] += 1;
            state.m.toggle(j, k);
            state.caches[j] = ClassCache {
                post: proposed,
                active: proposed_active,
            };
        } else {
            state.caches[j] = ClassCache {
                post: current,
                active,
            };
        }
    }
    Ok(())
}

fn update_indicators_block<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &Dataset,
    t: &DMatrix<f64>,
    ztz: &[f64],
    rng: &mut R,
) -> Result<()> {
    let shape = data.shape();

    // Fresh current caches for every row.
    let mut current = Vec::with_capacity(shape.c);
    for j in 0..shape.c {
        let active = state.m.active_columns(j);
        let post = state.class_posterior(t, j, &active)?;
        current.push(ClassCache { post, active });
    }

    let k = rng.random_range(1..=shape.p);
    let col_count = state.m.column_active_count(k);
    debug_assert!(
        col_count == 0 || col_count == shape.c,
        "mixed column under rho = 1"
    );
    let activating = col_count == 0;
    let mut log_ratio = if activating {
        state.q.ln() - (-state.q).ln_1p()
    } else {
        (-state.q).ln_1p() - state.q.ln()
    };

    let mut proposed = Vec::with_capacity(shape.c);
    for (j, cur) in current.iter().enumerate() {
        let mut active = cur.active.clone();
        if activating {
            let pos = active.partition_point(|&col| col < k);
            active.insert(pos, k);
        } else {
            active.retain(|&col| col != k);
        }
        let post = state.class_posterior(t, j, &active)?;
        log_ratio += log_marginal_from_posterior(&post, ztz[j], shape.n)
            - log_marginal_from_posterior(&cur.post, ztz[j], shape.n);
        proposed.push(ClassCache { post, active });
    }

    for j in 0..shape.c {
        state.acceptance.row_proposals[j] += 1;
    }
    if rng.random::<f64>().ln() < log_ratio {
        for j in 0..shape.c {
            state.acceptance.row_accepts[j] += 1;
            state.m.set(j, k, activating);
        }
        state.caches = proposed;
    } else {
        state.caches = current;
    }
    Ok(())
}

/// q update: at ρ = 1, an exact draw from its conjugate Beta full conditional
/// Beta(γ₁ + K, γ₂ + p − K) with K the number of active columns; otherwise a
/// Gaussian random walk on logit(q) with the Jacobian correction, targeting
/// Beta(q; γ₁, γ₂)·π(M|q).
pub fn update_q<R: Rng + ?Sized>(state: &mut ChainState, rng: &mut R) -> Result<()> {
    let p = state.m.predictors();
    let c = state.m.classes();

    if state.hp.rho >= 1.0 {
        let k_active = (1..=p)
            .filter(|&k| state.m.column_active_count(k) == c)
            .count();
        let beta = Beta::new(
            state.hp.gamma1 + k_active as f64,
            state.hp.gamma2 + (p - k_active) as f64,
        )
        .map_err(|e| Error::Numerical(format!("invalid Beta full conditional: {e}")))?;
        state.q = beta.sample(rng);
        return Ok(());
    }

    let log_target = |q: f64, state: &ChainState| -> f64 {
        if !(q > 0.0 && q < 1.0) {
            return f64::NEG_INFINITY;
        }
        let mut lp = ln_beta_pdf(q, state.hp.gamma1, state.hp.gamma2);
        for k in 1..=p {
            lp += log_prior_column_count(state.m.column_active_count(k), c, q, state.hp.rho);
        }
        // Jacobian of the logit transform.
        lp + q.ln() + (-q).ln_1p()
    };

    state.acceptance.q_proposals += 1;
    let theta = (state.q / (1.0 - state.q)).ln();
    let step: f64 = rng.sample::<f64, _>(rand_distr::StandardNormal) * state.q_proposal_scale;
    let theta_new = theta + step;
    let q_new = 1.0 / (1.0 + (-theta_new).exp());
    let log_ratio = log_target(q_new, state) - log_target(state.q, state);
    if rng.random::<f64>().ln() < log_ratio {
        state.acceptance.q_accepts += 1;
        state.q = q_new;
    }
    Ok(())
}

/// Post-processing β draw at the current (Z, M): active coefficients from the
/// cached row posteriors, inactive ones exactly zero.
pub fn draw_beta<R: Rng + ?Sized>(state: &ChainState, rng: &mut R) -> Result<CoefficientMatrix> {
    let c = state.m.classes();
    let p = state.m.predictors();
    let mut beta = CoefficientMatrix::zeros(c, p);
    for j in 0..c {
        let cache = &state.caches[j];
        let draw = cache.post.sample(rng)?;
        for (t, &col) in cache.active.iter().enumerate() {
            beta.set(j, col, draw[t]);
        }
    }
    Ok(beta)
}

fn run_kernel(
    data: &Dataset,
    config: &ChainConfig,
    fixed_model: Option<&IndicatorMatrix>,
) -> Result<ChainOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = match fixed_model {
        Some(m) => ChainState::init_with_model(data, config, m.clone(), &mut rng)?,
        None => ChainState::init(data, config, &mut rng)?,
    };
    let update_model = fixed_model.is_none();
    let retained = config.retained();
    let mut m_draws = Vec::with_capacity(retained);
    let mut q_draws = Vec::with_capacity(retained);
    let mut beta_draws = Vec::with_capacity(retained);

    for it in 1..=config.iterations {
        update_latents(&mut state, data, &mut rng)?;
        if update_model {
            update_indicators(&mut state, data, &mut rng)?;
            update_q(&mut state, &mut rng)?;
        } else {
            state.rebuild_caches(data)?;
        }
        if it > config.burn_in && (it - config.burn_in) % config.thin == 0 {
            m_draws.push(state.m.clone());
            q_draws.push(state.q);
            beta_draws.push(draw_beta(&state, &mut rng)?);
        }
    }

    Ok(ChainOutput {
        m_draws,
        q_draws,
        beta_draws,
        acceptance: state.acceptance,
        variance_floor_hits: state.variance_floor_hits,
        seed: config.seed,
        start: config.start,
    })
}

/// Run one chain; deterministic given (seed, config, data).
pub fn run_chain(data: &Dataset, config: &ChainConfig) -> Result<ChainOutput> {
    run_kernel(data, config, None)
}

/// Run a chain with M held fixed (no indicator or q updates): the conditional
/// sampler behind `E(β | M, D)` estimates and no-selection fits.
pub fn run_conditional_chain(
    data: &Dataset,
    model: &IndicatorMatrix,
    config: &ChainConfig,
) -> Result<ChainOutput> {
    run_kernel(data, config, Some(model))
}

/// Run several independently seeded chains, in parallel when the `parallel`
/// feature is enabled. Outputs are ordered by chain index. Seed reuse across
/// chains is legal but almost never intended, so it is flagged on stderr.
pub fn run_chains(data: &Dataset, configs: &[ChainConfig]) -> Result<Vec<ChainOutput>> {
    warn_on_duplicate_seeds(configs);
    exec::parallel_map(configs.to_vec(), 0, |config| run_chain(data, &config))
        .into_iter()
        .collect()
}

/// Sequential twin of [`run_chains`], available in every build for
/// benchmarking the two execution paths against each other.
pub fn run_chains_sequential(data: &Dataset, configs: &[ChainConfig]) -> Result<Vec<ChainOutput>> {
    warn_on_duplicate_seeds(configs);
    exec::sequential_map(configs.to_vec(), |config| run_chain(data, &config))
        .into_iter()
        .collect()
}

fn warn_on_duplicate_seeds(configs: &[ChainConfig]) {
    let mut seeds: Vec<u64> = configs.iter().map(|c| c.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    if seeds.len() != configs.len() {
        eprintln!("warning: duplicate seeds across chains; the chains will be identical");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, LabelMap};
    use crate::math::{normal_cdf, normal_sf};
    use approx::assert_abs_diff_eq;

    fn tiny_dataset(n: usize, c: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let predictors = DMatrix::from_fn(n, p, |_, _| {
            rng.sample::<f64, _>(rand_distr::StandardNormal)
        });
        let labels = (0..n).map(|i| i % (c + 1)).collect();
        Dataset::from_predictors(
            predictors,
            labels,
            LabelMap {
                names: (0..=c).map(|j| j.to_string()).collect(),
            },
            (1..=p).map(|k| format!("x{k}")).collect(),
        )
        .unwrap()
    }

    fn config(iterations: usize, burn_in: usize, thin: usize, seed: u64, c: usize, p: usize) -> ChainConfig {
        ChainConfig {
            iterations,
            burn_in,
            thin,
            seed,
            q_proposal_scale: 0.5,
            start: StartModel::Empty,
            hp: Hyperparameters::with_default_mu(c, p, 4.0, 0.0, 5.0, 15.0).unwrap(),
        }
    }

    #[test]
    fn truncation_region_examples() {
        let r0 = truncation_region(0, 2).unwrap();
        assert!(r0.contains(&[-0.3, -1.2]));
        assert!(!r0.contains(&[-0.3, 0.1]));
        let r1 = truncation_region(1, 2).unwrap();
        assert!(!r1.contains(&[0.5, 0.7]));
        assert!(r1.contains(&[0.5, 0.2]));
        let r2 = truncation_region(2, 2).unwrap();
        assert!(r2.contains(&[-0.1, 0.4]));
        assert!(truncation_region(3, 2).is_err());
    }

    #[test]
    fn region_bounds_match_membership() {
        let region = truncation_region(2, 3).unwrap();
        let row = [-0.4, 0.9, 0.1];
        let (lo, hi) = region.bounds(1, &row);
        assert_abs_diff_eq!(lo, 0.1);
        assert_eq!(hi, f64::INFINITY);
        let (lo, hi) = region.bounds(0, &row);
        assert_eq!(lo, f64::NEG_INFINITY);
        assert_abs_diff_eq!(hi, 0.9);
    }

    #[test]
    fn latent_sweep_preserves_regions() {
        let data = tiny_dataset(30, 3, 2, 5);
        let cfg = config(10, 5, 1, 9, 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut state = ChainState::init(&data, &cfg, &mut rng).unwrap();
        for _ in 0..20 {
            update_latents(&mut state, &data, &mut rng).unwrap();
            for i in 0..30 {
                let region = truncation_region(data.labels[i], 3).unwrap();
                let row: Vec<f64> = (0..3).map(|j| state.z[(i, j)]).collect();
                assert!(region.contains(&row));
            }
        }
    }

    #[test]
    fn latent_sweep_is_noop_on_empty_data() {
        let data = tiny_dataset(0, 2, 2, 5);
        let cfg = config(10, 5, 1, 9, 2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut state = ChainState::init(&data, &cfg, &mut rng).unwrap();
        update_latents(&mut state, &data, &mut rng).unwrap();
        assert_eq!(state.z.nrows(), 0);
    }

    #[test]
    fn single_unit_latents_match_truncated_normal_law() {
        // c = 1, n = 1, y = 1: the conditional is N(x'μ, 1 + x'Vx) truncated
        // to (0, ∞) and successive sweeps draw i.i.d. from it.
        let predictors = DMatrix::from_element(1, 1, 0.7);
        let data = Dataset::from_predictors(
            predictors,
            vec![1],
            LabelMap {
                names: vec!["0".into(), "1".into()],
            },
            vec!["x1".into()],
        )
        .unwrap();
        let mut cfg = config(10, 5, 1, 2, 1, 1);
        cfg.start = StartModel::Full;
        cfg.hp = Hyperparameters::with_default_mu(1, 1, 9.0, 0.0, 5.0, 15.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut state = ChainState::init(&data, &cfg, &mut rng).unwrap();

        let (mean, var) = state.latent_moments(&data, 0, 0).unwrap();
        let sd = var.sqrt();
        let n = 20_000;
        let mut draws = Vec::with_capacity(n);
        for _ in 0..n {
            update_latents(&mut state, &data, &mut rng).unwrap();
            draws.push(state.z[(0, 0)]);
        }
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let lower_mass = normal_cdf((0.0 - mean) / sd);
        let norm = normal_sf((0.0 - mean) / sd);
        let mut ks: f64 = 0.0;
        for (idx, &z) in draws.iter().enumerate() {
            let f = (normal_cdf((z - mean) / sd) - lower_mass) / norm;
            let emp_hi = (idx + 1) as f64 / n as f64;
            let emp_lo = idx as f64 / n as f64;
            ks = ks.max((f - emp_hi).abs()).max((f - emp_lo).abs());
        }
        // 1% critical value 1.63/√n.
        assert!(ks < 1.63 / (n as f64).sqrt(), "KS statistic {ks} too large");
    }

    #[test]
    fn q_update_is_exact_beta_at_rho_one() {
        let data = tiny_dataset(0, 2, 15, 5);
        let mut cfg = config(10, 5, 1, 2, 2, 15);
        cfg.hp = Hyperparameters::with_default_mu(2, 15, 4.0, 1.0, 5.0, 15.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let mut state = ChainState::init(&data, &cfg, &mut rng).unwrap();
        // Empty start: K = 0, so q | M ~ Beta(5, 30).
        let n = 200_000;
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..n {
            update_q(&mut state, &mut rng).unwrap();
            sum += state.q;
            sumsq += state.q * state.q;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let (a, b) = (5.0, 30.0);
        let true_mean = a / (a + b);
        let true_var = a * b / ((a + b) * (a + b) * (a + b + 1.0));
        assert_abs_diff_eq!(mean, true_mean, epsilon = 4.0 * (true_var / n as f64).sqrt());
        assert_abs_diff_eq!(var, true_var, epsilon = 3e-4);
    }

    #[test]
    fn q_random_walk_targets_conjugate_law_at_rho_zero() {
        // M all-inactive and fixed, ρ = 0: the stationary law of the q walk
        // is Beta(γ1, γ2 + c·p).
        let data = tiny_dataset(0, 2, 3, 5);
        let cfg = config(10, 5, 1, 2, 2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut state = ChainState::init(&data, &cfg, &mut rng).unwrap();
        let n = 400_000;
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..n {
            update_q(&mut state, &mut rng).unwrap();
            sum += state.q;
            sumsq += state.q * state.q;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let (a, b) = (5.0, 15.0 + 6.0);
        let true_mean = a / (a + b);
        let true_var = a * b / ((a + b) * (a + b) * (a + b + 1.0));
        // Autocorrelated walk: generous 3-combined-SE style bands.
        assert_abs_diff_eq!(mean, true_mean, epsilon = 0.005);
        assert_abs_diff_eq!(var, true_var, epsilon = 0.001);
    }

    #[test]
    fn zero_proposal_scale_freezes_q() {
        let data = tiny_dataset(0, 2, 3, 5);
        let mut cfg = config(10, 5, 1, 2, 2, 3);
        cfg.q_proposal_scale = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut state = ChainState::init(&data, &cfg, &mut rng).unwrap();
        let q0 = state.q;
        for _ in 0..100 {
            update_q(&mut state, &mut rng).unwrap();
            assert_eq!(state.q, q0);
        }
    }

    #[test]
    fn beta_draws_from_prior_when_no_data() {
        let data = tiny_dataset(0, 2, 3, 5);
        let cfg = config(10, 5, 1, 2, 2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let state = ChainState::init(&data, &cfg, &mut rng).unwrap();
        // Empty start: intercept-only rows, so β_j0 ~ N(μ0, τ²) and the rest 0.
        let n = 100_000;
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..n {
            let b = draw_beta(&state, &mut rng).unwrap();
            sum += b.get(0, 0);
            sumsq += b.get(0, 0) * b.get(0, 0);
            assert_eq!(b.get(0, 1), 0.0);
            assert_eq!(b.get(1, 2), 0.0);
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert_abs_diff_eq!(mean, state.hp.mu[0], epsilon = 3.0 * (4.0f64 / n as f64).sqrt());
        assert_abs_diff_eq!(var, 4.0, epsilon = 0.1);
    }

    #[test]
    fn chain_output_lengths_and_determinism() {
        let data = tiny_dataset(12, 2, 3, 5);
        let cfg = config(40, 30, 10, 77, 2, 3);
        let out = run_chain(&data, &cfg).unwrap();
        assert_eq!(out.m_draws.len(), 1);
        assert_eq!(out.q_draws.len(), 1);
        assert_eq!(out.beta_draws.len(), 1);

        let cfg2 = config(300, 100, 7, 13, 2, 3);
        let a = run_chain(&data, &cfg2).unwrap();
        let b = run_chain(&data, &cfg2).unwrap();
        assert_eq!(a.m_draws, b.m_draws);
        assert_eq!(a.q_draws, b.q_draws);
        assert_eq!(a.beta_draws, b.beta_draws);
        assert_eq!(a.acceptance, b.acceptance);
        assert_eq!(a.m_draws.len(), 28);
    }

    #[test]
    fn run_chains_matches_single_runs_and_orders_outputs() {
        let data = tiny_dataset(10, 2, 2, 5);
        let mut c1 = config(60, 20, 4, 101, 2, 2);
        let mut c2 = config(60, 20, 4, 202, 2, 2);
        c1.start = StartModel::Empty;
        c2.start = StartModel::Full;
        let outs = run_chains(&data, &[c1.clone(), c2.clone()]).unwrap();
        let solo1 = run_chain(&data, &c1).unwrap();
        let solo2 = run_chain(&data, &c2).unwrap();
        assert_eq!(outs[0].q_draws, solo1.q_draws);
        assert_eq!(outs[1].q_draws, solo2.q_draws);
        assert_eq!(outs[0].seed, 101);
        assert_eq!(outs[1].seed, 202);

        let seq = run_chains_sequential(&data, &[c1, c2]).unwrap();
        assert_eq!(seq[0].m_draws, outs[0].m_draws);
        assert_eq!(seq[1].beta_draws, outs[1].beta_draws);
    }

    #[test]
    fn conditional_chain_never_moves_the_model() {
        let data = tiny_dataset(15, 2, 3, 5);
        let cfg = config(50, 20, 3, 31, 2, 3);
        let mut m = IndicatorMatrix::empty(2, 3);
        m.set(0, 2, true);
        let out = run_conditional_chain(&data, &m, &cfg).unwrap();
        assert!(out.m_draws.iter().all(|d| *d == m));
        assert!(out
            .beta_draws
            .iter()
            .all(|b| b.get(1, 2) == 0.0 && b.get(0, 2) != 0.0));
    }

    #[test]
    fn prior_recovery_with_no_data() {
        // With n = 0 the chain must sample the prior: Pr(M_jk = 1) = E[q] =
        // γ1/(γ1+γ2) = 0.25.
        let data = tiny_dataset(0, 2, 4, 5);
        let mut cfg = config(20_000, 2_000, 1, 404, 2, 4);
        cfg.hp = Hyperparameters::with_default_mu(2, 4, 4.0, 0.5, 5.0, 15.0).unwrap();
        let out = run_chain(&data, &cfg).unwrap();
        let total = out.m_draws.len() * 2 * 4;
        let ones: usize = out
            .m_draws
            .iter()
            .map(|m| {
                (0..2)
                    .flat_map(|j| (1..=4).map(move |k| (j, k)))
                    .filter(|&(j, k)| m.get(j, k))
                    .count()
            })
            .sum();
        let qbar: f64 = out.q_draws.iter().sum::<f64>() / out.q_draws.len() as f64;
        assert_abs_diff_eq!(ones as f64 / total as f64, 0.25, epsilon = 0.02);
        assert_abs_diff_eq!(qbar, 0.25, epsilon = 0.02);
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let data = tiny_dataset(5, 2, 2, 5);
        let mut cfg = config(10, 20, 1, 0, 2, 2);
        assert!(run_chain(&data, &cfg).is_err());
        cfg.burn_in = 5;
        cfg.thin = 0;
        assert!(run_chain(&data, &cfg).is_err());
    }
}
