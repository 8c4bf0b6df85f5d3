//! Marginalized-Gaussian algebra for one class row: conjugate coefficient
//! posteriors (μ̃, Ṽ), the marginal density of a latent column with the
//! coefficients integrated out, and leave-one-out latent conditionals.
//!
//! The n×n marginal covariance I + XVX' is never formed. Its determinant and
//! inverse are reached through the m×m posterior precision Ṽ⁻¹ = V⁻¹ + X'X
//! via log|I + XVX'| = log|V| − log|Ṽ| and (I + XVX')⁻¹ = I − XṼX', with a
//! Cholesky factor of Ṽ⁻¹ maintained per class row.

use nalgebra::{DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::math::LN_2PI;

/// Conditional variances below this are clamped (and should be counted by
/// the caller): in exact arithmetic leave-one-out variances are ≥ 1, so any
/// hit marks numerical corruption rather than a legitimate value.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Design restricted to the active columns of one class row, together with
/// that row's prior moments. `prior_var` holds the diagonal of V (all entries
/// τ²/M_j+ under the row prior).
#[derive(Debug, Clone)]
pub struct ActiveDesign {
    pub columns: DMatrix<f64>,
    pub prior_mean: DVector<f64>,
    pub prior_var: DVector<f64>,
}

impl ActiveDesign {
    pub fn new(columns: DMatrix<f64>, prior_mean: DVector<f64>, prior_var: DVector<f64>) -> Result<Self> {
        let m = columns.ncols();
        if m == 0 {
            return Err(Error::Shape(
                "active design needs at least the intercept column".into(),
            ));
        }
        if prior_mean.len() != m || prior_var.len() != m {
            return Err(Error::Shape(format!(
                "prior moments of lengths {}/{} do not match {} active columns",
                prior_mean.len(),
                prior_var.len(),
                m
            )));
        }
        if prior_var.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Config("prior variances must be positive".into()));
        }
        Ok(Self {
            columns,
            prior_mean,
            prior_var,
        })
    }

    pub fn units(&self) -> usize {
        self.columns.nrows()
    }

    pub fn active(&self) -> usize {
        self.columns.ncols()
    }
}

/// Gaussian-conjugate posterior of one class row's active coefficients given
/// its latent column: N(μ̃, Ṽ) with Ṽ⁻¹ = V⁻¹ + X'X and μ̃ = Ṽ(X'z + V⁻¹μ).
///
/// Also carries the pieces of the marginal column density that do not
/// involve z'z, so marginal-likelihood ratios over indicator changes are
/// O(m²).
#[derive(Debug, Clone)]
pub struct CoefficientPosterior {
    mean: DVector<f64>,
    rhs: DVector<f64>,
    chol: nalgebra::Cholesky<f64, Dyn>,
    log_det_v: f64,
    log_det_vtilde: f64,
    prior_quad: f64,
}

impl CoefficientPosterior {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Posterior mean μ̃.
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn log_det_v(&self) -> f64 {
        self.log_det_v
    }

    pub fn log_det_vtilde(&self) -> f64 {
        self.log_det_vtilde
    }

    /// Ṽ·x through the precision factor.
    pub(crate) fn smoother_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        out.copy_from(x);
        self.chol.solve_mut(out);
    }

    /// Ṽ·x, allocating.
    pub fn smoother(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = x.clone_owned();
        self.chol.solve_mut(&mut out);
        out
    }

    /// Leave-one-out moments of z_i given z_(−i) under the marginal joint,
    /// from the unit's active row x, the precomputed smoother s = Ṽx, and the
    /// current value z_i. The leverage h = x'Ṽx satisfies h < 1 in exact
    /// arithmetic; h ≥ 1 signals breakdown.
    pub fn latent_moments(&self, x: &DVector<f64>, s: &DVector<f64>, z_i: f64) -> Result<(f64, f64)> {
        let h = x.dot(s);
        if !(h < 1.0) || h < -1e-8 {
            return Err(Error::Numerical(format!(
                "leverage {h} outside [0, 1); precision factor is corrupt"
            )));
        }
        let denom = 1.0 - h;
        let mean = (x.dot(&self.mean) - h * z_i) / denom;
        let var = 1.0 / denom;
        Ok((mean, var))
    }

    /// Shift the cached (rhs, μ̃) for a change of one latent entry, given the
    /// unit's active row and its smoother s = Ṽx. Exactly equivalent to
    /// rebuilding from scratch.
    pub(crate) fn apply_latent_delta(&mut self, x: &DVector<f64>, s: &DVector<f64>, dz: f64) {
        if dz == 0.0 {
            return;
        }
        self.rhs.axpy(dz, x, 1.0);
        self.mean.axpy(dz, s, 1.0);
    }

    /// One draw from N(μ̃, Ṽ) via the precision factor: β = μ̃ + L⁻ᵀε.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DVector<f64>> {
        let eps = DVector::from_fn(self.mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let w = self
            .chol
            .l_dirty()
            .tr_solve_lower_triangular(&eps)
            .ok_or_else(|| Error::Numerical("singular Cholesky factor in coefficient draw".into()))?;
        Ok(&self.mean + w)
    }

    /// μ̃'Ṽ⁻¹μ̃, available as μ̃·rhs since Ṽ⁻¹μ̃ = rhs by construction.
    fn posterior_quad(&self) -> f64 {
        self.mean.dot(&self.rhs)
    }
}

/// Build the conjugate posterior from sufficient statistics: the active-block
/// Gram matrix X'X and moment vector X'z.
pub fn posterior_from_parts(
    gram: &DMatrix<f64>,
    xtz: &DVector<f64>,
    prior_mean: &DVector<f64>,
    prior_var: &DVector<f64>,
) -> Result<CoefficientPosterior> {
    let m = prior_mean.len();
    debug_assert_eq!(gram.nrows(), m);
    debug_assert_eq!(xtz.len(), m);

    let mut precision = gram.clone();
    let mut log_det_v = 0.0;
    let mut prior_quad = 0.0;
    let mut rhs = xtz.clone_owned();
    for i in 0..m {
        let v = prior_var[i];
        precision[(i, i)] += 1.0 / v;
        log_det_v += v.ln();
        prior_quad += prior_mean[i] * prior_mean[i] / v;
        rhs[i] += prior_mean[i] / v;
    }

    let chol = nalgebra::Cholesky::new(precision).ok_or_else(|| {
        Error::Numerical("posterior precision V⁻¹ + X'X is not positive definite".into())
    })?;
    let log_det_vtilde = -2.0 * (0..m).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>();
    let mean = chol.solve(&rhs);

    Ok(CoefficientPosterior {
        mean,
        rhs,
        chol,
        log_det_v,
        log_det_vtilde,
        prior_quad,
    })
}

/// Exact conjugate posterior of the active coefficients given a latent column.
pub fn coefficient_posterior(d: &ActiveDesign, z: &DVector<f64>) -> Result<CoefficientPosterior> {
    if z.len() != d.units() {
        return Err(Error::Shape(format!(
            "latent column of length {} does not match {} units",
            z.len(),
            d.units()
        )));
    }
    let gram = d.columns.transpose() * &d.columns;
    let xtz = d.columns.transpose() * z;
    posterior_from_parts(&gram, &xtz, &d.prior_mean, &d.prior_var)
}

/// Complete normalized log marginal density of a latent column,
/// φ_n(z; Xμ, I + XVX'), evaluated through the factored identities given the
/// posterior for (d, z) and the scalar z'z.
pub fn log_marginal_from_posterior(post: &CoefficientPosterior, ztz: f64, n: usize) -> f64 {
    -0.5 * n as f64 * LN_2PI - 0.5 * (post.log_det_v - post.log_det_vtilde)
        - 0.5 * (ztz + post.prior_quad - post.posterior_quad())
}

/// log φ_n(z; Xμ, I_n + XVX') without ever forming the n×n covariance.
pub fn log_marginal_column(d: &ActiveDesign, z: &DVector<f64>) -> Result<f64> {
    let post = coefficient_posterior(d, z)?;
    Ok(log_marginal_from_posterior(&post, z.dot(z), d.units()))
}

/// Exact conditional mean and variance of z_i given z_(−i) under the
/// marginal joint, through the leverage h_i = x_i'Ṽx_i. `cache` must be
/// consistent with (d, z).
pub fn latent_conditional(
    d: &ActiveDesign,
    z: &DVector<f64>,
    i: usize,
    cache: &CoefficientPosterior,
) -> Result<(f64, f64)> {
    if i >= d.units() {
        return Err(Error::Shape(format!(
            "unit index {i} out of range for {} units",
            d.units()
        )));
    }
    let x = DVector::from_iterator(d.active(), d.columns.row(i).iter().copied());
    let s = cache.smoother(&x);
    cache.latent_moments(&x, &s, z[i])
}

/// Update the cached posterior after one latent entry changes; equivalent to
/// recomputation from scratch with the new column.
pub fn refresh_after_latent_change(
    cache: &mut CoefficientPosterior,
    d: &ActiveDesign,
    i: usize,
    old_z: f64,
    new_z: f64,
) {
    let dz = new_z - old_z;
    if dz == 0.0 {
        return;
    }
    let x = DVector::from_iterator(d.active(), d.columns.row(i).iter().copied());
    let s = cache.smoother(&x);
    cache.apply_latent_delta(&x, &s, dz);
}
