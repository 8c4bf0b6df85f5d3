//! Test-local oracles, deliberately independent of the library's linear
//! algebra: a hand-rolled dense Cholesky, dense-covariance Gaussian density
//! and Schur-complement conditioning on the explicitly formed n×n marginal
//! covariance, and tensor-grid quadrature for probit marginal likelihoods.

#![allow(dead_code)]

pub type Mat = Vec<Vec<f64>>;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Plain textbook Cholesky, lower factor; None if not positive definite.
pub fn chol(a: &Mat) -> Option<Mat> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(l)
}

/// Solve L L' x = b given the lower factor.
pub fn chol_solve(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    x
}

/// The marginal covariance I_n + X V X' formed explicitly.
pub fn dense_marginal_cov(x_rows: &Mat, prior_var: &[f64]) -> Mat {
    let n = x_rows.len();
    let m = prior_var.len();
    let mut s = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..n {
            let mut acc = if a == b { 1.0 } else { 0.0 };
            for k in 0..m {
                acc += x_rows[a][k] * prior_var[k] * x_rows[b][k];
            }
            s[a][b] = acc;
        }
    }
    s
}

fn design_mean(x_rows: &Mat, prior_mean: &[f64]) -> Vec<f64> {
    x_rows
        .iter()
        .map(|row| row.iter().zip(prior_mean).map(|(x, m)| x * m).sum())
        .collect()
}

/// log φ_n(z; Xμ, I + XVX') by direct dense evaluation.
pub fn dense_log_marginal(x_rows: &Mat, prior_mean: &[f64], prior_var: &[f64], z: &[f64]) -> f64 {
    let n = z.len();
    if n == 0 {
        return 0.0;
    }
    let s = dense_marginal_cov(x_rows, prior_var);
    let l = chol(&s).expect("marginal covariance is SPD");
    let mean = design_mean(x_rows, prior_mean);
    let r: Vec<f64> = z.iter().zip(&mean).map(|(a, b)| a - b).collect();
    let sol = chol_solve(&l, &r);
    let quad: f64 = r.iter().zip(&sol).map(|(a, b)| a * b).sum();
    let log_det: f64 = (0..n).map(|i| l[i][i].ln()).sum::<f64>() * 2.0;
    -0.5 * n as f64 * LN_2PI - 0.5 * log_det - 0.5 * quad
}

/// Conditional moments of z_i | z_(−i) by Schur complement on the dense
/// covariance.
pub fn dense_conditional(
    x_rows: &Mat,
    prior_mean: &[f64],
    prior_var: &[f64],
    z: &[f64],
    i: usize,
) -> (f64, f64) {
    let n = z.len();
    let s = dense_marginal_cov(x_rows, prior_var);
    let mean = design_mean(x_rows, prior_mean);
    let others: Vec<usize> = (0..n).filter(|&t| t != i).collect();
    if others.is_empty() {
        return (mean[i], s[i][i]);
    }
    let k = others.len();
    let mut s22 = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in 0..k {
            s22[a][b] = s[others[a]][others[b]];
        }
    }
    let s12: Vec<f64> = others.iter().map(|&t| s[i][t]).collect();
    let resid: Vec<f64> = others.iter().map(|&t| z[t] - mean[t]).collect();
    let l = chol(&s22).expect("submatrix is SPD");
    let w = chol_solve(&l, &s12);
    let var = s[i][i] - s12.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
    let adj = chol_solve(&l, &resid);
    let cmean = mean[i] + s12.iter().zip(&adj).map(|(a, b)| a * b).sum::<f64>();
    (cmean, var)
}

/// Abramowitz–Stegun 7.1.26 erf approximation — deliberately a different
/// normal CDF than the library's, for oracle use at ~1e-7 accuracy.
pub fn oracle_normal_cdf(x: f64) -> f64 {
    let t = x / std::f64::consts::SQRT_2;
    let sign = if t < 0.0 { -1.0 } else { 1.0 };
    let a = t.abs();
    let u = 1.0 / (1.0 + 0.327_591_1 * a);
    let poly = u
        * (0.254_829_592
            + u * (-0.284_496_736 + u * (1.421_413_741 + u * (-1.453_152_027 + u * 1.061_405_429))));
    let erf = sign * (1.0 - poly * (-a * a).exp());
    0.5 * (1.0 + erf)
}

/// Gauss–Legendre nodes/weights on [-1, 1] by Newton on the Legendre
/// recurrence (test-local copy so the oracle does not share the library's).
pub fn gl_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Tensor-grid integral of `f` against ∏_k N(β_k; mean_k, var_k) over
/// mean ± 9·sd per dimension, 60 Gauss–Legendre nodes per dimension.
pub fn gaussian_tensor_integral<F: Fn(&[f64]) -> f64>(mean: &[f64], var: &[f64], f: F) -> f64 {
    let dim = mean.len();
    let (nodes, weights) = gl_rule(60);
    let mut total = 0.0;
    let mut beta = vec![0.0; dim];
    let mut idx = vec![0usize; dim];
    loop {
        let mut w = 1.0;
        for d in 0..dim {
            let sd = var[d].sqrt();
            let half = 9.0 * sd;
            let t = nodes[idx[d]];
            beta[d] = mean[d] + half * t;
            let dens = (-0.5 * (beta[d] - mean[d]) * (beta[d] - mean[d]) / var[d]).exp()
                / (sd * (2.0 * std::f64::consts::PI).sqrt());
            w *= weights[idx[d]] * half * dens;
        }
        total += w * f(&beta);
        // Advance the mixed-radix counter.
        let mut d = 0;
        loop {
            if d == dim {
                return total;
            }
            idx[d] += 1;
            if idx[d] < nodes.len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Marginal likelihood of a binary-probit model with Gaussian prior:
/// ∫ N(β; μ, diag(v)) ∏_i Φ((2y_i − 1)·x_i'β) dβ.
pub fn probit_marginal_likelihood(
    x_rows: &Mat,
    labels: &[usize],
    prior_mean: &[f64],
    prior_var: &[f64],
) -> f64 {
    gaussian_tensor_integral(prior_mean, prior_var, |beta| {
        let mut lik = 1.0;
        for (row, &y) in x_rows.iter().zip(labels) {
            let eta: f64 = row.iter().zip(beta).map(|(x, b)| x * b).sum();
            let sign = if y == 1 { 1.0 } else { -1.0 };
            lik *= oracle_normal_cdf(sign * eta);
        }
        lik
    })
}

/// Enumerate all models of a c = 1 problem over p predictors and return
/// (active columns, posterior probability): tensor-quadrature marginal
/// likelihoods times the q-marginalized model prior
/// B(γ1+A, γ2+p−A)/B(γ1, γ2).
pub fn binary_model_posterior_oracle(
    data: &csps::data::Dataset,
    hp: &csps::model::Hyperparameters,
) -> Vec<(Vec<usize>, f64)> {
    use statrs::function::gamma::ln_gamma;
    let ln_beta_fn = |a: f64, b: f64| ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
    let shape = data.shape();
    assert_eq!(shape.c, 1, "oracle enumerates binary problems only");
    let p = shape.p;
    let mut weights = Vec::new();
    for code in 0..(1usize << p) {
        let active: Vec<usize> = std::iter::once(0)
            .chain((1..=p).filter(|&k| code >> (k - 1) & 1 == 1))
            .collect();
        let m_act = active.len();
        let x_rows: Mat = (0..shape.n)
            .map(|i| active.iter().map(|&k| data.design[(i, k)]).collect())
            .collect();
        let prior_mean: Vec<f64> = active.iter().map(|&k| hp.mu[k]).collect();
        let prior_var = vec![hp.tau2 / m_act as f64; m_act];
        let ml = probit_marginal_likelihood(&x_rows, &data.labels, &prior_mean, &prior_var);
        let a_count = (m_act - 1) as f64;
        let ln_prior = ln_beta_fn(hp.gamma1 + a_count, hp.gamma2 + p as f64 - a_count)
            - ln_beta_fn(hp.gamma1, hp.gamma2);
        weights.push((active, ml.ln() + ln_prior));
    }
    let max = weights
        .iter()
        .map(|(_, w)| *w)
        .fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = weights.iter().map(|(_, w)| (w - max).exp()).sum();
    weights
        .into_iter()
        .map(|(active, w)| (active, (w - max).exp() / total))
        .collect()
}

/// Posterior mean of β under the same model, by quadrature.
pub fn probit_posterior_mean(
    x_rows: &Mat,
    labels: &[usize],
    prior_mean: &[f64],
    prior_var: &[f64],
) -> Vec<f64> {
    let ml = probit_marginal_likelihood(x_rows, labels, prior_mean, prior_var);
    (0..prior_mean.len())
        .map(|coord| {
            gaussian_tensor_integral(prior_mean, prior_var, |beta| {
                let mut lik = beta[coord];
                for (row, &y) in x_rows.iter().zip(labels) {
                    let eta: f64 = row.iter().zip(beta).map(|(x, b)| x * b).sum();
                    let sign = if y == 1 { 1.0 } else { -1.0 };
                    lik *= oracle_normal_cdf(sign * eta);
                }
                lik
            }) / ml
        })
        .collect()
}
