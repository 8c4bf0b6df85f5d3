//! Scalar normal-distribution primitives: densities, tail-stable CDF/survival
//! functions, quantiles, and inverse-CDF truncated-normal sampling.
//!
//! Everything here is deterministic given the RNG stream. Tail quantities are
//! computed in the log domain once a bound is more than [`TAIL_SWITCH`]
//! standard deviations out, so truncation bounds far beyond the mean neither
//! underflow nor lose the sampler's exactness.

use rand::Rng;

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_5;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standardized distance beyond which survival probabilities switch to the
/// log-domain continued-fraction route.
pub const TAIL_SWITCH: f64 = 6.0;

/// Standard normal density φ(x).
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - 0.5 * LN_2PI).exp()
}

/// log φ(x).
#[inline]
pub fn ln_normal_pdf(x: f64) -> f64 {
    -0.5 * x * x - 0.5 * LN_2PI
}

/// Standard normal CDF Φ(x) via erfc; relative accuracy is preserved in the
/// lower tail down to the underflow threshold (x ≈ −37.5).
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / SQRT_2)
}

/// Survival function Φ̄(x) = 1 − Φ(x).
#[inline]
pub fn normal_sf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / SQRT_2)
}

/// log Φ̄(x), finite for all finite x.
///
/// For x ≤ TAIL_SWITCH the erfc value is well above the underflow threshold
/// and its logarithm is taken directly (with ln1p on the left side where
/// Φ̄(x) → 1). Beyond the switch the Laplace continued fraction
/// Φ̄(x) = φ(x) / (x + 1/(x + 2/(x + 3/…))) is evaluated with the modified
/// Lentz algorithm, entirely in the log domain.
pub fn ln_normal_sf(x: f64) -> f64 {
    if x < -TAIL_SWITCH {
        // Φ̄(x) = 1 − Φ̄(−x) with Φ̄(−x) tiny.
        let ln_upper = ln_normal_sf(-x);
        return (-ln_upper.exp()).ln_1p();
    }
    if x <= TAIL_SWITCH {
        return (0.5 * statrs::function::erf::erfc(x / SQRT_2)).ln();
    }
    ln_normal_pdf(x) + ln_mills_ratio(x)
}

/// log Φ(x) = log Φ̄(−x).
#[inline]
pub fn ln_normal_cdf(x: f64) -> f64 {
    ln_normal_sf(-x)
}

/// log of the Mills-type continued fraction 1/(x + 1/(x + 2/(x + 3/…))),
/// valid for x > 0 and accurate for x above a few units.
fn ln_mills_ratio(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x.max(TINY);
    let mut c = f;
    let mut d = 0.0;
    for k in 1..200u32 {
        let a = f64::from(k);
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    // f approximates x + 1/(x + 2/(x + …)); the ratio is its reciprocal.
    -f.ln()
}

/// Standard normal quantile Φ⁻¹(p) for p in (0, 1).
///
/// Central region: Acklam's rational approximation polished with two Newton
/// steps against the erfc-based CDF. Tails delegate to the log-domain
/// routine, which carries its own Newton polish, so accuracy is a few ulps
/// across the whole range.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(
        p > 0.0 && p < 1.0 && p.is_finite(),
        "normal_quantile requires p in (0,1), got {p}"
    );
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        return -tail_quantile_from_ln(p.ln());
    }
    if p > 1.0 - P_LOW {
        return tail_quantile_from_ln((1.0 - p).ln());
    }
    let mut x = acklam_central(p);
    for _ in 0..2 {
        let err = if x <= 0.0 {
            normal_cdf(x) - p
        } else {
            (1.0 - p) - normal_sf(x)
        };
        x -= err / normal_pdf(x);
    }
    x
}

fn acklam_central(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    let q = p - 0.5;
    let r = q * q;
    (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
        / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
}

/// Acklam tail branch working directly from ln p — no exponentiation, so it
/// stays finite for probabilities far below the f64 underflow threshold.
fn acklam_tail_from_ln(ln_p: f64) -> f64 {
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let q = (-2.0 * ln_p).sqrt();
    -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
        / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
}

/// Upper-tail quantile from a log survival probability: returns z such that
/// ln Φ̄(z) = ln_p, for ln_p ≤ ln(1/2). Stable arbitrarily deep into the tail.
pub fn tail_quantile_from_ln(ln_p: f64) -> f64 {
    assert!(
        ln_p <= -std::f64::consts::LN_2 + 1e-12,
        "tail quantile needs ln_p <= ln(1/2), got {ln_p}"
    );
    let mut z = if ln_p > -700.0 {
        acklam_tail_from_ln(ln_p).max(0.0)
    } else {
        // Asymptotic seed from Φ̄(z) ≈ φ(z)/z.
        let mut t = (-2.0 * (ln_p + 0.5 * LN_2PI)).max(1.0).sqrt();
        for _ in 0..3 {
            t = (-2.0 * (ln_p + 0.5 * LN_2PI + t.ln())).max(1.0).sqrt();
        }
        t
    };
    // Newton on g(z) = ln Φ̄(z) − ln_p; g'(z) = −exp(ln φ − ln Φ̄).
    for _ in 0..8 {
        let g = ln_normal_sf(z) - ln_p;
        let dg = -(ln_normal_pdf(z) - ln_normal_sf(z)).exp();
        let step = (g / dg).clamp(-1.0, 1.0);
        z -= step;
        if step.abs() < 1e-15 * z.abs().max(1.0) {
            break;
        }
    }
    z
}

/// One draw from N(mean, sd²) truncated to the open interval (lower, upper),
/// by inversion of a single uniform. Either bound may be infinite.
///
/// The active tail is chosen so the CDF difference is formed between
/// commensurate quantities; once the whole interval sits beyond
/// [`TAIL_SWITCH`] standard deviations the computation moves to the log
/// domain, so bounds tens of SDs out remain exact.
pub fn sample_truncated_normal<R: Rng + ?Sized>(
    mean: f64,
    sd: f64,
    lower: f64,
    upper: f64,
    rng: &mut R,
) -> f64 {
    debug_assert!(sd > 0.0, "truncated normal needs sd > 0, got {sd}");
    debug_assert!(
        lower <= upper,
        "empty truncation interval ({lower}, {upper})"
    );
    let alpha = (lower - mean) / sd;
    let beta = (upper - mean) / sd;
    if alpha == beta {
        return mean + sd * alpha;
    }
    let u: f64 = rng.random();
    let z = standard_truncated_draw(alpha, beta, u);
    mean + sd * z
}

/// Inverse-CDF draw from the standard normal truncated to (alpha, beta),
/// u ∈ [0, 1).
fn standard_truncated_draw(alpha: f64, beta: f64, u: f64) -> f64 {
    if alpha == f64::NEG_INFINITY && beta == f64::INFINITY {
        return normal_quantile(u.clamp(1e-300, 1.0 - 1e-16));
    }
    // Mirror so the interval lies in the right half where survival-function
    // arithmetic is the stable one. 1−u is kept strictly below 1 so the
    // mirrored draw never lands on the singular endpoint.
    if beta <= 0.0 {
        let u_mirror = (1.0 - u).min(1.0 - f64::EPSILON / 2.0);
        return -standard_truncated_draw(-beta, -alpha, u_mirror);
    }
    if alpha >= 0.0 {
        // Interval in the right tail: interpolate survival probabilities.
        let ln_pa = ln_normal_sf(alpha);
        let ln_pb = if beta.is_infinite() {
            f64::NEG_INFINITY
        } else {
            ln_normal_sf(beta)
        };
        let ratio = (ln_pb - ln_pa).exp(); // ∈ [0, 1)
        let ln_target = ln_pa + (-u * (1.0 - ratio)).ln_1p();
        return tail_quantile_from_ln(ln_target.min(-std::f64::consts::LN_2));
    }
    // Interval straddles zero: plain CDF interpolation is well conditioned.
    let pa = normal_cdf(alpha);
    let pb = if beta.is_infinite() {
        1.0
    } else {
        normal_cdf(beta)
    };
    let p = (pa + u * (pb - pa)).clamp(1e-300, 1.0 - 1e-16);
    normal_quantile(p)
}

/// log Beta(x; a, b) density.
pub fn ln_beta_pdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return f64::NEG_INFINITY;
    }
    use statrs::function::gamma::ln_gamma;
    (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() + ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
}

/// log(exp(a) + exp(b)) without intermediate overflow.
pub fn logsumexp2(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1], computed
/// by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
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

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive composite Gauss–Legendre quadrature of `f` over [lo, hi].
///
/// Starts from `initial_panels` equal panels, bisecting any panel whose
/// one-level and two-level estimates disagree by more than the tolerance
/// share assigned to it.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    initial_panels: usize,
    tol: f64,
) -> f64 {
    use std::sync::OnceLock;
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let (nodes, weights) = RULE.get_or_init(|| gauss_legendre(20));

    let gl = |a: f64, b: f64| -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    };

    let panels = initial_panels.max(1);
    let width = (hi - lo) / panels as f64;
    let mut stack: Vec<(f64, f64, f64, u32)> = (0..panels)
        .map(|i| {
            let a = lo + i as f64 * width;
            let b = if i + 1 == panels { hi } else { a + width };
            (a, b, gl(a, b), 0u32)
        })
        .collect();

    let mut total = 0.0;
    while let Some((a, b, coarse, depth)) = stack.pop() {
        let mid = 0.5 * (a + b);
        let left = gl(a, mid);
        let right = gl(mid, b);
        let fine = left + right;
        let local_tol = tol * ((b - a) / (hi - lo)).max(1e-6);
        if (fine - coarse).abs() <= local_tol || depth >= 30 {
            total += fine;
        } else {
            stack.push((a, mid, left, depth + 1));
            stack.push((mid, b, right, depth + 1));
        }
    }
    total
}
