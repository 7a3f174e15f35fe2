//! Random variates for every distribution a Gibbs sweep needs, plus the
//! Gaussian log-density used by the mixture weights.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};

use crate::error::{BnrError, Result};

/// Below this value of `chi * psi` the GIG draw is taken from its `chi -> 0`
/// limit, `Gamma(p, psi / 2)`. The relative error of doing so is of order
/// `sqrt(chi * psi)`, i.e. far below double precision.
pub const GIG_CHI_PSI_TOL: f64 = 1e-300;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// `log(sum(exp(xs)))`, exact for entries equal to `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Normalizes log-weights into probabilities.
pub fn softmax_from_logs(logs: &[f64]) -> Vec<f64> {
    let z = log_sum_exp(logs);
    logs.iter().map(|&l| (l - z).exp()).collect()
}

/// Gamma with shape/rate parameterization.
pub fn gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite() && rate > 0.0 && rate.is_finite()) {
        return Err(BnrError::invalid(format!(
            "Gamma(shape = {shape}, rate = {rate}) needs positive finite parameters"
        )));
    }
    let dist = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| BnrError::invalid(format!("Gamma({shape}, {rate}): {e}")))?;
    Ok(dist.sample(rng))
}

/// Inverse-Gamma with shape/rate (scale) parameterization: `1 / Gamma(shape, rate)`.
pub fn inverse_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite() && rate > 0.0 && rate.is_finite()) {
        return Err(BnrError::invalid(format!(
            "InverseGamma(shape = {shape}, rate = {rate}) needs positive finite parameters"
        )));
    }
    // 1 / Gamma(shape, rate) drawn as rate / Gamma(shape, 1)
    let g = Gamma::new(shape, 1.0)
        .map_err(|e| BnrError::invalid(format!("InverseGamma({shape}, {rate}): {e}")))?
        .sample(rng);
    Ok(rate / g)
}

pub fn beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(BnrError::invalid(format!(
            "Beta({a}, {b}) needs positive finite parameters"
        )));
    }
    let dist = Beta::new(a, b).map_err(|e| BnrError::invalid(format!("Beta({a}, {b}): {e}")))?;
    Ok(dist.sample(rng))
}

pub fn bernoulli<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<bool> {
    if !(0.0..=1.0).contains(&p) {
        return Err(BnrError::invalid(format!("Bernoulli({p}) outside [0, 1]")));
    }
    // p = 1 must never fail; random::<f64>() lies in [0, 1)
    Ok(rng.random::<f64>() < p)
}

pub fn normal<R: Rng + ?Sized>(mean: f64, sd: f64, rng: &mut R) -> f64 {
    mean + sd * standard_normal(rng)
}

pub fn dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if alpha.is_empty() || alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(BnrError::invalid(format!(
            "Dirichlet{alpha:?} needs positive finite concentrations"
        )));
    }
    let mut g = alpha
        .iter()
        .map(|&a| gamma(a, 1.0, rng))
        .collect::<Result<Vec<_>>>()?;
    let total: f64 = g.iter().sum();
    if total > 0.0 {
        g.iter_mut().for_each(|x| *x /= total);
        Ok(g)
    } else {
        // every gamma draw underflowed (tiny concentrations); fall back to the largest alpha
        let best = alpha
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        Ok((0..alpha.len()).map(|i| (i == best) as u8 as f64).collect())
    }
}

/// Standard inverse Gaussian `IG(1, shape)` by transformation with multiple
/// roots, using the cancellation-free form of the smaller root.
fn unit_inverse_gaussian<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    let y = standard_normal(rng).powi(2);
    let large = 1.0 + (y + (4.0 * shape * y + y * y).sqrt()) / (2.0 * shape);
    let small = 1.0 / large;
    if rng.random::<f64>() * (1.0 + small) <= 1.0 {
        small
    } else {
        large
    }
}

/// Generalized inverse Gaussian with density proportional to
/// `x^(p-1) exp(-(chi / x + psi * x) / 2)`.
///
/// `p = ±1/2` uses the exact inverse-Gaussian representation; other `p` use a
/// mode-shifted ratio-of-uniforms sampler. With `chi = 0` (or numerically
/// negligible `chi * psi`) the draw comes from the `Gamma(p, psi / 2)` limit,
/// which requires `p > 0`.
pub fn sample_gig<R: Rng + ?Sized>(p: f64, chi: f64, psi: f64, rng: &mut R) -> Result<f64> {
    if !(psi > 0.0 && psi.is_finite()) {
        return Err(BnrError::invalid(format!("GIG psi = {psi} must be positive")));
    }
    if !(chi >= 0.0 && chi.is_finite()) {
        return Err(BnrError::invalid(format!("GIG chi = {chi} must be nonnegative")));
    }
    if !p.is_finite() {
        return Err(BnrError::invalid(format!("GIG p = {p} must be finite")));
    }
    if chi * psi < GIG_CHI_PSI_TOL {
        if p <= 0.0 {
            return Err(BnrError::invalid(format!(
                "GIG with p = {p} <= 0 is improper when chi = 0"
            )));
        }
        return gamma(p, psi / 2.0, rng);
    }
    let omega = (chi * psi).sqrt();
    let scale = (chi / psi).sqrt();
    if (p - 0.5).abs() < f64::EPSILON {
        // 1 / X ~ IG(sqrt(psi / chi), psi) = sqrt(psi / chi) * IG(1, omega)
        return Ok(scale / unit_inverse_gaussian(omega, rng));
    }
    if (p + 0.5).abs() < f64::EPSILON {
        return Ok(scale * unit_inverse_gaussian(omega, rng));
    }
    if p < 0.0 {
        // 1 / GIG(-p, chi, psi) ~ GIG(p, psi, chi); standardized: Z(p) = 1 / Z(-p)
        return Ok(scale / standard_gig_rou(-p, omega, rng));
    }
    Ok(scale * standard_gig_rou(p, omega, rng))
}

/// Ratio-of-uniforms with mode shift for the standardized density
/// `x^(lambda-1) exp(-omega (x + 1/x) / 2)`, `lambda >= 0`, `omega > 0`.
fn standard_gig_rou<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let lm1 = lambda - 1.0;
    let mode = if lm1 >= 0.0 {
        (lm1 + (lm1 * lm1 + omega * omega).sqrt()) / omega
    } else {
        omega / ((lm1 * lm1 + omega * omega).sqrt() - lm1)
    };
    let log_f = |x: f64| lm1 * x.ln() - 0.5 * omega * (x + 1.0 / x);
    let log_f_mode = log_f(mode);
    let dlog_f = |x: f64| lm1 / x - 0.5 * omega + 0.5 * omega / (x * x);

    // extremes of (x - mode) * sqrt(f(x) / f(mode)) on either side of the mode;
    // each side has a single stationary point, located by bisection
    let v_at = |x: f64| (x - mode) * (0.5 * (log_f(x) - log_f_mode)).exp();
    let right = {
        let g = |x: f64| 1.0 / (x - mode) + 0.5 * dlog_f(x);
        let mut lo = mode;
        let mut hi = mode.max(1.0) * 2.0;
        while g(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        bisect(g, lo, hi)
    };
    let left = {
        let g = |x: f64| -1.0 / (mode - x) + 0.5 * dlog_f(x);
        let mut lo = mode / 2.0;
        let mut hi = mode;
        while g(lo) < 0.0 && lo > f64::MIN_POSITIVE {
            hi = lo;
            lo /= 2.0;
        }
        bisect(g, lo, hi)
    };
    let v_max = v_at(right) * (1.0 + 1e-9);
    let v_min = v_at(left) * (1.0 + 1e-9);

    loop {
        let u: f64 = rng.random();
        if u == 0.0 {
            continue;
        }
        let v = v_min + (v_max - v_min) * rng.random::<f64>();
        let x = v / u + mode;
        if x <= 0.0 {
            continue;
        }
        if 2.0 * u.ln() <= log_f(x) - log_f_mode {
            return x;
        }
    }
}

/// Root of a function that is positive at `lo` and negative at `hi`.
fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn cholesky(m: &DMatrix<f64>, context: &str) -> Result<Cholesky<f64, Dyn>> {
    if !m.is_square() {
        return Err(BnrError::dims(format!("{context}: matrix is not square")));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(BnrError::singular(format!("{context}: non-finite matrix entry")));
    }
    Cholesky::new(m.clone())
        .ok_or_else(|| BnrError::singular(format!("{context}: matrix is not positive definite")))
}

/// Inverse-Wishart draw with density proportional to
/// `|X|^(-(dof + R + 1)/2) exp(-tr(scale X^-1) / 2)`; mean `scale / (dof - R - 1)`.
///
/// Uses the Bartlett decomposition of the corresponding Wishart draw: with
/// `scale = C Cᵀ` and Bartlett factor `A`, the draw is `(C A⁻ᵀ)(C A⁻ᵀ)ᵀ`.
pub fn sample_inverse_wishart<R: Rng + ?Sized>(
    scale: &DMatrix<f64>,
    dof: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let dim = scale.nrows();
    if dim == 0 {
        return Err(BnrError::invalid("inverse-Wishart of dimension 0"));
    }
    if !(dof > dim as f64 - 1.0) {
        return Err(BnrError::invalid(format!(
            "inverse-Wishart dof = {dof} must exceed dimension - 1 = {}",
            dim - 1
        )));
    }
    let c = cholesky(scale, "inverse-Wishart scale")?.l();
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        let chi2 = 2.0 * gamma((dof - i as f64) / 2.0, 1.0, rng)?;
        a[(i, i)] = chi2.sqrt();
        for j in 0..i {
            a[(i, j)] = standard_normal(rng);
        }
    }
    // Solve A Y = Cᵀ, so Y = A⁻¹ Cᵀ and the draw is Yᵀ Y = C A⁻ᵀ A⁻¹ Cᵀ.
    let y = a
        .solve_lower_triangular(&c.transpose())
        .ok_or_else(|| BnrError::singular("inverse-Wishart Bartlett factor"))?;
    let draw = y.tr_mul(&y);
    Ok(symmetrize(draw))
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Draw from `N(P⁻¹ b, scale · P⁻¹)` using one Cholesky factorization of `P`.
///
/// `context` names the update in the error raised when `P` is not positive definite.
pub fn sample_mvn_precision<R: Rng + ?Sized>(
    b: &DVector<f64>,
    precision: &DMatrix<f64>,
    scale: f64,
    context: &str,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if precision.nrows() != b.len() {
        return Err(BnrError::dims(format!(
            "{context}: precision is {}x{}, vector has length {}",
            precision.nrows(),
            precision.ncols(),
            b.len()
        )));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(BnrError::invalid(format!("{context}: scale {scale} must be positive")));
    }
    let chol = cholesky(precision, context)?;
    let mean = chol.solve(b);
    let z = DVector::from_fn(b.len(), |_, _| standard_normal(rng) * scale.sqrt());
    // L Lᵀ = P, so Lᵀ x = z gives Cov(x) = P⁻¹
    let noise = chol
        .l()
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or_else(|| BnrError::singular(format!("{context}: triangular solve")))?;
    Ok(mean + noise)
}

/// Log-density of `N(mean, cov)` at `x`.
///
/// The covariance is factorized as given; if that fails, a jitter of
/// `1e-10` and then `1e-6` times its mean diagonal is added before giving up.
pub fn log_mvn_density(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64> {
    let d = x.len();
    if mean.len() != d || cov.shape() != (d, d) {
        return Err(BnrError::dims(format!(
            "Gaussian density: x has length {d}, mean {}, covariance {:?}",
            mean.len(),
            cov.shape()
        )));
    }
    let chol = factor_with_jitter(cov, "Gaussian log-density covariance")?;
    let diff = x - mean;
    let z = chol
        .l_dirty()
        .solve_lower_triangular(&diff)
        .ok_or_else(|| BnrError::singular("Gaussian log-density triangular solve"))?;
    let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(-0.5 * (d as f64 * LN_2PI + log_det + z.norm_squared()))
}

/// Cholesky factorization with the escalating jitter policy of [`log_mvn_density`].
pub fn factor_with_jitter(cov: &DMatrix<f64>, context: &str) -> Result<Cholesky<f64, Dyn>> {
    if let Ok(c) = cholesky(cov, context) {
        return Ok(c);
    }
    let d = cov.nrows().max(1);
    let mean_diag = (cov.trace() / d as f64).abs().max(f64::MIN_POSITIVE);
    for rel in [1e-10, 1e-6] {
        let mut jittered = cov.clone();
        for i in 0..cov.nrows() {
            jittered[(i, i)] += rel * mean_diag;
        }
        if let Some(c) = Cholesky::new(jittered) {
            return Ok(c);
        }
    }
    Err(BnrError::singular(format!(
        "{context}: not positive definite even after jitter"
    )))
}

/// Log-density of `N(mean, diag(var))`; used for the q-dimensional edge terms.
pub fn log_diag_normal_density(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    x.iter()
        .zip(mean)
        .zip(var)
        .map(|((&xi, &mi), &vi)| -0.5 * (LN_2PI + vi.ln() + (xi - mi).powi(2) / vi))
        .sum()
}
