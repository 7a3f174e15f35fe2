//! Full-conditional updates for every block of the model.
//!
//! Each `update_*` function redraws one block in place from its full
//! conditional given the rest of the state. The `*_conditional` helpers
//! expose the conditional's parameters so they can be checked directly.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{BnrError, Result};
use crate::network::edge_index0;
use crate::samplers::{
    self, log_diag_normal_density, log_mvn_density, sample_gig,
    sample_inverse_wishart, sample_mvn_precision, symmetrize,
};
use crate::types::{edge_means_with, ChainState, Hyperparameters, NetworkDataset};

/// Values of `lambda_r` in the order their probabilities are stored in `pi_tilde`.
pub const LAMBDA_VALUES: [i8; 3] = [0, 1, -1];

fn residuals(state: &ChainState, data: &NetworkDataset) -> DVector<f64> {
    let fitted = data.design() * &state.gamma;
    data.y().map(|y| y - state.mu) - fitted
}

/// Shape and rate of the inverse-gamma conditional of `tau2`.
pub fn tau2_conditional(state: &ChainState, data: &NetworkDataset) -> (f64, f64) {
    let n = data.n() as f64;
    let q = data.q() as f64;
    let r = residuals(state, data);
    let w = state.edge_means();
    let prior_quad: f64 = state
        .gamma
        .iter()
        .zip(w.iter())
        .zip(state.s.iter())
        .map(|((g, w), s)| (g - w).powi(2) / s)
        .sum();
    // n/2 + V(V-1)/4 = n/2 + q/2
    (n / 2.0 + q / 2.0, 0.5 * r.norm_squared() + 0.5 * prior_quad)
}

pub fn update_tau2<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &NetworkDataset,
    rng: &mut R,
) -> Result<f64> {
    let (shape, rate) = tau2_conditional(state, data);
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(BnrError::Degenerate(format!(
            "tau2 conditional has rate {rate}: residuals and edge deviations are exactly zero"
        )));
    }
    state.tau2 = samplers::inverse_gamma(shape, rate, rng)?;
    Ok(state.tau2)
}

/// Quantities shared by the update of one node's latent vector.
#[derive(Debug, Clone)]
pub struct NodeUpdateWorkspace {
    /// Coefficients of the `V - 1` edges incident to the node.
    pub gamma_k: DVector<f64>,
    /// Diagonal of `H_k`, the incident scales.
    pub h_k: DVector<f64>,
    /// `(V - 1) x R`; row `j` is `(Λ u_j)ᵀ` for the other nodes.
    pub u_star: DMatrix<f64>,
    /// Log of the spike weight `w_{u_k}`.
    pub log_w: f64,
    pub m_uk: DVector<f64>,
    pub sigma_uk: DMatrix<f64>,
}

fn incident_edges(k: usize, v: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..v)
        .filter(move |&j| j != k)
        .map(move |j| (j, if j < k { edge_index0(j, k, v) } else { edge_index0(k, j, v) }))
}

/// Incident coefficients, scales and the `U*_k` matrix for node `k` (0-based).
pub fn node_inputs(k: usize, state: &ChainState) -> (DVector<f64>, DVector<f64>, DMatrix<f64>) {
    let v = state.v();
    let r = state.r();
    let mut gamma_k = DVector::zeros(v - 1);
    let mut h_k = DVector::zeros(v - 1);
    let mut u_star = DMatrix::zeros(v - 1, r);
    for (row, (j, e)) in incident_edges(k, v).enumerate() {
        gamma_k[row] = state.gamma[e];
        h_k[row] = state.s[e];
        for c in 0..r {
            u_star[(row, c)] = state.u[(c, j)] * state.lambda[c] as f64;
        }
    }
    (gamma_k, h_k, u_star)
}

/// `log w_{u_k}`: posterior log-probability that node `k` is in the spike.
pub fn node_log_weight(k: usize, state: &ChainState) -> Result<f64> {
    let (gamma_k, h_k, u_star) = node_inputs(k, state);
    node_log_weight_from(&gamma_k, &h_k, &u_star, state)
}

fn node_log_weight_from(
    gamma_k: &DVector<f64>,
    h_k: &DVector<f64>,
    u_star: &DMatrix<f64>,
    state: &ChainState,
) -> Result<f64> {
    let var0: Vec<f64> = h_k.iter().map(|h| state.tau2 * h).collect();
    let zeros = vec![0.0; gamma_k.len()];
    let log_spike = log_diag_normal_density(gamma_k.as_slice(), &zeros, &var0);

    let mut cov1 = u_star * &state.m * u_star.transpose();
    for (i, v) in var0.iter().enumerate() {
        cov1[(i, i)] += v;
    }
    let log_slab = log_mvn_density(gamma_k, &DVector::zeros(gamma_k.len()), &symmetrize(cov1))
        .map_err(|e| BnrError::singular(format!("latent-node weight: {e}")))?;

    let a = (1.0 - state.delta).ln() + log_spike;
    let b = state.delta.ln() + log_slab;
    if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY || a.is_nan() || b.is_nan() {
        return Err(BnrError::Degenerate(
            "latent-node mixture weights are both zero".into(),
        ));
    }
    // log(e^a / (e^a + e^b)) without losing digits when it is close to 0
    let d = b - a;
    Ok(if d <= 0.0 {
        -d.exp().ln_1p()
    } else {
        -d - (-d).exp().ln_1p()
    })
}

/// Redraws `xi_k` and `u_k` jointly for 0-based node `k`.
///
/// `m_inv` is the inverse of the current latent covariance `M`.
pub fn update_node<R: Rng + ?Sized>(
    k: usize,
    state: &mut ChainState,
    m_inv: &DMatrix<f64>,
    rng: &mut R,
) -> Result<NodeUpdateWorkspace> {
    let (gamma_k, h_k, u_star) = node_inputs(k, state);
    let log_w = node_log_weight_from(&gamma_k, &h_k, &u_star, state)?;
    // P(xi_k = 1) = 1 - w computed without cancellation
    let p_slab = -(log_w.exp_m1());
    let on = samplers::bernoulli(p_slab.clamp(0.0, 1.0), rng)?;

    let r = state.r();
    let mut ws = NodeUpdateWorkspace {
        gamma_k,
        h_k,
        u_star,
        log_w,
        m_uk: DVector::zeros(r),
        sigma_uk: DMatrix::zeros(r, r),
    };
    state.xi[k] = on;
    if !on {
        state.u.column_mut(k).fill(0.0);
        return Ok(ws);
    }

    let inv_tau2 = 1.0 / state.tau2;
    let mut weighted = ws.u_star.clone();
    for (i, h) in ws.h_k.iter().enumerate() {
        weighted.row_mut(i).scale_mut(1.0 / h);
    }
    // U*ᵀ H⁻¹ U* / τ² + M⁻¹
    let precision = symmetrize(ws.u_star.tr_mul(&weighted) * inv_tau2 + m_inv);
    let b = weighted.tr_mul(&ws.gamma_k) * inv_tau2;
    let draw = sample_mvn_precision(&b, &precision, 1.0, &format!("latent vector u_{}", k + 1), rng)?;
    if let Some(chol) = precision.clone().cholesky() {
        ws.sigma_uk = chol.inverse();
        ws.m_uk = &ws.sigma_uk * &b;
    }
    state.u.column_mut(k).copy_from(&draw);
    Ok(ws)
}

/// Mean `(XᵀX + D⁻¹)⁻¹(Xᵀ(y - μ1) + D⁻¹W)` and precision `XᵀX + D⁻¹` of `gamma`.
pub fn gamma_precision_form(state: &ChainState, data: &NetworkDataset) -> (DVector<f64>, DMatrix<f64>) {
    let w = state.edge_means();
    let mut precision = data.gram().clone();
    let mut b = data.xty() - data.x_colsum() * state.mu;
    for e in 0..data.q() {
        let inv_s = 1.0 / state.s[e];
        precision[(e, e)] += inv_s;
        b[e] += w[e] * inv_s;
    }
    (b, precision)
}

pub fn update_gamma<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &NetworkDataset,
    rng: &mut R,
) -> Result<()> {
    let (b, precision) = gamma_precision_form(state, data);
    state.gamma = sample_mvn_precision(&b, &precision, state.tau2, "edge coefficients gamma", rng)?;
    Ok(())
}

/// `chi` parameter of each scale's GIG conditional, `(gamma_kl - W_kl)^2 / tau2`.
pub fn scale_chis(state: &ChainState) -> Vec<f64> {
    let w = state.edge_means();
    state
        .gamma
        .iter()
        .zip(w.iter())
        .map(|(g, w)| (g - w).powi(2) / state.tau2)
        .collect()
}

pub fn update_s<R: Rng + ?Sized>(state: &mut ChainState, rng: &mut R) -> Result<()> {
    let chis = scale_chis(state);
    for (e, chi) in chis.into_iter().enumerate() {
        state.s[e] = sample_gig(0.5, chi, state.theta, rng)?;
    }
    Ok(())
}

/// Shape and rate of the gamma conditional of `theta`.
pub fn theta_conditional(state: &ChainState, hyper: &Hyperparameters) -> (f64, f64) {
    (
        hyper.zeta + state.s.len() as f64,
        hyper.iota + state.s.sum() / 2.0,
    )
}

pub fn update_theta<R: Rng + ?Sized>(
    state: &mut ChainState,
    hyper: &Hyperparameters,
    rng: &mut R,
) -> Result<f64> {
    let (shape, rate) = theta_conditional(state, hyper);
    state.theta = samplers::gamma(shape, rate, rng)?;
    Ok(state.theta)
}

/// Beta parameters of the conditional of `Delta`.
pub fn delta_conditional(state: &ChainState, hyper: &Hyperparameters) -> (f64, f64) {
    let on = state.xi.iter().filter(|&&x| x).count() as f64;
    let off = state.xi.len() as f64 - on;
    (hyper.a_delta + on, hyper.b_delta + off)
}

pub fn update_delta<R: Rng + ?Sized>(
    state: &mut ChainState,
    hyper: &Hyperparameters,
    rng: &mut R,
) -> Result<f64> {
    let (a, b) = delta_conditional(state, hyper);
    state.delta = samplers::beta(a, b, rng)?;
    Ok(state.delta)
}

/// Scale matrix and degrees of freedom of the inverse-Wishart conditional of `M`.
pub fn m_conditional(state: &ChainState, hyper: &Hyperparameters) -> (DMatrix<f64>, f64) {
    let r = state.r();
    let mut scale = DMatrix::identity(r, r);
    let mut active = 0usize;
    for k in 0..state.v() {
        if state.xi[k] {
            let u = state.u.column(k);
            scale += u * u.transpose();
            active += 1;
        }
    }
    (symmetrize(scale), hyper.nu + active as f64)
}

pub fn update_m<R: Rng + ?Sized>(
    state: &mut ChainState,
    hyper: &Hyperparameters,
    rng: &mut R,
) -> Result<()> {
    let (scale, dof) = m_conditional(state, hyper);
    state.m = sample_inverse_wishart(&scale, dof, rng)
        .map_err(|e| BnrError::singular(format!("latent covariance M: {e}")))?;
    Ok(())
}

/// Mean and variance of the normal conditional of `mu`.
pub fn mu_conditional(state: &ChainState, data: &NetworkDataset) -> (f64, f64) {
    let n = data.n() as f64;
    let fitted = data.design() * &state.gamma;
    let mean = (data.y() - fitted).sum() / n;
    (mean, state.tau2 / n)
}

pub fn update_mu<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &NetworkDataset,
    rng: &mut R,
) -> f64 {
    let (mean, var) = mu_conditional(state, data);
    state.mu = samplers::normal(mean, var.sqrt(), rng);
    state.mu
}

/// Posterior probabilities of `lambda_r` (0-based `r`) taking `0`, `1`, `-1`.
pub fn lambda_probabilities(r: usize, state: &ChainState) -> [f64; 3] {
    let var: Vec<f64> = state.s.iter().map(|s| state.tau2 * s).collect();
    let mut logs = [0.0; 3];
    let mut lambda = state.lambda.clone();
    for (slot, &value) in LAMBDA_VALUES.iter().enumerate() {
        lambda[r] = value;
        let w = edge_means_with(&state.u, &lambda);
        logs[slot] = state.pi_tilde[(r, slot)].ln()
            + log_diag_normal_density(state.gamma.as_slice(), w.as_slice(), &var);
    }
    let p = samplers::softmax_from_logs(&logs);
    [p[0], p[1], p[2]]
}

pub fn update_lambda_r<R: Rng + ?Sized>(r: usize, state: &mut ChainState, rng: &mut R) -> i8 {
    let p = lambda_probabilities(r, state);
    let x: f64 = rng.random();
    let value = if x < p[0] {
        0
    } else if x < p[0] + p[1] {
        1
    } else {
        -1
    };
    state.lambda[r] = value;
    value
}

/// Dirichlet parameters for row `r` (0-based) of `pi_tilde`.
pub fn pi_conditional(r: usize, state: &ChainState, hyper: &Hyperparameters) -> [f64; 3] {
    let count = |v: i8| state.lambda.iter().filter(|&&l| l == v).count() as f64;
    [
        ((r + 1) as f64).powf(hyper.eta) + count(0),
        1.0 + count(1),
        1.0 + count(-1),
    ]
}

pub fn update_pi_r<R: Rng + ?Sized>(
    r: usize,
    state: &mut ChainState,
    hyper: &Hyperparameters,
    rng: &mut R,
) -> Result<()> {
    let alpha = pi_conditional(r, state, hyper);
    let draw = samplers::dirichlet(&alpha, rng)?;
    for (slot, p) in draw.into_iter().enumerate() {
        state.pi_tilde[(r, slot)] = p;
    }
    Ok(())
}
