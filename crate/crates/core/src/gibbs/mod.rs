//! Gibbs sampler for the network regression posterior.
//!
//! One sweep visits the blocks in a fixed order: `tau2`; `(xi_k, u_k)` for
//! every node; `gamma`; `s`; `theta`; `Delta`; `M`; `mu`; then `lambda_r`
//! followed by row `r` of `pi_tilde` for every latent dimension. Edge means
//! `W` are always recomputed from the freshest `u` and `Λ`.

mod chain;
mod checkpoint;
pub mod updates;

pub use chain::{extend_chains, run_chain, run_chains, Chain, SweepConfig};
pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use updates::NodeUpdateWorkspace;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{BnrError, Result};
use crate::samplers::{self, log_diag_normal_density, log_mvn_density};
use crate::types::{ChainState, Hyperparameters, NetworkDataset};

/// Starting point of a chain.
///
/// `mu` and `tau2` start at the response mean and variance, the edge
/// coefficients at zero, every node active with `u_k ~ N(0, I_R)`, and all
/// other blocks at the centre of their priors.
pub fn initial_state<R: Rng + ?Sized>(
    data: &NetworkDataset,
    hyper: &Hyperparameters,
    rng: &mut R,
) -> Result<ChainState> {
    hyper.validate()?;
    let (v, q, r) = (data.v(), data.q(), hyper.r);
    let (mean, var) = data.response_moments();
    let tau2 = if var > 0.0 && var.is_finite() { var } else { 1.0 };
    let u = DMatrix::from_fn(r, v, |_, _| samplers::normal(0.0, 1.0, rng));
    Ok(ChainState {
        gamma: DVector::zeros(q),
        u,
        xi: vec![true; v],
        lambda: vec![1; r],
        pi_tilde: DMatrix::from_element(r, 3, 1.0 / 3.0),
        delta: 0.5,
        m: DMatrix::identity(r, r),
        s: DVector::from_element(q, 1.0),
        theta: hyper.zeta / hyper.iota,
        tau2,
        mu: mean,
    })
}

/// Advances `state` by one full sweep.
pub fn gibbs_step<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &NetworkDataset,
    hyper: &Hyperparameters,
    rng: &mut R,
) -> Result<()> {
    if state.v() != data.v() || state.gamma.len() != data.q() || state.r() != hyper.r {
        return Err(BnrError::dims(
            "chain state does not match dataset or latent dimension",
        ));
    }
    updates::update_tau2(state, data, rng)?;

    let m_inv = state
        .m
        .clone()
        .cholesky()
        .ok_or_else(|| BnrError::singular("latent covariance M inverse"))?
        .inverse();
    for k in 0..data.v() {
        updates::update_node(k, state, &m_inv, rng)?;
    }

    updates::update_gamma(state, data, rng)?;
    updates::update_s(state, rng)?;
    updates::update_theta(state, hyper, rng)?;
    updates::update_delta(state, hyper, rng)?;
    updates::update_m(state, hyper, rng)?;
    updates::update_mu(state, data, rng);
    for r in 0..hyper.r {
        updates::update_lambda_r(r, state, rng);
        updates::update_pi_r(r, state, hyper, rng)?;
    }
    Ok(())
}

/// Unnormalized log joint density of the state and data.
///
/// Inactive nodes contribute through `log(1 - Delta)` only (the point mass
/// at zero has no density term). Constants that do not depend on the state
/// are dropped.
pub fn log_joint(state: &ChainState, data: &NetworkDataset, hyper: &Hyperparameters) -> f64 {
    let n = data.n();
    let fitted = data.design() * &state.gamma;
    let resid_sq: f64 = data
        .y()
        .iter()
        .zip(fitted.iter())
        .map(|(y, f)| (y - state.mu - f).powi(2))
        .sum();
    let mut lp = -0.5 * n as f64 * state.tau2.ln() - 0.5 * resid_sq / state.tau2;

    let w = state.edge_means();
    let var: Vec<f64> = state.s.iter().map(|s| state.tau2 * s).collect();
    lp += log_diag_normal_density(state.gamma.as_slice(), w.as_slice(), &var);

    lp += state
        .s
        .iter()
        .map(|s| (state.theta / 2.0).ln() - state.theta * s / 2.0)
        .sum::<f64>();
    lp += (hyper.zeta - 1.0) * state.theta.ln() - hyper.iota * state.theta;

    let r = state.r();
    let zero = DVector::zeros(r);
    for k in 0..state.v() {
        if state.xi[k] {
            lp += state.delta.ln();
            lp += log_mvn_density(&state.u.column(k).into_owned(), &zero, &state.m)
                .unwrap_or(f64::NEG_INFINITY);
        } else {
            lp += (1.0 - state.delta).ln();
        }
    }
    lp += (hyper.a_delta - 1.0) * state.delta.ln() + (hyper.b_delta - 1.0) * (1.0 - state.delta).ln();

    if let Some(chol) = state.m.clone().cholesky() {
        let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        lp += -0.5 * (hyper.nu + r as f64 + 1.0) * log_det - 0.5 * chol.inverse().trace();
    } else {
        lp = f64::NEG_INFINITY;
    }

    for (row, &l) in state.lambda.iter().enumerate() {
        let slot = updates::LAMBDA_VALUES.iter().position(|&v| v == l).unwrap_or(0);
        lp += state.pi_tilde[(row, slot)].ln();
        lp += (((row + 1) as f64).powf(hyper.eta) - 1.0) * state.pi_tilde[(row, 0)].ln();
    }
    // flat prior on mu, 1/tau2 on the variance
    lp - state.tau2.ln()
}
