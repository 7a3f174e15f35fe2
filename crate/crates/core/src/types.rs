//! Dataset, hyperparameter, chain-state and draw-storage types.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{BnrError, Result};
use crate::network::{check_adjacency, edge_count, upper_triangle_vectorize};

/// Responses plus one symmetric adjacency matrix per sample.
///
/// The design matrix `X` (row `i` = upper triangle of `A_i`) is built once at
/// construction, together with the Gram matrix `XᵀX` used by every sweep.
#[derive(Debug, Clone)]
pub struct NetworkDataset {
    v: usize,
    y: DVector<f64>,
    adjacency: Vec<DMatrix<f64>>,
    x: DMatrix<f64>,
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
    x_colsum: DVector<f64>,
}

impl NetworkDataset {
    pub fn new(y: Vec<f64>, adjacency: Vec<DMatrix<f64>>) -> Result<Self> {
        if y.is_empty() {
            return Err(BnrError::invalid("dataset has no samples"));
        }
        if y.len() != adjacency.len() {
            return Err(BnrError::dims(format!(
                "{} responses but {} adjacency matrices",
                y.len(),
                adjacency.len()
            )));
        }
        if let Some(bad) = y.iter().position(|v| !v.is_finite()) {
            return Err(BnrError::invalid(format!(
                "response {} is not finite",
                bad + 1
            )));
        }
        let v = adjacency[0].nrows();
        if v < 2 {
            return Err(BnrError::invalid("networks need at least two nodes"));
        }
        let q = edge_count(v);
        let mut x = DMatrix::zeros(y.len(), q);
        for (i, a) in adjacency.iter().enumerate() {
            if a.shape() != (v, v) {
                return Err(BnrError::dims(format!(
                    "sample {} has a {}x{} network, expected {v}x{v}",
                    i + 1,
                    a.nrows(),
                    a.ncols()
                )));
            }
            check_adjacency(a, 0.0)
                .map_err(|e| BnrError::invalid(format!("sample {}: {e}", i + 1)))?;
            let row = upper_triangle_vectorize(a)?;
            x.row_mut(i).copy_from(&row.transpose());
        }
        let y = DVector::from_vec(y);
        let xtx = x.tr_mul(&x);
        let xty = x.tr_mul(&y);
        let x_colsum = x.row_sum().transpose();
        Ok(Self {
            v,
            y,
            adjacency,
            x,
            xtx,
            xty,
            x_colsum,
        })
    }

    /// Number of samples.
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of nodes.
    pub fn v(&self) -> usize {
        self.v
    }

    /// Number of edges, `V(V-1)/2`.
    pub fn q(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn adjacency(&self) -> &[DMatrix<f64>] {
        &self.adjacency
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.xtx
    }

    /// `Xᵀy`.
    pub fn xty(&self) -> &DVector<f64> {
        &self.xty
    }

    /// `Xᵀ1`.
    pub fn x_colsum(&self) -> &DVector<f64> {
        &self.x_colsum
    }

    /// Sample mean and (unbiased) variance of the responses.
    pub fn response_moments(&self) -> (f64, f64) {
        let n = self.n() as f64;
        let mean = self.y.sum() / n;
        let var = if self.n() > 1 {
            self.y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        (mean, var)
    }
}

/// Fixed prior constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// Latent dimension.
    pub r: usize,
    /// Dirichlet exponent for the probability of `lambda_r = 0`; must exceed 1.
    pub eta: f64,
    /// Inverse-Wishart degrees of freedom; must exceed `r - 1`.
    pub nu: f64,
    pub a_delta: f64,
    pub b_delta: f64,
    /// Gamma shape for `theta`.
    pub zeta: f64,
    /// Gamma rate for `theta`.
    pub iota: f64,
}

impl Hyperparameters {
    /// Weakly informative defaults for latent dimension `r`.
    pub fn with_dimension(r: usize) -> Self {
        Self {
            r,
            eta: 1.01,
            nu: r as f64 + 2.0,
            a_delta: 1.0,
            b_delta: 1.0,
            zeta: 1.0,
            iota: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(BnrError::invalid("latent dimension R must be positive"));
        }
        if !(self.eta > 1.0) {
            return Err(BnrError::invalid(format!("eta = {} must exceed 1", self.eta)));
        }
        if !(self.nu > self.r as f64 - 1.0) {
            return Err(BnrError::invalid(format!(
                "nu = {} must exceed R - 1 = {}",
                self.nu,
                self.r - 1
            )));
        }
        for (name, val) in [
            ("a_delta", self.a_delta),
            ("b_delta", self.b_delta),
            ("zeta", self.zeta),
            ("iota", self.iota),
        ] {
            if !(val > 0.0 && val.is_finite()) {
                return Err(BnrError::invalid(format!("{name} = {val} must be positive")));
            }
        }
        Ok(())
    }
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self::with_dimension(7)
    }
}

/// Current values of every latent parameter of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    /// Edge coefficients, length `q`.
    pub gamma: DVector<f64>,
    /// Latent positions, `R x V`; column `k` is `u_k`.
    pub u: DMatrix<f64>,
    /// Node inclusion indicators.
    pub xi: Vec<bool>,
    /// Diagonal of `Λ`, entries in `{-1, 0, 1}`.
    pub lambda: Vec<i8>,
    /// `R x 3` probabilities of `lambda_r` being `0`, `1`, `-1`.
    pub pi_tilde: DMatrix<f64>,
    pub delta: f64,
    /// Latent covariance, `R x R`.
    pub m: DMatrix<f64>,
    /// Per-edge scales, length `q`.
    pub s: DVector<f64>,
    pub theta: f64,
    pub tau2: f64,
    pub mu: f64,
}

impl ChainState {
    pub fn r(&self) -> usize {
        self.lambda.len()
    }

    pub fn v(&self) -> usize {
        self.xi.len()
    }

    /// Prior mean of the edge coefficients, `W_kl = u_kᵀ Λ u_l`.
    pub fn edge_means(&self) -> DVector<f64> {
        edge_means_with(&self.u, &self.lambda)
    }

    /// Checks every structural invariant; returns a description of the first violation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let finite = |name: &str, it: &mut dyn Iterator<Item = f64>| -> std::result::Result<(), String> {
            for x in it {
                if !x.is_finite() {
                    return Err(format!("{name} contains a non-finite value"));
                }
            }
            Ok(())
        };
        finite("gamma", &mut self.gamma.iter().copied())?;
        finite("u", &mut self.u.iter().copied())?;
        finite("pi_tilde", &mut self.pi_tilde.iter().copied())?;
        finite("M", &mut self.m.iter().copied())?;
        finite("s", &mut self.s.iter().copied())?;
        finite(
            "scalars",
            &mut [self.delta, self.theta, self.tau2, self.mu].into_iter(),
        )?;
        for (k, &on) in self.xi.iter().enumerate() {
            let zero = self.u.column(k).iter().all(|&x| x == 0.0);
            if !on && !zero {
                return Err(format!("xi_{} = 0 but u_{} is nonzero", k + 1, k + 1));
            }
        }
        if self.lambda.iter().any(|l| !(-1..=1).contains(l)) {
            return Err("lambda entry outside {-1, 0, 1}".into());
        }
        for r in 0..self.pi_tilde.nrows() {
            let row = self.pi_tilde.row(r);
            if row.iter().any(|&p| p < 0.0) || (row.sum() - 1.0).abs() > 1e-9 {
                return Err(format!("pi_tilde row {} is not a probability vector", r + 1));
            }
        }
        if !(self.delta >= 0.0 && self.delta <= 1.0) {
            return Err(format!("Delta = {} outside [0, 1]", self.delta));
        }
        if self.s.iter().any(|&x| x <= 0.0) {
            return Err("scale s has a nonpositive entry".into());
        }
        if self.theta <= 0.0 || self.tau2 <= 0.0 {
            return Err("theta or tau2 is nonpositive".into());
        }
        if (0..self.m.nrows()).any(|i| self.m[(i, i)] <= 0.0)
            || self.m.clone().cholesky().is_none()
        {
            return Err("M is not positive definite".into());
        }
        Ok(())
    }
}

/// `W_kl = u_kᵀ Λ u_l` for all pairs `k < l`.
pub(crate) fn edge_means_with(u: &DMatrix<f64>, lambda: &[i8]) -> DVector<f64> {
    let v = u.ncols();
    let mut scaled = u.clone();
    for (r, &l) in lambda.iter().enumerate() {
        scaled.row_mut(r).scale_mut(l as f64);
    }
    // Gram of the latent columns under Λ
    let g = u.tr_mul(&scaled);
    let mut w = DVector::zeros(edge_count(v));
    let mut idx = 0;
    for k in 0..v {
        for l in k + 1..v {
            w[idx] = g[(k, l)];
            idx += 1;
        }
    }
    w
}

/// Retained post-burn-in draws, stored per chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub chains: usize,
    pub retained: usize,
    pub q: usize,
    pub v: usize,
    /// `chains x retained x q`, row-major.
    pub gamma: Vec<f64>,
    /// `chains x retained x V`.
    pub xi: Vec<u8>,
    /// `chains x retained`.
    pub mu: Vec<f64>,
    pub tau2: Vec<f64>,
    /// Unnormalized log joint density of each retained draw.
    pub log_joint: Vec<f64>,
}

impl PosteriorDraws {
    /// Merges per-chain draws; all chains must agree in shape.
    pub fn from_chains(chains: Vec<ChainDraws>) -> Result<Self> {
        let first = chains
            .first()
            .ok_or_else(|| BnrError::invalid("no chains to merge"))?;
        let (retained, q, v) = (first.len(), first.q, first.v);
        let mut out = Self {
            chains: chains.len(),
            retained,
            q,
            v,
            gamma: Vec::with_capacity(chains.len() * retained * q),
            xi: Vec::with_capacity(chains.len() * retained * v),
            mu: Vec::new(),
            tau2: Vec::new(),
            log_joint: Vec::new(),
        };
        for (c, ch) in chains.into_iter().enumerate() {
            if ch.len() != retained || ch.q != q || ch.v != v {
                return Err(BnrError::dims(format!(
                    "chain {} has {} draws of ({}, {}), expected {retained} of ({q}, {v})",
                    c + 1,
                    ch.len(),
                    ch.q,
                    ch.v
                )));
            }
            out.gamma.extend(ch.gamma);
            out.xi.extend(ch.xi);
            out.mu.extend(ch.mu);
            out.tau2.extend(ch.tau2);
            out.log_joint.extend(ch.log_joint);
        }
        Ok(out)
    }

    pub fn total(&self) -> usize {
        self.chains * self.retained
    }

    pub fn gamma_draw(&self, chain: usize, draw: usize) -> &[f64] {
        let start = (chain * self.retained + draw) * self.q;
        &self.gamma[start..start + self.q]
    }

    pub fn xi_draw(&self, chain: usize, draw: usize) -> &[u8] {
        let start = (chain * self.retained + draw) * self.v;
        &self.xi[start..start + self.v]
    }

    /// Per-chain traces of one edge coefficient.
    pub fn gamma_traces(&self, edge: usize) -> Vec<Vec<f64>> {
        (0..self.chains)
            .map(|c| (0..self.retained).map(|d| self.gamma_draw(c, d)[edge]).collect())
            .collect()
    }

    /// Per-chain traces of one node indicator, as 0.0/1.0.
    pub fn xi_traces(&self, node: usize) -> Vec<Vec<f64>> {
        (0..self.chains)
            .map(|c| {
                (0..self.retained)
                    .map(|d| self.xi_draw(c, d)[node] as f64)
                    .collect()
            })
            .collect()
    }

    pub fn scalar_traces(values: &[f64], chains: usize, retained: usize) -> Vec<Vec<f64>> {
        values.chunks(retained.max(1)).take(chains).map(|c| c.to_vec()).collect()
    }
}

/// Draws collected by a single chain.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChainDraws {
    pub q: usize,
    pub v: usize,
    pub gamma: Vec<f64>,
    pub xi: Vec<u8>,
    pub mu: Vec<f64>,
    pub tau2: Vec<f64>,
    pub log_joint: Vec<f64>,
}

impl ChainDraws {
    pub fn new(q: usize, v: usize) -> Self {
        Self {
            q,
            v,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub(crate) fn push(&mut self, state: &ChainState, log_joint: f64) {
        self.gamma.extend(state.gamma.iter());
        self.xi.extend(state.xi.iter().map(|&b| b as u8));
        self.mu.push(state.mu);
        self.tau2.push(state.tau2);
        self.log_joint.push(log_joint);
    }

    pub fn append(&mut self, other: ChainDraws) {
        self.gamma.extend(other.gamma);
        self.xi.extend(other.xi);
        self.mu.extend(other.mu);
        self.tau2.extend(other.tau2);
        self.log_joint.extend(other.log_joint);
    }
}
