//! Synthetic datasets with known truth, plus sample-network construction
//! and augmentation for presence/absence data.
//!
//! Every generator draws, in order: the tree, the node indicators, the
//! coefficients, then for each sample its member set and noise. A fixed seed
//! therefore reproduces a dataset exactly, and [`SimTruth`] keeps the noise so
//! responses can be rebuilt from the stored pieces.

mod tree;

pub use tree::{phylo_covariance, sample_adjacency, simulate_tree, tree_distances, PhyloTree};

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BnrError, Result};
use crate::network::edge_pairs0;
use crate::samplers::{bernoulli, gamma, normal};
use crate::types::NetworkDataset;

/// Mean of the pairwise interaction coefficients.
pub const INTERACTION_MEAN: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Response is the Frobenius product with a sparse coefficient matrix.
    Theoretical,
    /// Sum of main effects of influential members.
    Additive,
    /// Additive plus pairwise effects between influential members.
    Interaction,
    /// Interaction response capped at a limit.
    Redundant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientKind {
    /// Independent `N(mean, 1)` main effects.
    Random,
    /// Main effects from Brownian motion on the tree.
    Phylogenetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub model: ModelKind,
    pub coefficients: CoefficientKind,
    pub n: usize,
    /// Leaves of the tree, i.e. nodes of every network.
    pub nodes: usize,
    /// Members drawn per sample.
    pub k: usize,
    /// Probability that a node is influential.
    pub pi: f64,
    /// Mean of the edge effects (theoretical) or of the main effects (others).
    pub mu: f64,
    /// Response cap; redundant model only. Defaults from [`default_limit`].
    pub limit: Option<f64>,
    /// Count each unordered pair once in the interaction sum instead of
    /// summing over the full index grid.
    pub pairs_once: bool,
    pub branch_min: f64,
    pub branch_max: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Theoretical,
            coefficients: CoefficientKind::Random,
            n: 500,
            nodes: 30,
            k: 8,
            pi: 0.8,
            mu: 1.6,
            limit: None,
            pairs_once: false,
            branch_min: 0.0,
            branch_max: 1.0,
            seed: 1,
        }
    }
}

/// Response cap used for the redundant model at the standard grid points.
pub fn default_limit(pi: f64, mu: f64) -> Option<f64> {
    let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
    [(0.3, 0.8, 3.0), (0.3, 1.6, 7.0), (0.8, 0.8, 22.0), (0.8, 1.6, 30.0)]
        .into_iter()
        .find(|&(p, m, _)| close(p, pi) && close(m, mu))
        .map(|(_, _, l)| l)
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: String| Err(BnrError::invalid(format!("{field}: {why}")));
        if self.n == 0 {
            return bad("n", "must be at least 1".into());
        }
        if self.nodes < 2 {
            return bad("nodes", format!("{} is fewer than 2", self.nodes));
        }
        if self.k > self.nodes {
            return bad("k", format!("{} exceeds nodes = {}", self.k, self.nodes));
        }
        if !(0.0..=1.0).contains(&self.pi) {
            return bad("pi", format!("{} outside [0, 1]", self.pi));
        }
        if !self.mu.is_finite() {
            return bad("mu", "must be finite".into());
        }
        if !(self.branch_min >= 0.0 && self.branch_max > self.branch_min && self.branch_max.is_finite()) {
            return bad(
                "branch_max",
                format!("range ({}, {}] is empty", self.branch_min, self.branch_max),
            );
        }
        match (self.model, self.limit) {
            (ModelKind::Redundant, Some(l)) if !l.is_finite() => bad("limit", format!("{l} is not finite")),
            (ModelKind::Redundant, None) if default_limit(self.pi, self.mu).is_none() => bad(
                "limit",
                format!("required for pi = {}, mu = {} (no default)", self.pi, self.mu),
            ),
            (ModelKind::Redundant, _) => Ok(()),
            (_, Some(_)) => bad("limit", "only valid for the redundant model".into()),
            (_, None) => Ok(()),
        }
    }

    /// The response cap in force, if any.
    pub fn effective_limit(&self) -> Option<f64> {
        match self.model {
            ModelKind::Redundant => self.limit.or_else(|| default_limit(self.pi, self.mu)),
            _ => None,
        }
    }
}

/// Ground truth behind a simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTruth {
    pub model: ModelKind,
    pub xi: Vec<bool>,
    /// Coefficient matrix of the theoretical model.
    pub b_true: Option<DMatrix<f64>>,
    /// Main effects (additive, interaction, redundant).
    pub b_main: Option<Vec<f64>>,
    /// Pairwise effects `b_lj` on the full grid (interaction, redundant).
    pub b_pair: Option<DMatrix<f64>>,
    pub pairs_once: bool,
    pub limit: Option<f64>,
    /// Member set of every sample, sorted.
    pub members: Vec<Vec<usize>>,
    /// Additive noise of every sample.
    pub noise: Vec<f64>,
    /// Leaf distances of the generating tree.
    pub distances: DMatrix<f64>,
}

impl SimTruth {
    /// The symmetric matrix `B` whose Frobenius product with `A_i` equals
    /// the pairwise part of the generating response.
    pub fn b_equivalent(&self) -> DMatrix<f64> {
        let v = self.xi.len();
        if let Some(b) = &self.b_true {
            return b.clone();
        }
        let Some(pair) = &self.b_pair else {
            return DMatrix::zeros(v, v);
        };
        DMatrix::from_fn(v, v, |l, j| {
            if l == j || !(self.xi[l] && self.xi[j]) {
                0.0
            } else if self.pairs_once {
                pair[(l.min(j), l.max(j))] / 2.0
            } else {
                (pair[(l, j)] + pair[(j, l)]) / 2.0
            }
        })
    }

    /// Edges with a nonzero true effect, in edge order.
    pub fn truth_edges(&self) -> Vec<bool> {
        let b = self.b_equivalent();
        edge_pairs0(self.xi.len())
            .into_iter()
            .map(|(k, l)| b[(k, l)] != 0.0)
            .collect()
    }

    pub fn truth_nodes(&self) -> Vec<bool> {
        self.xi.clone()
    }

    /// Noise-free response of one sample given its adjacency, before any cap.
    pub fn signal(&self, sample: usize, adjacency: &DMatrix<f64>) -> f64 {
        let v = self.xi.len();
        if let Some(b) = &self.b_true {
            return adjacency.component_mul(b).sum();
        }
        let mut y = 0.0;
        if let Some(main) = &self.b_main {
            for &l in &self.members[sample] {
                if self.xi[l] {
                    y += main[l];
                }
            }
        }
        if let Some(pair) = &self.b_pair {
            for l in 0..v {
                for j in 0..v {
                    if (!self.pairs_once || l < j) && self.xi[l] && self.xi[j] {
                        y += pair[(l, j)] * adjacency[(l, j)];
                    }
                }
            }
        }
        y
    }

    /// Rebuilds every response from the stored adjacency, truth and noise.
    pub fn responses(&self, adjacency: &[DMatrix<f64>]) -> Vec<f64> {
        adjacency
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let y = self.signal(i, a) + self.noise[i];
                self.limit.map_or(y, |l| y.min(l))
            })
            .collect()
    }
}

fn draw_members<R: Rng + ?Sized>(nodes: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut m = index::sample(rng, nodes, k).into_vec();
    m.sort_unstable();
    m
}

fn draw_indicators<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<Vec<bool>> {
    (0..config.nodes).map(|_| bernoulli(config.pi, rng)).collect()
}

fn draw_main_effects<R: Rng + ?Sized>(config: &SimConfig, tree: &PhyloTree, rng: &mut R) -> Result<Vec<f64>> {
    let z: Vec<f64> = (0..config.nodes).map(|_| normal(0.0, 1.0, rng)).collect();
    Ok(match config.coefficients {
        CoefficientKind::Random => z.iter().map(|x| config.mu + x).collect(),
        CoefficientKind::Phylogenetic => {
            let l = phylo_covariance(tree)
                .cholesky()
                .ok_or_else(|| BnrError::singular("phylogenetic covariance"))?
                .l();
            (l * DVector::from_vec(z)).iter().map(|x| config.mu + x).collect()
        }
    })
}

fn finish<R: Rng + ?Sized>(
    config: &SimConfig,
    distances: DMatrix<f64>,
    mut truth: SimTruth,
    rng: &mut R,
) -> Result<(NetworkDataset, SimTruth)> {
    let mut adjacency = Vec::with_capacity(config.n);
    for _ in 0..config.n {
        let members = draw_members(config.nodes, config.k, rng);
        adjacency.push(sample_adjacency(&distances, &members)?);
        truth.members.push(members);
        truth.noise.push(normal(0.0, 1.0, rng));
    }
    truth.distances = distances;
    let y = truth.responses(&adjacency);
    Ok((NetworkDataset::new(y, adjacency)?, truth))
}

fn start<R: Rng + ?Sized>(config: &SimConfig, expected: &[ModelKind], rng: &mut R) -> Result<(PhyloTree, Vec<bool>)> {
    config.validate()?;
    if !expected.contains(&config.model) {
        return Err(BnrError::invalid(format!(
            "model: generator expects {expected:?}, config has {:?}",
            config.model
        )));
    }
    let tree = simulate_tree(config.nodes, (config.branch_min, config.branch_max), rng)?;
    let xi = draw_indicators(config, rng)?;
    Ok((tree, xi))
}

fn empty_truth(config: &SimConfig, xi: Vec<bool>) -> SimTruth {
    SimTruth {
        model: config.model,
        xi,
        b_true: None,
        b_main: None,
        b_pair: None,
        pairs_once: config.pairs_once,
        limit: config.effective_limit(),
        members: Vec::with_capacity(config.n),
        noise: Vec::with_capacity(config.n),
        distances: DMatrix::zeros(0, 0),
    }
}

/// `B_ij = xi_i xi_j N(mu, 1)` for `i < j`, mirrored; `y_i = <A_i, B> + N(0, 1)`.
pub fn gen_theoretical<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<(NetworkDataset, SimTruth)> {
    let (tree, xi) = start(config, &[ModelKind::Theoretical], rng)?;
    let v = config.nodes;
    let mut b = DMatrix::zeros(v, v);
    for i in 0..v {
        for j in i + 1..v {
            let draw = normal(config.mu, 1.0, rng);
            if xi[i] && xi[j] {
                b[(i, j)] = draw;
                b[(j, i)] = draw;
            }
        }
    }
    let mut truth = empty_truth(config, xi);
    truth.b_true = Some(b);
    finish(config, tree_distances(&tree), truth, rng)
}

/// `y_i = sum of b_l over influential members l, plus N(0, 1)`.
pub fn gen_additive<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<(NetworkDataset, SimTruth)> {
    let (tree, xi) = start(config, &[ModelKind::Additive], rng)?;
    let mut truth = empty_truth(config, xi);
    truth.b_main = Some(draw_main_effects(config, &tree, rng)?);
    finish(config, tree_distances(&tree), truth, rng)
}

fn gen_pairwise<R: Rng + ?Sized>(
    config: &SimConfig,
    expected: ModelKind,
    rng: &mut R,
) -> Result<(NetworkDataset, SimTruth)> {
    let (tree, xi) = start(config, &[expected], rng)?;
    let mut truth = empty_truth(config, xi);
    truth.b_main = Some(draw_main_effects(config, &tree, rng)?);
    let v = config.nodes;
    let mut pair = DMatrix::zeros(v, v);
    for l in 0..v {
        for j in 0..v {
            if l != j {
                pair[(l, j)] = normal(INTERACTION_MEAN, 1.0, rng);
            }
        }
    }
    truth.b_pair = Some(pair);
    finish(config, tree_distances(&tree), truth, rng)
}

/// Additive response plus `sum_l sum_j b_lj A_i[l, j] xi_l xi_j`.
pub fn gen_interaction<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<(NetworkDataset, SimTruth)> {
    gen_pairwise(config, ModelKind::Interaction, rng)
}

/// Interaction response capped at the configured limit.
pub fn gen_redundant<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<(NetworkDataset, SimTruth)> {
    gen_pairwise(config, ModelKind::Redundant, rng)
}

/// Dispatches on `config.model`.
pub fn simulate<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<(NetworkDataset, SimTruth)> {
    match config.model {
        ModelKind::Theoretical => gen_theoretical(config, rng),
        ModelKind::Additive => gen_additive(config, rng),
        ModelKind::Interaction => gen_interaction(config, rng),
        ModelKind::Redundant => gen_redundant(config, rng),
    }
}

/// Per-sample networks: keep meta-network edge `(k, l)` when both ends are present.
pub fn build_sample_networks(meta: &DMatrix<f64>, presence: &[Vec<bool>]) -> Result<Vec<DMatrix<f64>>> {
    let v = meta.nrows();
    if meta.ncols() != v {
        return Err(BnrError::dims(format!("meta-network is {}x{}", v, meta.ncols())));
    }
    if meta != &meta.transpose() {
        return Err(BnrError::invalid("meta-network is not symmetric"));
    }
    presence
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if p.len() != v {
                return Err(BnrError::dims(format!(
                    "sample {} has {} presence flags for {v} nodes",
                    i + 1,
                    p.len()
                )));
            }
            Ok(DMatrix::from_fn(v, v, |k, l| {
                if k != l && p[k] && p[l] {
                    meta[(k, l)]
                } else {
                    0.0
                }
            }))
        })
        .collect()
}

/// Observed responses with node presence and the meta-network they share.
#[derive(Debug, Clone, PartialEq)]
pub struct PresenceData {
    pub y: Vec<f64>,
    pub presence: Vec<Vec<bool>>,
    pub meta: DMatrix<f64>,
}

impl PresenceData {
    pub fn to_dataset(&self) -> Result<NetworkDataset> {
        NetworkDataset::new(self.y.clone(), build_sample_networks(&self.meta, &self.presence)?)
    }
}

/// Appends one perturbed copy of every sample.
///
/// The copy's response gets a `N(0, s^2 / 4)` offset, `s^2` the sample
/// variance of the responses; a negative result is replaced by a
/// `chi^2_3 / 15` draw. Each node is present in the copy with probability
/// 0.9 if present in the original and 0.1 otherwise.
pub fn augment_dataset<R: Rng + ?Sized>(data: &PresenceData, rng: &mut R) -> Result<PresenceData> {
    let n = data.y.len();
    if n == 0 || data.presence.len() != n {
        return Err(BnrError::dims(format!(
            "{n} responses and {} presence rows",
            data.presence.len()
        )));
    }
    let mean = data.y.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        data.y.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let sd = var.sqrt() / 2.0;
    let mut out = data.clone();
    for i in 0..n {
        let mut y = data.y[i] + if sd > 0.0 { normal(0.0, sd, rng) } else { 0.0 };
        if y < 0.0 {
            // chi-square with 3 degrees of freedom, scaled by 1/15
            y = gamma(1.5, 7.5, rng)?;
        }
        let present = data.presence[i]
            .iter()
            .map(|&p| bernoulli(if p { 0.9 } else { 0.1 }, rng))
            .collect::<Result<Vec<_>>>()?;
        out.y.push(y);
        out.presence.push(present);
    }
    out.to_dataset()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::frobenius_inner;
    use crate::rng::RngStream;

    fn config(model: ModelKind) -> SimConfig {
        SimConfig {
            model,
            n: 200,
            nodes: 10,
            k: 6,
            ..SimConfig::default()
        }
    }

    fn check_networks(data: &NetworkDataset, truth: &SimTruth) {
        for (a, m) in data.adjacency().iter().zip(&truth.members) {
            for p in 0..a.nrows() {
                assert_eq!(a[(p, p)], 0.0);
                for q in 0..a.nrows() {
                    assert_eq!(a[(p, q)], a[(q, p)]);
                    let inside = p != q && m.contains(&p) && m.contains(&q);
                    assert_eq!(a[(p, q)] != 0.0, inside);
                }
            }
        }
    }

    #[test]
    fn theoretical_basics() {
        let mut rng = RngStream::new(1, 0);
        let cfg = config(ModelKind::Theoretical);
        let (data, truth) = gen_theoretical(&cfg, &mut rng).unwrap();
        assert_eq!(data.n(), 200);
        assert_eq!(data.v(), 10);
        check_networks(&data, &truth);
        let b = truth.b_true.as_ref().unwrap();
        for i in 0..10 {
            assert_eq!(b[(i, i)], 0.0);
            for j in 0..10 {
                assert_eq!(b[(i, j)], b[(j, i)]);
                if !(truth.xi[i] && truth.xi[j]) {
                    assert_eq!(b[(i, j)], 0.0);
                }
            }
        }
        // regeneration through an independent Frobenius product
        for i in 0..data.n() {
            let y = frobenius_inner(&data.adjacency()[i], b).unwrap() + truth.noise[i];
            assert!((y - data.y()[i]).abs() < 1e-12);
        }
        assert_eq!(truth.responses(data.adjacency()), data.y().as_slice());
        // determinism
        let (again, truth2) = gen_theoretical(&cfg, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(again.y(), data.y());
        assert_eq!(truth2, truth);
    }

    #[test]
    fn zero_probability_gives_pure_noise() {
        for model in [ModelKind::Theoretical, ModelKind::Additive, ModelKind::Interaction] {
            let cfg = SimConfig { pi: 0.0, ..config(model) };
            let (data, truth) = simulate(&cfg, &mut RngStream::new(2, 0)).unwrap();
            assert_eq!(data.y().as_slice(), truth.noise.as_slice());
            assert!(truth.truth_edges().iter().all(|e| !e));
        }
    }

    #[test]
    fn additive_matches_direct_sum() {
        for coefficients in [CoefficientKind::Random, CoefficientKind::Phylogenetic] {
            let cfg = SimConfig { coefficients, ..config(ModelKind::Additive) };
            let (data, truth) = gen_additive(&cfg, &mut RngStream::new(3, 0)).unwrap();
            check_networks(&data, &truth);
            let b = truth.b_main.as_ref().unwrap();
            for i in 0..data.n() {
                let direct: f64 = (0..10)
                    .map(|l| {
                        let m = truth.members[i].contains(&l) as u8 as f64;
                        b[l] * m * truth.xi[l] as u8 as f64
                    })
                    .sum();
                assert!((direct + truth.noise[i] - data.y()[i]).abs() < 1e-12);
            }
            assert!(truth.truth_edges().iter().all(|e| !e));
            assert_eq!(truth.b_equivalent(), DMatrix::zeros(10, 10));
        }
    }

    #[test]
    fn single_member_main_effect() {
        let mut truth = empty_truth(&config(ModelKind::Additive), vec![true, false, false]);
        truth.b_main = Some(vec![2.0, 5.0, 7.0]);
        truth.members = vec![vec![0, 1]];
        assert_eq!(truth.signal(0, &DMatrix::zeros(3, 3)), 2.0);
    }

    #[test]
    fn two_term_double_sum() {
        let mut truth = empty_truth(&config(ModelKind::Interaction), vec![true, true, false]);
        truth.b_main = Some(vec![1.0, 1.0, 9.0]);
        truth.b_pair = Some(DMatrix::from_row_slice(3, 3, &[0.0, 0.4, 3.0, 0.4, 0.0, 3.0, 3.0, 3.0, 0.0]));
        truth.members = vec![vec![0, 1]];
        let mut a = DMatrix::zeros(3, 3);
        a[(0, 1)] = 1.0;
        a[(1, 0)] = 1.0;
        assert!((truth.signal(0, &a) - (2.0 + 0.8)).abs() < 1e-15);
        truth.pairs_once = true;
        assert!((truth.signal(0, &a) - (2.0 + 0.4)).abs() < 1e-15);
    }

    #[test]
    fn interaction_matches_double_sum_and_equivalent_b() {
        let cfg = config(ModelKind::Interaction);
        let (data, truth) = gen_interaction(&cfg, &mut RngStream::new(4, 0)).unwrap();
        check_networks(&data, &truth);
        let main = truth.b_main.as_ref().unwrap();
        let pair = truth.b_pair.as_ref().unwrap();
        let b_eq = truth.b_equivalent();
        for i in 0..data.n() {
            let a = &data.adjacency()[i];
            let mut additive = truth.noise[i];
            for &l in &truth.members[i] {
                if truth.xi[l] {
                    additive += main[l];
                }
            }
            let mut double = 0.0;
            for l in 0..10 {
                for j in 0..10 {
                    if truth.xi[l] && truth.xi[j] {
                        double += pair[(l, j)] * a[(l, j)];
                    }
                }
            }
            assert!((additive + double - data.y()[i]).abs() < 1e-12);
            // the pairwise part is a Frobenius product with the equivalent B
            assert!((frobenius_inner(a, &b_eq).unwrap() - double).abs() < 1e-12);
        }
    }

    #[test]
    fn redundant_is_capped_interaction() {
        let cfg = SimConfig { pi: 0.8, mu: 0.8, ..config(ModelKind::Redundant) };
        assert_eq!(cfg.effective_limit(), Some(22.0));
        let (red, truth) = gen_redundant(&cfg, &mut RngStream::new(5, 0)).unwrap();
        let int_cfg = SimConfig { model: ModelKind::Interaction, ..cfg.clone() };
        let (int, _) = gen_interaction(&int_cfg, &mut RngStream::new(5, 0)).unwrap();
        for (r, i) in red.y().iter().zip(int.y().iter()) {
            assert!(*r <= 22.0);
            assert_eq!(*r, i.min(22.0));
        }
        assert_eq!(truth.limit, Some(22.0));

        let mut t = truth.clone();
        t.noise[0] = 100.0;
        assert_eq!(t.responses(&red.adjacency()[..1])[0], 22.0);
    }

    #[test]
    fn limits_and_validation() {
        assert_eq!(default_limit(0.3, 0.8), Some(3.0));
        assert_eq!(default_limit(0.3, 1.6), Some(7.0));
        assert_eq!(default_limit(0.8, 0.8), Some(22.0));
        assert_eq!(default_limit(0.8, 1.6), Some(30.0));
        assert_eq!(default_limit(0.5, 1.0), None);

        let ok = config(ModelKind::Theoretical);
        assert!(ok.validate().is_ok());
        for bad in [
            SimConfig { n: 0, ..ok.clone() },
            SimConfig { k: 11, ..ok.clone() },
            SimConfig { pi: 1.5, ..ok.clone() },
            SimConfig { limit: Some(3.0), ..ok.clone() },
            SimConfig { model: ModelKind::Redundant, pi: 0.5, ..ok.clone() },
        ] {
            let err = bad.validate().unwrap_err().to_string();
            assert!(["n", "k", "pi", "limit"].iter().any(|f| err.contains(f)), "{err}");
        }
        assert!(gen_additive(&ok, &mut RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = SimConfig { model: ModelKind::Redundant, limit: Some(4.0), ..SimConfig::default() };
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"redundant\""));
        assert_eq!(serde_json::from_str::<SimConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn sample_networks() {
        let meta = DMatrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { (i + j) as f64 });
        let nets = build_sample_networks(&meta, &[vec![true; 4], vec![false; 4]]).unwrap();
        assert_eq!(nets[0], meta);
        assert_eq!(nets[1], DMatrix::zeros(4, 4));

        let mut rng = RngStream::new(8, 0);
        let presence: Vec<Vec<bool>> = (0..20).map(|_| (0..4).map(|_| rng.random()).collect()).collect();
        let nets = build_sample_networks(&meta, &presence).unwrap();
        for (net, p) in nets.iter().zip(&presence) {
            let mask = DVector::from_fn(4, |i, _| p[i] as u8 as f64);
            let oracle = DMatrix::from_diagonal(&mask) * &meta * DMatrix::from_diagonal(&mask);
            assert_eq!(net, &oracle);
        }
        assert!(build_sample_networks(&meta, &[vec![true; 3]]).is_err());
        let mut asym = meta.clone();
        asym[(0, 1)] = 9.0;
        assert!(build_sample_networks(&asym, &[]).is_err());
    }

    #[test]
    fn augmentation() {
        let meta = DMatrix::from_fn(5, 5, |i, j| if i == j { 0.0 } else { 1.0 });
        let mut rng = RngStream::new(10, 0);
        let presence: Vec<Vec<bool>> = (0..30).map(|_| (0..5).map(|_| rng.random()).collect()).collect();
        let y: Vec<f64> = (0..30).map(|i| 0.01 + 0.02 * i as f64).collect();
        let data = PresenceData { y: y.clone(), presence: presence.clone(), meta: meta.clone() };
        let aug = augment_dataset(&data, &mut rng).unwrap();
        assert_eq!(aug.y.len(), 60);
        assert_eq!(&aug.y[..30], y.as_slice());
        assert!(aug.y.iter().all(|&v| v > 0.0));
        assert_eq!(aug.to_dataset().unwrap().n(), 60);

        let flat = PresenceData { y: vec![0.5; 30], presence, meta };
        let aug = augment_dataset(&flat, &mut rng).unwrap();
        assert!(aug.y.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn presence_flip_rates() {
        let meta = DMatrix::zeros(2, 2);
        let presence = vec![vec![true, false]; 20_000];
        let data = PresenceData { y: vec![1.0; 20_000], presence, meta };
        let aug = augment_dataset(&data, &mut RngStream::new(11, 0)).unwrap();
        let kept = aug.presence[20_000..].iter().filter(|p| p[0]).count() as f64 / 20_000.0;
        let gained = aug.presence[20_000..].iter().filter(|p| p[1]).count() as f64 / 20_000.0;
        assert!((kept - 0.9).abs() < 0.01, "{kept}");
        assert!((gained - 0.1).abs() < 0.01, "{gained}");
    }
}
