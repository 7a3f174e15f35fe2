//! Posterior summaries: node inclusion probabilities, edge credible
//! intervals, point estimates of the coefficient matrix, and error metrics
//! against a known truth.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{BnrError, Result};
use crate::network::gamma_to_b;
use crate::stats::quantile_sorted;
use crate::types::{NetworkDataset, PosteriorDraws};

pub const DEFAULT_CREDIBLE_LEVEL: f64 = 0.95;
pub const DEFAULT_PP_THRESHOLD: f64 = 0.5;

/// Equal-tailed credible interval for one edge coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeInterval {
    pub lower: f64,
    pub upper: f64,
    /// The interval excludes zero.
    pub influential: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryReport {
    pub node_pp: Vec<f64>,
    /// `node_pp > pp_threshold`.
    pub node_influential: Vec<bool>,
    pub edge_ci: Vec<EdgeInterval>,
    /// B from the retained draw with the highest log joint density.
    pub map_b: DMatrix<f64>,
    /// Posterior mean of B.
    pub mean_b: DMatrix<f64>,
    pub gamma_mean: DVector<f64>,
    pub mu_mean: f64,
    pub tau2_mean: f64,
    pub level: f64,
    pub pp_threshold: f64,
}

fn check_nonempty(draws: &PosteriorDraws) -> Result<()> {
    if draws.total() == 0 {
        Err(BnrError::invalid("no retained draws"))
    } else {
        Ok(())
    }
}

/// Pooled mean of each node indicator.
pub fn node_posterior_probability(draws: &PosteriorDraws) -> Result<Vec<f64>> {
    check_nonempty(draws)?;
    let mut counts = vec![0u64; draws.v];
    for row in draws.xi.chunks_exact(draws.v.max(1)) {
        for (c, &x) in counts.iter_mut().zip(row) {
            *c += x as u64;
        }
    }
    let total = draws.total() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / total).collect())
}

/// Equal-tailed intervals at `level`, pooled over chains.
pub fn edge_credible_intervals(draws: &PosteriorDraws, level: f64) -> Result<Vec<EdgeInterval>> {
    check_nonempty(draws)?;
    if !(level > 0.0 && level < 1.0) {
        return Err(BnrError::invalid(format!("credible level {level} outside (0, 1)")));
    }
    let tail = (1.0 - level) / 2.0;
    let mut column = Vec::with_capacity(draws.total());
    Ok((0..draws.q)
        .map(|e| {
            column.clear();
            column.extend(draws.gamma.iter().skip(e).step_by(draws.q).copied());
            column.sort_by(f64::total_cmp);
            let lower = quantile_sorted(&column, tail);
            let upper = quantile_sorted(&column, 1.0 - tail);
            EdgeInterval {
                lower,
                upper,
                influential: lower > 0.0 || upper < 0.0,
            }
        })
        .collect())
}

/// B of the retained draw with the highest log joint density.
pub fn map_estimate_b(draws: &PosteriorDraws) -> Result<DMatrix<f64>> {
    check_nonempty(draws)?;
    let best = draws
        .log_joint
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let gamma = &draws.gamma[best * draws.q..(best + 1) * draws.q];
    gamma_to_b(&DVector::from_column_slice(gamma))
}

pub fn posterior_mean_gamma(draws: &PosteriorDraws) -> Result<DVector<f64>> {
    check_nonempty(draws)?;
    let mut acc = DVector::zeros(draws.q);
    for row in draws.gamma.chunks_exact(draws.q.max(1)) {
        for (a, x) in acc.iter_mut().zip(row) {
            *a += x;
        }
    }
    Ok(acc / draws.total() as f64)
}

/// Every summary at the given credible level and node threshold.
pub fn summarize(draws: &PosteriorDraws, level: f64, pp_threshold: f64) -> Result<SummaryReport> {
    if !(0.0..1.0).contains(&pp_threshold) {
        return Err(BnrError::invalid(format!(
            "posterior probability threshold {pp_threshold} outside [0, 1)"
        )));
    }
    let node_pp = node_posterior_probability(draws)?;
    let gamma_mean = posterior_mean_gamma(draws)?;
    let total = draws.total() as f64;
    Ok(SummaryReport {
        node_influential: node_pp.iter().map(|&p| p > pp_threshold).collect(),
        node_pp,
        edge_ci: edge_credible_intervals(draws, level)?,
        map_b: map_estimate_b(draws)?,
        mean_b: gamma_to_b(&gamma_mean)?,
        gamma_mean,
        mu_mean: draws.mu.iter().sum::<f64>() / total,
        tau2_mean: draws.tau2.iter().sum::<f64>() / total,
        level,
        pp_threshold,
    })
}

/// False positive and false negative rates; `None` when the denominator is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRates {
    pub edge_fpr: Option<f64>,
    pub edge_fnr: Option<f64>,
    pub node_fpr: Option<f64>,
    pub node_fnr: Option<f64>,
}

/// `(fpr, fnr)` of `predicted` against `truth`.
pub fn error_rates(predicted: &[bool], truth: &[bool]) -> (Option<f64>, Option<f64>) {
    let (mut fp, mut neg, mut fneg, mut pos) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &t) in predicted.iter().zip(truth) {
        if t {
            pos += 1;
            fneg += usize::from(!p);
        } else {
            neg += 1;
            fp += usize::from(p);
        }
    }
    let rate = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    (rate(fp, neg), rate(fneg, pos))
}

pub fn classification_rates(
    summary: &SummaryReport,
    truth_edges: &[bool],
    truth_nodes: &[bool],
) -> Result<ClassificationRates> {
    if truth_edges.len() != summary.edge_ci.len() || truth_nodes.len() != summary.node_pp.len() {
        return Err(BnrError::dims(format!(
            "truth has {} edges and {} nodes, summary has {} and {}",
            truth_edges.len(),
            truth_nodes.len(),
            summary.edge_ci.len(),
            summary.node_pp.len()
        )));
    }
    let edges: Vec<bool> = summary.edge_ci.iter().map(|c| c.influential).collect();
    let (edge_fpr, edge_fnr) = error_rates(&edges, truth_edges);
    let (node_fpr, node_fnr) = error_rates(&summary.node_influential, truth_nodes);
    Ok(ClassificationRates {
        edge_fpr,
        edge_fnr,
        node_fpr,
        node_fnr,
    })
}

/// `(coefficient MSE, response MSE)`.
///
/// Coefficients compare the posterior mean of `gamma / 2` with the true
/// `b_kl` over `k < l`; responses compare `mu + x_i' gamma` at the posterior
/// means with the observed `y`.
pub fn mse_metrics(
    summary: &SummaryReport,
    truth_b: &DMatrix<f64>,
    data: &NetworkDataset,
) -> Result<(f64, f64)> {
    let v = data.v();
    if truth_b.nrows() != v || truth_b.ncols() != v || summary.gamma_mean.len() != data.q() {
        return Err(BnrError::dims(format!(
            "truth B is {}x{}, summary has {} edges, dataset has V = {v}",
            truth_b.nrows(),
            truth_b.ncols(),
            summary.gamma_mean.len()
        )));
    }
    let mut coef = 0.0;
    let mut idx = 0;
    for k in 0..v {
        for l in k + 1..v {
            coef += (summary.gamma_mean[idx] / 2.0 - truth_b[(k, l)]).powi(2);
            idx += 1;
        }
    }
    let coef = if idx > 0 { coef / idx as f64 } else { 0.0 };
    let fitted = data.design() * &summary.gamma_mean;
    let resp = data
        .y()
        .iter()
        .zip(fitted.iter())
        .map(|(y, f)| (summary.mu_mean + f - y).powi(2))
        .sum::<f64>()
        / data.n() as f64;
    Ok((coef, resp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{b_to_gamma, edge_count};
    use crate::rng::RngStream;
    use crate::samplers::normal;
    use proptest::prelude::*;
    use rand::Rng;

    fn draws(chains: usize, retained: usize, v: usize, gamma: Vec<f64>, xi: Vec<u8>) -> PosteriorDraws {
        let total = chains * retained;
        PosteriorDraws {
            chains,
            retained,
            q: edge_count(v),
            v,
            gamma,
            xi,
            mu: vec![0.0; total],
            tau2: vec![1.0; total],
            log_joint: vec![0.0; total],
        }
    }

    #[test]
    fn node_probabilities() {
        let d = draws(1, 4, 2, vec![0.0; 4], vec![1, 0, 1, 1, 1, 0, 1, 1]);
        assert_eq!(node_posterior_probability(&d).unwrap(), vec![1.0, 0.5]);
        let empty = draws(1, 0, 2, vec![], vec![]);
        assert!(node_posterior_probability(&empty).is_err());
        assert!(edge_credible_intervals(&empty, 0.95).is_err());
    }

    #[test]
    fn interval_cases() {
        let d = draws(2, 5, 2, vec![2.0; 10], vec![1; 20]);
        let ci = edge_credible_intervals(&d, 0.95).unwrap();
        assert_eq!(ci[0], EdgeInterval { lower: 2.0, upper: 2.0, influential: true });

        let sym: Vec<f64> = (-50..=50).map(|i| i as f64).collect();
        let d = draws(1, 101, 2, sym, vec![1; 202]);
        let ci = edge_credible_intervals(&d, 0.95).unwrap();
        assert!(!ci[0].influential);
        assert_eq!(ci[0].lower, -ci[0].upper);
        assert!(edge_credible_intervals(&d, 1.0).is_err());
    }

    #[test]
    fn intervals_hit_order_statistics() {
        // 401 draws, 95%: tails at positions 10 and 390 exactly
        let mut rng = RngStream::new(5, 0);
        let values: Vec<f64> = (0..401).map(|_| normal(0.3, 1.0, &mut rng)).collect();
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let d = draws(1, 401, 2, values, vec![1; 802]);
        let ci = edge_credible_intervals(&d, 0.95).unwrap();
        assert_eq!(ci[0].lower, sorted[10]);
        assert_eq!(ci[0].upper, sorted[390]);
    }

    #[test]
    fn map_picks_highest_density_draw() {
        let v = 3;
        let b = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 1.0, 0.0, 3.0, 2.0, 3.0, 0.0]);
        let g = b_to_gamma(&b).unwrap();
        let d = draws(1, 1, v, g.as_slice().to_vec(), vec![1; 3]);
        assert_eq!(map_estimate_b(&d).unwrap(), b);

        let mut d = draws(1, 3, v, [vec![0.0; 3], g.as_slice().to_vec(), vec![5.0; 3]].concat(), vec![1; 9]);
        d.log_joint = vec![-3.0, -1.0, -2.0];
        let map = map_estimate_b(&d).unwrap();
        assert_eq!(map, b);
        assert_eq!(map.transpose(), map);
        assert!(map.diagonal().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn map_tracks_the_mode_of_a_toy_density() {
        // draws from N(1.5, 1) scored by their log density
        let mut rng = RngStream::new(9, 0);
        let gamma: Vec<f64> = (0..20_000).map(|_| normal(1.5, 1.0, &mut rng)).collect();
        let mut d = draws(1, 20_000, 2, gamma.clone(), vec![1; 40_000]);
        d.log_joint = gamma.iter().map(|g| -0.5 * (g - 1.5f64).powi(2)).collect();
        // grid oracle for the mode
        let grid_mode = (0..=3000)
            .map(|i| i as f64 / 1000.0)
            .max_by(|a, b| (-(a - 1.5f64).powi(2)).total_cmp(&-(b - 1.5f64).powi(2)))
            .unwrap();
        let map = map_estimate_b(&d).unwrap()[(0, 1)] * 2.0;
        assert!((map - grid_mode).abs() < 0.01, "{map} vs {grid_mode}");
    }

    fn report_with(edges: Vec<bool>, nodes: Vec<bool>) -> SummaryReport {
        let v = nodes.len();
        SummaryReport {
            node_pp: nodes.iter().map(|&b| if b { 0.9 } else { 0.1 }).collect(),
            node_influential: nodes,
            edge_ci: edges
                .into_iter()
                .map(|b| EdgeInterval { lower: if b { 1.0 } else { -1.0 }, upper: 2.0, influential: b })
                .collect(),
            map_b: DMatrix::zeros(v, v),
            mean_b: DMatrix::zeros(v, v),
            gamma_mean: DVector::zeros(edge_count(v)),
            mu_mean: 0.0,
            tau2_mean: 1.0,
            level: 0.95,
            pp_threshold: 0.5,
        }
    }

    #[test]
    fn rates_perfect_and_inverted() {
        let edges = vec![true, false, true, false, false, true];
        let nodes = vec![true, true, false, false];
        let perfect = classification_rates(&report_with(edges.clone(), nodes.clone()), &edges, &nodes).unwrap();
        assert_eq!(perfect.edge_fpr, Some(0.0));
        assert_eq!(perfect.edge_fnr, Some(0.0));
        assert_eq!(perfect.node_fpr, Some(0.0));
        assert_eq!(perfect.node_fnr, Some(0.0));

        let inv_e: Vec<bool> = edges.iter().map(|b| !b).collect();
        let inv_n: Vec<bool> = nodes.iter().map(|b| !b).collect();
        let inverted = classification_rates(&report_with(inv_e, inv_n), &edges, &nodes).unwrap();
        assert_eq!(inverted.edge_fpr, Some(1.0));
        assert_eq!(inverted.node_fnr, Some(1.0));

        let none = classification_rates(&report_with(vec![false; 6], nodes.clone()), &[false; 6], &nodes).unwrap();
        assert_eq!(none.edge_fnr, None);
        assert!(classification_rates(&report_with(edges, nodes), &[true], &[true]).is_err());
    }

    #[test]
    fn rates_match_confusion_counts() {
        let mut rng = RngStream::new(2, 0);
        for _ in 0..50 {
            let pred: Vec<bool> = (0..20).map(|_| rng.random()).collect();
            let truth: Vec<bool> = (0..20).map(|_| rng.random()).collect();
            let tp = pred.iter().zip(&truth).filter(|(p, t)| **p && **t).count();
            let fp = pred.iter().zip(&truth).filter(|(p, t)| **p && !**t).count();
            let tn = pred.iter().zip(&truth).filter(|(p, t)| !**p && !**t).count();
            let fneg = pred.iter().zip(&truth).filter(|(p, t)| !**p && **t).count();
            let (fpr, fnr) = error_rates(&pred, &truth);
            if fp + tn > 0 {
                assert_eq!(fpr.unwrap(), fp as f64 / (fp + tn) as f64);
            }
            if tp + fneg > 0 {
                assert_eq!(fnr.unwrap(), fneg as f64 / (tp + fneg) as f64);
            }
        }
    }

    fn toy_dataset(rng: &mut RngStream, n: usize, v: usize) -> NetworkDataset {
        let adj = (0..n)
            .map(|_| {
                let mut a = DMatrix::zeros(v, v);
                for k in 0..v {
                    for l in k + 1..v {
                        let w: f64 = rng.random();
                        a[(k, l)] = w;
                        a[(l, k)] = w;
                    }
                }
                a
            })
            .collect();
        let y = (0..n).map(|_| normal(0.0, 1.0, rng)).collect();
        NetworkDataset::new(y, adj).unwrap()
    }

    #[test]
    fn mse_cases() {
        let mut rng = RngStream::new(17, 0);
        let data = toy_dataset(&mut rng, 12, 4);
        let truth = DMatrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { (i + j) as f64 * 0.1 });
        let mut report = report_with(vec![false; 6], vec![false; 4]);
        report.gamma_mean = b_to_gamma(&truth).unwrap();
        let (coef, _) = mse_metrics(&report, &truth, &data).unwrap();
        assert!(coef.abs() < 1e-24);

        // shift every b by 0.3, i.e. every gamma by 0.6
        report.gamma_mean.add_scalar_mut(0.6);
        let (coef, resp) = mse_metrics(&report, &truth, &data).unwrap();
        assert!((coef - 0.09).abs() < 1e-12);

        // direct summation oracle for the response term
        let mut direct = 0.0;
        for i in 0..data.n() {
            let a = &data.adjacency()[i];
            let mut fit = report.mu_mean;
            for k in 0..4 {
                for l in 0..4 {
                    if k != l {
                        fit += a[(k, l)] * (truth[(k, l)] + 0.3);
                    }
                }
            }
            direct += (fit - data.y()[i]).powi(2);
        }
        assert!((resp - direct / data.n() as f64).abs() < 1e-10);

        // exact fit gives zero response error
        let y_fit: Vec<f64> = (data.design() * &report.gamma_mean).iter().map(|f| f + report.mu_mean).collect();
        let exact = NetworkDataset::new(y_fit, data.adjacency().to_vec()).unwrap();
        assert!(mse_metrics(&report, &truth, &exact).unwrap().1 < 1e-24);
        assert!(mse_metrics(&report, &DMatrix::zeros(3, 3), &data).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn summary_properties(seed in 0u64..10_000, scale in 0.01f64..50.0) {
            let mut rng = RngStream::new(seed, 0);
            let (chains, retained, v) = (3, 40, 4);
            let q = edge_count(v);
            let gamma: Vec<f64> = (0..chains * retained * q).map(|_| normal(0.4, 1.0, &mut rng)).collect();
            let xi: Vec<u8> = (0..chains * retained * v).map(|_| rng.random_range(0..2)).collect();
            let d = draws(chains, retained, v, gamma.clone(), xi.clone());

            let pp = node_posterior_probability(&d).unwrap();
            prop_assert!(pp.iter().all(|p| (0.0..=1.0).contains(p)));

            // chain order
            let mut swapped = d.clone();
            let (gl, xl) = (retained * q, retained * v);
            swapped.gamma = [&gamma[2 * gl..], &gamma[..2 * gl]].concat();
            swapped.xi = [&xi[2 * xl..], &xi[..2 * xl]].concat();
            prop_assert_eq!(node_posterior_probability(&swapped).unwrap(), pp.clone());
            prop_assert_eq!(edge_credible_intervals(&swapped, 0.9).unwrap(), edge_credible_intervals(&d, 0.9).unwrap());

            // nested levels
            let narrow = edge_credible_intervals(&d, 0.5).unwrap();
            let wide = edge_credible_intervals(&d, 0.95).unwrap();
            for (n, w) in narrow.iter().zip(&wide) {
                prop_assert!(n.lower <= n.upper);
                prop_assert!(w.lower <= n.lower && n.upper <= w.upper);
            }

            // positive rescaling keeps the decisions
            let mut scaled = d.clone();
            scaled.gamma.iter_mut().for_each(|g| *g *= scale);
            let flags = |c: Vec<EdgeInterval>| c.into_iter().map(|e| e.influential).collect::<Vec<_>>();
            prop_assert_eq!(flags(edge_credible_intervals(&scaled, 0.95).unwrap()), flags(wide));
        }
    }
}
