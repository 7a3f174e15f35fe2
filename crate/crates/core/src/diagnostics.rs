//! Rank-normalized split-R̂ convergence diagnostics.
//!
//! Every chain is split in half, draws are replaced by the normal scores of
//! their pooled ranks, and the usual potential-scale-reduction factor is
//! computed on the half-chains. The folded variant applies the same recipe
//! to absolute deviations from the pooled median and is sensitive to chains
//! that agree in location but differ in spread.

use serde::{Deserialize, Serialize};

use crate::error::{BnrError, Result};
use crate::stats::{normal_quantile, quantile_sorted};
use crate::types::PosteriorDraws;

/// Default convergence threshold on R̂.
pub const DEFAULT_RHAT_THRESHOLD: f64 = 1.2;

/// Normal scores of pooled average ranks, `Φ⁻¹((rank - 3/8) / (S + 1/4))`.
pub fn rank_normalize(draws: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let total: usize = draws.iter().map(Vec::len).sum();
    let mut flat: Vec<(f64, usize)> = draws
        .iter()
        .flatten()
        .copied()
        .enumerate()
        .map(|(i, x)| (x, i))
        .collect();
    flat.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut ranks = vec![0.0; total];
    let mut i = 0;
    while i < flat.len() {
        let mut j = i;
        while j + 1 < flat.len() && flat[j + 1].0 == flat[i].0 {
            j += 1;
        }
        // 1-based average rank of the tie block i..=j
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for item in &flat[i..=j] {
            ranks[item.1] = avg;
        }
        i = j + 1;
    }

    let s = total as f64;
    let mut out = Vec::with_capacity(draws.len());
    let mut offset = 0;
    for chain in draws {
        out.push(
            (0..chain.len())
                .map(|t| normal_quantile((ranks[offset + t] - 0.375) / (s + 0.25)))
                .collect(),
        );
        offset += chain.len();
    }
    out
}

fn check_chains(draws: &[Vec<f64>]) -> Result<usize> {
    let len = draws
        .first()
        .map(Vec::len)
        .ok_or_else(|| BnrError::invalid("R-hat needs at least one chain"))?;
    if draws.iter().any(|c| c.len() != len) {
        return Err(BnrError::dims("R-hat chains have different lengths"));
    }
    if len < 4 {
        return Err(BnrError::invalid(format!(
            "R-hat needs at least 4 draws per chain, got {len}"
        )));
    }
    Ok(len)
}

fn split_halves(draws: &[Vec<f64>], len: usize) -> Vec<Vec<f64>> {
    let half = len / 2;
    draws
        .iter()
        .flat_map(|c| [c[..half].to_vec(), c[half..2 * half].to_vec()])
        .collect()
}

/// Potential scale reduction of already-split, already-transformed chains.
///
/// Identical draws everywhere give 1. Zero within-chain variance with
/// differing chain means (chains stuck at different values) gives infinity.
/// Values are floored at 1.
fn psrf(halves: &[Vec<f64>]) -> f64 {
    let m = halves.len() as f64;
    let n = halves[0].len() as f64;
    let means: Vec<f64> = halves.iter().map(|c| c.iter().sum::<f64>() / n).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = if m > 1.0 {
        n / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>()
    } else {
        0.0
    };
    let w = halves
        .iter()
        .zip(&means)
        .map(|(c, mean)| c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    let scale = 1e-12 * grand.abs().max(1.0);
    if w <= scale * scale {
        return if b <= scale * scale { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (n - 1.0) / n * w + b / n;
    (var_plus / w).sqrt().max(1.0)
}

/// Rank-normalized split-R̂. An odd trailing draw in each chain is dropped.
pub fn split_rhat(draws: &[Vec<f64>]) -> Result<f64> {
    let len = check_chains(draws)?;
    let halves = split_halves(draws, len);
    Ok(psrf(&rank_normalize(&halves)))
}

/// Folded rank-normalized split-R̂ on `|x - median|`.
pub fn folded_split_rhat(draws: &[Vec<f64>]) -> Result<f64> {
    let len = check_chains(draws)?;
    let halves = split_halves(draws, len);
    let mut pooled: Vec<f64> = halves.iter().flatten().copied().collect();
    pooled.sort_by(f64::total_cmp);
    let median = quantile_sorted(&pooled, 0.5);
    let folded: Vec<Vec<f64>> = halves
        .iter()
        .map(|c| c.iter().map(|x| (x - median).abs()).collect())
        .collect();
    Ok(psrf(&rank_normalize(&folded)))
}

/// Larger of the bulk and folded split-R̂.
pub fn rhat(draws: &[Vec<f64>]) -> Result<f64> {
    Ok(split_rhat(draws)?.max(folded_split_rhat(draws)?))
}

/// Per-coordinate R̂ for every edge coefficient and node indicator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rhat_gamma: Vec<f64>,
    pub rhat_xi: Vec<f64>,
    pub max_rhat: f64,
    pub converged: bool,
    pub threshold: f64,
    /// Only one chain was available, so R̂ compares its two halves only.
    pub single_chain: bool,
}

pub fn assess_convergence(draws: &PosteriorDraws, threshold: f64) -> Result<ConvergenceReport> {
    if !(threshold > 0.0) {
        return Err(BnrError::invalid(format!("threshold {threshold} must be positive")));
    }
    let rhat_gamma = (0..draws.q)
        .map(|e| rhat(&draws.gamma_traces(e)))
        .collect::<Result<Vec<_>>>()?;
    let rhat_xi = (0..draws.v)
        .map(|k| rhat(&draws.xi_traces(k)))
        .collect::<Result<Vec<_>>>()?;
    let max_rhat = rhat_gamma
        .iter()
        .chain(&rhat_xi)
        .copied()
        .fold(1.0, f64::max);
    Ok(ConvergenceReport {
        converged: max_rhat <= threshold,
        rhat_gamma,
        rhat_xi,
        max_rhat,
        threshold,
        single_chain: draws.chains < 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::samplers::normal;
    use crate::stats::ks_one_sample;
    use proptest::prelude::*;

    fn normal_chains(chains: usize, len: usize, seed: u64, shift: &[f64]) -> Vec<Vec<f64>> {
        let mut rng = RngStream::new(seed, 0);
        (0..chains)
            .map(|c| (0..len).map(|_| normal(shift[c], 1.0, &mut rng)).collect())
            .collect()
    }

    #[test]
    fn constant_input_normalizes_to_one_value() {
        let z = rank_normalize(&[vec![3.0; 5], vec![3.0; 5]]);
        let first = z[0][0];
        assert!(z.iter().flatten().all(|&x| x == first));
        assert!(first.abs() < 1e-12);
    }

    #[test]
    fn increasing_input_is_symmetric() {
        let z = rank_normalize(&[vec![1.0, 2.0, 3.0, 4.0]]);
        let z = &z[0];
        assert!((z[0] + z[3]).abs() < 1e-12);
        assert!((z[1] + z[2]).abs() < 1e-12);
        assert!(z[0] < z[1]);
    }

    #[test]
    fn iid_normal_scores_are_standard_normal() {
        let draws = normal_chains(1, 10_000, 3, &[0.0]);
        let z = rank_normalize(&draws);
        let (d, _) = ks_one_sample(&z[0], |x| {
            use statrs::distribution::{ContinuousCDF, Normal};
            Normal::new(0.0, 1.0).unwrap().cdf(x)
        }, 0.01);
        assert!(d < 0.01, "KS distance {d}");
    }

    #[test]
    fn iid_half_chains_give_rhat_near_one() {
        // two chains of 10,000 -> four half-chains of 5,000
        for seed in 0..5 {
            let draws = normal_chains(2, 10_000, seed, &[0.0, 0.0]);
            let r = split_rhat(&draws).unwrap();
            assert!((1.0..=1.01).contains(&r), "seed {seed}: {r}");
            let r = rhat(&draws).unwrap();
            assert!((1.0..=1.01).contains(&r), "seed {seed}: {r}");
        }
    }

    #[test]
    fn shifted_chains_give_large_rhat() {
        let draws = normal_chains(2, 1_000, 11, &[0.0, 5.0]);
        assert!(split_rhat(&draws).unwrap() > 1.2);
    }

    #[test]
    fn folded_rhat_sees_scale_differences() {
        let mut rng = RngStream::new(8, 0);
        let draws = vec![
            (0..2000).map(|_| normal(0.0, 1.0, &mut rng)).collect::<Vec<_>>(),
            (0..2000).map(|_| normal(0.0, 6.0, &mut rng)).collect::<Vec<_>>(),
        ];
        assert!(split_rhat(&draws).unwrap() < 1.05);
        assert!(folded_split_rhat(&draws).unwrap() > 1.2);
    }

    #[test]
    fn degenerate_cases() {
        assert_eq!(split_rhat(&[vec![1.0; 10], vec![1.0; 10]]).unwrap(), 1.0);
        assert_eq!(rhat(&[vec![0.0; 10], vec![0.0; 10]]).unwrap(), 1.0);
        // two binary chains stuck at different values
        assert!(split_rhat(&[vec![0.0; 10], vec![1.0; 10]]).unwrap().is_infinite());
        assert!(split_rhat(&[vec![1.0; 10], vec![1.0; 9]]).is_err());
        assert!(split_rhat(&[vec![1.0; 3]]).is_err());
        assert!(split_rhat(&[]).is_err());
        // odd lengths drop the final draw
        let draws = normal_chains(2, 1001, 4, &[0.0, 0.0]);
        let trimmed: Vec<Vec<f64>> = draws.iter().map(|c| c[..1000].to_vec()).collect();
        assert_eq!(split_rhat(&draws).unwrap(), split_rhat(&trimmed).unwrap());
    }

    fn draws_from(chains: Vec<Vec<f64>>, xi: Vec<Vec<u8>>) -> PosteriorDraws {
        let retained = chains[0].len();
        PosteriorDraws {
            chains: chains.len(),
            retained,
            q: 1,
            v: 1,
            gamma: chains.concat(),
            xi: xi.concat(),
            mu: vec![0.0; chains.len() * retained],
            tau2: vec![1.0; chains.len() * retained],
            log_joint: vec![0.0; chains.len() * retained],
        }
    }

    #[test]
    fn report_flags_frozen_chain() {
        let mut chains = normal_chains(3, 2000, 21, &[0.0, 0.0, 0.0]);
        let ok = draws_from(chains.clone(), vec![vec![1; 2000]; 3]);
        let report = assess_convergence(&ok, 1.2).unwrap();
        assert!(report.converged, "{report:?}");
        assert!(!report.single_chain);

        chains[2] = vec![2.5; 2000];
        let bad = draws_from(chains, vec![vec![1; 2000]; 3]);
        let report = assess_convergence(&bad, 1.2).unwrap();
        assert!(!report.converged);
        assert!(assess_convergence(&bad, f64::INFINITY).unwrap().converged);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn rhat_properties(seed in 0u64..1000, shift in 0.0f64..3.0) {
            let draws = normal_chains(3, 200, seed, &[0.0, shift, -shift]);
            let base = split_rhat(&draws).unwrap();
            prop_assert!(base >= 1.0 - 1e-9);

            // monotone transformation
            let cubed: Vec<Vec<f64>> = draws.iter().map(|c| c.iter().map(|x| x.powi(3) + 2.0 * x).collect()).collect();
            prop_assert!((split_rhat(&cubed).unwrap() - base).abs() < 1e-12);

            // chain relabelling
            let permuted = vec![draws[2].clone(), draws[0].clone(), draws[1].clone()];
            prop_assert!((split_rhat(&permuted).unwrap() - base).abs() < 1e-12);
            prop_assert!((rhat(&permuted).unwrap() - rhat(&draws).unwrap()).abs() < 1e-12);
        }
    }
}
