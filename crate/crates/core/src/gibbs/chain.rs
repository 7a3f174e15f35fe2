use crate::error::{BnrError, Result};
use crate::rng::RngStream;
use crate::types::{ChainDraws, ChainState, Hyperparameters, NetworkDataset};

use super::{gibbs_step, initial_state, log_joint, Checkpoint};

/// Iteration budget for a multi-chain run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepConfig {
    /// Discarded sweeps before the first retained draw.
    pub burn_in: u64,
    /// Draws kept per chain.
    pub retained: usize,
    /// Sweeps per retained draw.
    pub thinning: usize,
    pub chains: usize,
    /// Base seed; chain `c` uses stream `c` of this seed.
    pub seed: u64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.retained == 0 || self.thinning == 0 || self.chains == 0 {
            return Err(BnrError::invalid(format!(
                "retained ({}), thinning ({}) and chains ({}) must be positive",
                self.retained, self.thinning, self.chains
            )));
        }
        Ok(())
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            burn_in: 30_000,
            retained: 20_000,
            thinning: 1,
            chains: 3,
            seed: 1,
        }
    }
}

/// One Gibbs chain: its state, its random stream and an iteration counter.
#[derive(Debug, Clone)]
pub struct Chain<'a> {
    id: usize,
    data: &'a NetworkDataset,
    hyper: Hyperparameters,
    state: ChainState,
    rng: RngStream,
    iteration: u64,
}

impl<'a> Chain<'a> {
    /// A fresh chain on stream `id` of `seed`.
    pub fn new(data: &'a NetworkDataset, hyper: Hyperparameters, seed: u64, id: usize) -> Result<Self> {
        let mut rng = RngStream::new(seed, id as u64);
        let state = initial_state(data, &hyper, &mut rng)?;
        Ok(Self {
            id,
            data,
            hyper,
            state,
            rng,
            iteration: 0,
        })
    }

    /// Rebuilds a chain exactly as it was when `checkpoint` was taken.
    pub fn resume(data: &'a NetworkDataset, checkpoint: Checkpoint) -> Result<Self> {
        let st = &checkpoint.state;
        if st.v() != data.v() || st.gamma.len() != data.q() || st.r() != checkpoint.hyper.r {
            return Err(BnrError::Checkpoint(format!(
                "checkpoint for V = {}, R = {} does not match dataset with V = {}",
                st.v(),
                st.r(),
                data.v()
            )));
        }
        Ok(Self {
            id: checkpoint.chain as usize,
            data,
            hyper: checkpoint.hyper,
            rng: RngStream::restore(checkpoint.seed, checkpoint.stream, checkpoint.rng_position),
            iteration: checkpoint.iteration,
            state: checkpoint.state,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            chain: self.id as u64,
            iteration: self.iteration,
            seed: self.rng.seed(),
            stream: self.rng.stream(),
            rng_position: self.rng.position(),
            hyper: self.hyper,
            state: self.state.clone(),
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn hyper(&self) -> &Hyperparameters {
        &self.hyper
    }

    /// One sweep; failures carry the chain id and iteration.
    pub fn step(&mut self) -> Result<()> {
        gibbs_step(&mut self.state, self.data, &self.hyper, &mut self.rng).map_err(|e| {
            BnrError::Chain {
                chain: self.id,
                iteration: self.iteration + 1,
                source: Box::new(e),
            }
        })?;
        self.iteration += 1;
        Ok(())
    }

    /// Runs `sweeps` discarded sweeps.
    pub fn advance(&mut self, sweeps: u64) -> Result<()> {
        for _ in 0..sweeps {
            self.step()?;
        }
        Ok(())
    }

    /// Runs `retained * thinning` sweeps, storing every `thinning`-th state.
    pub fn collect(&mut self, retained: usize, thinning: usize) -> Result<ChainDraws> {
        let mut draws = ChainDraws::new(self.data.q(), self.data.v());
        for _ in 0..retained {
            self.advance(thinning.max(1) as u64)?;
            let lj = log_joint(&self.state, self.data, &self.hyper);
            draws.push(&self.state, lj);
        }
        Ok(draws)
    }
}

/// Burn-in followed by retained draws for chain `id`.
pub fn run_chain(
    data: &NetworkDataset,
    hyper: &Hyperparameters,
    config: &SweepConfig,
    id: usize,
) -> Result<ChainDraws> {
    config.validate()?;
    let mut chain = Chain::new(data, *hyper, config.seed, id)?;
    chain.advance(config.burn_in)?;
    chain.collect(config.retained, config.thinning)
}

/// Runs `config.chains` chains concurrently, one thread each, returning the
/// finished chains (for later resumption) in chain order.
pub fn run_chains<'a>(
    data: &'a NetworkDataset,
    hyper: &Hyperparameters,
    config: &SweepConfig,
) -> Result<Vec<(Chain<'a>, ChainDraws)>> {
    config.validate()?;
    let results: Vec<Result<(Chain<'a>, ChainDraws)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..config.chains)
            .map(|id| {
                scope.spawn(move || {
                    let mut chain = Chain::new(data, *hyper, config.seed, id)?;
                    chain.advance(config.burn_in)?;
                    let draws = chain.collect(config.retained, config.thinning)?;
                    Ok((chain, draws))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    });
    results.into_iter().collect()
}

/// Continues existing chains concurrently: `extra_burn_in` discarded sweeps,
/// then a fresh set of `retained` draws each.
pub fn extend_chains<'a>(
    chains: Vec<Chain<'a>>,
    extra_burn_in: u64,
    retained: usize,
    thinning: usize,
) -> Result<Vec<(Chain<'a>, ChainDraws)>> {
    if retained == 0 || thinning == 0 {
        return Err(BnrError::invalid("retained and thinning must be positive"));
    }
    let results: Vec<Result<(Chain<'a>, ChainDraws)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = chains
            .into_iter()
            .map(|mut chain| {
                scope.spawn(move || {
                    chain.advance(extra_burn_in)?;
                    let draws = chain.collect(retained, thinning)?;
                    Ok((chain, draws))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    });
    results.into_iter().collect()
}
