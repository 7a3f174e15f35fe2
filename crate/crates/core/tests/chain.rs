use bnr_core::diagnostics::assess_convergence;
use bnr_core::gibbs::{gibbs_step, initial_state, Chain, Checkpoint, SweepConfig};
use bnr_core::simgen::{simulate, ModelKind, SimConfig};
use bnr_core::{run_chains, Hyperparameters, NetworkDataset, PosteriorDraws, RngStream};
use proptest::prelude::*;

fn toy(seed: u64, nodes: usize, n: usize) -> NetworkDataset {
    let cfg = SimConfig {
        model: ModelKind::Theoretical,
        n,
        nodes,
        k: nodes.min(4),
        pi: 0.8,
        mu: 1.6,
        seed,
        ..SimConfig::default()
    };
    simulate(&cfg, &mut RngStream::new(seed, 99)).unwrap().0
}

#[test]
fn same_seed_same_chain() {
    let data = toy(1, 5, 40);
    let hyper = Hyperparameters::with_dimension(2);
    let mut a = Chain::new(&data, hyper, 11, 0).unwrap();
    let mut b = Chain::new(&data, hyper, 11, 0).unwrap();
    a.advance(200).unwrap();
    b.advance(200).unwrap();
    assert_eq!(a.state(), b.state());

    let mut other = Chain::new(&data, hyper, 11, 1).unwrap();
    other.advance(200).unwrap();
    assert_ne!(a.state(), other.state());
}

#[test]
fn checkpoint_resume_is_exact() {
    let data = toy(2, 4, 50);
    let hyper = Hyperparameters::with_dimension(2);
    let mut straight = Chain::new(&data, hyper, 5, 2).unwrap();
    straight.advance(2000).unwrap();

    let mut first = Chain::new(&data, hyper, 5, 2).unwrap();
    first.advance(1000).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chain2.ckpt");
    first.checkpoint().write_to(&path).unwrap();
    drop(first);

    let restored = Checkpoint::read_from(&path).unwrap();
    assert_eq!(restored.iteration, 1000);
    let mut resumed = Chain::resume(&data, restored).unwrap();
    resumed.advance(1000).unwrap();
    assert_eq!(resumed.iteration(), 2000);
    assert_eq!(resumed.state(), straight.state());
}

#[test]
fn corrupt_checkpoints_are_rejected() {
    let data = toy(3, 4, 20);
    let chain = Chain::new(&data, Hyperparameters::with_dimension(2), 1, 0).unwrap();
    let bytes = chain.checkpoint().to_bytes();
    assert_eq!(Checkpoint::from_bytes(&bytes).unwrap(), chain.checkpoint());

    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(Checkpoint::from_bytes(&bad).is_err());
    assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    let mut long = bytes.clone();
    long.push(0);
    assert!(Checkpoint::from_bytes(&long).is_err());
    let mut version = bytes.clone();
    version[8] = 9;
    assert!(Checkpoint::from_bytes(&version).is_err());

    let other = toy(3, 5, 20);
    assert!(Chain::resume(&other, chain.checkpoint()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn invariants_hold_after_every_sweep(seed in 0u64..1_000, nodes in 4usize..7, r in 1usize..4) {
        let data = toy(seed, nodes, 30);
        let hyper = Hyperparameters::with_dimension(r);
        let mut rng = RngStream::new(seed, 0);
        let mut state = initial_state(&data, &hyper, &mut rng).unwrap();
        for sweep in 0..1000 {
            gibbs_step(&mut state, &data, &hyper, &mut rng).unwrap();
            if let Err(msg) = state.check_invariants() {
                return Err(TestCaseError::fail(format!("sweep {sweep}: {msg}")));
            }
        }
    }
}

#[test]
fn parallel_chains_mix_on_a_toy_posterior() {
    let data = toy(4, 4, 80);
    let hyper = Hyperparameters::with_dimension(2);
    let config = SweepConfig {
        burn_in: 2000,
        retained: 2000,
        thinning: 1,
        chains: 3,
        seed: 21,
    };
    let runs = run_chains(&data, &hyper, &config).unwrap();
    assert_eq!(runs.len(), 3);
    for (i, (chain, draws)) in runs.iter().enumerate() {
        assert_eq!(chain.id(), i);
        assert_eq!(chain.iteration(), 4000);
        assert_eq!(draws.len(), 2000);
    }
    let draws = PosteriorDraws::from_chains(runs.into_iter().map(|(_, d)| d).collect()).unwrap();
    let report = assess_convergence(&draws, 1.2).unwrap();
    assert!(report.converged, "max R-hat {}", report.max_rhat);

    // concurrent runs are reproducible
    let again = run_chains(&data, &hyper, &config).unwrap();
    let again = PosteriorDraws::from_chains(again.into_iter().map(|(_, d)| d).collect()).unwrap();
    assert_eq!(again, draws);
}
