//! The `simulate`, `fit`, `evaluate` and `diagnose` commands.

use std::fs;
use std::path::{Path, PathBuf};

use bnr_core::diagnostics::{assess_convergence, ConvergenceReport};
use bnr_core::gibbs::extend_chains;
use bnr_core::simgen::{self, SimConfig, SimTruth};
use bnr_core::summaries::{classification_rates, mse_metrics, summarize};
use bnr_core::{
    run_chains, Chain, ChainDraws, Checkpoint, Hyperparameters, NetworkDataset, PosteriorDraws, RngStream,
};
use serde::{Deserialize, Serialize};

use crate::config::{load_toml, to_toml, RunConfig};
use crate::error::{CliError, Result};
use crate::io::{read_dataset, read_draws, write_dataset, write_draws, write_text, StagedDir};
use crate::report::{convergence_text, write_convergence, write_summary};

pub const TRUTH_FILE: &str = "truth.json";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const DRAWS_FILE: &str = "draws.bin";

/// Truth sidecar of a simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub format_version: u32,
    pub config: SimConfig,
    pub truth: SimTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationManifest {
    pub command: String,
    /// Response cap in force (redundant model only).
    pub limit: Option<f64>,
    pub config: SimConfig,
}

/// Generates a dataset with `config` and writes it, its truth and a manifest to `output`.
pub fn simulate(config: &SimConfig, output: &Path) -> Result<(NetworkDataset, SimTruth)> {
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let mut rng = RngStream::new(config.seed, 0);
    let (data, truth) = simgen::simulate(config, &mut rng)?;

    let staged = StagedDir::new(output)?;
    let written = (|| {
        write_dataset(staged.path(), &data)?;
        let sidecar = TruthFile {
            format_version: 1,
            config: config.clone(),
            truth: truth.clone(),
        };
        let json = serde_json::to_string(&sidecar).map_err(|e| CliError::format(output, e))?;
        write_text(&staged.join(TRUTH_FILE), &json)?;
        let manifest = SimulationManifest {
            command: "simulate".into(),
            limit: config.effective_limit(),
            config: config.clone(),
        };
        write_text(&staged.join(MANIFEST_FILE), &to_toml(&manifest)?)
    })();
    match written {
        Ok(()) => {
            staged.commit()?;
            Ok((data, truth))
        }
        Err(e) => {
            staged.discard();
            Err(e)
        }
    }
}

pub fn read_truth(path: &Path) -> Result<TruthFile> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::format(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitManifest {
    pub command: String,
    pub converged: bool,
    pub max_rhat: f64,
    /// Discarded sweeps per chain before the retained draws.
    pub burn_in_used: u64,
    pub extensions: u32,
    pub warnings: Vec<String>,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub output: PathBuf,
    pub converged: bool,
    pub max_rhat: f64,
    pub burn_in_used: u64,
    pub extensions: u32,
    pub warnings: Vec<String>,
}

impl FitOutcome {
    /// The non-convergence error to report, if any.
    pub fn status(&self, threshold: f64) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(CliError::NotConverged {
                max_rhat: self.max_rhat,
                threshold,
                burn_in: self.burn_in_used,
            })
        }
    }
}

fn required<'a>(value: &'a Option<PathBuf>, field: &str) -> Result<&'a PathBuf> {
    value
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("{field}: path is required")))
}

fn checkpoint_path(dir: &Path, id: usize) -> PathBuf {
    dir.join(format!("chain_{id}.ckpt"))
}

struct FitResult {
    draws: PosteriorDraws,
    report: ConvergenceReport,
    burn_in_used: u64,
    extensions: u32,
}

/// Runs chains, extending burn-in until R-hat passes or the cap is reached.
///
/// Each extension doubles the discarded prefix: chains are checkpointed,
/// reloaded, advanced by the missing sweeps and asked for a fresh set of
/// retained draws.
fn run_with_extensions(
    cfg: &RunConfig,
    data: &NetworkDataset,
    hyper: &Hyperparameters,
    checkpoints: &Path,
) -> Result<FitResult> {
    let collected = (cfg.retained * cfg.thinning) as u64;
    let mut runs = run_chains(data, hyper, &cfg.sweep())?;
    let mut extensions = 0;
    loop {
        let (chains, draws): (Vec<Chain>, Vec<ChainDraws>) = runs.into_iter().unzip();
        let posterior = PosteriorDraws::from_chains(draws)?;
        let report = assess_convergence(&posterior, cfg.rhat_threshold)?;
        let burn_in_used = chains[0].iteration() - collected;
        for chain in &chains {
            chain.checkpoint().write_to(&checkpoint_path(checkpoints, chain.id()))?;
        }
        if report.converged || burn_in_used >= cfg.max_burn_in {
            return Ok(FitResult {
                draws: posterior,
                report,
                burn_in_used,
                extensions,
            });
        }
        let target = (2 * burn_in_used).min(cfg.max_burn_in);
        let extra = target.saturating_sub(burn_in_used + collected);
        eprintln!(
            "max R-hat {:.4} above {}; extending burn-in from {burn_in_used} to {}",
            report.max_rhat,
            cfg.rhat_threshold,
            burn_in_used + collected + extra
        );
        let ids: Vec<usize> = chains.iter().map(Chain::id).collect();
        drop(chains);
        let resumed = ids
            .into_iter()
            .map(|id| Ok(Chain::resume(data, Checkpoint::read_from(&checkpoint_path(checkpoints, id))?)?))
            .collect::<Result<Vec<_>>>()?;
        runs = extend_chains(resumed, extra, cfg.retained, cfg.thinning)?;
        extensions += 1;
    }
}

/// Fits the model and writes draws, convergence and summary reports.
///
/// Non-convergence still produces a complete output directory; the outcome
/// records it and [`FitOutcome::status`] turns it into an error.
pub fn fit(cfg: &RunConfig) -> Result<FitOutcome> {
    cfg.validate()?;
    let data_dir = required(&cfg.data, "data")?;
    let output = required(&cfg.output, "output")?;
    let data = read_dataset(data_dir)?;
    let hyper = cfg.hyperparameters();
    let mut warnings = Vec::new();
    if cfg.chains == 1 {
        let msg = "only one chain: R-hat compares the two halves of a single chain".to_string();
        eprintln!("warning: {msg}");
        warnings.push(msg);
    }

    let staged = StagedDir::new(output)?;
    let checkpoints = staged.join("checkpoints");
    let result = fs::create_dir_all(&checkpoints)
        .map_err(CliError::io(&checkpoints))
        .and_then(|_| run_with_extensions(cfg, &data, &hyper, &checkpoints))
        .and_then(|res| {
            write_draws(&staged.join(DRAWS_FILE), &res.draws)?;
            write_convergence(staged.path(), &res.report)?;
            let summary = summarize(&res.draws, cfg.credible_level, cfg.pp_threshold)?;
            write_summary(staged.path(), &summary, &res.report, data.n(), res.draws.chains, res.draws.retained)?;
            let manifest = FitManifest {
                command: "fit".into(),
                converged: res.report.converged,
                max_rhat: res.report.max_rhat,
                burn_in_used: res.burn_in_used,
                extensions: res.extensions,
                warnings: warnings.clone(),
                config: cfg.resolved(),
            };
            write_text(&staged.join(MANIFEST_FILE), &to_toml(&manifest)?)?;
            Ok(res)
        });
    match result {
        Ok(res) => Ok(FitOutcome {
            output: staged.commit()?,
            converged: res.report.converged,
            max_rhat: res.report.max_rhat,
            burn_in_used: res.burn_in_used,
            extensions: res.extensions,
            warnings,
        }),
        Err(e) => {
            staged.discard();
            Err(e)
        }
    }
}

/// Error rates and MSEs of one fitted run against its truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub model: simgen::ModelKind,
    pub coefficients: simgen::CoefficientKind,
    pub n: usize,
    pub nodes: usize,
    pub k: usize,
    pub pi: f64,
    pub mu: f64,
    pub seed: u64,
    #[serde(with = "na")]
    pub edge_fpr: Option<f64>,
    #[serde(with = "na")]
    pub edge_fnr: Option<f64>,
    #[serde(with = "na")]
    pub node_fpr: Option<f64>,
    #[serde(with = "na")]
    pub node_fnr: Option<f64>,
    pub coef_mse: f64,
    pub response_mse: f64,
}

/// `None` as `NA` in CSV cells.
mod na {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(x) => s.serialize_str(&x.to_string()),
            None => s.serialize_str("NA"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        let text = String::deserialize(d)?;
        if text == "NA" {
            Ok(None)
        } else {
            text.parse().map(Some).map_err(serde::de::Error::custom)
        }
    }
}

/// Checks that a truth sidecar describes `data`: same shape and responses
/// that regenerate from the stored truth and noise.
pub fn check_truth(truth: &SimTruth, data: &NetworkDataset) -> Result<()> {
    let mismatch = |msg: String| CliError::Config(format!("truth does not match dataset: {msg}"));
    if truth.xi.len() != data.v() || truth.members.len() != data.n() || truth.noise.len() != data.n() {
        return Err(mismatch(format!(
            "truth has V = {}, n = {}; dataset has V = {}, n = {}",
            truth.xi.len(),
            truth.members.len(),
            data.v(),
            data.n()
        )));
    }
    let regenerated = truth.responses(data.adjacency());
    for (i, (a, b)) in regenerated.iter().zip(data.y().iter()).enumerate() {
        if (a - b).abs() > 1e-9 * (1.0 + b.abs()) {
            return Err(mismatch(format!("response {} is {b}, truth implies {a}", i + 1)));
        }
    }
    Ok(())
}

/// Scores a fitted run against the truth sidecar; writes one CSV row to `output` when given.
pub fn evaluate(
    run_dir: &Path,
    truth_path: &Path,
    data_dir: Option<&Path>,
    output: Option<&Path>,
) -> Result<EvaluationRow> {
    let manifest: FitManifest = load_toml(&run_dir.join(MANIFEST_FILE))?;
    let draws = read_draws(&run_dir.join(DRAWS_FILE))?;
    let data_dir = match data_dir {
        Some(d) => d.to_path_buf(),
        None => required(&manifest.config.data, "data")?.clone(),
    };
    let data = read_dataset(&data_dir)?;
    let sidecar = read_truth(truth_path)?;
    check_truth(&sidecar.truth, &data)?;
    if draws.v != data.v() {
        return Err(CliError::Config(format!(
            "draws have V = {}, dataset has V = {}",
            draws.v,
            data.v()
        )));
    }

    let summary = summarize(&draws, manifest.config.credible_level, manifest.config.pp_threshold)?;
    let rates = classification_rates(&summary, &sidecar.truth.truth_edges(), &sidecar.truth.truth_nodes())?;
    let (coef_mse, response_mse) = mse_metrics(&summary, &sidecar.truth.b_equivalent(), &data)?;
    let c = &sidecar.config;
    let row = EvaluationRow {
        model: c.model,
        coefficients: c.coefficients,
        n: c.n,
        nodes: c.nodes,
        k: c.k,
        pi: c.pi,
        mu: c.mu,
        seed: c.seed,
        edge_fpr: rates.edge_fpr,
        edge_fnr: rates.edge_fnr,
        node_fpr: rates.node_fpr,
        node_fnr: rates.node_fnr,
        coef_mse,
        response_mse,
    };
    if let Some(path) = output {
        let mut w = csv::Writer::from_path(path).map_err(|e| CliError::format(path, e))?;
        w.serialize(&row).map_err(|e| CliError::format(path, e))?;
        w.flush().map_err(CliError::io(path))?;
    }
    Ok(row)
}

pub fn read_evaluation(path: &Path) -> Result<Vec<EvaluationRow>> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| CliError::format(path, e))?;
    rd.deserialize()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| CliError::format(path, e))
}

/// Recomputes the convergence report of a fitted run.
pub fn diagnose(run_dir: &Path, threshold: Option<f64>, output: Option<&Path>) -> Result<ConvergenceReport> {
    let threshold = match threshold {
        Some(t) => t,
        None => load_toml::<FitManifest>(&run_dir.join(MANIFEST_FILE))?.config.rhat_threshold,
    };
    if !(threshold > 0.0) {
        return Err(CliError::Config(format!("rhat_threshold: {threshold} must be positive")));
    }
    let draws = read_draws(&run_dir.join(DRAWS_FILE))?;
    let report = assess_convergence(&draws, threshold)?;
    if let Some(dir) = output {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        write_convergence(dir, &report)?;
    }
    print!("{}", convergence_text(&report));
    Ok(report)
}
