//! Run configuration: flat TOML key-value files with every key optional.

use std::fs;
use std::path::{Path, PathBuf};

use bnr_core::diagnostics::DEFAULT_RHAT_THRESHOLD;
use bnr_core::summaries::{DEFAULT_CREDIBLE_LEVEL, DEFAULT_PP_THRESHOLD};
use bnr_core::{Hyperparameters, SweepConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Largest total burn-in the extension policy will reach by default.
pub const DEFAULT_MAX_BURN_IN: u64 = 340_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Dataset directory.
    pub data: Option<PathBuf>,
    /// Output directory.
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub chains: usize,
    pub burn_in: u64,
    pub retained: usize,
    pub thinning: usize,
    /// Cap on the burn-in reached by automatic extension.
    pub max_burn_in: u64,
    pub rhat_threshold: f64,
    pub credible_level: f64,
    pub pp_threshold: f64,
    /// Latent dimension.
    pub r: usize,
    pub eta: f64,
    /// Defaults to `r + 2`.
    pub nu: Option<f64>,
    pub a_delta: f64,
    pub b_delta: f64,
    pub zeta: f64,
    pub iota: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sweep = SweepConfig::default();
        let hyper = Hyperparameters::default();
        Self {
            data: None,
            output: None,
            seed: sweep.seed,
            chains: sweep.chains,
            burn_in: sweep.burn_in,
            retained: sweep.retained,
            thinning: sweep.thinning,
            max_burn_in: DEFAULT_MAX_BURN_IN,
            rhat_threshold: DEFAULT_RHAT_THRESHOLD,
            credible_level: DEFAULT_CREDIBLE_LEVEL,
            pp_threshold: DEFAULT_PP_THRESHOLD,
            r: hyper.r,
            eta: hyper.eta,
            nu: None,
            a_delta: hyper.a_delta,
            b_delta: hyper.b_delta,
            zeta: hyper.zeta,
            iota: hyper.iota,
        }
    }
}

impl RunConfig {
    pub fn hyperparameters(&self) -> Hyperparameters {
        Hyperparameters {
            nu: self.nu.unwrap_or(self.r as f64 + 2.0),
            r: self.r,
            eta: self.eta,
            a_delta: self.a_delta,
            b_delta: self.b_delta,
            zeta: self.zeta,
            iota: self.iota,
        }
    }

    pub fn sweep(&self) -> SweepConfig {
        SweepConfig {
            burn_in: self.burn_in,
            retained: self.retained,
            thinning: self.thinning,
            chains: self.chains,
            seed: self.seed,
        }
    }

    /// The configuration with every default made explicit.
    pub fn resolved(&self) -> Self {
        Self {
            nu: Some(self.hyperparameters().nu),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: String| Err(CliError::Config(format!("{field}: {why}")));
        if self.chains == 0 {
            return bad("chains", "must be at least 1".into());
        }
        if self.retained == 0 {
            return bad("retained", "must be at least 1".into());
        }
        if self.thinning == 0 {
            return bad("thinning", "must be at least 1".into());
        }
        if self.max_burn_in < self.burn_in {
            return bad(
                "max_burn_in",
                format!("{} is below burn_in = {}", self.max_burn_in, self.burn_in),
            );
        }
        if !(self.rhat_threshold > 0.0) {
            return bad("rhat_threshold", format!("{} must be positive", self.rhat_threshold));
        }
        if !(self.credible_level > 0.0 && self.credible_level < 1.0) {
            return bad("credible_level", format!("{} outside (0, 1)", self.credible_level));
        }
        if !(0.0..1.0).contains(&self.pp_threshold) {
            return bad("pp_threshold", format!("{} outside [0, 1)", self.pp_threshold));
        }
        self.hyperparameters()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Reads a TOML file into `T`, naming the offending key on failure.
pub fn load_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
}

pub fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| CliError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.chains, 3);
        assert_eq!(cfg.burn_in, 30_000);
        assert_eq!(cfg.retained, 20_000);
        assert_eq!(cfg.r, 7);
        assert_eq!(cfg.hyperparameters().nu, 9.0);
        assert_eq!(cfg.rhat_threshold, 1.2);
    }

    #[test]
    fn parses_flat_keys_and_names_bad_ones() {
        let cfg: RunConfig = toml::from_str("chains = 2\nr = 3\nnu = 6.5\n").unwrap();
        assert_eq!(cfg.chains, 2);
        assert_eq!(cfg.hyperparameters().nu, 6.5);
        assert_eq!(cfg.burn_in, 30_000);
        let err = toml::from_str::<RunConfig>("chainz = 2\n").unwrap_err();
        assert!(err.to_string().contains("chainz"));

        for (text, field) in [
            ("chains = 0", "chains"),
            ("rhat_threshold = -1.0", "rhat_threshold"),
            ("burn_in = 10\nmax_burn_in = 5", "max_burn_in"),
            ("credible_level = 1.0", "credible_level"),
        ] {
            let cfg: RunConfig = toml::from_str(text).unwrap();
            let err = cfg.validate().unwrap_err().to_string();
            assert!(err.contains(field), "{err}");
        }
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = RunConfig { data: Some("d".into()), ..RunConfig::default() }.resolved();
        let text = to_toml(&cfg).unwrap();
        assert!(text.contains("nu = 9.0"));
        assert_eq!(toml::from_str::<RunConfig>(&text).unwrap(), cfg);
    }
}
