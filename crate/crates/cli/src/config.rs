//! Run configuration for `gen`: TOML file values overlaid by flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use stepgame::dataset::{Format, KRange, SplitPlan};
use stepgame::noise::CountRange;

use crate::CliError;

/// Every field optional so a file can set any subset.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub k_train: Option<String>,
    pub k_test: Option<String>,
    pub train_n: Option<usize>,
    pub valid_n: Option<usize>,
    pub test_n: Option<usize>,
    pub noise_irrelevant: Option<String>,
    pub noise_disconnected: Option<String>,
    pub noise_supporting: Option<String>,
    pub supporting_min_k: Option<usize>,
    pub bank: Option<PathBuf>,
    pub format: Option<String>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub train_noise: Option<bool>,
    pub profile: Option<Profile>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Noise-free training data, as in the published setup.
    #[default]
    Paper,
    /// Any combination of settings.
    Custom,
}

pub const DEFAULT_SEED: u64 = 0;

/// Fully resolved settings for one `gen` run.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub seed: u64,
    pub plan: SplitPlan,
    pub bank: Option<PathBuf>,
    pub format: Format,
    pub workers: Option<usize>,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: RunConfig) -> RunConfig {
        macro_rules! pick {
            ($($f:ident),*) => { RunConfig { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(
            seed, k_train, k_test, train_n, valid_n, test_n, noise_irrelevant, noise_disconnected, noise_supporting,
            supporting_min_k, bank, format, workers, out, train_noise, profile
        )
    }

    pub fn resolve(self) -> Result<Resolved, CliError> {
        let usage = |what: &str, e: String| CliError::Usage(format!("{what}: {e}"));
        let mut plan = SplitPlan::default();
        if let Some(s) = &self.k_train {
            plan.train_k = s.parse::<KRange>().map_err(|e| usage("k-train", e))?;
        }
        if let Some(s) = &self.k_test {
            plan.test_k = s.parse::<KRange>().map_err(|e| usage("k-test", e))?;
        }
        plan.train_n = self.train_n.unwrap_or(plan.train_n);
        plan.valid_n = self.valid_n.unwrap_or(plan.valid_n);
        plan.test_n = self.test_n.unwrap_or(plan.test_n);
        for (name, value, slot) in [
            ("noise-irrelevant", &self.noise_irrelevant, &mut plan.noise.irrelevant),
            ("noise-disconnected", &self.noise_disconnected, &mut plan.noise.disconnected),
            ("noise-supporting", &self.noise_supporting, &mut plan.noise.supporting),
        ] {
            if let Some(s) = value {
                *slot = s.parse::<CountRange>().map_err(|e| usage(name, e))?;
            }
        }
        if let Some(m) = self.supporting_min_k {
            plan.noise.supporting_min_k = m;
        }
        plan.train_noise = self.train_noise.unwrap_or(false);
        if plan.train_noise && self.profile.unwrap_or_default() == Profile::Paper {
            return Err(CliError::Usage(
                "noisy training data is disabled under the paper profile; pass --profile custom to allow it".into(),
            ));
        }
        plan.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let format = match &self.format {
            Some(f) => f.parse().map_err(|e| usage("format", e))?,
            None => Format::Jsonl,
        };
        if self.workers == Some(0) {
            return Err(CliError::Usage("workers must be at least 1".into()));
        }
        if let Some(b) = &self.bank {
            if !b.exists() {
                return Err(CliError::Usage(format!("template bank {} does not exist", b.display())));
            }
        }
        let out = self.out.ok_or_else(|| CliError::Usage("an output directory is required (--out)".into()))?;
        Ok(Resolved { seed: self.seed.unwrap_or(DEFAULT_SEED), plan, bank: self.bank, format, workers: self.workers, out })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let file: RunConfig = toml::from_str("seed = 3\ntrain-n = 5\nout = \"a\"").unwrap();
        let flags = RunConfig { seed: Some(9), ..RunConfig::default() };
        let r = file.overlay(flags).resolve().unwrap();
        assert_eq!(r.seed, 9);
        assert_eq!(r.plan.train_n, 5);
        assert_eq!(r.out, PathBuf::from("a"));
    }

    #[test]
    fn paper_profile_rejects_noisy_training() {
        let c = RunConfig { train_noise: Some(true), out: Some("x".into()), ..RunConfig::default() };
        assert!(matches!(c.clone().resolve(), Err(CliError::Usage(_))));
        let c = RunConfig { profile: Some(Profile::Custom), ..c };
        assert!(c.resolve().unwrap().plan.train_noise);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("sed = 1").is_err());
    }
}
