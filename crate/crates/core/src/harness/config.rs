use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::{EnvConfig, ObsMode};
use crate::error::{Error, Result};
use crate::feudal::DEFAULT_DECISION_PERIOD;
use crate::sac::SacConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Direction-following walker on the locomotion task.
    Pretrain,
    /// High level over a frozen pretrained walker.
    Hrl,
    /// A single flat agent from the dodge observation to joint rates.
    E2e,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Pretrain => "pretrain",
            Mode::Hrl => "hrl",
            Mode::E2e => "e2e",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pretrain" => Ok(Mode::Pretrain),
            "hrl" => Ok(Mode::Hrl),
            "e2e" => Ok(Mode::E2e),
            other => Err(format!("unknown mode {other:?} (expected pretrain|hrl|e2e)")),
        }
    }
}

/// One experiment: what to train, for how long, and where outputs go.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Ignored by `pretrain`.
    pub obs_mode: ObsMode,
    pub epochs: usize,
    /// Primitive environment steps collected per epoch.
    pub samples_per_epoch: usize,
    pub grad_steps_per_epoch: usize,
    pub seeds: Vec<u64>,
    pub env: EnvConfig,
    pub sac: SacConfig,
    /// High-level decision period in primitive steps.
    #[serde(rename = "K")]
    pub decision_period: usize,
    pub output_dir: PathBuf,
    /// Pretrained walker used by `hrl` runs.
    pub low_checkpoint: Option<PathBuf>,
    pub eval_every: usize,
    pub eval_episodes: usize,
    pub checkpoint_every: usize,
    /// Primitive steps at the start of a run driven by uniform random
    /// actions (subgoals in `hrl` mode) instead of the policy.
    pub warmup_steps: usize,
    /// Multiplier applied to rewards stored in replay; reported returns are
    /// always unscaled.
    pub reward_scale: f64,
    /// Wall-clock times make metrics files differ between reruns, so they
    /// are written as null unless requested.
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Hrl,
            obs_mode: ObsMode::Full,
            epochs: 2000,
            samples_per_epoch: 2000,
            grad_steps_per_epoch: 200,
            seeds: vec![0, 1, 2],
            env: EnvConfig::default(),
            sac: SacConfig::default(),
            decision_period: DEFAULT_DECISION_PERIOD,
            output_dir: PathBuf::from("runs"),
            low_checkpoint: None,
            eval_every: 10,
            eval_episodes: 5,
            checkpoint_every: 100,
            warmup_steps: 0,
            reward_scale: 1.0,
            record_wall_time: false,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.sac.validate()?;
        let counts = [
            ("epochs", self.epochs.max(1)),
            ("samples_per_epoch", self.samples_per_epoch),
            ("K", self.decision_period),
            ("eval_every", self.eval_every),
            ("eval_episodes", self.eval_episodes),
            ("checkpoint_every", self.checkpoint_every),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return Err(Error::Config("reward_scale must be positive".into()));
        }
        if self.mode == Mode::Hrl && self.samples_per_epoch % self.decision_period != 0 {
            return Err(Error::Config("samples_per_epoch must be a multiple of K".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// `<output_dir>/<mode>[-<obs_mode>]/seed-<seed>`.
    pub fn run_dir(&self, seed: u64) -> PathBuf {
        let variant = match self.mode {
            Mode::Pretrain => "pretrain".to_string(),
            m => format!("{m}-{}", self.obs_mode),
        };
        self.output_dir.join(variant).join(format!("seed-{seed}"))
    }
}
