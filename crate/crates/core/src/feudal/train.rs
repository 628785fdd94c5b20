//! Entry points for the two training stages. The loops themselves live in
//! the harness, which also owns metrics and checkpoint layout.

use std::path::Path;

use super::{load_hierarchy, HierarchicalAgent, LowLevelPolicy};
use crate::env::ObsMode;
use crate::error::{Error, Result};
use crate::harness::train::{load_low, run_seed, RunOutcome};
use crate::harness::{ExperimentConfig, Mode};

/// Trains the walker on the locomotion task and loads the final checkpoint.
pub fn pretrain_low(cfg: &ExperimentConfig, seed: u64) -> Result<(LowLevelPolicy, RunOutcome)> {
    let mut cfg = cfg.clone();
    cfg.mode = Mode::Pretrain;
    let outcome = run_seed(&cfg, seed)?;
    Ok((load_low(&outcome.final_checkpoint)?, outcome))
}

/// Trains the high level on top of a frozen walker.
pub fn train_high(
    cfg: &ExperimentConfig,
    low_checkpoint: &Path,
    obs_mode: ObsMode,
    seed: u64,
) -> Result<(HierarchicalAgent, RunOutcome)> {
    if !low_checkpoint.exists() {
        return Err(Error::Config(format!("no walker checkpoint at {}", low_checkpoint.display())));
    }
    let mut cfg = cfg.clone();
    cfg.mode = Mode::Hrl;
    cfg.obs_mode = obs_mode;
    cfg.low_checkpoint = Some(low_checkpoint.to_path_buf());
    let outcome = run_seed(&cfg, seed)?;
    let (agent, _) = load_hierarchy(&outcome.final_checkpoint)?;
    Ok((agent, outcome))
}
