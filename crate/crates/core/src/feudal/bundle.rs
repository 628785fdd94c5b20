//! Directory bundle holding both levels of a hierarchical agent.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HierarchicalAgent, HighLevelPolicy, LowLevelPolicy};
use crate::env::ObsMode;
use crate::error::{Error, Result};
use crate::sac::SacAgent;

pub const HIGH_FILE: &str = "high.json";
pub const LOW_FILE: &str = "low.json";
pub const META_FILE: &str = "hier_meta.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierMeta {
    #[serde(rename = "K")]
    pub decision_period: usize,
    pub obs_mode: ObsMode,
    /// SHA-256 of the experiment configuration that produced the bundle.
    pub config_hash: String,
}

pub fn save_hierarchy(dir: &Path, agent: &HierarchicalAgent, obs_mode: ObsMode, config_hash: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    agent.high.agent().save(&dir.join(HIGH_FILE))?;
    agent.low().agent().save(&dir.join(LOW_FILE))?;
    let meta = HierMeta {
        decision_period: agent.decision_period(),
        obs_mode,
        config_hash: config_hash.to_string(),
    };
    fs::write(dir.join(META_FILE), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

/// Whether `dir` looks like a hierarchical bundle.
pub fn is_hierarchy(dir: &Path) -> bool {
    dir.join(META_FILE).is_file()
}

pub fn load_hierarchy(dir: &Path) -> Result<(HierarchicalAgent, HierMeta)> {
    let meta_path = dir.join(META_FILE);
    if !meta_path.is_file() {
        return Err(Error::Config(format!("{} is not a hierarchical checkpoint", dir.display())));
    }
    let low_path = dir.join(LOW_FILE);
    if !low_path.is_file() {
        return Err(Error::Config(format!("missing low-level checkpoint {}", low_path.display())));
    }
    let meta: HierMeta = serde_json::from_str(&fs::read_to_string(&meta_path)?).map_err(|e| Error::Parse {
        path: meta_path.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let high = HighLevelPolicy::new(SacAgent::load(&dir.join(HIGH_FILE))?)?;
    let low = LowLevelPolicy::new(SacAgent::load(&low_path)?)?;
    Ok((HierarchicalAgent::new(high, low, meta.decision_period)?, meta))
}
