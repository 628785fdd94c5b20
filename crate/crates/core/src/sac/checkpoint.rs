//! JSON persistence for [`SacAgent`].
//!
//! Weights are stored as nested row-major arrays, `weight[i][j]` connecting
//! input `i` to output `j`. `f32` values go through serde_json's shortest
//! round-trip formatting, so a reload is bit-exact.

use std::fs;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::agent::{SacAgent, SacConfig};
use crate::error::{Error, Result};
use crate::numerics::{Activation, AdamState, Dense, Mlp, Tensor2};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub weight: Vec<Vec<f32>>,
    pub bias: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkLayers {
    pub actor: Vec<LayerRecord>,
    pub critic1: Vec<LayerRecord>,
    pub critic2: Vec<LayerRecord>,
    pub target1: Vec<LayerRecord>,
    pub target2: Vec<LayerRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerStates {
    pub actor: AdamState<f32>,
    pub critic1: AdamState<f32>,
    pub critic2: AdamState<f32>,
    pub alpha: AdamState<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SacCheckpoint {
    pub schema_version: u32,
    pub obs_dim: usize,
    pub action_dim: usize,
    pub hidden: Vec<usize>,
    pub layers: NetworkLayers,
    pub log_alpha: f32,
    pub rng_state: ChaCha8Rng,
    pub step_count: u64,
    pub config: SacConfig,
    /// Absent in checkpoints that only need to act.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizers: Option<OptimizerStates>,
}

fn to_records(net: &Mlp<f32>) -> Vec<LayerRecord> {
    net.layers()
        .iter()
        .map(|l| LayerRecord {
            weight: (0..l.weight.rows()).map(|i| l.weight.row(i).to_vec()).collect(),
            bias: l.bias.clone(),
        })
        .collect()
}

fn from_records(name: &str, records: &[LayerRecord], sizes: &[usize]) -> Result<Mlp<f32>> {
    let bad = |msg: String| Error::Config(format!("checkpoint network {name}: {msg}"));
    if records.len() + 1 != sizes.len() {
        return Err(bad(format!("{} layers, expected {}", records.len(), sizes.len() - 1)));
    }
    let mut layers = Vec::with_capacity(records.len());
    for (k, r) in records.iter().enumerate() {
        let (inputs, outputs) = (sizes[k], sizes[k + 1]);
        if r.weight.len() != inputs || r.weight.iter().any(|row| row.len() != outputs) || r.bias.len() != outputs {
            return Err(bad(format!("layer {k} is not {inputs}x{outputs}")));
        }
        layers.push(Dense {
            weight: Tensor2::from_rows(&r.weight)?,
            bias: r.bias.clone(),
        });
    }
    Mlp::from_layers(layers, Activation::Relu, Activation::Linear)
}

fn sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    std::iter::once(input).chain(hidden.iter().copied()).chain(std::iter::once(output)).collect()
}

impl SacCheckpoint {
    pub fn from_agent(agent: &SacAgent, with_optimizers: bool) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            obs_dim: agent.obs_dim,
            action_dim: agent.action_dim,
            hidden: agent.cfg.hidden.clone(),
            layers: NetworkLayers {
                actor: to_records(&agent.actor),
                critic1: to_records(&agent.critic1),
                critic2: to_records(&agent.critic2),
                target1: to_records(&agent.target1),
                target2: to_records(&agent.target2),
            },
            log_alpha: agent.log_alpha,
            rng_state: agent.rng.clone(),
            step_count: agent.step_count,
            config: agent.cfg.clone(),
            optimizers: with_optimizers.then(|| OptimizerStates {
                actor: agent.actor_opt.clone(),
                critic1: agent.critic1_opt.clone(),
                critic2: agent.critic2_opt.clone(),
                alpha: agent.alpha_opt.clone(),
            }),
        }
    }

    pub fn into_agent(self) -> Result<SacAgent> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "checkpoint schema {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.hidden != self.config.hidden {
            return Err(Error::Config("checkpoint hidden sizes disagree with its config".into()));
        }
        let actor_sizes = sizes(self.obs_dim, &self.hidden, 2 * self.action_dim);
        let critic_sizes = sizes(self.obs_dim + self.action_dim, &self.hidden, 1);
        let l = &self.layers;
        let actor = from_records("actor", &l.actor, &actor_sizes)?;
        let critic1 = from_records("critic1", &l.critic1, &critic_sizes)?;
        let critic2 = from_records("critic2", &l.critic2, &critic_sizes)?;
        let target1 = from_records("target1", &l.target1, &critic_sizes)?;
        let target2 = from_records("target2", &l.target2, &critic_sizes)?;
        let mut agent = SacAgent::assemble(
            self.obs_dim,
            self.action_dim,
            self.config,
            actor,
            critic1,
            critic2,
            Some(target1),
            Some(target2),
            self.rng_state,
            self.step_count,
        );
        agent.log_alpha = self.log_alpha;
        if let Some(o) = self.optimizers {
            agent.actor_opt = o.actor;
            agent.critic1_opt = o.critic1;
            agent.critic2_opt = o.critic2;
            agent.alpha_opt = o.alpha;
        }
        if !agent.is_finite() {
            return Err(Error::Config("checkpoint holds non-finite parameters".into()));
        }
        Ok(agent)
    }
}

impl SacAgent {
    /// SHA-256 over the bit patterns of every network parameter and the
    /// temperature, as lowercase hex.
    pub fn parameter_digest(&self) -> String {
        let mut h = Sha256::new();
        for net in [&self.actor, &self.critic1, &self.critic2, &self.target1, &self.target2] {
            for block in net.params() {
                for x in block {
                    h.update(x.to_bits().to_le_bytes());
                }
            }
        }
        h.update(self.log_alpha.to_bits().to_le_bytes());
        hex::encode(h.finalize())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let ckpt = SacCheckpoint::from_agent(self, true);
        fs::write(path, serde_json::to_string(&ckpt)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let ckpt: SacCheckpoint = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        ckpt.into_agent()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sac::replay::Transition;
    use rand::SeedableRng;

    fn trained_agent() -> SacAgent {
        let cfg = SacConfig {
            hidden: vec![8, 8],
            batch_size: 4,
            buffer_capacity: 100,
            ..Default::default()
        };
        let mut agent = SacAgent::new(3, 2, cfg, 9).unwrap();
        let mut buf = agent.new_buffer();
        for i in 0..20 {
            let f = i as f32 * 0.3;
            buf.push(Transition {
                obs: vec![f.sin(), f.cos(), 0.1],
                action: vec![0.2, -0.7],
                reward: -f.cos(),
                next_obs: vec![f.cos(), f.sin(), 0.1],
                done: i % 7 == 0,
                discount_exponent: 1,
            })
            .unwrap();
        }
        for _ in 0..10 {
            agent.update(&buf).unwrap();
        }
        agent
    }

    #[test]
    fn json_layout() {
        let agent = trained_agent();
        let v = serde_json::to_value(SacCheckpoint::from_agent(&agent, false)).unwrap();
        assert_eq!(v["schema_version"], SCHEMA_VERSION);
        assert_eq!(v["obs_dim"], 3);
        assert_eq!(v["hidden"], serde_json::json!([8, 8]));
        // actor: 3 -> 8 -> 8 -> 4
        assert_eq!(v["layers"]["actor"][0]["weight"].as_array().unwrap().len(), 3);
        assert_eq!(v["layers"]["actor"][2]["bias"].as_array().unwrap().len(), 4);
        assert_eq!(v["layers"]["target2"][0]["weight"].as_array().unwrap().len(), 5);
        assert_eq!(v["step_count"], 10);
        assert!(v.get("optimizers").is_none());
    }

    #[test]
    fn reload_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agent.json");
        let agent = trained_agent();
        agent.save(&path).unwrap();
        let back = SacAgent::load(&path).unwrap();
        assert_eq!(back.actor(), agent.actor());
        assert_eq!(back.critics(), agent.critics());
        assert_eq!(back.targets(), agent.targets());
        assert_eq!(back.log_alpha().to_bits(), agent.log_alpha().to_bits());
        assert_eq!(back.step_count(), agent.step_count());
        assert_eq!(back.parameter_digest(), agent.parameter_digest());
        let obs = [0.3, -0.2, 0.9];
        for det in [true, false] {
            let a = agent.act(&obs, det, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
            let b = back.act(&obs, det, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn resumed_training_matches_uninterrupted_training() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agent.json");
        let mut agent = trained_agent();
        agent.save(&path).unwrap();
        let mut back = SacAgent::load(&path).unwrap();
        let mut buf = agent.new_buffer();
        for i in 0..8 {
            buf.push(Transition {
                obs: vec![i as f32, 0.0, 1.0],
                action: vec![0.0, 0.5],
                reward: 1.0,
                next_obs: vec![0.0, i as f32, 1.0],
                done: false,
                discount_exponent: 5,
            })
            .unwrap();
        }
        for _ in 0..5 {
            assert_eq!(agent.update(&buf).unwrap(), back.update(&buf).unwrap());
        }
        assert_eq!(agent.actor(), back.actor());
    }

    #[test]
    fn shape_mismatch_is_a_config_error() {
        let agent = trained_agent();
        let mut ckpt = SacCheckpoint::from_agent(&agent, false);
        ckpt.obs_dim = 4;
        assert!(matches!(ckpt.into_agent(), Err(Error::Config(_))));
    }
}
