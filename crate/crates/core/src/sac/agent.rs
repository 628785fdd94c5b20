use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::losses::{actor_loss, alpha_loss, critic_loss, critic_targets, deterministic_actions, sample_policy};
use super::replay::{Batch, ReplayBuffer};
use crate::error::{contract, Error, Result};
use crate::numerics::{AdamConfig, AdamState, Mlp, Tensor2};

/// Learner hyperparameters, shared by every agent in the workbench.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SacConfig {
    pub lr: f64,
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub hidden: Vec<usize>,
    pub buffer_capacity: usize,
    /// Defaults to `-action_dim` when absent.
    pub target_entropy: Option<f64>,
    pub initial_alpha: f64,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            lr: 3e-4,
            gamma: 0.99,
            tau: 0.005,
            batch_size: 256,
            hidden: vec![128, 128],
            buffer_capacity: 1_000_000,
            target_entropy: None,
            initial_alpha: 1.0,
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && (0.0..=1.0).contains(&self.gamma)
            && (0.0..=1.0).contains(&self.tau)
            && self.batch_size > 0
            && self.buffer_capacity >= self.batch_size
            && !self.hidden.is_empty()
            && self.hidden.iter().all(|&h| h > 0)
            && self.initial_alpha > 0.0
            && self.initial_alpha.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid SAC hyperparameters: {self:?}")))
        }
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            ..AdamConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub alpha_loss: f64,
    pub alpha: f64,
}

/// Soft actor-critic with twin critics, Polyak-averaged target critics and a
/// learned entropy temperature.
#[derive(Debug, Clone)]
pub struct SacAgent {
    pub(crate) obs_dim: usize,
    pub(crate) action_dim: usize,
    pub(crate) cfg: SacConfig,
    pub(crate) actor: Mlp<f32>,
    pub(crate) critic1: Mlp<f32>,
    pub(crate) critic2: Mlp<f32>,
    pub(crate) target1: Mlp<f32>,
    pub(crate) target2: Mlp<f32>,
    pub(crate) log_alpha: f32,
    pub(crate) actor_opt: AdamState<f32>,
    pub(crate) critic1_opt: AdamState<f32>,
    pub(crate) critic2_opt: AdamState<f32>,
    pub(crate) alpha_opt: AdamState<f32>,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) step_count: u64,
}

fn layer_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    std::iter::once(input).chain(hidden.iter().copied()).chain(std::iter::once(output)).collect()
}

impl SacAgent {
    pub fn new(obs_dim: usize, action_dim: usize, cfg: SacConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if obs_dim == 0 || action_dim == 0 {
            return Err(Error::Config("observation and action sizes must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actor = Mlp::new(&layer_sizes(obs_dim, &cfg.hidden, 2 * action_dim), &mut rng);
        let critic_sizes = layer_sizes(obs_dim + action_dim, &cfg.hidden, 1);
        let critic1 = Mlp::new(&critic_sizes, &mut rng);
        let critic2 = Mlp::new(&critic_sizes, &mut rng);
        Ok(Self::assemble(obs_dim, action_dim, cfg, actor, critic1, critic2, None, None, rng, 0))
    }

    /// Builds an agent from networks; targets default to copies of the
    /// critics and optimizer state starts fresh.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        obs_dim: usize,
        action_dim: usize,
        cfg: SacConfig,
        actor: Mlp<f32>,
        critic1: Mlp<f32>,
        critic2: Mlp<f32>,
        target1: Option<Mlp<f32>>,
        target2: Option<Mlp<f32>>,
        rng: ChaCha8Rng,
        step_count: u64,
    ) -> Self {
        let log_alpha = cfg.initial_alpha.ln() as f32;
        Self {
            obs_dim,
            action_dim,
            actor_opt: AdamState::new(&actor.params()),
            critic1_opt: AdamState::new(&critic1.params()),
            critic2_opt: AdamState::new(&critic2.params()),
            alpha_opt: AdamState::new(&[&[log_alpha][..]]),
            target1: target1.unwrap_or_else(|| critic1.clone()),
            target2: target2.unwrap_or_else(|| critic2.clone()),
            actor,
            critic1,
            critic2,
            log_alpha,
            cfg,
            rng,
            step_count,
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn config(&self) -> &SacConfig {
        &self.cfg
    }

    pub fn actor(&self) -> &Mlp<f32> {
        &self.actor
    }

    pub fn actor_mut(&mut self) -> &mut Mlp<f32> {
        &mut self.actor
    }

    pub fn critics(&self) -> (&Mlp<f32>, &Mlp<f32>) {
        (&self.critic1, &self.critic2)
    }

    pub fn targets(&self) -> (&Mlp<f32>, &Mlp<f32>) {
        (&self.target1, &self.target2)
    }

    pub fn alpha(&self) -> f64 {
        f64::from(self.log_alpha).exp()
    }

    pub fn log_alpha(&self) -> f32 {
        self.log_alpha
    }

    /// Gradient updates applied so far.
    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn target_entropy(&self) -> f64 {
        self.cfg.target_entropy.unwrap_or(-(self.action_dim as f64))
    }

    /// Every network's parameters are finite.
    pub fn is_finite(&self) -> bool {
        [&self.actor, &self.critic1, &self.critic2, &self.target1, &self.target2]
            .iter()
            .all(|n| n.is_finite())
            && self.log_alpha.is_finite()
    }

    /// Zeroes the actor's output layer, making the deterministic policy the
    /// zero action.
    pub fn zero_actor_output(&mut self) {
        self.actor.zero_output_layer();
    }

    pub fn new_buffer(&self) -> ReplayBuffer {
        ReplayBuffer::new(self.obs_dim, self.action_dim, self.cfg.buffer_capacity)
    }

    /// Action in `[-1, 1]^d`: `tanh(mean)` when `deterministic`, otherwise a
    /// reparameterized sample drawn with `rng`.
    pub fn act<R: Rng + ?Sized>(&self, obs: &[f32], deterministic: bool, rng: &mut R) -> Result<Vec<f32>> {
        if obs.len() != self.obs_dim {
            return Err(contract(format!(
                "agent observes {} values, got {}",
                self.obs_dim,
                obs.len()
            )));
        }
        if deterministic {
            return self.act_deterministic(obs);
        }
        let x = Tensor2::from_vec(1, self.obs_dim, obs.to_vec())?;
        let noise = self.noise(1, rng);
        Ok(sample_policy(&self.actor, &x, &noise)?.actions.into_vec())
    }

    /// `tanh(mean)`; needs no randomness.
    pub fn act_deterministic(&self, obs: &[f32]) -> Result<Vec<f32>> {
        if obs.len() != self.obs_dim {
            return Err(contract(format!(
                "agent observes {} values, got {}",
                self.obs_dim,
                obs.len()
            )));
        }
        let x = Tensor2::from_vec(1, self.obs_dim, obs.to_vec())?;
        Ok(deterministic_actions(&self.actor, &x)?.into_vec())
    }

    fn noise<R: Rng + ?Sized>(&self, rows: usize, rng: &mut R) -> Tensor2<f32> {
        let data = (0..rows * self.action_dim).map(|_| rng.sample(StandardNormal)).collect();
        Tensor2::from_vec(rows, self.action_dim, data).expect("sized above")
    }

    /// Soft Bellman targets for `batch` under the current actor and targets.
    pub fn critic_targets(&mut self, batch: &Batch) -> Result<Vec<f32>> {
        let noise = {
            let mut rng = self.rng.clone();
            let n = self.noise(batch.len(), &mut rng);
            self.rng = rng;
            n
        };
        critic_targets(
            &self.actor,
            &self.target1,
            &self.target2,
            &batch.next_obs,
            &batch.rewards,
            &batch.dones,
            &batch.discount_exponents,
            &noise,
            self.alpha() as f32,
            self.cfg.gamma as f32,
        )
    }

    /// One gradient step on both critics, the actor and the temperature,
    /// followed by a Polyak update of the target critics.
    pub fn update(&mut self, buffer: &ReplayBuffer) -> Result<UpdateStats> {
        let batch = buffer.sample(self.cfg.batch_size, &mut self.rng)?;
        self.update_on(&batch)
    }

    pub fn update_on(&mut self, batch: &Batch) -> Result<UpdateStats> {
        let adam = self.cfg.adam();
        let step = self.step_count + 1;

        let targets = self.critic_targets(batch)?;
        let obs_actions = batch.obs.hcat(&batch.actions)?;
        let (l1, g1) = critic_loss(&self.critic1, &obs_actions, &targets)?;
        let (l2, g2) = critic_loss(&self.critic2, &obs_actions, &targets)?;
        let critic_loss = f64::from(l1) + f64::from(l2);
        if !critic_loss.is_finite() {
            return Err(Error::Divergence(format!("critic loss {critic_loss} at update {step}")));
        }
        self.critic1_opt.step(&mut self.critic1.params_mut(), &g1.params(), &adam)?;
        self.critic2_opt.step(&mut self.critic2.params_mut(), &g2.params(), &adam)?;

        let noise = {
            let mut rng = self.rng.clone();
            let n = self.noise(batch.len(), &mut rng);
            self.rng = rng;
            n
        };
        let alpha = self.alpha() as f32;
        let actor = actor_loss(&self.actor, &self.critic1, &self.critic2, &batch.obs, &noise, alpha)?;
        if !actor.loss.is_finite() {
            return Err(Error::Divergence(format!("actor loss {} at update {step}", actor.loss)));
        }
        self.actor_opt.step(&mut self.actor.params_mut(), &actor.grads.params(), &adam)?;

        let log_probs: Vec<f64> = actor.log_probs.iter().map(|&x| f64::from(x)).collect();
        let (a_loss, a_grad) = alpha_loss(f64::from(self.log_alpha), &log_probs, self.target_entropy());
        let mut la = [self.log_alpha];
        self.alpha_opt.step(&mut [&mut la[..]], &[&[a_grad as f32][..]], &adam)?;
        self.log_alpha = la[0];

        let tau = self.cfg.tau as f32;
        self.target1.polyak_from(&self.critic1, tau)?;
        self.target2.polyak_from(&self.critic2, tau)?;
        self.step_count = step;

        if !self.is_finite() {
            return Err(Error::Divergence(format!("non-finite parameters after update {step}")));
        }
        Ok(UpdateStats {
            critic_loss,
            actor_loss: f64::from(actor.loss),
            alpha_loss: a_loss,
            alpha: self.alpha(),
        })
    }
}
