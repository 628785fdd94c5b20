//! The epoch loop: collect, update, log, evaluate, checkpoint.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, Mode};
use super::eval::{eval_locomotion, run_eval, DodgePolicy};
use super::metrics::{MetricsRecord, MetricsWriter};
use crate::env::{DodgeEnv, LocoEnv, Observation, ACTION_DIM, LOCO_OBS_DIM, OBS_DIM};
use crate::error::{Error, Result};
use crate::feudal::{
    save_hierarchy, HierarchicalAgent, HighLevelPolicy, LowLevelPolicy, WindowAccumulator, SUBGOAL_DIM,
};
use crate::sac::{ReplayBuffer, SacAgent, Transition, UpdateStats};

pub const METRICS_FILE: &str = "metrics.jsonl";
pub const CONFIG_FILE: &str = "config.json";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const FINAL_CHECKPOINT: &str = "final";
/// Flat agent file inside `pretrain` and `e2e` checkpoint directories.
pub const AGENT_FILE: &str = "agent.json";
pub const LOW_FILE: &str = crate::feudal::bundle::LOW_FILE;

/// Independent random streams derived from one run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Env = 1,
    Agent = 2,
    Explore = 3,
    Eval = 4,
}

pub fn derive_seed(seed: u64, stream: Stream) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng.next_u64()
}

/// Seed of the environment used for evaluation during a run.
pub fn eval_seed(seed: u64) -> u64 {
    derive_seed(seed, Stream::Eval)
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub seed: u64,
    pub run_dir: PathBuf,
    pub final_checkpoint: PathBuf,
    pub records: Vec<MetricsRecord>,
}

struct EvalSummary {
    mean_return: f64,
    dodge_rate: Option<f64>,
    latency: Option<f64>,
}

trait Trainer {
    /// Runs `steps` primitive steps, storing transitions; returns the
    /// returns of episodes that finished.
    fn collect(&mut self, steps: usize) -> Result<Vec<f64>>;
    fn update(&mut self) -> Result<Option<UpdateStats>>;
    fn evaluate(&self) -> Result<EvalSummary>;
    fn save(&self, dir: &Path) -> Result<()>;
}

struct Common {
    cfg: ExperimentConfig,
    seed: u64,
    agent: SacAgent,
    buffer: ReplayBuffer,
    explore: ChaCha8Rng,
    steps_taken: usize,
    episode_return: f64,
}

impl Common {
    fn new(cfg: &ExperimentConfig, seed: u64, obs_dim: usize, action_dim: usize) -> Result<Self> {
        let agent = SacAgent::new(obs_dim, action_dim, cfg.sac.clone(), derive_seed(seed, Stream::Agent))?;
        let buffer = agent.new_buffer();
        Ok(Self {
            cfg: cfg.clone(),
            seed,
            agent,
            buffer,
            explore: ChaCha8Rng::seed_from_u64(derive_seed(seed, Stream::Explore)),
            steps_taken: 0,
            episode_return: 0.0,
        })
    }

    fn warming_up(&self) -> bool {
        self.steps_taken < self.cfg.warmup_steps
    }

    fn uniform_action(&mut self, dim: usize) -> Vec<f32> {
        (0..dim).map(|_| self.explore.random_range(-1.0f32..=1.0)).collect()
    }

    fn policy_action(&mut self, obs: &[f32]) -> Result<Vec<f32>> {
        if self.warming_up() {
            Ok(self.uniform_action(self.agent.action_dim()))
        } else {
            self.agent.act(obs, false, &mut self.explore)
        }
    }

    fn update(&mut self) -> Result<Option<UpdateStats>> {
        match self.agent.update(&self.buffer) {
            Ok(s) => Ok(Some(s)),
            Err(Error::NotReady { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn scaled(&self, r: f64) -> f32 {
        (r * self.cfg.reward_scale) as f32
    }
}

fn to_f64(a: &[f32]) -> Vec<f64> {
    a.iter().map(|&x| f64::from(x)).collect()
}

struct LocoTrainer {
    c: Common,
    env: LocoEnv,
}

impl Trainer for LocoTrainer {
    fn collect(&mut self, steps: usize) -> Result<Vec<f64>> {
        let mut finished = Vec::new();
        for _ in 0..steps {
            if self.env.is_done() {
                self.env.reset();
                self.c.episode_return = 0.0;
            }
            let obs: Vec<f32> = self.env.observation().0.iter().map(|&x| x as f32).collect();
            let action = self.c.policy_action(&obs)?;
            let r = self.env.step(&to_f64(&action))?;
            self.c.steps_taken += 1;
            self.c.episode_return += r.reward;
            self.c.buffer.push(Transition {
                obs,
                action,
                reward: self.c.scaled(r.reward),
                next_obs: r.observation.0.iter().map(|&x| x as f32).collect(),
                done: r.episode_done,
                discount_exponent: 1,
            })?;
            if r.episode_done {
                finished.push(self.c.episode_return);
            }
        }
        Ok(finished)
    }

    fn update(&mut self) -> Result<Option<UpdateStats>> {
        self.c.update()
    }

    fn evaluate(&self) -> Result<EvalSummary> {
        Ok(EvalSummary {
            mean_return: eval_locomotion(&self.c.agent, &self.c.cfg.env, self.c.cfg.eval_episodes, eval_seed(self.c.seed))?,
            dodge_rate: None,
            latency: None,
        })
    }

    fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.c.agent.save(&dir.join(LOW_FILE))
    }
}

fn dodge_summary(policy: &DodgePolicy, cfg: &ExperimentConfig, seed: u64) -> Result<EvalSummary> {
    let r = run_eval(policy, &cfg.env, cfg.obs_mode, cfg.eval_episodes, eval_seed(seed), false)?;
    Ok(EvalSummary {
        mean_return: r.mean_return,
        dodge_rate: Some(r.dodge_rate),
        latency: r.mean_latency_steps,
    })
}

struct FlatTrainer {
    c: Common,
    env: DodgeEnv,
}

impl Trainer for FlatTrainer {
    fn collect(&mut self, steps: usize) -> Result<Vec<f64>> {
        let mut finished = Vec::new();
        for _ in 0..steps {
            if self.env.is_done() {
                self.env.reset();
                self.c.episode_return = 0.0;
            }
            let obs = self.env.observation().to_f32();
            let action = self.c.policy_action(&obs)?;
            let r = self.env.step(&to_f64(&action))?;
            self.c.steps_taken += 1;
            self.c.episode_return += r.reward;
            self.c.buffer.push(Transition {
                obs,
                action,
                reward: self.c.scaled(r.reward),
                next_obs: r.observation.to_f32(),
                done: r.episode_done,
                discount_exponent: 1,
            })?;
            if r.episode_done {
                finished.push(self.c.episode_return);
            }
        }
        Ok(finished)
    }

    fn update(&mut self) -> Result<Option<UpdateStats>> {
        self.c.update()
    }

    fn evaluate(&self) -> Result<EvalSummary> {
        dodge_summary(&DodgePolicy::Flat(self.c.agent.clone()), &self.c.cfg, self.c.seed)
    }

    fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.c.agent.save(&dir.join(AGENT_FILE))
    }
}

struct HierTrainer {
    c: Common,
    env: DodgeEnv,
    low: LowLevelPolicy,
    subgoal: crate::env::Vec2,
    window: Option<WindowAccumulator>,
}

impl HierTrainer {
    fn hierarchy(&self) -> Result<HierarchicalAgent> {
        HierarchicalAgent::new(
            HighLevelPolicy::new(self.c.agent.clone())?,
            self.low.clone(),
            self.c.cfg.decision_period,
        )
    }
}

impl Trainer for HierTrainer {
    fn collect(&mut self, steps: usize) -> Result<Vec<f64>> {
        let k = self.c.cfg.decision_period;
        let gamma = self.c.cfg.sac.gamma;
        let mut finished = Vec::new();
        for _ in 0..steps {
            if self.env.is_done() {
                self.env.reset();
                self.c.episode_return = 0.0;
                self.window = None;
            }
            let z: Observation = self.env.observation();
            if self.env.step_index() % k == 0 {
                let obs = z.to_f32();
                let raw = self.c.policy_action(&obs)?;
                self.subgoal = crate::feudal::normalize_subgoal([f64::from(raw[0]), f64::from(raw[1])]);
                self.window = Some(WindowAccumulator::open(obs, raw, gamma));
            }
            let action = self.low.act_internal(z.internal(), self.subgoal)?;
            let r = self.env.step(&action)?;
            self.c.steps_taken += 1;
            self.c.episode_return += r.reward;
            let window = self.window.as_mut().expect("opened at the first step of every episode");
            window.push(r.reward * self.c.cfg.reward_scale);
            if r.episode_done || self.env.step_index() % k == 0 {
                let w = self.window.take().expect("checked above");
                self.c.buffer.push(w.close(r.observation.to_f32(), r.episode_done))?;
            }
            if r.episode_done {
                finished.push(self.c.episode_return);
            }
        }
        Ok(finished)
    }

    fn update(&mut self) -> Result<Option<UpdateStats>> {
        self.c.update()
    }

    fn evaluate(&self) -> Result<EvalSummary> {
        dodge_summary(&DodgePolicy::Hierarchical(self.hierarchy()?), &self.c.cfg, self.c.seed)
    }

    fn save(&self, dir: &Path) -> Result<()> {
        save_hierarchy(dir, &self.hierarchy()?, self.c.cfg.obs_mode, &self.c.cfg.hash())
    }
}

/// Resolves a pretrained walker given as a file or a directory holding
/// `low.json`.
pub fn load_low(path: &Path) -> Result<LowLevelPolicy> {
    let file = if path.is_dir() { path.join(LOW_FILE) } else { path.to_path_buf() };
    if !file.is_file() {
        return Err(Error::Config(format!("missing low-level checkpoint {}", path.display())));
    }
    LowLevelPolicy::new(SacAgent::load(&file)?)
}

fn make_trainer(cfg: &ExperimentConfig, seed: u64) -> Result<Box<dyn Trainer>> {
    let env_seed = derive_seed(seed, Stream::Env);
    Ok(match cfg.mode {
        Mode::Pretrain => Box::new(LocoTrainer {
            c: Common::new(cfg, seed, LOCO_OBS_DIM, ACTION_DIM)?,
            env: LocoEnv::new(cfg.env.clone(), env_seed)?,
        }),
        Mode::E2e => Box::new(FlatTrainer {
            c: Common::new(cfg, seed, OBS_DIM, ACTION_DIM)?,
            env: DodgeEnv::new(cfg.env.clone(), cfg.obs_mode, env_seed)?,
        }),
        Mode::Hrl => {
            let low_path = cfg
                .low_checkpoint
                .as_ref()
                .ok_or_else(|| Error::Config("hrl mode needs a low-level checkpoint".into()))?;
            Box::new(HierTrainer {
                c: Common::new(cfg, seed, OBS_DIM, SUBGOAL_DIM)?,
                env: DodgeEnv::new(cfg.env.clone(), cfg.obs_mode, env_seed)?,
                low: load_low(low_path)?,
                subgoal: crate::env::Vec2::new(1.0, 0.0),
                window: None,
            })
        }
    })
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Trains one seed, calling `progress` after every epoch.
pub fn run_seed_with(
    cfg: &ExperimentConfig,
    seed: u64,
    progress: &mut dyn FnMut(&MetricsRecord),
) -> Result<RunOutcome> {
    cfg.validate()?;
    let run_dir = cfg.run_dir(seed);
    fs::create_dir_all(&run_dir)?;
    fs::write(run_dir.join(CONFIG_FILE), serde_json::to_string_pretty(cfg)? + "\n")?;
    let mut metrics = MetricsWriter::create(&run_dir.join(METRICS_FILE))?;
    let mut trainer = make_trainer(cfg, seed)?;
    let ckpt_root = run_dir.join(CHECKPOINT_DIR);
    let start = Instant::now();
    let mut records = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let returns = trainer.collect(cfg.samples_per_epoch)?;
        let mut stats = Vec::with_capacity(cfg.grad_steps_per_epoch);
        for _ in 0..cfg.grad_steps_per_epoch {
            if let Some(s) = trainer.update()? {
                stats.push(s);
            }
        }
        let eval = if epoch % cfg.eval_every == 0 || epoch == cfg.epochs {
            Some(trainer.evaluate()?)
        } else {
            None
        };
        let record = MetricsRecord {
            epoch,
            env_steps_total: epoch * cfg.samples_per_epoch,
            mean_train_return: mean(&returns),
            eval_mean_return: eval.as_ref().map(|e| e.mean_return),
            eval_dodge_rate: eval.as_ref().and_then(|e| e.dodge_rate),
            eval_mean_latency_steps: eval.as_ref().and_then(|e| e.latency),
            critic_loss: mean(&stats.iter().map(|s| s.critic_loss).collect::<Vec<_>>()),
            actor_loss: mean(&stats.iter().map(|s| s.actor_loss).collect::<Vec<_>>()),
            alpha: stats.last().map(|s| s.alpha),
            wall_time_s: cfg.record_wall_time.then(|| start.elapsed().as_secs_f64()),
        };
        metrics.append(&record)?;
        progress(&record);
        records.push(record);
        if epoch % cfg.checkpoint_every == 0 && epoch != cfg.epochs {
            trainer.save(&ckpt_root.join(format!("epoch-{epoch:05}")))?;
        }
    }
    let final_checkpoint = ckpt_root.join(FINAL_CHECKPOINT);
    trainer.save(&final_checkpoint)?;
    Ok(RunOutcome {
        seed,
        run_dir,
        final_checkpoint,
        records,
    })
}

pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<RunOutcome> {
    run_seed_with(cfg, seed, &mut |_| {})
}

/// Trains every seed listed in the configuration, one after another.
pub fn run_training(cfg: &ExperimentConfig) -> Result<Vec<RunOutcome>> {
    cfg.seeds.iter().map(|&s| run_seed(cfg, s)).collect()
}
