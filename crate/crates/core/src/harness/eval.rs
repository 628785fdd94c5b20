//! Deterministic evaluation rollouts and the measurements taken on them.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::latency::{reaction_latency, BallLatency};
use super::scripted::{ScriptedDodger, ScriptedGait};
use crate::env::{
    crawler_step, CrawlerState, DodgeEnv, EnvConfig, LocoEnv, ObsMode, Observation, TraceStep, Vec2, ACTION_DIM,
    LOCO_OBS_DIM, OBS_DIM,
};
use crate::error::{Error, Result};
use crate::feudal::{bundle, HierarchicalAgent, LowLevelPolicy};
use crate::sac::SacAgent;

/// Anything that can play the dodge task. Built once per evaluation, so the
/// inline agents are not worth boxing.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
pub enum DodgePolicy {
    Hierarchical(HierarchicalAgent),
    Flat(SacAgent),
    Scripted,
    Stationary,
}

impl DodgePolicy {
    /// Loads a hierarchical bundle directory, a directory holding
    /// `agent.json`, or a single agent file.
    pub fn load(path: &Path) -> Result<Self> {
        if bundle::is_hierarchy(path) {
            return Ok(Self::Hierarchical(bundle::load_hierarchy(path)?.0));
        }
        let file = if path.is_dir() { path.join(super::train::AGENT_FILE) } else { path.to_path_buf() };
        if !file.is_file() {
            return Err(Error::Config(format!("no checkpoint at {}", path.display())));
        }
        let agent = SacAgent::load(&file)?;
        if agent.obs_dim() != OBS_DIM || agent.action_dim() != ACTION_DIM {
            return Err(Error::Config(format!(
                "checkpoint maps {} -> {}, the dodge task needs {OBS_DIM} -> {ACTION_DIM}",
                agent.obs_dim(),
                agent.action_dim()
            )));
        }
        Ok(Self::Flat(agent))
    }
}

struct Actor<'a> {
    policy: &'a DodgePolicy,
    hier: Option<HierarchicalAgent>,
    dodger: ScriptedDodger,
}

impl<'a> Actor<'a> {
    fn new(policy: &'a DodgePolicy) -> Self {
        Self {
            policy,
            hier: match policy {
                DodgePolicy::Hierarchical(h) => Some(h.clone()),
                _ => None,
            },
            dodger: ScriptedDodger::default(),
        }
    }

    fn act(&mut self, z: &Observation, env: &DodgeEnv) -> Result<[f64; ACTION_DIM]> {
        let mut unused = ChaCha8Rng::seed_from_u64(0);
        Ok(match self.policy {
            DodgePolicy::Hierarchical(_) => {
                let h = self.hier.as_mut().expect("set for hierarchical policies");
                h.act(z, env.step_index(), &mut unused, true)?.action
            }
            DodgePolicy::Flat(agent) => {
                let raw = agent.act_deterministic(&z.to_f32())?;
                let mut a = [0.0; ACTION_DIM];
                for (o, x) in a.iter_mut().zip(raw) {
                    *o = f64::from(x);
                }
                a
            }
            DodgePolicy::Scripted => self.dodger.act(z, env.crawler(), env.config()),
            DodgePolicy::Stationary => [0.0; ACTION_DIM],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub episodes: usize,
    pub mean_return: f64,
    pub std_return: f64,
    /// `1 - hits / balls`.
    pub dodge_rate: f64,
    /// Mean over balls the agent reacted to, counted from visibility onset.
    pub mean_latency_steps: Option<f64>,
    /// Mean over balls the agent reacted to, counted from the spawn step.
    pub mean_latency_from_spawn: Option<f64>,
    /// Fraction of balls with a finite latency.
    pub reacted_fraction: f64,
    pub hits: usize,
    pub balls: usize,
    pub returns: Vec<f64>,
    pub latencies: Vec<BallLatency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traces: Option<Vec<Vec<TraceStep>>>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Plays `episodes` deterministic episodes of the dodge task.
pub fn run_eval(
    policy: &DodgePolicy,
    env_cfg: &EnvConfig,
    obs_mode: ObsMode,
    episodes: usize,
    seed: u64,
    keep_traces: bool,
) -> Result<EvalReport> {
    if episodes == 0 {
        return Err(Error::Empty("evaluation needs at least one episode".into()));
    }
    let mut env = DodgeEnv::new(env_cfg.clone(), obs_mode, seed)?;
    let mut returns = Vec::with_capacity(episodes);
    let mut traces = Vec::new();
    let mut latencies = Vec::new();
    let mut hits = 0;
    let mut balls = 0;
    for _ in 0..episodes {
        let mut actor = Actor::new(policy);
        let mut z = env.reset();
        let mut trace = Vec::with_capacity(env_cfg.episode_length);
        let mut total = 0.0;
        loop {
            let action = actor.act(&z, &env)?;
            let (step, crawler, ball, visible) = (env.step_index(), *env.crawler(), *env.ball(), env.ball_visible());
            let r = env.step(&action)?;
            trace.push(TraceStep::record(step, &crawler, &ball, visible, &action, r.reward));
            total += r.reward;
            hits += usize::from(r.hit_flag);
            z = r.observation;
            if r.episode_done {
                break;
            }
        }
        balls += env_cfg.balls_per_episode();
        latencies.extend(reaction_latency(&trace, env_cfg));
        returns.push(total);
        if keep_traces {
            traces.push(trace);
        }
    }
    let mean_return = returns.iter().sum::<f64>() / episodes as f64;
    let var = returns.iter().map(|r| (r - mean_return).powi(2)).sum::<f64>() / episodes as f64;
    let reacted = latencies.iter().filter(|l| l.from_onset.is_some()).count();
    Ok(EvalReport {
        episodes,
        mean_return,
        std_return: var.sqrt(),
        dodge_rate: if balls == 0 { 1.0 } else { 1.0 - hits as f64 / balls as f64 },
        mean_latency_steps: mean(latencies.iter().filter_map(|l| l.from_onset).map(|x| x as f64)),
        mean_latency_from_spawn: mean(latencies.iter().filter_map(|l| l.from_spawn()).map(|x| x as f64)),
        reacted_fraction: if latencies.is_empty() { 0.0 } else { reacted as f64 / latencies.len() as f64 },
        hits,
        balls,
        returns,
        latencies,
        traces: keep_traces.then_some(traces),
    })
}

/// Mean return of deterministic episodes on the locomotion task.
pub fn eval_locomotion(low: &SacAgent, env_cfg: &EnvConfig, episodes: usize, seed: u64) -> Result<f64> {
    if low.obs_dim() != LOCO_OBS_DIM || low.action_dim() != ACTION_DIM {
        return Err(Error::Config("not a low-level checkpoint".into()));
    }
    let mut env = LocoEnv::new(env_cfg.clone(), seed)?;
    let mut total = 0.0;
    for _ in 0..episodes {
        let mut z = env.reset();
        loop {
            let obs: Vec<f32> = z.0.iter().map(|&x| x as f32).collect();
            let a: Vec<f64> = low.act_deterministic(&obs)?.into_iter().map(f64::from).collect();
            let r = env.step(&a)?;
            total += r.reward;
            z = r.observation;
            if r.episode_done {
                break;
            }
        }
    }
    Ok(total / episodes.max(1) as f64)
}

/// Velocity along a fixed heading, from rest, over `steps` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadingRollout {
    pub heading: Vec2,
    pub displacement: Vec2,
    /// `displacement · heading / (steps * dt)`, m/s.
    pub velocity: f64,
    /// Angle between displacement and heading, radians.
    pub angle_error: f64,
}

fn heading_rollout(
    mut act: impl FnMut(&CrawlerState) -> Result<[f64; ACTION_DIM]>,
    heading: Vec2,
    steps: usize,
    cfg: &EnvConfig,
) -> Result<HeadingRollout> {
    let mut s = CrawlerState::default();
    for _ in 0..steps {
        let a = act(&s)?;
        s = crawler_step(&s, &a, cfg)?.0;
    }
    let d = s.body_pos;
    let cos = if d.norm() > 0.0 { d.dot(heading) / d.norm() } else { -1.0 };
    Ok(HeadingRollout {
        heading,
        displacement: d,
        velocity: d.dot(heading) / (steps as f64 * cfg.dt),
        angle_error: cos.clamp(-1.0, 1.0).acos(),
    })
}

/// `directions` headings evenly spaced and offset half a step from the
/// axes.
pub fn probe_headings(directions: usize) -> Vec<Vec2> {
    (0..directions)
        .map(|k| Vec2::from_angle((k as f64 + 0.5) * std::f64::consts::TAU / directions as f64))
        .collect()
}

pub fn walker_headings(low: &LowLevelPolicy, headings: &[Vec2], steps: usize, cfg: &EnvConfig) -> Result<Vec<HeadingRollout>> {
    headings
        .iter()
        .map(|&h| heading_rollout(|s| low.act(s, h), h, steps, cfg))
        .collect()
}

pub fn scripted_headings(headings: &[Vec2], steps: usize, cfg: &EnvConfig) -> Result<Vec<HeadingRollout>> {
    headings
        .iter()
        .map(|&h| {
            let mut gait = ScriptedGait::default();
            heading_rollout(|s| Ok(gait.act(s, h, cfg)), h, steps, cfg)
        })
        .collect()
}
