//! Two-level feudal control: a frozen direction-following walker driven by a
//! high-level policy that emits a heading every `K` primitive steps.

pub mod bundle;
pub mod train;
pub mod window;

use rand::Rng;

use crate::env::{CrawlerState, Observation, Vec2, ACTION_DIM, LOCO_OBS_DIM, OBS_DIM};
use crate::error::{Error, Result};
use crate::sac::SacAgent;

pub use bundle::{load_hierarchy, save_hierarchy, HierMeta};
pub use train::{pretrain_low, train_high};
pub use window::{hier_collect_transition, WindowAccumulator};

pub const SUBGOAL_DIM: usize = 2;
pub const DEFAULT_DECISION_PERIOD: usize = 5;

/// `g / |g|`, or `(1, 0)` when `|g| <= 1e-8`.
pub fn normalize_subgoal(g: [f64; 2]) -> Vec2 {
    let v = Vec2::new(g[0], g[1]);
    let n = v.norm();
    if n > 1e-8 && n.is_finite() {
        v * (1.0 / n)
    } else {
        Vec2::new(1.0, 0.0)
    }
}

fn to_action(raw: &[f32]) -> [f64; ACTION_DIM] {
    let mut a = [0.0; ACTION_DIM];
    for (o, &x) in a.iter_mut().zip(raw) {
        *o = f64::from(x);
    }
    a
}

/// Walker mapping `[s_o, ĝ]` to joint rates.
#[derive(Debug, Clone)]
pub struct LowLevelPolicy {
    agent: SacAgent,
}

impl LowLevelPolicy {
    pub fn new(agent: SacAgent) -> Result<Self> {
        if agent.obs_dim() != LOCO_OBS_DIM || agent.action_dim() != ACTION_DIM {
            return Err(Error::Config(format!(
                "low-level policy must map {LOCO_OBS_DIM} -> {ACTION_DIM}, got {} -> {}",
                agent.obs_dim(),
                agent.action_dim()
            )));
        }
        Ok(Self { agent })
    }

    pub fn agent(&self) -> &SacAgent {
        &self.agent
    }

    pub fn into_agent(self) -> SacAgent {
        self.agent
    }

    /// Deterministic joint-rate command for an internal state `s_o` and a
    /// unit heading.
    pub fn act_internal(&self, internal: &[f64], heading: Vec2) -> Result<[f64; ACTION_DIM]> {
        let mut obs: Vec<f32> = internal.iter().map(|&x| x as f32).collect();
        obs.push(heading.x as f32);
        obs.push(heading.y as f32);
        Ok(to_action(&self.agent.act_deterministic(&obs)?))
    }

    pub fn act(&self, state: &CrawlerState, heading: Vec2) -> Result<[f64; ACTION_DIM]> {
        self.act_internal(&state.internal(), heading)
    }
}

/// Subgoal emitter over the dodge observation.
#[derive(Debug, Clone)]
pub struct HighLevelPolicy {
    agent: SacAgent,
}

impl HighLevelPolicy {
    pub fn new(agent: SacAgent) -> Result<Self> {
        if agent.obs_dim() != OBS_DIM || agent.action_dim() != SUBGOAL_DIM {
            return Err(Error::Config(format!(
                "high-level policy must map {OBS_DIM} -> {SUBGOAL_DIM}, got {} -> {}",
                agent.obs_dim(),
                agent.action_dim()
            )));
        }
        Ok(Self { agent })
    }

    pub fn agent(&self) -> &SacAgent {
        &self.agent
    }

    pub fn agent_mut(&mut self) -> &mut SacAgent {
        &mut self.agent
    }

    pub fn into_agent(self) -> SacAgent {
        self.agent
    }

    /// Raw output in `[-1, 1]^2`, before normalization.
    pub fn act<R: Rng + ?Sized>(&self, z: &Observation, deterministic: bool, rng: &mut R) -> Result<Vec<f32>> {
        self.agent.act(&z.to_f32(), deterministic, rng)
    }
}

/// Primitive action produced by [`HierarchicalAgent::act`], plus the raw
/// high-level output when this step opened a new decision window.
#[derive(Debug, Clone, PartialEq)]
pub struct HierAction {
    pub action: [f64; ACTION_DIM],
    pub subgoal: Vec2,
    pub query: Option<Vec<f32>>,
}

#[derive(Debug, Clone)]
pub struct HierarchicalAgent {
    pub high: HighLevelPolicy,
    low: LowLevelPolicy,
    decision_period: usize,
    held_subgoal: Vec2,
}

impl HierarchicalAgent {
    pub fn new(high: HighLevelPolicy, low: LowLevelPolicy, decision_period: usize) -> Result<Self> {
        if decision_period == 0 {
            return Err(Error::Config("decision period must be positive".into()));
        }
        Ok(Self {
            high,
            low,
            decision_period,
            held_subgoal: Vec2::new(1.0, 0.0),
        })
    }

    pub fn low(&self) -> &LowLevelPolicy {
        &self.low
    }

    pub fn decision_period(&self) -> usize {
        self.decision_period
    }

    pub fn held_subgoal(&self) -> Vec2 {
        self.held_subgoal
    }

    /// On steps divisible by `K` queries the high level and refreshes the
    /// held subgoal; every step drives the frozen walker deterministically.
    pub fn act<R: Rng + ?Sized>(
        &mut self,
        z: &Observation,
        step: usize,
        rng: &mut R,
        deterministic: bool,
    ) -> Result<HierAction> {
        let query = if step % self.decision_period == 0 {
            let raw = self.high.act(z, deterministic, rng)?;
            self.held_subgoal = normalize_subgoal([f64::from(raw[0]), f64::from(raw[1])]);
            Some(raw)
        } else {
            None
        };
        Ok(HierAction {
            action: self.low.act_internal(z.internal(), self.held_subgoal)?,
            subgoal: self.held_subgoal,
            query,
        })
    }

    /// Replaces the high level's raw output for the current window with an
    /// externally chosen one (used for random warm-up exploration).
    pub fn override_subgoal(&mut self, z: &Observation, raw: [f64; 2]) -> Result<HierAction> {
        self.held_subgoal = normalize_subgoal(raw);
        Ok(HierAction {
            action: self.low.act_internal(z.internal(), self.held_subgoal)?,
            subgoal: self.held_subgoal,
            query: Some(raw.iter().map(|&x| x as f32).collect()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{DodgeEnv, EnvConfig, ObsMode};
    use crate::sac::SacConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> SacConfig {
        SacConfig {
            hidden: vec![16, 16],
            batch_size: 4,
            buffer_capacity: 100,
            ..Default::default()
        }
    }

    fn agent(seed: u64) -> HierarchicalAgent {
        let high = HighLevelPolicy::new(SacAgent::new(OBS_DIM, 2, small(), seed).unwrap()).unwrap();
        let low = LowLevelPolicy::new(SacAgent::new(LOCO_OBS_DIM, 8, small(), seed + 1).unwrap()).unwrap();
        HierarchicalAgent::new(high, low, 5).unwrap()
    }

    #[test]
    fn subgoal_normalization() {
        let g = normalize_subgoal([3.0, 4.0]);
        assert!((g.x - 0.6).abs() < 1e-15 && (g.y - 0.8).abs() < 1e-15);
        assert_eq!(normalize_subgoal([0.0, 0.0]), Vec2::new(1.0, 0.0));
        assert_eq!(normalize_subgoal([-2.0, 0.0]), Vec2::new(-1.0, 0.0));
        assert_eq!(normalize_subgoal([1e-9, 0.0]), Vec2::new(1.0, 0.0));
    }

    #[test]
    fn high_level_is_queried_once_per_window() {
        let mut h = agent(0);
        let mut env = DodgeEnv::new(EnvConfig::default(), ObsMode::Full, 0).unwrap();
        let mut z = env.reset();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut queries = Vec::new();
        let mut subgoals = Vec::new();
        for step in 0..10 {
            let a = h.act(&z, step, &mut rng, false).unwrap();
            if a.query.is_some() {
                queries.push(step);
            }
            subgoals.push(a.subgoal);
            assert!((a.subgoal.norm() - 1.0).abs() < 1e-6);
            z = env.step(&a.action).unwrap().observation;
        }
        assert_eq!(queries, vec![0, 5]);
        assert!(subgoals[..5].iter().all(|&g| g == subgoals[0]));
        assert!(subgoals[5..].iter().all(|&g| g == subgoals[5]));
    }

    #[test]
    fn deterministic_action_repeats() {
        let mut h = agent(3);
        let env = {
            let mut e = DodgeEnv::new(EnvConfig::default(), ObsMode::Full, 2).unwrap();
            e.reset();
            e
        };
        let z = env.observation();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = h.act(&z, 0, &mut rng, true).unwrap();
        let b = h.act(&z, 0, &mut rng, true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wrong_dimensions_are_rejected() {
        assert!(LowLevelPolicy::new(SacAgent::new(OBS_DIM, 8, small(), 0).unwrap()).is_err());
        assert!(HighLevelPolicy::new(SacAgent::new(OBS_DIM, 8, small(), 0).unwrap()).is_err());
    }
}
