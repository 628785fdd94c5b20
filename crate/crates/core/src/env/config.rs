use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical and task constants of the crawler, the ball and both tasks.
///
/// Serialized as a flat JSON object with exactly these field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    /// Simulation step, seconds.
    pub dt: f64,
    /// Hip-to-tip leg length, meters.
    pub leg_reach: f64,
    /// Swing joints are confined to `[-swing_limit, swing_limit]` radians.
    pub swing_limit: f64,
    pub lift_range: [f64; 2],
    /// A leg with lift strictly below this value is in stance.
    pub stance_threshold: f64,
    pub max_swing_rate: f64,
    pub max_lift_rate: f64,
    pub agent_radius: f64,
    pub ball_radius: f64,
    pub ball_spawn_distance: f64,
    pub ball_speed: f64,
    /// Steps between ball spawns.
    pub ball_period: usize,
    pub episode_length: usize,
    pub visibility_radius: f64,
    pub hit_reward: f64,
    pub loco_episode_length: usize,
    pub loco_goal_period: usize,
}

impl Default for EnvConfig {
    // The swing limit is the documented 0.7854 rad, not π/4 exactly.
    #[allow(clippy::approx_constant)]
    fn default() -> Self {
        Self {
            dt: 0.05,
            leg_reach: 0.6,
            swing_limit: 0.7854,
            lift_range: [0.0, 1.0],
            stance_threshold: 0.2,
            max_swing_rate: 2.0,
            max_lift_rate: 2.0,
            agent_radius: 0.5,
            ball_radius: 0.25,
            ball_spawn_distance: 5.0,
            ball_speed: 2.0,
            ball_period: 100,
            episode_length: 1000,
            visibility_radius: 4.0,
            hit_reward: -5.0,
            loco_episode_length: 300,
            loco_goal_period: 100,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("leg_reach", self.leg_reach),
            ("swing_limit", self.swing_limit),
            ("max_swing_rate", self.max_swing_rate),
            ("max_lift_rate", self.max_lift_rate),
            ("agent_radius", self.agent_radius),
            ("ball_radius", self.ball_radius),
            ("ball_spawn_distance", self.ball_spawn_distance),
            ("ball_speed", self.ball_speed),
            ("visibility_radius", self.visibility_radius),
            ("stance_threshold", self.stance_threshold),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let counts = [
            ("ball_period", self.ball_period),
            ("episode_length", self.episode_length),
            ("loco_episode_length", self.loco_episode_length),
            ("loco_goal_period", self.loco_goal_period),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        let [lo, hi] = self.lift_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!("lift_range {lo}..{hi} is empty")));
        }
        if !(self.stance_threshold >= lo && self.stance_threshold <= hi) {
            return Err(Error::Config("stance_threshold lies outside lift_range".into()));
        }
        if !(self.hit_reward.is_finite() && self.hit_reward < 0.0) {
            return Err(Error::Config("hit_reward must be negative".into()));
        }
        if self.ball_spawn_distance <= self.visibility_radius {
            return Err(Error::Config(
                "balls must spawn outside the visibility radius".into(),
            ));
        }
        Ok(())
    }

    /// Upper bound on body speed: one stance leg sweeping at full rate.
    pub fn max_body_speed(&self) -> f64 {
        self.leg_reach * self.max_swing_rate
    }

    /// Balls per dodge episode.
    pub fn balls_per_episode(&self) -> usize {
        self.episode_length.div_ceil(self.ball_period)
    }
}
