//! Semi-MDP aggregation of primitive steps into high-level transitions.

use crate::sac::Transition;

/// Accumulates the primitive steps executed under one held subgoal.
#[derive(Debug, Clone)]
pub struct WindowAccumulator {
    obs: Vec<f32>,
    raw_action: Vec<f32>,
    gamma: f64,
    reward: f64,
    discount: f64,
    steps: u32,
}

impl WindowAccumulator {
    pub fn open(obs: Vec<f32>, raw_action: Vec<f32>, gamma: f64) -> Self {
        Self {
            obs,
            raw_action,
            gamma,
            reward: 0.0,
            discount: 1.0,
            steps: 0,
        }
    }

    pub fn push(&mut self, reward: f64) {
        self.reward += self.discount * reward;
        self.discount *= self.gamma;
        self.steps += 1;
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    /// `Σ γ^j r_j` so far.
    pub fn reward(&self) -> f64 {
        self.reward
    }

    pub fn close(self, next_obs: Vec<f32>, done: bool) -> Transition {
        Transition {
            obs: self.obs,
            action: self.raw_action,
            reward: self.reward as f32,
            next_obs,
            done,
            discount_exponent: self.steps,
        }
    }
}

/// High-level transition for a window of primitive `rewards`; the bootstrap
/// discount exponent is the number of steps consumed.
pub fn hier_collect_transition(
    obs: Vec<f32>,
    raw_action: Vec<f32>,
    rewards: &[f64],
    next_obs: Vec<f32>,
    done: bool,
    gamma: f64,
) -> Transition {
    let mut w = WindowAccumulator::open(obs, raw_action, gamma);
    for &r in rewards {
        w.push(r);
    }
    w.close(next_obs, done)
}
