use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::EnvConfig;
use super::crawler::{crawler_step, CrawlerState, INTERNAL_DIM};
use super::dodge::{StepInfo, StepResult};
use super::vec2::Vec2;
use crate::error::{contract, Result};

pub const LOCO_OBS_DIM: usize = INTERNAL_DIM + 2;

/// `[swing(4), lift(4), swing_rate(4), lift_rate(4), goal_x, goal_y]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocoObservation(pub [f64; LOCO_OBS_DIM]);

impl LocoObservation {
    pub fn new(state: &CrawlerState, goal: Vec2) -> Self {
        let mut z = [0.0; LOCO_OBS_DIM];
        z[..INTERNAL_DIM].copy_from_slice(&state.internal());
        z[INTERNAL_DIM] = goal.x;
        z[INTERNAL_DIM + 1] = goal.y;
        Self(z)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Direction-following task used to pretrain the walker: reward is the
/// body displacement projected on a unit goal direction, and the goal is
/// redrawn every `loco_goal_period` steps.
#[derive(Debug, Clone)]
pub struct LocoEnv {
    cfg: EnvConfig,
    rng: ChaCha8Rng,
    crawler: CrawlerState,
    goal: Vec2,
    step: usize,
    done: bool,
}

impl LocoEnv {
    pub fn new(cfg: EnvConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed),
            crawler: CrawlerState::default(),
            goal: Vec2::new(1.0, 0.0),
            step: 0,
            done: true,
        })
    }

    pub fn goal(&self) -> Vec2 {
        self.goal
    }

    /// Overrides the current goal direction; `goal` is normalized.
    pub fn set_goal(&mut self, goal: Vec2) {
        let n = goal.norm();
        self.goal = if n > 1e-8 { goal * (1.0 / n) } else { Vec2::new(1.0, 0.0) };
    }

    pub fn crawler(&self) -> &CrawlerState {
        &self.crawler
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    fn draw_goal(&mut self) {
        self.goal = Vec2::from_angle(self.rng.random_range(0.0..TAU));
    }

    pub fn observation(&self) -> LocoObservation {
        LocoObservation::new(&self.crawler, self.goal)
    }

    pub fn reset(&mut self) -> LocoObservation {
        self.crawler = CrawlerState::default();
        self.step = 0;
        self.done = false;
        self.draw_goal();
        self.observation()
    }

    pub fn step(&mut self, action: &[f64]) -> Result<StepResult<LocoObservation>> {
        if self.done {
            return Err(contract("locomotion episode is over; reset before stepping"));
        }
        let (crawler, displacement) = crawler_step(&self.crawler, action, &self.cfg)?;
        self.crawler = crawler;
        let reward = displacement.dot(self.goal);
        self.step += 1;
        self.done = self.step >= self.cfg.loco_episode_length;
        if !self.done && self.step % self.cfg.loco_goal_period == 0 {
            self.draw_goal();
        }
        Ok(StepResult {
            observation: self.observation(),
            reward,
            hit_flag: false,
            episode_done: self.done,
            info: StepInfo {
                body_displacement: displacement,
                ball_visible: false,
            },
        })
    }
}
