use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ball::{ball_step, check_collision, spawn_ball, BallState};
use super::config::EnvConfig;
use super::crawler::{crawler_step, CrawlerState};
use super::observe::{ball_visible, observe, ObsMode, Observation};
use super::vec2::Vec2;
use crate::error::{contract, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub body_displacement: Vec2,
    pub ball_visible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult<O = Observation> {
    pub observation: O,
    pub reward: f64,
    pub hit_flag: bool,
    pub episode_done: bool,
    pub info: StepInfo,
}

/// The dodge-ball task: a ball is launched at the crawler every
/// `ball_period` steps and a hit costs `hit_reward`.
#[derive(Debug, Clone)]
pub struct DodgeEnv {
    cfg: EnvConfig,
    mode: ObsMode,
    rng: ChaCha8Rng,
    crawler: CrawlerState,
    ball: BallState,
    step: usize,
    done: bool,
}

impl DodgeEnv {
    /// A new environment; call [`DodgeEnv::reset`] before stepping.
    pub fn new(cfg: EnvConfig, mode: ObsMode, seed: u64) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            mode,
            rng: ChaCha8Rng::seed_from_u64(seed),
            crawler: CrawlerState::default(),
            ball: BallState::inactive(),
            step: 0,
            done: true,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn mode(&self) -> ObsMode {
        self.mode
    }

    pub fn crawler(&self) -> &CrawlerState {
        &self.crawler
    }

    pub fn ball(&self) -> &BallState {
        &self.ball
    }

    /// Steps taken in the current episode.
    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Replaces the ball in flight, e.g. to stage a specific approach.
    pub fn set_ball(&mut self, ball: BallState) {
        self.ball = ball;
    }

    pub fn ball_visible(&self) -> bool {
        ball_visible(self.crawler.body_pos, &self.ball, self.mode, &self.cfg)
    }

    pub fn observation(&self) -> Observation {
        observe(&self.crawler, &self.ball, self.mode, &self.cfg)
    }

    /// Starts an episode with the crawler at rest at the origin and the
    /// first ball launched.
    pub fn reset(&mut self) -> Observation {
        self.crawler = CrawlerState::default();
        self.step = 0;
        self.done = false;
        self.ball = spawn_ball(&mut self.rng, self.crawler.body_pos, &self.cfg, 0);
        self.observation()
    }

    /// Moves the crawler, then the ball, then resolves contact. A hit
    /// removes the ball until the next launch.
    pub fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        if self.done {
            return Err(contract("dodge episode is over; reset before stepping"));
        }
        let (crawler, displacement) = crawler_step(&self.crawler, action, &self.cfg)?;
        self.crawler = crawler;
        self.ball = ball_step(&self.ball, &self.cfg);

        let hit = check_collision(self.crawler.body_pos, &self.ball, &self.cfg);
        if hit {
            self.ball.active = false;
        }
        self.step += 1;
        self.done = self.step >= self.cfg.episode_length;
        if !self.done && self.step % self.cfg.ball_period == 0 {
            self.ball = spawn_ball(&mut self.rng, self.crawler.body_pos, &self.cfg, self.step);
        }

        Ok(StepResult {
            observation: self.observation(),
            reward: if hit { self.cfg.hit_reward } else { 0.0 },
            hit_flag: hit,
            episode_done: self.done,
            info: StepInfo {
                body_displacement: displacement,
                ball_visible: self.ball_visible(),
            },
        })
    }
}
