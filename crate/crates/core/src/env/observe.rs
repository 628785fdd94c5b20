use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ball::BallState;
use super::config::EnvConfig;
use super::crawler::{CrawlerState, INTERNAL_DIM};
use super::vec2::Vec2;

pub const OBS_DIM: usize = INTERNAL_DIM + 6;
/// First index of the six ball entries (relative position, velocity).
pub const BALL_OFFSET: usize = INTERNAL_DIM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObsMode {
    /// The ball is reported whenever it is in play.
    Full,
    /// The ball is reported only within the visibility radius.
    Partial,
}

impl fmt::Display for ObsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObsMode::Full => "full",
            ObsMode::Partial => "partial",
        })
    }
}

impl FromStr for ObsMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(ObsMode::Full),
            "partial" => Ok(ObsMode::Partial),
            other => Err(format!("unknown observation mode {other:?} (expected full|partial)")),
        }
    }
}

/// `[swing(4), lift(4), swing_rate(4), lift_rate(4), ball_rel_pos(3), ball_vel(3)]`.
///
/// The simulation is planar; the third component of both ball vectors is
/// always zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation(pub [f64; OBS_DIM]);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn internal(&self) -> &[f64] {
        &self.0[..INTERNAL_DIM]
    }

    pub fn ball(&self) -> &[f64] {
        &self.0[BALL_OFFSET..]
    }

    pub fn to_f32(&self) -> Vec<f32> {
        self.0.iter().map(|&x| x as f32).collect()
    }
}

/// Whether the agent perceives the ball under `mode`.
pub fn ball_visible(body_pos: Vec2, ball: &BallState, mode: ObsMode, cfg: &EnvConfig) -> bool {
    ball.active
        && match mode {
            ObsMode::Full => true,
            ObsMode::Partial => ball.distance_to(body_pos) <= cfg.visibility_radius,
        }
}

pub fn observe(state: &CrawlerState, ball: &BallState, mode: ObsMode, cfg: &EnvConfig) -> Observation {
    let mut z = [0.0; OBS_DIM];
    z[..INTERNAL_DIM].copy_from_slice(&state.internal());
    if ball_visible(state.body_pos, ball, mode, cfg) {
        let rel = ball.pos - state.body_pos;
        z[BALL_OFFSET] = rel.x;
        z[BALL_OFFSET + 1] = rel.y;
        z[BALL_OFFSET + 3] = ball.vel.x;
        z[BALL_OFFSET + 4] = ball.vel.y;
    }
    Observation(z)
}
