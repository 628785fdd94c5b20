//! Deterministic planar simulation: the crawler, the ball, the dodge-ball
//! task and the direction-following pretraining task.

pub mod ball;
pub mod config;
pub mod crawler;
pub mod dodge;
pub mod loco;
pub mod observe;
pub mod trace;
pub mod vec2;

pub use ball::{ball_step, check_collision, spawn_ball, spawn_ball_at, BallState};
pub use config::EnvConfig;
pub use crawler::{crawler_step, leg_tangent, CrawlerState, ACTION_DIM, INTERNAL_DIM, LEGS};
pub use dodge::{DodgeEnv, StepInfo, StepResult};
pub use loco::{LocoEnv, LocoObservation, LOCO_OBS_DIM};
pub use observe::{ball_visible, observe, ObsMode, Observation, BALL_OFFSET, OBS_DIM};
pub use trace::{read_trace, write_trace, TraceBall, TraceStep};
pub use vec2::Vec2;
