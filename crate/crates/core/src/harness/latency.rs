//! Reaction latency: how long the agent takes to start moving once a ball
//! can be seen.

use serde::{Deserialize, Serialize};

use crate::env::{EnvConfig, TraceStep};

/// Displacement from the position at visibility onset that counts as a
/// reaction, meters.
pub const REACTION_DISTANCE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallLatency {
    pub spawn_step: usize,
    /// First step at which the agent could see the ball.
    pub onset_step: Option<usize>,
    /// Steps from onset until the body is `REACTION_DISTANCE` away from its
    /// onset position; absent if that never happens before the ball is
    /// resolved (hit, replaced by the next ball or the episode ends).
    pub from_onset: Option<usize>,
    pub hit: bool,
}

impl BallLatency {
    /// Latency counted from the spawn step instead of visibility onset.
    pub fn from_spawn(&self) -> Option<usize> {
        Some(self.onset_step? - self.spawn_step + self.from_onset?)
    }
}

/// One entry per ball spawned during the episode recorded in `trace`.
///
/// Trace line `n` holds the state before step `n`, so a ball spawned at step
/// `s` first appears on line `s` and its lifetime covers lines up to the next
/// spawn.
pub fn reaction_latency(trace: &[TraceStep], cfg: &EnvConfig) -> Vec<BallLatency> {
    let period = cfg.ball_period;
    let mut out = Vec::new();
    let mut spawn = 0;
    while spawn < trace.len() {
        let end = (spawn + period).min(trace.len());
        let life = &trace[spawn..end];
        // Collisions are the only source of reward in the dodge task.
        let hit = life.iter().any(|t| t.reward != 0.0);
        let onset = life.iter().position(|t| t.ball.visible && t.ball.active);
        let from_onset = onset.and_then(|o| {
            let origin = life[o].body_pos;
            life[o + 1..]
                .iter()
                .take_while(|t| t.ball.active)
                .position(|t| (t.body_pos - origin).norm() >= REACTION_DISTANCE - 1e-12)
                .map(|k| k + 1)
        });
        out.push(BallLatency {
            spawn_step: trace[spawn].step,
            onset_step: onset.map(|o| life[o].step),
            from_onset,
            hit,
        });
        spawn = end;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{BallState, CrawlerState, Vec2};

    fn trace(len: usize, speed: f64, visible_from: usize, cfg: &EnvConfig) -> Vec<TraceStep> {
        (0..len)
            .map(|i| {
                let c = CrawlerState {
                    body_pos: Vec2::new(speed * cfg.dt * i as f64, 0.0),
                    ..CrawlerState::default()
                };
                let ball = BallState::launched(Vec2::new(0.0, 5.0), Vec2::new(0.0, -2.0), 0);
                TraceStep::record(i, &c, &ball, i % cfg.ball_period >= visible_from, &[0.0; 8], 0.0)
            })
            .collect()
    }

    #[test]
    fn still_agent_never_reacts() {
        let cfg = EnvConfig::default();
        let l = reaction_latency(&trace(1000, 0.0, 0, &cfg), &cfg);
        assert_eq!(l.len(), 10);
        assert!(l.iter().all(|b| b.from_onset.is_none() && b.from_spawn().is_none()));
    }

    #[test]
    fn half_meter_per_second_takes_ten_steps() {
        let cfg = EnvConfig::default();
        let l = reaction_latency(&trace(1000, 0.5, 0, &cfg), &cfg);
        assert!(l.iter().all(|b| b.from_onset == Some(10)), "{l:?}");
        assert_eq!(l[3].spawn_step, 300);
    }

    #[test]
    fn late_visibility_adds_to_latency_from_spawn() {
        let cfg = EnvConfig::default();
        let l = reaction_latency(&trace(1000, 0.5, 10, &cfg), &cfg);
        assert!(l.iter().all(|b| b.onset_step == Some(b.spawn_step + 10)));
        assert!(l.iter().all(|b| b.from_onset == Some(10) && b.from_spawn() == Some(20)));
    }
}
