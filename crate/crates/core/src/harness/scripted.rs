//! Hand-written controllers used to validate the environment.
//!
//! [`ScriptedGait`] walks along a commanded direction with a two-phase
//! stance/recovery cycle per leg. [`ScriptedDodger`] walks perpendicular to
//! the path of the last ball it saw.

use crate::env::{leg_tangent, CrawlerState, EnvConfig, Observation, Vec2, BALL_OFFSET, LEGS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Stance,
    Recover,
}

/// Stance legs sweep so that the body moves along the command; recovering
/// legs lift, swing back and set down.
#[derive(Debug, Clone)]
pub struct ScriptedGait {
    phases: [Phase; LEGS],
}

impl Default for ScriptedGait {
    fn default() -> Self {
        // Opposite legs start half a cycle apart.
        Self {
            phases: [Phase::Stance, Phase::Stance, Phase::Recover, Phase::Recover],
        }
    }
}

/// Lift held by a recovering leg; just above the stance threshold.
const LIFT_CLEAR: f64 = 0.3;
const MIN_WEIGHT: f64 = 0.25;

fn lift_towards(lift: f64, target: f64, cfg: &EnvConfig) -> f64 {
    ((target - lift) / (cfg.max_lift_rate * cfg.dt)).clamp(-1.0, 1.0)
}

impl ScriptedGait {
    pub fn act(&mut self, state: &CrawlerState, direction: Vec2, cfg: &EnvConfig) -> [f64; 8] {
        let mut action = [0.0; 8];
        let weights: Vec<f64> = (0..LEGS).map(|i| leg_tangent(i, 0.0).dot(direction)).collect();
        let max_w = weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        let edge = cfg.swing_limit - 1e-6;
        for leg in 0..LEGS {
            let w = weights[leg];
            if w.abs() < MIN_WEIGHT || max_w == 0.0 {
                // Idle legs stay off the ground so they do not dilute the push.
                action[leg] = (-state.swing[leg] / (cfg.max_swing_rate * cfg.dt)).clamp(-1.0, 1.0);
                action[LEGS + leg] = 1.0;
                continue;
            }
            // Body velocity is minus the stance tip velocity.
            let sweep = -w.signum();
            let rate = w.abs() / max_w;
            let swing = state.swing[leg];
            match self.phases[leg] {
                Phase::Stance => {
                    if sweep * swing >= edge {
                        self.phases[leg] = Phase::Recover;
                    }
                }
                Phase::Recover => {
                    if -sweep * swing >= edge {
                        self.phases[leg] = Phase::Stance;
                    }
                }
            }
            match self.phases[leg] {
                Phase::Stance => {
                    action[leg] = if state.in_stance(leg, cfg) { sweep * rate } else { 0.0 };
                    action[LEGS + leg] = -1.0;
                }
                Phase::Recover => {
                    action[leg] = if state.in_stance(leg, cfg) { 0.0 } else { -sweep };
                    action[LEGS + leg] = lift_towards(state.lift[leg], LIFT_CLEAR, cfg);
                }
            }
        }
        action
    }
}

/// Walks away from the line of flight of the most recently seen ball and
/// keeps that heading while nothing is visible. Stands still before the
/// first sighting.
#[derive(Debug, Clone, Default)]
pub struct ScriptedDodger {
    gait: ScriptedGait,
    heading: Option<Vec2>,
    tracked_velocity: Option<Vec2>,
}

impl ScriptedDodger {
    pub fn act(&mut self, z: &Observation, state: &CrawlerState, cfg: &EnvConfig) -> [f64; 8] {
        let ball = &z.0[BALL_OFFSET..];
        let rel = Vec2::new(ball[0], ball[1]);
        let vel = Vec2::new(ball[3], ball[4]);
        let seen = rel != Vec2::ZERO || vel != Vec2::ZERO;
        if !seen {
            // Keep the last escape heading until the next ball shows up.
            return match self.heading {
                Some(h) => self.gait.act(state, h, cfg),
                None => [0.0; 8],
            };
        }
        if self.tracked_velocity != Some(vel) {
            let along = vel * (1.0 / vel.norm());
            // Offset of the agent from the ball's line of flight.
            let to_agent = -rel;
            let off = to_agent - along * to_agent.dot(along);
            let side = if off.norm() > 1e-6 { off * (1.0 / off.norm()) } else { along.perp() };
            self.heading = Some(side);
            self.tracked_velocity = Some(vel);
        }
        self.gait.act(state, self.heading.expect("set above"), cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::crawler_step;

    #[test]
    fn gait_walks_along_every_direction() {
        let cfg = EnvConfig::default();
        for k in 0..16 {
            let dir = Vec2::from_angle(k as f64 * std::f64::consts::TAU / 16.0);
            let mut gait = ScriptedGait::default();
            let mut s = CrawlerState::default();
            for _ in 0..100 {
                let a = gait.act(&s, dir, &cfg);
                s = crawler_step(&s, &a, &cfg).unwrap().0;
            }
            let speed = s.body_pos.dot(dir) / (100.0 * cfg.dt);
            let drift = (s.body_pos - dir * s.body_pos.dot(dir)).norm();
            assert!(speed > 0.3, "direction {k}: {speed} m/s");
            assert!(drift < 0.5 * s.body_pos.norm(), "direction {k}: drift {drift}");
        }
    }

    #[test]
    fn dodger_avoids_most_balls_in_both_modes() {
        use crate::env::{DodgeEnv, ObsMode};
        let cfg = EnvConfig::default();
        for mode in [ObsMode::Full, ObsMode::Partial] {
            let mut env = DodgeEnv::new(cfg.clone(), mode, 17).unwrap();
            let mut hits = 0;
            for _ in 0..20 {
                let mut z = env.reset();
                let mut dodger = ScriptedDodger::default();
                loop {
                    let a = dodger.act(&z, env.crawler(), &cfg);
                    let r = env.step(&a).unwrap();
                    hits += usize::from(r.hit_flag);
                    z = r.observation;
                    if r.episode_done {
                        break;
                    }
                }
            }
            assert!(hits <= 20, "{mode}: {hits} hits");
        }
    }
}
