use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::EnvConfig;
use super::vec2::Vec2;

/// A projectile on a straight line.
///
/// The position is tracked as `origin + vel * dt * age` rather than by
/// repeated addition, so its distance from the launch point is exact at
/// whole multiples of `vel * dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallState {
    pub pos: Vec2,
    pub vel: Vec2,
    pub active: bool,
    pub spawn_step: usize,
    origin: Vec2,
    age: u32,
}

impl BallState {
    /// A ball that is not in play; it contributes nothing to observations.
    pub fn inactive() -> Self {
        Self {
            pos: Vec2::ZERO,
            vel: Vec2::ZERO,
            active: false,
            spawn_step: 0,
            origin: Vec2::ZERO,
            age: 0,
        }
    }

    /// An active ball at `pos` with velocity `vel`.
    pub fn launched(pos: Vec2, vel: Vec2, spawn_step: usize) -> Self {
        Self {
            pos,
            vel,
            active: true,
            spawn_step,
            origin: pos,
            age: 0,
        }
    }

    pub fn distance_to(&self, point: Vec2) -> f64 {
        (self.pos - point).norm()
    }
}

/// Launches a ball `ball_spawn_distance` from the agent at bearing `angle`,
/// aimed at the agent's current position with speed `ball_speed`.
pub fn spawn_ball_at(angle: f64, agent_pos: Vec2, cfg: &EnvConfig, step: usize) -> BallState {
    let offset = Vec2::from_angle(angle);
    let pos = agent_pos + offset * cfg.ball_spawn_distance;
    let vel = -offset * cfg.ball_speed;
    BallState::launched(pos, vel, step)
}

/// Launches a ball from a uniformly random bearing.
pub fn spawn_ball<R: Rng + ?Sized>(rng: &mut R, agent_pos: Vec2, cfg: &EnvConfig, step: usize) -> BallState {
    let angle = rng.random_range(0.0..TAU);
    spawn_ball_at(angle, agent_pos, cfg, step)
}

/// One step of straight-line flight; inactive balls do not move.
pub fn ball_step(ball: &BallState, cfg: &EnvConfig) -> BallState {
    if !ball.active {
        return *ball;
    }
    let age = ball.age + 1;
    BallState {
        pos: ball.origin + ball.vel * (cfg.dt * f64::from(age)),
        age,
        ..*ball
    }
}

/// Whether an active ball overlaps the agent (strict inequality).
pub fn check_collision(agent_pos: Vec2, ball: &BallState, cfg: &EnvConfig) -> bool {
    ball.active && ball.distance_to(agent_pos) < cfg.agent_radius + cfg.ball_radius
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn spawn_along_positive_x() {
        let b = spawn_ball_at(0.0, Vec2::ZERO, &EnvConfig::default(), 0);
        assert_eq!(b.pos, Vec2::new(5.0, 0.0));
        assert_eq!(b.vel, Vec2::new(-2.0, 0.0));
        assert!(b.active);
    }

    #[test]
    fn random_spawns_keep_distance_and_speed() {
        let cfg = EnvConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let agent = Vec2::new(1.5, -3.0);
        for _ in 0..1000 {
            let b = spawn_ball(&mut rng, agent, &cfg, 7);
            assert!((b.distance_to(agent) - 5.0).abs() < 1e-12);
            assert!((b.vel.norm() - 2.0).abs() < 1e-12);
            // aimed at the agent
            let to_agent = agent - b.pos;
            assert!((to_agent.dot(b.vel) - 10.0).abs() < 1e-9);
            assert_eq!(b.spawn_step, 7);
        }
    }

    #[test]
    fn flight_is_linear() {
        let cfg = EnvConfig::default();
        let mut b = spawn_ball_at(0.0, Vec2::ZERO, &cfg, 0);
        b = ball_step(&b, &cfg);
        assert!((b.pos - Vec2::new(4.9, 0.0)).norm() < 1e-12);
        for _ in 1..50 {
            b = ball_step(&b, &cfg);
        }
        assert!(b.pos.norm() < 1e-12, "{:?}", b.pos);
        assert_eq!(b.vel, Vec2::new(-2.0, 0.0));

        let idle = BallState::inactive();
        assert_eq!(ball_step(&idle, &cfg), idle);
    }

    #[test]
    fn collision_boundary_is_strict() {
        let cfg = EnvConfig::default();
        let near = BallState::launched(Vec2::new(0.74, 0.0), Vec2::new(-2.0, 0.0), 0);
        assert!(check_collision(Vec2::ZERO, &near, &cfg));
        let edge = BallState::launched(Vec2::new(0.75, 0.0), Vec2::new(-2.0, 0.0), 0);
        assert!(!check_collision(Vec2::ZERO, &edge, &cfg));
        assert!(!check_collision(Vec2::ZERO, &BallState::inactive(), &cfg));
    }

    #[test]
    fn stationary_target_is_hit_43_steps_after_spawn() {
        // closed form: (5 - 0.75) / 2 = 2.125 s, ceil(2.125 / 0.05) = 43
        let cfg = EnvConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let expected = ((cfg.ball_spawn_distance - 0.75) / cfg.ball_speed / cfg.dt).ceil() as usize;
        assert_eq!(expected, 43);
        for _ in 0..100 {
            let mut b = spawn_ball(&mut rng, Vec2::ZERO, &cfg, 0);
            let mut steps = 0;
            while !check_collision(Vec2::ZERO, &b, &cfg) {
                b = ball_step(&b, &cfg);
                steps += 1;
            }
            assert_eq!(steps, expected);
        }
    }
}
