//! Quasi-static kinematic model of a four-legged crawler.
//!
//! Leg `i` is mounted at heading `i * 90°` and has two joints: a swing angle
//! about the vertical axis and a normalized lift. Legs whose lift is below
//! the stance threshold touch the ground; the body moves opposite to the mean
//! tip velocity of those legs, as if they were pushing against the floor.

use serde::{Deserialize, Serialize};

use super::config::EnvConfig;
use super::vec2::Vec2;
use crate::error::{contract, Result};

pub const LEGS: usize = 4;
pub const ACTION_DIM: usize = 2 * LEGS;
/// Joint angles, lifts and their last rates.
pub const INTERNAL_DIM: usize = 4 * LEGS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrawlerState {
    pub body_pos: Vec2,
    pub swing: [f64; LEGS],
    pub lift: [f64; LEGS],
    pub last_swing_rate: [f64; LEGS],
    pub last_lift_rate: [f64; LEGS],
}

impl Default for CrawlerState {
    /// Standing at the origin, all legs centered and on the ground.
    fn default() -> Self {
        Self {
            body_pos: Vec2::ZERO,
            swing: [0.0; LEGS],
            lift: [0.0; LEGS],
            last_swing_rate: [0.0; LEGS],
            last_lift_rate: [0.0; LEGS],
        }
    }
}

impl CrawlerState {
    /// The internal observation block: swing, lift, swing rates, lift rates.
    pub fn internal(&self) -> [f64; INTERNAL_DIM] {
        let mut out = [0.0; INTERNAL_DIM];
        out[0..4].copy_from_slice(&self.swing);
        out[4..8].copy_from_slice(&self.lift);
        out[8..12].copy_from_slice(&self.last_swing_rate);
        out[12..16].copy_from_slice(&self.last_lift_rate);
        out
    }

    pub fn in_stance(&self, leg: usize, cfg: &EnvConfig) -> bool {
        self.lift[leg] < cfg.stance_threshold
    }
}

/// Counter-clockwise tangent of leg `leg` at swing angle `swing`, i.e.
/// `(-sin θ, cos θ)` with `θ = leg * 90° + swing`. The quarter turns are
/// applied exactly so that relabeling legs rotates motion exactly.
pub fn leg_tangent(leg: usize, swing: f64) -> Vec2 {
    let (s, c) = swing.sin_cos();
    let base = Vec2::new(-s, c);
    match leg % LEGS {
        0 => base,
        1 => base.perp(),
        2 => -base,
        _ => -base.perp(),
    }
}

/// Integrates `value + rate * dt` inside `[lo, hi]`, returning the new value
/// and the rate actually achieved.
fn integrate_clamped(value: f64, rate: f64, lo: f64, hi: f64, dt: f64) -> (f64, f64) {
    let target = value + rate * dt;
    if target > hi {
        (hi, (hi - value) / dt)
    } else if target < lo {
        (lo, (lo - value) / dt)
    } else {
        (target, rate)
    }
}

/// Advances the crawler one step. Actions are clipped to `[-1, 1]`; the first
/// four scale swing rates, the last four lift rates.
///
/// Returns the new state and the body displacement over the step.
pub fn crawler_step(state: &CrawlerState, action: &[f64], cfg: &EnvConfig) -> Result<(CrawlerState, Vec2)> {
    if action.len() != ACTION_DIM {
        return Err(contract(format!(
            "crawler takes {ACTION_DIM} actions, got {}",
            action.len()
        )));
    }
    if action.iter().any(|a| !a.is_finite()) {
        return Err(contract(format!("non-finite crawler action {action:?}")));
    }

    let mut next = *state;
    let mut tip_sum = Vec2::ZERO;
    let mut stance = 0usize;
    let [lift_lo, lift_hi] = cfg.lift_range;
    for leg in 0..LEGS {
        let on_ground = state.in_stance(leg, cfg);

        let swing_cmd = action[leg].clamp(-1.0, 1.0) * cfg.max_swing_rate;
        let (swing, swing_rate) =
            integrate_clamped(state.swing[leg], swing_cmd, -cfg.swing_limit, cfg.swing_limit, cfg.dt);
        let lift_cmd = action[LEGS + leg].clamp(-1.0, 1.0) * cfg.max_lift_rate;
        let (lift, lift_rate) = integrate_clamped(state.lift[leg], lift_cmd, lift_lo, lift_hi, cfg.dt);

        next.swing[leg] = swing;
        next.lift[leg] = lift;
        next.last_swing_rate[leg] = swing_rate;
        next.last_lift_rate[leg] = lift_rate;

        if on_ground {
            stance += 1;
            tip_sum += leg_tangent(leg, state.swing[leg]) * (cfg.leg_reach * swing_rate);
        }
    }

    let velocity = if stance == 0 {
        Vec2::ZERO
    } else {
        tip_sum * (-1.0 / stance as f64)
    };
    let displacement = velocity * cfg.dt;
    next.body_pos += displacement;
    Ok((next, displacement))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_action_is_a_fixed_point() {
        let cfg = EnvConfig::default();
        let s = CrawlerState::default();
        let (n, d) = crawler_step(&s, &[0.0; 8], &cfg).unwrap();
        assert_eq!(d, Vec2::ZERO);
        assert_eq!(n, s);
    }

    #[test]
    fn no_stance_legs_means_no_motion() {
        let cfg = EnvConfig::default();
        let s = CrawlerState {
            lift: [1.0; 4],
            ..Default::default()
        };
        let (n, d) = crawler_step(&s, &[1.0, -1.0, 0.5, 0.3, 0.0, 0.0, 0.0, 0.0], &cfg).unwrap();
        assert_eq!(d, Vec2::ZERO);
        assert_eq!(n.body_pos, Vec2::ZERO);
    }

    #[test]
    fn single_leg_sweep_matches_hand_kinematics() {
        let cfg = EnvConfig::default();
        let (n, d) = crawler_step(&CrawlerState::default(), &[1.0, 0., 0., 0., 0., 0., 0., 0.], &cfg).unwrap();
        // tip velocity (0, 1.2); body velocity -(1/4)(0, 1.2) = (0, -0.3)
        assert!((d.x - 0.0).abs() < 1e-9 && (d.y + 0.015).abs() < 1e-9, "{d:?}");
        assert!((n.swing[0] - 0.1).abs() < 1e-9);
        assert_eq!(n.last_swing_rate[0], 2.0);
    }

    #[test]
    fn joint_limits_clamp_and_rates_report_achieved_motion() {
        let cfg = EnvConfig::default();
        let s = CrawlerState {
            swing: [0.76, 0.0, 0.0, 0.0],
            lift: [0.0, 0.95, 0.0, 0.0],
            ..Default::default()
        };
        let (n, d) = crawler_step(&s, &[1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0], &cfg).unwrap();
        assert_eq!(n.swing[0], cfg.swing_limit);
        assert!((n.last_swing_rate[0] - (cfg.swing_limit - 0.76) / 0.05).abs() < 1e-12);
        assert_eq!(n.lift[0], 0.0);
        assert_eq!(n.last_lift_rate[0], 0.0);
        assert_eq!(n.lift[1], 1.0);
        // body moves by the achieved sweep only
        let expected = (cfg.swing_limit - 0.76) * 0.6 / 3.0;
        assert!((d.norm() - expected).abs() < 1e-12);
    }

    #[test]
    fn actions_are_clipped_and_validated() {
        let cfg = EnvConfig::default();
        let s = CrawlerState::default();
        let (a, _) = crawler_step(&s, &[5.0, 0., 0., 0., 0., 0., 0., 0.], &cfg).unwrap();
        let (b, _) = crawler_step(&s, &[1.0, 0., 0., 0., 0., 0., 0., 0.], &cfg).unwrap();
        assert_eq!(a, b);
        assert!(crawler_step(&s, &[f64::NAN; 8], &cfg).is_err());
        assert!(crawler_step(&s, &[0.0; 7], &cfg).is_err());
    }

    #[test]
    fn leg_tangents_are_quarter_turns_apart() {
        for leg in 0..4 {
            let t = leg_tangent(leg, 0.3);
            let expected = Vec2::from_angle(leg as f64 * std::f64::consts::FRAC_PI_2 + 0.3).perp();
            assert!((t - expected).norm() < 1e-12);
            assert_eq!(leg_tangent(leg + 1, 0.3), t.perp());
        }
    }
}
