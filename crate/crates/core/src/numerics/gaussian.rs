//! Tanh-squashed diagonal Gaussian policy head.
//!
//! Given `u = mean + exp(log_std) * noise`, the action is `tanh(u)` and the
//! log-density carries the change-of-variables term
//! `-log(1 - tanh(u)^2 + 1e-6)` per dimension.

use super::tensor::Scalar;

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;
/// Stabilizer inside the tanh log-Jacobian.
pub const TANH_EPS: f64 = 1e-6;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianHeadOutput<T = f32> {
    pub mean: Vec<T>,
    pub log_std: Vec<T>,
    pub action: Vec<T>,
    pub log_prob: T,
}

pub fn clamp_log_std<T: Scalar>(raw: T) -> T {
    raw.max(T::of(LOG_STD_MIN)).min(T::of(LOG_STD_MAX))
}

/// Reparameterized sample. `log_std` must already be clamped.
pub fn squashed_gaussian<T: Scalar>(mean: &[T], log_std: &[T], noise: &[T]) -> GaussianHeadOutput<T> {
    debug_assert!(mean.len() == log_std.len() && mean.len() == noise.len());
    let half = T::of(0.5);
    let mut action = Vec::with_capacity(mean.len());
    let mut log_prob = T::zero();
    for ((&mu, &ls), &eps) in mean.iter().zip(log_std).zip(noise) {
        let u = mu + ls.exp() * eps;
        let a = u.tanh();
        log_prob = log_prob - half * eps * eps - ls - T::of(HALF_LN_2PI)
            - (T::one() - a * a + T::of(TANH_EPS)).ln();
        action.push(a);
    }
    GaussianHeadOutput {
        mean: mean.to_vec(),
        log_std: log_std.to_vec(),
        action,
        log_prob,
    }
}

/// Pulls gradients w.r.t. the sampled action and its log-probability back
/// onto `mean` and `log_std` (noise held fixed). Returns `(d_mean, d_log_std)`.
pub fn squashed_gaussian_backward<T: Scalar>(
    out: &GaussianHeadOutput<T>,
    noise: &[T],
    d_action: &[T],
    d_log_prob: T,
) -> (Vec<T>, Vec<T>) {
    let two = T::of(2.0);
    let mut d_mean = Vec::with_capacity(out.mean.len());
    let mut d_log_std = Vec::with_capacity(out.mean.len());
    for i in 0..out.mean.len() {
        let a = out.action[i];
        let one_minus = T::one() - a * a;
        // d log_prob / du, from the Jacobian term only; the Gaussian term is
        // constant in u once the noise is fixed.
        let dlogp_du = two * a * one_minus / (one_minus + T::of(TANH_EPS));
        let du = d_action[i] * one_minus + d_log_prob * dlogp_du;
        let std_noise = out.log_std[i].exp() * noise[i];
        d_mean.push(du);
        d_log_std.push(du * std_noise - d_log_prob);
    }
    (d_mean, d_log_std)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_at_zero_noise() {
        let out = squashed_gaussian(&[0.0f64], &[0.0], &[0.0]);
        assert_eq!(out.action, vec![0.0]);
        let expected = -0.5 * (2.0 * std::f64::consts::PI).ln() - (1.0f64 + 1e-6).ln();
        assert!((out.log_prob - expected).abs() < 1e-12);
        assert!((out.log_prob - -0.918_939f64).abs() < 1e-6);
    }

    #[test]
    fn extreme_noise_stays_inside_open_interval() {
        for noise in [-10.0f64, 10.0] {
            let out = squashed_gaussian(&[0.0f64], &[0.0], &[noise]);
            assert!(out.action[0].abs() < 1.0);
            assert!(out.log_prob.is_finite());
        }
        // f32 saturates tanh to exactly ±1 for |u| >= ~9; the stabilizer
        // keeps the log-probability finite.
        let out = squashed_gaussian(&[0.0f32], &[2.0], &[10.0]);
        assert!(out.log_prob.is_finite());
        assert!(out.action[0] <= 1.0 && out.action[0] >= -1.0);
    }

    #[test]
    fn clamping() {
        assert_eq!(clamp_log_std(-50.0f32), -20.0);
        assert_eq!(clamp_log_std(7.0f32), 2.0);
        assert_eq!(clamp_log_std(0.5f32), 0.5);
    }

    #[test]
    fn log_prob_gradient_matches_central_differences() {
        let mean = [0.3f64, -0.7];
        let log_std = [-0.4f64, 0.2];
        let noise = [0.9f64, -1.3];
        let out = squashed_gaussian(&mean, &log_std, &noise);
        let (d_mean, d_ls) = squashed_gaussian_backward(&out, &noise, &[0.0, 0.0], 1.0);
        let h = 1e-6;
        for i in 0..2 {
            let mut p = mean;
            p[i] += h;
            let up = squashed_gaussian(&p, &log_std, &noise).log_prob;
            p[i] -= 2.0 * h;
            let down = squashed_gaussian(&p, &log_std, &noise).log_prob;
            let fd = (up - down) / (2.0 * h);
            assert!((fd - d_mean[i]).abs() / fd.abs().max(d_mean[i].abs()).max(1e-8) < 1e-4);

            let mut q = log_std;
            q[i] += h;
            let up = squashed_gaussian(&mean, &q, &noise).log_prob;
            q[i] -= 2.0 * h;
            let down = squashed_gaussian(&mean, &q, &noise).log_prob;
            let fd = (up - down) / (2.0 * h);
            assert!((fd - d_ls[i]).abs() / fd.abs().max(d_ls[i].abs()).max(1e-8) < 1e-4);
        }
    }
}
