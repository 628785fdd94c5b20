//! Soft actor-critic losses and their gradients, generic over the float type
//! so the gradient checker can replay them in `f64`.

use crate::error::{contract, Result};
use crate::numerics::gaussian::{LOG_STD_MAX, LOG_STD_MIN};
use crate::numerics::{
    clamp_log_std, squashed_gaussian, squashed_gaussian_backward, GaussianHeadOutput, Mlp, MlpCache,
    MlpGrads, Scalar, Tensor2,
};

/// Actions drawn from the squashed-Gaussian actor for a batch.
#[derive(Debug, Clone)]
pub struct PolicySample<T: Scalar> {
    pub cache: MlpCache<T>,
    pub heads: Vec<GaussianHeadOutput<T>>,
    pub actions: Tensor2<T>,
    pub log_probs: Vec<T>,
    /// Raw log-std outputs that were clamped (their gradient is zero).
    pub clamped: Vec<bool>,
}

/// Runs the actor on `obs` and squashes `mean + std * noise`. The actor emits
/// `[mean, raw_log_std]`, each `action_dim` wide.
pub fn sample_policy<T: Scalar>(actor: &Mlp<T>, obs: &Tensor2<T>, noise: &Tensor2<T>) -> Result<PolicySample<T>> {
    let cache = actor.forward_cached(obs)?;
    let out = cache.output();
    let d = noise.cols();
    if out.cols() != 2 * d || noise.rows() != obs.rows() {
        return Err(contract(format!(
            "actor emits {} values per row; noise is {}x{} for {} rows",
            out.cols(),
            noise.rows(),
            d,
            obs.rows()
        )));
    }
    let (lo, hi) = (T::of(LOG_STD_MIN), T::of(LOG_STD_MAX));
    let mut heads = Vec::with_capacity(obs.rows());
    let mut actions = Tensor2::zeros(obs.rows(), d);
    let mut log_probs = Vec::with_capacity(obs.rows());
    let mut clamped = Vec::with_capacity(obs.rows() * d);
    for i in 0..obs.rows() {
        let row = out.row(i);
        let raw = &row[d..];
        clamped.extend(raw.iter().map(|&r| r < lo || r > hi));
        let log_std: Vec<T> = raw.iter().map(|&r| clamp_log_std(r)).collect();
        let head = squashed_gaussian(&row[..d], &log_std, noise.row(i));
        actions.row_mut(i).copy_from_slice(&head.action);
        log_probs.push(head.log_prob);
        heads.push(head);
    }
    Ok(PolicySample {
        cache,
        heads,
        actions,
        log_probs,
        clamped,
    })
}

/// `tanh(mean)` for every row.
pub fn deterministic_actions<T: Scalar>(actor: &Mlp<T>, obs: &Tensor2<T>) -> Result<Tensor2<T>> {
    let out = actor.forward(obs)?;
    let d = out.cols() / 2;
    Ok(out.columns(0, d).map(|m| m.tanh()))
}

/// Per-row minimum, whether critic 1 attained it, and both caches.
type MinQ<T> = (Vec<T>, Vec<bool>, MlpCache<T>, MlpCache<T>);

/// Elementwise minimum of the twin critics at `(obs, actions)` plus which
/// critic attained it.
fn min_q<T: Scalar>(
    c1: &Mlp<T>,
    c2: &Mlp<T>,
    obs_actions: &Tensor2<T>,
) -> Result<MinQ<T>> {
    let k1 = c1.forward_cached(obs_actions)?;
    let k2 = c2.forward_cached(obs_actions)?;
    let mut q = Vec::with_capacity(obs_actions.rows());
    let mut first = Vec::with_capacity(obs_actions.rows());
    for (&a, &b) in k1.output().data().iter().zip(k2.output().data()) {
        first.push(a <= b);
        q.push(a.min(b));
    }
    Ok((q, first, k1, k2))
}

/// Soft Bellman targets
/// `r + (1 - done) * gamma^k * (min(Q̄1, Q̄2)(s', a') - alpha * log π(a'|s'))`
/// with `a'` sampled from the actor using `noise`.
#[allow(clippy::too_many_arguments)]
pub fn critic_targets<T: Scalar>(
    actor: &Mlp<T>,
    target1: &Mlp<T>,
    target2: &Mlp<T>,
    next_obs: &Tensor2<T>,
    rewards: &[T],
    dones: &[bool],
    exponents: &[u32],
    noise: &Tensor2<T>,
    alpha: T,
    gamma: T,
) -> Result<Vec<T>> {
    let sample = sample_policy(actor, next_obs, noise)?;
    let input = next_obs.hcat(&sample.actions)?;
    let q1 = target1.forward(&input)?;
    let q2 = target2.forward(&input)?;
    Ok((0..rewards.len())
        .map(|i| {
            if dones[i] {
                rewards[i]
            } else {
                let soft = q1.data()[i].min(q2.data()[i]) - alpha * sample.log_probs[i];
                rewards[i] + gamma.powi(exponents[i] as i32) * soft
            }
        })
        .collect())
}

/// Bootstrap target for a single transition from precomputed pieces.
pub fn soft_target(reward: f64, done: bool, gamma: f64, exponent: u32, min_target_q: f64, alpha: f64, log_prob: f64) -> f64 {
    if done {
        reward
    } else {
        reward + gamma.powi(exponent as i32) * (min_target_q - alpha * log_prob)
    }
}

/// Mean squared error of one critic against fixed targets, with gradients.
pub fn critic_loss<T: Scalar>(critic: &Mlp<T>, obs_actions: &Tensor2<T>, targets: &[T]) -> Result<(T, MlpGrads<T>)> {
    let cache = critic.forward_cached(obs_actions)?;
    let n = T::of(targets.len() as f64);
    let mut loss = T::zero();
    let mut up = Tensor2::zeros(targets.len(), 1);
    for (i, (&q, &y)) in cache.output().data().iter().zip(targets).enumerate() {
        let e = q - y;
        loss = loss + e * e / n;
        up.set(i, 0, T::of(2.0) * e / n);
    }
    let (grads, _) = critic.backward(&cache, &up)?;
    Ok((loss, grads))
}

#[derive(Debug, Clone)]
pub struct ActorLoss<T: Scalar> {
    pub loss: T,
    pub grads: MlpGrads<T>,
    pub log_probs: Vec<T>,
}

/// `mean(alpha * log π(a|s) - min(Q1, Q2)(s, a))` with `a` reparameterized
/// through `noise`; gradients flow into the actor only.
pub fn actor_loss<T: Scalar>(
    actor: &Mlp<T>,
    c1: &Mlp<T>,
    c2: &Mlp<T>,
    obs: &Tensor2<T>,
    noise: &Tensor2<T>,
    alpha: T,
) -> Result<ActorLoss<T>> {
    let sample = sample_policy(actor, obs, noise)?;
    let input = obs.hcat(&sample.actions)?;
    let (q, first, k1, k2) = min_q(c1, c2, &input)?;
    let b = obs.rows();
    let n = T::of(b as f64);
    let loss = (0..b).fold(T::zero(), |acc, i| acc + (alpha * sample.log_probs[i] - q[i]) / n);

    // d loss / d min-Q = -1/n, routed to whichever critic was smaller.
    let mut up1 = Tensor2::zeros(b, 1);
    let mut up2 = Tensor2::zeros(b, 1);
    for (i, &f) in first.iter().enumerate() {
        if f {
            up1.set(i, 0, -T::one() / n);
        } else {
            up2.set(i, 0, -T::one() / n);
        }
    }
    let g1 = c1.backward_input(&k1, &up1)?;
    let g2 = c2.backward_input(&k2, &up2)?;
    let obs_dim = obs.cols();
    let d = noise.cols();

    let mut upstream = Tensor2::zeros(b, 2 * d);
    let d_logp = alpha / n;
    for i in 0..b {
        let d_action: Vec<T> = (0..d).map(|j| g1.get(i, obs_dim + j) + g2.get(i, obs_dim + j)).collect();
        let (d_mean, d_ls) = squashed_gaussian_backward(&sample.heads[i], noise.row(i), &d_action, d_logp);
        let row = upstream.row_mut(i);
        row[..d].copy_from_slice(&d_mean);
        for j in 0..d {
            row[d + j] = if sample.clamped[i * d + j] { T::zero() } else { d_ls[j] };
        }
    }
    let (grads, _) = actor.backward(&sample.cache, &upstream)?;
    Ok(ActorLoss {
        loss,
        grads,
        log_probs: sample.log_probs,
    })
}

/// Value of the actor loss only.
pub fn actor_loss_value<T: Scalar>(
    actor: &Mlp<T>,
    c1: &Mlp<T>,
    c2: &Mlp<T>,
    obs: &Tensor2<T>,
    noise: &Tensor2<T>,
    alpha: T,
) -> Result<T> {
    let sample = sample_policy(actor, obs, noise)?;
    let input = obs.hcat(&sample.actions)?;
    let q1 = c1.forward(&input)?;
    let q2 = c2.forward(&input)?;
    let n = T::of(obs.rows() as f64);
    Ok((0..obs.rows()).fold(T::zero(), |acc, i| {
        acc + (alpha * sample.log_probs[i] - q1.data()[i].min(q2.data()[i])) / n
    }))
}

/// Every discrete choice the actor loss makes: hidden ReLU states of the
/// actor and both critics, which critic is the minimum, and which log-stds
/// are clamped. The loss is smooth wherever this signature is constant.
pub fn actor_loss_signature<T: Scalar>(
    actor: &Mlp<T>,
    c1: &Mlp<T>,
    c2: &Mlp<T>,
    obs: &Tensor2<T>,
    noise: &Tensor2<T>,
) -> Result<Vec<bool>> {
    let sample = sample_policy(actor, obs, noise)?;
    let input = obs.hcat(&sample.actions)?;
    let (_, first, k1, k2) = min_q(c1, c2, &input)?;
    let mut sig = Vec::new();
    for cache in [&sample.cache, &k1, &k2] {
        for h in cache.hidden_activations() {
            sig.extend(h.data().iter().map(|&x| x > T::zero()));
        }
    }
    sig.extend(first);
    sig.extend(sample.clamped);
    Ok(sig)
}

/// Temperature loss `-log_alpha * mean(log π + target_entropy)` and its
/// derivative w.r.t. `log_alpha`.
pub fn alpha_loss(log_alpha: f64, log_probs: &[f64], target_entropy: f64) -> (f64, f64) {
    let mean = log_probs.iter().map(|lp| lp + target_entropy).sum::<f64>() / log_probs.len() as f64;
    (-log_alpha * mean, -mean)
}
