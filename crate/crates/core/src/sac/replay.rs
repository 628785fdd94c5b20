use rand::Rng;

use crate::error::{contract, Error, Result};
use crate::numerics::Tensor2;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f32>,
    pub action: Vec<f32>,
    pub reward: f32,
    pub next_obs: Vec<f32>,
    pub done: bool,
    /// Primitive steps spanned; the bootstrap discount is `gamma^discount_exponent`.
    pub discount_exponent: u32,
}

/// A sampled minibatch in matrix form.
#[derive(Debug, Clone)]
pub struct Batch {
    pub obs: Tensor2<f32>,
    pub actions: Tensor2<f32>,
    pub rewards: Vec<f32>,
    pub next_obs: Tensor2<f32>,
    pub dones: Vec<bool>,
    pub discount_exponents: Vec<u32>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn from_transitions(ts: &[Transition]) -> Result<Self> {
        let obs: Vec<&[f32]> = ts.iter().map(|t| t.obs.as_slice()).collect();
        let actions: Vec<&[f32]> = ts.iter().map(|t| t.action.as_slice()).collect();
        let next: Vec<&[f32]> = ts.iter().map(|t| t.next_obs.as_slice()).collect();
        Ok(Self {
            obs: Tensor2::from_rows(&obs)?,
            actions: Tensor2::from_rows(&actions)?,
            rewards: ts.iter().map(|t| t.reward).collect(),
            next_obs: Tensor2::from_rows(&next)?,
            dones: ts.iter().map(|t| t.done).collect(),
            discount_exponents: ts.iter().map(|t| t.discount_exponent).collect(),
        })
    }
}

/// Fixed-capacity FIFO of transitions stored column-wise in flat arrays.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    obs_dim: usize,
    action_dim: usize,
    capacity: usize,
    cursor: usize,
    obs: Vec<f32>,
    actions: Vec<f32>,
    rewards: Vec<f32>,
    next_obs: Vec<f32>,
    dones: Vec<bool>,
    exponents: Vec<u32>,
}

impl ReplayBuffer {
    pub fn new(obs_dim: usize, action_dim: usize, capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            obs_dim,
            action_dim,
            capacity,
            cursor: 0,
            obs: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            next_obs: Vec::new(),
            dones: Vec::new(),
            exponents: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        if t.obs.len() != self.obs_dim || t.next_obs.len() != self.obs_dim || t.action.len() != self.action_dim {
            return Err(contract(format!(
                "transition dims obs {}/{} action {} do not match buffer ({}, {})",
                t.obs.len(),
                t.next_obs.len(),
                t.action.len(),
                self.obs_dim,
                self.action_dim
            )));
        }
        if !t.reward.is_finite() || t.discount_exponent == 0 {
            return Err(contract("transition reward must be finite and its discount exponent positive"));
        }
        if self.len() < self.capacity {
            self.obs.extend_from_slice(&t.obs);
            self.actions.extend_from_slice(&t.action);
            self.rewards.push(t.reward);
            self.next_obs.extend_from_slice(&t.next_obs);
            self.dones.push(t.done);
            self.exponents.push(t.discount_exponent);
        } else {
            let i = self.cursor;
            self.obs[i * self.obs_dim..(i + 1) * self.obs_dim].copy_from_slice(&t.obs);
            self.actions[i * self.action_dim..(i + 1) * self.action_dim].copy_from_slice(&t.action);
            self.rewards[i] = t.reward;
            self.next_obs[i * self.obs_dim..(i + 1) * self.obs_dim].copy_from_slice(&t.next_obs);
            self.dones[i] = t.done;
            self.exponents[i] = t.discount_exponent;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        Ok(())
    }

    /// The transition in slot `i` (insertion order until the buffer wraps).
    pub fn get(&self, i: usize) -> Option<Transition> {
        (i < self.len()).then(|| Transition {
            obs: self.obs[i * self.obs_dim..(i + 1) * self.obs_dim].to_vec(),
            action: self.actions[i * self.action_dim..(i + 1) * self.action_dim].to_vec(),
            reward: self.rewards[i],
            next_obs: self.next_obs[i * self.obs_dim..(i + 1) * self.obs_dim].to_vec(),
            done: self.dones[i],
            discount_exponent: self.exponents[i],
        })
    }

    /// Uniform sample with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Batch> {
        if batch == 0 || self.len() < batch {
            return Err(Error::NotReady { size: self.len(), batch });
        }
        let mut obs = Vec::with_capacity(batch * self.obs_dim);
        let mut actions = Vec::with_capacity(batch * self.action_dim);
        let mut next_obs = Vec::with_capacity(batch * self.obs_dim);
        let mut rewards = Vec::with_capacity(batch);
        let mut dones = Vec::with_capacity(batch);
        let mut exps = Vec::with_capacity(batch);
        for _ in 0..batch {
            let i = rng.random_range(0..self.len());
            obs.extend_from_slice(&self.obs[i * self.obs_dim..(i + 1) * self.obs_dim]);
            actions.extend_from_slice(&self.actions[i * self.action_dim..(i + 1) * self.action_dim]);
            next_obs.extend_from_slice(&self.next_obs[i * self.obs_dim..(i + 1) * self.obs_dim]);
            rewards.push(self.rewards[i]);
            dones.push(self.dones[i]);
            exps.push(self.exponents[i]);
        }
        Ok(Batch {
            obs: Tensor2::from_vec(batch, self.obs_dim, obs)?,
            actions: Tensor2::from_vec(batch, self.action_dim, actions)?,
            rewards,
            next_obs: Tensor2::from_vec(batch, self.obs_dim, next_obs)?,
            dones,
            discount_exponents: exps,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tr(tag: f32) -> Transition {
        Transition {
            obs: vec![tag, 0.0],
            action: vec![tag],
            reward: tag,
            next_obs: vec![0.0, tag],
            done: false,
            discount_exponent: 1,
        }
    }

    #[test]
    fn push_grows_then_overwrites_oldest() {
        let mut b = ReplayBuffer::new(2, 1, 3);
        b.push(tr(1.0)).unwrap();
        assert_eq!(b.len(), 1);
        for i in 2..=4 {
            b.push(tr(i as f32)).unwrap();
        }
        assert_eq!(b.len(), 3);
        let rewards: Vec<f32> = (0..3).map(|i| b.get(i).unwrap().reward).collect();
        assert_eq!(rewards, vec![4.0, 2.0, 3.0]);
    }

    #[test]
    fn single_element_sampling_is_forced() {
        let mut b = ReplayBuffer::new(2, 1, 10);
        b.push(tr(7.0)).unwrap();
        let batch = b.sample(1, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(batch.obs.data(), &[7.0, 0.0]);
        assert_eq!(batch.rewards, vec![7.0]);
    }

    #[test]
    fn undersized_buffer_is_not_ready() {
        let mut b = ReplayBuffer::new(2, 1, 10);
        b.push(tr(1.0)).unwrap();
        let err = b.sample(3, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(matches!(err, Error::NotReady { size: 1, batch: 3 }));
    }

    #[test]
    fn wrong_dimensions_are_rejected() {
        let mut b = ReplayBuffer::new(3, 1, 10);
        assert!(b.push(tr(1.0)).is_err());
    }

    #[test]
    fn seeded_sampling_repeats() {
        let mut b = ReplayBuffer::new(2, 1, 100);
        for i in 0..50 {
            b.push(tr(i as f32)).unwrap();
        }
        let x = b.sample(16, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let y = b.sample(16, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(x.rewards, y.rewards);
    }

    #[test]
    fn two_element_sampling_is_balanced() {
        let mut b = ReplayBuffer::new(2, 1, 2);
        b.push(tr(0.0)).unwrap();
        b.push(tr(1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut ones = 0.0;
        for _ in 0..5_000 {
            let batch = b.sample(2, &mut rng).unwrap();
            ones += batch.rewards.iter().filter(|&&r| r == 1.0).count() as f64;
        }
        // binomial(10000, 0.5): sigma = 50
        assert!((ones - 5000.0).abs() <= 150.0, "{ones}");
    }
}
