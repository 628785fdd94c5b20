//! Fixtures shared by the benchmarks.

use dodgeball_core::sac::{ReplayBuffer, Transition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A buffer of `n` random transitions with the given dimensions.
pub fn filled_buffer(obs_dim: usize, action_dim: usize, n: usize, seed: u64) -> ReplayBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = ReplayBuffer::new(obs_dim, action_dim, n);
    let vec = |len: usize, rng: &mut ChaCha8Rng| (0..len).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f32>>();
    for _ in 0..n {
        let t = Transition {
            obs: vec(obs_dim, &mut rng),
            action: vec(action_dim, &mut rng),
            reward: rng.random_range(-1.0..0.0),
            next_obs: vec(obs_dim, &mut rng),
            done: rng.random_bool(0.01),
            discount_exponent: 1,
        };
        buf.push(t).expect("dimensions match");
    }
    buf
}
