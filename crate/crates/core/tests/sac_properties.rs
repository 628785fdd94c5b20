use dodgeball_core::numerics::gradcheck::{flatten_params, load_params, DEFAULT_EPS};
use dodgeball_core::numerics::{Mlp, Tensor2};
use dodgeball_core::sac::losses::{actor_loss, actor_loss_signature, actor_loss_value};
use dodgeball_core::sac::{Batch, ReplayBuffer, SacAgent, SacConfig, Transition};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_buffer(obs_dim: usize, action_dim: usize, n: usize, seed: u64) -> ReplayBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = ReplayBuffer::new(obs_dim, action_dim, n);
    let mut v = |k: usize| -> Vec<f32> { (0..k).map(|_| rng.random_range(-1.0..1.0)).collect() };
    for i in 0..n {
        let obs = v(obs_dim);
        let action = v(action_dim);
        let next_obs = v(obs_dim);
        let reward = v(1)[0] * 5.0;
        buf.push(Transition {
            obs,
            action,
            reward,
            next_obs,
            done: i % 13 == 0,
            discount_exponent: 1 + (i % 5) as u32,
        })
        .unwrap();
    }
    buf
}

#[test]
fn actor_gradients_match_finite_differences_on_a_frozen_batch() {
    let cfg = SacConfig {
        batch_size: 32,
        ..Default::default()
    };
    let mut agent = SacAgent::new(22, 8, cfg, 3).unwrap();
    let buf = random_buffer(22, 8, 500, 4);
    for _ in 0..50 {
        agent.update(&buf).unwrap();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let batch: Batch = buf.sample(32, &mut rng).unwrap();
    let noise_data: Vec<f32> = (0..32 * 8).map(|_| rng.sample(StandardNormal)).collect();
    let noise = Tensor2::from_vec(32, 8, noise_data).unwrap();
    let alpha = agent.alpha() as f32;
    let (c1, c2) = agent.critics();
    let analytic = actor_loss(agent.actor(), c1, c2, &batch.obs, &noise, alpha).unwrap().grads;
    let analytic: Vec<f64> = analytic.flatten().iter().map(|&g| f64::from(g)).collect();

    let actor: Mlp<f64> = agent.actor().cast();
    let (c1, c2): (Mlp<f64>, Mlp<f64>) = (c1.cast(), c2.cast());
    let obs: Tensor2<f64> = batch.obs.cast();
    let noise: Tensor2<f64> = noise.cast();
    let alpha = f64::from(alpha);
    let mut work = actor.clone();
    // Gradients computed in f32 can only agree with the f64 oracle to f32
    // precision where they are not vanishingly small. Probe every such
    // coordinate of the output layer and a sample of the rest.
    let params = flatten_params(&actor);
    let tail = params.len() - actor.layers().last().unwrap().weight.data().len() - 16;
    let significant: Vec<usize> = (0..params.len()).filter(|&i| analytic[i].abs() >= 1e-4).collect();
    let head: Vec<usize> = significant.iter().copied().filter(|&i| i < tail).collect();
    let mut coords: Vec<usize> = significant.iter().copied().filter(|&i| i >= tail).collect();
    coords.extend((0..200).map(|k| head[(k * 7919) % head.len()]));
    let mut accepted = 0;
    let mut p = params.clone();
    let mut worst: f64 = 0.0;
    for &i in &coords {
        let mut eval = |q: &[f64]| {
            load_params(&mut work, q);
            (
                actor_loss_value(&work, &c1, &c2, &obs, &noise, alpha).unwrap(),
                actor_loss_signature(&work, &c1, &c2, &obs, &noise).unwrap(),
            )
        };
        p[i] = params[i] + DEFAULT_EPS;
        let (up, su) = eval(&p);
        p[i] = params[i] - DEFAULT_EPS;
        let (down, sd) = eval(&p);
        p[i] = params[i];
        if su != sd {
            continue;
        }
        accepted += 1;
        let fd = (up - down) / (2.0 * DEFAULT_EPS);
        worst = worst.max((analytic[i] - fd).abs() / analytic[i].abs().max(fd.abs()));
    }
    assert!(accepted > 100, "only {accepted} smooth probes");
    assert!(worst < 1e-3, "max relative error {worst}");
}

#[test]
fn zero_reward_values_decay_to_zero() {
    // One-dimensional observation, reward and done identically zero. A short
    // horizon and faster target tracking keep the contraction visible within
    // the update budget; a tiny temperature keeps the entropy bonus negligible.
    let cfg = SacConfig {
        gamma: 0.9,
        tau: 0.05,
        batch_size: 32,
        hidden: vec![32, 32],
        buffer_capacity: 1000,
        initial_alpha: 1e-4,
        ..Default::default()
    };
    let mut agent = SacAgent::new(1, 1, cfg, 0).unwrap();
    let mut buf = agent.new_buffer();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        buf.push(Transition {
            obs: vec![0.5],
            action: vec![rng.random_range(-1.0..1.0)],
            reward: 0.0,
            next_obs: vec![0.5],
            done: false,
            discount_exponent: 1,
        })
        .unwrap();
    }
    for _ in 0..5000 {
        agent.update(&buf).unwrap();
    }
    let (c1, c2) = agent.critics();
    for a in [-1.0f32, -0.5, 0.0, 0.5, 1.0] {
        let x = Tensor2::from_vec(1, 2, vec![0.5, a]).unwrap();
        for c in [c1, c2] {
            let q = c.forward(&x).unwrap().data()[0];
            assert!(q.abs() < 0.1, "Q(0.5, {a}) = {q}");
        }
    }
}

fn entropy_controlled_agent(log_std: f32) -> (SacAgent, Batch) {
    let mut agent = SacAgent::new(3, 2, SacConfig::default(), 7).unwrap();
    let actor = agent.actor_mut();
    let last = actor.layers_mut().last_mut().unwrap();
    last.weight.data_mut().fill(0.0);
    last.bias = vec![0.0, 0.0, log_std, log_std];
    let buf = random_buffer(3, 2, 256, 8);
    let batch = buf.sample(256, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    (agent, batch)
}

#[test]
fn temperature_falls_when_entropy_exceeds_target() {
    // Unit-std squashed Gaussian: entropy ~0.5 nats per dimension > -1.
    let (mut agent, batch) = entropy_controlled_agent(0.0);
    let before = agent.alpha();
    agent.update_on(&batch).unwrap();
    assert!(agent.alpha() < before);
}

#[test]
fn temperature_rises_when_entropy_is_below_target() {
    // std e^-5: entropy ~ -4 nats per dimension < -1.
    let (mut agent, batch) = entropy_controlled_agent(-5.0);
    let before = agent.alpha();
    agent.update_on(&batch).unwrap();
    assert!(agent.alpha() > before);
}

#[test]
fn polyak_step_from_zero_targets() {
    let cfg = SacConfig {
        hidden: vec![4],
        batch_size: 2,
        buffer_capacity: 10,
        ..Default::default()
    };
    let agent = SacAgent::new(2, 1, cfg, 0).unwrap();
    let mut target = agent.targets().0.clone();
    for p in target.params_mut() {
        p.fill(0.0);
    }
    let mut source = target.clone();
    for p in source.params_mut() {
        p.fill(1.0);
    }
    target.polyak_from(&source, 0.005).unwrap();
    assert!(target.params().iter().all(|p| p.iter().all(|&x| x == 0.005)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn parameters_stay_finite_and_alpha_positive(seed in 0u64..1000, reward_scale in 0.0f32..100.0) {
        let cfg = SacConfig {
            hidden: vec![16, 16],
            batch_size: 16,
            buffer_capacity: 100,
            ..Default::default()
        };
        let mut agent = SacAgent::new(4, 2, cfg, seed).unwrap();
        let mut buf = random_buffer(4, 2, 100, seed);
        for i in 0..100 {
            let mut t = buf.get(i).unwrap();
            t.reward *= reward_scale;
            buf.push(t).unwrap();
        }
        for _ in 0..30 {
            let stats = agent.update(&buf).unwrap();
            prop_assert!(stats.alpha > 0.0);
            prop_assert!(stats.critic_loss.is_finite() && stats.actor_loss.is_finite());
        }
        prop_assert!(agent.is_finite());
    }
}
