use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use dodgeball_bench::filled_buffer;
use dodgeball_core::env::{DodgeEnv, EnvConfig, ObsMode, ACTION_DIM, LOCO_OBS_DIM};
use dodgeball_core::numerics::{Mlp, Tensor2};
use dodgeball_core::sac::{SacAgent, SacConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mlp(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let net: Mlp<f32> = Mlp::new(&[LOCO_OBS_DIM + ACTION_DIM, 128, 128, 1], &mut rng);
    let data = (0..256 * (LOCO_OBS_DIM + ACTION_DIM)).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x = Tensor2::from_vec(256, LOCO_OBS_DIM + ACTION_DIM, data).unwrap();
    let ones = Tensor2::from_vec(256, 1, vec![1.0; 256]).unwrap();

    c.bench_function("critic forward, batch 256", |b| b.iter(|| net.forward(black_box(&x)).unwrap()));
    c.bench_function("critic forward+backward, batch 256", |b| {
        b.iter(|| {
            let cache = net.forward_cached(black_box(&x)).unwrap();
            net.backward(&cache, &ones).unwrap()
        })
    });
}

fn sac_update(c: &mut Criterion) {
    let buf = filled_buffer(LOCO_OBS_DIM, ACTION_DIM, 10_000, 1);
    let mut agent = SacAgent::new(LOCO_OBS_DIM, ACTION_DIM, SacConfig::default(), 2).unwrap();
    c.bench_function("sac update, 18 -> 8", |b| b.iter(|| agent.update(&buf).unwrap()));
}

fn env_step(c: &mut Criterion) {
    let cfg = EnvConfig::default();
    c.bench_function("dodge episode, 1000 steps", |b| {
        b.iter_batched(
            || DodgeEnv::new(cfg.clone(), ObsMode::Partial, 3).unwrap(),
            |mut env| {
                env.reset();
                let a = [0.5, 0.0, -0.5, 0.0, 0.5, 0.0, -0.5, 0.0];
                while !env.is_done() {
                    black_box(env.step(&a).unwrap());
                }
            },
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, mlp, sac_update, env_step);
criterion_main!(benches);
