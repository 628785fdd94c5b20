//! Finite-difference suite over every network shape the workbench trains.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::Result;
use crate::numerics::gradcheck::{check_mlp_backward, check_piecewise, flatten_params, load_params, relu_pattern, DEFAULT_EPS};
use crate::numerics::{Mlp, Tensor2};
use crate::sac::losses::{actor_loss, actor_loss_signature, actor_loss_value, critic_loss};

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckCase {
    pub name: String,
    pub max_rel_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckReport {
    pub cases: Vec<GradcheckCase>,
    pub max_rel_err: f64,
}

impl GradcheckReport {
    pub fn networks(&self) -> usize {
        self.cases.len()
    }

    pub fn passed(&self, tolerance: f64) -> bool {
        self.max_rel_err < tolerance
    }
}

pub const PROBES_PER_NETWORK: usize = 24;

fn normal_tensor<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Tensor2<f64> {
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Tensor2::from_vec(rows, cols, data).expect("sized above")
}

fn sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    std::iter::once(input).chain(hidden.iter().copied()).chain(std::iter::once(output)).collect()
}

fn check_critic_loss(obs_dim: usize, action_dim: usize, hidden: &[usize], rng: &mut ChaCha8Rng) -> Result<f64> {
    let critic: Mlp<f64> = Mlp::new(&sizes(obs_dim + action_dim, hidden, 1), rng);
    let batch = 6;
    let input = normal_tensor(batch, obs_dim + action_dim, rng);
    let targets: Vec<f64> = (0..batch).map(|_| rng.sample(StandardNormal)).collect();
    let (_, grads) = critic_loss(&critic, &input, &targets)?;
    let mut work = critic.clone();
    Ok(check_piecewise(
        |p| {
            load_params(&mut work, p);
            let cache = work.forward_cached(&input).expect("shapes fixed");
            let loss = critic_loss(&work, &input, &targets).expect("shapes fixed").0;
            (loss, relu_pattern(&cache))
        },
        &flatten_params(&critic),
        &grads.flatten(),
        PROBES_PER_NETWORK,
        DEFAULT_EPS,
        rng,
    ))
}

fn check_actor_loss(obs_dim: usize, action_dim: usize, hidden: &[usize], rng: &mut ChaCha8Rng) -> Result<f64> {
    let actor: Mlp<f64> = Mlp::new(&sizes(obs_dim, hidden, 2 * action_dim), rng);
    let c1: Mlp<f64> = Mlp::new(&sizes(obs_dim + action_dim, hidden, 1), rng);
    let c2: Mlp<f64> = Mlp::new(&sizes(obs_dim + action_dim, hidden, 1), rng);
    let batch = 4;
    let obs = normal_tensor(batch, obs_dim, rng);
    let noise = normal_tensor(batch, action_dim, rng);
    let alpha = 0.2;
    let analytic = actor_loss(&actor, &c1, &c2, &obs, &noise, alpha)?.grads.flatten();
    let mut work = actor.clone();
    Ok(check_piecewise(
        |p| {
            load_params(&mut work, p);
            let loss = actor_loss_value(&work, &c1, &c2, &obs, &noise, alpha).expect("shapes fixed");
            let sig = actor_loss_signature(&work, &c1, &c2, &obs, &noise).expect("shapes fixed");
            (loss, sig)
        },
        &flatten_params(&actor),
        &analytic,
        PROBES_PER_NETWORK,
        DEFAULT_EPS,
        rng,
    ))
}

/// Runs 100 finite-difference checks in `f64`: plain backpropagation through
/// assorted MLP shapes, critic regression losses and the squashed-Gaussian
/// actor loss for the low-level, high-level and end-to-end agents.
pub fn run_gradcheck_suite(seed: u64) -> Result<GradcheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::new();

    let shapes: [&[usize]; 8] = [
        &[3, 4, 2],
        &[6, 32, 32, 3],
        &[18, 128, 128, 16],
        &[22, 128, 128, 4],
        &[26, 128, 128, 1],
        &[30, 128, 128, 1],
        &[4, 16, 1],
        &[10, 64, 64, 64, 5],
    ];
    for k in 0..60 {
        let shape = shapes[k % shapes.len()];
        let net: Mlp<f64> = Mlp::new(shape, &mut rng);
        let input = normal_tensor(4, shape[0], &mut rng);
        let upstream = normal_tensor(4, shape[shape.len() - 1], &mut rng);
        let err = check_mlp_backward(&net, &input, &upstream, PROBES_PER_NETWORK, DEFAULT_EPS, &mut rng)?;
        cases.push(GradcheckCase {
            name: format!("mlp {shape:?} #{k}"),
            max_rel_err: err,
        });
    }

    // (obs_dim, action_dim): low level, high level, end-to-end, toy.
    let agents = [(18, 8), (22, 2), (22, 8), (3, 1)];
    for k in 0..20 {
        let (o, a) = agents[k % agents.len()];
        let hidden: &[usize] = if k % 2 == 0 { &[128, 128] } else { &[16, 16] };
        cases.push(GradcheckCase {
            name: format!("critic loss obs {o} action {a} hidden {hidden:?} #{k}"),
            max_rel_err: check_critic_loss(o, a, hidden, &mut rng)?,
        });
    }
    for k in 0..20 {
        let (o, a) = agents[k % agents.len()];
        let hidden: &[usize] = if k % 2 == 0 { &[128, 128] } else { &[16, 16] };
        cases.push(GradcheckCase {
            name: format!("actor loss obs {o} action {a} hidden {hidden:?} #{k}"),
            max_rel_err: check_actor_loss(o, a, hidden, &mut rng)?,
        });
    }

    let max_rel_err = cases.iter().map(|c| c.max_rel_err).fold(0.0, f64::max);
    Ok(GradcheckReport { cases, max_rel_err })
}
