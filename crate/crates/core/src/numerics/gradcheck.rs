//! Central finite-difference gradient oracle, evaluated in `f64`.

use rand::Rng;

use super::mlp::{Mlp, MlpCache};
use super::tensor::Tensor2;
use crate::error::Result;

pub const DEFAULT_EPS: f64 = 1e-5;

/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Central difference `(f(p + eps) - f(p - eps)) / (2 eps)` along one
/// coordinate.
pub fn central_difference<F>(f: &mut F, params: &mut [f64], coord: usize, eps: f64) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let orig = params[coord];
    params[coord] = orig + eps;
    let up = f(params);
    params[coord] = orig - eps;
    let down = f(params);
    params[coord] = orig;
    (up - down) / (2.0 * eps)
}

/// Largest relative error between `analytic` and central differences of `f`
/// over `coords` (every coordinate when `None`).
pub fn finite_diff_check<F>(
    mut f: F,
    params: &[f64],
    analytic: &[f64],
    coords: Option<&[usize]>,
    eps: f64,
) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(params.len(), analytic.len());
    let mut p = params.to_vec();
    let all: Vec<usize>;
    let coords = match coords {
        Some(c) => c,
        None => {
            all = (0..params.len()).collect();
            &all
        }
    };
    coords
        .iter()
        .map(|&i| relative_error(analytic[i], central_difference(&mut f, &mut p, i, eps)))
        .fold(0.0, f64::max)
}

/// Flattened parameters, in [`Mlp::params`] order.
pub fn flatten_params(net: &Mlp<f64>) -> Vec<f64> {
    net.params().concat()
}

pub fn load_params(net: &mut Mlp<f64>, flat: &[f64]) {
    let mut offset = 0;
    for block in net.params_mut() {
        block.copy_from_slice(&flat[offset..offset + block.len()]);
        offset += block.len();
    }
}

/// Central-difference check at `probes` random coordinates of a piecewise
/// smooth objective. `eval` returns the objective and a signature of its
/// discrete choices; probes whose ±eps perturbation changes the signature
/// straddle a kink and are redrawn.
pub fn check_piecewise<F, R>(
    mut eval: F,
    params: &[f64],
    analytic: &[f64],
    probes: usize,
    eps: f64,
    rng: &mut R,
) -> f64
where
    F: FnMut(&[f64]) -> (f64, Vec<bool>),
    R: Rng + ?Sized,
{
    assert_eq!(params.len(), analytic.len());
    let mut p = params.to_vec();
    let mut worst: f64 = 0.0;
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < probes && attempts < probes * 20 {
        attempts += 1;
        let i = rng.random_range(0..p.len());
        p[i] = params[i] + eps;
        let (up, sig_up) = eval(&p);
        p[i] = params[i] - eps;
        let (down, sig_down) = eval(&p);
        p[i] = params[i];
        if sig_up != sig_down {
            continue;
        }
        accepted += 1;
        worst = worst.max(relative_error(analytic[i], (up - down) / (2.0 * eps)));
    }
    worst
}

/// On/off state of every hidden ReLU unit in a forward pass.
pub fn relu_pattern(cache: &MlpCache<f64>) -> Vec<bool> {
    cache
        .hidden_activations()
        .iter()
        .flat_map(|t| t.data().iter().map(|&x| x > 0.0))
        .collect()
}

/// Checks [`Mlp::backward`] for the scalar `sum(upstream ⊙ net(input))`
/// against central differences at `probes` random parameter coordinates and
/// every input coordinate.
///
/// A ReLU network is piecewise linear in any single coordinate, so a probe
/// whose ±eps perturbation flips a hidden unit is not differentiable there
/// and is redrawn.
pub fn check_mlp_backward<R: Rng + ?Sized>(
    net: &Mlp<f64>,
    input: &Tensor2<f64>,
    upstream: &Tensor2<f64>,
    probes: usize,
    eps: f64,
    rng: &mut R,
) -> Result<f64> {
    let cache = net.forward_cached(input)?;
    let (grads, input_grad) = net.backward(&cache, upstream)?;
    let analytic = grads.flatten();
    let objective = |out: &Tensor2<f64>| -> f64 {
        out.data().iter().zip(upstream.data()).map(|(a, b)| a * b).sum()
    };

    let mut work = net.clone();
    let mut worst = check_piecewise(
        |p| {
            load_params(&mut work, p);
            let c = work.forward_cached(input).expect("shapes fixed");
            (objective(c.output()), relu_pattern(&c))
        },
        &flatten_params(net),
        &analytic,
        probes,
        eps,
        rng,
    );

    let mut x = input.clone();
    for i in 0..x.data().len() {
        let orig = x.data()[i];
        x.data_mut()[i] = orig + eps;
        let c_up = net.forward_cached(&x)?;
        x.data_mut()[i] = orig - eps;
        let c_down = net.forward_cached(&x)?;
        x.data_mut()[i] = orig;
        if relu_pattern(&c_up) != relu_pattern(&c_down) {
            continue;
        }
        let fd = (objective(c_up.output()) - objective(c_down.output())) / (2.0 * eps);
        worst = worst.max(relative_error(input_grad.data()[i], fd));
    }
    Ok(worst)
}
