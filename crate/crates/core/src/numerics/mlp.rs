use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::tensor::{Scalar, Tensor2};
use crate::error::{contract, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    fn apply<T: Scalar>(self, t: &mut Tensor2<T>) {
        if self == Activation::Relu {
            t.data_mut().iter_mut().for_each(|x| *x = x.max(T::zero()));
        }
    }

    /// Converts a gradient w.r.t. the activation output into one w.r.t. its
    /// input, given the activation output.
    fn backprop<T: Scalar>(self, output: &Tensor2<T>, grad: &mut Tensor2<T>) {
        if self == Activation::Relu {
            for (g, &y) in grad.data_mut().iter_mut().zip(output.data()) {
                if y <= T::zero() {
                    *g = T::zero();
                }
            }
        }
    }
}

/// Fully connected layer computing `x * weight + bias`; `weight` is
/// `in x out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense<T = f32> {
    pub weight: Tensor2<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Tensor2::zeros(inputs, outputs),
            bias: vec![T::zero(); outputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.rows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.cols()
    }

    fn forward(&self, x: &Tensor2<T>) -> Result<Tensor2<T>> {
        let mut y = x.matmul(&self.weight)?;
        let cols = y.cols();
        for row in y.data_mut().chunks_exact_mut(cols) {
            for (v, &b) in row.iter_mut().zip(&self.bias) {
                *v = *v + b;
            }
        }
        Ok(y)
    }
}

/// Multi-layer perceptron with one activation for every hidden layer and
/// another for the output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp<T = f32> {
    layers: Vec<Dense<T>>,
    hidden_activation: Activation,
    output_activation: Activation,
}

/// Parameter gradients, laid out exactly like the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads<T = f32> {
    pub layers: Vec<Dense<T>>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpCache<T = f32> {
    /// Input of every layer; entry 0 is the network input.
    inputs: Vec<Tensor2<T>>,
    output: Tensor2<T>,
}

impl<T: Scalar> MlpCache<T> {
    pub fn output(&self) -> &Tensor2<T> {
        &self.output
    }

    /// Outputs of the hidden layers, first to last.
    pub fn hidden_activations(&self) -> &[Tensor2<T>] {
        &self.inputs[1..]
    }
}

impl<T: Scalar> Mlp<T> {
    pub fn from_layers(
        layers: Vec<Dense<T>>,
        hidden_activation: Activation,
        output_activation: Activation,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(contract("an MLP needs at least one layer"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.outputs() {
                return Err(contract(format!(
                    "layer {i}: bias has {} entries for {} outputs",
                    l.bias.len(),
                    l.outputs()
                )));
            }
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(contract(format!(
                    "layer {i} emits {} values but layer {} takes {}",
                    pair[0].outputs(),
                    i + 1,
                    pair[1].inputs()
                )));
            }
        }
        Ok(Self {
            layers,
            hidden_activation,
            output_activation,
        })
    }

    /// ReLU hidden layers and a linear output, with every weight and bias
    /// drawn from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "need input and output sizes");
        let layers = sizes
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
                let mut layer = Dense::zeros(w[0], w[1]);
                layer
                    .weight
                    .data_mut()
                    .iter_mut()
                    .for_each(|x| *x = T::of(dist.sample(rng)));
                layer
                    .bias
                    .iter_mut()
                    .for_each(|x| *x = T::of(dist.sample(rng)));
                layer
            })
            .collect();
        Self {
            layers,
            hidden_activation: Activation::Relu,
            output_activation: Activation::Linear,
        }
    }

    pub fn layers(&self) -> &[Dense<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense<T>] {
        &mut self.layers
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden_activation
    }

    pub fn output_activation(&self) -> Activation {
        self.output_activation
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    /// Layer widths from input to output.
    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(Dense::outputs))
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.data().len() + l.bias.len())
            .sum()
    }

    /// Parameter blocks in a fixed order: weight then bias, layer by layer.
    pub fn params(&self) -> Vec<&[T]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.data(), l.bias.as_slice()])
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut [T]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.data_mut(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|p| p.iter().all(|x| x.is_finite()))
    }

    /// Sets the output layer's weights and bias to zero.
    pub fn zero_output_layer(&mut self) {
        let last = self.layers.len() - 1;
        self.layers[last] = Dense::zeros(self.layers[last].inputs(), self.layers[last].outputs());
    }

    pub fn cast<U: Scalar>(&self) -> Mlp<U> {
        Mlp {
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    weight: l.weight.cast(),
                    bias: l.bias.iter().map(|b| U::of(b.as_f64())).collect(),
                })
                .collect(),
            hidden_activation: self.hidden_activation,
            output_activation: self.output_activation,
        }
    }

    /// Polyak averaging: `self <- (1 - tau) * self + tau * source`.
    pub fn polyak_from(&mut self, source: &Self, tau: T) -> Result<()> {
        if self.sizes() != source.sizes() {
            return Err(contract("polyak update between differently shaped networks"));
        }
        let keep = T::one() - tau;
        for (dst, src) in self.params_mut().into_iter().zip(source.params()) {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = keep * *d + tau * s;
            }
        }
        Ok(())
    }

    fn check_input(&self, input: &Tensor2<T>) -> Result<()> {
        if input.cols() != self.input_dim() {
            return Err(contract(format!(
                "network takes {} inputs, got a batch with {} columns",
                self.input_dim(),
                input.cols()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, input: &Tensor2<T>) -> Result<Tensor2<T>> {
        self.check_input(input)?;
        let last = self.layers.len() - 1;
        let mut x = self.layers[0].forward(input)?;
        for (i, layer) in self.layers.iter().enumerate() {
            if i > 0 {
                x = layer.forward(&x)?;
            }
            let act = if i == last {
                self.output_activation
            } else {
                self.hidden_activation
            };
            act.apply(&mut x);
        }
        Ok(x)
    }

    /// Forward pass retaining what [`Mlp::backward`] needs.
    pub fn forward_cached(&self, input: &Tensor2<T>) -> Result<MlpCache<T>> {
        self.check_input(input)?;
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut x = input.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut y = layer.forward(&x)?;
            let act = if i == last {
                self.output_activation
            } else {
                self.hidden_activation
            };
            act.apply(&mut y);
            inputs.push(x);
            x = y;
        }
        Ok(MlpCache { inputs, output: x })
    }

    /// Gradients of `sum(upstream ⊙ output)` w.r.t. every parameter and the
    /// input.
    pub fn backward(
        &self,
        cache: &MlpCache<T>,
        upstream: &Tensor2<T>,
    ) -> Result<(MlpGrads<T>, Tensor2<T>)> {
        let (grads, input_grad) = self.backprop(cache, upstream, true)?;
        Ok((grads.expect("parameter gradients requested"), input_grad))
    }

    /// Input gradient only; skips the weight-gradient products.
    pub fn backward_input(
        &self,
        cache: &MlpCache<T>,
        upstream: &Tensor2<T>,
    ) -> Result<Tensor2<T>> {
        Ok(self.backprop(cache, upstream, false)?.1)
    }

    fn backprop(
        &self,
        cache: &MlpCache<T>,
        upstream: &Tensor2<T>,
        want_params: bool,
    ) -> Result<(Option<MlpGrads<T>>, Tensor2<T>)> {
        if upstream.shape() != cache.output.shape() {
            return Err(contract(format!(
                "upstream gradient {:?} does not match output {:?}",
                upstream.shape(),
                cache.output.shape()
            )));
        }
        let last = self.layers.len() - 1;
        let mut delta = upstream.clone();
        self.output_activation.backprop(&cache.output, &mut delta);
        let mut layer_grads = Vec::with_capacity(self.layers.len());
        for i in (0..=last).rev() {
            let layer = &self.layers[i];
            let input = &cache.inputs[i];
            if want_params {
                layer_grads.push(Dense {
                    weight: input.matmul_tn(&delta)?,
                    bias: delta.column_sums(),
                });
            }
            delta = delta.matmul_nt(&layer.weight)?;
            if i > 0 {
                // `input` is the previous hidden layer's activation output.
                self.hidden_activation.backprop(input, &mut delta);
            }
        }
        let grads = want_params.then(|| {
            layer_grads.reverse();
            MlpGrads {
                layers: layer_grads,
            }
        });
        Ok((grads, delta))
    }
}

impl<T: Scalar> MlpGrads<T> {
    pub fn params(&self) -> Vec<&[T]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.data(), l.bias.as_slice()])
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|p| p.iter().all(|x| x.is_finite()))
    }

    /// Flattens in the same order as [`Mlp::params`].
    pub fn flatten(&self) -> Vec<T> {
        self.params().concat()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(weight: &[f64], rows: usize, cols: usize, bias: &[f64], out: Activation) -> Mlp<f64> {
        Mlp::from_layers(
            vec![Dense {
                weight: Tensor2::from_vec(rows, cols, weight.to_vec()).unwrap(),
                bias: bias.to_vec(),
            }],
            Activation::Relu,
            out,
        )
        .unwrap()
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let net = single(&[1., 0., 0., 1.], 2, 2, &[0., 0.], Activation::Linear);
        let x = Tensor2::from_vec(1, 2, vec![3., -1.]).unwrap();
        assert_eq!(net.forward(&x).unwrap().data(), &[3., -1.]);
    }

    #[test]
    fn relu_output_clamps_negatives() {
        let net = single(&[1., 0., 0., 1.], 2, 2, &[0., 0.], Activation::Relu);
        let x = Tensor2::from_vec(1, 2, vec![3., -1.]).unwrap();
        assert_eq!(net.forward(&x).unwrap().data(), &[3., 0.]);
    }

    #[test]
    fn two_layers_match_hand_arithmetic() {
        // h = relu(x W1 + b1), y = h W2 + b2
        let l1 = Dense {
            weight: Tensor2::from_vec(2, 3, vec![0.1, -0.2, 0.3, 0.4, 0.5, -0.6]).unwrap(),
            bias: vec![0.01, 0.02, -0.03],
        };
        let l2 = Dense {
            weight: Tensor2::from_vec(3, 1, vec![0.7, -0.8, 0.9]).unwrap(),
            bias: vec![0.05],
        };
        let net = Mlp::from_layers(vec![l1, l2], Activation::Relu, Activation::Linear).unwrap();
        let x = Tensor2::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        // pre-activations: 0.1+0.8+0.01 = 0.91, -0.2+1.0+0.02 = 0.82, 0.3-1.2-0.03 = -0.93
        let expected: f64 = 0.91 * 0.7 + 0.82 * -0.8 + 0.0 * 0.9 + 0.05;
        let y = net.forward(&x).unwrap();
        assert!((y.get(0, 0) - expected).abs() < 1e-6);
    }

    #[test]
    fn scalar_chain_rule() {
        let net = single(&[2.], 1, 1, &[0.], Activation::Linear);
        let x = Tensor2::from_vec(1, 1, vec![3.]).unwrap();
        let cache = net.forward_cached(&x).unwrap();
        let up = Tensor2::from_vec(1, 1, vec![1.]).unwrap();
        let (g, dx) = net.backward(&cache, &up).unwrap();
        assert_eq!(g.layers[0].weight.data(), &[3.]);
        assert_eq!(g.layers[0].bias, vec![1.]);
        assert_eq!(dx.data(), &[2.]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net: Mlp<f32> = Mlp::new(&[5, 16, 16, 3], &mut rng);
        let x = Tensor2::from_vec(4, 5, (0..20).map(|i| i as f32 * 0.1 - 1.0).collect()).unwrap();
        let cache = net.forward_cached(&x).unwrap();
        let (g, dx) = net.backward(&cache, &Tensor2::zeros(4, 3)).unwrap();
        assert!(g.flatten().iter().all(|&v| v == 0.0));
        assert!(dx.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net: Mlp<f32> = Mlp::new(&[4, 8, 2], &mut rng);
        assert!(net.forward(&Tensor2::zeros(1, 3)).is_err());
        let cache = net.forward_cached(&Tensor2::zeros(2, 4)).unwrap();
        assert!(net.backward(&cache, &Tensor2::zeros(2, 3)).is_err());
        let bad = vec![Dense::<f32>::zeros(4, 8), Dense::zeros(7, 2)];
        assert!(Mlp::from_layers(bad, Activation::Relu, Activation::Linear).is_err());
    }

    #[test]
    fn cached_and_plain_forward_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net: Mlp<f32> = Mlp::new(&[6, 32, 32, 4], &mut rng);
        let x = Tensor2::from_vec(3, 6, (0..18).map(|i| (i as f32).sin()).collect()).unwrap();
        assert_eq!(&net.forward(&x).unwrap(), net.forward_cached(&x).unwrap().output());
    }

    #[test]
    fn polyak_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let source: Mlp<f32> = Mlp::new(&[3, 4, 1], &mut rng);
        let mut target: Mlp<f32> = Mlp::new(&[3, 4, 1], &mut rng);
        target.polyak_from(&source, 1.0).unwrap();
        assert_eq!(target, source);

        let mut zero = source.clone();
        zero.params_mut().into_iter().for_each(|p| p.fill(0.0));
        let mut ones = source.clone();
        ones.params_mut().into_iter().for_each(|p| p.fill(1.0));
        zero.polyak_from(&ones, 0.005).unwrap();
        assert!(zero.params().iter().all(|p| p.iter().all(|&x| x == 0.005)));
    }
}
