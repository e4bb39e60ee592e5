use serde::{Deserialize, Serialize};

use super::{check_len, Mat, NumericsError, Result, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    fn grad(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Tanh => 1,
            Activation::Relu => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Tanh),
            2 => Some(Activation::Relu),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weight: Mat,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// Fully connected network; hidden layers use the configured activation and
/// the output layer is linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Layer>,
}

/// Per-layer parameter gradients, laid out like [`Mlp`]'s layers.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub weights: Vec<Mat>,
    pub biases: Vec<Vec<f64>>,
}

/// Activations recorded by a forward pass, reused by backward.
#[derive(Debug, Default, Clone)]
pub struct ForwardCache {
    // outs[0] is the input; outs[l + 1] is layer l's output
    outs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    delta: Vec<f64>,
    back: Vec<f64>,
}

impl Mlp {
    /// Random Glorot-uniform initialization with zero biases.
    pub fn new(sizes: &[usize], hidden: Activation, rng: &mut RngStream) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(NumericsError::Invalid(format!("layer sizes {sizes:?}")));
        }
        let n = sizes.len() - 1;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let data = (0..fan_in * fan_out)
                    .map(|_| (2.0 * rng.uniform() - 1.0) * limit)
                    .collect();
                Layer {
                    weight: Mat::from_vec(fan_out, fan_in, data).expect("shape by construction"),
                    bias: vec![0.0; fan_out],
                    activation: if i + 1 == n { Activation::Identity } else { hidden },
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(NumericsError::Invalid("network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            check_len(l.weight.rows(), l.bias.len())?;
            if i > 0 {
                check_len(layers[i - 1].weight.rows(), l.weight.cols())?;
            }
            if !super::all_finite(&l.bias) || !super::all_finite(l.weight.data()) {
                return Err(NumericsError::NonFinite("mlp parameters"));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.weight.rows()).unwrap_or(0)
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.weight.rows()))
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.data().len() + l.bias.len())
            .sum()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut cache = ForwardCache::default();
        Ok(self.forward_cached(x, &mut cache)?.to_vec())
    }

    pub fn forward_cached<'c>(&self, x: &[f64], cache: &'c mut ForwardCache) -> Result<&'c [f64]> {
        check_len(self.input_dim(), x.len())?;
        let depth = self.layers.len();
        cache.outs.resize_with(depth + 1, Vec::new);
        cache.pre.resize_with(depth, Vec::new);
        cache.outs[0].clear();
        cache.outs[0].extend_from_slice(x);
        for (l, layer) in self.layers.iter().enumerate() {
            let (head, tail) = cache.outs.split_at_mut(l + 1);
            let pre = &mut cache.pre[l];
            layer.weight.affine_into(&head[l], &layer.bias, pre);
            let out = &mut tail[0];
            out.clear();
            out.extend(pre.iter().map(|&z| layer.activation.apply(z)));
        }
        Ok(&cache.outs[depth])
    }

    pub fn zero_grads(&self) -> MlpGrads {
        MlpGrads {
            weights: self
                .layers
                .iter()
                .map(|l| Mat::zeros(l.weight.rows(), l.weight.cols()))
                .collect(),
            biases: self.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    /// Exact reverse-mode gradients of `<grad_out, forward(x)>` with respect
    /// to every weight and bias.
    pub fn backward(&self, x: &[f64], grad_out: &[f64]) -> Result<MlpGrads> {
        let mut cache = ForwardCache::default();
        self.forward_cached(x, &mut cache)?;
        let mut grads = self.zero_grads();
        self.backward_accumulate(&mut cache, grad_out, 1.0, &mut grads)?;
        Ok(grads)
    }

    /// Adds `scale *` the parameter gradients for the pass recorded in `cache`.
    pub fn backward_accumulate(
        &self,
        cache: &mut ForwardCache,
        grad_out: &[f64],
        scale: f64,
        grads: &mut MlpGrads,
    ) -> Result<()> {
        check_len(self.output_dim(), grad_out.len())?;
        if cache.outs.len() != self.layers.len() + 1 {
            return Err(NumericsError::Invalid("backward without forward".into()));
        }
        let ForwardCache {
            outs,
            pre,
            delta,
            back,
        } = cache;
        back.clear();
        back.extend_from_slice(grad_out);
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            delta.clear();
            delta.extend(
                back.iter()
                    .zip(&pre[l])
                    .zip(&outs[l + 1])
                    .map(|((g, &z), &a)| g * layer.activation.grad(z, a)),
            );
            grads.weights[l].add_outer(scale, delta, &outs[l]);
            for (gb, d) in grads.biases[l].iter_mut().zip(delta.iter()) {
                *gb += scale * d;
            }
            if l > 0 {
                layer.weight.transpose_mul_into(delta, back);
            }
        }
        Ok(())
    }

    /// Mutable views over every parameter tensor, in a fixed order matching
    /// [`MlpGrads::slices`].
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &mut self.layers {
            out.push(l.weight.data_mut());
            out.push(l.bias.as_mut_slice());
        }
        out
    }

    pub fn params(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &self.layers {
            out.push(l.weight.data());
            out.push(l.bias.as_slice());
        }
        out
    }
}

impl MlpGrads {
    pub fn slices(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.data(), b.as_slice()])
            .collect()
    }

    pub fn clear(&mut self) {
        for w in &mut self.weights {
            w.data_mut().fill(0.0);
        }
        for b in &mut self.biases {
            b.fill(0.0);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|&v| v == 0.0))
    }
}
