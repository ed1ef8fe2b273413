//! Fully connected ReLU network with reverse-mode gradients for both its
//! parameters and its inputs.
//!
//! Parameters live in one flat vector, layer after layer, each layer stored as
//! its weight matrix (row-major, `out x in`) followed by its bias vector.
//! Models embed that vector inside their own parameter vector and call
//! [`Mlp`] on the slice.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetSpec {
    /// Input width, hidden widths, output width (always 1).
    pub layer_sizes: Vec<usize>,
    pub seed: u64,
}

impl NetSpec {
    pub fn new(input: usize, hidden: &[usize], seed: u64) -> Self {
        let mut layer_sizes = Vec::with_capacity(hidden.len() + 2);
        layer_sizes.push(input);
        layer_sizes.extend_from_slice(hidden);
        layer_sizes.push(1);
        NetSpec { layer_sizes, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 3 {
            return Err(Error::Config("network needs at least one hidden layer".into()));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::Config("layer widths must be at least 1".into()));
        }
        if *self.layer_sizes.last().unwrap() != 1 {
            return Err(Error::Config("network output width must be 1".into()));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn input_width(&self) -> usize {
        self.layer_sizes[0]
    }
}

/// Network architecture; evaluates on borrowed parameter slices.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    /// Start of each layer's weights in the flat vector.
    offsets: Vec<usize>,
    n_params: usize,
}

/// Activation buffers reused between calls.
#[derive(Debug, Clone)]
pub struct Scratch {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Mlp {
    pub fn new(spec: &NetSpec) -> Result<Self> {
        spec.validate()?;
        let sizes = spec.layer_sizes.clone();
        let mut offsets = Vec::with_capacity(sizes.len() - 1);
        let mut at = 0;
        for w in sizes.windows(2) {
            offsets.push(at);
            at += w[0] * w[1] + w[1];
        }
        Ok(Mlp { sizes, offsets, n_params: at })
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn n_inputs(&self) -> usize {
        self.sizes[0]
    }

    fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    /// Flat index of the output bias.
    pub fn output_bias_index(&self) -> usize {
        self.n_params - 1
    }

    /// Flat range of the output layer's weights.
    pub fn output_weight_range(&self) -> std::ops::Range<usize> {
        let l = self.n_layers() - 1;
        let start = self.offsets[l];
        start..start + self.sizes[l]
    }

    pub fn scratch(&self) -> Scratch {
        let widest = *self.sizes.iter().max().unwrap();
        Scratch {
            pre: self.sizes[1..].iter().map(|&n| vec![0.0; n]).collect(),
            post: self.sizes[1..].iter().map(|&n| vec![0.0; n]).collect(),
            delta: vec![0.0; widest],
            delta_prev: vec![0.0; widest],
        }
    }

    fn check(&self, params: &[f64], x: &[f64]) -> Result<()> {
        if params.len() != self.n_params {
            return Err(Error::Dimension { expected: self.n_params, got: params.len() });
        }
        if x.len() != self.n_inputs() {
            return Err(Error::Dimension { expected: self.n_inputs(), got: x.len() });
        }
        Ok(())
    }

    /// Forward pass; activations stay in `scratch` for a following backward pass.
    pub fn forward_with(&self, params: &[f64], x: &[f64], scratch: &mut Scratch) -> f64 {
        debug_assert!(self.check(params, x).is_ok());
        let last = self.n_layers() - 1;
        for l in 0..=last {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &params[self.offsets[l]..self.offsets[l] + n_in * n_out];
            let b = &params[self.offsets[l] + n_in * n_out..self.offsets[l] + n_in * n_out + n_out];
            let (done, rest) = scratch.post.split_at_mut(l);
            let input: &[f64] = if l == 0 { x } else { &done[l - 1] };
            let pre = &mut scratch.pre[l];
            for i in 0..n_out {
                let row = &w[i * n_in..(i + 1) * n_in];
                pre[i] = b[i] + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
            }
            let post = &mut rest[0];
            if l == last {
                post.copy_from_slice(pre);
            } else {
                for (p, &z) in post.iter_mut().zip(pre.iter()) {
                    *p = z.max(0.0);
                }
            }
        }
        scratch.post[last][0]
    }

    /// Adds `d_out * ∂out/∂params` into `grad` and, when given, writes
    /// `d_out * ∂out/∂x` into `grad_x`. Must follow `forward_with` on the same
    /// inputs.
    pub fn backward_with(
        &self,
        params: &[f64],
        x: &[f64],
        scratch: &mut Scratch,
        d_out: f64,
        grad: &mut [f64],
        mut grad_x: Option<&mut [f64]>,
    ) {
        let last = self.n_layers() - 1;
        scratch.delta[0] = d_out;
        for l in (0..=last).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = self.offsets[l];
            let w = &params[off..off + n_in * n_out];
            let input: &[f64] = if l == 0 { x } else { &scratch.post[l - 1] };
            let delta = &scratch.delta[..n_out];
            {
                let (gw, gb) = grad[off..off + n_in * n_out + n_out].split_at_mut(n_in * n_out);
                for i in 0..n_out {
                    let d = delta[i];
                    if d == 0.0 {
                        continue;
                    }
                    gb[i] += d;
                    for (g, a) in gw[i * n_in..(i + 1) * n_in].iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
            }
            if l == 0 && grad_x.is_none() {
                break;
            }
            let prev = &mut scratch.delta_prev[..n_in];
            prev.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..n_out {
                let d = delta[i];
                if d == 0.0 {
                    continue;
                }
                for (p, wij) in prev.iter_mut().zip(&w[i * n_in..(i + 1) * n_in]) {
                    *p += d * wij;
                }
            }
            if l == 0 {
                if let Some(gx) = grad_x.as_deref_mut() {
                    gx.copy_from_slice(prev);
                }
                break;
            }
            // ReLU subgradient is 0 at the kink.
            for (p, &z) in prev.iter_mut().zip(&scratch.pre[l - 1]) {
                if z <= 0.0 {
                    *p = 0.0;
                }
            }
            std::mem::swap(&mut scratch.delta, &mut scratch.delta_prev);
        }
    }
}

/// Network parameters with their architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetParams {
    pub spec: NetSpec,
    pub flat: Vec<f64>,
}

/// Per-layer weights (`out x in`, row-major) and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl NetParams {
    pub fn from_flat(spec: NetSpec, flat: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if flat.len() != spec.param_count() {
            return Err(Error::Dimension { expected: spec.param_count(), got: flat.len() });
        }
        Ok(NetParams { spec, flat })
    }

    pub fn layers(&self) -> Vec<Layer> {
        let mut at = 0;
        self.spec
            .layer_sizes
            .windows(2)
            .map(|w| {
                let nw = w[0] * w[1];
                let layer = Layer {
                    weights: self.flat[at..at + nw].to_vec(),
                    biases: self.flat[at + nw..at + nw + w[1]].to_vec(),
                };
                at += nw + w[1];
                layer
            })
            .collect()
    }

    pub fn from_layers(spec: NetSpec, layers: &[Layer]) -> Result<Self> {
        let mut flat = Vec::with_capacity(spec.param_count());
        for l in layers {
            flat.extend_from_slice(&l.weights);
            flat.extend_from_slice(&l.biases);
        }
        Self::from_flat(spec, flat)
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init(spec: &NetSpec) -> Result<NetParams> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, 0);
    let mut flat = Vec::with_capacity(spec.param_count());
    for w in spec.layer_sizes.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        flat.extend((0..fan_in * fan_out).map(|_| rng.random_range(-bound..=bound)));
        flat.extend(std::iter::repeat_n(0.0, fan_out));
    }
    Ok(NetParams { spec: spec.clone(), flat })
}

pub fn forward(params: &NetParams, x: &[f64]) -> Result<f64> {
    let mlp = Mlp::new(&params.spec)?;
    mlp.check(&params.flat, x)?;
    Ok(mlp.forward_with(&params.flat, x, &mut mlp.scratch()))
}

/// `(∂out/∂params, ∂out/∂x)`.
pub fn gradients(params: &NetParams, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mlp = Mlp::new(&params.spec)?;
    mlp.check(&params.flat, x)?;
    let mut scratch = mlp.scratch();
    mlp.forward_with(&params.flat, x, &mut scratch);
    let mut g = vec![0.0; mlp.n_params()];
    let mut gx = vec![0.0; mlp.n_inputs()];
    mlp.backward_with(&params.flat, x, &mut scratch, 1.0, &mut g, Some(&mut gx));
    Ok((g, gx))
}
