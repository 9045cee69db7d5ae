use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, seeded};

/// Architecture and initialization seed of a ReLU network with a linear head.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    #[serde(default = "default_hidden")]
    pub hidden_layers: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
}

fn default_hidden() -> Vec<usize> {
    vec![200, 200]
}

impl MlpSpec {
    pub fn new(input_dim: usize, output_dim: usize, hidden_layers: Vec<usize>, seed: u64) -> Self {
        Self {
            input_dim,
            output_dim,
            hidden_layers,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden_layers.contains(&0) {
            return Err(Error::input(format!("all layer widths must be >= 1: {self:?}")));
        }
        Ok(())
    }

    /// Layer widths from input to output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden_layers.len() + 2);
        w.push(self.input_dim);
        w.extend(&self.hidden_layers);
        w.push(self.output_dim);
        w
    }
}

/// Affine map `z = W·a + b` with `W` stored as `out × in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: Array2::zeros((fan_out, fan_in)),
            bias: Array1::zeros(fan_out),
        }
    }

    fn zeros_like(&self) -> Self {
        Self {
            weight: Array2::zeros(self.weight.raw_dim()),
            bias: Array1::zeros(self.bias.raw_dim()),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.ncols()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.nrows()
    }
}

/// Per-layer parameter gradients, shaped like the model.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    first: Vec<Layer>,
    second: Vec<Layer>,
    pub step: u64,
}

impl AdamState {
    fn new(layers: &[Layer]) -> Self {
        Self {
            first: layers.iter().map(Layer::zeros_like).collect(),
            second: layers.iter().map(Layer::zeros_like).collect(),
            step: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    spec: MlpSpec,
    layers: Vec<Layer>,
    adam: AdamState,
}

fn flatten(layers: &[Layer]) -> Vec<f64> {
    let mut out = Vec::new();
    for l in layers {
        out.extend(l.weight.iter());
        out.extend(l.bias.iter());
    }
    out
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = seeded(derive_seed(spec.seed, &[0]));
        let widths = spec.widths();
        let layers: Vec<Layer> = widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let mut layer = Layer::zeros(fan_in, fan_out);
                layer.weight.mapv_inplace(|_| rng.random_range(-limit..limit));
                layer
            })
            .collect();
        let adam = AdamState::new(&layers);
        Ok(Self { spec, layers, adam })
    }

    /// Builds a network from explicit layers; hidden widths are read off the shapes.
    pub fn from_layers(layers: Vec<Layer>, seed: u64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::input("network needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].fan_out() != pair[1].fan_in() {
                return Err(Error::input("consecutive layer shapes do not chain"));
            }
        }
        for l in &layers {
            if l.bias.len() != l.fan_out() {
                return Err(Error::input("bias length does not match layer output"));
            }
        }
        let spec = MlpSpec {
            input_dim: layers[0].fan_in(),
            output_dim: layers.last().unwrap().fan_out(),
            hidden_layers: layers[..layers.len() - 1].iter().map(Layer::fan_out).collect(),
            seed,
        };
        spec.validate()?;
        let adam = AdamState::new(&layers);
        Ok(Self { spec, layers, adam })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn adam_state(&self) -> &AdamState {
        &self.adam
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Weights row-major, then biases, layer by layer.
    pub fn params_flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::input(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            l.weight.iter_mut().for_each(|w| *w = it.next().unwrap());
            l.bias.iter_mut().for_each(|b| *b = it.next().unwrap());
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.spec.input_dim {
            return Err(Error::input(format!(
                "input has dimension {}, network expects {}",
                input.len(),
                self.spec.input_dim
            )));
        }
        let mut a = Array1::from(input.to_vec());
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = l.weight.dot(&a) + &l.bias;
            if i < last {
                z.mapv_inplace(relu);
            }
            a = z;
        }
        Ok(a.to_vec())
    }

    /// Rows of `inputs` are samples.
    pub fn forward_batch(&self, inputs: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_batch(inputs, None)?;
        Ok(self.activations(inputs).pop().unwrap())
    }

    fn check_batch(&self, inputs: ArrayView2<f64>, targets: Option<ArrayView2<f64>>) -> Result<()> {
        if inputs.ncols() != self.spec.input_dim {
            return Err(Error::input(format!(
                "batch has {} columns, network expects {}",
                inputs.ncols(),
                self.spec.input_dim
            )));
        }
        if let Some(t) = targets {
            if inputs.nrows() == 0 {
                return Err(Error::input("empty batch"));
            }
            if t.nrows() != inputs.nrows() || t.ncols() != self.spec.output_dim {
                return Err(Error::input(format!(
                    "targets are {}×{}, expected {}×{}",
                    t.nrows(),
                    t.ncols(),
                    inputs.nrows(),
                    self.spec.output_dim
                )));
            }
        }
        Ok(())
    }

    /// Post-activation outputs of every layer, input included.
    fn activations(&self, inputs: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(inputs.to_owned());
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = acts[i].dot(&l.weight.t()) + &l.bias;
            if i < last {
                z.mapv_inplace(relu);
            }
            acts.push(z);
        }
        acts
    }

    /// Batch MSE `(1/B)·Σ‖ŷ−y‖²` and its exact parameter gradients.
    pub fn backward(&self, inputs: ArrayView2<f64>, targets: ArrayView2<f64>) -> Result<(Gradients, f64)> {
        self.check_batch(inputs, Some(targets))?;
        let b = inputs.nrows() as f64;
        let acts = self.activations(inputs);
        let resid = acts.last().unwrap() - &targets;
        let loss = resid.iter().map(|r| r * r).sum::<f64>() / b;

        let mut delta = resid * (2.0 / b);
        let mut grads: Vec<Layer> = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let weight = delta.t().dot(&acts[i]);
            let bias = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut back = delta.dot(&self.layers[i].weight);
                // ReLU derivative from the stored post-activation.
                back.zip_mut_with(&acts[i], |d, &a| {
                    if a <= 0.0 {
                        *d = 0.0
                    }
                });
                delta = back;
            }
            grads.push(Layer { weight, bias });
        }
        grads.reverse();
        Ok((Gradients { layers: grads }, loss))
    }

    /// Mean squared error over a batch without gradients.
    pub fn mse(&self, inputs: ArrayView2<f64>, targets: ArrayView2<f64>) -> Result<f64> {
        self.check_batch(inputs, Some(targets))?;
        let out = self.activations(inputs).pop().unwrap();
        let b = inputs.nrows() as f64;
        Ok((out - &targets).iter().map(|r| r * r).sum::<f64>() / b)
    }

    /// Gradient of a scalar-output network with respect to its input.
    pub fn input_gradient(&self, input: &[f64]) -> Result<Vec<f64>> {
        if self.spec.output_dim != 1 {
            return Err(Error::input("input gradient needs a scalar output"));
        }
        if input.len() != self.spec.input_dim {
            return Err(Error::input("input dimension mismatch"));
        }
        let mut acts = vec![Array1::from(input.to_vec())];
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = l.weight.dot(&acts[i]) + &l.bias;
            if i < last {
                z.mapv_inplace(relu);
            }
            acts.push(z);
        }
        let mut delta = Array1::from(vec![1.0]);
        for i in (0..self.layers.len()).rev() {
            let mut back = self.layers[i].weight.t().dot(&delta);
            if i > 0 {
                back.zip_mut_with(&acts[i], |d, &a| {
                    if a <= 0.0 {
                        *d = 0.0
                    }
                });
            }
            delta = back;
        }
        Ok(delta.to_vec())
    }

    /// One bias-corrected Adam update.
    pub fn adam_step(&mut self, grads: &Gradients, cfg: &AdamConfig) -> Result<()> {
        if grads.layers.len() != self.layers.len()
            || grads
                .layers
                .iter()
                .zip(&self.layers)
                .any(|(g, l)| g.weight.dim() != l.weight.dim() || g.bias.dim() != l.bias.dim())
        {
            return Err(Error::input("gradient shapes do not match the network"));
        }
        self.adam.step += 1;
        let t = self.adam.step as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        let (b1, b2, lr, eps) = (cfg.beta1, cfg.beta2, cfg.learning_rate, cfg.eps);
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        };
        for (((l, g), m), v) in self
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.adam.first)
            .zip(&mut self.adam.second)
        {
            ndarray::Zip::from(&mut l.weight)
                .and(&mut m.weight)
                .and(&mut v.weight)
                .and(&g.weight)
                .for_each(|p, m, v, &g| update(p, m, v, g));
            ndarray::Zip::from(&mut l.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .and(&g.bias)
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
        Ok(())
    }

    pub fn reset_optimizer(&mut self) {
        self.adam = AdamState::new(&self.layers);
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }
}

fn relu(z: f64) -> f64 {
    z.max(0.0)
}
