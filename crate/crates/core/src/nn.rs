//! Dense feed-forward classifier: initialization, forward pass with a softmax
//! head, cross-entropy, exact backpropagation and momentum SGD.
//!
//! Hidden layers apply the network's [`Activation`]; the last layer produces
//! logits which are turned into class probabilities by [`softmax`]. Weights are
//! stored as `(out_dim, in_dim)` row-major matrices.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::seeded_rng;

/// Floor applied to the true-class probability before taking the log.
pub const LOG_EPSILON: f64 = 1e-12;

pub const PARAMS_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::InvalidConfig(format!(
                "unknown activation `{other}`"
            ))),
        }
    }
}

/// Weights and biases of one multilayer perceptron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsWire", into = "ParamsWire")]
pub struct NetworkParams {
    layer_sizes: Vec<usize>,
    activation: Activation,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ParamsWire {
    version: u32,
    layer_sizes: Vec<usize>,
    activation: Activation,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
}

impl From<NetworkParams> for ParamsWire {
    fn from(p: NetworkParams) -> Self {
        ParamsWire {
            version: PARAMS_VERSION,
            layer_sizes: p.layer_sizes,
            activation: p.activation,
            weights: p.weights,
            biases: p.biases,
        }
    }
}

impl TryFrom<ParamsWire> for NetworkParams {
    type Error = Error;

    fn try_from(w: ParamsWire) -> Result<Self> {
        if w.version != PARAMS_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported network version {}",
                w.version
            )));
        }
        NetworkParams::from_parts(w.layer_sizes, w.activation, w.weights, w.biases)
    }
}

fn check_layer_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least an input and an output layer, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::InvalidConfig(format!(
            "layer sizes must be >= 1, got {layer_sizes:?}"
        )));
    }
    Ok(())
}

impl NetworkParams {
    /// Glorot-uniform weights within `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init(layer_sizes: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        check_layer_sizes(layer_sizes)?;
        let mut rng = seeded_rng(seed);
        let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
        let mut biases = Vec::with_capacity(layer_sizes.len() - 1);
        for pair in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let data = (0..fan_in * fan_out)
                .map(|_| bound * (2.0 * rng.gen::<f64>() - 1.0))
                .collect();
            weights.push(Matrix::from_vec(fan_out, fan_in, data)?);
            biases.push(vec![0.0; fan_out]);
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            activation,
            weights,
            biases,
        })
    }

    /// Assembles parameters from explicit tensors, validating every shape.
    pub fn from_parts(
        layer_sizes: Vec<usize>,
        activation: Activation,
        weights: Vec<Matrix>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self> {
        check_layer_sizes(&layer_sizes)?;
        let layers = layer_sizes.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(Error::Shape(format!(
                "{layers} layers need {layers} weight matrices and bias vectors, got {} and {}",
                weights.len(),
                biases.len()
            )));
        }
        for (l, (w, b)) in weights.iter().zip(&biases).enumerate() {
            let expect = (layer_sizes[l + 1], layer_sizes[l]);
            if w.shape() != expect {
                return Err(Error::Shape(format!(
                    "weights[{l}] is {:?}, expected {expect:?}",
                    w.shape()
                )));
            }
            if b.len() != expect.0 {
                return Err(Error::Shape(format!(
                    "biases[{l}] has length {}, expected {}",
                    b.len(),
                    expect.0
                )));
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericInput(format!(
                    "biases[{l}] has a non-finite entry"
                )));
            }
        }
        Ok(Self {
            layer_sizes,
            activation,
            weights,
            biases,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn class_count(&self) -> usize {
        *self.layer_sizes.last().expect("validated non-empty")
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    /// Visits every scalar parameter in a fixed order: per layer, weights then biases.
    pub fn for_each_param_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            w.as_mut_slice().iter_mut().for_each(&mut f);
            b.iter_mut().for_each(&mut f);
        }
    }

    pub fn param_count(&self) -> usize {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.as_slice().len() + b.len())
            .sum()
    }
}

pub fn init_params(
    layer_sizes: &[usize],
    activation: Activation,
    seed: u64,
) -> Result<NetworkParams> {
    NetworkParams::init(layer_sizes, activation, seed)
}

fn softmax_in_place(values: &mut [f64]) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in values.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in values.iter_mut() {
        *v /= sum;
    }
}

/// Max-shifted softmax.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::EmptyInput("softmax of an empty vector".into()));
    }
    if let Some(z) = logits.iter().find(|z| !z.is_finite()) {
        return Err(Error::NumericInput(format!("softmax logit {z}")));
    }
    let mut out = logits.to_vec();
    softmax_in_place(&mut out);
    Ok(out)
}

/// `-ln(max(probs[label], LOG_EPSILON))`.
pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64> {
    let p = *probs
        .get(label)
        .ok_or_else(|| Error::Index(format!("label {label} with {} classes", probs.len())))?;
    Ok(-p.max(LOG_EPSILON).ln())
}

/// Intermediate values of one forward pass, kept for [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `activations[0]` is the input batch; `activations[l]` feeds layer `l`.
    activations: Vec<Matrix>,
    /// Pre-activations of every layer, the last one being the logits.
    pre_activations: Vec<Matrix>,
    probs: Matrix,
}

impl ForwardCache {
    pub fn probs(&self) -> &Matrix {
        &self.probs
    }

    pub fn into_probs(self) -> Matrix {
        self.probs
    }

    pub fn logits(&self) -> &Matrix {
        self.pre_activations.last().expect("at least one layer")
    }

    pub fn batch_size(&self) -> usize {
        self.probs.rows()
    }
}

fn affine(input: &Matrix, weights: &Matrix, bias: &[f64]) -> Matrix {
    let (rows, out_dim) = (input.rows(), weights.rows());
    let mut out = Matrix::zeros(rows, out_dim);
    for r in 0..rows {
        let x = input.row(r);
        let z = out.row_mut(r);
        for (o, zo) in z.iter_mut().enumerate() {
            let w = weights.row(o);
            *zo = bias[o] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    out
}

pub fn forward(params: &NetworkParams, batch: &Matrix) -> Result<ForwardCache> {
    if batch.cols() != params.input_dim() {
        return Err(Error::Shape(format!(
            "batch has {} features, network expects {}",
            batch.cols(),
            params.input_dim()
        )));
    }
    let layers = params.num_layers();
    let mut activations = Vec::with_capacity(layers);
    let mut pre_activations = Vec::with_capacity(layers);
    activations.push(batch.clone());
    for l in 0..layers {
        let z = affine(&activations[l], &params.weights[l], &params.biases[l]);
        if l + 1 < layers {
            let mut a = z.clone();
            a.as_mut_slice()
                .iter_mut()
                .for_each(|v| *v = params.activation.apply(*v));
            activations.push(a);
        }
        pre_activations.push(z);
    }
    let mut probs = pre_activations[layers - 1].clone();
    for r in 0..probs.rows() {
        softmax_in_place(probs.row_mut(r));
    }
    Ok(ForwardCache {
        activations,
        pre_activations,
        probs,
    })
}

/// Gradients with the same shapes as [`NetworkParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(params: &NetworkParams) -> Self {
        Self {
            weights: params
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
            biases: params.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Flattened in the order of [`NetworkParams::for_each_param_mut`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out
    }

    fn check_shapes(&self, params: &NetworkParams) -> Result<()> {
        let ok = self.weights.len() == params.weights.len()
            && self.biases.len() == params.biases.len()
            && self
                .weights
                .iter()
                .zip(&params.weights)
                .all(|(g, w)| g.shape() == w.shape())
            && self
                .biases
                .iter()
                .zip(&params.biases)
                .all(|(g, b)| g.len() == b.len());
        if ok {
            Ok(())
        } else {
            Err(Error::Shape(
                "gradient shapes do not match parameters".into(),
            ))
        }
    }
}

/// Gradient of the batch objective with respect to the output logits.
///
/// The objective is `(1/B) Σ_b [CE(p_b, y_b) + ⟨g_b, p_b⟩]`, where `g` is the
/// optional `extra_prob_grad` matrix. The linear term is pulled back through
/// the softmax Jacobian: `∂/∂z_k = p_k (g_k − ⟨g, p⟩)`.
pub fn logit_gradient(
    cache: &ForwardCache,
    labels: &[usize],
    extra_prob_grad: Option<&Matrix>,
) -> Result<Matrix> {
    let probs = &cache.probs;
    let (batch, classes) = probs.shape();
    if labels.len() != batch {
        return Err(Error::Shape(format!(
            "{} labels for a batch of {batch}",
            labels.len()
        )));
    }
    if let Some(extra) = extra_prob_grad {
        if extra.shape() != probs.shape() {
            return Err(Error::Shape(format!(
                "extra probability gradient is {:?}, probs are {:?}",
                extra.shape(),
                probs.shape()
            )));
        }
    }
    let scale = 1.0 / batch as f64;
    let mut delta = Matrix::zeros(batch, classes);
    for (b, &label) in labels.iter().enumerate() {
        if label >= classes {
            return Err(Error::Index(format!(
                "label {label} with {classes} classes"
            )));
        }
        let p = probs.row(b);
        let d = delta.row_mut(b);
        // Below the log clamp the loss is constant in p, so it contributes nothing.
        if p[label] >= LOG_EPSILON {
            d.copy_from_slice(p);
            d[label] -= 1.0;
        }
        if let Some(extra) = extra_prob_grad {
            let g = extra.row(b);
            let inner: f64 = g.iter().zip(p).map(|(a, b)| a * b).sum();
            for k in 0..classes {
                d[k] += p[k] * (g[k] - inner);
            }
        }
        d.iter_mut().for_each(|v| *v *= scale);
    }
    Ok(delta)
}

/// Backpropagates the batch objective described in [`logit_gradient`].
pub fn backward(
    params: &NetworkParams,
    cache: &ForwardCache,
    labels: &[usize],
    extra_prob_grad: Option<&Matrix>,
) -> Result<Gradients> {
    if cache.pre_activations.len() != params.num_layers()
        || cache.probs.cols() != params.class_count()
    {
        return Err(Error::Shape(
            "forward cache does not belong to these parameters".into(),
        ));
    }
    let mut delta = logit_gradient(cache, labels, extra_prob_grad)?;
    let mut grads = Gradients::zeros_like(params);

    for l in (0..params.num_layers()).rev() {
        let input = &cache.activations[l];
        let gw = &mut grads.weights[l];
        let gb = &mut grads.biases[l];
        for r in 0..delta.rows() {
            let d = delta.row(r);
            let x = input.row(r);
            for (o, &dv) in d.iter().enumerate() {
                gb[o] += dv;
                if dv != 0.0 {
                    for (g, &xv) in gw.row_mut(o).iter_mut().zip(x) {
                        *g += dv * xv;
                    }
                }
            }
        }
        if l == 0 {
            break;
        }
        let w = &params.weights[l];
        let z_prev = &cache.pre_activations[l - 1];
        let a_prev = &cache.activations[l];
        let mut next = Matrix::zeros(delta.rows(), w.cols());
        for r in 0..delta.rows() {
            let d = delta.row(r);
            let out = next.row_mut(r);
            for (o, &dv) in d.iter().enumerate() {
                if dv != 0.0 {
                    for (acc, &wv) in out.iter_mut().zip(w.row(o)) {
                        *acc += dv * wv;
                    }
                }
            }
            for (i, acc) in out.iter_mut().enumerate() {
                *acc *= params
                    .activation
                    .derivative(z_prev.get(r, i), a_prev.get(r, i));
            }
        }
        delta = next;
    }
    Ok(grads)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    #[serde(rename = "lr")]
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            momentum: 0.9,
            epochs: 30,
            batch_size: 32,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lr must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig(format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Momentum buffers, one per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Velocity(Gradients);

impl Velocity {
    pub fn zeros_like(params: &NetworkParams) -> Self {
        Velocity(Gradients::zeros_like(params))
    }
}

/// `v ← momentum·v + g; θ ← θ − lr·v`.
pub fn sgd_step(
    params: &mut NetworkParams,
    grads: &Gradients,
    velocity: &mut Velocity,
    cfg: &SgdConfig,
) -> Result<()> {
    grads.check_shapes(params)?;
    velocity.0.check_shapes(params)?;
    let update = |theta: &mut [f64], v: &mut [f64], g: &[f64]| {
        for ((t, v), g) in theta.iter_mut().zip(v.iter_mut()).zip(g) {
            *v = cfg.momentum * *v + g;
            *t -= cfg.learning_rate * *v;
        }
    };
    for l in 0..params.num_layers() {
        update(
            params.weights[l].as_mut_slice(),
            velocity.0.weights[l].as_mut_slice(),
            grads.weights[l].as_slice(),
        );
        update(
            &mut params.biases[l],
            &mut velocity.0.biases[l],
            &grads.biases[l],
        );
    }
    Ok(())
}
