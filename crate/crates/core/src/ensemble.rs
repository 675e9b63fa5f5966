//! Ensembles of MLP members trained with a negative-correlation penalty.
//!
//! Each member `i` minimizes `E_i = CE(y, h_i(x)) + λ·div_i`, where
//! `div_i = (h_i − h̄)·Σ_{j≠i}(h_j − h̄)` is evaluated on softmax outputs and
//! `h̄` is the mean member output. During backpropagation `h̄` is a constant,
//! so the gradient of `div_i` with respect to `h_i` is `Σ_{j≠i}(h_j − h̄)`.
//!
//! A minibatch step runs every member forward, freezes `h̄`, then updates each
//! member against that same `h̄`. With `λ = 0` the members never interact and
//! training reduces to independent networks sharing one batch stream.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{self, EceWeighting};
use crate::data::{minibatches, Dataset};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{
    backward, cross_entropy, forward, sgd_step, Activation, ForwardCache, NetworkParams, SgdConfig,
    Velocity,
};

pub const ENSEMBLE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    #[serde(rename = "M")]
    pub member_count: usize,
    pub lambda: f64,
    pub sgd: SgdConfig,
    pub member_seeds: Vec<u64>,
    /// Epoch `e` shuffles with `shuffle_seed + e`; shared by all members.
    pub shuffle_seed: u64,
}

impl EnsembleConfig {
    /// Member `i` is initialized from `seed + i`; batches are shuffled from `seed`.
    pub fn seeded(member_count: usize, lambda: f64, sgd: SgdConfig, seed: u64) -> Self {
        Self {
            member_count,
            lambda,
            sgd,
            member_seeds: (0..member_count as u64)
                .map(|i| seed.wrapping_add(i))
                .collect(),
            shuffle_seed: seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.member_count == 0 {
            return Err(Error::InvalidConfig("M must be >= 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be a finite non-negative number, got {}",
                self.lambda
            )));
        }
        if self.member_seeds.len() != self.member_count {
            return Err(Error::InvalidConfig(format!(
                "member_seeds has {} entries for M = {}",
                self.member_seeds.len(),
                self.member_count
            )));
        }
        let mut seen = self.member_seeds.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig(
                "member_seeds must be pairwise distinct".into(),
            ));
        }
        self.sgd.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnsembleWire", into = "EnsembleWire")]
pub struct Ensemble {
    config: EnsembleConfig,
    members: Vec<NetworkParams>,
}

#[derive(Serialize, Deserialize)]
struct EnsembleWire {
    version: u32,
    config: EnsembleConfig,
    members: Vec<NetworkParams>,
}

impl From<Ensemble> for EnsembleWire {
    fn from(e: Ensemble) -> Self {
        EnsembleWire {
            version: ENSEMBLE_VERSION,
            config: e.config,
            members: e.members,
        }
    }
}

impl TryFrom<EnsembleWire> for Ensemble {
    type Error = Error;

    fn try_from(w: EnsembleWire) -> Result<Self> {
        if w.version != ENSEMBLE_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported ensemble version {}",
                w.version
            )));
        }
        Ensemble::from_members(w.config, w.members)
    }
}

impl Ensemble {
    /// Initializes every member from its own seed.
    pub fn init(
        config: EnsembleConfig,
        layer_sizes: &[usize],
        activation: Activation,
    ) -> Result<Self> {
        config.validate()?;
        let members = config
            .member_seeds
            .iter()
            .map(|&seed| NetworkParams::init(layer_sizes, activation, seed))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { config, members })
    }

    pub fn from_members(config: EnsembleConfig, members: Vec<NetworkParams>) -> Result<Self> {
        config.validate()?;
        if members.len() != config.member_count {
            return Err(Error::InvalidConfig(format!(
                "{} members for M = {}",
                members.len(),
                config.member_count
            )));
        }
        let first = &members[0];
        if let Some(bad) = members.iter().position(|m| {
            m.layer_sizes() != first.layer_sizes() || m.activation() != first.activation()
        }) {
            return Err(Error::Shape(format!(
                "member {bad} architecture differs from member 0"
            )));
        }
        Ok(Self { config, members })
    }

    pub fn config(&self) -> &EnsembleConfig {
        &self.config
    }

    pub fn members(&self) -> &[NetworkParams] {
        &self.members
    }

    pub fn input_dim(&self) -> usize {
        self.members[0].input_dim()
    }

    pub fn class_count(&self) -> usize {
        self.members[0].class_count()
    }

    pub fn layer_sizes(&self) -> &[usize] {
        self.members[0].layer_sizes()
    }

    pub fn activation(&self) -> Activation {
        self.members[0].activation()
    }
}

fn check_same_len(vectors: &[&[f64]]) -> Result<usize> {
    let k = vectors
        .first()
        .ok_or_else(|| Error::EmptyInput("no member outputs".into()))?
        .len();
    if let Some(j) = vectors.iter().position(|v| v.len() != k) {
        return Err(Error::Shape(format!(
            "member {j} has {} classes, expected {k}",
            vectors[j].len()
        )));
    }
    Ok(k)
}

/// Running mean; exact when every value is identical.
fn running_mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut mean = 0.0;
    for (j, v) in values.enumerate() {
        mean += (v - mean) / (j + 1) as f64;
    }
    mean
}

fn mean_of(vectors: &[&[f64]], k: usize) -> Vec<f64> {
    (0..k)
        .map(|c| running_mean(vectors.iter().map(|v| v[c])))
        .collect()
}

/// Entrywise mean of member probability matrices.
pub fn ensemble_mean(member_probs: &[Matrix]) -> Result<Matrix> {
    let first = member_probs
        .first()
        .ok_or_else(|| Error::EmptyInput("ensemble_mean needs at least one member".into()))?;
    let shape = first.shape();
    if let Some(j) = member_probs.iter().position(|m| m.shape() != shape) {
        return Err(Error::Shape(format!(
            "member {j} outputs {:?}, expected {shape:?}",
            member_probs[j].shape()
        )));
    }
    let mut out = Matrix::zeros(shape.0, shape.1);
    for (idx, v) in out.as_mut_slice().iter_mut().enumerate() {
        *v = running_mean(member_probs.iter().map(|p| p.as_slice()[idx]));
    }
    Ok(out)
}

/// `(h_i − mean)·Σ_{j≠i}(h_j − mean)` with the mean supplied by the caller.
pub fn nc_div_with_mean(
    h_i: &[f64],
    member_probs: &[&[f64]],
    i: usize,
    mean: &[f64],
) -> Result<f64> {
    let k = check_same_len(member_probs)?;
    if i >= member_probs.len() {
        return Err(Error::Index(format!(
            "member {i} of {}",
            member_probs.len()
        )));
    }
    if h_i.len() != k || mean.len() != k {
        return Err(Error::Shape(format!(
            "h_i has {} and mean {} classes, members have {k}",
            h_i.len(),
            mean.len()
        )));
    }
    let mut div = 0.0;
    for c in 0..k {
        let others: f64 = member_probs
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, h)| h[c] - mean[c])
            .sum();
        div += (h_i[c] - mean[c]) * others;
    }
    Ok(div)
}

/// Negative-correlation diversity of member `i`, with the mean taken over `member_probs`.
pub fn nc_div(h_i: &[f64], member_probs: &[&[f64]], i: usize) -> Result<f64> {
    let k = check_same_len(member_probs)?;
    let mean = mean_of(member_probs, k);
    nc_div_with_mean(h_i, member_probs, i, &mean)
}

fn div_grad_with_mean(member_probs: &[&[f64]], i: usize, mean: &[f64], out: &mut [f64]) {
    for (c, o) in out.iter_mut().enumerate() {
        *o = member_probs
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, h)| h[c] - mean[c])
            .sum();
    }
}

/// `∂div_i/∂h_i = Σ_{j≠i}(h_j − h̄)` with `h̄` held constant.
pub fn nc_div_grad(member_probs: &[&[f64]], i: usize) -> Result<Vec<f64>> {
    let k = check_same_len(member_probs)?;
    if i >= member_probs.len() {
        return Err(Error::Index(format!(
            "member {i} of {}",
            member_probs.len()
        )));
    }
    let mean = mean_of(member_probs, k);
    let mut out = vec![0.0; k];
    div_grad_with_mean(member_probs, i, &mean, &mut out);
    Ok(out)
}

/// `E_i = CE(h_i, label) + λ·div_i`.
pub fn member_loss(
    label: usize,
    h_i: &[f64],
    member_probs: &[&[f64]],
    i: usize,
    lambda: f64,
) -> Result<f64> {
    Ok(cross_entropy(h_i, label)? + lambda * nc_div(h_i, member_probs, i)?)
}

/// Member outputs for one batch together with their frozen mean.
#[derive(Debug, Clone)]
pub struct MemberBatchOutputs {
    pub member_probs: Vec<Matrix>,
    pub mean: Matrix,
}

impl MemberBatchOutputs {
    pub fn new(member_probs: Vec<Matrix>) -> Result<Self> {
        let mean = ensemble_mean(&member_probs)?;
        Ok(Self { member_probs, mean })
    }

    fn rows(&self, b: usize) -> Vec<&[f64]> {
        self.member_probs.iter().map(|p| p.row(b)).collect()
    }

    /// `λ·Σ_{j≠i}(h_j − h̄)` for every row of the batch.
    pub fn penalty_gradient(&self, i: usize, lambda: f64) -> Matrix {
        let (batch, k) = self.mean.shape();
        let mut out = Matrix::zeros(batch, k);
        for b in 0..batch {
            let rows = self.rows(b);
            let g = out.row_mut(b);
            div_grad_with_mean(&rows, i, self.mean.row(b), g);
            g.iter_mut().for_each(|v| *v *= lambda);
        }
        out
    }

    /// Batch mean of `E_i` against the frozen mean.
    pub fn mean_member_loss(&self, i: usize, labels: &[usize], lambda: f64) -> Result<f64> {
        let batch = self.mean.rows();
        let mut total = 0.0;
        for (b, &label) in labels.iter().enumerate() {
            let rows = self.rows(b);
            let ce = cross_entropy(rows[i], label)?;
            let div = if lambda == 0.0 {
                0.0
            } else {
                nc_div_with_mean(rows[i], &rows, i, self.mean.row(b))?
            };
            total += ce + lambda * div;
        }
        Ok(total / batch as f64)
    }
}

/// Ensemble plus the per-member optimizer state.
#[derive(Debug, Clone)]
pub struct EnsembleTrainer {
    ensemble: Ensemble,
    velocities: Vec<Velocity>,
}

impl EnsembleTrainer {
    pub fn new(ensemble: Ensemble) -> Self {
        let velocities = ensemble.members.iter().map(Velocity::zeros_like).collect();
        Self {
            ensemble,
            velocities,
        }
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ensemble
    }

    pub fn into_ensemble(self) -> Ensemble {
        self.ensemble
    }

    /// One synchronous step on a minibatch; returns each member's batch-mean
    /// `E_i` measured before the update.
    pub fn train_minibatch(&mut self, batch: &Matrix, labels: &[usize]) -> Result<Vec<f64>> {
        if labels.len() != batch.rows() {
            return Err(Error::Shape(format!(
                "{} labels for a batch of {}",
                labels.len(),
                batch.rows()
            )));
        }
        let lambda = self.ensemble.config.lambda;
        let sgd = self.ensemble.config.sgd;

        let caches = self
            .ensemble
            .members
            .par_iter()
            .map(|m| forward(m, batch))
            .collect::<Result<Vec<ForwardCache>>>()?;
        let outputs = MemberBatchOutputs::new(caches.iter().map(|c| c.probs().clone()).collect())?;
        let interacting = lambda != 0.0 && self.ensemble.members.len() > 1;

        self.ensemble
            .members
            .par_iter_mut()
            .zip(self.velocities.par_iter_mut())
            .zip(caches.par_iter())
            .enumerate()
            .map(|(i, ((member, velocity), cache))| {
                let extra = interacting.then(|| outputs.penalty_gradient(i, lambda));
                let loss = outputs.mean_member_loss(i, labels, lambda)?;
                let grads = backward(member, cache, labels, extra.as_ref())?;
                sgd_step(member, &grads, velocity, &sgd)?;
                Ok(loss)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub eval_acc: Option<f64>,
    pub eval_ece: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
}

impl TrainingLog {
    /// CSV with header `epoch,train_loss,eval_acc,eval_ece`; eval cells are empty when absent.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,eval_acc,eval_ece\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.epoch,
                r.train_loss,
                opt(r.eval_acc),
                opt(r.eval_ece)
            ));
        }
        out
    }
}

/// Held-out set evaluated after every epoch.
#[derive(Debug, Clone, Copy)]
pub struct EvalSpec<'a> {
    pub data: &'a Dataset,
    pub bins: usize,
    pub weighting: EceWeighting,
}

impl<'a> EvalSpec<'a> {
    pub fn new(data: &'a Dataset) -> Self {
        Self {
            data,
            bins: calibration::DEFAULT_BINS,
            weighting: EceWeighting::Standard,
        }
    }
}

/// Runs `epochs` shuffled minibatch sweeps over `train_set`.
pub fn train(
    train_set: &Dataset,
    config: &EnsembleConfig,
    layer_sizes: &[usize],
    activation: Activation,
    eval: Option<EvalSpec<'_>>,
) -> Result<(Ensemble, TrainingLog)> {
    let ensemble = Ensemble::init(config.clone(), layer_sizes, activation)?;
    check_dataset(&ensemble, train_set, "training")?;
    if let Some(spec) = &eval {
        check_dataset(&ensemble, spec.data, "evaluation")?;
        if spec.bins == 0 {
            return Err(Error::InvalidConfig("bins must be >= 1".into()));
        }
    }

    let mut trainer = EnsembleTrainer::new(ensemble);
    let mut log = TrainingLog::default();
    let n = train_set.len();
    for epoch in 0..config.sgd.epochs {
        let epoch_seed = config.shuffle_seed.wrapping_add(epoch as u64);
        let mut weighted = 0.0;
        for slice in minibatches(train_set, config.sgd.batch_size, epoch_seed) {
            let batch = train_set.features().select_rows(&slice);
            let labels: Vec<usize> = slice.iter().map(|&i| train_set.labels()[i]).collect();
            let losses = trainer.train_minibatch(&batch, &labels)?;
            let member_mean = losses.iter().sum::<f64>() / losses.len() as f64;
            weighted += member_mean * slice.len() as f64;
        }
        let (eval_acc, eval_ece) = match &eval {
            Some(spec) => {
                let probs = predict(trainer.ensemble(), spec.data.features())?;
                let report = calibration::evaluate(
                    &probs,
                    spec.data.labels(),
                    spec.bins,
                    trainer.ensemble().class_count(),
                    spec.weighting,
                )?;
                (Some(report.accuracy), Some(report.ece))
            }
            None => (None, None),
        };
        log.epochs.push(EpochRecord {
            epoch: epoch + 1,
            train_loss: weighted / n as f64,
            eval_acc,
            eval_ece,
        });
    }
    Ok((trainer.into_ensemble(), log))
}

fn check_dataset(ensemble: &Ensemble, data: &Dataset, what: &str) -> Result<()> {
    if data.dim() != ensemble.input_dim() {
        return Err(Error::Shape(format!(
            "{what} data has {} features, network input is {}",
            data.dim(),
            ensemble.input_dim()
        )));
    }
    if data.class_count() > ensemble.class_count() {
        return Err(Error::InvalidConfig(format!(
            "{what} data has {} classes, network outputs {}",
            data.class_count(),
            ensemble.class_count()
        )));
    }
    Ok(())
}

/// Each member's probabilities on `batch`.
pub fn member_predictions(ensemble: &Ensemble, batch: &Matrix) -> Result<Vec<Matrix>> {
    ensemble
        .members
        .par_iter()
        .map(|m| forward(m, batch).map(ForwardCache::into_probs))
        .collect()
}

/// Mean member probabilities.
pub fn predict(ensemble: &Ensemble, batch: &Matrix) -> Result<Matrix> {
    ensemble_mean(&member_predictions(ensemble, batch)?)
}
