// Shared helpers for the integration tests: finite-difference gradient checks
// and the blob calibration experiment.
#![allow(dead_code)]

use ncens::calibration::{evaluate, EceWeighting};
use ncens::data::{blob_centers, gen_blobs, sample_blobs, BlobSpec};
use ncens::ensemble::{nc_div_with_mean, predict, train, EnsembleConfig, MemberBatchOutputs};
use ncens::nn::{backward, cross_entropy, forward};
use ncens::rng::{seeded_rng, Gaussian};
use ncens::{Activation, Matrix, NetworkParams, SgdConfig};
use rand::Rng;

pub const FD_STEP: f64 = 1e-5;

/// Relative error with a floor so that near-zero gradients compare absolutely.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut g = Gaussian::new(seeded_rng(seed));
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| g.standard()).collect()).unwrap()
}

pub fn random_labels(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = seeded_rng(seed);
    (0..n).map(|_| rng.gen_range(0..k)).collect()
}

pub fn perturbed(params: &NetworkParams, index: usize, delta: f64) -> NetworkParams {
    let mut p = params.clone();
    let mut seen = 0;
    p.for_each_param_mut(|v| {
        if seen == index {
            *v += delta;
        }
        seen += 1;
    });
    p
}

/// Batch-mean `E_i` for member `i` given its parameters, with every other
/// member's output and the ensemble mean held at `frozen`.
pub fn member_objective(
    member: &NetworkParams,
    batch: &Matrix,
    labels: &[usize],
    frozen: &MemberBatchOutputs,
    i: usize,
    lambda: f64,
) -> f64 {
    let h = forward(member, batch).unwrap().into_probs();
    let mut total = 0.0;
    for (b, &y) in labels.iter().enumerate() {
        let rows: Vec<&[f64]> = frozen.member_probs.iter().map(|p| p.row(b)).collect();
        let div = nc_div_with_mean(h.row(b), &rows, i, frozen.mean.row(b)).unwrap();
        total += cross_entropy(h.row(b), y).unwrap() + lambda * div;
    }
    total / labels.len() as f64
}

/// Largest relative error between backprop and central differences for the
/// member loss of member `i` in a random ensemble.
pub fn member_gradient_error(
    layers: &[usize],
    activation: Activation,
    members: usize,
    lambda: f64,
    batch_size: usize,
    seed: u64,
) -> f64 {
    let nets: Vec<NetworkParams> = (0..members)
        .map(|m| NetworkParams::init(layers, activation, seed * 31 + m as u64).unwrap())
        .collect();
    let batch = gaussian_matrix(batch_size, layers[0], seed + 7_000);
    let labels = random_labels(batch_size, *layers.last().unwrap(), seed + 9_000);
    let outputs = MemberBatchOutputs::new(
        nets.iter()
            .map(|n| forward(n, &batch).unwrap().into_probs())
            .collect(),
    )
    .unwrap();
    let i = (seed as usize) % members;
    let cache = forward(&nets[i], &batch).unwrap();
    let extra = outputs.penalty_gradient(i, lambda);
    let grads = backward(&nets[i], &cache, &labels, Some(&extra))
        .unwrap()
        .flatten();

    let mut worst: f64 = 0.0;
    for (p, &analytic) in grads.iter().enumerate() {
        let up = member_objective(
            &perturbed(&nets[i], p, FD_STEP),
            &batch,
            &labels,
            &outputs,
            i,
            lambda,
        );
        let down = member_objective(
            &perturbed(&nets[i], p, -FD_STEP),
            &batch,
            &labels,
            &outputs,
            i,
            lambda,
        );
        let numeric = (up - down) / (2.0 * FD_STEP);
        worst = worst.max(rel_err(analytic, numeric));
    }
    worst
}

/// The pinned blob task: 5 classes in 2-D, 200 training points per class.
pub const BLOB_STD: f64 = 0.8;
pub const BLOB_SPREAD: f64 = 3.0;
pub const FRESH_TEST_PER_CLASS: usize = 2000;
pub const HIDDEN: usize = 32;
pub const LAMBDA: f64 = 0.1;
pub const BINS: usize = 10;

pub fn desk_sgd() -> SgdConfig {
    SgdConfig {
        learning_rate: 0.05,
        momentum: 0.9,
        epochs: 100,
        batch_size: 16,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunScore {
    pub accuracy: f64,
    pub ece: f64,
}

fn blob_spec(seed: u64) -> BlobSpec {
    BlobSpec {
        classes: 5,
        per_class: 200,
        dim: 2,
        center_spread: BLOB_SPREAD,
        cluster_std: BLOB_STD,
        seed,
    }
}

/// Trains on the blob draw for `seed` and scores each `(M, λ)` variant on a
/// large fresh sample from the same class centers.
pub fn blob_runs(seed: u64, variants: &[(usize, f64)]) -> Vec<RunScore> {
    let spec = blob_spec(seed);
    let train_set = gen_blobs(&spec).unwrap();
    let centers = blob_centers(&spec).unwrap();
    let test = sample_blobs(&spec, &centers, FRESH_TEST_PER_CLASS, seed + 10_000).unwrap();
    variants
        .iter()
        .map(|&(m, lambda)| {
            let cfg = EnsembleConfig::seeded(m, lambda, desk_sgd(), 1000 + 100 * seed);
            let (model, _) =
                train(&train_set, &cfg, &[2, HIDDEN, 5], Activation::Relu, None).unwrap();
            let probs = predict(&model, test.features()).unwrap();
            let r = evaluate(&probs, test.labels(), BINS, 5, EceWeighting::Standard).unwrap();
            RunScore {
                accuracy: r.accuracy,
                ece: r.ece,
            }
        })
        .collect()
}

/// Runs the `ncens` binary and returns its exit code, stdout and stderr.
pub fn ncens(args: &[&str]) -> (i32, String, String) {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_ncens"))
        .args(args)
        .env("NC_ENSEMBLE_THREADS", "1")
        .output()
        .expect("spawn ncens");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

pub fn run_config_json(mode: &str, members: usize, lambda: f64, epochs: usize) -> String {
    format!(
        r#"{{"mode":"{mode}","layer_sizes":[2,16,5],"M":{members},"lambda":{lambda},
"sgd":{{"lr":0.05,"momentum":0.9,"epochs":{epochs},"batch_size":16}},"seed":11}}"#
    )
}
