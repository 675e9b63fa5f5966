//! Acceptance checks, one line per criterion.
//!
//! Runs as a plain binary (no libtest harness) so every criterion reports
//! even when an earlier one fails. Exit status is nonzero if any fails.

mod common;

use std::fs;
use std::panic;
use std::path::Path;
use std::time::Instant;

use common::*;
use ncens::calibration::{
    avg_class_gap, bin_predictions, ece, make_records, per_class_report, ClassCalibrationRow,
    EceWeighting,
};
use ncens::data::minibatches;
use ncens::ensemble::{nc_div, nc_div_grad, train, EnsembleConfig};
use ncens::nn::{backward, forward, sgd_step, softmax, Gradients, Velocity};
use ncens::rng::{seeded_rng, Gaussian};
use ncens::{Activation, BlobSpec, Matrix, NetworkParams, SgdConfig};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// 1. Member-loss gradients against central differences.
fn gradient_correctness() -> Outcome {
    const TOL: f64 = 1e-4;
    let shapes: [&[usize]; 4] = [&[4, 8, 5], &[3, 6, 4], &[2, 5, 3], &[4, 5]];
    let lambdas = [0.0, 0.1, 0.5];
    let mut worst: f64 = 0.0;
    let mut instances = 0;
    for seed in 0..24u64 {
        let layers = shapes[seed as usize % shapes.len()];
        let members = 1 + seed as usize % 5;
        let lambda = lambdas[seed as usize % 3];
        let activation = if seed % 2 == 0 {
            Activation::Tanh
        } else {
            Activation::Relu
        };
        worst = worst.max(member_gradient_error(
            layers, activation, members, lambda, 6, seed,
        ));
        instances += 1;
    }
    check(
        worst < TOL,
        format!("{instances} instances, max relative error {worst:.2e} (tol {TOL:.0e}, step {FD_STEP:.0e})"),
    )
}

fn random_probs(g: &mut Gaussian, k: usize) -> Vec<f64> {
    let z: Vec<f64> = (0..k).map(|_| 2.0 * g.standard()).collect();
    softmax(&z).unwrap()
}

// 2. The diversity term and its gradient.
fn nc_algebra() -> Outcome {
    const TOL: f64 = 1e-12;
    let mut g = Gaussian::new(seeded_rng(2024));
    let mut rng = seeded_rng(77);
    let (mut worst_div, mut worst_sum): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let m = rng.gen_range(1..=8);
        let k = rng.gen_range(1..=10);
        let probs: Vec<Vec<f64>> = (0..m).map(|_| random_probs(&mut g, k)).collect();
        let rows: Vec<&[f64]> = probs.iter().map(Vec::as_slice).collect();
        let mean: Vec<f64> = (0..k)
            .map(|c| probs.iter().map(|p| p[c]).sum::<f64>() / m as f64)
            .collect();
        let mut grad_sum = vec![0.0; k];
        for (i, h) in probs.iter().enumerate() {
            let expected = -h
                .iter()
                .zip(&mean)
                .map(|(h, b)| (h - b) * (h - b))
                .sum::<f64>();
            worst_div = worst_div.max((nc_div(h, &rows, i).unwrap() - expected).abs());
            for (s, v) in grad_sum.iter_mut().zip(nc_div_grad(&rows, i).unwrap()) {
                *s += v;
            }
        }
        worst_sum = worst_sum.max(grad_sum.iter().fold(0.0, |a, v| a.max(v.abs())));
    }
    check(
        worst_div < TOL && worst_sum < TOL,
        format!("1000 ensembles, |div + |h_i - mean|^2| <= {worst_div:.1e}, |sum of grads| <= {worst_sum:.1e} (tol {TOL:.0e})"),
    )
}

// 3. λ = 0 training equals independent networks on the same batch stream.
fn pure_reduction() -> Outcome {
    let spec = BlobSpec {
        classes: 4,
        per_class: 30,
        dim: 3,
        center_spread: 2.0,
        cluster_std: 1.0,
        seed: 5,
    };
    let data = ncens::data::gen_blobs(&spec).unwrap();
    let sgd = SgdConfig {
        learning_rate: 0.05,
        momentum: 0.9,
        epochs: 5,
        batch_size: 7,
    };
    let layers = [3, 10, 4];
    let cfg = EnsembleConfig::seeded(4, 0.0, sgd, 42);
    let (model, _) = train(&data, &cfg, &layers, Activation::Relu, None).unwrap();

    let mut identical = true;
    for (i, member) in model.members().iter().enumerate() {
        let mut net = NetworkParams::init(&layers, Activation::Relu, cfg.member_seeds[i]).unwrap();
        let mut velocity = Velocity::zeros_like(&net);
        for epoch in 0..sgd.epochs {
            for idx in minibatches(&data, sgd.batch_size, cfg.shuffle_seed + epoch as u64) {
                let batch = data.features().select_rows(&idx);
                let labels: Vec<usize> = idx.iter().map(|&j| data.labels()[j]).collect();
                let cache = forward(&net, &batch).unwrap();
                let grads: Gradients = backward(&net, &cache, &labels, None).unwrap();
                sgd_step(&mut net, &grads, &mut velocity, &sgd).unwrap();
            }
        }
        let bits = |p: &NetworkParams| {
            let mut v = Vec::new();
            p.clone().for_each_param_mut(|x| v.push(x.to_bits()));
            v
        };
        identical &= bits(&net) == bits(member);
    }
    check(
        identical,
        format!("{} members compared bit for bit", model.members().len()),
    )
}

/// Neumaier summation, so the oracle's own rounding stays near one ulp.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    }
    sum + comp
}

/// Per-sample ECE: each sample contributes its own bin's gap, weighted 1/n or 1/Q.
fn brute_force_ece(probs: &[Vec<f64>], labels: &[usize], q: usize, weighting: EceWeighting) -> f64 {
    let conf: Vec<f64> = probs
        .iter()
        .map(|p| p.iter().cloned().fold(f64::MIN, f64::max))
        .collect();
    let correct: Vec<f64> = probs
        .iter()
        .zip(labels)
        .map(|(p, &y)| {
            let pred = p
                .iter()
                .position(|&v| v == p.iter().cloned().fold(f64::MIN, f64::max))
                .unwrap();
            if pred == y {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let bin = |c: f64| {
        (0..q)
            .find(|&b| c >= b as f64 / q as f64 && (c < (b + 1) as f64 / q as f64 || b == q - 1))
            .unwrap()
    };
    let bins: Vec<usize> = conf.iter().map(|&c| bin(c)).collect();
    let n = probs.len();
    let per_sample = compensated_sum((0..n).map(|s| {
        let mates: Vec<usize> = (0..n).filter(|&t| bins[t] == bins[s]).collect();
        let acc = mates.iter().map(|&t| correct[t]).sum::<f64>() / mates.len() as f64;
        let con = mates.iter().map(|&t| conf[t]).sum::<f64>() / mates.len() as f64;
        (acc - con).abs()
    }));
    match weighting {
        EceWeighting::Standard => per_sample / n as f64,
        EceWeighting::Paper => per_sample / q as f64,
    }
}

fn binned_ece(probs: &[Vec<f64>], labels: &[usize], q: usize, weighting: EceWeighting) -> f64 {
    let m = Matrix::from_rows(probs).unwrap();
    let bins = bin_predictions(&make_records(&m, labels).unwrap(), q).unwrap();
    ece(&bins, weighting).unwrap()
}

// 4. Binned ECE against the brute-force oracle, and agreement of the two weightings.
fn ece_oracle() -> Outcome {
    const TOL: f64 = 1e-12;
    let mut g = Gaussian::new(seeded_rng(404));
    let mut rng = seeded_rng(405);
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let n = rng.gen_range(1..=500);
        let q = rng.gen_range(1..=20);
        let k = rng.gen_range(2..=6);
        let probs: Vec<Vec<f64>> = (0..n)
            .map(|s| {
                if case % 4 == 0 && s % 3 == 0 {
                    // Two-class rows with the top probability on a bin edge.
                    let c = (q as f64 / 2.0).ceil() as usize + rng.gen_range(0..=q / 2);
                    let top = (c.min(q) as f64 / q as f64).max(0.5);
                    let mut p = vec![0.0; k];
                    p[0] = top;
                    p[1] = 1.0 - top;
                    p
                } else {
                    random_probs(&mut g, k)
                }
            })
            .collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        for w in [EceWeighting::Standard, EceWeighting::Paper] {
            let d =
                (binned_ece(&probs, &labels, q, w) - brute_force_ece(&probs, &labels, q, w)).abs();
            worst = worst.max(d);
        }
    }

    // Equal-count bins: with one sample per bin (n = Q) both weightings
    // coincide exactly; with `count` per bin the |C_i|/Q form is `count` times
    // the standard one.
    let mut agree = true;
    let mut proportional: f64 = 0.0;
    for q in 1..=20 {
        for count in 1..=3 {
            let k = 2 * q + 1;
            let probs: Vec<Vec<f64>> = (0..q * count)
                .map(|s| {
                    let c = ((s / count) as f64 + 0.5) / q as f64;
                    let mut p = vec![(1.0 - c) / (k - 1) as f64; k];
                    p[0] = c;
                    p
                })
                .collect();
            let labels: Vec<usize> = (0..q * count).map(|s| s % 2).collect();
            let m = Matrix::from_rows(&probs).unwrap();
            let bins = bin_predictions(&make_records(&m, &labels).unwrap(), q).unwrap();
            agree &= bins.histogram().iter().all(|&c| c == count);
            let s = ece(&bins, EceWeighting::Standard).unwrap();
            let p = ece(&bins, EceWeighting::Paper).unwrap();
            if count == 1 {
                agree &= s == p;
            }
            proportional = proportional.max((p - count as f64 * s).abs());
        }
    }
    check(
        worst < TOL && agree && proportional < TOL,
        format!(
            "200 instances, max |binned - brute force| {worst:.1e} (tol {TOL:.0e}); \
             weightings agree exactly at one sample per bin; at c per bin |paper - c*standard| <= {proportional:.1e}"
        ),
    )
}

// 5. Per-class average gaps of the three reference rows.
fn per_class_arithmetic() -> Outcome {
    const TOL: f64 = 1e-12;
    // (acc, conf) in hundredths.
    let table: [(&str, [(u32, u32); 5]); 3] = [
        ("single", [(71, 88), (68, 71), (81, 85), (42, 64), (54, 66)]),
        ("pure", [(79, 78), (76, 66), (84, 76), (44, 47), (51, 54)]),
        ("nc", [(79, 78), (68, 68), (83, 78), (51, 52), (57, 59)]),
    ];
    let printed = [0.12, 0.05, 0.02];
    let mut details = Vec::new();
    let mut ok = true;
    for ((name, pairs), shown) in table.iter().zip(printed) {
        // Exact integer oracle: sum of |conf - acc| in hundredths over 5 classes.
        let hundredths: u32 = pairs.iter().map(|&(a, c)| a.abs_diff(c)).sum();
        let oracle = hundredths as f64 / 500.0;

        let rows: Vec<ClassCalibrationRow> = pairs
            .iter()
            .enumerate()
            .map(|(class, &(a, c))| ClassCalibrationRow {
                class,
                count: 100,
                accuracy: a as f64 / 100.0,
                mean_confidence: c as f64 / 100.0,
            })
            .collect();
        let from_rows = avg_class_gap(&rows);

        // 100 predictions per class carrying the given accuracy and confidence.
        let mut probs = Vec::new();
        let mut labels = Vec::new();
        for (class, &(a, c)) in pairs.iter().enumerate() {
            let conf = c as f64 / 100.0;
            for s in 0..100 {
                let predicted = if s < a { class } else { (class + 1) % 5 };
                let mut p = vec![(1.0 - conf) / 4.0; 5];
                p[predicted] = conf;
                probs.push(p);
                labels.push(class);
            }
        }
        let records = make_records(&Matrix::from_rows(&probs).unwrap(), &labels).unwrap();
        let (_, from_records) = per_class_report(&records, 5).unwrap();

        let rounds = ((from_rows * 100.0).round() / 100.0 - shown).abs() < 1e-12;
        ok &= (from_rows - oracle).abs() < TOL && (from_records - oracle).abs() < TOL && rounds;
        details.push(format!("{name} {from_rows:.3}"));
    }
    check(ok, format!("{} (tol {TOL:.0e})", details.join(", ")))
}

struct SweepSeed {
    single: RunScore,
    pure: [RunScore; 3],
    nc: [RunScore; 3],
}

const SWEEP_M: [usize; 3] = [3, 7, 11];
const SEEDS: u64 = 10;

fn blob_sweep() -> Vec<SweepSeed> {
    (0..SEEDS)
        .map(|seed| {
            let mut variants = vec![(1, 0.0)];
            for m in SWEEP_M {
                variants.extend([(m, 0.0), (m, LAMBDA)]);
            }
            let s = blob_runs(seed, &variants);
            SweepSeed {
                single: s[0],
                pure: [s[1], s[3], s[5]],
                nc: [s[2], s[4], s[6]],
            }
        })
        .collect()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

// 6. Single vs pure vs NC at M = 7 on the blob task.
fn directional(sweep: &[SweepSeed]) -> Outcome {
    let m7 = 1;
    let single_acc = mean(sweep.iter().map(|s| s.single.accuracy));
    let single_ece = mean(sweep.iter().map(|s| s.single.ece));
    let pure_acc = mean(sweep.iter().map(|s| s.pure[m7].accuracy));
    let pure_ece = mean(sweep.iter().map(|s| s.pure[m7].ece));
    let nc_acc = mean(sweep.iter().map(|s| s.nc[m7].accuracy));
    let nc_ece = mean(sweep.iter().map(|s| s.nc[m7].ece));
    let wins = sweep
        .iter()
        .filter(|s| s.nc[m7].ece <= s.pure[m7].ece)
        .count();

    let in_range = (0.70..=0.85).contains(&single_acc);
    let a = nc_ece <= pure_ece && wins >= 7;
    let b = (nc_acc - pure_acc).abs() <= 0.02;
    let c = pure_ece < single_ece;
    check(
        in_range && a && b && c,
        format!(
            "single acc {single_acc:.3} ece {single_ece:.4}; pure acc {pure_acc:.3} ece {pure_ece:.4}; \
             nc acc {nc_acc:.3} ece {nc_ece:.4}; nc wins {wins}/{SEEDS} \
             [(a) {a}, (b) {b}, (c) {c}, single acc in 70-85%: {in_range}]"
        ),
    )
}

// 7. ECE gap (pure - nc) as M grows.
fn m_sweep(sweep: &[SweepSeed]) -> Outcome {
    let gaps: Vec<f64> = (0..SWEEP_M.len())
        .map(|j| mean(sweep.iter().map(|s| s.pure[j].ece - s.nc[j].ece)))
        .collect();
    check(
        gaps[2] >= gaps[0],
        format!(
            "mean ECE gap pure - nc: M=3 {:+.5}, M=7 {:+.5}, M=11 {:+.5} (need M=11 >= M=3)",
            gaps[0], gaps[1], gaps[2]
        ),
    )
}

fn cli_ok(args: &[&str]) -> Result<String, String> {
    let (code, out, err) = ncens(args);
    if code == 0 {
        Ok(out)
    } else {
        Err(format!("`ncens {}` exited {code}: {err}", args.join(" ")))
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

// 8. Byte-identical artifacts across repeated runs.
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let (data, cfg) = (d.join("train.csv"), d.join("nc.json"));
    cli_ok(&[
        "gen",
        "--classes",
        "5",
        "--per-class",
        "60",
        "--seed",
        "8",
        "--out",
        p(&data),
    ])?;
    fs::write(&cfg, run_config_json("nc", 3, 0.1, 8)).unwrap();
    let mut models = Vec::new();
    let mut metrics = Vec::new();
    for run in ["a", "b"] {
        let out = d.join(run);
        cli_ok(&[
            "train",
            "--config",
            p(&cfg),
            "--data",
            p(&data),
            "--out",
            p(&out),
        ])?;
        let m = d.join(format!("{run}.json"));
        cli_ok(&[
            "evaluate",
            "--model",
            p(&out),
            "--data",
            p(&data),
            "--out",
            p(&m),
        ])?;
        models.push(fs::read(out.join("ensemble.json")).unwrap());
        metrics.push(fs::read(&m).unwrap());
    }
    check(
        models[0] == models[1] && metrics[0] == metrics[1],
        format!(
            "ensemble.json {} bytes, metrics.json {} bytes, identical: {}/{}",
            models[0].len(),
            metrics[0].len(),
            models[0] == models[1],
            metrics[0] == metrics[1]
        ),
    )
}

fn schema_errors(metrics: &serde_json::Value, q: usize) -> Vec<String> {
    let mut errs = Vec::new();
    for key in ["accuracy", "ece", "avg_class_gap"] {
        if !metrics[key].is_f64() {
            errs.push(format!("`{key}` is not a number"));
        }
    }
    if metrics["q"].as_u64() != Some(q as u64) {
        errs.push("`q` missing".into());
    }
    let bins = metrics["bins"].as_array().map_or(0, Vec::len);
    if bins != q {
        errs.push(format!("{bins} bins"));
    }
    if !metrics["per_class"].as_array().is_some_and(|rows| {
        rows.iter()
            .all(|r| r["acc"].is_f64() && r["conf"].is_f64() && r["count"].is_u64())
    }) {
        errs.push("`per_class` rows malformed".into());
    }
    errs
}

fn csv_shape(path: &Path, header: &str, rows: usize) -> bool {
    let text = fs::read_to_string(path).unwrap_or_default();
    let lines: Vec<&str> = text.lines().collect();
    let width = header.split(',').count();
    lines.first() == Some(&header)
        && lines.len() == rows + 1
        && lines[1..].iter().all(|l| {
            l.split(',').count() == width && l.split(',').all(|c| c.parse::<f64>().is_ok())
        })
}

// 9. gen -> train (three modes) -> evaluate -> report -> compare.
fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let (train_csv, test_csv) = (d.join("train.csv"), d.join("test.csv"));
    cli_ok(&[
        "gen",
        "--classes",
        "5",
        "--per-class",
        "100",
        "--std",
        "0.8",
        "--seed",
        "3",
        "--out",
        p(&train_csv),
        "--test-fraction",
        "0.3",
        "--test-out",
        p(&test_csv),
    ])?;
    let mut problems = Vec::new();
    let mut metric_paths = Vec::new();
    let mut eces = Vec::new();
    for (mode, m, lambda) in [("single", 1, 0.0), ("pure", 3, 0.0), ("nc", 3, 0.1)] {
        let cfg = d.join(format!("{mode}.json"));
        fs::write(&cfg, run_config_json(mode, m, lambda, 10)).unwrap();
        let model = d.join(mode);
        cli_ok(&[
            "train",
            "--config",
            p(&cfg),
            "--data",
            p(&train_csv),
            "--eval-data",
            p(&test_csv),
            "--out",
            p(&model),
        ])?;
        let log = fs::read_to_string(model.join("training_log.csv")).unwrap_or_default();
        if log.lines().count() != 11 || !log.starts_with("epoch,train_loss,eval_acc,eval_ece\n") {
            problems.push(format!("{mode}: training log malformed"));
        }
        let metrics = model.join("metrics.json");
        cli_ok(&[
            "evaluate",
            "--model",
            p(&model),
            "--data",
            p(&test_csv),
            "--out",
            p(&metrics),
        ])?;
        let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&metrics).unwrap())
            .map_err(|e| e.to_string())?;
        problems.extend(
            schema_errors(&value, 10)
                .into_iter()
                .map(|e| format!("{mode}: {e}")),
        );
        if value["run"]["mode"] != mode {
            problems.push(format!("{mode}: run.mode is {}", value["run"]["mode"]));
        }
        eces.push(value["ece"].as_f64().unwrap_or(f64::NAN));

        let svg = model.join("report.svg");
        cli_ok(&["report", "--metrics", p(&metrics), "--svg", p(&svg)])?;
        if !csv_shape(&model.join("reliability.csv"), "bin_mid,acc,con,count", 10)
            || !csv_shape(&model.join("histogram.csv"), "bin_lo,bin_hi,count", 10)
        {
            problems.push(format!("{mode}: report CSVs malformed"));
        }
        let svg_text = fs::read_to_string(&svg).unwrap_or_default();
        if !(svg_text.starts_with("<svg") && svg_text.trim_end().ends_with("</svg>")) {
            problems.push(format!("{mode}: SVG malformed"));
        }
        metric_paths.push(metrics);
    }

    let table_csv = d.join("compare.csv");
    let mut args = vec!["compare", "--per-class", "--csv", p(&table_csv)];
    args.extend(metric_paths.iter().map(|m| p(m)));
    let text = cli_ok(&args)?;
    let rows: Vec<&str> = text.lines().skip(1).take(3).collect();
    for (row, e) in rows.iter().zip(&eces) {
        let cell = row.split_whitespace().nth(4).unwrap_or("");
        let fmt_ok = cell
            .strip_suffix('%')
            .and_then(|v| v.split_once('.'))
            .is_some_and(|(i, f)| {
                !i.is_empty()
                    && i.bytes().all(|b| b.is_ascii_digit())
                    && f.len() == 1
                    && f.as_bytes()[0].is_ascii_digit()
            });
        if !fmt_ok || cell != format!("{:.1}%", 100.0 * e) {
            problems.push(format!("compare ece cell `{cell}` for ece {e}"));
        }
    }
    if rows.len() != 3 {
        problems.push(format!("compare printed {} rows", rows.len()));
    }
    let csv_rows = fs::read_to_string(&table_csv)
        .unwrap_or_default()
        .lines()
        .count();
    if csv_rows != 4 {
        problems.push(format!("compare CSV has {csv_rows} lines"));
    }
    check(
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "three modes, all artifacts valid; compare ECE cells: {}",
                rows.iter()
                    .map(|r| r.split_whitespace().nth(4).unwrap_or(""))
                    .collect::<Vec<_>>()
                    .join(" ")
            )
        } else {
            problems.join("; ")
        },
    )
}

fn main() {
    // Keep every run on one core so the timings compare with a laptop core.
    std::env::set_var("NC_ENSEMBLE_THREADS", "1");
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build_global();

    let mut failures = 0;
    let mut report = |n: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = panic::catch_unwind(panic::AssertUnwindSafe(f))
            .unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {n} {tag} [{name}] {detail} ({secs:.1}s)");
    };

    report(1, "gradient check", &mut gradient_correctness);
    report(2, "diversity algebra", &mut nc_algebra);
    report(3, "pure reduction", &mut pure_reduction);
    report(4, "ECE oracle", &mut ece_oracle);
    report(5, "per-class gaps", &mut per_class_arithmetic);
    let start = Instant::now();
    let sweep = blob_sweep();
    println!(
        "blob sweep: {SEEDS} seeds, M in {SWEEP_M:?}, trained in {:.1}s",
        start.elapsed().as_secs_f64()
    );
    report(6, "single vs pure vs nc", &mut || directional(&sweep));
    report(7, "ensemble size trend", &mut || m_sweep(&sweep));
    report(8, "determinism", &mut determinism);
    report(9, "end-to-end CLI", &mut end_to_end);

    println!("{} of 9 criteria passed", 9 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
