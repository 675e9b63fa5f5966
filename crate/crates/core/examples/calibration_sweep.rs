//! Single network vs pure ensemble vs NC ensemble on seeded Gaussian blobs.
//!
//! cargo run --release --example calibration_sweep -- [members] [seeds] [std] [epochs] [lambda] [lr] [batch] [test_fraction] [momentum] [relu|tanh] [fresh_test_per_class]

use ncens::calibration::{evaluate, EceWeighting};
use ncens::data::{blob_centers, gen_blobs, sample_blobs, shuffle_split, BlobSpec};
use ncens::ensemble::{predict, train, EnsembleConfig};
use ncens::{Activation, SgdConfig};

fn main() -> ncens::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: f64| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let members = arg(0, 7.0) as usize;
    let seeds = arg(1, 10.0) as u64;
    let std = arg(2, 1.0);
    let epochs = arg(3, 30.0) as usize;
    let lambda = arg(4, 0.1);
    let sgd = SgdConfig {
        learning_rate: arg(5, 0.05),
        momentum: arg(8, 0.9),
        epochs,
        batch_size: arg(6, 32.0) as usize,
    };
    let test_fraction = arg(7, 0.5);
    let activation = if args.get(9).map(String::as_str) == Some("tanh") {
        Activation::Tanh
    } else {
        Activation::Relu
    };

    let mut totals = [[0.0; 3]; 3];
    let mut nc_wins = 0;
    println!("seed  single acc/ece    pure acc/ece      nc acc/ece");
    for s in 0..seeds {
        let spec = BlobSpec {
            classes: 5,
            per_class: 200,
            dim: 2,
            center_spread: 3.0,
            cluster_std: std,
            seed: s,
        };
        let fresh = arg(10, 0.0) as usize;
        let (tr, te) = if fresh > 0 {
            let centers = blob_centers(&spec)?;
            let all = gen_blobs(&spec)?;
            let train_part = if test_fraction > 0.0 {
                shuffle_split(&all, test_fraction, s)?.0
            } else {
                all
            };
            (
                train_part,
                sample_blobs(&spec, &centers, fresh, s + 10_000)?,
            )
        } else {
            shuffle_split(&gen_blobs(&spec)?, test_fraction, s)?
        };
        let seed = 1000 + 100 * s;
        let mut row = Vec::new();
        for (m, l) in [(1, 0.0), (members, 0.0), (members, lambda)] {
            let cfg = EnsembleConfig::seeded(m, l, sgd, seed);
            let (model, _) = train(&tr, &cfg, &[2, 32, 5], activation, None)?;
            let probs = predict(&model, te.features())?;
            let r = evaluate(&probs, te.labels(), 10, 5, EceWeighting::Standard)?;
            let conf = r
                .bins
                .bins()
                .iter()
                .map(|b| b.count as f64 * b.con)
                .sum::<f64>()
                / te.len() as f64;
            row.push((r.accuracy, r.ece, conf));
        }
        for (t, (a, e, c)) in totals.iter_mut().zip(&row) {
            t[0] += a;
            t[1] += e;
            t[2] += c;
        }
        if row[2].1 <= row[1].1 {
            nc_wins += 1;
        }
        println!(
            "{s:>4}  {:.3}/{:.4}     {:.3}/{:.4}     {:.3}/{:.4}",
            row[0].0, row[0].1, row[1].0, row[1].1, row[2].0, row[2].1,
        );
    }
    let n = seeds as f64;
    println!(
        "mean  {:.3}/{:.4}     {:.3}/{:.4}     {:.3}/{:.4}   nc wins {nc_wins}/{seeds}",
        totals[0][0] / n,
        totals[0][1] / n,
        totals[1][0] / n,
        totals[1][1] / n,
        totals[2][0] / n,
        totals[2][1] / n
    );
    println!(
        "mean confidence − accuracy: single {:+.4}  pure {:+.4}  nc {:+.4}",
        (totals[0][2] - totals[0][0]) / n,
        (totals[1][2] - totals[1][0]) / n,
        (totals[2][2] - totals[2][0]) / n
    );
    Ok(())
}
