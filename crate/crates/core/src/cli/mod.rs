//! `ncens` command line: `gen | train | evaluate | report | compare`.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 1 for
//! runtime failures (I/O, malformed files). `NC_ENSEMBLE_THREADS` caps the
//! worker pool used for per-member work; 0 or unset means automatic.

pub mod compare;
pub mod config;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::calibration::{self, EceWeighting, EvaluationReport, RunInfo};
use crate::data::{self, BlobSpec, Dataset, LabelColumn};
use crate::ensemble::{self, Ensemble, EvalSpec};
use crate::error::{Error, Result};
use crate::io::{read_to_string, write_atomic};
use crate::svg;

use self::compare::{CompareTable, DEFAULT_FLAG_THRESHOLD};
use self::config::{Mode, RunConfig};

pub const THREADS_ENV: &str = "NC_ENSEMBLE_THREADS";
pub const ENSEMBLE_FILE: &str = "ensemble.json";
pub const LOG_FILE: &str = "training_log.csv";
pub const RUN_CONFIG_FILE: &str = "run_config.json";

#[derive(Debug, Parser)]
#[command(
    name = "ncens",
    version,
    about = "Negative-correlation ensembles and calibration reports"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset as CSV.
    Gen(GenArgs),
    /// Train a single network, a pure ensemble or an NC ensemble.
    Train(TrainArgs),
    /// Evaluate a trained model and write metrics JSON.
    Evaluate(EvaluateArgs),
    /// Export reliability/histogram CSVs and an optional SVG from metrics JSON.
    Report(ReportArgs),
    /// Tabulate accuracy and ECE across several metrics files.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DataKind {
    Blobs,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value = "blobs")]
    pub kind: DataKind,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub classes: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub per_class: u64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub dim: u64,
    #[arg(long, default_value_t = 1.0)]
    pub std: f64,
    #[arg(long, default_value_t = 3.0)]
    pub spread: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Hold out this fraction of samples into `--test-out`.
    #[arg(long, requires = "test_out")]
    pub test_fraction: Option<f64>,
    #[arg(long, requires = "test_fraction")]
    pub test_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Training CSV; overrides `train_data` in the config.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Held-out CSV evaluated after every epoch; overrides `eval_data`.
    #[arg(long)]
    pub eval_data: Option<PathBuf>,
    #[arg(long)]
    pub label_col: Option<String>,
    /// Model directory to create.
    #[arg(long)]
    pub out: PathBuf,
    /// Replace the configured lambda, bypassing the mode/lambda pairing check.
    #[arg(long)]
    pub force_lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = calibration::DEFAULT_BINS as u64, value_parser = clap::value_parser!(u64).range(1..))]
    pub bins: u64,
    #[arg(long, value_enum)]
    pub ece_weighting: Option<WeightingArg>,
    #[arg(long, default_value = "label")]
    pub label_col: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WeightingArg {
    Standard,
    Paper,
}

impl From<WeightingArg> for EceWeighting {
    fn from(w: WeightingArg) -> Self {
        match w {
            WeightingArg::Standard => EceWeighting::Standard,
            WeightingArg::Paper => EceWeighting::Paper,
        }
    }
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub metrics: PathBuf,
    /// Directory for reliability.csv and histogram.csv (default: next to the metrics file).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Two or more metrics.json files.
    #[arg(required = true, num_args = 2..)]
    pub metrics: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_FLAG_THRESHOLD)]
    pub flag_threshold: f64,
    /// Add per-class `acc (conf)` columns.
    #[arg(long)]
    pub per_class: bool,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    configure_threads();
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                2
            } else {
                1
            }
        }
    }
}

fn configure_threads() {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    if threads > 0 {
        // Fails only if the pool already exists, which is fine for repeated in-process runs.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Report(a) => cmd_report(&a),
        Command::Compare(a) => cmd_compare(&a),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text
}

pub fn cmd_gen(a: &GenArgs) -> Result<()> {
    let spec = match a.kind {
        DataKind::Blobs => BlobSpec {
            classes: a.classes as usize,
            per_class: a.per_class as usize,
            dim: a.dim as usize,
            center_spread: a.spread,
            cluster_std: a.std,
            seed: a.seed,
        },
    };
    let dataset = data::gen_blobs(&spec)?;
    match (a.test_fraction, &a.test_out) {
        (Some(fraction), Some(test_out)) => {
            let (train, test) = data::shuffle_split(&dataset, fraction, a.seed)?;
            data::save_csv(&train, &a.out)?;
            data::save_csv(&test, test_out)?;
            println!(
                "wrote {} training rows to {} and {} test rows to {}",
                train.len(),
                a.out.display(),
                test.len(),
                test_out.display()
            );
        }
        _ => {
            data::save_csv(&dataset, &a.out)?;
            println!("wrote {} rows to {}", dataset.len(), a.out.display());
        }
    }
    Ok(())
}

fn load(path: &Path, label_col: &str) -> Result<Dataset> {
    let column: LabelColumn = label_col.parse().expect("infallible");
    data::load_csv(path, &column, None)
}

fn resolve_data(cfg: &RunConfig, a: &TrainArgs) -> Result<(Dataset, Option<Dataset>)> {
    let label_col = a
        .label_col
        .clone()
        .or_else(|| cfg.label_col.clone())
        .unwrap_or_else(|| "label".into());
    let train_path = a.data.clone().or_else(|| cfg.train_data.clone());
    let eval_path = a.eval_data.clone().or_else(|| cfg.eval_data.clone());
    match (train_path, &cfg.blobs) {
        (Some(path), _) => {
            let train = load(&path, &label_col)?;
            let eval = eval_path.map(|p| load(&p, &label_col)).transpose()?;
            Ok((train, eval))
        }
        (None, Some(spec)) => {
            let all = data::gen_blobs(spec)?;
            match cfg.test_fraction {
                Some(f) => {
                    let (train, test) = data::shuffle_split(&all, f, spec.seed)?;
                    Ok((train, Some(test)))
                }
                None => Ok((all, None)),
            }
        }
        (None, None) => Err(Error::InvalidConfig(
            "no training data: pass --data or set `train_data` or `blobs` in the config".into(),
        )),
    }
}

pub fn cmd_train(a: &TrainArgs) -> Result<()> {
    let mut cfg = RunConfig::from_json(&read_to_string(&a.config)?)?;
    if let Some(lambda) = a.force_lambda {
        cfg.lambda = lambda;
    }
    cfg.validate_with(a.force_lambda.is_some())?;
    let (train, eval) = resolve_data(&cfg, a)?;
    let eval_spec = eval.as_ref().map(|d| EvalSpec {
        data: d,
        bins: cfg.bins,
        weighting: cfg.ece_weighting,
    });
    let (model, log) = ensemble::train(
        &train,
        &cfg.ensemble_config(),
        &cfg.layer_sizes,
        cfg.activation,
        eval_spec,
    )?;

    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    write_atomic(&a.out.join(ENSEMBLE_FILE), to_json(&model).as_bytes())?;
    write_atomic(&a.out.join(LOG_FILE), log.to_csv().as_bytes())?;
    write_atomic(&a.out.join(RUN_CONFIG_FILE), to_json(&cfg).as_bytes())?;
    if let Some(last) = log.epochs.last() {
        println!(
            "trained {} ({} member(s), lambda {}) for {} epochs: train loss {:.4}{}",
            cfg.mode.as_str(),
            cfg.members,
            cfg.lambda,
            log.epochs.len(),
            last.train_loss,
            match (last.eval_acc, last.eval_ece) {
                (Some(acc), Some(e)) =>
                    format!(", eval acc {acc:.4}, ece {}", compare::format_percent(e)),
                _ => String::new(),
            }
        );
    }
    println!("wrote model to {}", a.out.display());
    Ok(())
}

/// Reads `ensemble.json` and, when present, the run configuration saved next to it.
pub fn load_model(dir: &Path) -> Result<(Ensemble, Option<RunConfig>)> {
    let path = dir.join(ENSEMBLE_FILE);
    let model: Ensemble =
        serde_json::from_str(&read_to_string(&path)?).map_err(|e| Error::Format {
            path: path.clone(),
            message: e.to_string(),
        })?;
    let cfg_path = dir.join(RUN_CONFIG_FILE);
    let cfg = if cfg_path.exists() {
        Some(RunConfig::from_json(&read_to_string(&cfg_path)?)?)
    } else {
        None
    };
    Ok((model, cfg))
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let (model, cfg) = load_model(&a.model)?;
    let dataset = load(&a.data, &a.label_col)?;
    let k = model.class_count();
    if dataset.class_count() > k {
        return Err(Error::InvalidConfig(format!(
            "class-count mismatch: {} has labels for {} classes but the model predicts {k}",
            a.data.display(),
            dataset.class_count()
        )));
    }
    if dataset.dim() != model.input_dim() {
        return Err(Error::InvalidConfig(format!(
            "feature mismatch: {} has {} features but the model expects {}",
            a.data.display(),
            dataset.dim(),
            model.input_dim()
        )));
    }
    let weighting = a
        .ece_weighting
        .map(EceWeighting::from)
        .or(cfg.as_ref().map(|c| c.ece_weighting))
        .unwrap_or_default();
    let probs = ensemble::predict(&model, dataset.features())?;
    let mut report =
        calibration::evaluate(&probs, dataset.labels(), a.bins as usize, k, weighting)?;
    let mc = model.config();
    report.run = Some(RunInfo {
        mode: cfg
            .as_ref()
            .map_or_else(|| Mode::infer(mc.member_count, mc.lambda), |c| c.mode)
            .as_str()
            .to_string(),
        members: mc.member_count,
        lambda: mc.lambda,
    });
    write_atomic(&a.out, to_json(&report).as_bytes())?;
    println!(
        "accuracy {:.4}  ece {}  avg class gap {:.3}  -> {}",
        report.accuracy,
        compare::format_percent(report.ece),
        report.avg_class_gap,
        a.out.display()
    );
    Ok(())
}

pub fn load_report(path: &Path) -> Result<EvaluationReport> {
    let report: EvaluationReport =
        serde_json::from_str(&read_to_string(path)?).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    report.check_consistency().map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(report)
}

pub fn reliability_csv(report: &EvaluationReport) -> String {
    let mut out = String::from("bin_mid,acc,con,count\n");
    for r in report.reliability_rows() {
        out.push_str(&format!("{},{},{},{}\n", r.bin_mid, r.acc, r.con, r.count));
    }
    out
}

pub fn histogram_csv(report: &EvaluationReport) -> String {
    let mut out = String::from("bin_lo,bin_hi,count\n");
    for b in report.bins.bins() {
        out.push_str(&format!("{},{},{}\n", b.lo, b.hi, b.count));
    }
    out
}

pub fn cmd_report(a: &ReportArgs) -> Result<()> {
    let report = load_report(&a.metrics)?;
    let dir = a
        .out_dir
        .clone()
        .or_else(|| a.metrics.parent().map(Path::to_path_buf))
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_atomic(
        &dir.join("reliability.csv"),
        reliability_csv(&report).as_bytes(),
    )?;
    write_atomic(
        &dir.join("histogram.csv"),
        histogram_csv(&report).as_bytes(),
    )?;
    if let Some(svg_path) = &a.svg {
        let title = report.run.as_ref().map_or_else(
            || compare::run_name(&a.metrics),
            |r| format!("{} (M={})", r.mode, r.members),
        );
        write_atomic(svg_path, svg::render_report(&report, &title).as_bytes())?;
    }
    println!(
        "wrote reliability.csv and histogram.csv to {}",
        dir.display()
    );
    Ok(())
}

pub fn cmd_compare(a: &CompareArgs) -> Result<()> {
    if a.metrics.len() < 2 {
        return Err(Error::InvalidConfig(
            "compare needs at least two metrics files".into(),
        ));
    }
    if a.flag_threshold.is_nan() || a.flag_threshold < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "--flag-threshold must be non-negative, got {}",
            a.flag_threshold
        )));
    }
    let reports = a
        .metrics
        .iter()
        .map(|p| Ok((compare::run_name(p), load_report(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let table = CompareTable::build(&reports, a.flag_threshold, a.per_class);
    print!("{}", table.to_text());
    if let Some(path) = &a.csv {
        write_atomic(path, table.to_csv().as_bytes())?;
    }
    Ok(())
}
