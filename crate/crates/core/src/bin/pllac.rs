//! Command-line front end: data preparation, theta estimation, training,
//! sweeps and evaluation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use pllac::data::{
    generate_candidate_set, load_csv, make_augmented_split, read_features_csv, write_features_csv,
    write_labeled_csv, write_partial, PartialDataset, SplitOptions,
};
use pllac::harness::{
    aggregate, parse_overrides, run_grid, run_trials, write_epoch_lines, ExperimentConfig, GridSpec, JsonLines,
    TrialKind, TrialResult,
};
use pllac::mixprop::{estimate_theta, KmeConfig};
use pllac::model::{load_checkpoint, save_checkpoint};
use pllac::synth::BlobSpec;
use pllac::{eval, harness, seeded_rng, Error, Result};
use serde_json::json;

#[derive(Parser)]
#[command(name = "pllac", version, about = "Partial-label learning with augmented classes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a labeled Gaussian-blob dataset; the augmented blob is labeled `ac`.
    Synth(SynthArgs),
    /// Attach uniformly generated candidate sets to a labeled CSV.
    Inject(InjectArgs),
    /// Build an augmented-class split and write its parts.
    Split(SplitArgs),
    /// Estimate the known-class proportion of an unlabeled sample.
    Theta(ThetaArgs),
    /// Train the risk-penalized estimator for `trials` seeds.
    Train(RunArgs),
    /// Sweep lambda, t, theta, unlabeled_count and shift_alpha (comma lists).
    Grid(GridArgs),
    /// Train the k-way threshold baseline.
    Baseline(RunArgs),
    /// Evaluate a checkpoint on a labeled CSV.
    Eval(EvalArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 3)]
    known_classes: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 6.0)]
    radius: f64,
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
    /// Comma-separated center of the augmented blob; the origin by default.
    #[arg(long)]
    ac_center: Option<String>,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct InjectArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long)]
    out_features: PathBuf,
    #[arg(long)]
    out_candidates: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    /// Label of the class hidden from training, as written in the CSV.
    #[arg(long)]
    ac_class: String,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    #[arg(long)]
    unlabeled_count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ThetaArgs {
    /// Headered CSV of partially labeled features.
    #[arg(long)]
    pll: PathBuf,
    #[arg(long)]
    unlabeled: PathBuf,
    /// Where to write the `lambda,distance` curve.
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long, default_value_t = 6.0)]
    tau: f64,
    #[arg(long, default_value_t = 64)]
    grid: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// `--key value` config overrides.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "pllac")]
    kind: KindArg,
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum KindArg {
    Pllac,
    Unregularized,
    Baseline,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    /// Class names in index order, one per line; labels must be integer
    /// indices when omitted.
    #[arg(long)]
    classes: Option<PathBuf>,
    /// The checkpoint is a `k`-output threshold baseline.
    #[arg(long)]
    baseline: bool,
    #[arg(long, default_value_t = 0.95)]
    threshold: f64,
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut spec = BlobSpec {
        known_classes: a.known_classes,
        dim: a.dim,
        radius: a.radius,
        spread: a.spread,
        ac_center: vec![0.0; a.dim],
        ..BlobSpec::default()
    };
    if let Some(c) = a.ac_center {
        spec.ac_center = c
            .split(',')
            .map(|v| v.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad ac center {c:?}"))))
            .collect::<Result<_>>()?;
    }
    let data = spec.labeled(a.n, a.seed)?;
    let mut names: Vec<String> = (0..a.known_classes).map(|c| c.to_string()).collect();
    names.push("ac".into());
    write_labeled_csv(&a.out, data.features.view(), &data.labels, &names)?;
    info!("wrote {} rows to {}", data.n(), a.out.display());
    Ok(())
}

fn inject(a: InjectArgs) -> Result<()> {
    let data = load_csv(&a.data, &a.label_column)?;
    let mut rng = seeded_rng(a.seed);
    let sets = data
        .labels
        .iter()
        .map(|&y| generate_candidate_set(y, data.k, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let partial = PartialDataset::new(data.features, sets, data.k)?;
    write_partial(&a.out_features, &a.out_candidates, &partial)?;
    write_text(&a.out_candidates.with_extension("classes.txt"), &(data.class_names.join("\n") + "\n"))
}

fn split(a: SplitArgs) -> Result<()> {
    let data = load_csv(&a.data, &a.label_column)?;
    let ac = data
        .class_index(&a.ac_class)
        .ok_or_else(|| Error::InvalidArgument(format!("ac class {:?} not among the labels", a.ac_class)))?;
    let opts = SplitOptions {
        ac_class: ac,
        test_fraction: a.test_fraction,
        unlabeled_count: a.unlabeled_count,
    };
    let s = make_augmented_split(&data, &opts, &mut seeded_rng(a.seed))?;
    create_dir(&a.out)?;
    write_partial(a.out.join("pll_features.csv"), a.out.join("pll_candidates.txt"), &s.pll_train)?;
    write_features_csv(a.out.join("unlabeled.csv"), s.unlabeled.view())?;
    let index_names: Vec<String> = (0..=s.k()).map(|c| c.to_string()).collect();
    write_labeled_csv(a.out.join("test.csv"), s.test_features.view(), &s.test_labels, &index_names)?;
    write_text(&a.out.join("classes.txt"), &(s.class_names.join("\n") + "\n"))?;
    let meta = json!({
        "known_classes": s.k(),
        "pll_rows": s.pll_train.n(),
        "unlabeled_rows": s.unlabeled.nrows(),
        "test_rows": s.test_labels.len(),
        "removed_fraction": s.removed_fraction,
        "class_names": s.class_names,
    });
    write_text(&a.out.join("split.json"), &serde_json::to_string_pretty(&meta)?)?;
    println!("{meta}");
    Ok(())
}

fn theta(a: ThetaArgs) -> Result<()> {
    let pll = read_features_csv(&a.pll)?;
    let un = read_features_csv(&a.unlabeled)?;
    let cfg = KmeConfig {
        tau: a.tau,
        grid_points: a.grid,
        seed: a.seed,
        ..KmeConfig::default()
    };
    let est = estimate_theta(pll.view(), un.view(), &cfg)?;
    if let Some(p) = &a.curve {
        est.write_curve_csv(p)?;
    }
    println!("{}", json!({"theta_hat": est.theta_hat, "bandwidth": est.bandwidth}));
    Ok(())
}

fn trial_line(trial: usize, r: &TrialResult) -> serde_json::Value {
    json!({
        "trial": trial,
        "seed": r.seed,
        "theta_hat": r.theta_hat,
        "accuracy": r.report.accuracy,
        "macro_f1": r.report.macro_f1,
        "macro_auc": r.report.macro_auc,
        "report": r.report,
        "wall_time_secs": r.wall_time_secs,
        "diverged_at_epoch": r.diverged_at_epoch,
        "removed_fraction": r.removed_fraction,
    })
}

fn run(args: RunArgs, kind: TrialKind) -> Result<()> {
    let overrides = parse_overrides(&args.overrides)?;
    let cfg = ExperimentConfig::load(args.config.as_deref(), &overrides)?;
    create_dir(&args.out)?;
    write_text(&args.out.join("config.txt"), &cfg.to_config_string())?;
    let results = run_trials(&cfg, kind);
    let mut epochs = JsonLines::create(args.out.join("epochs.jsonl"))?;
    write_epoch_lines(&mut epochs, 0, &results)?;
    let mut trials = JsonLines::create(args.out.join("trials.jsonl"))?;
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(r) => {
                trials.write(&trial_line(i, r))?;
                if let Some(p) = &r.params {
                    save_checkpoint(args.out.join(format!("trial{i}.ckpt")), p)?;
                }
                if let Some(t) = r.theta.as_ref().filter(|t| !t.curve.is_empty()) {
                    t.write_curve_csv(args.out.join(format!("theta_curve_trial{i}.csv")))?;
                }
            }
            Err(e) => trials.write(&json!({"trial": i, "error": e.to_string()}))?,
        }
    }
    trials.flush()?;
    let summary = aggregate(&results);
    write_text(&args.out.join("summary.json"), &serde_json::to_string_pretty(&summary)?)?;
    println!("{}", serde_json::to_string(&summary)?);
    if summary.trials_ok == 0 {
        return Err(Error::InvalidArgument(format!("every trial failed: {:?}", summary.failures)));
    }
    Ok(())
}

fn grid(a: GridArgs) -> Result<()> {
    let overrides = parse_overrides(&a.overrides)?;
    let spec = GridSpec::load(a.config.as_deref(), &overrides)?;
    let kind = match a.kind {
        KindArg::Pllac => TrialKind::Pllac,
        KindArg::Unregularized => TrialKind::Unregularized,
        KindArg::Baseline => TrialKind::Baseline,
    };
    create_dir(&a.out)?;
    let mut cells = JsonLines::create(a.out.join("cells.jsonl"))?;
    let mut epochs = JsonLines::create(a.out.join("epochs.jsonl"))?;
    let total = spec.cells().len();
    run_grid(&spec, kind, |summary, results| {
        info!("cell {}/{} done", summary.cell + 1, total);
        cells.write(summary)?;
        cells.flush()?;
        write_epoch_lines(&mut epochs, summary.cell, results)
    })?;
    Ok(())
}

fn evaluate(a: EvalArgs) -> Result<()> {
    let params = load_checkpoint(&a.checkpoint)?;
    let data = load_csv(&a.data, &a.label_column)?;
    let names: Option<Vec<String>> = match &a.classes {
        Some(p) => Some(
            fs::read_to_string(p)
                .map_err(|e| Error::InvalidArgument(format!("{}: {e}", p.display())))?
                .lines()
                .map(|l| l.trim().to_string())
                .filter(|l| !l.is_empty())
                .collect(),
        ),
        None => None,
    };
    let truth = data
        .labels
        .iter()
        .map(|&l| {
            let name = &data.class_names[l];
            match &names {
                Some(n) => n.iter().position(|x| x == name),
                None => name.parse().ok(),
            }
            .ok_or_else(|| Error::InvalidArgument(format!("label {name:?} has no class index")))
        })
        .collect::<Result<Vec<usize>>>()?;
    let report = if a.baseline {
        harness::evaluate_threshold(&params, data.features.view(), &truth, a.threshold)?
    } else {
        eval::evaluate_model(&params, data.features.view(), &truth)?
    };
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Inject(a) => inject(a),
        Command::Split(a) => split(a),
        Command::Theta(a) => theta(a),
        Command::Train(a) => run(a, TrialKind::Pllac),
        Command::Grid(a) => grid(a),
        Command::Baseline(a) => run(a, TrialKind::Baseline),
        Command::Eval(a) => evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
