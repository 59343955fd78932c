//! Command-line front end: `train`, `eval`, `cv`, `sweep`, `synth`, `inspect`.
//!
//! Exit codes: 0 on success, 2 for usage errors (bad flags or values,
//! missing manifest), 1 for runtime failures. Errors are reported on stderr
//! as a single `error kind=<kind> msg=<json string>` line.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::TrainConfig;
use crate::data::{fold_for_session, read_header, synth_dataset, Dataset, Manifest, SynthConfig};
use crate::error::Error;
use crate::harness::{cross_validate, evaluate, single_fold, sweep, train_fold, SweepGrid, SweepMode};
use crate::harness::metrics::{accuracy_from_confusion, ua_from_confusion};
use crate::harness::train::FoldResult;
use crate::harness::CvResult;
use crate::model::SavedModel;
use crate::pooling::PoolingMethod;
use crate::report;

#[derive(Debug, Parser)]
#[command(name = "corrpool", version, about = "Pooling heads for speech emotion recognition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train on all sessions but one and save the selected model.
    Train(TrainArgs),
    /// Evaluate a saved model on a manifest.
    Eval(EvalArgs),
    /// Leave-one-session-out cross-validation.
    Cv(CvArgs),
    /// Grid sweep over heads, dropout and label smoothing.
    Sweep(SweepArgs),
    /// Generate the synthetic correlation dataset.
    Synth(SynthArgs),
    /// Print the header of an LSF1 feature file.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// JSON-lines manifest; feature paths are relative to its directory.
    #[arg(long)]
    manifest: PathBuf,
    /// Map raw IEMOCAP annotations onto the four-class task.
    #[arg(long)]
    iemocap: bool,
    /// Explicit class order (comma separated).
    #[arg(long, value_delimiter = ',')]
    class_names: Option<Vec<String>>,
}

#[derive(Debug, Args, Default)]
struct HyperArgs {
    /// JSON file with TrainConfig keys; explicit flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    pooling: Option<String>,
    #[arg(long)]
    heads: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    label_smoothing: Option<f64>,
    #[arg(long)]
    dv: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    grad_clip: Option<f64>,
    #[arg(long)]
    val_fraction: Option<f64>,
    #[arg(long)]
    label_noise: Option<f64>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Session held out for testing (defaults to the first session).
    #[arg(long)]
    fold: Option<u32>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    /// `model.json` written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Only evaluate utterances of this session.
    #[arg(long)]
    fold: Option<u32>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Run only the fold holding out this session.
    #[arg(long)]
    fold: Option<u32>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long, value_delimiter = ',')]
    grid_heads: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    grid_dropout: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    grid_label_smoothing: Vec<f64>,
    /// Evaluate every cell on this held-out session instead of full CV.
    #[arg(long)]
    fold: Option<u32>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 50)]
    per_class: usize,
    #[arg(long, default_value_t = 5)]
    sessions: usize,
    #[arg(long, default_value_t = 80)]
    t_min: usize,
    #[arg(long, default_value_t = 120)]
    t_max: usize,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 3)]
    layers: usize,
    #[arg(long, default_value_t = 0.5)]
    segment_fraction: f64,
    #[arg(long, default_value_t = 0.95)]
    rho: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct InspectArgs {
    path: PathBuf,
}

/// Failure classified by exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn error_line(kind: &str, msg: &str) -> String {
    let first = msg.lines().next().unwrap_or_default();
    format!("error kind={kind} msg={}", serde_json::Value::from(first))
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let msg = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            eprintln!("{}", error_line("usage", msg));
            return 2;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("{}", error_line("usage", &msg));
            2
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("{}", error_line(e.kind(), &e.to_string()));
            1
        }
    }
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Cv(a) => cmd_cv(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Inspect(a) => cmd_inspect(a),
    }
}

/// Defaults, then the config file, then explicit flags; validated.
fn resolve_config(h: &HyperArgs) -> CliResult<TrainConfig> {
    let mut c = match &h.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str::<TrainConfig>(&text)
                .map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?
        }
        None => TrainConfig::default(),
    };
    if let Some(p) = &h.pooling {
        c.pooling = p
            .parse::<PoolingMethod>()
            .map_err(|e| usage(e.to_string()))?;
    }
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = h.$field { c.$field = v; })* };
    }
    set!(heads, dropout, label_smoothing, dv, epsilon, lr, epochs, batch, seed, val_fraction, label_noise);
    if h.grad_clip.is_some() {
        c.grad_clip = h.grad_clip;
    }
    c.validate().map_err(|e| usage(e.to_string()))?;
    Ok(c)
}

fn check_threads(threads: usize) -> CliResult<()> {
    if threads == 0 {
        return Err(usage("--threads must be at least 1"));
    }
    Ok(())
}

fn load_manifest(d: &DataArgs) -> CliResult<Manifest> {
    if !d.manifest.is_file() {
        return Err(usage(format!("manifest not found: {}", d.manifest.display())));
    }
    let manifest = if d.iemocap {
        Manifest::load_iemocap(&d.manifest)?
    } else {
        Manifest::load(&d.manifest, d.class_names.clone())?
    };
    Ok(manifest)
}

fn prepare_out(out: &Path) -> CliResult<()> {
    fs::create_dir_all(out).map_err(|e| Failure::Runtime(Error::Io {
        path: out.display().to_string(),
        source: e,
    }))
}

fn data_json(d: &DataArgs, manifest: &Manifest) -> serde_json::Value {
    json!({
        "manifest": d.manifest,
        "iemocap": d.iemocap,
        "class_names": manifest.class_names,
    })
}

fn cmd_train(a: TrainArgs) -> CliResult<()> {
    let config = resolve_config(&a.hyper)?;
    let manifest = load_manifest(&a.data)?;
    let session = match a.fold {
        Some(s) => s,
        None => *manifest
            .sessions()
            .first()
            .ok_or_else(|| usage("manifest is empty"))?,
    };
    prepare_out(&a.out)?;
    report::write_json(
        a.out.join("config.resolved.json"),
        &json!({
            "command": "train",
            "data": data_json(&a.data, &manifest),
            "fold": session,
            "train": config,
        }),
    )?;
    let data = Dataset::load(manifest)?;
    let fold = fold_for_session(&data.manifest, session, config.val_fraction, config.seed)?;
    let (params, result) = train_fold(&data, &fold, &config)?;
    let model = SavedModel {
        class_names: data.manifest.class_names.clone(),
        config: config.clone(),
        params,
    };
    model.save(a.out.join("model.json"))?;
    let cv = CvResult::from_folds(config.pooling, vec![result]);
    report::write_cv(&a.out, &cv, &data.manifest.class_names)?;
    print!("{}", report::fold_table(&cv));
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> CliResult<()> {
    if !a.model.is_file() {
        return Err(usage(format!("model not found: {}", a.model.display())));
    }
    let model = SavedModel::load(&a.model)?;
    let manifest = load_manifest(&a.data)?;
    if manifest.class_names != model.class_names {
        return Err(Failure::Runtime(Error::Config(format!(
            "manifest classes {:?} differ from model classes {:?}",
            manifest.class_names, model.class_names
        ))));
    }
    prepare_out(&a.out)?;
    report::write_json(
        a.out.join("config.resolved.json"),
        &json!({
            "command": "eval",
            "data": data_json(&a.data, &manifest),
            "model": a.model,
            "fold": a.fold,
        }),
    )?;
    let data = Dataset::load(manifest)?;
    let which: Vec<usize> = (0..data.stacks.len())
        .filter(|&i| a.fold.is_none_or(|s| data.manifest.records[i].session == s))
        .collect();
    if which.is_empty() {
        return Err(usage("no utterances selected for evaluation"));
    }
    let confusion = evaluate(&model.params, &data, &which)?;
    let result = FoldResult {
        fold: a.fold.unwrap_or(0),
        test_ua: ua_from_confusion(&confusion)?,
        test_accuracy: accuracy_from_confusion(&confusion),
        val_ua: f64::NAN,
        best_epoch: 0,
        confusion,
        epoch_losses: Vec::new(),
    };
    let cv = CvResult::from_folds(model.params.method, vec![result]);
    report::write_cv(&a.out, &cv, &data.manifest.class_names)?;
    print!("{}", report::cv_table(std::slice::from_ref(&cv)));
    Ok(())
}

fn cmd_cv(a: CvArgs) -> CliResult<()> {
    let config = resolve_config(&a.hyper)?;
    check_threads(a.threads)?;
    let manifest = load_manifest(&a.data)?;
    prepare_out(&a.out)?;
    report::write_json(
        a.out.join("config.resolved.json"),
        &json!({
            "command": "cv",
            "data": data_json(&a.data, &manifest),
            "fold": a.fold,
            "threads": a.threads,
            "train": config,
        }),
    )?;
    let data = Dataset::load(manifest)?;
    let result = match a.fold {
        Some(s) => single_fold(&data, &config, s)?,
        None => cross_validate(&data, &config, a.threads)?,
    };
    report::write_cv(&a.out, &result, &data.manifest.class_names)?;
    print!("{}", report::fold_table(&result));
    print!("{}", report::cv_table(std::slice::from_ref(&result)));
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> CliResult<()> {
    let config = resolve_config(&a.hyper)?;
    check_threads(a.threads)?;
    let grid = SweepGrid {
        heads: a.grid_heads.clone(),
        dropout: a.grid_dropout.clone(),
        label_smoothing: a.grid_label_smoothing.clone(),
    };
    // every cell must be a valid config before any training starts
    let cells = grid.cells(&config).map_err(|e| usage(e.to_string()))?;
    for c in &cells {
        c.validate().map_err(|e| usage(e.to_string()))?;
    }
    let manifest = load_manifest(&a.data)?;
    prepare_out(&a.out)?;
    let mode = a.fold.map_or(SweepMode::CrossValidate, SweepMode::Session);
    report::write_json(
        a.out.join("config.resolved.json"),
        &json!({
            "command": "sweep",
            "data": data_json(&a.data, &manifest),
            "grid": grid,
            "mode": mode,
            "threads": a.threads,
            "train": config,
        }),
    )?;
    let data = Dataset::load(manifest)?;
    let result = sweep(&data, &config, &grid, mode, a.threads)?;
    report::write_sweep(&a.out, &result)?;
    print!("{}", report::sweep_table(&result));
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> CliResult<()> {
    let cfg = SynthConfig {
        classes: a.classes,
        per_class: a.per_class,
        sessions: a.sessions,
        t_min: a.t_min,
        t_max: a.t_max,
        dim: a.dim,
        n_layers: a.layers,
        segment_fraction: a.segment_fraction,
        rho: a.rho,
        seed: a.seed,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let data = synth_dataset(&cfg)?;
    data.write_to(&a.out)?;
    report::write_json(a.out.join("synth.json"), &cfg)?;
    println!(
        "wrote {} utterances to {}",
        data.stacks.len(),
        a.out.join("manifest.jsonl").display()
    );
    Ok(())
}

fn cmd_inspect(a: InspectArgs) -> CliResult<()> {
    if !a.path.is_file() {
        return Err(usage(format!("file not found: {}", a.path.display())));
    }
    let h = read_header(&a.path)?;
    println!(
        "n_layers={} frames={} dim={} payload_bytes={}",
        h.n_layers,
        h.frames,
        h.dim,
        h.payload_bytes()
    );
    Ok(())
}
