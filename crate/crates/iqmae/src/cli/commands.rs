//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{resolve, write_resolved};
use crate::eval::{evaluate, MetricsReport};
use crate::model::checkpoint::{load_classifier, load_mae};
use crate::model::{ClsModel, MaeModel, ModelConfig};
use crate::siggen::{generate_dataset, Dataset, DatasetManifest, SplitTag};
use crate::train::{
    finetune, pretrain, EpochReport, FinetuneOptions, FinetuneOutcome, PretrainOutcome,
    TrainConfig,
};
use crate::{Error, Result};

/// Self-supervised modulation classification over synthetic raw IQ.
#[derive(Debug, Parser)]
#[command(name = "iqmae", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic IQ dataset.
    Gen(GenArgs),
    /// Masked-reconstruction pretraining on unlabeled frames.
    Pretrain(PretrainArgs),
    /// Supervised fine-tuning on a labeled fraction.
    Finetune(FinetuneArgs),
    /// Evaluate a classifier checkpoint on a dataset split.
    Eval(EvalArgs),
    /// Sweep one axis through the full pretrain/finetune/eval chain.
    Ablate(AblateArgs),
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Pretrain(a) => cmd_pretrain(a),
        Command::Finetune(a) => cmd_finetune(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Ablate(a) => cmd_ablate(a),
    }
}

/// Model plus one training stage; the schema of pretrain/finetune
/// config files and their `resolved_config.json` echoes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// JSON manifest overrides (defaults: 8 schemes, -20..20 dB).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides master_seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dotted config overrides, e.g. --set frames_per_cell=100.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

pub fn cmd_gen(args: &GenArgs) -> Result<()> {
    let mut sets = args.set.clone();
    if let Some(seed) = args.seed {
        sets.push(format!("master_seed={seed}"));
    }
    let manifest: DatasetManifest =
        resolve(&DatasetManifest::new(100, 0), args.config.as_deref(), &sets)?;
    manifest.validate()?;
    write_resolved(&args.out, &manifest)?;
    generate_dataset(&manifest, &args.out, args.workers)?;
    println!(
        "wrote {} frames ({} schemes x {} SNRs x {}) to {}",
        manifest.num_frames(),
        manifest.schemes.len(),
        manifest.snr_grid_db.len(),
        manifest.frames_per_cell,
        args.out.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    /// JSON run config with `model` and `train` sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset directory from `gen`.
    #[arg(long)]
    pub data: PathBuf,
    /// Run output directory (checkpoints, trace.csv).
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides train.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Suppress per-epoch progress lines.
    #[arg(long)]
    pub quiet: bool,
}

pub fn cmd_pretrain(args: &PretrainArgs) -> Result<()> {
    let mut sets = args.set.clone();
    if let Some(seed) = args.seed {
        sets.push(format!("train.seed={seed}"));
    }
    let rc: RunConfig = resolve(&default_run_config(Stage::Pretrain), args.config.as_deref(), &sets)?;
    rc.model.validate()?;
    rc.train.validate()?;
    let ds = Dataset::load(&args.data)?;
    write_resolved(&args.out, &rc)?;

    let mut model = MaeModel::<f32>::new(&rc.model, &mut ChaCha8Rng::seed_from_u64(rc.train.seed));
    let outcome = pretrain(&ds, &mut model, &rc.train, &args.out, progress("pretrain", args.quiet))?;
    println!(
        "pretrained {} epochs; best val reconstruction {:.6} at epoch {}; checkpoint {}",
        rc.train.epochs,
        outcome.best_val,
        outcome.best_epoch,
        outcome.checkpoint_dir.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct FinetuneArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Pretrained MAE checkpoint directory; omit to train from scratch.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Train only the classifier head (linear probe).
    #[arg(long)]
    pub freeze_encoder: bool,
    /// Overrides train.label_fraction.
    #[arg(long)]
    pub label_fraction: Option<f64>,
    /// Overrides train.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub quiet: bool,
}

pub fn cmd_finetune(args: &FinetuneArgs) -> Result<()> {
    let mut sets = args.set.clone();
    if let Some(seed) = args.seed {
        sets.push(format!("train.seed={seed}"));
    }
    if let Some(f) = args.label_fraction {
        sets.push(format!("train.label_fraction={f}"));
    }
    let mut rc: RunConfig =
        resolve(&default_run_config(Stage::Finetune), args.config.as_deref(), &sets)?;
    rc.train.validate()?;
    let ds = Dataset::load(&args.data)?;

    let opts = FinetuneOptions {
        freeze_encoder: args.freeze_encoder,
    };
    let (outcome, used_model) = run_finetune_stage(
        &ds,
        args.init.as_deref(),
        &rc.model,
        &rc.train,
        opts,
        &args.out,
        args.quiet,
    )?;
    // The checkpoint's architecture wins when --init is given; echo
    // what actually ran.
    rc.model = used_model;
    write_resolved(&args.out, &rc)?;
    println!(
        "fine-tuned on {} labeled frames; best val OA {:.4} at epoch {}; checkpoint {}",
        outcome.labeled.len(),
        outcome.best_val_oa,
        outcome.best_epoch,
        outcome.checkpoint_dir.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Classifier checkpoint directory.
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Report output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::FtTest)]
    pub split: SplitArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum SplitArg {
    #[value(name = "ssl_train")]
    #[serde(rename = "ssl_train")]
    SslTrain,
    #[value(name = "ssl_val")]
    #[serde(rename = "ssl_val")]
    SslVal,
    #[value(name = "ft_val")]
    #[serde(rename = "ft_val")]
    FtVal,
    #[value(name = "ft_test")]
    #[serde(rename = "ft_test")]
    FtTest,
}

impl From<SplitArg> for SplitTag {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::SslTrain => SplitTag::SslTrain,
            SplitArg::SslVal => SplitTag::SslVal,
            SplitArg::FtVal => SplitTag::FtVal,
            SplitArg::FtTest => SplitTag::FtTest,
        }
    }
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let ds = Dataset::load(&args.data)?;
    let (model, _meta) = load_classifier::<f32>(&args.ckpt)?;
    let indices = ds.select(args.split.into(), None);
    let report = evaluate(&model, &ds, &indices)?;
    report.write(&args.out)?;
    write_resolved(
        &args.out,
        &serde_json::json!({
            "checkpoint": args.ckpt,
            "dataset": args.data,
            "split": args.split,
            "model": model.cfg,
        }),
    )?;
    println!(
        "split {}: OA {:.4}, macro OA {:.4}, kappa {:.4} over {} frames",
        SplitTag::from(args.split).name(),
        report.oa,
        report.oa_macro,
        report.kappa,
        indices.len()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// JSON config with `model`, `pretrain`, and `finetune` sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Swept hyperparameter.
    #[arg(long, value_enum)]
    pub axis: AblateAxis,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    /// Overrides both stages' seeds.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AblateAxis {
    #[value(name = "mask_ratio")]
    MaskRatio,
    #[value(name = "snr_min")]
    SnrMin,
    #[value(name = "patch_size")]
    PatchSize,
    #[value(name = "label_fraction")]
    LabelFraction,
}

impl AblateAxis {
    fn name(self) -> &'static str {
        match self {
            AblateAxis::MaskRatio => "mask_ratio",
            AblateAxis::SnrMin => "snr_min",
            AblateAxis::PatchSize => "patch_size",
            AblateAxis::LabelFraction => "label_fraction",
        }
    }

    /// Applies one sweep value to the per-value configs.
    fn apply(self, v: f64, model: &mut ModelConfig, pre: &mut TrainConfig, ft: &mut TrainConfig) -> Result<()> {
        match self {
            AblateAxis::MaskRatio => model.mask_ratio = v,
            AblateAxis::SnrMin => pre.pretrain_snr_min_db = v,
            AblateAxis::PatchSize => {
                if v.fract() != 0.0 || v <= 0.0 {
                    return Err(Error::config(format!("patch_size value {v} is not a positive integer")));
                }
                model.patch_size = v as usize;
            }
            AblateAxis::LabelFraction => ft.label_fraction = v,
        }
        model.validate()?;
        pre.validate()?;
        ft.validate()
    }
}

/// Both stages' configs for a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblateConfig {
    pub model: ModelConfig,
    pub pretrain: TrainConfig,
    pub finetune: TrainConfig,
}

impl Default for AblateConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            pretrain: TrainConfig::pretrain_defaults(),
            finetune: TrainConfig::finetune_defaults(),
        }
    }
}

pub const SWEEP_FILE: &str = "sweep.csv";

pub fn cmd_ablate(args: &AblateArgs) -> Result<()> {
    let mut sets = args.set.clone();
    if let Some(seed) = args.seed {
        sets.push(format!("pretrain.seed={seed}"));
        sets.push(format!("finetune.seed={seed}"));
    }
    let base: AblateConfig = resolve(&AblateConfig::default(), args.config.as_deref(), &sets)?;
    let ds = Dataset::load(&args.data)?;
    if base.model.num_classes != ds.manifest.schemes.len() {
        return Err(Error::config(format!(
            "model.num_classes is {}, dataset has {} schemes",
            base.model.num_classes,
            ds.manifest.schemes.len()
        )));
    }
    if args.values.is_empty() {
        return Err(Error::config("ablation needs at least one value"));
    }

    // Every point validated before any training starts.
    let mut points = Vec::with_capacity(args.values.len());
    for &v in &args.values {
        let mut model = base.model.clone();
        let mut pre = base.pretrain.clone();
        let mut ft = base.finetune.clone();
        args.axis.apply(v, &mut model, &mut pre, &mut ft)?;
        points.push((v, model, pre, ft));
    }
    write_resolved(&args.out, &base)?;

    // Pretraining is invariant to label_fraction, so that axis shares
    // one pretrained encoder across all values.
    let shared_init = if args.axis == AblateAxis::LabelFraction {
        let dir = args.out.join("pretrain");
        let (model, pre) = (&points[0].1, &points[0].2);
        Some(run_pretrain_stage(&ds, model, pre, &dir, args.quiet)?.checkpoint_dir)
    } else {
        None
    };

    let mut rows = Vec::new();
    for (v, model, pre, ft) in &points {
        let dir = args.out.join(format!("{}_{}", args.axis.name(), v));
        let init = match &shared_init {
            Some(ckpt) => ckpt.clone(),
            None => {
                run_pretrain_stage(&ds, model, pre, &dir.join("pretrain"), args.quiet)?.checkpoint_dir
            }
        };
        let (outcome, _) = run_finetune_stage(
            &ds,
            Some(&init),
            model,
            ft,
            FinetuneOptions::default(),
            &dir.join("finetune"),
            args.quiet,
        )?;
        let (cls, _) = load_classifier::<f32>(&outcome.checkpoint_dir)?;
        let report = evaluate(&cls, &ds, &ds.select(SplitTag::FtTest, None))?;
        report.write(&dir.join("eval"))?;
        println!("{} = {v}: OA {:.4}, kappa {:.4}", args.axis.name(), report.oa, report.kappa);
        rows.push((*v, report));
    }

    write_sweep(&args.out.join(SWEEP_FILE), &rows)?;
    println!("sweep written to {}", args.out.join(SWEEP_FILE).display());
    Ok(())
}

fn write_sweep(path: &Path, rows: &[(f64, MetricsReport)]) -> Result<()> {
    use std::io::Write;
    let mut f = fs::File::create(path)?;
    writeln!(f, "value,oa,kappa")?;
    for (v, r) in rows {
        writeln!(f, "{},{},{}", v, r.oa, r.kappa)?;
    }
    Ok(())
}

enum Stage {
    Pretrain,
    Finetune,
}

fn default_run_config(stage: Stage) -> RunConfig {
    RunConfig {
        model: ModelConfig::default(),
        train: match stage {
            Stage::Pretrain => TrainConfig::pretrain_defaults(),
            Stage::Finetune => TrainConfig::finetune_defaults(),
        },
    }
}

fn progress(stage: &'static str, quiet: bool) -> impl FnMut(&EpochReport) {
    move |r| {
        if !quiet {
            eprintln!(
                "[{stage}] epoch {:>3}/{} train {:.5} val {:.5}{} ({:.1}s)",
                r.epoch,
                r.total_epochs,
                r.train_loss,
                r.val_metric,
                if r.is_best { " *" } else { "" },
                r.seconds
            );
        }
    }
}

fn run_pretrain_stage(
    ds: &Dataset,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    out: &Path,
    quiet: bool,
) -> Result<PretrainOutcome> {
    model_cfg.validate()?;
    train_cfg.validate()?;
    let mut model = MaeModel::<f32>::new(model_cfg, &mut ChaCha8Rng::seed_from_u64(train_cfg.seed));
    pretrain(ds, &mut model, train_cfg, out, progress("pretrain", quiet))
}

/// Builds the starting classifier (pretrained handoff or fresh) and
/// fine-tunes it. Returns the outcome and the architecture actually
/// trained.
fn run_finetune_stage(
    ds: &Dataset,
    init: Option<&Path>,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    opts: FinetuneOptions,
    out: &Path,
    quiet: bool,
) -> Result<(FinetuneOutcome, ModelConfig)> {
    let mut model: ClsModel<f32> = match init {
        Some(dir) => {
            let (mae, _) = load_mae::<f32>(dir)?;
            // Distinct stream from the training rng so adding epochs
            // never shifts the head initialization.
            let mut head_rng = ChaCha8Rng::seed_from_u64(train_cfg.seed ^ 0x6865_6164);
            mae.into_classifier(&mut head_rng)
        }
        None => {
            model_cfg.validate()?;
            ClsModel::new(model_cfg, &mut ChaCha8Rng::seed_from_u64(train_cfg.seed))
        }
    };
    let used = model.cfg.clone();
    let outcome = finetune(ds, &mut model, train_cfg, opts, out, progress("finetune", quiet))?;
    Ok((outcome, used))
}
