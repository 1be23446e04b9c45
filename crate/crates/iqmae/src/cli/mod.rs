//! Command-line operator surface: dataset generation, both training
//! stages, evaluation, and ablation sweeps, all driven by JSON configs
//! with `--set` overrides. Every run echoes the fully resolved config
//! it used into its output directory.

pub mod commands;
pub mod config;

pub use commands::{
    cmd_ablate, cmd_eval, cmd_finetune, cmd_gen, cmd_pretrain, run, AblateArgs, AblateAxis,
    AblateConfig, Cli, Command, EvalArgs, FinetuneArgs, GenArgs, PretrainArgs, RunConfig,
    SplitArg, SWEEP_FILE,
};
pub use config::{merge, parse_set, resolve, write_resolved, RESOLVED_CONFIG_FILE};
