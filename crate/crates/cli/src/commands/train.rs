//! `train`: fit the two-stage policy on freshly generated instances.

use crate::util::{write_atomic, write_manifest};
use anyhow::{Context, Result};
use clap::Args;
use polyroute_core::gen::calibrate::calibrate_thresholds;
use polyroute_core::gen::{Distribution, GenConfig};
use polyroute_core::instance::Variant;
use polyroute_model::config::ModelConfig;
use polyroute_model::policy::Policy;
use polyroute_model::train::{train, TrainConfig};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub variant: String,
    #[arg(long)]
    pub dist: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 2000)]
    pub instances_per_epoch: usize,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    /// POMO rollouts per instance (0 = one per admissible start).
    #[arg(long, default_value_t = 0)]
    pub k1: usize,
    #[arg(long, default_value_t = 8)]
    pub k2: usize,
    #[arg(long, default_value_t = 8)]
    pub k2_eval: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use the full-size model instead of the desk-scale one.
    #[arg(long, default_value_t = false)]
    pub full_size: bool,
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: TrainArgs) -> Result<()> {
    let variant: Variant = args.variant.parse().context("parsing --variant")?;
    let dist: Distribution = args.dist.parse().context("parsing --dist")?;
    let gen = GenConfig::new(dist, args.n, variant, args.seed);
    let spec = calibrate_thresholds(&gen, args.samples)?;
    let model_config = if args.full_size {
        ModelConfig::new(variant)
    } else {
        ModelConfig::smoke(variant)
    };
    let mut policy = Policy::new(model_config, args.seed)?;
    let cfg = TrainConfig {
        batch_size: args.batch,
        k1: args.k1,
        k2_train: args.k2,
        k2_eval: args.k2_eval,
        epochs: args.epochs,
        instances_per_epoch: args.instances_per_epoch,
        lr: args.lr,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let started = std::time::Instant::now();
    let result = train(&mut policy, &gen, &spec, &cfg)?;
    std::fs::create_dir_all(&args.out)?;
    result.best.save(&args.out.join("best.ckpt"))?;
    result.policy.save(&args.out.join("final.ckpt"))?;
    write_atomic(&args.out.join("train_log.jsonl"), result.log.as_bytes())?;
    write_manifest(
        &args.out,
        "train",
        &serde_json::json!({ "args": args, "spec": spec, "train_config": cfg }),
    )?;
    eprintln!(
        "trained {} epochs in {:.0}s; checkpoints in {}",
        result.history.len(),
        started.elapsed().as_secs_f64(),
        args.out.display()
    );
    if let Some(last) = result.history.last() {
        eprintln!(
            "final validation reward {:.4} (feasible rate {:.3})",
            last.val_mean_reward, last.val_feasible_rate
        );
    }
    Ok(())
}
