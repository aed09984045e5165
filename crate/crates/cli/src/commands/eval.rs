//! `eval`: checkpoint evaluation over an instance directory.

use crate::commands::solve::{write_metrics_csv, MetricsRow};
use crate::util::{load_instances, parallel_indexed, write_manifest};
use anyhow::{Context, Result};
use clap::Args;
use polyroute_model::policy::Policy;
use polyroute_model::train::{evaluate, EvalOptions};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 101)]
    pub prefs: usize,
    /// Attribute-scaling augmentation variants (1 = plain inference).
    #[arg(long, default_value_t = 1)]
    pub aug: usize,
    #[arg(long, default_value_t = 50)]
    pub k2: usize,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: EvalArgs) -> Result<()> {
    let policy = Policy::load(&args.ckpt).context("loading checkpoint")?;
    let instances = load_instances(&args.input)?;
    let opts = EvalOptions {
        prefs: args.prefs,
        aug: args.aug,
        k2_eval: args.k2,
        seed: args.seed,
    };
    let metrics: Vec<MetricsRow> = parallel_indexed(args.workers, &instances, |idx, pair| {
        let rows = evaluate(&policy, std::slice::from_ref(pair), &opts)?;
        let m = &rows[0];
        Ok(MetricsRow {
            instance_id: idx,
            variant: m.variant.clone(),
            method: m.method.clone(),
            hv: m.hv,
            best_obj: m.best_objective,
            feasible_rate: m.feasible_rate,
            wall_ms: m.wall_ms,
        })
    })?;
    write_metrics_csv(&args.out, metrics.iter())?;
    write_manifest(&args.out, "eval", &args)?;
    let mean_hv: Option<f64> = {
        let hvs: Vec<f64> = metrics.iter().filter_map(|m| m.hv).collect();
        (!hvs.is_empty()).then(|| hvs.iter().sum::<f64>() / hvs.len() as f64)
    };
    eprintln!(
        "evaluated {} instances; metrics at {}{}",
        instances.len(),
        args.out.display(),
        mean_hv
            .map(|h| format!(" (mean hv {h:.4})"))
            .unwrap_or_default()
    );
    Ok(())
}
