//! `gen`: seeded instance generation with frozen calibrated parameters.

use crate::util::{save_instance, write_manifest};
use anyhow::{Context, Result};
use clap::Args;
use polyroute_core::gen::calibrate::calibrate_thresholds;
use polyroute_core::gen::rng::Stream;
use polyroute_core::gen::{generate, Distribution, GenConfig};
use polyroute_core::instance::Variant;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Args, Serialize)]
pub struct GenArgs {
    /// Distribution, e.g. flex2, fix5, real-nc.
    #[arg(long)]
    pub dist: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub variant: String,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Monte-Carlo samples for threshold calibration.
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: GenArgs) -> Result<()> {
    let dist: Distribution = args.dist.parse().context("parsing --dist")?;
    let variant: Variant = args.variant.parse().context("parsing --variant")?;
    let base = GenConfig::new(dist, args.n, variant, args.seed);
    let spec = calibrate_thresholds(&base, args.samples).context("calibrating thresholds")?;
    std::fs::create_dir_all(&args.out)?;
    for i in 0..args.count {
        let seed = Stream::new(args.seed, &[polyroute_core::gen::rng::tags::EVAL, i as u64])
            .next_u64();
        let inst = generate(&base.with_seed(seed))?;
        save_instance(&args.out, i, &inst, &spec)?;
    }
    write_manifest(
        &args.out,
        "gen",
        &serde_json::json!({ "args": args, "spec": spec, "gen_config": base }),
    )?;
    eprintln!(
        "wrote {} instances to {} ({} / n={} / {})",
        args.count,
        args.out.display(),
        base.distribution.label(),
        args.n,
        variant.name()
    );
    Ok(())
}
