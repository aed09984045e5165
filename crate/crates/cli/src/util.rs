//! Shared CLI plumbing: atomic writes, manifests, instance-directory IO.

use anyhow::{Context, Result};
use polyroute_core::instance::{MultigraphInstance, ProblemSpec};
use polyroute_core::json::{instance_from_json, instance_to_json};
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Writes bytes atomically (temp file + rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

/// Records the full command configuration next to its outputs so every
/// run is reproducible from its artifacts alone.
pub fn write_manifest<T: Serialize>(dir_or_file: &Path, command: &str, config: &T) -> Result<()> {
    let manifest = serde_json::json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
    });
    let path = if dir_or_file.is_dir() {
        dir_or_file.join("manifest.json")
    } else {
        let stem = dir_or_file
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "out".to_string());
        dir_or_file.with_file_name(format!("{stem}.manifest.json"))
    };
    write_atomic(&path, serde_json::to_string_pretty(&manifest)?.as_bytes())
}

pub fn instance_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("instance_{index:05}.json"))
}

pub fn save_instance(
    dir: &Path,
    index: usize,
    instance: &MultigraphInstance,
    spec: &ProblemSpec,
) -> Result<()> {
    let json = instance_to_json(instance, Some(spec));
    write_atomic(
        &instance_path(dir, index),
        serde_json::to_string(&json)?.as_bytes(),
    )
}

/// Loads every `instance_*.json` in a directory, sorted by index.
pub fn load_instances(dir: &Path) -> Result<Vec<(MultigraphInstance, ProblemSpec)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .map(|n| {
                    let n = n.to_string_lossy();
                    n.starts_with("instance_") && n.ends_with(".json")
                })
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        anyhow::bail!("no instance_*.json files in {}", dir.display());
    }
    let mut out = Vec::with_capacity(paths.len());
    for p in paths {
        let raw = std::fs::read_to_string(&p)
            .with_context(|| format!("reading {}", p.display()))?;
        let value: serde_json::Value = serde_json::from_str(&raw)?;
        let (inst, spec) = instance_from_json(&value)
            .with_context(|| format!("parsing {}", p.display()))?;
        let spec = spec
            .ok_or_else(|| anyhow::anyhow!("{} lacks an embedded spec", p.display()))?;
        out.push((inst, spec));
    }
    Ok(out)
}

/// Runs `f` over indexed items on a worker pool, collecting results in
/// index order so parallelism never changes the output.
pub fn parallel_indexed<T: Send + Sync, R: Send>(
    workers: usize,
    items: &[T],
    f: impl Fn(usize, &T) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .context("building worker pool")?;
    pool.install(|| {
        items
            .par_iter()
            .enumerate()
            .map(|(i, x)| f(i, x))
            .collect::<Result<Vec<R>>>()
    })
}
