//! `aggregate`: summarize metric CSVs into per-(label, variant, method)
//! rows with gaps against the best method in each group.

use crate::util::write_atomic;
use anyhow::{Context, Result};
use clap::Args;
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Args)]
pub struct AggregateArgs {
    /// Metric CSV files (the file stem labels each source).
    pub files: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Default, Clone)]
struct Bucket {
    hv: Vec<f64>,
    obj: Vec<f64>,
    feasible: Vec<f64>,
    wall_ms: f64,
}

#[derive(Clone)]
pub struct SummaryRow {
    pub label: String,
    pub variant: String,
    pub method: String,
    pub mean_hv: Option<f64>,
    pub mean_obj: Option<f64>,
    pub gap_pct: f64,
    pub feasible_rate: f64,
    pub total_wall_s: f64,
}

pub fn summarize(
    tables: &[(String, Vec<BTreeMap<String, String>>)],
) -> Result<Vec<SummaryRow>> {
    let mut buckets: BTreeMap<(String, String, String), Bucket> = BTreeMap::new();
    for (label, rows) in tables {
        for row in rows {
            let variant = row.get("variant").cloned().unwrap_or_default();
            let method = row.get("method").cloned().unwrap_or_default();
            let b = buckets
                .entry((label.clone(), variant, method))
                .or_default();
            let parse = |k: &str| -> Option<f64> {
                row.get(k).and_then(|v| if v.is_empty() { None } else { v.parse().ok() })
            };
            if let Some(hv) = parse("hv") {
                b.hv.push(hv);
            }
            if let Some(o) = parse("best_obj") {
                b.obj.push(o);
            }
            if let Some(f) = parse("feasible_rate") {
                b.feasible.push(f);
            }
            if let Some(w) = parse("wall_ms") {
                b.wall_ms += w;
            }
        }
    }
    let mean = |xs: &[f64]| -> Option<f64> {
        (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
    };
    let mut rows: Vec<SummaryRow> = buckets
        .iter()
        .map(|((label, variant, method), b)| SummaryRow {
            label: label.clone(),
            variant: variant.clone(),
            method: method.clone(),
            mean_hv: mean(&b.hv),
            mean_obj: mean(&b.obj),
            gap_pct: 0.0,
            feasible_rate: mean(&b.feasible).unwrap_or(0.0),
            total_wall_s: b.wall_ms / 1e3,
        })
        .collect();
    // Gap vs the best method within each (label, variant) group:
    // hypervolume is higher-is-better, objectives lower-is-better.
    let mut best_hv: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut best_obj: BTreeMap<(String, String), f64> = BTreeMap::new();
    for r in &rows {
        let key = (r.label.clone(), r.variant.clone());
        if let Some(hv) = r.mean_hv {
            let e = best_hv.entry(key.clone()).or_insert(f64::NEG_INFINITY);
            *e = e.max(hv);
        }
        if let Some(o) = r.mean_obj {
            let e = best_obj.entry(key).or_insert(f64::INFINITY);
            *e = e.min(o);
        }
    }
    for r in rows.iter_mut() {
        let key = (r.label.clone(), r.variant.clone());
        if let (Some(hv), Some(best)) = (r.mean_hv, best_hv.get(&key)) {
            r.gap_pct = 100.0 * (best - hv) / best;
        } else if let (Some(o), Some(best)) = (r.mean_obj, best_obj.get(&key)) {
            r.gap_pct = 100.0 * (o - best) / best;
        }
    }
    Ok(rows)
}

fn read_csv(path: &PathBuf) -> Result<Vec<BTreeMap<String, String>>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = reader.headers()?.clone();
    for required in ["variant", "method", "feasible_rate"] {
        if !headers.iter().any(|h| h == required) {
            anyhow::bail!("{}: missing column `{required}`", path.display());
        }
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        rows.push(
            headers
                .iter()
                .zip(record.iter())
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect(),
        );
    }
    Ok(rows)
}

pub fn run(args: AggregateArgs) -> Result<()> {
    if args.files.is_empty() {
        anyhow::bail!("no metric files given");
    }
    let mut tables = Vec::new();
    for f in &args.files {
        let label = f
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_default();
        tables.push((label, read_csv(f)?));
    }
    let rows = summarize(&tables)?;
    let mut out = String::from("label,variant,method,mean_hv,mean_obj,gap_pct,feasible_rate,total_wall_s\n");
    for r in &rows {
        out.push_str(&format!(
            "{},{},{},{},{},{:.2},{:.4},{:.2}\n",
            r.label,
            r.variant,
            r.method,
            r.mean_hv.map(|v| format!("{v:.4}")).unwrap_or_default(),
            r.mean_obj.map(|v| format!("{v:.4}")).unwrap_or_default(),
            r.gap_pct,
            r.feasible_rate,
            r.total_wall_s
        ));
    }
    print!("{out}");
    if let Some(path) = &args.out {
        write_atomic(path, out.as_bytes())?;
    }
    Ok(())
}
