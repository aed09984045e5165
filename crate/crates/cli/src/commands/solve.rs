//! `solve`: classical heuristics or the trained model over an instance
//! directory. Emits routes JSON plus a metrics CSV.

use crate::util::{load_instances, parallel_indexed, write_atomic, write_manifest};
use anyhow::{Context, Result};
use clap::Args;
use polyroute_core::baselines;
use polyroute_core::eval::evaluate_route;
use polyroute_core::fsasp::clipped_hv;
use polyroute_core::instance::{MultigraphInstance, ProblemSpec, Variant};
use polyroute_core::pareto::{chebyshev_cost, Preference};
use polyroute_core::route::Route;
use polyroute_model::policy::Policy;
use polyroute_model::train::best_greedy_route;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Args, Serialize, Clone)]
pub struct SolveArgs {
    /// nn | beam | greedy-op | insertion | greedy-moop | model
    #[arg(long)]
    pub method: String,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Checkpoint path (method = model).
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    /// Preference-grid size for bi-objective variants.
    #[arg(long, default_value_t = 11)]
    pub prefs: usize,
    /// Edge-sample count per permutation (method = model).
    #[arg(long, default_value_t = 8)]
    pub k2: usize,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Beam width (method = beam).
    #[arg(long, default_value_t = 50)]
    pub beam_width: usize,
    /// Outer multiplier-adaptation iterations (method = beam).
    #[arg(long, default_value_t = 5)]
    pub outer_iters: usize,
}

#[derive(Serialize)]
struct SolvedRoute {
    instance: usize,
    lambda1: f64,
    pi: Vec<usize>,
    eps: Vec<usize>,
    objectives: Vec<f64>,
    feasible: bool,
    /// For prize-collecting variants the collected prize, reported for
    /// comparability with maximization conventions.
    #[serde(skip_serializing_if = "Option::is_none")]
    collected_prize: Option<f64>,
}

struct PerInstance {
    routes: Vec<SolvedRoute>,
    metrics: MetricsRow,
}

#[derive(Serialize, Clone)]
pub struct MetricsRow {
    pub instance_id: usize,
    pub variant: String,
    pub method: String,
    pub hv: Option<f64>,
    pub best_obj: Option<f64>,
    pub feasible_rate: f64,
    pub wall_ms: f64,
}

fn solve_one(
    method: &str,
    instance: &MultigraphInstance,
    spec: &ProblemSpec,
    pref: &Preference,
    args: &SolveArgs,
    policy: Option<&Policy>,
) -> Result<Route> {
    let route = match method {
        "nn" => baselines::nearest_neighbor(instance, spec, pref)?,
        "beam" => baselines::beam_search_rctsp(instance, spec, args.beam_width, args.outer_iters)?,
        "greedy-op" => baselines::greedy_op(instance, spec)?,
        "insertion" => baselines::insertion_motsptw(instance, spec, pref)?,
        "greedy-moop" => baselines::greedy_moop(instance, spec, pref)?,
        "model" => {
            let policy = policy.context("--ckpt is required for method model")?;
            best_greedy_route(policy, instance, spec, pref, args.k2, args.seed)?.0
        }
        other => anyhow::bail!("unknown method `{other}`"),
    };
    Ok(route)
}

pub fn run(args: SolveArgs) -> Result<()> {
    let instances = load_instances(&args.input)?;
    let policy = match args.ckpt.as_ref() {
        Some(p) => Some(Policy::load(p).context("loading checkpoint")?),
        None => None,
    };
    let method = args.method.clone();
    let results: Vec<PerInstance> = parallel_indexed(args.workers, &instances, |idx, (instance, spec)| {
        let start = std::time::Instant::now();
        let grid: Vec<Preference> = if spec.objective_dim == 1 {
            vec![Preference::single()]
        } else if args.prefs <= 1 {
            vec![Preference::bi(0.5).unwrap()]
        } else {
            Preference::grid(args.prefs)
        };
        let ideal = vec![0.0; spec.objective_dim];
        let mut routes = Vec::new();
        let mut points = Vec::new();
        let mut best_obj = f64::INFINITY;
        let mut feasible = 0usize;
        for pref in &grid {
            let route = solve_one(&method, instance, spec, pref, &args, policy.as_ref())?;
            route.validate(instance, spec)?;
            let eval = evaluate_route(instance, spec, &route)?;
            if eval.feasible {
                feasible += 1;
                points.push(eval.objectives.clone());
                if spec.objective_dim == 1 {
                    best_obj = best_obj.min(eval.objectives[0]);
                } else {
                    best_obj = best_obj
                        .min(chebyshev_cost(&eval.objectives, pref, &ideal)?);
                }
            }
            let collected_prize = match spec.variant {
                Variant::Op | Variant::Moop => {
                    Some(instance.total_prize() - eval.objectives[0])
                }
                _ => None,
            };
            routes.push(SolvedRoute {
                instance: idx,
                lambda1: pref.lambda()[0],
                pi: route.nodes.clone(),
                eps: route.edges.clone(),
                objectives: eval.objectives.clone(),
                feasible: eval.feasible,
                collected_prize,
            });
        }
        let hv = match (spec.objective_dim, spec.hv_reference.as_ref()) {
            (2, Some(reference)) => Some(clipped_hv(&points, reference)?),
            _ => None,
        };
        Ok(PerInstance {
            routes,
            metrics: MetricsRow {
                instance_id: idx,
                variant: spec.variant.name().to_string(),
                method: method.clone(),
                hv,
                best_obj: best_obj.is_finite().then_some(best_obj),
                feasible_rate: feasible as f64 / grid.len() as f64,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            },
        })
    })?;

    let all_routes: Vec<&SolvedRoute> = results.iter().flat_map(|r| r.routes.iter()).collect();
    write_atomic(&args.out, serde_json::to_string_pretty(&all_routes)?.as_bytes())?;
    let metrics_path = args.out.with_extension("metrics.csv");
    write_metrics_csv(&metrics_path, results.iter().map(|r| &r.metrics))?;
    write_manifest(&args.out, "solve", &args)?;
    eprintln!(
        "solved {} instances with `{}`; routes at {}, metrics at {}",
        instances.len(),
        args.method,
        args.out.display(),
        metrics_path.display()
    );
    Ok(())
}

pub fn write_metrics_csv<'a>(
    path: &std::path::Path,
    rows: impl Iterator<Item = &'a MetricsRow>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["instance_id", "variant", "method", "hv", "best_obj", "feasible_rate", "wall_ms"])?;
    for r in rows {
        w.write_record([
            r.instance_id.to_string(),
            r.variant.clone(),
            r.method.clone(),
            r.hv.map(|v| format!("{v:.6}")).unwrap_or_default(),
            r.best_obj.map(|v| format!("{v:.6}")).unwrap_or_default(),
            format!("{:.4}", r.feasible_rate),
            format!("{:.3}", r.wall_ms),
        ])?;
    }
    write_atomic(path, &w.into_inner()?)
}
