//! Fixed-sequence arc selection: given a node order, pick one parallel
//! edge per consecutive pair. `fsasp_dp` is exact via forward dynamic
//! programming with Pareto label dominance; `fsasp_greedy_linear` picks
//! each edge independently by linearly scalarized cost.

use crate::error::CoreError;
use crate::eval::evaluate_route;
use crate::instance::{MultigraphInstance, ProblemSpec, Variant};
use crate::pareto::{chebyshev_cost, Preference};
use crate::route::Route;

/// Knobs for the DP: dominance pruning can be disabled for verification,
/// and the per-position label count is capped to bound memory. Results
/// under the cap are exact.
#[derive(Debug, Clone, Copy)]
pub struct DpOptions {
    pub prune: bool,
    pub label_cap: usize,
}

impl Default for DpOptions {
    fn default() -> Self {
        DpOptions { prune: true, label_cap: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpResult {
    pub edges: Vec<usize>,
    pub cost: f64,
    /// False when the label cap truncated the frontier.
    pub exact: bool,
}

/// Attribute-space weights realizing the scalarized edge cost: the
/// preference itself for bi-objective variants, the primary cost
/// attribute for single-objective ones.
pub fn edge_cost_weights(spec: &ProblemSpec, pref: &Preference) -> Vec<f64> {
    if spec.objective_dim == 1 {
        vec![1.0, 0.0]
    } else {
        pref.lambda().to_vec()
    }
}

/// Scalarized cost of one edge attribute vector under the variant wiring.
pub fn scalarized_edge_cost(spec: &ProblemSpec, pref: &Preference, values: &[f64]) -> f64 {
    edge_cost_weights(spec, pref)
        .iter()
        .zip(values)
        .map(|(w, v)| w * v)
        .sum()
}

#[derive(Debug, Clone)]
struct Label {
    state: [f64; 3],
    parent: u32,
    edge: u32,
}

enum Kind {
    Additive,
    Resource { limit: f64 },
    TwoCost { t1: f64, t2: f64 },
    SoftResource,
    TimeWindows { windows: Vec<(f64, f64)> },
}

impl Kind {
    fn dims(&self) -> usize {
        match self {
            Kind::TimeWindows { .. } => 3,
            _ => 2,
        }
    }

    /// Extends a label along an edge; `None` marks a dead (hard
    /// infeasible) state. All accumulators are monotone non-decreasing,
    /// so dead states stay dead and dominance is sound.
    fn extend(&self, state: &[f64; 3], values: &[f64], arrival: usize) -> Option<[f64; 3]> {
        match self {
            Kind::Additive | Kind::SoftResource => {
                Some([state[0] + values[0], state[1] + values[1], 0.0])
            }
            Kind::Resource { limit } => {
                let s = [state[0] + values[0], state[1] + values[1], 0.0];
                (s[1] <= *limit).then_some(s)
            }
            Kind::TwoCost { t1, t2 } => {
                let s = [state[0] + values[0], state[1] + values[1], 0.0];
                (s[0] <= *t1 && s[1] <= *t2).then_some(s)
            }
            Kind::TimeWindows { windows } => {
                let clock = state[2] + values[1];
                let late = if clock > windows[arrival].1 { 1.0 } else { 0.0 };
                Some([state[0] + late, state[1] + values[0], clock])
            }
        }
    }

    fn terminal_objectives(&self, state: &[f64; 3], fixed_prize: &FixedPrize) -> Vec<f64> {
        match self {
            Kind::Additive => vec![state[0], state[1]],
            Kind::Resource { .. } => vec![state[0]],
            Kind::TwoCost { .. } => vec![fixed_prize.uncollected],
            Kind::SoftResource => {
                // The MOOP resource limit is soft: exceeding it forfeits
                // the collected prize instead of killing the label.
                let limit = fixed_prize.limit;
                let uncollected = if state[1] > limit {
                    fixed_prize.total
                } else {
                    fixed_prize.uncollected
                };
                vec![uncollected, state[0]]
            }
            Kind::TimeWindows { .. } => vec![state[0], state[1]],
        }
    }
}

struct FixedPrize {
    total: f64,
    uncollected: f64,
    limit: f64,
}

fn kind_for(
    instance: &MultigraphInstance,
    spec: &ProblemSpec,
) -> Result<Kind, CoreError> {
    Ok(match spec.variant {
        Variant::Motsp | Variant::Mocvrp => Kind::Additive,
        Variant::Rctsp => Kind::Resource {
            limit: spec
                .resource_limit
                .ok_or_else(|| CoreError::SpecMismatch("rctsp needs a resource limit".into()))?,
        },
        Variant::Op => {
            let (t1, t2) = spec
                .thresholds
                .ok_or_else(|| CoreError::SpecMismatch("op needs thresholds".into()))?;
            Kind::TwoCost { t1, t2 }
        }
        Variant::Moop => Kind::SoftResource,
        Variant::Motsptw => Kind::TimeWindows {
            windows: instance
                .node_attrs()
                .and_then(|a| a.time_windows.clone())
                .ok_or_else(|| CoreError::SpecMismatch("motsptw needs time windows".into()))?,
        },
    })
}

/// Exact optimal edge selection for a fixed node sequence, minimizing the
/// Chebyshev cost (or the plain objective for single-objective variants).
/// `ideal` must be a utopian lower bound per objective (zero for the
/// non-negative additive costs used here), otherwise dominance pruning is
/// unsound.
pub fn fsasp_dp(
    instance: &MultigraphInstance,
    spec: &ProblemSpec,
    pi: &[usize],
    pref: &Preference,
    ideal: &[f64],
) -> Result<DpResult, CoreError> {
    fsasp_dp_with(instance, spec, pi, pref, ideal, DpOptions::default())
}

pub fn fsasp_dp_with(
    instance: &MultigraphInstance,
    spec: &ProblemSpec,
    pi: &[usize],
    pref: &Preference,
    ideal: &[f64],
    opts: DpOptions,
) -> Result<DpResult, CoreError> {
    if pi.len() < 2 {
        return Ok(DpResult { edges: Vec::new(), cost: 0.0, exact: true });
    }
    let kind = kind_for(instance, spec)?;
    let dims = kind.dims();
    let fixed = fixed_prize(instance, spec, pi);

    let mut frontier = vec![Label { state: [0.0; 3], parent: 0, edge: 0 }];
    let mut history: Vec<Vec<Label>> = Vec::with_capacity(pi.len());
    let mut exact = true;
    for t in 0..pi.len() - 1 {
        let (u, v) = (pi[t], pi[t + 1]);
        let edges = instance.edges(u, v);
        let mut next = Vec::with_capacity(frontier.len() * edges.len());
        for (pidx, label) in frontier.iter().enumerate() {
            for (l, e) in edges.iter().enumerate() {
                if let Some(state) = kind.extend(&label.state, &e.values, v) {
                    next.push(Label { state, parent: pidx as u32, edge: l as u32 });
                }
            }
        }
        if next.is_empty() {
            return Err(CoreError::Infeasible(format!(
                "no edge selection survives position {t} of the sequence"
            )));
        }
        if opts.prune {
            pareto_filter(&mut next, dims);
        }
        if next.len() > opts.label_cap {
            truncate_by_scalar(&mut next, dims, spec, pref, ideal, opts.label_cap);
            exact = false;
        }
        history.push(frontier);
        frontier = next;
    }

    // Score terminal labels and backtrack the best.
    let mut best: Option<(f64, usize)> = None;
    for (i, label) in frontier.iter().enumerate() {
        let obj = kind.terminal_objectives(&label.state, &fixed);
        let scalar = if spec.objective_dim == 1 {
            obj[0]
        } else {
            chebyshev_cost(&obj, pref, ideal)?
        };
        if best.map_or(true, |(b, _)| scalar < b) {
            best = Some((scalar, i));
        }
    }
    let (_, mut at) = best.ok_or_else(|| {
        CoreError::Infeasible("no terminal label satisfies the hard constraints".into())
    })?;

    let mut edges = vec![0usize; pi.len() - 1];
    for t in (0..pi.len() - 1).rev() {
        let label = if t + 1 == pi.len() - 1 { &frontier[at] } else { &history[t + 1][at] };
        edges[t] = label.edge as usize;
        at = label.parent as usize;
    }

    // Report the cost through the shared evaluation path so it is
    // bit-identical to an external evaluation of the returned selection.
    let route = Route::new(pi.to_vec(), edges.clone());
    let eval = evaluate_route(instance, spec, &route)?;
    let cost = if spec.objective_dim == 1 {
        eval.objectives[0]
    } else {
        chebyshev_cost(&eval.objectives, pref, ideal)?
    };
    Ok(DpResult { edges, cost, exact })
}

fn fixed_prize(instance: &MultigraphInstance, spec: &ProblemSpec, pi: &[usize]) -> FixedPrize {
    let total = instance.total_prize();
    let collected: f64 = if pi.len() >= 2 {
        pi[1..pi.len() - 1]
            .iter()
            .filter_map(|&u| instance.prize(u))
            .sum()
    } else {
        0.0
    };
    FixedPrize {
        total,
        uncollected: total - collected,
        limit: spec.resource_limit.unwrap_or(f64::INFINITY),
    }
}

/// Removes weakly dominated labels. Labels are left sorted by state (then
/// parent/edge), which keeps the whole DP deterministic.
fn pareto_filter(labels: &mut Vec<Label>, dims: usize) {
    labels.sort_by(|a, b| {
        a.state[..dims]
            .partial_cmp(&b.state[..dims])
            .unwrap()
            .then(a.parent.cmp(&b.parent))
            .then(a.edge.cmp(&b.edge))
    });
    if dims == 2 {
        let mut min_s1 = f64::INFINITY;
        labels.retain(|l| {
            if l.state[1] >= min_s1 {
                false
            } else {
                min_s1 = l.state[1];
                true
            }
        });
    } else {
        let mut kept: Vec<[f64; 3]> = Vec::new();
        labels.retain(|l| {
            let dominated = kept
                .iter()
                .any(|k| k.iter().zip(&l.state).all(|(a, b)| a <= b));
            if !dominated {
                kept.push(l.state);
            }
            !dominated
        });
    }
}

/// On frontier overflow keep the `cap` labels with the best scalarized
/// partial state. Only a guardrail; results are flagged approximate.
fn truncate_by_scalar(
    labels: &mut Vec<Label>,
    dims: usize,
    spec: &ProblemSpec,
    pref: &Preference,
    ideal: &[f64],
    cap: usize,
) {
    let m = spec.objective_dim.min(dims);
    let mut scored: Vec<(f64, usize)> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let partial = &l.state[..m];
            let s = if m == 1 {
                partial[0]
            } else {
                chebyshev_cost(partial, pref, &ideal[..m]).unwrap_or(f64::INFINITY)
            };
            (s, i)
        })
        .collect();
    scored.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let keep: Vec<Label> = scored[..cap].iter().map(|&(_, i)| labels[i].clone()).collect();
    *labels = keep;
}

/// Per-position independent greedy selection minimizing the linearly
/// scalarized edge cost; ties go to the lowest edge index.
pub fn fsasp_greedy_linear(
    instance: &MultigraphInstance,
    spec: &ProblemSpec,
    pi: &[usize],
    pref: &Preference,
) -> Vec<usize> {
    let weights = edge_cost_weights(spec, pref);
    (0..pi.len().saturating_sub(1))
        .map(|t| {
            let mut best = (0usize, f64::INFINITY);
            for (l, e) in instance.edges(pi[t], pi[t + 1]).iter().enumerate() {
                let c: f64 = weights.iter().zip(&e.values).map(|(w, v)| w * v).sum();
                if c < best.1 {
                    best = (l, c);
                }
            }
            best.0
        })
        .collect()
}

/// One gap-study cell: Chebyshev cost of the greedy-linear selection
/// against the exact optimum, for one `(instance, preference)` pair.
#[derive(Debug, Clone)]
pub struct GapRecord {
    pub instance: usize,
    pub lambda1: f64,
    pub cheb_greedy: f64,
    pub cheb_dp: f64,
    pub gap: f64,
}

/// Per-instance hypervolume of each selection strategy across the grid.
#[derive(Debug, Clone)]
pub struct HvRecord {
    pub instance: usize,
    pub hv_greedy: f64,
    pub hv_dp: f64,
}

/// Runs the greedy-vs-exact selection study over seeded instances and a
/// preference grid. Node sequences come from the supplied permutation
/// source (classically a nearest-neighbor construction).
pub fn fsasp_gap_study(
    base: &crate::gen::GenConfig,
    spec: &ProblemSpec,
    n_instances: usize,
    pref_grid: &[Preference],
    perm: impl Fn(&MultigraphInstance, &ProblemSpec, &Preference) -> Vec<usize>,
) -> Result<(Vec<GapRecord>, Vec<HvRecord>), CoreError> {
    let ideal = vec![0.0; spec.objective_dim];
    let mut gaps = Vec::with_capacity(n_instances * pref_grid.len());
    let mut hvs = Vec::with_capacity(n_instances);
    for i in 0..n_instances {
        let cfg = base.with_seed(
            crate::gen::rng::Stream::new(base.seed, &[crate::gen::rng::tags::EVAL, i as u64])
                .next_u64(),
        );
        let instance = crate::gen::generate(&cfg)?;
        let mut greedy_points: Vec<Vec<f64>> = Vec::new();
        let mut dp_points: Vec<Vec<f64>> = Vec::new();
        for pref in pref_grid {
            let pi = perm(&instance, spec, pref);
            let greedy_edges = fsasp_greedy_linear(&instance, spec, &pi, pref);
            let greedy_eval =
                evaluate_route(&instance, spec, &Route::new(pi.clone(), greedy_edges))?;
            let cheb_greedy = chebyshev_cost(&greedy_eval.objectives, pref, &ideal)?;
            let dp = fsasp_dp(&instance, spec, &pi, pref, &ideal)?;
            let gap = if dp.cost == 0.0 {
                0.0
            } else {
                (cheb_greedy - dp.cost) / dp.cost
            };
            gaps.push(GapRecord {
                instance: i,
                lambda1: pref.lambda()[0],
                cheb_greedy,
                cheb_dp: dp.cost,
                gap,
            });
            let dp_eval =
                evaluate_route(&instance, spec, &Route::new(pi.clone(), dp.edges.clone()))?;
            greedy_points.push(greedy_eval.objectives);
            dp_points.push(dp_eval.objectives);
        }
        if let Some(reference) = &spec.hv_reference {
            hvs.push(HvRecord {
                instance: i,
                hv_greedy: clipped_hv(&greedy_points, reference)?,
                hv_dp: clipped_hv(&dp_points, reference)?,
            });
        }
    }
    Ok((gaps, hvs))
}

/// Hypervolume over the points that fit inside the reference box; points
/// beyond the reference contribute nothing instead of erroring.
pub fn clipped_hv(points: &[Vec<f64>], reference: &[f64]) -> Result<f64, CoreError> {
    let inside: Vec<&[f64]> = points
        .iter()
        .filter(|p| p.iter().zip(reference).all(|(x, r)| x <= r))
        .map(|p| p.as_slice())
        .collect();
    crate::pareto::hypervolume_2d(&inside, reference)
}

/// Exhaustive enumeration over all edge selections; the independent
/// oracle for `fsasp_dp`. Exponential, so only usable for tiny sequences.
pub fn fsasp_enumerate(
    instance: &MultigraphInstance,
    spec: &ProblemSpec,
    pi: &[usize],
    pref: &Preference,
    ideal: &[f64],
) -> Result<Option<(Vec<usize>, f64)>, CoreError> {
    let positions = pi.len().saturating_sub(1);
    let mut counts = Vec::with_capacity(positions);
    for t in 0..positions {
        counts.push(instance.edges(pi[t], pi[t + 1]).len());
    }
    let total: usize = counts.iter().product();
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut selection = vec![0usize; positions];
    for code in 0..total {
        let mut c = code;
        for t in 0..positions {
            selection[t] = c % counts[t];
            c /= counts[t];
        }
        let eval = match evaluate_route(instance, spec, &Route::new(pi.to_vec(), selection.clone()))
        {
            Ok(e) => e,
            Err(_) => continue,
        };
        if spec.objective_dim == 1 && eval.violation > 0.0 {
            continue;
        }
        let scalar = if spec.objective_dim == 1 {
            eval.objectives[0]
        } else {
            chebyshev_cost(&eval.objectives, pref, ideal)?
        };
        if best.as_ref().map_or(true, |(_, b)| scalar < *b) {
            best = Some((selection.clone(), scalar));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::EdgeAttr;

    fn line_instance(edges_per_pair: &[Vec<[f64; 2]>], n: usize) -> MultigraphInstance {
        // edges_per_pair[t] holds the parallel edges for pair (t, t+1);
        // every other pair gets a filler edge.
        let mut sets = vec![Vec::new(); n * n];
        for u in 0..n {
            for v in 0..n {
                if u != v {
                    sets[u * n + v] = vec![EdgeAttr::new(vec![5.0, 5.0])];
                }
            }
        }
        for (t, parallel) in edges_per_pair.iter().enumerate() {
            sets[t * n + t + 1] = parallel
                .iter()
                .map(|a| EdgeAttr::new(a.to_vec()))
                .collect();
        }
        MultigraphInstance::new(n, 2, sets, None).unwrap()
    }

    #[test]
    fn dp_matches_enumeration_on_tiny_tour() {
        let inst = line_instance(
            &[
                vec![[1.0, 3.0], [3.0, 1.0]],
                vec![[2.0, 2.0], [0.5, 4.0]],
            ],
            3,
        );
        let spec = ProblemSpec::new(Variant::Motsp);
        let pref = Preference::bi(0.5).unwrap();
        let pi = vec![0, 1, 2, 0];
        let ideal = [0.0, 0.0];
        let dp = fsasp_dp(&inst, &spec, &pi, &pref, &ideal).unwrap();
        let (_, best) = fsasp_enumerate(&inst, &spec, &pi, &pref, &ideal)
            .unwrap()
            .unwrap();
        assert_eq!(dp.cost, best);
        assert!(dp.exact);
    }

    #[test]
    fn single_edge_sets_are_forced() {
        let inst = line_instance(&[vec![[1.0, 1.0]], vec![[2.0, 2.0]]], 3);
        let spec = ProblemSpec::new(Variant::Motsp);
        let pref = Preference::bi(0.3).unwrap();
        let pi = vec![0, 1, 2, 0];
        let dp = fsasp_dp(&inst, &spec, &pi, &pref, &[0.0, 0.0]).unwrap();
        assert_eq!(dp.edges, vec![0, 0, 0]);
        let greedy = fsasp_greedy_linear(&inst, &spec, &pi, &pref);
        assert_eq!(greedy, dp.edges);
    }

    #[test]
    fn greedy_axis_preference_takes_min_first_attr() {
        let inst = line_instance(&[vec![[2.0, 0.1], [1.0, 9.0]]], 3);
        let spec = ProblemSpec::new(Variant::Motsp);
        let pref = Preference::new(vec![1.0, 0.0]).unwrap();
        let pi = vec![0, 1, 2, 0];
        let eps = fsasp_greedy_linear(&inst, &spec, &pi, &pref);
        assert_eq!(eps[0], 1);
    }

    #[test]
    fn rctsp_dp_respects_hard_limit() {
        // Only the (low resource, high cost) combination fits the limit.
        let inst = line_instance(
            &[
                vec![[1.0, 3.0], [4.0, 0.5]],
                vec![[1.0, 3.0], [4.0, 0.5]],
            ],
            3,
        );
        let spec = ProblemSpec::new(Variant::Rctsp).with_resource_limit(7.0);
        let pi = vec![0, 1, 2, 0];
        let dp = fsasp_dp(&inst, &spec, &pi, &Preference::single(), &[0.0]).unwrap();
        // Filler closing edge consumes 5.0 resource, so both open pairs
        // must take the 0.5-resource edge.
        assert_eq!(dp.edges[0..2], [1, 1]);
        let tight = ProblemSpec::new(Variant::Rctsp).with_resource_limit(1.0);
        assert!(matches!(
            fsasp_dp(&inst, &tight, &pi, &Preference::single(), &[0.0]),
            Err(CoreError::Infeasible(_))
        ));
    }

    #[test]
    fn pruning_disabled_gives_same_optimum() {
        let inst = line_instance(
            &[
                vec![[1.0, 3.0], [3.0, 1.0], [2.0, 2.0]],
                vec![[2.0, 2.0], [0.5, 4.0]],
                vec![[1.5, 0.5], [0.25, 3.0]],
            ],
            4,
        );
        let spec = ProblemSpec::new(Variant::Motsp);
        let pref = Preference::bi(0.7).unwrap();
        let pi = vec![0, 1, 2, 3, 0];
        let with = fsasp_dp(&inst, &spec, &pi, &pref, &[0.0, 0.0]).unwrap();
        let without = fsasp_dp_with(
            &inst,
            &spec,
            &pi,
            &pref,
            &[0.0, 0.0],
            DpOptions { prune: false, label_cap: 1_000_000 },
        )
        .unwrap();
        assert_eq!(with.cost, without.cost);
    }
}
