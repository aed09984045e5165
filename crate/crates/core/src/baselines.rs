//! Classical constructive heuristics used as comparison points: nearest
//! neighbor, a Lagrangian beam search for the resource-constrained tour,
//! greedy prize collectors, and cheapest insertion for time windows.

use crate::error::CoreError;
use crate::eval::{evaluate_route, RouteEvaluation};
use crate::fsasp::edge_cost_weights;
use crate::instance::{MultigraphInstance, ProblemSpec, Variant};
use crate::pareto::Preference;
use crate::route::Route;
use std::collections::HashMap;

fn weighted(values: &[f64], weights: &[f64]) -> f64 {
    values.iter().zip(weights).map(|(v, w)| v * w).sum()
}

/// Cheapest parallel edge under attribute weights; ties take the lowest
/// index.
fn best_edge(instance: &MultigraphInstance, u: usize, v: usize, weights: &[f64]) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (l, e) in instance.edges(u, v).iter().enumerate() {
        let c = weighted(&e.values, weights);
        if c < best.1 {
            best = (l, c);
        }
    }
    best
}

/// Nearest-neighbor construction for the tour and capacitated variants:
/// repeatedly move to the unvisited node with the cheapest scalarized
/// parallel edge; the capacitated variant returns to the depot whenever no
/// remaining customer fits the load.
pub fn nearest_neighbor(
    instance: &MultigraphInstance,
    spec: &ProblemSpec,
    pref: &Preference,
) -> Result<Route, CoreError> {
    let weights = edge_cost_weights(spec, pref);
    let n = instance.num_nodes();
    match spec.variant {
        Variant::Motsp => {
            let (nodes, edges) = nn_tour(instance, 0, &weights);
            Ok(Route::new(nodes, edges))
        }
        Variant::Mocvrp => {
            let capacity = spec
                .capacity
                .ok_or_else(|| CoreError::SpecMismatch("mocvrp needs a capacity".into()))?;
            let demands = instance
                .node_attrs()
                .and_then(|a| a.demand.clone())
                .ok_or_else(|| CoreError::SpecMismatch("mocvrp needs demands".into()))?;
            let mut nodes = vec![0usize];
            let mut edges = Vec::new();
            let mut visited = vec![false; n];
            visited[0] = true;
            let mut load = 0.0;
            let mut current = 0usize;
            let mut remaining = n - 1;
            while remaining > 0 {
                let mut best: Option<(usize, usize, f64)> = None;
                for v in 1..n {
                    if visited[v] || load + demands[v] > capacity {
                        continue;
                    }
                    let (l, c) = best_edge(instance, current, v, &weights);
                    if best.map_or(true, |(_, _, bc)| c < bc) {
                        best = Some((v, l, c));
                    }
                }
                match best {
                    Some((v, l, _)) => {
                        nodes.push(v);
                        edges.push(l);
                        visited[v] = true;
                        load += demands[v];
                        current = v;
                        remaining -= 1;
                    }
                    None => {
                        let (l, _) = best_edge(instance, current, 0, &weights);
                        nodes.push(0);
                        edges.push(l);
                        load = 0.0;
                        current = 0;
                    }
                }
            }
            let (l, _) = best_edge(instance, current, 0, &weights);
            nodes.push(0);
            edges.push(l);
            Ok(Route::new(nodes, edges))
        }
        other => Err(CoreError::SpecMismatch(format!(
            "nearest neighbor supports motsp/mocvrp, not {}",
            other.name()
        ))),
    }
}

/// Plain nearest-neighbor tour from a fixed start under attribute weights,
/// greedy cheapest edge per pair.
pub fn nn_tour(
    instance: &MultigraphInstance,
    start: usize,
    weights: &[f64],
) -> (Vec<usize>, Vec<usize>) {
    let n = instance.num_nodes();
    let mut nodes = vec![start];
    let mut edges = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    visited[start] = true;
    let mut current = start;
    for _ in 1..n {
        let mut best: Option<(usize, usize, f64)> = None;
        for v in 0..n {
            if visited[v] {
                continue;
            }
            let (l, c) = best_edge(instance, current, v, weights);
            if best.map_or(true, |(_, _, bc)| c < bc) {
                best = Some((v, l, c));
            }
        }
        let (v, l, _) = best.expect("complete multigraph");
        nodes.push(v);
        edges.push(l);
        visited[v] = true;
        current = v;
    }
    let (l, _) = best_edge(instance, current, start, weights);
    nodes.push(start);
    edges.push(l);
    (nodes, edges)
}

#[derive(Clone)]
struct BeamState {
    nodes: Vec<usize>,
    edges: Vec<usize>,
    visited: Vec<u64>,
    cost: f64,
    resource: f64,
}

fn bit_get(mask: &[u64], i: usize) -> bool {
    mask[i / 64] >> (i % 64) & 1 == 1
}

fn bit_set(mask: &mut [u64], i: usize) {
    mask[i / 64] |= 1 << (i % 64);
}

/// Beam search for the resource-constrained tour. Partial tours score by
/// the Lagrangian `cost + multiplier * resource`; candidates over the
/// resource limit are pruned (unless that empties the beam), dominated
/// candidates for the same subproblem are dropped, finished tours are
/// repaired by switching parallel edges to lower-resource alternatives,
/// and the multiplier doubles after an infeasible round and halves
/// otherwise. An infinite limit collapses to a single pure-cost round.
pub fn beam_search_rctsp(
    instance: &MultigraphInstance,
    spec: &ProblemSpec,
    beam_width: usize,
    outer_iters: usize,
) -> Result<Route, CoreError> {
    if spec.variant != Variant::Rctsp {
        return Err(CoreError::SpecMismatch("beam search targets rctsp".into()));
    }
    let limit = spec
        .resource_limit
        .ok_or_else(|| CoreError::SpecMismatch("rctsp needs a resource limit".into()))?;
    let mut multiplier = if limit.is_finite() { 1.0 } else { 0.0 };
    let iters = if limit.is_finite() { outer_iters.max(1) } else { 1 };
    let mut best: Option<(Route, f64)> = None;

    for _ in 0..iters {
        let route = beam_construct(instance, multiplier, beam_width.max(1), limit);
        let (route, eval) = repair_resource(instance, spec, route)?;
        if eval.feasible {
            let cost = eval.objectives[0];
            if best.as_ref().map_or(true, |(_, b)| cost < *b) {
                best = Some((route, cost));
            }
            multiplier /= 2.0;
        } else {
            multiplier *= 2.0;
        }
    }
    best.map(|(r, _)| r)
        .ok_or_else(|| CoreError::NoFeasibleRoute("beam search found no feasible tour".into()))
}

fn beam_construct(
    instance: &MultigraphInstance,
    multiplier: f64,
    beam_width: usize,
    limit: f64,
) -> Route {
    let n = instance.num_nodes();
    let words = n.div_ceil(64);
    let mut start_mask = vec![0u64; words];
    bit_set(&mut start_mask, 0);
    let mut beam = vec![BeamState {
        nodes: vec![0],
        edges: Vec::new(),
        visited: start_mask,
        cost: 0.0,
        resource: 0.0,
    }];
    for _ in 1..n {
        let mut cands: Vec<BeamState> = Vec::new();
        for state in &beam {
            let current = *state.nodes.last().unwrap();
            for v in 0..n {
                if bit_get(&state.visited, v) {
                    continue;
                }
                let mut pick = (0usize, f64::INFINITY, 0.0, 0.0);
                for (l, e) in instance.edges(current, v).iter().enumerate() {
                    let score = e.values[0] + multiplier * e.values[1];
                    if score < pick.1 {
                        pick = (l, score, e.values[0], e.values[1]);
                    }
                }
                let mut next = state.clone();
                next.nodes.push(v);
                next.edges.push(pick.0);
                bit_set(&mut next.visited, v);
                next.cost += pick.2;
                next.resource += pick.3;
                cands.push(next);
            }
        }
        // Feasibility pruning, unless it would empty the beam.
        if cands.iter().any(|c| c.resource <= limit) {
            cands.retain(|c| c.resource <= limit);
        }
        // Pareto dominance within identical subproblems (same visited
        // set, same current node).
        let mut groups: HashMap<(Vec<u64>, usize), Vec<usize>> = HashMap::new();
        for (i, c) in cands.iter().enumerate() {
            groups
                .entry((c.visited.clone(), *c.nodes.last().unwrap()))
                .or_default()
                .push(i);
        }
        let mut dominated = vec![false; cands.len()];
        for idxs in groups.values() {
            for &i in idxs {
                for &j in idxs {
                    if i != j
                        && !dominated[i]
                        && cands[i].cost <= cands[j].cost
                        && cands[i].resource <= cands[j].resource
                        && (cands[i].cost < cands[j].cost
                            || cands[i].resource < cands[j].resource)
                    {
                        dominated[j] = true;
                    }
                }
            }
        }
        let mut kept: Vec<BeamState> = cands
            .into_iter()
            .enumerate()
            .filter(|(i, _)| !dominated[*i])
            .map(|(_, c)| c)
            .collect();
        kept.sort_by(|a, b| {
            let sa = a.cost + multiplier * a.resource;
            let sb = b.cost + multiplier * b.resource;
            sa.partial_cmp(&sb).unwrap().then(a.nodes.cmp(&b.nodes))
        });
        kept.truncate(beam_width);
        beam = kept;
    }
    // Close every tour and keep the Lagrangian-best.
    let mut best: Option<(Route, f64)> = None;
    for mut state in beam {
        let current = *state.nodes.last().unwrap();
        let mut pick = (0usize, f64::INFINITY, 0.0, 0.0);
        for (l, e) in instance.edges(current, 0).iter().enumerate() {
            let score = e.values[0] + multiplier * e.values[1];
            if score < pick.1 {
                pick = (l, score, e.values[0], e.values[1]);
            }
        }
        state.nodes.push(0);
        state.edges.push(pick.0);
        state.cost += pick.2;
        state.resource += pick.3;
        let score = state.cost + multiplier * state.resource;
        if best.as_ref().map_or(true, |(_, b)| score < *b) {
            best = Some((Route::new(state.nodes, state.edges), score));
        }
    }
    best.expect("beam is never empty").0
}

/// Greedy repair: while over the resource limit, apply the parallel-edge
/// swap saving the most resource (ties by smallest cost increase).
fn repair_resource(
    instance: &MultigraphInstance,
    spec: &ProblemSpec,
    mut route: Route,
) -> Result<(Route, RouteEvaluation), CoreError> {
    let mut eval = evaluate_route(instance, spec, &route)?;
    while !eval.feasible {
        let mut best_swap: Option<(usize, usize, f64, f64)> = None;
        for t in 0..route.edges.len() {
            let (u, v) = (route.nodes[t], route.nodes[t + 1]);
            let here = &instance.edges(u, v)[route.edges[t]];
            for (l, e) in instance.edges(u, v).iter().enumerate() {
                let saving = here.values[1] - e.values[1];
                let cost_up = e.values[0] - here.values[0];
                if saving > 0.0
                    && best_swap.map_or(true, |(_, _, s, c)| {
                        saving > s || (saving == s && cost_up < c)
                    })
                {
                    best_swap = Some((t, l, saving, cost_up));
                }
            }
        }
        match best_swap {
            Some((t, l, _, _)) => {
                route.edges[t] = l;
                eval = evaluate_route(instance, spec, &route)?;
            }
            None => break,
        }
    }
    Ok((route, eval))
}

/// Greedy constructive orienteering: extend by the best prize-to-cost
/// ratio where each cost axis is weighted by its fraction of the threshold
/// already used; a move is admissible only if some parallel return edge to
/// the depot stays within both thresholds. Always returns a feasible
/// route.
pub fn greedy_op(
    instance: &MultigraphInstance,
    spec: &ProblemSpec,
) -> Result<Route, CoreError> {
    if spec.variant != Variant::Op {
        return Err(CoreError::SpecMismatch("greedy_op targets op".into()));
    }
    let (t1, t2) = spec
        .thresholds
        .ok_or_else(|| CoreError::SpecMismatch("op needs thresholds".into()))?;
    let prizes = instance
        .node_attrs()
        .and_then(|a| a.prize.clone())
        .ok_or_else(|| CoreError::SpecMismatch("op needs prizes".into()))?;
    let n = instance.num_nodes();
    let mut nodes = vec![0usize];
    let mut edges = Vec::new();
    let mut visited = vec![false; n];
    visited[0] = true;
    let mut usage = [0.0f64; 2];
    let mut current = 0usize;
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for v in 1..n {
            if visited[v] {
                continue;
            }
            for (l, e) in instance.edges(current, v).iter().enumerate() {
                let u1 = usage[0] + e.values[0];
                let u2 = usage[1] + e.values[1];
                if u1 > t1 || u2 > t2 {
                    continue;
                }
                let can_return = instance
                    .edges(v, 0)
                    .iter()
                    .any(|r| u1 + r.values[0] <= t1 && u2 + r.values[1] <= t2);
                if !can_return {
                    continue;
                }
                // Cost axes matter more as their budgets fill up.
                let w1 = usage[0] / t1.max(f64::MIN_POSITIVE) + 1e-9;
                let w2 = usage[1] / t2.max(f64::MIN_POSITIVE) + 1e-9;
                let ratio = prizes[v] / (w1 * e.values[0] + w2 * e.values[1]);
                if best.map_or(true, |(_, _, r)| ratio > r) {
                    best = Some((v, l, ratio));
                }
            }
        }
        match best {
            Some((v, l, _)) => {
                nodes.push(v);
                edges.push(l);
                visited[v] = true;
                let e = &instance.edges(current, v)[l];
                usage[0] += e.values[0];
                usage[1] += e.values[1];
                current = v;
            }
            None => break,
        }
    }
    if current != 0 {
        // A feasible return edge exists by construction of every move.
        let mut pick: Option<(usize, f64)> = None;
        for (l, e) in instance.edges(current, 0).iter().enumerate() {
            if usage[0] + e.values[0] <= t1 && usage[1] + e.values[1] <= t2 {
                let c = e.values[0] + e.values[1];
                if pick.map_or(true, |(_, b)| c < b) {
                    pick = Some((l, c));
                }
            }
        }
        let (l, _) = pick.ok_or_else(|| {
            CoreError::NoFeasibleRoute("return edge vanished during construction".into())
        })?;
        nodes.push(0);
        edges.push(l);
    }
    Ok(Route::new(nodes, edges))
}

/// Greedy bi-objective prize collector: the ratio weighs the prize by the
/// prize-objective preference and the edge cost by the cost-objective
/// preference, under the resource budget with a guaranteed depot return.
pub fn greedy_moop(
    instance: &MultigraphInstance,
    spec: &ProblemSpec,
    pref: &Preference,
) -> Result<Route, CoreError> {
    if spec.variant != Variant::Moop {
        return Err(CoreError::SpecMismatch("greedy_moop targets moop".into()));
    }
    let limit = spec
        .resource_limit
        .ok_or_else(|| CoreError::SpecMismatch("moop needs a resource limit".into()))?;
    let prizes = instance
        .node_attrs()
        .and_then(|a| a.prize.clone())
        .ok_or_else(|| CoreError::SpecMismatch("moop needs prizes".into()))?;
    let (l1, l2) = (pref.lambda()[0], pref.lambda()[1]);
    let n = instance.num_nodes();
    let mut nodes = vec![0usize];
    let mut edges = Vec::new();
    let mut visited = vec![false; n];
    visited[0] = true;
    let mut resource = 0.0f64;
    let mut current = 0usize;
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for v in 1..n {
            if visited[v] {
                continue;
            }
            for (l, e) in instance.edges(current, v).iter().enumerate() {
                let r = resource + e.values[1];
                if r > limit {
                    continue;
                }
                let can_return = instance.edges(v, 0).iter().any(|b| r + b.values[1] <= limit);
                if !can_return {
                    continue;
                }
                let ratio = (l1 * prizes[v]) / (l2 * e.values[0] + 1e-9);
                if best.map_or(true, |(_, _, b)| ratio > b) {
                    best = Some((v, l, ratio));
                }
            }
        }
        match best {
            Some((v, l, _)) => {
                nodes.push(v);
                edges.push(l);
                visited[v] = true;
                resource += instance.edges(current, v)[l].values[1];
                current = v;
            }
            None => break,
        }
    }
    if current != 0 {
        let mut pick: Option<(usize, f64)> = None;
        for (l, e) in instance.edges(current, 0).iter().enumerate() {
            if resource + e.values[1] <= limit {
                let c = e.values[0];
                if pick.map_or(true, |(_, b)| c < b) {
                    pick = Some((l, c));
                }
            }
        }
        let (l, _) = pick.ok_or_else(|| {
            CoreError::NoFeasibleRoute("return edge vanished during construction".into())
        })?;
        nodes.push(0);
        edges.push(l);
    }
    Ok(Route::new(nodes, edges))
}

/// Cheapest insertion for the time-window tour: nodes are inserted at the
/// position (trying every pair of parallel edges) minimizing the
/// preference-weighted sum of incremental violations and incremental
/// distance, re-simulating downstream arrival times for each option.
pub fn insertion_motsptw(
    instance: &MultigraphInstance,
    spec: &ProblemSpec,
    pref: &Preference,
) -> Result<Route, CoreError> {
    if spec.variant != Variant::Motsptw {
        return Err(CoreError::SpecMismatch("insertion targets motsptw".into()));
    }
    let windows = instance
        .node_attrs()
        .and_then(|a| a.time_windows.clone())
        .ok_or_else(|| CoreError::SpecMismatch("motsptw needs time windows".into()))?;
    let (lv, ld) = (pref.lambda()[0], pref.lambda()[1]);
    let n = instance.num_nodes();
    let mut nodes: Vec<usize> = vec![0, 0];
    let mut edges: Vec<usize> = Vec::new();
    let mut remaining: Vec<usize> = (1..n).collect();

    let tour_score = |nodes: &[usize], edges: &[usize]| -> (f64, f64) {
        let mut clock = 0.0;
        let mut dist = 0.0;
        let mut violations = 0.0;
        for (t, &l) in edges.iter().enumerate() {
            let e = &instance.edges(nodes[t], nodes[t + 1])[l];
            dist += e.values[0];
            clock += e.values[1];
            if clock > windows[nodes[t + 1]].1 {
                violations += 1.0;
            }
        }
        (violations, dist)
    };

    while !remaining.is_empty() {
        let (base_v, base_d) = tour_score(&nodes, &edges);
        let mut best: Option<(usize, usize, usize, usize, f64)> = None;
        for (ri, &v) in remaining.iter().enumerate() {
            for pos in 0..nodes.len() - 1 {
                let (a, b) = (nodes[pos], nodes[pos + 1]);
                // The first insertion replaces the empty depot-depot
                // stub, which has no edge to remove.
                let m_in = instance.edges(a, v).len();
                let m_out = instance.edges(v, b).len();
                for li in 0..m_in {
                    for lo in 0..m_out {
                        let mut cand_nodes = nodes.clone();
                        let mut cand_edges = edges.clone();
                        cand_nodes.insert(pos + 1, v);
                        if edges.is_empty() {
                            cand_edges = vec![li, lo];
                        } else {
                            cand_edges.splice(pos..pos + 1, [li, lo]);
                        }
                        let (cv, cd) = tour_score(&cand_nodes, &cand_edges);
                        let score = lv * (cv - base_v) + ld * (cd - base_d);
                        if best.map_or(true, |(.., b)| score < b) {
                            best = Some((ri, pos, li, lo, score));
                        }
                    }
                }
            }
        }
        let (ri, pos, li, lo, _) = best.expect("remaining is non-empty");
        let v = remaining.remove(ri);
        nodes.insert(pos + 1, v);
        if edges.is_empty() {
            edges = vec![li, lo];
        } else {
            edges.splice(pos..pos + 1, [li, lo]);
        }
    }
    Ok(Route::new(nodes, edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{EdgeAttr, NodeAttrs};

    fn complete(n: usize, f: impl Fn(usize, usize) -> Vec<Vec<f64>>) -> Vec<Vec<EdgeAttr>> {
        let mut sets = vec![Vec::new(); n * n];
        for u in 0..n {
            for v in 0..n {
                if u != v {
                    sets[u * n + v] = f(u, v).into_iter().map(EdgeAttr::new).collect();
                }
            }
        }
        sets
    }

    #[test]
    fn nn_two_customers_is_valid_tour() {
        let inst =
            MultigraphInstance::new(3, 2, complete(3, |_, _| vec![vec![1.0, 1.0]]), None).unwrap();
        let spec = ProblemSpec::new(Variant::Motsp);
        let r = nearest_neighbor(&inst, &spec, &Preference::bi(0.5).unwrap()).unwrap();
        r.validate(&inst, &spec).unwrap();
        assert_eq!(r.nodes.len(), 4);
    }

    #[test]
    fn mocvrp_full_demands_force_depot_returns() {
        let sets = complete(3, |_, _| vec![vec![1.0, 1.0]]);
        let inst = MultigraphInstance::new(
            3,
            2,
            sets,
            Some(NodeAttrs {
                prize: None,
                demand: Some(vec![0.0, 5.0, 5.0]),
                time_windows: None,
            }),
        )
        .unwrap();
        let spec = ProblemSpec::new(Variant::Mocvrp).with_capacity(5.0);
        let r = nearest_neighbor(&inst, &spec, &Preference::bi(0.5).unwrap()).unwrap();
        r.validate(&inst, &spec).unwrap();
        // Every customer needs its own trip: 0-a-0-b-0.
        assert_eq!(r.nodes.len(), 5);
        assert_eq!(r.nodes.iter().filter(|&&u| u == 0).count(), 3);
        let eval = evaluate_route(&inst, &spec, &r).unwrap();
        assert!(eval.feasible);
    }

    #[test]
    fn greedy_op_zero_thresholds_stays_home() {
        let sets = complete(3, |_, _| vec![vec![1.0, 1.0]]);
        let inst = MultigraphInstance::new(
            3,
            2,
            sets,
            Some(NodeAttrs {
                prize: Some(vec![0.0, 1.0, 1.0]),
                demand: None,
                time_windows: None,
            }),
        )
        .unwrap();
        let spec = ProblemSpec::new(Variant::Op).with_thresholds(0.0, 0.0);
        let r = greedy_op(&inst, &spec).unwrap();
        assert_eq!(r.nodes, vec![0]);
        let eval = evaluate_route(&inst, &spec, &r).unwrap();
        assert_eq!(eval.violation, 0.0);
        assert_eq!(eval.objectives[0], 2.0);
    }

    #[test]
    fn greedy_op_unbounded_visits_everything() {
        let sets = complete(4, |_, _| vec![vec![1.0, 1.0]]);
        let inst = MultigraphInstance::new(
            4,
            2,
            sets,
            Some(NodeAttrs {
                prize: Some(vec![0.0, 0.5, 0.9, 0.2]),
                demand: None,
                time_windows: None,
            }),
        )
        .unwrap();
        let spec = ProblemSpec::new(Variant::Op).with_thresholds(1e9, 1e9);
        let r = greedy_op(&inst, &spec).unwrap();
        assert_eq!(r.nodes.len(), 5);
        let eval = evaluate_route(&inst, &spec, &r).unwrap();
        assert_eq!(eval.objectives[0], 0.0);
    }

    #[test]
    fn greedy_moop_zero_budget_is_empty_route() {
        let sets = complete(3, |_, _| vec![vec![1.0, 1.0]]);
        let inst = MultigraphInstance::new(
            3,
            2,
            sets,
            Some(NodeAttrs {
                prize: Some(vec![0.0, 1.0, 1.0]),
                demand: None,
                time_windows: None,
            }),
        )
        .unwrap();
        let spec = ProblemSpec::new(Variant::Moop).with_resource_limit(1e-9);
        let r = greedy_moop(&inst, &spec, &Preference::bi(0.5).unwrap()).unwrap();
        assert_eq!(r.nodes, vec![0]);
    }

    #[test]
    fn insertion_first_node_gives_out_and_back() {
        let sets = complete(3, |_, _| vec![vec![1.0, 1.0]]);
        let inst = MultigraphInstance::new(
            3,
            2,
            sets,
            Some(NodeAttrs {
                prize: None,
                demand: None,
                time_windows: Some(vec![
                    (0.0, f64::INFINITY),
                    (0.0, f64::INFINITY),
                    (0.0, f64::INFINITY),
                ]),
            }),
        )
        .unwrap();
        let spec = ProblemSpec::new(Variant::Motsptw);
        let r = insertion_motsptw(&inst, &spec, &Preference::bi(0.5).unwrap()).unwrap();
        r.validate(&inst, &spec).unwrap();
        let eval = evaluate_route(&inst, &spec, &r).unwrap();
        assert_eq!(eval.objectives[0], 0.0);
    }

    #[test]
    fn beam_width_one_simple_graph_is_greedy() {
        let sets = complete(4, |u, v| vec![vec![(u + v) as f64, 0.1]]);
        let inst = MultigraphInstance::new(4, 2, sets, None).unwrap();
        let spec = ProblemSpec::new(Variant::Rctsp).with_resource_limit(100.0);
        let r = beam_search_rctsp(&inst, &spec, 1, 3).unwrap();
        r.validate(&inst, &spec).unwrap();
        let eval = evaluate_route(&inst, &spec, &r).unwrap();
        assert!(eval.feasible);
    }
}
