//! Evaluation invariants: determinism, additivity, reversal symmetry and
//! the violation/feasibility contract under route fuzzing.

use polyroute_core::eval::{evaluate_route, segment_attr_sums};
use polyroute_core::gen::rng::Stream;
use polyroute_core::gen::{generate, Distribution, GenConfig};
use polyroute_core::instance::{EdgeAttr, MultigraphInstance, ProblemSpec, Variant};
use polyroute_core::route::Route;

fn random_route(inst: &MultigraphInstance, variant: Variant, s: &mut Stream) -> Route {
    let n = inst.num_nodes();
    let mut pick_edge = |u: usize, v: usize, s: &mut Stream| {
        s.uniform_int(inst.edges(u, v).len() as u64) as usize
    };
    let nodes: Vec<usize> = match variant {
        Variant::Motsp | Variant::Rctsp => {
            let mut p: Vec<usize> = (0..n).collect();
            s.shuffle(&mut p);
            p.push(p[0]);
            p
        }
        Variant::Motsptw => {
            let mut p: Vec<usize> = (1..n).collect();
            s.shuffle(&mut p);
            let mut nodes = vec![0];
            nodes.extend(p);
            nodes.push(0);
            nodes
        }
        Variant::Mocvrp => {
            let mut p: Vec<usize> = (1..n).collect();
            s.shuffle(&mut p);
            let mut nodes = vec![0];
            for (i, v) in p.into_iter().enumerate() {
                nodes.push(v);
                // Random intermediate depot returns.
                if i + 2 < n && s.next_f64() < 0.3 {
                    nodes.push(0);
                }
            }
            nodes.push(0);
            nodes
        }
        Variant::Op | Variant::Moop => {
            let keep = s.uniform_int(n as u64) as usize;
            let mut p: Vec<usize> = (1..n).collect();
            s.shuffle(&mut p);
            p.truncate(keep);
            if p.is_empty() {
                return Route::new(vec![0], vec![]);
            }
            let mut nodes = vec![0];
            nodes.extend(p);
            nodes.push(0);
            nodes
        }
    };
    let edges = (0..nodes.len() - 1)
        .map(|t| pick_edge(nodes[t], nodes[t + 1], s))
        .collect();
    Route::new(nodes, edges)
}

fn spec_for(variant: Variant) -> ProblemSpec {
    match variant {
        Variant::Rctsp => ProblemSpec::new(variant).with_resource_limit(3.0),
        Variant::Moop => ProblemSpec::new(variant).with_resource_limit(2.0),
        Variant::Op => ProblemSpec::new(variant).with_thresholds(2.0, 2.0),
        Variant::Mocvrp => ProblemSpec::new(variant).with_capacity(15.0),
        _ => ProblemSpec::new(variant),
    }
}

#[test]
fn violation_zero_iff_feasible_under_fuzzing() {
    let variants = [
        Variant::Motsp,
        Variant::Rctsp,
        Variant::Op,
        Variant::Mocvrp,
        Variant::Motsptw,
        Variant::Moop,
    ];
    let mut s = Stream::new(1001, &[]);
    for (i, &variant) in variants.iter().cycle().take(600).enumerate() {
        let cfg = GenConfig::new(Distribution::Flex(3), 6, variant, 5000 + i as u64);
        let inst = generate(&cfg).unwrap();
        let spec = spec_for(variant);
        let route = random_route(&inst, variant, &mut s);
        let eval = evaluate_route(&inst, &spec, &route).unwrap();
        assert_eq!(eval.feasible, eval.violation == 0.0);
        assert!(eval.objectives.iter().all(|x| x.is_finite()));
        assert_eq!(eval.state_trace.len(), route.nodes.len());
        // Determinism: same inputs, same outputs.
        let again = evaluate_route(&inst, &spec, &route).unwrap();
        assert_eq!(eval, again);
    }
}

#[test]
fn mocvrp_concatenation_is_additive() {
    let cfg = GenConfig::new(Distribution::Flex(2), 7, Variant::Mocvrp, 99);
    let inst = generate(&cfg).unwrap();
    let spec = ProblemSpec::new(Variant::Mocvrp).with_capacity(50.0);
    // Two disjoint single-trip routes joined at the depot.
    let a = Route::new(vec![0, 1, 2, 3, 0], vec![0, 0, 0, 0]);
    let b = Route::new(vec![0, 4, 5, 6, 0], vec![0, 0, 0, 0]);
    let joined = Route::new(
        vec![0, 1, 2, 3, 0, 4, 5, 6, 0],
        vec![0, 0, 0, 0, 0, 0, 0, 0],
    );
    // Partial routes are not structurally valid alone for the variant's
    // customer coverage, so compare raw attribute sums plus full-route
    // evaluation of the join.
    let sa = segment_attr_sums(&inst, &a.nodes, &a.edges);
    let sb = segment_attr_sums(&inst, &b.nodes, &b.edges);
    let eval = evaluate_route(&inst, &spec, &joined).unwrap();
    for k in 0..2 {
        assert!((eval.objectives[k] - (sa[k] + sb[k])).abs() < 1e-12);
    }
}

#[test]
fn motsp_segment_sums_are_additive() {
    let cfg = GenConfig::new(Distribution::Flex(3), 8, Variant::Motsp, 42);
    let inst = generate(&cfg).unwrap();
    let nodes = [0usize, 3, 5, 1, 7, 2];
    let edges = [0usize, 0, 0, 0, 0];
    let full = segment_attr_sums(&inst, &nodes, &edges);
    let left = segment_attr_sums(&inst, &nodes[..3], &edges[..2]);
    let right = segment_attr_sums(&inst, &nodes[2..], &edges[2..]);
    for k in 0..2 {
        assert!((full[k] - (left[k] + right[k])).abs() < 1e-12);
    }
}

#[test]
fn reversed_tour_on_symmetric_instance_keeps_objectives() {
    let n = 6;
    let base = generate(&GenConfig::new(Distribution::Flex(2), n, Variant::Motsp, 17)).unwrap();
    // Mirror each pair's edges onto the reverse pair.
    let mut sets = vec![Vec::new(); n * n];
    for u in 0..n {
        for v in 0..n {
            if u < v {
                let shared: Vec<EdgeAttr> = base.edges(u, v).to_vec();
                sets[u * n + v] = shared.clone();
                sets[v * n + u] = shared;
            }
        }
    }
    let inst = MultigraphInstance::new(n, 2, sets, None).unwrap();
    let spec = ProblemSpec::new(Variant::Motsp);
    let mut s = Stream::new(3, &[]);
    for _ in 0..50 {
        let route = random_route(&inst, Variant::Motsp, &mut s);
        let reversed = Route::new(
            route.nodes.iter().rev().copied().collect(),
            route.edges.iter().rev().copied().collect(),
        );
        let fwd = evaluate_route(&inst, &spec, &route).unwrap();
        let bwd = evaluate_route(&inst, &spec, &reversed).unwrap();
        for k in 0..2 {
            assert!((fwd.objectives[k] - bwd.objectives[k]).abs() < 1e-12);
        }
    }
}
