//! Realistic multigraph generation: Euclidean points with a second,
//! partially correlated distance, turned into a multigraph whose parallel
//! edges are the Pareto-optimal bi-objective path costs between each node
//! pair.

use super::rng::{tags, Stream};
use super::Correlation;
use crate::error::CoreError;
use crate::instance::{EdgeAttr, MultigraphInstance};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// The second distance `d2 = nu * d1 + mu * gamma * d_hat`.
pub fn second_distance(nu: f64, mu: f64, gamma: f64, d_hat: f64, d1: f64) -> f64 {
    nu * d1 + mu * gamma * d_hat
}

/// Builds the realistic instance: points uniform in the unit square,
/// `d1` Euclidean, `d2` per the mixing formula, and per ordered pair the
/// Pareto set of `(d1, d2)` path costs computed by bi-objective
/// label-setting over the complete simple graph.
pub fn gen_realistic(
    n: usize,
    corr: Correlation,
    seed: u64,
) -> Result<MultigraphInstance, CoreError> {
    let (nu, mu) = corr.weights();
    let mut points = Vec::with_capacity(n);
    for u in 0..n {
        let mut s = Stream::new(seed, &[tags::NODE, u as u64]);
        points.push((s.next_f64(), s.next_f64()));
    }
    let mut d1 = vec![0.0; n * n];
    let mut d_hat = 0.0f64;
    for u in 0..n {
        for v in 0..n {
            if u != v {
                let dx = points[u].0 - points[v].0;
                let dy = points[u].1 - points[v].1;
                let d = (dx * dx + dy * dy).sqrt();
                d1[u * n + v] = d;
                d_hat = d_hat.max(d);
            }
        }
    }
    let mut d2 = vec![0.0; n * n];
    for u in 0..n {
        for v in 0..n {
            if u != v {
                let pair = (u * n + v) as u64;
                let gamma = Stream::new(seed, &[tags::GAMMA, pair]).next_f64();
                d2[u * n + v] = second_distance(nu, mu, gamma, d_hat, d1[u * n + v]);
            }
        }
    }
    let mut sets = vec![Vec::new(); n * n];
    for u in 0..n {
        let fronts = biobjective_shortest_paths(n, u, &d1, &d2);
        for (v, front) in fronts.into_iter().enumerate() {
            if v != u {
                sets[u * n + v] = front
                    .into_iter()
                    .map(|(a, b)| EdgeAttr::new(vec![a, b]))
                    .collect();
            }
        }
    }
    MultigraphInstance::new(n, 2, sets, None)
}

#[derive(Debug, Clone, PartialEq)]
struct Label {
    c1: f64,
    c2: f64,
    node: usize,
}

impl Eq for Label {}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed lexicographic order so the BinaryHeap pops the
        // smallest (c1, c2) first.
        other
            .c1
            .partial_cmp(&self.c1)
            .unwrap()
            .then(other.c2.partial_cmp(&self.c2).unwrap())
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn weakly_dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.0 && a.1 <= b.1
}

/// Label-setting bi-objective shortest paths from `source` to every node.
/// Returns the Pareto set of `(d1, d2)` path costs per target, sorted by
/// the first cost.
pub fn biobjective_shortest_paths(
    n: usize,
    source: usize,
    d1: &[f64],
    d2: &[f64],
) -> Vec<Vec<(f64, f64)>> {
    let mut settled: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
    let mut heap = BinaryHeap::new();
    heap.push(Label { c1: 0.0, c2: 0.0, node: source });
    while let Some(label) = heap.pop() {
        let here = (label.c1, label.c2);
        if settled[label.node].iter().any(|&p| weakly_dominates(p, here)) {
            continue;
        }
        settled[label.node].push(here);
        for next in 0..n {
            if next == label.node {
                continue;
            }
            let idx = label.node * n + next;
            let cand = (here.0 + d1[idx], here.1 + d2[idx]);
            if settled[next].iter().any(|&p| weakly_dominates(p, cand)) {
                continue;
            }
            heap.push(Label { c1: cand.0, c2: cand.1, node: next });
        }
    }
    // The source's own trivial label is not a path to itself.
    settled[source].clear();
    for front in &mut settled {
        front.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    settled
}
