//! JSON schemas for instances and routes, shared by the CLI and tests.
//!
//! Instance layout:
//! `{ "n": int, "attr_dim": int, "edges": [[u, v, [a_1..a_k]], ...],
//!    "node_attrs": {...}, "spec": {...} }`
//! Parallel edges appear as repeated `[u, v, attrs]` entries; the edge
//! index within a pair is the entry's order of appearance. Infinite
//! time-window closes serialize as `null`.

use crate::error::CoreError;
use crate::instance::{EdgeAttr, MultigraphInstance, NodeAttrs, ProblemSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
struct NodeAttrsJson {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    prize: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    demand: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    tw: Option<Vec<(f64, Option<f64>)>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceJson {
    n: usize,
    attr_dim: usize,
    edges: Vec<(usize, usize, Vec<f64>)>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    node_attrs: Option<NodeAttrsJson>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    spec: Option<ProblemSpec>,
}

/// Serializes an instance (and optional embedded spec) to JSON.
pub fn instance_to_json(
    instance: &MultigraphInstance,
    spec: Option<&ProblemSpec>,
) -> serde_json::Value {
    let mut edges = Vec::new();
    for (u, v) in instance.pairs() {
        for e in instance.edges(u, v) {
            edges.push((u, v, e.values.clone()));
        }
    }
    let node_attrs = instance.node_attrs().map(|a| NodeAttrsJson {
        prize: a.prize.clone(),
        demand: a.demand.clone(),
        tw: a.time_windows.as_ref().map(|ws| {
            ws.iter()
                .map(|&(o, c)| (o, if c.is_finite() { Some(c) } else { None }))
                .collect()
        }),
    });
    serde_json::to_value(InstanceJson {
        n: instance.num_nodes(),
        attr_dim: instance.attr_dim(),
        edges,
        node_attrs,
        spec: spec.cloned(),
    })
    .expect("instance serialization cannot fail")
}

/// Parses an instance (and the embedded spec, when present).
pub fn instance_from_json(
    value: &serde_json::Value,
) -> Result<(MultigraphInstance, Option<ProblemSpec>), CoreError> {
    let parsed: InstanceJson = serde_json::from_value(value.clone())
        .map_err(|e| CoreError::Schema(format!("bad instance json: {e}")))?;
    let n = parsed.n;
    let mut sets: Vec<Vec<EdgeAttr>> = vec![Vec::new(); n * n];
    for (u, v, attrs) in parsed.edges {
        if u >= n || v >= n {
            return Err(CoreError::Schema(format!("edge endpoint ({u}, {v}) out of range")));
        }
        sets[u * n + v].push(EdgeAttr::new(attrs));
    }
    let node_attrs = parsed.node_attrs.map(|a| NodeAttrs {
        prize: a.prize,
        demand: a.demand,
        time_windows: a.tw.map(|ws| {
            ws.into_iter()
                .map(|(o, c)| (o, c.unwrap_or(f64::INFINITY)))
                .collect()
        }),
    });
    let instance = MultigraphInstance::new(n, parsed.attr_dim, sets, node_attrs)?;
    if let Some(spec) = &parsed.spec {
        spec.validate()?;
    }
    Ok((instance, parsed.spec))
}
