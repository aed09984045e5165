//! Route representation: a node sequence plus one parallel-edge index per
//! consecutive pair.

use crate::error::CoreError;
use crate::instance::{MultigraphInstance, NodeId, ProblemSpec, Variant};
use serde::{Deserialize, Serialize};

/// A route through the multigraph. `edges[t]` indexes into the parallel
/// edge set between `nodes[t]` and `nodes[t + 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    #[serde(rename = "pi")]
    pub nodes: Vec<NodeId>,
    #[serde(rename = "eps")]
    pub edges: Vec<usize>,
}

impl Route {
    pub fn new(nodes: Vec<NodeId>, edges: Vec<usize>) -> Self {
        Route { nodes, edges }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Checks structural invariants against the instance and the variant's
    /// visit rules.
    pub fn validate(
        &self,
        instance: &MultigraphInstance,
        spec: &ProblemSpec,
    ) -> Result<(), CoreError> {
        let n = instance.num_nodes();
        if self.nodes.is_empty() {
            return Err(CoreError::Structural("route has no nodes".into()));
        }
        if self.edges.len() + 1 != self.nodes.len() {
            return Err(CoreError::Structural(format!(
                "route has {} nodes but {} edges",
                self.nodes.len(),
                self.edges.len()
            )));
        }
        if let Some(&bad) = self.nodes.iter().find(|&&u| u >= n) {
            return Err(CoreError::Structural(format!("node index {bad} out of range")));
        }
        for t in 0..self.edges.len() {
            let (u, v) = (self.nodes[t], self.nodes[t + 1]);
            if u == v {
                return Err(CoreError::Structural(format!(
                    "consecutive repeat of node {u} at position {t}"
                )));
            }
            let m = instance.edges(u, v).len();
            if self.edges[t] >= m {
                return Err(CoreError::Structural(format!(
                    "edge index {} out of range for pair ({u}, {v}) with {m} edges",
                    self.edges[t]
                )));
            }
        }
        self.validate_visits(n, spec.variant)
    }

    fn validate_visits(&self, n: usize, variant: Variant) -> Result<(), CoreError> {
        let first = self.nodes[0];
        let last = *self.nodes.last().unwrap();
        match variant {
            Variant::Motsp | Variant::Rctsp | Variant::Motsptw => {
                if variant == Variant::Motsptw && first != 0 {
                    return Err(CoreError::Structural(
                        "time-window tour must start at the depot".into(),
                    ));
                }
                if self.nodes.len() != n + 1 || first != last {
                    return Err(CoreError::Structural(format!(
                        "tour must list all {n} nodes and close at its start"
                    )));
                }
                let mut seen = vec![false; n];
                for &u in &self.nodes[..n] {
                    if seen[u] {
                        return Err(CoreError::Structural(format!("node {u} visited twice")));
                    }
                    seen[u] = true;
                }
            }
            Variant::Mocvrp => {
                if first != 0 || last != 0 {
                    return Err(CoreError::Structural(
                        "capacitated route must start and end at the depot".into(),
                    ));
                }
                let mut seen = vec![false; n];
                for &u in &self.nodes {
                    if u != 0 {
                        if seen[u] {
                            return Err(CoreError::Structural(format!(
                                "customer {u} visited twice"
                            )));
                        }
                        seen[u] = true;
                    }
                }
                if let Some(missing) = (1..n).find(|&u| !seen[u]) {
                    return Err(CoreError::Structural(format!(
                        "customer {missing} never visited"
                    )));
                }
            }
            Variant::Op | Variant::Moop => {
                if first != 0 || last != 0 {
                    return Err(CoreError::Structural(
                        "orienteering route must start and end at the depot".into(),
                    ));
                }
                if self.nodes.len() > 1 && self.nodes[1..self.nodes.len() - 1].contains(&0) {
                    return Err(CoreError::Structural(
                        "orienteering route may touch the depot only at its ends".into(),
                    ));
                }
                let mut seen = vec![false; n];
                for &u in self.nodes.iter().skip(1).take(self.nodes.len().saturating_sub(2)) {
                    if seen[u] {
                        return Err(CoreError::Structural(format!("node {u} visited twice")));
                    }
                    seen[u] = true;
                }
            }
        }
        Ok(())
    }
}
