//! Instance data model: directed complete multigraphs with per-edge
//! attribute vectors, optional node attributes, and problem parameters.

use crate::error::CoreError;
use serde::{Deserialize, Serialize};

pub type NodeId = usize;

/// Attribute vector of a single parallel edge, e.g. `[cost, resource]`
/// or `[distance, travel_time]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeAttr {
    pub values: Vec<f64>,
}

impl EdgeAttr {
    pub fn new(values: Vec<f64>) -> Self {
        EdgeAttr { values }
    }
}

/// Per-node attributes. Presence of each field depends on the variant:
/// prizes for orienteering variants, demands for the capacitated variant,
/// time windows for the time-window variant.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeAttrs {
    pub prize: Option<Vec<f64>>,
    pub demand: Option<Vec<f64>>,
    /// `[open, close]` per node; the depot window is `[0, +inf)`.
    pub time_windows: Option<Vec<(f64, f64)>>,
}

/// Problem variant tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Rctsp,
    Op,
    Motsp,
    Mocvrp,
    Motsptw,
    Moop,
}

impl Variant {
    /// Number of objectives for the variant.
    pub fn objective_dim(self) -> usize {
        match self {
            Variant::Rctsp | Variant::Op => 1,
            Variant::Motsp | Variant::Mocvrp | Variant::Motsptw | Variant::Moop => 2,
        }
    }

    pub fn is_multi_objective(self) -> bool {
        self.objective_dim() > 1
    }

    /// Variants whose routes start and end at the depot (node 0).
    pub fn depot_based(self) -> bool {
        matches!(
            self,
            Variant::Op | Variant::Mocvrp | Variant::Motsptw | Variant::Moop
        )
    }

    /// Variants where the route visits a subset of nodes and ends by
    /// returning to the depot at a time of the policy's choosing.
    pub fn open_subset(self) -> bool {
        matches!(self, Variant::Op | Variant::Moop)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Rctsp => "rctsp",
            Variant::Op => "op",
            Variant::Motsp => "motsp",
            Variant::Mocvrp => "mocvrp",
            Variant::Motsptw => "motsptw",
            Variant::Moop => "moop",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self, CoreError> {
        match s.to_ascii_lowercase().as_str() {
            "rctsp" => Ok(Variant::Rctsp),
            "op" => Ok(Variant::Op),
            "motsp" => Ok(Variant::Motsp),
            "mocvrp" => Ok(Variant::Mocvrp),
            "motsptw" => Ok(Variant::Motsptw),
            "moop" => Ok(Variant::Moop),
            other => Err(CoreError::InvalidSpec(format!("unknown variant `{other}`"))),
        }
    }
}

/// Variant parameters: capacity, resource limits, cost thresholds, and the
/// hypervolume reference point for bi-objective variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub variant: Variant,
    pub objective_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub capacity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub resource_limit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub thresholds: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hv_reference: Option<Vec<f64>>,
}

impl ProblemSpec {
    pub fn new(variant: Variant) -> Self {
        ProblemSpec {
            variant,
            objective_dim: variant.objective_dim(),
            capacity: None,
            resource_limit: None,
            thresholds: None,
            hv_reference: None,
        }
    }

    pub fn with_capacity(mut self, c: f64) -> Self {
        self.capacity = Some(c);
        self
    }

    pub fn with_resource_limit(mut self, r: f64) -> Self {
        self.resource_limit = Some(r);
        self
    }

    pub fn with_thresholds(mut self, t1: f64, t2: f64) -> Self {
        self.thresholds = Some((t1, t2));
        self
    }

    pub fn with_hv_reference(mut self, r: Vec<f64>) -> Self {
        self.hv_reference = Some(r);
        self
    }

    /// Checks that every present parameter is positive and that the
    /// objective dimension matches the variant.
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.objective_dim != self.variant.objective_dim() {
            return Err(CoreError::InvalidSpec(format!(
                "variant {} has {} objectives, spec says {}",
                self.variant.name(),
                self.variant.objective_dim(),
                self.objective_dim
            )));
        }
        for (name, v) in [("capacity", self.capacity), ("resource_limit", self.resource_limit)] {
            if let Some(x) = v {
                if !(x > 0.0) {
                    return Err(CoreError::InvalidSpec(format!("{name} must be positive, got {x}")));
                }
            }
        }
        if let Some((t1, t2)) = self.thresholds {
            if !(t1 >= 0.0 && t2 >= 0.0) {
                return Err(CoreError::InvalidSpec(format!(
                    "thresholds must be non-negative, got ({t1}, {t2})"
                )));
            }
        }
        if let Some(r) = &self.hv_reference {
            if r.len() != self.objective_dim || r.iter().any(|x| !(*x > 0.0)) {
                return Err(CoreError::InvalidSpec(format!(
                    "hv reference must be {} positive values, got {r:?}",
                    self.objective_dim
                )));
            }
        }
        Ok(())
    }
}

/// Directed complete multigraph with parallel edge sets per ordered node
/// pair. Node indices are 0-based; the depot is node 0 for depot-based
/// variants. Instances are immutable after construction, so evaluation
/// and solving can share them across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct MultigraphInstance {
    num_nodes: usize,
    attr_dim: usize,
    /// Dense pair layout: `edge_sets[u * n + v]`, diagonal entries empty.
    edge_sets: Vec<Vec<EdgeAttr>>,
    node_attrs: Option<NodeAttrs>,
}

impl MultigraphInstance {
    /// Builds an instance and checks the completeness and attribute
    /// invariants: every ordered pair `u != v` has at least one edge, all
    /// attribute values are finite and non-negative with the declared
    /// dimension.
    pub fn new(
        num_nodes: usize,
        attr_dim: usize,
        edge_sets: Vec<Vec<EdgeAttr>>,
        node_attrs: Option<NodeAttrs>,
    ) -> Result<Self, CoreError> {
        if num_nodes < 2 {
            return Err(CoreError::InvalidInstance(format!(
                "need at least 2 nodes, got {num_nodes}"
            )));
        }
        if edge_sets.len() != num_nodes * num_nodes {
            return Err(CoreError::InvalidInstance(format!(
                "edge_sets has {} pair slots, expected {}",
                edge_sets.len(),
                num_nodes * num_nodes
            )));
        }
        for u in 0..num_nodes {
            for v in 0..num_nodes {
                let set = &edge_sets[u * num_nodes + v];
                if u == v {
                    if !set.is_empty() {
                        return Err(CoreError::InvalidInstance(format!(
                            "self-loop edges on node {u} are not allowed"
                        )));
                    }
                    continue;
                }
                if set.is_empty() {
                    return Err(CoreError::InvalidInstance(format!(
                        "missing edges for pair ({u}, {v}); multigraph must be complete"
                    )));
                }
                for (l, e) in set.iter().enumerate() {
                    if e.values.len() != attr_dim {
                        return Err(CoreError::InvalidInstance(format!(
                            "edge ({u}, {v})[{l}] has {} attributes, expected {attr_dim}",
                            e.values.len()
                        )));
                    }
                    if e.values.iter().any(|x| !x.is_finite() || *x < 0.0) {
                        return Err(CoreError::InvalidInstance(format!(
                            "edge ({u}, {v})[{l}] has a non-finite or negative attribute"
                        )));
                    }
                }
            }
        }
        if let Some(na) = &node_attrs {
            for (name, len) in [
                ("prize", na.prize.as_ref().map(Vec::len)),
                ("demand", na.demand.as_ref().map(Vec::len)),
                ("time_windows", na.time_windows.as_ref().map(Vec::len)),
            ] {
                if let Some(len) = len {
                    if len != num_nodes {
                        return Err(CoreError::InvalidInstance(format!(
                            "{name} has {len} entries, expected {num_nodes}"
                        )));
                    }
                }
            }
        }
        Ok(MultigraphInstance {
            num_nodes,
            attr_dim,
            edge_sets,
            node_attrs,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn attr_dim(&self) -> usize {
        self.attr_dim
    }

    pub fn depot(&self) -> NodeId {
        0
    }

    /// Parallel edges from `u` to `v`, in stable index order.
    pub fn edges(&self, u: NodeId, v: NodeId) -> &[EdgeAttr] {
        &self.edge_sets[u * self.num_nodes + v]
    }

    pub fn node_attrs(&self) -> Option<&NodeAttrs> {
        self.node_attrs.as_ref()
    }

    pub fn prize(&self, u: NodeId) -> Option<f64> {
        self.node_attrs
            .as_ref()
            .and_then(|a| a.prize.as_ref())
            .map(|p| p[u])
    }

    pub fn demand(&self, u: NodeId) -> Option<f64> {
        self.node_attrs
            .as_ref()
            .and_then(|a| a.demand.as_ref())
            .map(|d| d[u])
    }

    pub fn time_window(&self, u: NodeId) -> Option<(f64, f64)> {
        self.node_attrs
            .as_ref()
            .and_then(|a| a.time_windows.as_ref())
            .map(|w| w[u])
    }

    /// Total prize over all nodes (0 when prizes are absent).
    pub fn total_prize(&self) -> f64 {
        self.node_attrs
            .as_ref()
            .and_then(|a| a.prize.as_ref())
            .map(|p| p.iter().sum())
            .unwrap_or(0.0)
    }

    /// Replaces the node attributes, e.g. to attach generated windows.
    pub fn with_node_attrs(mut self, attrs: NodeAttrs) -> Self {
        self.node_attrs = Some(attrs);
        self
    }

    /// Returns a copy with every attribute axis scaled by the matching
    /// factor. Used for inference-time instance augmentation.
    pub fn scaled(&self, factors: &[f64]) -> Result<Self, CoreError> {
        if factors.len() != self.attr_dim {
            return Err(CoreError::DimMismatch {
                expected: self.attr_dim,
                got: factors.len(),
            });
        }
        let edge_sets = self
            .edge_sets
            .iter()
            .map(|set| {
                set.iter()
                    .map(|e| {
                        EdgeAttr::new(
                            e.values
                                .iter()
                                .zip(factors)
                                .map(|(v, f)| v * f)
                                .collect(),
                        )
                    })
                    .collect()
            })
            .collect();
        MultigraphInstance::new(self.num_nodes, self.attr_dim, edge_sets, self.node_attrs.clone())
    }

    /// Iterates all ordered pairs `(u, v)`, `u != v`, in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        let n = self.num_nodes;
        (0..n).flat_map(move |u| (0..n).filter(move |&v| v != u).map(move |v| (u, v)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node() -> Vec<Vec<EdgeAttr>> {
        vec![
            vec![],
            vec![EdgeAttr::new(vec![1.0, 2.0])],
            vec![EdgeAttr::new(vec![3.0, 4.0])],
            vec![],
        ]
    }

    #[test]
    fn builds_complete_instance() {
        let inst = MultigraphInstance::new(2, 2, two_node(), None).unwrap();
        assert_eq!(inst.num_nodes(), 2);
        assert_eq!(inst.edges(0, 1)[0].values, vec![1.0, 2.0]);
    }

    #[test]
    fn rejects_missing_pair() {
        let mut sets = two_node();
        sets[1].clear();
        let err = MultigraphInstance::new(2, 2, sets, None).unwrap_err();
        assert!(matches!(err, CoreError::InvalidInstance(_)));
    }

    #[test]
    fn rejects_negative_attr() {
        let mut sets = two_node();
        sets[1][0].values[0] = -0.5;
        assert!(MultigraphInstance::new(2, 2, sets, None).is_err());
    }

    #[test]
    fn rejects_wrong_attr_dim() {
        let mut sets = two_node();
        sets[1][0].values.push(9.0);
        assert!(MultigraphInstance::new(2, 2, sets, None).is_err());
    }

    #[test]
    fn spec_validation() {
        let spec = ProblemSpec::new(Variant::Rctsp).with_resource_limit(3.0);
        spec.validate().unwrap();
        let bad = ProblemSpec::new(Variant::Rctsp).with_resource_limit(0.0);
        assert!(bad.validate().is_err());
    }
}
