//! Model hyperparameters and per-variant feature wiring.

use crate::error::{ModelError, Result};
use polyroute_core::instance::{MultigraphInstance, ProblemSpec, Variant};
use polyroute_core::pareto::Preference;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: Variant,
    /// Node-stage embedding width.
    pub d: usize,
    /// Edge-stage embedding width.
    pub d_edge: usize,
    /// Edge-attention encoder layers.
    pub l1: usize,
    /// Transformer layers after the edge-attention stack.
    pub l2: usize,
    pub heads: usize,
    pub ffn_hidden: usize,
    /// Tanh clipping for node-stage scores.
    pub clip_node: f64,
    /// Tanh clipping for edge-stage scores (small to keep samples diverse).
    pub clip_edge: f64,
    /// Hidden width of the preference hypernetworks.
    pub hyper_hidden: usize,
}

impl ModelConfig {
    /// Full-size defaults.
    pub fn new(variant: Variant) -> Self {
        ModelConfig {
            variant,
            d: 128,
            d_edge: 64,
            l1: 5,
            l2: 2,
            heads: 8,
            ffn_hidden: 512,
            clip_node: 50.0,
            clip_edge: 1.0,
            hyper_hidden: 128,
        }
    }

    /// Small configuration for desk-scale smoke training.
    pub fn smoke(variant: Variant) -> Self {
        ModelConfig {
            variant,
            d: 32,
            d_edge: 16,
            l1: 2,
            l2: 1,
            heads: 4,
            ffn_hidden: 64,
            clip_node: 50.0,
            clip_edge: 1.0,
            hyper_hidden: 32,
        }
    }

    /// Tiny configuration for gradient checking.
    pub fn toy(variant: Variant) -> Self {
        ModelConfig {
            variant,
            d: 8,
            d_edge: 8,
            l1: 2,
            l2: 1,
            heads: 2,
            ffn_hidden: 16,
            clip_node: 50.0,
            clip_edge: 1.0,
            hyper_hidden: 8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("d", self.d),
            ("d_edge", self.d_edge),
            ("l1", self.l1),
            ("l2", self.l2),
            ("heads", self.heads),
            ("ffn_hidden", self.ffn_hidden),
            ("hyper_hidden", self.hyper_hidden),
        ] {
            if v == 0 {
                return Err(ModelError::Config(format!("{name} must be positive")));
            }
        }
        if self.d % self.heads != 0 {
            return Err(ModelError::Config(format!(
                "d = {} must be divisible by heads = {}",
                self.d, self.heads
            )));
        }
        if (self.d / 2) % self.heads != 0 {
            return Err(ModelError::Config(format!(
                "d/2 = {} must split across {} heads for the edge-attention gates",
                self.d / 2,
                self.heads
            )));
        }
        if self.d_edge % self.heads != 0 || self.d_edge % 2 != 0 {
            return Err(ModelError::Config(format!(
                "d_edge = {} must be even and divisible by heads = {}",
                self.d_edge, self.heads
            )));
        }
        if !(self.clip_node > 0.0 && self.clip_edge > 0.0) {
            return Err(ModelError::Config("clipping constants must be positive".into()));
        }
        Ok(())
    }

    pub fn multi_objective(&self) -> bool {
        self.variant.is_multi_objective()
    }

    /// Edge feature width for the node stage (attributes plus the
    /// variant's end-point node attributes).
    pub fn stage1_feat_dim(&self) -> usize {
        match self.variant {
            Variant::Motsp | Variant::Rctsp => 2,
            Variant::Op | Variant::Moop => 3,  // + end-point prize
            Variant::Mocvrp => 3,              // + end-point demand
            Variant::Motsptw => 4,             // + end-point window
        }
    }

    /// Edge feature width for the edge-selection stage.
    pub fn edge_stage_feat_dim(&self) -> usize {
        match self.variant {
            Variant::Motsptw => 4,
            _ => 2,
        }
    }

    /// Width of the decoder's rollout-state input.
    pub fn state_dim(&self) -> usize {
        match self.variant {
            Variant::Rctsp | Variant::Moop | Variant::Mocvrp => 1,
            Variant::Op => 2,
            Variant::Motsp | Variant::Motsptw => 0,
        }
    }

    /// Variants whose decoder state depends on edge choices get the
    /// recurrent estimate; the capacitated variant feeds its true load.
    pub fn uses_state_estimator(&self) -> bool {
        matches!(self.variant, Variant::Rctsp | Variant::Op | Variant::Moop)
    }
}

/// Per-edge feature vector for the node stage: raw attributes, then the
/// end-point node attributes the variant wires in.
pub fn stage1_edge_features(
    instance: &MultigraphInstance,
    config: &ModelConfig,
    head: usize,
    values: &[f64],
) -> Vec<f64> {
    let mut f = values.to_vec();
    match config.variant {
        Variant::Motsp | Variant::Rctsp => {}
        Variant::Op | Variant::Moop => f.push(instance.prize(head).unwrap_or(0.0)),
        Variant::Mocvrp => f.push(instance.demand(head).unwrap_or(0.0)),
        Variant::Motsptw => {
            let (open, close) = instance.time_window(head).unwrap_or((0.0, f64::INFINITY));
            let cap = finite_close_cap(instance);
            f.push(open);
            f.push(close.min(cap));
        }
    }
    f
}

/// Per-edge feature vector for the edge-selection stage.
pub fn edge_stage_features(
    instance: &MultigraphInstance,
    config: &ModelConfig,
    head: usize,
    values: &[f64],
) -> Vec<f64> {
    match config.variant {
        Variant::Motsptw => {
            let (open, close) = instance.time_window(head).unwrap_or((0.0, f64::INFINITY));
            let cap = finite_close_cap(instance);
            vec![values[0], values[1], open, close.min(cap)]
        }
        _ => values.to_vec(),
    }
}

/// Largest finite window close, used to cap the depot's open-ended
/// window when it enters feature vectors.
fn finite_close_cap(instance: &MultigraphInstance) -> f64 {
    instance
        .node_attrs()
        .and_then(|a| a.time_windows.as_ref())
        .map(|ws| {
            ws.iter()
                .map(|w| w.1)
                .filter(|c| c.is_finite())
                .fold(1.0f64, f64::max)
        })
        .unwrap_or(1.0)
}

/// Attribute weights for the decoder's cheapest-edge penalty matrix.
/// Bi-objective variants map the preference onto attribute axes in
/// objective order; single-objective variants fix them.
pub fn decoder_cost_weights(spec: &ProblemSpec, pref: &Preference) -> Vec<f64> {
    match spec.variant {
        Variant::Rctsp => vec![1.0, 0.0],
        Variant::Op => vec![0.5, 0.5],
        Variant::Motsp | Variant::Mocvrp => pref.lambda().to_vec(),
        // Attrs are (distance, time); objectives (violations, distance).
        Variant::Motsptw => vec![pref.lambda()[1], pref.lambda()[0]],
        // Attrs are (cost, resource); objectives (uncollected, cost).
        Variant::Moop => vec![pref.lambda()[1], pref.lambda()[0]],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_catches_bad_head_split() {
        let mut cfg = ModelConfig::toy(Variant::Motsp);
        cfg.validate().unwrap();
        cfg.heads = 3;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn wiring_dimensions() {
        assert_eq!(ModelConfig::new(Variant::Motsptw).stage1_feat_dim(), 4);
        assert_eq!(ModelConfig::new(Variant::Moop).stage1_feat_dim(), 3);
        assert_eq!(ModelConfig::new(Variant::Moop).edge_stage_feat_dim(), 2);
        assert_eq!(ModelConfig::new(Variant::Op).state_dim(), 2);
        assert!(!ModelConfig::new(Variant::Mocvrp).uses_state_estimator());
        assert!(ModelConfig::new(Variant::Rctsp).uses_state_estimator());
    }
}
