//! Named parameter store: data, gradient accumulators and Adam moments.

use crate::error::{DiffError, Result};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

#[derive(Debug, Clone)]
pub(crate) struct ParamEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    pub grad: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

/// Registry of learnable parameters. Registration order is the canonical
/// iteration order everywhere (gradients, optimizer, checkpoints), which
/// keeps training runs bit-reproducible.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    pub(crate) entries: Vec<ParamEntry>,
    by_name: HashMap<String, usize>,
    /// Adam step counter (bias correction).
    pub(crate) step: u64,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a parameter with explicit initial values. Names must be
    /// unique.
    pub fn register(&mut self, name: &str, rows: usize, cols: usize, data: Vec<f64>) -> ParamId {
        assert_eq!(data.len(), rows * cols, "init data length mismatch for {name}");
        assert!(
            !self.by_name.contains_key(name),
            "duplicate parameter name {name}"
        );
        let id = self.entries.len();
        self.by_name.insert(name.to_string(), id);
        let n = data.len();
        self.entries.push(ParamEntry {
            name: name.to_string(),
            rows,
            cols,
            data,
            grad: vec![0.0; n],
            m: vec![0.0; n],
            v: vec![0.0; n],
        });
        ParamId(id)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied().map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.entries.iter().map(|e| e.data.len()).sum()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].name
    }

    pub fn shape(&self, id: ParamId) -> (usize, usize) {
        (self.entries[id.0].rows, self.entries[id.0].cols)
    }

    pub fn data(&self, id: ParamId) -> &[f64] {
        &self.entries[id.0].data
    }

    pub fn data_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.entries[id.0].data
    }

    pub fn grad(&self, id: ParamId) -> &[f64] {
        &self.entries[id.0].grad
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    pub(crate) fn accumulate_grad(&mut self, id: ParamId, delta: &[f64]) {
        let g = &mut self.entries[id.0].grad;
        for (a, b) in g.iter_mut().zip(delta) {
            *a += b;
        }
    }

    pub fn zero_grad(&mut self) {
        for e in &mut self.entries {
            e.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    /// Errors when any gradient is non-finite, naming the parameter.
    pub fn check_grads_finite(&self) -> Result<()> {
        for e in &self.entries {
            if e.grad.iter().any(|g| !g.is_finite()) {
                return Err(DiffError::NonFinite(format!("gradient of {}", e.name)));
            }
        }
        Ok(())
    }
}
