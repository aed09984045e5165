//! Parameter registry and the bundled policy object.

use crate::config::ModelConfig;
use crate::error::{ModelError, Result};
use polyroute_core::gen::rng::{tags, Stream};
use polyroute_diff::{ParamStore, Tape, Tensor};
use std::collections::HashMap;
use std::path::Path;

/// The two-stage policy: configuration plus every learnable parameter.
#[derive(Debug, Clone)]
pub struct Policy {
    pub config: ModelConfig,
    pub store: ParamStore,
}

/// All parameters materialized once on a tape, addressed by name.
pub struct Materialized {
    map: HashMap<String, Tensor>,
}

impl Materialized {
    pub fn get(&self, name: &str) -> &Tensor {
        self.map
            .get(name)
            .unwrap_or_else(|| panic!("parameter {name} not materialized"))
    }
}

struct Registrar<'a> {
    store: &'a mut ParamStore,
    seed: u64,
    counter: u64,
}

impl Registrar<'_> {
    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weight matrix.
    fn weight(&mut self, name: &str, rows: usize, cols: usize) {
        let bound = 1.0 / (cols as f64).sqrt();
        let mut s = Stream::new(self.seed, &[tags::INIT, self.counter]);
        self.counter += 1;
        let data = (0..rows * cols).map(|_| s.uniform(-bound, bound)).collect();
        self.store.register(name, rows, cols, data);
    }

    fn constant(&mut self, name: &str, rows: usize, cols: usize, value: f64) {
        self.counter += 1;
        self.store.register(name, rows, cols, vec![value; rows * cols]);
    }

    fn zeros(&mut self, name: &str, rows: usize, cols: usize) {
        self.constant(name, rows, cols, 0.0);
    }

    fn lstm(&mut self, prefix: &str, hidden: usize, input: usize) {
        for gate in ["i", "f", "g", "o"] {
            self.weight(&format!("{prefix}.wx_{gate}"), hidden, input);
            self.weight(&format!("{prefix}.wh_{gate}"), hidden, hidden);
            self.zeros(&format!("{prefix}.b_{gate}"), 1, hidden);
        }
    }

    fn layer_norm(&mut self, prefix: &str, width: usize) {
        self.constant(&format!("{prefix}.g"), 1, width, 1.0);
        self.zeros(&format!("{prefix}.b"), 1, width);
    }

    fn ffn(&mut self, prefix: &str, width: usize, hidden: usize) {
        self.weight(&format!("{prefix}.w1"), hidden, width);
        self.zeros(&format!("{prefix}.b1"), 1, hidden);
        self.weight(&format!("{prefix}.w2"), width, hidden);
        self.zeros(&format!("{prefix}.b2"), 1, width);
    }

    /// Preference hypernetwork: 2-layer MLP emitting flattened pointer
    /// projections for one stage. The output biases are initialized like
    /// ordinary pointer weights so the preference path starts as a small
    /// perturbation around a sane static operator.
    fn hypernet(&mut self, prefix: &str, hidden: usize, width: usize) {
        self.weight(&format!("{prefix}.w1"), hidden, 2);
        self.zeros(&format!("{prefix}.b1"), 1, hidden);
        for out in ["q", "k"] {
            self.weight(&format!("{prefix}.w{out}"), width * width, hidden);
            let bound = 1.0 / (width as f64).sqrt();
            let mut s = Stream::new(self.seed, &[tags::INIT, self.counter]);
            self.counter += 1;
            let data = (0..width * width).map(|_| s.uniform(-bound, bound)).collect();
            self.store.register(&format!("{prefix}.b{out}"), 1, width * width, data);
        }
    }
}

impl Policy {
    /// Builds a freshly initialized policy. The seed fixes every initial
    /// weight.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new();
        let mut reg = Registrar { store: &mut store, seed, counter: 0 };
        let d = config.d;
        let de = config.d_edge;
        let h = config.heads;

        reg.weight("pre.wg", d, config.stage1_feat_dim());
        for mlp in ["pre.phi", "pre.rho"] {
            reg.weight(&format!("{mlp}.w1"), d, d);
            reg.zeros(&format!("{mlp}.b1"), 1, d);
            reg.weight(&format!("{mlp}.w2"), d, d);
            reg.zeros(&format!("{mlp}.b2"), 1, d);
        }
        for i in 0..config.l1 {
            let p = format!("great{i}");
            reg.weight(&format!("{p}.gate_fwd"), h, d);
            reg.weight(&format!("{p}.gate_bwd"), h, d);
            reg.weight(&format!("{p}.w_fwd"), d / 2, d);
            reg.weight(&format!("{p}.w_bwd"), d / 2, d);
            if i + 1 < config.l1 {
                reg.weight(&format!("{p}.w_edge"), d, 2 * d);
                reg.layer_norm(&format!("{p}.ln1"), d);
                reg.ffn(&format!("{p}.ffn"), d, config.ffn_hidden);
                reg.layer_norm(&format!("{p}.ln2"), d);
            }
        }
        for j in 0..config.l2 {
            let p = format!("tf{j}");
            for w in ["wq", "wk", "wv", "wo"] {
                reg.weight(&format!("{p}.{w}"), d, d);
            }
            reg.layer_norm(&format!("{p}.ln1"), d);
            reg.ffn(&format!("{p}.ffn"), d, config.ffn_hidden);
            reg.layer_norm(&format!("{p}.ln2"), d);
        }
        for w in ["dec.w1", "dec.w2", "dec.w3", "dec.w4"] {
            reg.weight(w, d, d);
        }
        if config.state_dim() > 0 {
            reg.weight("dec.w5", d, config.state_dim());
        }
        reg.constant("dec.beta", 1, 1, 1.0);
        if config.multi_objective() {
            reg.hypernet("hyper.node", config.hyper_hidden, d);
        } else {
            reg.weight("dec.wq", d, d);
            reg.weight("dec.wk", d, d);
        }
        if config.uses_state_estimator() {
            reg.lstm("est", d, d);
            reg.weight("est.w_state", config.state_dim(), d);
        }

        reg.weight("fs.wf", de, config.edge_stage_feat_dim());
        reg.lstm("fs.fwd", de / 2, de);
        reg.lstm("fs.bwd", de / 2, de);
        if config.multi_objective() {
            reg.hypernet("hyper.edge", config.hyper_hidden, de);
        } else {
            reg.weight("fs.wq", de, de);
            reg.weight("fs.wk", de, de);
        }
        reg.constant("fs.beta", 1, 1, 1.0);

        Ok(Policy { config, store })
    }

    /// Materializes every parameter on a tape (once per episode).
    pub fn materialize(&self, tape: &Tape) -> Result<Materialized> {
        let mut map = HashMap::new();
        for id in self.store.ids() {
            let t = tape.param(&self.store, id)?;
            map.insert(self.store.name(id).to_string(), t);
        }
        Ok(Materialized { map })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.store.save(path)?;
        let cfg = serde_json::to_string_pretty(&self.config)
            .map_err(|e| ModelError::Io(e.to_string()))?;
        std::fs::write(path.with_extension("config.json"), cfg)
            .map_err(|e| ModelError::Io(e.to_string()))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let store = ParamStore::load(path)?;
        let raw = std::fs::read_to_string(path.with_extension("config.json"))
            .map_err(|e| ModelError::Io(format!("missing config sidecar: {e}")))?;
        let config: ModelConfig =
            serde_json::from_str(&raw).map_err(|e| ModelError::Io(e.to_string()))?;
        config.validate()?;
        Ok(Policy { config, store })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use polyroute_core::instance::Variant;

    #[test]
    fn registry_is_deterministic() {
        let a = Policy::new(ModelConfig::toy(Variant::Motsp), 7).unwrap();
        let b = Policy::new(ModelConfig::toy(Variant::Motsp), 7).unwrap();
        assert_eq!(a.store.num_scalars(), b.store.num_scalars());
        for (ia, ib) in a.store.ids().zip(b.store.ids()) {
            assert_eq!(a.store.data(ia), b.store.data(ib));
        }
        let c = Policy::new(ModelConfig::toy(Variant::Motsp), 8).unwrap();
        let differs = a
            .store
            .ids()
            .zip(c.store.ids())
            .any(|(x, y)| a.store.data(x) != c.store.data(y));
        assert!(differs);
    }

    #[test]
    fn beta_defaults_to_one() {
        let p = Policy::new(ModelConfig::toy(Variant::Rctsp), 1).unwrap();
        assert_eq!(p.store.data(p.store.id("dec.beta").unwrap()), &[1.0]);
        assert_eq!(p.store.data(p.store.id("fs.beta").unwrap()), &[1.0]);
        // Single-objective: static pointer weights, no hypernets.
        assert!(p.store.id("dec.wq").is_some());
        assert!(p.store.id("hyper.node.w1").is_none());
        let mo = Policy::new(ModelConfig::toy(Variant::Motsp), 1).unwrap();
        assert!(mo.store.id("dec.wq").is_none());
        assert!(mo.store.id("hyper.node.w1").is_some());
    }

    #[test]
    fn checkpoint_round_trip() {
        let p = Policy::new(ModelConfig::toy(Variant::Moop), 3).unwrap();
        let dir = std::env::temp_dir().join("polyroute-policy-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("p.ckpt");
        p.save(&path).unwrap();
        let q = Policy::load(&path).unwrap();
        assert_eq!(p.config, q.config);
        assert_eq!(p.store.num_scalars(), q.store.num_scalars());
        std::fs::remove_file(&path).ok();
    }
}
