//! Preference conditioning: small MLPs map the preference vector to the
//! pointer-score projections of each stage, so one model covers the whole
//! preference range without re-encoding.

use crate::error::Result;
use crate::policy::{Materialized, Policy};
use polyroute_core::pareto::Preference;
use polyroute_diff::nn::linear;
use polyroute_diff::{Tape, Tensor};

/// Pointer projections of one stage.
pub struct PointerWeights {
    pub wq: Tensor,
    pub wk: Tensor,
}

fn conditioned(
    tape: &Tape,
    mat: &Materialized,
    prefix: &str,
    pref: &Preference,
    width: usize,
) -> Result<PointerWeights> {
    let lambda = tape.leaf(1, pref.dim(), pref.lambda().to_vec())?;
    let hidden = linear(
        &lambda,
        mat.get(&format!("{prefix}.w1")),
        mat.get(&format!("{prefix}.b1")),
    )?
    .relu()?;
    let project = |out: &str| -> Result<Tensor> {
        linear(
            &hidden,
            mat.get(&format!("{prefix}.w{out}")),
            mat.get(&format!("{prefix}.b{out}")),
        )?
        .reshape(width, width)
        .map_err(Into::into)
    };
    Ok(PointerWeights { wq: project("q")?, wk: project("k")? })
}

/// Node-stage pointer projections: hypernetwork output for bi-objective
/// variants, the static parameters otherwise.
pub fn node_pointer_weights(
    policy: &Policy,
    tape: &Tape,
    mat: &Materialized,
    pref: &Preference,
) -> Result<PointerWeights> {
    if policy.config.multi_objective() {
        conditioned(tape, mat, "hyper.node", pref, policy.config.d)
    } else {
        Ok(PointerWeights {
            wq: mat.get("dec.wq").clone(),
            wk: mat.get("dec.wk").clone(),
        })
    }
}

/// Edge-stage pointer projections.
pub fn edge_pointer_weights(
    policy: &Policy,
    tape: &Tape,
    mat: &Materialized,
    pref: &Preference,
) -> Result<PointerWeights> {
    if policy.config.multi_objective() {
        conditioned(tape, mat, "hyper.edge", pref, policy.config.d_edge)
    } else {
        Ok(PointerWeights {
            wq: mat.get("fs.wq").clone(),
            wk: mat.get("fs.wk").clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelConfig;
    use polyroute_core::instance::Variant;

    #[test]
    fn preferences_produce_distinct_weights() {
        let policy = Policy::new(ModelConfig::toy(Variant::Motsp), 5).unwrap();
        let tape = Tape::new();
        let mat = policy.materialize(&tape).unwrap();
        let a = node_pointer_weights(&policy, &tape, &mat, &Preference::bi(1.0).unwrap()).unwrap();
        let b = node_pointer_weights(&policy, &tape, &mat, &Preference::bi(0.0).unwrap()).unwrap();
        let diff: f64 = a
            .wq
            .value()
            .iter()
            .zip(b.wq.value())
            .map(|(x, y)| (x - y).abs())
            .sum();
        assert!(diff > 0.0, "hypernet ignores the preference");
        assert_eq!(a.wq.shape(), (policy.config.d, policy.config.d));
        assert_eq!(a.wk.shape(), (policy.config.d, policy.config.d));
    }

    #[test]
    fn single_objective_bypasses_hypernets() {
        let policy = Policy::new(ModelConfig::toy(Variant::Rctsp), 5).unwrap();
        let tape = Tape::new();
        let mat = policy.materialize(&tape).unwrap();
        let nodes_before = tape.num_nodes();
        let w = node_pointer_weights(&policy, &tape, &mat, &Preference::single()).unwrap();
        // Static weights: no new tape nodes were created.
        assert_eq!(tape.num_nodes(), nodes_before);
        assert_eq!(w.wq.shape(), (policy.config.d, policy.config.d));
    }
}
