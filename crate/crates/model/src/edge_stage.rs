//! Non-autoregressive edge selection for a fixed node sequence: embed
//! every parallel edge, mean-pool per position, mix the pooled sequence
//! with a bidirectional LSTM plus skip connection, score edges with a
//! multi-pointer mechanism penalized by scalarized edge cost, and
//! normalize within each position's edge set. Samples draw all positions
//! independently in one shot.

use crate::config::{edge_stage_features, ModelConfig};
use crate::decoder::lstm_weights;
use crate::error::Result;
use crate::hypernet::PointerWeights;
use crate::policy::{Materialized, Policy};
use polyroute_core::fsasp::edge_cost_weights;
use polyroute_core::gen::rng::Stream;
use polyroute_core::instance::{MultigraphInstance, ProblemSpec};
use polyroute_core::pareto::Preference;
use polyroute_diff::nn::lstm_cell;
use polyroute_diff::{Tape, Tensor};

/// How edge selections are produced.
pub enum EdgeMode<'a> {
    /// `k` independent joint samples driven by one stream per sample.
    Sample(&'a mut [Stream]),
    /// Argmax per position.
    Greedy,
    /// Replay given selections.
    Forced(&'a [Vec<usize>]),
}

pub struct EdgeStageOutput {
    /// One edge-index vector per sample.
    pub selections: Vec<Vec<usize>>,
    /// Joint log-probability per sample.
    pub logp: Vec<Tensor>,
    /// Per-set probabilities (read back off the tape), for diagnostics
    /// and tests: `probs[t][l]`.
    pub probs: Vec<Vec<f64>>,
}

/// Raw multi-pointer scores for row-aligned query/key pairs: the mean
/// over heads of the scaled per-head dot products, minus the learnable
/// cost penalty. `queries` and `keys` are `[E, d]`, `costs` `[E, 1]`.
pub fn pointer_scores(
    queries: &Tensor,
    keys: &Tensor,
    weights: &PointerWeights,
    beta: &Tensor,
    costs: &Tensor,
    heads: usize,
    d: usize,
) -> Result<Tensor> {
    let dk = d / heads;
    let scale = 1.0 / (heads as f64 * (d as f64).sqrt());
    let q = queries.matmul_nt(&weights.wq)?;
    let k = keys.matmul_nt(&weights.wk)?;
    let mut scores: Option<Tensor> = None;
    for h in 0..heads {
        let (lo, hi) = (h * dk, (h + 1) * dk);
        let sh = q
            .slice_cols(lo, hi)?
            .mul(&k.slice_cols(lo, hi)?)?
            .sum_cols()?;
        scores = Some(match scores {
            None => sh,
            Some(acc) => acc.add(&sh)?,
        });
    }
    scores
        .unwrap()
        .scale(scale)?
        .sub(&costs.mul_scalar_t(beta)?)
        .map_err(Into::into)
}

pub fn edge_stage(
    policy: &Policy,
    tape: &Tape,
    mat: &Materialized,
    weights: &PointerWeights,
    instance: &MultigraphInstance,
    spec: &ProblemSpec,
    pi: &[usize],
    pref: &Preference,
    mode: &mut EdgeMode,
) -> Result<EdgeStageOutput> {
    let cfg: &ModelConfig = &policy.config;
    let positions = pi.len() - 1;
    let feat_dim = cfg.edge_stage_feat_dim();
    let cost_weights = edge_cost_weights(spec, pref);

    let mut feats: Vec<f64> = Vec::new();
    let mut seg: Vec<usize> = Vec::new();
    let mut offsets: Vec<usize> = vec![0];
    let mut costs: Vec<f64> = Vec::new();
    for t in 0..positions {
        let (u, v) = (pi[t], pi[t + 1]);
        for e in instance.edges(u, v) {
            feats.extend(edge_stage_features(instance, cfg, v, &e.values));
            seg.push(t);
            costs.push(cost_weights.iter().zip(&e.values).map(|(w, x)| w * x).sum());
        }
        offsets.push(seg.len());
    }
    let total_edges = seg.len();

    let keys = tape
        .leaf(total_edges, feat_dim, feats)?
        .matmul_nt(mat.get("fs.wf"))?; // [E, d']
    let inv_counts: Vec<f64> = (0..positions)
        .flat_map(|t| {
            std::iter::repeat(1.0 / (offsets[t + 1] - offsets[t]) as f64).take(cfg.d_edge)
        })
        .collect();
    let pooled = keys
        .segment_sum(&seg, positions)?
        .mul_const_vec(&inv_counts)?; // [T-1, d']

    // Bidirectional mixing with a skip connection.
    let half = cfg.d_edge / 2;
    let fw = lstm_weights(mat, "fs.fwd");
    let bw = lstm_weights(mat, "fs.bwd");
    let mut h_f = tape.leaf(1, half, vec![0.0; half])?;
    let mut c_f = tape.leaf(1, half, vec![0.0; half])?;
    let mut fwd_states = Vec::with_capacity(positions);
    for t in 0..positions {
        let x = pooled.gather_rows(&[t])?;
        let (h2, c2) = lstm_cell(&x, &h_f, &c_f, &fw)?;
        h_f = h2;
        c_f = c2;
        fwd_states.push(h_f.clone());
    }
    let mut h_b = tape.leaf(1, half, vec![0.0; half])?;
    let mut c_b = tape.leaf(1, half, vec![0.0; half])?;
    let mut bwd_states = vec![None; positions];
    for t in (0..positions).rev() {
        let x = pooled.gather_rows(&[t])?;
        let (h2, c2) = lstm_cell(&x, &h_b, &c_b, &bw)?;
        h_b = h2;
        c_b = c2;
        bwd_states[t] = Some(h_b.clone());
    }
    let mixed_rows: Vec<Tensor> = (0..positions)
        .map(|t| {
            fwd_states[t]
                .concat_cols(bwd_states[t].as_ref().unwrap())?
                .add(&pooled.gather_rows(&[t])?)
        })
        .collect::<std::result::Result<_, _>>()?;
    let mixed = Tensor::concat_rows(&mixed_rows)?; // [T-1, d']

    // Multi-pointer scores per edge against its position's query.
    let queries = mixed.gather_rows(&seg)?; // [E, d']
    let costs_t = tape.leaf(total_edges, 1, costs)?;
    let scores = pointer_scores(
        &queries,
        &keys,
        weights,
        mat.get("fs.beta"),
        &costs_t,
        cfg.heads,
        cfg.d_edge,
    )?;
    let clipped = scores
        .scale(1.0 / cfg.clip_edge)?
        .tanh()?
        .scale(cfg.clip_edge)?;
    let logp_col = clipped.segment_log_softmax(&offsets)?; // [E, 1]

    let flat = logp_col.value();
    let probs: Vec<Vec<f64>> = (0..positions)
        .map(|t| flat[offsets[t]..offsets[t + 1]].iter().map(|lp| lp.exp()).collect())
        .collect();

    let selections: Vec<Vec<usize>> = match mode {
        EdgeMode::Greedy => {
            let sel = (0..positions)
                .map(|t| {
                    let p = &probs[t];
                    let mut best = (0usize, f64::NEG_INFINITY);
                    for (l, &v) in p.iter().enumerate() {
                        if v > best.1 {
                            best = (l, v);
                        }
                    }
                    best.0
                })
                .collect();
            vec![sel]
        }
        EdgeMode::Sample(streams) => streams
            .iter_mut()
            .map(|s| (0..positions).map(|t| s.categorical(&probs[t])).collect())
            .collect(),
        EdgeMode::Forced(given) => given.to_vec(),
    };

    let mut logp = Vec::with_capacity(selections.len());
    for sel in &selections {
        let idx: Vec<usize> = (0..positions).map(|t| offsets[t] + sel[t]).collect();
        logp.push(logp_col.gather_elems(&idx)?.sum_all()?);
    }
    Ok(EdgeStageOutput { selections, logp, probs })
}
