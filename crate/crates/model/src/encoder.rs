//! Pre-encoding aggregation and the node encoder.
//!
//! Parallel edges are embedded, summed per ordered pair (a permutation-
//! invariant deep-set) and projected into a latent distance matrix
//! `D in R^{N^2 x d}`. Edge-attention layers then build temporary node
//! features from gated sums over each node's outgoing and incoming
//! latent distances and project them back to pairs; the last such layer
//! keeps the node features, which a small transformer stack refines.

use crate::config::stage1_edge_features;
use crate::error::Result;
use crate::policy::{Materialized, Policy};
use polyroute_core::instance::MultigraphInstance;
use polyroute_diff::nn::mlp2;
use polyroute_diff::{Tape, Tensor};

/// Node encodings plus the latent pair matrix.
pub struct Encoded {
    pub n: usize,
    /// Latent distance matrix, `[N*N, d]` in row-major pair order.
    pub latent: Tensor,
    /// Node encodings `[N, d]`.
    pub h: Tensor,
}

/// Deep-set aggregation of parallel edges into the latent matrix.
pub fn pre_encode(
    policy: &Policy,
    tape: &Tape,
    mat: &Materialized,
    instance: &MultigraphInstance,
) -> Result<Tensor> {
    let cfg = &policy.config;
    let n = instance.num_nodes();
    let feat_dim = cfg.stage1_feat_dim();
    let mut feats: Vec<f64> = Vec::new();
    let mut seg: Vec<usize> = Vec::new();
    for (u, v) in instance.pairs() {
        for e in instance.edges(u, v) {
            feats.extend(stage1_edge_features(instance, cfg, v, &e.values));
            seg.push(u * n + v);
        }
    }
    let rows = seg.len();
    let x = tape.leaf(rows, feat_dim, feats)?;
    let embedded = x.matmul_nt(mat.get("pre.wg"))?;
    let phi = mlp2(
        &embedded,
        mat.get("pre.phi.w1"),
        mat.get("pre.phi.b1"),
        mat.get("pre.phi.w2"),
        mat.get("pre.phi.b2"),
    )?;
    let summed = phi.segment_sum(&seg, n * n)?;
    mlp2(
        &summed,
        mat.get("pre.rho.w1"),
        mat.get("pre.rho.b1"),
        mat.get("pre.rho.w2"),
        mat.get("pre.rho.b2"),
    )
    .map_err(Into::into)
}

/// Gated edge-attention sublayer: per head, scores over each row's pair
/// entries (diagonal masked) weight chunks of the projected latent
/// vectors, separately for outgoing and incoming directions.
fn node_features(
    mat: &Materialized,
    latent: &Tensor,
    layer: usize,
    n: usize,
    heads: usize,
) -> Result<Tensor> {
    let p = format!("great{layer}");
    gated_node_features(
        latent,
        mat.get(&format!("{p}.gate_fwd")),
        mat.get(&format!("{p}.gate_bwd")),
        mat.get(&format!("{p}.w_fwd")),
        mat.get(&format!("{p}.w_bwd")),
        n,
        heads,
    )
}

/// The gated attention sublayer in isolation: per direction and head, a
/// softmax over each row's pair entries (diagonal masked) weights chunks
/// of the projected latent vectors; the two directional halves are
/// concatenated per node.
pub fn gated_node_features(
    latent: &Tensor,
    gate_fwd: &Tensor,
    gate_bwd: &Tensor,
    w_fwd: &Tensor,
    w_bwd: &Tensor,
    n: usize,
    heads: usize,
) -> Result<Tensor> {
    let transpose: Vec<usize> = (0..n * n).map(|i| (i % n) * n + i / n).collect();
    let diag_mask: Vec<bool> = (0..n * n).map(|i| i / n == i % n).collect();
    let latent_rev = latent.permute_rows(&transpose)?;
    let mut halves = Vec::with_capacity(2);
    for (src, gate, proj_w) in [
        (latent, gate_fwd, w_fwd),
        (&latent_rev, gate_bwd, w_bwd),
    ] {
        let gates = src.matmul_nt(gate)?; // [N^2, H]
        let proj = src.matmul_nt(proj_w)?; // [N^2, d/2]
        let chunk = proj.cols() / heads;
        let mut parts: Option<Tensor> = None;
        for head in 0..heads {
            let scores = gates
                .slice_cols(head, head + 1)?
                .reshape(n, n)?
                .masked_fill(&diag_mask, -1e9)?
                .softmax()?;
            let contrib = proj
                .slice_cols(head * chunk, (head + 1) * chunk)?
                .group_weighted_sum(&scores)?;
            parts = Some(match parts {
                None => contrib,
                Some(acc) => acc.concat_cols(&contrib)?,
            });
        }
        halves.push(parts.expect("at least one head"));
    }
    halves[0].concat_cols(&halves[1]).map_err(Into::into)
}

fn residual_norm(
    x: &Tensor,
    delta: &Tensor,
    mat: &Materialized,
    ln: &str,
) -> Result<Tensor> {
    x.add(delta)?
        .layer_norm(1e-5)?
        .mul_row(mat.get(&format!("{ln}.g")))?
        .add_row(mat.get(&format!("{ln}.b")))
        .map_err(Into::into)
}

fn ffn(x: &Tensor, mat: &Materialized, prefix: &str) -> Result<Tensor> {
    mlp2(
        x,
        mat.get(&format!("{prefix}.w1")),
        mat.get(&format!("{prefix}.b1")),
        mat.get(&format!("{prefix}.w2")),
        mat.get(&format!("{prefix}.b2")),
    )
    .map_err(Into::into)
}

/// Runs the full encoder: edge-attention layers on the latent matrix,
/// node features from the last one, then transformer layers.
pub fn encode(
    policy: &Policy,
    tape: &Tape,
    mat: &Materialized,
    instance: &MultigraphInstance,
) -> Result<Encoded> {
    let cfg = &policy.config;
    let n = instance.num_nodes();
    let heads = cfg.heads;
    let mut latent = pre_encode(policy, tape, mat, instance)?;

    let u_of_p: Vec<usize> = (0..n * n).map(|i| i / n).collect();
    let v_of_p: Vec<usize> = (0..n * n).map(|i| i % n).collect();
    for layer in 0..cfg.l1 - 1 {
        let p = format!("great{layer}");
        let x = node_features(mat, &latent, layer, n, heads)?;
        let pair_in = x.gather_rows(&u_of_p)?.concat_cols(&x.gather_rows(&v_of_p)?)?;
        let attn = pair_in.matmul_nt(mat.get(&format!("{p}.w_edge")))?;
        latent = residual_norm(&latent, &attn, mat, &format!("{p}.ln1"))?;
        let f = ffn(&latent, mat, &format!("{p}.ffn"))?;
        latent = residual_norm(&latent, &f, mat, &format!("{p}.ln2"))?;
    }
    let mut h = node_features(mat, &latent, cfg.l1 - 1, n, heads)?;

    let dk = cfg.d / heads;
    for j in 0..cfg.l2 {
        let p = format!("tf{j}");
        let q = h.matmul_nt(mat.get(&format!("{p}.wq")))?;
        let k = h.matmul_nt(mat.get(&format!("{p}.wk")))?;
        let v = h.matmul_nt(mat.get(&format!("{p}.wv")))?;
        let mut heads_out: Option<Tensor> = None;
        for head in 0..heads {
            let (lo, hi) = (head * dk, (head + 1) * dk);
            let scores = q
                .slice_cols(lo, hi)?
                .matmul_nt(&k.slice_cols(lo, hi)?)?
                .scale(1.0 / (dk as f64).sqrt())?
                .softmax()?;
            let out = scores.matmul(&v.slice_cols(lo, hi)?)?;
            heads_out = Some(match heads_out {
                None => out,
                Some(acc) => acc.concat_cols(&out)?,
            });
        }
        let attn = heads_out.unwrap().matmul_nt(mat.get(&format!("{p}.wo")))?;
        h = residual_norm(&h, &attn, mat, &format!("{p}.ln1"))?;
        let f = ffn(&h, mat, &format!("{p}.ffn"))?;
        h = residual_norm(&h, &f, mat, &format!("{p}.ln2"))?;
    }
    Ok(Encoded { n, latent, h })
}
