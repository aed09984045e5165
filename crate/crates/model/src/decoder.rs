//! Autoregressive node decoder: multi-pointer scores with a learnable
//! cheapest-edge penalty, variant-specific masking, forced-start
//! rollouts, and the recurrent state estimator for variants whose true
//! rollout state depends on later edge choices.

use crate::encoder::Encoded;
use crate::error::{ModelError, Result};
use crate::hypernet::PointerWeights;
use crate::policy::{Materialized, Policy};
use polyroute_core::gen::rng::Stream;
use polyroute_core::instance::{MultigraphInstance, ProblemSpec, Variant};
use polyroute_diff::nn::{lstm_cell, LstmWeights};
use polyroute_diff::{Tape, Tensor};

/// How node choices are made during a rollout.
pub enum DecodeMode<'a> {
    Greedy,
    /// One stream per rollout.
    Sample(&'a mut [Stream]),
    /// Replay the decisions of previously produced node sequences.
    Forced(&'a [Vec<usize>]),
}

pub struct RolloutOutput {
    /// Complete node sequences, closing node included.
    pub nodes: Vec<Vec<usize>>,
    /// Summed log-probability of each rollout's free decisions.
    pub logp: Vec<Tensor>,
    /// State estimates per rollout: `(route position, estimate [1, sd])`;
    /// the estimate at position p targets the true state after p-1 edges.
    pub est: Vec<Vec<(usize, Tensor)>>,
}

/// Start nodes for the forced-start scheme: tour variants start directly
/// at node j; depot-based variants start at the depot with node j forced
/// second.
pub fn pomo_starts(variant: Variant, n: usize, k1: usize) -> Vec<usize> {
    if variant.depot_based() {
        (1..n).take(k1).collect()
    } else {
        (0..n).take(k1).collect()
    }
}

struct EstimatorState {
    h: Tensor,
    c: Tensor,
    fed: usize,
}

pub fn rollout(
    policy: &Policy,
    tape: &Tape,
    mat: &Materialized,
    weights: &PointerWeights,
    enc: &Encoded,
    instance: &MultigraphInstance,
    spec: &ProblemSpec,
    cheapest: &[f64],
    k1: usize,
    mode: &mut DecodeMode,
) -> Result<RolloutOutput> {
    let cfg = &policy.config;
    let variant = cfg.variant;
    let n = enc.n;
    let heads = cfg.heads;
    let dk = cfg.d / heads;
    let scale = 1.0 / (heads as f64 * (cfg.d as f64).sqrt());

    let starts = pomo_starts(variant, n, k1);
    let keys = enc.h.matmul_nt(&weights.wk)?;
    let key_slices: Vec<Tensor> = (0..heads)
        .map(|h| keys.slice_cols(h * dk, (h + 1) * dk))
        .collect::<std::result::Result<_, _>>()?;
    let graph_term = enc.h.mean_rows()?.matmul_nt(mat.get("dec.w3"))?;
    let demands: Option<Vec<f64>> =
        instance.node_attrs().and_then(|a| a.demand.clone());

    let mut out = RolloutOutput { nodes: Vec::new(), logp: Vec::new(), est: Vec::new() };

    for (j, &start) in starts.iter().enumerate() {
        let mut nodes: Vec<usize> = if variant.depot_based() { vec![0, start] } else { vec![start] };
        let mut visited = vec![false; n];
        for &u in &nodes {
            visited[u] = true;
        }
        let mut load = nodes
            .iter()
            .filter(|&&u| u != 0)
            .map(|&u| demands.as_ref().map_or(0.0, |d| d[u]))
            .sum::<f64>();
        let mut logp: Option<Tensor> = None;
        let mut est_steps: Vec<(usize, Tensor)> = Vec::new();
        let mut estimator = if cfg.uses_state_estimator() {
            Some(EstimatorState {
                h: tape.leaf(1, cfg.d, vec![0.0; cfg.d])?,
                c: tape.leaf(1, cfg.d, vec![0.0; cfg.d])?,
                fed: 0,
            })
        } else {
            None
        };
        let h_start_term = enc.h.gather_rows(&[nodes[0]])?.matmul_nt(mat.get("dec.w1"))?;

        loop {
            let done = match variant {
                Variant::Motsp | Variant::Rctsp | Variant::Motsptw => nodes.len() == n,
                Variant::Mocvrp => (1..n).all(|u| visited[u]),
                Variant::Op | Variant::Moop => nodes.len() > 1 && *nodes.last().unwrap() == 0,
            };
            if done {
                break;
            }

            let current = *nodes.last().unwrap();
            let position = nodes.len();

            // Recurrent state estimate over the visited node encodings.
            let state_vec: Option<Tensor> = if let Some(est) = estimator.as_mut() {
                while est.fed < nodes.len() {
                    let x = enc.h.gather_rows(&[nodes[est.fed]])?;
                    let w = lstm_weights(mat, "est");
                    let (h2, c2) = lstm_cell(&x, &est.h, &est.c, &w)?;
                    est.h = h2;
                    est.c = c2;
                    est.fed += 1;
                }
                let shat = est.h.matmul_nt(mat.get("est.w_state"))?;
                est_steps.push((position, shat.clone()));
                Some(shat)
            } else if cfg.state_dim() > 0 {
                Some(tape.leaf(1, 1, vec![load])?)
            } else {
                None
            };

            let mut q = h_start_term
                .add(&enc.h.gather_rows(&[current])?.matmul_nt(mat.get("dec.w2"))?)?
                .add(&graph_term)?;
            let visited_nodes: Vec<usize> = (0..n).filter(|&u| visited[u]).collect();
            let visited_mean = enc.h.gather_rows(&visited_nodes)?.mean_rows()?;
            q = q.add(&visited_mean.matmul_nt(mat.get("dec.w4"))?)?;
            if let Some(s) = &state_vec {
                q = q.add(&s.matmul_nt(mat.get("dec.w5"))?)?;
            }

            let qp = q.matmul_nt(&weights.wq)?;
            let mut scores: Option<Tensor> = None;
            for h in 0..heads {
                let sh = qp.slice_cols(h * dk, (h + 1) * dk)?.matmul_nt(&key_slices[h])?;
                scores = Some(match scores {
                    None => sh,
                    Some(acc) => acc.add(&sh)?,
                });
            }
            let mut scores = scores.unwrap().scale(scale)?;

            let cost_row: Vec<f64> = (0..n).map(|v| cheapest[current * n + v]).collect();
            let penalty = tape.leaf(1, n, cost_row)?.mul_scalar_t(mat.get("dec.beta"))?;
            scores = scores.sub(&penalty)?;
            // Scale-preserving clipping: c * tanh(s / c) stays close to
            // s well inside the bound and saturates at +-c.
            let clipped = scores.scale(1.0 / cfg.clip_node)?.tanh()?.scale(cfg.clip_node)?;

            let mask = build_mask(variant, n, &visited, current, load, spec, demands.as_deref());
            if mask.iter().all(|&m| m) {
                return Err(ModelError::NoFeasibleNode { rollout: j, step: position });
            }
            let logp_row = clipped.masked_fill(&mask, -1e9)?.log_softmax()?;

            let choice = match mode {
                DecodeMode::Greedy => {
                    let vals = logp_row.value();
                    let mut best = (usize::MAX, f64::NEG_INFINITY);
                    for (v, &lp) in vals.iter().enumerate() {
                        if !mask[v] && lp > best.1 {
                            best = (v, lp);
                        }
                    }
                    best.0
                }
                DecodeMode::Sample(streams) => {
                    let probs: Vec<f64> = logp_row.value().iter().map(|&lp| lp.exp()).collect();
                    streams[j].categorical(&probs)
                }
                DecodeMode::Forced(routes) => routes[j][position],
            };
            debug_assert!(!mask[choice], "picked a masked node");

            logp = Some(match logp {
                None => logp_row.gather_elems(&[choice])?,
                Some(acc) => acc.add(&logp_row.gather_elems(&[choice])?)?,
            });

            nodes.push(choice);
            if variant.depot_based() && choice == 0 {
                load = 0.0;
            } else {
                visited[choice] = true;
                if let Some(d) = &demands {
                    load += d[choice];
                }
            }
        }

        // Structural closing hop (not a decision).
        match variant {
            Variant::Motsp | Variant::Rctsp | Variant::Motsptw => nodes.push(nodes[0]),
            Variant::Mocvrp => {
                if *nodes.last().unwrap() != 0 {
                    nodes.push(0);
                }
            }
            Variant::Op | Variant::Moop => {}
        }

        out.logp.push(match logp {
            Some(t) => t,
            None => tape.scalar(0.0)?,
        });
        out.nodes.push(nodes);
        out.est.push(est_steps);
    }
    Ok(out)
}

fn build_mask(
    variant: Variant,
    n: usize,
    visited: &[bool],
    current: usize,
    load: f64,
    spec: &ProblemSpec,
    demands: Option<&[f64]>,
) -> Vec<bool> {
    match variant {
        Variant::Motsp | Variant::Rctsp | Variant::Motsptw => {
            (0..n).map(|v| visited[v]).collect()
        }
        Variant::Mocvrp => {
            let cap = spec.capacity.unwrap_or(f64::INFINITY);
            let demands = demands.expect("capacitated variant has demands");
            (0..n)
                .map(|v| {
                    if v == 0 {
                        current == 0
                    } else {
                        visited[v] || load + demands[v] > cap
                    }
                })
                .collect()
        }
        Variant::Op | Variant::Moop => (0..n)
            .map(|v| if v == 0 { current == 0 } else { visited[v] })
            .collect(),
    }
}

pub(crate) fn lstm_weights<'a>(mat: &'a Materialized, prefix: &str) -> LstmWeights<'a> {
    LstmWeights {
        w_x: [
            mat.get(&format!("{prefix}.wx_i")),
            mat.get(&format!("{prefix}.wx_f")),
            mat.get(&format!("{prefix}.wx_g")),
            mat.get(&format!("{prefix}.wx_o")),
        ],
        w_h: [
            mat.get(&format!("{prefix}.wh_i")),
            mat.get(&format!("{prefix}.wh_f")),
            mat.get(&format!("{prefix}.wh_g")),
            mat.get(&format!("{prefix}.wh_o")),
        ],
        b: [
            mat.get(&format!("{prefix}.b_i")),
            mat.get(&format!("{prefix}.b_f")),
            mat.get(&format!("{prefix}.b_g")),
            mat.get(&format!("{prefix}.b_o")),
        ],
    }
}
