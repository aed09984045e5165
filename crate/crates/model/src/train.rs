//! Hierarchical REINFORCE training and inference-time evaluation.
//!
//! Each step samples POMO node permutations per instance, several edge
//! selections per permutation, and couples the stages: the node policy's
//! reward for a permutation is the best reward over its edge samples,
//! baselined by the per-instance mean; the edge policy is baselined by
//! the per-permutation mean. Variants with a state estimator add its
//! squared-error loss against the best edge sample's true state trace.

use crate::config::decoder_cost_weights;
use crate::decoder::{pomo_starts, rollout, DecodeMode};
use crate::edge_stage::{edge_stage, EdgeMode};
use crate::encoder::encode;
use crate::error::{ModelError, Result};
use crate::hypernet::{edge_pointer_weights, node_pointer_weights};
use crate::policy::Policy;
use polyroute_core::eval::{cheapest_edge_matrix, evaluate_route, RouteEvaluation};
use polyroute_core::fsasp::clipped_hv;
use polyroute_core::gen::rng::{tags, Stream};
use polyroute_core::gen::{generate, GenConfig};
use polyroute_core::instance::{MultigraphInstance, ProblemSpec, Variant};
use polyroute_core::pareto::{chebyshev_cost, Preference};
use polyroute_core::route::Route;
use polyroute_diff::adam::{adam_step, AdamConfig};
use polyroute_diff::{Tape, Tensor};
use serde::Serialize;

const SUB_GEN: u64 = 0;
const SUB_ROLLOUT: u64 = 1;
const SUB_EDGE: u64 = 2;
const SUB_PREF: u64 = 3;

/// Penalty coefficient per variant: ten times the typical single-edge
/// cost scale of the synthetic distributions (attributes are uniform on
/// [0, 1], so 10 x 0.5).
pub fn default_penalty(_variant: Variant) -> f64 {
    5.0
}

/// Scalar training reward: negative objective (Chebyshev-scalarized for
/// bi-objective variants) minus the weighted constraint violation.
pub fn reward(
    eval: &RouteEvaluation,
    spec: &ProblemSpec,
    pref: &Preference,
    penalty: f64,
    ideal: &[f64],
) -> f64 {
    let base = if spec.objective_dim == 1 {
        eval.objectives[0]
    } else {
        chebyshev_cost(&eval.objectives, pref, ideal).expect("dims checked upstream")
    };
    -base - penalty * eval.violation
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// POMO rollouts per instance; clamped to the number of admissible
    /// start nodes.
    pub k1: usize,
    pub k2_train: usize,
    pub k2_eval: usize,
    pub epochs: usize,
    pub instances_per_epoch: usize,
    pub lr: f64,
    pub weight_decay: f64,
    /// Violation penalty; `None` takes the variant default.
    pub penalty: Option<f64>,
    pub seed: u64,
    pub val_instances: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 64,
            k1: 0, // 0 = as many as the instance admits
            k2_train: 20,
            k2_eval: 50,
            epochs: 10,
            instances_per_epoch: 2000,
            lr: 1e-4,
            weight_decay: 1e-6,
            penalty: None,
            seed: 1,
            val_instances: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.instances_per_epoch == 0 {
            return Err(ModelError::Config("batch and epoch sizes must be positive".into()));
        }
        if self.k2_train < 2 {
            return Err(ModelError::Config(
                "k2_train must be at least 2 (the edge baseline needs variance)".into(),
            ));
        }
        Ok(())
    }
}

/// Diagnostics of one optimizer step.
#[derive(Debug, Clone, Default)]
pub struct StepStats {
    pub loss: f64,
    pub mean_reward: f64,
    /// Largest per-instance |sum of node advantages| (identity: 0).
    pub max_adv_residual: f64,
    /// True when every equal-reward edge group contributed exactly zero.
    pub edge_identity_ok: bool,
}

/// One hierarchical REINFORCE step over a batch of instances. Gradients
/// are zeroed, accumulated, checked finite and applied with Adam.
pub fn hierarchical_step(
    policy: &mut Policy,
    instances: &[MultigraphInstance],
    spec: &ProblemSpec,
    pref: &Preference,
    cfg: &TrainConfig,
    epoch: u64,
    batch: u64,
) -> Result<StepStats> {
    let penalty = cfg.penalty.unwrap_or_else(|| default_penalty(spec.variant));
    let ideal = vec![0.0; spec.objective_dim];
    let tape = Tape::new();
    let mat = policy.materialize(&tape)?;
    let node_w = node_pointer_weights(policy, &tape, &mat, pref)?;
    let edge_w = edge_pointer_weights(policy, &tape, &mat, pref)?;
    let cost_weights = decoder_cost_weights(spec, pref);

    let mut node_terms: Option<Tensor> = None;
    let mut edge_terms: Option<Tensor> = None;
    let mut est_terms: Option<Tensor> = None;
    let mut stats = StepStats { edge_identity_ok: true, ..StepStats::default() };
    let mut reward_sum = 0.0;
    let mut reward_count = 0usize;
    let mut total_k1 = 0usize;
    let mut total_k1k2 = 0usize;

    for (i, instance) in instances.iter().enumerate() {
        let enc = encode(policy, &tape, &mat, instance)?;
        let cheapest = cheapest_edge_matrix(instance, &cost_weights);
        let starts = pomo_starts(spec.variant, enc.n, usize::MAX).len();
        let k1 = if cfg.k1 == 0 { starts } else { cfg.k1.min(starts) };
        let mut streams: Vec<Stream> = (0..k1)
            .map(|j| {
                Stream::new(
                    cfg.seed,
                    &[tags::TRAIN, SUB_ROLLOUT, epoch, batch, i as u64, j as u64],
                )
            })
            .collect();
        let roll = rollout(
            policy,
            &tape,
            &mat,
            &node_w,
            &enc,
            instance,
            spec,
            &cheapest,
            k1,
            &mut DecodeMode::Sample(&mut streams),
        )?;

        let mut best_rewards = Vec::with_capacity(k1);
        let mut per_j: Vec<(Vec<f64>, Vec<Tensor>, RouteEvaluation)> = Vec::with_capacity(k1);
        for (j, pi) in roll.nodes.iter().enumerate() {
            let mut edge_streams: Vec<Stream> = (0..cfg.k2_train)
                .map(|k| {
                    Stream::new(
                        cfg.seed,
                        &[
                            tags::TRAIN,
                            SUB_EDGE,
                            epoch,
                            batch,
                            i as u64,
                            j as u64,
                            k as u64,
                        ],
                    )
                })
                .collect();
            let stage = edge_stage(
                policy,
                &tape,
                &mat,
                &edge_w,
                instance,
                spec,
                pi,
                pref,
                &mut EdgeMode::Sample(&mut edge_streams),
            )?;
            let mut rewards = Vec::with_capacity(cfg.k2_train);
            let mut best: Option<(f64, RouteEvaluation)> = None;
            for sel in &stage.selections {
                let route = Route::new(pi.clone(), sel.clone());
                debug_assert!(route.validate(instance, spec).is_ok());
                let eval = evaluate_route(instance, spec, &route)?;
                let r = reward(&eval, spec, pref, penalty, &ideal);
                if best.as_ref().map_or(true, |(b, _)| r > *b) {
                    best = Some((r, eval.clone()));
                }
                rewards.push(r);
            }
            let (best_r, best_eval) = best.expect("k2 >= 2");
            best_rewards.push(best_r);
            reward_sum += rewards.iter().sum::<f64>();
            reward_count += rewards.len();
            per_j.push((rewards, stage.logp, best_eval));
        }

        // Node advantages: centered best-of-edge rewards, re-centered so
        // the per-instance sum is numerically zero.
        let b_node = best_rewards.iter().sum::<f64>() / k1 as f64;
        let mut adv_node: Vec<f64> = best_rewards.iter().map(|r| r - b_node).collect();
        let residual = adv_node.iter().sum::<f64>() / k1 as f64;
        for a in adv_node.iter_mut() {
            *a -= residual;
        }
        if best_rewards.windows(2).all(|w| w[0] == w[1]) {
            adv_node.iter_mut().for_each(|a| *a = 0.0);
        }
        stats.max_adv_residual =
            stats.max_adv_residual.max(adv_node.iter().sum::<f64>().abs());

        for (j, (rewards, edge_logps, best_eval)) in per_j.iter().enumerate() {
            if adv_node[j] != 0.0 {
                let term = roll.logp[j].scale(adv_node[j])?;
                node_terms = Some(match node_terms {
                    None => term,
                    Some(acc) => acc.add(&term)?,
                });
            }
            let b_edge = rewards.iter().sum::<f64>() / rewards.len() as f64;
            let all_equal = rewards.windows(2).all(|w| w[0] == w[1]);
            for (k, lp) in edge_logps.iter().enumerate() {
                let adv = if all_equal { 0.0 } else { rewards[k] - b_edge };
                if adv != 0.0 {
                    let term = lp.scale(adv)?;
                    edge_terms = Some(match edge_terms {
                        None => term,
                        Some(acc) => acc.add(&term)?,
                    });
                }
            }
            if all_equal && rewards.iter().any(|r| *r != rewards[0]) {
                stats.edge_identity_ok = false;
            }

            // Estimator loss against the best selection's state trace.
            if policy.config.uses_state_estimator() {
                for (position, shat) in &roll.est[j] {
                    let target = &best_eval.state_trace[position - 1];
                    let target_leaf = tape.leaf(1, target.len(), target.clone())?;
                    let diff = shat.sub(&target_leaf)?;
                    let term = diff.mul(&diff)?.sum_all()?;
                    est_terms = Some(match est_terms {
                        None => term,
                        Some(acc) => acc.add(&term)?,
                    });
                }
            }
            total_k1k2 += rewards.len();
        }
        total_k1 += k1;
    }

    let mut loss = tape.scalar(0.0)?;
    if let Some(t) = node_terms {
        loss = loss.add(&t.scale(-1.0 / total_k1 as f64)?)?;
    }
    if let Some(t) = edge_terms {
        loss = loss.add(&t.scale(-1.0 / total_k1k2 as f64)?)?;
    }
    if let Some(t) = est_terms {
        loss = loss.add(&t.scale(1.0 / total_k1 as f64)?)?;
    }

    policy.store.zero_grad();
    tape.backward(&loss, &mut policy.store)?;
    adam_step(
        &mut policy.store,
        &AdamConfig {
            lr: cfg.lr,
            weight_decay: cfg.weight_decay,
            ..AdamConfig::default()
        },
    );
    stats.loss = loss.scalar_value();
    stats.mean_reward = reward_sum / reward_count.max(1) as f64;
    Ok(stats)
}

/// Everything needed to replay one instance's sampled trajectories as a
/// differentiable surrogate loss: routes, edge selections, the constant
/// advantages, and the estimator targets from each permutation's best
/// edge sample.
pub struct SurrogateBatch {
    pub instance: MultigraphInstance,
    pub routes: Vec<Vec<usize>>,
    pub selections: Vec<Vec<Vec<usize>>>,
    pub node_advantages: Vec<f64>,
    pub edge_advantages: Vec<Vec<f64>>,
    /// Per rollout: (route position, true state) targets.
    pub est_targets: Vec<Vec<(usize, Vec<f64>)>>,
}

/// Samples trajectories and freezes rewards into advantages, mirroring
/// one instance's share of a training step.
pub fn sample_surrogate_batch(
    policy: &Policy,
    instance: &MultigraphInstance,
    spec: &ProblemSpec,
    pref: &Preference,
    k1: usize,
    k2: usize,
    seed: u64,
) -> Result<SurrogateBatch> {
    let penalty = default_penalty(spec.variant);
    let ideal = vec![0.0; spec.objective_dim];
    let tape = Tape::new();
    let mat = policy.materialize(&tape)?;
    let node_w = node_pointer_weights(policy, &tape, &mat, pref)?;
    let edge_w = edge_pointer_weights(policy, &tape, &mat, pref)?;
    let cheapest = cheapest_edge_matrix(instance, &decoder_cost_weights(spec, pref));
    let enc = encode(policy, &tape, &mat, instance)?;
    let k1 = k1.min(pomo_starts(spec.variant, enc.n, usize::MAX).len());
    let mut streams: Vec<Stream> = (0..k1)
        .map(|j| Stream::new(seed, &[tags::TRAIN, SUB_ROLLOUT, j as u64]))
        .collect();
    let roll = rollout(
        policy,
        &tape,
        &mat,
        &node_w,
        &enc,
        instance,
        spec,
        &cheapest,
        k1,
        &mut DecodeMode::Sample(&mut streams),
    )?;
    let mut selections = Vec::with_capacity(k1);
    let mut edge_advantages = Vec::with_capacity(k1);
    let mut est_targets = Vec::with_capacity(k1);
    let mut best_rewards = Vec::with_capacity(k1);
    for (j, pi) in roll.nodes.iter().enumerate() {
        let mut edge_streams: Vec<Stream> = (0..k2)
            .map(|k| Stream::new(seed, &[tags::TRAIN, SUB_EDGE, j as u64, k as u64]))
            .collect();
        let stage = edge_stage(
            policy,
            &tape,
            &mat,
            &edge_w,
            instance,
            spec,
            pi,
            pref,
            &mut EdgeMode::Sample(&mut edge_streams),
        )?;
        let mut rewards = Vec::with_capacity(k2);
        let mut best: Option<(f64, RouteEvaluation)> = None;
        for sel in &stage.selections {
            let eval = evaluate_route(instance, spec, &Route::new(pi.clone(), sel.clone()))?;
            let r = reward(&eval, spec, pref, penalty, &ideal);
            if best.as_ref().map_or(true, |(b, _)| r > *b) {
                best = Some((r, eval.clone()));
            }
            rewards.push(r);
        }
        let (best_r, best_eval) = best.expect("k2 >= 1");
        best_rewards.push(best_r);
        let b_edge = rewards.iter().sum::<f64>() / rewards.len() as f64;
        let all_equal = rewards.windows(2).all(|w| w[0] == w[1]);
        edge_advantages.push(
            rewards
                .iter()
                .map(|r| if all_equal { 0.0 } else { r - b_edge })
                .collect(),
        );
        est_targets.push(
            roll.est[j]
                .iter()
                .map(|(pos, _)| (*pos, best_eval.state_trace[pos - 1].clone()))
                .collect(),
        );
        selections.push(stage.selections);
    }
    let b_node = best_rewards.iter().sum::<f64>() / k1 as f64;
    let mut node_advantages: Vec<f64> = best_rewards.iter().map(|r| r - b_node).collect();
    let resid = node_advantages.iter().sum::<f64>() / k1 as f64;
    node_advantages.iter_mut().for_each(|a| *a -= resid);
    Ok(SurrogateBatch {
        instance: instance.clone(),
        routes: roll.nodes,
        selections,
        node_advantages,
        edge_advantages,
        est_targets,
    })
}

/// Replays a surrogate batch with forced decisions and assembles the
/// training loss as a tape scalar: the reward-weighted log-probabilities
/// of both stages plus the estimator's squared error.
pub fn surrogate_loss_tensor(
    policy: &Policy,
    tape: &Tape,
    batch: &SurrogateBatch,
    spec: &ProblemSpec,
    pref: &Preference,
) -> Result<Tensor> {
    let mat = policy.materialize(tape)?;
    let node_w = node_pointer_weights(policy, tape, &mat, pref)?;
    let edge_w = edge_pointer_weights(policy, tape, &mat, pref)?;
    let instance = &batch.instance;
    let cheapest = cheapest_edge_matrix(instance, &decoder_cost_weights(spec, pref));
    let enc = encode(policy, tape, &mat, instance)?;
    let k1 = batch.routes.len();
    let roll = rollout(
        policy,
        tape,
        &mat,
        &node_w,
        &enc,
        instance,
        spec,
        &cheapest,
        k1,
        &mut DecodeMode::Forced(&batch.routes),
    )?;
    let k1k2: usize = batch.selections.iter().map(Vec::len).sum();
    let mut loss = tape.scalar(0.0)?;
    for j in 0..k1 {
        if batch.node_advantages[j] != 0.0 {
            loss = loss.add(
                &roll.logp[j].scale(-batch.node_advantages[j] / k1 as f64)?,
            )?;
        }
        let stage = edge_stage(
            policy,
            tape,
            &mat,
            &edge_w,
            instance,
            spec,
            &batch.routes[j],
            pref,
            &mut EdgeMode::Forced(&batch.selections[j]),
        )?;
        for (k, lp) in stage.logp.iter().enumerate() {
            let adv = batch.edge_advantages[j][k];
            if adv != 0.0 {
                loss = loss.add(&lp.scale(-adv / k1k2 as f64)?)?;
            }
        }
        for ((pos, target), (roll_pos, shat)) in
            batch.est_targets[j].iter().zip(&roll.est[j])
        {
            debug_assert_eq!(pos, roll_pos);
            let target_leaf = tape.leaf(1, target.len(), target.clone())?;
            let diff = shat.sub(&target_leaf)?;
            loss = loss.add(&diff.mul(&diff)?.sum_all()?.scale(1.0 / k1 as f64)?)?;
        }
    }
    Ok(loss)
}

/// Greedy POMO decode with best-of-k2 sampled edge selections; returns
/// the best route per start by penalized reward.
pub fn greedy_routes(
    policy: &Policy,
    instance: &MultigraphInstance,
    spec: &ProblemSpec,
    pref: &Preference,
    k2_eval: usize,
    seed: u64,
) -> Result<Vec<(Route, RouteEvaluation, f64)>> {
    let penalty = default_penalty(spec.variant);
    let ideal = vec![0.0; spec.objective_dim];
    let tape = Tape::new();
    let mat = policy.materialize(&tape)?;
    let node_w = node_pointer_weights(policy, &tape, &mat, pref)?;
    let edge_w = edge_pointer_weights(policy, &tape, &mat, pref)?;
    let cheapest = cheapest_edge_matrix(instance, &decoder_cost_weights(spec, pref));
    let n = instance.num_nodes();
    let k1 = pomo_starts(spec.variant, n, usize::MAX).len();
    let enc = encode(policy, &tape, &mat, instance)?;
    let roll = rollout(
        policy,
        &tape,
        &mat,
        &node_w,
        &enc,
        instance,
        spec,
        &cheapest,
        k1,
        &mut DecodeMode::Greedy,
    )?;
    let mut out = Vec::with_capacity(k1);
    for (j, pi) in roll.nodes.iter().enumerate() {
        let mut selections = Vec::new();
        let greedy = edge_stage(
            policy, &tape, &mat, &edge_w, instance, spec, pi, pref, &mut EdgeMode::Greedy,
        )?;
        selections.extend(greedy.selections);
        if k2_eval > 0 {
            let mut streams: Vec<Stream> = (0..k2_eval)
                .map(|k| Stream::new(seed, &[tags::EVAL, SUB_EDGE, j as u64, k as u64]))
                .collect();
            let sampled = edge_stage(
                policy,
                &tape,
                &mat,
                &edge_w,
                instance,
                spec,
                pi,
                pref,
                &mut EdgeMode::Sample(&mut streams),
            )?;
            selections.extend(sampled.selections);
        }
        let mut best: Option<(Route, RouteEvaluation, f64)> = None;
        for sel in selections {
            let route = Route::new(pi.clone(), sel);
            let eval = evaluate_route(instance, spec, &route)?;
            let r = reward(&eval, spec, pref, penalty, &ideal);
            if best.as_ref().map_or(true, |(_, _, b)| r > *b) {
                best = Some((route, eval, r));
            }
        }
        out.push(best.expect("at least the greedy selection"));
    }
    Ok(out)
}

/// Best single route across all greedy POMO starts.
pub fn best_greedy_route(
    policy: &Policy,
    instance: &MultigraphInstance,
    spec: &ProblemSpec,
    pref: &Preference,
    k2_eval: usize,
    seed: u64,
) -> Result<(Route, RouteEvaluation, f64)> {
    let routes = greedy_routes(policy, instance, spec, pref, k2_eval, seed)?;
    Ok(routes
        .into_iter()
        .max_by(|a, b| a.2.partial_cmp(&b.2).unwrap())
        .expect("at least one start"))
}

#[derive(Debug, Clone, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mean_reward: f64,
    pub val_mean_reward: f64,
    pub val_feasible_rate: f64,
    pub max_adv_residual: f64,
}

pub struct TrainResult {
    /// Policy holding the final-epoch parameters.
    pub policy: Policy,
    /// Snapshot of the best-validation parameters.
    pub best: Policy,
    pub history: Vec<EpochRecord>,
    /// Line-delimited JSON, one record per epoch (deterministic given the
    /// seed: timing deliberately excluded).
    pub log: String,
}

/// Validation preference: the balanced preference for bi-objective
/// variants, the trivial one otherwise.
fn validation_pref(spec: &ProblemSpec) -> Preference {
    if spec.objective_dim == 1 {
        Preference::single()
    } else {
        Preference::bi(0.5).expect("balanced preference")
    }
}

fn validation_reward(
    policy: &Policy,
    val: &[MultigraphInstance],
    spec: &ProblemSpec,
    cfg: &TrainConfig,
) -> Result<(f64, f64)> {
    let pref = validation_pref(spec);
    let mut total = 0.0;
    let mut feasible = 0usize;
    let mut rollouts = 0usize;
    for (idx, inst) in val.iter().enumerate() {
        let per_start =
            greedy_routes(policy, inst, spec, &pref, cfg.k2_eval, cfg.seed ^ idx as u64)?;
        let best = per_start
            .iter()
            .map(|(_, _, r)| *r)
            .fold(f64::NEG_INFINITY, f64::max);
        total += best;
        feasible += per_start.iter().filter(|(_, e, _)| e.feasible).count();
        rollouts += per_start.len();
    }
    Ok((total / val.len() as f64, feasible as f64 / rollouts as f64))
}

/// Full training loop: fresh instances every epoch, greedy validation on
/// a frozen held-out set, checkpoint of the best validation reward.
pub fn train(
    policy: &mut Policy,
    gen_config: &GenConfig,
    spec: &ProblemSpec,
    cfg: &TrainConfig,
) -> Result<TrainResult> {
    cfg.validate()?;
    if gen_config.variant != policy.config.variant {
        return Err(ModelError::Config("generator and model variants differ".into()));
    }
    let val: Vec<MultigraphInstance> = (0..cfg.val_instances)
        .map(|i| {
            let seed = Stream::new(cfg.seed, &[tags::VALIDATION, i as u64]).next_u64();
            generate(&gen_config.with_seed(seed))
        })
        .collect::<std::result::Result<_, _>>()?;

    let mut history = Vec::new();
    let mut log = String::new();
    let mut best_policy = policy.clone();
    let mut best_val = f64::NEG_INFINITY;
    if cfg.epochs == 0 {
        return Ok(TrainResult {
            policy: policy.clone(),
            best: best_policy,
            history,
            log,
        });
    }

    let batches = (cfg.instances_per_epoch / cfg.batch_size).max(1);
    for epoch in 0..cfg.epochs {
        let mut train_reward = 0.0;
        let mut max_resid = 0.0f64;
        for batch in 0..batches {
            let instances: Vec<MultigraphInstance> = (0..cfg.batch_size)
                .map(|i| {
                    let seed = Stream::new(
                        cfg.seed,
                        &[tags::TRAIN, SUB_GEN, epoch as u64, batch as u64, i as u64],
                    )
                    .next_u64();
                    generate(&gen_config.with_seed(seed))
                })
                .collect::<std::result::Result<_, _>>()?;
            let pref = if spec.objective_dim == 1 {
                Preference::single()
            } else {
                let l1 = Stream::new(
                    cfg.seed,
                    &[tags::PREFERENCE, SUB_PREF, epoch as u64, batch as u64],
                )
                .next_f64();
                Preference::bi(l1).expect("lambda in [0, 1)")
            };
            let stats = hierarchical_step(
                policy,
                &instances,
                spec,
                &pref,
                cfg,
                epoch as u64,
                batch as u64,
            )?;
            train_reward += stats.mean_reward;
            max_resid = max_resid.max(stats.max_adv_residual);
            if !stats.edge_identity_ok {
                return Err(ModelError::Config(
                    "edge advantage identity violated (equal rewards, nonzero advantage)".into(),
                ));
            }
        }
        let (val_reward, val_feasible) = validation_reward(policy, &val, spec, cfg)?;
        let record = EpochRecord {
            epoch,
            train_mean_reward: train_reward / batches as f64,
            val_mean_reward: val_reward,
            val_feasible_rate: val_feasible,
            max_adv_residual: max_resid,
        };
        log.push_str(&serde_json::to_string(&record).expect("record serializes"));
        log.push('\n');
        if val_reward > best_val {
            best_val = val_reward;
            best_policy = policy.clone();
        }
        history.push(record);
    }
    Ok(TrainResult {
        policy: policy.clone(),
        best: best_policy,
        history,
        log,
    })
}

/// Inference-time augmentation factors; variant `k` scales attribute
/// axis `k % m` and leaves the rest unchanged (variant 0 is the
/// identity).
pub const AUG_FACTORS: [f64; 8] = [1.0, 0.5, 2.0, 0.8, 1.25, 0.9, 1.1, 0.75];

#[derive(Debug, Clone)]
pub struct EvalOptions {
    /// Preference-grid size for bi-objective variants.
    pub prefs: usize,
    /// Number of augmentation variants (1..=8).
    pub aug: usize,
    pub k2_eval: usize,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { prefs: 101, aug: 1, k2_eval: 50, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceMetrics {
    pub instance: usize,
    pub variant: String,
    pub method: String,
    pub hv: Option<f64>,
    pub best_objective: Option<f64>,
    pub feasible_rate: f64,
    pub wall_ms: f64,
}

/// Greedy POMO over starts x preference grid x augmentation variants;
/// the best feasible route per (instance, preference) feeds the archive.
/// Search runs on the scaled attributes, reported costs always come from
/// the original instance.
pub fn evaluate(
    policy: &Policy,
    instances: &[(MultigraphInstance, ProblemSpec)],
    opts: &EvalOptions,
) -> Result<Vec<InstanceMetrics>> {
    let mut out = Vec::with_capacity(instances.len());
    for (idx, (instance, spec)) in instances.iter().enumerate() {
        let start = std::time::Instant::now();
        let penalty = default_penalty(spec.variant);
        let ideal = vec![0.0; spec.objective_dim];
        let grid: Vec<Preference> = if spec.objective_dim == 1 {
            vec![Preference::single()]
        } else if opts.prefs <= 1 {
            vec![Preference::bi(0.5).unwrap()]
        } else {
            Preference::grid(opts.prefs)
        };
        // Best penalized reward and evaluation per preference cell.
        let mut best: Vec<Option<(f64, RouteEvaluation)>> = vec![None; grid.len()];
        for aug in 0..opts.aug.max(1).min(AUG_FACTORS.len()) {
            let scaled = if aug == 0 {
                instance.clone()
            } else {
                let mut factors = vec![1.0; instance.attr_dim()];
                factors[aug % instance.attr_dim()] = AUG_FACTORS[aug];
                instance.scaled(&factors)?
            };
            let tape = Tape::new();
            let mat = policy.materialize(&tape)?;
            let enc = encode(policy, &tape, &mat, &scaled)?;
            for (pi_idx, pref) in grid.iter().enumerate() {
                let node_w = node_pointer_weights(policy, &tape, &mat, pref)?;
                let edge_w = edge_pointer_weights(policy, &tape, &mat, pref)?;
                let cheapest =
                    cheapest_edge_matrix(&scaled, &decoder_cost_weights(spec, pref));
                let k1 = pomo_starts(spec.variant, enc.n, usize::MAX).len();
                let roll = rollout(
                    policy,
                    &tape,
                    &mat,
                    &node_w,
                    &enc,
                    &scaled,
                    spec,
                    &cheapest,
                    k1,
                    &mut DecodeMode::Greedy,
                )?;
                for (j, pi) in roll.nodes.iter().enumerate() {
                    let greedy = edge_stage(
                        policy, &tape, &mat, &edge_w, &scaled, spec, pi, pref,
                        &mut EdgeMode::Greedy,
                    )?;
                    let mut selections = greedy.selections;
                    if opts.k2_eval > 0 {
                        let mut streams: Vec<Stream> = (0..opts.k2_eval)
                            .map(|k| {
                                Stream::new(
                                    opts.seed,
                                    &[
                                        tags::EVAL,
                                        idx as u64,
                                        aug as u64,
                                        pi_idx as u64,
                                        j as u64,
                                        k as u64,
                                    ],
                                )
                            })
                            .collect();
                        let sampled = edge_stage(
                            policy,
                            &tape,
                            &mat,
                            &edge_w,
                            &scaled,
                            spec,
                            pi,
                            pref,
                            &mut EdgeMode::Sample(&mut streams),
                        )?;
                        selections.extend(sampled.selections);
                    }
                    for sel in selections {
                        // Reported costs use the unscaled attributes.
                        let route = Route::new(pi.clone(), sel);
                        let eval = evaluate_route(instance, spec, &route)?;
                        let r = reward(&eval, spec, pref, penalty, &ideal);
                        let slot = &mut best[pi_idx];
                        let better = match slot.as_ref() {
                            None => true,
                            Some((br, be)) => {
                                (eval.feasible && !be.feasible)
                                    || (eval.feasible == be.feasible && r > *br)
                            }
                        };
                        if better {
                            *slot = Some((r, eval));
                        }
                    }
                }
            }
        }
        let cells: Vec<&(f64, RouteEvaluation)> =
            best.iter().map(|s| s.as_ref().expect("every cell decoded")).collect();
        let feasible_rate =
            cells.iter().filter(|(_, e)| e.feasible).count() as f64 / cells.len() as f64;
        let (hv, best_objective) = if spec.objective_dim == 2 {
            let pts: Vec<Vec<f64>> = cells
                .iter()
                .filter(|(_, e)| e.feasible)
                .map(|(_, e)| e.objectives.clone())
                .collect();
            let reference = spec
                .hv_reference
                .clone()
                .ok_or_else(|| ModelError::Config("bi-objective eval needs hv reference".into()))?;
            (Some(clipped_hv(&pts, &reference)?), None)
        } else {
            let obj = cells
                .iter()
                .filter(|(_, e)| e.feasible)
                .map(|(_, e)| e.objectives[0])
                .fold(f64::INFINITY, f64::min);
            (None, obj.is_finite().then_some(obj))
        };
        out.push(InstanceMetrics {
            instance: idx,
            variant: spec.variant.name().to_string(),
            method: "model".to_string(),
            hv,
            best_objective,
            feasible_rate,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(out)
}
