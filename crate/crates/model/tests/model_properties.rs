//! Structural and numerical properties of the two-stage policy:
//! permutation invariance/equivariance, hand-computed layer values,
//! sampling-vs-probability agreement, and a full-pipeline gradient check
//! at toy scale.

use polyroute_core::eval::cheapest_edge_matrix;
use polyroute_core::gen::rng::Stream;
use polyroute_core::gen::{generate, Distribution, GenConfig};
use polyroute_core::instance::{EdgeAttr, MultigraphInstance, ProblemSpec, Variant};
use polyroute_core::pareto::Preference;
use polyroute_model::config::{decoder_cost_weights, ModelConfig};
use polyroute_model::decoder::{pomo_starts, rollout, DecodeMode};
use polyroute_model::edge_stage::{edge_stage, pointer_scores, EdgeMode};
use polyroute_model::encoder::{encode, gated_node_features, pre_encode};
use polyroute_model::hypernet::{edge_pointer_weights, node_pointer_weights, PointerWeights};
use polyroute_model::policy::Policy;
use polyroute_model::train::{sample_surrogate_batch, surrogate_loss_tensor};
use polyroute_diff::gradcheck::max_rel_error_verbose;
use polyroute_diff::Tape;

fn flex_instance(n: usize, x: u32, variant: Variant, seed: u64) -> MultigraphInstance {
    generate(&GenConfig::new(Distribution::Flex(x), n, variant, seed)).unwrap()
}

fn spec_for(variant: Variant) -> ProblemSpec {
    match variant {
        Variant::Rctsp => ProblemSpec::new(variant).with_resource_limit(4.0),
        Variant::Moop => ProblemSpec::new(variant).with_resource_limit(2.0),
        Variant::Op => ProblemSpec::new(variant).with_thresholds(2.0, 2.0),
        Variant::Mocvrp => ProblemSpec::new(variant).with_capacity(50.0),
        _ => ProblemSpec::new(variant),
    }
}

#[test]
fn pre_encode_invariant_under_parallel_edge_shuffle() {
    let policy = Policy::new(ModelConfig::toy(Variant::Motsp), 11).unwrap();
    let mut s = Stream::new(500, &[]);
    for trial in 0..100 {
        let inst = flex_instance(5, 4, Variant::Motsp, 600 + trial);
        let n = inst.num_nodes();
        let mut shuffled_sets: Vec<Vec<EdgeAttr>> = (0..n * n)
            .map(|p| inst.edges(p / n, p % n).to_vec())
            .collect();
        for set in shuffled_sets.iter_mut() {
            s.shuffle(set);
        }
        let shuffled = MultigraphInstance::new(n, 2, shuffled_sets, None).unwrap();
        let tape = Tape::new();
        let mat = policy.materialize(&tape).unwrap();
        let a = pre_encode(&policy, &tape, &mat, &inst).unwrap().value();
        let b = pre_encode(&policy, &tape, &mat, &shuffled).unwrap().value();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12, "trial {trial}: {x} vs {y}");
        }
    }
}

#[test]
fn pre_encode_singleton_and_duplicate_edges() {
    let policy = Policy::new(ModelConfig::toy(Variant::Motsp), 3).unwrap();
    let n = 3;
    let single = |vals: [f64; 2]| -> Vec<Vec<EdgeAttr>> {
        let mut sets = vec![Vec::new(); n * n];
        for u in 0..n {
            for v in 0..n {
                if u != v {
                    sets[u * n + v] = vec![EdgeAttr::new(vals.to_vec())];
                }
            }
        }
        sets
    };
    let inst1 = MultigraphInstance::new(n, 2, single([0.3, 0.7]), None).unwrap();
    // Same instance with the edge duplicated on pair (0, 1).
    let mut dup_sets = single([0.3, 0.7]);
    dup_sets[1].push(EdgeAttr::new(vec![0.3, 0.7]));
    let inst2 = MultigraphInstance::new(n, 2, dup_sets, None).unwrap();

    let tape = Tape::new();
    let mat = policy.materialize(&tape).unwrap();
    let d1 = pre_encode(&policy, &tape, &mat, &inst1).unwrap();
    let d2 = pre_encode(&policy, &tape, &mat, &inst2).unwrap();

    // Recompute pair (0, 1) by hand: rho(phi(W_g e)) and rho(2 phi(W_g e)).
    use polyroute_diff::nn::mlp2;
    let e = tape.leaf(1, 2, vec![0.3, 0.7]).unwrap();
    let g = e.matmul_nt(mat.get("pre.wg")).unwrap();
    let phi = mlp2(
        &g,
        mat.get("pre.phi.w1"),
        mat.get("pre.phi.b1"),
        mat.get("pre.phi.w2"),
        mat.get("pre.phi.b2"),
    )
    .unwrap();
    let rho = |x: &polyroute_diff::Tensor| {
        mlp2(
            x,
            mat.get("pre.rho.w1"),
            mat.get("pre.rho.b1"),
            mat.get("pre.rho.w2"),
            mat.get("pre.rho.b2"),
        )
        .unwrap()
    };
    let manual1 = rho(&phi).value();
    let manual2 = rho(&phi.scale(2.0).unwrap()).value();
    let d = policy.config.d;
    let row1 = &d1.value()[d..2 * d]; // pair index 0*n+1 = 1
    let row2 = &d2.value()[d..2 * d];
    for (x, y) in row1.iter().zip(&manual1) {
        assert!((x - y).abs() < 1e-12);
    }
    for (x, y) in row2.iter().zip(&manual2) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn gated_sublayer_matches_hand_computation() {
    // N = 2, d = 2, one head: x_u = (w_f . D_uv, w_b . D_vu) for the
    // single neighbor, with softmax weight 1.
    let tape = Tape::new();
    let d = tape
        .leaf(4, 2, vec![9.0, 9.0, 0.2, 0.6, 0.8, 0.1, 9.0, 9.0])
        .unwrap(); // rows: (0,0), (0,1), (1,0), (1,1)
    let gate_f = tape.leaf(1, 2, vec![0.5, -0.3]).unwrap();
    let gate_b = tape.leaf(1, 2, vec![0.1, 0.9]).unwrap();
    let w_f = tape.leaf(1, 2, vec![1.5, -2.0]).unwrap();
    let w_b = tape.leaf(1, 2, vec![0.25, 4.0]).unwrap();
    let x = gated_node_features(&d, &gate_f, &gate_b, &w_f, &w_b, 2, 1).unwrap();
    let v = x.value();
    let a = [0.2, 0.6]; // D_01
    let b = [0.8, 0.1]; // D_10
    let expect = [
        1.5 * a[0] - 2.0 * a[1],
        0.25 * b[0] + 4.0 * b[1],
        1.5 * b[0] - 2.0 * b[1],
        0.25 * a[0] + 4.0 * a[1],
    ];
    for (got, want) in v.iter().zip(&expect) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
}

#[test]
fn encoder_is_equivariant_under_node_relabeling() {
    let policy = Policy::new(ModelConfig::toy(Variant::Motsp), 21).unwrap();
    let mut s = Stream::new(700, &[]);
    for trial in 0..100 {
        let n = 4 + (trial % 4) as usize;
        let inst = flex_instance(n, 3, Variant::Motsp, 800 + trial);
        let mut perm: Vec<usize> = (0..n).collect();
        s.shuffle(&mut perm);
        let mut sets = vec![Vec::new(); n * n];
        for (u, v) in inst.pairs() {
            sets[perm[u] * n + perm[v]] = inst.edges(u, v).to_vec();
        }
        let relabeled = MultigraphInstance::new(n, 2, sets, None).unwrap();
        let tape = Tape::new();
        let mat = policy.materialize(&tape).unwrap();
        let h = encode(&policy, &tape, &mat, &inst).unwrap().h.value();
        let hp = encode(&policy, &tape, &mat, &relabeled).unwrap().h.value();
        let d = policy.config.d;
        for u in 0..n {
            for c in 0..d {
                let a = h[u * d + c];
                let b = hp[perm[u] * d + c];
                assert!(
                    (a - b).abs() <= 1e-9,
                    "trial {trial}, node {u}, dim {c}: {a} vs {b}"
                );
            }
        }
    }
}

#[test]
fn pointer_score_formula_hand_value() {
    // One head, width 1, identity projections: score = q*k - beta*cost
    // = 2*3 - 0.5*1 = 5.5 before clipping.
    let tape = Tape::new();
    let weights = PointerWeights {
        wq: tape.leaf(1, 1, vec![1.0]).unwrap(),
        wk: tape.leaf(1, 1, vec![1.0]).unwrap(),
    };
    let q = tape.leaf(1, 1, vec![2.0]).unwrap();
    let k = tape.leaf(1, 1, vec![3.0]).unwrap();
    let beta = tape.leaf(1, 1, vec![0.5]).unwrap();
    let cost = tape.leaf(1, 1, vec![1.0]).unwrap();
    let s = pointer_scores(&q, &k, &weights, &beta, &cost, 1, 1).unwrap();
    assert!((s.scalar_value() - 5.5).abs() < 1e-12);
}

#[test]
fn clipped_softmax_approaches_raw_scores_for_large_clip() {
    // With clipping c*tanh(s/c) and large c, scores (2, 0) give
    // softmax(2, 0) = (0.881, 0.119).
    let c = 50.0;
    let clip = |s: f64| c * (s / c).tanh();
    let (a, b) = (clip(2.0), clip(0.0));
    let z = a.exp() + b.exp();
    assert!((a.exp() / z - 0.8808).abs() < 1e-3);
    assert!((b.exp() / z - 0.1192).abs() < 1e-3);
}

#[test]
fn uniform_scores_give_uniform_first_decision() {
    // Identical attributes everywhere plus a zeroed query projection
    // make every unvisited node equally likely; the only free decision of
    // a 3-node tour then carries log(1/2).
    let n = 3;
    let mut sets = vec![Vec::new(); n * n];
    for u in 0..n {
        for v in 0..n {
            if u != v {
                sets[u * n + v] = vec![EdgeAttr::new(vec![0.4, 0.4])];
            }
        }
    }
    let inst = MultigraphInstance::new(n, 2, sets, None).unwrap();
    let spec = ProblemSpec::new(Variant::Motsp);
    let pref = Preference::bi(0.5).unwrap();
    let mut policy = Policy::new(ModelConfig::toy(Variant::Motsp), 9).unwrap();
    // Zero the hypernet that products the query projection: all scores
    // collapse to -beta * cheapest, which is constant here.
    for name in ["hyper.node.wq", "hyper.node.bq", "hyper.node.wk", "hyper.node.bk"] {
        let id = policy.store.id(name).unwrap();
        policy.store.data_mut(id).iter_mut().for_each(|x| *x = 0.0);
    }
    let tape = Tape::new();
    let mat = policy.materialize(&tape).unwrap();
    let node_w = node_pointer_weights(&policy, &tape, &mat, &pref).unwrap();
    let enc = encode(&policy, &tape, &mat, &inst).unwrap();
    let cheapest = cheapest_edge_matrix(&inst, &decoder_cost_weights(&spec, &pref));
    let mut streams = vec![Stream::new(1, &[1])];
    let roll = rollout(
        &policy,
        &tape,
        &mat,
        &node_w,
        &enc,
        &inst,
        &spec,
        &cheapest,
        1,
        &mut DecodeMode::Sample(&mut streams),
    )
    .unwrap();
    let logp = roll.logp[0].scalar_value();
    assert!(
        (logp - 0.5f64.ln()).abs() < 1e-12,
        "expected ln(1/2), got {logp}"
    );
}

#[test]
fn greedy_rollout_is_idempotent_and_valid_for_all_variants() {
    for variant in [
        Variant::Motsp,
        Variant::Rctsp,
        Variant::Motsptw,
        Variant::Mocvrp,
        Variant::Op,
        Variant::Moop,
    ] {
        let inst = flex_instance(6, 2, variant, 40 + variant as u64);
        let spec = spec_for(variant);
        let policy = Policy::new(ModelConfig::toy(variant), 31).unwrap();
        let pref = if spec.objective_dim == 1 {
            Preference::single()
        } else {
            Preference::bi(0.3).unwrap()
        };
        let decode = || {
            let tape = Tape::new();
            let mat = policy.materialize(&tape).unwrap();
            let node_w = node_pointer_weights(&policy, &tape, &mat, &pref).unwrap();
            let edge_w = edge_pointer_weights(&policy, &tape, &mat, &pref).unwrap();
            let enc = encode(&policy, &tape, &mat, &inst).unwrap();
            let cheapest = cheapest_edge_matrix(&inst, &decoder_cost_weights(&spec, &pref));
            let k1 = pomo_starts(variant, 6, usize::MAX).len();
            let roll = rollout(
                &policy,
                &tape,
                &mat,
                &node_w,
                &enc,
                &inst,
                &spec,
                &cheapest,
                k1,
                &mut DecodeMode::Greedy,
            )
            .unwrap();
            let mut routes = Vec::new();
            for pi in &roll.nodes {
                let sel = edge_stage(
                    &policy, &tape, &mat, &edge_w, &inst, &spec, pi, &pref,
                    &mut EdgeMode::Greedy,
                )
                .unwrap()
                .selections
                .remove(0);
                routes.push(polyroute_core::route::Route::new(pi.clone(), sel));
            }
            routes
        };
        let a = decode();
        let b = decode();
        assert_eq!(a, b, "{variant:?}: greedy decode not idempotent");
        for r in &a {
            r.validate(&inst, &spec)
                .unwrap_or_else(|e| panic!("{variant:?}: invalid route {e}"));
        }
    }
}

#[test]
fn sampled_logp_matches_forced_replay() {
    let variant = Variant::Moop;
    let inst = flex_instance(6, 3, variant, 90);
    let spec = spec_for(variant);
    let pref = Preference::bi(0.6).unwrap();
    let policy = Policy::new(ModelConfig::toy(variant), 13).unwrap();
    let tape = Tape::new();
    let mat = policy.materialize(&tape).unwrap();
    let node_w = node_pointer_weights(&policy, &tape, &mat, &pref).unwrap();
    let enc = encode(&policy, &tape, &mat, &inst).unwrap();
    let cheapest = cheapest_edge_matrix(&inst, &decoder_cost_weights(&spec, &pref));
    let mut streams: Vec<Stream> = (0..4).map(|j| Stream::new(5, &[j])).collect();
    let sampled = rollout(
        &policy, &tape, &mat, &node_w, &enc, &inst, &spec, &cheapest, 4,
        &mut DecodeMode::Sample(&mut streams),
    )
    .unwrap();
    let forced = rollout(
        &policy, &tape, &mat, &node_w, &enc, &inst, &spec, &cheapest, 4,
        &mut DecodeMode::Forced(&sampled.nodes),
    )
    .unwrap();
    assert_eq!(sampled.nodes, forced.nodes);
    for (a, b) in sampled.logp.iter().zip(&forced.logp) {
        assert!((a.scalar_value() - b.scalar_value()).abs() < 1e-10);
    }
}

#[test]
fn singleton_edge_sets_are_forced_with_zero_logp() {
    let variant = Variant::Motsptw;
    let inst = flex_instance(5, 1, variant, 77);
    let spec = spec_for(variant);
    let pref = Preference::bi(0.5).unwrap();
    let policy = Policy::new(ModelConfig::toy(variant), 1).unwrap();
    let tape = Tape::new();
    let mat = policy.materialize(&tape).unwrap();
    let edge_w = edge_pointer_weights(&policy, &tape, &mat, &pref).unwrap();
    let pi = vec![0, 2, 1, 3, 4, 0];
    let mut streams: Vec<Stream> = (0..6).map(|k| Stream::new(9, &[k])).collect();
    let out = edge_stage(
        &policy, &tape, &mat, &edge_w, &inst, &spec, &pi, &pref,
        &mut EdgeMode::Sample(&mut streams),
    )
    .unwrap();
    for sel in &out.selections {
        assert_eq!(sel, &vec![0; 5]);
    }
    for lp in &out.logp {
        assert_eq!(lp.scalar_value(), 0.0);
    }
}

#[test]
fn edge_sampling_frequencies_match_probabilities() {
    let variant = Variant::Motsp;
    let inst = flex_instance(4, 3, variant, 1234);
    let spec = spec_for(variant);
    let pref = Preference::bi(0.4).unwrap();
    let policy = Policy::new(ModelConfig::toy(variant), 8).unwrap();
    let tape = Tape::new();
    let mat = policy.materialize(&tape).unwrap();
    let edge_w = edge_pointer_weights(&policy, &tape, &mat, &pref).unwrap();
    let pi = vec![0, 1, 2, 3, 0];
    let draws = 100_000usize;
    let mut streams: Vec<Stream> =
        (0..draws).map(|k| Stream::new(31, &[k as u64])).collect();
    let out = edge_stage(
        &policy, &tape, &mat, &edge_w, &inst, &spec, &pi, &pref,
        &mut EdgeMode::Sample(&mut streams),
    )
    .unwrap();
    let positions = pi.len() - 1;
    for t in 0..positions {
        let m = out.probs[t].len();
        let mut counts = vec![0usize; m];
        for sel in &out.selections {
            counts[sel[t]] += 1;
        }
        for l in 0..m {
            let freq = counts[l] as f64 / draws as f64;
            assert!(
                (freq - out.probs[t][l]).abs() < 0.01,
                "position {t} edge {l}: freq {freq} vs prob {}",
                out.probs[t][l]
            );
        }
        let total: f64 = out.probs[t].iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
    }
}

#[test]
fn zeroed_state_head_emits_zero_estimates() {
    let variant = Variant::Rctsp;
    let inst = flex_instance(5, 2, variant, 55);
    let spec = spec_for(variant);
    let mut policy = Policy::new(ModelConfig::toy(variant), 2).unwrap();
    let id = policy.store.id("est.w_state").unwrap();
    policy.store.data_mut(id).iter_mut().for_each(|x| *x = 0.0);
    let pref = Preference::single();
    let tape = Tape::new();
    let mat = policy.materialize(&tape).unwrap();
    let node_w = node_pointer_weights(&policy, &tape, &mat, &pref).unwrap();
    let enc = encode(&policy, &tape, &mat, &inst).unwrap();
    let cheapest = cheapest_edge_matrix(&inst, &decoder_cost_weights(&spec, &pref));
    let roll = rollout(
        &policy, &tape, &mat, &node_w, &enc, &inst, &spec, &cheapest, 2,
        &mut DecodeMode::Greedy,
    )
    .unwrap();
    for steps in &roll.est {
        assert!(!steps.is_empty());
        for (_, shat) in steps {
            assert!(shat.value().iter().all(|&x| x == 0.0));
        }
    }
}

#[test]
fn cheapest_cost_term_is_isolated_behind_beta() {
    // With beta = 0, scaling the cheapest-cost matrix cannot change the
    // greedy decode.
    let variant = Variant::Motsp;
    let inst = flex_instance(6, 2, variant, 66);
    let spec = spec_for(variant);
    let pref = Preference::bi(0.5).unwrap();
    let mut policy = Policy::new(ModelConfig::toy(variant), 4).unwrap();
    let id = policy.store.id("dec.beta").unwrap();
    policy.store.data_mut(id)[0] = 0.0;
    let tape = Tape::new();
    let mat = policy.materialize(&tape).unwrap();
    let node_w = node_pointer_weights(&policy, &tape, &mat, &pref).unwrap();
    let enc = encode(&policy, &tape, &mat, &inst).unwrap();
    let cheapest = cheapest_edge_matrix(&inst, &decoder_cost_weights(&spec, &pref));
    let scaled: Vec<f64> = cheapest.iter().map(|c| 7.5 * c).collect();
    let a = rollout(
        &policy, &tape, &mat, &node_w, &enc, &inst, &spec, &cheapest, 3,
        &mut DecodeMode::Greedy,
    )
    .unwrap();
    let b = rollout(
        &policy, &tape, &mat, &node_w, &enc, &inst, &spec, &scaled, 3,
        &mut DecodeMode::Greedy,
    )
    .unwrap();
    assert_eq!(a.nodes, b.nodes);
}

#[test]
fn full_pipeline_gradients_match_finite_differences_smoke() {
    // Small version of the acceptance-scale check: every parameter class
    // participates (hypernets, estimator, both stages) on a 4-node
    // bi-objective orienteering instance.
    let variant = Variant::Moop;
    let inst = flex_instance(4, 2, variant, 100);
    let spec = spec_for(variant);
    let pref = Preference::bi(0.7).unwrap();
    let mut policy = Policy::new(ModelConfig::toy(variant), 17).unwrap();
    let batch = sample_surrogate_batch(&policy, &inst, &spec, &pref, 2, 2, 5).unwrap();
    let tape = Tape::new();
    let loss = surrogate_loss_tensor(&policy, &tape, &batch, &spec, &pref).unwrap();
    policy.store.zero_grad();
    tape.backward(&loss, &mut policy.store).unwrap();
    let config = policy.config.clone();
    let (err, loc) = max_rel_error_verbose(&mut policy.store, |store| {
        let view = Policy { config: config.clone(), store: store.clone() };
        let t = Tape::new();
        surrogate_loss_tensor(&view, &t, &batch, &spec, &pref)
            .unwrap()
            .scalar_value()
    });
    assert!(err < 1e-4, "max rel error {err:.3e} at {loc}");
}
