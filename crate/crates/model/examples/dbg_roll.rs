use polyroute_core::eval::cheapest_edge_matrix;
use polyroute_core::gen::{generate, Distribution, GenConfig};
use polyroute_core::instance::{ProblemSpec, Variant};
use polyroute_core::pareto::Preference;
use polyroute_model::config::{decoder_cost_weights, ModelConfig};
use polyroute_model::decoder::{pomo_starts, rollout, DecodeMode};
use polyroute_model::encoder::encode;
use polyroute_model::hypernet::node_pointer_weights;
use polyroute_model::policy::Policy;
use polyroute_diff::Tape;

fn main() {
    for variant in [Variant::Motsp, Variant::Rctsp, Variant::Motsptw, Variant::Mocvrp, Variant::Op, Variant::Moop] {
        let inst = generate(&GenConfig::new(Distribution::Flex(2), 6, variant, 40 + variant as u64)).unwrap();
        let spec = match variant {
            Variant::Rctsp => ProblemSpec::new(variant).with_resource_limit(4.0),
            Variant::Moop => ProblemSpec::new(variant).with_resource_limit(2.0),
            Variant::Op => ProblemSpec::new(variant).with_thresholds(2.0, 2.0),
            Variant::Mocvrp => ProblemSpec::new(variant).with_capacity(50.0),
            _ => ProblemSpec::new(variant),
        };
        let policy = Policy::new(ModelConfig::toy(variant), 31).unwrap();
        let pref = if spec.objective_dim == 1 { Preference::single() } else { Preference::bi(0.3).unwrap() };
        let tape = Tape::new();
        let mat = policy.materialize(&tape).unwrap();
        let node_w = node_pointer_weights(&policy, &tape, &mat, &pref).unwrap();
        let enc = encode(&policy, &tape, &mat, &inst).unwrap();
        let cheapest = cheapest_edge_matrix(&inst, &decoder_cost_weights(&spec, &pref));
        let k1 = pomo_starts(variant, 6, usize::MAX).len();
        let roll = rollout(&policy, &tape, &mat, &node_w, &enc, &inst, &spec, &cheapest, k1, &mut DecodeMode::Greedy).unwrap();
        println!("{variant:?}: {:?}", roll.nodes);
    }
}
