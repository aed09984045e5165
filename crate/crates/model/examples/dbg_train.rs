use polyroute_core::baselines::nearest_neighbor;
use polyroute_core::eval::evaluate_route;
use polyroute_core::gen::rng::{tags, Stream};
use polyroute_core::gen::{generate, Distribution, GenConfig};
use polyroute_core::instance::{MultigraphInstance, ProblemSpec, Variant};
use polyroute_core::pareto::{chebyshev_cost, Preference};
use polyroute_model::config::ModelConfig;
use polyroute_model::policy::Policy;
use polyroute_model::train::{train, TrainConfig};

fn main() {
    let variant = Variant::Motsp;
    let gen = GenConfig::new(Distribution::Flex(2), 10, variant, 1000);
    let spec = ProblemSpec::new(variant);
    let pref = Preference::bi(0.5).unwrap();
    let val: Vec<MultigraphInstance> = (0..100)
        .map(|i| {
            let seed = Stream::new(5, &[tags::VALIDATION, i as u64]).next_u64();
            generate(&gen.with_seed(seed)).unwrap()
        })
        .collect();
    let mut nn = 0.0;
    for inst in &val {
        let r = nearest_neighbor(inst, &spec, &pref).unwrap();
        let e = evaluate_route(inst, &spec, &r).unwrap();
        nn += chebyshev_cost(&e.objectives, &pref, &[0.0, 0.0]).unwrap();
    }
    println!("NN mean cheb over val set: {:.4}", nn / val.len() as f64);

    let mut policy = Policy::new(ModelConfig::smoke(variant), 2).unwrap();
    let cfg = TrainConfig {
        batch_size: 32, k1: 10, k2_train: 8, k2_eval: 8,
        epochs: 30, instances_per_epoch: 2000, val_instances: 100,
        lr: 1e-3, seed: 5, ..TrainConfig::default()
    };
    let t = std::time::Instant::now();
    let result = train(&mut policy, &gen, &spec, &cfg).unwrap();
    for r in &result.history {
        println!("epoch {}: train {:.4} val {:.4}", r.epoch, r.train_mean_reward, r.val_mean_reward);
    }
    println!("elapsed {:.0}s", t.elapsed().as_secs_f64());
}
