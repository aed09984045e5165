//! `selftest`: quick oracle, gradient and invariant suites runnable on a
//! fresh checkout. Prints one line per suite; exits non-zero on failure.

use anyhow::Result;
use clap::Args;
use polyroute_core::eval::evaluate_route;
use polyroute_core::fsasp::{fsasp_dp, fsasp_enumerate, fsasp_greedy_linear};
use polyroute_core::gen::rng::Stream;
use polyroute_core::gen::{generate, Distribution, GenConfig};
use polyroute_core::instance::{ProblemSpec, Variant};
use polyroute_core::pareto::{dominates, hypervolume_2d_raw, ParetoArchive, Preference};
use polyroute_core::route::Route;
use polyroute_diff::gradcheck::max_rel_error_verbose;
use polyroute_diff::Tape;
use polyroute_model::config::ModelConfig;
use polyroute_model::policy::Policy;
use polyroute_model::train::{sample_surrogate_batch, surrogate_loss_tensor};

#[derive(Args)]
pub struct SelftestArgs {
    /// Random cases per suite.
    #[arg(long, default_value_t = 100)]
    pub cases: u64,
}

struct Suite {
    failures: usize,
}

impl Suite {
    fn check(&mut self, name: &str, run: impl FnOnce() -> Result<()>) {
        match run() {
            Ok(()) => println!("PASS {name}"),
            Err(e) => {
                println!("FAIL {name}: {e:#}");
                self.failures += 1;
            }
        }
    }
}

pub fn run(args: SelftestArgs) -> Result<()> {
    let mut suite = Suite { failures: 0 };

    suite.check("fsasp-dp-vs-enumeration", || {
        for case in 0..args.cases {
            let mut s = Stream::new(90_000, &[case]);
            let n = 3 + s.uniform_int(3) as usize;
            let variant = if s.next_f64() < 0.5 { Variant::Motsp } else { Variant::Rctsp };
            let inst = generate(&GenConfig::new(
                Distribution::Flex(3),
                n,
                variant,
                s.next_u64(),
            ))?;
            let spec = match variant {
                Variant::Rctsp => ProblemSpec::new(variant).with_resource_limit(s.uniform(1.0, 3.0)),
                _ => ProblemSpec::new(variant),
            };
            let mut pi: Vec<usize> = (0..n).collect();
            s.shuffle(&mut pi);
            pi.push(pi[0]);
            let pref = if spec.objective_dim == 1 {
                Preference::single()
            } else {
                Preference::bi(s.next_f64())?
            };
            let ideal = vec![0.0; spec.objective_dim];
            let oracle = fsasp_enumerate(&inst, &spec, &pi, &pref, &ideal)?;
            match (oracle, fsasp_dp(&inst, &spec, &pi, &pref, &ideal)) {
                (Some((_, best)), Ok(dp)) => {
                    if dp.cost != best {
                        anyhow::bail!("case {case}: dp {} vs enumeration {best}", dp.cost);
                    }
                }
                (None, Err(_)) => {}
                (o, d) => anyhow::bail!("case {case}: oracle {o:?} vs dp {:?}", d.map(|r| r.cost)),
            }
        }
        Ok(())
    });

    suite.check("greedy-selection-never-beats-dp", || {
        for case in 0..args.cases {
            let mut s = Stream::new(91_000, &[case]);
            let n = 4 + s.uniform_int(2) as usize;
            let inst = generate(&GenConfig::new(Distribution::Flex(3), n, Variant::Motsp, s.next_u64()))?;
            let spec = ProblemSpec::new(Variant::Motsp);
            let mut pi: Vec<usize> = (0..n).collect();
            s.shuffle(&mut pi);
            pi.push(pi[0]);
            let pref = Preference::bi(s.next_f64())?;
            let dp = fsasp_dp(&inst, &spec, &pi, &pref, &[0.0, 0.0])?;
            let eps = fsasp_greedy_linear(&inst, &spec, &pi, &pref);
            let eval = evaluate_route(&inst, &spec, &Route::new(pi, eps))?;
            let greedy =
                polyroute_core::pareto::chebyshev_cost(&eval.objectives, &pref, &[0.0, 0.0])?;
            if dp.cost > greedy + 1e-12 {
                anyhow::bail!("case {case}: dp {} above greedy {greedy}", dp.cost);
            }
        }
        Ok(())
    });

    suite.check("pareto-archive-vs-brute-force", || {
        let mut s = Stream::new(92_000, &[]);
        let points: Vec<Vec<f64>> = (0..500)
            .map(|_| vec![s.uniform(0.0, 5.0), s.uniform(0.0, 5.0)])
            .collect();
        let mut archive = ParetoArchive::new(2);
        for (i, p) in points.iter().enumerate() {
            archive.insert(p.clone(), i as u64);
        }
        for (p, _) in archive.points() {
            if points.iter().any(|q| dominates(q, p)) {
                anyhow::bail!("archive kept a dominated point");
            }
        }
        for p in &points {
            let dominated = points.iter().any(|q| dominates(q, p));
            let kept = archive.points().iter().any(|(a, _)| a == p);
            if !dominated && !kept {
                anyhow::bail!("archive dropped a non-dominated point");
            }
        }
        Ok(())
    });

    suite.check("hypervolume-vs-monte-carlo", || {
        let mut s = Stream::new(93_000, &[]);
        let mut archive = ParetoArchive::new(2);
        for i in 0..8 {
            archive.insert(vec![s.uniform(0.0, 4.0), s.uniform(0.0, 4.0)], i);
        }
        let pts: Vec<&[f64]> = archive.points().iter().map(|(p, _)| p.as_slice()).collect();
        let exact = hypervolume_2d_raw(&pts, &[4.0, 4.0])?;
        let samples = 400_000;
        let mut hits = 0u64;
        for _ in 0..samples {
            let x = s.uniform(0.0, 4.0);
            let y = s.uniform(0.0, 4.0);
            if pts.iter().any(|p| p[0] <= x && p[1] <= y) {
                hits += 1;
            }
        }
        let mc = hits as f64 / samples as f64 * 16.0;
        if (exact - mc).abs() > 0.05 {
            anyhow::bail!("exact {exact} vs monte carlo {mc}");
        }
        Ok(())
    });

    suite.check("evaluator-feasibility-contract", || {
        for case in 0..args.cases {
            let mut s = Stream::new(94_000, &[case]);
            let variant = match s.uniform_int(3) {
                0 => Variant::Rctsp,
                1 => Variant::Moop,
                _ => Variant::Op,
            };
            let inst = generate(&GenConfig::new(Distribution::Flex(2), 5, variant, s.next_u64()))?;
            let spec = match variant {
                Variant::Rctsp => ProblemSpec::new(variant).with_resource_limit(s.uniform(0.5, 3.0)),
                Variant::Moop => ProblemSpec::new(variant).with_resource_limit(s.uniform(0.5, 3.0)),
                _ => ProblemSpec::new(variant).with_thresholds(s.uniform(0.5, 2.0), s.uniform(0.5, 2.0)),
            };
            let route = match variant {
                Variant::Rctsp => {
                    let mut pi: Vec<usize> = (0..5).collect();
                    s.shuffle(&mut pi);
                    pi.push(pi[0]);
                    let eps = (0..5)
                        .map(|t| s.uniform_int(inst.edges(pi[t], pi[t + 1]).len() as u64) as usize)
                        .collect();
                    Route::new(pi, eps)
                }
                _ => Route::new(vec![0, 1 + s.uniform_int(4) as usize, 0], vec![0, 0]),
            };
            let eval = evaluate_route(&inst, &spec, &route)?;
            if eval.feasible != (eval.violation == 0.0) {
                anyhow::bail!("feasibility flag disagrees with violation");
            }
        }
        Ok(())
    });

    suite.check("generator-determinism", || {
        for case in 0..10 {
            let cfg = GenConfig::new(Distribution::Fix(3), 8, Variant::Motsp, 95_000 + case);
            if generate(&cfg)? != generate(&cfg)? {
                anyhow::bail!("same seed produced different instances");
            }
        }
        Ok(())
    });

    suite.check("full-pipeline-gradients", || {
        let variant = Variant::Moop;
        let inst = generate(&GenConfig::new(Distribution::Flex(2), 4, variant, 96_000))?;
        let spec = ProblemSpec::new(variant).with_resource_limit(2.0);
        let pref = Preference::bi(0.6)?;
        let mut policy = Policy::new(ModelConfig::toy(variant), 17)?;
        let batch = sample_surrogate_batch(&policy, &inst, &spec, &pref, 2, 2, 5)?;
        let tape = Tape::new();
        let loss = surrogate_loss_tensor(&policy, &tape, &batch, &spec, &pref)?;
        policy.store.zero_grad();
        tape.backward(&loss, &mut policy.store)?;
        let config = policy.config.clone();
        let (err, loc) = max_rel_error_verbose(&mut policy.store, |store| {
            let view = Policy { config: config.clone(), store: store.clone() };
            let t = Tape::new();
            surrogate_loss_tensor(&view, &t, &batch, &spec, &pref)
                .unwrap()
                .scalar_value()
        });
        if err >= 1e-4 {
            anyhow::bail!("max relative error {err:.3e} at {loc}");
        }
        Ok(())
    });

    if suite.failures > 0 {
        anyhow::bail!("{} suite(s) failed", suite.failures);
    }
    println!("all suites green");
    Ok(())
}
