//! Seeded instance generators: the synthetic FLEX/FIX families, realistic
//! multigraphs induced by bi-objective shortest paths over Euclidean
//! points, per-variant node attributes, and threshold calibration.

pub mod calibrate;
pub mod realistic;
pub mod rng;

use crate::error::CoreError;
use crate::instance::{EdgeAttr, MultigraphInstance, NodeAttrs, Variant};
use rng::{tags, Stream};
use serde::{Deserialize, Serialize};

/// Correlation regime for realistic instances: strong, weak or none.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correlation {
    Sc,
    Wc,
    Nc,
}

impl Correlation {
    /// `(nu, mu)` mixing weights for the second distance.
    pub fn weights(self) -> (f64, f64) {
        match self {
            Correlation::Sc => (0.9, 0.1),
            Correlation::Wc => (0.5, 0.5),
            Correlation::Nc => (0.1, 0.9),
        }
    }
}

/// Graph distribution family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "family", content = "param")]
pub enum Distribution {
    /// 1..=x edges per ordered pair, attributes i.i.d. uniform.
    Flex(u32),
    /// Exactly x edges per pair, negatively correlated attributes.
    Fix(u32),
    /// Euclidean points turned into a multigraph of Pareto-optimal paths.
    Realistic(Correlation),
}

impl Distribution {
    pub fn label(&self) -> String {
        match self {
            Distribution::Flex(x) => format!("flex{x}"),
            Distribution::Fix(x) => format!("fix{x}"),
            Distribution::Realistic(Correlation::Sc) => "real-sc".into(),
            Distribution::Realistic(Correlation::Wc) => "real-wc".into(),
            Distribution::Realistic(Correlation::Nc) => "real-nc".into(),
        }
    }
}

impl std::str::FromStr for Distribution {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self, CoreError> {
        let s = s.to_ascii_lowercase();
        let parse_x = |rest: &str| {
            rest.parse::<u32>()
                .map_err(|_| CoreError::InvalidSpec(format!("bad edge count in `{s}`")))
        };
        if let Some(rest) = s.strip_prefix("flex") {
            let x = parse_x(rest)?;
            if x < 1 {
                return Err(CoreError::InvalidSpec("flex needs x >= 1".into()));
            }
            return Ok(Distribution::Flex(x));
        }
        if let Some(rest) = s.strip_prefix("fix") {
            let x = parse_x(rest)?;
            if x < 1 {
                return Err(CoreError::InvalidSpec("fix needs x >= 1".into()));
            }
            return Ok(Distribution::Fix(x));
        }
        match s.as_str() {
            "real-sc" => Ok(Distribution::Realistic(Correlation::Sc)),
            "real-wc" => Ok(Distribution::Realistic(Correlation::Wc)),
            "real-nc" => Ok(Distribution::Realistic(Correlation::Nc)),
            other => Err(CoreError::InvalidSpec(format!("unknown distribution `{other}`"))),
        }
    }
}

/// Full generator configuration. `(config, seed)` determines the instance
/// bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub distribution: Distribution,
    pub n: usize,
    pub variant: Variant,
    pub seed: u64,
}

impl GenConfig {
    pub fn new(distribution: Distribution, n: usize, variant: Variant, seed: u64) -> Self {
        GenConfig { distribution, n, variant, seed }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if self.n < 3 {
            return Err(CoreError::InvalidSpec(format!("need n >= 3, got {}", self.n)));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        GenConfig { seed, ..self.clone() }
    }
}

/// Generates one instance, including the variant's node attributes.
pub fn generate(config: &GenConfig) -> Result<MultigraphInstance, CoreError> {
    config.validate()?;
    let bare = match config.distribution {
        Distribution::Flex(x) => gen_flex(config.n, x, config.seed),
        Distribution::Fix(x) => gen_fix(config.n, x, config.seed),
        Distribution::Realistic(corr) => realistic::gen_realistic(config.n, corr, config.seed),
    }?;
    attach_node_attrs(bare, config)
}

/// FLEX(x): per ordered pair an edge count uniform in `{1..x}`, each
/// edge's attributes i.i.d. uniform on `[0, 1]^2`.
pub fn gen_flex(n: usize, x: u32, seed: u64) -> Result<MultigraphInstance, CoreError> {
    build_pairwise(n, seed, |pair_stream, pair_idx| {
        let count = 1 + pair_stream.uniform_int(x as u64);
        (0..count)
            .map(|e| {
                let mut s = Stream::new(seed, &[tags::PAIR, pair_idx, e]);
                EdgeAttr::new(vec![s.next_f64(), s.next_f64()])
            })
            .collect()
    })
}

/// FIX(x): exactly x edges per pair; `attr_2 = clamp(1 - attr_1 + eta, 0, 1)`
/// with `eta ~ U[-0.1, 0.1]`, giving strongly negatively correlated
/// attributes.
pub fn gen_fix(n: usize, x: u32, seed: u64) -> Result<MultigraphInstance, CoreError> {
    build_pairwise(n, seed, |_, pair_idx| {
        (0..x as u64)
            .map(|e| {
                let mut s = Stream::new(seed, &[tags::PAIR, pair_idx, e]);
                let a1 = s.next_f64();
                let eta = s.uniform(-0.1, 0.1);
                let a2 = (1.0 - a1 + eta).clamp(0.0, 1.0);
                EdgeAttr::new(vec![a1, a2])
            })
            .collect()
    })
}

fn build_pairwise(
    n: usize,
    seed: u64,
    mut edges_for_pair: impl FnMut(&mut Stream, u64) -> Vec<EdgeAttr>,
) -> Result<MultigraphInstance, CoreError> {
    let mut sets = vec![Vec::new(); n * n];
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            let pair_idx = (u * n + v) as u64;
            let mut pair_stream = Stream::new(seed, &[tags::PAIR, pair_idx]);
            sets[u * n + v] = edges_for_pair(&mut pair_stream, pair_idx);
        }
    }
    MultigraphInstance::new(n, 2, sets, None)
}

/// Attaches prizes, demands or time windows as the variant requires.
fn attach_node_attrs(
    instance: MultigraphInstance,
    config: &GenConfig,
) -> Result<MultigraphInstance, CoreError> {
    let n = config.n;
    match config.variant {
        Variant::Motsp | Variant::Rctsp => Ok(instance),
        Variant::Op | Variant::Moop => {
            let mut prize = vec![0.0; n];
            for (u, p) in prize.iter_mut().enumerate().skip(1) {
                let mut s = Stream::new(config.seed, &[tags::PRIZE, u as u64]);
                *p = s.next_f64();
            }
            Ok(instance.with_node_attrs(NodeAttrs {
                prize: Some(prize),
                demand: None,
                time_windows: None,
            }))
        }
        Variant::Mocvrp => {
            let mut demand = vec![0.0; n];
            for (u, d) in demand.iter_mut().enumerate().skip(1) {
                let mut s = Stream::new(config.seed, &[tags::DEMAND, u as u64]);
                *d = (1 + s.uniform_int(9)) as f64;
            }
            Ok(instance.with_node_attrs(NodeAttrs {
                prize: None,
                demand: Some(demand),
                time_windows: None,
            }))
        }
        Variant::Motsptw => {
            let windows = calibrate::gen_time_windows(&instance, config.seed)?;
            Ok(instance.with_node_attrs(NodeAttrs {
                prize: None,
                demand: None,
                time_windows: Some(windows),
            }))
        }
    }
}
