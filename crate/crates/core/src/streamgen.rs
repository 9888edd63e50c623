//! Synthetic action streams.
//!
//! User popularity comes from the out-degrees of an R-MAT graph. Each action
//! picks a user by popularity; with probability `follow_fraction` it follows
//! the action `Δ` positions earlier, `Δ = max(1, round(X))` with
//! `X ~ Exp(lambda)` and clamped to the first action, otherwise it is a root
//! post.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream::{Action, PropagationIndex, Stream};

/// R-MAT quadrant probabilities and edge count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmatConfig {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Number of edges; `None` means ten per user.
    pub edges: Option<u64>,
}

impl Default for RmatConfig {
    fn default() -> Self {
        Self { a: 0.57, b: 0.19, c: 0.19, d: 0.05, edges: None }
    }
}

impl RmatConfig {
    pub fn validate(&self) -> Result<()> {
        let p = [self.a, self.b, self.c, self.d];
        if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("R-MAT probabilities must be in [0,1] and sum to 1, got {p:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub num_users: u32,
    pub num_actions: u64,
    pub follow_fraction: f64,
    /// Rate of the exponential response distance; the mean is `1/lambda`.
    pub lambda: f64,
    #[serde(default)]
    pub rmat: RmatConfig,
    pub seed: u64,
}

/// Follow probability used by the presets. Not a published value: it was
/// calibrated so generated streams have an average response-path depth of
/// about 2.5.
pub const DEFAULT_FOLLOW_FRACTION: f64 = 0.6;

impl GenConfig {
    /// "Old posts get more followers": mean response distance 500,000.
    pub fn syn_o(num_actions: u64, seed: u64) -> Self {
        Self::preset(num_actions, 2.0e-6, seed)
    }

    /// "Recent posts get more followers": mean response distance 5,000.
    pub fn syn_n(num_actions: u64, seed: u64) -> Self {
        Self::preset(num_actions, 2.0e-4, seed)
    }

    /// Five actions per user, matching the ratio of the published synthetic
    /// datasets.
    fn preset(num_actions: u64, lambda: f64, seed: u64) -> Self {
        Self {
            num_users: (num_actions / 5).clamp(16, u32::MAX as u64) as u32,
            num_actions,
            follow_fraction: DEFAULT_FOLLOW_FRACTION,
            lambda,
            rmat: RmatConfig::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_users == 0 {
            return Err(Error::Config("num_users must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.follow_fraction) {
            return Err(Error::Config(format!("follow_fraction must be in [0,1], got {}", self.follow_fraction)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        self.rmat.validate()
    }
}

/// Out-degree of every user in an R-MAT graph, used as selection weight.
///
/// The adjacency matrix side is `num_users` rounded up to a power of two;
/// edges whose source falls outside `0..num_users` are resampled. With no
/// edges every user weighs 1.
pub fn rmat_degrees<R: Rng>(num_users: u32, edges: u64, rmat: &RmatConfig, rng: &mut R) -> Result<Vec<f64>> {
    rmat.validate()?;
    if num_users == 0 {
        return Err(Error::Config("num_users must be positive".into()));
    }
    let scale = (num_users as u64).next_power_of_two().trailing_zeros();
    let mut degree = vec![0u64; num_users as usize];
    let mut placed = 0;
    while placed < edges {
        let mut src = 0u64;
        for _ in 0..scale {
            let r: f64 = rng.random();
            // Quadrants a and b keep the source in the upper half.
            let lower = r >= rmat.a + rmat.b;
            src = (src << 1) | lower as u64;
        }
        if src < num_users as u64 {
            degree[src as usize] += 1;
            placed += 1;
        }
    }
    if degree.iter().all(|&d| d == 0) {
        return Ok(vec![1.0; num_users as usize]);
    }
    Ok(degree.into_iter().map(|d| d as f64).collect())
}

/// Summary statistics written to the generator manifest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenSummary {
    pub actions: u64,
    pub follows: u64,
    pub active_users: u64,
    /// Mean of the sampled response distances before clamping.
    pub mean_sampled_distance: f64,
    /// Mean of `seq − parent` over follows, after clamping.
    pub mean_response_distance: f64,
    /// Mean number of actions on the response path ending at each action
    /// (1 for a root post).
    pub avg_depth: f64,
    /// Mean ancestor-chain length (distinct users).
    pub avg_chain_len: f64,
}

/// Generator output: the stream plus its manifest.
#[derive(Debug, Clone)]
pub struct Generated {
    pub stream: Stream,
    pub manifest: GenManifest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenManifest {
    pub config: GenConfig,
    pub summary: GenSummary,
}

pub fn generate(cfg: &GenConfig) -> Result<Generated> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let edges = cfg.rmat.edges.unwrap_or(10 * cfg.num_users as u64);
    let weights = rmat_degrees(cfg.num_users, edges, &cfg.rmat, &mut rng)?;
    let pick = WeightedIndex::new(&weights).map_err(|e| Error::Config(format!("user weights: {e}")))?;
    let distance = Exp::new(cfg.lambda).map_err(|e| Error::Config(format!("lambda: {e}")))?;

    let mut stream = Stream::new();
    stream.actions.reserve(cfg.num_actions as usize);
    let mut index = PropagationIndex::new();
    let mut depth: Vec<u32> = Vec::with_capacity(cfg.num_actions as usize);
    let mut summary = GenSummary { actions: cfg.num_actions, ..Default::default() };
    let (mut sampled_sum, mut realized_sum, mut depth_sum, mut chain_sum) = (0.0, 0u64, 0u64, 0u64);

    for seq in 1..=cfg.num_actions {
        let user = stream.users.intern(&format!("u{}", pick.sample(&mut rng)));
        let mut parent = None;
        if seq > 1 && rng.random::<f64>() < cfg.follow_fraction {
            let sampled = distance.sample(&mut rng);
            sampled_sum += sampled;
            let delta = (sampled.round() as u64).clamp(1, seq - 1);
            realized_sum += delta;
            summary.follows += 1;
            parent = Some(seq - delta);
        }
        let d = parent.map_or(1, |p| depth[(p - 1) as usize] + 1);
        depth.push(d);
        depth_sum += d as u64;
        let action = Action { seq, user, parent, tags: Vec::new(), pos: None };
        chain_sum += index.ingest(&action)?.len() as u64;
        stream.actions.push(action);
    }

    let n = cfg.num_actions.max(1) as f64;
    if summary.follows > 0 {
        summary.mean_sampled_distance = sampled_sum / summary.follows as f64;
        summary.mean_response_distance = realized_sum as f64 / summary.follows as f64;
    }
    summary.avg_depth = depth_sum as f64 / n;
    summary.avg_chain_len = chain_sum as f64 / n;
    summary.active_users = stream.users.len() as u64;
    Ok(Generated { stream, manifest: GenManifest { config: cfg.clone(), summary } })
}
