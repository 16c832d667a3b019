//! Seeded origin/destination sampling around a first trip.

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::network::{shortest_length_tree, shortest_time_tree, Direction, NodeId, RoadNetwork};
use crate::planning::TaskPair;
use crate::{Error, Result};

/// Sampler settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub count: usize,
    pub seed: u64,
    /// Annulus bounds as fractions of the first trip's length.
    pub gamma_l: f64,
    pub gamma_u: f64,
    /// Fixed delay factor; when absent one is drawn from `delay_choices`.
    pub delay_factor: Option<f64>,
    pub delay_choices: Vec<f64>,
    /// Optional per-node origin/destination weights; uniform when absent.
    pub node_weights: Option<Vec<f64>>,
    /// Attempts per instance before giving up.
    pub retry_cap: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            count: 10,
            seed: 0,
            gamma_l: 0.1,
            gamma_u: 0.5,
            delay_factor: None,
            delay_choices: vec![1.3, 1.5, 1.7, 1.9],
            node_weights: None,
            retry_cap: 1000,
        }
    }
}

impl SamplerConfig {
    fn validate(&self, net: &RoadNetwork) -> Result<()> {
        if !(self.gamma_l >= 0.0 && self.gamma_l < self.gamma_u) {
            return Err(Error::InvalidParameter("need 0 <= gamma_l < gamma_u".into()));
        }
        let beta_ok = |b: f64| b >= 1.0 && b.is_finite();
        match self.delay_factor {
            Some(b) if !beta_ok(b) => {
                return Err(Error::InvalidParameter("delay factor must be at least 1".into()));
            }
            None if self.delay_choices.is_empty() || !self.delay_choices.iter().all(|&b| beta_ok(b)) => {
                return Err(Error::InvalidParameter("delay choices must be nonempty and at least 1".into()));
            }
            _ => {}
        }
        if let Some(w) = &self.node_weights {
            if w.len() != net.node_count() {
                return Err(Error::InvalidParameter("one weight per node required".into()));
            }
        }
        if net.node_count() < 2 {
            return Err(Error::InvalidParameter("network needs at least two nodes".into()));
        }
        Ok(())
    }
}

/// Draws task pairs: `(s1, d1)` from the node distribution, `s2` and `d2`
/// uniformly from the annuli `[gamma_l l1, gamma_u l1]` around `s1` (forward
/// distance) and `d1` (reverse distance), `l1` being the first trip's
/// shortest length. Both trucks leave at 0 with deadline `beta` times their
/// fastest trip time.
pub fn sample_instances(net: &RoadNetwork, config: &SamplerConfig) -> Result<Vec<TaskPair>> {
    config.validate(net)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let nodes = match &config.node_weights {
        Some(w) => WeightedIndex::new(w).map_err(|e| Error::InvalidParameter(format!("node weights: {e}")))?,
        None => WeightedIndex::new(vec![1.0; net.node_count()]).expect("uniform weights"),
    };
    let mut out = Vec::with_capacity(config.count);
    for _ in 0..config.count {
        out.push(draw_one(net, config, &nodes, &mut rng)?);
    }
    Ok(out)
}

fn draw_one(net: &RoadNetwork, config: &SamplerConfig, nodes: &WeightedIndex<f64>, rng: &mut ChaCha8Rng) -> Result<TaskPair> {
    for _ in 0..config.retry_cap {
        let s1: NodeId = nodes.sample(rng);
        let d1: NodeId = nodes.sample(rng);
        if s1 == d1 {
            continue;
        }
        let around_s1 = shortest_length_tree(net, s1, Direction::Forward)?;
        let l1 = around_s1.dist[d1];
        if !l1.is_finite() {
            continue;
        }
        let around_d1 = shortest_length_tree(net, d1, Direction::Reverse)?;
        let (lo, hi) = (config.gamma_l * l1, config.gamma_u * l1);
        let ring = |dist: &[f64]| -> Vec<NodeId> { (0..net.node_count()).filter(|&v| dist[v] >= lo && dist[v] <= hi).collect() };
        let starts = ring(&around_s1.dist);
        let ends = ring(&around_d1.dist);
        if starts.is_empty() || ends.is_empty() {
            continue;
        }
        let s2 = starts[rng.gen_range(0..starts.len())];
        let d2 = ends[rng.gen_range(0..ends.len())];
        if s2 == d2 {
            continue;
        }
        let f1 = shortest_time_tree(net, s1, Direction::Forward)?.dist[d1];
        let f2 = shortest_time_tree(net, s2, Direction::Forward)?.dist[d2];
        if !f2.is_finite() {
            continue;
        }
        let beta = match config.delay_factor {
            Some(b) => b,
            None => config.delay_choices[rng.gen_range(0..config.delay_choices.len())],
        };
        return Ok(TaskPair {
            s1,
            d1,
            s2,
            d2,
            ts1: 0.0,
            ts2: 0.0,
            td1: beta * f1,
            td2: beta * f2,
        });
    }
    Err(Error::RetryCapExhausted(config.retry_cap))
}
