//! Few-shot clusterability score: how well a binary label is recovered by
//! nearest class-mean prototypes built from a handful of support examples.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sheaf::Section;
use crate::topology::{mix64, OpenSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryLabel {
    #[serde(rename = "s")]
    S,
    #[serde(rename = "ns")]
    Ns,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrototypeParams {
    /// Label of every ground element, by ordinal.
    pub labels: Vec<BinaryLabel>,
    pub shots: usize,
    pub trials: usize,
    pub seed: u64,
}

pub const DEFAULT_SHOTS: usize = 3;
pub const DEFAULT_TRIALS: usize = 100;

impl PrototypeParams {
    pub fn new(labels: Vec<BinaryLabel>, shots: usize, trials: usize, seed: u64) -> Self {
        Self {
            labels,
            shots,
            trials,
            seed,
        }
    }

    /// Seed of the episode stream for one open set. Depends only on the base
    /// seed and the set's bit pattern, never on evaluation order.
    pub fn stream_seed(&self, domain: &OpenSet) -> u64 {
        mix64(self.seed ^ mix64(domain.fingerprint()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrototypeStats {
    /// Mean episode accuracy.
    pub accuracy: f64,
    pub episode_accuracies: Vec<f64>,
    /// Queries equidistant from both prototypes (resolved as `S`).
    pub ties: usize,
    pub queries_per_episode: usize,
}

/// Runs `trials` episodes on the section. `Err` carries the reason the score
/// is undefined on this domain.
pub fn prototype_episodes(s: &Section, p: &PrototypeParams) -> Result<PrototypeStats, String> {
    if s.is_empty() {
        return Err("empty domain".into());
    }
    if p.shots == 0 || p.trials == 0 {
        return Err("shots and trials must be at least 1".into());
    }
    let mut pos_s = Vec::new();
    let mut pos_ns = Vec::new();
    for (k, &elem) in s.members().iter().enumerate() {
        match p.labels.get(elem) {
            Some(BinaryLabel::S) => pos_s.push(k),
            Some(BinaryLabel::Ns) => pos_ns.push(k),
            None => return Err(format!("element {elem} has no label")),
        }
    }
    if pos_s.len() < p.shots {
        return Err(format!(
            "class s has {} members, needs {}",
            pos_s.len(),
            p.shots
        ));
    }
    if pos_ns.len() < p.shots {
        return Err(format!(
            "class ns has {} members, needs {}",
            pos_ns.len(),
            p.shots
        ));
    }
    let n_queries = s.len() - 2 * p.shots;
    if n_queries == 0 {
        return Err("no query elements".into());
    }

    let rows: Vec<&[f64]> = s.values().collect();
    let dim = s.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(p.stream_seed(s.domain()));
    let mut in_support = vec![false; s.len()];
    let mut gamma_s = vec![0.0; dim];
    let mut gamma_ns = vec![0.0; dim];
    let mut episode_accuracies = Vec::with_capacity(p.trials);
    let mut ties = 0;

    for _ in 0..p.trials {
        in_support.fill(false);
        for (pool, gamma) in [(&pos_s, &mut gamma_s), (&pos_ns, &mut gamma_ns)] {
            gamma.fill(0.0);
            for pick in index::sample(&mut rng, pool.len(), p.shots) {
                let k = pool[pick];
                in_support[k] = true;
                for (g, x) in gamma.iter_mut().zip(rows[k]) {
                    *g += x;
                }
            }
            for g in gamma.iter_mut() {
                *g /= p.shots as f64;
            }
        }

        let mut correct = 0usize;
        for (k, &elem) in s.members().iter().enumerate() {
            if in_support[k] {
                continue;
            }
            let d_s = sq_dist(rows[k], &gamma_s);
            let d_ns = sq_dist(rows[k], &gamma_ns);
            let predicted = if d_ns < d_s {
                BinaryLabel::Ns
            } else {
                if d_s == d_ns {
                    ties += 1;
                }
                BinaryLabel::S
            };
            if predicted == p.labels[elem] {
                correct += 1;
            }
        }
        episode_accuracies.push(correct as f64 / n_queries as f64);
    }

    let accuracy = episode_accuracies.iter().sum::<f64>() / p.trials as f64;
    if ties > 0 {
        log::debug!("{ties} prototype ties on a domain of {} elements", s.len());
    }
    Ok(PrototypeStats {
        accuracy,
        episode_accuracies,
        ties,
        queries_per_episode: n_queries,
    })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
