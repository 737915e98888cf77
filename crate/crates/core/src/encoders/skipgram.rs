//! Skip-gram with negative sampling over random-walk corpora.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng as _;

use super::{EmbeddingSet, Walk};
use crate::error::{Error, Result};
use crate::rng::{seeded, Rng};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct SkipGramConfig {
    pub dim: usize,
    /// Maximum context distance; the effective window per center is drawn from `1..=window`.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial learning rate, decayed linearly towards `1e-4` of itself.
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SkipGramOutput<T> {
    pub embeddings: EmbeddingSet<T>,
    /// Mean negative-sampling loss per (center, context) pair, one entry per epoch.
    pub epoch_loss: Vec<f64>,
}

/// Input vectors before any update: uniform in `(-0.5/dim, 0.5/dim)`.
pub fn initial_embeddings<T: Scalar>(nodes: usize, config: &SkipGramConfig) -> EmbeddingSet<T> {
    let mut rng = seeded(config.seed);
    let half = 0.5 / config.dim as f64;
    let m = Array2::from_shape_simple_fn((nodes, config.dim), || T::of(rng.random_range(-half..half)));
    EmbeddingSet::new(m).expect("finite")
}

/// Cumulative unigram^0.75 table for negative draws.
struct NoiseTable {
    cumulative: Vec<f64>,
}

impl NoiseTable {
    fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(0.75);
                acc
            })
            .collect();
        Self { cumulative }
    }

    fn draw(&self, rng: &mut Rng) -> u32 {
        let total = *self.cumulative.last().unwrap();
        let x = rng.random_range(0.0..total);
        self.cumulative.partition_point(|&c| c <= x) as u32
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Train on `walks` over `nodes` vertices (walk entries must be `< nodes`).
/// Single stream: the result is a pure function of the inputs and the seed.
pub fn train_skipgram<T: Scalar>(walks: &[Walk], nodes: usize, config: &SkipGramConfig) -> Result<SkipGramOutput<T>> {
    if walks.iter().all(|w| w.nodes.len() < 2) {
        return Err(Error::EmptyInput("random-walk corpus".into()));
    }
    if config.dim == 0 || config.window == 0 || config.negatives == 0 || config.learning_rate <= 0.0 {
        return Err(Error::invalid(
            "skip-gram dim, window, negatives and learning rate must be positive",
        ));
    }
    let dim = config.dim;
    let mut counts = vec![0u64; nodes];
    let mut corpus_pairs = 0u64;
    for w in walks {
        for &v in &w.nodes {
            if v as usize >= nodes {
                return Err(Error::invalid(format!("walk node {v} out of range")));
            }
            counts[v as usize] += 1;
        }
        corpus_pairs += w.nodes.len() as u64;
    }
    let noise = NoiseTable::new(&counts);

    let mut input: Vec<T> = initial_embeddings::<T>(nodes, config)
        .into_matrix()
        .into_raw_vec_and_offset()
        .0;
    let mut output: Vec<T> = vec![T::zero(); nodes * dim];
    let mut rng = seeded(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..walks.len()).collect();
    let total_steps = (config.epochs as u64 * corpus_pairs).max(1) as f64;
    let lr0 = config.learning_rate;
    let mut step = 0u64;
    let mut grad = vec![T::zero(); dim];
    let mut epoch_loss = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss = 0.0;
        let mut pairs = 0u64;
        for &wi in &order {
            let path = &walks[wi].nodes;
            for (pos, &center) in path.iter().enumerate() {
                step += 1;
                let lr = T::of((lr0 * (1.0 - step as f64 / total_steps)).max(lr0 * 1e-4));
                let reach = rng.random_range(1..=config.window);
                let lo = pos.saturating_sub(reach);
                let hi = (pos + reach).min(path.len() - 1);
                let c = center as usize * dim;
                for (cpos, &context) in path.iter().enumerate().take(hi + 1).skip(lo) {
                    if cpos == pos {
                        continue;
                    }
                    grad.iter_mut().for_each(|g| *g = T::zero());
                    for s in 0..=config.negatives {
                        let (target, label) = if s == 0 {
                            (context, 1.0)
                        } else {
                            let t = noise.draw(&mut rng);
                            if t == context {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let o = target as usize * dim;
                        let mut dot = T::zero();
                        for k in 0..dim {
                            dot += input[c + k] * output[o + k];
                        }
                        let p = sigmoid(dot.as_f64());
                        loss -= if label == 1.0 {
                            p.max(1e-12).ln()
                        } else {
                            (1.0 - p).max(1e-12).ln()
                        };
                        let g = T::of(label - p) * lr;
                        for k in 0..dim {
                            grad[k] += g * output[o + k];
                            output[o + k] += g * input[c + k];
                        }
                    }
                    for k in 0..dim {
                        input[c + k] += grad[k];
                    }
                    pairs += 1;
                }
            }
        }
        epoch_loss.push(if pairs > 0 { loss / pairs as f64 } else { 0.0 });
    }
    let embeddings = EmbeddingSet::new(Array2::from_shape_vec((nodes, dim), input).expect("shape"))?;
    Ok(SkipGramOutput { embeddings, epoch_loss })
}
