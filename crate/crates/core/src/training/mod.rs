//! Fusion model, margin ranking loss and the training loop.

mod checkpoint;
mod loss;
mod model;
mod optimizer;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint};
pub use loss::margin_loss;
pub use model::{
    forward, forward_all, AlignmentInputs, Components, GraphSide, ModelDims, ModelParams, SideFeatures, TimeBlock,
};
pub use optimizer::Adam;

use std::collections::HashMap;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::kg::EntityId;
use crate::rng::{seeded, Rng};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub margin: f64,
    /// Negatives drawn per positive pair (re-drawn every epoch).
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Positive pairs per optimizer step.
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            margin: 1.0,
            negatives: 20,
            epochs: 50,
            learning_rate: 0.005,
            batch_size: 512,
            seed: 0,
        }
    }
}

/// For each positive `(i, j)`, `count` distinct target entities drawn uniformly
/// without replacement from `0..target_count`, excluding every counterpart of
/// `i` among `positives` (so `j` is never drawn).
pub fn sample_negatives(
    positives: &[(EntityId, EntityId)],
    target_count: usize,
    count: usize,
    rng: &mut Rng,
) -> Result<Vec<Vec<EntityId>>> {
    let mut partners: HashMap<EntityId, Vec<EntityId>> = HashMap::new();
    for &(i, j) in positives {
        partners.entry(i).or_default().push(j);
    }
    for v in partners.values_mut() {
        v.sort_unstable();
        v.dedup();
    }
    positives
        .iter()
        .map(|&(i, _)| {
            let excluded = &partners[&i];
            let available = target_count - excluded.len();
            if count > available {
                return Err(Error::invalid(format!(
                    "cannot draw {count} negatives from {available} candidates"
                )));
            }
            let picks = rand::seq::index::sample(rng, available, count);
            Ok(picks
                .into_iter()
                .map(|k| {
                    // k-th target entity that is not excluded
                    let mut r = k as EntityId;
                    for &e in excluded {
                        if e <= r {
                            r += 1;
                        } else {
                            break;
                        }
                    }
                    r
                })
                .collect())
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct TrainOutput<T> {
    pub params: ModelParams<T>,
    /// Mean loss per epoch.
    pub epoch_loss: Vec<f64>,
}

/// Minibatch Adam over shuffled training pairs. Single stream, so two runs
/// with the same seed produce bit-identical parameters.
pub fn train<T: Scalar>(
    model: ModelParams<T>,
    inputs: &AlignmentInputs<T>,
    train_pairs: &[(EntityId, EntityId)],
    config: &TrainConfig,
) -> Result<TrainOutput<T>> {
    if train_pairs.is_empty() {
        return Err(Error::EmptyInput("training anchors".into()));
    }
    if config.batch_size == 0 || config.margin < 0.0 || config.learning_rate < 0.0 {
        return Err(Error::invalid(
            "batch size must be positive; margin and learning rate non-negative",
        ));
    }
    let target_count = inputs
        .kg2
        .entity_count()
        .ok_or_else(|| Error::invalid("kg2 has no inputs"))?;
    let mut params = model;
    let mut adam = Adam::new(config.learning_rate);
    let mut rng = seeded(config.seed);
    let mut order: Vec<(EntityId, EntityId)> = train_pairs.to_vec();
    let margin = T::of(config.margin);
    let mut epoch_loss = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let negatives = sample_negatives(&order, target_count, config.negatives, &mut rng)?;
        let mut total = 0.0;
        for (batch, negs) in order.chunks(config.batch_size).zip(negatives.chunks(config.batch_size)) {
            let (loss, grads) = margin_loss(&params, inputs, batch, negs, margin)?;
            let loss = loss.as_f64();
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            total += loss * batch.len() as f64;
            adam.step(&mut params, &grads);
        }
        if !params.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        epoch_loss.push(total / order.len() as f64);
    }
    Ok(TrainOutput { params, epoch_loss })
}
