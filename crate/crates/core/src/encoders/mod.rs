//! Per-entity feature encoders: name (whitened), time (Time2Vec) and
//! structure (random walks + skip-gram).

mod embedding;
mod names;
mod skipgram;
mod time2vec;
mod walk;
mod whitening;

pub use embedding::EmbeddingSet;
pub use names::{trigram_embeddings, DEFAULT_TRIGRAM_DIM};
pub use skipgram::{initial_embeddings, train_skipgram, SkipGramConfig, SkipGramOutput};
pub use time2vec::{entity_time_embedding, summed_encoding, time2vec, Time2VecParams};
pub use walk::{
    generate_walks, merge_graphs, sample_step, transition_probabilities, RandomWalkConfig, UnifiedGraph, Walk,
    BRIDGE_RELATION,
};
pub use whitening::{apply_whitening, fit_whitening, WhiteningTransform, EIGEN_FLOOR};

use crate::error::Result;
use crate::kg::{AnchorSet, KnowledgeGraph};
use crate::scalar::Scalar;

/// Structure embeddings of both graphs: bridge the training anchors, walk,
/// train skip-gram on the unified graph and split the table at the KG1 offset.
pub fn encode_structure<T: Scalar>(
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
    train_anchors: &AnchorSet,
    walk: &RandomWalkConfig,
    skipgram: &SkipGramConfig,
) -> Result<(EmbeddingSet<T>, EmbeddingSet<T>, Vec<f64>)> {
    let graph = merge_graphs(kg1, kg2, train_anchors);
    let walks = generate_walks(&graph, walk);
    let out = train_skipgram::<T>(&walks, graph.node_count(), skipgram)?;
    let (a, b) = out.embeddings.split_at(kg1.entity_count());
    Ok((a, b, out.epoch_loss))
}
