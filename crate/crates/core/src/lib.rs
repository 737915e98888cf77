//! Entity alignment between highly heterogeneous, possibly temporal,
//! knowledge graphs.
//!
//! The model fuses three per-entity views and is trained with a margin
//! ranking loss over training anchors:
//!
//! * names: pretrained (or hashed trigram) embeddings, whitened and projected;
//! * time: Time2Vec encodings of the months an entity is active in, summed and projected;
//! * structure (optional): skip-gram over biased random walks on both graphs
//!   bridged by the training anchors, projected.
//!
//! Test pairs are ranked with CSLS over cosine similarity. The crate also
//! computes dataset heterogeneity statistics, degree-preserving subsampling,
//! and the masking experiments used to probe robustness.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! pin the common instantiations.

pub mod analysis;
pub mod encoders;
pub mod error;
pub mod harness;
pub mod kg;
pub mod matching;
pub mod rng;
pub mod sampling;
pub mod scalar;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Embeddings = encoders::EmbeddingSet<f64>;
pub type Embeddings32 = encoders::EmbeddingSet<f32>;
pub type Whitening = encoders::WhiteningTransform<f64>;
pub type Time2Vec = encoders::Time2VecParams<f64>;
pub type Model = training::ModelParams<f64>;
pub type Model32 = training::ModelParams<f32>;
pub type Inputs = training::AlignmentInputs<f64>;
pub type Similarity = matching::SimilarityMatrix<f64>;
