//! Term-presence feature selection for binary sentiment classification.
//!
//! The crate turns labeled reviews into a binary unigram presence matrix,
//! scores every feature with one of four presence-count weights (SentiTPC,
//! SentiTPR and the older TPC/TPR baselines), prunes features whose weight
//! falls below a threshold `k`, and tunes `(k, λ)` with best/1/bin
//! differential evolution using held-out classifier accuracy as fitness.

pub mod classifiers;
pub mod corpus;
pub mod eval;
pub mod evolve;
pub mod matrix;
pub mod pipeline;
pub mod preprocess;
pub mod selector;
pub mod synthetic;
