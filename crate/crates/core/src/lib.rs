//! Retrieval-driven selection of minority-class texts for annotation.
//!
//! The crate is `no_std` (with `alloc`) and holds every algorithm of the
//! pipeline: tokenization and TF-IDF features, a BM25 inverted index, an
//! exact Euclidean vector store, a linear classifier with exact Shapley
//! attributions, rank-intersection fusion of the two retrieval legs, the
//! multi-round annotation campaign, and a synthetic corpus generator.
//!
//! File formats, configuration and the command-line driver live in the
//! `cueselect` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod attribution;
pub mod benchgen;
pub mod classify;
pub mod corpus;
mod error;
pub mod lexindex;
mod seed;
pub mod selection;
pub mod vecindex;

pub use error::{Error, Result};
pub use seed::{fnv1a, mix_seed};

pub use attribution::{shap_linear, suggest_query_terms, Attribution, QuerySuggestion};
pub use benchgen::{generate, hold_out_truth, CategorySpec, GeneratorConfig};
pub use classify::{
    evaluate, precision_at_k, predict, recall_at_k, split, train_linear, EvalReport, LinearModel,
    Loss, SplitSpec, TrainConfig,
};
pub use corpus::{tokenize, Corpus, Document, Record, SparseVec, Tokenizer, TokenizerConfig};
pub use lexindex::{Bm25Params, InvertedIndex};
pub use selection::{
    fuse_topk, run_campaign, AnnotationOracle, CampaignConfig, CampaignReport, CampaignState,
    TruthTable,
};
pub use vecindex::{embed_query, hash_embed, EmbeddingMatrix, EmbeddingProvider, HashEmbedder};

/// Position of a document inside its [`Corpus`].
pub type DocIdx = usize;
