//! Caption-transfer mining: turn an image-caption seed set and a corpus of
//! per-frame video embeddings into a weakly-labelled video-caption dataset.
//!
//! The pipeline is `filter → index → mine → stats/sweep/eval/review`:
//!
//! - [`miner::filter_corpus`] drops videos whose metadata fails the corpus filter.
//! - [`index::FrameIndex`] holds every frame embedding for exact threshold search.
//! - [`miner::mine`] matches each seed, de-duplicates in time, cuts clips and
//!   transfers captions into a [`types::DatasetManifest`].
//! - [`stats`] computes dataset statistics, ablation sweeps and review samples.
//! - [`eval`] scores retrieval with K-clip averaging and recall@K.
//!
//! Search backends and match de-duplication are pluggable strategies looked up
//! by name, see [`index::search_backends`] and [`miner::dedup_strategies`].

pub mod cli;
pub mod error;
pub mod eval;
pub mod index;
pub mod io;
pub mod miner;
pub mod parallel;
pub mod registry;
pub mod stats;
pub mod types;

pub use error::{Error, Result};
pub use index::{build_index, query, query_batch, FrameIndex, Match};
pub use miner::{extract_clip, filter_corpus, mine, temporal_nms, CorpusFilter};
pub use types::{
    validate_manifest, DatasetManifest, EmbeddingVector, Frame, FrameStream, MinedPair,
    MiningConfig, NormPolicy, SeedRecord, VideoMetadata,
};
