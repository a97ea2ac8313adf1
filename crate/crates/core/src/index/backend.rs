use rayon::prelude::*;

use super::{select_top_k, FrameIndex, Hit};
use crate::registry::{Named, Registry};

pub const DEFAULT_BACKEND: &str = "sharded";

/// A strategy for scanning a [`FrameIndex`].
///
/// Implementations must return exactly the `top_k` best rows with
/// similarity `>= tau` in `hit_order`; they may differ only in how the work
/// is scheduled.
pub trait SearchBackend: Named + Send + Sync {
    fn scan(&self, index: &FrameIndex, query: &[f32], tau: f64, top_k: usize) -> Vec<Hit>;
}

/// Single-threaded pass over every row.
pub struct ExhaustiveScan;

impl Named for ExhaustiveScan {
    fn name(&self) -> &'static str {
        "exhaustive"
    }
}

impl SearchBackend for ExhaustiveScan {
    fn scan(&self, index: &FrameIndex, query: &[f32], tau: f64, top_k: usize) -> Vec<Hit> {
        select_top_k(index.scan_rows(0..index.len(), query, tau), top_k)
    }
}

/// Scans shards in parallel, cuts each to `top_k`, then merges.
pub struct ShardedScan;

impl Named for ShardedScan {
    fn name(&self) -> &'static str {
        "sharded"
    }
}

impl SearchBackend for ShardedScan {
    fn scan(&self, index: &FrameIndex, query: &[f32], tau: f64, top_k: usize) -> Vec<Hit> {
        let per_shard: Vec<Vec<Hit>> = index
            .shards()
            .par_iter()
            .map(|rows| select_top_k(index.scan_rows(rows.clone(), query, tau), top_k))
            .collect();
        select_top_k(per_shard.into_iter().flatten().collect(), top_k)
    }
}

pub fn search_backends() -> Registry<dyn SearchBackend> {
    Registry::<dyn SearchBackend>::new("search backend")
        .with(Box::new(ExhaustiveScan))
        .with(Box::new(ShardedScan))
}
