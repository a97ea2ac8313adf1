//! Exact similarity search over every frame of the corpus.
//!
//! Rows are stored sorted by `(video_id, timestamp)`, so the row number is
//! the global tie-break key: hits are ordered by similarity descending, then
//! row ascending. Each similarity is a fixed-order `f64` dot product of a
//! stored row with the query, so results do not depend on how rows are split
//! into shards or how many threads scan them.

mod backend;

use std::cmp::Ordering;
use std::ops::Range;
use std::sync::Arc;

use rayon::prelude::*;

pub use backend::{search_backends, ExhaustiveScan, SearchBackend, ShardedScan, DEFAULT_BACKEND};

use crate::error::{Error, Result};
use crate::types::{EmbeddingVector, FrameStream};

/// A frame whose similarity to the query reached the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Match {
    pub video_id: Arc<str>,
    pub timestamp_s: f64,
    pub similarity: f64,
}

/// A scored row, as produced by a [`SearchBackend`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub row: usize,
    pub similarity: f64,
}

/// Similarity descending, then row ascending. Total on finite similarities.
pub fn hit_order(a: &Hit, b: &Hit) -> Ordering {
    b.similarity
        .total_cmp(&a.similarity)
        .then_with(|| a.row.cmp(&b.row))
}

/// Keeps the `top_k` best hits in [`hit_order`].
pub fn select_top_k(mut hits: Vec<Hit>, top_k: usize) -> Vec<Hit> {
    if top_k == 0 {
        return Vec::new();
    }
    if hits.len() > top_k {
        hits.select_nth_unstable_by(top_k - 1, hit_order);
        hits.truncate(top_k);
    }
    hits.sort_unstable_by(hit_order);
    hits
}

#[derive(Debug, Clone)]
struct VideoEntry {
    id: Arc<str>,
    duration_s: f64,
}

/// Immutable, flat store of all frame embeddings in the corpus.
#[derive(Debug, Clone)]
pub struct FrameIndex {
    dim: usize,
    normalize: bool,
    videos: Vec<VideoEntry>,
    row_video: Vec<u32>,
    row_time: Vec<f64>,
    data: Vec<f32>,
    shards: Vec<Range<usize>>,
}

impl FrameIndex {
    /// Builds the index. With `normalize`, raw vectors are scaled to unit
    /// length; vectors already flagged unit-normalized are stored untouched.
    pub fn build(streams: &[FrameStream], normalize: bool, shard_count: usize) -> Result<Self> {
        if shard_count == 0 {
            return Err(Error::invalid("config.shard_count", "must be >= 1"));
        }
        let mut ordered: Vec<&FrameStream> = streams.iter().collect();
        ordered.sort_by(|a, b| a.video_id().cmp(b.video_id()));
        if let Some(w) = ordered.windows(2).find(|w| w[0].video_id() == w[1].video_id()) {
            return Err(Error::invalid(
                "stream.video_id",
                format!("video `{}` appears twice in the corpus", w[0].video_id()),
            ));
        }
        let dim = ordered
            .iter()
            .find_map(|s| s.dim())
            .ok_or(Error::Empty("frame corpus"))?;
        let rows: usize = ordered.iter().map(|s| s.frames().len()).sum();
        let video_count = u32::try_from(ordered.len())
            .map_err(|_| Error::invalid("stream.video_id", "too many videos"))?;

        let mut videos = Vec::with_capacity(video_count as usize);
        let mut row_video = Vec::with_capacity(rows);
        let mut row_time = Vec::with_capacity(rows);
        let mut data = Vec::with_capacity(rows * dim);
        for (vi, stream) in ordered.iter().enumerate() {
            videos.push(VideoEntry {
                id: Arc::from(stream.video_id()),
                duration_s: stream.duration_s(),
            });
            for frame in stream.frames() {
                if frame.embedding.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: frame.embedding.dim(),
                    });
                }
                if normalize {
                    data.extend_from_slice(frame.embedding.to_unit()?.values());
                } else {
                    data.extend_from_slice(frame.embedding.values());
                }
                row_video.push(vi as u32);
                row_time.push(frame.timestamp_s);
            }
        }

        let parts = shard_count.min(rows);
        let shards = (0..parts)
            .map(|i| (i * rows / parts)..((i + 1) * rows / parts))
            .collect();
        Ok(Self {
            dim,
            normalize,
            videos,
            row_video,
            row_time,
            data,
            shards,
        })
    }

    pub fn len(&self) -> usize {
        self.row_time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_time.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normalize(&self) -> bool {
        self.normalize
    }

    pub fn video_count(&self) -> usize {
        self.videos.len()
    }

    /// Contiguous row ranges; together they cover every row exactly once.
    pub fn shards(&self) -> &[Range<usize>] {
        &self.shards
    }

    pub fn row(&self, row: usize) -> &[f32] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn row_video_id(&self, row: usize) -> &Arc<str> {
        &self.videos[self.row_video[row] as usize].id
    }

    pub fn row_timestamp(&self, row: usize) -> f64 {
        self.row_time[row]
    }

    pub fn video_duration(&self, video_id: &str) -> Option<f64> {
        self.videos
            .binary_search_by(|v| (*v.id).cmp(video_id))
            .ok()
            .map(|i| self.videos[i].duration_s)
    }

    /// Checks the query dimension and normalizes it when the index is normalized.
    pub fn prepare_query(&self, seed: &EmbeddingVector) -> Result<EmbeddingVector> {
        if seed.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: seed.dim(),
            });
        }
        if self.normalize {
            seed.to_unit()
        } else {
            Ok(seed.clone())
        }
    }

    pub fn to_match(&self, hit: Hit) -> Match {
        Match {
            video_id: Arc::clone(self.row_video_id(hit.row)),
            timestamp_s: self.row_time[hit.row],
            similarity: hit.similarity,
        }
    }

    /// Hits with similarity `>= tau` within `rows`, unsorted.
    pub fn scan_rows(&self, rows: Range<usize>, query: &[f32], tau: f64) -> Vec<Hit> {
        let mut hits = Vec::new();
        for row in rows {
            let similarity = crate::types::dot(self.row(row), query);
            if similarity >= tau {
                hits.push(Hit { row, similarity });
            }
        }
        hits
    }

    /// Top `top_k` matches with similarity `>= tau`, using the default backend.
    pub fn query(&self, seed: &EmbeddingVector, tau: f64, top_k: usize) -> Result<Vec<Match>> {
        self.query_with(&ShardedScan, seed, tau, top_k)
    }

    pub fn query_with(
        &self,
        backend: &dyn SearchBackend,
        seed: &EmbeddingVector,
        tau: f64,
        top_k: usize,
    ) -> Result<Vec<Match>> {
        let query = self.prepare_query(seed)?;
        Ok(backend
            .scan(self, query.values(), tau, top_k)
            .into_iter()
            .map(|h| self.to_match(h))
            .collect())
    }

    /// Runs [`FrameIndex::query_with`] for every seed, in parallel; output order follows `seeds`.
    pub fn query_batch_with(
        &self,
        backend: &dyn SearchBackend,
        seeds: &[EmbeddingVector],
        tau: f64,
        top_k: usize,
    ) -> Result<Vec<Vec<Match>>> {
        seeds
            .par_iter()
            .map(|s| self.query_with(backend, s, tau, top_k))
            .collect()
    }
}

pub fn build_index(streams: &[FrameStream], normalize: bool, shard_count: usize) -> Result<FrameIndex> {
    FrameIndex::build(streams, normalize, shard_count)
}

pub fn query(index: &FrameIndex, seed: &EmbeddingVector, tau: f64, top_k: usize) -> Result<Vec<Match>> {
    index.query(seed, tau, top_k)
}

pub fn query_batch(
    index: &FrameIndex,
    seeds: &[EmbeddingVector],
    tau: f64,
    top_k: usize,
) -> Result<Vec<Vec<Match>>> {
    index.query_batch_with(&ShardedScan, seeds, tau, top_k)
}
