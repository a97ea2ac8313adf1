//! Text-to-video retrieval evaluation with K-clip score averaging.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::EmbeddingVector;

pub const DEFAULT_K_CLIPS: usize = 4;

/// Cutoffs reported by [`recall_at_k`].
pub const RECALL_CUTOFFS: [usize; 3] = [1, 5, 10];

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate {
    pub video_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecallReport {
    pub n_queries: usize,
    /// Recall at each cutoff in [`RECALL_CUTOFFS`].
    pub r_at: BTreeMap<usize, f64>,
}

/// `m` indices spread evenly over `0..n`, endpoints included: `round(i·(n−1)/(m−1))`.
pub fn equally_spaced_indices(n: usize, m: usize) -> Vec<usize> {
    let m = m.min(n);
    if m == 0 {
        return Vec::new();
    }
    if m == 1 {
        return vec![0];
    }
    let mut out: Vec<usize> = (0..m)
        // Integer round-half-up of i*(n-1)/(m-1).
        .map(|i| (2 * i * (n - 1) + (m - 1)) / (2 * (m - 1)))
        .collect();
    out.dedup();
    out
}

/// Mean cosine similarity between `query` and `k_clips` equally spaced clips.
pub fn score_video(
    query: &EmbeddingVector,
    video_clips: &[EmbeddingVector],
    k_clips: usize,
) -> Result<f64> {
    if k_clips == 0 {
        return Err(Error::invalid("config.k_clips", "must be >= 1"));
    }
    if video_clips.is_empty() {
        return Err(Error::Empty("video clip list"));
    }
    let indices = equally_spaced_indices(video_clips.len(), k_clips);
    let mut sum = 0.0;
    for &i in &indices {
        let clip = &video_clips[i];
        if clip.dim() != query.dim() {
            return Err(Error::DimensionMismatch {
                expected: query.dim(),
                found: clip.dim(),
            });
        }
        sum += query.cosine(clip);
    }
    Ok(sum / indices.len() as f64)
}

/// Score descending, then video id ascending.
pub fn candidate_order(a: &ScoredCandidate, b: &ScoredCandidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.video_id.cmp(&b.video_id))
}

pub fn rank_candidates(mut scored: Vec<ScoredCandidate>) -> Vec<ScoredCandidate> {
    scored.sort_by(candidate_order);
    scored
}

/// 1-based rank of `video_id` among `scored` under [`candidate_order`].
pub fn rank_of(scored: &[ScoredCandidate], video_id: &str) -> Option<usize> {
    let target = scored.iter().find(|c| c.video_id == video_id)?;
    Some(
        1 + scored
            .iter()
            .filter(|c| candidate_order(c, target) == Ordering::Less)
            .count(),
    )
}

/// Ranks every candidate video for each query and reports recall@{1,5,10}.
pub fn recall_at_k(
    queries: &[(EmbeddingVector, String)],
    candidates: &BTreeMap<String, Vec<EmbeddingVector>>,
    k_clips: usize,
) -> Result<RecallReport> {
    if queries.is_empty() {
        return Err(Error::Empty("query set"));
    }
    for (_, truth) in queries {
        if !candidates.contains_key(truth) {
            return Err(Error::invalid(
                "query.video_id",
                format!("true video `{truth}` is not among the candidates"),
            ));
        }
    }
    let ranks: Vec<usize> = queries
        .par_iter()
        .map(|(query, truth)| {
            let scored = candidates
                .iter()
                .map(|(id, clips)| {
                    Ok(ScoredCandidate {
                        video_id: id.clone(),
                        score: score_video(query, clips, k_clips)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(rank_of(&scored, truth).expect("truth checked above"))
        })
        .collect::<Result<_>>()?;
    let n = ranks.len();
    let r_at = RECALL_CUTOFFS
        .iter()
        .map(|&k| (k, ranks.iter().filter(|&&r| r <= k).count() as f64 / n as f64))
        .collect();
    Ok(RecallReport { n_queries: n, r_at })
}
