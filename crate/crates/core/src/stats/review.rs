use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{DatasetManifest, MinedPair};

/// Reviewer judgement of caption relevance: 0 not, 1 somewhat, 2 very relevant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct RelevanceScore(u8);

impl RelevanceScore {
    pub const MAX: u8 = 2;

    pub fn new(score: u8) -> Result<Self> {
        if score <= Self::MAX {
            Ok(Self(score))
        } else {
            Err(Error::invalid(
                "review.relevance_score",
                format!("{score} not in {{0, 1, 2}}"),
            ))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for RelevanceScore {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        Self::new(v)
    }
}

impl From<RelevanceScore> for u8 {
    fn from(s: RelevanceScore) -> u8 {
        s.0
    }
}

/// One sampled pair plus the reviewer's (initially empty) judgements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewItem {
    #[serde(flatten)]
    pub pair: MinedPair,
    pub has_aligned_frame: Option<bool>,
    pub relevance_score: Option<RelevanceScore>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReviewSample {
    pub sample_size: usize,
    pub rng_seed: u64,
    pub items: Vec<ReviewItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReviewScore {
    pub sample_size: usize,
    pub aligned_fraction: f64,
    pub mean_score: f64,
    /// Count per score value; all of 0, 1 and 2 are present.
    pub score_counts: BTreeMap<u8, u64>,
}

/// Uniform sample of `sample_size` pairs without replacement, reproducible from `rng_seed`.
pub fn draw_review_sample(
    manifest: &DatasetManifest,
    sample_size: usize,
    rng_seed: u64,
) -> Result<ReviewSample> {
    let n = manifest.pairs.len();
    if sample_size > n {
        return Err(Error::invalid(
            "review.sample_size",
            format!("{sample_size} exceeds the {n} pairs in the manifest"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let items = rand::seq::index::sample(&mut rng, n, sample_size)
        .into_iter()
        .map(|i| ReviewItem {
            pair: manifest.pairs[i].clone(),
            has_aligned_frame: None,
            relevance_score: None,
        })
        .collect();
    Ok(ReviewSample {
        sample_size,
        rng_seed,
        items,
    })
}

/// Aggregates a fully reviewed sample.
pub fn score_review(sample: &ReviewSample) -> Result<ReviewScore> {
    if sample.items.is_empty() {
        return Err(Error::Empty("review sample"));
    }
    let mut aligned = 0u64;
    let mut total = 0u64;
    let mut score_counts: BTreeMap<u8, u64> = (0..=RelevanceScore::MAX).map(|s| (s, 0)).collect();
    for (i, item) in sample.items.iter().enumerate() {
        let has_aligned = item.has_aligned_frame.ok_or_else(|| {
            Error::invalid(
                "review.has_aligned_frame",
                format!("item {i} (seed `{}`) is not reviewed", item.pair.seed_id),
            )
        })?;
        let score = item.relevance_score.ok_or_else(|| {
            Error::invalid(
                "review.relevance_score",
                format!("item {i} (seed `{}`) is not scored", item.pair.seed_id),
            )
        })?;
        aligned += u64::from(has_aligned);
        total += u64::from(score.get());
        *score_counts.entry(score.get()).or_default() += 1;
    }
    let size = sample.items.len();
    Ok(ReviewScore {
        sample_size: size,
        aligned_fraction: aligned as f64 / size as f64,
        mean_score: total as f64 / size as f64,
        score_counts,
    })
}
