//! The mining pipeline: match each seed against the frame index, de-duplicate
//! matches in time, cut a clip around each surviving frame and transfer the
//! seed's caption onto it.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{search_backends, FrameIndex, Match, SearchBackend, DEFAULT_BACKEND};
use crate::registry::{Named, Registry};
use crate::types::{
    check_seed_set, DatasetManifest, FrameStream, MinedPair, MiningConfig, SeedRecord,
    VideoMetadata,
};

pub const DEFAULT_MIN_VIEWCOUNT: u64 = 1000;
pub const DEFAULT_MAX_LENGTH_S: f64 = 20.0 * 60.0;
pub const DEFAULT_MIN_AGE_DAYS: u64 = 90;
pub const DEFAULT_MAX_AGE_DAYS: u64 = 3650;

/// Metadata predicates a video must satisfy to enter the corpus.
///
/// Viewcount and length bounds are strict; age bounds are inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusFilter {
    pub min_viewcount: u64,
    pub max_length_s: f64,
    pub min_age_days: u64,
    pub max_age_days: u64,
    pub require_content_ok: bool,
}

impl Default for CorpusFilter {
    fn default() -> Self {
        Self {
            min_viewcount: DEFAULT_MIN_VIEWCOUNT,
            max_length_s: DEFAULT_MAX_LENGTH_S,
            min_age_days: DEFAULT_MIN_AGE_DAYS,
            max_age_days: DEFAULT_MAX_AGE_DAYS,
            require_content_ok: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterVerdict {
    Keep,
    /// Fails the named predicate.
    Exclude(&'static str),
    /// Lacks the named metadata field.
    Missing(&'static str),
}

impl CorpusFilter {
    pub fn validate(&self) -> Result<()> {
        if self.min_age_days > self.max_age_days {
            return Err(Error::invalid(
                "config.filter.min_age_days",
                format!(
                    "{} exceeds max_age_days {}",
                    self.min_age_days, self.max_age_days
                ),
            ));
        }
        if !self.max_length_s.is_finite() || self.max_length_s <= 0.0 {
            return Err(Error::invalid("config.filter.max_length_s", "must be > 0"));
        }
        Ok(())
    }

    pub fn evaluate(&self, meta: &VideoMetadata) -> FilterVerdict {
        let Some(viewcount) = meta.viewcount else {
            return FilterVerdict::Missing("viewcount");
        };
        let Some(length) = meta.length_s else {
            return FilterVerdict::Missing("length_s");
        };
        let Some(age) = meta.upload_age_days else {
            return FilterVerdict::Missing("upload_age_days");
        };
        let content_ok = match (self.require_content_ok, meta.content_ok) {
            (false, _) => true,
            (true, Some(ok)) => ok,
            (true, None) => return FilterVerdict::Missing("content_ok"),
        };
        if viewcount <= self.min_viewcount {
            FilterVerdict::Exclude("viewcount")
        } else if length >= self.max_length_s {
            FilterVerdict::Exclude("length_s")
        } else if age < self.min_age_days || age > self.max_age_days {
            FilterVerdict::Exclude("upload_age_days")
        } else if !content_ok {
            FilterVerdict::Exclude("content_ok")
        } else {
            FilterVerdict::Keep
        }
    }
}

#[derive(Debug, Default)]
pub struct FilterOutcome {
    /// Streams passing every predicate, in input order.
    pub kept: Vec<FrameStream>,
    /// `(video_id, failed predicate)`.
    pub excluded: Vec<(String, &'static str)>,
    /// `(video_id, diagnostic)` for streams with incomplete metadata.
    pub rejected: Vec<(String, String)>,
}

pub fn filter_corpus(streams: Vec<FrameStream>, filter: &CorpusFilter) -> Result<FilterOutcome> {
    filter.validate()?;
    let mut out = FilterOutcome::default();
    for stream in streams {
        match filter.evaluate(stream.metadata()) {
            FilterVerdict::Keep => out.kept.push(stream),
            FilterVerdict::Exclude(why) => out.excluded.push((stream.video_id().to_owned(), why)),
            FilterVerdict::Missing(field) => out.rejected.push((
                stream.video_id().to_owned(),
                format!("missing metadata field `{field}`"),
            )),
        }
    }
    Ok(out)
}

/// Clip of length `min(t_span_s, duration_s)` centered on the matched frame,
/// shifted to stay inside `[0, duration_s]`.
pub fn extract_clip(matched_frame_s: f64, duration_s: f64, t_span_s: f64) -> (f64, f64) {
    if t_span_s >= duration_s {
        return (0.0, duration_s);
    }
    let latest_start = duration_s - t_span_s;
    let start = (matched_frame_s - t_span_s / 2.0).clamp(0.0, latest_start);
    if start == latest_start {
        (start, duration_s)
    } else {
        (start, start + t_span_s)
    }
}

/// Greedy temporal suppression: walking `ranked` in order, keep a match iff
/// it is at least `window_s` away from every match already kept in the same
/// video. Output order follows input order.
pub fn temporal_nms(ranked: &[Match], window_s: f64) -> Vec<Match> {
    let mut kept_times: HashMap<&Arc<str>, Vec<f64>> = HashMap::new();
    let mut out = Vec::new();
    for m in ranked {
        let times = kept_times.entry(&m.video_id).or_default();
        if times.iter().all(|t| (m.timestamp_s - t).abs() >= window_s) {
            times.push(m.timestamp_s);
            out.push(m.clone());
        }
    }
    out
}

/// How near-duplicate matches of one seed are thinned before the top-k cut.
pub trait MatchDedup: Named + Send + Sync {
    fn dedup(&self, ranked: Vec<Match>, window_s: f64) -> Vec<Match>;
}

pub struct TemporalNms;

impl Named for TemporalNms {
    fn name(&self) -> &'static str {
        "temporal-nms"
    }
}

impl MatchDedup for TemporalNms {
    fn dedup(&self, ranked: Vec<Match>, window_s: f64) -> Vec<Match> {
        temporal_nms(&ranked, window_s)
    }
}

/// Keeps every match; the pipeline then takes the raw top-k frames.
pub struct KeepAll;

impl Named for KeepAll {
    fn name(&self) -> &'static str {
        "none"
    }
}

impl MatchDedup for KeepAll {
    fn dedup(&self, ranked: Vec<Match>, _window_s: f64) -> Vec<Match> {
        ranked
    }
}

pub fn dedup_strategies() -> Registry<dyn MatchDedup> {
    Registry::<dyn MatchDedup>::new("dedup strategy")
        .with(Box::new(TemporalNms))
        .with(Box::new(KeepAll))
}

/// Runs the full pipeline with the default search backend.
pub fn mine(seeds: &[SeedRecord], index: &FrameIndex, config: &MiningConfig) -> Result<DatasetManifest> {
    let backends = search_backends();
    mine_with(seeds, index, config, backends.get(DEFAULT_BACKEND)?)
}

pub fn mine_with(
    seeds: &[SeedRecord],
    index: &FrameIndex,
    config: &MiningConfig,
    backend: &dyn SearchBackend,
) -> Result<DatasetManifest> {
    config.validate()?;
    if seeds.is_empty() {
        return Err(Error::Empty("seed set"));
    }
    check_seed_set(seeds)?;
    if config.normalize != index.normalize() {
        return Err(Error::invalid(
            "config.normalize",
            format!(
                "config says normalize={} but the index was built with normalize={}",
                config.normalize,
                index.normalize()
            ),
        ));
    }
    let strategies = dedup_strategies();
    let dedup = strategies.get(&config.dedup)?;

    let per_seed: Vec<Vec<MinedPair>> = seeds
        .par_iter()
        .map(|seed| mine_seed(seed, index, config, backend, dedup))
        .collect::<Result<_>>()?;
    Ok(DatasetManifest::new(
        per_seed.into_iter().flatten().collect(),
        config.clone(),
    ))
}

fn mine_seed(
    seed: &SeedRecord,
    index: &FrameIndex,
    config: &MiningConfig,
    backend: &dyn SearchBackend,
    dedup: &dyn MatchDedup,
) -> Result<Vec<MinedPair>> {
    let ranked = index.query_with(backend, seed.embedding(), config.tau, config.query_depth())?;
    let survivors = dedup.dedup(ranked, config.nms_window_s);
    Ok(survivors
        .into_iter()
        .take(config.top_k)
        .map(|m| {
            let duration = index
                .video_duration(&m.video_id)
                .expect("matched video is in the index");
            let (clip_start_s, clip_end_s) = extract_clip(m.timestamp_s, duration, config.t_span_s);
            MinedPair {
                caption: seed.caption().to_owned(),
                seed_id: seed.seed_id().to_owned(),
                video_id: m.video_id.to_string(),
                clip_start_s,
                clip_end_s,
                matched_frame_s: m.timestamp_s,
                similarity: m.similarity,
            }
        })
        .collect())
}
