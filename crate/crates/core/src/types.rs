//! Domain types shared across the pipeline.
//!
//! Every constructor enforces the type's invariants, so a value that exists is
//! a value that is valid. All types are immutable once built.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest permitted deviation of `‖v‖₂` from 1 for unit-normalized vectors.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-5;

/// Allowed disagreement between a video's metadata length and its frame-stream duration.
pub const LENGTH_TOLERANCE_S: f64 = 2.0;

/// Slack used when comparing clip lengths against the configured span.
pub const CLIP_TOLERANCE_S: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormPolicy {
    Raw,
    Unit,
}

impl NormPolicy {
    pub fn as_byte(self) -> u8 {
        match self {
            NormPolicy::Raw => 0,
            NormPolicy::Unit => 1,
        }
    }

    pub fn from_byte(byte: u8) -> Option<Self> {
        match byte {
            0 => Some(NormPolicy::Raw),
            1 => Some(NormPolicy::Unit),
            _ => None,
        }
    }
}

/// Dot product of two `f32` slices, accumulated left to right in `f64`.
///
/// The accumulation order is fixed so that a given pair of vectors always
/// yields the same bits, whichever code path computes it.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        acc += f64::from(*x) * f64::from(*y);
    }
    acc
}

pub fn l2_norm(values: &[f32]) -> f64 {
    dot(values, values).sqrt()
}

/// A fixed-dimension embedding in the shared image/frame space.
#[derive(Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Arc<[f32]>,
    norm_policy: NormPolicy,
}

impl fmt::Debug for EmbeddingVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EmbeddingVector")
            .field("dim", &self.dim())
            .field("norm_policy", &self.norm_policy)
            .finish()
    }
}

impl EmbeddingVector {
    pub fn new(values: Vec<f32>, norm_policy: NormPolicy) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("embedding.values", "dimension must be > 0"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "embedding.values",
                format!("component {i} is not finite"),
            ));
        }
        if norm_policy == NormPolicy::Unit {
            let norm = l2_norm(&values);
            if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
                return Err(Error::invalid(
                    "embedding.norm_policy",
                    format!("declared unit-normalized but norm is {norm}"),
                ));
            }
        }
        Ok(Self {
            values: values.into(),
            norm_policy,
        })
    }

    pub fn raw(values: Vec<f32>) -> Result<Self> {
        Self::new(values, NormPolicy::Raw)
    }

    /// Scales `values` to unit length (norm computed in `f64`).
    pub fn normalized(values: &[f32]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("embedding.values", "dimension must be > 0"));
        }
        let norm = l2_norm(values);
        if !norm.is_finite() {
            return Err(Error::invalid("embedding.values", "non-finite norm"));
        }
        if norm == 0.0 {
            return Err(Error::invalid(
                "embedding.values",
                "cannot normalize a zero vector",
            ));
        }
        let scaled = values
            .iter()
            .map(|&v| (f64::from(v) / norm) as f32)
            .collect();
        Self::new(scaled, NormPolicy::Unit)
    }

    /// Unit-normalized view of this vector; already-unit vectors are returned unchanged.
    pub fn to_unit(&self) -> Result<Self> {
        match self.norm_policy {
            NormPolicy::Unit => Ok(self.clone()),
            NormPolicy::Raw => Self::normalized(&self.values),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn norm_policy(&self) -> NormPolicy {
        self.norm_policy
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.values)
    }

    pub fn dot(&self, other: &EmbeddingVector) -> f64 {
        dot(&self.values, &other.values)
    }

    /// Cosine similarity, i.e. the dot product of the normalized vectors.
    pub fn cosine(&self, other: &EmbeddingVector) -> f64 {
        self.dot(other) / (self.norm() * other.norm())
    }
}

/// One image-caption pair from the seed dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedRecord {
    seed_id: String,
    caption: String,
    embedding: EmbeddingVector,
}

impl SeedRecord {
    pub fn new(
        seed_id: impl Into<String>,
        caption: impl Into<String>,
        embedding: EmbeddingVector,
    ) -> Result<Self> {
        let seed_id = seed_id.into();
        let caption = caption.into();
        if seed_id.is_empty() {
            return Err(Error::invalid("seed.seed_id", "must not be empty"));
        }
        if caption.trim().is_empty() {
            return Err(Error::invalid(
                "seed.caption",
                format!("caption of seed `{seed_id}` is blank"),
            ));
        }
        Ok(Self {
            seed_id,
            caption,
            embedding,
        })
    }

    pub fn seed_id(&self) -> &str {
        &self.seed_id
    }

    pub fn caption(&self) -> &str {
        &self.caption
    }

    pub fn embedding(&self) -> &EmbeddingVector {
        &self.embedding
    }
}

/// Rejects seed sets with repeated ids or mixed dimensions.
pub fn check_seed_set(seeds: &[SeedRecord]) -> Result<()> {
    let mut seen = BTreeSet::new();
    let dim = seeds.first().map(|s| s.embedding.dim());
    for seed in seeds {
        if !seen.insert(seed.seed_id.as_str()) {
            return Err(Error::invalid(
                "seed.seed_id",
                format!("duplicate seed id `{}`", seed.seed_id),
            ));
        }
        if let Some(dim) = dim {
            if seed.embedding.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: seed.embedding.dim(),
                });
            }
        }
    }
    Ok(())
}

/// Per-video attributes used by the corpus filter.
///
/// Fields are optional because upstream metadata is frequently incomplete;
/// the filter rejects streams that lack a field it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub viewcount: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upload_age_days: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_ok: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_label: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub timestamp_s: f64,
    pub embedding: EmbeddingVector,
}

/// The timestamped frame embeddings of one video, sampled at roughly 1 Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStream {
    video_id: String,
    duration_s: f64,
    frames: Vec<Frame>,
    metadata: VideoMetadata,
}

impl FrameStream {
    pub fn new(
        video_id: impl Into<String>,
        duration_s: f64,
        frames: Vec<Frame>,
        metadata: VideoMetadata,
    ) -> Result<Self> {
        let video_id = video_id.into();
        if video_id.is_empty() {
            return Err(Error::invalid("stream.video_id", "must not be empty"));
        }
        if !duration_s.is_finite() || duration_s < 0.0 {
            return Err(Error::invalid(
                "stream.duration_s",
                format!("video `{video_id}`: duration {duration_s} must be finite and >= 0"),
            ));
        }
        let dim = frames.first().map(|f| f.embedding.dim());
        let mut previous: Option<f64> = None;
        for (i, frame) in frames.iter().enumerate() {
            let t = frame.timestamp_s;
            if !t.is_finite() || t < 0.0 || t > duration_s {
                return Err(Error::invalid(
                    "stream.frames.timestamp_s",
                    format!("video `{video_id}` frame {i}: timestamp {t} outside [0, {duration_s}]"),
                ));
            }
            if let Some(prev) = previous {
                if t <= prev {
                    return Err(Error::invalid(
                        "stream.frames.timestamp_s",
                        format!(
                            "video `{video_id}` frame {i}: timestamp {t} not after previous {prev}"
                        ),
                    ));
                }
            }
            previous = Some(t);
            if let Some(dim) = dim {
                if frame.embedding.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: frame.embedding.dim(),
                    });
                }
            }
        }
        if let Some(length) = metadata.length_s {
            if !length.is_finite() || (length - duration_s).abs() > LENGTH_TOLERANCE_S {
                return Err(Error::invalid(
                    "stream.metadata.length_s",
                    format!("video `{video_id}`: length {length} disagrees with duration {duration_s}"),
                ));
            }
        }
        Ok(Self {
            video_id,
            duration_s,
            frames,
            metadata,
        })
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_s
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn metadata(&self) -> &VideoMetadata {
        &self.metadata
    }

    /// Embedding dimension, or `None` for a stream without frames.
    pub fn dim(&self) -> Option<usize> {
        self.frames.first().map(|f| f.embedding.dim())
    }
}

pub const DEFAULT_TAU: f64 = 0.6;
pub const DEFAULT_T_SPAN_S: f64 = 10.0;
pub const DEFAULT_TOP_K: usize = 10;
pub const DEFAULT_FRAME_RATE_HZ: f64 = 1.0;
pub const DEFAULT_QUERY_DEPTH_FACTOR: usize = 10;
pub const DEFAULT_DEDUP: &str = "temporal-nms";

/// Parameters of one mining run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MiningConfig {
    /// Minimum similarity for a frame to count as a match (inclusive).
    pub tau: f64,
    /// Length of the clip cut around each matched frame.
    pub t_span_s: f64,
    /// Matches kept per seed.
    pub top_k: usize,
    pub frame_rate_hz: f64,
    /// Cosine similarity when true, raw dot product otherwise.
    pub normalize: bool,
    /// Minimum time between two kept matches of the same video.
    pub nms_window_s: f64,
    /// Pre-dedup query depth, as a multiple of `top_k`.
    pub query_depth_factor: usize,
    /// Name of the match de-duplication strategy.
    pub dedup: String,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            t_span_s: DEFAULT_T_SPAN_S,
            top_k: DEFAULT_TOP_K,
            frame_rate_hz: DEFAULT_FRAME_RATE_HZ,
            normalize: true,
            nms_window_s: DEFAULT_T_SPAN_S,
            query_depth_factor: DEFAULT_QUERY_DEPTH_FACTOR,
            dedup: DEFAULT_DEDUP.to_owned(),
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.tau.is_finite() {
            return Err(Error::invalid("config.tau", "must be finite"));
        }
        if self.normalize && !(-1.0..=1.0).contains(&self.tau) {
            return Err(Error::invalid(
                "config.tau",
                format!("{} outside [-1, 1] with normalization on", self.tau),
            ));
        }
        if !(self.t_span_s.is_finite() && self.t_span_s > 0.0) {
            return Err(Error::invalid("config.t_span_s", "must be > 0"));
        }
        if self.top_k == 0 {
            return Err(Error::invalid("config.top_k", "must be >= 1"));
        }
        if !(self.frame_rate_hz.is_finite() && self.frame_rate_hz > 0.0) {
            return Err(Error::invalid("config.frame_rate_hz", "must be > 0"));
        }
        if !(self.nms_window_s.is_finite() && self.nms_window_s >= 0.0) {
            return Err(Error::invalid("config.nms_window_s", "must be >= 0"));
        }
        if self.query_depth_factor == 0 {
            return Err(Error::invalid("config.query_depth_factor", "must be >= 1"));
        }
        Ok(())
    }

    /// Number of candidates requested from the index before de-duplication.
    pub fn query_depth(&self) -> usize {
        self.top_k.saturating_mul(self.query_depth_factor)
    }
}

/// One row of the mined dataset: a caption transferred onto a video clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinedPair {
    pub caption: String,
    pub seed_id: String,
    pub video_id: String,
    pub clip_start_s: f64,
    pub clip_end_s: f64,
    pub matched_frame_s: f64,
    pub similarity: f64,
}

impl MinedPair {
    pub fn clip_len_s(&self) -> f64 {
        self.clip_end_s - self.clip_start_s
    }

    /// Identity of the clip, independent of which seed selected it.
    pub fn clip_key(&self) -> (&str, u64, u64) {
        (
            &self.video_id,
            self.clip_start_s.to_bits(),
            self.clip_end_s.to_bits(),
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Counters {
    pub n_pairs: u64,
    pub n_unique_clips: u64,
    pub n_unique_captions: u64,
    /// Footage covered by the distinct clips, in hours.
    pub total_clip_hours: f64,
}

impl Counters {
    pub fn compute(pairs: &[MinedPair]) -> Self {
        let clips: BTreeMap<(&str, u64, u64), f64> = pairs
            .iter()
            .map(|p| (p.clip_key(), p.clip_len_s()))
            .collect();
        let captions: BTreeSet<&str> = pairs.iter().map(|p| p.caption.as_str()).collect();
        let seconds: f64 = clips.values().sum();
        Self {
            n_pairs: pairs.len() as u64,
            n_unique_clips: clips.len() as u64,
            n_unique_captions: captions.len() as u64,
            total_clip_hours: seconds / 3600.0,
        }
    }
}

/// The mined dataset together with the configuration that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub pairs: Vec<MinedPair>,
    pub config: MiningConfig,
    pub counters: Counters,
}

impl DatasetManifest {
    /// Builds a manifest with freshly computed counters.
    pub fn new(pairs: Vec<MinedPair>, config: MiningConfig) -> Self {
        let counters = Counters::compute(&pairs);
        Self {
            pairs,
            config,
            counters,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// `pair <i>` (0-based), `counters`, or `config`.
    pub location: String,
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.location, self.field, self.message)
    }
}

/// Checks every pair and counter invariant; an empty result means the manifest is valid.
pub fn validate_manifest(manifest: &DatasetManifest) -> Vec<Violation> {
    validate_manifest_with_durations(manifest, None)
}

/// As [`validate_manifest`], additionally checking clip bounds against known video durations.
pub fn validate_manifest_with_durations(
    manifest: &DatasetManifest,
    durations: Option<&BTreeMap<String, f64>>,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let config = &manifest.config;
    if let Err(e) = config.validate() {
        out.push(Violation {
            location: "config".into(),
            field: "config",
            message: e.to_string(),
        });
    }
    let span = config.t_span_s;
    for (i, pair) in manifest.pairs.iter().enumerate() {
        let mut push = |field: &'static str, message: String| {
            out.push(Violation {
                location: format!("pair {i}"),
                field,
                message,
            })
        };
        let finite = [
            pair.clip_start_s,
            pair.clip_end_s,
            pair.matched_frame_s,
            pair.similarity,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            push("pair", "non-finite number".into());
            continue;
        }
        if pair.caption.trim().is_empty() {
            push("caption", "blank caption".into());
        }
        if pair.seed_id.is_empty() {
            push("seed_id", "empty seed id".into());
        }
        if pair.video_id.is_empty() {
            push("video_id", "empty video id".into());
        }
        if pair.clip_start_s < 0.0 {
            push("clip_start_s", format!("{} is negative", pair.clip_start_s));
        }
        if !(pair.clip_start_s <= pair.matched_frame_s && pair.matched_frame_s <= pair.clip_end_s) {
            push(
                "matched_frame_s",
                format!(
                    "{} outside clip [{}, {}]",
                    pair.matched_frame_s, pair.clip_start_s, pair.clip_end_s
                ),
            );
        }
        let len = pair.clip_len_s();
        if len > span + CLIP_TOLERANCE_S {
            push("clip_end_s", format!("clip length {len} exceeds span {span}"));
        }
        // A clip shorter than the span must be the whole (short) video.
        if len < span - CLIP_TOLERANCE_S && pair.clip_start_s != 0.0 {
            push(
                "clip_start_s",
                format!("short clip of {len} s does not start at 0"),
            );
        }
        if let Some(duration) = durations.and_then(|d| d.get(&pair.video_id)) {
            if pair.clip_end_s > duration + CLIP_TOLERANCE_S {
                push(
                    "clip_end_s",
                    format!("{} beyond video duration {duration}", pair.clip_end_s),
                );
            }
            let expected = span.min(*duration);
            if (len - expected).abs() > CLIP_TOLERANCE_S {
                push(
                    "clip_end_s",
                    format!("clip length {len}, expected {expected}"),
                );
            }
        }
        if pair.similarity < config.tau {
            push(
                "similarity",
                format!(
                    "similarity below threshold: {} < tau {}",
                    pair.similarity, config.tau
                ),
            );
        }
    }

    let recount = Counters::compute(&manifest.pairs);
    let stored = manifest.counters;
    let mut counter = |field: &'static str, ok: bool, message: String| {
        if !ok {
            out.push(Violation {
                location: "counters".into(),
                field,
                message,
            })
        }
    };
    counter(
        "n_pairs",
        stored.n_pairs == recount.n_pairs,
        format!("stored {} != recount {}", stored.n_pairs, recount.n_pairs),
    );
    counter(
        "n_unique_clips",
        stored.n_unique_clips == recount.n_unique_clips,
        format!(
            "stored {} != recount {}",
            stored.n_unique_clips, recount.n_unique_clips
        ),
    );
    counter(
        "n_unique_captions",
        stored.n_unique_captions == recount.n_unique_captions,
        format!(
            "stored {} != recount {}",
            stored.n_unique_captions, recount.n_unique_captions
        ),
    );
    let hours_ok = (stored.total_clip_hours - recount.total_clip_hours).abs()
        <= 1e-9 * recount.total_clip_hours.abs().max(1.0);
    counter(
        "total_clip_hours",
        hours_ok,
        format!(
            "stored {} != recount {}",
            stored.total_clip_hours, recount.total_clip_hours
        ),
    );
    out
}
