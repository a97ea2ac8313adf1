//! Dataset statistics, ablation sweeps and the manual-review workflow.

mod review;
mod sweep;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::types::{Counters, DatasetManifest};

pub use review::{
    draw_review_sample, score_review, RelevanceScore, ReviewItem, ReviewSample, ReviewScore,
};
pub use sweep::{sweep, sweep_with, SweepAxis, SweepPoint, SweepResult};

/// Captions with at least this many clips share one histogram bucket.
pub const HISTOGRAM_OVERFLOW: u64 = 150;

/// Label for pairs whose video has no domain label.
pub const OTHER_DOMAIN: &str = "Other";

/// Clips-per-caption histogram bucket: exact counts below 150, one overflow bucket above.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClipsBucket {
    Exact(u64),
    Overflow,
}

impl ClipsBucket {
    pub fn for_count(clips: u64) -> Self {
        if clips >= HISTOGRAM_OVERFLOW {
            ClipsBucket::Overflow
        } else {
            ClipsBucket::Exact(clips)
        }
    }
}

impl fmt::Display for ClipsBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClipsBucket::Exact(n) => write!(f, "{n}"),
            ClipsBucket::Overflow => write!(f, ">={HISTOGRAM_OVERFLOW}"),
        }
    }
}

impl FromStr for ClipsBucket {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == format!(">={HISTOGRAM_OVERFLOW}") {
            return Ok(ClipsBucket::Overflow);
        }
        match s.parse::<u64>() {
            Ok(n) if n < HISTOGRAM_OVERFLOW => Ok(ClipsBucket::Exact(n)),
            _ => Err(format!("invalid histogram bucket `{s}`")),
        }
    }
}

impl Serialize for ClipsBucket {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ClipsBucket {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsReport {
    pub n_pairs: u64,
    pub n_unique_clips: u64,
    pub n_unique_captions: u64,
    pub total_clip_hours: f64,
    pub mean_clips_per_caption: f64,
    pub clips_per_caption_histogram: BTreeMap<ClipsBucket, u64>,
    pub domain_distribution: BTreeMap<String, u64>,
}

/// Statistics with every pair counted under [`OTHER_DOMAIN`].
pub fn compute_stats(manifest: &DatasetManifest) -> StatsReport {
    compute_stats_with_domains(manifest, &HashMap::new())
}

/// Statistics with the domain distribution resolved through `domains` (video id → label).
pub fn compute_stats_with_domains(
    manifest: &DatasetManifest,
    domains: &HashMap<String, String>,
) -> StatsReport {
    let counters = Counters::compute(&manifest.pairs);

    let mut per_caption: HashMap<&str, u64> = HashMap::new();
    let mut domain_distribution = BTreeMap::new();
    for pair in &manifest.pairs {
        *per_caption.entry(pair.caption.as_str()).or_default() += 1;
        let label = domains
            .get(&pair.video_id)
            .map(String::as_str)
            .unwrap_or(OTHER_DOMAIN);
        *domain_distribution.entry(label.to_owned()).or_default() += 1;
    }
    let mut histogram = BTreeMap::new();
    for clips in per_caption.values() {
        *histogram.entry(ClipsBucket::for_count(*clips)).or_default() += 1;
    }

    let mean_clips_per_caption = if counters.n_unique_captions == 0 {
        log::warn!("empty manifest: mean clips per caption defined as 0");
        0.0
    } else {
        counters.n_pairs as f64 / counters.n_unique_captions as f64
    };
    StatsReport {
        n_pairs: counters.n_pairs,
        n_unique_clips: counters.n_unique_clips,
        n_unique_captions: counters.n_unique_captions,
        total_clip_hours: counters.total_clip_hours,
        mean_clips_per_caption,
        clips_per_caption_histogram: histogram,
        domain_distribution,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{MinedPair, MiningConfig};

    fn pair(caption: &str, video: &str, start: f64) -> MinedPair {
        MinedPair {
            caption: caption.into(),
            seed_id: format!("{caption}-{video}-{start}"),
            video_id: video.into(),
            clip_start_s: start,
            clip_end_s: start + 10.0,
            matched_frame_s: start + 5.0,
            similarity: 0.8,
        }
    }

    #[test]
    fn hand_counted_example() {
        let m = DatasetManifest::new(
            vec![pair("A", "v", 0.0), pair("A", "v", 20.0), pair("B", "w", 0.0)],
            MiningConfig::default(),
        );
        let s = compute_stats(&m);
        assert_eq!(s.n_pairs, 3);
        assert_eq!(s.n_unique_clips, 3);
        assert_eq!(s.n_unique_captions, 2);
        assert_eq!(s.mean_clips_per_caption, 1.5);
        assert_eq!(
            s.clips_per_caption_histogram,
            BTreeMap::from([(ClipsBucket::Exact(1), 1), (ClipsBucket::Exact(2), 1)])
        );
        assert_eq!(s.domain_distribution, BTreeMap::from([("Other".to_string(), 3)]));
    }

    #[test]
    fn empty_manifest_is_all_zero() {
        let s = compute_stats(&DatasetManifest::new(vec![], MiningConfig::default()));
        assert_eq!((s.n_pairs, s.n_unique_clips, s.n_unique_captions), (0, 0, 0));
        assert_eq!(s.mean_clips_per_caption, 0.0);
        assert_eq!(s.total_clip_hours, 0.0);
        assert!(s.clips_per_caption_histogram.is_empty());
    }

    #[test]
    fn overflow_bucket_and_domains() {
        let mut pairs: Vec<_> = (0..151).map(|i| pair("popular", "v", i as f64)).collect();
        pairs.extend((0..149).map(|i| pair("busy", "w", i as f64)));
        pairs.push(pair("rare", "x", 0.0));
        let domains = HashMap::from([("v".to_string(), "Music".to_string())]);
        let s = compute_stats_with_domains(
            &DatasetManifest::new(pairs, MiningConfig::default()),
            &domains,
        );
        assert_eq!(
            s.clips_per_caption_histogram,
            BTreeMap::from([
                (ClipsBucket::Exact(1), 1),
                (ClipsBucket::Exact(149), 1),
                (ClipsBucket::Overflow, 1),
            ])
        );
        assert_eq!(s.domain_distribution["Music"], 151);
        assert_eq!(s.domain_distribution["Other"], 150);
    }

    #[test]
    fn bucket_text_form() {
        for b in [ClipsBucket::Exact(1), ClipsBucket::Exact(149), ClipsBucket::Overflow] {
            assert_eq!(b.to_string().parse::<ClipsBucket>().unwrap(), b);
        }
        assert!("150".parse::<ClipsBucket>().is_err());
        assert!(ClipsBucket::Exact(149) < ClipsBucket::Overflow);
    }
}
