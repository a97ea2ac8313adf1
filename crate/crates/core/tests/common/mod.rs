//! Synthetic corpora and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use clipmine::{EmbeddingVector, Frame, FrameStream, MinedPair, SeedRecord, VideoMetadata};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, dim: usize) -> Vec<f32> {
    (0..dim).map(|_| rng.sample::<f32, _>(StandardNormal)).collect()
}

/// Uniformly distributed direction on the unit sphere.
pub fn unit_vector(rng: &mut impl Rng, dim: usize) -> EmbeddingVector {
    EmbeddingVector::normalized(&gaussian(rng, dim)).unwrap()
}

pub fn video_id(i: usize) -> String {
    format!("vid{i:05}")
}

/// A stream with one frame per whole second, `0..=floor(duration_s)`.
pub fn stream_with(
    rng: &mut impl Rng,
    id: &str,
    duration_s: f64,
    dim: usize,
    metadata: VideoMetadata,
) -> FrameStream {
    let frames = (0..=duration_s.floor() as u64)
        .map(|t| Frame {
            timestamp_s: t as f64,
            embedding: unit_vector(rng, dim),
        })
        .collect();
    FrameStream::new(id, duration_s, frames, metadata).unwrap()
}

pub fn corpus(rng: &mut impl Rng, n_videos: usize, mean_frames: usize, dim: usize) -> Vec<FrameStream> {
    let spread = (mean_frames / 10).max(1) as f64;
    (0..n_videos)
        .map(|i| {
            let duration = (mean_frames as f64 - 1.0 + rng.gen_range(-spread..spread)).max(1.0);
            let duration = (duration * 10.0).round() / 10.0;
            stream_with(rng, &video_id(i), duration, dim, VideoMetadata::default())
        })
        .collect()
}

pub fn seeds(rng: &mut impl Rng, n: usize, dim: usize) -> Vec<SeedRecord> {
    (0..n)
        .map(|i| {
            SeedRecord::new(format!("seed{i:04}"), format!("caption number {i}"), unit_vector(rng, dim))
                .unwrap()
        })
        .collect()
}

/// A planted corpus: every seed is copied (plus noise of norm `noise`) into
/// `plants_per_seed` distinct videos. Returns the expected
/// `(seed_id, video_id, timestamp)` triples.
pub struct Planted {
    pub streams: Vec<FrameStream>,
    pub seeds: Vec<SeedRecord>,
    pub expected: BTreeSet<(String, String, u64)>,
}

pub fn planted(
    seed: u64,
    n_videos: usize,
    mean_frames: usize,
    dim: usize,
    n_seeds: usize,
    plants_per_seed: usize,
    noise: f64,
) -> Planted {
    let mut rng = rng(seed);
    let mut streams = corpus(&mut rng, n_videos, mean_frames, dim);
    let seeds = seeds(&mut rng, n_seeds, dim);
    let mut videos: Vec<usize> = (0..n_videos).collect();
    videos.shuffle(&mut rng);
    let mut targets = videos.into_iter();
    let mut expected = BTreeSet::new();
    for s in &seeds {
        for _ in 0..plants_per_seed {
            let v = targets.next().expect("enough videos for distinct plants");
            let old = &streams[v];
            let k = rng.gen_range(0..old.frames().len());
            let dir = gaussian(&mut rng, dim);
            let len = dir.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
            let perturbed: Vec<f32> = s
                .embedding()
                .values()
                .iter()
                .zip(&dir)
                .map(|(a, d)| (*a as f64 + *d as f64 / len * noise) as f32)
                .collect();
            let mut frames = old.frames().to_vec();
            frames[k].embedding = EmbeddingVector::normalized(&perturbed).unwrap();
            expected.insert((s.seed_id().to_owned(), old.video_id().to_owned(), frames[k].timestamp_s as u64));
            streams[v] = FrameStream::new(old.video_id(), old.duration_s(), frames, old.metadata().clone()).unwrap();
        }
    }
    Planted { streams, seeds, expected }
}

/// Random metadata straddling the default filter boundaries, with some fields missing.
pub fn random_metadata(rng: &mut impl Rng) -> VideoMetadata {
    let mut pick = |p: f64| rng.gen_bool(p);
    let present = [pick(0.95), pick(0.95), pick(0.95), pick(0.95)];
    VideoMetadata {
        viewcount: present[0].then(|| rng.gen_range(900..1100)),
        length_s: present[1].then(|| rng.gen_range(1100..1300) as f64),
        upload_age_days: present[2].then(|| rng.gen_range(80..3700)),
        content_ok: present[3].then(|| rng.gen_bool(0.9)),
        domain_label: None,
    }
}

/// Independent sequential f64 dot product.
pub fn oracle_dot(a: &[f32], b: &[f32]) -> f64 {
    let mut s = 0.0f64;
    for i in 0..a.len() {
        s += a[i] as f64 * b[i] as f64;
    }
    s
}

/// Exhaustive scan: `(video_id, timestamp, similarity)` for every frame with
/// similarity >= tau, best first, ties by (video_id, timestamp), cut to top_k.
pub fn brute_force(streams: &[FrameStream], query: &[f32], tau: f64, top_k: usize) -> Vec<(String, f64, f64)> {
    let mut all = Vec::new();
    for s in streams {
        for f in s.frames() {
            let sim = oracle_dot(f.embedding.values(), query);
            if sim >= tau {
                all.push((s.video_id().to_owned(), f.timestamp_s, sim));
            }
        }
    }
    all.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap()
            .then_with(|| a.0.cmp(&b.0))
            .then_with(|| a.1.partial_cmp(&b.1).unwrap())
    });
    all.truncate(top_k);
    all
}

/// Pairs with valid clip geometry over a pool of videos and captions.
pub fn random_pairs(rng: &mut impl Rng, n: usize, n_videos: usize, n_captions: usize) -> Vec<MinedPair> {
    let durations: Vec<f64> = (0..n_videos).map(|_| rng.gen_range(3..600) as f64).collect();
    (0..n)
        .map(|i| {
            let v = rng.gen_range(0..n_videos);
            let d = durations[v];
            let m = rng.gen_range(0..=d as u64) as f64;
            let (clip_start_s, clip_end_s) = clipmine::extract_clip(m, d, 10.0);
            MinedPair {
                caption: format!("caption {}", rng.gen_range(0..n_captions)),
                seed_id: format!("s{i}"),
                video_id: video_id(v),
                clip_start_s,
                clip_end_s,
                matched_frame_s: m,
                similarity: rng.gen_range(0.6..=1.0),
            }
        })
        .collect()
}

/// Naive recount of the dataset statistics.
pub struct Recount {
    pub n_pairs: u64,
    pub n_unique_clips: u64,
    pub n_unique_captions: u64,
    pub total_clip_hours: f64,
    pub per_caption: HashMap<String, u64>,
    pub histogram: BTreeMap<String, u64>,
}

pub fn recount(pairs: &[MinedPair]) -> Recount {
    let mut clips: Vec<(String, u64, u64, f64)> = Vec::new();
    for p in pairs {
        let key = (p.video_id.clone(), p.clip_start_s.to_bits(), p.clip_end_s.to_bits());
        if !clips.iter().any(|c| (c.0.as_str(), c.1, c.2) == (key.0.as_str(), key.1, key.2)) {
            clips.push((key.0, key.1, key.2, p.clip_end_s - p.clip_start_s));
        }
    }
    let mut per_caption: HashMap<String, u64> = HashMap::new();
    for p in pairs {
        *per_caption.entry(p.caption.clone()).or_insert(0) += 1;
    }
    let mut histogram = BTreeMap::new();
    for c in per_caption.values() {
        let key = if *c >= 150 { ">=150".to_string() } else { c.to_string() };
        *histogram.entry(key).or_insert(0) += 1;
    }
    Recount {
        n_pairs: pairs.len() as u64,
        n_unique_clips: clips.len() as u64,
        n_unique_captions: per_caption.len() as u64,
        total_clip_hours: clips.iter().map(|c| c.3).sum::<f64>() / 3600.0,
        per_caption,
        histogram,
    }
}
