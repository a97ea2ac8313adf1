//! Acceptance gate: runs every headline criterion and prints one PASS/FAIL line each.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use clipmine::eval::{equally_spaced_indices, recall_at_k};
use clipmine::index::search_backends;
use clipmine::io::{self, reports};
use clipmine::parallel::with_thread_budget;
use clipmine::stats::{
    compute_stats, score_review, sweep, RelevanceScore, ReviewItem, ReviewSample, SweepAxis,
};
use clipmine::{
    extract_clip, mine, validate_manifest, DatasetManifest, EmbeddingVector, FrameIndex,
    MiningConfig, NormPolicy,
};
use common::*;
use rand::Rng;

fn planted_recovery() {
    let p = planted(7, 1000, 100, 64, 50, 3, 0.005);
    let frames: usize = p.streams.iter().map(|s| s.frames().len()).sum();
    assert!((95_000..=105_000).contains(&frames), "{frames} frames");
    let config = MiningConfig {
        tau: 0.95,
        ..MiningConfig::default()
    };
    let start = Instant::now();
    let manifest = with_thread_budget(1, || {
        let index = FrameIndex::build(&p.streams, true, 1).unwrap();
        mine(&p.seeds, &index, &config).unwrap()
    })
    .unwrap();
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");

    let got: BTreeSet<_> = manifest
        .pairs
        .iter()
        .map(|m| (m.seed_id.clone(), m.video_id.clone(), m.matched_frame_s as u64))
        .collect();
    assert_eq!(manifest.pairs.len(), 150);
    assert_eq!(got, p.expected);
    assert!(manifest.pairs.iter().all(|m| m.similarity >= 0.95));
    let captions: BTreeMap<_, _> = p.seeds.iter().map(|s| (s.seed_id(), s.caption())).collect();
    assert!(manifest.pairs.iter().all(|m| captions[m.seed_id.as_str()] == m.caption));
    assert!(validate_manifest(&manifest).is_empty());
    println!("      planted recovery: 150/150 pairs in {elapsed:.2?} on one thread");
}

fn brute_force_equivalence() {
    let mut r = rng(11);
    let streams = corpus(&mut r, 1000, 100, 32);
    let frames: usize = streams.iter().map(|s| s.frames().len()).sum();
    assert!((95_000..=105_000).contains(&frames), "{frames} frames");
    let seeds: Vec<EmbeddingVector> = (0..100).map(|_| unit_vector(&mut r, 32)).collect();

    for (tau, top_k) in [(0.3, 50), (0.55, usize::MAX)] {
        let oracle: Vec<Vec<(String, u64, u64)>> = seeds
            .iter()
            .map(|q| {
                brute_force(&streams, q.values(), tau, top_k)
                    .into_iter()
                    .map(|(v, t, s)| (v, t.to_bits(), s.to_bits()))
                    .collect()
            })
            .collect();
        assert!(oracle.iter().any(|o| !o.is_empty()));
        for shards in [1, 4, 16] {
            let index = FrameIndex::build(&streams, true, shards).unwrap();
            for threads in [1, 8] {
                let backends = search_backends();
                for name in backends.names() {
                    let backend = backends.get(name).unwrap();
                    let got = with_thread_budget(threads, || {
                        index.query_batch_with(backend, &seeds, tau, top_k).unwrap()
                    })
                    .unwrap();
                    let got: Vec<Vec<(String, u64, u64)>> = got
                        .into_iter()
                        .map(|ms| {
                            ms.into_iter()
                                .map(|m| {
                                    (m.video_id.to_string(), m.timestamp_s.to_bits(), m.similarity.to_bits())
                                })
                                .collect()
                        })
                        .collect();
                    assert!(
                        got == oracle,
                        "tau {tau}, shards {shards}, threads {threads}, backend {name}"
                    );
                }
            }
        }
    }
}

fn default_parameters() {
    let out = Command::new(env!("CARGO_BIN_EXE_clipmine"))
        .arg("--show-defaults")
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: toml::Value = String::from_utf8(out.stdout).unwrap().parse().unwrap();
    let get = |section: &str, key: &str| v[section][key].clone();
    assert_eq!(get("mining", "tau").as_float(), Some(0.6));
    assert_eq!(get("mining", "t_span_s").as_float(), Some(10.0));
    assert_eq!(get("mining", "top_k").as_integer(), Some(10));
    assert_eq!(get("mining", "frame_rate_hz").as_float(), Some(1.0));
    assert_eq!(get("eval", "k_clips").as_integer(), Some(4));
    assert_eq!(get("filter", "min_viewcount").as_integer(), Some(1000));
    assert_eq!(get("filter", "max_length_s").as_float(), Some(1200.0));
    assert_eq!(get("filter", "min_age_days").as_integer(), Some(90));
    assert_eq!(get("filter", "max_age_days").as_integer(), Some(3650));
    assert_eq!(get("filter", "require_content_ok").as_bool(), Some(true));
}

fn threshold_sweep_monotonicity() {
    let taus = [0.5, 0.6, 0.7, 0.8, 0.9];
    for seed in 0..5 {
        let p = planted(100 + seed, 40, 60, 8, 10, 3, 0.2);
        let index = FrameIndex::build(&p.streams, true, 4).unwrap();
        let result = sweep(&p.seeds, &index, &MiningConfig::default(), SweepAxis::Tau, &taus).unwrap();
        assert!(result.is_non_increasing(), "{:?}", result.points);
    }

    // Cosines between uniform directions in 3-D are uniform on [-1, 1].
    let mut r = rng(23);
    let streams = corpus(&mut r, 20, 200, 3);
    let seeds = seeds(&mut r, 20, 3);
    let index = FrameIndex::build(&streams, true, 4).unwrap();
    let base = MiningConfig {
        top_k: 100_000,
        nms_window_s: 0.0,
        ..MiningConfig::default()
    };
    let result = sweep(&seeds, &index, &base, SweepAxis::Tau, &taus).unwrap();
    assert!(result.is_strictly_decreasing(), "{:?}", result.points);
    let counts: Vec<_> = result.points.iter().map(|p| p.n_pairs).collect();
    println!("      uniform corpus n_pairs over tau 0.5..0.9: {counts:?}");
}

fn clip_geometry() {
    assert_eq!(extract_clip(35.0, 60.0, 10.0), (30.0, 40.0));
    assert_eq!(extract_clip(2.0, 60.0, 10.0), (0.0, 10.0));
    assert_eq!(extract_clip(4.0, 7.0, 10.0), (0.0, 7.0));

    let mut r = rng(5);
    for _ in 0..10_000 {
        let d: f64 = r.gen_range(0.5..2000.0);
        let m: f64 = if r.gen_bool(0.2) {
            [0.0, d][r.gen_range(0..2)]
        } else {
            r.gen_range(0.0..=d)
        };
        let t: f64 = r.gen_range(0.1..60.0);
        let (s, e) = extract_clip(m, d, t);
        let len = t.min(d);
        assert!(((e - s) - len).abs() <= 1e-9, "({m}, {d}, {t}) -> ({s}, {e})");
        assert!(0.0 <= s && s <= m && m <= e && e <= d, "({m}, {d}, {t}) -> ({s}, {e})");
        if m - t / 2.0 >= 0.0 && m + t / 2.0 <= d {
            assert!(((s + e) / 2.0 - m).abs() <= 1e-9, "not centered: ({m}, {d}, {t})");
        }
    }
}

fn stats_oracle() {
    let mut r = rng(9);
    let mut pairs = random_pairs(&mut r, 9_800, 400, 3_000);
    // One caption past the histogram overflow bucket.
    for mut p in random_pairs(&mut r, 200, 400, 1) {
        p.caption = "a very common caption".into();
        pairs.push(p);
    }
    let manifest = DatasetManifest::new(pairs, MiningConfig::default());
    let stats = compute_stats(&manifest);
    let naive = recount(&manifest.pairs);
    assert_eq!(stats.n_pairs, 10_000);
    assert_eq!(stats.n_pairs, naive.n_pairs);
    assert_eq!(stats.n_unique_clips, naive.n_unique_clips);
    assert_eq!(stats.n_unique_captions, naive.n_unique_captions);
    let rel = (stats.total_clip_hours - naive.total_clip_hours).abs() / naive.total_clip_hours;
    assert!(rel < 1e-12, "{} vs {}", stats.total_clip_hours, naive.total_clip_hours);
    let histogram: BTreeMap<String, u64> = stats
        .clips_per_caption_histogram
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
    assert_eq!(histogram, naive.histogram);
    assert_eq!(histogram[">=150"], 1);
    assert_eq!(histogram.values().sum::<u64>(), stats.n_unique_captions);
    assert_eq!(
        stats.mean_clips_per_caption,
        stats.n_pairs as f64 / stats.n_unique_captions as f64
    );
    assert_eq!(stats.domain_distribution, BTreeMap::from([("Other".to_string(), 10_000)]));

    let template = &manifest.pairs[0];
    let items = (0..100)
        .map(|i| ReviewItem {
            pair: template.clone(),
            has_aligned_frame: Some(i < 91),
            relevance_score: Some(RelevanceScore::new(match i {
                0..=8 => 0,
                9..=39 => 1,
                _ => 2,
            })
            .unwrap()),
        })
        .collect();
    let score = score_review(&ReviewSample {
        sample_size: 100,
        rng_seed: 0,
        items,
    })
    .unwrap();
    assert_eq!(score.mean_score, 1.51);
    assert_eq!(score.aligned_fraction, 0.91);
    assert_eq!(score.score_counts, BTreeMap::from([(0, 9), (1, 31), (2, 60)]));
}

fn retrieval_harness() {
    assert_eq!(equally_spaced_indices(10, 4), [0, 3, 6, 9]);

    let mut r = rng(13);
    for _ in 0..1000 {
        let dim = r.gen_range(2..10);
        let n_videos = r.gen_range(1..25);
        let candidates: BTreeMap<String, Vec<EmbeddingVector>> = (0..n_videos)
            .map(|v| {
                let n_clips = r.gen_range(1..12);
                (video_id(v), (0..n_clips).map(|_| unit_vector(&mut r, dim)).collect())
            })
            .collect();
        let queries: Vec<_> = (0..r.gen_range(1..15))
            .map(|_| (unit_vector(&mut r, dim), video_id(r.gen_range(0..n_videos))))
            .collect();
        let rep = recall_at_k(&queries, &candidates, r.gen_range(1..8)).unwrap();
        assert!(rep.r_at[&1] <= rep.r_at[&5] && rep.r_at[&5] <= rep.r_at[&10], "{rep:?}");
    }

    let dim = 16;
    let basis = |i: usize| {
        let mut v = vec![0.0f32; dim];
        v[i] = 1.0;
        EmbeddingVector::normalized(&v).unwrap()
    };
    let candidates: BTreeMap<_, _> = (0..dim).map(|i| (video_id(i), vec![basis(i); 10])).collect();
    let queries: Vec<_> = (0..dim).map(|i| (basis(i), video_id(i))).collect();
    let rep = recall_at_k(&queries, &candidates, 4).unwrap();
    assert_eq!(rep.r_at[&1], 1.0);
}

fn write_twice<T>(value: &T, write: impl Fn(&T, &mut Vec<u8>), read: impl Fn(&[u8]) -> T) -> bool {
    let mut first = Vec::new();
    write(value, &mut first);
    let back = read(&first);
    let mut second = Vec::new();
    write(&back, &mut second);
    first == second
}

fn format_round_trips() {
    let mut r = rng(17);
    for policy in [NormPolicy::Raw, NormPolicy::Unit] {
        let vectors: Vec<_> = (0..50)
            .map(|_| {
                let g = gaussian(&mut r, 24);
                match policy {
                    NormPolicy::Raw => EmbeddingVector::raw(g).unwrap(),
                    NormPolicy::Unit => EmbeddingVector::normalized(&g).unwrap(),
                }
            })
            .collect();
        assert!(write_twice(
            &vectors,
            |v, out| {
                io::write_embeddings(out, 24, policy, v).unwrap();
            },
            |b| io::read_embeddings(b).unwrap().1,
        ));
    }

    let p = planted(19, 60, 50, 16, 20, 3, 0.05);
    let index = FrameIndex::build(&p.streams, true, 4).unwrap();
    let config = MiningConfig {
        tau: 0.3,
        ..MiningConfig::default()
    };
    let manifest = mine(&p.seeds, &index, &config).unwrap();
    assert!(manifest.pairs.len() > 60);
    assert!(write_twice(
        &manifest,
        |m, out| io::write_manifest(m, out).unwrap(),
        |b| io::read_manifest(b).unwrap(),
    ));
    let stats = compute_stats(&manifest);
    assert!(write_twice(
        &stats,
        |s, out| reports::write_stats(s, out).unwrap(),
        |b| reports::read_stats(b).unwrap(),
    ));
    let result = sweep(&p.seeds, &index, &config, SweepAxis::TSpan, &[2.5, 5.0, 10.0, 20.0]).unwrap();
    assert!(write_twice(
        &result,
        |s, out| reports::write_sweep(s, out).unwrap(),
        |b| reports::read_sweep(b).unwrap(),
    ));
}

fn main() -> ExitCode {
    let criteria: [(&str, fn()); 8] = [
        ("planted-recovery oracle", planted_recovery),
        ("brute-force equivalence", brute_force_equivalence),
        ("default parameters", default_parameters),
        ("threshold-sweep monotonicity", threshold_sweep_monotonicity),
        ("clip geometry", clip_geometry),
        ("stats oracle", stats_oracle),
        ("retrieval harness", retrieval_harness),
        ("format round-trips", format_round_trips),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        match panic::catch_unwind(AssertUnwindSafe(check)) {
            Ok(()) => println!("PASS  {name}"),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("FAIL  {name}: {msg}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
