//! Line-delimited report files: stats, sweeps, recall, review samples and review scores.
//!
//! Every line of a report carries a `"kind"` tag except review items, which
//! are bare records so reviewers can edit them in place.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{create_file, flush, numbered_lines, open_file, parse_record, write_record};
use crate::error::{Error, Result};
use crate::eval::RecallReport;
use crate::stats::{
    ClipsBucket, ReviewItem, ReviewSample, ReviewScore, StatsReport, SweepAxis, SweepPoint,
    SweepResult,
};

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum StatsLine {
    Stats {
        n_pairs: u64,
        n_unique_clips: u64,
        n_unique_captions: u64,
        total_clip_hours: f64,
        mean_clips_per_caption: f64,
    },
    Histogram {
        bucket: ClipsBucket,
        count: u64,
    },
    Domain {
        label: String,
        count: u64,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum SweepLine {
    Sweep {
        axis: SweepAxis,
    },
    Point {
        value: f64,
        n_pairs: u64,
        n_unique_clips: u64,
        n_unique_captions: u64,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum RecallLine {
    Recall { n_queries: usize },
    RecallAt { k: usize, recall: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum ReviewScoreLine {
    ReviewScore {
        sample_size: usize,
        aligned_fraction: f64,
        mean_score: f64,
    },
    ScoreCount {
        score: u8,
        count: u64,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum ReviewHeader {
    ReviewSample { sample_size: usize, rng_seed: u64 },
}

fn read_lines<T: serde::de::DeserializeOwned, R: BufRead>(input: R) -> Result<Vec<(usize, T)>> {
    numbered_lines(input)
        .map(|line| {
            let (no, text) = line?;
            Ok((no, parse_record(no, &text)?))
        })
        .collect()
}

fn missing_header(what: &str) -> Error {
    Error::format(Some(1), format!("expected a {what} header line first"))
}

fn misplaced(line: usize) -> Error {
    Error::format(Some(line), "header line may only appear first")
}

pub fn write_stats<W: Write>(report: &StatsReport, mut out: W) -> Result<()> {
    write_record(
        &mut out,
        &StatsLine::Stats {
            n_pairs: report.n_pairs,
            n_unique_clips: report.n_unique_clips,
            n_unique_captions: report.n_unique_captions,
            total_clip_hours: report.total_clip_hours,
            mean_clips_per_caption: report.mean_clips_per_caption,
        },
    )?;
    for (bucket, count) in &report.clips_per_caption_histogram {
        write_record(
            &mut out,
            &StatsLine::Histogram {
                bucket: *bucket,
                count: *count,
            },
        )?;
    }
    for (label, count) in &report.domain_distribution {
        write_record(
            &mut out,
            &StatsLine::Domain {
                label: label.clone(),
                count: *count,
            },
        )?;
    }
    flush(&mut out)
}

pub fn read_stats<R: BufRead>(input: R) -> Result<StatsReport> {
    let mut lines = read_lines::<StatsLine, _>(input)?.into_iter();
    let Some((_, StatsLine::Stats {
        n_pairs,
        n_unique_clips,
        n_unique_captions,
        total_clip_hours,
        mean_clips_per_caption,
    })) = lines.next()
    else {
        return Err(missing_header("stats"));
    };
    let mut report = StatsReport {
        n_pairs,
        n_unique_clips,
        n_unique_captions,
        total_clip_hours,
        mean_clips_per_caption,
        clips_per_caption_histogram: BTreeMap::new(),
        domain_distribution: BTreeMap::new(),
    };
    for (no, line) in lines {
        match line {
            StatsLine::Stats { .. } => return Err(misplaced(no)),
            StatsLine::Histogram { bucket, count } => {
                report.clips_per_caption_histogram.insert(bucket, count);
            }
            StatsLine::Domain { label, count } => {
                report.domain_distribution.insert(label, count);
            }
        }
    }
    Ok(report)
}

pub fn write_sweep<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    write_record(&mut out, &SweepLine::Sweep { axis: result.axis })?;
    for p in &result.points {
        write_record(
            &mut out,
            &SweepLine::Point {
                value: p.value,
                n_pairs: p.n_pairs,
                n_unique_clips: p.n_unique_clips,
                n_unique_captions: p.n_unique_captions,
            },
        )?;
    }
    flush(&mut out)
}

pub fn read_sweep<R: BufRead>(input: R) -> Result<SweepResult> {
    let mut lines = read_lines::<SweepLine, _>(input)?.into_iter();
    let Some((_, SweepLine::Sweep { axis })) = lines.next() else {
        return Err(missing_header("sweep"));
    };
    let mut points = Vec::new();
    for (no, line) in lines {
        match line {
            SweepLine::Sweep { .. } => return Err(misplaced(no)),
            SweepLine::Point {
                value,
                n_pairs,
                n_unique_clips,
                n_unique_captions,
            } => points.push(SweepPoint {
                value,
                n_pairs,
                n_unique_clips,
                n_unique_captions,
            }),
        }
    }
    Ok(SweepResult { axis, points })
}

pub fn write_recall<W: Write>(report: &RecallReport, mut out: W) -> Result<()> {
    write_record(
        &mut out,
        &RecallLine::Recall {
            n_queries: report.n_queries,
        },
    )?;
    for (k, recall) in &report.r_at {
        write_record(
            &mut out,
            &RecallLine::RecallAt {
                k: *k,
                recall: *recall,
            },
        )?;
    }
    flush(&mut out)
}

pub fn read_recall<R: BufRead>(input: R) -> Result<RecallReport> {
    let mut lines = read_lines::<RecallLine, _>(input)?.into_iter();
    let Some((_, RecallLine::Recall { n_queries })) = lines.next() else {
        return Err(missing_header("recall"));
    };
    let mut r_at = BTreeMap::new();
    for (no, line) in lines {
        match line {
            RecallLine::Recall { .. } => return Err(misplaced(no)),
            RecallLine::RecallAt { k, recall } => {
                r_at.insert(k, recall);
            }
        }
    }
    Ok(RecallReport { n_queries, r_at })
}

pub fn write_review_sample<W: Write>(sample: &ReviewSample, mut out: W) -> Result<()> {
    write_record(
        &mut out,
        &ReviewHeader::ReviewSample {
            sample_size: sample.sample_size,
            rng_seed: sample.rng_seed,
        },
    )?;
    for item in &sample.items {
        write_record(&mut out, item)?;
    }
    flush(&mut out)
}

pub fn read_review_sample<R: BufRead>(input: R) -> Result<ReviewSample> {
    let mut lines = numbered_lines(input);
    let (no, first) = lines.next().ok_or_else(|| missing_header("review-sample"))??;
    let ReviewHeader::ReviewSample {
        sample_size,
        rng_seed,
    } = parse_record(no, &first)?;
    let items = lines
        .map(|line| {
            let (no, text) = line?;
            parse_record::<ReviewItem>(no, &text)
        })
        .collect::<Result<Vec<_>>>()?;
    if items.len() != sample_size {
        return Err(Error::format(
            None,
            format!("header declares {sample_size} items, found {}", items.len()),
        ));
    }
    Ok(ReviewSample {
        sample_size,
        rng_seed,
        items,
    })
}

pub fn write_review_score<W: Write>(score: &ReviewScore, mut out: W) -> Result<()> {
    write_record(
        &mut out,
        &ReviewScoreLine::ReviewScore {
            sample_size: score.sample_size,
            aligned_fraction: score.aligned_fraction,
            mean_score: score.mean_score,
        },
    )?;
    for (s, count) in &score.score_counts {
        write_record(
            &mut out,
            &ReviewScoreLine::ScoreCount {
                score: *s,
                count: *count,
            },
        )?;
    }
    flush(&mut out)
}

pub fn read_review_score<R: BufRead>(input: R) -> Result<ReviewScore> {
    let mut lines = read_lines::<ReviewScoreLine, _>(input)?.into_iter();
    let Some((
        _,
        ReviewScoreLine::ReviewScore {
            sample_size,
            aligned_fraction,
            mean_score,
        },
    )) = lines.next()
    else {
        return Err(missing_header("review-score"));
    };
    let mut score_counts = BTreeMap::new();
    for (no, line) in lines {
        match line {
            ReviewScoreLine::ReviewScore { .. } => return Err(misplaced(no)),
            ReviewScoreLine::ScoreCount { score, count } => {
                score_counts.insert(score, count);
            }
        }
    }
    Ok(ReviewScore {
        sample_size,
        aligned_fraction,
        mean_score,
        score_counts,
    })
}

macro_rules! file_fns {
    ($($write:ident, $write_file:ident, $read:ident, $read_file:ident, $ty:ty;)*) => {$(
        pub fn $write_file(value: &$ty, path: &Path) -> Result<()> {
            $write(value, create_file(path)?).map_err(|e| e.in_file(path))
        }

        pub fn $read_file(path: &Path) -> Result<$ty> {
            $read(open_file(path)?).map_err(|e| e.in_file(path))
        }
    )*};
}

file_fns! {
    write_stats, write_stats_file, read_stats, read_stats_file, StatsReport;
    write_sweep, write_sweep_file, read_sweep, read_sweep_file, SweepResult;
    write_recall, write_recall_file, read_recall, read_recall_file, RecallReport;
    write_review_sample, write_review_sample_file, read_review_sample, read_review_sample_file, ReviewSample;
    write_review_score, write_review_score_file, read_review_score, read_review_score_file, ReviewScore;
}
