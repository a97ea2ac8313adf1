//! Text sidecars that pair rows of an embedding file with captions, timestamps and ids.
//!
//! Seed sidecar: one `{"seed_id","caption","row"}` object per line.
//!
//! Frame sidecar: a header line `{"video_id","duration_s","metadata"}` followed
//! by one `{"row","timestamp_s"}` line per frame, in timestamp order.
//!
//! Query sidecar: one `{"query_id","video_id","row"}` object per line.
//!
//! A frames directory holds one `<name>.embd` / `<name>.frames.jsonl` pair per video.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::embedding::{read_embeddings_file, write_embeddings_file};
use super::{create_file, flush, numbered_lines, open_file, parse_record, write_record};
use crate::error::{Error, Result};
use crate::types::{
    check_seed_set, EmbeddingVector, Frame, FrameStream, NormPolicy, SeedRecord, VideoMetadata,
};

pub const FRAME_SIDECAR_SUFFIX: &str = ".frames.jsonl";
pub const EMBEDDING_SUFFIX: &str = ".embd";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeedLine {
    seed_id: String,
    caption: String,
    row: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameHeaderLine {
    video_id: String,
    duration_s: f64,
    #[serde(default)]
    metadata: VideoMetadata,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameLine {
    row: u64,
    timestamp_s: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryLine {
    query_id: String,
    video_id: String,
    row: u64,
}

/// A retrieval query: an embedding whose correct answer is `video_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub query_id: String,
    pub video_id: String,
    pub embedding: EmbeddingVector,
}

fn row_of(vectors: &[EmbeddingVector], row: u64, line_no: usize) -> Result<EmbeddingVector> {
    usize::try_from(row)
        .ok()
        .and_then(|r| vectors.get(r))
        .cloned()
        .ok_or_else(|| {
            Error::format(
                Some(line_no),
                format!("row {row} out of range (file has {} rows)", vectors.len()),
            )
        })
}

pub fn read_seed_set_from<R: BufRead>(
    vectors: &[EmbeddingVector],
    sidecar: R,
) -> Result<Vec<SeedRecord>> {
    let mut seeds = Vec::new();
    let mut ids = BTreeSet::new();
    for line in numbered_lines(sidecar) {
        let (line_no, line) = line?;
        let rec: SeedLine = parse_record(line_no, &line)?;
        if !ids.insert(rec.seed_id.clone()) {
            return Err(Error::format(
                Some(line_no),
                format!("duplicate seed_id `{}`", rec.seed_id),
            ));
        }
        let embedding = row_of(vectors, rec.row, line_no)?;
        let seed = SeedRecord::new(rec.seed_id, rec.caption, embedding)
            .map_err(|e| Error::format(Some(line_no), e.to_string()))?;
        seeds.push(seed);
    }
    Ok(seeds)
}

/// Loads seed records from an embedding file plus its caption sidecar.
pub fn read_seed_set(embedding_file: &Path, caption_sidecar: &Path) -> Result<Vec<SeedRecord>> {
    let (_, vectors) = read_embeddings_file(embedding_file)?;
    read_seed_set_from(&vectors, open_file(caption_sidecar)?)
        .map_err(|e| e.in_file(caption_sidecar))
}

/// Writes seeds as rows `0..n` of `embedding_file`, in input order.
pub fn write_seed_set(
    seeds: &[SeedRecord],
    embedding_file: &Path,
    caption_sidecar: &Path,
) -> Result<()> {
    let first = seeds.first().ok_or(Error::Empty("seed set"))?;
    check_seed_set(seeds)?;
    let vectors: Vec<_> = seeds.iter().map(|s| s.embedding().clone()).collect();
    write_embeddings_file(
        embedding_file,
        first.embedding().dim(),
        first.embedding().norm_policy(),
        &vectors,
    )?;
    let mut out = create_file(caption_sidecar)?;
    for (row, seed) in seeds.iter().enumerate() {
        let line = SeedLine {
            seed_id: seed.seed_id().to_owned(),
            caption: seed.caption().to_owned(),
            row: row as u64,
        };
        write_record(&mut out, &line).map_err(|e| e.in_file(caption_sidecar))?;
    }
    flush(&mut out).map_err(|e| e.in_file(caption_sidecar))
}

pub fn read_frame_stream_from<R: BufRead>(
    vectors: &[EmbeddingVector],
    sidecar: R,
) -> Result<FrameStream> {
    let mut lines = numbered_lines(sidecar);
    let (line_no, header) = lines
        .next()
        .ok_or_else(|| Error::format(None, "empty frame sidecar"))??;
    let header: FrameHeaderLine = parse_record(line_no, &header)?;
    let mut frames = Vec::new();
    for line in lines {
        let (line_no, line) = line?;
        let rec: FrameLine = parse_record(line_no, &line)?;
        if let Some(prev) = frames.last().map(|f: &Frame| f.timestamp_s) {
            if rec.timestamp_s <= prev {
                return Err(Error::format(
                    Some(line_no),
                    format!(
                        "timestamps not strictly increasing: {} after {prev}",
                        rec.timestamp_s
                    ),
                ));
            }
        }
        if rec.timestamp_s > header.duration_s {
            return Err(Error::format(
                Some(line_no),
                format!(
                    "timestamp {} beyond duration {}",
                    rec.timestamp_s, header.duration_s
                ),
            ));
        }
        frames.push(Frame {
            timestamp_s: rec.timestamp_s,
            embedding: row_of(vectors, rec.row, line_no)?,
        });
    }
    FrameStream::new(header.video_id, header.duration_s, frames, header.metadata)
        .map_err(|e| Error::format(None, e.to_string()))
}

/// Loads one video's frame stream from its embedding file and frame sidecar.
pub fn read_frame_stream(embedding_file: &Path, frame_sidecar: &Path) -> Result<FrameStream> {
    let (_, vectors) = read_embeddings_file(embedding_file)?;
    read_frame_stream_from(&vectors, open_file(frame_sidecar)?).map_err(|e| e.in_file(frame_sidecar))
}

pub fn write_frame_stream_to<W: Write>(stream: &FrameStream, sidecar: &mut W) -> Result<()> {
    let header = FrameHeaderLine {
        video_id: stream.video_id().to_owned(),
        duration_s: stream.duration_s(),
        metadata: stream.metadata().clone(),
    };
    write_record(sidecar, &header)?;
    for (row, frame) in stream.frames().iter().enumerate() {
        let line = FrameLine {
            row: row as u64,
            timestamp_s: frame.timestamp_s,
        };
        write_record(sidecar, &line)?;
    }
    flush(sidecar)
}

pub fn write_frame_stream(
    stream: &FrameStream,
    embedding_file: &Path,
    frame_sidecar: &Path,
) -> Result<()> {
    let vectors: Vec<_> = stream.frames().iter().map(|f| f.embedding.clone()).collect();
    // A frameless stream still needs a well-formed header; dim 1 is a placeholder.
    let (dim, policy) = vectors
        .first()
        .map(|v| (v.dim(), v.norm_policy()))
        .unwrap_or((1, NormPolicy::Raw));
    write_embeddings_file(embedding_file, dim, policy, &vectors)?;
    let mut out = create_file(frame_sidecar)?;
    write_frame_stream_to(stream, &mut out).map_err(|e| e.in_file(frame_sidecar))
}

/// File stem for a video id: characters outside `[A-Za-z0-9._-]` become `_`.
pub fn file_stem_for(video_id: &str) -> String {
    video_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Reads every `<name>.frames.jsonl` + `<name>.embd` pair in `dir`, sorted by file name.
pub fn read_frame_dir(dir: &Path) -> Result<Vec<FrameStream>> {
    frame_dir_entries(dir)?
        .into_iter()
        .map(|(embd, sidecar)| read_frame_stream(&embd, &sidecar))
        .collect()
}

/// Lists the (embedding file, sidecar) pairs of a frames directory without reading them.
pub fn frame_dir_entries(dir: &Path) -> Result<Vec<(PathBuf, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let mut sidecars = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir.display().to_string(), e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(stem) = name.strip_suffix(FRAME_SIDECAR_SUFFIX) {
            sidecars.push((
                dir.join(format!("{stem}{EMBEDDING_SUFFIX}")),
                entry.path(),
            ));
        }
    }
    sidecars.sort_by(|a, b| a.1.cmp(&b.1));
    Ok(sidecars)
}

/// Writes each stream as a file pair named after its video id.
pub fn write_frame_dir(dir: &Path, streams: &[FrameStream]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let mut stems = BTreeSet::new();
    for stream in streams {
        let stem = file_stem_for(stream.video_id());
        if !stems.insert(stem.clone()) {
            return Err(Error::invalid(
                "stream.video_id",
                format!("`{}` collides with another video's file name", stream.video_id()),
            ));
        }
        write_frame_stream(
            stream,
            &dir.join(format!("{stem}{EMBEDDING_SUFFIX}")),
            &dir.join(format!("{stem}{FRAME_SIDECAR_SUFFIX}")),
        )?;
    }
    Ok(())
}

pub fn read_query_set_from<R: BufRead>(
    vectors: &[EmbeddingVector],
    sidecar: R,
) -> Result<Vec<QueryRecord>> {
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for line in numbered_lines(sidecar) {
        let (line_no, line) = line?;
        let rec: QueryLine = parse_record(line_no, &line)?;
        if !ids.insert(rec.query_id.clone()) {
            return Err(Error::format(
                Some(line_no),
                format!("duplicate query_id `{}`", rec.query_id),
            ));
        }
        out.push(QueryRecord {
            embedding: row_of(vectors, rec.row, line_no)?,
            query_id: rec.query_id,
            video_id: rec.video_id,
        });
    }
    Ok(out)
}

pub fn read_query_set(embedding_file: &Path, sidecar: &Path) -> Result<Vec<QueryRecord>> {
    let (_, vectors) = read_embeddings_file(embedding_file)?;
    read_query_set_from(&vectors, open_file(sidecar)?).map_err(|e| e.in_file(sidecar))
}

pub fn write_query_set(queries: &[QueryRecord], embedding_file: &Path, sidecar: &Path) -> Result<()> {
    let first = queries.first().ok_or(Error::Empty("query set"))?;
    let vectors: Vec<_> = queries.iter().map(|q| q.embedding.clone()).collect();
    write_embeddings_file(
        embedding_file,
        first.embedding.dim(),
        first.embedding.norm_policy(),
        &vectors,
    )?;
    let mut out = create_file(sidecar)?;
    for (row, q) in queries.iter().enumerate() {
        let line = QueryLine {
            query_id: q.query_id.clone(),
            video_id: q.video_id.clone(),
            row: row as u64,
        };
        write_record(&mut out, &line).map_err(|e| e.in_file(sidecar))?;
    }
    flush(&mut out).map_err(|e| e.in_file(sidecar))
}
