//! Readers and writers for every on-disk artifact.
//!
//! Embeddings live in the binary `EMBD` format ([`embedding`]); everything
//! else (sidecars, manifests, reports) is line-delimited JSON with one record
//! per line and a fixed field order, so identical inputs always produce
//! byte-identical files.

pub mod embedding;
pub mod manifest;
pub mod reports;
pub mod sidecar;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub use embedding::{
    read_embeddings, read_embeddings_file, write_embeddings, write_embeddings_file,
    EmbeddingFileHeader,
};
pub use manifest::{read_manifest, read_manifest_file, write_manifest, write_manifest_file};
pub use sidecar::{
    read_frame_dir, read_frame_stream, read_query_set, read_seed_set, write_frame_dir,
    write_frame_stream, write_query_set, write_seed_set, QueryRecord,
};

pub(crate) fn write_record<W: Write, T: Serialize>(out: &mut W, record: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, record)
        .map_err(|e| Error::io("writing record", e.into()))?;
    out.write_all(b"\n")
        .map_err(|e| Error::io("writing record", e))
}

pub(crate) fn parse_record<T: DeserializeOwned>(line_no: usize, line: &str) -> Result<T> {
    serde_json::from_str(line).map_err(|e| Error::format(Some(line_no), e.to_string()))
}

/// Non-empty lines of a text source, numbered from 1.
pub(crate) fn numbered_lines<R: BufRead>(
    input: R,
) -> impl Iterator<Item = Result<(usize, String)>> {
    input
        .lines()
        .enumerate()
        .map(|(i, line)| {
            line.map(|l| (i + 1, l))
                .map_err(|e| Error::io("reading lines", e))
        })
        .filter(|r| !matches!(r, Ok((_, l)) if l.trim().is_empty()))
}

pub(crate) fn create_file(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub(crate) fn open_file(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub(crate) fn flush<W: Write>(out: &mut W) -> Result<()> {
    out.flush().map_err(|e| Error::io("flushing output", e))
}
