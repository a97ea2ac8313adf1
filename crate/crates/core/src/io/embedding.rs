//! The `EMBD` binary embedding file.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size | field                          |
//! |--------|------|--------------------------------|
//! | 0      | 4    | magic `"EMBD"`                 |
//! | 4      | 4    | version, `u32` = 1             |
//! | 8      | 4    | dim, `u32`                     |
//! | 12     | 8    | count, `u64`                   |
//! | 20     | 1    | norm policy (0 raw, 1 unit)    |
//! | 21     | 3    | reserved, zero                 |
//! | 24     | ...  | `count × dim` little-endian `f32`, row-major |

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{EmbeddingVector, NormPolicy};

pub const MAGIC: [u8; 4] = *b"EMBD";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingFileHeader {
    pub dim: u32,
    pub count: u64,
    pub norm_policy: NormPolicy,
}

impl EmbeddingFileHeader {
    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let mut buf = [0u8; HEADER_LEN];
        buf[0..4].copy_from_slice(&MAGIC);
        buf[4..8].copy_from_slice(&VERSION.to_le_bytes());
        buf[8..12].copy_from_slice(&self.dim.to_le_bytes());
        buf[12..20].copy_from_slice(&self.count.to_le_bytes());
        buf[20] = self.norm_policy.as_byte();
        buf
    }

    pub fn decode(buf: &[u8; HEADER_LEN]) -> Result<Self> {
        if buf[0..4] != MAGIC {
            return Err(Error::format(None, "bad magic, not an EMBD file"));
        }
        let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::format(
                None,
                format!("unsupported version {version}"),
            ));
        }
        let dim = u32::from_le_bytes(buf[8..12].try_into().unwrap());
        if dim == 0 {
            return Err(Error::format(None, "dim must be > 0"));
        }
        let count = u64::from_le_bytes(buf[12..20].try_into().unwrap());
        let norm_policy = NormPolicy::from_byte(buf[20])
            .ok_or_else(|| Error::format(None, format!("bad norm policy byte {}", buf[20])))?;
        if buf[21..].iter().any(|&b| b != 0) {
            return Err(Error::format(None, "reserved header bytes are not zero"));
        }
        Ok(Self {
            dim,
            count,
            norm_policy,
        })
    }

    pub fn payload_len(&self) -> u64 {
        self.count * u64::from(self.dim) * 4
    }
}

/// Writes `vectors` and returns the number of bytes written.
///
/// `dim` and `norm_policy` are declared up front so an empty file still
/// carries a meaningful header.
pub fn write_embeddings<W: Write>(
    mut out: W,
    dim: usize,
    norm_policy: NormPolicy,
    vectors: &[EmbeddingVector],
) -> Result<u64> {
    if dim == 0 {
        return Err(Error::invalid("embedding.dim", "dimension must be > 0"));
    }
    let dim32 = u32::try_from(dim)
        .map_err(|_| Error::invalid("embedding.dim", "dimension exceeds u32"))?;
    for v in vectors {
        if v.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.dim(),
            });
        }
        if v.norm_policy() != norm_policy {
            return Err(Error::invalid(
                "embedding.norm_policy",
                "vectors with mixed norm policies",
            ));
        }
    }
    let header = EmbeddingFileHeader {
        dim: dim32,
        count: vectors.len() as u64,
        norm_policy,
    };
    let io = |e| Error::io("writing embeddings", e);
    out.write_all(&header.encode()).map_err(io)?;
    let mut row = Vec::with_capacity(dim * 4);
    for v in vectors {
        row.clear();
        for x in v.values() {
            row.extend_from_slice(&x.to_le_bytes());
        }
        out.write_all(&row).map_err(io)?;
    }
    out.flush().map_err(io)?;
    Ok(HEADER_LEN as u64 + header.payload_len())
}

pub fn write_embeddings_file(
    path: &Path,
    dim: usize,
    norm_policy: NormPolicy,
    vectors: &[EmbeddingVector],
) -> Result<u64> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    write_embeddings(BufWriter::new(file), dim, norm_policy, vectors).map_err(|e| e.in_file(path))
}

/// Reads a whole embedding file; trailing bytes after the declared payload are an error.
pub fn read_embeddings<R: Read>(
    mut input: R,
) -> Result<(EmbeddingFileHeader, Vec<EmbeddingVector>)> {
    let mut head = [0u8; HEADER_LEN];
    input.read_exact(&mut head).map_err(|e| match e.kind() {
        ErrorKind::UnexpectedEof => Error::format(None, "truncated header"),
        _ => Error::io("reading embeddings", e),
    })?;
    let header = EmbeddingFileHeader::decode(&head)?;
    let dim = header.dim as usize;
    let mut vectors = Vec::new();
    let mut row = vec![0u8; dim * 4];
    for i in 0..header.count {
        input.read_exact(&mut row).map_err(|e| match e.kind() {
            ErrorKind::UnexpectedEof => Error::format(
                None,
                format!("truncated payload at row {i} of {}", header.count),
            ),
            _ => Error::io("reading embeddings", e),
        })?;
        let values = row
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let v = EmbeddingVector::new(values, header.norm_policy).map_err(|e| {
            Error::format(None, format!("row {i}: {e}"))
        })?;
        vectors.push(v);
    }
    let mut extra = [0u8; 1];
    match input.read(&mut extra) {
        Ok(0) => {}
        Ok(_) => return Err(Error::format(None, "trailing bytes after payload")),
        Err(e) => return Err(Error::io("reading embeddings", e)),
    }
    Ok((header, vectors))
}

pub fn read_embeddings_file(path: &Path) -> Result<(EmbeddingFileHeader, Vec<EmbeddingVector>)> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    read_embeddings(BufReader::new(file)).map_err(|e| e.in_file(path))
}
