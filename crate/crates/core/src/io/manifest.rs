//! Manifest file: a header line with the producing config and counters,
//! then one [`MinedPair`] per line.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{create_file, flush, numbered_lines, open_file, parse_record, write_record};
use crate::error::{Error, Result};
use crate::types::{Counters, DatasetManifest, MinedPair, MiningConfig};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    kind: String,
    version: u32,
    config: MiningConfig,
    counters: Counters,
}

pub fn write_manifest<W: Write>(manifest: &DatasetManifest, mut out: W) -> Result<()> {
    let header = Header {
        kind: "manifest".into(),
        version: MANIFEST_VERSION,
        config: manifest.config.clone(),
        counters: manifest.counters,
    };
    write_record(&mut out, &header)?;
    for pair in &manifest.pairs {
        write_record(&mut out, pair)?;
    }
    flush(&mut out)
}

/// Reads a manifest verbatim; stored counters are kept as-is (see `validate_manifest`).
pub fn read_manifest<R: BufRead>(input: R) -> Result<DatasetManifest> {
    let mut lines = numbered_lines(input);
    let (line_no, first) = lines
        .next()
        .ok_or_else(|| Error::format(None, "empty manifest"))??;
    let header: Header = parse_record(line_no, &first)?;
    if header.kind != "manifest" {
        return Err(Error::format(
            Some(line_no),
            format!("expected a manifest header, found kind `{}`", header.kind),
        ));
    }
    if header.version != MANIFEST_VERSION {
        return Err(Error::format(
            Some(line_no),
            format!("unsupported manifest version {}", header.version),
        ));
    }
    let pairs = lines
        .map(|line| {
            let (line_no, line) = line?;
            parse_record::<MinedPair>(line_no, &line)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DatasetManifest {
        pairs,
        config: header.config,
        counters: header.counters,
    })
}

pub fn write_manifest_file(manifest: &DatasetManifest, path: &Path) -> Result<()> {
    write_manifest(manifest, create_file(path)?).map_err(|e| e.in_file(path))
}

pub fn read_manifest_file(path: &Path) -> Result<DatasetManifest> {
    read_manifest(open_file(path)?).map_err(|e| e.in_file(path))
}
