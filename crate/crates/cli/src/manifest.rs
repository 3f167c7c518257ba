//! JSON Lines manifest: a header object followed by one utterance per line.
//!
//! ```text
//! {"format":"voicepipe-manifest","version":1}
//! {"id":"utt0000","audio_duration_s":6.1,"reference_transcript":"...","speaker_tag":"spk0","expected_doc_id":"rfc793"}
//! ```

use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use thiserror::Error;
use voicepipe::domain::manifest_violations;
use voicepipe::UtteranceRecord;

pub const MANIFEST_FORMAT: &str = "voicepipe-manifest";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("manifest has no header line")]
    MissingHeader,
    #[error("line 1: not a {MANIFEST_FORMAT} header: {0}")]
    BadHeader(String),
    #[error("unsupported manifest version {0} (expected {MANIFEST_VERSION})")]
    Version(u32),
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
    #[error("invalid manifest: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

pub fn write_manifest(rows: &[UtteranceRecord], mut out: impl Write) -> io::Result<()> {
    let header = Header {
        format: MANIFEST_FORMAT.into(),
        version: MANIFEST_VERSION,
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn parse_manifest(text: &str) -> Result<Vec<UtteranceRecord>, ManifestError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let Some((_, first)) = lines.next() else {
        return Err(ManifestError::MissingHeader);
    };
    let header: Header =
        serde_json::from_str(first).map_err(|e| ManifestError::BadHeader(e.to_string()))?;
    if header.format != MANIFEST_FORMAT {
        return Err(ManifestError::BadHeader(format!(
            "format {:?}",
            header.format
        )));
    }
    if header.version != MANIFEST_VERSION {
        return Err(ManifestError::Version(header.version));
    }
    let rows = lines
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ManifestError::Row {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<UtteranceRecord>, _>>()?;
    let violations = manifest_violations(&rows);
    if !violations.is_empty() {
        return Err(ManifestError::Invalid(violations));
    }
    Ok(rows)
}

pub fn load_manifest(path: &Path) -> Result<Vec<UtteranceRecord>, ManifestError> {
    parse_manifest(&fs::read_to_string(path)?)
}
