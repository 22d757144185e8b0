use serde::{Deserialize, Serialize};

use super::{utf8, AnnotationError};
use crate::urn::{parse_cts_urn, CtsUrn};

/// A passage paired with a recording of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AudioAnnotation {
    pub target: CtsUrn,
    pub media_url: String,
}

/// Two tab-separated columns per line: passage URN, media URL.
pub fn parse_audio_tsv(bytes: &[u8]) -> Result<Vec<AudioAnnotation>, AnnotationError> {
    let text = utf8(bytes)?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() != 2 {
            return Err(AnnotationError::BadColumnCount { line, expected: 2, found: cols.len() });
        }
        let target = parse_cts_urn(cols[0].trim())
            .map_err(|source| AnnotationError::MalformedUrn { locus: format!("line {line}"), source })?;
        if target.passage().is_none() {
            return Err(AnnotationError::Schema(format!("line {line}: `{target}` has no passage")));
        }
        let media_url = cols[1].trim().to_string();
        if media_url.is_empty() {
            return Err(AnnotationError::Schema(format!("line {line}: empty media URL")));
        }
        out.push(AudioAnnotation { target, media_url });
    }
    Ok(out)
}

pub fn write_audio_tsv(records: &[AudioAnnotation]) -> Vec<u8> {
    records.iter().map(|a| format!("{}\t{}\n", a.target, a.media_url)).collect::<String>().into_bytes()
}
