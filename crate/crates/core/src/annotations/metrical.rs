//! Character spans inside a row, for analyses whose units cross word
//! boundaries (metrical feet, syllable weights).

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{from_json, to_json, AnnotationError};
use crate::urn::{Cite2Urn, CtsUrn};

/// Zero-width markers with this label may sit inside or between other spans.
pub const BOUNDARY_LABEL: &str = "foot-boundary";

/// Offsets count characters of the NFC row text, end-exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubTokenSpan {
    pub start: u32,
    pub end: u32,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<u32>,
}

impl SubTokenSpan {
    pub fn is_boundary(&self) -> bool {
        self.label == BOUNDARY_LABEL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubTokenSpanAnnotation {
    pub urn: Cite2Urn,
    /// The row the offsets index into.
    #[serde(rename = "ref")]
    pub target: CtsUrn,
    pub spans: Vec<SubTokenSpan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credit: Option<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl SubTokenSpanAnnotation {
    /// Largest end offset, checked against the row length at link time.
    pub fn max_end(&self) -> u32 {
        self.spans.iter().map(|s| s.end).max().unwrap_or(0)
    }

    fn validate(&self) -> Result<(), AnnotationError> {
        match self.target.passage() {
            Some(p) if !p.is_range() && p.start.token.is_none() => {}
            _ => return Err(AnnotationError::Schema(format!("{}: ref must name a single row", self.urn))),
        }
        for s in &self.spans {
            if s.end < s.start {
                return Err(AnnotationError::Schema(format!(
                    "{}: span {}-{} ends before it starts",
                    self.urn, s.start, s.end
                )));
            }
        }
        if self.spans.windows(2).any(|w| w[1].start < w[0].start) {
            return Err(AnnotationError::OverlappingSpans(format!("{}: spans out of order", self.urn)));
        }
        let mut last_end = 0;
        for s in self.spans.iter().filter(|s| !s.is_boundary()) {
            if s.start == s.end {
                return Err(AnnotationError::Schema(format!("{}: empty `{}` span at {}", self.urn, s.label, s.start)));
            }
            if s.start < last_end {
                return Err(AnnotationError::OverlappingSpans(format!("{}: span {}-{}", self.urn, s.start, s.end)));
            }
            last_end = s.end;
        }
        Ok(())
    }
}

pub fn parse_subtoken_spans(bytes: &[u8]) -> Result<Vec<SubTokenSpanAnnotation>, AnnotationError> {
    let records: Vec<SubTokenSpanAnnotation> = from_json(bytes)?;
    for r in &records {
        r.validate()?;
    }
    Ok(records)
}

pub fn write_subtoken_spans(records: &[SubTokenSpanAnnotation]) -> Vec<u8> {
    to_json(&records)
}
