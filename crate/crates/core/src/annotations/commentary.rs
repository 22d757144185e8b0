use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{from_json, to_json, AnnotationError};
use crate::urn::{Cite2Urn, CtsUrn, PassagePoint, PassageRef, VeRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommentaryKind {
    Commentary,
    TextualNote,
}

/// `idx` appears both as a string and as a number in the wild.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Idx {
    Number(u64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub value: String,
    pub label: String,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

/// A commentary note, or a textual note when it carries witnesses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommentaryNote {
    pub references: Vec<CtsUrn>,
    #[serde(rename = "commentary", default, skip_serializing_if = "Option::is_none")]
    pub body_html: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fragment: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ve_refs: Option<Vec<VeRef>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idx: Option<Idx>,
    pub urn: Cite2Urn,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witnesses: Option<Vec<Witness>>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl CommentaryNote {
    pub fn kind(&self) -> CommentaryKind {
        match &self.witnesses {
            Some(w) if !w.is_empty() => CommentaryKind::TextualNote,
            _ => CommentaryKind::Commentary,
        }
    }

    /// The reference under which a token ref lies. Range references cannot be
    /// checked without the version's index, so any range is accepted as owner.
    pub fn owning_reference(&self, ve_ref: &VeRef) -> Option<&CtsUrn> {
        let under_point = self.references.iter().find(|r| {
            r.passage().is_some_and(|p| {
                !p.is_range() && p.start.token.is_none() && p.start.reference.is_prefix_of(&ve_ref.reference)
            })
        });
        under_point.or_else(|| self.references.iter().find(|r| r.passage().is_some_and(PassageRef::is_range)))
    }

    /// Token URNs when the note is anchored to tokens, otherwise its references.
    pub fn targets(&self) -> Vec<CtsUrn> {
        match &self.ve_refs {
            Some(refs) if !refs.is_empty() => refs
                .iter()
                .filter_map(|v| {
                    self.owning_reference(v)
                        .map(|r| r.with_passage(PassageRef::point(PassagePoint::token(v.reference.clone(), v.token))))
                })
                .collect(),
            _ => self.references.clone(),
        }
    }

    fn validate(&self) -> Result<(), AnnotationError> {
        if self.references.is_empty() {
            return Err(AnnotationError::Schema(format!("{}: references is empty", self.urn)));
        }
        if let Some(r) = self.references.iter().find(|r| r.passage().is_none()) {
            return Err(AnnotationError::Schema(format!("{}: reference {r} has no passage", self.urn)));
        }
        for v in self.ve_refs.iter().flatten() {
            if self.owning_reference(v).is_none() {
                return Err(AnnotationError::BadVeRef(format!("{}: {v} lies under none of the references", self.urn)));
            }
        }
        Ok(())
    }
}

pub fn parse_commentary(bytes: &[u8]) -> Result<Vec<CommentaryNote>, AnnotationError> {
    let raw: Vec<Value> = from_json(bytes)?;
    let mut notes = Vec::with_capacity(raw.len());
    for (i, v) in raw.into_iter().enumerate() {
        // ve_refs are checked separately so a bad one reports as BadVeRef
        if let Some(refs) = v.get("ve_refs").and_then(Value::as_array) {
            for r in refs {
                let s = r.as_str().unwrap_or_default();
                if s.parse::<VeRef>().is_err() {
                    return Err(AnnotationError::BadVeRef(format!("record {i}: `{s}`")));
                }
            }
        }
        let note: CommentaryNote =
            serde_json::from_value(v).map_err(|e| AnnotationError::Schema(format!("record {i}: {e}")))?;
        note.validate()?;
        notes.push(note);
    }
    Ok(notes)
}

pub fn write_commentary(notes: &[CommentaryNote]) -> Vec<u8> {
    to_json(&notes)
}
