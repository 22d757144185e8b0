use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{explicit_nullable, from_json, to_json, AnnotationError};
use crate::urn::{Cite2Urn, CtsUrn};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationData {
    /// Display form, e.g. "Il. 12.46".
    #[serde(rename = "ref", default, skip_serializing_if = "Option::is_none")]
    pub display: Option<String>,
    #[serde(default, deserialize_with = "explicit_nullable", skip_serializing_if = "Option::is_none")]
    pub quote: Option<Option<String>>,
    #[serde(rename = "urn", default, skip_serializing_if = "Option::is_none")]
    pub target: Option<CtsUrn>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Citation {
    pub urn: Cite2Urn,
    pub data: CitationData,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sense {
    pub label: String,
    pub urn: Cite2Urn,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub definition: Option<String>,
    #[serde(default)]
    pub citations: Vec<Citation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub children: Option<Vec<Sense>>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl Sense {
    pub fn children(&self) -> &[Sense] {
        self.children.as_deref().unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryData {
    /// Entry body as an opaque HTML string.
    #[serde(rename = "content", default)]
    pub content_html: String,
    #[serde(default)]
    pub senses: Vec<Sense>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryEntry {
    pub headword: String,
    pub data: DictionaryData,
    pub urn: Cite2Urn,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl DictionaryEntry {
    /// Senses in depth-first order.
    pub fn flatten_senses(&self) -> Vec<&Sense> {
        fn walk<'a>(senses: &'a [Sense], out: &mut Vec<&'a Sense>) {
            for s in senses {
                out.push(s);
                walk(s.children(), out);
            }
        }
        let mut out = Vec::new();
        walk(&self.data.senses, &mut out);
        out
    }

    pub fn citation_targets(&self) -> Vec<&CtsUrn> {
        self.flatten_senses()
            .into_iter()
            .flat_map(|s| s.citations.iter().filter_map(|c| c.data.target.as_ref()))
            .collect()
    }

    fn validate(&self) -> Result<(), AnnotationError> {
        let mut seen = HashSet::new();
        for s in self.flatten_senses() {
            if !seen.insert(&s.urn) {
                return Err(AnnotationError::Schema(format!("{}: sense {} repeated", self.urn, s.urn)));
            }
        }
        Ok(())
    }
}

pub fn parse_dictionary(bytes: &[u8]) -> Result<Vec<DictionaryEntry>, AnnotationError> {
    let entries: Vec<DictionaryEntry> = from_json(bytes)?;
    for e in &entries {
        e.validate()?;
    }
    Ok(entries)
}

pub fn write_dictionary(entries: &[DictionaryEntry]) -> Vec<u8> {
    to_json(&entries)
}
