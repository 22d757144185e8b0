use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{from_json, to_json, AnnotationError};
use crate::urn::CtsUrn;

/// A grammar entry and the tokens it explains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrammarLink {
    pub entry_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_html: Option<String>,
    pub targets: Vec<CtsUrn>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

pub fn parse_grammar_links(bytes: &[u8]) -> Result<Vec<GrammarLink>, AnnotationError> {
    let links: Vec<GrammarLink> = from_json(bytes)?;
    let mut seen = HashSet::new();
    for l in &links {
        if l.entry_id.is_empty() {
            return Err(AnnotationError::Schema("empty entry_id".into()));
        }
        if !seen.insert(l.entry_id.as_str()) {
            return Err(AnnotationError::DuplicateEntryId(l.entry_id.clone()));
        }
        if l.targets.is_empty() {
            return Err(AnnotationError::Schema(format!("{}: targets is empty", l.entry_id)));
        }
        if let Some(t) = l.targets.iter().find(|t| t.passage().is_none()) {
            return Err(AnnotationError::Schema(format!("{}: target {t} has no passage", l.entry_id)));
        }
    }
    Ok(links)
}

pub fn write_grammar_links(links: &[GrammarLink]) -> Vec<u8> {
    to_json(&links)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_target() {
        let l = parse_grammar_links(
            br#"[{"entry_id": "Gen1", "title": "Possessor", "targets": ["urn:cts:a:b.c.d:1.1.t1"]}]"#,
        )
        .unwrap();
        assert_eq!(l[0].targets.len(), 1);
    }

    #[test]
    fn duplicates_and_empty_targets() {
        let dup = br#"[{"entry_id": "A", "targets": ["urn:cts:a:b.c.d:1.t1"]}, {"entry_id": "A", "targets": ["urn:cts:a:b.c.d:1.t2"]}]"#;
        assert!(matches!(parse_grammar_links(dup), Err(AnnotationError::DuplicateEntryId(id)) if id == "A"));
        let empty = br#"[{"entry_id": "A", "targets": []}]"#;
        assert!(matches!(parse_grammar_links(empty), Err(AnnotationError::Schema(_))));
    }
}
