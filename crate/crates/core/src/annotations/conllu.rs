//! CoNLL-U in two dialects.
//!
//! The standard dialect has ten columns, 1-based ids and a `# sent_id =` comment
//! per sentence. The other dialect puts the passage reference in a leading
//! column, numbers tokens from 0 and orders the columns
//! `ref id form upos xpos feats lemma deprel head deps misc`. Both load into the
//! same 1-based model.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{utf8, AnnotationError};
use crate::urn::{parse_cts_urn, CtsUrn, DottedRef};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConlluToken {
    /// 1-based.
    pub index: u32,
    pub form: String,
    pub lemma: Option<String>,
    pub upos: Option<String>,
    pub xpos: Option<String>,
    pub feats: BTreeMap<String, String>,
    /// 0 is the root; `None` when the token was left unannotated.
    pub head: Option<u32>,
    pub deprel: Option<String>,
    pub deps: Option<String>,
    pub misc: Option<String>,
}

impl ConlluToken {
    pub fn is_partial(&self) -> bool {
        self.head.is_none() || self.deprel.is_none() || self.lemma.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceAnalysis {
    #[serde(rename = "ref")]
    pub reference: DottedRef,
    /// Set when the sentence id was a full CTS URN.
    #[serde(skip)]
    pub version: Option<CtsUrn>,
    pub tokens: Vec<ConlluToken>,
}

fn opt(field: &str) -> Option<String> {
    match field.trim() {
        "" | "_" => None,
        s => Some(s.to_string()),
    }
}

fn parse_feats(field: &str, line: usize) -> Result<BTreeMap<String, String>, AnnotationError> {
    let mut feats = BTreeMap::new();
    let field = field.trim();
    if field.is_empty() || field == "_" {
        return Ok(feats);
    }
    for pair in field.split(['|', ' ']).filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| AnnotationError::Schema(format!("line {line}: feature `{pair}` is not key=value")))?;
        if feats.insert(k.to_string(), v.to_string()).is_some() {
            return Err(AnnotationError::Schema(format!("line {line}: feature `{k}` repeated")));
        }
    }
    Ok(feats)
}

fn parse_sent_id(id: &str, line: usize) -> Result<(DottedRef, Option<CtsUrn>), AnnotationError> {
    let bad = |source| AnnotationError::MalformedUrn { locus: format!("line {line}"), source };
    if id.to_ascii_lowercase().starts_with("urn:") {
        let urn = parse_cts_urn(id).map_err(bad)?;
        let passage = urn
            .passage()
            .filter(|p| !p.is_range() && p.start.token.is_none())
            .ok_or_else(|| AnnotationError::Schema(format!("line {line}: sent_id `{id}` is not a passage URN")))?;
        Ok((passage.start.reference.clone(), Some(urn.without_passage())))
    } else {
        Ok((id.parse().map_err(bad)?, None))
    }
}

struct Builder {
    reference: DottedRef,
    version: Option<CtsUrn>,
    tokens: Vec<ConlluToken>,
    head_lines: Vec<usize>,
}

impl Builder {
    fn finish(self) -> Result<SentenceAnalysis, AnnotationError> {
        let len = self.tokens.len();
        for (t, &line) in self.tokens.iter().zip(&self.head_lines) {
            if let Some(head) = t.head {
                if head as usize > len {
                    return Err(AnnotationError::HeadOutOfRange { line, head, len });
                }
            }
        }
        Ok(SentenceAnalysis { reference: self.reference, version: self.version, tokens: self.tokens })
    }
}

fn parse_index(field: &str, expected: u32, line: usize) -> Result<(), AnnotationError> {
    match field.trim().parse::<u32>() {
        Ok(n) if n == expected => Ok(()),
        _ => Err(AnnotationError::NonContiguousIndices { line, expected, found: field.to_string() }),
    }
}

fn parse_head(field: &str, shift: u32, line: usize) -> Result<Option<u32>, AnnotationError> {
    match opt(field) {
        None => Ok(None),
        Some(s) => s
            .parse::<u32>()
            .map(|h| Some(h + shift))
            .map_err(|_| AnnotationError::Schema(format!("line {line}: head `{s}` is not a number"))),
    }
}

pub fn parse_conllu(bytes: &[u8]) -> Result<Vec<SentenceAnalysis>, AnnotationError> {
    let text = utf8(bytes)?;
    let mut out = Vec::new();
    let mut current: Option<Builder> = None;
    let mut pending_id: Option<(DottedRef, Option<CtsUrn>)> = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() {
            if let Some(b) = current.take() {
                out.push(b.finish()?);
            }
            continue;
        }
        if let Some(comment) = raw.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "sent_id" {
                    if let Some(b) = current.take() {
                        out.push(b.finish()?);
                    }
                    pending_id = Some(parse_sent_id(value.trim(), line)?);
                }
            }
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        match cols.len() {
            10 => {
                let id = cols[0].trim();
                // multiword tokens and empty nodes carry no analysis of their own
                if id.contains('-') || id.contains('.') {
                    continue;
                }
                let b = match &mut current {
                    Some(b) => b,
                    None => {
                        let (reference, version) = pending_id
                            .take()
                            .ok_or_else(|| AnnotationError::Schema(format!("line {line}: sentence has no sent_id")))?;
                        current.insert(Builder { reference, version, tokens: Vec::new(), head_lines: Vec::new() })
                    }
                };
                let expected = b.tokens.len() as u32 + 1;
                parse_index(id, expected, line)?;
                b.tokens.push(ConlluToken {
                    index: expected,
                    form: cols[1].to_string(),
                    lemma: opt(cols[2]),
                    upos: opt(cols[3]),
                    xpos: opt(cols[4]),
                    feats: parse_feats(cols[5], line)?,
                    head: parse_head(cols[6], 0, line)?,
                    deprel: opt(cols[7]),
                    deps: opt(cols[8]),
                    misc: opt(cols[9]),
                });
                b.head_lines.push(line);
            }
            11 => {
                let reference: DottedRef = cols[0]
                    .trim()
                    .parse()
                    .map_err(|source| AnnotationError::MalformedUrn { locus: format!("line {line}"), source })?;
                if current.as_ref().is_some_and(|b| b.reference != reference) {
                    out.push(current.take().expect("checked above").finish()?);
                }
                let b = current.get_or_insert_with(|| Builder {
                    reference,
                    version: None,
                    tokens: Vec::new(),
                    head_lines: Vec::new(),
                });
                let expected = b.tokens.len() as u32;
                parse_index(cols[1], expected, line)?;
                b.tokens.push(ConlluToken {
                    index: expected + 1,
                    form: cols[2].to_string(),
                    upos: opt(cols[3]),
                    xpos: opt(cols[4]),
                    feats: parse_feats(cols[5], line)?,
                    lemma: opt(cols[6]),
                    deprel: opt(cols[7]),
                    head: parse_head(cols[8], 1, line)?,
                    deps: opt(cols[9]),
                    misc: opt(cols[10]),
                });
                b.head_lines.push(line);
            }
            found => return Err(AnnotationError::ColumnCount { line, found }),
        }
    }
    if let Some(b) = current.take() {
        out.push(b.finish()?);
    }
    Ok(out)
}

fn or_blank(v: &Option<String>) -> &str {
    v.as_deref().unwrap_or("_")
}

/// Writes the standard dialect.
pub fn write_conllu(sentences: &[SentenceAnalysis]) -> Vec<u8> {
    let mut out = String::new();
    for s in sentences {
        let id = match &s.version {
            Some(v) => v
                .with_passage(crate::urn::PassageRef::point(crate::urn::PassagePoint::new(s.reference.clone())))
                .to_string(),
            None => s.reference.to_string(),
        };
        out.push_str(&format!("# sent_id = {id}\n"));
        for t in &s.tokens {
            let feats = if t.feats.is_empty() {
                "_".to_string()
            } else {
                t.feats.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join("|")
            };
            let head = t.head.map_or("_".to_string(), |h| h.to_string());
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                t.index,
                t.form,
                or_blank(&t.lemma),
                or_blank(&t.upos),
                or_blank(&t.xpos),
                feats,
                head,
                or_blank(&t.deprel),
                or_blank(&t.deps),
                or_blank(&t.misc),
            ));
        }
        out.push('\n');
    }
    out.into_bytes()
}
