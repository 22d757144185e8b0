use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{from_json, to_json, AnnotationError};
use crate::urn::{parse_cite2_urn, parse_cts_urn, Cite2Urn, CtsUrn};

/// Groups of tokens that translate each other. Group `i` aligns with group `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentRecord {
    pub urn: Cite2Urn,
    pub relations: Vec<Vec<CtsUrn>>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Deserialize)]
struct RawAlignment {
    urn: String,
    relations: Vec<Vec<String>>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

impl AlignmentRecord {
    /// Cross products of each pair of adjacent groups.
    pub fn token_pairs(&self) -> Vec<(&CtsUrn, &CtsUrn)> {
        self.relations
            .windows(2)
            .flat_map(|w| w[0].iter().flat_map(move |a| w[1].iter().map(move |b| (a, b))))
            .collect()
    }

    /// Group sizes in order.
    pub fn group_sizes(&self) -> Vec<usize> {
        self.relations.iter().map(Vec::len).collect()
    }

    /// Tokens in the groups other than the one holding `token`.
    pub fn counterparts(&self, token: &CtsUrn) -> Vec<&CtsUrn> {
        match self.relations.iter().position(|g| g.contains(token)) {
            Some(i) => self.relations.iter().enumerate().filter(|(j, _)| *j != i).flat_map(|(_, g)| g.iter()).collect(),
            None => Vec::new(),
        }
    }
}

pub fn parse_alignments(bytes: &[u8]) -> Result<Vec<AlignmentRecord>, AnnotationError> {
    let raw: Vec<RawAlignment> = from_json(bytes)?;
    raw.into_iter()
        .enumerate()
        .map(|(i, r)| {
            let urn = parse_cite2_urn(&r.urn)
                .map_err(|source| AnnotationError::MalformedUrn { locus: format!("record {i}"), source })?;
            let mut relations = Vec::with_capacity(r.relations.len());
            for (g, group) in r.relations.iter().enumerate() {
                if group.is_empty() {
                    return Err(AnnotationError::Schema(format!("{urn}: group {g} is empty")));
                }
                let mut tokens = Vec::with_capacity(group.len());
                for t in group {
                    let u = parse_cts_urn(t).map_err(|source| AnnotationError::MalformedUrn {
                        locus: format!("{urn} group {g}"),
                        source,
                    })?;
                    match u.passage() {
                        Some(p) if !p.is_range() && p.start.token.is_some() => {}
                        _ => return Err(AnnotationError::Schema(format!("{urn}: `{t}` is not a token URN"))),
                    }
                    if let Some(first) = tokens.first() {
                        if !u.same_text(first) {
                            return Err(AnnotationError::Schema(format!("{urn}: group {g} mixes versions")));
                        }
                    }
                    tokens.push(u);
                }
                relations.push(tokens);
            }
            Ok(AlignmentRecord { urn, relations, extra: r.extra })
        })
        .collect()
}

pub fn write_alignments(records: &[AlignmentRecord]) -> Vec<u8> {
    to_json(&records)
}
