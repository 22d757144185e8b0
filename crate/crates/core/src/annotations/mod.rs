//! Standoff annotation formats.
//!
//! Every format is parsed into a typed record whose targets are CTS URNs, so the
//! catalog can index all of them the same way. JSON formats keep unrecognised
//! fields so a record serializes back to the shape it was read from.

mod alignment;
mod attribution;
mod audio;
mod commentary;
mod conllu;
mod dictionary;
mod grammar;
mod metrical;
mod treebank;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::urn::{CtsUrn, UrnError};

pub use alignment::{parse_alignments, write_alignments, AlignmentRecord};
pub use attribution::{
    parse_attributions, write_attributions, AttributionData, AttributionRecord, Organization, Person,
};
pub use audio::{parse_audio_tsv, write_audio_tsv, AudioAnnotation};
pub use commentary::{parse_commentary, write_commentary, CommentaryKind, CommentaryNote, Idx, Witness};
pub use conllu::{parse_conllu, write_conllu, ConlluToken, SentenceAnalysis};
pub use dictionary::{
    parse_dictionary, write_dictionary, Citation, CitationData, DictionaryData, DictionaryEntry, Sense,
};
pub use grammar::{parse_grammar_links, write_grammar_links, GrammarLink};
pub use metrical::{parse_subtoken_spans, write_subtoken_spans, SubTokenSpan, SubTokenSpanAnnotation, BOUNDARY_LABEL};
pub use treebank::{
    parse_treebank_json, validate_tree, write_treebank_json, SyntaxTree, TreeDiagnostic, TreeWord, ValidationMode,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnnotationError {
    #[error("SchemaError: {0}")]
    Schema(String),
    #[error("BadVeRef: {0}")]
    BadVeRef(String),
    #[error("MalformedUrn at {locus}: {source}")]
    MalformedUrn { locus: String, source: UrnError },
    #[error("BadColumnCount at line {line}: expected {expected} columns, found {found}")]
    BadColumnCount { line: usize, expected: usize, found: usize },
    #[error("ColumnCountError at line {line}: expected 10 or 11 columns, found {found}")]
    ColumnCount { line: usize, found: usize },
    #[error("NonContiguousIndices at line {line}: expected {expected}, found `{found}`")]
    NonContiguousIndices { line: usize, expected: u32, found: String },
    #[error("HeadOutOfRange at line {line}: head {head} in a sentence of {len} tokens")]
    HeadOutOfRange { line: usize, head: u32, len: usize },
    #[error("OverlappingSpans in {0}")]
    OverlappingSpans(String),
    #[error("DuplicateEntryId: {0}")]
    DuplicateEntryId(String),
    #[error("DanglingHead {head} in {tree}")]
    DanglingHead { tree: String, head: u32 },
    #[error("CyclicHeads in {tree}: words {words:?}")]
    CyclicHeads { tree: String, words: Vec<u32> },
    #[error("InvalidUtf8 at byte {0}")]
    InvalidUtf8(usize),
}

pub(crate) fn from_json<'a, T: Deserialize<'a>>(bytes: &'a [u8]) -> Result<T, AnnotationError> {
    serde_json::from_slice(bytes).map_err(|e| AnnotationError::Schema(e.to_string()))
}

pub(crate) fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("annotation records serialize");
    out.push(b'\n');
    out
}

pub(crate) fn utf8(bytes: &[u8]) -> Result<&str, AnnotationError> {
    std::str::from_utf8(bytes).map_err(|e| AnnotationError::InvalidUtf8(e.valid_up_to()))
}

/// Distinguishes an explicit JSON `null` from an absent field.
pub(crate) fn explicit_nullable<'de, D, T>(d: D) -> Result<Option<Option<T>>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    Option::<T>::deserialize(d).map(Some)
}

/// Annotation kinds as named in the query API.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnnotationKind {
    Commentary,
    TextualNote,
    Alignment,
    SyntaxTree,
    Conllu,
    DictionaryCitation,
    Audio,
    Metrical,
    Grammar,
}

impl AnnotationKind {
    pub const ALL: [AnnotationKind; 9] = [
        AnnotationKind::Commentary,
        AnnotationKind::TextualNote,
        AnnotationKind::Alignment,
        AnnotationKind::SyntaxTree,
        AnnotationKind::Conllu,
        AnnotationKind::DictionaryCitation,
        AnnotationKind::Audio,
        AnnotationKind::Metrical,
        AnnotationKind::Grammar,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AnnotationKind::Commentary => "commentary",
            AnnotationKind::TextualNote => "textual-note",
            AnnotationKind::Alignment => "alignment",
            AnnotationKind::SyntaxTree => "syntax-tree",
            AnnotationKind::Conllu => "conllu",
            AnnotationKind::DictionaryCitation => "dictionary-citation",
            AnnotationKind::Audio => "audio",
            AnnotationKind::Metrical => "metrical",
            AnnotationKind::Grammar => "grammar",
        }
    }
}

impl fmt::Display for AnnotationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown annotation kind `{0}`")]
pub struct UnknownKind(pub String);

impl FromStr for AnnotationKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AnnotationKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| UnknownKind(s.to_string()))
    }
}

/// A sentence analysis bound to the version it annotates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConlluSentence {
    pub version: CtsUrn,
    #[serde(flatten)]
    pub sentence: SentenceAnalysis,
}

impl ConlluSentence {
    pub fn urn(&self) -> CtsUrn {
        self.version
            .with_passage(crate::urn::PassageRef::point(crate::urn::PassagePoint::new(self.sentence.reference.clone())))
    }
}

/// Any stored annotation record.
#[derive(Debug, Clone, PartialEq)]
pub enum Annotation {
    Commentary(CommentaryNote),
    Alignment(AlignmentRecord),
    SyntaxTree(SyntaxTree),
    Conllu(ConlluSentence),
    Dictionary(DictionaryEntry),
    Audio(AudioAnnotation),
    Metrical(SubTokenSpanAnnotation),
    Grammar(GrammarLink),
}

/// The `{kind, urn, data}` wrapper used by the query API.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub kind: AnnotationKind,
    pub urn: String,
    pub data: Value,
}

impl Annotation {
    pub fn kind(&self) -> AnnotationKind {
        match self {
            Annotation::Commentary(n) => match n.kind() {
                CommentaryKind::Commentary => AnnotationKind::Commentary,
                CommentaryKind::TextualNote => AnnotationKind::TextualNote,
            },
            Annotation::Alignment(_) => AnnotationKind::Alignment,
            Annotation::SyntaxTree(_) => AnnotationKind::SyntaxTree,
            Annotation::Conllu(_) => AnnotationKind::Conllu,
            Annotation::Dictionary(_) => AnnotationKind::DictionaryCitation,
            Annotation::Audio(_) => AnnotationKind::Audio,
            Annotation::Metrical(_) => AnnotationKind::Metrical,
            Annotation::Grammar(_) => AnnotationKind::Grammar,
        }
    }

    /// Storage family; textual notes share the commentary family.
    pub fn family(&self) -> &'static str {
        match self {
            Annotation::Commentary(_) => "commentary",
            Annotation::Alignment(_) => "alignment",
            Annotation::SyntaxTree(_) => "syntax-tree",
            Annotation::Conllu(_) => "conllu",
            Annotation::Dictionary(_) => "dictionary",
            Annotation::Audio(_) => "audio",
            Annotation::Metrical(_) => "metrical",
            Annotation::Grammar(_) => "grammar",
        }
    }

    /// The record's own identifier. Re-ingesting a record with the same key
    /// replaces it.
    pub fn record_key(&self) -> String {
        match self {
            Annotation::Commentary(n) => n.urn.to_string(),
            Annotation::Alignment(a) => a.urn.to_string(),
            Annotation::SyntaxTree(t) => t.urn.to_string(),
            Annotation::Conllu(c) => c.urn().to_string(),
            Annotation::Dictionary(d) => d.urn.to_string(),
            Annotation::Audio(a) => a.target.to_string(),
            Annotation::Metrical(m) => m.urn.to_string(),
            Annotation::Grammar(g) => g.entry_id.clone(),
        }
    }

    /// Every CTS URN the record points at.
    pub fn targets(&self) -> Vec<CtsUrn> {
        match self {
            Annotation::Commentary(n) => n.targets(),
            Annotation::Alignment(a) => a.relations.iter().flatten().cloned().collect(),
            Annotation::SyntaxTree(t) => t.references.clone().unwrap_or_default(),
            Annotation::Conllu(c) => vec![c.urn()],
            Annotation::Dictionary(d) => d.citation_targets().into_iter().cloned().collect(),
            Annotation::Audio(a) => vec![a.target.clone()],
            Annotation::Metrical(m) => vec![m.target.clone()],
            Annotation::Grammar(g) => g.targets.clone(),
        }
    }

    /// The record in its native JSON shape.
    pub fn data(&self) -> Value {
        let v = match self {
            Annotation::Commentary(n) => serde_json::to_value(n),
            Annotation::Alignment(a) => serde_json::to_value(a),
            Annotation::SyntaxTree(t) => serde_json::to_value(t),
            Annotation::Conllu(c) => serde_json::to_value(c),
            Annotation::Dictionary(d) => serde_json::to_value(d),
            Annotation::Audio(a) => serde_json::to_value(a),
            Annotation::Metrical(m) => serde_json::to_value(m),
            Annotation::Grammar(g) => serde_json::to_value(g),
        };
        v.expect("annotation records serialize")
    }

    pub fn envelope(&self) -> Envelope {
        Envelope { kind: self.kind(), urn: self.record_key(), data: self.data() }
    }
}

/// Parses a file of one annotation kind. CoNLL-U sentences whose ids are plain
/// references take their version from `version`.
pub fn parse_records(
    kind: AnnotationKind,
    bytes: &[u8],
    version: Option<&CtsUrn>,
) -> Result<Vec<Annotation>, AnnotationError> {
    Ok(match kind {
        AnnotationKind::Commentary | AnnotationKind::TextualNote => {
            parse_commentary(bytes)?.into_iter().map(Annotation::Commentary).collect()
        }
        AnnotationKind::Alignment => parse_alignments(bytes)?.into_iter().map(Annotation::Alignment).collect(),
        AnnotationKind::SyntaxTree => parse_treebank_json(bytes)?.into_iter().map(Annotation::SyntaxTree).collect(),
        AnnotationKind::DictionaryCitation => {
            parse_dictionary(bytes)?.into_iter().map(Annotation::Dictionary).collect()
        }
        AnnotationKind::Audio => parse_audio_tsv(bytes)?.into_iter().map(Annotation::Audio).collect(),
        AnnotationKind::Metrical => parse_subtoken_spans(bytes)?.into_iter().map(Annotation::Metrical).collect(),
        AnnotationKind::Grammar => parse_grammar_links(bytes)?.into_iter().map(Annotation::Grammar).collect(),
        AnnotationKind::Conllu => parse_conllu(bytes)?
            .into_iter()
            .map(|mut sentence| {
                let version = match (sentence.version.take(), version) {
                    (Some(v), _) => v,
                    (None, Some(v)) if v.work().is_some() => v.without_passage(),
                    _ => {
                        return Err(AnnotationError::Schema(format!(
                            "sentence {} has no version URN",
                            sentence.reference
                        )))
                    }
                };
                Ok(Annotation::Conllu(ConlluSentence { version, sentence }))
            })
            .collect::<Result<_, _>>()?,
    })
}

/// Serializes records of one family in that family's file format, with the
/// file extension to use.
pub fn write_records(family: &str, records: &[&Annotation]) -> (Vec<u8>, &'static str) {
    macro_rules! collect {
        ($variant:ident) => {
            records
                .iter()
                .filter_map(|a| match a {
                    Annotation::$variant(r) => Some(r.clone()),
                    _ => None,
                })
                .collect::<Vec<_>>()
        };
    }
    match family {
        "commentary" => (write_commentary(&collect!(Commentary)), "json"),
        "alignment" => (write_alignments(&collect!(Alignment)), "json"),
        "syntax-tree" => (write_treebank_json(&collect!(SyntaxTree)), "json"),
        "dictionary" => (write_dictionary(&collect!(Dictionary)), "json"),
        "audio" => (write_audio_tsv(&collect!(Audio)), "tsv"),
        "metrical" => (write_subtoken_spans(&collect!(Metrical)), "json"),
        "grammar" => (write_grammar_links(&collect!(Grammar)), "json"),
        "conllu" => {
            let sentences: Vec<SentenceAnalysis> = collect!(Conllu)
                .into_iter()
                .map(|c| SentenceAnalysis { version: Some(c.version), ..c.sentence })
                .collect();
            (write_conllu(&sentences), "conllu")
        }
        other => panic!("unknown annotation family `{other}`"),
    }
}

/// The kind whose parser reads files of `family`.
pub fn family_kind(family: &str) -> Option<AnnotationKind> {
    match family {
        "dictionary" => Some(AnnotationKind::DictionaryCitation),
        other => other.parse().ok(),
    }
}
