//! The flat reference+text model: rows, the three-column TSV, and tokens.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::urn::{CtsUrn, DottedRef, ReferenceIndex, UrnError, VeRef};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("BadColumnCount at line {line}: expected {expected} columns, found {found}")]
    BadColumnCount { line: usize, expected: usize, found: usize },
    #[error("NonMonotoneSeq at line {line}: expected {expected}, found {found}")]
    NonMonotoneSeq { line: usize, expected: u64, found: String },
    #[error("DuplicateRef: `{0}` occurs more than once")]
    DuplicateRef(String),
    #[error("BadReference at line {line}: {source}")]
    BadReference { line: usize, source: UrnError },
    #[error("EmptyText at line {line}")]
    EmptyText { line: usize },
    #[error("InvalidText: row `{0}` contains a tab or line break")]
    InvalidText(String),
    #[error("InvalidUtf8 at byte {0}")]
    InvalidUtf8(usize),
    #[error("MixedContent: division `{0}` has both text and child divisions")]
    MixedContent(String),
    #[error("UnevenCitationDepth: `{reference}` has depth {depth}, expected {expected}")]
    UnevenCitationDepth { reference: String, depth: usize, expected: usize },
    #[error("UnknownReference: `{0}`")]
    UnknownReference(String),
    #[error("TokenOutOfRange: `{reference}` has {count} tokens")]
    TokenOutOfRange { reference: String, count: usize },
    #[error("Xml: {0}")]
    Xml(String),
    #[error("Tei: {0}")]
    Tei(String),
}

/// One citable chunk of a version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextRow {
    pub seq: u64,
    #[serde(rename = "ref")]
    pub reference: DottedRef,
    pub text: String,
}

impl TextRow {
    pub fn new(seq: u64, reference: DottedRef, text: impl Into<String>) -> Self {
        TextRow { seq, reference, text: text.into() }
    }
}

/// Catalog entry for one version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionMetadata {
    pub urn: CtsUrn,
    pub language: String,
    pub label: String,
    pub citation_scheme: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Word,
    Punctuation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub ve_ref: VeRef,
    pub value: String,
    pub kind: TokenKind,
    /// Character (not byte) offsets into the row text, end-exclusive.
    pub char_start: usize,
    pub char_end: usize,
}

impl Token {
    pub fn index(&self) -> u32 {
        self.ve_ref.token
    }
}

/// Writes rows as `seq<TAB>ref<TAB>text<LF>`, no header.
pub fn write_text_tsv(rows: &[TextRow]) -> Result<Vec<u8>, TextError> {
    let mut out = String::new();
    for row in rows {
        if row.text.contains(['\t', '\n', '\r']) {
            return Err(TextError::InvalidText(row.reference.to_string()));
        }
        out.push_str(&format!("{}\t{}\t{}\n", row.seq, row.reference, row.text));
    }
    Ok(out.into_bytes())
}

/// Reads the three-column text TSV. Line numbers in errors are 1-based.
pub fn read_text_tsv(bytes: &[u8]) -> Result<Vec<TextRow>, TextError> {
    let text = std::str::from_utf8(bytes).map_err(|e| TextError::InvalidUtf8(e.valid_up_to()))?;
    let mut rows = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() {
        return Ok(rows);
    }
    for (i, line) in body.split('\n').enumerate() {
        let line_no = i + 1;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(TextError::BadColumnCount { line: line_no, expected: 3, found: cols.len() });
        }
        let expected = rows.len() as u64 + 1;
        match cols[0].parse::<u64>() {
            Ok(seq) if seq == expected && cols[0] == seq.to_string() => {}
            _ => return Err(TextError::NonMonotoneSeq { line: line_no, expected, found: cols[0].to_string() }),
        }
        let reference: DottedRef =
            cols[1].parse().map_err(|source| TextError::BadReference { line: line_no, source })?;
        if cols[2].trim().is_empty() {
            return Err(TextError::EmptyText { line: line_no });
        }
        if !seen.insert(reference.clone()) {
            return Err(TextError::DuplicateRef(reference.to_string()));
        }
        rows.push(TextRow { seq: expected, reference, text: cols[2].to_string() });
    }
    Ok(rows)
}

/// NFC form used for all stored row text; token offsets are relative to it.
pub fn normalize_text(s: &str) -> String {
    s.nfc().collect()
}

fn is_elision_mark(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '\u{02BC}' | '\u{1FBD}' | '\u{1FBF}')
}

/// Splits `row.text` on whitespace and detaches leading and trailing punctuation into
/// separate tokens. Elision marks directly after a word stay attached to it.
pub fn tokenize_row(row: &TextRow) -> Vec<Token> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = row.text.chars().collect();
    let mut push = |start: usize, end: usize, kind: TokenKind| {
        let idx = tokens.len() as u32 + 1;
        tokens.push(Token {
            ve_ref: VeRef::new(row.reference.clone(), idx),
            value: chars[start..end].iter().collect(),
            kind,
            char_start: start,
            char_end: end,
        });
    };

    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let chunk_start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        let chunk = &chars[chunk_start..i];
        let Some(first_word) = chunk.iter().position(|&c| c.is_alphanumeric()) else {
            for k in chunk_start..i {
                push(k, k + 1, TokenKind::Punctuation);
            }
            continue;
        };
        let last_word = chunk.iter().rposition(|&c| c.is_alphanumeric()).unwrap_or(first_word);
        let mut core_end = last_word + 1;
        while core_end < chunk.len() && (is_combining_mark(chunk[core_end]) || is_elision_mark(chunk[core_end])) {
            core_end += 1;
        }
        for k in 0..first_word {
            push(chunk_start + k, chunk_start + k + 1, TokenKind::Punctuation);
        }
        push(chunk_start + first_word, chunk_start + core_end, TokenKind::Word);
        for k in core_end..chunk.len() {
            push(chunk_start + k, chunk_start + k + 1, TokenKind::Punctuation);
        }
    }
    tokens
}

/// A version's rows with their tokens and reference index.
#[derive(Debug, Clone, Default)]
pub struct TokenizedVersion {
    rows: Vec<TextRow>,
    tokens: Vec<Vec<Token>>,
    index: ReferenceIndex,
}

impl TokenizedVersion {
    pub fn new(rows: Vec<TextRow>) -> Result<Self, TextError> {
        let index = ReferenceIndex::new(rows.iter().map(|r| r.reference.clone())).map_err(|e| match e {
            UrnError::DuplicateReference(r) => TextError::DuplicateRef(r),
            other => TextError::BadReference { line: 0, source: other },
        })?;
        let tokens = rows.iter().map(tokenize_row).collect();
        Ok(TokenizedVersion { rows, tokens, index })
    }

    pub fn rows(&self) -> &[TextRow] {
        &self.rows
    }

    pub fn index(&self) -> &ReferenceIndex {
        &self.index
    }

    pub fn tokens_at(&self, pos: usize) -> &[Token] {
        &self.tokens[pos]
    }

    pub fn row_at(&self, pos: usize) -> &TextRow {
        &self.rows[pos]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn token_by_veref(&self, ve_ref: &VeRef) -> Result<&Token, TextError> {
        let pos = self
            .index
            .position(&ve_ref.reference)
            .ok_or_else(|| TextError::UnknownReference(ve_ref.reference.to_string()))?;
        let tokens = &self.tokens[pos];
        tokens
            .get(ve_ref.token as usize - 1)
            .ok_or_else(|| TextError::TokenOutOfRange { reference: ve_ref.to_string(), count: tokens.len() })
    }
}

pub fn token_by_veref<'a>(version: &'a TokenizedVersion, ve_ref: &VeRef) -> Result<&'a Token, TextError> {
    version.token_by_veref(ve_ref)
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenKind::Word => "word",
            TokenKind::Punctuation => "punctuation",
        })
    }
}
