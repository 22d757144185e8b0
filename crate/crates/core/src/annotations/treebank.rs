use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{from_json, to_json, AnnotationError};
use crate::urn::{Cite2Urn, CtsUrn};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeWord {
    pub id: u32,
    pub value: String,
    /// 0 is the root sentinel.
    pub head_id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

/// One dependency tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntaxTree {
    pub urn: Cite2Urn,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    treebank_id: Option<String>,
    // Some published data spells the key without the second `e`.
    #[serde(default, rename = "trebank_id", skip_serializing_if = "Option::is_none")]
    legacy_treebank_id: Option<String>,
    pub words: Vec<TreeWord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub references: Option<Vec<CtsUrn>>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl SyntaxTree {
    pub fn new(urn: Cite2Urn, treebank_id: Option<String>, words: Vec<TreeWord>) -> Self {
        SyntaxTree { urn, treebank_id, legacy_treebank_id: None, words, references: None, extra: Map::new() }
    }

    pub fn treebank_id(&self) -> Option<&str> {
        self.treebank_id.as_deref().or(self.legacy_treebank_id.as_deref())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationMode {
    Strict,
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeDiagnostic {
    DuplicateWordId(u32),
    DanglingHead { word: u32, head: u32 },
    CyclicHeads(Vec<u32>),
}

impl fmt::Display for TreeDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeDiagnostic::DuplicateWordId(id) => write!(f, "DuplicateWordId {id}"),
            TreeDiagnostic::DanglingHead { word, head } => write!(f, "DanglingHead {head} (word {word})"),
            TreeDiagnostic::CyclicHeads(ids) => write!(f, "CyclicHeads {ids:?}"),
        }
    }
}

fn diagnose(tree: &SyntaxTree) -> Vec<TreeDiagnostic> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for w in &tree.words {
        if !ids.insert(w.id) {
            out.push(TreeDiagnostic::DuplicateWordId(w.id));
        }
    }
    let heads: HashMap<u32, u32> = tree.words.iter().map(|w| (w.id, w.head_id)).collect();
    for w in &tree.words {
        if w.head_id != 0 && !heads.contains_key(&w.head_id) {
            out.push(TreeDiagnostic::DanglingHead { word: w.id, head: w.head_id });
        }
    }
    // Walk from each word towards the root; revisiting a word on the current
    // path means a cycle.
    let mut settled: HashSet<u32> = HashSet::new();
    for w in &tree.words {
        let mut path = Vec::new();
        let mut on_path = HashSet::new();
        let mut cur = w.id;
        loop {
            if cur == 0 || settled.contains(&cur) {
                break;
            }
            if !on_path.insert(cur) {
                let start = path.iter().position(|&p| p == cur).unwrap_or(0);
                let mut cycle: Vec<u32> = path[start..].to_vec();
                cycle.sort_unstable();
                if !out.contains(&TreeDiagnostic::CyclicHeads(cycle.clone())) {
                    out.push(TreeDiagnostic::CyclicHeads(cycle));
                }
                break;
            }
            path.push(cur);
            match heads.get(&cur) {
                Some(&h) => cur = h,
                None => break,
            }
        }
        settled.extend(path);
    }
    out
}

/// Strict mode fails on the first problem; lenient mode returns every problem
/// as a diagnostic.
pub fn validate_tree(tree: &SyntaxTree, mode: ValidationMode) -> Result<Vec<TreeDiagnostic>, AnnotationError> {
    let diagnostics = diagnose(tree);
    if mode == ValidationMode::Lenient {
        return Ok(diagnostics);
    }
    match diagnostics.into_iter().next() {
        None => Ok(Vec::new()),
        Some(TreeDiagnostic::DanglingHead { head, .. }) => {
            Err(AnnotationError::DanglingHead { tree: tree.urn.to_string(), head })
        }
        Some(TreeDiagnostic::CyclicHeads(words)) => {
            Err(AnnotationError::CyclicHeads { tree: tree.urn.to_string(), words })
        }
        Some(TreeDiagnostic::DuplicateWordId(id)) => {
            Err(AnnotationError::Schema(format!("{}: duplicate word id {id}", tree.urn)))
        }
    }
}

pub fn parse_treebank_json(bytes: &[u8]) -> Result<Vec<SyntaxTree>, AnnotationError> {
    from_json(bytes)
}

pub fn write_treebank_json(trees: &[SyntaxTree]) -> Vec<u8> {
    to_json(&trees)
}
