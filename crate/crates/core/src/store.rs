//! The in-memory catalog: versions, annotations and credits.
//!
//! A [`Catalog`] is an immutable snapshot. Every modifying method returns a new
//! snapshot and leaves the receiver untouched; unchanged parts are shared.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::annotations::{validate_tree, Annotation, AnnotationKind, AttributionRecord, ValidationMode};
use crate::text::{normalize_text, TextError, TextRow, Token, TokenizedVersion, VersionMetadata};
use crate::urn::{passage_bounds, CtsUrn, OrderKey, PassageRef, UrnError, VeRef};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("UnknownVersion: `{0}`")]
    UnknownVersion(String),
    #[error("UnknownReference: `{0}`")]
    UnknownReference(String),
    #[error("DuplicateVersion: `{0}` is already registered")]
    DuplicateVersion(String),
    #[error("InvariantViolation: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Urn(#[from] UrnError),
}

impl From<TextError> for StoreError {
    fn from(e: TextError) -> Self {
        StoreError::InvariantViolation(e.to_string())
    }
}

/// The version-level URN a passage URN belongs to, with any exemplar dropped.
pub fn version_key(urn: &CtsUrn) -> Option<CtsUrn> {
    CtsUrn::version_urn(urn.namespace(), urn.text_group(), urn.work()?, urn.version()?).ok()
}

#[derive(Debug)]
pub struct VersionEntry {
    pub meta: VersionMetadata,
    pub text: TokenizedVersion,
}

/// A row of a resolved passage with its tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolvedRow<'a> {
    pub row: &'a TextRow,
    pub tokens: &'a [Token],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttributionReportRow {
    pub role: String,
    pub contributor: String,
    pub count: u64,
}

/// Findings of [`Catalog::link_check`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    DanglingTarget { kind: AnnotationKind, record: String, target: String },
    UnmatchedCredit { contributor: String, reference: String },
    InvalidTree { record: String, detail: String },
    SpanOutOfBounds { record: String, end: u32, row_len: usize },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::DanglingTarget { kind, record, target } => {
                write!(f, "dangling target: {kind} {record} -> {target}")
            }
            Diagnostic::UnmatchedCredit { contributor, reference } => {
                write!(f, "unmatched credit: {contributor} -> {reference}")
            }
            Diagnostic::InvalidTree { detail, .. } => f.write_str(detail),
            Diagnostic::SpanOutOfBounds { record, end, row_len } => {
                write!(f, "span out of bounds: {record} ends at {end}, row has {row_len} characters")
            }
        }
    }
}

#[derive(Debug)]
struct Stored {
    annotation: Annotation,
    kind: AnnotationKind,
    key: String,
    /// Targets grouped with their version key.
    targets: Vec<(CtsUrn, CtsUrn)>,
}

type RecordId = (&'static str, String);

const BLOCK: usize = 64;

/// Intervals of one version sorted by start, with the largest end per block so
/// whole blocks can be skipped.
#[derive(Debug, Default)]
struct OverlapIndex {
    entries: Vec<(OrderKey, OrderKey, Arc<Stored>)>,
    block_max: Vec<OrderKey>,
}

impl OverlapIndex {
    fn build(mut entries: Vec<(OrderKey, OrderKey, Arc<Stored>)>) -> Self {
        entries.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        let block_max = entries.chunks(BLOCK).map(|c| c.iter().map(|e| e.1).max().unwrap_or((0, 0))).collect();
        OverlapIndex { entries, block_max }
    }

    fn query<'a>(&'a self, lo: OrderKey, hi: OrderKey, out: &mut Vec<&'a Stored>) {
        let end = self.entries.partition_point(|e| e.0 <= hi);
        for (b, max) in self.block_max.iter().enumerate() {
            let start = b * BLOCK;
            if start >= end {
                break;
            }
            if *max < lo {
                continue;
            }
            for e in &self.entries[start..end.min(start + BLOCK)] {
                if e.1 >= lo {
                    out.push(&e.2);
                }
            }
        }
    }
}

static GENERATION: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Default)]
pub struct Catalog {
    versions: Arc<BTreeMap<CtsUrn, Arc<VersionEntry>>>,
    records: Arc<BTreeMap<RecordId, Arc<Stored>>>,
    overlap: Arc<HashMap<CtsUrn, Arc<OverlapIndex>>>,
    attributions: Arc<Vec<AttributionRecord>>,
    generation: u64,
}

fn bounds_in(entry: &VersionEntry, target: &CtsUrn) -> Option<(OrderKey, OrderKey)> {
    let index = entry.text.index();
    match target.passage() {
        None if index.is_empty() => None,
        None => Some(((0, 0), (index.len() - 1, u32::MAX))),
        Some(p) => {
            let (lo, hi) = passage_bounds(p, index)?;
            if lo > hi {
                return None;
            }
            for point in [&p.start, p.last()] {
                if let Some(t) = point.token {
                    let pos = index.position(&point.reference)?;
                    if t == 0 || t as usize > entry.text.tokens_at(pos).len() {
                        return None;
                    }
                }
            }
            Some((lo, hi))
        }
    }
}

fn attribution_identity(r: &AttributionRecord) -> (String, String, Option<String>, BTreeSet<String>) {
    (
        r.role.clone(),
        r.person.name.clone(),
        r.organization.as_ref().map(|o| o.name.clone()),
        r.references().iter().map(ToString::to_string).collect(),
    )
}

impl Catalog {
    pub fn new() -> Self {
        Catalog { generation: GENERATION.fetch_add(1, Ordering::Relaxed), ..Default::default() }
    }

    /// Distinct for every snapshot created in this process.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    fn next(&self) -> Catalog {
        Catalog { generation: GENERATION.fetch_add(1, Ordering::Relaxed), ..self.clone() }
    }

    pub fn versions(&self) -> impl Iterator<Item = &VersionEntry> {
        self.versions.values().map(Arc::as_ref)
    }

    pub fn version(&self, urn: &CtsUrn) -> Option<&VersionEntry> {
        self.versions.get(&version_key(urn)?).map(Arc::as_ref)
    }

    fn require_version(&self, urn: &CtsUrn) -> Result<&VersionEntry, StoreError> {
        self.version(urn).ok_or_else(|| StoreError::UnknownVersion(urn.without_passage().to_string()))
    }

    /// Adds a version. Row text is NFC-normalized.
    pub fn register_version(&self, meta: VersionMetadata, rows: Vec<TextRow>) -> Result<Catalog, StoreError> {
        let key = version_key(&meta.urn)
            .filter(|_| meta.urn.passage().is_none())
            .ok_or_else(|| StoreError::InvariantViolation(format!("`{}` is not a version-level URN", meta.urn)))?;
        if self.versions.contains_key(&key) {
            return Err(StoreError::DuplicateVersion(key.to_string()));
        }
        self.insert_version(key, meta, rows)
    }

    /// Like [`Catalog::register_version`] but replaces an existing version.
    pub fn replace_version(&self, meta: VersionMetadata, rows: Vec<TextRow>) -> Result<Catalog, StoreError> {
        let key = version_key(&meta.urn)
            .filter(|_| meta.urn.passage().is_none())
            .ok_or_else(|| StoreError::InvariantViolation(format!("`{}` is not a version-level URN", meta.urn)))?;
        self.insert_version(key, meta, rows)
    }

    fn insert_version(
        &self,
        key: CtsUrn,
        mut meta: VersionMetadata,
        rows: Vec<TextRow>,
    ) -> Result<Catalog, StoreError> {
        let mut last_seq = 0;
        let mut normalized = Vec::with_capacity(rows.len());
        for row in rows {
            if row.seq <= last_seq {
                return Err(StoreError::InvariantViolation(format!(
                    "seq {} of `{}` is not increasing",
                    row.seq, row.reference
                )));
            }
            last_seq = row.seq;
            if row.text.trim().is_empty() {
                return Err(StoreError::InvariantViolation(format!("row `{}` has no text", row.reference)));
            }
            if row.text.contains(['\t', '\n', '\r']) {
                return Err(TextError::InvalidText(row.reference.to_string()).into());
            }
            normalized.push(TextRow { text: normalize_text(&row.text), ..row });
        }
        let text = TokenizedVersion::new(normalized)?;
        meta.urn = key.clone();
        let entry = Arc::new(VersionEntry { meta, text });
        let mut next = self.next();
        Arc::make_mut(&mut next.versions).insert(key.clone(), entry);
        next.rebuild_overlap([key]);
        Ok(next)
    }

    fn rebuild_overlap(&mut self, keys: impl IntoIterator<Item = CtsUrn>) {
        let keys: HashSet<CtsUrn> = keys.into_iter().collect();
        if keys.is_empty() {
            return;
        }
        let mut entries: HashMap<CtsUrn, Vec<(OrderKey, OrderKey, Arc<Stored>)>> = HashMap::new();
        for stored in self.records.values() {
            for (vkey, target) in &stored.targets {
                if !keys.contains(vkey) {
                    continue;
                }
                let Some(entry) = self.versions.get(vkey) else { continue };
                if let Some((lo, hi)) = bounds_in(entry, target) {
                    entries.entry(vkey.clone()).or_default().push((lo, hi, stored.clone()));
                }
            }
        }
        let overlap = Arc::make_mut(&mut self.overlap);
        for key in keys {
            match entries.remove(&key) {
                Some(e) => overlap.insert(key, Arc::new(OverlapIndex::build(e))),
                None => overlap.remove(&key),
            };
        }
    }

    /// Adds annotations. A record with the same family and key as a stored one
    /// replaces it. Targets on versions that are not loaded are kept but not
    /// indexed until the version arrives.
    pub fn with_annotations(&self, annotations: impl IntoIterator<Item = Annotation>) -> Catalog {
        let mut next = self.next();
        let mut touched = HashSet::new();
        let records = Arc::make_mut(&mut next.records);
        for annotation in annotations {
            let targets: Vec<(CtsUrn, CtsUrn)> =
                annotation.targets().into_iter().filter_map(|t| version_key(&t).map(|k| (k, t))).collect();
            touched.extend(targets.iter().map(|(k, _)| k.clone()));
            let stored = Stored { kind: annotation.kind(), key: annotation.record_key(), targets, annotation };
            let id = (stored.annotation.family(), stored.key.clone());
            if let Some(old) = records.insert(id, Arc::new(stored)) {
                touched.extend(old.targets.iter().map(|(k, _)| k.clone()));
            }
        }
        next.rebuild_overlap(touched);
        next
    }

    /// Adds credit records; a record identical in role, person, organization and
    /// reference set to a stored one is not added twice.
    pub fn with_attributions(&self, records: impl IntoIterator<Item = AttributionRecord>) -> Catalog {
        let mut next = self.next();
        let list = Arc::make_mut(&mut next.attributions);
        let mut seen: HashSet<_> = list.iter().map(attribution_identity).collect();
        for r in records {
            if seen.insert(attribution_identity(&r)) {
                list.push(r);
            }
        }
        next
    }

    pub fn annotations(&self) -> impl Iterator<Item = &Annotation> {
        self.records.values().map(|s| &s.annotation)
    }

    pub fn annotation_count(&self) -> usize {
        self.records.len()
    }

    pub fn attributions(&self) -> &[AttributionRecord] {
        &self.attributions
    }

    /// Rows covered by `urn`. A URN without a passage yields the whole version.
    pub fn resolve_passage(&self, urn: &CtsUrn) -> Result<Vec<ResolvedRow<'_>>, StoreError> {
        let entry = self.require_version(urn)?;
        let positions = match urn.passage() {
            None => 0..=entry.text.len().saturating_sub(1),
            Some(p) => crate::urn::expand_positions(p, entry.text.index()).map_err(|e| match e {
                UrnError::UnknownReference(r) => StoreError::UnknownReference(r),
                other => StoreError::Urn(other),
            })?,
        };
        if entry.text.is_empty() {
            return Ok(Vec::new());
        }
        Ok(positions
            .map(|pos| ResolvedRow { row: entry.text.row_at(pos), tokens: entry.text.tokens_at(pos) })
            .collect())
    }

    /// Leaf positions covered by `urn` within its version.
    pub fn passage_positions(&self, urn: &CtsUrn) -> Result<std::ops::Range<usize>, StoreError> {
        let entry = self.require_version(urn)?;
        match urn.passage() {
            None => Ok(0..entry.text.len()),
            Some(p) => {
                crate::urn::expand_positions(p, entry.text.index()).map(|r| *r.start()..*r.end() + 1).map_err(|e| {
                    match e {
                        UrnError::UnknownReference(r) => StoreError::UnknownReference(r),
                        other => StoreError::Urn(other),
                    }
                })
            }
        }
    }

    /// Annotations with a target inside the span named by `urn`, ordered by kind
    /// and record key. References absent from the version match nothing.
    pub fn annotations_overlapping(
        &self,
        urn: &CtsUrn,
        kind: Option<AnnotationKind>,
    ) -> Result<Vec<&Annotation>, StoreError> {
        let entry = self.require_version(urn)?;
        let Some(key) = version_key(urn) else { return Ok(Vec::new()) };
        let (Some((lo, hi)), Some(index)) = (bounds_in(entry, urn), self.overlap.get(&key)) else {
            return Ok(Vec::new());
        };
        let mut hits = Vec::new();
        index.query(lo, hi, &mut hits);
        let mut found: Vec<&Stored> = hits.into_iter().filter(|s| kind.is_none_or(|k| s.kind == k)).collect();
        found.sort_by(|a, b| (a.kind, &a.key, a.annotation.family()).cmp(&(b.kind, &b.key, b.annotation.family())));
        found.dedup_by(|a, b| std::ptr::eq(*a, *b));
        Ok(found.into_iter().map(|s| &s.annotation).collect())
    }

    /// Tokens of the row at `urn` that no alignment record covering the row
    /// mentions.
    pub fn unaligned_tokens(&self, urn: &CtsUrn) -> Result<Vec<VeRef>, StoreError> {
        let rows = self.resolve_passage(urn)?;
        let aligned: HashSet<CtsUrn> = self
            .annotations_overlapping(urn, Some(AnnotationKind::Alignment))?
            .into_iter()
            .filter_map(|a| match a {
                Annotation::Alignment(r) => Some(r.relations.iter().flatten().cloned()),
                _ => None,
            })
            .flatten()
            .collect();
        let version = urn.without_passage();
        Ok(rows
            .iter()
            .flat_map(|r| r.tokens.iter())
            .filter(|t| {
                let point = crate::urn::PassagePoint::token(t.ve_ref.reference.clone(), t.ve_ref.token);
                !aligned.contains(&version.with_passage(PassageRef::point(point)))
            })
            .map(|t| t.ve_ref.clone())
            .collect())
    }

    /// Distinct credited references per (role, person, organization), sorted by
    /// role then contributor.
    pub fn aggregate_attributions(&self) -> Vec<AttributionReportRow> {
        let mut groups: BTreeMap<(String, String), HashSet<String>> = BTreeMap::new();
        for r in self.attributions.iter() {
            groups
                .entry((r.role.clone(), r.contributor()))
                .or_default()
                .extend(r.references().iter().map(ToString::to_string));
        }
        groups
            .into_iter()
            .map(|((role, contributor), refs)| AttributionReportRow { role, contributor, count: refs.len() as u64 })
            .collect()
    }

    /// Dangling targets, credits for records that are not loaded, invalid trees
    /// and metrical spans that run past their row.
    pub fn link_check(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for stored in self.records.values() {
            for (vkey, target) in &stored.targets {
                if let Some(entry) = self.versions.get(vkey) {
                    if bounds_in(entry, target).is_none() {
                        out.push(Diagnostic::DanglingTarget {
                            kind: stored.kind,
                            record: stored.key.clone(),
                            target: target.to_string(),
                        });
                    }
                }
            }
            match &stored.annotation {
                Annotation::SyntaxTree(t) => {
                    if let Err(e) = validate_tree(t, ValidationMode::Strict) {
                        out.push(Diagnostic::InvalidTree { record: stored.key.clone(), detail: e.to_string() });
                    }
                }
                Annotation::Metrical(m) => {
                    let row = self.version(&m.target).and_then(|entry| {
                        let p = m.target.passage()?;
                        let pos = entry.text.index().position(&p.start.reference)?;
                        Some(entry.text.row_at(pos))
                    });
                    if let Some(row) = row {
                        let row_len = row.text.chars().count();
                        if m.max_end() as usize > row_len {
                            out.push(Diagnostic::SpanOutOfBounds {
                                record: stored.key.clone(),
                                end: m.max_end(),
                                row_len,
                            });
                        }
                    }
                }
                _ => {}
            }
        }
        let keys: HashSet<&str> = self.records.values().map(|s| s.key.as_str()).collect();
        let mut reported = HashSet::new();
        for r in self.attributions.iter() {
            for reference in r.references() {
                let reference = reference.to_string();
                if !keys.contains(reference.as_str()) && reported.insert((r.contributor(), reference.clone())) {
                    out.push(Diagnostic::UnmatchedCredit { contributor: r.contributor(), reference });
                }
            }
        }
        out
    }
}

/// `2081` → `"2,081"`.
pub fn format_thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}
