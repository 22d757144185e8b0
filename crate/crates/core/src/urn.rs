//! CTS and CITE2 URNs.
//!
//! A CTS URN names a citable chunk of text:
//! `urn:cts:<namespace>:<group>.<work>.<version>[.<exemplar>]:<passage>`, where the
//! passage is a dotted reference (`1.1`), a range (`1.1-1.7`), or either of those
//! carrying a token extension (`1.1.t4`). A CITE2 URN names an object in a versioned
//! collection: `urn:cite2:<namespace>:<collection>.<version>:<object>`.
//!
//! The `-` character only separates range endpoints inside the passage component.
//! Everywhere else it is part of the identifier (`mds822-32`, `perseus-grc2`).

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

const CTS_PREFIX: &str = "urn:cts:";
const CITE2_PREFIX: &str = "urn:cite2:";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UrnError {
    #[error("MalformedUrn: {reason} in `{component}` of `{input}`")]
    Malformed { input: String, component: String, reason: &'static str },
    #[error("IndexRequired: comparing `{0}` needs a reference index")]
    IndexRequired(String),
    #[error("UnknownReference: `{0}` is not in the reference index")]
    UnknownReference(String),
    #[error("InvertedRange: `{0}` ends before it starts")]
    InvertedRange(String),
    #[error("DuplicateReference: `{0}` appears more than once")]
    DuplicateReference(String),
}

fn malformed(input: &str, component: &str, reason: &'static str) -> UrnError {
    UrnError::Malformed { input: input.to_string(), component: component.to_string(), reason }
}

fn is_valid_identifier(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c == ':' || c.is_whitespace())
}

/// A non-empty dotted citation reference such as `1.1.1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DottedRef(Vec<String>);

impl DottedRef {
    pub fn new<I, S>(parts: I) -> Result<Self, UrnError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let parts: Vec<String> = parts.into_iter().map(Into::into).collect();
        let joined = parts.join(".");
        if parts.is_empty() {
            return Err(malformed(&joined, &joined, "empty reference"));
        }
        for p in &parts {
            if p.is_empty() {
                return Err(malformed(&joined, &joined, "empty citation component"));
            }
            if p.chars().any(|c| c == ':' || c == '-' || c == '.' || c == '@' || c.is_whitespace()) {
                return Err(malformed(&joined, p, "invalid character in citation component"));
            }
        }
        Ok(DottedRef(parts))
    }

    pub fn components(&self) -> &[String] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    /// True when `self` equals `other` or is one of its ancestors.
    pub fn is_prefix_of(&self, other: &DottedRef) -> bool {
        self.0.len() <= other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a == b)
    }

    pub fn parent(&self) -> Option<DottedRef> {
        (self.0.len() > 1).then(|| DottedRef(self.0[..self.0.len() - 1].to_vec()))
    }
}

impl fmt::Display for DottedRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("."))
    }
}

impl FromStr for DottedRef {
    type Err = UrnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DottedRef::new(s.split('.'))
    }
}

fn parse_token_component(c: &str) -> Option<Result<u32, ()>> {
    let digits = c.strip_prefix('t')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some(match digits.parse::<u32>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(()),
    })
}

/// One end of a passage: a reference, optionally narrowed to a single token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PassagePoint {
    pub reference: DottedRef,
    pub token: Option<u32>,
}

impl PassagePoint {
    pub fn new(reference: DottedRef) -> Self {
        PassagePoint { reference, token: None }
    }

    pub fn token(reference: DottedRef, token: u32) -> Self {
        PassagePoint { reference, token: Some(token) }
    }

    fn parse(input: &str, s: &str) -> Result<Self, UrnError> {
        if s.is_empty() {
            return Err(malformed(input, s, "empty passage endpoint"));
        }
        let mut parts: Vec<&str> = s.split('.').collect();
        let mut token = None;
        if parts.len() > 1 {
            match parse_token_component(parts[parts.len() - 1]) {
                Some(Ok(n)) => {
                    token = Some(n);
                    parts.pop();
                }
                Some(Err(())) => return Err(malformed(input, s, "token index must be >= 1")),
                None => {}
            }
        }
        let reference = DottedRef::new(parts.iter().copied()).map_err(|e| match e {
            UrnError::Malformed { component, reason, .. } => {
                UrnError::Malformed { input: input.to_string(), component, reason }
            }
            other => other,
        })?;
        Ok(PassagePoint { reference, token })
    }
}

impl fmt::Display for PassagePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.reference)?;
        if let Some(t) = self.token {
            write!(f, ".t{t}")?;
        }
        Ok(())
    }
}

/// A point or range passage.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PassageRef {
    pub start: PassagePoint,
    pub end: Option<PassagePoint>,
}

impl PassageRef {
    pub fn point(start: PassagePoint) -> Self {
        PassageRef { start, end: None }
    }

    pub fn range(start: PassagePoint, end: PassagePoint) -> Self {
        PassageRef { start, end: Some(end) }
    }

    pub fn is_range(&self) -> bool {
        self.end.is_some()
    }

    /// The last endpoint: `end` for ranges, `start` for points.
    pub fn last(&self) -> &PassagePoint {
        self.end.as_ref().unwrap_or(&self.start)
    }

    fn parse(input: &str, s: &str) -> Result<Self, UrnError> {
        if s.contains('@') {
            return Err(malformed(input, s, "subreferences are not supported"));
        }
        let mut pieces = s.split('-');
        let start = PassagePoint::parse(input, pieces.next().unwrap_or_default())?;
        let end = pieces.next().map(|e| PassagePoint::parse(input, e)).transpose()?;
        if pieces.next().is_some() {
            return Err(malformed(input, s, "passage has more than one range separator"));
        }
        Ok(PassageRef { start, end })
    }
}

impl fmt::Display for PassageRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.start)?;
        if let Some(end) = &self.end {
            write!(f, "-{end}")?;
        }
        Ok(())
    }
}

impl FromStr for PassageRef {
    type Err = UrnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PassageRef::parse(s, s)
    }
}

/// A token-level reference within one version: `1.1.t4`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VeRef {
    pub reference: DottedRef,
    pub token: u32,
}

impl VeRef {
    pub fn new(reference: DottedRef, token: u32) -> Self {
        VeRef { reference, token }
    }
}

impl fmt::Display for VeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.t{}", self.reference, self.token)
    }
}

impl FromStr for VeRef {
    type Err = UrnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let point = PassagePoint::parse(s, s)?;
        match point.token {
            Some(token) => Ok(VeRef { reference: point.reference, token }),
            None => Err(malformed(s, s, "missing token extension")),
        }
    }
}

/// A CTS URN. Construct through [`parse_cts_urn`] or [`CtsUrn::from_str`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CtsUrn {
    namespace: String,
    text_group: String,
    work: Option<String>,
    version: Option<String>,
    exemplar: Option<String>,
    passage: Option<PassageRef>,
}

pub fn parse_cts_urn(text: &str) -> Result<CtsUrn, UrnError> {
    let (scheme, rest) = text.split_at(text.len().min(CTS_PREFIX.len()));
    if !scheme.eq_ignore_ascii_case(CTS_PREFIX) {
        return Err(malformed(text, scheme, "expected `urn:cts:` scheme"));
    }
    let parts: Vec<&str> = rest.split(':').collect();
    if parts.len() < 2 {
        return Err(malformed(text, rest, "missing work hierarchy"));
    }
    if parts.len() > 3 {
        return Err(malformed(text, rest, "too many `:`-separated components"));
    }
    let namespace = parts[0];
    if !is_valid_identifier(namespace) {
        return Err(malformed(text, namespace, "invalid namespace"));
    }
    let hierarchy: Vec<&str> = parts[1].split('.').collect();
    if hierarchy.len() > 4 {
        return Err(malformed(text, parts[1], "work hierarchy has more than four levels"));
    }
    for h in &hierarchy {
        if !is_valid_identifier(h) {
            return Err(malformed(text, parts[1], "empty or invalid work-hierarchy component"));
        }
    }
    // A trailing `:` with nothing after it is the same URN without a passage.
    let passage = match parts.get(2) {
        Some(p) if !p.is_empty() => Some(PassageRef::parse(text, p)?),
        _ => None,
    };
    if passage.is_some() && hierarchy.len() < 2 {
        return Err(malformed(text, parts[1], "passage given without a work"));
    }
    let owned = |i: usize| hierarchy.get(i).map(|s| s.to_string());
    Ok(CtsUrn {
        namespace: namespace.to_string(),
        text_group: hierarchy[0].to_string(),
        work: owned(1),
        version: owned(2),
        exemplar: owned(3),
        passage,
    })
}

pub fn format_cts_urn(urn: &CtsUrn) -> String {
    urn.to_string()
}

impl CtsUrn {
    /// Builds a version-level URN, validating each identifier.
    pub fn version_urn(namespace: &str, text_group: &str, work: &str, version: &str) -> Result<CtsUrn, UrnError> {
        parse_cts_urn(&format!("{CTS_PREFIX}{namespace}:{text_group}.{work}.{version}"))
    }

    pub fn namespace(&self) -> &str {
        &self.namespace
    }

    pub fn text_group(&self) -> &str {
        &self.text_group
    }

    pub fn work(&self) -> Option<&str> {
        self.work.as_deref()
    }

    pub fn version(&self) -> Option<&str> {
        self.version.as_deref()
    }

    pub fn exemplar(&self) -> Option<&str> {
        self.exemplar.as_deref()
    }

    pub fn passage(&self) -> Option<&PassageRef> {
        self.passage.as_ref()
    }

    /// The same URN with the passage removed.
    pub fn without_passage(&self) -> CtsUrn {
        CtsUrn { passage: None, ..self.clone() }
    }

    /// The same work hierarchy pointing at `passage`.
    ///
    /// Panics if the URN has no work component.
    pub fn with_passage(&self, passage: PassageRef) -> CtsUrn {
        assert!(self.work.is_some(), "a passage requires a work component");
        CtsUrn { passage: Some(passage), ..self.clone() }
    }

    /// True when both URNs name the same namespace, group, work, version and exemplar.
    pub fn same_text(&self, other: &CtsUrn) -> bool {
        self.namespace == other.namespace
            && self.text_group == other.text_group
            && self.work == other.work
            && self.version == other.version
            && self.exemplar == other.exemplar
    }

    fn work_hierarchy(&self) -> String {
        let mut s = self.text_group.clone();
        for part in [&self.work, &self.version, &self.exemplar].into_iter().flatten() {
            s.push('.');
            s.push_str(part);
        }
        s
    }
}

impl fmt::Display for CtsUrn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{CTS_PREFIX}{}:{}", self.namespace, self.work_hierarchy())?;
        if let Some(p) = &self.passage {
            write!(f, ":{p}")?;
        }
        Ok(())
    }
}

impl FromStr for CtsUrn {
    type Err = UrnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_cts_urn(s)
    }
}

/// A CITE2 URN naming an object in a versioned collection.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cite2Urn {
    namespace: String,
    collection: String,
    version: String,
    object_id: String,
}

pub fn parse_cite2_urn(text: &str) -> Result<Cite2Urn, UrnError> {
    let (scheme, rest) = text.split_at(text.len().min(CITE2_PREFIX.len()));
    if !scheme.eq_ignore_ascii_case(CITE2_PREFIX) {
        return Err(malformed(text, scheme, "expected `urn:cite2:` scheme"));
    }
    let parts: Vec<&str> = rest.split(':').collect();
    if parts.len() != 3 {
        return Err(malformed(text, rest, "expected namespace:collection.version:object"));
    }
    let (namespace, collection_version, object_id) = (parts[0], parts[1], parts[2]);
    if !is_valid_identifier(namespace) {
        return Err(malformed(text, namespace, "invalid namespace"));
    }
    let (collection, version) = collection_version
        .split_once('.')
        .ok_or_else(|| malformed(text, collection_version, "collection lacks `.version`"))?;
    if !is_valid_identifier(collection) || !is_valid_identifier(version) {
        return Err(malformed(text, collection_version, "empty collection or version"));
    }
    if !is_valid_identifier(object_id) {
        return Err(malformed(text, object_id, "empty or invalid object id"));
    }
    Ok(Cite2Urn {
        namespace: namespace.to_string(),
        collection: collection.to_string(),
        version: version.to_string(),
        object_id: object_id.to_string(),
    })
}

impl Cite2Urn {
    pub fn namespace(&self) -> &str {
        &self.namespace
    }

    pub fn collection(&self) -> &str {
        &self.collection
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn object_id(&self) -> &str {
        &self.object_id
    }
}

impl fmt::Display for Cite2Urn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{CITE2_PREFIX}{}:{}.{}:{}", self.namespace, self.collection, self.version, self.object_id)
    }
}

impl FromStr for Cite2Urn {
    type Err = UrnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_cite2_urn(s)
    }
}

macro_rules! serde_via_string {
    ($($ty:ty),*) => {$(
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    )*};
}

serde_via_string!(CtsUrn, Cite2Urn, DottedRef, VeRef, PassageRef);

/// Document order of the leaf references of one version.
#[derive(Debug, Clone, Default)]
pub struct ReferenceIndex {
    refs: Vec<DottedRef>,
    /// Every leaf and every ancestor of a leaf, mapped to the first and last leaf
    /// position beneath it.
    spans: HashMap<DottedRef, (usize, usize)>,
}

impl ReferenceIndex {
    pub fn new<I: IntoIterator<Item = DottedRef>>(refs: I) -> Result<Self, UrnError> {
        let refs: Vec<DottedRef> = refs.into_iter().collect();
        let mut spans: HashMap<DottedRef, (usize, usize)> = HashMap::with_capacity(refs.len() * 2);
        for (pos, r) in refs.iter().enumerate() {
            if spans.contains_key(r) {
                return Err(UrnError::DuplicateReference(r.to_string()));
            }
            spans.insert(r.clone(), (pos, pos));
        }
        for (pos, r) in refs.iter().enumerate() {
            let mut ancestor = r.parent();
            while let Some(a) = ancestor {
                let span = spans.entry(a.clone()).or_insert((pos, pos));
                span.0 = span.0.min(pos);
                span.1 = span.1.max(pos);
                ancestor = a.parent();
            }
        }
        Ok(ReferenceIndex { refs, spans })
    }

    pub fn len(&self) -> usize {
        self.refs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.refs.is_empty()
    }

    pub fn refs(&self) -> &[DottedRef] {
        &self.refs
    }

    /// Position of a leaf reference.
    pub fn position(&self, r: &DottedRef) -> Option<usize> {
        self.spans.get(r).filter(|(a, b)| a == b && self.refs[*a] == *r).map(|(a, _)| *a)
    }

    /// First and last leaf positions under `r` (inclusive).
    pub fn leaf_span(&self, r: &DottedRef) -> Option<(usize, usize)> {
        self.spans.get(r).copied()
    }

    pub fn get(&self, pos: usize) -> Option<&DottedRef> {
        self.refs.get(pos)
    }
}

/// Sort key for a position inside a version: (leaf position, token). Token 0 sorts
/// before every real token of the row and `u32::MAX` after.
pub type OrderKey = (usize, u32);

/// Inclusive bounds covered by `point` in document order.
pub fn point_bounds(point: &PassagePoint, index: &ReferenceIndex) -> Option<(OrderKey, OrderKey)> {
    let (first, last) = index.leaf_span(&point.reference)?;
    match point.token {
        Some(t) => (first == last).then_some(((first, t), (first, t))),
        None => Some(((first, 0), (last, u32::MAX))),
    }
}

/// Inclusive bounds covered by `passage` in document order. Inverted ranges are
/// returned as-is; callers decide whether that is an error.
pub fn passage_bounds(passage: &PassageRef, index: &ReferenceIndex) -> Option<(OrderKey, OrderKey)> {
    let (lo, _) = point_bounds(&passage.start, index)?;
    let (_, hi) = point_bounds(passage.last(), index)?;
    Some((lo, hi))
}

fn point_contains(container: &PassagePoint, item: &PassageRef) -> bool {
    [&item.start, item.last()].into_iter().all(|p| match container.token {
        None => container.reference.is_prefix_of(&p.reference),
        Some(t) => container.reference == p.reference && p.token == Some(t),
    })
}

/// Whether `item` lies within `container`.
///
/// Both URNs must name the same text. A container without a passage holds every
/// passage of its text. With `index` the answer follows document order. Without
/// it, point containers fall back to hierarchical-prefix semantics and range
/// containers are an error.
pub fn urn_contains(container: &CtsUrn, item: &CtsUrn, index: Option<&ReferenceIndex>) -> Result<bool, UrnError> {
    if !container.same_text(item) {
        return Ok(false);
    }
    let Some(cp) = container.passage() else {
        return Ok(true);
    };
    let Some(index) = index else {
        return match (&cp.end, item.passage()) {
            (None, Some(ip)) => Ok(point_contains(&cp.start, ip)),
            (None, None) => Ok(false),
            // an endpoint can reach past the range (`2.1.2-2` does not hold `2.1.1`),
            // so only document order decides
            (Some(_), _) => Err(UrnError::IndexRequired(container.to_string())),
        };
    };
    let (lo, _) = point_bounds(&cp.start, index).ok_or_else(|| UrnError::UnknownReference(cp.start.to_string()))?;
    let (_, hi) = point_bounds(cp.last(), index).ok_or_else(|| UrnError::UnknownReference(cp.last().to_string()))?;
    let item_bounds = match item.passage() {
        Some(ip) => passage_bounds(ip, index),
        None if index.is_empty() => None,
        None => Some(((0, 0), (index.len() - 1, u32::MAX))),
    };
    Ok(match item_bounds {
        Some((ilo, ihi)) => lo <= hi && ilo <= ihi && lo <= ilo && ihi <= hi,
        None => false,
    })
}

/// Leaf positions covered by `passage`, as an inclusive range.
pub fn expand_positions(
    passage: &PassageRef,
    index: &ReferenceIndex,
) -> Result<std::ops::RangeInclusive<usize>, UrnError> {
    let (start, _) = index
        .leaf_span(&passage.start.reference)
        .ok_or_else(|| UrnError::UnknownReference(passage.start.reference.to_string()))?;
    let last = passage.last();
    let (_, end) =
        index.leaf_span(&last.reference).ok_or_else(|| UrnError::UnknownReference(last.reference.to_string()))?;
    if end < start {
        return Err(UrnError::InvertedRange(passage.to_string()));
    }
    Ok(start..=end)
}

/// The leaf references covered by `passage`, in document order. Endpoints above
/// leaf level expand to the first leaf under the start and the last leaf under the
/// end. Token extensions are ignored.
pub fn expand_range(passage: &PassageRef, index: &ReferenceIndex) -> Result<Vec<DottedRef>, UrnError> {
    let positions = expand_positions(passage, index)?;
    Ok(index.refs[positions].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cts(s: &str) -> CtsUrn {
        parse_cts_urn(s).unwrap()
    }

    fn iliad_index() -> ReferenceIndex {
        ReferenceIndex::new((1..=7).map(|l| format!("1.{l}").parse().unwrap())).unwrap()
    }

    #[test]
    fn parses_range_urn() {
        let u = cts("urn:cts:greekLit:tlg0012.tlg001.perseus-grc2:1.1-1.7");
        assert_eq!(u.namespace(), "greekLit");
        assert_eq!(u.text_group(), "tlg0012");
        assert_eq!(u.work(), Some("tlg001"));
        assert_eq!(u.version(), Some("perseus-grc2"));
        let p = u.passage().unwrap();
        assert_eq!(p.start.reference.to_string(), "1.1");
        assert_eq!(p.end.as_ref().unwrap().reference.to_string(), "1.7");
        assert_eq!(u.to_string(), "urn:cts:greekLit:tlg0012.tlg001.perseus-grc2:1.1-1.7");
    }

    #[test]
    fn parses_point_and_work_level() {
        let u = cts("urn:cts:greekLit:tlg0003.tlg001.perseus-grc2:1.1.1");
        let p = u.passage().unwrap();
        assert!(!p.is_range());
        assert_eq!(p.start.reference.components(), ["1", "1", "1"]);

        let w = cts("urn:cts:greekLit:tlg0012.tlg001");
        assert_eq!(w.version(), None);
        assert!(w.passage().is_none());
        assert_eq!(format_cts_urn(&w), "urn:cts:greekLit:tlg0012.tlg001");
    }

    #[test]
    fn token_extension() {
        let u = cts("urn:cts:greekLit:tlg0012.tlg001.parrish-eng1:1.1.t4");
        let p = u.passage().unwrap();
        assert_eq!(p.start.token, Some(4));
        assert_eq!(p.start.reference.to_string(), "1.1");
        assert_eq!(u.to_string(), "urn:cts:greekLit:tlg0012.tlg001.parrish-eng1:1.1.t4");
        assert!(parse_cts_urn("urn:cts:greekLit:tlg0012.tlg001.v:1.1.t0").is_err());
        // a lone `t4` is a literal citation component
        assert_eq!(cts("urn:cts:x:a.b.c:t4").passage().unwrap().start.token, None);
    }

    #[test]
    fn hyphens_outside_passage_are_literal() {
        let u = cts("urn:cts:engLit:mds822-32.tpsth1-1599.pdl-eng:1.1");
        assert_eq!(u.text_group(), "mds822-32");
        assert_eq!(u.work(), Some("tpsth1-1599"));
        assert_eq!(u.version(), Some("pdl-eng"));
        assert!(!u.passage().unwrap().is_range());
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "urn:cts:greekLit",
            "urn:cts:x",
            "urn:cite2:greekLit:tlg0012.tlg001",
            "urn:cts::tlg0012.tlg001",
            "urn:cts:greekLit:tlg0012..v:1.1",
            "urn:cts:greekLit:tlg0012:1.1",
            "urn:cts:greekLit:tlg0012.tlg001:1..1",
            "urn:cts:greekLit:tlg0012.tlg001:1.1-1.2-1.3",
            "urn:cts:greekLit:tlg0012.tlg001:1.1-",
            "urn:cts:greekLit:tlg0012.tlg001:1.1:extra",
            "urn:cts:greekLit:tlg 0012.tlg001",
            "urn:cts:greekLit:tlg0012.tlg001:1.1@μῆνιν",
        ] {
            assert!(matches!(parse_cts_urn(bad), Err(UrnError::Malformed { .. })), "{bad} should be malformed");
        }
    }

    #[test]
    fn malformed_error_names_component() {
        let err = parse_cts_urn("urn:cts:greekLit:tlg0012:1.1").unwrap_err();
        let UrnError::Malformed { component, .. } = err else { panic!() };
        assert_eq!(component, "tlg0012");
    }

    #[test]
    fn canonicalizes_scheme_and_trailing_colon() {
        let u = cts("URN:CTS:greekLit:tlg0012.tlg001.perseus-grc2:");
        assert_eq!(u.to_string(), "urn:cts:greekLit:tlg0012.tlg001.perseus-grc2");
        assert_eq!(cts(&u.to_string()), u);
    }

    #[test]
    fn exemplar_is_accepted() {
        let u = cts("urn:cts:greekLit:tlg0012.tlg001.perseus-grc2.tokenized:1.1");
        assert_eq!(u.exemplar(), Some("tokenized"));
        assert_eq!(u.to_string(), "urn:cts:greekLit:tlg0012.tlg001.perseus-grc2.tokenized:1.1");
    }

    #[test]
    fn cite2_examples() {
        let u = parse_cite2_urn("urn:cite2:exploreHomer:senses.atlas_v1:1.117").unwrap();
        assert_eq!(
            (u.namespace(), u.collection(), u.version(), u.object_id()),
            ("exploreHomer", "senses", "atlas_v1", "1.117")
        );
        let c = parse_cite2_urn("urn:cite2:scaife-viewer:commentary.v1:commentary2").unwrap();
        assert_eq!(c.to_string(), "urn:cite2:scaife-viewer:commentary.v1:commentary2");
        assert!(matches!(parse_cite2_urn("urn:cite2:x:y:z"), Err(UrnError::Malformed { .. })));
        assert!(parse_cite2_urn("urn:cite2:x:y.:z").is_err());
        assert!(parse_cite2_urn("urn:cite2:x:y.v1:").is_err());
    }

    #[test]
    fn veref_roundtrip() {
        let v: VeRef = "1.1.t2".parse().unwrap();
        assert_eq!(v.reference.to_string(), "1.1");
        assert_eq!(v.token, 2);
        assert_eq!(v.to_string(), "1.1.t2");
        assert!("1.1".parse::<VeRef>().is_err());
    }

    #[test]
    fn contains_prefix_without_index() {
        let c = cts("urn:cts:greekLit:tlg0012.tlg001.perseus-grc2:1.1");
        let i = cts("urn:cts:greekLit:tlg0012.tlg001.perseus-grc2:1.1.2");
        assert!(urn_contains(&c, &i, None).unwrap());
        let other = cts("urn:cts:greekLit:tlg0012.tlg001.parrish-eng1:1.1.2");
        assert!(!urn_contains(&c, &other, None).unwrap());
    }

    #[test]
    fn contains_range_needs_index() {
        let c = cts("urn:cts:greekLit:tlg0012.tlg001.perseus-grc2:1.1-1.7");
        let i = cts("urn:cts:greekLit:tlg0012.tlg001.perseus-grc2:1.3");
        assert!(matches!(urn_contains(&c, &i, None), Err(UrnError::IndexRequired(_))));
        let idx = iliad_index();
        assert!(urn_contains(&c, &i, Some(&idx)).unwrap());
        let out = cts("urn:cts:greekLit:tlg0012.tlg001.perseus-grc2:2.1");
        assert!(!urn_contains(&c, &out, Some(&idx)).unwrap());
        // the end reference `1` reaches back before the range starts
        let nested = cts("urn:cts:greekLit:tlg0012.tlg001.perseus-grc2:1.3-1");
        let early = cts("urn:cts:greekLit:tlg0012.tlg001.perseus-grc2:1.1-1.2");
        assert!(!urn_contains(&nested, &early, Some(&idx)).unwrap());
    }

    #[test]
    fn contains_token_bounds() {
        let idx = iliad_index();
        let c = cts("urn:cts:a:b.c.d:1.1.t2-1.3");
        let yes = cts("urn:cts:a:b.c.d:1.1.t5");
        let no = cts("urn:cts:a:b.c.d:1.1.t1");
        let whole_row = cts("urn:cts:a:b.c.d:1.1");
        assert!(urn_contains(&c, &yes, Some(&idx)).unwrap());
        assert!(!urn_contains(&c, &no, Some(&idx)).unwrap());
        assert!(!urn_contains(&c, &whole_row, Some(&idx)).unwrap());
    }

    #[test]
    fn expand_examples() {
        let idx = iliad_index();
        let r: PassageRef = "1.1-1.7".parse().unwrap();
        let refs: Vec<String> = expand_range(&r, &idx).unwrap().iter().map(|r| r.to_string()).collect();
        assert_eq!(refs, ["1.1", "1.2", "1.3", "1.4", "1.5", "1.6", "1.7"]);
        let single: PassageRef = "1.1-1.1".parse().unwrap();
        assert_eq!(expand_range(&single, &idx).unwrap().len(), 1);
        let inverted: PassageRef = "1.7-1.1".parse().unwrap();
        assert!(matches!(expand_range(&inverted, &idx), Err(UrnError::InvertedRange(_))));
        let unknown: PassageRef = "1.1-9.9".parse().unwrap();
        assert!(matches!(expand_range(&unknown, &idx), Err(UrnError::UnknownReference(_))));
    }

    #[test]
    fn shallow_endpoints_expand_to_leaves() {
        let idx = ReferenceIndex::new(["1.1", "1.2", "2.1", "2.2", "3.1"].iter().map(|s| s.parse().unwrap())).unwrap();
        let r: PassageRef = "1-2".parse().unwrap();
        assert_eq!(expand_range(&r, &idx).unwrap().len(), 4);
        // crosses a top-level unit
        let r: PassageRef = "1.2-2.1".parse().unwrap();
        assert_eq!(expand_range(&r, &idx).unwrap().len(), 2);
    }

    #[test]
    fn index_rejects_duplicates() {
        let r: Vec<DottedRef> = vec!["1.1".parse().unwrap(), "1.1".parse().unwrap()];
        assert!(matches!(ReferenceIndex::new(r), Err(UrnError::DuplicateReference(_))));
    }

    #[test]
    fn index_positions_are_leaf_only() {
        let idx = iliad_index();
        assert_eq!(idx.position(&"1.3".parse().unwrap()), Some(2));
        assert_eq!(idx.position(&"1".parse().unwrap()), None);
        assert_eq!(idx.leaf_span(&"1".parse().unwrap()), Some((0, 6)));
    }
}
