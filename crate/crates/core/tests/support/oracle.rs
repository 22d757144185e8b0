//! Random catalogs and a brute-force reference implementation of overlap
//! queries that shares no code with the catalog's interval index.

#![allow(dead_code)]

use std::collections::BTreeMap;

use atlas_core::annotations::{Annotation, AnnotationKind, AudioAnnotation, GrammarLink};
use atlas_core::store::Catalog;
use atlas_core::text::{TextRow, VersionMetadata};
use atlas_core::urn::{CtsUrn, DottedRef, PassagePoint, PassageRef};
use rand::seq::SliceRandom;
use rand::Rng;

pub struct VersionSpec {
    pub urn: CtsUrn,
    pub refs: Vec<DottedRef>,
    pub token_counts: Vec<usize>,
}

pub struct RandomCatalog {
    pub catalog: Catalog,
    pub versions: Vec<VersionSpec>,
    /// A version that annotations may target but that is never loaded.
    pub unloaded: CtsUrn,
    pub annotations: Vec<Annotation>,
}

const WORDS: [&str; 8] = ["arma", "virumque", "cano", "Troiae", "qui", "primus", "ab", "oris"];

fn random_version<R: Rng>(rng: &mut R, name: &str, max_rows: usize) -> (VersionSpec, Vec<TextRow>) {
    let urn: CtsUrn = format!("urn:cts:latinLit:phi0690.phi003.{name}").parse().unwrap();
    let mut refs = Vec::new();
    let depth = rng.gen_range(1..=3);
    let mut rows = Vec::new();
    let mut token_counts = Vec::new();
    let target = rng.gen_range(1..=max_rows);
    let mut book = 0;
    while refs.len() < target {
        book += 1;
        let lines = rng.gen_range(1..=12);
        for line in 1..=lines {
            let r: DottedRef = match depth {
                1 => format!("{book}"),
                2 => format!("{book}.{line}"),
                _ => format!("{book}.{}.{}", (line + 2) / 3, line),
            }
            .parse()
            .unwrap();
            let n = rng.gen_range(1..=6);
            let text: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect();
            rows.push(TextRow::new(refs.len() as u64 + 1, r.clone(), text.join(" ")));
            refs.push(r);
            token_counts.push(n);
            if depth == 1 || refs.len() >= target {
                break;
            }
        }
    }
    (VersionSpec { urn, refs, token_counts }, rows)
}

fn random_point<R: Rng>(rng: &mut R, v: &VersionSpec) -> PassagePoint {
    let i = rng.gen_range(0..v.refs.len());
    let leaf = &v.refs[i];
    match rng.gen_range(0..4) {
        0 => PassagePoint::new(leaf.components()[0].parse().unwrap()),
        1 => PassagePoint::token(leaf.clone(), rng.gen_range(1..=v.token_counts[i] as u32 + 1)),
        _ => PassagePoint::new(leaf.clone()),
    }
}

/// A URN into one of `versions` or into `unloaded`.
pub fn random_urn<R: Rng>(rng: &mut R, versions: &[VersionSpec], unloaded: &CtsUrn, allow_whole: bool) -> CtsUrn {
    if rng.gen_ratio(1, 20) {
        return unloaded.with_passage(PassageRef::point(PassagePoint::new("1.1".parse().unwrap())));
    }
    let v = versions.choose(rng).unwrap();
    match rng.gen_range(0..10) {
        0 if allow_whole => v.urn.clone(),
        1..=4 => v.urn.with_passage(PassageRef::range(random_point(rng, v), random_point(rng, v))),
        _ => v.urn.with_passage(PassageRef::point(random_point(rng, v))),
    }
}

pub fn random_catalog<R: Rng>(rng: &mut R, max_rows: usize, max_annotations: usize) -> RandomCatalog {
    let n_versions = rng.gen_range(1..=3);
    let mut versions = Vec::new();
    let mut rows = Vec::new();
    for i in 0..n_versions {
        let (spec, r) = random_version(rng, &format!("v{i}-lat1"), max_rows / n_versions);
        versions.push(spec);
        rows.push(r);
    }
    let unloaded: CtsUrn = "urn:cts:latinLit:phi0690.phi003.absent-lat1".parse().unwrap();

    let n = rng.gen_range(0..=max_annotations);
    let mut annotations = Vec::with_capacity(n);
    for i in 0..n {
        let a = if rng.gen_bool(0.5) {
            let mut target = random_urn(rng, &versions, &unloaded, false);
            if target.passage().is_none() {
                target = target.with_passage(PassageRef::point(PassagePoint::new("1".parse().unwrap())));
            }
            Annotation::Audio(AudioAnnotation { target, media_url: format!("{i}.mp4") })
        } else {
            let targets = (0..rng.gen_range(1..=3)).map(|_| random_urn(rng, &versions, &unloaded, false)).collect();
            Annotation::Grammar(GrammarLink {
                entry_id: format!("G{}", rng.gen_range(0..max_annotations.max(1) * 2)),
                title: String::new(),
                body_html: None,
                targets,
                extra: Default::default(),
            })
        };
        annotations.push(a);
    }

    // Some versions arrive before the annotations, some after.
    let mut catalog = Catalog::new();
    let mut late = Vec::new();
    for (spec, r) in versions.iter().zip(rows) {
        let meta = VersionMetadata {
            urn: spec.urn.clone(),
            language: "lat".into(),
            label: spec.urn.version().unwrap().into(),
            citation_scheme: vec![],
        };
        if rng.gen_bool(0.5) {
            catalog = catalog.register_version(meta, r).unwrap();
        } else {
            late.push((meta, r));
        }
    }
    let split = rng.gen_range(0..=annotations.len());
    catalog = catalog.with_annotations(annotations[..split].iter().cloned());
    for (meta, r) in late {
        catalog = catalog.register_version(meta, r).unwrap();
    }
    catalog = catalog.with_annotations(annotations[split..].iter().cloned());

    // later records replace earlier ones with the same identity
    let mut latest: BTreeMap<(&'static str, String), Annotation> = BTreeMap::new();
    for a in annotations {
        latest.insert((a.family(), a.record_key()), a);
    }
    RandomCatalog { catalog, versions, unloaded, annotations: latest.into_values().collect() }
}

fn same_version(a: &CtsUrn, b: &CtsUrn) -> bool {
    a.namespace() == b.namespace()
        && a.text_group() == b.text_group()
        && a.work() == b.work()
        && a.version() == b.version()
}

fn under(prefix: &DottedRef, leaf: &DottedRef) -> bool {
    let p = prefix.components();
    leaf.components().len() >= p.len() && leaf.components()[..p.len()] == *p
}

/// (row, token) where token 0 is the row start and u32::MAX its end.
fn endpoint(v: &VersionSpec, p: &PassagePoint, first: bool) -> Option<(usize, u32)> {
    match p.token {
        Some(t) => {
            let i = v.refs.iter().position(|r| r == &p.reference)?;
            (t >= 1 && t as usize <= v.token_counts[i]).then_some((i, t))
        }
        None => {
            let mut matching = (0..v.refs.len()).filter(|&i| under(&p.reference, &v.refs[i]));
            if first {
                matching.next().map(|i| (i, 0))
            } else {
                matching.next_back().map(|i| (i, u32::MAX))
            }
        }
    }
}

/// Every row and every token of a version gets its own bit: row i is followed
/// by its tokens. A passage covers a row's bit only when it takes the whole row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cover {
    words: Vec<u64>,
}

impl Cover {
    fn empty(v: &VersionSpec) -> Self {
        let units: usize = v.token_counts.iter().map(|n| n + 1).sum();
        Cover { words: vec![0; units.div_ceil(64)] }
    }

    fn set(&mut self, unit: usize) {
        self.words[unit / 64] |= 1 << (unit % 64);
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn meets(&self, other: &Cover) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn within(&self, other: &Cover) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }
}

pub fn cover(v: &VersionSpec, urn: &CtsUrn) -> Cover {
    let mut out = Cover::empty(v);
    let (lo, hi) = match urn.passage() {
        None => ((0, 0), (v.refs.len() - 1, u32::MAX)),
        Some(p) => {
            let end = p.end.as_ref().unwrap_or(&p.start);
            match (endpoint(v, &p.start, true), endpoint(v, end, false)) {
                (Some(lo), Some(hi)) => (lo, hi),
                _ => return out,
            }
        }
    };
    if lo > hi {
        return out;
    }
    let base: usize = v.token_counts[..lo.0].iter().map(|n| n + 1).sum();
    let mut row_unit = base;
    for i in lo.0..=hi.0 {
        let from = if i == lo.0 { lo.1.max(1) } else { 1 };
        let to = if i == hi.0 { hi.1.min(v.token_counts[i] as u32) } else { v.token_counts[i] as u32 };
        let whole = (i > lo.0 || lo.1 == 0) && (i < hi.0 || hi.1 == u32::MAX);
        if whole {
            out.set(row_unit);
        }
        for t in from..=to {
            out.set(row_unit + t as usize);
        }
        row_unit += v.token_counts[i] + 1;
    }
    out
}

/// Linear scan over every annotation target, with target covers computed once.
pub struct Oracle<'a> {
    versions: &'a [VersionSpec],
    targets: Vec<(&'a Annotation, Vec<(usize, Cover)>)>,
}

impl<'a> Oracle<'a> {
    pub fn new(versions: &'a [VersionSpec], annotations: &'a [Annotation]) -> Self {
        let targets = annotations
            .iter()
            .map(|a| {
                let covers = a
                    .targets()
                    .iter()
                    .filter_map(|t| {
                        let i = versions.iter().position(|v| same_version(&v.urn, t))?;
                        Some((i, cover(&versions[i], t)))
                    })
                    .collect();
                (a, covers)
            })
            .collect();
        Oracle { versions, targets }
    }

    /// Record keys of the annotations overlapping `query`, ordered by kind then
    /// key, or `None` when the query names a version that is not loaded.
    pub fn overlapping(&self, query: &CtsUrn, kind: Option<AnnotationKind>) -> Option<Vec<(AnnotationKind, String)>> {
        let vi = self.versions.iter().position(|v| same_version(&v.urn, query))?;
        let q = cover(&self.versions[vi], query);
        let mut out: Vec<(AnnotationKind, String)> = self
            .targets
            .iter()
            .filter(|(a, _)| kind.is_none_or(|k| a.kind() == k))
            .filter(|(_, covers)| covers.iter().any(|(i, c)| *i == vi && q.meets(c)))
            .map(|(a, _)| (a.kind(), a.record_key()))
            .collect();
        out.sort();
        out.dedup();
        Some(out)
    }
}

pub fn brute_overlapping(
    versions: &[VersionSpec],
    annotations: &[Annotation],
    query: &CtsUrn,
    kind: Option<AnnotationKind>,
) -> Option<Vec<(AnnotationKind, String)>> {
    Oracle::new(versions, annotations).overlapping(query, kind)
}

/// Whether `container` covers every unit `item` covers, for two passages of
/// `v` that each cover something. `None` otherwise.
pub fn brute_contains(v: &VersionSpec, container: &CtsUrn, item: &CtsUrn) -> Option<bool> {
    let (c, i) = (cover(v, container), cover(v, item));
    if c.is_empty() || i.is_empty() {
        return None;
    }
    Some(i.within(&c))
}

/// Leaves from the first under the start reference to the last under the end
/// reference, or `None` when there are none.
pub fn brute_expand(v: &VersionSpec, passage: &PassageRef) -> Option<Vec<DottedRef>> {
    let end = passage.end.as_ref().unwrap_or(&passage.start);
    let first = v.refs.iter().position(|r| under(&passage.start.reference, r))?;
    let last = v.refs.iter().rposition(|r| under(&end.reference, r))?;
    (first <= last).then(|| v.refs[first..=last].to_vec())
}
