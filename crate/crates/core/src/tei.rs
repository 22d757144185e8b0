//! Flattening of a TEI subset (nested `div[type=textpart]`) into text rows.

use std::collections::HashSet;

use crate::text::{normalize_text, TextError, TextRow, VersionMetadata};
use crate::urn::{parse_cts_urn, CtsUrn, DottedRef};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeiDivision {
    pub subtype: String,
    pub n: String,
    /// Flattened text of a leaf division.
    pub text: Option<String>,
    pub children: Vec<TeiDivision>,
}

impl TeiDivision {
    pub fn leaf(subtype: &str, n: &str, text: &str) -> Self {
        TeiDivision { subtype: subtype.into(), n: n.into(), text: Some(text.into()), children: vec![] }
    }

    pub fn branch(subtype: &str, n: &str, children: Vec<TeiDivision>) -> Self {
        TeiDivision { subtype: subtype.into(), n: n.into(), text: None, children }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeiSubsetDoc {
    pub edition_urn: CtsUrn,
    pub language: Option<String>,
    pub title: Option<String>,
    pub divisions: Vec<TeiDivision>,
}

const BLOCK_ELEMENTS: [&str; 5] = ["p", "l", "lg", "ab", "head"];

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn is_div(node: &roxmltree::Node, ty: &str) -> bool {
    node.is_element() && node.tag_name().name() == "div" && node.attribute("type") == Some(ty)
}

fn descendant_text(node: roxmltree::Node) -> String {
    let mut out = String::new();
    for d in node.descendants().filter(|d| d.is_text()) {
        out.push_str(d.text().unwrap_or_default());
    }
    out
}

fn parse_division(node: roxmltree::Node) -> TeiDivision {
    let mut children = Vec::new();
    let mut own_text = String::new();
    for child in node.children() {
        if is_div(&child, "textpart") {
            children.push(parse_division(child));
        } else if child.is_text() {
            own_text.push_str(child.text().unwrap_or_default());
        } else if child.is_element() {
            own_text.push_str(&descendant_text(child));
            if BLOCK_ELEMENTS.contains(&child.tag_name().name()) {
                own_text.push(' ');
            }
        }
    }
    let text = collapse_whitespace(&own_text);
    TeiDivision {
        subtype: node.attribute("subtype").unwrap_or_default().to_string(),
        n: node.attribute("n").unwrap_or_default().trim().to_string(),
        text: (!text.is_empty() || children.is_empty()).then_some(text),
        children,
    }
}

/// Reads the edition division and its textpart tree out of a TEI document.
pub fn parse_tei_xml(xml: &str) -> Result<TeiSubsetDoc, TextError> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| TextError::Xml(e.to_string()))?;
    let edition = doc
        .descendants()
        .find(|n| is_div(n, "edition"))
        .ok_or_else(|| TextError::Tei("no div[type=edition]".into()))?;
    let urn_text =
        edition.attribute("n").ok_or_else(|| TextError::Tei("edition division has no n attribute".into()))?;
    let edition_urn = parse_cts_urn(urn_text.trim()).map_err(|e| TextError::Tei(format!("edition URN: {e}")))?;
    let language = edition.attribute(("http://www.w3.org/XML/1998/namespace", "lang")).map(str::to_string);
    let title = doc
        .descendants()
        .find(|n| n.is_element() && n.tag_name().name() == "title")
        .map(|n| collapse_whitespace(&descendant_text(n)))
        .filter(|t| !t.is_empty());
    let divisions = edition.children().filter(|c| is_div(c, "textpart")).map(parse_division).collect();
    Ok(TeiSubsetDoc { edition_urn, language, title, divisions })
}

/// One row per leaf division in depth-first order. Leaves whose text is empty are
/// dropped with a warning.
pub fn flatten_tei_subset(doc: &TeiSubsetDoc) -> Result<(VersionMetadata, Vec<TextRow>), TextError> {
    let mut rows = Vec::new();
    let mut scheme: Option<Vec<String>> = None;
    let mut seen = HashSet::new();
    let mut path = Vec::new();
    let mut labels = Vec::new();
    for div in &doc.divisions {
        walk(div, &mut path, &mut labels, &mut rows, &mut scheme, &mut seen)?;
    }
    let version = doc.edition_urn.without_passage();
    let metadata = VersionMetadata {
        label: doc.title.clone().unwrap_or_else(|| version.version().unwrap_or(version.text_group()).to_string()),
        urn: version,
        language: doc.language.clone().unwrap_or_default(),
        citation_scheme: scheme.unwrap_or_default(),
    };
    Ok((metadata, rows))
}

fn walk(
    div: &TeiDivision,
    path: &mut Vec<String>,
    labels: &mut Vec<String>,
    rows: &mut Vec<TextRow>,
    scheme: &mut Option<Vec<String>>,
    seen: &mut HashSet<DottedRef>,
) -> Result<(), TextError> {
    path.push(div.n.clone());
    labels.push(div.subtype.clone());
    let here = path.join(".");
    if div.n.is_empty() {
        return Err(TextError::Tei(format!("division under `{here}` has an empty n attribute")));
    }
    let has_text = div.text.as_deref().is_some_and(|t| !t.trim().is_empty());
    if has_text && !div.children.is_empty() {
        return Err(TextError::MixedContent(here));
    }
    if div.children.is_empty() {
        let reference =
            DottedRef::new(path.iter().cloned()).map_err(|source| TextError::BadReference { line: 0, source })?;
        match scheme {
            Some(s) if s.len() != labels.len() => {
                return Err(TextError::UnevenCitationDepth { reference: here, depth: labels.len(), expected: s.len() })
            }
            Some(_) => {}
            None => *scheme = Some(labels.clone()),
        }
        if !seen.insert(reference.clone()) {
            return Err(TextError::DuplicateRef(here));
        }
        let text = normalize_text(&collapse_whitespace(div.text.as_deref().unwrap_or_default()));
        if text.is_empty() {
            log::warn!("dropping empty division {here}");
        } else {
            rows.push(TextRow::new(rows.len() as u64 + 1, reference, text));
        }
    } else {
        for child in &div.children {
            walk(child, path, labels, rows, scheme, seen)?;
        }
    }
    path.pop();
    labels.pop();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(divisions: Vec<TeiDivision>) -> TeiSubsetDoc {
        TeiSubsetDoc {
            edition_urn: parse_cts_urn("urn:cts:greekLit:tlg0001.tlg001.test-grc1").unwrap(),
            language: Some("grc".into()),
            title: None,
            divisions,
        }
    }

    #[test]
    fn minimal_document() {
        let (meta, rows) = flatten_tei_subset(&doc(vec![TeiDivision::leaf("line", "1", "x")])).unwrap();
        assert_eq!(rows, vec![TextRow::new(1, "1".parse().unwrap(), "x")]);
        assert_eq!(meta.citation_scheme, ["line"]);
        assert_eq!(meta.label, "test-grc1");
    }

    #[test]
    fn mixed_content_is_rejected() {
        let mut d = TeiDivision::branch("book", "1", vec![TeiDivision::leaf("line", "1", "a")]);
        d.text = Some("stray".into());
        assert!(matches!(flatten_tei_subset(&doc(vec![d])), Err(TextError::MixedContent(r)) if r == "1"));
    }

    #[test]
    fn duplicate_ref_is_rejected() {
        let d = TeiDivision::branch(
            "book",
            "1",
            vec![TeiDivision::leaf("line", "1", "a"), TeiDivision::leaf("line", "1", "b")],
        );
        assert!(matches!(flatten_tei_subset(&doc(vec![d])), Err(TextError::DuplicateRef(_))));
    }

    #[test]
    fn empty_leaves_are_dropped() {
        let d = TeiDivision::branch(
            "book",
            "1",
            vec![
                TeiDivision::leaf("line", "1", "a"),
                TeiDivision::leaf("line", "2", "  "),
                TeiDivision::leaf("line", "3", "c"),
            ],
        );
        let (_, rows) = flatten_tei_subset(&doc(vec![d])).unwrap();
        assert_eq!(
            rows.iter().map(|r| (r.seq, r.reference.to_string())).collect::<Vec<_>>(),
            [(1, "1.1".to_string()), (2, "1.3".to_string())]
        );
    }

    #[test]
    fn uneven_depth_is_rejected() {
        let d = vec![
            TeiDivision::branch("book", "1", vec![TeiDivision::leaf("line", "1", "a")]),
            TeiDivision::leaf("book", "2", "b"),
        ];
        assert!(matches!(flatten_tei_subset(&doc(d)), Err(TextError::UnevenCitationDepth { .. })));
    }

    #[test]
    fn inline_markup_is_flattened() {
        let xml = r#"<TEI><text><body><div type="edition" n="urn:cts:latinLit:phi0690.phi003.test-lat1" xml:lang="lat">
            <div type="textpart" subtype="line" n="1"><l>arma <hi rend="x">virumque</hi>
            cano sing<hi>ula</hi>ri</l></div></div></body></text></TEI>"#;
        let d = parse_tei_xml(xml).unwrap();
        assert_eq!(d.language.as_deref(), Some("lat"));
        let (_, rows) = flatten_tei_subset(&d).unwrap();
        assert_eq!(rows[0].text, "arma virumque cano singulari");
    }

    #[test]
    fn missing_edition() {
        assert!(matches!(parse_tei_xml("<TEI/>"), Err(TextError::Tei(_))));
        assert!(matches!(parse_tei_xml("<TEI>"), Err(TextError::Xml(_))));
    }
}
