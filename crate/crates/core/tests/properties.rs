use std::collections::HashSet;

use atlas_core::annotations::{parse_conllu, validate_tree, SyntaxTree, TreeWord, ValidationMode};
use atlas_core::text::{read_text_tsv, tokenize_row, write_text_tsv, TextRow};
use atlas_core::urn::{
    expand_range, parse_cts_urn, urn_contains, CtsUrn, DottedRef, PassagePoint, PassageRef, ReferenceIndex,
};
use proptest::prelude::*;

fn ident() -> impl Strategy<Value = String> {
    "[a-zA-Z][a-zA-Z0-9]{0,7}"
}

/// `t` followed by digits is how a token index is written, so it cannot be a
/// reference component.
fn component() -> impl Strategy<Value = String> {
    "[0-9a-z]{1,4}".prop_filter("token notation", |c| {
        !(c.len() > 1 && c.starts_with('t') && c[1..].bytes().all(|b| b.is_ascii_digit()))
    })
}

fn dotted(max_depth: usize) -> impl Strategy<Value = DottedRef> {
    prop::collection::vec(component(), 1..=max_depth).prop_map(|c| DottedRef::new(c).unwrap())
}

fn point() -> impl Strategy<Value = PassagePoint> {
    (dotted(4), prop::option::of(1u32..500)).prop_map(|(r, t)| PassagePoint { reference: r, token: t })
}

fn cts_urn() -> impl Strategy<Value = CtsUrn> {
    (
        ident(),
        "tlg[0-9]{4}",
        prop::option::of(("tlg[0-9]{3}", prop::option::of(("[a-z]{3,8}-[a-z]{3}[0-9]", prop::option::of(ident()))))),
        prop::option::of((point(), prop::option::of(point()))),
    )
        .prop_map(|(ns, group, work, passage)| {
            let mut s = format!("urn:cts:{ns}:{group}");
            let has_work = work.is_some();
            if let Some((w, version)) = work {
                s.push('.');
                s.push_str(&w);
                if let Some((v, exemplar)) = version {
                    s.push('.');
                    s.push_str(&v);
                    if let Some(e) = exemplar {
                        s.push('.');
                        s.push_str(&e);
                    }
                }
            }
            let mut urn = parse_cts_urn(&s).unwrap();
            if let (true, Some((start, end))) = (has_work, passage) {
                urn = urn.with_passage(PassageRef { start, end });
            }
            urn
        })
}

/// A citation tree with uneven fan-out, flattened to leaves in document order.
fn leaf_refs() -> impl Strategy<Value = Vec<DottedRef>> {
    prop::collection::vec(prop::collection::vec(1usize..5, 1..6), 1..6).prop_map(|books| {
        let mut out = Vec::new();
        for (b, chapters) in books.iter().enumerate() {
            for (c, &sections) in chapters.iter().enumerate() {
                for s in 0..sections {
                    out.push(format!("{}.{}.{}", b + 1, c + 1, s + 1).parse().unwrap());
                }
            }
        }
        out
    })
}

fn prefix(r: &DottedRef, depth: usize) -> DottedRef {
    DottedRef::new(r.components()[..depth.min(r.depth())].iter().cloned()).unwrap()
}

proptest! {
    #[test]
    fn urn_format_parse_roundtrip(urn in cts_urn()) {
        let text = urn.to_string();
        let back = parse_cts_urn(&text).unwrap();
        prop_assert_eq!(&back, &urn);
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn range_expansion_agrees_with_containment(
        refs in leaf_refs(),
        picks in (any::<prop::sample::Index>(), 1usize..=3, any::<prop::sample::Index>(), 1usize..=3),
    ) {
        let index = ReferenceIndex::new(refs.clone()).unwrap();
        let (a, da, b, db) = picks;
        let start = prefix(&refs[a.index(refs.len())], da);
        let end = prefix(&refs[b.index(refs.len())], db);
        let version = parse_cts_urn("urn:cts:greekLit:tlg0003.tlg001.perseus-grc2").unwrap();
        let range = version.with_passage(PassageRef::range(PassagePoint::new(start.clone()), PassagePoint::new(end.clone())));
        let passage = range.passage().unwrap();

        // brute force: leaves from the first under `start` to the last under `end`
        let first = refs.iter().position(|r| start.is_prefix_of(r)).unwrap();
        let last = refs.iter().rposition(|r| end.is_prefix_of(r)).unwrap();
        match expand_range(passage, &index) {
            Ok(expanded) => {
                prop_assert!(first <= last);
                prop_assert_eq!(&expanded[..], &refs[first..=last]);
            }
            Err(_) => prop_assert!(first > last),
        }
        let inside: HashSet<usize> = if first <= last { (first..=last).collect() } else { HashSet::new() };
        for (i, r) in refs.iter().enumerate() {
            let leaf = version.with_passage(PassageRef::point(PassagePoint::new(r.clone())));
            let contained = urn_contains(&range, &leaf, Some(&index)).unwrap();
            prop_assert_eq!(contained, inside.contains(&i), "leaf {}", r);
        }
    }

    #[test]
    fn tokens_rebuild_the_row(text in "[ a-zA-Zά-ώ,.;·'’()\u{0301}]{1,60}") {
        prop_assume!(!text.trim().is_empty());
        let row = TextRow::new(1, "1.1".parse().unwrap(), text.clone());
        let chars: Vec<char> = text.chars().collect();
        let tokens = tokenize_row(&row);
        let mut cursor = 0;
        for (i, t) in tokens.iter().enumerate() {
            prop_assert_eq!(t.ve_ref.token as usize, i + 1);
            prop_assert!(t.char_start >= cursor && t.char_start < t.char_end);
            prop_assert!(chars[cursor..t.char_start].iter().all(|c| c.is_whitespace()));
            prop_assert_eq!(chars[t.char_start..t.char_end].iter().collect::<String>(), t.value.clone());
            cursor = t.char_end;
        }
        prop_assert!(chars[cursor..].iter().all(|c| c.is_whitespace()));
    }

    #[test]
    fn text_tsv_roundtrip(texts in prop::collection::vec("[^\t\n\r]{1,30}", 0..20)) {
        let rows: Vec<TextRow> = texts
            .into_iter()
            .filter(|t| !t.trim().is_empty())
            .enumerate()
            .map(|(i, t)| TextRow::new(i as u64 + 1, format!("1.{}", i + 1).parse().unwrap(), t))
            .collect();
        let bytes = write_text_tsv(&rows).unwrap();
        prop_assert_eq!(read_text_tsv(&bytes).unwrap(), rows);
    }

    #[test]
    fn strict_validation_accepts_exactly_forests(heads in prop::collection::vec(0u32..12, 0..10)) {
        let words: Vec<TreeWord> = heads
            .iter()
            .enumerate()
            .map(|(i, &h)| TreeWord {
                id: i as u32 + 1,
                value: format!("w{i}"),
                head_id: h,
                relation: None,
                lemma: None,
                tag: None,
                extra: Default::default(),
            })
            .collect();
        let tree = SyntaxTree::new("urn:cite2:x:syntaxTree.v1:t".parse().unwrap(), None, words);
        // following heads from every word reaches the root within n steps
        let n = heads.len() as u32;
        let is_forest = (1..=n).all(|start| {
            let mut cur = start;
            for _ in 0..=n {
                if cur == 0 {
                    return true;
                }
                if cur > n {
                    return false;
                }
                cur = heads[cur as usize - 1];
            }
            false
        });
        prop_assert_eq!(validate_tree(&tree, ValidationMode::Strict).is_ok(), is_forest);
        prop_assert_eq!(validate_tree(&tree, ValidationMode::Lenient).unwrap().is_empty(), is_forest);
    }

    #[test]
    fn conllu_dialects_agree(heads in prop::collection::vec(prop::option::of(0u32..6), 1..6)) {
        let n = heads.len() as u32;
        let heads: Vec<Option<u32>> = heads.into_iter().map(|h| h.map(|h| h.min(n))).collect();
        let mut standard = String::from("# sent_id = 2.3\n");
        let mut leading = String::new();
        for (i, h) in heads.iter().enumerate() {
            let std_head = h.map_or("_".to_string(), |h| h.to_string());
            standard.push_str(&format!("{}\tw{i}\tl{i}\tNOUN\tn\tCase=Nom\t{std_head}\tdep\t_\t_\n", i + 1));
            // the leading-reference dialect numbers from 0 and has no root sentinel,
            // so only heads that point at a word can be written in it
            let lead_head = match h {
                Some(0) | None => String::new(),
                Some(h) => (h - 1).to_string(),
            };
            leading.push_str(&format!("2.3\t{i}\tw{i}\tNOUN\tn\tCase=Nom\tl{i}\tdep\t{lead_head}\t\t\n"));
        }
        let a = parse_conllu(standard.as_bytes()).unwrap();
        let b = parse_conllu(leading.as_bytes()).unwrap();
        prop_assert_eq!(a[0].tokens.len(), b[0].tokens.len());
        for (x, y) in a[0].tokens.iter().zip(&b[0].tokens) {
            let expected = match x.head { Some(0) => None, h => h };
            prop_assert_eq!(expected, y.head);
            prop_assert_eq!((&x.form, &x.lemma, &x.feats, x.index), (&y.form, &y.lemma, &y.feats, y.index));
        }
    }
}
