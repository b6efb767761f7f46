use std::collections::{BTreeMap, BTreeSet};

use orgmap::deck::{
    expanded_slide_count, stamp, validate_spec, DeckTemplate, Element, Replacement, Sequence, StampSpec, TemplateSlide,
};
use orgmap::error::Error;
use proptest::prelude::*;

const TAGS: [&str; 5] = ["title", "detected workgroup count", "owner", "month", "note"];

#[derive(Debug, Clone)]
enum Piece {
    Lit(String),
    Tag(usize),
}

fn render(pieces: &[Piece]) -> String {
    pieces
        .iter()
        .map(|p| match p {
            Piece::Lit(s) => s.replace('{', "{{").replace('}', "}}"),
            Piece::Tag(t) => format!("{{{}}}", TAGS[*t]),
        })
        .collect()
}

fn expected(pieces: &[Piece], values: &BTreeMap<&str, String>) -> String {
    pieces
        .iter()
        .map(|p| match p {
            Piece::Lit(s) => s.clone(),
            Piece::Tag(t) => values[TAGS[*t]].clone(),
        })
        .collect()
}

fn pieces() -> impl Strategy<Value = Vec<Piece>> {
    prop::collection::vec(
        prop_oneof![
            "[a-z {}]{0,6}".prop_map(Piece::Lit),
            (0..TAGS.len()).prop_map(Piece::Tag),
        ],
        0..5,
    )
}

fn template() -> impl Strategy<Value = Vec<Vec<Vec<Piece>>>> {
    prop::collection::vec(prop::collection::vec(pieces(), 1..4), 1..7)
}

fn build(slides: &[Vec<Vec<Piece>>]) -> DeckTemplate {
    DeckTemplate::new(
        slides
            .iter()
            .enumerate()
            .map(|(i, els)| TemplateSlide {
                slide_id: format!("s{i}"),
                elements: els.iter().map(|p| Element::text(render(p))).collect(),
            })
            .collect(),
    )
}

fn all_values(salt: &str) -> BTreeMap<&'static str, String> {
    TAGS.iter().map(|t| (*t, format!("{salt}<{t}>"))).collect()
}

fn replacements(values: &BTreeMap<&str, String>) -> BTreeMap<String, Replacement> {
    values.iter().map(|(k, v)| (k.to_string(), Replacement::text(v.clone()))).collect()
}

#[test]
fn workgroup_count_example() {
    let t = DeckTemplate::new(vec![TemplateSlide {
        slide_id: "network".into(),
        elements: vec![Element::text("We found {detected workgroup count} workgroups {{not a tag}}")],
    }]);
    let spec = StampSpec {
        replacements: BTreeMap::from([("detected workgroup count".into(), Replacement::text("37"))]),
        ..StampSpec::default()
    };
    let deck = stamp(&t, &spec, &BTreeMap::new(), None).unwrap();
    assert_eq!(deck.slides[0].elements[0].content, "We found 37 workgroups {not a tag}");
}

#[test]
fn missing_media_is_reported_after_tags() {
    let t = DeckTemplate::new(vec![TemplateSlide {
        slide_id: "a".into(),
        elements: vec![Element::image("{figure}"), Element::image("figures/none.svg")],
    }]);
    let spec = StampSpec::default();
    assert!(matches!(stamp(&t, &spec, &BTreeMap::new(), None), Err(Error::UnresolvedTags(v)) if v == vec!["figure"]));
    let spec = StampSpec {
        replacements: BTreeMap::from([("figure".into(), Replacement::url("https://example.org/x.png"))]),
        ..StampSpec::default()
    };
    assert!(matches!(stamp(&t, &spec, &BTreeMap::new(), None), Err(Error::MissingMedia(p)) if p == "figures/none.svg"));
    let media = BTreeMap::from([("figures/none.svg".to_string(), b"<svg/>".to_vec())]);
    let deck = stamp(&t, &spec, &media, None).unwrap();
    assert_eq!(deck.media.len(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn global_replacement_matches_oracle(slides in template()) {
        let values = all_values("v");
        let spec = StampSpec { replacements: replacements(&values), ..StampSpec::default() };
        let deck = stamp(&build(&slides), &spec, &BTreeMap::new(), None).unwrap();
        prop_assert_eq!(deck.slides.len(), slides.len());
        for (got, want) in deck.slides.iter().zip(&slides) {
            for (e, p) in got.elements.iter().zip(want) {
                prop_assert_eq!(&e.content, &expected(p, &values));
            }
        }
    }

    #[test]
    fn sequences_expand_by_formula(slides in template(), picks in prop::collection::vec((any::<prop::sample::Index>(), 0usize..4), 0..3)) {
        let t = build(&slides);
        let mut owner = BTreeMap::new();
        let mut sequences = Vec::new();
        for (i, (idx, copies)) in picks.iter().enumerate() {
            let k = idx.index(slides.len());
            if owner.contains_key(&k) {
                continue;
            }
            owner.insert(k, (i, *copies));
            let instances = (0..*copies).map(|c| replacements(&all_values(&format!("q{i}.{c}")))).collect();
            sequences.push(Sequence { slide_ids: vec![format!("s{k}")], instances });
        }
        let spec = StampSpec { replacements: replacements(&all_values("g")), sequences, ..StampSpec::default() };
        let deck = stamp(&t, &spec, &BTreeMap::new(), None).unwrap();

        // walk the template by hand
        let mut want = Vec::new();
        for (k, els) in slides.iter().enumerate() {
            match owner.get(&k) {
                Some(&(i, copies)) => {
                    for c in 0..copies {
                        let v = all_values(&format!("q{i}.{c}"));
                        want.push((format!("s{k}"), els.iter().map(|p| expected(p, &v)).collect::<Vec<_>>()));
                    }
                }
                None => want.push((format!("s{k}"), els.iter().map(|p| expected(p, &all_values("g"))).collect())),
            }
        }
        prop_assert_eq!(deck.slides.len(), want.len());
        prop_assert_eq!(expanded_slide_count(&t, &spec), want.len());
        for (got, (id, contents)) in deck.slides.iter().zip(&want) {
            prop_assert_eq!(&got.slide_id, id);
            let got: Vec<&String> = got.elements.iter().map(|e| &e.content).collect();
            prop_assert_eq!(got, contents.iter().collect::<Vec<_>>());
        }
    }

    #[test]
    fn restamping_a_deck_is_identity(slides in template()) {
        let spec = StampSpec { replacements: replacements(&all_values("{x}")), ..StampSpec::default() };
        let deck = stamp(&build(&slides), &spec, &BTreeMap::new(), None).unwrap();
        let again = stamp(&deck.to_template(), &StampSpec::default(), &deck.media_bytes(), None).unwrap();
        prop_assert_eq!(again.slides.iter().map(|s| &s.elements).collect::<Vec<_>>(), deck.slides.iter().map(|s| &s.elements).collect::<Vec<_>>());
    }

    #[test]
    fn unresolved_tags_are_reported_exactly(slides in template(), drop in prop::collection::btree_set(0..TAGS.len(), 0..TAGS.len())) {
        let mut values = all_values("v");
        for d in &drop {
            values.remove(TAGS[*d]);
        }
        let spec = StampSpec { replacements: replacements(&values), ..StampSpec::default() };
        let t = build(&slides);
        let used: BTreeSet<usize> = slides.iter().flatten().flatten().filter_map(|p| match p { Piece::Tag(t) => Some(*t), _ => None }).collect();
        let want: Vec<String> = TAGS.iter().enumerate().filter(|(i, _)| used.contains(i) && drop.contains(i)).map(|(_, t)| t.to_string()).collect::<BTreeSet<_>>().into_iter().collect();
        let report = validate_spec(&t, &spec);
        prop_assert_eq!(&report.unresolved_tags, &want);
        match stamp(&t, &spec, &BTreeMap::new(), None) {
            Ok(_) => prop_assert!(want.is_empty()),
            Err(Error::UnresolvedTags(got)) => prop_assert_eq!(got, want),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}
