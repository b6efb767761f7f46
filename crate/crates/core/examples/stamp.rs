//! Stamp a two-slide template: one global tag, one sequenced slide.

use std::collections::BTreeMap;

use orgmap::deck::{render_deck_html, stamp, DeckTemplate, Replacement, Sequence, StampSpec};
use orgmap::theme::Theme;

const TEMPLATE: &str = r#"{
  "slides": [
    {"slideId": "intro", "elements": [{"kind": "text", "role": "title", "content": "We found {detected workgroup count} workgroups"}]},
    {"slideId": "group", "elements": [{"kind": "text", "content": "Workgroup {id}: {{size}} is not a tag, {size} is"}]}
  ]
}"#;

fn main() -> orgmap::Result<()> {
    let template = DeckTemplate::from_json(TEMPLATE)?;
    let instance = |id: &str, size: &str| {
        BTreeMap::from([("id".to_string(), Replacement::text(id)), ("size".to_string(), Replacement::text(size))])
    };
    let spec = StampSpec {
        replacements: BTreeMap::from([("detected workgroup count".into(), Replacement::text("2"))]),
        sequences: vec![Sequence { slide_ids: vec!["group".into()], instances: vec![instance("7", "12"), instance("9", "30")] }],
        ..StampSpec::default()
    };
    let deck = stamp(&template, &spec, &BTreeMap::new(), Some(&Theme::default()))?;
    for s in &deck.slides {
        println!("{}: {}", s.slide_id, s.elements[0].content);
    }
    println!("{} bytes of html", render_deck_html(&deck).len());
    Ok(())
}
