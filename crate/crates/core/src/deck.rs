//! Template-driven slide decks: `{tag}` placeholders replaced with text or
//! media, reusable slide sequences, theme colours and a single-file HTML view.
//!
//! Tags are `{name}` with no nesting; `{{` and `}}` stand for literal braces.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::path::Path;

use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::color::Rgb;
use crate::error::{Error, Result};
use crate::theme::Theme;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Text,
    Image,
}

/// One slide element. In templates `content` may hold tags; in a stamped deck
/// it holds the resolved text, media path or URL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Element {
    pub kind: ElementKind,
    pub content: String,
    /// Styling role for text, e.g. `title` or `body`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<String>,
}

impl Element {
    pub fn text(content: impl Into<String>) -> Self {
        Element { kind: ElementKind::Text, content: content.into(), role: None, link: None }
    }

    pub fn image(content: impl Into<String>) -> Self {
        Element { kind: ElementKind::Image, content: content.into(), role: None, link: None }
    }

    pub fn with_role(mut self, role: impl Into<String>) -> Self {
        self.role = Some(role.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TemplateSlide {
    pub slide_id: String,
    pub elements: Vec<Element>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DeckTemplate {
    #[serde(default = "format_version")]
    pub format_version: u32,
    pub slides: Vec<TemplateSlide>,
}

fn format_version() -> u32 {
    FORMAT_VERSION
}

fn check_version(v: u32) -> Result<()> {
    if v != FORMAT_VERSION {
        return Err(Error::Template(format!("unsupported formatVersion {v}, expected {FORMAT_VERSION}")));
    }
    Ok(())
}

impl DeckTemplate {
    pub fn new(slides: Vec<TemplateSlide>) -> Self {
        DeckTemplate { format_version: FORMAT_VERSION, slides }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: DeckTemplate = serde_json::from_str(text)?;
        check_version(t.format_version)?;
        t.check()?;
        Ok(t)
    }

    /// Unique slide ids and well-formed tags.
    pub fn check(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for s in &self.slides {
            if !seen.insert(&s.slide_id) {
                return Err(Error::Template(format!("duplicate slideId `{}`", s.slide_id)));
            }
            for e in &s.elements {
                parse_content(&e.content)?;
            }
        }
        Ok(())
    }

    pub fn slide(&self, id: &str) -> Option<&TemplateSlide> {
        self.slides.iter().find(|s| s.slide_id == id)
    }

    /// Every tag on the given slides, in first-appearance order.
    pub fn tags_on<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for id in ids {
            let Some(slide) = self.slide(id) else { continue };
            for e in &slide.elements {
                for seg in parse_content(&e.content)? {
                    if let Segment::Tag(t) = seg {
                        if !out.contains(&t) {
                            out.push(t);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn tags(&self) -> Result<Vec<String>> {
        self.tags_on(self.slides.iter().map(|s| s.slide_id.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Literal(String),
    Tag(String),
}

/// Split content into literals and tags.
pub fn parse_content(s: &str) -> Result<Vec<Segment>> {
    let mut out = Vec::new();
    let mut lit = String::new();
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '{' if chars.peek() == Some(&'{') => {
                chars.next();
                lit.push('{');
            }
            '}' if chars.peek() == Some(&'}') => {
                chars.next();
                lit.push('}');
            }
            '{' => {
                let mut name = String::new();
                loop {
                    match chars.next() {
                        Some('}') => break,
                        Some('{') => return Err(Error::Template(format!("nested `{{` in `{s}`"))),
                        Some(c) => name.push(c),
                        None => return Err(Error::Template(format!("unclosed tag in `{s}`"))),
                    }
                }
                if name.trim().is_empty() {
                    return Err(Error::Template(format!("empty tag in `{s}`")));
                }
                if !lit.is_empty() {
                    out.push(Segment::Literal(std::mem::take(&mut lit)));
                }
                out.push(Segment::Tag(name));
            }
            '}' => return Err(Error::Template(format!("stray `}}` in `{s}`"))),
            c => lit.push(c),
        }
    }
    if !lit.is_empty() {
        out.push(Segment::Literal(lit));
    }
    Ok(out)
}

/// Escape braces so text survives a later stamping pass unchanged.
pub fn escape_braces(s: &str) -> String {
    s.replace('{', "{{").replace('}', "}}")
}

/// What a tag is replaced with: exactly one of text, local media or a URL,
/// optionally hyperlinked.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Replacement {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<String>,
}

impl Replacement {
    pub fn text(t: impl Into<String>) -> Self {
        Replacement { text: Some(t.into()), ..Default::default() }
    }

    pub fn media(path: impl Into<String>) -> Self {
        Replacement { media_path: Some(path.into()), ..Default::default() }
    }

    pub fn url(url: impl Into<String>) -> Self {
        Replacement { url: Some(url.into()), ..Default::default() }
    }

    pub fn linked(mut self, link: impl Into<String>) -> Self {
        self.link = Some(link.into());
        self
    }

    fn value(&self, tag: &str) -> Result<&str> {
        match (&self.text, &self.media_path, &self.url) {
            (Some(v), None, None) | (None, Some(v), None) | (None, None, Some(v)) => Ok(v),
            _ => Err(Error::Template(format!(
                "replacement for `{{{tag}}}` needs exactly one of text, mediaPath, url"
            ))),
        }
    }
}

pub type Replacements = BTreeMap<String, Replacement>;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Sequence {
    pub slide_ids: Vec<String>,
    pub instances: Vec<Replacements>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StampSpec {
    #[serde(default = "format_version")]
    pub format_version: u32,
    #[serde(default)]
    pub replacements: Replacements,
    #[serde(default)]
    pub sequences: Vec<Sequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theme_ref: Option<String>,
}

impl Default for StampSpec {
    fn default() -> Self {
        StampSpec {
            format_version: FORMAT_VERSION,
            replacements: BTreeMap::new(),
            sequences: Vec::new(),
            theme_ref: None,
        }
    }
}

impl StampSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: StampSpec = serde_json::from_str(text)?;
        check_version(s.format_version)?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MediaAsset {
    pub mime: String,
    /// Base64 payload.
    pub data: String,
}

impl MediaAsset {
    pub fn new(path: &str, bytes: &[u8]) -> Self {
        MediaAsset {
            mime: mime_for(path).to_string(),
            data: base64::engine::general_purpose::STANDARD.encode(bytes),
        }
    }

    pub fn bytes(&self) -> Vec<u8> {
        base64::engine::general_purpose::STANDARD.decode(&self.data).unwrap_or_default()
    }
}

pub fn mime_for(path: &str) -> &'static str {
    let ext = path.rsplit('.').next().unwrap_or("").to_ascii_lowercase();
    match ext.as_str() {
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "jpg" | "jpeg" => "image/jpeg",
        "gif" => "image/gif",
        "webp" => "image/webp",
        _ => "application/octet-stream",
    }
}

fn is_url(s: &str) -> bool {
    s.starts_with("http://") || s.starts_with("https://") || s.starts_with("data:")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DeckStyle {
    pub background: Rgb,
    pub foreground: Rgb,
    pub accent: Rgb,
}

impl DeckStyle {
    pub fn from_theme(t: &Theme) -> Self {
        DeckStyle {
            background: t.colors.background,
            foreground: t.colors.foreground,
            accent: t.colors.accent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DeckSlide {
    pub slide_id: String,
    /// Position within its sequence when the slide was stamped from one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<usize>,
    pub elements: Vec<Element>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Deck {
    pub format_version: u32,
    pub slides: Vec<DeckSlide>,
    #[serde(default)]
    pub media: BTreeMap<String, MediaAsset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub style: Option<DeckStyle>,
}

impl Deck {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("deck serialises")
    }

    /// The deck as a tag-free template; stamping it with an empty spec gives
    /// the same slides back.
    pub fn to_template(&self) -> DeckTemplate {
        DeckTemplate::new(
            self.slides
                .iter()
                .map(|s| TemplateSlide {
                    slide_id: s.slide_id.clone(),
                    elements: s
                        .elements
                        .iter()
                        .map(|e| Element { content: escape_braces(&e.content), ..e.clone() })
                        .collect(),
                })
                .collect(),
        )
    }

    /// Media bytes keyed by path, as `stamp` expects them.
    pub fn media_bytes(&self) -> BTreeMap<String, Vec<u8>> {
        self.media.iter().map(|(k, v)| (k.clone(), v.bytes())).collect()
    }
}

/// Slide count after sequence expansion.
pub fn expanded_slide_count(template: &DeckTemplate, spec: &StampSpec) -> usize {
    let sequenced: BTreeSet<&str> =
        spec.sequences.iter().flat_map(|s| s.slide_ids.iter().map(String::as_str)).collect();
    template.slides.len() - template.slides.iter().filter(|s| sequenced.contains(s.slide_id.as_str())).count()
        + spec.sequences.iter().map(|s| s.instances.len() * s.slide_ids.len()).sum::<usize>()
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ValidationReport {
    pub malformed: Vec<String>,
    pub unresolved_tags: Vec<String>,
    pub unknown_slide_ids: Vec<String>,
    pub unused_replacements: Vec<String>,
}

impl ValidationReport {
    /// Unused replacements are warnings; everything else blocks stamping.
    pub fn is_ok(&self) -> bool {
        self.malformed.is_empty() && self.unresolved_tags.is_empty() && self.unknown_slide_ids.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_ok() && self.unused_replacements.is_empty()
    }
}

pub fn validate_spec(template: &DeckTemplate, spec: &StampSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    if let Err(e) = template.check() {
        report.malformed.push(e.to_string());
        return report;
    }
    let mut unresolved = BTreeSet::new();
    let mut unknown = BTreeSet::new();
    let mut used_global = BTreeSet::new();
    let mut unused = BTreeSet::new();

    let sequenced: BTreeSet<&str> =
        spec.sequences.iter().flat_map(|s| s.slide_ids.iter().map(String::as_str)).collect();
    let plain = template.slides.iter().map(|s| s.slide_id.as_str()).filter(|id| !sequenced.contains(id));
    for tag in template.tags_on(plain).expect("checked") {
        if spec.replacements.contains_key(&tag) {
            used_global.insert(tag);
        } else {
            unresolved.insert(tag);
        }
    }
    for (si, seq) in spec.sequences.iter().enumerate() {
        for id in &seq.slide_ids {
            if template.slide(id).is_none() {
                unknown.insert(id.clone());
            }
        }
        let tags = template.tags_on(seq.slide_ids.iter().map(String::as_str)).expect("checked");
        for (ii, inst) in seq.instances.iter().enumerate() {
            for tag in &tags {
                if inst.contains_key(tag) {
                    continue;
                }
                if spec.replacements.contains_key(tag) {
                    used_global.insert(tag.clone());
                } else {
                    unresolved.insert(tag.clone());
                }
            }
            for key in inst.keys().filter(|k| !tags.contains(k)) {
                unused.insert(format!("sequence {si} instance {ii}: {key}"));
            }
        }
    }
    for key in spec.replacements.keys().filter(|k| !used_global.contains(*k)) {
        unused.insert(key.clone());
    }
    report.unresolved_tags = unresolved.into_iter().collect();
    report.unknown_slide_ids = unknown.into_iter().collect();
    report.unused_replacements = unused.into_iter().collect();
    report
}

struct Stamper<'a> {
    global: &'a Replacements,
    media: &'a BTreeMap<String, Vec<u8>>,
    assets: BTreeMap<String, MediaAsset>,
    unresolved: BTreeSet<String>,
    missing: BTreeSet<String>,
}

impl Stamper<'_> {
    fn resolve(&mut self, e: &Element, local: Option<&Replacements>) -> Result<Element> {
        let mut content = String::new();
        let mut link = e.link.clone();
        for seg in parse_content(&e.content)? {
            match seg {
                Segment::Literal(s) => content.push_str(&s),
                Segment::Tag(tag) => {
                    let rep = local.and_then(|l| l.get(&tag)).or_else(|| self.global.get(&tag));
                    match rep {
                        Some(r) => {
                            content.push_str(r.value(&tag)?);
                            if r.link.is_some() {
                                link = r.link.clone();
                            }
                        }
                        None => {
                            self.unresolved.insert(tag);
                        }
                    }
                }
            }
        }
        if e.kind == ElementKind::Image && !is_url(&content) && !self.unresolved_in(&e.content) {
            match self.media.get(&content) {
                Some(bytes) => {
                    self.assets.entry(content.clone()).or_insert_with(|| MediaAsset::new(&content, bytes));
                }
                None => {
                    self.missing.insert(content.clone());
                }
            }
        }
        Ok(Element { content, link, ..e.clone() })
    }

    fn unresolved_in(&self, content: &str) -> bool {
        parse_content(content)
            .map(|segs| segs.iter().any(|s| matches!(s, Segment::Tag(t) if self.unresolved.contains(t))))
            .unwrap_or(false)
    }
}

/// Expand sequences, substitute every tag and attach theme colours.
///
/// A sequence's copies go where the earliest of its slides sat in the
/// template; sequences sharing that position keep their declared order.
pub fn stamp(
    template: &DeckTemplate,
    spec: &StampSpec,
    media: &BTreeMap<String, Vec<u8>>,
    theme: Option<&Theme>,
) -> Result<Deck> {
    template.check()?;
    check_version(spec.format_version)?;
    let position: BTreeMap<&str, usize> =
        template.slides.iter().enumerate().map(|(i, s)| (s.slide_id.as_str(), i)).collect();
    let mut anchored: BTreeMap<usize, Vec<&Sequence>> = BTreeMap::new();
    let mut sequenced = BTreeSet::new();
    for seq in &spec.sequences {
        let mut first = usize::MAX;
        for id in &seq.slide_ids {
            let p = *position.get(id.as_str()).ok_or_else(|| Error::UnknownSlide(id.clone()))?;
            first = first.min(p);
            sequenced.insert(id.as_str());
        }
        if first != usize::MAX {
            anchored.entry(first).or_default().push(seq);
        }
    }

    let mut st = Stamper {
        global: &spec.replacements,
        media,
        assets: BTreeMap::new(),
        unresolved: BTreeSet::new(),
        missing: BTreeSet::new(),
    };
    let mut slides = Vec::new();
    for (i, slide) in template.slides.iter().enumerate() {
        for seq in anchored.get(&i).into_iter().flatten() {
            for (k, inst) in seq.instances.iter().enumerate() {
                for id in &seq.slide_ids {
                    let src = &template.slides[position[id.as_str()]];
                    let elements =
                        src.elements.iter().map(|e| st.resolve(e, Some(inst))).collect::<Result<_>>()?;
                    slides.push(DeckSlide { slide_id: id.clone(), instance: Some(k), elements });
                }
            }
        }
        if sequenced.contains(slide.slide_id.as_str()) {
            continue;
        }
        let elements = slide.elements.iter().map(|e| st.resolve(e, None)).collect::<Result<_>>()?;
        slides.push(DeckSlide { slide_id: slide.slide_id.clone(), instance: None, elements });
    }
    if !st.unresolved.is_empty() {
        return Err(Error::UnresolvedTags(st.unresolved.into_iter().collect()));
    }
    if let Some(path) = st.missing.into_iter().next() {
        return Err(Error::MissingMedia(path));
    }
    Ok(Deck {
        format_version: FORMAT_VERSION,
        slides,
        media: st.assets,
        style: theme.map(DeckStyle::from_theme),
    })
}

/// Local media paths the template and spec can reference.
pub fn media_paths(template: &DeckTemplate, spec: &StampSpec) -> BTreeSet<String> {
    let mut paths = BTreeSet::new();
    let reps = spec
        .replacements
        .values()
        .chain(spec.sequences.iter().flat_map(|s| s.instances.iter().flat_map(|i| i.values())));
    for r in reps {
        if let Some(p) = &r.media_path {
            paths.insert(p.clone());
        }
    }
    for s in &template.slides {
        for e in s.elements.iter().filter(|e| e.kind == ElementKind::Image) {
            if let Ok(segs) = parse_content(&e.content) {
                if let [Segment::Literal(p)] = segs.as_slice() {
                    if !is_url(p) {
                        paths.insert(p.clone());
                    }
                }
            }
        }
    }
    paths
}

/// Read every path from [`media_paths`], relative to `base`.
pub fn load_media(template: &DeckTemplate, spec: &StampSpec, base: &Path) -> Result<BTreeMap<String, Vec<u8>>> {
    media_paths(template, spec)
        .into_iter()
        .map(|p| {
            let bytes = std::fs::read(base.join(&p)).map_err(|_| Error::MissingMedia(p.clone()))?;
            Ok((p, bytes))
        })
        .collect()
}

fn html_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

/// Single-file HTML: one `<section>` per slide, media inlined.
pub fn render_deck_html(deck: &Deck) -> String {
    let style = deck.style.unwrap_or(DeckStyle {
        background: Rgb::WHITE,
        foreground: Rgb::BLACK,
        accent: Rgb::BLACK,
    });
    let mut out = String::new();
    out.push_str("<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>Deck</title>\n<style>\n");
    let _ = writeln!(
        out,
        "body {{ background: {}; color: {}; font-family: sans-serif; margin: 0; }}",
        style.background, style.foreground
    );
    let _ = writeln!(
        out,
        "section.slide {{ min-height: 100vh; padding: 4vh 6vw; box-sizing: border-box; border-bottom: 1px solid {}; }}",
        style.accent
    );
    let _ = writeln!(out, "h1 {{ color: {}; }}", style.accent);
    let _ = writeln!(out, "a {{ color: {}; }}", style.accent);
    out.push_str("figure { margin: 0; } figure svg, figure img { max-width: 100%; height: auto; }\n");
    out.push_str("</style>\n</head>\n<body>\n");

    for (i, slide) in deck.slides.iter().enumerate() {
        let _ = writeln!(
            out,
            "<section class=\"slide\" id=\"slide-{i}\" data-slide-id=\"{}\">",
            html_escape(&slide.slide_id)
        );
        for e in &slide.elements {
            let body = match e.kind {
                ElementKind::Text => {
                    let text = html_escape(&e.content);
                    match e.role.as_deref() {
                        Some("title") => format!("<h1>{text}</h1>"),
                        Some("subtitle") => format!("<h2>{text}</h2>"),
                        _ => format!("<p>{text}</p>"),
                    }
                }
                ElementKind::Image => {
                    let inner = match deck.media.get(&e.content) {
                        Some(a) if a.mime == "image/svg+xml" => String::from_utf8_lossy(&a.bytes())
                            .trim_start_matches(|c: char| c != '<')
                            .to_string(),
                        Some(a) => format!("<img src=\"data:{};base64,{}\" alt=\"\">", a.mime, a.data),
                        None => format!("<img src=\"{}\" alt=\"\">", html_escape(&e.content)),
                    };
                    format!("<figure>{}</figure>", inner.trim_end())
                }
            };
            match &e.link {
                Some(href) => {
                    let _ = writeln!(out, "<a href=\"{}\">{body}</a>", html_escape(href));
                }
                None => {
                    let _ = writeln!(out, "{body}");
                }
            }
        }
        out.push_str("</section>\n");
    }
    out.push_str("</body>\n</html>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slide(id: &str, elements: Vec<Element>) -> TemplateSlide {
        TemplateSlide { slide_id: id.into(), elements }
    }

    fn no_media() -> BTreeMap<String, Vec<u8>> {
        BTreeMap::new()
    }

    #[test]
    fn tag_grammar() {
        assert_eq!(
            parse_content("a {x} b").unwrap(),
            vec![Segment::Literal("a ".into()), Segment::Tag("x".into()), Segment::Literal(" b".into())]
        );
        assert_eq!(parse_content("{{lit}}").unwrap(), vec![Segment::Literal("{lit}".into())]);
        assert_eq!(
            parse_content("{detected workgroup count}").unwrap(),
            vec![Segment::Tag("detected workgroup count".into())]
        );
        for bad in ["{", "}", "{a{b}}", "{}", "x } y"] {
            assert!(parse_content(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn replaces_count() {
        let t = DeckTemplate::new(vec![slide("s", vec![Element::text("We found {detected workgroup count} workgroups")])]);
        let mut spec = StampSpec::default();
        spec.replacements.insert("detected workgroup count".into(), Replacement::text("42"));
        let d = stamp(&t, &spec, &no_media(), None).unwrap();
        assert_eq!(d.slides[0].elements[0].content, "We found 42 workgroups");
    }

    #[test]
    fn sequence_copies() {
        let t = DeckTemplate::new(vec![
            slide("intro", vec![Element::text("hello")]),
            slide("wg", vec![Element::text("Workgroup {name}")]),
            slide("end", vec![Element::text("bye")]),
        ]);
        let mut spec = StampSpec::default();
        spec.sequences.push(Sequence {
            slide_ids: vec!["wg".into()],
            instances: ["a", "b", "c"]
                .iter()
                .map(|n| BTreeMap::from([("name".to_string(), Replacement::text(*n))]))
                .collect(),
        });
        let d = stamp(&t, &spec, &no_media(), None).unwrap();
        let texts: Vec<&str> = d.slides.iter().map(|s| s.elements[0].content.as_str()).collect();
        assert_eq!(texts, vec!["hello", "Workgroup a", "Workgroup b", "Workgroup c", "bye"]);
        assert_eq!(d.slides.len(), expanded_slide_count(&t, &spec));
    }

    #[test]
    fn instance_overrides_global() {
        let t = DeckTemplate::new(vec![slide("wg", vec![Element::text("{x}{y}")])]);
        let mut spec = StampSpec::default();
        spec.replacements.insert("x".into(), Replacement::text("G"));
        spec.replacements.insert("y".into(), Replacement::text("g"));
        spec.sequences.push(Sequence {
            slide_ids: vec!["wg".into()],
            instances: vec![BTreeMap::from([("x".to_string(), Replacement::text("I"))])],
        });
        let d = stamp(&t, &spec, &no_media(), None).unwrap();
        assert_eq!(d.slides[0].elements[0].content, "Ig");
    }

    #[test]
    fn identity_round_trip() {
        let t = DeckTemplate::new(vec![
            slide("a", vec![Element::text("plain {{braces}} kept").with_role("title")]),
            slide("b", vec![Element::text("more")]),
        ]);
        let d = stamp(&t, &StampSpec::default(), &no_media(), None).unwrap();
        assert_eq!(d.slides[0].elements[0].content, "plain {braces} kept");
        assert_eq!(d.to_template(), t);
        let again = stamp(&d.to_template(), &StampSpec::default(), &no_media(), None).unwrap();
        assert_eq!(again, d);
    }

    #[test]
    fn errors() {
        let t = DeckTemplate::new(vec![slide("s", vec![Element::text("{a} {b}"), Element::image("{pic}")])]);
        let mut spec = StampSpec::default();
        spec.replacements.insert("pic".into(), Replacement::media("missing.png"));
        match stamp(&t, &spec, &no_media(), None) {
            Err(Error::UnresolvedTags(tags)) => assert_eq!(tags, vec!["a", "b"]),
            other => panic!("{other:?}"),
        }
        spec.replacements.insert("a".into(), Replacement::text("1"));
        spec.replacements.insert("b".into(), Replacement::text("2"));
        assert!(matches!(stamp(&t, &spec, &no_media(), None), Err(Error::MissingMedia(p)) if p == "missing.png"));
        spec.sequences.push(Sequence { slide_ids: vec!["zzz".into()], instances: vec![] });
        assert!(matches!(stamp(&t, &spec, &no_media(), None), Err(Error::UnknownSlide(s)) if s == "zzz"));
    }

    #[test]
    fn validation_report() {
        let t = DeckTemplate::new(vec![slide("s", vec![Element::text("{a} {b}")])]);
        let mut spec = StampSpec::default();
        spec.replacements.insert("a".into(), Replacement::text("1"));
        let r = validate_spec(&t, &spec);
        assert_eq!(r.unresolved_tags, vec!["b"]);
        spec.replacements.insert("b".into(), Replacement::text("2"));
        assert!(validate_spec(&t, &spec).is_empty());
        spec.replacements.insert("c".into(), Replacement::text("3"));
        let r = validate_spec(&t, &spec);
        assert!(r.is_ok());
        assert_eq!(r.unused_replacements, vec!["c"]);
    }

    #[test]
    fn html_sections_and_links() {
        let svg = br#"<svg xmlns="http://www.w3.org/2000/svg"><rect/></svg>"#.to_vec();
        let media = BTreeMap::from([("map.svg".to_string(), svg)]);
        let t = DeckTemplate::new(vec![
            slide("a", vec![Element::text("Title").with_role("title")]),
            slide("b", vec![Element::image("{map}")]),
            slide("c", vec![Element::text("end")]),
        ]);
        let mut spec = StampSpec::default();
        spec.replacements.insert("map".into(), Replacement::media("map.svg").linked("https://example.org/map"));
        let theme = Theme::from_sliders(&crate::theme::SliderState { mode: crate::theme::Mode::Dark, ..Default::default() });
        let d = stamp(&t, &spec, &media, Some(&theme)).unwrap();
        let html = render_deck_html(&d);
        assert_eq!(html.matches("<section").count(), 3);
        let a = html.find("data-slide-id=\"a\"").unwrap();
        let b = html.find("data-slide-id=\"b\"").unwrap();
        let c = html.find("data-slide-id=\"c\"").unwrap();
        assert!(a < b && b < c);
        assert!(html.contains("<a href=\"https://example.org/map\"><figure><svg"));
        assert!(html.contains(&format!("background: {}", theme.colors.background)));
    }

    #[test]
    fn rejects_bad_versions_and_duplicates() {
        assert!(DeckTemplate::from_json(r#"{"formatVersion":2,"slides":[]}"#).is_err());
        let dup = r#"{"slides":[{"slideId":"a","elements":[]},{"slideId":"a","elements":[]}]}"#;
        assert!(DeckTemplate::from_json(dup).is_err());
    }
}
