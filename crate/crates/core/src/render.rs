//! Themed SVG figures: node-only workgroup maps, metric maps and the
//! freedom/fluidity quadrant chart.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::color::Rgb;
use crate::community::Partition;
use crate::error::{Error, Result};
use crate::graph::{CollabGraph, PersonId};
use crate::layout::LayoutResult;
use crate::theme::Theme;

/// Canvas edge length in pixels for maps; the quadrant chart is square too.
pub const CANVAS: f64 = 800.0;
const MARGIN: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Coloring {
    /// Theme nominal colours cycled by community.
    Nominal,
    /// Named entry of [`MapSpec::metrics`] mapped onto the sequential ramp.
    Sequential(String),
}

pub struct MapSpec<'a> {
    pub layout: &'a LayoutResult,
    pub communities: &'a Partition,
    pub metrics: &'a BTreeMap<String, BTreeMap<PersonId, f64>>,
    pub coloring: Coloring,
    /// Draw this community bold and everything else muted.
    pub highlight: Option<usize>,
    /// Links are hidden unless a graph is supplied.
    pub links: Option<&'a CollabGraph>,
}

impl<'a> MapSpec<'a> {
    pub fn nominal(
        layout: &'a LayoutResult,
        communities: &'a Partition,
        metrics: &'a BTreeMap<String, BTreeMap<PersonId, f64>>,
    ) -> Self {
        MapSpec {
            layout,
            communities,
            metrics,
            coloring: Coloring::Nominal,
            highlight: None,
            links: None,
        }
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn open_svg(out: &mut String, w: f64, h: f64, bg: Rgb) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{w:.0}" height="{h:.0}" fill="{bg}"/>"#);
}

/// World-to-pixel transform fitting every circle inside the canvas.
struct Frame {
    min: [f64; 2],
    scale: f64,
    offset: [f64; 2],
}

impl Frame {
    fn fit(layout: &LayoutResult) -> Frame {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for (id, p) in &layout.positions {
            let r = layout.radii.get(id).copied().unwrap_or(0.0);
            for k in 0..2 {
                lo[k] = lo[k].min(p[k] - r);
                hi[k] = hi[k].max(p[k] + r);
            }
        }
        if !lo[0].is_finite() {
            return Frame { min: [0.0; 2], scale: 1.0, offset: [CANVAS / 2.0; 2] };
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
        let scale = (CANVAS - 2.0 * MARGIN) / span;
        let offset = [0, 1].map(|k| MARGIN + ((CANVAS - 2.0 * MARGIN) - (hi[k] - lo[k]) * scale) / 2.0);
        Frame { min: lo, scale, offset }
    }

    fn px(&self, p: [f64; 2]) -> [f64; 2] {
        [0, 1].map(|k| self.offset[k] + (p[k] - self.min[k]) * self.scale)
    }
}

/// Index of `t` in a quantised ramp of `n` bins; a degenerate range gives the
/// middle bin.
pub fn ramp_bin(value: f64, min: f64, max: f64, n: usize) -> usize {
    if n == 0 {
        return 0;
    }
    if !(max > min) {
        return n / 2;
    }
    let t = ((value - min) / (max - min)).clamp(0.0, 1.0);
    (t * (n - 1) as f64).round() as usize
}

/// Per-node fill colours for a map. Nodes lacking a metric value are drawn in
/// the neutral diverging midpoint.
pub fn map_fills(spec: &MapSpec, theme: &Theme) -> Result<BTreeMap<PersonId, Rgb>> {
    let rank: BTreeMap<usize, usize> = spec
        .communities
        .iter()
        .map(|(_, c)| c)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, c)| (c, i))
        .collect();
    let community = |id: &PersonId| -> Result<usize> {
        spec.communities
            .community_of(id)
            .ok_or_else(|| Error::PartitionIncomplete(id.to_string()))
    };

    let mut fills = BTreeMap::new();
    if let Some(target) = spec.highlight {
        for id in spec.layout.positions.keys() {
            let c = community(id)?;
            let triple = theme.nominal_triple(rank[&c]);
            fills.insert(id.clone(), if c == target { triple.bold } else { triple.muted });
        }
        return Ok(fills);
    }
    match &spec.coloring {
        Coloring::Nominal => {
            for id in spec.layout.positions.keys() {
                let c = community(id)?;
                fills.insert(id.clone(), theme.nominal_triple(rank[&c]).standard);
            }
        }
        Coloring::Sequential(name) => {
            let values = spec
                .metrics
                .get(name)
                .ok_or_else(|| Error::UnknownMetric(name.clone()))?;
            let seq = &theme.colors.sequential;
            if seq.is_empty() {
                return Err(Error::InvalidParameter("theme has an empty sequential ramp".into()));
            }
            let drawn = spec.layout.positions.keys().filter_map(|id| values.get(id));
            let (min, max) = drawn.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(*v), hi.max(*v))
            });
            let neutral = theme.neutral();
            for id in spec.layout.positions.keys() {
                let fill = match values.get(id) {
                    Some(v) => seq[ramp_bin(*v, min, max, seq.len())],
                    None => neutral,
                };
                fills.insert(id.clone(), fill);
            }
        }
    }
    Ok(fills)
}

pub fn render_map(spec: &MapSpec, theme: &Theme) -> Result<String> {
    let fills = map_fills(spec, theme)?;
    let frame = Frame::fit(spec.layout);
    let mut out = String::new();
    open_svg(&mut out, CANVAS, CANVAS, theme.colors.background);

    if let Some(g) = spec.links {
        let _ = writeln!(
            out,
            r#"<g stroke="{}" stroke-opacity="0.15" stroke-width="0.5">"#,
            theme.colors.foreground
        );
        let mut lines = Vec::new();
        for (a, b, _) in g.edges() {
            let (ia, ib) = (g.id(a), g.id(b));
            if let (Some(pa), Some(pb)) = (spec.layout.positions.get(ia), spec.layout.positions.get(ib)) {
                let (ia, ib, pa, pb) = if ia <= ib { (ia, ib, pa, pb) } else { (ib, ia, pb, pa) };
                lines.push((ia.clone(), ib.clone(), frame.px(*pa), frame.px(*pb)));
            }
        }
        lines.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));
        for (_, _, p, q) in lines {
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
                p[0], p[1], q[0], q[1]
            );
        }
        out.push_str("</g>\n");
    }

    out.push_str("<g>\n");
    for (id, p) in &spec.layout.positions {
        let r = spec.layout.radii.get(id).copied().unwrap_or(1.0) * frame.scale;
        let [x, y] = frame.px(*p);
        let _ = writeln!(
            out,
            r#"<circle id="{}" cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="{}"/>"#,
            escape(id.as_str()),
            fills[id]
        );
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

/// Spread every workgroup-level value onto its members.
pub fn spread_to_members(
    partition: &Partition,
    values: &BTreeMap<usize, Option<f64>>,
) -> BTreeMap<PersonId, f64> {
    partition
        .iter()
        .filter_map(|(id, c)| values.get(&c).copied().flatten().map(|v| (id.clone(), v)))
        .collect()
}

// ------------------------------------------------------------------ quadrant

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QuadrantPoint {
    pub workgroup_id: usize,
    pub freedom: f64,
    pub fluidity: f64,
    pub size: usize,
}

/// Quadrants in caption order: x is freedom, y is fluidity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Quadrant {
    LocalizedEstablished,
    CrossOrgEstablished,
    LocalizedFluid,
    CrossOrgFluid,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [
        Quadrant::LocalizedEstablished,
        Quadrant::CrossOrgEstablished,
        Quadrant::LocalizedFluid,
        Quadrant::CrossOrgFluid,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Values on a threshold count as high.
    pub fn of(freedom: f64, fluidity: f64, t: (f64, f64)) -> Quadrant {
        match (freedom >= t.0, fluidity >= t.1) {
            (false, false) => Quadrant::LocalizedEstablished,
            (true, false) => Quadrant::CrossOrgEstablished,
            (false, true) => Quadrant::LocalizedFluid,
            (true, true) => Quadrant::CrossOrgFluid,
        }
    }

    pub fn default_caption(self) -> &'static str {
        match self {
            Quadrant::LocalizedEstablished => "Localized, established",
            Quadrant::CrossOrgEstablished => "Cross-org, established",
            Quadrant::LocalizedFluid => "Localized, fluid",
            Quadrant::CrossOrgFluid => "Cross-org, fluid",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadrantSpec {
    pub points: Vec<QuadrantPoint>,
    pub thresholds: (f64, f64),
    pub labels: [String; 4],
    pub callouts: Vec<usize>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median of one axis, lifted to the next distinct value when the median sits
/// on the minimum of a non-constant axis (so that axis still splits).
pub fn axis_threshold(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.5;
    }
    let m = median(values.to_vec());
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if m > min {
        return m;
    }
    let next = values.iter().copied().filter(|v| *v > min).fold(f64::INFINITY, f64::min);
    if next.is_finite() {
        next
    } else {
        m
    }
}

pub fn default_thresholds(points: &[QuadrantPoint]) -> (f64, f64) {
    let xs: Vec<f64> = points.iter().map(|p| p.freedom).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.fluidity).collect();
    (axis_threshold(&xs), axis_threshold(&ys))
}

impl QuadrantSpec {
    /// Median thresholds, default captions, one callout per quadrant.
    pub fn new(points: Vec<QuadrantPoint>) -> Self {
        let thresholds = default_thresholds(&points);
        let callouts = pick_quadrant_callouts(&points, thresholds, 1);
        QuadrantSpec {
            points,
            thresholds,
            labels: Quadrant::ALL.map(|q| q.default_caption().to_string()),
            callouts,
        }
    }

    /// Override thresholds; each must lie within the observed range of its axis.
    pub fn with_thresholds(mut self, t: (f64, f64)) -> Result<Self> {
        let range = |f: fn(&QuadrantPoint) -> f64| {
            self.points
                .iter()
                .map(f)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
        };
        let (fx, fy) = (range(|p| p.freedom), range(|p| p.fluidity));
        if t.0 < fx.0 || t.0 > fx.1 || t.1 < fy.0 || t.1 > fy.1 {
            return Err(Error::InvalidParameter(format!(
                "thresholds ({}, {}) outside observed ranges [{}, {}] x [{}, {}]",
                t.0, t.1, fx.0, fx.1, fy.0, fy.1
            )));
        }
        self.thresholds = t;
        self.callouts = pick_quadrant_callouts(&self.points, t, 1);
        Ok(self)
    }

    pub fn quadrant_of(&self, p: &QuadrantPoint) -> Quadrant {
        Quadrant::of(p.freedom, p.fluidity, self.thresholds)
    }
}

/// Per quadrant, the `per_quadrant` workgroups farthest (Chebyshev) from the
/// threshold point; ties go to the larger workgroup, then the smaller id.
pub fn pick_quadrant_callouts(points: &[QuadrantPoint], t: (f64, f64), per_quadrant: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for q in Quadrant::ALL {
        let mut members: Vec<&QuadrantPoint> =
            points.iter().filter(|p| Quadrant::of(p.freedom, p.fluidity, t) == q).collect();
        let dist = |p: &QuadrantPoint| (p.freedom - t.0).abs().max((p.fluidity - t.1).abs());
        members.sort_by(|a, b| {
            dist(b)
                .total_cmp(&dist(a))
                .then(b.size.cmp(&a.size))
                .then(a.workgroup_id.cmp(&b.workgroup_id))
        });
        out.extend(members.iter().take(per_quadrant).map(|p| p.workgroup_id));
    }
    out
}

const PLOT: f64 = 600.0;
const PAD: f64 = 100.0;

pub fn render_quadrant(spec: &QuadrantSpec, theme: &Theme) -> String {
    let side = PLOT + 2.0 * PAD;
    let c = &theme.colors;
    let x = |v: f64| PAD + v.clamp(0.0, 1.0) * PLOT;
    let y = |v: f64| PAD + (1.0 - v.clamp(0.0, 1.0)) * PLOT;
    let mut out = String::new();
    open_svg(&mut out, side, side, c.background);

    let fg = c.foreground;
    let _ = writeln!(
        out,
        r#"<rect x="{PAD:.0}" y="{PAD:.0}" width="{PLOT:.0}" height="{PLOT:.0}" fill="none" stroke="{fg}" stroke-width="1"/>"#
    );
    let (tx, ty) = spec.thresholds;
    let _ = writeln!(
        out,
        r#"<line x1="{:.2}" y1="{PAD:.0}" x2="{:.2}" y2="{:.0}" stroke="{fg}" stroke-dasharray="4 4"/>"#,
        x(tx),
        x(tx),
        PAD + PLOT
    );
    let _ = writeln!(
        out,
        r#"<line x1="{PAD:.0}" y1="{:.2}" x2="{:.0}" y2="{:.2}" stroke="{fg}" stroke-dasharray="4 4"/>"#,
        y(ty),
        PAD + PLOT,
        y(ty)
    );

    let font = r#"font-family="sans-serif""#;
    let _ = writeln!(
        out,
        r#"<text x="{:.0}" y="{:.0}" {font} font-size="16" text-anchor="middle" fill="{fg}">Freedom</text>"#,
        PAD + PLOT / 2.0,
        side - PAD / 3.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.0}" y="{:.0}" {font} font-size="16" text-anchor="middle" fill="{fg}" transform="rotate(-90 {:.0} {:.0})">Fluidity</text>"#,
        PAD / 3.0,
        PAD + PLOT / 2.0,
        PAD / 3.0,
        PAD + PLOT / 2.0
    );
    for (v, label) in [(0.0, "0"), (1.0, "1")] {
        let _ = writeln!(
            out,
            r#"<text x="{:.0}" y="{:.0}" {font} font-size="12" text-anchor="middle" fill="{fg}">{label}</text>"#,
            x(v),
            PAD + PLOT + 18.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.0}" y="{:.0}" {font} font-size="12" text-anchor="end" fill="{fg}">{label}</text>"#,
            PAD - 8.0,
            y(v) + 4.0
        );
    }

    // captions sit in the outer corner of each quadrant
    let corners = [
        (PAD + 8.0, PAD + PLOT - 10.0, "start"),
        (PAD + PLOT - 8.0, PAD + PLOT - 10.0, "end"),
        (PAD + 8.0, PAD + 20.0, "start"),
        (PAD + PLOT - 8.0, PAD + 20.0, "end"),
    ];
    for (q, (cx, cy, anchor)) in Quadrant::ALL.iter().zip(corners) {
        let _ = writeln!(
            out,
            r#"<text class="caption" x="{cx:.0}" y="{cy:.0}" {font} font-size="14" text-anchor="{anchor}" fill="{}">{}</text>"#,
            theme.nominal_triple(q.index()).bold,
            escape(&spec.labels[q.index()])
        );
    }

    let max_size = spec.points.iter().map(|p| p.size).max().unwrap_or(1).max(1) as f64;
    let radius = |size: usize| 4.0 + 20.0 * (size as f64 / max_size).sqrt();
    let called: BTreeSet<usize> = spec.callouts.iter().copied().collect();
    let mut points: Vec<&QuadrantPoint> = spec.points.iter().collect();
    points.sort_by_key(|p| p.workgroup_id);
    out.push_str("<g>\n");
    for p in &points {
        let triple = theme.nominal_triple(spec.quadrant_of(p).index());
        let fill = if called.contains(&p.workgroup_id) { triple.bold } else { triple.standard };
        let _ = writeln!(
            out,
            r#"<circle id="wg{}" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="{fill}" fill-opacity="0.8"/>"#,
            p.workgroup_id,
            x(p.freedom),
            y(p.fluidity),
            radius(p.size)
        );
    }
    out.push_str("</g>\n<g>\n");
    for p in points.iter().filter(|p| called.contains(&p.workgroup_id)) {
        let _ = writeln!(
            out,
            r#"<text class="callout" x="{:.2}" y="{:.2}" {font} font-size="12" text-anchor="middle" fill="{fg}">Workgroup {}</text>"#,
            x(p.freedom),
            y(p.fluidity) - radius(p.size) - 4.0,
            p.workgroup_id
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}

/// Every `fill="#RRGGBB"` value in a document, in order.
pub fn svg_fills(svg: &str) -> Vec<Rgb> {
    svg.match_indices("fill=\"#")
        .filter_map(|(i, m)| svg.get(i + m.len() - 1..i + m.len() + 6))
        .filter_map(|s| s.parse().ok())
        .collect()
}
