//! Slider-driven colour themes: background, foreground, accent, three-level
//! nominal scales, sequential and diverging ramps, plus validation.

use serde::{Deserialize, Serialize};

use crate::color::{
    contrast_ratio, hsluv_to_rgb, hue_delta, hue_distance, rgb_to_hsluv, Deficiency, Hsluv, Rgb,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Light,
    Dark,
}

impl Mode {
    pub fn flipped(self) -> Self {
        match self {
            Mode::Light => Mode::Dark,
            Mode::Dark => Mode::Light,
        }
    }

    /// Background lightness anchor before the level slider lifts it.
    pub fn base_lightness(self) -> f64 {
        match self {
            Mode::Light => 95.0,
            Mode::Dark => 10.0,
        }
    }

    fn extreme_lightness(self) -> f64 {
        match self {
            Mode::Light => 100.0,
            Mode::Dark => 0.0,
        }
    }

    /// +1 when moving away from the background means darker.
    fn away(self) -> f64 {
        match self {
            Mode::Light => -1.0,
            Mode::Dark => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct SliderState {
    pub accent_hue: f64,
    pub accent_saturation: f64,
    pub accent_lightness: f64,
    pub background_level: f64,
    pub background_hue_shift: f64,
    pub nominal_scale_step: i64,
    pub mode: Mode,
}

impl Default for SliderState {
    fn default() -> Self {
        SliderState {
            accent_hue: 250.0,
            accent_saturation: 90.0,
            accent_lightness: 50.0,
            background_level: 25.0,
            background_hue_shift: 50.0,
            nominal_scale_step: 11,
            mode: Mode::Light,
        }
    }
}

pub const MAX_STEP: i64 = 21;

impl SliderState {
    /// Clamp every slider into range, reporting each adjustment.
    pub fn clamped(&self) -> (SliderState, Vec<String>) {
        let mut warnings = Vec::new();
        let mut clamp = |name: &str, v: f64, hi: f64| {
            if v.is_nan() {
                warnings.push(format!("{name} is NaN, using 0"));
                return 0.0;
            }
            let c = v.clamp(0.0, hi);
            if c != v {
                warnings.push(format!("{name} {v} clamped to {c}"));
            }
            c
        };
        let mut s = self.clone();
        s.accent_hue = clamp("accentHue", s.accent_hue, 360.0);
        s.accent_saturation = clamp("accentSaturation", s.accent_saturation, 100.0);
        s.accent_lightness = clamp("accentLightness", s.accent_lightness, 100.0);
        s.background_level = clamp("backgroundLevel", s.background_level, 100.0);
        s.background_hue_shift = clamp("backgroundHueShift", s.background_hue_shift, 100.0);
        let step = s.nominal_scale_step.clamp(0, MAX_STEP);
        if step != s.nominal_scale_step {
            warnings.push(format!("nominalScaleStep {} clamped to {step}", s.nominal_scale_step));
            s.nominal_scale_step = step;
        }
        (s, warnings)
    }

    pub fn inverted(&self) -> SliderState {
        SliderState {
            mode: self.mode.flipped(),
            ..self.clone()
        }
    }

    /// Hues per wheel traversal: 3 at steps 10/11 up to 13 at 0/21.
    pub fn per_traversal(&self) -> usize {
        let s = self.nominal_scale_step.clamp(0, MAX_STEP);
        if s <= 10 {
            (3 + (10 - s)) as usize
        } else {
            (3 + (s - 11)) as usize
        }
    }

    /// +1 clockwise (increasing hue), -1 counter-clockwise.
    pub fn direction(&self) -> f64 {
        if self.nominal_scale_step <= 10 {
            -1.0
        } else {
            1.0
        }
    }

    pub fn background_hue(&self) -> f64 {
        (self.accent_hue + hue_shift(self.background_hue_shift)).rem_euclid(360.0)
    }
}

/// Background hue offset: 50 is neutral, 50..75 analogous up to +30,
/// 75..100 complementary +150..+180, mirrored below 50.
pub fn hue_shift(x: f64) -> f64 {
    let x = x.clamp(0.0, 100.0);
    if x < 50.0 {
        return -hue_shift(100.0 - x);
    }
    if x <= 75.0 {
        (x - 50.0) / 25.0 * 30.0
    } else {
        150.0 + (x - 75.0) / 25.0 * 30.0
    }
}

pub const MAX_BACKGROUND_CHROMA: f64 = 4.0;

/// Largest HSLuv saturation whose quantised colour stays within the
/// background chroma cap (CIE LCh-ab) at this hue and lightness.
pub fn max_background_saturation(h: f64, l: f64) -> f64 {
    let ok = |s: f64| hsluv_to_rgb(h, s, l).lab().chroma() <= MAX_BACKGROUND_CHROMA;
    if ok(100.0) {
        return 100.0;
    }
    let (mut lo, mut hi) = (0.0, 100.0);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Background in HSLuv coordinates before quantisation.
pub fn background_hsluv(s: &SliderState) -> Hsluv {
    let h = s.background_hue();
    let base = s.mode.base_lightness();
    let s_max = max_background_saturation(h, base);
    let level = s.background_level.clamp(0.0, 100.0);
    if level <= 50.0 {
        Hsluv::new(h, s_max * level / 50.0, base)
    } else {
        let t = (level - 50.0) / 50.0;
        let l = base + (s.mode.extreme_lightness() - base) * t;
        Hsluv::new(h, s_max.min(max_background_saturation(h, l)), l)
    }
}

pub fn background_color(s: &SliderState) -> Rgb {
    background_hsluv(s).to_rgb()
}

pub const MIN_TEXT_CONTRAST: f64 = 4.5;

/// Background hue at lightness 20 (light) or 90 (dark), saturation 20, pushed
/// toward black or white until text contrast holds.
pub fn foreground_color(s: &SliderState) -> Rgb {
    let bg = background_color(s);
    let h = s.background_hue();
    let mut l: f64 = match s.mode {
        Mode::Light => 20.0,
        Mode::Dark => 90.0,
    };
    loop {
        let fg = hsluv_to_rgb(h, 20.0, l);
        if contrast_ratio(fg, bg) >= MIN_TEXT_CONTRAST || l <= 0.0 || l >= 100.0 {
            return fg;
        }
        l = (l + s.mode.away()).clamp(0.0, 100.0);
    }
}

pub fn accent_color(s: &SliderState) -> Rgb {
    hsluv_to_rgb(s.accent_hue, s.accent_saturation, s.accent_lightness)
}

const HUE_EPS: f64 = 1e-9;

/// First `k` nominal hues: one equally spaced traversal, then repeatedly the
/// nearest hue in the traversal direction among those maximising the minimum
/// distance to every hue chosen so far.
pub fn nominal_hues(s: &SliderState, k: usize) -> Vec<f64> {
    let p = s.per_traversal();
    let dir = s.direction();
    let step = 360.0 / p as f64;
    let mut hues: Vec<f64> = (0..k.min(p))
        .map(|i| (s.accent_hue + dir * step * i as f64).rem_euclid(360.0))
        .collect();
    while hues.len() < k {
        let last = *hues.last().expect("nonempty");
        let mut sorted = hues.clone();
        sorted.sort_by(f64::total_cmp);
        let gaps: Vec<(f64, f64)> = (0..sorted.len())
            .map(|i| {
                let a = sorted[i];
                let b = sorted[(i + 1) % sorted.len()];
                let gap = (b - a).rem_euclid(360.0);
                let gap = if gap == 0.0 { 360.0 } else { gap };
                (gap, (a + gap / 2.0).rem_euclid(360.0))
            })
            .collect();
        let widest = gaps.iter().map(|g| g.0).fold(0.0, f64::max);
        let next = gaps
            .iter()
            .filter(|g| g.0 >= widest - HUE_EPS)
            .map(|g| g.1)
            .min_by(|a, b| {
                let da = (dir * (a - last)).rem_euclid(360.0);
                let db = (dir * (b - last)).rem_euclid(360.0);
                da.total_cmp(&db)
            })
            .expect("at least one gap");
        hues.push(next);
    }
    hues
}

/// Standard, bold and muted colours for one nominal category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorTriple {
    pub standard: Rgb,
    pub bold: Rgb,
    pub muted: Rgb,
}

pub fn color_triple(s: &SliderState, hue: f64) -> ColorTriple {
    let l = s.accent_lightness;
    let bg_l = background_hsluv(s).l;
    let bold_l = (l + 10.0 * s.mode.away()).clamp(0.0, 100.0);
    let toward = (bg_l - l).clamp(-20.0, 20.0);
    ColorTriple {
        standard: hsluv_to_rgb(hue, 90.0, l),
        bold: hsluv_to_rgb(hue, 100.0, bold_l),
        muted: hsluv_to_rgb(hue, 30.0, l + toward),
    }
}

pub fn nominal_scale(s: &SliderState, k: usize) -> Vec<ColorTriple> {
    nominal_hues(s, k).into_iter().map(|h| color_triple(s, h)).collect()
}

/// A piecewise ramp interpolated linearly in HSLuv between stops.
#[derive(Debug, Clone, PartialEq)]
pub struct Ramp {
    stops: Vec<Hsluv>,
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// 8-bit rounding can bend hue by a degree or so near the gamut edge; nudge
/// `b` by the smallest offset that keeps the stored endpoints 90° apart.
fn quantized_quarter_turn(a: f64, b: f64, l: f64) -> f64 {
    let qa = hsluv_to_rgb(a, 90.0, l).hsluv().h;
    let err = |b: f64| (hue_distance(qa, hsluv_to_rgb(b, 90.0, l).hsluv().h) - 90.0).abs();
    if err(b) <= 0.5 {
        return b;
    }
    let mut best = (err(b), b);
    for i in 1..=40 {
        for sign in [1.0, -1.0] {
            let cand = (b + sign * 0.1 * i as f64).rem_euclid(360.0);
            let e = err(cand);
            if e <= 0.5 {
                return cand;
            }
            if e < best.0 {
                best = (e, cand);
            }
        }
    }
    best.1
}

/// Saturation of the diverging midpoint; stops at or below it carry no hue.
pub const NEUTRAL_SATURATION: f64 = 5.0;
const HUELESS: f64 = NEUTRAL_SATURATION + 1.0;

fn mix(a: Hsluv, b: Hsluv, t: f64) -> Hsluv {
    if t <= 0.0 {
        return a;
    }
    if t >= 1.0 {
        return b;
    }
    // hue of a near-grey end is meaningless, so hold the other end's hue
    let h = if a.s <= HUELESS {
        b.h
    } else if b.s <= HUELESS {
        a.h
    } else {
        a.h + hue_delta(a.h, b.h) * t
    };
    Hsluv::new(h.rem_euclid(360.0), lerp(a.s, b.s, t), lerp(a.l, b.l, t))
}

impl Ramp {
    pub fn new(stops: Vec<Hsluv>) -> Self {
        assert!(!stops.is_empty(), "ramp needs at least one stop");
        Ramp { stops }
    }

    /// Ramp through already quantised colours, e.g. those of a stored theme.
    pub fn from_colors(colors: &[Rgb]) -> Self {
        Ramp::new(colors.iter().map(|c| rgb_to_hsluv(*c)).collect())
    }

    pub fn stops(&self) -> &[Hsluv] {
        &self.stops
    }

    pub fn sample_hsluv(&self, t: f64) -> Hsluv {
        let n = self.stops.len();
        if n == 1 {
            return self.stops[0];
        }
        let x = t.clamp(0.0, 1.0) * (n - 1) as f64;
        let i = (x.floor() as usize).min(n - 2);
        mix(self.stops[i], self.stops[i + 1], x - i as f64)
    }

    pub fn sample(&self, t: f64) -> Rgb {
        self.sample_hsluv(t).to_rgb()
    }

    /// `bins` evenly spaced samples from 0 to 1 inclusive.
    pub fn quantize(&self, bins: usize) -> Vec<Rgb> {
        match bins {
            0 => Vec::new(),
            1 => vec![self.sample(0.5)],
            _ => (0..bins).map(|i| self.sample(i as f64 / (bins - 1) as f64)).collect(),
        }
    }
}

pub const SEQUENTIAL_BINS: usize = 9;
pub const DIVERGING_BINS: usize = 9;

/// Minimum lightness span of the sequential ramp.
const SEQUENTIAL_SPAN: f64 = 20.0;

/// Sequential ramp from a background-tinted pale end to the first nominal hue,
/// and diverging ramp between the first two nominal hues set 90° apart.
pub fn sequential_and_diverging(s: &SliderState) -> (Ramp, Ramp) {
    let hues = nominal_hues(s, 2);
    let bg = background_hsluv(s);
    let away = s.mode.away();

    let low_l = s.mode.base_lightness() + 5.0 * away;
    let mut high_l = s.accent_lightness;
    if (high_l - low_l) * away < SEQUENTIAL_SPAN {
        high_l = low_l + SEQUENTIAL_SPAN * away;
    }
    let sequential = Ramp::new(vec![
        Hsluv::new(bg.h, 10.0, low_l),
        Hsluv::new(hues[0], 90.0, high_l),
    ]);

    let a = hues[0];
    let delta = hue_delta(a, hues[1]);
    let b = (a + if delta >= 0.0 { 90.0 } else { -90.0 }).rem_euclid(360.0);
    let l = s.accent_lightness;
    let b = quantized_quarter_turn(a, b, l);
    let diverging = Ramp::new(vec![
        Hsluv::new(a, 90.0, l),
        Hsluv::new(bg.h, NEUTRAL_SATURATION, bg.l),
        Hsluv::new(b, 90.0, l),
    ]);
    (sequential, diverging)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Warn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CvdCheck {
    pub deficiency: Deficiency,
    pub min_delta_e: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ValidationReport {
    pub status: Status,
    pub text_contrast: f64,
    pub accent_contrast: f64,
    pub background_chroma: f64,
    pub nominal_min_delta_e: f64,
    pub color_blind: Vec<CvdCheck>,
}

/// Below this CIE76 distance two nominal colours are flagged as confusable.
pub const MIN_NOMINAL_DELTA_E: f64 = 10.0;
pub const MIN_ACCENT_CONTRAST: f64 = 3.0;

fn min_pairwise_delta_e(colors: &[Rgb]) -> f64 {
    let labs: Vec<_> = colors.iter().map(|c| c.lab()).collect();
    let mut best = f64::INFINITY;
    for i in 0..labs.len() {
        for j in i + 1..labs.len() {
            best = best.min(labs[i].delta_e(&labs[j]));
        }
    }
    best
}

fn round3(x: f64) -> f64 {
    if x.is_finite() {
        (x * 1000.0).round() / 1000.0
    } else {
        x
    }
}

pub fn validate_colors(colors: &ThemeColors) -> ValidationReport {
    let text_contrast = contrast_ratio(colors.foreground, colors.background);
    let accent_contrast = contrast_ratio(colors.accent, colors.background);
    let background_chroma = colors.background.lab().chroma();
    let nominal_min_delta_e = min_pairwise_delta_e(&colors.nominal);
    let color_blind: Vec<CvdCheck> = Deficiency::ALL
        .iter()
        .map(|&d| {
            let sim: Vec<Rgb> = colors.nominal.iter().map(|c| d.simulate(*c)).collect();
            let min = min_pairwise_delta_e(&sim);
            CvdCheck {
                deficiency: d,
                min_delta_e: round3(min),
                status: if min >= MIN_NOMINAL_DELTA_E { Status::Pass } else { Status::Warn },
            }
        })
        .collect();
    let pass = text_contrast >= MIN_TEXT_CONTRAST
        && accent_contrast >= MIN_ACCENT_CONTRAST
        && background_chroma <= MAX_BACKGROUND_CHROMA
        && nominal_min_delta_e >= MIN_NOMINAL_DELTA_E
        && color_blind.iter().all(|c| c.status == Status::Pass);
    ValidationReport {
        status: if pass { Status::Pass } else { Status::Warn },
        text_contrast: round3(text_contrast),
        accent_contrast: round3(accent_contrast),
        background_chroma: round3(background_chroma),
        nominal_min_delta_e: round3(nominal_min_delta_e),
        color_blind,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ThemeColors {
    pub background: Rgb,
    pub foreground: Rgb,
    pub accent: Rgb,
    pub nominal: Vec<Rgb>,
    pub nominal_bold: Vec<Rgb>,
    pub nominal_muted: Vec<Rgb>,
    pub sequential: Vec<Rgb>,
    pub diverging: Vec<Rgb>,
}

/// Full theme as exchanged with the renderer and the studio UI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Theme {
    pub mode: Mode,
    pub sliders: SliderState,
    pub colors: ThemeColors,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Theme {
    /// Derive a theme with one traversal's worth of nominal colours.
    pub fn from_sliders(sliders: &SliderState) -> Theme {
        let (s, warnings) = sliders.clamped();
        for w in &warnings {
            log::warn!("{w}");
        }
        let triples = nominal_scale(&s, s.per_traversal());
        let (seq, div) = sequential_and_diverging(&s);
        let colors = ThemeColors {
            background: background_color(&s),
            foreground: foreground_color(&s),
            accent: accent_color(&s),
            nominal: triples.iter().map(|t| t.standard).collect(),
            nominal_bold: triples.iter().map(|t| t.bold).collect(),
            nominal_muted: triples.iter().map(|t| t.muted).collect(),
            sequential: seq.quantize(SEQUENTIAL_BINS),
            diverging: div.quantize(DIVERGING_BINS),
        };
        let validation = Some(validate_colors(&colors));
        Theme {
            mode: s.mode,
            sliders: s,
            colors,
            validation,
            warnings,
        }
    }

    pub fn inverted(&self) -> Theme {
        Theme::from_sliders(&self.sliders.inverted())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("theme serialises")
    }

    pub fn from_json(text: &str) -> crate::Result<Theme> {
        Ok(serde_json::from_str(text)?)
    }

    /// Nominal triple for category `i`, cycling through the stored colours.
    pub fn nominal_triple(&self, i: usize) -> ColorTriple {
        let c = &self.colors;
        let n = c.nominal.len().max(1);
        let pick = |v: &[Rgb], fallback: Rgb| v.get(i % n).copied().unwrap_or(fallback);
        ColorTriple {
            standard: pick(&c.nominal, c.accent),
            bold: pick(&c.nominal_bold, c.accent),
            muted: pick(&c.nominal_muted, c.accent),
        }
    }

    /// Middle of the diverging ramp, used for absent values.
    pub fn neutral(&self) -> Rgb {
        let d = &self.colors.diverging;
        d.get(d.len() / 2).copied().unwrap_or(self.colors.background)
    }

    pub fn sequential_ramp(&self) -> Ramp {
        Ramp::from_colors(&self.colors.sequential)
    }

    pub fn diverging_ramp(&self) -> Ramp {
        Ramp::from_colors(&self.colors.diverging)
    }
}

impl Default for Theme {
    fn default() -> Self {
        Theme::from_sliders(&SliderState::default())
    }
}

/// Minimum circular distance between any two of the hues.
pub fn min_hue_separation(hues: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..hues.len() {
        for j in i + 1..hues.len() {
            best = best.min(hue_distance(hues[i], hues[j]));
        }
    }
    best
}
