//! Colour space plumbing: sRGB, CIE XYZ/Luv/Lab, HSLuv, WCAG contrast and
//! colour-vision-deficiency simulation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// 8-bit sRGB colour, serialised as `#RRGGBB`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rgb {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb {
    pub const BLACK: Rgb = Rgb::new(0, 0, 0);
    pub const WHITE: Rgb = Rgb::new(255, 255, 255);

    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Rgb { r, g, b }
    }

    /// Quantise unit-range channels, clamping anything outside [0, 1].
    pub fn from_unit(c: [f64; 3]) -> Self {
        let q = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        Rgb::new(q(c[0]), q(c[1]), q(c[2]))
    }

    pub fn to_unit(self) -> [f64; 3] {
        [self.r as f64 / 255.0, self.g as f64 / 255.0, self.b as f64 / 255.0]
    }

    pub fn to_linear(self) -> [f64; 3] {
        self.to_unit().map(to_linear)
    }

    pub fn from_linear(c: [f64; 3]) -> Self {
        Rgb::from_unit(c.map(from_linear))
    }

    pub fn hex(self) -> String {
        self.to_string()
    }

    /// WCAG relative luminance.
    pub fn luminance(self) -> f64 {
        let [r, g, b] = self.to_linear();
        0.2126 * r + 0.7152 * g + 0.0722 * b
    }

    pub fn lab(self) -> Lab {
        xyz_to_lab(linear_to_xyz(self.to_linear()))
    }

    pub fn hsluv(self) -> Hsluv {
        rgb_to_hsluv(self)
    }

    /// Largest channel difference, for round-trip checks.
    pub fn channel_distance(self, other: Rgb) -> u8 {
        self.r
            .abs_diff(other.r)
            .max(self.g.abs_diff(other.g))
            .max(self.b.abs_diff(other.b))
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02X}{:02X}{:02X}", self.r, self.g, self.b)
    }
}

impl FromStr for Rgb {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let hex = s.strip_prefix('#').unwrap_or(s);
        if hex.len() != 6 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(Error::parse("colour", format!("expected #RRGGBB, got `{s}`")));
        }
        let ch = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).expect("validated hex");
        Ok(Rgb::new(ch(0), ch(2), ch(4)))
    }
}

impl Serialize for Rgb {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rgb {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn from_linear(c: f64) -> f64 {
    if c <= 0.003_130_8 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

// sRGB (D65) <-> XYZ
const M: [[f64; 3]; 3] = [
    [3.240_969_941_904_521, -1.537_383_177_570_093, -0.498_610_760_293],
    [-0.969_243_636_280_87, 1.875_967_501_507_72, 0.041_555_057_407_175],
    [0.055_630_079_696_993, -0.203_976_958_888_97, 1.056_971_514_242_878],
];
const M_INV: [[f64; 3]; 3] = [
    [0.412_390_799_265_95, 0.357_584_339_383_87, 0.180_480_788_401_83],
    [0.212_639_005_871_51, 0.715_168_678_767_75, 0.072_192_315_360_733],
    [0.019_330_818_715_591, 0.119_194_779_794_62, 0.950_532_152_249_66],
];

const REF_U: f64 = 0.197_830_006_642_83;
const REF_V: f64 = 0.468_319_994_938_79;
const KAPPA: f64 = 903.296_296_296_296_3;
const EPSILON: f64 = 0.008_856_451_679_035_631;

fn mul(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2])
}

pub fn linear_to_xyz(c: [f64; 3]) -> [f64; 3] {
    mul(&M_INV, c)
}

pub fn xyz_to_linear(xyz: [f64; 3]) -> [f64; 3] {
    mul(&M, xyz)
}

fn y_to_l(y: f64) -> f64 {
    if y <= EPSILON {
        y * KAPPA
    } else {
        116.0 * y.cbrt() - 16.0
    }
}

fn l_to_y(l: f64) -> f64 {
    if l <= 8.0 {
        l / KAPPA
    } else {
        ((l + 16.0) / 116.0).powi(3)
    }
}

pub fn xyz_to_luv([x, y, z]: [f64; 3]) -> [f64; 3] {
    let l = y_to_l(y);
    let denom = x + 15.0 * y + 3.0 * z;
    if l == 0.0 || denom == 0.0 {
        return [0.0, 0.0, 0.0];
    }
    let u = 13.0 * l * (4.0 * x / denom - REF_U);
    let v = 13.0 * l * (9.0 * y / denom - REF_V);
    [l, u, v]
}

pub fn luv_to_xyz([l, u, v]: [f64; 3]) -> [f64; 3] {
    if l == 0.0 {
        return [0.0, 0.0, 0.0];
    }
    let var_u = u / (13.0 * l) + REF_U;
    let var_v = v / (13.0 * l) + REF_V;
    let y = l_to_y(l);
    let x = 9.0 * y * var_u / (4.0 * var_v);
    let z = (9.0 * y - 15.0 * var_v * y - var_v * x) / (3.0 * var_v);
    [x, y, z]
}

fn luv_to_lch([l, u, v]: [f64; 3]) -> [f64; 3] {
    let c = u.hypot(v);
    let h = if c < 1e-8 {
        0.0
    } else {
        v.atan2(u).to_degrees().rem_euclid(360.0)
    };
    [l, c, h]
}

fn lch_to_luv([l, c, h]: [f64; 3]) -> [f64; 3] {
    let r = h.to_radians();
    [l, r.cos() * c, r.sin() * c]
}

/// The six gamut-boundary lines (slope, intercept) in the Luv chroma plane
/// at lightness `l`.
fn bounds(l: f64) -> [(f64, f64); 6] {
    let sub1 = (l + 16.0).powi(3) / 1_560_896.0;
    let sub2 = if sub1 > EPSILON { sub1 } else { l / KAPPA };
    let mut out = [(0.0, 0.0); 6];
    for (c, row) in M.iter().enumerate() {
        let [m1, m2, m3] = *row;
        for t in 0..2 {
            let t = t as f64;
            let top1 = (284_517.0 * m1 - 94_839.0 * m3) * sub2;
            let top2 = (838_422.0 * m3 + 769_860.0 * m2 + 731_718.0 * m1) * l * sub2
                - 769_860.0 * t * l;
            let bottom = (632_260.0 * m3 - 126_452.0 * m2) * sub2 + 126_452.0 * t;
            out[c * 2 + t as usize] = (top1 / bottom, top2 / bottom);
        }
    }
    out
}

/// Maximum in-gamut Luv chroma for a lightness and hue.
pub fn max_chroma(l: f64, h: f64) -> f64 {
    let r = h.to_radians();
    bounds(l)
        .iter()
        .map(|&(slope, intercept)| intercept / (r.sin() - slope * r.cos()))
        .filter(|len| *len >= 0.0)
        .fold(f64::INFINITY, f64::min)
}

/// HSLuv coordinates: hue in degrees, saturation and lightness in 0..=100.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hsluv {
    pub h: f64,
    pub s: f64,
    pub l: f64,
}

impl Hsluv {
    pub fn new(h: f64, s: f64, l: f64) -> Self {
        Hsluv { h, s, l }
    }

    pub fn to_rgb(self) -> Rgb {
        hsluv_to_rgb(self.h, self.s, self.l)
    }
}

fn hsluv_to_lch(h: f64, s: f64, l: f64) -> [f64; 3] {
    if l > 99.999_999_9 {
        return [100.0, 0.0, h];
    }
    if l < 1e-8 {
        return [0.0, 0.0, h];
    }
    [l, max_chroma(l, h) / 100.0 * s, h]
}

/// Unquantised sRGB (unit range) for HSLuv input. Hue wraps; saturation and
/// lightness are clamped to 0..=100 with a logged warning.
pub fn hsluv_to_unit(h: f64, s: f64, l: f64) -> [f64; 3] {
    let clamp = |name: &str, v: f64| {
        let c = v.clamp(0.0, 100.0);
        if c != v {
            log::warn!("hsluv {name} {v} clamped to {c}");
        }
        c
    };
    let (s, l) = (clamp("saturation", s), clamp("lightness", l));
    let lch = hsluv_to_lch(h.rem_euclid(360.0), s, l);
    xyz_to_linear(luv_to_xyz(lch_to_luv(lch))).map(from_linear)
}

pub fn hsluv_to_rgb(h: f64, s: f64, l: f64) -> Rgb {
    Rgb::from_unit(hsluv_to_unit(h, s, l))
}

pub fn unit_to_hsluv(c: [f64; 3]) -> Hsluv {
    let [l, ch, h] = luv_to_lch(xyz_to_luv(linear_to_xyz(c.map(to_linear))));
    if l > 99.999_999_9 {
        return Hsluv::new(h, 0.0, 100.0);
    }
    if l < 1e-8 {
        return Hsluv::new(h, 0.0, 0.0);
    }
    Hsluv::new(h, (ch / max_chroma(l, h) * 100.0).min(100.0), l)
}

pub fn rgb_to_hsluv(c: Rgb) -> Hsluv {
    unit_to_hsluv(c.to_unit())
}

/// CIE L*a*b* under D65.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lab {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl Lab {
    /// LCh(ab) chroma.
    pub fn chroma(&self) -> f64 {
        self.a.hypot(self.b)
    }

    /// CIE76 colour difference.
    pub fn delta_e(&self, other: &Lab) -> f64 {
        ((self.l - other.l).powi(2) + (self.a - other.a).powi(2) + (self.b - other.b).powi(2)).sqrt()
    }
}

pub fn xyz_to_lab(xyz: [f64; 3]) -> Lab {
    // white taken from the same matrix so that greys have zero chroma
    let white = linear_to_xyz([1.0; 3]);
    let f = |t: f64| {
        if t > EPSILON {
            t.cbrt()
        } else {
            (KAPPA * t + 16.0) / 116.0
        }
    };
    let [fx, fy, fz] = [0, 1, 2].map(|i| f(xyz[i] / white[i]));
    Lab {
        l: 116.0 * fy - 16.0,
        a: 500.0 * (fx - fy),
        b: 200.0 * (fy - fz),
    }
}

/// WCAG 2 contrast ratio, always ≥ 1.
pub fn contrast_ratio(a: Rgb, b: Rgb) -> f64 {
    let (la, lb) = (a.luminance(), b.luminance());
    (la.max(lb) + 0.05) / (la.min(lb) + 0.05)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Deficiency {
    Protan,
    Deutan,
    Tritan,
}

impl Deficiency {
    pub const ALL: [Deficiency; 3] = [Deficiency::Protan, Deficiency::Deutan, Deficiency::Tritan];

    // Machado, Oliveira & Fernandes matrices at full severity, linear RGB.
    fn matrix(self) -> [[f64; 3]; 3] {
        match self {
            Deficiency::Protan => [
                [0.152_286, 1.052_583, -0.204_868],
                [0.114_503, 0.786_281, 0.099_216],
                [-0.003_882, -0.048_116, 1.051_998],
            ],
            Deficiency::Deutan => [
                [0.367_322, 0.860_646, -0.227_968],
                [0.280_085, 0.672_501, 0.047_413],
                [-0.011_820, 0.042_940, 0.968_881],
            ],
            Deficiency::Tritan => [
                [1.255_528, -0.076_749, -0.178_779],
                [-0.078_411, 0.930_809, 0.147_602],
                [0.004_733, 0.691_367, 0.303_900],
            ],
        }
    }

    pub fn simulate(self, c: Rgb) -> Rgb {
        Rgb::from_linear(mul(&self.matrix(), c.to_linear()))
    }
}

/// Signed shortest angular difference `to - from` in (-180, 180].
pub fn hue_delta(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

pub fn hue_distance(a: f64, b: f64) -> f64 {
    hue_delta(a, b).abs()
}
