//! Three-stage "people network" layout: an annealing stage that pulls
//! proto-communities into their own regions, a ForceAtlas2 expansion, and a
//! ForceAtlas2 contraction with strong gravity and overlap prevention.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CollabGraph, PersonId};

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct LayoutConfig {
    pub seed: u64,
    /// Defaults to `200·ln n` sweeps.
    pub liquid_iterations: Option<usize>,
    /// Defaults to `100·ln n` sweeps.
    pub expansion_iterations: Option<usize>,
    pub fa2_expand_scaling: f64,
    pub fa2_contract_scaling: f64,
    pub fa2_iterations: usize,
    pub gravity: f64,
    pub barnes_hut_theta: f64,
    pub convergence_tolerance: f64,
    /// Node radius is `radius_scale · sqrt(degree + 1)`.
    pub radius_scale: f64,
    /// Weight of the neighbour-distance term against density while annealing.
    pub anneal_attraction: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            seed: 0,
            liquid_iterations: None,
            expansion_iterations: None,
            fa2_expand_scaling: 30.0,
            fa2_contract_scaling: 8.0,
            fa2_iterations: 300,
            gravity: 0.05,
            barnes_hut_theta: 1.2,
            convergence_tolerance: 1e-3,
            radius_scale: 1.0,
            anneal_attraction: 30.0,
        }
    }
}

impl LayoutConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fa2_expand_scaling > self.fa2_contract_scaling && self.fa2_contract_scaling > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need expand scaling {} > contract scaling {} > 0",
                self.fa2_expand_scaling, self.fa2_contract_scaling
            )));
        }
        if !(self.gravity >= 0.0 && self.barnes_hut_theta > 0.0 && self.radius_scale > 0.0) {
            return Err(Error::InvalidParameter("gravity, theta and radius scale must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LayoutResult {
    pub positions: BTreeMap<PersonId, Point>,
    pub radii: BTreeMap<PersonId, f64>,
}

pub fn node_radii(g: &CollabGraph, scale: f64) -> Vec<f64> {
    (0..g.node_count()).map(|i| scale * ((g.degree(i) + 1) as f64).sqrt()).collect()
}

// ---------------------------------------------------------------- annealing

/// Density kernel reach, in grid cells (one cell per layout unit).
const DENSITY_REACH: i64 = 6;

/// Smoothed node density on a square grid: every node deposits a cone of
/// height 1 and radius `DENSITY_REACH` cells.
struct DensityGrid {
    half: i64,
    side: usize,
    cells: Vec<f64>,
}

impl DensityGrid {
    fn new(extent: f64, pos: &[Point]) -> Self {
        let half = extent.ceil() as i64 + DENSITY_REACH + 1;
        let side = (2 * half + 1) as usize;
        let mut grid = DensityGrid { half, side, cells: vec![0.0; side * side] };
        for &p in pos {
            grid.deposit(p, 1.0);
        }
        grid
    }

    fn cell(&self, p: Point) -> (i64, i64) {
        let clamp = |x: f64| (x.round() as i64).clamp(-self.half, self.half);
        (clamp(p[0]), clamp(p[1]))
    }

    fn kernel(dx: i64, dy: i64) -> f64 {
        let d = ((dx * dx + dy * dy) as f64).sqrt();
        (1.0 - d / DENSITY_REACH as f64).max(0.0)
    }

    fn deposit(&mut self, p: Point, sign: f64) {
        let (cx, cy) = self.cell(p);
        for dx in -DENSITY_REACH..=DENSITY_REACH {
            for dy in -DENSITY_REACH..=DENSITY_REACH {
                let (x, y) = (cx + dx, cy + dy);
                if x.abs() > self.half || y.abs() > self.half {
                    continue;
                }
                let idx = (y + self.half) as usize * self.side + (x + self.half) as usize;
                self.cells[idx] += sign * Self::kernel(dx, dy);
            }
        }
    }

    /// Density at `p` from every node except one sitting at `own`.
    fn density(&self, p: Point, own: Point) -> f64 {
        let (cx, cy) = self.cell(p);
        let (ox, oy) = self.cell(own);
        let idx = (cy + self.half) as usize * self.side + (cx + self.half) as usize;
        self.cells[idx] - Self::kernel(cx - ox, cy - oy)
    }
}

fn dist2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn local_energy(g: &CollabGraph, pos: &[Point], grid: &DensityGrid, v: usize, p: Point, attraction: f64) -> f64 {
    let mut attract = 0.0;
    let mut wsum = 0.0;
    for &(u, w) in g.neighbors(v) {
        attract += w * dist2(p, pos[u]);
        wsum += w;
    }
    let attract = if wsum > 0.0 { attract / wsum } else { 0.0 };
    attraction * attract + grid.density(p, pos[v])
}

fn default_sweeps(n: usize, per_log: f64) -> usize {
    ((per_log * (n.max(2) as f64).ln()).round() as usize).max(1)
}

/// Greedy annealing on weighted squared neighbour distance plus a smoothed
/// density penalty. The liquid phase runs at a fixed high temperature; the
/// expansion phase cools linearly while the allowed radius doubles.
pub fn anneal_stage(g: &CollabGraph, cfg: &LayoutConfig) -> Vec<Point> {
    let n = g.node_count();
    if n <= 1 {
        return vec![[0.0, 0.0]; n];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let r0 = 2.0 * (n as f64).sqrt();
    let mut pos: Vec<Point> = (0..n)
        .map(|_| [rng.random_range(-r0..r0), rng.random_range(-r0..r0)])
        .collect();
    let mut grid = DensityGrid::new(2.0 * r0 * std::f64::consts::SQRT_2, &pos);
    let liquid = cfg.liquid_iterations.unwrap_or_else(|| default_sweeps(n, 200.0));
    let expansion = cfg.expansion_iterations.unwrap_or_else(|| default_sweeps(n, 100.0));
    let hot = r0 / 4.0;

    for sweep in 0..liquid + expansion {
        let (temperature, limit, attraction) = if sweep < liquid {
            (hot, r0, cfg.anneal_attraction)
        } else {
            let t = (sweep - liquid + 1) as f64 / expansion as f64;
            (hot * (1.0 - t).max(0.01), r0 * (1.0 + t), cfg.anneal_attraction * (1.0 - 0.5 * t))
        };
        for v in 0..n {
            let here = pos[v];
            let mut best = (local_energy(g, &pos, &grid, v, here, attraction), here);
            let nbrs = g.neighbors(v);
            let barycentre = if nbrs.is_empty() {
                here
            } else {
                let wsum: f64 = nbrs.iter().map(|e| e.1).sum();
                let bx = nbrs.iter().map(|&(u, w)| w * pos[u][0]).sum::<f64>() / wsum;
                let by = nbrs.iter().map(|&(u, w)| w * pos[u][1]).sum::<f64>() / wsum;
                let s = 0.25 * temperature;
                [bx + rng.random_range(-s..=s), by + rng.random_range(-s..=s)]
            };
            let jump = [
                here[0] + rng.random_range(-temperature..=temperature),
                here[1] + rng.random_range(-temperature..=temperature),
            ];
            for mut c in [barycentre, jump] {
                let r = (c[0] * c[0] + c[1] * c[1]).sqrt();
                if r > limit {
                    c = [c[0] * limit / r, c[1] * limit / r];
                }
                let e = local_energy(g, &pos, &grid, v, c, attraction);
                if e < best.0 {
                    best = (e, c);
                }
            }
            if best.1 != here {
                grid.deposit(here, -1.0);
                grid.deposit(best.1, 1.0);
                pos[v] = best.1;
            }
        }
    }
    pos
}

// ---------------------------------------------------------------- ForceAtlas2

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GravityMode {
    None,
    Normal,
    Strong,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fa2Options {
    pub scaling: f64,
    pub gravity_mode: GravityMode,
    pub gravity: f64,
    pub prevent_overlap: bool,
    pub iterations: usize,
    pub theta: f64,
    pub tolerance: f64,
    /// Exact pairwise repulsion below this node count, Barnes-Hut above.
    pub exact_below: usize,
    pub radii: Vec<f64>,
}

const OVERLAP_REPULSION: f64 = 100.0;

struct QuadNode {
    center: Point,
    half: f64,
    mass: f64,
    com: Point,
    body: Option<usize>,
    children: Option<Box<[QuadNode; 4]>>,
}

impl QuadNode {
    fn empty(center: Point, half: f64) -> Self {
        QuadNode {
            center,
            half,
            mass: 0.0,
            com: [0.0, 0.0],
            body: None,
            children: None,
        }
    }

    fn quadrant(&self, p: Point) -> usize {
        (p[0] >= self.center[0]) as usize + 2 * (p[1] >= self.center[1]) as usize
    }

    fn insert(&mut self, i: usize, p: Point, m: f64, depth: usize) {
        if self.mass == 0.0 && self.children.is_none() {
            self.body = Some(i);
            self.mass = m;
            self.com = p;
            return;
        }
        if self.children.is_none() {
            if depth > 48 {
                // coincident bodies: aggregate in place
                self.com = [
                    (self.com[0] * self.mass + p[0] * m) / (self.mass + m),
                    (self.com[1] * self.mass + p[1] * m) / (self.mass + m),
                ];
                self.mass += m;
                self.body = None;
                return;
            }
            let h = self.half / 2.0;
            let c = self.center;
            self.children = Some(Box::new([
                QuadNode::empty([c[0] - h, c[1] - h], h),
                QuadNode::empty([c[0] + h, c[1] - h], h),
                QuadNode::empty([c[0] - h, c[1] + h], h),
                QuadNode::empty([c[0] + h, c[1] + h], h),
            ]));
            if let Some(b) = self.body.take() {
                let (bp, bm) = (self.com, self.mass);
                let q = self.quadrant(bp);
                self.children.as_mut().unwrap()[q].insert(b, bp, bm, depth + 1);
            }
        }
        let total = self.mass + m;
        self.com = [
            (self.com[0] * self.mass + p[0] * m) / total,
            (self.com[1] * self.mass + p[1] * m) / total,
        ];
        self.mass = total;
        let q = self.quadrant(p);
        self.children.as_mut().unwrap()[q].insert(i, p, m, depth + 1);
    }

    fn build(pos: &[Point], mass: &[f64]) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in pos {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let center = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
        let half = ((hi[0] - lo[0]).max(hi[1] - lo[1]) / 2.0).max(1e-9) * 1.0001;
        let mut root = QuadNode::empty(center, half);
        for (i, &p) in pos.iter().enumerate() {
            root.insert(i, p, mass[i], 0);
        }
        root
    }

    fn repulse(&self, i: usize, p: Point, m: f64, kr: f64, theta: f64, out: &mut Point) {
        if self.mass == 0.0 || self.body == Some(i) {
            return;
        }
        let dx = p[0] - self.com[0];
        let dy = p[1] - self.com[1];
        let d = (dx * dx + dy * dy).sqrt();
        let leaf = self.children.is_none();
        if leaf || (2.0 * self.half) / d < theta {
            if d > 0.0 {
                let f = kr * m * self.mass / d;
                out[0] += dx / d * f;
                out[1] += dy / d * f;
            }
            return;
        }
        for c in self.children.as_ref().unwrap().iter() {
            c.repulse(i, p, m, kr, theta, out);
        }
    }
}

fn forces(g: &CollabGraph, pos: &[Point], mass: &[f64], opts: &Fa2Options) -> Vec<Point> {
    let n = pos.len();
    let kr = opts.scaling;
    let tree = (n >= opts.exact_below).then(|| QuadNode::build(pos, mass));
    (0..n)
        .into_par_iter()
        .map(|i| {
            let p = pos[i];
            let mut f = [0.0, 0.0];
            match &tree {
                Some(t) => t.repulse(i, p, mass[i], kr, opts.theta, &mut f),
                None => {
                    for j in 0..n {
                        if j == i {
                            continue;
                        }
                        let dx = p[0] - pos[j][0];
                        let dy = p[1] - pos[j][1];
                        let d = (dx * dx + dy * dy).sqrt();
                        if d == 0.0 {
                            continue;
                        }
                        let mag = if opts.prevent_overlap {
                            let gap = d - opts.radii[i] - opts.radii[j];
                            if gap > 0.0 {
                                kr * mass[i] * mass[j] / gap
                            } else if gap < 0.0 {
                                OVERLAP_REPULSION * kr * mass[i] * mass[j]
                            } else {
                                0.0
                            }
                        } else {
                            kr * mass[i] * mass[j] / d
                        };
                        f[0] += dx / d * mag;
                        f[1] += dy / d * mag;
                    }
                }
            }
            for &(j, w) in g.neighbors(i) {
                let dx = pos[j][0] - p[0];
                let dy = pos[j][1] - p[1];
                let d = (dx * dx + dy * dy).sqrt();
                if d == 0.0 {
                    continue;
                }
                let stretch = if opts.prevent_overlap {
                    (d - opts.radii[i] - opts.radii[j]).max(0.0)
                } else {
                    d
                };
                f[0] += dx / d * w * stretch;
                f[1] += dy / d * w * stretch;
            }
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            match opts.gravity_mode {
                GravityMode::None => {}
                GravityMode::Strong => {
                    f[0] -= opts.gravity * mass[i] * p[0];
                    f[1] -= opts.gravity * mass[i] * p[1];
                }
                GravityMode::Normal if r > 0.0 => {
                    f[0] -= opts.gravity * mass[i] * p[0] / r;
                    f[1] -= opts.gravity * mass[i] * p[1] / r;
                }
                GravityMode::Normal => {}
            }
            f
        })
        .collect()
}

fn run_fa2(g: &CollabGraph, start: &[Point], opts: &Fa2Options) -> Vec<Point> {
    let n = start.len();
    let mass: Vec<f64> = (0..n).map(|i| (g.degree(i) + 1) as f64).collect();
    let mut pos = start.to_vec();
    let mut prev = vec![[0.0, 0.0]; n];
    let mut speed = 1.0;
    let mut efficiency = 1.0;
    for iter in 0..opts.iterations {
        let f = forces(g, &pos, &mass, opts);
        let mut swinging_total = 0.0;
        let mut traction_total = 0.0;
        let swing: Vec<f64> = (0..n)
            .map(|i| {
                let s = mass[i] * ((f[i][0] - prev[i][0]).powi(2) + (f[i][1] - prev[i][1]).powi(2)).sqrt();
                let t = mass[i] * ((f[i][0] + prev[i][0]).powi(2) + (f[i][1] + prev[i][1]).powi(2)).sqrt() / 2.0;
                swinging_total += s;
                traction_total += t;
                s / mass[i]
            })
            .collect();

        let optimal = 0.05 * (n as f64).sqrt();
        let min_jt = optimal.sqrt();
        let mut jt = min_jt.max((10.0f64).min(optimal * traction_total / (n * n) as f64));
        if traction_total > 0.0 && swinging_total / traction_total > 2.0 {
            if efficiency > 0.05 {
                efficiency *= 0.5;
            }
            jt = jt.max(1.0);
        }
        let target = if swinging_total > 0.0 {
            jt * efficiency * traction_total / swinging_total
        } else {
            speed
        };
        if swinging_total > jt * traction_total {
            if efficiency > 0.05 {
                efficiency *= 0.7;
            }
        } else if speed < 1000.0 {
            efficiency *= 1.3;
        }
        speed += (target - speed).min(0.5 * speed);

        let mut moved = 0.0;
        for i in 0..n {
            let df = (f[i][0] * f[i][0] + f[i][1] * f[i][1]).sqrt();
            if df == 0.0 {
                continue;
            }
            let mut factor = speed / (1.0 + (speed * swing[i]).sqrt());
            if opts.prevent_overlap {
                factor = (0.1 * factor * df).min(10.0) / df;
            }
            pos[i][0] += f[i][0] * factor;
            pos[i][1] += f[i][1] * factor;
            moved += df * factor;
        }
        prev = f;
        if iter > 10 && moved / n as f64 <= opts.tolerance {
            break;
        }
    }
    pos
}

fn all_finite(pos: &[Point]) -> bool {
    pos.iter().all(|p| p[0].is_finite() && p[1].is_finite())
}

/// ForceAtlas2 from `positions`. A non-finite result is retried once from
/// slightly jittered positions.
pub fn fa2_stage(g: &CollabGraph, positions: &[Point], opts: &Fa2Options, seed: u64) -> Result<Vec<Point>> {
    if positions.len() != g.node_count() || opts.radii.len() != g.node_count() {
        return Err(Error::InvalidParameter("positions and radii must cover every node".into()));
    }
    if g.node_count() <= 1 {
        return Ok(positions.to_vec());
    }
    let out = run_fa2(g, positions, opts);
    if all_finite(&out) {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6a09_e667);
    let jittered: Vec<Point> = positions
        .iter()
        .map(|p| [p[0] + rng.random_range(-1e-3..1e-3), p[1] + rng.random_range(-1e-3..1e-3)])
        .collect();
    let out = run_fa2(g, &jittered, opts);
    if all_finite(&out) {
        Ok(out)
    } else {
        Err(Error::NonFiniteLayout)
    }
}

/// Stage outputs kept for inspection.
#[derive(Debug, Clone)]
pub struct LayoutStages {
    pub annealed: Vec<Point>,
    pub expanded: Vec<Point>,
    pub contracted: Vec<Point>,
    pub radii: Vec<f64>,
}

pub fn layout_stages(g: &CollabGraph, cfg: &LayoutConfig) -> Result<LayoutStages> {
    cfg.validate()?;
    if g.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let radii = node_radii(g, cfg.radius_scale);
    let annealed = anneal_stage(g, cfg);
    let base = Fa2Options {
        scaling: cfg.fa2_expand_scaling,
        gravity_mode: GravityMode::None,
        gravity: cfg.gravity,
        prevent_overlap: false,
        iterations: cfg.fa2_iterations,
        theta: cfg.barnes_hut_theta,
        tolerance: cfg.convergence_tolerance,
        exact_below: 2000,
        radii: radii.clone(),
    };
    let mut expanded = fa2_stage(g, &annealed, &base, cfg.seed)?;
    // gravity pulls toward the origin, so put the gravity-weighted centre there
    // and contraction shrinks the frame in place instead of sliding it
    let (mut cx, mut cy, mut mass) = (0.0, 0.0, 0.0);
    for (i, p) in expanded.iter().enumerate() {
        let m = g.degree(i) as f64 + 1.0;
        cx += m * p[0];
        cy += m * p[1];
        mass += m;
    }
    for p in &mut expanded {
        p[0] -= cx / mass;
        p[1] -= cy / mass;
    }
    let contract = Fa2Options {
        scaling: cfg.fa2_contract_scaling,
        gravity_mode: GravityMode::Strong,
        prevent_overlap: true,
        ..base
    };
    let mut contracted = fa2_stage(g, &expanded, &contract, cfg.seed.wrapping_add(1))?;
    fit_inside(&mut contracted, bounds(&expanded));
    Ok(LayoutStages {
        annealed,
        expanded,
        contracted,
        radii,
    })
}

fn bounds(p: &[Point]) -> [f64; 4] {
    p.iter().fold([f64::MAX, f64::MAX, f64::MIN, f64::MIN], |b, q| {
        [b[0].min(q[0]), b[1].min(q[1]), b[2].max(q[0]), b[3].max(q[1])]
    })
}

// Contraction can drift the frame sideways on tiny graphs. Slide it back,
// and shrink uniformly only when it is wider than the frame it came from.
fn fit_inside(p: &mut [Point], frame: [f64; 4]) {
    let b = bounds(p);
    let (fw, fh, w, h) = (frame[2] - frame[0], frame[3] - frame[1], b[2] - b[0], b[3] - b[1]);
    let s = [if w > fw { fw / w } else { 1.0 }, if h > fh { fh / h } else { 1.0 }];
    let s = s[0].min(s[1]);
    let mut b = b;
    if s < 1.0 {
        let c = [(b[0] + b[2]) / 2.0, (b[1] + b[3]) / 2.0];
        for q in p.iter_mut() {
            q[0] = c[0] + (q[0] - c[0]) * s;
            q[1] = c[1] + (q[1] - c[1]) * s;
        }
        b = bounds(p);
    }
    let shift = |lo: f64, hi: f64, flo: f64, fhi: f64| {
        if lo < flo {
            flo - lo
        } else if hi > fhi {
            (fhi - hi).max(flo - lo)
        } else {
            0.0
        }
    };
    let (dx, dy) = (shift(b[0], b[2], frame[0], frame[2]), shift(b[1], b[3], frame[1], frame[3]));
    if dx != 0.0 || dy != 0.0 {
        for q in p.iter_mut() {
            q[0] += dx;
            q[1] += dy;
        }
    }
}

pub fn layout_pipeline(g: &CollabGraph, cfg: &LayoutConfig) -> Result<LayoutResult> {
    let stages = layout_stages(g, cfg)?;
    let positions = g.ids().iter().cloned().zip(stages.contracted).collect();
    let radii = g.ids().iter().cloned().zip(stages.radii).collect();
    Ok(LayoutResult { positions, radii })
}

/// Total pairwise disk intersection area over total disk area.
pub fn overlap_fraction(pos: &[Point], radii: &[f64]) -> f64 {
    let total: f64 = radii.iter().map(|r| std::f64::consts::PI * r * r).sum();
    if total == 0.0 {
        return 0.0;
    }
    let mut overlap = 0.0;
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            overlap += lens_area(dist2(pos[i], pos[j]).sqrt(), radii[i], radii[j]);
        }
    }
    overlap / total
}

fn lens_area(d: f64, r1: f64, r2: f64) -> f64 {
    if d >= r1 + r2 {
        return 0.0;
    }
    if d <= (r1 - r2).abs() {
        let r = r1.min(r2);
        return std::f64::consts::PI * r * r;
    }
    let a = r1 * r1 * ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0).acos();
    let b = r2 * r2 * ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0).acos();
    let c = 0.5 * ((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)).max(0.0).sqrt();
    a + b - c
}

pub fn format_positions_csv(r: &LayoutResult) -> String {
    let mut out = String::from("person_id,x,y,radius\n");
    for (id, p) in &r.positions {
        out.push_str(&format!("{id},{},{},{}\n", p[0], p[1], r.radii[id]));
    }
    out
}

pub fn parse_positions_csv(reader: impl std::io::Read) -> Result<LayoutResult> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut positions = BTreeMap::new();
    let mut radii = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let loc = format!("positions line {}", i + 2);
        let id = PersonId::new(rec.get(0).unwrap_or("").trim()).map_err(|_| Error::parse(&loc, "empty person id"))?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(&loc, format!("bad number in column {}", k + 1)))
        };
        positions.insert(id.clone(), [num(1)?, num(2)?]);
        radii.insert(id, num(3)?);
    }
    Ok(LayoutResult { positions, radii })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> LayoutConfig {
        LayoutConfig {
            liquid_iterations: Some(60),
            expansion_iterations: Some(30),
            fa2_iterations: 150,
            ..LayoutConfig::default()
        }
    }

    fn cliques() -> CollabGraph {
        let names: Vec<String> = (0..40).map(|i| format!("n{i:02}")).collect();
        let mut edges = Vec::new();
        for block in [0..20, 20..40] {
            for a in block.clone() {
                for b in a + 1..block.end {
                    edges.push((names[a].as_str(), names[b].as_str(), 1.0));
                }
            }
        }
        edges.push((names[0].as_str(), names[20].as_str(), 1.0));
        CollabGraph::from_edges(edges).unwrap()
    }

    fn mean_distances(pos: &[Point]) -> (f64, f64) {
        let (mut intra, mut ni, mut inter, mut nx) = (0.0, 0, 0.0, 0);
        for i in 0..pos.len() {
            for j in i + 1..pos.len() {
                let d = dist2(pos[i], pos[j]).sqrt();
                if (i < 20) == (j < 20) {
                    intra += d;
                    ni += 1;
                } else {
                    inter += d;
                    nx += 1;
                }
            }
        }
        (intra / ni as f64, inter / nx as f64)
    }

    #[test]
    fn single_node_at_origin() {
        let mut b = crate::graph::GraphBuilder::new();
        b.add_node(crate::graph::pid("solo"));
        let g = b.build();
        assert_eq!(anneal_stage(&g, &quick()), vec![[0.0, 0.0]]);
        let r = layout_pipeline(&g, &quick()).unwrap();
        assert_eq!(r.positions[&crate::graph::pid("solo")], [0.0, 0.0]);
    }

    #[test]
    fn anneal_separates_cliques() {
        let g = cliques();
        let pos = anneal_stage(&g, &quick());
        let (intra, inter) = mean_distances(&pos);
        assert!(intra < inter, "{intra} vs {inter}");
        assert_eq!(pos, anneal_stage(&g, &quick()));
    }

    #[test]
    fn pure_repulsion_pushes_apart() {
        let mut b = crate::graph::GraphBuilder::new();
        b.add_node(crate::graph::pid("a"));
        b.add_node(crate::graph::pid("b"));
        let g = b.build();
        let mut pos = vec![[0.0, 0.0], [1.0, 0.5]];
        let mut last = dist2(pos[0], pos[1]);
        for _ in 0..20 {
            let opts = Fa2Options {
                scaling: 2.0,
                gravity_mode: GravityMode::None,
                gravity: 0.0,
                prevent_overlap: false,
                iterations: 1,
                theta: 1.2,
                tolerance: 0.0,
                exact_below: 2000,
                radii: vec![1.0, 1.0],
            };
            pos = fa2_stage(&g, &pos, &opts, 0).unwrap();
            let d = dist2(pos[0], pos[1]);
            assert!(d > last);
            last = d;
        }
    }

    #[test]
    fn tiny_graphs_are_finite_and_distinct() {
        for edges in [
            vec![("a", "b", 1.0)],
            vec![("a", "b", 1.0), ("b", "c", 2.0)],
            vec![("a", "b", 1.0), ("b", "c", 1.0), ("a", "c", 1.0)],
        ] {
            let g = CollabGraph::from_edges(edges).unwrap();
            let r = layout_pipeline(&g, &quick()).unwrap();
            let pts: Vec<Point> = r.positions.values().copied().collect();
            assert!(all_finite(&pts));
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    assert!(dist2(pts[i], pts[j]) > 1e-9);
                }
            }
        }
    }

    #[test]
    fn barnes_hut_close_to_exact() {
        let g = cliques();
        let pos = anneal_stage(&g, &quick());
        let mass: Vec<f64> = (0..g.node_count()).map(|i| (g.degree(i) + 1) as f64).collect();
        let mut opts = Fa2Options {
            scaling: 2.0,
            gravity_mode: GravityMode::None,
            gravity: 0.0,
            prevent_overlap: false,
            iterations: 1,
            theta: 0.3,
            tolerance: 0.0,
            exact_below: usize::MAX,
            radii: node_radii(&g, 1.0),
        };
        let exact = forces(&g, &pos, &mass, &opts);
        opts.exact_below = 0;
        let approx = forces(&g, &pos, &mass, &opts);
        let norm: f64 = exact.iter().map(|f| f[0].hypot(f[1])).sum();
        let err: f64 = exact.iter().zip(&approx).map(|(a, b)| (a[0] - b[0]).hypot(a[1] - b[1])).sum();
        assert!(err / norm < 0.05, "{}", err / norm);
    }

    #[test]
    fn lens_area_cases() {
        assert_eq!(lens_area(3.0, 1.0, 1.0), 0.0);
        assert!((lens_area(0.0, 1.0, 2.0) - std::f64::consts::PI).abs() < 1e-12);
        // two unit disks at distance 1
        let expected = 2.0 * (0.5f64).acos() - 0.5 * 3f64.sqrt();
        assert!((lens_area(1.0, 1.0, 1.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let g = cliques();
        let r = layout_pipeline(&g, &quick()).unwrap();
        let text = format_positions_csv(&r);
        assert_eq!(parse_positions_csv(text.as_bytes()).unwrap(), r);
    }
}
