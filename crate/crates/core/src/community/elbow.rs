use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{modularity, CollabGraph};

use super::hierarchy::{detect_hierarchy_with, HierarchyConfig};
use super::Quality;

/// Leaf modularity per maximum community size, ascending by size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeModularityCurve {
    pub points: Vec<(usize, f64)>,
}

pub const DEFAULT_CANDIDATE_SIZES: [usize; 6] = [10, 20, 40, 80, 160, 320];

/// The default size grid, keeping sizes below the node count.
pub fn default_candidate_sizes(node_count: usize) -> Vec<usize> {
    DEFAULT_CANDIDATE_SIZES
        .iter()
        .copied()
        .filter(|&s| s < node_count)
        .collect()
}

impl SizeModularityCurve {
    pub fn new(mut points: Vec<(usize, f64)>) -> Self {
        points.sort_by_key(|p| p.0);
        SizeModularityCurve { points }
    }

    /// The point farthest from the chord joining the first and last points,
    /// with both axes min-max normalised. Only interior points compete and the
    /// smallest size wins ties.
    pub fn elbow(&self) -> Result<usize> {
        let pts = &self.points;
        if pts.len() < 3 {
            return Err(Error::InvalidParameter(format!(
                "elbow selection needs at least 3 points, got {}",
                pts.len()
            )));
        }
        let norm = |v: f64, lo: f64, hi: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
        let (xlo, xhi) = (pts[0].0 as f64, pts[pts.len() - 1].0 as f64);
        let ylo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let yhi = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let scaled: Vec<(f64, f64)> = pts
            .iter()
            .map(|&(x, y)| (norm(x as f64, xlo, xhi), norm(y, ylo, yhi)))
            .collect();
        let (x0, y0) = scaled[0];
        let (x1, y1) = scaled[scaled.len() - 1];
        let (dx, dy) = (x1 - x0, y1 - y0);
        let len = (dx * dx + dy * dy).sqrt();
        let distance = |(x, y): (f64, f64)| {
            if len == 0.0 {
                0.0
            } else {
                (dy * (x - x0) - dx * (y - y0)).abs() / len
            }
        };
        let mut best = 1;
        let mut best_d = distance(scaled[1]);
        for i in 2..scaled.len() - 1 {
            let d = distance(scaled[i]);
            if d > best_d + 1e-12 {
                best = i;
                best_d = d;
            }
        }
        Ok(pts[best].0)
    }
}

/// Runs the hierarchy for every candidate size, records leaf modularity, and
/// picks the elbow.
pub fn sweep_and_elbow(
    g: &CollabGraph,
    candidate_sizes: &[usize],
    seed: u64,
) -> Result<(SizeModularityCurve, usize)> {
    sweep_and_elbow_with(g, candidate_sizes, seed, HierarchyConfig::new(2, seed).quality)
}

pub fn sweep_and_elbow_with(
    g: &CollabGraph,
    candidate_sizes: &[usize],
    seed: u64,
    quality: Quality,
) -> Result<(SizeModularityCurve, usize)> {
    if candidate_sizes.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "sweep needs at least 3 candidate sizes, got {}",
            candidate_sizes.len()
        )));
    }
    let points = candidate_sizes
        .par_iter()
        .map(|&size| {
            let cfg = HierarchyConfig::new(size, seed).quality(quality);
            let h = detect_hierarchy_with(g, &cfg)?;
            Ok((size, modularity(g, h.leaf())?))
        })
        .collect::<Result<Vec<_>>>()?;
    let curve = SizeModularityCurve::new(points);
    let chosen = curve.elbow()?;
    Ok((curve, chosen))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_curve_picks_40() {
        // normalised: x = (s−10)/150, y = (q−0.6)/0.155; chord is y = x and
        // y − x is 0.578, 0.703, 0.501 at sizes 20, 40, 80
        let c = SizeModularityCurve::new(vec![
            (10, 0.60),
            (20, 0.70),
            (40, 0.74),
            (80, 0.75),
            (160, 0.755),
        ]);
        assert_eq!(c.elbow().unwrap(), 40);
    }

    #[test]
    fn linear_curve_takes_first_interior_point() {
        let c = SizeModularityCurve::new((1..=6).map(|i| (i * 10, 0.1 * i as f64)).collect());
        assert_eq!(c.elbow().unwrap(), 20);
        let flat = SizeModularityCurve::new(vec![(10, 0.5), (20, 0.5), (30, 0.5), (40, 0.5)]);
        assert_eq!(flat.elbow().unwrap(), 20);
    }

    #[test]
    fn l_curve_picks_corner() {
        // rises steeply to the corner at 50 and is flat afterwards
        let c = SizeModularityCurve::new(vec![
            (10, 0.0),
            (20, 0.25),
            (30, 0.5),
            (40, 0.75),
            (50, 1.0),
            (100, 1.0),
            (200, 1.0),
            (400, 1.0),
        ]);
        assert_eq!(c.elbow().unwrap(), 50);
    }

    #[test]
    fn needs_three_points() {
        assert!(SizeModularityCurve::new(vec![(1, 0.1), (2, 0.2)]).elbow().is_err());
    }

    #[test]
    fn default_sizes_are_clipped() {
        assert_eq!(default_candidate_sizes(100), [10, 20, 40, 80]);
    }
}
