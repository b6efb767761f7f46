use crate::community::Partition;
use crate::error::Result;

use super::CollabGraph;

/// Knobs for [`modularity_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModularityOptions {
    /// Use edge weights; when false every edge counts as 1.
    pub weighted: bool,
    pub resolution: f64,
}

impl Default for ModularityOptions {
    fn default() -> Self {
        ModularityOptions {
            weighted: true,
            resolution: 1.0,
        }
    }
}

/// Weighted Newman modularity of `p` on `g`.
pub fn modularity(g: &CollabGraph, p: &Partition) -> Result<f64> {
    modularity_with(g, p, ModularityOptions::default())
}

/// Newman modularity `Σ_c [L_c/m − γ (K_c/2m)²]`.
///
/// A graph without edges scores 0.
pub fn modularity_with(g: &CollabGraph, p: &Partition, opts: ModularityOptions) -> Result<f64> {
    let labels = p.labels_for(g)?;
    let k = p.community_count();
    let w = |x: f64| if opts.weighted { x } else { 1.0 };
    let mut internal = vec![0.0; k];
    let mut strength = vec![0.0; k];
    let mut m = 0.0;
    for (i, j, weight) in g.edges() {
        let weight = w(weight);
        m += weight;
        strength[labels[i]] += weight;
        strength[labels[j]] += weight;
        if labels[i] == labels[j] {
            internal[labels[i]] += weight;
        }
    }
    if m == 0.0 {
        return Ok(0.0);
    }
    Ok(internal
        .iter()
        .zip(&strength)
        .map(|(&l, &s)| l / m - opts.resolution * (s / (2.0 * m)).powi(2))
        .sum())
}

/// Constant Potts model quality `Σ_c (e_c − γ n_c(n_c−1)/2)` with weighted `e_c`.
pub fn cpm_quality(g: &CollabGraph, p: &Partition, resolution: f64) -> Result<f64> {
    let labels = p.labels_for(g)?;
    let k = p.community_count();
    let mut internal = vec![0.0; k];
    let mut sizes = vec![0usize; k];
    for &c in &labels {
        sizes[c] += 1;
    }
    for (i, j, weight) in g.edges() {
        if labels[i] == labels[j] {
            internal[labels[i]] += weight;
        }
    }
    Ok(internal
        .iter()
        .zip(&sizes)
        .map(|(&e, &n)| e - resolution * (n * n.saturating_sub(1)) as f64 / 2.0)
        .sum())
}
