use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::CollabGraph;
use crate::linalg;

use super::leiden::{leiden_labels, LeidenConfig, Quality};
use super::Partition;

/// Multi-level workgroups. Level 0 is the coarsest; every level refines the one
/// before it, and every leaf community has at most `max_size` members.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkgroupHierarchy {
    pub levels: Vec<Partition>,
    pub max_size: usize,
}

impl WorkgroupHierarchy {
    pub fn leaf(&self) -> &Partition {
        self.levels.last().expect("hierarchy has at least one level")
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyConfig {
    pub max_size: usize,
    pub quality: Quality,
    pub resolution: f64,
    pub seed: u64,
}

impl HierarchyConfig {
    pub fn new(max_size: usize, seed: u64) -> Self {
        HierarchyConfig {
            max_size,
            quality: Quality::Modularity,
            resolution: 1.0,
            seed,
        }
    }

    pub fn quality(mut self, quality: Quality) -> Self {
        self.quality = quality;
        self
    }
}

/// Recursive Leiden at a fixed resolution until all communities are at most
/// `max_size`, using the default objective.
pub fn detect_hierarchy(g: &CollabGraph, max_size: usize, seed: u64) -> Result<WorkgroupHierarchy> {
    detect_hierarchy_with(g, &HierarchyConfig::new(max_size, seed))
}

pub fn detect_hierarchy_with(g: &CollabGraph, cfg: &HierarchyConfig) -> Result<WorkgroupHierarchy> {
    if cfg.max_size < 2 {
        return Err(Error::InvalidParameter(format!(
            "max community size must be at least 2, got {}",
            cfg.max_size
        )));
    }
    if g.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let leiden_cfg = |seed| LeidenConfig::new(cfg.quality, cfg.resolution, seed);

    let top = leiden_labels(g, &leiden_cfg(cfg.seed));
    let mut current = groups_from_labels(&top, None);
    let mut levels = vec![Partition::from_labels(g, &top, 0)];

    while current.iter().any(|c| c.len() > cfg.max_size) {
        let level = levels.len();
        let next: Vec<Vec<Vec<usize>>> = current
            .par_iter()
            .enumerate()
            .map(|(i, members)| {
                if members.len() <= cfg.max_size {
                    return vec![members.clone()];
                }
                let sub = g.induced_subgraph(members);
                let seed = derive_seed(cfg.seed, level, i);
                let labels = leiden_labels(&sub, &leiden_cfg(seed));
                let groups = groups_from_labels(&labels, Some(members));
                if groups.len() > 1 {
                    groups
                } else {
                    force_split(&sub)
                        .into_iter()
                        .map(|g| g.into_iter().map(|j| members[j]).collect())
                        .collect()
                }
            })
            .collect();
        current = next.into_iter().flatten().collect();
        let mut labels = vec![0; g.node_count()];
        for (c, members) in current.iter().enumerate() {
            for &v in members {
                labels[v] = c;
            }
        }
        levels.push(Partition::from_labels(g, &labels, level));
    }

    Ok(WorkgroupHierarchy {
        levels,
        max_size: cfg.max_size,
    })
}

fn derive_seed(seed: u64, level: usize, index: usize) -> u64 {
    seed ^ ((level as u64) << 48) ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Groups of node indices per label, in order of first appearance. When
/// `members` is given, local indices are mapped through it.
fn groups_from_labels(labels: &[usize], members: Option<&Vec<usize>>) -> Vec<Vec<usize>> {
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut order = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if out[l].is_empty() {
            order.push(l);
        }
        out[l].push(members.map_or(i, |m| m[i]));
    }
    order.into_iter().map(|l| std::mem::take(&mut out[l])).collect()
}

/// Splits a community Leiden will not divide. Disconnected input splits into
/// components; otherwise nodes are divided by the sign of the Laplacian Fiedler
/// vector (median cut when one side would be empty) and each side is further
/// split into its connected pieces.
pub(crate) fn force_split(g: &CollabGraph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    debug_assert!(n >= 2);
    let comps = g.components();
    if comps.len() > 1 {
        return comps;
    }
    let fiedler = linalg::fiedler_vector(g);
    let mut side: Vec<bool> = fiedler.iter().map(|&x| x > 1e-12).collect();
    let positives = side.iter().filter(|&&s| s).count();
    if positives == 0 || positives == n {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| fiedler[a].total_cmp(&fiedler[b]).then(a.cmp(&b)));
        side = vec![false; n];
        for &v in &order[n / 2..] {
            side[v] = true;
        }
    }
    let mut out = Vec::new();
    for flag in [false, true] {
        let part: Vec<usize> = (0..n).filter(|&v| side[v] == flag).collect();
        let sub = g.induced_subgraph(&part);
        for comp in sub.components() {
            out.push(comp.into_iter().map(|j| part[j]).collect());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{pid, GraphBuilder};

    fn clique(n: usize) -> CollabGraph {
        let mut b = GraphBuilder::new();
        for i in 0..n {
            for j in (i + 1)..n {
                b.add_edge(pid(&format!("n{i}")), pid(&format!("n{j}")), 1.0).unwrap();
            }
        }
        b.build()
    }

    #[test]
    fn rejects_tiny_max_size() {
        assert!(detect_hierarchy(&clique(3), 1, 0).is_err());
    }

    #[test]
    fn single_community_fitting_max_size_has_depth_one() {
        let g = clique(6);
        let h = detect_hierarchy(&g, 10, 0).unwrap();
        assert_eq!(h.depth(), 1);
        assert_eq!(h.leaf().community_count(), 1);
    }

    #[test]
    fn clique_is_force_split_below_max_size() {
        let g = clique(5);
        for q in [Quality::Cpm, Quality::Modularity] {
            let h = detect_hierarchy_with(&g, &HierarchyConfig::new(2, 3).quality(q)).unwrap();
            assert!(h.leaf().sizes().iter().all(|&s| s <= 2), "{:?}", h.leaf().sizes());
            for w in h.levels.windows(2) {
                assert!(w[1].refines(&w[0]));
            }
        }
    }

    #[test]
    fn force_split_of_path_is_balanced_and_connected() {
        let g = CollabGraph::from_edges([
            ("a", "b", 1.0),
            ("b", "c", 1.0),
            ("c", "d", 1.0),
            ("d", "e", 1.0),
            ("e", "f", 1.0),
        ])
        .unwrap();
        let mut parts = force_split(&g);
        parts.sort();
        assert_eq!(parts, vec![vec![0, 1, 2], vec![3, 4, 5]]);
    }
}
