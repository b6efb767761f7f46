//! Leiden optimisation of CPM or modularity.
//!
//! Both objectives are handled as `Σ_c (e_c − γ' S_c²/2)`, where `e_c` is the
//! internal edge weight of community `c` and `S_c` the sum of its node weights.
//! For CPM node weights are node counts and `γ' = γ`; for modularity node
//! weights are weighted degrees and `γ' = γ/2m`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CollabGraph;

use super::Partition;

/// Objective maximised by [`leiden`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quality {
    Cpm,
    Modularity,
}

impl std::str::FromStr for Quality {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "cpm" => Ok(Quality::Cpm),
            "modularity" => Ok(Quality::Modularity),
            other => Err(format!("unknown quality `{other}`, expected modularity or cpm")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeidenConfig {
    pub quality: Quality,
    pub resolution: f64,
    pub seed: u64,
    /// Temperature of the randomised merge choice in the refinement phase.
    pub randomness: f64,
    /// Upper bound on full Leiden iterations; iteration stops earlier once a
    /// pass gains no more than 1e-12.
    pub max_iterations: usize,
}

impl LeidenConfig {
    pub fn new(quality: Quality, resolution: f64, seed: u64) -> Self {
        LeidenConfig {
            quality,
            resolution,
            seed,
            randomness: 0.01,
            max_iterations: 50,
        }
    }
}

const MIN_GAIN: f64 = 1e-12;
const TIE: f64 = 1e-10;

/// Runs Leiden on `g`. Every community of the result induces a connected
/// subgraph.
pub fn leiden(g: &CollabGraph, quality: Quality, resolution: f64, seed: u64) -> Result<Partition> {
    leiden_with(g, &LeidenConfig::new(quality, resolution, seed))
}

pub fn leiden_with(g: &CollabGraph, cfg: &LeidenConfig) -> Result<Partition> {
    if !(cfg.resolution > 0.0 && cfg.resolution.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "resolution must be positive, got {}",
            cfg.resolution
        )));
    }
    if !(cfg.randomness > 0.0) {
        return Err(Error::InvalidParameter("randomness must be positive".into()));
    }
    if g.is_empty() {
        return Ok(Partition::from_labels(g, &[], 0));
    }
    let labels = leiden_labels(g, cfg);
    Ok(Partition::from_labels(g, &labels, 0))
}

/// Index-aligned labels; exposed for the hierarchy driver.
pub(crate) fn leiden_labels(g: &CollabGraph, cfg: &LeidenConfig) -> Vec<usize> {
    let base = Network::from_graph(g, cfg.quality);
    let gamma = match cfg.quality {
        Quality::Cpm => cfg.resolution,
        Quality::Modularity => {
            let m = g.total_weight();
            if m == 0.0 {
                // no edges: singletons are optimal
                return (0..g.node_count()).collect();
            }
            cfg.resolution / (2.0 * m)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut labels: Vec<usize> = (0..base.len()).collect();
    let mut best = base.quality(&labels, gamma);
    for _ in 0..cfg.max_iterations {
        let next = iterate(&base, labels.clone(), gamma, cfg.randomness, &mut rng);
        let q = base.quality(&next, gamma);
        let gained = q - best;
        if q >= best - MIN_GAIN {
            labels = next;
            best = best.max(q);
        }
        if gained <= MIN_GAIN {
            break;
        }
    }
    split_disconnected(g, &mut labels);
    labels
}

/// Weighted network with node weights and aggregated self-loop weights.
#[derive(Debug, Clone)]
struct Network {
    node_weight: Vec<f64>,
    self_weight: Vec<f64>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl Network {
    fn from_graph(g: &CollabGraph, quality: Quality) -> Network {
        let n = g.node_count();
        let node_weight = (0..n)
            .map(|i| match quality {
                Quality::Cpm => 1.0,
                Quality::Modularity => g.weighted_degree(i),
            })
            .collect();
        Network {
            node_weight,
            self_weight: vec![0.0; n],
            adj: (0..n).map(|i| g.neighbors(i).to_vec()).collect(),
        }
    }

    fn len(&self) -> usize {
        self.node_weight.len()
    }

    fn quality(&self, labels: &[usize], gamma: f64) -> f64 {
        let k = labels.iter().max().map_or(0, |&m| m + 1);
        let mut internal = vec![0.0; k];
        let mut weight = vec![0.0; k];
        for v in 0..self.len() {
            let c = labels[v];
            weight[c] += self.node_weight[v];
            internal[c] += self.self_weight[v];
            for &(u, w) in &self.adj[v] {
                if u > v && labels[u] == c {
                    internal[c] += w;
                }
            }
        }
        internal
            .iter()
            .zip(&weight)
            .map(|(e, s)| e - gamma * s * s / 2.0)
            .sum()
    }

    /// Collapses each community of `labels` (dense ids) into one node.
    fn aggregate(&self, labels: &[usize], count: usize) -> Network {
        let mut node_weight = vec![0.0; count];
        let mut self_weight = vec![0.0; count];
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); count];
        let mut acc = vec![0.0; count];
        let mut touched = Vec::new();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
        for v in 0..self.len() {
            members[labels[v]].push(v);
        }
        for (c, vs) in members.iter().enumerate() {
            for &v in vs {
                node_weight[c] += self.node_weight[v];
                self_weight[c] += self.self_weight[v];
                for &(u, w) in &self.adj[v] {
                    let d = labels[u];
                    if d == c {
                        if u > v {
                            self_weight[c] += w;
                        }
                    } else {
                        if acc[d] == 0.0 {
                            touched.push(d);
                        }
                        acc[d] += w;
                    }
                }
            }
            touched.sort_unstable();
            for &d in &touched {
                adj[c].push((d, acc[d]));
                acc[d] = 0.0;
            }
            touched.clear();
        }
        Network {
            node_weight,
            self_weight,
            adj,
        }
    }
}

/// One Leiden iteration starting from `labels`: local moving, refinement and
/// aggregation until the partition stops changing. Returns labels on the nodes
/// of `base`.
fn iterate(
    base: &Network,
    mut labels: Vec<usize>,
    gamma: f64,
    randomness: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let mut net = base.clone();
    // base node -> node of the current aggregate network
    let mut membership: Vec<usize> = (0..base.len()).collect();
    loop {
        move_nodes(&net, &mut labels, gamma, rng);
        let count = densify(&mut labels);
        if count == net.len() {
            break;
        }
        let mut refined = refine(&net, &labels, gamma, randomness, rng);
        let refined_count = densify(&mut refined);
        if refined_count == net.len() {
            break;
        }
        let agg = net.aggregate(&refined, refined_count);
        let mut agg_labels = vec![0; refined_count];
        for v in 0..net.len() {
            agg_labels[refined[v]] = labels[v];
        }
        for m in membership.iter_mut() {
            *m = refined[*m];
        }
        net = agg;
        labels = agg_labels;
    }
    let mut out: Vec<usize> = membership.iter().map(|&m| labels[m]).collect();
    densify(&mut out);
    out
}

/// Renumbers labels to 0..k in order of first appearance; returns k.
fn densify(labels: &mut [usize]) -> usize {
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    let mut map = vec![usize::MAX; k.max(labels.len())];
    let mut next = 0;
    for l in labels.iter_mut() {
        if map[*l] == usize::MAX {
            map[*l] = next;
            next += 1;
        }
        *l = map[*l];
    }
    next
}

/// Queue-based local moving. Each node moves to the neighbouring (or an empty)
/// community with the largest gain. Exact ties prefer the heavier community,
/// which keeps `(quality, Σ S_c²)` strictly increasing and guarantees
/// termination.
fn move_nodes(net: &Network, labels: &mut [usize], gamma: f64, rng: &mut ChaCha8Rng) {
    let n = net.len();
    let slots = n.max(labels.iter().max().map_or(0, |&m| m + 1));
    let mut comm_weight = vec![0.0; slots];
    let mut comm_size = vec![0usize; slots];
    for v in 0..n {
        comm_weight[labels[v]] += net.node_weight[v];
        comm_size[labels[v]] += 1;
    }
    let mut empty: Vec<usize> = (0..slots).filter(|&c| comm_size[c] == 0).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut queue: std::collections::VecDeque<usize> = order.into();
    let mut queued = vec![true; n];

    let mut link = vec![0.0; slots];
    let mut touched: Vec<usize> = Vec::new();

    while let Some(v) = queue.pop_front() {
        queued[v] = false;
        let cur = labels[v];
        let wv = net.node_weight[v];

        for &(u, w) in &net.adj[v] {
            let c = labels[u];
            if link[c] == 0.0 {
                touched.push(c);
            }
            link[c] += w;
        }

        comm_weight[cur] -= wv;
        comm_size[cur] -= 1;
        if comm_size[cur] == 0 {
            empty.push(cur);
        }

        let stay_gain = link[cur] - gamma * wv * comm_weight[cur];
        let mut best = cur;
        let mut best_gain = stay_gain;
        touched.sort_unstable();
        for &c in &touched {
            if c == cur {
                continue;
            }
            let gain = link[c] - gamma * wv * comm_weight[c];
            if gain > best_gain + TIE
                || (gain >= best_gain - TIE && comm_weight[c] > comm_weight[best] + TIE)
            {
                best = c;
                best_gain = gain;
            }
        }
        // an empty community scores 0
        if best_gain < -TIE {
            best = loop {
                let c = empty.pop().expect("an empty slot exists while v is detached");
                if comm_size[c] == 0 {
                    break c;
                }
            };
        }

        for &c in &touched {
            link[c] = 0.0;
        }
        touched.clear();

        comm_weight[best] += wv;
        comm_size[best] += 1;

        if best != cur {
            labels[v] = best;
            for &(u, _) in &net.adj[v] {
                if !queued[u] && labels[u] != best {
                    queued[u] = true;
                    queue.push_back(u);
                }
            }
        }
    }
}

/// Refinement: within each community, singletons merge into well-connected
/// refined sub-communities, chosen at random with weight `exp(gain/θ)`.
fn refine(
    net: &Network,
    labels: &[usize],
    gamma: f64,
    randomness: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let n = net.len();
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    let mut comm_total = vec![0.0; k];
    for v in 0..n {
        comm_total[labels[v]] += net.node_weight[v];
    }
    let mut refined: Vec<usize> = (0..n).collect();
    let mut r_weight = net.node_weight.clone();
    let mut singleton = vec![true; n];
    // weight of edges from each refined community to the rest of its community
    let mut external: Vec<f64> = (0..n)
        .map(|v| {
            net.adj[v]
                .iter()
                .filter(|&&(u, _)| labels[u] == labels[v])
                .map(|&(_, w)| w)
                .sum()
        })
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut link = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut candidates: Vec<(usize, f64)> = Vec::new();

    for v in order {
        if !singleton[v] || refined[v] != v {
            continue;
        }
        let c = labels[v];
        let wv = net.node_weight[v];
        let ext_v = external[v];
        if ext_v < gamma * wv * (comm_total[c] - wv) {
            continue;
        }

        for &(u, w) in &net.adj[v] {
            if labels[u] != c {
                continue;
            }
            let r = refined[u];
            if link[r] == 0.0 {
                touched.push(r);
            }
            link[r] += w;
        }
        touched.sort_unstable();

        candidates.clear();
        let mut max_gain = 0.0f64;
        for &r in &touched {
            if r == v {
                continue;
            }
            let well_connected = external[r] >= gamma * r_weight[r] * (comm_total[c] - r_weight[r]);
            if !well_connected {
                continue;
            }
            let gain = link[r] - gamma * wv * r_weight[r];
            if gain >= -TIE {
                max_gain = max_gain.max(gain);
                candidates.push((r, gain));
            }
        }

        if !candidates.is_empty() {
            // staying alone scores 0 and is included in the draw
            let stay = ((0.0 - max_gain) / randomness).exp();
            let weights: Vec<f64> = candidates
                .iter()
                .map(|&(_, g)| ((g - max_gain) / randomness).exp())
                .collect();
            let total: f64 = stay + weights.iter().sum::<f64>();
            let mut pick = rng.random::<f64>() * total;
            let mut chosen = None;
            for (i, w) in weights.iter().enumerate() {
                if pick < *w {
                    chosen = Some(candidates[i]);
                    break;
                }
                pick -= w;
            }
            if let Some((r, _)) = chosen {
                refined[v] = r;
                external[r] += ext_v - 2.0 * link[r];
                r_weight[r] += wv;
                r_weight[v] = 0.0;
                singleton[r] = false;
                singleton[v] = false;
            }
        }

        for &r in &touched {
            link[r] = 0.0;
        }
        touched.clear();
    }
    refined
}

/// Splits any community that is not connected in `g` into its components.
fn split_disconnected(g: &CollabGraph, labels: &mut [usize]) {
    let n = g.node_count();
    let mut new_label = vec![usize::MAX; n];
    let mut next = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if new_label[s] != usize::MAX {
            continue;
        }
        new_label[s] = next;
        stack.push(s);
        while let Some(u) = stack.pop() {
            for &(v, _) in g.neighbors(u) {
                if new_label[v] == usize::MAX && labels[v] == labels[s] {
                    new_label[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    labels.copy_from_slice(&new_label);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{cpm_quality, modularity, pid, GraphBuilder};

    fn clique_pair(size: usize) -> CollabGraph {
        let mut b = GraphBuilder::new();
        for block in 0..2 {
            for i in 0..size {
                for j in (i + 1)..size {
                    b.add_edge(pid(&format!("{block}{i}")), pid(&format!("{block}{j}")), 1.0)
                        .unwrap();
                }
            }
        }
        b.add_edge(pid("00"), pid("10"), 1.0).unwrap();
        b.build()
    }

    #[test]
    fn two_cliques_cpm_recovers_cliques() {
        let g = clique_pair(5);
        for seed in 0..20 {
            let p = leiden(&g, Quality::Cpm, 1.0, seed).unwrap();
            assert_eq!(p.community_count(), 2, "seed {seed}");
            for c in p.communities() {
                let first = c[0].as_str().as_bytes()[0];
                assert!(c.iter().all(|m| m.as_str().as_bytes()[0] == first));
            }
        }
    }

    #[test]
    fn triangle_modularity_is_one_community() {
        let g = CollabGraph::from_edges([("a", "b", 1.0), ("b", "c", 1.0), ("a", "c", 1.0)]).unwrap();
        for seed in 0..10 {
            assert_eq!(leiden(&g, Quality::Modularity, 1.0, seed).unwrap().community_count(), 1);
        }
    }

    #[test]
    fn edgeless_graph_stays_singletons() {
        let mut b = GraphBuilder::new();
        for id in ["a", "b", "c", "d"] {
            b.add_node(pid(id));
        }
        let g = b.build();
        for q in [Quality::Cpm, Quality::Modularity] {
            assert_eq!(leiden(&g, q, 1.0, 1).unwrap(), Partition::singletons(&g));
        }
    }

    #[test]
    fn rejects_non_positive_resolution() {
        let g = clique_pair(3);
        assert!(leiden(&g, Quality::Cpm, 0.0, 1).is_err());
        assert!(leiden(&g, Quality::Modularity, -1.0, 1).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let g = clique_pair(6);
        let a = leiden(&g, Quality::Modularity, 1.0, 7).unwrap();
        let b = leiden(&g, Quality::Modularity, 1.0, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn improves_on_singletons() {
        let g = clique_pair(4);
        let p = leiden(&g, Quality::Modularity, 1.0, 3).unwrap();
        assert!(modularity(&g, &p).unwrap() >= modularity(&g, &Partition::singletons(&g)).unwrap());
        let p = leiden(&g, Quality::Cpm, 0.5, 3).unwrap();
        assert!(cpm_quality(&g, &p, 0.5).unwrap() >= cpm_quality(&g, &Partition::singletons(&g), 0.5).unwrap());
    }

    #[test]
    fn disconnected_communities_are_split() {
        let g = CollabGraph::from_edges([("a", "b", 1.0), ("c", "d", 1.0)]).unwrap();
        let mut labels = vec![0, 0, 0, 0];
        split_disconnected(&g, &mut labels);
        assert_eq!(labels, [0, 0, 1, 1]);
    }
}
