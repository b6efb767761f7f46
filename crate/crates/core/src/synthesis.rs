//! Synthetic hierarchical collaboration networks, node metrics and activity.
//!
//! Leaf communities grow by preferential attachment; every internal group of
//! the planted hierarchy then receives a budget of edges between its child
//! groups, again with degree-preferential endpoints.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::community::{Partition, WorkgroupHierarchy};
use crate::error::{Error, Result};
use crate::graph::{CollabGraph, GraphBuilder, OrgTree, PersonId};
use crate::ingest::MessageRecord;
use crate::month::Month;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SynthConfig {
    pub top_level_communities: usize,
    pub size_exponent: f64,
    /// Inclusive bounds on leaf community size.
    pub size_range: (usize, usize),
    pub intra_edges_per_node: usize,
    /// Edges placed between the children of a group, as a fraction of the
    /// leaf-internal edges inside it.
    pub inter_edge_fraction: f64,
    pub weight_exponent: f64,
    pub weight_range: (f64, f64),
    pub hierarchy_depth: usize,
    /// Children per group below the top level.
    pub branching: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            top_level_communities: 10,
            size_exponent: 2.5,
            size_range: (20, 120),
            intra_edges_per_node: 2,
            inter_edge_fraction: 0.1,
            weight_exponent: 2.5,
            weight_range: (1.0, 50.0),
            hierarchy_depth: 2,
            branching: 3,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        let (lo, hi) = self.size_range;
        if self.top_level_communities == 0 {
            return bad("need at least one community".into());
        }
        if lo < 3 || hi < lo {
            return bad(format!("invalid size range ({lo}, {hi})"));
        }
        if self.intra_edges_per_node == 0 || self.intra_edges_per_node >= lo {
            return bad(format!(
                "intra edges per node {} must be in [1, {lo})",
                self.intra_edges_per_node
            ));
        }
        if !(0.0..1.0).contains(&self.inter_edge_fraction) {
            return bad(format!("inter edge fraction {} outside [0, 1)", self.inter_edge_fraction));
        }
        if !(self.size_exponent > 1.0) || !(self.weight_exponent > 1.0) {
            return bad("power-law exponents must exceed 1".into());
        }
        let (wl, wh) = self.weight_range;
        if !(wl > 0.0 && wh >= wl && wh.is_finite()) {
            return bad(format!("invalid weight range ({wl}, {wh})"));
        }
        if self.hierarchy_depth == 0 || (self.hierarchy_depth > 1 && self.branching == 0) {
            return bad("hierarchy depth and branching must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthResult {
    pub graph: CollabGraph,
    pub planted: WorkgroupHierarchy,
    pub node_metrics: BTreeMap<String, BTreeMap<PersonId, f64>>,
}

/// Inverse-CDF sample from `x^-alpha` on `[lo, hi]`.
pub fn truncated_power_law(rng: &mut impl Rng, alpha: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    let e = 1.0 - alpha;
    let u: f64 = rng.random();
    let (a, b) = (lo.powf(e), hi.powf(e));
    (a + u * (b - a)).powf(1.0 / e).clamp(lo, hi)
}

/// A group in the planted hierarchy: either a leaf (node range) or children.
struct Group {
    nodes: Vec<usize>,
    children: Vec<Group>,
}

struct Builder {
    adjacency: Vec<BTreeSet<usize>>,
    edges: Vec<(usize, usize, f64)>,
    seen: HashSet<(usize, usize)>,
    strength: Vec<f64>,
}

impl Builder {
    fn add(&mut self, a: usize, b: usize, w: f64) -> bool {
        let key = (a.min(b), a.max(b));
        if a == b || !self.seen.insert(key) {
            return false;
        }
        self.adjacency[a].insert(b);
        self.adjacency[b].insert(a);
        self.edges.push((key.0, key.1, w));
        self.strength[a] += w;
        self.strength[b] += w;
        true
    }

    fn strength(&self, v: usize) -> f64 {
        self.strength[v]
    }

    fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }
}

fn plan(cfg: &SynthConfig, rng: &mut ChaCha8Rng, depth: usize, width: usize, next: &mut usize) -> Vec<Group> {
    (0..width)
        .map(|_| {
            if depth == 1 {
                let (lo, hi) = cfg.size_range;
                let s = truncated_power_law(rng, cfg.size_exponent, lo as f64, hi as f64 + 0.999).floor() as usize;
                let s = s.clamp(lo, hi);
                let nodes = (*next..*next + s).collect();
                *next += s;
                Group { nodes, children: Vec::new() }
            } else {
                let children = plan(cfg, rng, depth - 1, cfg.branching, next);
                let nodes = children.iter().flat_map(|c| c.nodes.iter().copied()).collect();
                Group { nodes, children }
            }
        })
        .collect()
}

fn weight(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> f64 {
    truncated_power_law(rng, cfg.weight_exponent, cfg.weight_range.0, cfg.weight_range.1).round().max(1.0)
}

/// Preferential attachment inside one leaf: a seed clique of `m + 1` nodes,
/// then each new node links to `m` distinct earlier nodes with probability
/// proportional to degree + 1.
fn grow_leaf(cfg: &SynthConfig, rng: &mut ChaCha8Rng, b: &mut Builder, nodes: &[usize]) -> usize {
    let m = cfg.intra_edges_per_node;
    let mut added = 0;
    // every node appears once, plus once per incident edge
    let mut urn: Vec<usize> = Vec::new();
    for (k, &v) in nodes.iter().enumerate() {
        if k <= m {
            for &u in &nodes[..k] {
                if b.add(u, v, weight(cfg, rng)) {
                    added += 1;
                    urn.push(u);
                    urn.push(v);
                }
            }
        } else {
            let mut targets = BTreeSet::new();
            while targets.len() < m {
                targets.insert(urn[rng.random_range(0..urn.len())]);
            }
            for u in targets {
                if b.add(u, v, weight(cfg, rng)) {
                    added += 1;
                    urn.push(u);
                    urn.push(v);
                }
            }
        }
        urn.push(v);
    }
    added
}

/// Grows leaves, then places edges between the children of each group,
/// bottom-up. Returns the number of leaf-internal edges under `g`.
fn realise(cfg: &SynthConfig, rng: &mut ChaCha8Rng, b: &mut Builder, g: &Group) -> usize {
    if g.children.is_empty() {
        return grow_leaf(cfg, rng, b, &g.nodes);
    }
    let intra: usize = g.children.iter().map(|c| realise(cfg, rng, b, c)).sum();
    connect_children(cfg, rng, b, &g.children, intra);
    intra
}

fn connect_children(cfg: &SynthConfig, rng: &mut ChaCha8Rng, b: &mut Builder, children: &[Group], intra: usize) {
    if children.len() < 2 {
        return;
    }
    let budget = (cfg.inter_edge_fraction * intra as f64).ceil() as usize;
    let group_of: BTreeMap<usize, usize> = children
        .iter()
        .enumerate()
        .flat_map(|(c, g)| g.nodes.iter().map(move |&v| (v, c)))
        .collect();
    // endpoints drawn in proportion to current strength, so hubs keep growing
    let nodes: Vec<usize> = group_of.keys().copied().collect();
    let mut strength: Vec<f64> = nodes.iter().map(|&v| b.strength(v).max(1.0)).collect();
    let mut placed = 0;
    let mut attempts = 0;
    while placed < budget && attempts < budget * 50 {
        attempts += 1;
        let Ok(dist) = WeightedIndex::new(&strength) else { return };
        let (i, j) = (dist.sample(rng), dist.sample(rng));
        let (u, v) = (nodes[i], nodes[j]);
        let w = weight(cfg, rng);
        if group_of[&u] != group_of[&v] && b.add(u, v, w) {
            placed += 1;
            strength[i] += w;
            strength[j] += w;
        }
    }
}

/// Joins every smaller component to the giant one with a weight-`min` edge
/// between their highest-degree nodes (lowest index on ties).
fn repair_connectivity(b: &mut Builder, min_weight: f64) {
    let n = b.adjacency.len();
    let mut comp = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut stack = vec![s];
        comp[s] = id;
        let mut members = Vec::new();
        while let Some(v) = stack.pop() {
            members.push(v);
            for &u in &b.adjacency[v] {
                if comp[u] == usize::MAX {
                    comp[u] = id;
                    stack.push(u);
                }
            }
        }
        comps.push(members);
    }
    if comps.len() < 2 {
        return;
    }
    let hub = |b: &Builder, c: &[usize]| *c.iter().max_by_key(|&&v| (b.degree(v), std::cmp::Reverse(v))).unwrap();
    let giant = (0..comps.len()).max_by_key(|&i| (comps[i].len(), std::cmp::Reverse(i))).unwrap();
    let g_hub = hub(b, &comps[giant]);
    for (i, c) in comps.iter().enumerate() {
        if i != giant {
            let h = hub(b, c);
            b.add(g_hub, h, min_weight);
        }
    }
}

fn person(i: usize) -> PersonId {
    PersonId::new(format!("p{i:05}")).expect("non-empty id")
}

fn level_partitions(top: &[Group], depth: usize) -> Vec<Partition> {
    let mut levels = Vec::new();
    let mut frontier: Vec<&Group> = top.iter().collect();
    for level in 0..depth {
        let map = frontier
            .iter()
            .enumerate()
            .flat_map(|(c, g)| g.nodes.iter().map(move |&v| (person(v), c)))
            .collect();
        levels.push(Partition::from_map(map, level));
        frontier = frontier.iter().flat_map(|g| g.children.iter()).collect();
    }
    levels
}

pub fn synthesize(cfg: &SynthConfig) -> Result<SynthResult> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut next = 0;
    let top = plan(cfg, &mut rng, cfg.hierarchy_depth, cfg.top_level_communities, &mut next);
    let mut b = Builder {
        adjacency: vec![BTreeSet::new(); next],
        edges: Vec::new(),
        seen: HashSet::new(),
        strength: vec![0.0; next],
    };
    let intra: usize = top.iter().map(|g| realise(cfg, &mut rng, &mut b, g)).sum();
    connect_children(cfg, &mut rng, &mut b, &top, intra);
    repair_connectivity(&mut b, cfg.weight_range.0);

    let mut gb = GraphBuilder::new();
    for v in 0..next {
        gb.add_node(person(v));
    }
    for &(u, v, w) in &b.edges {
        gb.add_edge(person(u), person(v), w)?;
    }
    let graph = gb.build();
    let levels = level_partitions(&top, cfg.hierarchy_depth);
    let max_size = levels.last().map_or(0, |p| p.sizes().into_iter().max().unwrap_or(0));

    let ids = graph.ids().to_vec();
    let mut node_metrics = BTreeMap::new();
    node_metrics.insert(
        "freedom".to_string(),
        synthesize_metric(&ids, 0.2, 2.0, cfg.seed.wrapping_add(1))?,
    );
    node_metrics.insert(
        "fluidity".to_string(),
        synthesize_metric(&ids, 0.1, 2.5, cfg.seed.wrapping_add(2))?,
    );
    Ok(SynthResult {
        graph,
        planted: WorkgroupHierarchy { levels, max_size },
        node_metrics,
    })
}

/// Pareto samples `scale · U^{-1/(exponent−1)}` clipped to `[0, 1]`.
pub fn synthesize_metric(nodes: &[PersonId], scale: f64, exponent: f64, seed: u64) -> Result<BTreeMap<PersonId, f64>> {
    if !(exponent > 1.0) {
        return Err(Error::InvalidParameter(format!("metric exponent {exponent} must exceed 1")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("metric scale {scale} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sorted = nodes.to_vec();
    sorted.sort();
    Ok(sorted
        .into_iter()
        .map(|id| {
            let u: f64 = 1.0 - rng.random::<f64>();
            let x = scale * u.powf(-1.0 / (exponent - 1.0));
            (id, x.clamp(0.0, 1.0))
        })
        .collect())
}

/// Replaces `⌊rho · |E|⌋` randomly chosen edges with the same number of new
/// edges between uniformly chosen non-adjacent pairs, keeping weights. The
/// node set is unchanged.
pub fn rewire(g: &CollabGraph, rho: f64, seed: u64) -> Result<CollabGraph> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!("rewiring fraction {rho} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize, f64)> = g.edges().collect();
    let n = g.node_count();
    let k = (rho * edges.len() as f64).floor() as usize;
    edges.shuffle(&mut rng);
    let removed: Vec<f64> = edges.drain(..k).map(|e| e.2).collect();
    let mut seen: HashSet<(usize, usize)> = g.edges().map(|(a, b, _)| (a, b)).collect();
    let max_pairs = n * n.saturating_sub(1) / 2;
    for w in removed {
        if seen.len() >= max_pairs {
            break;
        }
        loop {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            let key = (a.min(b), a.max(b));
            if a != b && seen.insert(key) {
                edges.push((key.0, key.1, w));
                break;
            }
        }
    }
    let mut gb = GraphBuilder::new();
    if let Some(w) = g.window() {
        gb = gb.window(w);
    }
    for id in g.ids() {
        gb.add_node(id.clone());
    }
    for (a, b, w) in edges {
        gb.add_edge(g.id(a).clone(), g.id(b).clone(), w)?;
    }
    Ok(gb.build())
}

/// Settings for turning a synthetic network into message logs and org
/// snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct ActivityConfig {
    pub start: Month,
    pub months: usize,
    /// Fraction of edges rewired between consecutive months.
    pub rewiring: f64,
    /// Probability that a non-manager reports outside their planted leaf.
    pub misalignment: f64,
    /// One-directional pairs per node that stay below the edge threshold.
    pub noise_per_node: f64,
    pub seed: u64,
}

impl Default for ActivityConfig {
    fn default() -> Self {
        ActivityConfig {
            start: Month::new(2020, 1).expect("valid month"),
            months: 3,
            rewiring: 0.1,
            misalignment: 0.2,
            noise_per_node: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthActivity {
    pub messages: Vec<MessageRecord>,
    pub org: Vec<OrgTree>,
    pub monthly: Vec<CollabGraph>,
}

/// Monthly graphs (each rewired from the last), a message log that induces
/// exactly those graphs, and one org snapshot per month built around the
/// planted hierarchy.
pub fn synthesize_activity(s: &SynthResult, cfg: &ActivityConfig) -> Result<SynthActivity> {
    if cfg.months == 0 {
        return Err(Error::InvalidParameter("activity needs at least one month".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let months = cfg.start.range(cfg.months);
    let mut monthly = Vec::with_capacity(cfg.months);
    let mut current = s.graph.clone();
    for (t, month) in months.iter().enumerate() {
        if t > 0 {
            current = rewire(&current, cfg.rewiring, rng.random())?;
        }
        monthly.push(current.clone().with_window(month.to_string()));
    }

    let mut messages = Vec::new();
    for (month, g) in months.iter().zip(&monthly) {
        let start = Utc
            .from_utc_datetime(&month.first_day().and_hms_opt(0, 0, 0).expect("midnight"));
        let stamp = |rng: &mut ChaCha8Rng| start + Duration::seconds(rng.random_range(0..27 * 86_400));
        for (a, b, w) in g.edges() {
            let total = (w.round() as usize).max(4);
            let ab = total.div_ceil(2);
            for k in 0..total {
                let (from, to) = if k < ab { (a, b) } else { (b, a) };
                messages.push(MessageRecord {
                    sender: g.id(from).clone(),
                    recipient: g.id(to).clone(),
                    sent_at: stamp(&mut rng),
                });
            }
        }
        let n = g.node_count();
        let noise = (cfg.noise_per_node * n as f64).round() as usize;
        let mut noisy = std::collections::HashSet::new();
        for _ in 0..noise {
            if n < 2 {
                break;
            }
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            // a reverse noise pair would pass the reciprocity filter
            if a == b || g.weight(a, b).is_some() || noisy.contains(&(b, a)) {
                continue;
            }
            noisy.insert((a, b));
            for _ in 0..3 {
                messages.push(MessageRecord {
                    sender: g.id(a).clone(),
                    recipient: g.id(b).clone(),
                    sent_at: stamp(&mut rng),
                });
            }
        }
    }
    messages.sort_by(|x, y| (x.sent_at, &x.sender, &x.recipient).cmp(&(y.sent_at, &y.sender, &y.recipient)));

    let org = months
        .iter()
        .map(|m| synthesize_org(s, cfg.misalignment, m.midpoint(), rng.random()))
        .collect::<Result<Vec<_>>>()?;
    Ok(SynthActivity { messages, org, monthly })
}

/// Org tree mirroring the planted hierarchy: the highest-degree member of each
/// group manages it, group heads report to the head of the enclosing group,
/// and plain members are reassigned to a random leaf manager with probability
/// `misalignment`.
pub fn synthesize_org(s: &SynthResult, misalignment: f64, date: NaiveDate, seed: u64) -> Result<OrgTree> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = &s.graph;
    let degree = |id: &PersonId| g.index_of(id).map_or(0, |i| g.degree(i));
    let head_of = |members: &[PersonId]| -> PersonId {
        members
            .iter()
            .max_by(|a, b| degree(a).cmp(&degree(b)).then_with(|| b.cmp(a)))
            .expect("non-empty group")
            .clone()
    };
    let ceo = head_of(g.ids());
    let mut manager: BTreeMap<PersonId, Option<PersonId>> = BTreeMap::new();
    manager.insert(ceo.clone(), None);

    // heads per level, coarsest first; a member already assigned keeps its manager
    let mut enclosing: BTreeMap<PersonId, PersonId> = g.ids().iter().map(|id| (id.clone(), ceo.clone())).collect();
    let mut leaf_heads = Vec::new();
    for (depth, level) in s.planted.levels.iter().enumerate() {
        let is_leaf = depth + 1 == s.planted.levels.len();
        let mut next = enclosing.clone();
        for members in level.communities() {
            let head = head_of(&members);
            if !manager.contains_key(&head) {
                manager.insert(head.clone(), Some(enclosing[&head].clone()));
            }
            for m in &members {
                next.insert(m.clone(), head.clone());
            }
            if is_leaf {
                leaf_heads.push(head);
            }
        }
        enclosing = next;
    }
    for id in g.ids() {
        if manager.contains_key(id) {
            continue;
        }
        let mut boss = enclosing[id].clone();
        if !leaf_heads.is_empty() && rng.random::<f64>() < misalignment {
            boss = leaf_heads[rng.random_range(0..leaf_heads.len())].clone();
        }
        manager.insert(id.clone(), Some(boss));
    }
    OrgTree::from_rows(date, manager)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::modularity;

    #[test]
    fn deterministic_given_seed() {
        let a = synthesize(&SynthConfig::default().with_seed(5)).unwrap();
        let b = synthesize(&SynthConfig::default().with_seed(5)).unwrap();
        assert_eq!(
            crate::graph::format_edge_list(&a.graph),
            crate::graph::format_edge_list(&b.graph)
        );
        assert_eq!(a.node_metrics, b.node_metrics);
    }

    #[test]
    fn leaves_connected_and_graph_connected() {
        let s = synthesize(&SynthConfig::default().with_seed(1)).unwrap();
        assert!(s.graph.is_connected());
        for members in s.planted.leaf().communities() {
            assert!(s.graph.induced_by_ids(&members).is_connected());
        }
        assert_eq!(s.planted.depth(), 2);
        assert!(s.planted.leaf().refines(&s.planted.levels[0]));
    }

    #[test]
    fn zero_mixing_is_bridged_minimally() {
        let cfg = SynthConfig {
            top_level_communities: 2,
            hierarchy_depth: 1,
            inter_edge_fraction: 0.0,
            ..SynthConfig::default()
        };
        let s = synthesize(&cfg).unwrap();
        assert!(s.graph.is_connected());
        let leaf = s.planted.leaf();
        let crossing = s
            .graph
            .edges()
            .filter(|&(a, b, _)| leaf.community_of(s.graph.id(a)) != leaf.community_of(s.graph.id(b)))
            .count();
        assert_eq!(crossing, 1);
    }

    #[test]
    fn infeasible_configs_rejected() {
        let m_too_big = SynthConfig { intra_edges_per_node: 20, ..SynthConfig::default() };
        assert!(synthesize(&m_too_big).is_err());
        let tiny = SynthConfig { size_range: (2, 10), ..SynthConfig::default() };
        assert!(synthesize(&tiny).is_err());
        assert!(synthesize_metric(&[], 0.1, 1.0, 0).is_err());
    }

    #[test]
    fn metric_in_unit_interval() {
        let ids: Vec<PersonId> = (0..1000).map(person).collect();
        let m = synthesize_metric(&ids, 0.1, 2.5, 3).unwrap();
        assert!(m.values().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(m, synthesize_metric(&ids, 0.1, 2.5, 3).unwrap());
    }

    #[test]
    fn planted_modularity_is_high() {
        let s = synthesize(&SynthConfig::default().with_seed(2)).unwrap();
        let q = modularity(&s.graph, s.planted.leaf()).unwrap();
        assert!(q > 0.5, "{q}");
    }

    #[test]
    fn rewire_keeps_counts() {
        let s = synthesize(&SynthConfig::default().with_seed(3)).unwrap();
        let r = rewire(&s.graph, 0.3, 9).unwrap();
        assert_eq!(r.node_count(), s.graph.node_count());
        assert_eq!(r.edge_count(), s.graph.edge_count());
        assert!((r.total_weight() - s.graph.total_weight()).abs() < 1e-9);
        let same = rewire(&s.graph, 0.0, 9).unwrap();
        assert_eq!(crate::graph::format_edge_list(&same), crate::graph::format_edge_list(&s.graph));
    }

    #[test]
    fn activity_induces_monthly_graphs() {
        let cfg = SynthConfig { top_level_communities: 3, ..SynthConfig::default() };
        let s = synthesize(&cfg).unwrap();
        let act = synthesize_activity(&s, &ActivityConfig::default()).unwrap();
        assert_eq!(act.org.len(), 3);
        for (t, g) in act.monthly.iter().enumerate() {
            let month = ActivityConfig::default().start.range(3)[t];
            let induced = crate::ingest::induce_monthly(&act.messages, month, Default::default());
            assert_eq!(induced.edge_count(), g.edge_count());
        }
        for tree in &act.org {
            assert_eq!(tree.len(), s.graph.node_count());
        }
    }
}
