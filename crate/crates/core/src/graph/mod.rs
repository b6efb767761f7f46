//! Collaboration graphs, reporting trees and baseline structural statistics.
//!
//! Graphs are immutable once built. Nodes are kept in sorted id order so that
//! every index-based algorithm downstream sees the same node order on every
//! run.

mod io;
mod org;
mod quality;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{read_edge_list, write_edge_list, parse_edge_list, format_edge_list};
pub use org::{read_org_csv, parse_org_csv, write_org_csv, OrgTree};
pub use quality::{cpm_quality, modularity, modularity_with, ModularityOptions};

/// Pseudonymized person identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PersonId(String);

impl PersonId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::InvalidParameter("person id must be non-empty".into()));
        }
        Ok(PersonId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for PersonId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        PersonId::new(s)
    }
}

impl From<PersonId> for String {
    fn from(p: PersonId) -> String {
        p.0
    }
}

impl fmt::Display for PersonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Shorthand used heavily in tests and examples. Panics on empty input.
pub fn pid(id: &str) -> PersonId {
    PersonId::new(id).expect("non-empty person id")
}

/// Weighted undirected person-to-person graph.
#[derive(Debug, Clone, PartialEq)]
pub struct CollabGraph {
    ids: Vec<PersonId>,
    index: HashMap<PersonId, usize>,
    adjacency: Vec<Vec<(usize, f64)>>,
    window: Option<String>,
}

/// Accumulates nodes and edges; duplicate edges sum their weights.
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    nodes: BTreeSet<PersonId>,
    edges: BTreeMap<(PersonId, PersonId), f64>,
    window: Option<String>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn window(mut self, window: impl Into<String>) -> Self {
        self.window = Some(window.into());
        self
    }

    pub fn add_node(&mut self, id: PersonId) -> &mut Self {
        self.nodes.insert(id);
        self
    }

    pub fn add_edge(&mut self, a: PersonId, b: PersonId, weight: f64) -> Result<&mut Self> {
        if a == b {
            return Err(Error::InvalidGraph(format!("self-loop on {a}")));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidGraph(format!(
                "edge {a}-{b} has non-positive weight {weight}"
            )));
        }
        let key = if a < b { (a, b) } else { (b, a) };
        self.nodes.insert(key.0.clone());
        self.nodes.insert(key.1.clone());
        *self.edges.entry(key).or_insert(0.0) += weight;
        Ok(self)
    }

    pub fn build(self) -> CollabGraph {
        let ids: Vec<PersonId> = self.nodes.into_iter().collect();
        let index: HashMap<PersonId, usize> =
            ids.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        let mut adjacency = vec![Vec::new(); ids.len()];
        for ((a, b), w) in self.edges {
            let (ia, ib) = (index[&a], index[&b]);
            adjacency[ia].push((ib, w));
            adjacency[ib].push((ia, w));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(j, _)| j);
        }
        CollabGraph {
            ids,
            index,
            adjacency,
            window: self.window,
        }
    }
}

/// Unweighted degree summary, used for node sizing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeStats {
    pub per_node: BTreeMap<PersonId, usize>,
    pub max: f64,
    pub mean: f64,
}

impl CollabGraph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::new()
    }

    /// Builds a graph from `(a, b, weight)` triples of string ids.
    pub fn from_edges<'a>(edges: impl IntoIterator<Item = (&'a str, &'a str, f64)>) -> Result<Self> {
        let mut b = GraphBuilder::new();
        for (x, y, w) in edges {
            b.add_edge(PersonId::new(x)?, PersonId::new(y)?, w)?;
        }
        Ok(b.build())
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[PersonId] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &PersonId {
        &self.ids[i]
    }

    pub fn index_of(&self, id: &PersonId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &PersonId) -> bool {
        self.index.contains_key(id)
    }

    pub fn window(&self) -> Option<&str> {
        self.window.as_deref()
    }

    pub fn with_window(mut self, window: impl Into<String>) -> Self {
        self.window = Some(window.into());
        self
    }

    /// Neighbors of node `i` as `(index, weight)`, sorted by index.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn weighted_degree(&self, i: usize) -> f64 {
        self.adjacency[i].iter().map(|&(_, w)| w).sum()
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.adjacency[i]
            .binary_search_by_key(&j, |&(k, _)| k)
            .ok()
            .map(|pos| self.adjacency[i][pos].1)
    }

    /// Sum of edge weights (each undirected edge counted once).
    pub fn total_weight(&self) -> f64 {
        self.edges().map(|(_, _, w)| w).sum()
    }

    /// Edges as `(i, j, w)` with `i < j`, in lexicographic index order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, list)| {
            list.iter()
                .filter(move |&&(j, _)| j > i)
                .map(move |&(j, w)| (i, j, w))
        })
    }

    /// Connected components as sorted index lists, ordered by their smallest index.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &(v, _) in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.node_count() <= 1 || self.components().len() == 1
    }

    /// Subgraph induced on the given node indices. Keeps the window label.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> CollabGraph {
        let keep: HashMap<usize, ()> = nodes.iter().map(|&i| (i, ())).collect();
        let mut b = GraphBuilder::new();
        b.window = self.window.clone();
        for &i in nodes {
            b.add_node(self.ids[i].clone());
            for &(j, w) in &self.adjacency[i] {
                if j > i && keep.contains_key(&j) {
                    b.add_edge(self.ids[i].clone(), self.ids[j].clone(), w)
                        .expect("edges of a valid graph stay valid");
                }
            }
        }
        b.build()
    }

    /// Subgraph induced on the members present in this graph.
    pub fn induced_by_ids<'a>(&self, members: impl IntoIterator<Item = &'a PersonId>) -> CollabGraph {
        let idx: Vec<usize> = members.into_iter().filter_map(|p| self.index_of(p)).collect();
        self.induced_subgraph(&idx)
    }

    /// Induced subgraph on the largest connected component.
    ///
    /// Equal-size components are resolved in favour of the one holding the
    /// lexicographically smallest id. Since node indices follow id order, that is
    /// the component whose smallest index is lowest.
    pub fn largest_connected_component(&self) -> Result<CollabGraph> {
        if self.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let comps = self.components();
        // components() is ordered by smallest member, so the first maximum wins ties
        let best = comps
            .iter()
            .fold(None::<&Vec<usize>>, |best, c| match best {
                Some(b) if b.len() >= c.len() => Some(b),
                _ => Some(c),
            })
            .expect("non-empty graph has a component");
        if best.len() == self.node_count() {
            return Ok(self.clone());
        }
        Ok(self.induced_subgraph(best))
    }

    pub fn degree_stats(&self) -> DegreeStats {
        let per_node: BTreeMap<PersonId, usize> = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), self.degree(i)))
            .collect();
        let n = per_node.len();
        let sum: usize = per_node.values().sum();
        let max = per_node.values().copied().max().unwrap_or(0) as f64;
        let mean = if n == 0 { 0.0 } else { sum as f64 / n as f64 };
        DegreeStats { per_node, max, mean }
    }

    /// The same graph with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> CollabGraph {
        let mut g = self.clone();
        for list in &mut g.adjacency {
            for e in list.iter_mut() {
                e.1 *= factor;
            }
        }
        g
    }
}
