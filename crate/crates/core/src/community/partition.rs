use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{CollabGraph, PersonId};

/// Node-to-community assignment.
///
/// Community ids are dense from 0 and numbered in order of each community's
/// smallest member id, so equal groupings always compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Partition {
    assignment: BTreeMap<PersonId, usize>,
    level: usize,
    count: usize,
}

impl Partition {
    /// Relabels arbitrary community labels into dense canonical ids.
    pub fn from_map(map: BTreeMap<PersonId, usize>, level: usize) -> Partition {
        let mut relabel: BTreeMap<usize, usize> = BTreeMap::new();
        let assignment: BTreeMap<PersonId, usize> = map
            .into_iter()
            .map(|(p, c)| {
                let next = relabel.len();
                (p, *relabel.entry(c).or_insert(next))
            })
            .collect();
        Partition {
            count: relabel.len(),
            assignment,
            level,
        }
    }

    /// From labels aligned with `g`'s node indices.
    pub fn from_labels(g: &CollabGraph, labels: &[usize], level: usize) -> Partition {
        assert_eq!(labels.len(), g.node_count());
        Partition::from_map(
            g.ids().iter().cloned().zip(labels.iter().copied()).collect(),
            level,
        )
    }

    pub fn singletons(g: &CollabGraph) -> Partition {
        let labels: Vec<usize> = (0..g.node_count()).collect();
        Partition::from_labels(g, &labels, 0)
    }

    pub fn whole(g: &CollabGraph) -> Partition {
        Partition::from_labels(g, &vec![0; g.node_count()], 0)
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn with_level(mut self, level: usize) -> Partition {
        self.level = level;
        self
    }

    pub fn community_of(&self, id: &PersonId) -> Option<usize> {
        self.assignment.get(id).copied()
    }

    /// Number of assigned nodes.
    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn community_count(&self) -> usize {
        self.count
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PersonId, usize)> {
        self.assignment.iter().map(|(p, &c)| (p, c))
    }

    /// Members per community id, each list in id order.
    pub fn communities(&self) -> Vec<Vec<PersonId>> {
        let mut out = vec![Vec::new(); self.count];
        for (p, &c) in &self.assignment {
            out[c].push(p.clone());
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.count];
        for &c in self.assignment.values() {
            out[c] += 1;
        }
        out
    }

    /// Labels aligned with `g`'s node indices. Fails if any node is unassigned.
    pub fn labels_for(&self, g: &CollabGraph) -> Result<Vec<usize>> {
        g.ids()
            .iter()
            .map(|p| {
                self.assignment
                    .get(p)
                    .copied()
                    .ok_or_else(|| Error::PartitionIncomplete(p.to_string()))
            })
            .collect()
    }

    /// True when every community of `self` lies inside one community of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        let mut parent: BTreeMap<usize, usize> = BTreeMap::new();
        self.assignment.iter().all(|(p, &c)| match coarser.community_of(p) {
            None => false,
            Some(up) => *parent.entry(c).or_insert(up) == up,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::pid;

    #[test]
    fn ids_are_dense_and_canonical() {
        let p = Partition::from_map(
            [(pid("c"), 7), (pid("a"), 3), (pid("b"), 7)].into_iter().collect(),
            0,
        );
        assert_eq!(p.community_of(&pid("a")), Some(0));
        assert_eq!(p.community_of(&pid("b")), Some(1));
        assert_eq!(p.community_of(&pid("c")), Some(1));
        assert_eq!(p.community_count(), 2);
        assert_eq!(p.sizes(), [1, 2]);
    }

    #[test]
    fn refinement_check() {
        let coarse = Partition::from_map(
            [(pid("a"), 0), (pid("b"), 0), (pid("c"), 1)].into_iter().collect(),
            0,
        );
        let fine = Partition::from_map(
            [(pid("a"), 0), (pid("b"), 1), (pid("c"), 2)].into_iter().collect(),
            1,
        );
        let crossing = Partition::from_map(
            [(pid("a"), 0), (pid("b"), 1), (pid("c"), 1)].into_iter().collect(),
            1,
        );
        assert!(fine.refines(&coarse));
        assert!(!crossing.refines(&coarse));
    }
}
