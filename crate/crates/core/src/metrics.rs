//! Workgroup fluidity and freedom.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::community::Partition;
use crate::embedding::EmbeddingPair;
use crate::error::{Error, Result};
use crate::graph::{OrgTree, PersonId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Workgroup {
    pub id: usize,
    pub members: BTreeSet<PersonId>,
}

impl Workgroup {
    pub fn new(id: usize, members: impl IntoIterator<Item = PersonId>) -> Result<Workgroup> {
        let members: BTreeSet<PersonId> = members.into_iter().collect();
        if members.is_empty() {
            return Err(Error::InvalidParameter(format!("workgroup {id} has no members")));
        }
        Ok(Workgroup { id, members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// One workgroup per community of `p`, ids matching the partition's labels.
pub fn workgroups(p: &Partition) -> Vec<Workgroup> {
    p.communities()
        .into_iter()
        .enumerate()
        .map(|(id, members)| Workgroup {
            id,
            members: members.into_iter().collect(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluidityScore {
    pub workgroup_id: usize,
    pub value: f64,
    pub months_used: usize,
    pub per_month: Vec<((String, String), f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreedomScore {
    pub workgroup_id: usize,
    pub value: f64,
    pub per_month: Vec<(String, f64)>,
}

fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Some((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Mean over month pairs of `1 − mean cosine similarity` between each
/// member's consecutive positions. Members with a zero vector on either side
/// are skipped; a pair with no counted member is dropped.
pub fn fluidity(w: &Workgroup, embeddings: &[EmbeddingPair]) -> Result<FluidityScore> {
    if embeddings.is_empty() {
        return Err(Error::InvalidParameter("fluidity needs at least one embedding pair".into()));
    }
    let mut per_month = Vec::new();
    for e in embeddings {
        let mut total = 0.0;
        let mut counted = 0usize;
        for id in &w.members {
            let Some((prev, curr)) = e.positions.get(id) else { continue };
            if let Some(c) = cosine(curr, prev) {
                total += c;
                counted += 1;
            }
        }
        if counted > 0 {
            per_month.push((e.month_pair.clone(), 1.0 - total / counted as f64));
        }
    }
    if per_month.is_empty() {
        return Err(Error::NoFluiditySignal(w.id));
    }
    let value = per_month.iter().map(|(_, v)| v).sum::<f64>() / per_month.len() as f64;
    Ok(FluidityScore {
        workgroup_id: w.id,
        value,
        months_used: per_month.len(),
        per_month,
    })
}

fn lca<'a>(tree: &'a OrgTree, a: &'a PersonId, b: &'a PersonId) -> &'a PersonId {
    let (mut a, mut b) = (a, b);
    let (mut da, mut db) = (tree.depth(a).unwrap_or(0), tree.depth(b).unwrap_or(0));
    while da > db {
        a = tree.parent(a).expect("non-root has a parent");
        da -= 1;
    }
    while db > da {
        b = tree.parent(b).expect("non-root has a parent");
        db -= 1;
    }
    while a != b {
        a = tree.parent(a).expect("non-root has a parent");
        b = tree.parent(b).expect("non-root has a parent");
    }
    a
}

/// Smallest connected subtree containing every member present in `tree`,
/// along with its root.
fn spanning_subtree<'a>(
    tree: &'a OrgTree,
    members: impl IntoIterator<Item = &'a PersonId>,
) -> Option<(BTreeSet<PersonId>, &'a PersonId)> {
    let present: Vec<&PersonId> = members.into_iter().filter(|m| tree.contains(m)).collect();
    let first = *present.first()?;
    let top = present.iter().fold(first, |acc, m| lca(tree, acc, m));
    let mut nodes = BTreeSet::new();
    nodes.insert(top.clone());
    for &m in &present {
        let mut cur = m;
        while cur != top && nodes.insert(cur.clone()) {
            cur = tree.parent(cur).expect("below the subtree root");
        }
    }
    Some((nodes, top))
}

pub fn minimal_spanning_subtree(tree: &OrgTree, members: &BTreeSet<PersonId>) -> Result<BTreeSet<PersonId>> {
    spanning_subtree(tree, members)
        .map(|(nodes, _)| nodes)
        .ok_or(Error::WorkgroupNotResolvable)
}

/// The spanning subtree plus every peer (including itself) of each of its
/// non-root nodes.
pub fn alignment_set(tree: &OrgTree, members: &BTreeSet<PersonId>) -> Result<BTreeSet<PersonId>> {
    let (mst, top) = spanning_subtree(tree, members).ok_or(Error::WorkgroupNotResolvable)?;
    let mut s = mst.clone();
    for v in mst.iter().filter(|v| *v != top) {
        let parent = tree.parent(v).expect("non-root subtree node has a parent");
        s.extend(tree.children(parent).iter().cloned());
    }
    Ok(s)
}

/// `1 − |w| / |S|` for one tree, or `None` when no member is in it.
pub fn freedom_in(tree: &OrgTree, members: &BTreeSet<PersonId>) -> Option<f64> {
    let resolved = members.iter().filter(|m| tree.contains(m)).count();
    if resolved == 0 {
        return None;
    }
    let s = alignment_set(tree, members).ok()?;
    Some(1.0 - resolved as f64 / s.len() as f64)
}

pub fn freedom(w: &Workgroup, trees: &[OrgTree]) -> Result<FreedomScore> {
    if trees.is_empty() {
        return Err(Error::InvalidParameter("freedom needs at least one org tree".into()));
    }
    let per_month: Vec<(String, f64)> = trees
        .iter()
        .filter_map(|t| freedom_in(t, &w.members).map(|v| (t.snapshot_date().to_string(), v)))
        .collect();
    if per_month.is_empty() {
        return Err(Error::NoFreedomSignal(w.id));
    }
    let value = per_month.iter().map(|(_, v)| v).sum::<f64>() / per_month.len() as f64;
    Ok(FreedomScore {
        workgroup_id: w.id,
        value,
        per_month,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Mean,
    Median,
}

/// Per-community statistic of node values. Communities with no values map to
/// `None`.
pub fn aggregate_node_metric(
    values: &BTreeMap<PersonId, f64>,
    p: &Partition,
    stat: Statistic,
) -> BTreeMap<usize, Option<f64>> {
    let mut groups: BTreeMap<usize, Vec<f64>> = (0..p.community_count()).map(|c| (c, Vec::new())).collect();
    for (id, c) in p.iter() {
        if let Some(&v) = values.get(id).filter(|v| v.is_finite()) {
            groups.entry(c).or_default().push(v);
        }
    }
    groups
        .into_iter()
        .map(|(c, mut vs)| {
            let out = if vs.is_empty() {
                None
            } else {
                match stat {
                    Statistic::Mean => Some(vs.iter().sum::<f64>() / vs.len() as f64),
                    Statistic::Median => {
                        vs.sort_by(f64::total_cmp);
                        let mid = vs.len() / 2;
                        Some(if vs.len() % 2 == 1 { vs[mid] } else { (vs[mid - 1] + vs[mid]) / 2.0 })
                    }
                }
            };
            (c, out)
        })
        .collect()
}

/// Both metrics for one workgroup; `None` marks a missing value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkgroupMetrics {
    pub workgroup_id: usize,
    pub size: usize,
    pub freedom: Option<FreedomScore>,
    pub fluidity: Option<FluidityScore>,
}

pub fn compute_metrics(
    groups: &[Workgroup],
    embeddings: &[EmbeddingPair],
    trees: &[OrgTree],
) -> Vec<WorkgroupMetrics> {
    groups
        .par_iter()
        .map(|w| WorkgroupMetrics {
            workgroup_id: w.id,
            size: w.len(),
            freedom: if trees.is_empty() { None } else { freedom(w, trees).ok() },
            fluidity: if embeddings.is_empty() { None } else { fluidity(w, embeddings).ok() },
        })
        .collect()
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn format_metrics_csv(rows: &[WorkgroupMetrics]) -> String {
    let mut out = String::from("workgroup_id,size,freedom,fluidity\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.workgroup_id,
            r.size,
            cell(r.freedom.as_ref().map(|f| f.value)),
            cell(r.fluidity.as_ref().map(|f| f.value)),
        ));
    }
    out
}

/// `workgroup_id,metric,period,value`, one row per month (freedom) or month
/// pair (fluidity, period `prev/curr`).
pub fn format_metrics_detail_csv(rows: &[WorkgroupMetrics]) -> String {
    let mut out = String::from("workgroup_id,metric,period,value\n");
    for r in rows {
        if let Some(f) = &r.freedom {
            for (month, v) in &f.per_month {
                out.push_str(&format!("{},freedom,{month},{v}\n", r.workgroup_id));
            }
        }
        if let Some(f) = &r.fluidity {
            for ((a, b), v) in &f.per_month {
                out.push_str(&format!("{},fluidity,{a}/{b},{v}\n", r.workgroup_id));
            }
        }
    }
    out
}

/// Parses the summary CSV back into `(workgroup_id, size, freedom, fluidity)`.
pub fn parse_metrics_csv(reader: impl std::io::Read) -> Result<Vec<(usize, usize, Option<f64>, Option<f64>)>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let loc = format!("metrics line {}", i + 2);
        let num = |k: usize| -> Result<Option<f64>> {
            match rec.get(k).map(str::trim) {
                None | Some("") => Ok(None),
                Some(s) => s.parse().map(Some).map_err(|_| Error::parse(&loc, format!("bad number {s:?}"))),
            }
        };
        let int = |k: usize| -> Result<usize> {
            rec.get(k)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::parse(&loc, "bad integer"))
        };
        out.push((int(0)?, int(1)?, num(2)?, num(3)?));
    }
    Ok(out)
}
