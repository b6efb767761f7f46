//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use nalgebra::DMatrix;
use orgmap::community::Partition;
use orgmap::graph::{CollabGraph, PersonId};

/// Adjusted Rand index from the contingency table.
pub fn ari(a: &Partition, b: &Partition) -> f64 {
    let mut cont: HashMap<(usize, usize), f64> = HashMap::new();
    let mut ra: HashMap<usize, f64> = HashMap::new();
    let mut rb: HashMap<usize, f64> = HashMap::new();
    let mut n = 0.0;
    for (id, ca) in a.iter() {
        let cb = b.community_of(id).expect("same node set");
        *cont.entry((ca, cb)).or_default() += 1.0;
        *ra.entry(ca).or_default() += 1.0;
        *rb.entry(cb).or_default() += 1.0;
        n += 1.0;
    }
    let c2 = |x: f64| x * (x - 1.0) / 2.0;
    let index: f64 = cont.values().map(|&x| c2(x)).sum();
    let sa: f64 = ra.values().map(|&x| c2(x)).sum();
    let sb: f64 = rb.values().map(|&x| c2(x)).sum();
    let expected = sa * sb / c2(n);
    let max = (sa + sb) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Mean silhouette over all points, Euclidean distance.
pub fn silhouette(pos: &[[f64; 2]], labels: &[usize]) -> f64 {
    let n = pos.len();
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for j in 0..n {
            if i != j {
                let d = ((pos[i][0] - pos[j][0]).powi(2) + (pos[i][1] - pos[j][1]).powi(2)).sqrt();
                sums[labels[j]] += d;
                counts[labels[j]] += 1;
            }
        }
        let own = labels[i];
        if counts[own] == 0 {
            continue;
        }
        let a = sums[own] / counts[own] as f64;
        let b = (0..k)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    total / n as f64
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// BFS connectivity of `members` inside `g`.
pub fn induces_connected(g: &CollabGraph, members: &[PersonId]) -> bool {
    let set: BTreeSet<usize> = members.iter().filter_map(|m| g.index_of(m)).collect();
    let Some(&start) = set.iter().next() else { return true };
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &(v, _) in g.neighbors(u) {
            if set.contains(&v) && seen.insert(v) {
                queue.push_back(v);
            }
        }
    }
    seen.len() == set.len()
}

/// Freedom straight from the definition: union of root paths between
/// members, plus every sibling of each non-top node.
pub fn freedom_oracle(parent: &BTreeMap<String, Option<String>>, members: &BTreeSet<String>) -> f64 {
    let path = |mut v: String| {
        let mut p = vec![v.clone()];
        while let Some(Some(u)) = parent.get(&v) {
            p.push(u.clone());
            v = u.clone();
        }
        p
    };
    let paths: Vec<Vec<String>> = members.iter().map(|m| path(m.clone())).collect();
    // deepest node common to every root path
    let common: BTreeSet<&String> = paths
        .iter()
        .map(|p| p.iter().collect::<BTreeSet<_>>())
        .reduce(|a, b| a.intersection(&b).cloned().collect())
        .unwrap_or_default();
    let top = paths[0].iter().find(|v| common.contains(v)).expect("shared root").clone();
    let mut mst = BTreeSet::new();
    for p in &paths {
        for v in p {
            mst.insert(v.clone());
            if *v == top {
                break;
            }
        }
    }
    let mut s = mst.clone();
    for v in mst.iter().filter(|v| **v != top) {
        let par = parent[v].clone();
        for (c, pc) in parent {
            if *pc == par {
                s.insert(c.clone());
            }
        }
    }
    1.0 - members.len() as f64 / s.len() as f64
}

/// Omnibus matrix built directly from two edge lists over a shared,
/// sorted id list, binary entries.
pub fn dense_omnibus(prev: &CollabGraph, curr: &CollabGraph) -> (Vec<PersonId>, DMatrix<f64>) {
    let ids: Vec<PersonId> =
        prev.ids().iter().chain(curr.ids()).cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let n = ids.len();
    let at = |p: &PersonId| ids.binary_search(p).unwrap();
    let adj = |g: &CollabGraph| {
        let mut a = DMatrix::<f64>::zeros(n, n);
        for (i, j, _) in g.edges() {
            let (u, v) = (at(g.id(i)), at(g.id(j)));
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        a
    };
    let (a1, a2) = (adj(prev), adj(curr));
    let avg = (&a1 + &a2) * 0.5;
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&a1);
    m.view_mut((n, n), (n, n)).copy_from(&a2);
    m.view_mut((0, n), (n, n)).copy_from(&avg);
    m.view_mut((n, 0), (n, n)).copy_from(&avg);
    (ids, m)
}

/// Rank-d reconstruction `U_d Λ_d U_dᵀ` from a full dense eigendecomposition,
/// plus the sorted eigenvalue magnitudes.
pub fn dense_reconstruction(m: &DMatrix<f64>, d: usize) -> (DMatrix<f64>, Vec<f64>) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()));
    let n = m.nrows();
    let mut r = DMatrix::zeros(n, n);
    for &k in &order[..d] {
        let u = eig.eigenvectors.column(k);
        r += eig.eigenvalues[k] * &u * u.transpose();
    }
    (r, order.iter().map(|&k| eig.eigenvalues[k].abs()).collect())
}
