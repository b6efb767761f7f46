//! Omnibus spectral embedding of two adjacent monthly graphs.
//!
//! The omnibus matrix stacks both adjacency matrices on its diagonal blocks
//! and their average off the diagonal, so one eigendecomposition places every
//! person twice (once per month) in a shared latent space.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CollabGraph, PersonId};
use crate::linalg::{self, LanczosOptions, Solver, SymmetricOperator, Which};

/// Which edge values populate the adjacency blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdjacencyWeighting {
    /// 1 for every edge.
    #[default]
    Binary,
    /// Raw edge weights.
    Weighted,
}

/// `2n × 2n` omnibus matrix over the union of two months' node sets.
#[derive(Debug, Clone)]
pub struct OmnibusMatrix {
    ids: Vec<PersonId>,
    prev: Vec<Vec<(usize, f64)>>,
    curr: Vec<Vec<(usize, f64)>>,
    present_prev: Vec<bool>,
    present_curr: Vec<bool>,
    month_pair: (String, String),
}

impl OmnibusMatrix {
    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[PersonId] {
        &self.ids
    }

    /// Row indices of `id` in the previous-month and current-month blocks.
    pub fn block_rows(&self, id: &PersonId) -> Option<(usize, usize)> {
        self.ids
            .binary_search(id)
            .ok()
            .map(|i| (i, i + self.ids.len()))
    }

    pub fn month_pair(&self) -> (&str, &str) {
        (&self.month_pair.0, &self.month_pair.1)
    }
}

impl SymmetricOperator for OmnibusMatrix {
    fn dim(&self) -> usize {
        2 * self.ids.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.ids.len();
        let (x1, x2) = x.split_at(n);
        let (y1, y2) = y.split_at_mut(n);
        for i in 0..n {
            let mut a = 0.0;
            let mut b = 0.0;
            for &(j, w) in &self.prev[i] {
                // A_prev x1 + (A_prev/2) x2 on top, (A_prev/2) x1 below
                a += w * (x1[j] + 0.5 * x2[j]);
                b += 0.5 * w * x1[j];
            }
            for &(j, w) in &self.curr[i] {
                a += 0.5 * w * x2[j];
                b += w * (x2[j] + 0.5 * x1[j]);
            }
            y1[i] = a;
            y2[i] = b;
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.ids.len();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for &(j, w) in &self.prev[i] {
                m[(i, j)] += w;
                m[(i, n + j)] += 0.5 * w;
                m[(n + i, j)] += 0.5 * w;
            }
            for &(j, w) in &self.curr[i] {
                m[(n + i, n + j)] += w;
                m[(i, n + j)] += 0.5 * w;
                m[(n + i, j)] += 0.5 * w;
            }
        }
        m
    }
}

/// Builds the omnibus matrix. Nodes missing from a month get zero rows and
/// columns in that month's adjacency block.
pub fn build_omnibus(
    prev: &CollabGraph,
    curr: &CollabGraph,
    weighting: AdjacencyWeighting,
) -> Result<OmnibusMatrix> {
    if prev.is_empty() && curr.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let mut ids: Vec<PersonId> = prev.ids().iter().chain(curr.ids()).cloned().collect();
    ids.sort();
    ids.dedup();
    let pos = |p: &PersonId| ids.binary_search(p).expect("id in union");
    let block = |g: &CollabGraph| {
        let mut out = vec![Vec::new(); ids.len()];
        let mut present = vec![false; ids.len()];
        for (i, id) in g.ids().iter().enumerate() {
            let u = pos(id);
            present[u] = true;
            for &(j, w) in g.neighbors(i) {
                let value = match weighting {
                    AdjacencyWeighting::Binary => 1.0,
                    AdjacencyWeighting::Weighted => w,
                };
                out[u].push((pos(g.id(j)), value));
            }
            out[u].sort_by_key(|e: &(usize, f64)| e.0);
        }
        (out, present)
    };
    let (prev_block, present_prev) = block(prev);
    let (curr_block, present_curr) = block(curr);
    let label = |g: &CollabGraph| g.window().unwrap_or("").to_string();
    Ok(OmnibusMatrix {
        prev: prev_block,
        curr: curr_block,
        present_prev,
        present_curr,
        month_pair: (label(prev), label(curr)),
        ids,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbedOptions {
    pub d_min: usize,
    pub d_max: usize,
    /// Overrides scree-based selection.
    pub fixed_d: Option<usize>,
    #[serde(skip)]
    pub solver: Solver,
    pub tolerance: f64,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        EmbedOptions {
            d_min: 2,
            d_max: 32,
            fixed_d: None,
            solver: Solver::Auto,
            tolerance: 1e-10,
        }
    }
}

/// Leading eigenvalues (by magnitude) and the dimension chosen from them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreeSelection {
    pub eigenvalues: Vec<f64>,
    pub chosen_d: usize,
}

/// Per-person latent positions for two adjacent months.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingPair {
    pub dimension: usize,
    pub month_pair: (String, String),
    /// `(previous, current)` vectors; a zero vector marks absence in that month.
    pub positions: BTreeMap<PersonId, (Vec<f64>, Vec<f64>)>,
    /// Signed eigenvalues of the retained directions.
    pub eigenvalues: Vec<f64>,
    /// All `2n` rows of `U_d |Λ_d|^{1/2}` in omnibus row order.
    pub latent: Vec<Vec<f64>>,
    pub scree: ScreeSelection,
}

/// Picks the dimension with the largest relative gap `(|λ_d| − |λ_{d+1}|)/|λ_d|`
/// for `d` in `[d_min, d_max]`, earliest on ties. `magnitudes` is descending.
pub fn select_dimension(magnitudes: &[f64], d_min: usize, d_max: usize) -> usize {
    let usable = magnitudes.len();
    if usable <= d_min {
        return usable;
    }
    let hi = d_max.min(usable);
    let mut best = d_min;
    let mut best_gap = f64::NEG_INFINITY;
    for d in d_min..=hi {
        let here = magnitudes[d - 1];
        let next = magnitudes.get(d).copied().unwrap_or(0.0);
        let gap = (here - next) / here;
        if gap > best_gap + 1e-12 {
            best = d;
            best_gap = gap;
        }
    }
    best
}

pub fn spectral_embed(m: &OmnibusMatrix, opts: &EmbedOptions) -> Result<EmbeddingPair> {
    if opts.d_min == 0 || opts.d_max < opts.d_min {
        return Err(Error::InvalidParameter(format!(
            "invalid dimension bounds [{}, {}]",
            opts.d_min, opts.d_max
        )));
    }
    let wanted = opts.fixed_d.unwrap_or(opts.d_max).max(opts.d_min) + 1;
    let pairs = linalg::top_eigenpairs(
        m,
        wanted,
        Which::LargestMagnitude,
        opts.solver,
        LanczosOptions {
            tolerance: opts.tolerance,
            max_iterations: None,
        },
    )?;
    let lead = pairs.values.first().map_or(0.0, |v| v.abs());
    if lead <= 1e-12 {
        return Err(Error::DegenerateEmbedding(
            "omnibus matrix has no non-zero eigenvalues".into(),
        ));
    }
    let magnitudes: Vec<f64> = pairs
        .values
        .iter()
        .map(|v| v.abs())
        .take_while(|&v| v > 1e-9 * lead)
        .collect();
    let d = match opts.fixed_d {
        Some(fixed) => fixed.min(magnitudes.len()),
        None => select_dimension(&magnitudes, opts.d_min, opts.d_max),
    };
    if d == 0 {
        return Err(Error::DegenerateEmbedding("chosen dimension is zero".into()));
    }

    let rows = m.dim();
    let n = m.node_count();
    let scale: Vec<f64> = pairs.values[..d].iter().map(|v| v.abs().sqrt()).collect();
    let latent: Vec<Vec<f64>> = (0..rows)
        .map(|r| (0..d).map(|j| pairs.vectors[j][r] * scale[j]).collect())
        .collect();
    if latent.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NoConvergence("non-finite embedding coordinates".into()));
    }
    let zero = vec![0.0; d];
    let positions = m
        .ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let prev = if m.present_prev[i] { latent[i].clone() } else { zero.clone() };
            let curr = if m.present_curr[i] { latent[n + i].clone() } else { zero.clone() };
            (id.clone(), (prev, curr))
        })
        .collect();
    Ok(EmbeddingPair {
        dimension: d,
        month_pair: m.month_pair.clone(),
        positions,
        eigenvalues: pairs.values[..d].to_vec(),
        latent,
        scree: ScreeSelection {
            eigenvalues: pairs.values.clone(),
            chosen_d: d,
        },
    })
}

/// Embeds every adjacent pair of `graphs` (month order), in parallel.
pub fn embed_series(
    graphs: &[&CollabGraph],
    weighting: AdjacencyWeighting,
    opts: &EmbedOptions,
) -> Result<Vec<EmbeddingPair>> {
    graphs
        .par_windows(2)
        .map(|w| spectral_embed(&build_omnibus(w[0], w[1], weighting)?, opts))
        .collect()
}

/// `person_id,month,v1..vd` rows for both months of each embedding.
pub fn format_embedding_csv(embeddings: &[EmbeddingPair]) -> String {
    let d_max = embeddings.iter().map(|e| e.dimension).max().unwrap_or(0);
    let mut out = String::from("person_id,month");
    for j in 1..=d_max {
        out.push_str(&format!(",v{j}"));
    }
    out.push('\n');
    for e in embeddings {
        for (id, (prev, curr)) in &e.positions {
            for (month, v) in [(&e.month_pair.0, prev), (&e.month_pair.1, curr)] {
                out.push_str(&format!("{id},{month}"));
                for j in 0..d_max {
                    out.push_str(&format!(",{}", v.get(j).copied().unwrap_or(0.0)));
                }
                out.push('\n');
            }
        }
    }
    out
}
