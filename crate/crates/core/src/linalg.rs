//! Symmetric eigensolvers: a dense fallback (nalgebra) and a Lanczos iteration
//! with full reorthogonalisation for larger sparse operators.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::CollabGraph;

/// Matrix-free symmetric operator.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    /// `y = A x`
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut col);
            e[j] = 0.0;
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        m
    }
}

impl SymmetricOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

/// Which end of the spectrum to extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    LargestMagnitude,
    LargestAlgebraic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    /// Dense below [`DENSE_CUTOFF`] rows, Lanczos above.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

pub const DENSE_CUTOFF: usize = 500;

/// Eigenpairs ordered by the requested criterion (descending).
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    pub tolerance: f64,
    /// Cap on operator applications; `None` means `10·n`.
    pub max_iterations: Option<usize>,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            tolerance: 1e-10,
            max_iterations: None,
        }
    }
}

fn rank_key(which: Which, v: f64) -> f64 {
    match which {
        Which::LargestMagnitude => v.abs(),
        Which::LargestAlgebraic => v,
    }
}

/// Flips `v` so its largest-magnitude entry is positive (first such entry on ties).
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn select(values: &[f64], which: Which, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        rank_key(which, values[b])
            .total_cmp(&rank_key(which, values[a]))
            .then(values[b].total_cmp(&values[a]))
    });
    order.truncate(k);
    order
}

/// Full dense decomposition, returning the top `k` pairs.
pub fn dense_eigen(m: &DMatrix<f64>, k: usize, which: Which) -> EigenPairs {
    let eig = SymmetricEigen::new(m.clone());
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let order = select(&values, which, k.min(values.len()));
    let mut out = EigenPairs {
        values: Vec::with_capacity(order.len()),
        vectors: Vec::with_capacity(order.len()),
    };
    for i in order {
        let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        fix_sign(&mut v);
        out.values.push(values[i]);
        out.vectors.push(v);
    }
    out
}

/// Top `k` eigenpairs of `op`, choosing the solver per `solver`.
pub fn top_eigenpairs(
    op: &dyn SymmetricOperator,
    k: usize,
    which: Which,
    solver: Solver,
    opts: LanczosOptions,
) -> Result<EigenPairs> {
    let dense = match solver {
        Solver::Auto => op.dim() < DENSE_CUTOFF,
        Solver::Dense => true,
        Solver::Lanczos => false,
    };
    if dense {
        Ok(dense_eigen(&op.to_dense(), k, which))
    } else {
        lanczos(op, k, which, opts)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for q in basis {
            let c = dot(w, q);
            w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
        }
    }
}

/// Lanczos with full reorthogonalisation. The Krylov basis is extended until
/// the `k` wanted Ritz pairs have residual below `tolerance · ‖A‖`, or the
/// basis spans the whole space (which makes the result exact).
pub fn lanczos(
    op: &dyn SymmetricOperator,
    k: usize,
    which: Which,
    opts: LanczosOptions,
) -> Result<EigenPairs> {
    let n = op.dim();
    if n == 0 {
        return Ok(EigenPairs {
            values: Vec::new(),
            vectors: Vec::new(),
        });
    }
    let k = k.min(n);
    let max_apply = opts.max_iterations.unwrap_or(10 * n).max(n.min(2 * k + 40));
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c_205e_ed00_0001);
    let random_unit = |rng: &mut ChaCha8Rng, basis: &[Vec<f64>]| -> Option<Vec<f64>> {
        for _ in 0..5 {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            orthogonalize(&mut v, basis);
            let nv = norm(&v);
            if nv > 1e-8 {
                v.iter_mut().for_each(|x| *x /= nv);
                return Some(v);
            }
        }
        None
    };

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new(); // beta[j] couples basis[j] and basis[j+1]
    let mut next = random_unit(&mut rng, &[]).expect("n > 0");
    let mut applications = 0;
    let mut target = n.min((2 * k + 20).max(40));
    let mut w = vec![0.0; n];
    let mut anorm: f64 = 0.0;

    loop {
        while basis.len() < target {
            let q = next.clone();
            op.apply(&q, &mut w);
            applications += 1;
            let a = dot(&q, &w);
            alpha.push(a);
            basis.push(q);
            orthogonalize(&mut w, &basis);
            let b = norm(&w);
            anorm = anorm.max(a.abs() + b);
            if basis.len() == n {
                beta.push(0.0);
                break;
            }
            if b <= 1e-13 * anorm.max(1e-300) {
                // invariant subspace found; restart in the orthogonal complement
                beta.push(0.0);
                match random_unit(&mut rng, &basis) {
                    Some(v) => next = v,
                    None => break,
                }
            } else {
                beta.push(b);
                next = w.iter().map(|x| x / b).collect();
            }
        }

        let m = basis.len();
        let mut t = DMatrix::zeros(m, m);
        for j in 0..m {
            t[(j, j)] = alpha[j];
            if j + 1 < m {
                t[(j, j + 1)] = beta[j];
                t[(j + 1, j)] = beta[j];
            }
        }
        let eig = SymmetricEigen::new(t);
        let theta: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let order = select(&theta, which, k.min(m));
        let scale = theta.iter().fold(anorm, |acc, v| acc.max(v.abs())).max(1e-300);
        let last_beta = beta[m - 1];
        let converged = order
            .iter()
            .all(|&i| (last_beta * eig.eigenvectors[(m - 1, i)]).abs() <= opts.tolerance * scale);
        let exhausted = m >= n;

        if (converged && order.len() == k) || exhausted {
            let mut out = EigenPairs {
                values: Vec::with_capacity(order.len()),
                vectors: Vec::with_capacity(order.len()),
            };
            for i in order {
                let mut v = vec![0.0; n];
                for (j, q) in basis.iter().enumerate() {
                    let c = eig.eigenvectors[(j, i)];
                    v.iter_mut().zip(q).for_each(|(x, y)| *x += c * y);
                }
                let nv = norm(&v);
                v.iter_mut().for_each(|x| *x /= nv);
                fix_sign(&mut v);
                out.values.push(theta[i]);
                out.vectors.push(v);
            }
            return Ok(out);
        }
        if applications >= max_apply {
            return Err(Error::NoConvergence(format!(
                "Lanczos: {applications} operator applications, basis {m} of {n}, \
                 last coupling {last_beta:.3e}"
            )));
        }
        target = n.min(2 * m).min(m + (max_apply - applications));
    }
}

/// Weighted graph Laplacian `D − W`.
struct Laplacian<'a>(&'a CollabGraph);

impl SymmetricOperator for Laplacian<'_> {
    fn dim(&self) -> usize {
        self.0.node_count()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for &(j, w) in self.0.neighbors(i) {
                acc += w * (x[i] - x[j]);
            }
            *yi = acc;
        }
    }
}

/// `c·I − L − c·11ᵀ/n`: its top eigenvector is the Fiedler vector.
struct ShiftedLaplacian<'a> {
    lap: Laplacian<'a>,
    shift: f64,
}

impl SymmetricOperator for ShiftedLaplacian<'_> {
    fn dim(&self) -> usize {
        self.lap.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.lap.apply(x, y);
        let n = x.len() as f64;
        let mean: f64 = x.iter().sum::<f64>() / n;
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.shift * (xi - mean) - *yi;
        }
    }
}

/// Eigenvector of the second-smallest Laplacian eigenvalue. Sign-normalised.
pub fn fiedler_vector(g: &CollabGraph) -> Vec<f64> {
    let n = g.node_count();
    if n < 2 {
        return vec![0.0; n];
    }
    let lap = Laplacian(g);
    if n < DENSE_CUTOFF {
        let eig = SymmetricEigen::new(lap.to_dense());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut v: Vec<f64> = eig.eigenvectors.column(order[1]).iter().copied().collect();
        fix_sign(&mut v);
        return v;
    }
    let shift = 2.0 * (0..n).map(|i| g.weighted_degree(i)).fold(0.0, f64::max) + 1.0;
    let op = ShiftedLaplacian { lap, shift };
    lanczos(&op, 1, Which::LargestAlgebraic, LanczosOptions::default())
        .map(|p| p.vectors.into_iter().next().unwrap_or_default())
        .unwrap_or_else(|_| vec![0.0; n])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = rng.random::<f64>() * 2.0 - 1.0;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    #[test]
    fn lanczos_matches_dense() {
        for (n, k) in [(30, 5), (120, 10), (300, 33)] {
            let m = random_symmetric(n, n as u64);
            let dense = dense_eigen(&m, k, Which::LargestMagnitude);
            let lz = lanczos(&m, k, Which::LargestMagnitude, LanczosOptions::default()).unwrap();
            for i in 0..k {
                assert!((dense.values[i] - lz.values[i]).abs() < 1e-8, "n={n} i={i}");
                let c = dot(&dense.vectors[i], &lz.vectors[i]).abs();
                assert!((c - 1.0).abs() < 1e-6, "n={n} i={i} cos={c}");
            }
        }
    }

    #[test]
    fn lanczos_handles_low_rank() {
        // rank-2 matrix: Krylov space breaks down after two steps
        let n = 50;
        let u: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0).sqrt()).collect();
        let v: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = u[i] * u[j] - 3.0 * v[i] * v[j];
            }
        }
        let lz = lanczos(&m, 3, Which::LargestMagnitude, LanczosOptions::default()).unwrap();
        let dense = dense_eigen(&m, 3, Which::LargestMagnitude);
        for i in 0..3 {
            assert!((dense.values[i] - lz.values[i]).abs() < 1e-8);
        }
        assert!(lz.values[2].abs() < 1e-8);
    }

    #[test]
    fn fiedler_separates_barbell() {
        let g = CollabGraph::from_edges([
            ("a", "b", 1.0),
            ("b", "c", 1.0),
            ("a", "c", 1.0),
            ("c", "d", 0.1),
            ("d", "e", 1.0),
            ("e", "f", 1.0),
            ("d", "f", 1.0),
        ])
        .unwrap();
        let f = fiedler_vector(&g);
        assert!(f[0] * f[5] < 0.0);
        assert!(f[0] * f[1] > 0.0 && f[4] * f[5] > 0.0);
    }

    #[test]
    fn sign_convention() {
        let mut v = vec![0.1, -0.9, 0.3];
        fix_sign(&mut v);
        assert_eq!(v, [-0.1, 0.9, -0.3]);
    }
}
