//! Laplacian spectral embedding of nodes and the derived edge features.
//!
//! Node `u` is embedded as its coordinates in the `d` eigenvectors of the
//! combinatorial Laplacian `D - A` of the symmetrized graph with the smallest
//! eigenvalues. The feature of edge `(u, v)` is the elementwise product of the
//! two endpoint embeddings. Eigenvectors are unit-norm, with the sign chosen
//! so that the largest-magnitude entry is positive.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{DirectedGraph, EdgeId, NodeId};
use crate::error::{OimError, Result};
use crate::rng;

/// Graphs with at least this many nodes use the iterative eigensolver.
pub const DENSE_EIGEN_LIMIT: usize = 2000;

/// Residual tolerance `||L x - lambda x||` of the iterative eigensolver.
pub const ITERATIVE_TOLERANCE: f64 = 1e-8;

const ITERATIVE_MAX_ITER: usize = 3000;
const CHEBYSHEV_DEGREE: usize = 16;

/// Smallest Laplacian eigenpairs, ascending.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    /// Row-major `node_count x dim`: entry `u * dim + j` is node `u` in vector `j`.
    pub vectors: Vec<f64>,
    pub dim: usize,
}

impl Eigenpairs {
    pub fn vector(&self, j: usize) -> Vec<f64> {
        self.vectors.iter().skip(j).step_by(self.dim).copied().collect()
    }
}

/// Node embeddings and per-edge feature vectors of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    dim: usize,
    node_embedding: Vec<f64>,
    edge_feature: Vec<f64>,
}

impl FeatureMap {
    /// Derives edge features from row-major node embeddings.
    pub fn from_node_embedding(graph: &DirectedGraph, dim: usize, node_embedding: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(OimError::invalid("feature dimension must be positive"));
        }
        let expected = graph.node_count() * dim;
        if node_embedding.len() != expected {
            return Err(OimError::Dimension {
                expected,
                actual: node_embedding.len(),
            });
        }
        let mut edge_feature = Vec::with_capacity(graph.edge_count() * dim);
        for &(u, v) in graph.edges() {
            let fu = &node_embedding[u * dim..(u + 1) * dim];
            let fv = &node_embedding[v * dim..(v + 1) * dim];
            edge_feature.extend(fu.iter().zip(fv).map(|(a, b)| a * b));
        }
        Ok(FeatureMap {
            dim,
            node_embedding,
            edge_feature,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn edge_count(&self) -> usize {
        self.edge_feature.len() / self.dim
    }

    pub fn node(&self, u: NodeId) -> &[f64] {
        &self.node_embedding[u * self.dim..(u + 1) * self.dim]
    }

    pub fn edge(&self, e: EdgeId) -> &[f64] {
        &self.edge_feature[e * self.dim..(e + 1) * self.dim]
    }
}

pub fn laplacian_features(graph: &DirectedGraph, d: usize) -> Result<FeatureMap> {
    let pairs = laplacian_eigenpairs(graph, d)?;
    FeatureMap::from_node_embedding(graph, d, pairs.vectors)
}

/// Dispatches to the dense solver below [`DENSE_EIGEN_LIMIT`] nodes and to the
/// iterative one above.
pub fn laplacian_eigenpairs(graph: &DirectedGraph, d: usize) -> Result<Eigenpairs> {
    check_dim(graph, d)?;
    if graph.node_count() < DENSE_EIGEN_LIMIT {
        laplacian_eigenpairs_dense(graph, d)
    } else {
        laplacian_eigenpairs_iterative(graph, d, ITERATIVE_TOLERANCE)
    }
}

fn check_dim(graph: &DirectedGraph, d: usize) -> Result<()> {
    if d == 0 || d > graph.node_count() {
        return Err(OimError::Dimension {
            expected: graph.node_count(),
            actual: d,
        });
    }
    Ok(())
}

pub fn laplacian_eigenpairs_dense(graph: &DirectedGraph, d: usize) -> Result<Eigenpairs> {
    check_dim(graph, d)?;
    let n = graph.node_count();
    let adj = graph.symmetrized_neighbors();
    let mut lap = DMatrix::<f64>::zeros(n, n);
    for (u, nbrs) in adj.iter().enumerate() {
        lap[(u, u)] = nbrs.len() as f64;
        for &v in nbrs {
            lap[(u, v)] = -1.0;
        }
    }
    let eig = SymmetricEigen::new(lap);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));

    let columns: Vec<Vec<f64>> = order[..d]
        .iter()
        .map(|&j| eig.eigenvectors.column(j).iter().copied().collect())
        .collect();
    let values = order[..d].iter().map(|&j| eig.eigenvalues[j]).collect();
    Ok(pack(values, columns, n))
}

/// Chebyshev-filtered subspace iteration on the sparse Laplacian.
///
/// Iterates a block of `2d + 4` vectors, damping the unwanted upper part of
/// the spectrum with a Chebyshev polynomial and extracting Ritz pairs, until
/// each of the `d` wanted pairs has residual below `tol`.
pub fn laplacian_eigenpairs_iterative(graph: &DirectedGraph, d: usize, tol: f64) -> Result<Eigenpairs> {
    check_dim(graph, d)?;
    let n = graph.node_count();
    let adj = graph.symmetrized_neighbors();
    let max_degree = adj.iter().map(Vec::len).max().unwrap_or(0);
    if max_degree == 0 {
        // L = 0: any orthonormal basis is an eigenbasis.
        let columns = (0..d)
            .map(|j| (0..n).map(|u| if u == j { 1.0 } else { 0.0 }).collect())
            .collect();
        return Ok(pack(vec![0.0; d], columns, n));
    }
    let upper = 2.0 * max_degree as f64;
    let block = (2 * d + 4).min(n);

    let mut init_rng = rng::stream(0x5eed_1a91, 0);
    let mut x: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| init_rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    orthonormalize(&mut x, &mut init_rng);
    let (mut ritz, mut x, mut lx) = rayleigh_ritz(&adj, x);

    for _ in 0..ITERATIVE_MAX_ITER {
        let worst = (0..d)
            .map(|j| {
                lx[j]
                    .iter()
                    .zip(&x[j])
                    .map(|(a, b)| (a - ritz[j] * b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        if worst < tol {
            return Ok(pack(ritz[..d].to_vec(), x.into_iter().take(d).collect(), n));
        }
        let cut = ritz[block - 1];
        if block == n || cut >= upper * (1.0 - 1e-12) {
            // The block already spans the spectrum; Rayleigh-Ritz is exact.
            return Ok(pack(ritz[..d].to_vec(), x.into_iter().take(d).collect(), n));
        }
        let mut y = chebyshev_filter(&adj, &x, CHEBYSHEV_DEGREE, cut, upper, ritz[0].min(0.0) - 1e-3);
        orthonormalize(&mut y, &mut init_rng);
        (ritz, x, lx) = rayleigh_ritz(&adj, y);
    }
    Err(OimError::Numeric(format!(
        "Laplacian eigensolver did not reach residual {tol:e} within {ITERATIVE_MAX_ITER} iterations"
    )))
}

fn apply_laplacian(adj: &[Vec<NodeId>], x: &[f64], out: &mut [f64]) {
    for (u, nbrs) in adj.iter().enumerate() {
        let s: f64 = nbrs.iter().map(|&v| x[v]).sum();
        out[u] = nbrs.len() as f64 * x[u] - s;
    }
}

/// Scaled Chebyshev filter damping the interval `[low, high]`.
fn chebyshev_filter(
    adj: &[Vec<NodeId>],
    x: &[Vec<f64>],
    degree: usize,
    low: f64,
    high: f64,
    floor: f64,
) -> Vec<Vec<f64>> {
    let e = (high - low) / 2.0;
    let c = (high + low) / 2.0;
    let sigma1 = e / (floor - c);
    let n = adj.len();
    let mut tmp = vec![0.0; n];
    x.iter()
        .map(|col| {
            let mut prev = col.clone();
            apply_laplacian(adj, &prev, &mut tmp);
            let mut cur: Vec<f64> = tmp.iter().zip(&prev).map(|(l, p)| (l - c * p) * sigma1 / e).collect();
            let mut sigma = sigma1;
            for _ in 1..degree {
                let sigma2 = 1.0 / (2.0 / sigma1 - sigma);
                apply_laplacian(adj, &cur, &mut tmp);
                let next: Vec<f64> = tmp
                    .iter()
                    .zip(&cur)
                    .zip(&prev)
                    .map(|((l, y), p)| 2.0 * sigma2 / e * (l - c * y) - sigma * sigma2 * p)
                    .collect();
                prev = std::mem::replace(&mut cur, next);
                sigma = sigma2;
            }
            cur
        })
        .collect()
}

/// Twice-iterated modified Gram-Schmidt; collapsed columns are refilled.
fn orthonormalize(cols: &mut [Vec<f64>], rng: &mut rng::StreamRng) {
    for j in 0..cols.len() {
        for attempt in 0..4 {
            for _ in 0..2 {
                for i in 0..j {
                    let proj: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
                    let (head, tail) = cols.split_at_mut(j);
                    for (t, h) in tail[0].iter_mut().zip(&head[i]) {
                        *t -= proj * h;
                    }
                }
            }
            let norm = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-10 || attempt == 3 {
                for v in cols[j].iter_mut() {
                    *v /= norm;
                }
                break;
            }
            for v in cols[j].iter_mut() {
                *v = rng.sample(StandardNormal);
            }
        }
    }
}

/// Returns ascending Ritz values, Ritz vectors and their Laplacian images.
fn rayleigh_ritz(adj: &[Vec<NodeId>], x: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = adj.len();
    let b = x.len();
    let lx: Vec<Vec<f64>> = x
        .iter()
        .map(|col| {
            let mut out = vec![0.0; n];
            apply_laplacian(adj, col, &mut out);
            out
        })
        .collect();
    let mut h = DMatrix::<f64>::zeros(b, b);
    for i in 0..b {
        for j in i..b {
            let v: f64 = x[i].iter().zip(&lx[j]).map(|(a, c)| a * c).sum();
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..b).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[p].total_cmp(&eig.eigenvalues[q]).then(p.cmp(&q)));

    let combine = |basis: &[Vec<f64>], k: usize| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (i, col) in basis.iter().enumerate() {
            let w = eig.eigenvectors[(i, k)];
            for (o, v) in out.iter_mut().zip(col) {
                *o += w * v;
            }
        }
        out
    };
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = order.iter().map(|&k| combine(&x, k)).collect();
    let images = order.iter().map(|&k| combine(&lx, k)).collect();
    (values, vecs, images)
}

/// Flips `col` so that its largest-magnitude entry is positive. Entries within
/// a relative `1e-9` of the maximum count as ties, resolved by lowest index.
fn fix_sign(col: &mut [f64]) {
    let max = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(&pivot) = col.iter().find(|v| v.abs() >= max * (1.0 - 1e-9)) {
        if pivot < 0.0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

fn pack(values: Vec<f64>, mut columns: Vec<Vec<f64>>, n: usize) -> Eigenpairs {
    let d = columns.len();
    for col in &mut columns {
        fix_sign(col);
    }
    let mut vectors = vec![0.0; n * d];
    for (j, col) in columns.iter().enumerate() {
        for (u, &v) in col.iter().enumerate() {
            vectors[u * d + j] = v;
        }
    }
    Eigenpairs {
        values,
        vectors,
        dim: d,
    }
}
