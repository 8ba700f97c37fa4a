//! Normal frames: lexicographic bracket completion of a generating set, the
//! induced degree map and the product-rule extension of a leaf metric.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algebra::GradedAlgebra;
use crate::error::{HensError, Result};
use crate::linalg::{self, RANK_TOL};

/// A frame built from `p` leaves by repeated brackets `[leaf, node]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameTree {
    /// Frame vectors in ambient coordinates, leaves first.
    pub nodes: Vec<Vec<f64>>,
    pub leaves: usize,
    /// For each node, `Some((k1, k2))` with `node = [node_k1, node_k2]` and
    /// `k1 < leaves`; `None` for leaves.
    pub branches: Vec<Option<(usize, usize)>>,
    pub degree: Vec<u32>,
    /// Leaf-index word `a1 … aq` of the multi-bracket `[X_a1, [… , X_aq]]`.
    pub words: Vec<Vec<usize>>,
}

impl FrameTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Matrix whose columns are the frame vectors.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.nodes.first().map_or(0, Vec::len);
        DMatrix::from_fn(n, self.nodes.len(), |r, c| self.nodes[c][r])
    }

    pub fn max_degree(&self) -> u32 {
        self.degree.iter().copied().max().unwrap_or(0)
    }
}

/// Complete `generators` to a basis of `alg` by adding `[X_i, X_w]`, `X_i` a
/// generator and `X_w` a node of the previous degree, in order of word length
/// and then lexicographic order of the leaf indices. A candidate is adopted
/// exactly when it enlarges the current span.
pub fn build_normal_frame(alg: &GradedAlgebra, generators: &[DVector<f64>]) -> Result<FrameTree> {
    let n = alg.dim();
    for g in generators {
        if g.len() != n {
            return Err(HensError::DimensionMismatch {
                expected: n,
                got: g.len(),
            });
        }
    }
    let p = generators.len();
    if p == 0 || linalg::rank(&linalg::columns(n, generators), RANK_TOL) < p {
        return Err(HensError::DependentGenerators);
    }

    let mut nodes: Vec<DVector<f64>> = generators.to_vec();
    let mut branches = vec![None; p];
    let mut degree = vec![1u32; p];
    let mut words: Vec<Vec<usize>> = (0..p).map(|i| vec![i]).collect();
    let mut rank = p;
    let mut frontier: Vec<usize> = (0..p).collect();
    let mut level = 1u32;

    while rank < n {
        if frontier.is_empty() || level as usize >= n {
            return Err(HensError::NotBracketGenerating { rank, dim: n });
        }
        let mut candidates: Vec<(Vec<usize>, usize, usize)> = Vec::new();
        for i in 0..p {
            for &w in &frontier {
                let mut word = vec![i];
                word.extend_from_slice(&words[w]);
                candidates.push((word, i, w));
            }
        }
        candidates.sort();
        let mut next = Vec::new();
        for (word, i, w) in candidates {
            if rank == n {
                break;
            }
            let v = alg.bracket_raw(&nodes[i], &nodes[w]);
            let mut trial = nodes.clone();
            trial.push(v.clone());
            if linalg::rank(&linalg::columns(n, &trial), RANK_TOL) > rank {
                rank += 1;
                next.push(nodes.len());
                nodes.push(v);
                branches.push(Some((i, w)));
                degree.push(level + 1);
                words.push(word);
            }
        }
        frontier = next;
        level += 1;
    }

    Ok(FrameTree {
        nodes: nodes.iter().map(|v| v.iter().copied().collect()).collect(),
        leaves: p,
        branches,
        degree,
        words,
    })
}

/// Extend a metric on the leaves to the whole frame: the leaf block is kept,
/// every other pair of distinct nodes is orthogonal, and a bracket node has
/// squared norm equal to the product of its branches' squared norms. The
/// result is expressed in frame coordinates.
pub fn extend_metric(tree: &FrameTree, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = tree.leaves;
    if g.nrows() != p || g.ncols() != p {
        return Err(HensError::DimensionMismatch {
            expected: p,
            got: g.nrows(),
        });
    }
    if (g - g.transpose()).amax() > 1e-12 * (1.0 + g.amax()) {
        return Err(HensError::InvalidParameter("leaf metric is not symmetric".into()));
    }
    linalg::cholesky_upper(g)?;
    let n = tree.len();
    let mut out = DMatrix::zeros(n, n);
    out.view_mut((0, 0), (p, p)).copy_from(g);
    for k in p..n {
        let (a, b) = tree.branches[k].expect("non-leaf nodes have branches");
        out[(k, k)] = out[(a, a)] * out[(b, b)];
    }
    Ok(out)
}

/// The extended metric written in the ambient basis: `F⁻ᵀ G F⁻¹` with `F`
/// the frame matrix.
pub fn ambient_metric(tree: &FrameTree, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let frame_metric = extend_metric(tree, g)?;
    let f_inv = linalg::inverse(&tree.matrix())?;
    Ok(f_inv.transpose() * frame_metric * f_inv)
}
