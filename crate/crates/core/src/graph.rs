//! Undirected graph representation, kNN construction, and the GCN
//! propagation operator.

use crate::{Error, FeatureMatrix, Result};

/// Immutable undirected graph. Edges are stored as `(u, v)` with `u < v`,
/// sorted lexicographically; adjacency lists are sorted. No self-loops, no
/// duplicates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from an edge list. Edges are normalized to `u < v` and
    /// sorted; self-loops and duplicates are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut norm: Vec<(usize, usize)> = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            norm.push((u.min(v), u.max(v)));
        }
        norm.sort_unstable();
        if let Some(w) = norm.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &norm {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Self {
            n,
            edges: norm,
            adj,
        })
    }

    /// Node count.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Edge count.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v)` pairs with `u < v`, lexicographically sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbor list of `u`.
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }
}

/// Builds a kNN graph from point features: each node selects its `k`
/// nearest neighbors by Euclidean distance (ties broken by lower index) and
/// the directed selections are symmetrized by union.
pub fn knn_graph(points: &FeatureMatrix, k: usize) -> Result<Graph> {
    let n = points.rows();
    if k >= n {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must be smaller than the number of points {n}"
        )));
    }
    let mut edges = Vec::new();
    let mut dist_idx: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        dist_idx.clear();
        let a = points.row(i);
        for j in 0..n {
            if j == i {
                continue;
            }
            let b = points.row(j);
            let d2: f64 = a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum();
            dist_idx.push((d2, j));
        }
        dist_idx.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in dist_idx.iter().take(k) {
            edges.push((i.min(j), i.max(j)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Graph::new(n, edges)
}

/// Sparse symmetric GCN propagation operator
/// `P = D^{-1/2} (A + I) D^{-1/2}`, the identity minus the normalized graph
/// Laplacian with one self-loop per node.
#[derive(Clone, Debug)]
pub struct PropagationMatrix {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl PropagationMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Nonzero entries of row `u`, sorted by column (diagonal included).
    pub fn row(&self, u: usize) -> &[(usize, f64)] {
        &self.rows[u]
    }

    /// Applies the operator to a feature matrix: `P f`.
    pub fn apply(&self, f: &FeatureMatrix) -> Result<FeatureMatrix> {
        if f.rows() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "propagation matrix is {}x{} but features have {} rows",
                self.n,
                self.n,
                f.rows()
            )));
        }
        let c = f.cols();
        let mut out = FeatureMatrix::zeros(self.n, c);
        for u in 0..self.n {
            let dst = out.row_mut(u);
            for &(v, w) in &self.rows[u] {
                let src = f.row(v);
                for ch in 0..c {
                    dst[ch] += w * src[ch];
                }
            }
        }
        Ok(out)
    }

    /// Applies the operator `steps` times.
    pub fn apply_n(&self, f: &FeatureMatrix, steps: usize) -> Result<FeatureMatrix> {
        let mut cur = f.clone();
        for _ in 0..steps {
            cur = self.apply(&cur)?;
        }
        Ok(cur)
    }
}

/// Builds the GCN propagation operator for `g`. Entry `(i, j)` is
/// `1 / sqrt(d_i d_j)` with degrees counted after adding one self-loop per
/// node, so the matrix is exactly symmetric entry by entry.
pub fn gcn_propagation(g: &Graph) -> PropagationMatrix {
    let n = g.n();
    let deg: Vec<f64> = (0..n).map(|u| (g.degree(u) + 1) as f64).collect();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    for u in 0..n {
        let mut row = Vec::with_capacity(g.degree(u) + 1);
        let mut pushed_diag = false;
        for &v in g.neighbors(u) {
            if !pushed_diag && v > u {
                row.push((u, 1.0 / deg[u]));
                pushed_diag = true;
            }
            row.push((v, 1.0 / (deg[u] * deg[v]).sqrt()));
        }
        if !pushed_diag {
            row.push((u, 1.0 / deg[u]));
        }
        rows.push(row);
    }
    PropagationMatrix { n, rows }
}
