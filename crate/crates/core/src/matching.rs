//! Pair-graph construction: greedy matching on feature dissimilarity plus
//! coarsening for the next transform level.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, FeatureMatrix, Graph, Result};

/// A near-perfect matching of the graph's nodes. Every node appears in
/// exactly one pair or as the single orphan (present iff the node count is
/// odd). `parent` maps each fine node to its coarse index: pair `k` maps to
/// `k`, the orphan to `pairs.len()`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairGraph {
    n: usize,
    pairs: Vec<(usize, usize)>,
    orphan: Option<usize>,
    parent: Vec<usize>,
    edge_pairs: usize,
}

impl PairGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Matched pairs `(i, j)` with `i < j`, in acceptance order.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn orphan(&self) -> Option<usize> {
        self.orphan
    }

    /// Coarse index of a fine node.
    pub fn parent(&self, node: usize) -> usize {
        self.parent[node]
    }

    /// Coarse node count: one per pair plus one for the orphan.
    pub fn coarse_n(&self) -> usize {
        self.pairs.len() + usize::from(self.orphan.is_some())
    }

    /// Number of pairs produced by the edge-scan phase (the rest were
    /// leftover nodes paired randomly, ignoring adjacency).
    pub fn edge_pairs(&self) -> usize {
        self.edge_pairs
    }

    /// Builds a pair graph directly from a pair list (used when reloading a
    /// serialized hierarchy).
    pub fn from_parts(n: usize, pairs: Vec<(usize, usize)>, orphan: Option<usize>) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut mark = |node: usize| -> Result<()> {
            if node >= n {
                return Err(Error::InvalidArgument(format!(
                    "pair node {node} out of range for n = {n}"
                )));
            }
            if seen[node] {
                return Err(Error::InvalidArgument(format!(
                    "node {node} appears twice in the pairing"
                )));
            }
            seen[node] = true;
            Ok(())
        };
        for &(i, j) in &pairs {
            if i >= j {
                return Err(Error::InvalidArgument(format!(
                    "pair ({i}, {j}) not ordered"
                )));
            }
            mark(i)?;
            mark(j)?;
        }
        if let Some(o) = orphan {
            mark(o)?;
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidArgument(
                "pairing does not cover all nodes".into(),
            ));
        }
        let edge_pairs = pairs.len();
        Ok(Self::assemble(n, pairs, orphan, edge_pairs))
    }

    fn assemble(
        n: usize,
        pairs: Vec<(usize, usize)>,
        orphan: Option<usize>,
        edge_pairs: usize,
    ) -> Self {
        let mut parent = vec![0usize; n];
        for (k, &(i, j)) in pairs.iter().enumerate() {
            parent[i] = k;
            parent[j] = k;
        }
        if let Some(o) = orphan {
            parent[o] = pairs.len();
        }
        Self {
            n,
            pairs,
            orphan,
            parent,
            edge_pairs,
        }
    }
}

/// Per-edge dissimilarity `w_ij = ||f_i - f_j||_2`, in the graph's edge
/// order.
pub fn edge_dissimilarity(g: &Graph, f: &FeatureMatrix) -> Result<Vec<f64>> {
    if f.rows() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} nodes but features have {} rows",
            g.n(),
            f.rows()
        )));
    }
    Ok(g.edges()
        .iter()
        .map(|&(u, v)| {
            f.row(u)
                .iter()
                .zip(f.row(v))
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .collect())
}

/// Greedy matching: edges are scanned in ascending weight order (ties broken
/// lexicographically) and accepted iff both endpoints are still unmatched.
/// Leftover nodes are then paired uniformly at random (seeded), ignoring
/// adjacency; with an odd node count one node remains as the orphan.
pub fn greedy_match(g: &Graph, weights: &[f64], seed: u64) -> Result<PairGraph> {
    if weights.len() != g.edge_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} edges",
            weights.len(),
            g.edge_count()
        )));
    }
    let n = g.n();
    let mut order: Vec<usize> = (0..g.edge_count()).collect();
    order.sort_unstable_by(|&a, &b| {
        weights[a]
            .total_cmp(&weights[b])
            .then_with(|| g.edges()[a].cmp(&g.edges()[b]))
    });

    let mut matched = vec![false; n];
    let mut pairs = Vec::with_capacity(n / 2);
    for e in order {
        let (u, v) = g.edges()[e];
        if !matched[u] && !matched[v] {
            matched[u] = true;
            matched[v] = true;
            pairs.push((u, v));
        }
    }
    let edge_pairs = pairs.len();

    let mut leftover: Vec<usize> = (0..n).filter(|&u| !matched[u]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    leftover.shuffle(&mut rng);
    let mut it = leftover.chunks_exact(2);
    for pair in &mut it {
        pairs.push((pair[0].min(pair[1]), pair[0].max(pair[1])));
    }
    let orphan = it.remainder().first().copied();

    Ok(PairGraph::assemble(n, pairs, orphan, edge_pairs))
}

/// Contracts each pair (and the orphan) to a coarse node. Coarse edges
/// connect supernodes joined by any fine edge; self-loops are dropped and
/// duplicates merged.
pub fn coarsen_graph(g: &Graph, pg: &PairGraph) -> Graph {
    let mut coarse_edges: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .filter_map(|&(u, v)| {
            let (a, b) = (pg.parent(u), pg.parent(v));
            (a != b).then(|| (a.min(b), a.max(b)))
        })
        .collect();
    coarse_edges.sort_unstable();
    coarse_edges.dedup();
    Graph::new(pg.coarse_n(), coarse_edges).expect("contraction preserves graph invariants")
}
