//! Multi-level graph Haar transform built on pair-graphs.
//!
//! Each level maps paired node values `(a, b)` to a detail coefficient
//! `(a - b) / sqrt(2)` and an average `(a + b) / sqrt(2)`; an orphan node
//! passes through unscaled. The per-level operator is orthogonal, so the
//! full transform is too: the inverse is its transpose. Apart from the
//! final `1/sqrt(2)` scale the transform uses additions and subtractions
//! only.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::matching::{coarsen_graph, edge_dissimilarity, greedy_match, PairGraph};
use crate::{Error, FeatureMatrix, Graph, Result};

/// One transform level: the pairing of the fine nodes and the resulting
/// coarse node count.
#[derive(Clone, Debug)]
pub struct HaarLevel {
    pair_graph: PairGraph,
    n_fine: usize,
    n_coarse: usize,
}

impl HaarLevel {
    pub fn pair_graph(&self) -> &PairGraph {
        &self.pair_graph
    }

    pub fn n_fine(&self) -> usize {
        self.n_fine
    }

    pub fn n_coarse(&self) -> usize {
        self.n_coarse
    }
}

/// Row layout of the transformed matrix: one detail block per level followed
/// by the final average block. Offsets index coefficient rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    n: usize,
    detail_blocks: Vec<(usize, usize)>,
    final_block: (usize, usize),
}

impl BlockLayout {
    /// Total coefficient rows (equals the original node count).
    pub fn n(&self) -> usize {
        self.n
    }

    /// `(offset, rows)` of each level's detail block.
    pub fn detail_blocks(&self) -> &[(usize, usize)] {
        &self.detail_blocks
    }

    /// `(offset, rows)` of the final average block.
    pub fn final_block(&self) -> (usize, usize) {
        self.final_block
    }
}

/// The full multi-level transform: pair graphs for every level plus the
/// coefficient layout. Immutable once built; `forward` and `inverse` are
/// pure.
#[derive(Clone, Debug)]
pub struct HaarHierarchy {
    levels: Vec<HaarLevel>,
    layout: BlockLayout,
}

impl HaarHierarchy {
    /// Original (finest) node count.
    pub fn n(&self) -> usize {
        self.layout.n
    }

    pub fn levels(&self) -> &[HaarLevel] {
        &self.levels
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    /// Assembles a hierarchy from per-level pair graphs (used when
    /// reloading a serialized hierarchy).
    pub fn from_levels(n: usize, pair_graphs: Vec<PairGraph>) -> Result<Self> {
        let mut n_fine = n;
        let mut levels = Vec::with_capacity(pair_graphs.len());
        for pg in pair_graphs {
            if pg.n() != n_fine {
                return Err(Error::DimensionMismatch(format!(
                    "level expects {} fine nodes, pairing covers {}",
                    n_fine,
                    pg.n()
                )));
            }
            let n_coarse = pg.coarse_n();
            levels.push(HaarLevel {
                pair_graph: pg,
                n_fine,
                n_coarse,
            });
            n_fine = n_coarse;
        }
        Ok(Self {
            layout: layout_for(n, &levels),
            levels,
        })
    }

    /// Forward transform: stacks every level's detail coefficients followed
    /// by the final averages, in layout order.
    pub fn forward(&self, f: &FeatureMatrix) -> Result<FeatureMatrix> {
        if f.rows() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "hierarchy covers {} nodes, features have {} rows",
                self.n(),
                f.rows()
            )));
        }
        let c = f.cols();
        let mut out = FeatureMatrix::zeros(self.n(), c);
        let mut cur = f.clone();
        for (level, &(offset, _)) in self.levels.iter().zip(&self.layout.detail_blocks) {
            let pg = &level.pair_graph;
            let mut next = FeatureMatrix::zeros(level.n_coarse, c);
            for (k, &(i, j)) in pg.pairs().iter().enumerate() {
                let (a, b) = (cur.row(i), cur.row(j));
                let detail = out.row_mut(offset + k);
                for ch in 0..c {
                    detail[ch] = (a[ch] - b[ch]) * FRAC_1_SQRT_2;
                }
                let avg = next.row_mut(k);
                for ch in 0..c {
                    avg[ch] = (a[ch] + b[ch]) * FRAC_1_SQRT_2;
                }
            }
            if let Some(o) = pg.orphan() {
                next.row_mut(pg.pairs().len()).copy_from_slice(cur.row(o));
            }
            cur = next;
        }
        let (final_offset, final_rows) = self.layout.final_block;
        debug_assert_eq!(final_rows, cur.rows());
        for r in 0..final_rows {
            out.row_mut(final_offset + r).copy_from_slice(cur.row(r));
        }
        Ok(out)
    }

    /// Inverse transform (the transpose of the forward operator): rebuilds
    /// node values coarse-to-fine from averages and details.
    pub fn inverse(&self, p: &FeatureMatrix) -> Result<FeatureMatrix> {
        if p.rows() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "hierarchy covers {} coefficient rows, input has {}",
                self.n(),
                p.rows()
            )));
        }
        let c = p.cols();
        let (final_offset, final_rows) = self.layout.final_block;
        let mut cur = FeatureMatrix::zeros(final_rows, c);
        for r in 0..final_rows {
            cur.row_mut(r).copy_from_slice(p.row(final_offset + r));
        }
        for (level, &(offset, _)) in self.levels.iter().zip(&self.layout.detail_blocks).rev() {
            let pg = &level.pair_graph;
            let mut fine = FeatureMatrix::zeros(level.n_fine, c);
            for (k, &(i, j)) in pg.pairs().iter().enumerate() {
                let detail = p.row(offset + k);
                let avg = cur.row(k);
                for ch in 0..c {
                    fine.set(i, ch, (avg[ch] + detail[ch]) * FRAC_1_SQRT_2);
                    fine.set(j, ch, (avg[ch] - detail[ch]) * FRAC_1_SQRT_2);
                }
            }
            if let Some(o) = pg.orphan() {
                fine.row_mut(o).copy_from_slice(cur.row(pg.pairs().len()));
            }
            cur = fine;
        }
        Ok(cur)
    }
}

fn layout_for(n: usize, levels: &[HaarLevel]) -> BlockLayout {
    let mut offset = 0;
    let mut detail_blocks = Vec::with_capacity(levels.len());
    for level in levels {
        let rows = level.pair_graph.pairs().len();
        detail_blocks.push((offset, rows));
        offset += rows;
    }
    let final_rows = levels.last().map_or(n, |l| l.n_coarse);
    debug_assert_eq!(offset + final_rows, n);
    BlockLayout {
        n,
        detail_blocks,
        final_block: (offset, final_rows),
    }
}

/// Builds an `levels`-deep hierarchy. Each level's matching minimizes the
/// dissimilarity of the current averaged features; the coarse graph contracts
/// the pairs. Levels stop early once a single node remains.
pub fn build_hierarchy(
    g: &Graph,
    f: &FeatureMatrix,
    levels: usize,
    seed: u64,
) -> Result<HaarHierarchy> {
    if levels < 1 {
        return Err(Error::InvalidArgument(
            "hierarchy needs at least one level".into(),
        ));
    }
    if f.rows() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} nodes but features have {} rows",
            g.n(),
            f.rows()
        )));
    }
    let c = f.cols();
    let mut built = Vec::new();
    let mut cur_graph = g.clone();
    let mut cur_f = f.clone();
    for l in 0..levels {
        let n_fine = cur_graph.n();
        if n_fine <= 1 {
            break;
        }
        let weights = edge_dissimilarity(&cur_graph, &cur_f)?;
        let pg = greedy_match(&cur_graph, &weights, level_seed(seed, l))?;
        let n_coarse = pg.coarse_n();

        let mut next_f = FeatureMatrix::zeros(n_coarse, c);
        for (k, &(i, j)) in pg.pairs().iter().enumerate() {
            let (a, b) = (cur_f.row(i), cur_f.row(j));
            let avg = next_f.row_mut(k);
            for ch in 0..c {
                avg[ch] = (a[ch] + b[ch]) * FRAC_1_SQRT_2;
            }
        }
        if let Some(o) = pg.orphan() {
            next_f
                .row_mut(pg.pairs().len())
                .copy_from_slice(cur_f.row(o));
        }
        let next_graph = coarsen_graph(&cur_graph, &pg);

        built.push(HaarLevel {
            pair_graph: pg,
            n_fine,
            n_coarse,
        });
        cur_graph = next_graph;
        cur_f = next_f;
    }
    Ok(HaarHierarchy {
        layout: layout_for(g.n(), &built),
        levels: built,
    })
}

fn level_seed(seed: u64, level: usize) -> u64 {
    seed.wrapping_add((level as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}
