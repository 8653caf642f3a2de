//! Shared test oracles: explicit dense transform matrices and exact
//! per-level operator checks, independent of the in-place transform code.

use std::f64::consts::FRAC_1_SQRT_2;

use wavegcn::haar::{HaarHierarchy, HaarLevel};
use wavegcn::FeatureMatrix;

/// Integer sign rows of one level's gradient operator `D` (one row per
/// pair: +1 at the first node, -1 at the second) and averaging operator `A`
/// (+1 at both nodes; the orphan contributes a bare +1 row). The real
/// operators are these rows scaled by `1/sqrt(2)` (orphan rows unscaled).
pub struct LevelSigns {
    pub d_rows: Vec<Vec<i64>>,
    pub a_rows: Vec<Vec<i64>>,
    /// Parallel to `a_rows`: true for the orphan row (scale 1, not
    /// 1/sqrt(2)).
    pub a_is_orphan: Vec<bool>,
}

pub fn level_signs(level: &HaarLevel) -> LevelSigns {
    let n = level.n_fine();
    let pg = level.pair_graph();
    let mut d_rows = Vec::with_capacity(pg.pairs().len());
    let mut a_rows = Vec::with_capacity(level.n_coarse());
    let mut a_is_orphan = Vec::with_capacity(level.n_coarse());
    for &(i, j) in pg.pairs() {
        let mut d = vec![0i64; n];
        d[i] = 1;
        d[j] = -1;
        d_rows.push(d);
        let mut a = vec![0i64; n];
        a[i] = 1;
        a[j] = 1;
        a_rows.push(a);
        a_is_orphan.push(false);
    }
    if let Some(o) = pg.orphan() {
        let mut a = vec![0i64; n];
        a[o] = 1;
        a_rows.push(a);
        a_is_orphan.push(true);
    }
    LevelSigns {
        d_rows,
        a_rows,
        a_is_orphan,
    }
}

fn int_dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Exact product of two row scales: pair rows carry `1/sqrt(2)`, orphan
/// rows carry 1, and two pair scales multiply to exactly one half. Mixed
/// pair/orphan rows never share support, so their (zero) dot product makes
/// the returned scale irrelevant.
fn scale_product(a_orphan: bool, b_orphan: bool) -> f64 {
    match (a_orphan, b_orphan) {
        (true, true) => 1.0,
        (false, false) => 0.5,
        _ => FRAC_1_SQRT_2,
    }
}

impl LevelSigns {
    /// `A D^T` computed exactly (integer dots times exact scale products);
    /// must be the zero matrix.
    pub fn a_d_transpose(&self) -> Vec<Vec<f64>> {
        self.a_rows
            .iter()
            .zip(&self.a_is_orphan)
            .map(|(a, &orph)| {
                self.d_rows
                    .iter()
                    .map(|d| int_dot(a, d) as f64 * scale_product(orph, false))
                    .collect()
            })
            .collect()
    }

    /// `D D^T` computed exactly; must be the identity.
    pub fn d_gram(&self) -> Vec<Vec<f64>> {
        self.d_rows
            .iter()
            .map(|a| {
                self.d_rows
                    .iter()
                    .map(|b| int_dot(a, b) as f64 * 0.5)
                    .collect()
            })
            .collect()
    }

    /// `A A^T` computed exactly; must be the identity.
    pub fn a_gram(&self) -> Vec<Vec<f64>> {
        self.a_rows
            .iter()
            .zip(&self.a_is_orphan)
            .map(|(a, &oa)| {
                self.a_rows
                    .iter()
                    .zip(&self.a_is_orphan)
                    .map(|(b, &ob)| int_dot(a, b) as f64 * scale_product(oa, ob))
                    .collect()
            })
            .collect()
    }
}

/// Builds the explicit dense multi-level transform matrix `W` (`p = W f`)
/// row by row from the pair lists, mirroring the block layout.
pub fn dense_transform_matrix(h: &HaarHierarchy) -> FeatureMatrix {
    let n = h.n();
    let mut w = FeatureMatrix::zeros(n, n);
    // Row vectors expressing each current coarse value in the fine basis.
    let mut cur: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    for (level, &(offset, _)) in h.levels().iter().zip(h.layout().detail_blocks()) {
        let pg = level.pair_graph();
        let mut next: Vec<Vec<f64>> = Vec::with_capacity(level.n_coarse());
        for (k, &(i, j)) in pg.pairs().iter().enumerate() {
            let mut detail = vec![0.0; n];
            let mut avg = vec![0.0; n];
            for c in 0..n {
                detail[c] = (cur[i][c] - cur[j][c]) * FRAC_1_SQRT_2;
                avg[c] = (cur[i][c] + cur[j][c]) * FRAC_1_SQRT_2;
            }
            for (c, &d) in detail.iter().enumerate() {
                w.set(offset + k, c, d);
            }
            next.push(avg);
        }
        if let Some(o) = pg.orphan() {
            next.push(cur[o].clone());
        }
        cur = next;
    }
    let (final_offset, final_rows) = h.layout().final_block();
    assert_eq!(final_rows, cur.len());
    for (r, row) in cur.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            w.set(final_offset + r, c, v);
        }
    }
    w
}

pub fn max_abs_offdiag_identity(m: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for (i, row) in m.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
    }
    worst
}

pub fn max_abs(m: &[Vec<f64>]) -> f64 {
    m.iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |w, &v| w.max(v.abs()))
}
