//! Joint-channel shrinkage: keep the transformed coefficient rows with the
//! largest norm across all channels, shared by every channel, so the kept
//! block stays a dense 2D tensor.

use crate::haar::HaarHierarchy;
use crate::{Error, FeatureMatrix, Result};

/// Norm used to rank coefficient rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelectionNorm {
    L2,
    L1,
}

/// The selection operator: the sorted set of kept coefficient-row indices
/// for a compression fraction `alpha`. One shared index list for all
/// channels.
#[derive(Clone, Debug, PartialEq)]
pub struct ShrinkagePlan {
    alpha: f64,
    kept: Vec<usize>,
    n: usize,
}

impl ShrinkagePlan {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Kept row indices, strictly increasing.
    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    /// Total coefficient rows the plan selects from.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn from_indices(n: usize, kept: Vec<usize>) -> Result<Self> {
        if kept.is_empty() || kept.len() > n {
            return Err(Error::InvalidArgument(format!(
                "kept list of {} rows out of {} total",
                kept.len(),
                n
            )));
        }
        if kept.windows(2).any(|w| w[0] >= w[1]) || *kept.last().unwrap() >= n {
            return Err(Error::InvalidArgument(
                "kept indices must be strictly increasing and in range".into(),
            ));
        }
        let alpha = kept.len() as f64 / n as f64;
        Ok(Self { alpha, kept, n })
    }
}

/// Dense matrix of the kept coefficient rows together with the plan that
/// selected them.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressedSignal {
    dense: FeatureMatrix,
    plan: ShrinkagePlan,
}

impl CompressedSignal {
    pub fn dense(&self) -> &FeatureMatrix {
        &self.dense
    }

    pub fn plan(&self) -> &ShrinkagePlan {
        &self.plan
    }
}

/// Number of rows kept at fraction `alpha` out of `n`.
pub fn kept_rows(n: usize, alpha: f64) -> usize {
    ((alpha * n as f64).ceil() as usize).min(n)
}

/// Selects the `ceil(alpha * n)` rows with the largest l2 norm across all
/// channels; boundary ties go to the lower row index.
pub fn select_topk(p: &FeatureMatrix, alpha: f64) -> Result<ShrinkagePlan> {
    select_topk_with(p, alpha, SelectionNorm::L2)
}

/// `select_topk` with an explicit row norm.
pub fn select_topk_with(
    p: &FeatureMatrix,
    alpha: f64,
    norm: SelectionNorm,
) -> Result<ShrinkagePlan> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha = {alpha} out of (0, 1]"
        )));
    }
    let n = p.rows();
    let norms: Vec<f64> = (0..n)
        .map(|r| {
            let row = p.row(r);
            match norm {
                SelectionNorm::L2 => row.iter().map(|v| v * v).sum::<f64>().sqrt(),
                SelectionNorm::L1 => row.iter().map(|v| v.abs()).sum::<f64>(),
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = order.into_iter().take(kept_rows(n, alpha)).collect();
    kept.sort_unstable();
    Ok(ShrinkagePlan { alpha, kept, n })
}

/// Gathers the kept rows into a dense block (the operator `T`).
pub fn gather(p: &FeatureMatrix, plan: &ShrinkagePlan) -> Result<CompressedSignal> {
    if p.rows() != plan.n {
        return Err(Error::DimensionMismatch(format!(
            "plan covers {} rows, input has {}",
            plan.n,
            p.rows()
        )));
    }
    let mut dense = FeatureMatrix::zeros(plan.kept.len(), p.cols());
    for (r, &src) in plan.kept.iter().enumerate() {
        dense.row_mut(r).copy_from_slice(p.row(src));
    }
    Ok(CompressedSignal {
        dense,
        plan: plan.clone(),
    })
}

/// Zero-fills back to the full coefficient matrix (the operator `T^T`).
pub fn scatter(cs: &CompressedSignal) -> FeatureMatrix {
    scatter_with(&cs.dense, &cs.plan).expect("plan matches its own dense block")
}

/// [`scatter`] for a dense block paired with an external plan.
pub fn scatter_with(dense: &FeatureMatrix, plan: &ShrinkagePlan) -> Result<FeatureMatrix> {
    if dense.rows() != plan.kept.len() {
        return Err(Error::DimensionMismatch(format!(
            "dense block has {} rows, plan keeps {}",
            dense.rows(),
            plan.kept.len()
        )));
    }
    let mut out = FeatureMatrix::zeros(plan.n, dense.cols());
    for (r, &dst) in plan.kept.iter().enumerate() {
        out.row_mut(dst).copy_from_slice(dense.row(r));
    }
    Ok(out)
}

/// Full compress/reconstruct composition `W^T T^T T W f` plus its mean
/// square error against the input, `||f - out||^2 / (n c)`.
pub fn compress_reconstruct(
    h: &HaarHierarchy,
    f: &FeatureMatrix,
    alpha: f64,
) -> Result<(FeatureMatrix, f64)> {
    let p = h.forward(f)?;
    let plan = select_topk(&p, alpha)?;
    let cs = gather(&p, &plan)?;
    let out = h.inverse(&scatter(&cs))?;
    let mse = mean_square_error(f, &out);
    Ok((out, mse))
}

/// `||a - b||_F^2 / (rows * cols)`.
pub fn mean_square_error(a: &FeatureMatrix, b: &FeatureMatrix) -> f64 {
    assert_eq!(a.rows(), b.rows());
    assert_eq!(a.cols(), b.cols());
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum();
    sum / (a.rows() * a.cols()) as f64
}
