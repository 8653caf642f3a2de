//! The MSE-vs-compression experiment and the activation-bandwidth
//! accounting table.
//!
//! The sweep measures reconstruction MSE at compression ratios `2^q` for
//! q = 1..7 under five schemes: uniform quantization of the raw features at
//! the equivalent bit budget (omitted once the budget drops below one bit),
//! Haar shrinkage with joint and with per-channel selection, and both Haar
//! schemes with 8-bit coefficient quantization on top.

use std::fmt::Write as _;

use crate::haar::{build_hierarchy, HaarHierarchy};
use crate::layers::count_activation_compression;
use crate::model::{LayerKind, Model};
use crate::quant::{quantize_coefficients, quantize_weights, Quantizer};
use crate::shrinkage::{
    compress_reconstruct, gather, kept_rows, mean_square_error, scatter, select_topk,
};
use crate::{Error, FeatureMatrix, Graph, Result};

pub const SCHEME_UNIFORM: &str = "uniform-quant";
pub const SCHEME_JOINT: &str = "haar-joint";
pub const SCHEME_INDIVIDUAL: &str = "haar-individual";
pub const SCHEME_JOINT_8BIT: &str = "haar-joint+8bit";
pub const SCHEME_INDIVIDUAL_8BIT: &str = "haar-individual+8bit";

/// One sweep measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub scheme: &'static str,
    pub ratio: u32,
    pub mse: f64,
}

/// Per-channel top-k shrinkage: each channel keeps its own `k` largest
/// magnitudes (ties to the lower row). More accurate than the joint scheme
/// but needs one index list per channel; kept as the comparison arm.
pub fn per_channel_shrink(p: &FeatureMatrix, alpha: f64) -> Result<FeatureMatrix> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha = {alpha} out of (0, 1]"
        )));
    }
    let n = p.rows();
    let k = kept_rows(n, alpha);
    let mut out = FeatureMatrix::zeros(n, p.cols());
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for c in 0..p.cols() {
        order.clear();
        order.extend(0..n);
        order.sort_unstable_by(|&a, &b| {
            p.get(b, c)
                .abs()
                .total_cmp(&p.get(a, c).abs())
                .then(a.cmp(&b))
        });
        for &r in order.iter().take(k) {
            out.set(r, c, p.get(r, c));
        }
    }
    Ok(out)
}

fn signed_fake_quant(t: &FeatureMatrix, bits: u32) -> Result<FeatureMatrix> {
    let clip = t.max_abs().max(1e-12);
    let q = Quantizer::signed(bits, clip)?;
    Ok(quantize_weights(t, &q)?.0)
}

fn coeff_8bit(t: &FeatureMatrix) -> Result<FeatureMatrix> {
    let clip = t.max_abs().max(1e-12);
    let q = Quantizer::signed(8, clip)?;
    Ok(quantize_coefficients(t, &q)?.0)
}

/// The four Haar measurements at one ratio on one hierarchy.
pub fn haar_rows_at(h: &HaarHierarchy, f: &FeatureMatrix, ratio: u32) -> Result<[SweepRow; 4]> {
    let alpha = 1.0 / ratio as f64;
    let p = h.forward(f)?;

    let (_, joint_mse) = compress_reconstruct(h, f, alpha)?;
    let plan = select_topk(&p, alpha)?;
    let kept = scatter(&gather(&p, &plan)?);
    let joint8 = mean_square_error(f, &h.inverse(&coeff_8bit(&kept)?)?);

    let masked = per_channel_shrink(&p, alpha)?;
    let indiv = mean_square_error(f, &h.inverse(&masked)?);
    let indiv8 = mean_square_error(f, &h.inverse(&coeff_8bit(&masked)?)?);

    Ok([
        SweepRow {
            scheme: SCHEME_JOINT,
            ratio,
            mse: joint_mse,
        },
        SweepRow {
            scheme: SCHEME_JOINT_8BIT,
            ratio,
            mse: joint8,
        },
        SweepRow {
            scheme: SCHEME_INDIVIDUAL,
            ratio,
            mse: indiv,
        },
        SweepRow {
            scheme: SCHEME_INDIVIDUAL_8BIT,
            ratio,
            mse: indiv8,
        },
    ])
}

/// Builds hierarchies from `f` and sweeps ratios `x2..x128`. The transform
/// for ratio `2^q` is at least `q` levels deep (a shallower transform's
/// final average block alone would outgrow the keep budget, making even a
/// constant signal lossy), and at least the requested level count.
pub fn mse_sweep(g: &Graph, f: &FeatureMatrix, levels: usize, seed: u64) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    let mut cache: Vec<(usize, HaarHierarchy)> = Vec::new();
    for q in 1..=7u32 {
        let ratio = 1u32 << q;
        let depth = levels.max(q as usize);
        if cache.last().map(|&(d, _)| d) != Some(depth) {
            cache.push((depth, build_hierarchy(g, f, depth, seed)?));
        }
        let h = &cache.last().unwrap().1;
        rows.extend(haar_rows_at(h, f, ratio)?);

        // Equivalent bit budget: 32 / 2^q bits; drop the arm below 1 bit.
        if 32 % ratio == 0 {
            let bits = 32 / ratio;
            let rec = signed_fake_quant(f, bits)?;
            rows.push(SweepRow {
                scheme: SCHEME_UNIFORM,
                ratio,
                mse: mean_square_error(f, &rec),
            });
        }
    }
    rows.sort_by(|a, b| a.scheme.cmp(b.scheme).then(a.ratio.cmp(&b.ratio)));
    Ok(rows)
}

/// Schema-stable CSV: `scheme,ratio,mse`.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("scheme,ratio,mse\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.scheme, r.ratio, r.mse);
    }
    out
}

/// One line of the activation-bandwidth report.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub layer: String,
    pub kind: String,
    pub c_in: usize,
    pub alpha: f64,
    pub bits_a: u32,
    pub dense_bytes: f64,
    pub compressed_bytes: f64,
    pub ratio: f64,
}

/// Activation bytes moved per layer on an `n`-node graph: the dense 32-bit
/// baseline against the compressed path (`ceil(alpha n)` rows at `bits_a`),
/// with the exact ratio `(32 / bits_a) / alpha`.
pub fn report_compression(model: &Model, n: usize) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::with_capacity(model.layers.len() + 1);
    let mut dense_total = 0.0;
    let mut comp_total = 0.0;
    for (i, layer) in model.layers.iter().enumerate() {
        let c_in = match &layer.kind {
            LayerKind::Conv { conv }
            | LayerKind::WconvV1 { conv, .. }
            | LayerKind::Wgcnii { conv, .. } => conv.c_in(),
            LayerKind::WconvV2 { convs, .. } => convs[0].c_in(),
            LayerKind::EdgeConvCheap { k1, .. } => k1.c_in(),
        };
        let compressed = matches!(
            layer.kind,
            LayerKind::WconvV1 { .. } | LayerKind::WconvV2 { .. } | LayerKind::Wgcnii { .. }
        ) || matches!(layer.kind, LayerKind::EdgeConvCheap { wavelet: true, .. });
        let alpha = if compressed { layer.alpha } else { 1.0 };
        let rows_moved = if compressed { kept_rows(n, alpha) } else { n };
        let dense_bytes = (n * c_in * 4) as f64;
        let compressed_bytes = rows_moved as f64 * c_in as f64 * layer.bits_a as f64 / 8.0;
        let ratio = count_activation_compression(layer.bits_a, alpha)?;
        dense_total += dense_bytes;
        comp_total += compressed_bytes;
        rows.push(ReportRow {
            layer: i.to_string(),
            kind: layer.kind.name().to_string(),
            c_in,
            alpha,
            bits_a: layer.bits_a,
            dense_bytes,
            compressed_bytes,
            ratio,
        });
    }
    rows.push(ReportRow {
        layer: "total".into(),
        kind: "-".into(),
        c_in: 0,
        alpha: 0.0,
        bits_a: 0,
        dense_bytes: dense_total,
        compressed_bytes: comp_total,
        ratio: if comp_total > 0.0 {
            dense_total / comp_total
        } else {
            1.0
        },
    });
    Ok(rows)
}

/// Schema-stable CSV for the report.
pub fn report_to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("layer,kind,c_in,alpha,bits_a,dense_bytes,compressed_bytes,ratio\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.layer, r.kind, r.c_in, r.alpha, r.bits_a, r.dense_bytes, r.compressed_bytes, r.ratio
        );
    }
    out
}
