//! Uniform quantization-aware operators: clip, scale, round, with a
//! learnable clipping parameter per tensor and straight-through clipping
//! gradients.
//!
//! Signed quantization (weights, wavelet coefficients) clips to
//! `[-clip, clip * r_{b-1}]` and rounds on a `2^{b-1}`-step grid; unsigned
//! quantization (post-ReLU activations) clips to `[0, clip * r_b]` on a
//! `2^b`-step grid, where `r_b = (2^b - 1) / 2^b`.

use crate::{Error, FeatureMatrix, Result};

/// Epsilon added to the standard deviation in weight normalization.
pub const WEIGHT_NORM_EPS: f64 = 1e-6;

/// `r_b = (2^b - 1) / 2^b`, the top of the representable range.
pub fn ratio(bits: u32) -> f64 {
    debug_assert!(bits <= 52);
    let denom = (1u64 << bits) as f64;
    (denom - 1.0) / denom
}

/// Rounds every entry to the nearest multiple of `2^{-bits}`, half away
/// from zero. Inputs are expected in `[-1, 1]` or `[0, 1]`.
pub fn q_round(x: &FeatureMatrix, bits: u32) -> FeatureMatrix {
    let scale = (1u64 << bits) as f64;
    x.map(|v| (v * scale).round() / scale)
}

/// Scalar form of [`q_round`].
pub fn q_round_scalar(x: f64, bits: u32) -> f64 {
    let scale = (1u64 << bits) as f64;
    (x * scale).round() / scale
}

/// A uniform quantizer: bit width, signedness, and the clipping parameter.
/// Signed quantizers spend one bit on sign, leaving `b - 1` fractional bits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quantizer {
    bits: u32,
    signed: bool,
    clip: f64,
}

impl Quantizer {
    pub fn signed(bits: u32, clip: f64) -> Result<Self> {
        Self::new(bits, true, clip)
    }

    pub fn unsigned(bits: u32, clip: f64) -> Result<Self> {
        Self::new(bits, false, clip)
    }

    fn new(bits: u32, signed: bool, clip: f64) -> Result<Self> {
        if !(1..=32).contains(&bits) {
            return Err(Error::InvalidArgument(format!(
                "bit width {bits} out of [1, 32]"
            )));
        }
        if !(clip > 0.0 && clip.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "clipping parameter {clip} must be positive"
            )));
        }
        Ok(Self { bits, signed, clip })
    }

    /// Clip initialized to `max |t|` (floored away from zero).
    pub fn calibrated(bits: u32, signed: bool, t: &FeatureMatrix) -> Result<Self> {
        Self::new(bits, signed, t.max_abs().max(1e-8))
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn clip(&self) -> f64 {
        self.clip
    }

    pub fn set_clip(&mut self, clip: f64) {
        self.clip = clip.max(1e-12);
    }

    /// Fractional bits of the rounding grid: `b - 1` signed, `b` unsigned.
    fn frac_bits(&self) -> u32 {
        if self.signed {
            self.bits - 1
        } else {
            self.bits
        }
    }

    /// `r` for this quantizer's grid.
    pub fn r(&self) -> f64 {
        ratio(self.frac_bits())
    }

    /// Quantization step in real units: `clip * 2^{-frac_bits}`.
    pub fn step(&self) -> f64 {
        self.clip / (1u64 << self.frac_bits()) as f64
    }
}

/// Integer tensor plus the scale that dequantizes it. The fake-quantized
/// real matrix equals `scale * values` entry by entry.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizedTensor {
    values: Vec<i64>,
    rows: usize,
    cols: usize,
    scale: f64,
    bits: u32,
    signed: bool,
}

impl QuantizedTensor {
    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn dequantize(&self) -> FeatureMatrix {
        let data: Vec<f64> = self.values.iter().map(|&q| self.scale * q as f64).collect();
        FeatureMatrix::from_vec(self.rows, self.cols, data).expect("finite by construction")
    }
}

fn fake_quantize(t: &FeatureMatrix, q: &Quantizer) -> (FeatureMatrix, QuantizedTensor) {
    let r = q.r();
    let lo = if q.signed { -1.0 } else { 0.0 };
    let fac = (1u64 << q.frac_bits()) as f64;
    let scale = q.clip / fac; // exact: division by a power of two
    let values: Vec<i64> = t
        .data()
        .iter()
        .map(|&v| ((v / q.clip).clamp(lo, r) * fac).round() as i64)
        .collect();
    let fake = FeatureMatrix::from_vec(
        t.rows(),
        t.cols(),
        values.iter().map(|&qi| scale * qi as f64).collect(),
    )
    .expect("finite by construction");
    let qt = QuantizedTensor {
        values,
        rows: t.rows(),
        cols: t.cols(),
        scale,
        bits: q.bits,
        signed: q.signed,
    };
    (fake, qt)
}

/// Signed fake quantization `clip * Q_{b-1}(clamp(W / clip, -1, r_{b-1}))`.
/// Returns the fake-quantized matrix and its integer form; the two are
/// bit-for-bit equal after dequantization.
pub fn quantize_weights(
    w: &FeatureMatrix,
    q: &Quantizer,
) -> Result<(FeatureMatrix, QuantizedTensor)> {
    if !q.signed {
        return Err(Error::InvalidArgument(
            "weight quantization requires a signed quantizer".into(),
        ));
    }
    Ok(fake_quantize(w, q))
}

/// Unsigned fake quantization `clip * Q_b(clamp(X / clip, 0, r_b))` for
/// non-negative activations.
pub fn quantize_activations(
    x: &FeatureMatrix,
    q: &Quantizer,
) -> Result<(FeatureMatrix, QuantizedTensor)> {
    if q.signed {
        return Err(Error::InvalidArgument(
            "activation quantization requires an unsigned quantizer".into(),
        ));
    }
    if x.data().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidArgument(
            "activation quantization requires non-negative inputs".into(),
        ));
    }
    Ok(fake_quantize(x, q))
}

/// Signed fake quantization for tensors that are activations structurally
/// but carry sign (wavelet coefficient blocks).
pub fn quantize_coefficients(
    t: &FeatureMatrix,
    q: &Quantizer,
) -> Result<(FeatureMatrix, QuantizedTensor)> {
    if !q.signed {
        return Err(Error::InvalidArgument(
            "coefficient quantization uses the signed scheme".into(),
        ));
    }
    Ok(fake_quantize(t, q))
}

/// Per-entry contribution of the quantized tensor to the clipping-parameter
/// gradient (signed case):
/// `-1` below the clip, `r_{b-1}` above it, `(W_b - W) / clip` inside.
/// Callers sum the contributions (weighted by the incoming gradient) to
/// update the clip.
pub fn clip_gradient(w: &FeatureMatrix, q: &Quantizer) -> Result<FeatureMatrix> {
    if !q.signed {
        return Err(Error::InvalidArgument(
            "clip_gradient expects a signed quantizer".into(),
        ));
    }
    let r = q.r();
    let (fake, _) = fake_quantize(w, q);
    let data: Vec<f64> = w
        .data()
        .iter()
        .zip(fake.data())
        .map(|(&v, &vb)| {
            if v <= -q.clip {
                -1.0
            } else if v >= q.clip * r {
                r
            } else {
                (vb - v) / q.clip
            }
        })
        .collect();
    FeatureMatrix::from_vec(w.rows(), w.cols(), data)
}

/// Unsigned analog of [`clip_gradient`] for the activation range
/// `[0, clip * r_b]`: `0` at or below zero, `r_b` above the clip,
/// `(X_b - X) / clip` inside.
pub fn clip_gradient_unsigned(x: &FeatureMatrix, q: &Quantizer) -> Result<FeatureMatrix> {
    if q.signed {
        return Err(Error::InvalidArgument(
            "clip_gradient_unsigned expects an unsigned quantizer".into(),
        ));
    }
    let r = q.r();
    let (fake, _) = fake_quantize(x, q);
    let data: Vec<f64> = x
        .data()
        .iter()
        .zip(fake.data())
        .map(|(&v, &vb)| {
            if v <= 0.0 {
                0.0
            } else if v >= q.clip * r {
                r
            } else {
                (vb - v) / q.clip
            }
        })
        .collect();
    FeatureMatrix::from_vec(x.rows(), x.cols(), data)
}

/// Mask of entries strictly inside the clipping range; the straight-through
/// estimator passes gradients only through these.
pub fn in_range_mask(t: &FeatureMatrix, q: &Quantizer) -> FeatureMatrix {
    let r = q.r();
    let lo = if q.signed { -q.clip } else { 0.0 };
    let hi = q.clip * r;
    t.map(|v| if v > lo && v < hi { 1.0 } else { 0.0 })
}

/// Normalizes a weight tensor to zero mean and unit standard deviation:
/// `(W - mean) / (std + 1e-6)`, population statistics.
pub fn weight_normalize(w: &FeatureMatrix) -> FeatureMatrix {
    let mu = w.mean();
    let var = w.data().iter().map(|&v| (v - mu) * (v - mu)).sum::<f64>() / w.data().len() as f64;
    let denom = var.sqrt() + WEIGHT_NORM_EPS;
    w.map(|v| (v - mu) / denom)
}

/// Gradient of `weight_normalize` with respect to its input, given the
/// gradient at its output.
pub fn weight_normalize_backward(w: &FeatureMatrix, grad_out: &FeatureMatrix) -> FeatureMatrix {
    let n = w.data().len() as f64;
    let mu = w.mean();
    let var = w.data().iter().map(|&v| (v - mu) * (v - mu)).sum::<f64>() / n;
    let sigma = var.sqrt();
    let denom = sigma + WEIGHT_NORM_EPS;
    let g_mean = grad_out.mean();
    // d sigma / d w_m = (w_m - mu) / (n sigma); guard the constant case.
    let g_dot_centered: f64 = grad_out
        .data()
        .iter()
        .zip(w.data())
        .map(|(&g, &v)| g * (v - mu))
        .sum();
    let mut out = FeatureMatrix::zeros(w.rows(), w.cols());
    for idx in 0..w.data().len() {
        let g = grad_out.data()[idx];
        let centered = w.data()[idx] - mu;
        let mut val = (g - g_mean) / denom;
        if sigma > 0.0 {
            val -= g_dot_centered * centered / (denom * denom * n * sigma);
        }
        out.data_mut()[idx] = val;
    }
    out
}
