//! Wavelet-compressed convolution layers.
//!
//! The core operation performs the 1x1 convolution on the gathered dense
//! coefficient block: `f_out = W^T T^T K T W f_in`. Because the transform
//! and shrinkage act identically on every channel they commute with the
//! channel-space convolution, so this equals convolving first and
//! compressing after -- the basis for running pre-trained weights through
//! the compressed path. The V2 form stacks several convolutions with
//! activations inside a single transform and therefore requires training
//! from scratch.

use crate::graph::gcn_propagation;
use crate::haar::{build_hierarchy, HaarHierarchy};
use crate::quant::{quantize_coefficients, Quantizer};
use crate::shrinkage::{gather, scatter_with, select_topk, ShrinkagePlan};
use crate::{Error, FeatureMatrix, Graph, Result};

/// Point-wise activation applied by the layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn apply(&self, m: &FeatureMatrix) -> FeatureMatrix {
        match self {
            Activation::Relu => m.map(|v| v.max(0.0)),
            Activation::Identity => m.clone(),
        }
    }
}

/// Symmetric neighborhood aggregation for edge convolutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregator {
    Max,
    Mean,
}

/// A 1x1 convolution: a `c_out x c_in` weight matrix applied in channel
/// space, node count unchanged.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv1x1 {
    weights: FeatureMatrix,
}

impl Conv1x1 {
    pub fn new(weights: FeatureMatrix) -> Self {
        Self { weights }
    }

    pub fn identity(c: usize) -> Self {
        let mut w = FeatureMatrix::zeros(c, c);
        for i in 0..c {
            w.set(i, i, 1.0);
        }
        Self { weights: w }
    }

    pub fn c_in(&self) -> usize {
        self.weights.cols()
    }

    pub fn c_out(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &FeatureMatrix {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut FeatureMatrix {
        &mut self.weights
    }

    pub fn apply(&self, f: &FeatureMatrix) -> Result<FeatureMatrix> {
        if f.cols() != self.c_in() {
            return Err(Error::DimensionMismatch(format!(
                "conv expects {} input channels, got {}",
                self.c_in(),
                f.cols()
            )));
        }
        f.mul_transpose(&self.weights)
    }
}

/// Channel-space matrix product `y_i = sum_j k_ij f_j`.
pub fn conv1x1(f: &FeatureMatrix, k: &Conv1x1) -> Result<FeatureMatrix> {
    k.apply(f)
}

/// A built transform/shrinkage pair: `analyze` is `T W` (returning the
/// gathered dense block), `synthesize` is `W^T T^T`. Sharing one stage
/// between operations is what makes the convolution orderings comparable.
#[derive(Clone, Debug)]
pub struct WaveletStage {
    hierarchy: HaarHierarchy,
    plan: ShrinkagePlan,
}

impl WaveletStage {
    /// Builds hierarchy and plan from the features entering the transform.
    pub fn build(
        g: &Graph,
        f: &FeatureMatrix,
        levels: usize,
        alpha: f64,
        seed: u64,
    ) -> Result<Self> {
        let hierarchy = build_hierarchy(g, f, levels, seed)?;
        let plan = select_topk(&hierarchy.forward(f)?, alpha)?;
        Ok(Self { hierarchy, plan })
    }

    pub fn from_parts(hierarchy: HaarHierarchy, plan: ShrinkagePlan) -> Result<Self> {
        if plan.n() != hierarchy.n() {
            return Err(Error::DimensionMismatch(format!(
                "plan covers {} rows, hierarchy {}",
                plan.n(),
                hierarchy.n()
            )));
        }
        Ok(Self { hierarchy, plan })
    }

    pub fn hierarchy(&self) -> &HaarHierarchy {
        &self.hierarchy
    }

    pub fn plan(&self) -> &ShrinkagePlan {
        &self.plan
    }

    /// `T W f`: transform then gather the kept rows.
    pub fn analyze(&self, f: &FeatureMatrix) -> Result<FeatureMatrix> {
        Ok(gather(&self.hierarchy.forward(f)?, &self.plan)?
            .dense()
            .clone())
    }

    /// `W^T T^T d`: zero-fill the kept rows and invert the transform.
    pub fn synthesize(&self, dense: &FeatureMatrix) -> Result<FeatureMatrix> {
        self.hierarchy.inverse(&scatter_with(dense, &self.plan)?)
    }
}

/// V1 applies one convolution per transform; V2 chains several convolutions
/// with activations inside a single transform.
#[derive(Clone, Debug)]
pub enum ConvVariant {
    V1(Conv1x1),
    V2(Vec<Conv1x1>),
}

/// A wavelet-compressed convolution layer.
#[derive(Clone, Debug)]
pub struct WaveletConvLayer {
    pub conv: ConvVariant,
    pub alpha: f64,
    pub levels: usize,
    /// Signed quantizer applied to the compressed coefficient block before
    /// the convolution, when present.
    pub coeff_quant: Option<Quantizer>,
    /// Activation used between V2 chain steps and after its inverse
    /// transform. V1 applies no activation itself.
    pub activation: Activation,
}

impl WaveletConvLayer {
    pub fn v1(conv: Conv1x1, alpha: f64, levels: usize) -> Self {
        Self {
            conv: ConvVariant::V1(conv),
            alpha,
            levels,
            coeff_quant: None,
            activation: Activation::Relu,
        }
    }

    pub fn v2(convs: Vec<Conv1x1>, alpha: f64, levels: usize) -> Self {
        Self {
            conv: ConvVariant::V2(convs),
            alpha,
            levels,
            coeff_quant: None,
            activation: Activation::Relu,
        }
    }
}

fn maybe_quantize(dense: &FeatureMatrix, q: Option<&Quantizer>) -> Result<FeatureMatrix> {
    match q {
        Some(q) => Ok(quantize_coefficients(dense, q)?.0),
        None => Ok(dense.clone()),
    }
}

/// Compressed wavelet convolution `W^T T^T K T W f`: convolve the gathered
/// dense block, then scatter and invert. No activation.
pub fn compressed_conv_v1(
    f: &FeatureMatrix,
    layer: &WaveletConvLayer,
    g: &Graph,
    seed: u64,
) -> Result<FeatureMatrix> {
    let ConvVariant::V1(ref k) = layer.conv else {
        return Err(Error::InvalidArgument("layer is not a V1 variant".into()));
    };
    let stage = WaveletStage::build(g, f, layer.levels, layer.alpha, seed)?;
    compressed_conv_v1_with(&stage, f, k, layer.coeff_quant.as_ref())
}

/// [`compressed_conv_v1`] on an explicit shared stage.
pub fn compressed_conv_v1_with(
    stage: &WaveletStage,
    f: &FeatureMatrix,
    k: &Conv1x1,
    coeff_quant: Option<&Quantizer>,
) -> Result<FeatureMatrix> {
    let dense = stage.analyze(f)?;
    let dense = maybe_quantize(&dense, coeff_quant)?;
    stage.synthesize(&k.apply(&dense)?)
}

/// The commuted ordering `K W^T T^T T W f`: compress-reconstruct first,
/// convolve after. Exists as the equivalence oracle for the compressed
/// path.
pub fn conv_then_compress(
    f: &FeatureMatrix,
    layer: &WaveletConvLayer,
    g: &Graph,
    seed: u64,
) -> Result<FeatureMatrix> {
    let ConvVariant::V1(ref k) = layer.conv else {
        return Err(Error::InvalidArgument("layer is not a V1 variant".into()));
    };
    let stage = WaveletStage::build(g, f, layer.levels, layer.alpha, seed)?;
    conv_then_compress_with(&stage, f, k)
}

/// [`conv_then_compress`] on an explicit shared stage.
pub fn conv_then_compress_with(
    stage: &WaveletStage,
    f: &FeatureMatrix,
    k: &Conv1x1,
) -> Result<FeatureMatrix> {
    let reconstructed = stage.synthesize(&stage.analyze(f)?)?;
    k.apply(&reconstructed)
}

/// V2 form: one transform, a chain of convolutions with activations in the
/// wavelet domain, and a final activation after the inverse transform.
pub fn compressed_conv_v2(
    f: &FeatureMatrix,
    layer: &WaveletConvLayer,
    g: &Graph,
    seed: u64,
) -> Result<FeatureMatrix> {
    let ConvVariant::V2(ref convs) = layer.conv else {
        return Err(Error::InvalidArgument("layer is not a V2 variant".into()));
    };
    let stage = WaveletStage::build(g, f, layer.levels, layer.alpha, seed)?;
    compressed_conv_v2_with(
        &stage,
        f,
        convs,
        layer.activation,
        layer.coeff_quant.as_ref(),
    )
}

/// [`compressed_conv_v2`] on an explicit shared stage.
pub fn compressed_conv_v2_with(
    stage: &WaveletStage,
    f: &FeatureMatrix,
    convs: &[Conv1x1],
    activation: Activation,
    coeff_quant: Option<&Quantizer>,
) -> Result<FeatureMatrix> {
    if convs.is_empty() {
        return Err(Error::InvalidArgument("V2 chain must be non-empty".into()));
    }
    let mut dense = stage.analyze(f)?;
    dense = maybe_quantize(&dense, coeff_quant)?;
    dense = convs[0].apply(&dense)?;
    for k in &convs[1..] {
        dense = activation.apply(&dense);
        dense = k.apply(&dense)?;
    }
    let out = stage.synthesize(&dense)?;
    Ok(activation.apply(&out))
}

fn aggregate_into(agg: Aggregator, acc: &mut [f64], seen: usize, value: &[f64]) {
    match agg {
        Aggregator::Max => {
            if seen == 0 {
                acc.copy_from_slice(value);
            } else {
                for (a, &v) in acc.iter_mut().zip(value) {
                    *a = a.max(v);
                }
            }
        }
        Aggregator::Mean => {
            for (a, &v) in acc.iter_mut().zip(value) {
                *a += v;
            }
        }
    }
}

/// Edge convolution: per node `i`, aggregate `act(K [f_i, f_i - f_j])` over
/// neighbors `j`. `k` is `c_out x 2 c_in`. Isolated nodes produce zeros.
pub fn edge_conv(
    f: &FeatureMatrix,
    g: &Graph,
    k: &Conv1x1,
    agg: Aggregator,
    activation: Activation,
) -> Result<FeatureMatrix> {
    Ok(edge_conv_counted(f, g, k, agg, activation)?.0)
}

/// [`edge_conv`] returning the number of scalar multiplies spent in
/// convolution evaluations.
pub fn edge_conv_counted(
    f: &FeatureMatrix,
    g: &Graph,
    k: &Conv1x1,
    agg: Aggregator,
    activation: Activation,
) -> Result<(FeatureMatrix, u64)> {
    let c_in = f.cols();
    if f.rows() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} nodes, features {} rows",
            g.n(),
            f.rows()
        )));
    }
    if k.c_in() != 2 * c_in {
        return Err(Error::DimensionMismatch(format!(
            "edge conv weight expects {} input channels, got {}",
            k.c_in(),
            2 * c_in
        )));
    }
    let c_out = k.c_out();
    let mut out = FeatureMatrix::zeros(g.n(), c_out);
    let mut mults = 0u64;
    let mut edge_input = vec![0.0; 2 * c_in];
    let mut edge_out = vec![0.0; c_out];
    for i in 0..g.n() {
        let fi = f.row(i);
        let mut seen = 0usize;
        for &j in g.neighbors(i) {
            let fj = f.row(j);
            edge_input[..c_in].copy_from_slice(fi);
            for c in 0..c_in {
                edge_input[c_in + c] = fi[c] - fj[c];
            }
            for (o, val) in edge_out.iter_mut().enumerate() {
                let w = k.weights().row(o);
                let mut acc = 0.0;
                for c in 0..2 * c_in {
                    acc += w[c] * edge_input[c];
                    mults += 1;
                }
                *val = acc;
            }
            if activation == Activation::Relu {
                for v in edge_out.iter_mut() {
                    *v = v.max(0.0);
                }
            }
            aggregate_into(agg, out.row_mut(i), seen, &edge_out);
            seen += 1;
        }
        if seen > 0 && agg == Aggregator::Mean {
            let row = out.row_mut(i);
            for v in row.iter_mut() {
                *v /= seen as f64;
            }
        }
        // Isolated nodes keep the zero row.
    }
    Ok((out, mults))
}

/// The reordered edge convolution: `y = K1 f`, `t = K2 f` once per node,
/// then aggregate `act(y_i + t_i - t_j)` over neighbors. Same parameter
/// count, spatial work moved out of the convolution.
#[derive(Clone, Debug)]
pub struct EdgeConvCheap {
    pub k1: Conv1x1,
    pub k2: Conv1x1,
    pub aggregator: Aggregator,
    pub activation: Activation,
}

impl EdgeConvCheap {
    pub fn new(k1: Conv1x1, k2: Conv1x1, aggregator: Aggregator) -> Result<Self> {
        if k1.c_in() != k2.c_in() || k1.c_out() != k2.c_out() {
            return Err(Error::DimensionMismatch(
                "k1 and k2 must have the same shape".into(),
            ));
        }
        Ok(Self {
            k1,
            k2,
            aggregator,
            activation: Activation::Relu,
        })
    }
}

/// Wavelet settings for layers that compress their convolutions.
#[derive(Clone, Copy, Debug)]
pub struct WaveletConfig {
    pub alpha: f64,
    pub levels: usize,
    pub seed: u64,
}

/// Cheap edge convolution, optionally with both convolutions compressed
/// through one shared wavelet stage built from the input features.
pub fn edge_conv_cheap(
    f: &FeatureMatrix,
    g: &Graph,
    layer: &EdgeConvCheap,
    wavelet: Option<&WaveletConfig>,
) -> Result<FeatureMatrix> {
    let stage = wavelet
        .map(|cfg| WaveletStage::build(g, f, cfg.levels, cfg.alpha, cfg.seed))
        .transpose()?;
    edge_conv_cheap_with(f, g, layer, stage.as_ref(), None)
}

/// [`edge_conv_cheap`] on an explicit (possibly shared) stage with optional
/// coefficient quantization.
pub fn edge_conv_cheap_with(
    f: &FeatureMatrix,
    g: &Graph,
    layer: &EdgeConvCheap,
    stage: Option<&WaveletStage>,
    coeff_quant: Option<&Quantizer>,
) -> Result<FeatureMatrix> {
    if f.rows() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} nodes, features {} rows",
            g.n(),
            f.rows()
        )));
    }
    let (y, t) = match stage {
        Some(stage) => {
            let dense = stage.analyze(f)?;
            let dense = maybe_quantize(&dense, coeff_quant)?;
            (
                stage.synthesize(&layer.k1.apply(&dense)?)?,
                stage.synthesize(&layer.k2.apply(&dense)?)?,
            )
        }
        None => (layer.k1.apply(f)?, layer.k2.apply(f)?),
    };
    let c_out = layer.k1.c_out();
    let mut out = FeatureMatrix::zeros(g.n(), c_out);
    let mut edge_out = vec![0.0; c_out];
    for i in 0..g.n() {
        let (yi, ti) = (y.row(i), t.row(i));
        let mut seen = 0usize;
        for &j in g.neighbors(i) {
            let tj = t.row(j);
            for c in 0..c_out {
                edge_out[c] = yi[c] + ti[c] - tj[c];
            }
            if layer.activation == Activation::Relu {
                for v in edge_out.iter_mut() {
                    *v = v.max(0.0);
                }
            }
            aggregate_into(layer.aggregator, out.row_mut(i), seen, &edge_out);
            seen += 1;
        }
        if seen > 0 && layer.aggregator == Aggregator::Mean {
            for v in out.row_mut(i).iter_mut() {
                *v /= seen as f64;
            }
        }
    }
    Ok(out)
}

/// A GCNII layer with a wavelet-compressed channel mixture:
/// `act(W^T T^T K_mix T W s)` where `s = (1 - alpha_l) P f + alpha_l f0`
/// and `K_mix = (1 - beta_l) I + beta_l K`.
#[derive(Clone, Debug)]
pub struct WgcniiLayer {
    pub conv: Conv1x1,
    pub alpha_l: f64,
    pub beta_l: f64,
    pub activation: Activation,
}

impl WgcniiLayer {
    pub fn new(conv: Conv1x1, alpha_l: f64, beta_l: f64) -> Result<Self> {
        if conv.c_in() != conv.c_out() {
            return Err(Error::DimensionMismatch(
                "GCNII channel mixture requires a square convolution".into(),
            ));
        }
        Ok(Self {
            conv,
            alpha_l,
            beta_l,
            activation: Activation::Relu,
        })
    }

    /// `beta_l = ln(lambda / l + 1)` for layer index `l >= 1`.
    pub fn from_lambda(
        conv: Conv1x1,
        alpha_l: f64,
        lambda: f64,
        layer_index: usize,
    ) -> Result<Self> {
        let beta = beta_from_lambda(lambda, layer_index);
        Self::new(conv, alpha_l, beta)
    }

    /// The mixed channel matrix `(1 - beta_l) I + beta_l K`.
    pub fn mixed_conv(&self) -> Conv1x1 {
        mixed_conv(&self.conv, self.beta_l)
    }
}

/// `beta_l = ln(lambda / l + 1)`.
pub fn beta_from_lambda(lambda: f64, layer_index: usize) -> f64 {
    (lambda / layer_index as f64 + 1.0).ln()
}

fn mixed_conv(k: &Conv1x1, beta: f64) -> Conv1x1 {
    let c = k.c_in();
    let mut w = k.weights().scale(beta);
    for i in 0..c {
        w.set(i, i, w.get(i, i) + (1.0 - beta));
    }
    Conv1x1::new(w)
}

/// The GCNII spatial operation `(1 - alpha_l) P f + alpha_l f0`.
pub fn gcnii_spatial(
    pm: &crate::PropagationMatrix,
    f: &FeatureMatrix,
    f0: &FeatureMatrix,
    alpha_l: f64,
) -> Result<FeatureMatrix> {
    pm.apply(f)?.scale(1.0 - alpha_l).axpy(alpha_l, f0)
}

/// Full wavelet-compressed GCNII layer on graph `g`. With no wavelet config
/// the channel mixture applies directly in node space.
pub fn wgcnii_layer(
    f: &FeatureMatrix,
    f0: &FeatureMatrix,
    g: &Graph,
    layer: &WgcniiLayer,
    wavelet: Option<&WaveletConfig>,
) -> Result<FeatureMatrix> {
    if f.rows() != f0.rows() || f.cols() != f0.cols() {
        return Err(Error::DimensionMismatch(
            "f and f0 must have the same shape".into(),
        ));
    }
    let pm = gcn_propagation(g);
    let s = gcnii_spatial(&pm, f, f0, layer.alpha_l)?;
    let mixed = layer.mixed_conv();
    let out = match wavelet {
        Some(cfg) => {
            let stage = WaveletStage::build(g, &s, cfg.levels, cfg.alpha, cfg.seed)?;
            compressed_conv_v1_with(&stage, &s, &mixed, None)?
        }
        None => mixed.apply(&s)?,
    };
    Ok(layer.activation.apply(&out))
}

/// Total activation compression ratio `(32 / bits_a) * (1 / alpha)`.
pub fn count_activation_compression(bits_a: u32, alpha: f64) -> Result<f64> {
    if !(1..=32).contains(&bits_a) {
        return Err(Error::InvalidArgument(format!(
            "bits_a = {bits_a} out of [1, 32]"
        )));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha = {alpha} out of (0, 1]"
        )));
    }
    Ok((32.0 / bits_a as f64) * (1.0 / alpha))
}

/// Convolution multiply counts for the bandwidth accounting.
pub mod cost {
    use crate::shrinkage::kept_rows;
    use crate::Graph;

    /// Scalar multiplies of a plain 1x1 convolution over `rows` nodes.
    pub fn conv1x1_mults(rows: usize, c_in: usize, c_out: usize) -> u64 {
        rows as u64 * c_in as u64 * c_out as u64
    }

    /// Edge convolution evaluates a `c_out x 2 c_in` product once per
    /// directed edge (each node visits each neighbor).
    pub fn edge_conv_mults(g: &Graph, c_in: usize, c_out: usize) -> u64 {
        let directed: u64 = (0..g.n()).map(|u| g.degree(u) as u64).sum();
        directed * 2 * c_in as u64 * c_out as u64
    }

    /// The cheap edge convolution pays for two convolutions on the
    /// compressed block only.
    pub fn edge_conv_cheap_mults(n: usize, alpha: f64, c_in: usize, c_out: usize) -> u64 {
        2 * conv1x1_mults(kept_rows(n, alpha), c_in, c_out)
    }
}
