//! Minimal optimizer stack: closed-form gradients through the linear
//! transform chain, straight-through estimation for the quantizers, softmax
//! cross-entropy, and plain SGD with weight decay. Enough to train small
//! two-layer wavelet GCN / GCNII models end to end.
//!
//! Hierarchies and shrinkage plans are data-dependent selections; they are
//! held fixed within each forward/backward pair and rebuilt every forward
//! pass (or frozen across epochs on request). Gradients treat them as
//! constants.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{gcn_propagation, PropagationMatrix};
use crate::layers::{beta_from_lambda, Conv1x1, WaveletStage};
use crate::quant::{
    clip_gradient, clip_gradient_unsigned, in_range_mask, quantize_activations,
    quantize_coefficients, quantize_weights, weight_normalize, weight_normalize_backward,
    Quantizer,
};
use crate::{Error, FeatureMatrix, Graph, Result};

/// Model architecture for the toy networks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arch {
    Wgcn,
    Wgcnii,
}

/// Training hyperparameters.
#[derive(Clone, Copy, Debug)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub bits_w: u32,
    pub bits_a: u32,
    pub alpha: f64,
    pub levels: usize,
    pub hidden: usize,
    pub arch: Arch,
    pub freeze_hierarchy: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            lr: 0.01,
            weight_decay: 5e-4,
            seed: 0,
            bits_w: 8,
            bits_a: 8,
            alpha: 1.0,
            levels: 3,
            hidden: 16,
            arch: Arch::Wgcn,
            freeze_hierarchy: false,
        }
    }
}

/// Bit width a layer actually uses: the first and last layers of a stack
/// stay at 32 bits, inner layers get the configured width.
pub fn effective_bits(layer_index: usize, n_layers: usize, bits: u32) -> u32 {
    if layer_index == 0 || layer_index + 1 == n_layers {
        32
    } else {
        bits
    }
}

/// Quantizers of one inner layer: signed weights, unsigned layer input,
/// signed coefficient block. Clips are learnable.
#[derive(Clone, Debug)]
pub struct LayerQuant {
    pub weight: Quantizer,
    pub input: Quantizer,
    pub coeff: Quantizer,
    pub normalize_weights: bool,
}

/// The trainable toy model: a float embedding convolution, two quantizable
/// wavelet convolution blocks (GCN or GCNII spatial flavor), and a float
/// classifier convolution.
#[derive(Clone, Debug)]
pub struct ToyModel {
    pub arch: Arch,
    pub embed: Conv1x1,
    pub convs: Vec<Conv1x1>,
    pub classify: Conv1x1,
    pub quant: Vec<Option<LayerQuant>>,
    pub alpha: f64,
    pub levels: usize,
    pub gcnii_alpha: f64,
    pub gcnii_lambda: f64,
    pub seed: u64,
}

impl ToyModel {
    pub fn beta(&self, layer: usize) -> f64 {
        beta_from_lambda(self.gcnii_lambda, layer + 1)
    }

    pub fn n_classes(&self) -> usize {
        self.classify.c_out()
    }
}

fn xavier(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> FeatureMatrix {
    let s = (6.0 / (rows + cols) as f64).sqrt();
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-s..s)).collect();
    FeatureMatrix::from_vec(rows, cols, data).expect("finite init")
}

/// Builds an untrained model. Inner layers are quantized per
/// [`effective_bits`] (with the 8/8 default that means both wavelet blocks);
/// clips start uncalibrated and are set from the first tensors seen.
pub fn init_model(c_in: usize, n_classes: usize, cfg: &TrainConfig) -> ToyModel {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let embed = Conv1x1::new(xavier(cfg.hidden, c_in, &mut rng));
    let convs = vec![
        Conv1x1::new(xavier(cfg.hidden, cfg.hidden, &mut rng)),
        Conv1x1::new(xavier(cfg.hidden, cfg.hidden, &mut rng)),
    ];
    let classify = Conv1x1::new(xavier(n_classes, cfg.hidden, &mut rng));
    // Stack: embed, conv[0], conv[1], classify.
    let n_layers = convs.len() + 2;
    let quant = (0..convs.len())
        .map(|l| {
            let bw = effective_bits(l + 1, n_layers, cfg.bits_w);
            let ba = effective_bits(l + 1, n_layers, cfg.bits_a);
            if bw >= 32 && ba >= 32 {
                None
            } else {
                Some(LayerQuant {
                    weight: Quantizer::signed(bw, 1.0).expect("valid bits"),
                    input: Quantizer::unsigned(ba, 1.0).expect("valid bits"),
                    coeff: Quantizer::signed(ba, 1.0).expect("valid bits"),
                    normalize_weights: true,
                })
            }
        })
        .collect();
    ToyModel {
        arch: cfg.arch,
        embed,
        convs,
        classify,
        quant,
        alpha: cfg.alpha,
        levels: cfg.levels,
        gcnii_alpha: 0.1,
        gcnii_lambda: 0.1,
        seed: cfg.seed,
    }
}

/// Cached intermediates of one wavelet block.
#[derive(Clone, Debug)]
pub struct LayerTape {
    pub spatial: FeatureMatrix,
    pub spatial_q: FeatureMatrix,
    pub stage: WaveletStage,
    pub coeffs: FeatureMatrix,
    pub coeffs_q: FeatureMatrix,
    pub weights_norm: Option<FeatureMatrix>,
    pub weights_eff: Conv1x1,
    pub pre_act: FeatureMatrix,
    pub out: FeatureMatrix,
}

/// Cached intermediates of a full forward pass; plans and hierarchies are
/// frozen within one forward/backward pair.
#[derive(Clone, Debug)]
pub struct GradientTape {
    pub input: FeatureMatrix,
    pub embed_pre: FeatureMatrix,
    pub embedded: FeatureMatrix,
    pub layers: Vec<LayerTape>,
    pub logits: FeatureMatrix,
}

fn relu(m: &FeatureMatrix) -> FeatureMatrix {
    m.map(|v| v.max(0.0))
}

fn relu_mask_mul(pre: &FeatureMatrix, grad: &FeatureMatrix) -> FeatureMatrix {
    let mut out = grad.clone();
    for (o, &p) in out.data_mut().iter_mut().zip(pre.data()) {
        if p <= 0.0 {
            *o = 0.0;
        }
    }
    out
}

/// Effective convolution weights of layer `l`: weight-normalized and
/// fake-quantized when the layer carries quantizers.
fn effective_weights(model: &ToyModel, l: usize) -> Result<(Conv1x1, Option<FeatureMatrix>)> {
    let k = &model.convs[l];
    match &model.quant[l] {
        Some(q) => {
            let normed = if q.normalize_weights {
                weight_normalize(k.weights())
            } else {
                k.weights().clone()
            };
            let (fake, _) = quantize_weights(&normed, &q.weight)?;
            Ok((Conv1x1::new(fake), Some(normed)))
        }
        None => Ok((k.clone(), None)),
    }
}

/// Runs the model forward, caching every intermediate. `frozen` reuses
/// previously built wavelet stages instead of rebuilding from the current
/// activations.
pub fn forward_tape(
    model: &ToyModel,
    g: &Graph,
    pm: &PropagationMatrix,
    x: &FeatureMatrix,
    frozen: Option<&[WaveletStage]>,
) -> Result<GradientTape> {
    let embed_pre = model.embed.apply(x)?;
    let embedded = relu(&embed_pre);
    let mut h = embedded.clone();
    let mut layers = Vec::with_capacity(model.convs.len());
    for l in 0..model.convs.len() {
        let spatial = match model.arch {
            Arch::Wgcn => pm.apply(&h)?,
            Arch::Wgcnii => pm
                .apply(&h)?
                .scale(1.0 - model.gcnii_alpha)
                .axpy(model.gcnii_alpha, &embedded)?,
        };
        let spatial_q = match &model.quant[l] {
            Some(q) => quantize_activations(&spatial, &q.input)?.0,
            None => spatial.clone(),
        };
        let stage = match frozen {
            Some(stages) => stages[l].clone(),
            None => WaveletStage::build(g, &spatial_q, model.levels, model.alpha, model.seed)?,
        };
        let coeffs = stage.analyze(&spatial_q)?;
        let coeffs_q = match &model.quant[l] {
            Some(q) => quantize_coefficients(&coeffs, &q.coeff)?.0,
            None => coeffs.clone(),
        };
        let (weights_eff, weights_norm) = effective_weights(model, l)?;
        let mixed = match model.arch {
            Arch::Wgcn => weights_eff.clone(),
            Arch::Wgcnii => {
                let beta = model.beta(l);
                let mut w = weights_eff.weights().scale(beta);
                for i in 0..w.rows() {
                    w.set(i, i, w.get(i, i) + (1.0 - beta));
                }
                Conv1x1::new(w)
            }
        };
        let dense_out = mixed.apply(&coeffs_q)?;
        let pre_act = stage.synthesize(&dense_out)?;
        let out = relu(&pre_act);
        layers.push(LayerTape {
            spatial,
            spatial_q,
            stage,
            coeffs,
            coeffs_q,
            weights_norm,
            weights_eff,
            pre_act,
            out: out.clone(),
        });
        h = out;
    }
    let logits = model.classify.apply(&h)?;
    Ok(GradientTape {
        input: x.clone(),
        embed_pre,
        embedded,
        layers,
        logits,
    })
}

/// Masked softmax cross-entropy. Returns the mean loss over the mask and
/// the gradient with respect to the logits: `(softmax - onehot) / |mask|`
/// on masked rows, zero elsewhere.
pub fn softmax_cross_entropy(
    logits: &FeatureMatrix,
    labels: &[i64],
    mask: &[usize],
) -> Result<(f64, FeatureMatrix)> {
    if labels.len() != logits.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} rows",
            labels.len(),
            logits.rows()
        )));
    }
    if mask.is_empty() {
        return Err(Error::InvalidArgument("empty training mask".into()));
    }
    let c = logits.cols();
    let mut grad = FeatureMatrix::zeros(logits.rows(), c);
    let mut loss = 0.0;
    for &i in mask {
        let label = labels[i];
        if label < 0 || label as usize >= c {
            return Err(Error::InvalidArgument(format!(
                "node {i} has label {label}, expected a class in [0, {c})"
            )));
        }
        let row = logits.row(i);
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let exps: Vec<f64> = row.iter().map(|&v| (v - max).exp()).collect();
        let denom: f64 = exps.iter().sum();
        loss -= (exps[label as usize] / denom).ln();
        let g = grad.row_mut(i);
        for j in 0..c {
            g[j] = exps[j] / denom;
        }
        g[label as usize] -= 1.0;
    }
    let inv = 1.0 / mask.len() as f64;
    loss *= inv;
    Ok((loss, grad.scale(inv)))
}

/// Gradients of every trainable tensor plus the clip parameters.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub embed: FeatureMatrix,
    pub convs: Vec<FeatureMatrix>,
    pub classify: FeatureMatrix,
    pub clip_w: Vec<f64>,
    pub clip_in: Vec<f64>,
    pub clip_coeff: Vec<f64>,
    /// Gradient with respect to the input features (adjoint check surface).
    pub input: FeatureMatrix,
}

fn weighted_sum(contrib: &FeatureMatrix, grad: &FeatureMatrix) -> f64 {
    contrib
        .data()
        .iter()
        .zip(grad.data())
        .map(|(&a, &b)| a * b)
        .sum()
}

fn mask_mul(mask: &FeatureMatrix, grad: &FeatureMatrix) -> FeatureMatrix {
    let mut out = grad.clone();
    for (o, &m) in out.data_mut().iter_mut().zip(mask.data()) {
        *o *= m;
    }
    out
}

/// Backpropagates `grad_logits` through the taped forward pass. Rounding is
/// treated as identity (straight-through); clipping contributes the
/// three-case gradient to the clip parameters.
pub fn backward(
    model: &ToyModel,
    pm: &PropagationMatrix,
    tape: &GradientTape,
    grad_logits: &FeatureMatrix,
) -> Result<Gradients> {
    let n_layers = model.convs.len();
    let last_out = tape.layers.last().map(|t| &t.out).unwrap_or(&tape.embedded);
    // classify: logits = h K^T
    let grad_classify = grad_logits.transpose_mul(last_out)?;
    let mut grad_h = grad_logits.mul(model.classify.weights())?;
    let mut grad_embedded_extra = FeatureMatrix::zeros(tape.embedded.rows(), tape.embedded.cols());

    let mut grad_convs = vec![FeatureMatrix::zeros(1, 1); n_layers];
    let mut clip_w = vec![0.0; n_layers];
    let mut clip_in = vec![0.0; n_layers];
    let mut clip_coeff = vec![0.0; n_layers];

    for l in (0..n_layers).rev() {
        let t = &tape.layers[l];
        let grad_pre = relu_mask_mul(&t.pre_act, &grad_h);
        // pre_act = synthesize(dense_out); adjoint is analyze.
        let grad_dense = t.stage.analyze(&grad_pre)?;
        // dense_out = coeffs_q * mixed^T
        let mixed = match model.arch {
            Arch::Wgcn => t.weights_eff.clone(),
            Arch::Wgcnii => {
                let beta = model.beta(l);
                let mut w = t.weights_eff.weights().scale(beta);
                for i in 0..w.rows() {
                    w.set(i, i, w.get(i, i) + (1.0 - beta));
                }
                Conv1x1::new(w)
            }
        };
        let grad_mixed = grad_dense.transpose_mul(&t.coeffs_q)?;
        let grad_weights_eff = match model.arch {
            Arch::Wgcn => grad_mixed,
            Arch::Wgcnii => grad_mixed.scale(model.beta(l)),
        };
        let mut grad_coeffs = grad_dense.mul(mixed.weights())?;

        // STE through the weight quantizer, then back through normalization.
        grad_convs[l] = match (&model.quant[l], &t.weights_norm) {
            (Some(q), Some(normed)) => {
                clip_w[l] = weighted_sum(&clip_gradient(normed, &q.weight)?, &grad_weights_eff);
                let masked = mask_mul(&in_range_mask(normed, &q.weight), &grad_weights_eff);
                if q.normalize_weights {
                    weight_normalize_backward(model.convs[l].weights(), &masked)
                } else {
                    masked
                }
            }
            _ => grad_weights_eff,
        };

        // STE through the coefficient quantizer.
        if let Some(q) = &model.quant[l] {
            clip_coeff[l] = weighted_sum(&clip_gradient(&t.coeffs, &q.coeff)?, &grad_coeffs);
            grad_coeffs = mask_mul(&in_range_mask(&t.coeffs, &q.coeff), &grad_coeffs);
        }

        // coeffs = analyze(spatial_q); adjoint is synthesize.
        let mut grad_spatial = t.stage.synthesize(&grad_coeffs)?;

        // STE through the input activation quantizer.
        if let Some(q) = &model.quant[l] {
            clip_in[l] = weighted_sum(
                &clip_gradient_unsigned(&t.spatial, &q.input)?,
                &grad_spatial,
            );
            grad_spatial = mask_mul(&in_range_mask(&t.spatial, &q.input), &grad_spatial);
        }

        // Spatial operation adjoint (the propagation matrix is symmetric).
        grad_h = match model.arch {
            Arch::Wgcn => pm.apply(&grad_spatial)?,
            Arch::Wgcnii => {
                grad_embedded_extra = grad_embedded_extra.axpy(model.gcnii_alpha, &grad_spatial)?;
                pm.apply(&grad_spatial)?.scale(1.0 - model.gcnii_alpha)
            }
        };
    }

    let grad_embedded_total = grad_h.axpy(1.0, &grad_embedded_extra)?;
    let grad_embed_pre = relu_mask_mul(&tape.embed_pre, &grad_embedded_total);
    let grad_embed = grad_embed_pre.transpose_mul(&tape.input)?;
    let grad_input = grad_embed_pre.mul(model.embed.weights())?;

    Ok(Gradients {
        embed: grad_embed,
        convs: grad_convs,
        classify: grad_classify,
        clip_w,
        clip_in,
        clip_coeff,
        input: grad_input,
    })
}

/// Per-layer gradients for a single wavelet block: given the upstream
/// gradient at the block output and the block's tape, produces the
/// convolution-weight gradient, the three clip gradients, and the gradient
/// at the block input (before the spatial operation is undone).
pub fn backward_wconv(
    grad_out: &FeatureMatrix,
    t: &LayerTape,
    quant: Option<&LayerQuant>,
    conv: &Conv1x1,
) -> Result<(FeatureMatrix, f64, f64, f64, FeatureMatrix)> {
    if grad_out.rows() != t.pre_act.rows() || grad_out.cols() != t.pre_act.cols() {
        return Err(Error::DimensionMismatch(
            "gradient does not match the taped forward pass".into(),
        ));
    }
    let grad_pre = relu_mask_mul(&t.pre_act, grad_out);
    let grad_dense = t.stage.analyze(&grad_pre)?;
    let grad_weights_eff = grad_dense.transpose_mul(&t.coeffs_q)?;
    let mut grad_coeffs = grad_dense.mul(t.weights_eff.weights())?;

    let mut g_clip_w = 0.0;
    let mut g_clip_coeff = 0.0;
    let mut g_clip_in = 0.0;

    let grad_k = match (quant, &t.weights_norm) {
        (Some(q), Some(normed)) => {
            g_clip_w = weighted_sum(&clip_gradient(normed, &q.weight)?, &grad_weights_eff);
            let masked = mask_mul(&in_range_mask(normed, &q.weight), &grad_weights_eff);
            if q.normalize_weights {
                weight_normalize_backward(conv.weights(), &masked)
            } else {
                masked
            }
        }
        _ => grad_weights_eff,
    };
    if let Some(q) = quant {
        g_clip_coeff = weighted_sum(&clip_gradient(&t.coeffs, &q.coeff)?, &grad_coeffs);
        grad_coeffs = mask_mul(&in_range_mask(&t.coeffs, &q.coeff), &grad_coeffs);
    }
    let mut grad_spatial = t.stage.synthesize(&grad_coeffs)?;
    if let Some(q) = quant {
        g_clip_in = weighted_sum(
            &clip_gradient_unsigned(&t.spatial, &q.input)?,
            &grad_spatial,
        );
        grad_spatial = mask_mul(&in_range_mask(&t.spatial, &q.input), &grad_spatial);
    }
    Ok((grad_k, g_clip_w, g_clip_in, g_clip_coeff, grad_spatial))
}

/// One accuracy/loss record per epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub epoch: usize,
    pub loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
}

/// Fraction of masked nodes whose argmax logit matches the label.
pub fn accuracy(logits: &FeatureMatrix, labels: &[i64], mask: &[usize]) -> f64 {
    if mask.is_empty() {
        return 0.0;
    }
    let mut hits = 0usize;
    for &i in mask {
        let row = logits.row(i);
        let mut best = 0usize;
        for j in 1..row.len() {
            if row[j] > row[best] {
                best = j;
            }
        }
        if labels[i] == best as i64 {
            hits += 1;
        }
    }
    hits as f64 / mask.len() as f64
}

/// Indices of all labeled nodes, in order.
pub fn labeled_mask(labels: &[i64]) -> Vec<usize> {
    labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l >= 0)
        .map(|(i, _)| i)
        .collect()
}

/// Deterministic 80/20 split of the labeled nodes.
pub fn train_val_split(labels: &[i64], seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut labeled: Vec<usize> = labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l >= 0)
        .map(|(i, _)| i)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x517e_55ed);
    labeled.shuffle(&mut rng);
    let cut = (labeled.len() * 4) / 5;
    let (train, val) = labeled.split_at(cut.max(1).min(labeled.len()));
    let mut train = train.to_vec();
    let mut val = val.to_vec();
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

fn calibrate_clips(
    model: &mut ToyModel,
    g: &Graph,
    pm: &PropagationMatrix,
    x: &FeatureMatrix,
) -> Result<()> {
    if model.quant.iter().all(Option::is_none) {
        return Ok(());
    }
    // Run one unquantized pass to size the clips.
    let mut float_model = model.clone();
    for q in &mut float_model.quant {
        *q = None;
    }
    let tape = forward_tape(&float_model, g, pm, x, None)?;
    for (l, q) in model.quant.iter_mut().enumerate() {
        if let Some(q) = q {
            let t = &tape.layers[l];
            q.input.set_clip(t.spatial.max_abs().max(1e-8));
            q.coeff.set_clip(t.coeffs.max_abs().max(1e-8));
            let normed = if q.normalize_weights {
                weight_normalize(model.convs[l].weights())
            } else {
                model.convs[l].weights().clone()
            };
            q.weight.set_clip(normed.max_abs().max(1e-8));
        }
    }
    Ok(())
}

fn sgd_step(w: &mut FeatureMatrix, grad: &FeatureMatrix, lr: f64, wd: f64) {
    for (v, &g) in w.data_mut().iter_mut().zip(grad.data()) {
        *v -= lr * (g + wd * *v);
    }
}

/// Trains a two-block model on a node classification problem. Labels use
/// `-1` for unlabeled nodes; labeled nodes are split 80/20 into train and
/// validation sets. Returns the model and the per-epoch trace.
pub fn train_toy(
    g: &Graph,
    x: &FeatureMatrix,
    labels: &[i64],
    cfg: &TrainConfig,
) -> Result<(ToyModel, Vec<TraceRow>)> {
    if cfg.epochs == 0 {
        return Err(Error::InvalidArgument("epochs must be positive".into()));
    }
    if cfg.lr.is_nan() || cfg.lr < 0.0 {
        return Err(Error::InvalidArgument("learning rate must be >= 0".into()));
    }
    let n_classes = labels
        .iter()
        .filter(|&&l| l >= 0)
        .map(|&l| l as usize + 1)
        .max()
        .ok_or_else(|| Error::InvalidArgument("no labeled nodes".into()))?;
    let (train_mask, val_mask) = train_val_split(labels, cfg.seed);
    let pm = gcn_propagation(g);
    let mut model = init_model(x.cols(), n_classes, cfg);
    calibrate_clips(&mut model, g, &pm, x)?;

    let mut frozen: Option<Vec<WaveletStage>> = None;
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let tape = forward_tape(&model, g, &pm, x, frozen.as_deref())?;
        if cfg.freeze_hierarchy && frozen.is_none() {
            frozen = Some(tape.layers.iter().map(|t| t.stage.clone()).collect());
        }
        let (loss, grad_logits) = softmax_cross_entropy(&tape.logits, labels, &train_mask)?;
        let train_acc = accuracy(&tape.logits, labels, &train_mask);
        let val_acc = accuracy(&tape.logits, labels, &val_mask);
        trace.push(TraceRow {
            epoch,
            loss,
            train_acc,
            val_acc,
        });

        let grads = backward(&model, &pm, &tape, &grad_logits)?;
        if cfg.lr > 0.0 {
            sgd_step(
                model.embed.weights_mut(),
                &grads.embed,
                cfg.lr,
                cfg.weight_decay,
            );
            for (l, gk) in grads.convs.iter().enumerate() {
                sgd_step(model.convs[l].weights_mut(), gk, cfg.lr, cfg.weight_decay);
            }
            sgd_step(
                model.classify.weights_mut(),
                &grads.classify,
                cfg.lr,
                cfg.weight_decay,
            );
            for (l, q) in model.quant.iter_mut().enumerate() {
                if let Some(q) = q {
                    // Clips take the same step, without weight decay.
                    q.weight
                        .set_clip(q.weight.clip() - cfg.lr * grads.clip_w[l]);
                    q.input.set_clip(q.input.clip() - cfg.lr * grads.clip_in[l]);
                    q.coeff
                        .set_clip(q.coeff.clip() - cfg.lr * grads.clip_coeff[l]);
                }
            }
        }
    }
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gen_planted;

    fn uniform_logits_loss() -> f64 {
        let logits = FeatureMatrix::zeros(4, 3);
        let labels = vec![0, 1, 2, 0];
        let mask = vec![0, 1, 2, 3];
        softmax_cross_entropy(&logits, &labels, &mask).unwrap().0
    }

    #[test]
    fn uniform_logits_give_ln_c() {
        assert!((uniform_logits_loss() - 3.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_logits_give_zero_loss() {
        let mut logits = FeatureMatrix::zeros(2, 2);
        logits.set(0, 0, 1e6);
        logits.set(1, 1, 1e6);
        let (loss, _) = softmax_cross_entropy(&logits, &[0, 1], &[0, 1]).unwrap();
        assert!(loss < 1e-9);
    }

    #[test]
    fn cross_entropy_gradient_matches_finite_difference() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let logits = FeatureMatrix::from_vec(4, 3, data).unwrap();
        let labels = vec![2, 0, -1, 1];
        let mask = vec![0, 1, 3];
        let (_, grad) = softmax_cross_entropy(&logits, &labels, &mask).unwrap();
        let h = 1e-6;
        for idx in 0..12 {
            let mut plus = logits.clone();
            plus.data_mut()[idx] += h;
            let mut minus = logits.clone();
            minus.data_mut()[idx] -= h;
            let lp = softmax_cross_entropy(&plus, &labels, &mask).unwrap().0;
            let lm = softmax_cross_entropy(&minus, &labels, &mask).unwrap().0;
            let fd = (lp - lm) / (2.0 * h);
            assert!(
                (fd - grad.data()[idx]).abs() <= 1e-6 * fd.abs().max(1.0),
                "logit {idx}: fd {fd} vs {}",
                grad.data()[idx]
            );
        }
    }

    #[test]
    fn cross_entropy_rejects_empty_mask_and_bad_labels() {
        let logits = FeatureMatrix::zeros(2, 2);
        assert!(softmax_cross_entropy(&logits, &[0, 1], &[]).is_err());
        assert!(softmax_cross_entropy(&logits, &[-1, 1], &[0]).is_err());
        assert!(softmax_cross_entropy(&logits, &[5, 1], &[0]).is_err());
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_gradients() {
        let (g, x, labels) = gen_planted(24, 2, 0.4, 0.05, 5).unwrap();
        let _ = labels;
        let cfg = TrainConfig {
            bits_w: 32,
            bits_a: 32,
            hidden: 6,
            ..Default::default()
        };
        let pm = gcn_propagation(&g);
        let model = init_model(x.cols(), 2, &cfg);
        let tape = forward_tape(&model, &g, &pm, &x, None).unwrap();
        let zero = FeatureMatrix::zeros(24, 2);
        let grads = backward(&model, &pm, &tape, &zero).unwrap();
        assert_eq!(grads.embed.max_abs(), 0.0);
        assert_eq!(grads.classify.max_abs(), 0.0);
        assert!(grads.convs.iter().all(|g| g.max_abs() == 0.0));
        assert!(grads.clip_w.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn compressed_projection_is_self_adjoint() {
        // With a frozen plan, W^T T^T T W is symmetric: <g, P f> = <P g, f>.
        use rand::{Rng, SeedableRng};
        let (g, x, _) = gen_planted(20, 2, 0.4, 0.05, 6).unwrap();
        let stage = WaveletStage::build(&g, &x, 3, 0.5, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = FeatureMatrix::from_vec(
            20,
            2,
            (0..40).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let b = FeatureMatrix::from_vec(
            20,
            2,
            (0..40).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let pa = stage.synthesize(&stage.analyze(&a).unwrap()).unwrap();
        let pb = stage.synthesize(&stage.analyze(&b).unwrap()).unwrap();
        let dot = |u: &FeatureMatrix, v: &FeatureMatrix| -> f64 {
            u.data().iter().zip(v.data()).map(|(&x, &y)| x * y).sum()
        };
        assert!((dot(&b, &pa) - dot(&pb, &a)).abs() < 1e-10);
    }

    #[test]
    fn lr_zero_leaves_weights_bit_identical() {
        let (g, x, labels) = gen_planted(30, 2, 0.4, 0.05, 7).unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            lr: 0.0,
            hidden: 4,
            ..Default::default()
        };
        let (model, _) = train_toy(&g, &x, &labels, &cfg).unwrap();
        let fresh = {
            let mut m = init_model(x.cols(), 2, &cfg);
            let pm = gcn_propagation(&g);
            calibrate_clips(&mut m, &g, &pm, &x).unwrap();
            m
        };
        for (a, b) in model
            .embed
            .weights()
            .data()
            .iter()
            .zip(fresh.embed.weights().data())
        {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for l in 0..2 {
            for (a, b) in model.convs[l]
                .weights()
                .data()
                .iter()
                .zip(fresh.convs[l].weights().data())
            {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn training_trace_is_seed_deterministic() {
        let (g, x, labels) = gen_planted(40, 2, 0.3, 0.03, 9).unwrap();
        let cfg = TrainConfig {
            epochs: 10,
            hidden: 8,
            ..Default::default()
        };
        let (_, t1) = train_toy(&g, &x, &labels, &cfg).unwrap();
        let (_, t2) = train_toy(&g, &x, &labels, &cfg).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn loss_decreases_over_first_epochs() {
        let (g, x, labels) = gen_planted(60, 2, 0.25, 0.02, 11).unwrap();
        let cfg = TrainConfig {
            epochs: 10,
            lr: 0.01,
            hidden: 8,
            ..Default::default()
        };
        let (_, trace) = train_toy(&g, &x, &labels, &cfg).unwrap();
        assert!(
            trace.last().unwrap().loss < trace.first().unwrap().loss,
            "loss did not decrease: {} -> {}",
            trace.first().unwrap().loss,
            trace.last().unwrap().loss
        );
    }

    #[test]
    fn backward_wconv_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let (g, raw, _) = gen_planted(18, 2, 0.5, 0.1, 15).unwrap();
        let x = raw.map(|v| v.abs() + 0.05);
        let stage = WaveletStage::build(&g, &x, 2, 0.5, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let k = Conv1x1::new(
            FeatureMatrix::from_vec(2, 2, (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
                .unwrap(),
        );
        let dir = FeatureMatrix::from_vec(
            18,
            2,
            (0..36).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();

        let forward_block = |x: &FeatureMatrix, k: &Conv1x1| -> (FeatureMatrix, FeatureMatrix) {
            let coeffs = stage.analyze(x).unwrap();
            let pre = stage.synthesize(&k.apply(&coeffs).unwrap()).unwrap();
            (coeffs, pre)
        };
        let loss = |x: &FeatureMatrix, k: &Conv1x1| -> f64 {
            let (_, pre) = forward_block(x, k);
            relu(&pre)
                .data()
                .iter()
                .zip(dir.data())
                .map(|(&a, &b)| a * b)
                .sum()
        };

        let (coeffs, pre_act) = forward_block(&x, &k);
        let tape = LayerTape {
            spatial: x.clone(),
            spatial_q: x.clone(),
            stage: stage.clone(),
            coeffs: coeffs.clone(),
            coeffs_q: coeffs,
            weights_norm: None,
            weights_eff: k.clone(),
            pre_act: pre_act.clone(),
            out: relu(&pre_act),
        };
        let (grad_k, _, _, _, grad_x) = backward_wconv(&dir, &tape, None, &k).unwrap();

        let h = 1e-6;
        for idx in 0..4 {
            let mut kp = k.clone();
            kp.weights_mut().data_mut()[idx] += h;
            let mut km = k.clone();
            km.weights_mut().data_mut()[idx] -= h;
            let fd = (loss(&x, &kp) - loss(&x, &km)) / (2.0 * h);
            assert!(
                (fd - grad_k.data()[idx]).abs() < 1e-6 * fd.abs().max(1.0),
                "K entry {idx}: fd {fd} vs {}",
                grad_k.data()[idx]
            );
        }
        for idx in 0..10 {
            let mut xp = x.clone();
            xp.data_mut()[idx] += h;
            let mut xm = x.clone();
            xm.data_mut()[idx] -= h;
            let fd = (loss(&xp, &k) - loss(&xm, &k)) / (2.0 * h);
            assert!(
                (fd - grad_x.data()[idx]).abs() < 1e-6 * fd.abs().max(1.0),
                "x entry {idx}: fd {fd} vs {}",
                grad_x.data()[idx]
            );
        }
        // Tape shape mismatch is rejected.
        let bad = FeatureMatrix::zeros(3, 2);
        assert!(backward_wconv(&bad, &tape, None, &k).is_err());
    }

    #[test]
    fn quantized_training_reaches_reasonable_accuracy() {
        let (g, x, labels) = gen_planted(60, 2, 0.2, 0.02, 19).unwrap();
        let cfg = TrainConfig {
            epochs: 120,
            bits_w: 8,
            bits_a: 8,
            alpha: 0.5,
            hidden: 8,
            ..Default::default()
        };
        let (model, trace) = train_toy(&g, &x, &labels, &cfg).unwrap();
        assert!(model.quant.iter().all(Option::is_some));
        let best = trace.iter().map(|r| r.train_acc).fold(0.0f64, f64::max);
        assert!(best >= 0.85, "quantized run reached only {best}");
    }

    #[test]
    fn frozen_hierarchy_training_is_deterministic() {
        let (g, x, labels) = gen_planted(40, 2, 0.3, 0.03, 23).unwrap();
        let cfg = TrainConfig {
            epochs: 15,
            hidden: 6,
            alpha: 0.5,
            freeze_hierarchy: true,
            ..Default::default()
        };
        let (_, t1) = train_toy(&g, &x, &labels, &cfg).unwrap();
        let (_, t2) = train_toy(&g, &x, &labels, &cfg).unwrap();
        assert_eq!(t1, t2);
        assert!(t1.last().unwrap().loss < t1.first().unwrap().loss);
    }

    #[test]
    fn ste_backward_reduces_to_float_at_32_bits() {
        let (g, x, labels) = gen_planted(24, 2, 0.4, 0.05, 13).unwrap();
        let _ = labels;
        let pm = gcn_propagation(&g);
        let cfg = TrainConfig {
            bits_w: 32,
            bits_a: 32,
            hidden: 6,
            ..Default::default()
        };
        let float_model = init_model(x.cols(), 2, &cfg);
        // Same weights, but with 32-bit quantizers attached (no
        // normalization so the forward path matches).
        let mut q_model = float_model.clone();
        for q in q_model.quant.iter_mut() {
            *q = Some(LayerQuant {
                weight: Quantizer::signed(32, 10.0).unwrap(),
                input: Quantizer::unsigned(32, 10.0).unwrap(),
                coeff: Quantizer::signed(32, 10.0).unwrap(),
                normalize_weights: false,
            });
        }
        let tape_f = forward_tape(&float_model, &g, &pm, &x, None).unwrap();
        let tape_q = forward_tape(&q_model, &g, &pm, &x, None).unwrap();
        assert!(tape_f.logits.max_abs_diff(&tape_q.logits) < 1e-6);
        let upstream = tape_f.logits.map(|v| v.tanh());
        let gf = backward(&float_model, &pm, &tape_f, &upstream).unwrap();
        let gq = backward(&q_model, &pm, &tape_q, &upstream).unwrap();
        assert!(gf.embed.max_abs_diff(&gq.embed) < 1e-6);
        for l in 0..2 {
            assert!(gf.convs[l].max_abs_diff(&gq.convs[l]) < 1e-6);
        }
        assert!(gf.classify.max_abs_diff(&gq.classify) < 1e-6);
    }
}
