//! The text model format and a sequential executor.
//!
//! A model is a stack of layers applied in order. Layer kinds: `conv`
//! (plain 1x1), `wconv_v1` / `wconv_v2` (wavelet-compressed convolutions
//! with an optional GCN spatial step), `edgeconv_cheap`, and `wgcnii`. The
//! first `wgcnii` layer captures the running features as `f0` for every
//! subsequent GCNII block. Per-layer quantization stores `(bits_w, bits_a,
//! clip_w, clip_x, clip_coeff)` as decimal text; 32-bit layers stay in
//! floating point.

use std::fmt::Write as _;
use std::path::Path;

use crate::graph::{gcn_propagation, PropagationMatrix};
use crate::layers::{
    compressed_conv_v2_with, edge_conv_cheap_with, gcnii_spatial, Activation, Aggregator, Conv1x1,
    EdgeConvCheap, WaveletStage,
};
use crate::quant::{
    quantize_activations, quantize_coefficients, quantize_weights, weight_normalize, Quantizer,
};
use crate::train::{Arch, ToyModel};
use crate::{Error, FeatureMatrix, Graph, Result};

/// Spatial operation applied before a wavelet convolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spatial {
    None,
    Gcn,
}

/// Layer payload.
#[derive(Clone, Debug)]
pub enum LayerKind {
    Conv {
        conv: Conv1x1,
    },
    WconvV1 {
        conv: Conv1x1,
        spatial: Spatial,
    },
    WconvV2 {
        convs: Vec<Conv1x1>,
        spatial: Spatial,
    },
    EdgeConvCheap {
        k1: Conv1x1,
        k2: Conv1x1,
        aggregator: Aggregator,
        wavelet: bool,
    },
    Wgcnii {
        conv: Conv1x1,
        alpha_l: f64,
        beta_l: f64,
    },
}

impl LayerKind {
    pub fn name(&self) -> &'static str {
        match self {
            LayerKind::Conv { .. } => "conv",
            LayerKind::WconvV1 { .. } => "wconv_v1",
            LayerKind::WconvV2 { .. } => "wconv_v2",
            LayerKind::EdgeConvCheap { .. } => "edgeconv_cheap",
            LayerKind::Wgcnii { .. } => "wgcnii",
        }
    }
}

/// One layer: payload plus compression/quantization settings.
#[derive(Clone, Debug)]
pub struct ModelLayer {
    pub kind: LayerKind,
    pub alpha: f64,
    pub levels: usize,
    pub bits_w: u32,
    pub bits_a: u32,
    pub clip_w: Option<f64>,
    pub clip_x: Option<f64>,
    pub clip_coeff: Option<f64>,
    pub normalize_weights: bool,
    pub activation: Activation,
}

impl ModelLayer {
    pub fn plain_conv(conv: Conv1x1, activation: Activation) -> Self {
        Self {
            kind: LayerKind::Conv { conv },
            alpha: 1.0,
            levels: 0,
            bits_w: 32,
            bits_a: 32,
            clip_w: None,
            clip_x: None,
            clip_coeff: None,
            normalize_weights: false,
            activation,
        }
    }
}

/// A sequential model plus the seed that drives hierarchy construction.
#[derive(Clone, Debug)]
pub struct Model {
    pub seed: u64,
    pub layers: Vec<ModelLayer>,
}

fn effective_conv(layer: &ModelLayer, conv: &Conv1x1) -> Result<Conv1x1> {
    if layer.bits_w >= 32 {
        return Ok(conv.clone());
    }
    let clip = layer.clip_w.ok_or_else(|| {
        Error::InvalidModel(format!(
            "layer kind {} quantizes weights but has no clip_w",
            layer.kind.name()
        ))
    })?;
    let q = Quantizer::signed(layer.bits_w, clip)?;
    let w = if layer.normalize_weights {
        weight_normalize(conv.weights())
    } else {
        conv.weights().clone()
    };
    Ok(Conv1x1::new(quantize_weights(&w, &q)?.0))
}

fn quantize_input(layer: &ModelLayer, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    if layer.bits_a >= 32 {
        return Ok(x.clone());
    }
    let clip = layer.clip_x.ok_or_else(|| {
        Error::InvalidModel("layer quantizes activations but has no clip_x".into())
    })?;
    let q = Quantizer::unsigned(layer.bits_a, clip)?;
    Ok(quantize_activations(x, &q)?.0)
}

fn coeff_quantizer(layer: &ModelLayer) -> Result<Option<Quantizer>> {
    if layer.bits_a >= 32 {
        return Ok(None);
    }
    let clip = layer.clip_coeff.ok_or_else(|| {
        Error::InvalidModel("layer quantizes activations but has no clip_coeff".into())
    })?;
    Ok(Some(Quantizer::signed(layer.bits_a, clip)?))
}

fn apply_spatial(
    spatial: Spatial,
    pm: &PropagationMatrix,
    h: &FeatureMatrix,
) -> Result<FeatureMatrix> {
    match spatial {
        Spatial::None => Ok(h.clone()),
        Spatial::Gcn => pm.apply(h),
    }
}

/// Runs the model over graph `g` starting from features `f`; returns the
/// final layer output (logits for classifiers: the last layer typically has
/// no activation).
pub fn run_model(model: &Model, g: &Graph, f: &FeatureMatrix) -> Result<FeatureMatrix> {
    let pm = gcn_propagation(g);
    let mut h = f.clone();
    let mut f0: Option<FeatureMatrix> = None;
    for layer in &model.layers {
        h = match &layer.kind {
            LayerKind::Conv { conv } => {
                let x = quantize_input(layer, &h)?;
                let k = effective_conv(layer, conv)?;
                layer.activation.apply(&k.apply(&x)?)
            }
            LayerKind::WconvV1 { conv, spatial } => {
                let x = apply_spatial(*spatial, &pm, &h)?;
                let x = quantize_input(layer, &x)?;
                let stage = WaveletStage::build(g, &x, layer.levels, layer.alpha, model.seed)?;
                let k = effective_conv(layer, conv)?;
                let dense = stage.analyze(&x)?;
                let dense = match coeff_quantizer(layer)? {
                    Some(q) => quantize_coefficients(&dense, &q)?.0,
                    None => dense,
                };
                layer
                    .activation
                    .apply(&stage.synthesize(&k.apply(&dense)?)?)
            }
            LayerKind::WconvV2 { convs, spatial } => {
                let x = apply_spatial(*spatial, &pm, &h)?;
                let x = quantize_input(layer, &x)?;
                let stage = WaveletStage::build(g, &x, layer.levels, layer.alpha, model.seed)?;
                let effective: Vec<Conv1x1> = convs
                    .iter()
                    .map(|k| effective_conv(layer, k))
                    .collect::<Result<_>>()?;
                let cq = coeff_quantizer(layer)?;
                compressed_conv_v2_with(&stage, &x, &effective, layer.activation, cq.as_ref())?
            }
            LayerKind::EdgeConvCheap {
                k1,
                k2,
                aggregator,
                wavelet,
            } => {
                let x = quantize_input(layer, &h)?;
                let cheap = EdgeConvCheap {
                    k1: effective_conv(layer, k1)?,
                    k2: effective_conv(layer, k2)?,
                    aggregator: *aggregator,
                    activation: layer.activation,
                };
                let stage = if *wavelet {
                    Some(WaveletStage::build(
                        g,
                        &x,
                        layer.levels,
                        layer.alpha,
                        model.seed,
                    )?)
                } else {
                    None
                };
                let cq = coeff_quantizer(layer)?;
                edge_conv_cheap_with(&x, g, &cheap, stage.as_ref(), cq.as_ref())?
            }
            LayerKind::Wgcnii {
                conv,
                alpha_l,
                beta_l,
            } => {
                if f0.is_none() {
                    f0 = Some(h.clone());
                }
                let s = gcnii_spatial(&pm, &h, f0.as_ref().unwrap(), *alpha_l)?;
                let s = quantize_input(layer, &s)?;
                let stage = WaveletStage::build(g, &s, layer.levels, layer.alpha, model.seed)?;
                let k_eff = effective_conv(layer, conv)?;
                let mut w = k_eff.weights().scale(*beta_l);
                for i in 0..w.rows() {
                    w.set(i, i, w.get(i, i) + (1.0 - beta_l));
                }
                let mixed = Conv1x1::new(w);
                let dense = stage.analyze(&s)?;
                let dense = match coeff_quantizer(layer)? {
                    Some(q) => quantize_coefficients(&dense, &q)?.0,
                    None => dense,
                };
                layer
                    .activation
                    .apply(&stage.synthesize(&mixed.apply(&dense)?)?)
            }
        };
    }
    Ok(h)
}

/// Converts a trained toy model into the serializable layer stack.
pub fn from_toy(toy: &ToyModel) -> Model {
    let mut layers = Vec::with_capacity(toy.convs.len() + 2);
    layers.push(ModelLayer::plain_conv(toy.embed.clone(), Activation::Relu));
    for (l, conv) in toy.convs.iter().enumerate() {
        let (bits_w, bits_a, clip_w, clip_x, clip_coeff, normalize) = match &toy.quant[l] {
            Some(q) => (
                q.weight.bits(),
                q.input.bits(),
                Some(q.weight.clip()),
                Some(q.input.clip()),
                Some(q.coeff.clip()),
                q.normalize_weights,
            ),
            None => (32, 32, None, None, None, false),
        };
        let kind = match toy.arch {
            Arch::Wgcn => LayerKind::WconvV1 {
                conv: conv.clone(),
                spatial: Spatial::Gcn,
            },
            Arch::Wgcnii => LayerKind::Wgcnii {
                conv: conv.clone(),
                alpha_l: toy.gcnii_alpha,
                beta_l: toy.beta(l),
            },
        };
        layers.push(ModelLayer {
            kind,
            alpha: toy.alpha,
            levels: toy.levels,
            bits_w,
            bits_a,
            clip_w,
            clip_x,
            clip_coeff,
            normalize_weights: normalize,
            activation: Activation::Relu,
        });
    }
    layers.push(ModelLayer::plain_conv(
        toy.classify.clone(),
        Activation::Identity,
    ));
    Model {
        seed: toy.seed,
        layers,
    }
}

fn write_weights(out: &mut String, key: &str, w: &FeatureMatrix) {
    let _ = writeln!(out, "in: {}", w.cols());
    let _ = writeln!(out, "out: {}", w.rows());
    let _ = writeln!(out, "{key}:");
    for r in 0..w.rows() {
        for (i, v) in w.row(r).iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
}

/// Serializes a model to the text format.
pub fn format_model(model: &Model) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "layers: {}", model.layers.len());
    let _ = writeln!(out, "seed: {}", model.seed);
    for (i, layer) in model.layers.iter().enumerate() {
        let _ = writeln!(out, "layer: {i}");
        let _ = writeln!(out, "kind: {}", layer.kind.name());
        match &layer.kind {
            LayerKind::Conv { .. } => {}
            LayerKind::WconvV1 { spatial, .. } | LayerKind::WconvV2 { spatial, .. } => {
                let s = match spatial {
                    Spatial::None => "none",
                    Spatial::Gcn => "gcn",
                };
                let _ = writeln!(out, "spatial: {s}");
            }
            LayerKind::EdgeConvCheap {
                aggregator,
                wavelet,
                ..
            } => {
                let a = match aggregator {
                    Aggregator::Max => "max",
                    Aggregator::Mean => "mean",
                };
                let _ = writeln!(out, "aggregator: {a}");
                let _ = writeln!(out, "wavelet: {}", u8::from(*wavelet));
            }
            LayerKind::Wgcnii {
                alpha_l, beta_l, ..
            } => {
                let _ = writeln!(out, "alpha_l: {alpha_l}");
                let _ = writeln!(out, "beta_l: {beta_l}");
            }
        }
        let _ = writeln!(out, "alpha: {}", layer.alpha);
        let _ = writeln!(out, "levels: {}", layer.levels);
        let _ = writeln!(out, "bits_w: {}", layer.bits_w);
        let _ = writeln!(out, "bits_a: {}", layer.bits_a);
        if layer.bits_w < 32 {
            let _ = writeln!(out, "clip_w: {}", layer.clip_w.unwrap_or(1.0));
            let _ = writeln!(
                out,
                "normalize_weights: {}",
                u8::from(layer.normalize_weights)
            );
        }
        if layer.bits_a < 32 {
            let _ = writeln!(out, "clip_x: {}", layer.clip_x.unwrap_or(1.0));
            let _ = writeln!(out, "clip_coeff: {}", layer.clip_coeff.unwrap_or(1.0));
        }
        let act = match layer.activation {
            Activation::Relu => "relu",
            Activation::Identity => "none",
        };
        let _ = writeln!(out, "activation: {act}");
        match &layer.kind {
            LayerKind::Conv { conv }
            | LayerKind::WconvV1 { conv, .. }
            | LayerKind::Wgcnii { conv, .. } => write_weights(&mut out, "weights", conv.weights()),
            LayerKind::WconvV2 { convs, .. } => {
                let _ = writeln!(out, "convs: {}", convs.len());
                for k in convs {
                    write_weights(&mut out, "weights", k.weights());
                }
            }
            LayerKind::EdgeConvCheap { k1, k2, .. } => {
                write_weights(&mut out, "weights_k1", k1.weights());
                let _ = writeln!(out, "in: {}", k2.weights().cols());
                let _ = writeln!(out, "out: {}", k2.weights().rows());
                let _ = writeln!(out, "weights_k2:");
                for r in 0..k2.weights().rows() {
                    for (i, v) in k2.weights().row(r).iter().enumerate() {
                        if i > 0 {
                            out.push(' ');
                        }
                        let _ = write!(out, "{v}");
                    }
                    out.push('\n');
                }
            }
        }
    }
    out
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_model(model))?;
    Ok(())
}

struct Reader<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().collect(),
            pos: 0,
        }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        while self.pos < self.lines.len() && self.lines[self.pos].trim().is_empty() {
            self.pos += 1;
        }
        if self.pos >= self.lines.len() {
            return Err(Error::InvalidModel("unexpected end of file".into()));
        }
        let line = self.lines[self.pos];
        self.pos += 1;
        Ok(line)
    }

    fn expect(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        let prefix = format!("{key}:");
        line.strip_prefix(&prefix).map(str::trim).ok_or_else(|| {
            Error::InvalidModel(format!(
                "expected `{key}:` at line {}, found `{line}`",
                self.pos
            ))
        })
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.expect(key)?;
        v.parse()
            .map_err(|_| Error::InvalidModel(format!("invalid value for `{key}`: `{v}`")))
    }

    fn weight_rows(&mut self, rows: usize, cols: usize) -> Result<FeatureMatrix> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let line = self.next_line()?;
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| Error::InvalidModel(format!("invalid weight `{tok}`")))?;
                data.push(v);
            }
        }
        FeatureMatrix::from_vec(rows, cols, data)
            .map_err(|e| Error::InvalidModel(format!("weight block: {e}")))
    }

    fn weights(&mut self, key: &str) -> Result<FeatureMatrix> {
        let c_in: usize = self.parse("in")?;
        let c_out: usize = self.parse("out")?;
        let marker = self.expect(key)?;
        if !marker.is_empty() {
            return Err(Error::InvalidModel(format!(
                "unexpected content after `{key}:`"
            )));
        }
        self.weight_rows(c_out, c_in)
    }
}

fn parse_spatial(s: &str) -> Result<Spatial> {
    match s {
        "none" => Ok(Spatial::None),
        "gcn" => Ok(Spatial::Gcn),
        other => Err(Error::InvalidModel(format!("unknown spatial `{other}`"))),
    }
}

/// Parses the text model format.
pub fn parse_model(text: &str) -> Result<Model> {
    let mut r = Reader::new(text);
    let n_layers: usize = r.parse("layers")?;
    let seed: u64 = r.parse("seed")?;
    let mut layers = Vec::with_capacity(n_layers);
    for i in 0..n_layers {
        let idx: usize = r.parse("layer")?;
        if idx != i {
            return Err(Error::InvalidModel(format!(
                "layer sections out of order: expected {i}, found {idx}"
            )));
        }
        let kind_name = r.expect("kind")?.to_string();
        let mut spatial = Spatial::None;
        let mut aggregator = Aggregator::Max;
        let mut wavelet = false;
        let mut alpha_l = 0.0;
        let mut beta_l = 0.0;
        match kind_name.as_str() {
            "conv" => {}
            "wconv_v1" | "wconv_v2" => {
                spatial = parse_spatial(r.expect("spatial")?)?;
            }
            "edgeconv_cheap" => {
                aggregator = match r.expect("aggregator")? {
                    "max" => Aggregator::Max,
                    "mean" => Aggregator::Mean,
                    other => {
                        return Err(Error::InvalidModel(format!("unknown aggregator `{other}`")))
                    }
                };
                wavelet = r.parse::<u8>("wavelet")? != 0;
            }
            "wgcnii" => {
                alpha_l = r.parse("alpha_l")?;
                beta_l = r.parse("beta_l")?;
            }
            other => return Err(Error::InvalidModel(format!("unknown layer kind `{other}`"))),
        }
        let alpha: f64 = r.parse("alpha")?;
        let levels: usize = r.parse("levels")?;
        let bits_w: u32 = r.parse("bits_w")?;
        let bits_a: u32 = r.parse("bits_a")?;
        let (mut clip_w, mut normalize_weights) = (None, false);
        if bits_w < 32 {
            clip_w = Some(r.parse("clip_w")?);
            normalize_weights = r.parse::<u8>("normalize_weights")? != 0;
        }
        let (mut clip_x, mut clip_coeff) = (None, None);
        if bits_a < 32 {
            clip_x = Some(r.parse("clip_x")?);
            clip_coeff = Some(r.parse("clip_coeff")?);
        }
        let activation = match r.expect("activation")? {
            "relu" => Activation::Relu,
            "none" => Activation::Identity,
            other => return Err(Error::InvalidModel(format!("unknown activation `{other}`"))),
        };
        let kind = match kind_name.as_str() {
            "conv" => LayerKind::Conv {
                conv: Conv1x1::new(r.weights("weights")?),
            },
            "wconv_v1" => LayerKind::WconvV1 {
                conv: Conv1x1::new(r.weights("weights")?),
                spatial,
            },
            "wconv_v2" => {
                let m: usize = r.parse("convs")?;
                if m == 0 {
                    return Err(Error::InvalidModel(
                        "wconv_v2 needs at least one conv".into(),
                    ));
                }
                let mut convs = Vec::with_capacity(m);
                for _ in 0..m {
                    convs.push(Conv1x1::new(r.weights("weights")?));
                }
                LayerKind::WconvV2 { convs, spatial }
            }
            "edgeconv_cheap" => {
                let k1 = Conv1x1::new(r.weights("weights_k1")?);
                let k2 = Conv1x1::new(r.weights("weights_k2")?);
                if k1.c_in() != k2.c_in() || k1.c_out() != k2.c_out() {
                    return Err(Error::InvalidModel(
                        "edgeconv_cheap convolutions must share a shape".into(),
                    ));
                }
                LayerKind::EdgeConvCheap {
                    k1,
                    k2,
                    aggregator,
                    wavelet,
                }
            }
            "wgcnii" => LayerKind::Wgcnii {
                conv: Conv1x1::new(r.weights("weights")?),
                alpha_l,
                beta_l,
            },
            _ => unreachable!(),
        };
        layers.push(ModelLayer {
            kind,
            alpha,
            levels,
            bits_w,
            bits_a,
            clip_w,
            clip_x,
            clip_coeff,
            normalize_weights,
            activation,
        });
    }
    Ok(Model { seed, layers })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    parse_model(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::gcn_propagation;
    use crate::synth::gen_planted;
    use crate::train::{forward_tape, init_model, train_toy, TrainConfig};

    #[test]
    fn toy_model_round_trips_through_text() {
        let (g, x, labels) = gen_planted(30, 2, 0.4, 0.05, 3).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            hidden: 6,
            alpha: 0.5,
            ..Default::default()
        };
        let (toy, _) = train_toy(&g, &x, &labels, &cfg).unwrap();
        let model = from_toy(&toy);
        let text = format_model(&model);
        let back = parse_model(&text).unwrap();
        let out_a = run_model(&model, &g, &x).unwrap();
        let out_b = run_model(&back, &g, &x).unwrap();
        assert_eq!(out_a, out_b);
    }

    #[test]
    fn executor_matches_training_forward() {
        for arch in [Arch::Wgcn, Arch::Wgcnii] {
            let (g, x, _) = gen_planted(26, 2, 0.4, 0.05, 4).unwrap();
            let cfg = TrainConfig {
                hidden: 5,
                alpha: 0.5,
                arch,
                ..Default::default()
            };
            let mut toy = init_model(x.cols(), 2, &cfg);
            // Give the quantizers real clips without training.
            let pm = gcn_propagation(&g);
            let mut float_toy = toy.clone();
            for q in &mut float_toy.quant {
                *q = None;
            }
            let tape = forward_tape(&float_toy, &g, &pm, &x, None).unwrap();
            for (l, q) in toy.quant.iter_mut().enumerate() {
                if let Some(q) = q {
                    q.input.set_clip(tape.layers[l].spatial.max_abs().max(1e-8));
                    q.coeff.set_clip(tape.layers[l].coeffs.max_abs().max(1e-8));
                    let normed = crate::quant::weight_normalize(toy.convs[l].weights());
                    q.weight.set_clip(normed.max_abs().max(1e-8));
                }
            }
            let tape_q = forward_tape(&toy, &g, &pm, &x, None).unwrap();
            let model = from_toy(&toy);
            let out = run_model(&model, &g, &x).unwrap();
            assert!(
                out.max_abs_diff(&tape_q.logits) < 1e-12,
                "executor deviates from the training forward pass"
            );
        }
    }

    #[test]
    fn v2_and_edgeconv_sections_round_trip() {
        let k = |o: usize, i: usize, s: u64| Conv1x1::new(crate::synth::gaussian_features(o, i, s));
        let model = Model {
            seed: 5,
            layers: vec![
                ModelLayer {
                    kind: LayerKind::WconvV2 {
                        convs: vec![k(6, 3, 1), k(4, 6, 2)],
                        spatial: Spatial::None,
                    },
                    alpha: 0.5,
                    levels: 2,
                    bits_w: 8,
                    bits_a: 8,
                    clip_w: Some(1.25),
                    clip_x: Some(2.5),
                    clip_coeff: Some(5.0),
                    normalize_weights: true,
                    activation: Activation::Relu,
                },
                ModelLayer {
                    kind: LayerKind::EdgeConvCheap {
                        k1: k(4, 4, 3),
                        k2: k(4, 4, 4),
                        aggregator: Aggregator::Mean,
                        wavelet: true,
                    },
                    alpha: 0.25,
                    levels: 3,
                    bits_w: 32,
                    bits_a: 32,
                    clip_w: None,
                    clip_x: None,
                    clip_coeff: None,
                    normalize_weights: false,
                    activation: Activation::Relu,
                },
            ],
        };
        let text = format_model(&model);
        let back = parse_model(&text).unwrap();
        let g = crate::synth::gen_er(12, 0.4, 6).unwrap();
        let f = crate::synth::gaussian_features(12, 3, 7).map(|v| v.abs());
        let a = run_model(&model, &g, &f).unwrap();
        let b = run_model(&back, &g, &f).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_malformed_models() {
        assert!(parse_model("").is_err());
        assert!(parse_model("layers: 1\nseed: 0\nlayer: 0\nkind: nope\n").is_err());
        let truncated = "layers: 1\nseed: 0\nlayer: 0\nkind: conv\nalpha: 1\nlevels: 0\n";
        assert!(parse_model(truncated).is_err());
    }
}
