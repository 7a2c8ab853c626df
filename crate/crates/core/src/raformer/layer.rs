use std::time::{Duration, Instant};

use super::block::transformer_block;
use super::config::RaformerConfig;
use super::sfa::sfa_align;
use super::weights::{DecoderWeights, EncoderWeights, LayerWeights, ModelWeights};
use super::window::{reverse_pack, select_topk_windows, window_importance, window_partition};
use crate::error::{Error, Result};
use crate::mask::MaskSequence;
use crate::tensor::{conv2d, conv2d_strided, leaky_relu, upsample_nn2x, Tensor};

/// Intermediate results of one Raformer layer.
#[derive(Debug, Clone)]
pub struct LayerOutput {
    pub output: Tensor,
    /// `F*`, the transformer block output.
    pub refined: Tensor,
    /// `F^NR`, the aligned non-redundant features.
    pub non_redundant: Tensor,
    /// Kept window indices per frame.
    pub kept: Vec<Vec<usize>>,
}

/// `F_n = β·SFA(RAA(F*)) + γ·F*` with `F* = TransformerBlock(F_{n-1})`.
pub fn raformer_layer(
    feature: &Tensor,
    weights: &LayerWeights,
    config: &RaformerConfig,
) -> Result<Tensor> {
    raformer_layer_detailed(feature, weights, config).map(|o| o.output)
}

pub fn raformer_layer_detailed(
    feature: &Tensor,
    weights: &LayerWeights,
    config: &RaformerConfig,
) -> Result<LayerOutput> {
    let refined = transformer_block(feature, weights, config)?;
    let windows = window_partition(&refined, config.window_h, config.window_w)?;
    let scores = window_importance(&windows, weights)?;
    let selected = select_topk_windows(&windows, &scores, config.k())?;
    let packed = reverse_pack(&selected)?;
    let non_redundant = sfa_align(&packed, &weights.sfa)?;
    let output = merge(&non_redundant, &refined, weights.beta, weights.gamma)?;
    Ok(LayerOutput {
        output,
        refined,
        non_redundant,
        kept: selected.kept,
    })
}

/// `β·a + γ·b`, computed in `f64` per element.
pub fn merge(non_redundant: &Tensor, refined: &Tensor, beta: f32, gamma: f32) -> Result<Tensor> {
    let (b, g) = (beta as f64, gamma as f64);
    non_redundant.zip_map(refined, |x, y| (b * x as f64 + g * y as f64) as f32)
}

fn clip_dims(clip: &Tensor) -> Result<(usize, usize, usize)> {
    match clip.shape()[..] {
        [t, h, w, 3] => Ok((t, h, w)),
        _ => Err(Error::Dimension(format!(
            "expected T×H×W×3 clip, got {:?}",
            clip.shape()
        ))),
    }
}

/// Zeroes hole pixels, scales to `[0, 1]` and applies two stride-2 convolutions.
pub fn encode_frames(clip: &Tensor, masks: &MaskSequence, weights: &EncoderWeights) -> Result<Tensor> {
    let (t, h, w) = clip_dims(clip)?;
    if masks.len() != t || masks.resolution() != Some((h, w)) {
        return Err(Error::Dimension(format!(
            "masks {:?}×{} do not match clip {:?}",
            masks.resolution(),
            masks.len(),
            clip.shape()
        )));
    }
    let mut input = clip.scale(1.0 / 255.0);
    let data = input.data_mut();
    for (ti, m) in masks.frames().iter().enumerate() {
        for (p, &bit) in m.bits().iter().enumerate() {
            if bit != 0 {
                data[(ti * h * w + p) * 3..][..3].fill(0.0);
            }
        }
    }
    let x = conv2d_strided(&input, &weights.conv1, &weights.conv1_bias, 2)?;
    let x = leaky_relu(&x, weights.leaky_slope);
    conv2d_strided(&x, &weights.conv2, &weights.conv2_bias, 2)
}

/// Two nearest-2× upsample + convolution stages back to RGB in `[0, 255]`.
pub fn decode_features(features: &Tensor, weights: &DecoderWeights) -> Result<Tensor> {
    let x = conv2d(&upsample_nn2x(features)?, &weights.conv1, &weights.conv1_bias)?;
    let x = leaky_relu(&x, weights.leaky_slope);
    let x = conv2d(&upsample_nn2x(&x)?, &weights.conv2, &weights.conv2_bias)?;
    Ok(x.map(|v| ((v.tanh() + 1.0) * 127.5).clamp(0.0, 255.0)))
}

/// Prediction inside holes, original content elsewhere.
pub fn composite(prediction: &Tensor, clip: &Tensor, masks: &MaskSequence) -> Result<Tensor> {
    let (t, h, w) = clip_dims(clip)?;
    if prediction.shape() != clip.shape() || masks.len() != t {
        return Err(Error::dims("composite", prediction.shape(), clip.shape()));
    }
    let mut out = clip.clone();
    let (pd, od) = (prediction.data(), out.data_mut());
    for (ti, m) in masks.frames().iter().enumerate() {
        for (p, &bit) in m.bits().iter().enumerate() {
            if bit != 0 {
                let o = (ti * h * w + p) * 3;
                od[o..o + 3].copy_from_slice(&pd[o..o + 3]);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct LayerTrace {
    pub kept: Vec<Vec<usize>>,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    /// Raw decoder output, `T×H×W×3` in `[0, 255]`.
    pub prediction: Tensor,
    pub layers: Vec<LayerTrace>,
}

/// Encoder, stacked Raformer layers and decoder with fixed weights.
#[derive(Debug, Clone)]
pub struct Raformer {
    weights: ModelWeights,
}

impl Raformer {
    pub fn new(config: &RaformerConfig) -> Result<Self> {
        Ok(Raformer {
            weights: ModelWeights::init(config)?,
        })
    }

    pub fn from_weights(weights: ModelWeights) -> Result<Self> {
        weights.config.validate()?;
        Ok(Raformer { weights })
    }

    pub fn config(&self) -> &RaformerConfig {
        &self.weights.config
    }

    pub fn weights(&self) -> &ModelWeights {
        &self.weights
    }

    pub fn forward(&self, clip: &Tensor, masks: &MaskSequence) -> Result<ForwardOutput> {
        let (_, h, w) = clip_dims(clip)?;
        let cfg = &self.weights.config;
        if (h, w) != (cfg.height, cfg.width) {
            return Err(Error::Dimension(format!(
                "clip is {h}×{w}, model expects {}×{}",
                cfg.height, cfg.width
            )));
        }
        let mut feature = encode_frames(clip, masks, &self.weights.encoder)?;
        let mut layers = Vec::with_capacity(self.weights.layers.len());
        for lw in &self.weights.layers {
            let start = Instant::now();
            let out = raformer_layer_detailed(&feature, lw, cfg)?;
            layers.push(LayerTrace {
                kept: out.kept,
                elapsed: start.elapsed(),
            });
            feature = out.output;
        }
        let prediction = decode_features(&feature, &self.weights.decoder)?;
        Ok(ForwardOutput { prediction, layers })
    }
}
