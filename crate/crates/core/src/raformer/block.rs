//! Baseline transformer sub-block: pre-norm multi-head self-attention over
//! soft-split tokens, then a position-wise feed-forward network.

use rayon::prelude::*;

use super::config::{PatchGeometry, RaformerConfig};
use super::patches::{soft_composite, soft_split};
use super::weights::{AttentionWeights, LayerWeights};
use crate::error::{Error, Result};
use crate::tensor::{gelu, layer_norm_affine, linear, softmax_in_place, Tensor, LAYER_NORM_EPS};

/// `F' = MSA(LN₁(F)) + F`, `F* = FFN(LN₂(F')) + F'`.
pub fn transformer_block(
    feature: &Tensor,
    weights: &LayerWeights,
    config: &RaformerConfig,
) -> Result<Tensor> {
    let c = feature_channels(feature)?;
    if c != weights.ln1.scale.numel() {
        return Err(Error::dims(
            "transformer block channels",
            feature.shape(),
            weights.ln1.scale.shape(),
        ));
    }
    let geom = config.block_geometry()?;

    let normed = layer_norm_affine(feature, &weights.ln1.scale, &weights.ln1.shift, LAYER_NORM_EPS)?;
    let attended = self_attention(&normed, &weights.msa, geom, config.heads)?;
    let mid = attended.add(feature)?;

    let normed = layer_norm_affine(&mid, &weights.ln2.scale, &weights.ln2.shift, LAYER_NORM_EPS)?;
    let hidden = gelu(&linear(&normed, &weights.ffn.w1, &weights.ffn.b1)?);
    let out = linear(&hidden, &weights.ffn.w2, &weights.ffn.b2)?;
    out.add(&mid)
}

fn feature_channels(feature: &Tensor) -> Result<usize> {
    match feature.shape()[..] {
        [_, _, _, c] => Ok(c),
        _ => Err(Error::Dimension(format!(
            "expected T×H×W×C feature map, got {:?}",
            feature.shape()
        ))),
    }
}

/// Dense multi-head attention across every token of every frame.
pub fn self_attention(
    feature: &Tensor,
    weights: &AttentionWeights,
    geom: PatchGeometry,
    heads: usize,
) -> Result<Tensor> {
    let (t, h, w) = (feature.shape()[0], feature.shape()[1], feature.shape()[2]);
    let tokens = soft_split(feature, geom)?;
    let (ntok, dim) = (tokens.shape()[1], tokens.shape()[2]);
    let tokens = tokens.reshape(&[t * ntok, dim])?;

    let q = linear(&tokens, &weights.wq, &weights.bq)?;
    let k = linear(&tokens, &weights.wk, &weights.bk)?;
    let v = linear(&tokens, &weights.wv, &weights.bv)?;
    let c = q.last_dim();
    if heads == 0 || c % heads != 0 {
        return Err(Error::Config(format!(
            "hidden width {c} not divisible by {heads} heads"
        )));
    }
    let dh = c / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let m = t * ntok;
    let (qd, kd, vd) = (q.data(), k.data(), v.data());

    // keys transposed per head to `[head][e][j]`, so each query's logits
    // accumulate across all keys at once (same per-key summation order)
    let mut kt = vec![0.0f64; m * c];
    for j in 0..m {
        for hd in 0..heads {
            for e in 0..dh {
                kt[(hd * dh + e) * m + j] = kd[j * c + hd * dh + e] as f64;
            }
        }
    }

    let mut ctx = vec![0.0f32; m * c];
    ctx.par_chunks_mut(c).enumerate().for_each(|(i, out)| {
        let mut logits = vec![0.0f32; m];
        let mut dots = vec![0.0f64; m];
        let mut acc = vec![0.0f64; dh];
        for hd in 0..heads {
            let qi = &qd[i * c + hd * dh..][..dh];
            dots.fill(0.0);
            for (e, &qv) in qi.iter().enumerate() {
                let qv = qv as f64;
                let krow = &kt[(hd * dh + e) * m..][..m];
                for (d, &kv) in dots.iter_mut().zip(krow) {
                    *d += qv * kv;
                }
            }
            for (l, &d) in logits.iter_mut().zip(&dots) {
                *l = (d * scale) as f32;
            }
            softmax_in_place(&mut logits);
            acc.fill(0.0);
            for (j, &a) in logits.iter().enumerate() {
                let a = a as f64;
                let vj = &vd[j * c + hd * dh..][..dh];
                for (s, &vv) in acc.iter_mut().zip(vj) {
                    *s += a * vv as f64;
                }
            }
            for (o, &s) in out[hd * dh..(hd + 1) * dh].iter_mut().zip(&acc) {
                *o = s as f32;
            }
        }
    });

    let ctx = Tensor::new(vec![m, c], ctx)?;
    let projected = linear(&ctx, &weights.wo, &weights.bo)?.reshape(&[t, ntok, dim])?;
    soft_composite(&projected, (h, w), geom)
}
