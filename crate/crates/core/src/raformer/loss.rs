//! Training objective evaluators. The discriminator network itself is not
//! part of this crate; its scores are supplied by the caller.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::MaskSequence;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub rec: f32,
    pub adv_g: f32,
    pub adv_d: f32,
    pub total: f32,
    pub lambda_adv: f32,
}

/// Hole-normalized plus valid-normalized mean absolute error.
///
/// `y` and `x` are `T×H×W×C`; each mask frame is broadcast over channels.
pub fn reconstruction_loss(y: &Tensor, x: &Tensor, masks: &MaskSequence) -> Result<f32> {
    if y.shape() != x.shape() {
        return Err(Error::dims("reconstruction loss", y.shape(), x.shape()));
    }
    let (t, h, w, c) = match y.shape()[..] {
        [t, h, w, c] => (t, h, w, c),
        _ => {
            return Err(Error::Dimension(format!(
                "expected T×H×W×C, got {:?}",
                y.shape()
            )))
        }
    };
    if masks.len() != t || masks.resolution() != Some((h, w)) {
        return Err(Error::Dimension(format!(
            "masks {:?}×{} do not match {:?}",
            masks.resolution(),
            masks.len(),
            y.shape()
        )));
    }
    let (mut hole_sum, mut hole_n, mut valid_sum, mut valid_n) = (0.0f64, 0usize, 0.0f64, 0usize);
    let (yd, xd) = (y.data(), x.data());
    for (ti, m) in masks.frames().iter().enumerate() {
        for (p, &bit) in m.bits().iter().enumerate() {
            let o = (ti * h * w + p) * c;
            let err: f64 = (0..c).map(|ch| (yd[o + ch] as f64 - xd[o + ch] as f64).abs()).sum();
            if bit != 0 {
                hole_sum += err;
                hole_n += c;
            } else {
                valid_sum += err;
                valid_n += c;
            }
        }
    }
    if hole_n == 0 || valid_n == 0 {
        return Err(Error::DegenerateMask(format!(
            "need both hole and valid pixels (holes: {}, valid: {})",
            hole_n / c,
            valid_n / c
        )));
    }
    Ok((hole_sum / hole_n as f64 + valid_sum / valid_n as f64) as f32)
}

fn mean(t: &Tensor, f: impl Fn(f64) -> f64) -> f64 {
    t.data().iter().map(|&v| f(v as f64)).sum::<f64>() / t.numel() as f64
}

/// Hinge discriminator loss `E[relu(1 − D(G(x)))] + E[relu(1 + D(x))]`,
/// generator loss `−E[D(G(x))]` and total `rec + λ·adv_g`.
///
/// The discriminator term is zero when fake scores reach 1 and real scores
/// reach −1.
pub fn adversarial_losses(
    d_fake: &Tensor,
    d_real: &Tensor,
    lambda_adv: f32,
    rec: f32,
) -> Result<LossReport> {
    // a Tensor always holds at least one element
    let adv_d = mean(d_fake, |v| (1.0 - v).max(0.0)) + mean(d_real, |v| (1.0 + v).max(0.0));
    let adv_g = -mean(d_fake, |v| v);
    let total = rec as f64 + lambda_adv as f64 * adv_g;
    Ok(LossReport {
        rec,
        adv_g: adv_g as f32,
        adv_d: adv_d as f32,
        total: total as f32,
        lambda_adv,
    })
}

/// Like [`adversarial_losses`] on raw score slices, rejecting empty input.
pub fn adversarial_losses_from_scores(
    d_fake: &[f32],
    d_real: &[f32],
    lambda_adv: f32,
    rec: f32,
) -> Result<LossReport> {
    if d_fake.is_empty() || d_real.is_empty() {
        return Err(Error::Argument("discriminator scores must be non-empty".into()));
    }
    let fake = Tensor::new(vec![d_fake.len()], d_fake.to_vec())?;
    let real = Tensor::new(vec![d_real.len()], d_real.to_vec())?;
    adversarial_losses(&fake, &real, lambda_adv, rec)
}
