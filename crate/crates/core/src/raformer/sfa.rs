//! Soft feature alignment: brings packed non-redundant windows back to the
//! `T × (H/4) × (W/4) × C` feature grid.

use super::config::PatchGeometry;
use super::patches::soft_split;
use super::weights::SfaWeights;
use crate::error::{Error, Result};
use crate::tensor::{conv2d, leaky_relu, linear, upsample_nn2x, Tensor};

/// Composite of the packed groups: concatenates `g × T × h × w × C` along
/// channels into `T × h × w × (g·C)` (group-major channel order).
pub fn composite_groups(packed: &Tensor) -> Result<Tensor> {
    let (g, t, h, w, c) = match packed.shape()[..] {
        [g, t, h, w, c] => (g, t, h, w, c),
        _ => {
            return Err(Error::Dimension(format!(
                "expected g×T×H×W×C packed windows, got {:?}",
                packed.shape()
            )))
        }
    };
    let src = packed.data();
    let positions = t * h * w;
    let mut out = vec![0.0f32; positions * g * c];
    for grp in 0..g {
        for p in 0..positions {
            let s = (grp * positions + p) * c;
            let d = p * g * c + grp * c;
            out[d..d + c].copy_from_slice(&src[s..s + c]);
        }
    }
    Tensor::new(vec![t, h, w, g * c], out)
}

/// `F^α' = Conv(Upsample(SC(F^α)))`, then
/// `F^NR = SS(Conv(LeakyReLU(F^α')))` where the final split is a 3×3
/// stride-1 neighbourhood embedding projected from `9C` back to `C`.
pub fn sfa_align(packed: &Tensor, weights: &SfaWeights) -> Result<Tensor> {
    let composed = composite_groups(packed)?;
    let expected_in = weights.conv1.shape()[2];
    if composed.last_dim() != expected_in {
        return Err(Error::dims(
            "soft feature alignment input channels",
            composed.shape(),
            weights.conv1.shape(),
        ));
    }
    let up = upsample_nn2x(&composed)?;
    let aligned = conv2d(&up, &weights.conv1, &weights.conv1_bias)?;
    let refined = conv2d(
        &leaky_relu(&aligned, weights.leaky_slope),
        &weights.conv2,
        &weights.conv2_bias,
    )?;

    let (t, h, w, c) = match refined.shape()[..] {
        [t, h, w, c] => (t, h, w, c),
        _ => unreachable!("conv2d keeps rank"),
    };
    let neighbourhoods = soft_split(&refined, PatchGeometry::new(3, 1, 1)?)?;
    let projected = linear(&neighbourhoods, &weights.proj, &weights.proj_bias)?;
    projected.reshape(&[t, h, w, c])
}
