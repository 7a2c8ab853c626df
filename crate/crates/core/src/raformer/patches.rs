//! Soft split (overlapping patch extraction) and soft composite
//! (overlap-add with per-pixel normalization).
//!
//! Tokens are laid out channels-last: token element `(ky·kernel + kx)·C + c`
//! holds channel `c` of patch pixel `(ky, kx)`.

use rayon::prelude::*;

use super::config::PatchGeometry;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

fn feature_dims(feature: &Tensor) -> Result<(usize, usize, usize, usize)> {
    match feature.shape()[..] {
        [t, h, w, c] => Ok((t, h, w, c)),
        _ => Err(Error::Dimension(format!(
            "expected T×H×W×C feature map, got {:?}",
            feature.shape()
        ))),
    }
}

/// `T×H×W×C → T×N×(kernel²·C)` with zero padding.
pub fn soft_split(feature: &Tensor, geom: PatchGeometry) -> Result<Tensor> {
    let (t, h, w, c) = feature_dims(feature)?;
    let (th, tw) = geom.token_grid(h, w)?;
    let k = geom.kernel;
    let dim = k * k * c;
    let ntok = th * tw;
    let src = feature.data();
    let mut out = vec![0.0f32; t * ntok * dim];
    out.par_chunks_mut(dim).enumerate().for_each(|(idx, token)| {
        let (ti, tok) = (idx / ntok, idx % ntok);
        let (py, px) = (tok / tw, tok % tw);
        let frame = &src[ti * h * w * c..(ti + 1) * h * w * c];
        for ky in 0..k {
            let y = (py * geom.stride + ky) as isize - geom.pad as isize;
            if y < 0 || y >= h as isize {
                continue;
            }
            for kx in 0..k {
                let x = (px * geom.stride + kx) as isize - geom.pad as isize;
                if x < 0 || x >= w as isize {
                    continue;
                }
                let s = (y as usize * w + x as usize) * c;
                let d = (ky * k + kx) * c;
                token[d..d + c].copy_from_slice(&frame[s..s + c]);
            }
        }
    });
    Tensor::new(vec![t, ntok, dim], out)
}

/// Inverse of [`soft_split`]: overlap-adds every patch onto the padded
/// canvas, divides each position by the number of patches covering it and
/// crops the padding. `out_hw` is the `(H, W)` of the original map.
pub fn soft_composite(tokens: &Tensor, out_hw: (usize, usize), geom: PatchGeometry) -> Result<Tensor> {
    let (t, ntok, dim) = match tokens.shape()[..] {
        [t, n, d] => (t, n, d),
        _ => {
            return Err(Error::Dimension(format!(
                "expected T×N×D tokens, got {:?}",
                tokens.shape()
            )))
        }
    };
    let (h, w) = out_hw;
    let (th, tw) = geom.token_grid(h, w)?;
    let k = geom.kernel;
    if ntok != th * tw || dim % (k * k) != 0 {
        return Err(Error::Dimension(format!(
            "{ntok} tokens of width {dim} do not match geometry {geom:?} on {h}×{w} ({} tokens)",
            th * tw
        )));
    }
    let c = dim / (k * k);
    let (ph, pw) = (h + 2 * geom.pad, w + 2 * geom.pad);

    let mut counts = vec![0u32; ph * pw];
    for py in 0..th {
        for px in 0..tw {
            for ky in 0..k {
                for kx in 0..k {
                    counts[(py * geom.stride + ky) * pw + px * geom.stride + kx] += 1;
                }
            }
        }
    }

    let src = tokens.data();
    let mut out = vec![0.0f32; t * h * w * c];
    // each output row gathers its contributions in fixed patch order
    out.par_chunks_mut(w * c).enumerate().for_each(|(row_idx, orow)| {
        let (ti, y) = (row_idx / h, row_idx % h);
        let yy = y + geom.pad;
        let mut acc = vec![0.0f64; w * c];
        for py in 0..th {
            let y0 = py * geom.stride;
            if yy < y0 || yy >= y0 + k {
                continue;
            }
            let ky = yy - y0;
            for px in 0..tw {
                let x0 = px * geom.stride;
                let token = &src[(ti * ntok + py * tw + px) * dim..][..dim];
                for kx in 0..k {
                    let xx = x0 + kx;
                    if xx < geom.pad || xx >= geom.pad + w {
                        continue;
                    }
                    let x = xx - geom.pad;
                    let part = &token[(ky * k + kx) * c..][..c];
                    for (a, &v) in acc[x * c..(x + 1) * c].iter_mut().zip(part) {
                        *a += v as f64;
                    }
                }
            }
        }
        for x in 0..w {
            let n = counts[yy * pw + x + geom.pad];
            for ch in 0..c {
                orow[x * c + ch] = if n == 0 {
                    0.0
                } else {
                    (acc[x * c + ch] / n as f64) as f32
                };
            }
        }
    });
    Tensor::new(vec![t, h, w, c], out)
}
