//! Redundancy-aware attention: window partition, window-level
//! spatio-temporal attention, per-frame top-k selection and the reverse
//! packing that feeds soft feature alignment.

use super::config::group_count;
use super::weights::{LayerWeights, RaaWeights};
use crate::error::{Error, Result};
use crate::tensor::{layer_norm_affine, matmul, softmax_lastdim, top_k_indices, Tensor, LAYER_NORM_EPS};

/// Feature windows of a clip.
///
/// `windows` is `T × count × (h·w) × C`. Before selection `count == n` and
/// `kept` is empty; after selection `count == k` and `kept[t]` lists the
/// original (row-major grid) indices of frame `t`'s windows, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    pub windows: Tensor,
    /// Window grid `(rows, cols)`; `rows · cols == n`.
    pub grid: (usize, usize),
    /// Window extent `(h, w)` in feature cells.
    pub window: (usize, usize),
    pub kept: Vec<Vec<usize>>,
}

impl WindowSet {
    pub fn frames(&self) -> usize {
        self.windows.shape()[0]
    }

    pub fn channels(&self) -> usize {
        self.windows.shape()[3]
    }

    /// Windows per frame in the full partition.
    pub fn num_windows(&self) -> usize {
        self.grid.0 * self.grid.1
    }

    /// Windows actually stored per frame.
    pub fn stored(&self) -> usize {
        self.windows.shape()[1]
    }

    /// `(H', W')` of the feature map the windows came from.
    pub fn feature_hw(&self) -> (usize, usize) {
        (self.grid.0 * self.window.0, self.grid.1 * self.window.1)
    }

    fn is_full(&self) -> bool {
        self.stored() == self.num_windows()
            && self.kept.iter().all(|k| k.iter().copied().eq(0..k.len()))
    }
}

/// Splits `T×H'×W'×C` into `h×w` windows in row-major grid order.
pub fn window_partition(feature: &Tensor, h: usize, w: usize) -> Result<WindowSet> {
    let (t, fh, fw, c) = match feature.shape()[..] {
        [t, fh, fw, c] => (t, fh, fw, c),
        _ => {
            return Err(Error::Dimension(format!(
                "expected T×H×W×C feature map, got {:?}",
                feature.shape()
            )))
        }
    };
    if h == 0 || w == 0 || fh % h != 0 || fw % w != 0 {
        return Err(Error::Argument(format!(
            "{fh}×{fw} feature map is not divisible into {h}×{w} windows"
        )));
    }
    let (rows, cols) = (fh / h, fw / w);
    let n = rows * cols;
    let src = feature.data();
    let mut out = vec![0.0f32; src.len()];
    for ti in 0..t {
        for wi in 0..n {
            let (gr, gc) = (wi / cols, wi % cols);
            for p in 0..h {
                let s = ((ti * fh + gr * h + p) * fw + gc * w) * c;
                let d = ((ti * n + wi) * h * w + p * w) * c;
                out[d..d + w * c].copy_from_slice(&src[s..s + w * c]);
            }
        }
    }
    Ok(WindowSet {
        windows: Tensor::new(vec![t, n, h * w, c], out)?,
        grid: (rows, cols),
        window: (h, w),
        kept: Vec::new(),
    })
}

/// Inverse of [`window_partition`]; requires every window to be present.
pub fn window_reverse(ws: &WindowSet) -> Result<Tensor> {
    if !ws.is_full() {
        return Err(Error::Argument(format!(
            "window reverse needs all {} windows, set holds {}",
            ws.num_windows(),
            ws.stored()
        )));
    }
    let (t, c) = (ws.frames(), ws.channels());
    let (h, w) = ws.window;
    let (fh, fw) = ws.feature_hw();
    let cols = ws.grid.1;
    let n = ws.num_windows();
    let src = ws.windows.data();
    let mut out = vec![0.0f32; src.len()];
    for ti in 0..t {
        for wi in 0..n {
            let (gr, gc) = (wi / cols, wi % cols);
            for p in 0..h {
                let d = ((ti * fh + gr * h + p) * fw + gc * w) * c;
                let s = ((ti * n + wi) * h * w + p * w) * c;
                out[d..d + w * c].copy_from_slice(&src[s..s + w * c]);
            }
        }
    }
    Tensor::new(vec![t, fh, fw, c], out)
}

/// Per-window feature means, `T × n × C`.
pub fn window_means(ws: &WindowSet) -> Tensor {
    let (t, n, hw, c) = (ws.frames(), ws.stored(), ws.windows.shape()[2], ws.channels());
    let src = ws.windows.data();
    let mut out = vec![0.0f32; t * n * c];
    for tw in 0..t * n {
        let mut acc = vec![0.0f64; c];
        for p in 0..hw {
            for (a, &v) in acc.iter_mut().zip(&src[(tw * hw + p) * c..][..c]) {
                *a += v as f64;
            }
        }
        for (o, a) in out[tw * c..(tw + 1) * c].iter_mut().zip(acc) {
            *o = (a / hw as f64) as f32;
        }
    }
    Tensor::new(vec![t, n, c], out).expect("extents are positive")
}

/// Attention weights over all windows of all frames, `(T·n) × (T·n)`:
/// `softmax(Q·Kᵀ)` with `Q = LN_Q(W̄)`, `K = LN_K(W̄)` stacked frame-major.
pub fn window_attention(ws: &WindowSet, raa: &RaaWeights) -> Result<Tensor> {
    if !ws.is_full() {
        return Err(Error::Argument(
            "window attention runs on the full partition".into(),
        ));
    }
    let means = window_means(ws);
    let (t, n, c) = (ws.frames(), ws.stored(), ws.channels());
    let means = means.reshape(&[t * n, c])?;
    let q = layer_norm_affine(&means, &raa.ln_q.scale, &raa.ln_q.shift, LAYER_NORM_EPS)?;
    let k = layer_norm_affine(&means, &raa.ln_k.scale, &raa.ln_k.shift, LAYER_NORM_EPS)?;
    let logits = matmul(&q, &k.transpose2d()?)?;
    Ok(softmax_lastdim(&logits))
}

/// Column sums of an attention matrix (attention each key receives),
/// reshaped to `T × n`.
pub fn importance_from_attention(attention: &Tensor, t: usize, n: usize) -> Result<Tensor> {
    let m = t * n;
    if attention.shape() != [m, m] {
        return Err(Error::dims("attention", attention.shape(), &[m, m]));
    }
    let a = attention.data();
    let mut acc = vec![0.0f64; m];
    for row in a.chunks(m) {
        for (s, &v) in acc.iter_mut().zip(row) {
            *s += v as f64;
        }
    }
    Tensor::new(vec![t, n], acc.into_iter().map(|v| v as f32).collect())
}

/// Window importance scores `T × n`.
pub fn window_importance(ws: &WindowSet, weights: &LayerWeights) -> Result<Tensor> {
    let aw = window_attention(ws, &weights.raa)?;
    importance_from_attention(&aw, ws.frames(), ws.stored())
}

/// Keeps each frame's `k` highest-scoring windows (ties → lower index).
pub fn select_topk_windows(ws: &WindowSet, scores: &Tensor, k: usize) -> Result<WindowSet> {
    let (t, n) = (ws.frames(), ws.stored());
    if scores.shape() != [t, n] {
        return Err(Error::dims("window scores", scores.shape(), &[t, n]));
    }
    if k == 0 || k > n {
        return Err(Error::Argument(format!("k = {k} must lie in [1, {n}]")));
    }
    let (hw, c) = (ws.windows.shape()[2], ws.channels());
    let block = hw * c;
    let src = ws.windows.data();
    let mut data = Vec::with_capacity(t * k * block);
    let mut kept = Vec::with_capacity(t);
    for ti in 0..t {
        let idx = top_k_indices(&scores.data()[ti * n..(ti + 1) * n], k)?;
        for &wi in &idx {
            data.extend_from_slice(&src[(ti * n + wi) * block..][..block]);
        }
        kept.push(idx);
    }
    Ok(WindowSet {
        windows: Tensor::new(vec![t, k, hw, c], data)?,
        grid: ws.grid,
        window: ws.window,
        kept,
    })
}

/// Packs kept windows into `g × T × (H'/2) × (W'/2) × C`.
///
/// Each frame's kept windows are streamed in ascending original order,
/// token by token (`h·w` tokens of `C` values each), and written row-major
/// into `g` groups of `(H'/2)·(W'/2)` positions. When `4k < n` the stream is
/// shorter than one group and is tiled cyclically to fill `g = 1`.
pub fn reverse_pack(wnr: &WindowSet) -> Result<Tensor> {
    let (t, k, hw, c) = (wnr.frames(), wnr.stored(), wnr.windows.shape()[2], wnr.channels());
    let n = wnr.num_windows();
    if wnr.kept.len() != t || wnr.kept.iter().any(|kk| kk.len() != k) {
        return Err(Error::Argument(
            "reverse pack needs a selected window set".into(),
        ));
    }
    let g = group_count(k, n)?;
    let (fh, fw) = wnr.feature_hw();
    if fh % 2 != 0 || fw % 2 != 0 {
        return Err(Error::Config(format!(
            "feature map {fh}×{fw} cannot be halved for packing"
        )));
    }
    let positions = (fh / 2) * (fw / 2);
    let stream = k * hw;
    if 4 * k % n == 0 && g * positions != stream {
        return Err(Error::Config(format!(
            "packing count identity fails: {g}·{positions} != {k}·{hw}"
        )));
    }
    let src = wnr.windows.data();
    let mut out = vec![0.0f32; g * t * positions * c];
    for grp in 0..g {
        for ti in 0..t {
            let frame = &src[ti * stream * c..(ti + 1) * stream * c];
            for pos in 0..positions {
                let tok = (grp * positions + pos) % stream;
                let d = ((grp * t + ti) * positions + pos) * c;
                out[d..d + c].copy_from_slice(&frame[tok * c..(tok + 1) * c]);
            }
        }
    }
    Tensor::new(vec![g, t, fh / 2, fw / 2, c], out)
}
