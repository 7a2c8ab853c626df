use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frames per clip processed together.
pub const DEFAULT_FRAMES: usize = 5;
pub const DEFAULT_HEIGHT: usize = 240;
pub const DEFAULT_WIDTH: usize = 432;
pub const DEFAULT_LAYERS: usize = 8;
/// Adversarial weight in the total generator objective.
pub const LAMBDA_ADV: f32 = 0.01;

/// Architecture hyperparameters of the whole model.
///
/// Features live on the `(height/4) × (width/4)` grid, which is split into
/// `window_h × window_w` windows. `keep` is the number of windows kept per
/// frame (`k`); when absent it resolves to half of all windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RaformerConfig {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub window_h: usize,
    pub window_w: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub keep: Option<usize>,
    pub layers: usize,
    pub heads: usize,
    pub ss_kernel: usize,
    pub ss_stride: usize,
    pub ss_pad: usize,
    pub beta: f32,
    pub gamma: f32,
    pub leaky_slope: f32,
    pub seed: u64,
}

impl Default for RaformerConfig {
    fn default() -> Self {
        RaformerConfig {
            frames: DEFAULT_FRAMES,
            height: DEFAULT_HEIGHT,
            width: DEFAULT_WIDTH,
            channels: 64,
            window_h: 10,
            window_w: 12,
            keep: None,
            layers: DEFAULT_LAYERS,
            heads: 4,
            ss_kernel: 7,
            ss_stride: 3,
            ss_pad: 3,
            beta: 1.0,
            gamma: 1.0,
            leaky_slope: 0.2,
            seed: 0,
        }
    }
}

/// Overlapping patch geometry for soft split / soft composite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchGeometry {
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
}

impl PatchGeometry {
    pub fn new(kernel: usize, stride: usize, pad: usize) -> Result<Self> {
        if kernel == 0 || stride == 0 {
            return Err(Error::Argument(format!(
                "patch kernel ({kernel}) and stride ({stride}) must be positive"
            )));
        }
        Ok(PatchGeometry { kernel, stride, pad })
    }

    /// Patches along one axis of extent `len`, or `None` if the padded
    /// extent is smaller than the kernel.
    pub fn patches_along(&self, len: usize) -> Option<usize> {
        let padded = len + 2 * self.pad;
        (padded >= self.kernel).then(|| (padded - self.kernel) / self.stride + 1)
    }

    pub fn token_grid(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        match (self.patches_along(h), self.patches_along(w)) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::Argument(format!(
                "patch geometry {self:?} does not fit a {h}×{w} map"
            ))),
        }
    }
}

impl RaformerConfig {
    pub fn grid(&self) -> (usize, usize) {
        (self.height / 4, self.width / 4)
    }

    pub fn window_grid(&self) -> (usize, usize) {
        let (gh, gw) = self.grid();
        (gh / self.window_h.max(1), gw / self.window_w.max(1))
    }

    /// Windows per frame (`n`).
    pub fn num_windows(&self) -> usize {
        let (r, c) = self.window_grid();
        r * c
    }

    /// Kept windows per frame (`k`).
    pub fn k(&self) -> usize {
        self.keep.unwrap_or(self.num_windows() / 2)
    }

    /// Kept fraction `α = k / n`.
    pub fn alpha(&self) -> f64 {
        self.k() as f64 / self.num_windows() as f64
    }

    pub fn groups(&self) -> Result<usize> {
        group_count(self.k(), self.num_windows())
    }

    pub fn block_geometry(&self) -> Result<PatchGeometry> {
        PatchGeometry::new(self.ss_kernel, self.ss_stride, self.ss_pad)
    }

    /// Width of one soft-split token.
    pub fn token_dim(&self) -> usize {
        self.ss_kernel * self.ss_kernel * self.channels
    }

    pub fn ffn_hidden(&self) -> usize {
        4 * self.channels
    }

    /// Copy with `keep` materialized.
    pub fn resolved(&self) -> Self {
        RaformerConfig {
            keep: Some(self.k()),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.frames == 0 || self.channels == 0 || self.layers == 0 || self.heads == 0 {
            return bad("frames, channels, layers and heads must be >= 1".into());
        }
        if self.height == 0 || self.width == 0 || self.height % 8 != 0 || self.width % 8 != 0 {
            return bad(format!(
                "frame size {}×{} must be a positive multiple of 8",
                self.height, self.width
            ));
        }
        if self.window_h == 0 || self.window_w == 0 {
            return bad("window extents must be >= 1".into());
        }
        let (gh, gw) = self.grid();
        if gh % self.window_h != 0 || gw % self.window_w != 0 {
            return bad(format!(
                "feature grid {gh}×{gw} is not divisible by window {}×{}",
                self.window_h, self.window_w
            ));
        }
        let n = self.num_windows();
        let k = self.k();
        if k == 0 || k > n {
            return bad(format!("keep = {k} must lie in [1, {n}]"));
        }
        let g = group_count(k, n)?;
        if 4 * k % n == 0 && g * (gh / 2) * (gw / 2) != k * self.window_h * self.window_w {
            return bad(format!(
                "packing count identity fails: {g}·{}·{} != {k}·{}·{}",
                gh / 2,
                gw / 2,
                self.window_h,
                self.window_w
            ));
        }
        if self.channels % self.heads != 0 {
            return bad(format!(
                "channels {} not divisible by heads {}",
                self.channels, self.heads
            ));
        }
        let geom = self.block_geometry().map_err(|e| Error::Config(e.to_string()))?;
        if geom.stride > geom.kernel || geom.pad >= geom.kernel {
            return bad(format!(
                "soft split {}/{}/{} must satisfy stride <= kernel and pad < kernel",
                geom.kernel, geom.stride, geom.pad
            ));
        }
        let (th, tw) = geom
            .token_grid(gh, gw)
            .map_err(|e| Error::Config(e.to_string()))?;
        // every grid cell must be covered by at least one patch
        if (th - 1) * geom.stride + geom.kernel < gh + geom.pad
            || (tw - 1) * geom.stride + geom.kernel < gw + geom.pad
        {
            return bad(format!(
                "soft split {}/{}/{} leaves part of the {gh}×{gw} grid uncovered",
                geom.kernel, geom.stride, geom.pad
            ));
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return bad(format!("leaky_slope {} must lie in (0, 1)", self.leaky_slope));
        }
        if !self.beta.is_finite() || !self.gamma.is_finite() {
            return bad("beta and gamma must be finite".into());
        }
        Ok(())
    }
}

/// Packed group count `g = 4k/n`, or 1 on the duplication path `4k < n`.
pub fn group_count(k: usize, n: usize) -> Result<usize> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::Config(format!("keep = {k} must lie in [1, {n}]")));
    }
    if 4 * k % n == 0 {
        Ok(4 * k / n)
    } else if 4 * k < n {
        Ok(1)
    } else {
        Err(Error::Config(format!(
            "4k/n = {}/{n} is neither an integer nor below 1",
            4 * k
        )))
    }
}
