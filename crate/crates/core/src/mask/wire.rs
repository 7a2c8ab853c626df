//! Pseudo wire-shaped (PWS) mask synthesis.
//!
//! Draw order for one wire attempt is fixed: length, width, rotation,
//! shear, scale, centre column, centre row. Changing it breaks replay of
//! every stored seed.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{dilate, Mask, MaskSequence};
use crate::error::{Error, Result};
use crate::rng::Rng;

pub const SHEAR_RANGE: (f64, f64) = (-0.3, 0.3);
pub const SCALE_RANGE: (f64, f64) = (0.7, 1.3);
pub const MAX_WIRE_RETRIES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WireSpec {
    pub num: usize,
    /// Inclusive pixel range for the untransformed segment length.
    pub len_range: (usize, usize),
    /// Inclusive pixel range for the stroke width.
    pub width_range: (usize, usize),
    pub dilate_kernel: usize,
    pub max_dilate_times: usize,
    pub max_move: usize,
    pub seed: u64,
}

impl Default for WireSpec {
    fn default() -> Self {
        WireSpec {
            num: 3,
            len_range: (80, 240),
            width_range: (1, 4),
            dilate_kernel: 3,
            max_dilate_times: 2,
            max_move: 4,
            seed: 0,
        }
    }
}

impl WireSpec {
    pub fn validate(&self, canvas: (usize, usize)) -> Result<()> {
        let (h, w) = canvas;
        if h == 0 || w == 0 {
            return Err(Error::Argument(format!("canvas {h}×{w} must be non-empty")));
        }
        if self.width_range.0 < 1 || self.width_range.0 > self.width_range.1 {
            return Err(Error::Config(format!(
                "width_range {:?} must satisfy 1 <= min <= max",
                self.width_range
            )));
        }
        if self.len_range.0 > self.len_range.1 {
            return Err(Error::Config(format!(
                "len_range {:?} must satisfy min <= max",
                self.len_range
            )));
        }
        let diag = ((h * h + w * w) as f64).sqrt();
        if self.len_range.1 as f64 > diag {
            return Err(Error::Config(format!(
                "len_range max {} exceeds canvas diagonal {diag:.1}",
                self.len_range.1
            )));
        }
        if self.dilate_kernel == 0 || self.dilate_kernel % 2 == 0 {
            return Err(Error::Config(format!(
                "dilate_kernel must be odd, got {}",
                self.dilate_kernel
            )));
        }
        Ok(())
    }
}

/// The final wire mask together with each wire's stroke before dilation.
#[derive(Debug, Clone)]
pub struct WireLayers {
    pub mask: Mask,
    pub strokes: Vec<Mask>,
    pub widths: Vec<usize>,
    pub dilate_times: usize,
}

pub fn create_wire_mask(spec: &WireSpec, canvas: (usize, usize), rng: &mut Rng) -> Result<Mask> {
    create_wire_layers(spec, canvas, rng).map(|l| l.mask)
}

pub fn create_wire_layers(
    spec: &WireSpec,
    canvas: (usize, usize),
    rng: &mut Rng,
) -> Result<WireLayers> {
    spec.validate(canvas)?;
    let (h, w) = canvas;
    let mut mask = Mask::new(h, w);
    let mut strokes = Vec::with_capacity(spec.num);
    let mut widths = Vec::with_capacity(spec.num);

    for _ in 0..spec.num {
        for _ in 0..MAX_WIRE_RETRIES {
            let len = rng.range_usize(spec.len_range.0, spec.len_range.1) as f64;
            let width = rng.range_usize(spec.width_range.0, spec.width_range.1);
            let theta = rng.uniform(0.0, 2.0 * PI);
            let shear = rng.uniform(SHEAR_RANGE.0, SHEAR_RANGE.1);
            let scale = rng.uniform(SCALE_RANGE.0, SCALE_RANGE.1);
            let reach = len * SCALE_RANGE.1;
            let cx = rng.uniform(-reach / 2.0, w as f64 + reach / 2.0);
            let cy = rng.uniform(-reach / 2.0, h as f64 + reach / 2.0);

            // shear ∘ rotation ∘ scale on the horizontal segment (±len/2, 0)
            let transform = |x: f64, y: f64| {
                let (x, y) = (x * scale, y * scale);
                let (x, y) = (x * theta.cos() - y * theta.sin(), x * theta.sin() + y * theta.cos());
                (x + shear * y + cx, y + cy)
            };
            let p0 = transform(-len / 2.0, 0.0);
            let p1 = transform(len / 2.0, 0.0);

            let mut stroke = Mask::new(h, w);
            if draw_thick_segment(&mut stroke, p0, p1, width) > 0 {
                mask.union_with(&stroke)?;
                strokes.push(stroke);
                widths.push(width);
                break;
            }
        }
    }

    let dilate_times = rng.range_usize(0, spec.max_dilate_times);
    let mask = dilate(&mask, spec.dilate_kernel, dilate_times)?;
    Ok(WireLayers {
        mask,
        strokes,
        widths,
        dilate_times,
    })
}

/// Rasterizes a segment of `width` pixels: a Bresenham core line with a
/// perpendicular run of `width` samples at every core pixel. Returns the
/// number of samples that landed on the canvas.
pub(crate) fn draw_thick_segment(
    canvas: &mut Mask,
    p0: (f64, f64),
    p1: (f64, f64),
    width: usize,
) -> usize {
    let (x0, y0) = (p0.0.round() as i64, p0.1.round() as i64);
    let (x1, y1) = (p1.0.round() as i64, p1.1.round() as i64);
    let (ddx, ddy) = ((x1 - x0) as f64, (y1 - y0) as f64);
    let norm = (ddx * ddx + ddy * ddy).sqrt();
    let (nx, ny) = if norm > 0.0 {
        (-ddy / norm, ddx / norm)
    } else {
        (0.0, 1.0)
    };
    let lo = -((width as i64 - 1) / 2);
    let hi = width as i64 / 2;

    let mut drawn = 0;
    let mut plot = |x: i64, y: i64| {
        for o in lo..=hi {
            let px = x + (o as f64 * nx).round() as i64;
            let py = y + (o as f64 * ny).round() as i64;
            if canvas.set_checked(py, px) {
                drawn += 1;
            }
        }
    };

    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    loop {
        plot(x, y);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    drawn
}

/// Animates a wire mask over `len` frames.
///
/// The mask is cropped to its tight foreground box and that pattern is
/// placed at a random position that fits the canvas. Each later frame
/// shifts it by a uniform `(dx, dy)` in `[-max_move, max_move]`², with the
/// position clamped so at least half the pattern stays on canvas. Pixels
/// beyond the border are clipped.
pub fn create_video_mask(
    mask: &Mask,
    len: usize,
    max_move: usize,
    rng: &mut Rng,
) -> Result<MaskSequence> {
    if len == 0 {
        return Err(Error::Argument("video mask length must be >= 1".into()));
    }
    let (h, w) = (mask.height() as i64, mask.width() as i64);
    let pattern = match mask.foreground_bounds() {
        Some(rect) => mask.crop(rect),
        None => Mask::new(1, 1),
    };
    let (ph, pw) = (pattern.height() as i64, pattern.width() as i64);

    let row0 = rng.range_i64((h - ph).min(0), (h - ph).max(0));
    let col0 = rng.range_i64((w - pw).min(0), (w - pw).max(0));
    let row_lo = (-(ph / 2)).min(row0);
    let row_hi = (h - (ph + 1) / 2).max(row0);
    let col_lo = (-(pw / 2)).min(col0);
    let col_hi = (w - (pw + 1) / 2).max(col0);

    let render = |row: i64, col: i64| {
        let mut frame = Mask::new(mask.height(), mask.width());
        for r in 0..ph {
            for c in 0..pw {
                if pattern.get(r as usize, c as usize) {
                    frame.set_checked(row + r, col + c);
                }
            }
        }
        frame
    };

    let m = max_move as i64;
    let (mut row, mut col) = (row0, col0);
    let mut frames = Vec::with_capacity(len);
    let mut motion = Vec::with_capacity(len.saturating_sub(1));
    frames.push(render(row, col));
    for _ in 1..len {
        let dx = rng.range_i64(-m, m);
        let dy = rng.range_i64(-m, m);
        let next_row = (row + dy).clamp(row_lo, row_hi);
        let next_col = (col + dx).clamp(col_lo, col_hi);
        motion.push(((next_col - col) as i32, (next_row - row) as i32));
        row = next_row;
        col = next_col;
        frames.push(render(row, col));
    }
    MaskSequence::with_motion(frames, motion)
}
