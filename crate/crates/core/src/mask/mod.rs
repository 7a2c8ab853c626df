//! Binary masks, morphology and synthetic mask generators.
//!
//! A set bit marks a hole (pixel to be inpainted); a clear bit is valid
//! content. Component analysis uses 8-connectivity throughout.

mod polygon;
mod wire;

pub use polygon::create_pp_mask;
pub use wire::{create_video_mask, create_wire_layers, create_wire_mask, WireLayers, WireSpec};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    height: usize,
    width: usize,
    bits: Vec<u8>,
}

impl Mask {
    pub fn new(height: usize, width: usize) -> Self {
        Mask {
            height,
            width,
            bits: vec![0; height * width],
        }
    }

    pub fn full(height: usize, width: usize) -> Self {
        Mask {
            height,
            width,
            bits: vec![1; height * width],
        }
    }

    /// Builds a mask from row-major bits, which must all be 0 or 1.
    pub fn from_bits(height: usize, width: usize, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != height * width {
            return Err(Error::Dimension(format!(
                "mask {height}×{width} needs {} bits, got {}",
                height * width,
                bits.len()
            )));
        }
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::Argument(format!(
                "mask bit {pos} has non-binary value {}",
                bits[pos]
            )));
        }
        Ok(Mask {
            height,
            width,
            bits,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col] != 0
    }

    pub fn set(&mut self, row: usize, col: usize, on: bool) {
        self.bits[row * self.width + col] = on as u8;
    }

    /// Sets `(row, col)` if it lies on the canvas; returns whether it did.
    pub fn set_checked(&mut self, row: i64, col: i64) -> bool {
        if row < 0 || col < 0 || row >= self.height as i64 || col >= self.width as i64 {
            return false;
        }
        self.set(row as usize, col as usize, true);
        true
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    pub fn union_with(&mut self, other: &Mask) -> Result<()> {
        self.check_same_size(other)?;
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
        Ok(())
    }

    /// Whether every set pixel of `other` is also set here.
    pub fn contains(&self, other: &Mask) -> bool {
        self.height == other.height
            && self.width == other.width
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| a >= b)
    }

    fn check_same_size(&self, other: &Mask) -> Result<()> {
        if self.height != other.height || self.width != other.width {
            return Err(Error::dims(
                "mask size",
                &[self.height, self.width],
                &[other.height, other.width],
            ));
        }
        Ok(())
    }

    /// Tight box around all set pixels, or `None` for an empty mask.
    pub fn foreground_bounds(&self) -> Option<Rect> {
        let (mut r0, mut c0, mut r1, mut c1) = (usize::MAX, usize::MAX, 0, 0);
        for r in 0..self.height {
            for c in 0..self.width {
                if self.get(r, c) {
                    r0 = r0.min(r);
                    c0 = c0.min(c);
                    r1 = r1.max(r);
                    c1 = c1.max(c);
                }
            }
        }
        (r0 != usize::MAX).then(|| Rect {
            row: r0,
            col: c0,
            height: r1 - r0 + 1,
            width: c1 - c0 + 1,
        })
    }

    pub fn crop(&self, rect: Rect) -> Mask {
        let mut out = Mask::new(rect.height, rect.width);
        for r in 0..rect.height {
            for c in 0..rect.width {
                let (sr, sc) = (rect.row + r, rect.col + c);
                if sr < self.height && sc < self.width && self.get(sr, sc) {
                    out.set(r, c, true);
                }
            }
        }
        out
    }

    /// Copies `self` shifted by `(drow, dcol)`; pixels leaving the canvas are dropped.
    pub fn translated(&self, drow: i64, dcol: i64) -> Mask {
        let mut out = Mask::new(self.height, self.width);
        for r in 0..self.height {
            for c in 0..self.width {
                if self.get(r, c) {
                    out.set_checked(r as i64 + drow, c as i64 + dcol);
                }
            }
        }
        out
    }

    /// Nearest-neighbour resize: destination `(i, j)` reads `(i·h/H, j·w/W)`.
    pub fn resize_nearest(&self, height: usize, width: usize) -> Mask {
        let mut out = Mask::new(height, width);
        for r in 0..height {
            let sr = r * self.height / height;
            for c in 0..width {
                let sc = c * self.width / width;
                out.bits[r * width + c] = self.bits[sr * self.width + sc];
            }
        }
        out
    }
}

/// Ordered masks sharing one resolution plus the motion that produced them.
///
/// `motion_log[i]` is the `(dx, dy)` shift (columns, rows) applied between
/// frame `i` and frame `i + 1`. It is empty for sequences loaded from disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskSequence {
    frames: Vec<Mask>,
    motion_log: Vec<(i32, i32)>,
}

impl MaskSequence {
    pub fn new(frames: Vec<Mask>) -> Result<Self> {
        Self::with_motion(frames, Vec::new())
    }

    pub fn with_motion(frames: Vec<Mask>, motion_log: Vec<(i32, i32)>) -> Result<Self> {
        if let Some(first) = frames.first() {
            for (i, f) in frames.iter().enumerate() {
                if f.height != first.height || f.width != first.width {
                    return Err(Error::Dimension(format!(
                        "mask frame {i} is {}×{}, frame 0 is {}×{}",
                        f.height, f.width, first.height, first.width
                    )));
                }
            }
        }
        if !motion_log.is_empty() && motion_log.len() + 1 != frames.len() {
            return Err(Error::Argument(format!(
                "motion log has {} entries for {} frames",
                motion_log.len(),
                frames.len()
            )));
        }
        Ok(MaskSequence { frames, motion_log })
    }

    pub fn frames(&self) -> &[Mask] {
        &self.frames
    }

    pub fn motion_log(&self) -> &[(i32, i32)] {
        &self.motion_log
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// `(height, width)` of the frames, if any.
    pub fn resolution(&self) -> Option<(usize, usize)> {
        self.frames.first().map(|m| (m.height, m.width))
    }

    pub fn slice(&self, start: usize, end: usize) -> MaskSequence {
        let motion_log = if self.motion_log.is_empty() || end <= start {
            Vec::new()
        } else {
            self.motion_log[start..end - 1].to_vec()
        };
        MaskSequence {
            frames: self.frames[start..end].to_vec(),
            motion_log,
        }
    }
}

/// Binary dilation by an all-ones `kernel_size`² square, applied `times` times.
pub fn dilate(mask: &Mask, kernel_size: usize, times: usize) -> Result<Mask> {
    if kernel_size == 0 || kernel_size % 2 == 0 {
        return Err(Error::Argument(format!(
            "dilation kernel must be odd and >= 1, got {kernel_size}"
        )));
    }
    let radius = kernel_size / 2;
    let (h, w) = (mask.height, mask.width);
    let mut cur = mask.clone();
    for _ in 0..times {
        if radius == 0 {
            break;
        }
        // square element is separable: horizontal pass then vertical pass
        let mut horiz = Mask::new(h, w);
        for r in 0..h {
            for c in 0..w {
                let lo = c.saturating_sub(radius);
                let hi = (c + radius).min(w - 1);
                if (lo..=hi).any(|cc| cur.get(r, cc)) {
                    horiz.set(r, c, true);
                }
            }
        }
        let mut next = Mask::new(h, w);
        for r in 0..h {
            let lo = r.saturating_sub(radius);
            let hi = (r + radius).min(h - 1);
            for c in 0..w {
                if (lo..=hi).any(|rr| horiz.get(rr, c)) {
                    next.set(r, c, true);
                }
            }
        }
        cur = next;
    }
    Ok(cur)
}

/// Labels 8-connected components. Returns per-pixel labels (0 = background,
/// components numbered from 1 in raster order of first pixel) and the count.
pub fn label_components(mask: &Mask) -> (Vec<u32>, usize) {
    let (h, w) = (mask.height, mask.width);
    let mut labels = vec![0u32; h * w];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..h * w {
        if mask.bits[start] == 0 || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            let (r, c) = ((p / w) as i64, (p % w) as i64);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (nr, nc) = (r + dr, c + dc);
                    if nr < 0 || nc < 0 || nr >= h as i64 || nc >= w as i64 {
                        continue;
                    }
                    let q = nr as usize * w + nc as usize;
                    if mask.bits[q] != 0 && labels[q] == 0 {
                        labels[q] = next;
                        queue.push_back(q);
                    }
                }
            }
        }
    }
    (labels, next as usize)
}

/// One tight box per 8-connected component, sorted by top-left `(row, col)`.
pub fn bounding_boxes(mask: &Mask) -> Vec<Rect> {
    let (labels, count) = label_components(mask);
    let w = mask.width;
    let mut ext = vec![(usize::MAX, usize::MAX, 0usize, 0usize); count];
    for (p, &l) in labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let (r, c) = (p / w, p % w);
        let e = &mut ext[l as usize - 1];
        e.0 = e.0.min(r);
        e.1 = e.1.min(c);
        e.2 = e.2.max(r);
        e.3 = e.3.max(c);
    }
    let mut boxes: Vec<Rect> = ext
        .into_iter()
        .map(|(r0, c0, r1, c1)| Rect {
            row: r0,
            col: c0,
            height: r1 - r0 + 1,
            width: c1 - c0 + 1,
        })
        .collect();
    boxes.sort_by_key(|b| (b.row, b.col, b.height, b.width));
    boxes
}
