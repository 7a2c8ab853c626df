//! Polygonal pseudo (PP) masks: one filled random polygon per mask.

use std::f64::consts::PI;

use super::Mask;
use crate::rng::Rng;

pub const PP_VERTICES: (usize, usize) = (4, 12);
pub const PP_COVERAGE: (f64, f64) = (0.05, 0.30);

/// One random simple polygon with 4–12 vertices, filled, covering a
/// fraction of the canvas drawn uniformly from `[0.05, 0.30]`.
///
/// The polygon is star-shaped around its centre (vertex angles are evenly
/// spaced with jitter, radii lie in `[0.5, 1]` of the base radius), which
/// keeps it simple and connected after clipping to the canvas. The base
/// radius is bisected until the clipped coverage reaches the target.
pub fn create_pp_mask(canvas: (usize, usize), rng: &mut Rng) -> Mask {
    let (h, w) = canvas;
    let n = rng.range_usize(PP_VERTICES.0, PP_VERTICES.1);
    let target = rng.uniform(PP_COVERAGE.0, PP_COVERAGE.1);
    let cy = rng.uniform(0.3 * h as f64, 0.7 * h as f64);
    let cx = rng.uniform(0.3 * w as f64, 0.7 * w as f64);
    let phase = rng.uniform(0.0, 2.0 * PI);
    let shape: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let angle = phase + 2.0 * PI * (i as f64 + 0.8 * rng.next_f64()) / n as f64;
            let radius = rng.uniform(0.5, 1.0);
            (angle, radius)
        })
        .collect();

    let total = (h * w) as f64;
    let (mut lo, mut hi) = (0.0f64, ((h * h + w * w) as f64).sqrt() * 2.0);
    let mut best: Option<(f64, Mask)> = None;
    for _ in 0..48 {
        let mid = 0.5 * (lo + hi);
        let mask = fill_polygon(canvas, &vertices(&shape, cx, cy, mid));
        let coverage = mask.count() as f64 / total;
        let in_range = (PP_COVERAGE.0..=PP_COVERAGE.1).contains(&coverage);
        let err = (coverage - target).abs();
        let better = match &best {
            None => true,
            Some((best_err, best_mask)) => {
                let best_in = (PP_COVERAGE.0..=PP_COVERAGE.1)
                    .contains(&(best_mask.count() as f64 / total));
                (in_range && !best_in) || (in_range == best_in && err < *best_err)
            }
        };
        if better {
            best = Some((err, mask));
        }
        if coverage < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if in_range && err * total < 1.0 {
            break;
        }
    }
    best.map(|(_, m)| m).unwrap_or_else(|| Mask::new(h, w))
}

fn vertices(shape: &[(f64, f64)], cx: f64, cy: f64, base: f64) -> Vec<(f64, f64)> {
    shape
        .iter()
        .map(|&(a, r)| (cx + base * r * a.cos(), cy + base * r * a.sin()))
        .collect()
}

/// Even-odd fill sampled at pixel centres.
fn fill_polygon(canvas: (usize, usize), poly: &[(f64, f64)]) -> Mask {
    let (h, w) = canvas;
    let mut mask = Mask::new(h, w);
    let mut xs = Vec::with_capacity(poly.len());
    for r in 0..h {
        let y = r as f64 + 0.5;
        xs.clear();
        for i in 0..poly.len() {
            let (x0, y0) = poly[i];
            let (x1, y1) = poly[(i + 1) % poly.len()];
            if (y0 <= y && y < y1) || (y1 <= y && y < y0) {
                xs.push(x0 + (y - y0) * (x1 - x0) / (y1 - y0));
            }
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for pair in xs.chunks_exact(2) {
            let start = (pair[0] - 0.5).ceil().max(0.0) as usize;
            let end = (pair[1] - 0.5).floor();
            if end < 0.0 {
                continue;
            }
            let end = (end as usize).min(w.saturating_sub(1));
            for c in start..=end {
                if c < w {
                    mask.set(r, c, true);
                }
            }
        }
    }
    mask
}
