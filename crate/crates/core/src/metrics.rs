//! PSNR, box-restricted PSNR*, SSIM and per-video report aggregation.

use std::fmt::Write as _;

use crate::dataset::Image;
use crate::error::{Error, Result};
use crate::mask::{bounding_boxes, MaskSequence, Rect};

/// Reported value when the two images are identical.
pub const PSNR_CAP: f64 = 99.0;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
pub const SSIM_C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

fn check_pair(y: &Image, x: &Image) -> Result<()> {
    if (y.width, y.height, y.channels) != (x.width, x.height, x.channels) {
        return Err(Error::Argument(format!(
            "image dimensions differ: {}×{}×{} vs {}×{}×{}",
            y.height, y.width, y.channels, x.height, x.width, x.channels
        )));
    }
    Ok(())
}

fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        PSNR_CAP
    } else {
        (10.0 * (255.0f64 * 255.0 / mse).log10()).min(PSNR_CAP)
    }
}

fn box_mse(y: &Image, x: &Image, rect: Rect) -> f64 {
    let c = y.channels;
    let mut sum = 0.0f64;
    for r in rect.row..rect.row + rect.height {
        let start = (r * y.width + rect.col) * c;
        let end = start + rect.width * c;
        for (&a, &b) in y.data[start..end].iter().zip(&x.data[start..end]) {
            let d = a as f64 - b as f64;
            sum += d * d;
        }
    }
    sum / (rect.height * rect.width * c) as f64
}

fn full_rect(img: &Image) -> Rect {
    Rect {
        row: 0,
        col: 0,
        height: img.height,
        width: img.width,
    }
}

/// `10·log10(255² / MSE)` over all pixels and channels, capped at 99 dB.
pub fn psnr(y: &Image, x: &Image) -> Result<f64> {
    check_pair(y, x)?;
    Ok(psnr_from_mse(box_mse(y, x, full_rect(y))))
}

fn check_sequences(y: &[Image], x: &[Image]) -> Result<()> {
    if y.len() != x.len() || y.is_empty() {
        return Err(Error::Argument(format!(
            "sequence lengths must match and be non-empty: {} vs {}",
            y.len(),
            x.len()
        )));
    }
    y.iter().zip(x).try_for_each(|(a, b)| check_pair(a, b))
}

/// Mean of per-frame PSNR.
pub fn psnr_video(y: &[Image], x: &[Image]) -> Result<f64> {
    check_sequences(y, x)?;
    let sum: f64 = y.iter().zip(x).map(|(a, b)| psnr(a, b)).sum::<Result<f64>>()?;
    Ok(sum / y.len() as f64)
}

/// PSNR inside each connected component's bounding box, averaged over all
/// boxes of all frames. `None` when no frame has any hole pixel.
pub fn psnr_star(y: &[Image], x: &[Image], masks: &MaskSequence) -> Result<Option<f64>> {
    check_sequences(y, x)?;
    if masks.len() != y.len() {
        return Err(Error::Argument(format!(
            "{} masks for {} frames",
            masks.len(),
            y.len()
        )));
    }
    let (mut sum, mut count) = (0.0f64, 0usize);
    for ((a, b), m) in y.iter().zip(x).zip(masks.frames()) {
        if (m.height(), m.width()) != (a.height, a.width) {
            return Err(Error::Argument(format!(
                "mask {}×{} does not match frame {}×{}",
                m.height(),
                m.width(),
                a.height,
                a.width
            )));
        }
        for rect in bounding_boxes(m) {
            sum += psnr_from_mse(box_mse(a, b, rect));
            count += 1;
        }
    }
    Ok((count > 0).then(|| sum / count as f64))
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let centre = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - centre;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    k
}

/// Separable valid-mode filtering of a `h×w` plane.
fn filter_valid(plane: &[f64], h: usize, w: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (oh, ow) = (h + 1 - SSIM_WINDOW, w + 1 - SSIM_WINDOW);
    let mut rows = vec![0.0f64; h * ow];
    for r in 0..h {
        for c in 0..ow {
            rows[r * ow + c] = (0..SSIM_WINDOW).map(|i| k[i] * plane[r * w + c + i]).sum();
        }
    }
    let mut out = vec![0.0f64; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = (0..SSIM_WINDOW).map(|i| k[i] * rows[(r + i) * ow + c]).sum();
        }
    }
    out
}

/// Mean local SSIM with an 11×11 Gaussian window (σ = 1.5) over valid
/// positions, computed per channel and averaged.
pub fn ssim(y: &Image, x: &Image) -> Result<f64> {
    check_pair(y, x)?;
    let (h, w, c) = (y.height, y.width, y.channels);
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::Argument(format!(
            "image {h}×{w} is smaller than the {SSIM_WINDOW}×{SSIM_WINDOW} window"
        )));
    }
    let k = gaussian_kernel();
    let mut total = 0.0f64;
    for ch in 0..c {
        let a: Vec<f64> = y.data.iter().skip(ch).step_by(c).map(|&v| v as f64).collect();
        let b: Vec<f64> = x.data.iter().skip(ch).step_by(c).map(|&v| v as f64).collect();
        let aa: Vec<f64> = a.iter().map(|v| v * v).collect();
        let bb: Vec<f64> = b.iter().map(|v| v * v).collect();
        let ab: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p * q).collect();
        let (mu_a, mu_b) = (filter_valid(&a, h, w, &k), filter_valid(&b, h, w, &k));
        let (e_aa, e_bb, e_ab) = (
            filter_valid(&aa, h, w, &k),
            filter_valid(&bb, h, w, &k),
            filter_valid(&ab, h, w, &k),
        );
        let mut sum = 0.0f64;
        for i in 0..mu_a.len() {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let var_a = e_aa[i] - ma * ma;
            let var_b = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            sum += ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((ma * ma + mb * mb + SSIM_C1) * (var_a + var_b + SSIM_C2));
        }
        total += sum / mu_a.len() as f64;
    }
    Ok(total / c as f64)
}

/// Mean of per-frame SSIM.
pub fn ssim_video(y: &[Image], x: &[Image]) -> Result<f64> {
    check_sequences(y, x)?;
    let sum: f64 = y.iter().zip(x).map(|(a, b)| ssim(a, b)).sum::<Result<f64>>()?;
    Ok(sum / y.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub video_id: String,
    pub psnr: f64,
    pub psnr_star: Option<f64>,
    pub ssim: f64,
}

impl MetricRow {
    /// Evaluates one video against its ground truth and hole masks.
    pub fn evaluate(
        video_id: impl Into<String>,
        pred: &[Image],
        truth: &[Image],
        masks: &MaskSequence,
    ) -> Result<Self> {
        Ok(MetricRow {
            video_id: video_id.into(),
            psnr: psnr_video(pred, truth)?,
            psnr_star: psnr_star(pred, truth, masks)?,
            ssim: ssim_video(pred, truth)?,
        })
    }
}

pub const AGGREGATE_ID: &str = "AGGREGATE";
pub const CSV_HEADER: &str = "video_id,psnr,psnr_star,ssim";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
    pub aggregate: MetricRow,
}

/// Column means; the PSNR* mean divides by the number of present entries.
pub fn aggregate(rows: Vec<MetricRow>) -> Result<MetricReport> {
    if rows.is_empty() {
        return Err(Error::Argument("cannot aggregate zero rows".into()));
    }
    let n = rows.len() as f64;
    let stars: Vec<f64> = rows.iter().filter_map(|r| r.psnr_star).collect();
    let aggregate = MetricRow {
        video_id: AGGREGATE_ID.into(),
        psnr: rows.iter().map(|r| r.psnr).sum::<f64>() / n,
        psnr_star: (!stars.is_empty()).then(|| stars.iter().sum::<f64>() / stars.len() as f64),
        ssim: rows.iter().map(|r| r.ssim).sum::<f64>() / n,
    };
    Ok(MetricReport { rows, aggregate })
}

impl MetricReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in self.rows.iter().chain(std::iter::once(&self.aggregate)) {
            let star = row.psnr_star.map(|v| format!("{v:.4}")).unwrap_or_default();
            let _ = writeln!(out, "{},{:.4},{},{:.4}", row.video_id, row.psnr, star, row.ssim);
        }
        out
    }
}
