use std::collections::HashSet;
use std::fs;
use std::path::Path;

use raformer_core::dataset::{load_frames, load_manifest, load_masks, Image};
use raformer_core::metrics::{aggregate, MetricReport, MetricRow};
use raformer_core::{Mask, MaskSequence};

use crate::error::{CliError, CliResult};
use crate::forward::manifest_base;

/// Scores every ground-truth clip against the prediction with the same id.
///
/// Ground-truth frames and masks are resized to the prediction resolution.
pub fn evaluate(pred_manifest: &Path, gt_manifest: &Path) -> CliResult<MetricReport> {
    let pred = load_manifest(pred_manifest)?;
    let gt = load_manifest(gt_manifest)?;
    let pred_ids: HashSet<&str> = pred.iter().map(|e| e.id.as_str()).collect();
    let gt_ids: HashSet<&str> = gt.iter().map(|e| e.id.as_str()).collect();
    let missing_pred: Vec<&str> = gt.iter().map(|e| e.id.as_str()).filter(|id| !pred_ids.contains(id)).collect();
    let missing_gt: Vec<&str> = pred.iter().map(|e| e.id.as_str()).filter(|id| !gt_ids.contains(id)).collect();
    if !missing_pred.is_empty() || !missing_gt.is_empty() {
        return Err(CliError::alignment(format!(
            "manifests do not align; missing predictions: [{}]; missing ground truth: [{}]",
            missing_pred.join(", "),
            missing_gt.join(", ")
        )));
    }
    if gt.is_empty() {
        return Err(CliError::alignment("ground-truth manifest lists no clips"));
    }

    let (pred_base, gt_base) = (manifest_base(pred_manifest), manifest_base(gt_manifest));
    let mut rows = Vec::with_capacity(gt.len());
    for g in &gt {
        let p = pred.iter().find(|p| p.id == g.id).expect("ids checked above");
        let pred_frames = load_frames(&pred_base.join(&p.frames_dir))?;
        let first = pred_frames
            .first()
            .ok_or_else(|| CliError::alignment(format!("{}: prediction has no frames", g.id)))?;
        let (h, w) = (first.height, first.width);
        let gt_frames: Vec<Image> = load_frames(&gt_base.join(&g.frames_dir))?
            .iter()
            .map(|f| f.to_rgb().resize_nearest(h, w))
            .collect();
        if gt_frames.len() != pred_frames.len() {
            return Err(CliError::alignment(format!(
                "{}: {} predicted frames, {} ground-truth frames",
                g.id,
                pred_frames.len(),
                gt_frames.len()
            )));
        }
        let masks = match &g.masks_dir {
            Some(dir) => {
                let m = load_masks(&gt_base.join(dir))?;
                if m.len() != gt_frames.len() {
                    return Err(CliError::alignment(format!(
                        "{}: {} masks for {} frames",
                        g.id,
                        m.len(),
                        gt_frames.len()
                    )));
                }
                MaskSequence::new(m.frames().iter().map(|f| f.resize_nearest(h, w)).collect())?
            }
            None => MaskSequence::new(vec![Mask::new(h, w); gt_frames.len()])?,
        };
        let pred_rgb: Vec<Image> = pred_frames.iter().map(Image::to_rgb).collect();
        rows.push(MetricRow::evaluate(&g.id, &pred_rgb, &gt_frames, &masks)?);
    }
    Ok(aggregate(rows)?)
}

pub fn run(pred_manifest: &Path, gt_manifest: &Path, out: &Path) -> CliResult<MetricReport> {
    let report = evaluate(pred_manifest, gt_manifest)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(out, report.to_csv()).map_err(|e| CliError::io(out, e))?;
    Ok(report)
}
