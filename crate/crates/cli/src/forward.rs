use std::fs;
use std::path::{Path, PathBuf};

use raformer_core::dataset::{
    load_clip, load_manifest, tensor_to_frames, write_frames, write_manifest, ClipManifestEntry,
};
use raformer_core::raformer::{composite, ModelWeights, Raformer};
use raformer_core::{Mask, MaskSequence, Tensor};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::gen_masks::write_json;

pub const TRACE_FILE: &str = "raa_trace.json";
pub const TIMING_FILE: &str = "timing.json";
pub const OUTPUT_MANIFEST: &str = "manifest.jsonl";

/// Kept window indices and per-layer wall time for one clip.
#[derive(Debug, Clone)]
pub struct ClipTrace {
    pub id: String,
    pub frames: usize,
    /// `kept[layer][frame]`.
    pub kept: Vec<Vec<Vec<usize>>>,
    pub layer_seconds: Vec<f64>,
}

/// Directory a manifest's relative paths are resolved against.
pub fn manifest_base(manifest: &Path) -> PathBuf {
    manifest
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default()
}

fn frame_slice(frames: &Tensor, start: usize, end: usize) -> CliResult<Tensor> {
    let shape = frames.shape();
    let per = shape[1] * shape[2] * shape[3];
    let data = frames.data()[start * per..end * per].to_vec();
    Ok(Tensor::new(vec![end - start, shape[1], shape[2], shape[3]], data)?)
}

/// Runs the model over consecutive local windows of `frames` frames and
/// returns the composited clip with its trace.
pub fn forward_clip(
    model: &Raformer,
    id: &str,
    frames: &Tensor,
    masks: &MaskSequence,
) -> CliResult<(Tensor, ClipTrace)> {
    let total = frames.shape()[0];
    let local = model.config().frames;
    let layers = model.config().layers;
    let mut out = Vec::with_capacity(frames.numel());
    let mut trace = ClipTrace {
        id: id.to_string(),
        frames: total,
        kept: vec![Vec::with_capacity(total); layers],
        layer_seconds: vec![0.0; layers],
    };
    let mut start = 0;
    while start < total {
        let end = (start + local).min(total);
        let clip = frame_slice(frames, start, end)?;
        let chunk_masks = masks.slice(start, end);
        let result = model.forward(&clip, &chunk_masks)?;
        let merged = composite(&result.prediction, &clip, &chunk_masks)?;
        out.extend_from_slice(merged.data());
        for (l, layer) in result.layers.into_iter().enumerate() {
            trace.kept[l].extend(layer.kept);
            trace.layer_seconds[l] += layer.elapsed.as_secs_f64();
        }
        start = end;
    }
    Ok((Tensor::new(frames.shape().to_vec(), out)?, trace))
}

/// Loads (or initializes) the model for a run.
pub fn build_model(
    config: &raformer_core::RaformerConfig,
    weights: Option<&Path>,
) -> CliResult<Raformer> {
    match weights {
        Some(p) => Ok(Raformer::from_weights(ModelWeights::load(p)?)?),
        None => Ok(Raformer::new(config)?),
    }
}

/// Processes every clip of the manifest in order and writes frames,
/// `raa_trace.json`, `timing.json` and an output manifest into `out`.
pub fn run(model: &Raformer, manifest: &Path, out: &Path) -> CliResult<Vec<ClipTrace>> {
    let cfg = model.config();
    let entries = load_manifest(manifest)?;
    let base = manifest_base(manifest);
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;

    let mut traces = Vec::with_capacity(entries.len());
    let mut produced = Vec::with_capacity(entries.len());
    for entry in &entries {
        let clip = load_clip(&entry.resolved(&base), (cfg.height, cfg.width))?;
        let t = clip.frames.shape()[0];
        let masks = match clip.masks {
            Some(m) => m,
            None => MaskSequence::new(vec![Mask::new(cfg.height, cfg.width); t])?,
        };
        let (result, trace) = forward_clip(model, &entry.id, &clip.frames, &masks)?;
        write_frames(&out.join(&entry.id), &tensor_to_frames(&result)?)?;
        produced.push(ClipManifestEntry {
            id: entry.id.clone(),
            frames_dir: PathBuf::from(&entry.id),
            masks_dir: None,
            split: entry.split,
            mask_kind: entry.mask_kind,
        });
        traces.push(trace);
    }

    let trace_json = json!({
        "num_windows": cfg.num_windows(),
        "keep": cfg.k(),
        "clips": traces.iter().map(|t| json!({
            "id": t.id,
            "frames": t.frames,
            "layers": t.kept,
        })).collect::<Vec<_>>(),
    });
    write_json(&out.join(TRACE_FILE), &trace_json)?;
    let timing_json = json!({
        "clips": traces.iter().map(|t| json!({
            "id": t.id,
            "layer_seconds": t.layer_seconds,
            "total_seconds": t.layer_seconds.iter().sum::<f64>(),
        })).collect::<Vec<_>>(),
    });
    write_json(&out.join(TIMING_FILE), &timing_json)?;
    write_manifest(&produced, &out.join(OUTPUT_MANIFEST))?;
    Ok(traces)
}
