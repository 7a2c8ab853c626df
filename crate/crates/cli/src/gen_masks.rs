use std::fs;
use std::path::Path;

use raformer_core::dataset::write_mask_sequence;
use raformer_core::mask::{create_video_mask, create_wire_mask};
use raformer_core::{MaskSequence, Rng};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Generates one pseudo wire-shaped mask sequence for a resolved config.
pub fn generate(config: &RunConfig) -> CliResult<MaskSequence> {
    let mut rng = Rng::new(config.wire.seed);
    let base = create_wire_mask(&config.wire, config.canvas(), &mut rng)?;
    Ok(create_video_mask(&base, config.len, config.wire.max_move, &mut rng)?)
}

/// Writes `00001.pgm ...`, `motion.json` and `config.json` into `out`.
pub fn run(config: &RunConfig, out: &Path) -> CliResult<()> {
    let masks = generate(config)?;
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write_mask_sequence(out, &masks)?;
    let motion = json!({ "motion": masks.motion_log() });
    write_json(&out.join("motion.json"), &motion)?;
    let config_path = out.join("config.json");
    fs::write(&config_path, config.to_replay_json()).map_err(|e| CliError::io(&config_path, e))
}

pub(crate) fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("json values always serialize");
    fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}
