#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use raformer_core::dataset::{encode_image, Image};
use raformer_core::Rng;
use serde_json::{json, Value};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_raformer"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("RAF_THREADS").output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// Small model on 64×64 frames: 16×16 grid, 4×4 windows, n = 16.
pub fn small_config(keep: Option<usize>) -> Value {
    let mut model = json!({
        "height": 64, "width": 64, "channels": 8, "heads": 2, "layers": 2,
        "window_h": 4, "window_w": 4,
    });
    if let Some(k) = keep {
        model["keep"] = json!(k);
    }
    json!({ "model": model, "wire": { "num": 2, "len_range": [20, 60] }, "len": 5 })
}

pub fn write_json(path: &Path, value: &Value) -> PathBuf {
    fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path.to_path_buf()
}

/// Smoothly varying seeded frames so SSIM and PSNR are non-trivial.
pub fn synthetic_frames(count: usize, h: usize, w: usize, seed: u64) -> Vec<Image> {
    let mut rng = Rng::new(seed);
    let (fy, fx, phase) = (rng.uniform(0.05, 0.2), rng.uniform(0.05, 0.2), rng.uniform(0.0, 6.0));
    (0..count)
        .map(|t| {
            let mut data = Vec::with_capacity(h * w * 3);
            for y in 0..h {
                for x in 0..w {
                    for c in 0..3 {
                        let v = 127.5
                            + 100.0 * ((y as f64 * fy + x as f64 * fx + t as f64 * 0.3 + phase + c as f64).sin())
                            + rng.uniform(-10.0, 10.0);
                        data.push(v.round().clamp(0.0, 255.0) as u8);
                    }
                }
            }
            Image::new(w, h, 3, data).unwrap()
        })
        .collect()
}

pub fn write_frames(dir: &Path, frames: &[Image]) {
    fs::create_dir_all(dir).unwrap();
    for (i, f) in frames.iter().enumerate() {
        fs::write(dir.join(format!("{:05}.ppm", i + 1)), encode_image(f)).unwrap();
    }
}

/// Writes a ground-truth dataset under `root`: one synthetic clip per id,
/// masks generated by `gen-masks` with `config`, and `manifest.jsonl`.
pub fn make_dataset(root: &Path, ids: &[&str], frames: usize, hw: (usize, usize), config: &Path) -> PathBuf {
    let mut lines = String::new();
    for (i, id) in ids.iter().enumerate() {
        let clip = root.join(id);
        write_frames(&clip.join("frames"), &synthetic_frames(frames, hw.0, hw.1, i as u64 + 100));
        let masks = clip.join("masks");
        let out = run(&[
            "gen-masks", "--config", config.to_str().unwrap(), "--out", masks.to_str().unwrap(),
            "--seed", &(i + 1).to_string(), "--len", &frames.to_string(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        lines.push_str(&format!(
            "{{\"id\":\"{id}\",\"frames_dir\":\"{id}/frames\",\"masks_dir\":\"{id}/masks\",\"split\":\"test\",\"mask_kind\":\"pws\"}}\n"
        ));
    }
    let manifest = root.join("manifest.jsonl");
    fs::write(&manifest, lines).unwrap();
    manifest
}

pub fn sorted_listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

/// File name → bytes for every regular file in `dir` (non-recursive).
pub fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    sorted_listing(dir)
        .into_iter()
        .filter(|n| dir.join(n).is_file())
        .map(|n| {
            let bytes = fs::read(dir.join(&n)).unwrap();
            (n, bytes)
        })
        .collect()
}
