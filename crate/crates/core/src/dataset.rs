//! Netpbm frame and mask codecs, clip loading and line-delimited JSON manifests.
//!
//! A clip directory holds `00001.ppm`, `00002.ppm`, ... and its mask
//! directory the matching `00001.pgm`, ... with hole pixels stored as 255.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{Mask, MaskSequence};
use crate::tensor::Tensor;

pub const FRAME_EXT: &str = "ppm";
pub const MASK_EXT: &str = "pgm";

/// Interleaved 8-bit image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Argument(format!("unsupported channel count {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::Argument(format!(
                "{} bytes for a {width}×{height}×{channels} image",
                data.len()
            )));
        }
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    /// Gray images are replicated into three channels.
    pub fn to_rgb(&self) -> Image {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        Image {
            width: self.width,
            height: self.height,
            channels: 3,
            data,
        }
    }

    /// Nearest-neighbour resampling: output `(i, j)` reads source
    /// `(⌊i·H/h⌋, ⌊j·W/w⌋)`.
    pub fn resize_nearest(&self, height: usize, width: usize) -> Image {
        if (height, width) == (self.height, self.width) {
            return self.clone();
        }
        let c = self.channels;
        let mut data = Vec::with_capacity(height * width * c);
        for i in 0..height {
            let si = i * self.height / height;
            for j in 0..width {
                let sj = j * self.width / width;
                let o = (si * self.width + sj) * c;
                data.extend_from_slice(&self.data[o..o + c]);
            }
        }
        Image {
            width,
            height,
            channels: c,
            data,
        }
    }
}

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    payload: usize,
}

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset,
        message: message.into(),
    }
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 {
        return Err(format_err(0, "truncated magic"));
    }
    let magic = [bytes[0], bytes[1]];
    if &magic != b"P5" && &magic != b"P6" {
        return Err(format_err(0, "expected binary netpbm magic P5 or P6"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and `#` comments separate header fields
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(format_err(pos, "truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err(format_err(pos, "expected a decimal number"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format_err(start, "header number out of range"))?;
    }
    if fields[2] != 255 {
        return Err(format_err(pos, format!("maxval {} is not 255", fields[2])));
    }
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(format_err(pos, "missing whitespace after maxval"));
    }
    Ok(Header {
        magic,
        width: fields[0],
        height: fields[1],
        payload: pos + 1,
    })
}

/// Decodes a binary P5 (gray) or P6 (RGB) image with maxval 255.
pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    let h = parse_header(bytes)?;
    let channels = if &h.magic == b"P6" { 3 } else { 1 };
    let need = h.width * h.height * channels;
    let available = bytes.len() - h.payload;
    if available < need {
        return Err(format_err(
            bytes.len(),
            format!("truncated payload: {available} of {need} bytes"),
        ));
    }
    if available > need {
        return Err(format_err(h.payload + need, "trailing bytes after payload"));
    }
    Image::new(h.width, h.height, channels, bytes[h.payload..].to_vec())
}

pub fn encode_image(image: &Image) -> Vec<u8> {
    let magic = if image.channels == 3 { "P6" } else { "P5" };
    let mut out = format!("{magic}\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.data);
    out
}

/// Decodes a P5 image whose pixels are all 0 or 255.
pub fn decode_mask(bytes: &[u8]) -> Result<Mask> {
    let img = decode_image(bytes)?;
    if img.channels != 1 {
        return Err(format_err(0, "mask must be a P5 gray image"));
    }
    let payload = bytes.len() - img.data.len();
    if let Some(i) = img.data.iter().position(|&v| v != 0 && v != 255) {
        return Err(format_err(
            payload + i,
            format!("mask value {} is neither 0 nor 255", img.data[i]),
        ));
    }
    let bits = img.data.iter().map(|&v| (v == 255) as u8).collect();
    Mask::from_bits(img.height, img.width, bits)
}

pub fn encode_mask(mask: &Mask) -> Vec<u8> {
    let data = mask.bits().iter().map(|&b| if b != 0 { 255 } else { 0 }).collect();
    encode_image(&Image {
        width: mask.width(),
        height: mask.height(),
        channels: 1,
        data,
    })
}

pub fn read_image(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes).map_err(|e| at_path(path, e))
}

pub fn write_image(path: &Path, image: &Image) -> Result<()> {
    fs::write(path, encode_image(image)).map_err(|e| Error::io(path, e))
}

pub fn read_mask(path: &Path) -> Result<Mask> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_mask(&bytes).map_err(|e| at_path(path, e))
}

pub fn write_mask(path: &Path, mask: &Mask) -> Result<()> {
    fs::write(path, encode_mask(mask)).map_err(|e| Error::io(path, e))
}

fn at_path(path: &Path, err: Error) -> Error {
    match err {
        Error::Format { offset, message } => Error::Format {
            offset,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

/// `T×H×W×3` tensor of 8-bit values stored as `f32`.
pub fn frames_to_tensor(frames: &[Image]) -> Result<Tensor> {
    let first = frames
        .first()
        .ok_or_else(|| Error::Argument("no frames".into()))?;
    let (h, w) = (first.height, first.width);
    let mut data = Vec::with_capacity(frames.len() * h * w * 3);
    for f in frames {
        if (f.height, f.width) != (h, w) {
            return Err(Error::Dimension(format!(
                "frame {}×{} differs from {h}×{w}",
                f.height, f.width
            )));
        }
        data.extend(f.to_rgb().data.iter().map(|&v| v as f32));
    }
    Tensor::new(vec![frames.len(), h, w, 3], data)
}

/// Rounds to nearest and clamps into `0..=255`.
pub fn tensor_to_frames(tensor: &Tensor) -> Result<Vec<Image>> {
    let (t, h, w) = match tensor.shape()[..] {
        [t, h, w, 3] => (t, h, w),
        _ => {
            return Err(Error::Dimension(format!(
                "expected T×H×W×3, got {:?}",
                tensor.shape()
            )))
        }
    };
    let size = h * w * 3;
    (0..t)
        .map(|i| {
            let data = tensor.data()[i * size..(i + 1) * size]
                .iter()
                .map(|&v| v.round().clamp(0.0, 255.0) as u8)
                .collect();
            Image::new(w, h, 3, data)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskKind {
    Authentic,
    Pws,
    Pp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipManifestEntry {
    pub id: String,
    pub frames_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masks_dir: Option<PathBuf>,
    pub split: Split,
    pub mask_kind: MaskKind,
}

impl ClipManifestEntry {
    /// Joins relative directories onto `base`.
    pub fn resolved(&self, base: &Path) -> ClipManifestEntry {
        ClipManifestEntry {
            frames_dir: base.join(&self.frames_dir),
            masks_dir: self.masks_dir.as_ref().map(|d| base.join(d)),
            ..self.clone()
        }
    }
}

/// Parses one JSON object per non-blank line; ids must be unique.
pub fn parse_manifest(text: &str) -> Result<Vec<ClipManifestEntry>> {
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: ClipManifestEntry = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(entry.id.clone()) {
            return Err(Error::Validation(format!(
                "duplicate id {:?} on line {}",
                entry.id,
                i + 1
            )));
        }
        entries.push(entry);
    }
    Ok(entries)
}

pub fn load_manifest(path: &Path) -> Result<Vec<ClipManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text)
}

pub fn manifest_to_string(entries: &[ClipManifestEntry]) -> String {
    entries
        .iter()
        .map(|e| serde_json::to_string(e).expect("manifest entries always serialize") + "\n")
        .collect()
}

pub fn write_manifest(entries: &[ClipManifestEntry], path: &Path) -> Result<()> {
    fs::write(path, manifest_to_string(entries)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone)]
pub struct Clip {
    /// `T×H×W×3`, values in `[0, 255]`.
    pub frames: Tensor,
    pub masks: Option<MaskSequence>,
}

/// `00001.ext`, `00002.ext`, ...
pub fn numbered_name(index: usize, ext: &str) -> String {
    format!("{index:05}.{ext}")
}

/// Paths of the contiguous numbered files starting at 1; a gap or a
/// numbered file past the gap is reported by its missing index.
pub fn numbered_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let listing = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut indices = Vec::new();
    for item in listing {
        let item = item.map_err(|e| Error::io(dir, e))?;
        let name = item.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some(stem) = name.strip_suffix(&format!(".{ext}")) else { continue };
        if stem.len() == 5 && stem.bytes().all(|b| b.is_ascii_digit()) {
            indices.push(stem.parse::<usize>().expect("five digits"));
        }
    }
    indices.sort_unstable();
    for (pos, &idx) in indices.iter().enumerate() {
        if idx != pos + 1 {
            return Err(Error::Io {
                path: dir.join(numbered_name(pos + 1, ext)),
                message: format!("missing file for index {}", pos + 1),
            });
        }
    }
    Ok(indices.iter().map(|&i| dir.join(numbered_name(i, ext))).collect())
}

/// Loads frames (and masks when listed) resized to `target = (H, W)`.
pub fn load_clip(entry: &ClipManifestEntry, target: (usize, usize)) -> Result<Clip> {
    let (h, w) = target;
    let paths = numbered_files(&entry.frames_dir, FRAME_EXT)?;
    if paths.is_empty() {
        return Err(Error::Io {
            path: entry.frames_dir.join(numbered_name(1, FRAME_EXT)),
            message: "missing file for index 1".into(),
        });
    }
    let frames = paths
        .iter()
        .map(|p| read_image(p).map(|img| img.to_rgb().resize_nearest(h, w)))
        .collect::<Result<Vec<_>>>()?;
    let masks = match &entry.masks_dir {
        None => None,
        Some(dir) => {
            let mask_paths = numbered_files(dir, MASK_EXT)?;
            if mask_paths.len() != frames.len() {
                let missing = mask_paths.len().min(frames.len()) + 1;
                let (d, ext) = if mask_paths.len() < frames.len() {
                    (dir, MASK_EXT)
                } else {
                    (&entry.frames_dir, FRAME_EXT)
                };
                return Err(Error::Io {
                    path: d.join(numbered_name(missing, ext)),
                    message: format!(
                        "count mismatch: {} frames, {} masks; missing index {missing}",
                        frames.len(),
                        mask_paths.len()
                    ),
                });
            }
            let masks = mask_paths
                .iter()
                .map(|p| read_mask(p).map(|m| m.resize_nearest(h, w)))
                .collect::<Result<Vec<_>>>()?;
            Some(MaskSequence::new(masks)?)
        }
    };
    Ok(Clip {
        frames: frames_to_tensor(&frames)?,
        masks,
    })
}

/// Loads the frames as 8-bit images without resizing.
pub fn load_frames(dir: &Path) -> Result<Vec<Image>> {
    numbered_files(dir, FRAME_EXT)?
        .iter()
        .map(|p| read_image(p))
        .collect()
}

pub fn load_masks(dir: &Path) -> Result<MaskSequence> {
    let masks = numbered_files(dir, MASK_EXT)?
        .iter()
        .map(|p| read_mask(p))
        .collect::<Result<Vec<_>>>()?;
    MaskSequence::new(masks)
}

pub fn write_frames(dir: &Path, frames: &[Image]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, f) in frames.iter().enumerate() {
        write_image(&dir.join(numbered_name(i + 1, FRAME_EXT)), f)?;
    }
    Ok(())
}

pub fn write_mask_sequence(dir: &Path, masks: &MaskSequence) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, m) in masks.frames().iter().enumerate() {
        write_mask(&dir.join(numbered_name(i + 1, MASK_EXT)), m)?;
    }
    Ok(())
}
