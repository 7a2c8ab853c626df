//! Learnable parameters, deterministic initialization and the `RAFW`
//! weight container.
//!
//! Container layout (all integers little-endian):
//!
//! ```text
//! b"RAFW"  u32 version
//! u32 config_len  config_len bytes of UTF-8 JSON (RaformerConfig)
//! repeated until EOF:
//!   u16 name_len  name bytes  u8 rank  rank × u32 extents  f32 payload
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use super::config::RaformerConfig;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

pub const WEIGHTS_MAGIC: &[u8; 4] = b"RAFW";
pub const WEIGHTS_VERSION: u32 = 1;
pub const INIT_RANGE: f32 = 0.02;

fn uniform(shape: &[usize], rng: &mut Rng) -> Tensor {
    Tensor::from_fn(shape, |_| {
        (rng.next_f64() * 2.0 * INIT_RANGE as f64 - INIT_RANGE as f64) as f32
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Norm {
    pub scale: Tensor,
    pub shift: Tensor,
}

impl Norm {
    pub fn identity(c: usize) -> Self {
        Norm {
            scale: Tensor::full(&[c], 1.0),
            shift: Tensor::zeros(&[c]),
        }
    }
}

/// Multi-head self-attention over soft-split tokens of width `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWeights {
    /// `D×C` query projection; heads take consecutive `C/heads` columns.
    pub wq: Tensor,
    pub bq: Tensor,
    pub wk: Tensor,
    pub bk: Tensor,
    pub wv: Tensor,
    pub bv: Tensor,
    /// `C×D` output projection back to token width.
    pub wo: Tensor,
    pub bo: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedForwardWeights {
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
}

/// Layer norms producing the window-level queries and keys.
#[derive(Debug, Clone, PartialEq)]
pub struct RaaWeights {
    pub ln_q: Norm,
    pub ln_k: Norm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SfaWeights {
    /// `3×3×(g·C)×C`
    pub conv1: Tensor,
    pub conv1_bias: Tensor,
    /// `3×3×C×C`
    pub conv2: Tensor,
    pub conv2_bias: Tensor,
    /// `9C×C` projection of the final 3×3 soft split.
    pub proj: Tensor,
    pub proj_bias: Tensor,
    pub leaky_slope: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    pub ln1: Norm,
    pub ln2: Norm,
    pub msa: AttentionWeights,
    pub ffn: FeedForwardWeights,
    pub raa: RaaWeights,
    pub sfa: SfaWeights,
    pub beta: f32,
    pub gamma: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderWeights {
    pub conv1: Tensor,
    pub conv1_bias: Tensor,
    pub conv2: Tensor,
    pub conv2_bias: Tensor,
    pub leaky_slope: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderWeights {
    pub conv1: Tensor,
    pub conv1_bias: Tensor,
    pub conv2: Tensor,
    pub conv2_bias: Tensor,
    pub leaky_slope: f32,
}

impl LayerWeights {
    pub fn init(config: &RaformerConfig, rng: &mut Rng) -> Result<Self> {
        let c = config.channels;
        let d = config.token_dim();
        let hidden = config.ffn_hidden();
        let g = config.groups()?;
        let msa = AttentionWeights {
            wq: uniform(&[d, c], rng),
            bq: uniform(&[c], rng),
            wk: uniform(&[d, c], rng),
            bk: uniform(&[c], rng),
            wv: uniform(&[d, c], rng),
            bv: uniform(&[c], rng),
            wo: uniform(&[c, d], rng),
            bo: uniform(&[d], rng),
        };
        let ffn = FeedForwardWeights {
            w1: uniform(&[c, hidden], rng),
            b1: uniform(&[hidden], rng),
            w2: uniform(&[hidden, c], rng),
            b2: uniform(&[c], rng),
        };
        let sfa = SfaWeights {
            conv1: uniform(&[3, 3, g * c, c], rng),
            conv1_bias: uniform(&[c], rng),
            conv2: uniform(&[3, 3, c, c], rng),
            conv2_bias: uniform(&[c], rng),
            proj: uniform(&[9 * c, c], rng),
            proj_bias: uniform(&[c], rng),
            leaky_slope: config.leaky_slope,
        };
        Ok(LayerWeights {
            ln1: Norm::identity(c),
            ln2: Norm::identity(c),
            msa,
            ffn,
            raa: RaaWeights {
                ln_q: Norm::identity(c),
                ln_k: Norm::identity(c),
            },
            sfa,
            beta: config.beta,
            gamma: config.gamma,
        })
    }

    /// All-zero attention and feed-forward parameters, identity norms.
    pub fn zeroed(config: &RaformerConfig) -> Result<Self> {
        let mut w = LayerWeights::init(config, &mut Rng::new(0))?;
        for (_, t) in w.tensors_mut() {
            t.data_mut().fill(0.0);
        }
        let c = config.channels;
        w.ln1 = Norm::identity(c);
        w.ln2 = Norm::identity(c);
        w.raa = RaaWeights {
            ln_q: Norm::identity(c),
            ln_k: Norm::identity(c),
        };
        Ok(w)
    }

    fn tensors(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("ln1.scale", &self.ln1.scale),
            ("ln1.shift", &self.ln1.shift),
            ("ln2.scale", &self.ln2.scale),
            ("ln2.shift", &self.ln2.shift),
            ("msa.wq", &self.msa.wq),
            ("msa.bq", &self.msa.bq),
            ("msa.wk", &self.msa.wk),
            ("msa.bk", &self.msa.bk),
            ("msa.wv", &self.msa.wv),
            ("msa.bv", &self.msa.bv),
            ("msa.wo", &self.msa.wo),
            ("msa.bo", &self.msa.bo),
            ("ffn.w1", &self.ffn.w1),
            ("ffn.b1", &self.ffn.b1),
            ("ffn.w2", &self.ffn.w2),
            ("ffn.b2", &self.ffn.b2),
            ("raa.ln_q.scale", &self.raa.ln_q.scale),
            ("raa.ln_q.shift", &self.raa.ln_q.shift),
            ("raa.ln_k.scale", &self.raa.ln_k.scale),
            ("raa.ln_k.shift", &self.raa.ln_k.shift),
            ("sfa.conv1", &self.sfa.conv1),
            ("sfa.conv1_bias", &self.sfa.conv1_bias),
            ("sfa.conv2", &self.sfa.conv2),
            ("sfa.conv2_bias", &self.sfa.conv2_bias),
            ("sfa.proj", &self.sfa.proj),
            ("sfa.proj_bias", &self.sfa.proj_bias),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        vec![
            ("ln1.scale", &mut self.ln1.scale),
            ("ln1.shift", &mut self.ln1.shift),
            ("ln2.scale", &mut self.ln2.scale),
            ("ln2.shift", &mut self.ln2.shift),
            ("msa.wq", &mut self.msa.wq),
            ("msa.bq", &mut self.msa.bq),
            ("msa.wk", &mut self.msa.wk),
            ("msa.bk", &mut self.msa.bk),
            ("msa.wv", &mut self.msa.wv),
            ("msa.bv", &mut self.msa.bv),
            ("msa.wo", &mut self.msa.wo),
            ("msa.bo", &mut self.msa.bo),
            ("ffn.w1", &mut self.ffn.w1),
            ("ffn.b1", &mut self.ffn.b1),
            ("ffn.w2", &mut self.ffn.w2),
            ("ffn.b2", &mut self.ffn.b2),
            ("raa.ln_q.scale", &mut self.raa.ln_q.scale),
            ("raa.ln_q.shift", &mut self.raa.ln_q.shift),
            ("raa.ln_k.scale", &mut self.raa.ln_k.scale),
            ("raa.ln_k.shift", &mut self.raa.ln_k.shift),
            ("sfa.conv1", &mut self.sfa.conv1),
            ("sfa.conv1_bias", &mut self.sfa.conv1_bias),
            ("sfa.conv2", &mut self.sfa.conv2),
            ("sfa.conv2_bias", &mut self.sfa.conv2_bias),
            ("sfa.proj", &mut self.sfa.proj),
            ("sfa.proj_bias", &mut self.sfa.proj_bias),
        ]
    }
}

impl EncoderWeights {
    pub fn init(config: &RaformerConfig, rng: &mut Rng) -> Self {
        let c = config.channels;
        EncoderWeights {
            conv1: uniform(&[3, 3, 3, c], rng),
            conv1_bias: uniform(&[c], rng),
            conv2: uniform(&[3, 3, c, c], rng),
            conv2_bias: uniform(&[c], rng),
            leaky_slope: config.leaky_slope,
        }
    }
}

impl DecoderWeights {
    pub fn init(config: &RaformerConfig, rng: &mut Rng) -> Self {
        let c = config.channels;
        DecoderWeights {
            conv1: uniform(&[3, 3, c, c], rng),
            conv1_bias: uniform(&[c], rng),
            conv2: uniform(&[3, 3, c, 3], rng),
            conv2_bias: uniform(&[3], rng),
            leaky_slope: config.leaky_slope,
        }
    }
}

/// Every parameter of an encoder, `config.layers` Raformer layers and a decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    pub config: RaformerConfig,
    pub encoder: EncoderWeights,
    pub layers: Vec<LayerWeights>,
    pub decoder: DecoderWeights,
}

impl ModelWeights {
    /// Deterministic initialization from `config.seed`. Each component draws
    /// from its own sub-stream so adding layers does not perturb the others.
    pub fn init(config: &RaformerConfig) -> Result<Self> {
        config.validate()?;
        let config = config.resolved();
        let encoder = EncoderWeights::init(&config, &mut Rng::stream(config.seed, 0));
        let layers = (0..config.layers)
            .map(|i| LayerWeights::init(&config, &mut Rng::stream(config.seed, 1 + i as u64)))
            .collect::<Result<Vec<_>>>()?;
        let decoder = DecoderWeights::init(&config, &mut Rng::stream(config.seed, u64::MAX));
        Ok(ModelWeights {
            config,
            encoder,
            layers,
            decoder,
        })
    }

    /// Flat `(name, tensor)` list in serialization order.
    pub fn named_tensors(&self) -> Vec<(String, Tensor)> {
        let mut out = vec![
            ("encoder.conv1".to_string(), self.encoder.conv1.clone()),
            ("encoder.conv1_bias".to_string(), self.encoder.conv1_bias.clone()),
            ("encoder.conv2".to_string(), self.encoder.conv2.clone()),
            ("encoder.conv2_bias".to_string(), self.encoder.conv2_bias.clone()),
        ];
        for (i, layer) in self.layers.iter().enumerate() {
            for (name, t) in layer.tensors() {
                out.push((format!("layer{i}.{name}"), t.clone()));
            }
            out.push((format!("layer{i}.beta"), Tensor::full(&[1], layer.beta)));
            out.push((format!("layer{i}.gamma"), Tensor::full(&[1], layer.gamma)));
        }
        out.extend([
            ("decoder.conv1".to_string(), self.decoder.conv1.clone()),
            ("decoder.conv1_bias".to_string(), self.decoder.conv1_bias.clone()),
            ("decoder.conv2".to_string(), self.decoder.conv2.clone()),
            ("decoder.conv2_bias".to_string(), self.decoder.conv2_bias.clone()),
        ]);
        out
    }

    /// Rebuilds weights from named tensors; every expected name must be
    /// present with the expected shape and no extra names are allowed.
    pub fn from_named(config: &RaformerConfig, tensors: Vec<(String, Tensor)>) -> Result<Self> {
        let mut model = ModelWeights::init(config)?;
        let mut map: BTreeMap<String, Tensor> = BTreeMap::new();
        for (name, t) in tensors {
            if map.insert(name.clone(), t).is_some() {
                return Err(Error::Validation(format!("duplicate tensor {name}")));
            }
        }
        let mut take = |name: &str, dst: &mut Tensor| -> Result<()> {
            let t = map
                .remove(name)
                .ok_or_else(|| Error::Validation(format!("missing tensor {name}")))?;
            if t.shape() != dst.shape() {
                return Err(Error::Validation(format!(
                    "tensor {name} has shape {:?}, expected {:?}",
                    t.shape(),
                    dst.shape()
                )));
            }
            *dst = t;
            Ok(())
        };
        take("encoder.conv1", &mut model.encoder.conv1)?;
        take("encoder.conv1_bias", &mut model.encoder.conv1_bias)?;
        take("encoder.conv2", &mut model.encoder.conv2)?;
        take("encoder.conv2_bias", &mut model.encoder.conv2_bias)?;
        for (i, layer) in model.layers.iter_mut().enumerate() {
            for (name, t) in layer.tensors_mut() {
                take(&format!("layer{i}.{name}"), t)?;
            }
            let mut beta = Tensor::zeros(&[1]);
            let mut gamma = Tensor::zeros(&[1]);
            take(&format!("layer{i}.beta"), &mut beta)?;
            take(&format!("layer{i}.gamma"), &mut gamma)?;
            layer.beta = beta.data()[0];
            layer.gamma = gamma.data()[0];
        }
        take("decoder.conv1", &mut model.decoder.conv1)?;
        take("decoder.conv1_bias", &mut model.decoder.conv1_bias)?;
        take("decoder.conv2", &mut model.decoder.conv2)?;
        take("decoder.conv2_bias", &mut model.decoder.conv2_bias)?;
        if let Some(extra) = map.keys().next() {
            return Err(Error::Validation(format!("unexpected tensor {extra}")));
        }
        Ok(model)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(WEIGHTS_MAGIC);
        out.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
        let cfg = serde_json::to_vec(&self.config).expect("config serializes");
        out.extend_from_slice(&(cfg.len() as u32).to_le_bytes());
        out.extend_from_slice(&cfg);
        for (name, t) in self.named_tensors() {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(t.rank() as u8);
            for &d in t.shape() {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for &v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != WEIGHTS_MAGIC {
            return Err(Error::Format {
                offset: 0,
                message: "missing RAFW magic".into(),
            });
        }
        let version = r.u32()?;
        if version != WEIGHTS_VERSION {
            return Err(Error::Format {
                offset: 4,
                message: format!("unsupported weight container version {version}"),
            });
        }
        let cfg_len = r.u32()? as usize;
        let cfg_at = r.pos;
        let config: RaformerConfig =
            serde_json::from_slice(r.take(cfg_len)?).map_err(|e| Error::Format {
                offset: cfg_at,
                message: format!("config block: {e}"),
            })?;
        let mut tensors = Vec::new();
        while r.pos < bytes.len() {
            let name_len = r.u16()? as usize;
            let name_at = r.pos;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| Error::Format {
                    offset: name_at,
                    message: "tensor name is not UTF-8".into(),
                })?
                .to_string();
            let rank = r.take(1)?[0] as usize;
            let shape = (0..rank)
                .map(|_| r.u32().map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            let n: usize = shape.iter().product();
            let payload_at = r.pos;
            let data = r
                .take(n * 4)?
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            let t = Tensor::new(shape, data).map_err(|e| Error::Format {
                offset: payload_at,
                message: format!("tensor {name}: {e}"),
            })?;
            tensors.push((name, t));
        }
        ModelWeights::from_named(&config, tensors)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format {
                offset: self.pos,
                message: format!(
                    "truncated: need {n} bytes, {} remain",
                    self.bytes.len() - self.pos
                ),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> RaformerConfig {
        RaformerConfig {
            frames: 2,
            height: 32,
            width: 32,
            channels: 8,
            window_h: 4,
            window_w: 4,
            layers: 2,
            heads: 2,
            ..Default::default()
        }
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = ModelWeights::init(&tiny()).unwrap();
        let b = ModelWeights::init(&tiny()).unwrap();
        assert_eq!(a, b);
        let other = ModelWeights::init(&RaformerConfig { seed: 1, ..tiny() }).unwrap();
        assert_ne!(a.layers[0].msa.wq, other.layers[0].msa.wq);
        assert_ne!(a.layers[0].msa.wq, a.layers[1].msa.wq);
        for (name, t) in a.named_tensors() {
            if name.contains("scale") || name.ends_with("beta") || name.ends_with("gamma") {
                continue;
            }
            assert!(t.data().iter().all(|v| v.abs() <= INIT_RANGE), "{name}");
        }
        assert_eq!(a.layers[0].sfa.conv1.shape(), &[3, 3, 16, 8]);
        assert_eq!(a.layers[0].msa.wq.shape(), &[49 * 8, 8]);
    }

    #[test]
    fn container_roundtrip() {
        let w = ModelWeights::init(&tiny()).unwrap();
        let bytes = w.to_bytes();
        assert_eq!(&bytes[..4], b"RAFW");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        let back = ModelWeights::from_bytes(&bytes).unwrap();
        assert_eq!(back, w);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn container_rejects_damage() {
        let w = ModelWeights::init(&tiny()).unwrap();
        let bytes = w.to_bytes();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(ModelWeights::from_bytes(&bad), Err(Error::Format { offset: 0, .. })));
        let cut = &bytes[..bytes.len() - 3];
        assert!(matches!(ModelWeights::from_bytes(cut), Err(Error::Format { .. })));
    }

    #[test]
    fn from_named_requires_every_tensor() {
        let w = ModelWeights::init(&tiny()).unwrap();
        let mut named = w.named_tensors();
        named.pop();
        assert!(ModelWeights::from_named(&w.config, named).is_err());
        let mut named = w.named_tensors();
        named.push(("bogus".into(), Tensor::zeros(&[1])));
        assert!(ModelWeights::from_named(&w.config, named).is_err());
    }
}
