//! Redundancy-aware video wire inpainting.
//!
//! The crate is forward-only: it implements pseudo wire-shaped mask
//! synthesis, the Raformer layer (transformer block, redundancy-aware
//! window attention, soft feature alignment), the loss evaluators, the
//! PSNR / PSNR* / SSIM metric suite, and netpbm-based dataset IO.
//!
//! Every computation is deterministic for a given seed and input. Kernels
//! may run on the rayon pool, but each output element is reduced in a fixed
//! order so results are bit-identical regardless of thread count.

pub mod dataset;
pub mod error;
pub mod mask;
pub mod metrics;
pub mod raformer;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use mask::{Mask, MaskSequence, Rect, WireSpec};
pub use raformer::{RaformerConfig, WindowSet};
pub use rng::Rng;
pub use tensor::Tensor;
