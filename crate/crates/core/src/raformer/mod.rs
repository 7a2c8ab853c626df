//! The Raformer layer and the toy encoder/decoder around it.
//!
//! A layer refines features with a transformer block, scores `h×w` windows
//! by the attention their means receive across all frames, keeps the top
//! `k` per frame, packs them into `g = 4k/n` half-resolution groups, and
//! aligns them back to the full feature grid before a weighted merge.

mod block;
mod config;
mod layer;
mod loss;
mod patches;
mod sfa;
mod weights;
mod window;

pub use block::{self_attention, transformer_block};
pub use config::{
    group_count, PatchGeometry, RaformerConfig, DEFAULT_FRAMES, DEFAULT_HEIGHT, DEFAULT_LAYERS,
    DEFAULT_WIDTH, LAMBDA_ADV,
};
pub use layer::{
    composite, decode_features, encode_frames, merge, raformer_layer, raformer_layer_detailed,
    ForwardOutput, LayerOutput, LayerTrace, Raformer,
};
pub use loss::{adversarial_losses, adversarial_losses_from_scores, reconstruction_loss, LossReport};
pub use patches::{soft_composite, soft_split};
pub use sfa::{composite_groups, sfa_align};
pub use weights::{
    AttentionWeights, DecoderWeights, EncoderWeights, FeedForwardWeights, LayerWeights,
    ModelWeights, Norm, RaaWeights, SfaWeights, INIT_RANGE, WEIGHTS_MAGIC, WEIGHTS_VERSION,
};
pub use window::{
    importance_from_attention, reverse_pack, select_topk_windows, window_attention,
    window_importance, window_means, window_partition, window_reverse, WindowSet,
};
