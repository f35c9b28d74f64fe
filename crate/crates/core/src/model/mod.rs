//! The phase-based routing transformer: linear phase embedding with
//! positional offsets, cross-phase routing layers (router aggregation then
//! distribution), and a predictor shared by all phases.

mod attention;
pub mod checkpoint;
mod config;
mod forward;
mod params;

pub use attention::{mha, mha_backward, AttentionCache};
pub use config::ModelConfig;
pub use forward::{backward, forward, ForwardCache, LayerCache};
pub use params::{count_params, AttentionParams, LayerParams, ModelParams, EMBEDDING_INIT, ROUTER_INIT};

/// Analytic multiply-accumulate count of one forward pass.
pub fn estimate_flops(config: &ModelConfig) -> u64 {
    config.estimate_flops()
}
