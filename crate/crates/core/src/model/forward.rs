use super::attention::{mha, mha_backward, AttentionCache};
use super::config::ModelConfig;
use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::preprocessing::PhaseMatrix;

/// Intermediates of one routing layer.
#[derive(Debug, Clone)]
pub struct LayerCache {
    /// Layer input (`z̃` for the first layer).
    pub input: Matrix,
    /// Contextualized routers, `m × d`.
    pub h: Matrix,
    pub agg: AttentionCache,
    pub dist: AttentionCache,
    pub z_attn: Matrix,
}

impl LayerCache {
    /// Phase-to-router weights per head, `m × l_phase`.
    pub fn agg_weights(&self) -> &[Matrix] {
        &self.agg.weights
    }

    /// Router-to-phase weights per head, `l_phase × m`.
    pub fn dist_weights(&self) -> &[Matrix] {
        &self.dist.weights
    }
}

/// Everything the backward pass and attention inspection need.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub x_phase: Matrix,
    pub z: Matrix,
    pub z_tilde: Matrix,
    pub layers: Vec<LayerCache>,
    pub y_phase: Matrix,
}

impl ForwardCache {
    pub fn final_representation(&self) -> &Matrix {
        &self.layers.last().expect("at least one layer").z_attn
    }
}

/// Runs the network on one phase–period matrix.
///
/// `Z = X·θ + b`, `Z̃ = Z + E_pos`; each layer computes
/// `H = MHA(R, Z̃, Z̃)` then `Z_attn = MHA(Z̃, H, H)` (plus `Z̃` when the
/// residual flag is set) and feeds `Z_attn` to the next layer; finally
/// `Y = Z_attn·φ + b`.
pub fn forward(params: &ModelParams, x_phase: &PhaseMatrix, config: &ModelConfig) -> Result<(PhaseMatrix, ForwardCache)> {
    let x = &x_phase.values;
    if x.shape() != (config.l_phase, config.p_in()) {
        return Err(Error::shape(format!(
            "phase matrix {}x{} does not match the configured {}x{}",
            x.rows(),
            x.cols(),
            config.l_phase,
            config.p_in()
        )));
    }
    let z = x.matmul(&params.theta)?.add_row_broadcast(&params.theta_bias)?;
    let z_tilde = z.add(&params.e_pos)?;

    let mut layers = Vec::with_capacity(params.layers.len());
    let mut input = z_tilde.clone();
    for layer in &params.layers {
        let (h, agg) = mha(&params.routers, &input, &layer.agg, config.n_heads)?;
        let (mut z_attn, dist) = mha(&input, &h, &layer.dist, config.n_heads)?;
        if config.residual {
            z_attn.add_assign(&input)?;
        }
        let next = z_attn.clone();
        layers.push(LayerCache {
            input,
            h,
            agg,
            dist,
            z_attn,
        });
        input = next;
    }
    let y = input.matmul(&params.phi)?.add_row_broadcast(&params.phi_bias)?;
    let cache = ForwardCache {
        x_phase: x.clone(),
        z,
        z_tilde,
        layers,
        y_phase: y.clone(),
    };
    Ok((PhaseMatrix::new(y)?, cache))
}

/// Exact gradients of a scalar loss whose gradient with respect to the
/// output phase matrix is `d_y`.
pub fn backward(params: &ModelParams, cache: &ForwardCache, d_y: &Matrix, config: &ModelConfig) -> Result<ModelParams> {
    if d_y.shape() != cache.y_phase.shape() {
        return Err(Error::shape("output gradient does not match the cached output"));
    }
    let mut grads = ModelParams::zeros(config);
    let last = cache.final_representation();
    grads.phi = last.t_matmul(d_y)?;
    grads.phi_bias = d_y.column_sums();
    let mut d_input = d_y.matmul_t(&params.phi)?;

    for (i, (layer, lc)) in params.layers.iter().zip(&cache.layers).enumerate().rev() {
        let d_z_attn = d_input;
        let g = &mut grads.layers[i];
        let (d_q_dist, d_h) = mha_backward(&layer.dist, &lc.dist, &d_z_attn, &mut g.dist)?;
        let (d_routers, d_kv_agg) = mha_backward(&layer.agg, &lc.agg, &d_h, &mut g.agg)?;
        grads.routers.add_assign(&d_routers)?;
        let mut d_layer_in = d_q_dist;
        d_layer_in.add_assign(&d_kv_agg)?;
        if config.residual {
            d_layer_in.add_assign(&d_z_attn)?;
        }
        d_input = d_layer_in;
    }

    grads.e_pos = d_input.clone();
    grads.theta = cache.x_phase.t_matmul(&d_input)?;
    grads.theta_bias = d_input.column_sums();
    Ok(grads)
}
