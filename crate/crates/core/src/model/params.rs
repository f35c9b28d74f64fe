use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Scale of the uniform draw for positional embeddings.
pub const EMBEDDING_INIT: f64 = 0.02;

/// Scale of the uniform draw for routers. Routers must start well apart:
/// near-identical routers attend uniformly and collapse every phase onto
/// the same representation.
pub const ROUTER_INIT: f64 = 1.0;

/// Projections of one multi-head cross-attention. Biases are `1 × d`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub w_q: Matrix,
    pub b_q: Matrix,
    pub w_k: Matrix,
    pub b_k: Matrix,
    pub w_v: Matrix,
    pub b_v: Matrix,
    pub w_o: Matrix,
    pub b_o: Matrix,
}

impl AttentionParams {
    fn zeros(d: usize) -> Self {
        let w = || Matrix::zeros(d, d);
        let b = || Matrix::zeros(1, d);
        Self {
            w_q: w(),
            b_q: b(),
            w_k: w(),
            b_k: b(),
            w_v: w(),
            b_v: b(),
            w_o: w(),
            b_o: b(),
        }
    }

    fn tensors(&self) -> [&Matrix; 8] {
        [&self.w_q, &self.b_q, &self.w_k, &self.b_k, &self.w_v, &self.b_v, &self.w_o, &self.b_o]
    }

    fn tensors_mut(&mut self) -> [&mut Matrix; 8] {
        [
            &mut self.w_q,
            &mut self.b_q,
            &mut self.w_k,
            &mut self.b_k,
            &mut self.w_v,
            &mut self.b_v,
            &mut self.w_o,
            &mut self.b_o,
        ]
    }
}

/// One cross-phase routing layer: phase-to-router aggregation followed by
/// router-to-phase distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub agg: AttentionParams,
    pub dist: AttentionParams,
}

/// Every trainable tensor of the network. Also used to hold gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// `p_in × d` embedding weight.
    pub theta: Matrix,
    pub theta_bias: Matrix,
    /// `l_phase × d` positional embeddings.
    pub e_pos: Matrix,
    /// `m × d` learnable routers, shared by all layers.
    pub routers: Matrix,
    pub layers: Vec<LayerParams>,
    /// `d × p_out` shared predictor.
    pub phi: Matrix,
    pub phi_bias: Matrix,
}

impl ModelParams {
    pub fn zeros(config: &ModelConfig) -> Self {
        let (d, p_in, p_out) = (config.d, config.p_in(), config.p_out());
        Self {
            theta: Matrix::zeros(p_in, d),
            theta_bias: Matrix::zeros(1, d),
            e_pos: Matrix::zeros(config.l_phase, d),
            routers: Matrix::zeros(config.m, d),
            layers: (0..config.n_layers)
                .map(|_| LayerParams {
                    agg: AttentionParams::zeros(d),
                    dist: AttentionParams::zeros(d),
                })
                .collect(),
            phi: Matrix::zeros(d, p_out),
            phi_bias: Matrix::zeros(1, p_out),
        }
    }

    /// Seeded initialization: weights uniform in `±1/√fan_in`, biases zero,
    /// positional embeddings uniform in `±0.02`, routers in `±1`.
    pub fn init(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (d, p_in, p_out) = (config.d, config.p_in(), config.p_out());
        let fan = |n: usize| 1.0 / (n as f64).sqrt();
        let theta = Matrix::random_uniform(p_in, d, fan(p_in), &mut rng);
        let e_pos = Matrix::random_uniform(config.l_phase, d, EMBEDDING_INIT, &mut rng);
        let routers = Matrix::random_uniform(config.m, d, ROUTER_INIT, &mut rng);
        let mut attention = || {
            let mut a = AttentionParams::zeros(d);
            for w in [&mut a.w_q, &mut a.w_k, &mut a.w_v, &mut a.w_o] {
                *w = Matrix::random_uniform(d, d, fan(d), &mut rng);
            }
            a
        };
        let layers = (0..config.n_layers)
            .map(|_| LayerParams {
                agg: attention(),
                dist: attention(),
            })
            .collect();
        let phi = Matrix::random_uniform(d, p_out, fan(d), &mut rng);
        Ok(Self {
            theta,
            theta_bias: Matrix::zeros(1, d),
            e_pos,
            routers,
            layers,
            phi,
            phi_bias: Matrix::zeros(1, p_out),
        })
    }

    /// All tensors in declaration order (the checkpoint order).
    pub fn tensors(&self) -> Vec<&Matrix> {
        let mut out = vec![&self.theta, &self.theta_bias, &self.e_pos, &self.routers];
        for layer in &self.layers {
            out.extend(layer.agg.tensors());
            out.extend(layer.dist.tensors());
        }
        out.push(&self.phi);
        out.push(&self.phi_bias);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = vec![&mut self.theta, &mut self.theta_bias, &mut self.e_pos, &mut self.routers];
        for layer in &mut self.layers {
            out.extend(layer.agg.tensors_mut());
            out.extend(layer.dist.tensors_mut());
        }
        out.push(&mut self.phi);
        out.push(&mut self.phi_bias);
        out
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.num_scalars());
        for t in self.tensors() {
            flat.extend_from_slice(t.data());
        }
        flat
    }

    /// Overwrites every tensor from a flat vector in declaration order.
    pub fn copy_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_scalars() {
            return Err(Error::shape(format!(
                "flat vector has {} values, parameters need {}",
                flat.len(),
                self.num_scalars()
            )));
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.data_mut().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    pub fn from_flat(config: &ModelConfig, flat: &[f64]) -> Result<Self> {
        let mut p = Self::zeros(config);
        p.copy_from_flat(flat)?;
        Ok(p)
    }

    /// `self += other · scale`, tensor by tensor.
    pub fn accumulate(&mut self, other: &ModelParams, scale: f64) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
                *x += scale * y;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }
}

/// Number of trainable scalars for `config`.
pub fn count_params(config: &ModelConfig) -> usize {
    config.count_params()
}
