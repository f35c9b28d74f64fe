use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocessing::periods_for;

/// Architecture hyperparameters. Period counts are always derived from the
/// lengths, never stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub l_in: usize,
    pub l_out: usize,
    pub l_phase: usize,
    /// Embedding width.
    pub d: usize,
    /// Number of routers.
    pub m: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    /// Adds the layer input back onto the distribution output.
    #[serde(default)]
    pub residual: bool,
    pub seed: u64,
}

impl ModelConfig {
    /// Single routing layer with 8 routers, width 8, hourly period.
    pub fn ett(l_in: usize, l_out: usize) -> Self {
        Self {
            l_in,
            l_out,
            l_phase: 24,
            d: 8,
            m: 8,
            n_layers: 1,
            n_heads: 1,
            residual: false,
            seed: 0,
        }
    }

    pub fn p_in(&self) -> usize {
        periods_for(self.l_in, self.l_phase)
    }

    pub fn p_out(&self) -> usize {
        periods_for(self.l_out, self.l_phase)
    }

    pub fn head_dim(&self) -> usize {
        self.d / self.n_heads
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.l_in == 0 || self.l_out == 0 || self.l_phase == 0 {
            return fail("l_in, l_out and l_phase must be positive".into());
        }
        if self.d == 0 || self.n_heads == 0 || !self.d.is_multiple_of(self.n_heads) {
            return fail(format!("width {} must be a positive multiple of the head count {}", self.d, self.n_heads));
        }
        if self.m == 0 || self.n_layers == 0 {
            return fail("need at least one router and one layer".into());
        }
        Ok(())
    }

    /// Closed-form number of trainable scalars.
    pub fn count_params(&self) -> usize {
        let (d, m, l) = (self.d, self.m, self.l_phase);
        let embedding = self.p_in() * d + d;
        let positional = l * d;
        let routers = m * d;
        let per_layer = 2 * 4 * (d * d + d);
        let predictor = d * self.p_out() + self.p_out();
        embedding + positional + routers + self.n_layers * per_layer + predictor
    }

    /// Multiply-accumulate count of one forward pass for one variable.
    ///
    /// Routing layers cost `4((l_phase + m)d² + m·l_phase·d)` each (four
    /// projections and two attention products per cross-attention, two
    /// cross-attentions per layer); embedding and predictor add
    /// `l_phase·d·(p_in + p_out)`.
    pub fn estimate_flops(&self) -> u64 {
        let (d, m, l) = (self.d as u64, self.m as u64, self.l_phase as u64);
        let routing = 4 * ((l + m) * d * d + m * l * d);
        let ends = l * d * (self.p_in() as u64 + self.p_out() as u64);
        self.n_layers as u64 * routing + ends
    }
}
