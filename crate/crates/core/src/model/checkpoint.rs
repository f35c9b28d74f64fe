//! `PHFM1` parameter checkpoints.
//!
//! Layout: the 5 ASCII bytes `PHFM1`, then nine little-endian `u64` config
//! fields (`l_in`, `l_out`, `l_phase`, `d`, `m`, `n_layers`, `n_heads`,
//! `residual` as 0/1, `seed`), then every tensor in declaration order as
//! little-endian `f64`.

use std::fs;
use std::path::Path;

use super::config::ModelConfig;
use super::params::ModelParams;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 5] = b"PHFM1";
const HEADER_FIELDS: usize = 9;
pub const HEADER_LEN: usize = MAGIC.len() + HEADER_FIELDS * 8;

pub fn encode(config: &ModelConfig, params: &ModelParams) -> Result<Vec<u8>> {
    if params.num_scalars() != config.count_params() {
        return Err(Error::Checkpoint("parameters do not match the config".into()));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * params.num_scalars());
    out.extend_from_slice(MAGIC);
    let fields = [
        config.l_in as u64,
        config.l_out as u64,
        config.l_phase as u64,
        config.d as u64,
        config.m as u64,
        config.n_layers as u64,
        config.n_heads as u64,
        config.residual as u64,
        config.seed,
    ];
    for f in fields {
        out.extend_from_slice(&f.to_le_bytes());
    }
    for v in params.to_flat() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<(ModelConfig, ModelParams)> {
    if bytes.len() < HEADER_LEN || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Checkpoint("missing PHFM1 header".into()));
    }
    let field = |i: usize| {
        let start = MAGIC.len() + 8 * i;
        u64::from_le_bytes(bytes[start..start + 8].try_into().expect("8 bytes"))
    };
    let as_usize = |i: usize| -> Result<usize> {
        usize::try_from(field(i)).map_err(|_| Error::Checkpoint(format!("header field {i} overflows")))
    };
    let residual = match field(7) {
        0 => false,
        1 => true,
        other => return Err(Error::Checkpoint(format!("residual flag {other} is not 0 or 1"))),
    };
    let config = ModelConfig {
        l_in: as_usize(0)?,
        l_out: as_usize(1)?,
        l_phase: as_usize(2)?,
        d: as_usize(3)?,
        m: as_usize(4)?,
        n_layers: as_usize(5)?,
        n_heads: as_usize(6)?,
        residual,
        seed: field(8),
    };
    config.validate().map_err(|e| Error::Checkpoint(e.to_string()))?;
    let body = &bytes[HEADER_LEN..];
    let expected = config.count_params();
    if body.len() != 8 * expected {
        return Err(Error::Checkpoint(format!(
            "body holds {} bytes, config needs {} parameters",
            body.len(),
            expected
        )));
    }
    let flat: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(Error::Checkpoint("non-finite parameter".into()));
    }
    let params = ModelParams::from_flat(&config, &flat)?;
    Ok((config, params))
}

pub fn save(path: &Path, config: &ModelConfig, params: &ModelParams) -> Result<()> {
    fs::write(path, encode(config, params)?).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<(ModelConfig, ModelParams)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
