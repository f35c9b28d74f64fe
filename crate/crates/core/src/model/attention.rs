//! Multi-head cross-attention with hand-written reverse mode.

use super::params::AttentionParams;
use crate::error::{Error, Result};
use crate::numerics::{softmax_rows, Matrix};

/// Intermediates of one cross-attention call.
#[derive(Debug, Clone)]
pub struct AttentionCache {
    pub q_in: Matrix,
    pub kv_in: Matrix,
    pub q: Matrix,
    pub k: Matrix,
    pub v: Matrix,
    /// One `queries × keys` row-stochastic matrix per head.
    pub weights: Vec<Matrix>,
    /// Head outputs concatenated along the width, before the output projection.
    pub concat: Matrix,
}

fn project(x: &Matrix, w: &Matrix, b: &Matrix) -> Result<Matrix> {
    x.matmul(w)?.add_row_broadcast(b)
}

/// `MHA(q_in·W_Q, kv_in·W_K, kv_in·W_V)·W_O`, all projections with bias.
///
/// Each head `h` uses columns `h·d_h..(h+1)·d_h` of the projected queries,
/// keys and values with scores scaled by `1/√d_h`.
pub fn mha(q_in: &Matrix, kv_in: &Matrix, p: &AttentionParams, n_heads: usize) -> Result<(Matrix, AttentionCache)> {
    let d = p.w_q.rows();
    if q_in.cols() != d || kv_in.cols() != d {
        return Err(Error::shape(format!(
            "attention width {d} does not match inputs of width {} and {}",
            q_in.cols(),
            kv_in.cols()
        )));
    }
    if n_heads == 0 || !d.is_multiple_of(n_heads) {
        return Err(Error::shape(format!("width {d} is not divisible into {n_heads} heads")));
    }
    let dh = d / n_heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let q = project(q_in, &p.w_q, &p.b_q)?;
    let k = project(kv_in, &p.w_k, &p.b_k)?;
    let v = project(kv_in, &p.w_v, &p.b_v)?;

    let mut concat = Matrix::zeros(q_in.rows(), d);
    let mut weights = Vec::with_capacity(n_heads);
    for h in 0..n_heads {
        let (lo, hi) = (h * dh, (h + 1) * dh);
        let qh = q.columns(lo, hi);
        let kh = k.columns(lo, hi);
        let vh = v.columns(lo, hi);
        let scores = qh.matmul(&kh.transpose())?.scale(scale);
        let a = softmax_rows(&scores);
        concat.set_columns(lo, &a.matmul(&vh)?);
        weights.push(a);
    }
    let out = project(&concat, &p.w_o, &p.b_o)?;
    Ok((
        out,
        AttentionCache {
            q_in: q_in.clone(),
            kv_in: kv_in.clone(),
            q,
            k,
            v,
            weights,
            concat,
        },
    ))
}

/// Backpropagates `d_out` through one attention call. Parameter gradients
/// are added into `grads`; returns the gradients of `q_in` and `kv_in`.
pub fn mha_backward(
    p: &AttentionParams,
    cache: &AttentionCache,
    d_out: &Matrix,
    grads: &mut AttentionParams,
) -> Result<(Matrix, Matrix)> {
    let d = p.w_q.rows();
    let n_heads = cache.weights.len();
    let dh = d / n_heads;
    let scale = 1.0 / (dh as f64).sqrt();

    grads.w_o.add_assign(&cache.concat.t_matmul(d_out)?)?;
    grads.b_o.add_assign(&d_out.column_sums())?;
    let d_concat = d_out.matmul_t(&p.w_o)?;

    let mut d_q = Matrix::zeros(cache.q.rows(), d);
    let mut d_k = Matrix::zeros(cache.k.rows(), d);
    let mut d_v = Matrix::zeros(cache.v.rows(), d);
    for (h, a) in cache.weights.iter().enumerate() {
        let (lo, hi) = (h * dh, (h + 1) * dh);
        let qh = cache.q.columns(lo, hi);
        let kh = cache.k.columns(lo, hi);
        let vh = cache.v.columns(lo, hi);
        let d_oh = d_concat.columns(lo, hi);

        let d_a = d_oh.matmul_t(&vh)?;
        d_v.set_columns(lo, &a.t_matmul(&d_oh)?);
        // softmax backward, row by row: dS = A ⊙ (dA − ⟨dA, A⟩_row)
        let mut d_s = Matrix::zeros(a.rows(), a.cols());
        for r in 0..a.rows() {
            let inner: f64 = a.row(r).iter().zip(d_a.row(r)).map(|(x, y)| x * y).sum();
            for c in 0..a.cols() {
                d_s[(r, c)] = a[(r, c)] * (d_a[(r, c)] - inner) * scale;
            }
        }
        d_q.set_columns(lo, &d_s.matmul(&kh)?);
        d_k.set_columns(lo, &d_s.t_matmul(&qh)?);
    }

    grads.w_q.add_assign(&cache.q_in.t_matmul(&d_q)?)?;
    grads.b_q.add_assign(&d_q.column_sums())?;
    grads.w_k.add_assign(&cache.kv_in.t_matmul(&d_k)?)?;
    grads.b_k.add_assign(&d_k.column_sums())?;
    grads.w_v.add_assign(&cache.kv_in.t_matmul(&d_v)?)?;
    grads.b_v.add_assign(&d_v.column_sums())?;

    let d_q_in = d_q.matmul_t(&p.w_q)?;
    let mut d_kv_in = d_k.matmul_t(&p.w_k)?;
    d_kv_in.add_assign(&d_v.matmul_t(&p.w_v)?)?;
    Ok((d_q_in, d_kv_in))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelConfig, ModelParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_attention(d: usize, seed: u64) -> AttentionParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ModelParams::init(&ModelConfig { d, seed, ..ModelConfig::ett(48, 24) })
            .unwrap()
            .layers
            .remove(0)
            .agg;
        for b in [&mut p.b_q, &mut p.b_k, &mut p.b_v, &mut p.b_o] {
            *b = Matrix::random_normal(1, d, &mut rng).scale(0.1);
        }
        p
    }

    /// Scalar-loop evaluation of the same attention.
    fn scalar_mha(q_in: &Matrix, kv_in: &Matrix, p: &AttentionParams, heads: usize) -> Matrix {
        let d = p.w_q.rows();
        let dh = d / heads;
        let lin = |x: &Matrix, w: &Matrix, b: &Matrix, i: usize, j: usize| {
            let mut s = b[(0, j)];
            for t in 0..d {
                s += x[(i, t)] * w[(t, j)];
            }
            s
        };
        let (nq, nk) = (q_in.rows(), kv_in.rows());
        let mut concat = Matrix::zeros(nq, d);
        for h in 0..heads {
            for i in 0..nq {
                let mut logits = vec![0.0; nk];
                for (j, l) in logits.iter_mut().enumerate() {
                    for c in h * dh..(h + 1) * dh {
                        *l += lin(q_in, &p.w_q, &p.b_q, i, c) * lin(kv_in, &p.w_k, &p.b_k, j, c);
                    }
                    *l /= (dh as f64).sqrt();
                }
                let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = logits.iter().map(|l| (l - mx).exp()).sum();
                for c in h * dh..(h + 1) * dh {
                    let mut s = 0.0;
                    for (j, l) in logits.iter().enumerate() {
                        s += (l - mx).exp() / z * lin(kv_in, &p.w_v, &p.b_v, j, c);
                    }
                    concat[(i, c)] = s;
                }
            }
        }
        Matrix::from_fn(nq, d, |i, j| lin(&concat, &p.w_o, &p.b_o, i, j))
    }

    #[test]
    fn identical_keys_give_uniform_weights() {
        let p = random_attention(4, 2);
        let q = Matrix::from_rows(&[vec![0.3, -1.0, 0.5, 2.0]]).unwrap();
        let row = vec![1.0, 0.5, -0.5, 0.25];
        let kv = Matrix::from_rows(&[row.clone(), row.clone(), row.clone()]).unwrap();
        let (out, cache) = mha(&q, &kv, &p, 2).unwrap();
        for w in &cache.weights {
            for v in w.data() {
                assert!((v - 1.0 / 3.0).abs() < 1e-15);
            }
        }
        let single = Matrix::from_rows(&[row]).unwrap();
        let value = project(&single, &p.w_v, &p.b_v).unwrap();
        let expected = project(&value, &p.w_o, &p.b_o).unwrap();
        for (a, b) in out.data().iter().zip(expected.data()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn weights_are_row_stochastic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random_attention(4, 3);
        let (_, cache) = mha(
            &Matrix::random_normal(3, 4, &mut rng),
            &Matrix::random_normal(5, 4, &mut rng),
            &p,
            2,
        )
        .unwrap();
        for w in &cache.weights {
            assert_eq!(w.shape(), (3, 5));
            for r in 0..3 {
                assert!((w.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(w.row(r).iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn matches_scalar_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = random_attention(4, 5);
        let q = Matrix::random_normal(3, 4, &mut rng);
        let kv = Matrix::random_normal(5, 4, &mut rng);
        let (out, _) = mha(&q, &kv, &p, 2).unwrap();
        let want = scalar_mha(&q, &kv, &p, 2);
        for (a, b) in out.data().iter().zip(want.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let p = random_attention(4, 1);
        assert!(mha(&Matrix::zeros(2, 3), &Matrix::zeros(2, 4), &p, 1).is_err());
        assert!(mha(&Matrix::zeros(2, 4), &Matrix::zeros(2, 4), &p, 3).is_err());
    }
}
