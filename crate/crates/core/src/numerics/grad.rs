/// Central finite-difference gradient of `f` at `x`:
/// `(f(x + h·eᵢ) − f(x − h·eᵢ)) / 2h` for every coordinate.
pub fn finite_diff_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    assert!(h > 0.0, "finite difference step must be positive");
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let plus = f(&probe);
            probe[i] = orig - h;
            let minus = f(&probe);
            probe[i] = orig;
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

/// Relative error `|a − b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;

    #[test]
    fn square_at_three() {
        let g = finite_diff_grad(|x| x[0] * x[0], &[3.0], 1e-5);
        assert!((g[0] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn constant_is_flat() {
        let g = finite_diff_grad(|_| 4.2, &[1.0, -2.0, 0.5], 1e-4);
        assert_eq!(g, vec![0.0; 3]);
    }

    #[test]
    fn sum_of_squares_of_matmul() {
        // f(A) = ‖A·B‖²_F has gradient 2·(A·B)·Bᵀ.
        let b = Matrix::from_rows(&[vec![1.0, -0.5], vec![0.25, 2.0], vec![-1.5, 0.75]]).unwrap();
        let a = [0.3, -0.7, 1.1, 0.9, 0.2, -0.4];
        let f = |flat: &[f64]| {
            let m = Matrix::from_vec(2, 3, flat.to_vec()).unwrap();
            m.matmul(&b).unwrap().data().iter().map(|v| v * v).sum::<f64>()
        };
        let numeric = finite_diff_grad(f, &a, 1e-6);
        let am = Matrix::from_vec(2, 3, a.to_vec()).unwrap();
        let analytic = am.matmul(&b).unwrap().matmul_t(&b).unwrap().scale(2.0);
        for (n, g) in numeric.iter().zip(analytic.data()) {
            assert!(relative_error(*n, *g, 1e-8) < 1e-7, "{n} vs {g}");
        }
    }
}
