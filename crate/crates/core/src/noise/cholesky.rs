//! Dense lower-triangular factors and the matrix products that turn them into paths.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView2, Axis};

use crate::error::{domain, Error, Result};

/// Largest grid accepted by the dense fBm sampler.
pub const MAX_CHOLESKY_STEPS: usize = 4096;

const BLOCK: usize = 96;

/// fBm covariance `(s^{2H} + t^{2H} - |t-s|^{2H}) / 2`.
pub fn fbm_covariance(h: f64, s: f64, t: f64) -> f64 {
    let h2 = 2.0 * h;
    0.5 * (s.abs().powf(h2) + t.abs().powf(h2) - (t - s).abs().powf(h2))
}

/// Lower Cholesky factor of the covariance of `(W^H_{t_1}, ..., W^H_{t_n})`.
pub fn fbm_cholesky_factor(h: f64, dt: f64, n: usize) -> Result<Array2<f64>> {
    if !(h > 0.0 && h < 1.0) {
        return domain(format!("Hurst parameter {h} outside (0, 1)"));
    }
    if n > MAX_CHOLESKY_STEPS {
        return domain(format!(
            "dense fBm sampler supports at most {MAX_CHOLESKY_STEPS} steps, got {n}"
        ));
    }
    let mut a = Array2::from_shape_fn((n, n), |(i, j)| {
        fbm_covariance(h, (i + 1) as f64 * dt, (j + 1) as f64 * dt)
    });
    cholesky_in_place(&mut a).map_err(|pivot| Error::Factorization { hurst: h, n, pivot })?;
    Ok(a)
}

/// Blocked left-looking Cholesky; on success the strict upper triangle is zeroed.
/// Returns the failing pivot index when the matrix is not numerically positive definite.
pub fn cholesky_in_place(a: &mut Array2<f64>) -> std::result::Result<(), usize> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut k0 = 0;
    while k0 < n {
        let k1 = (k0 + BLOCK).min(n);
        {
            // A[k0.., k0..k1] -= L[k0.., ..k0] L[k0..k1, ..k0]^T
            let view = a.view_mut();
            let (left, mut right) = view.split_at(Axis(1), k0);
            let left = left.slice(s![k0.., ..]);
            if k0 > 0 {
                let lt = left.slice(s![..(k1 - k0), ..]).to_owned();
                let mut target = right.slice_mut(s![k0.., ..(k1 - k0)]);
                general_mat_mul(-1.0, &left, &lt.t(), 1.0, &mut target);
            }
        }
        // unblocked factorization of the diagonal block
        for j in k0..k1 {
            let mut d = a[[j, j]];
            for p in k0..j {
                d -= a[[j, p]] * a[[j, p]];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(j);
            }
            let d = d.sqrt();
            a[[j, j]] = d;
            for i in (j + 1)..k1 {
                let mut v = a[[i, j]];
                for p in k0..j {
                    v -= a[[i, p]] * a[[j, p]];
                }
                a[[i, j]] = v / d;
            }
        }
        // rows below the block: solve x L_kk^T = b
        for i in k1..n {
            for j in k0..k1 {
                let mut v = a[[i, j]];
                for p in k0..j {
                    v -= a[[i, p]] * a[[j, p]];
                }
                a[[i, j]] = v / a[[j, j]];
            }
        }
        k0 = k1;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            a[[i, j]] = 0.0;
        }
    }
    Ok(())
}

/// `L z` for lower-triangular `L`, skipping the zero upper blocks.
pub fn lower_times(l: ArrayView2<f64>, z: ArrayView2<f64>) -> Array2<f64> {
    let n = l.nrows();
    assert_eq!(n, z.nrows());
    let mut out = Array2::zeros((n, z.ncols()));
    let rows = 256;
    let mut r0 = 0;
    while r0 < n {
        let r1 = (r0 + rows).min(n);
        general_mat_mul(
            1.0,
            &l.slice(s![r0..r1, ..r1]),
            &z.slice(s![..r1, ..]),
            0.0,
            &mut out.slice_mut(s![r0..r1, ..]),
        );
        r0 = r1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_reproduces_matrix() {
        for n in [1, 5, 97, 200] {
            let h = 0.3;
            let dt = 1.0 / n as f64;
            let l = fbm_cholesky_factor(h, dt, n).unwrap();
            let prod = l.dot(&l.t());
            for i in 0..n {
                for j in 0..n {
                    let want = fbm_covariance(h, (i + 1) as f64 * dt, (j + 1) as f64 * dt);
                    assert!((prod[[i, j]] - want).abs() < 1e-11, "n={n} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn brownian_factor_is_lower_ones() {
        let n = 130;
        let dt = 0.25;
        let l = fbm_cholesky_factor(0.5, dt, n).unwrap();
        for i in 0..n {
            for j in 0..n {
                let want = if j <= i { dt.sqrt() } else { 0.0 };
                assert!((l[[i, j]] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_indefinite() {
        let mut a = Array2::from_shape_vec((2, 2), vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert_eq!(cholesky_in_place(&mut a), Err(1));
    }

    #[test]
    fn guard_on_size() {
        assert!(fbm_cholesky_factor(0.7, 1e-4, MAX_CHOLESKY_STEPS + 1).is_err());
    }

    #[test]
    fn lower_times_matches_dense_product() {
        let n = 300;
        let l = Array2::from_shape_fn((n, n), |(i, j)| if j <= i { ((i * 7 + j) % 11) as f64 - 5.0 } else { 0.0 });
        let z = Array2::from_shape_fn((n, 3), |(i, j)| ((i + 3 * j) % 5) as f64);
        let want = l.dot(&z);
        assert_eq!(lower_times(l.view(), z.view()), want);
    }
}
