//! Euler scheme for `X_t = x0 + int_0^t b(r, X_r) dr + W_t` and pathwise
//! functionals of the drift component `psi_t = int_0^t b(r, X_r) dr`.

use ndarray::{Array2, ArrayView2};

use crate::drift::DriftField;
use crate::error::{domain, Error, Result};
use crate::noise::{GridSpec, NoiseKind, NoisePath};

/// Largest number of points used by [`holder_norm`]; longer windows are subsampled.
pub const HOLDER_MAX_POINTS: usize = 4096;

#[derive(Clone, Debug)]
pub struct SolutionPath {
    pub grid: GridSpec,
    pub x0: Vec<f64>,
    /// Solution, `steps + 1` rows.
    pub x: Array2<f64>,
    /// Drift component, `psi[0] = 0`.
    pub psi: Array2<f64>,
    pub noise_kind: NoiseKind,
    pub noise_index: u64,
    pub drift_desc: String,
}

impl SolutionPath {
    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn endpoint(&self) -> Vec<f64> {
        self.x.row(self.grid.steps).to_vec()
    }
}

/// Explicit Euler with the drift evaluated at the midpoint `t_k + dt / 2`:
/// `psi_{k+1} = psi_k + b(t_k + dt/2, X_k) dt` and `X_k = x0 + psi_k + W_k`.
///
/// Raw singular fields are refused, and any drift value above the field's
/// ceiling (or non-finite) aborts the solve with [`Error::UnboundedDrift`].
pub fn euler_solve(drift: &DriftField, noise: &NoisePath, x0: &[f64]) -> Result<SolutionPath> {
    let d = noise.dim;
    if drift.dim() != d || x0.len() != d {
        return domain(format!(
            "dimension mismatch: drift {}, noise {d}, initial point {}",
            drift.dim(),
            x0.len()
        ));
    }
    if !drift.is_solvable() {
        return Err(Error::UnboundedDrift {
            field: drift.to_string(),
            t: 0.0,
            value: f64::INFINITY,
            ceiling: drift.ceiling(),
        });
    }
    let n = noise.grid.steps;
    let dt = noise.grid.dt();
    let w = &noise.values;
    let mut x = Array2::zeros((n + 1, d));
    let mut psi = Array2::zeros((n + 1, d));
    for i in 0..d {
        x[[0, i]] = x0[i] + psi[[0, i]] + w[[0, i]];
    }
    let ceiling = drift.ceiling();
    let mut xk = vec![0.0; d];
    let mut b = vec![0.0; d];
    for k in 0..n {
        let t = noise.grid.time(k) + 0.5 * dt;
        for i in 0..d {
            xk[i] = x[[k, i]];
        }
        drift.eval(t, &xk, &mut b);
        let size = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(size <= ceiling) {
            return Err(Error::UnboundedDrift {
                field: drift.to_string(),
                t,
                value: size,
                ceiling,
            });
        }
        for i in 0..d {
            let p = psi[[k, i]] + b[i] * dt;
            psi[[k + 1, i]] = p;
            x[[k + 1, i]] = x0[i] + p + w[[k + 1, i]];
        }
    }
    Ok(SolutionPath {
        grid: noise.grid,
        x0: x0.to_vec(),
        x,
        psi,
        noise_kind: noise.kind,
        noise_index: noise.path_index,
        drift_desc: drift.to_string(),
    })
}

/// Discrete 1-variation `sum_{k = start}^{end - 1} |path_{k+1} - path_k|` over the
/// grid indices `start ..= end`.
pub fn one_variation(path: ArrayView2<f64>, start: usize, end: usize) -> Result<f64> {
    if start >= end {
        return Err(Error::EmptyWindow { start, end });
    }
    if end >= path.nrows() {
        return domain(format!("window end {end} beyond path of {} points", path.nrows()));
    }
    let mut acc = 0.0;
    for k in start..end {
        let mut s = 0.0;
        for i in 0..path.ncols() {
            let dv = path[[k + 1, i]] - path[[k, i]];
            s += dv * dv;
        }
        acc += s.sqrt();
    }
    Ok(acc)
}

/// Running 1-variation: entry `k` is the 1-variation over `0 ..= k`.
pub fn cumulative_variation(path: ArrayView2<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(path.nrows());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..path.nrows() {
        let mut s = 0.0;
        for i in 0..path.ncols() {
            let dv = path[[k, i]] - path[[k - 1, i]];
            s += dv * dv;
        }
        acc += s.sqrt();
        out.push(acc);
    }
    out
}

/// Discrete Hölder seminorm `max |path_j - path_i| / ((j - i) dt)^gamma` over grid
/// pairs in `start ..= end`. Windows with more than [`HOLDER_MAX_POINTS`] points
/// are subsampled with a fixed stride, which yields a lower bound.
pub fn holder_norm(path: ArrayView2<f64>, gamma: f64, start: usize, end: usize, dt: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return domain(format!("Hölder exponent must lie in (0, 1], got {gamma}"));
    }
    if start >= end {
        return Err(Error::EmptyWindow { start, end });
    }
    if end >= path.nrows() {
        return domain(format!("window end {end} beyond path of {} points", path.nrows()));
    }
    let points = end - start + 1;
    let stride = points.div_ceil(HOLDER_MAX_POINTS);
    let idx: Vec<usize> = (start..=end).step_by(stride).collect();
    let d = path.ncols();
    let mut best: f64 = 0.0;
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            let mut s = 0.0;
            for c in 0..d {
                let dv = path[[j, c]] - path[[i, c]];
                s += dv * dv;
            }
            let h = ((j - i) as f64 * dt).powf(gamma);
            best = best.max(s.sqrt() / h);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::{constant_field, linear_field, zero_field};
    use ndarray::array;

    #[test]
    fn variation_examples() {
        let mono = array![[0.0], [0.5], [0.7], [2.0]];
        assert_eq!(one_variation(mono.view(), 0, 3).unwrap(), 2.0);
        let zig = array![[0.0], [1.0], [0.0], [1.0]];
        assert_eq!(one_variation(zig.view(), 0, 3).unwrap(), 3.0);
        assert!(matches!(one_variation(zig.view(), 2, 2), Err(Error::EmptyWindow { .. })));
        assert_eq!(cumulative_variation(zig.view()), vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn holder_examples() {
        let n = 100;
        let dt = 0.01;
        let lin = Array2::from_shape_fn((n + 1, 1), |(k, _)| k as f64 * dt);
        assert!((holder_norm(lin.view(), 1.0, 0, n, dt).unwrap() - 1.0).abs() < 1e-12);
        let flat = Array2::from_elem((n + 1, 2), 3.0);
        assert_eq!(holder_norm(flat.view(), 0.5, 0, n, dt).unwrap(), 0.0);
    }

    #[test]
    fn trivial_solves() {
        let grid = GridSpec::new(1.0, 64, 1).unwrap();
        let noise = crate::noise::sample_bm(grid, 2).unwrap();
        let sol = euler_solve(&zero_field(2), &noise, &[0.5, -1.0]).unwrap();
        for k in 0..=64 {
            assert_eq!(sol.x[[k, 0]], 0.5 + noise.values[[k, 0]]);
            assert_eq!(sol.psi[[k, 1]], 0.0);
        }
        let zero_noise = NoisePath::zero(grid, 1);
        let ode = euler_solve(&linear_field(-1.0, 1), &zero_noise, &[1.0]).unwrap();
        assert!(ode.x[[64, 0]] > 0.0);
        let c = euler_solve(&constant_field(vec![0.25]), &zero_noise, &[0.0]).unwrap();
        for k in 0..=64 {
            assert!((c.psi[[k, 0]] - 0.25 * grid.time(k)).abs() < 1e-15);
        }
    }

    #[test]
    fn raw_singular_field_is_refused() {
        let grid = GridSpec::new(1.0, 8, 1).unwrap();
        let noise = NoisePath::zero(grid, 1);
        let f = crate::drift::signed_power_field(0.5, 0.5, 1);
        assert!(matches!(euler_solve(&f, &noise, &[0.1]), Err(Error::UnboundedDrift { .. })));
    }
}
