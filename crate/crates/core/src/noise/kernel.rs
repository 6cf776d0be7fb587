//! The Volterra kernel `K_H` that maps a Brownian motion to a fractional one,
//! `W^H_t = int_0^t K_H(t, s) dB_s`.
//!
//! For `H > 1/2`
//! `K_H(t,s) = C_H s^{1/2-H} int_s^t (r-s)^{H-3/2} r^{H-1/2} dr`,
//! and for `H < 1/2`
//! `K_H(t,s) = C_H [ t^{H-1/2} s^{1/2-H} (t-s)^{H-1/2}
//!             + (1/2-H) s^{1/2-H} int_s^t (r-s)^{H-1/2} r^{H-3/2} dr ]`.
//! The constant `C_H` is calibrated numerically so that `Var W^H_1 = 1`.

use std::sync::{Mutex, OnceLock};

use crate::error::{domain, Error, Result};
use crate::quad::{gl12, integrate_singular, Tolerance};

const INNER_TOL: f64 = 1e-12;
const CALIBRATION_TOL: f64 = 1e-10;

fn check_hurst(h: f64) -> Result<()> {
    if h > 0.0 && h < 1.0 {
        Ok(())
    } else {
        domain(format!("Hurst parameter {h} outside (0, 1)"))
    }
}

/// The bracketed expression without `C_H`, for `0 < s < t` and `gap = t - s`.
fn bracket_gap(h: f64, t: f64, s: f64, gap: f64) -> Result<f64> {
    if h == 0.5 {
        return Ok(1.0);
    }
    let tol = Tolerance::rel(INNER_TOL);
    if h > 0.5 {
        let a = h - 1.5;
        let b = h - 0.5;
        let j = integrate_singular(
            |_, u, _| u.powf(a) * (s + u).powf(b),
            0.0,
            gap,
            a,
            0.0,
            tol,
        )?;
        Ok(s.powf(0.5 - h) * j)
    } else {
        let a = h - 0.5;
        let b = h - 1.5;
        let j = integrate_singular(
            |_, u, _| u.powf(a) * (s + u).powf(b),
            0.0,
            gap,
            a,
            0.0,
            tol,
        )?;
        let sp = s.powf(0.5 - h);
        Ok(t.powf(a) * sp * gap.powf(a) + (0.5 - h) * sp * j)
    }
}

/// Unnormalized kernel, i.e. `K_H(t, s) / C_H`.
pub fn kernel_bracket(h: f64, t: f64, s: f64) -> Result<f64> {
    check_hurst(h)?;
    if !(s > 0.0 && s < t) {
        return domain(format!("kernel needs 0 < s < t, got s = {s}, t = {t}"));
    }
    bracket_gap(h, t, s, t - s)
}

fn calibration_cache() -> &'static Mutex<Vec<(u64, f64)>> {
    static CACHE: OnceLock<Mutex<Vec<(u64, f64)>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(Vec::new()))
}

/// Normalization `C_H` such that `int_0^1 K_H(1, s)^2 ds = 1`.
///
/// Results are memoized per bit pattern of `h`.
pub fn calibrate_kernel(h: f64) -> Result<f64> {
    check_hurst(h)?;
    if h == 0.5 {
        return Ok(1.0);
    }
    let key = h.to_bits();
    if let Some(&(_, c)) = calibration_cache()
        .lock()
        .expect("calibration cache poisoned")
        .iter()
        .find(|(k, _)| *k == key)
    {
        return Ok(c);
    }
    let mu0 = -(2.0 * h - 1.0).abs();
    let mu1 = 2.0 * h - 1.0;
    let failure = Mutex::new(None);
    let integral = integrate_singular(
        |_, s, gap| match bracket_gap(h, 1.0, s, gap) {
            Ok(v) => v * v,
            Err(e) => {
                failure.lock().expect("poisoned").get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        1.0,
        mu0,
        mu1,
        Tolerance::rel(CALIBRATION_TOL),
    );
    if let Some(e) = failure.into_inner().expect("poisoned") {
        return Err(e);
    }
    let integral = integral?;
    if !(integral > 0.0 && integral.is_finite()) {
        return Err(Error::Quadrature {
            a: 0.0,
            b: 1.0,
            target: CALIBRATION_TOL,
            achieved: f64::INFINITY,
        });
    }
    let c = integral.sqrt().recip();
    calibration_cache()
        .lock()
        .expect("calibration cache poisoned")
        .push((key, c));
    Ok(c)
}

/// Calibrated kernel `K_H(t, s)`.
pub fn eval_kernel(h: f64, t: f64, s: f64) -> Result<f64> {
    VolterraKernel::new(h)?.eval(t, s)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VolterraKernel {
    hurst: f64,
    norm: f64,
}

impl VolterraKernel {
    pub fn new(h: f64) -> Result<Self> {
        Ok(Self {
            hurst: h,
            norm: calibrate_kernel(h)?,
        })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn normalization(&self) -> f64 {
        self.norm
    }

    pub fn eval(&self, t: f64, s: f64) -> Result<f64> {
        Ok(self.norm * kernel_bracket(self.hurst, t, s)?)
    }

    fn eval_gap(&self, t: f64, s: f64, gap: f64) -> Result<f64> {
        Ok(self.norm * bracket_gap(self.hurst, t, s, gap)?)
    }

    /// `int_a^b K(t, r) K(s, r) dr` for `0 <= a < b <= s <= t`.
    fn product_integral(&self, t: f64, s: f64, a: f64, b: f64) -> Result<f64> {
        let h = self.hurst;
        let mu_a = if a == 0.0 { -(2.0 * h - 1.0).abs() } else { 0.0 };
        let mu_b = if b == s {
            if s == t {
                2.0 * h - 1.0
            } else {
                h - 0.5
            }
        } else {
            0.0
        };
        let err = Mutex::new(None);
        let v = integrate_singular(
            |r, _, db| {
                let ks = if b == s { self.eval_gap(s, r, db) } else { self.eval(s, r) };
                let kt = if s == t && b == s {
                    ks.clone()
                } else {
                    self.eval_gap(t, r, t - r)
                };
                match (kt, ks) {
                    (Ok(x), Ok(y)) => x * y,
                    (Err(e), _) | (_, Err(e)) => {
                        err.lock().expect("poisoned").get_or_insert(e);
                        f64::NAN
                    }
                }
            },
            a,
            b,
            mu_a,
            mu_b,
            Tolerance::rel(1e-10),
        );
        if let Some(e) = err.into_inner().expect("poisoned") {
            return Err(e);
        }
        v
    }

    /// `int_0^{min(s,t)} K(t, r) K(s, r) dr`, which equals the fBm covariance.
    pub fn covariance(&self, s: f64, t: f64) -> Result<f64> {
        let (s, t) = if s <= t { (s, t) } else { (t, s) };
        if !(s > 0.0) {
            return domain("covariance needs s, t > 0");
        }
        self.product_integral(t, s, 0.0, s)
    }

    /// Conditional variance `sigma^2_{s,t} = int_s^t K(t, r)^2 dr` of `W_t` given `F_s`.
    pub fn conditional_variance(&self, s: f64, t: f64) -> Result<f64> {
        if !(s >= 0.0 && s < t) {
            return domain(format!("conditional variance needs 0 <= s < t, got {s}, {t}"));
        }
        self.product_integral(t, t, s, t)
    }
}

/// Kernel values `K_H(t_k, u_j)` at grid times `t_k = k dt` and midpoints
/// `u_j = (j + 1/2) dt`, for `1 <= k <= n` and `0 <= j < k`.
///
/// Built column by column: the inner integral over `[u_j, t_k]` is accumulated
/// across grid cells, so the singular quadrature is done once per column and every
/// further cell is a smooth 12-point Gauss–Legendre step.
#[derive(Clone, Debug)]
pub struct KernelTable {
    kernel: VolterraKernel,
    dt: f64,
    n: usize,
    /// Row `k - 1` holds `K(t_k, u_j)` in its first `k` entries.
    values: Vec<f64>,
}

impl KernelTable {
    pub fn build(h: f64, dt: f64, n: usize) -> Result<Self> {
        let kernel = VolterraKernel::new(h)?;
        if !(dt > 0.0) || n == 0 {
            return domain("kernel table needs dt > 0 and n >= 1");
        }
        let mut values = vec![0.0; n * n];
        // self-similarity: K(c t, c s) = c^{H-1/2} K(t, s); work in units of dt
        let scale = kernel.norm * dt.powf(h - 0.5);
        let rule = gl12();
        let tol = Tolerance::rel(INNER_TOL);
        for j in 0..n {
            let u = j as f64 + 0.5;
            let up = u.powf(0.5 - h);
            if h == 0.5 {
                for k in (j + 1)..=n {
                    values[(k - 1) * n + j] = scale;
                }
                continue;
            }
            let (a, b) = if h > 0.5 { (h - 1.5, h - 0.5) } else { (h - 0.5, h - 1.5) };
            // [u, j + 1] carries the singularity at r = u
            let mut acc = integrate_singular(
                |_, w, _| w.powf(a) * (u + w).powf(b),
                0.0,
                0.5,
                a,
                0.0,
                tol,
            )?;
            for k in (j + 1)..=n {
                if k > j + 1 {
                    let lo = (k - 1) as f64;
                    let mut cell = 0.0;
                    for (x, w) in rule.points(0.0, 1.0) {
                        let r = lo + x;
                        let gap = (k - 1 - j) as f64 - 0.5 + x;
                        cell += w * gap.powf(a) * r.powf(b);
                    }
                    acc += cell;
                }
                let t = k as f64;
                let v = if h > 0.5 {
                    up * acc
                } else {
                    let gap = k as f64 - u;
                    t.powf(h - 0.5) * up * gap.powf(h - 0.5) + (0.5 - h) * up * acc
                };
                values[(k - 1) * n + j] = scale * v;
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Quadrature {
                a: 0.0,
                b: n as f64 * dt,
                target: INNER_TOL,
                achieved: f64::INFINITY,
            });
        }
        Ok(Self {
            kernel,
            dt,
            n,
            values,
        })
    }

    pub fn kernel(&self) -> &VolterraKernel {
        &self.kernel
    }

    pub fn hurst(&self) -> f64 {
        self.kernel.hurst
    }

    pub fn normalization(&self) -> f64 {
        self.kernel.norm
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.n
    }

    /// `K(t_k, u_j)` for `1 <= k <= n`, `j < k`.
    pub fn get(&self, k: usize, j: usize) -> f64 {
        debug_assert!(k >= 1 && k <= self.n && j < k);
        self.values[(k - 1) * self.n + j]
    }

    /// `[K(t_k, u_0), ..., K(t_k, u_{k-1})]`.
    pub fn row(&self, k: usize) -> &[f64] {
        let start = (k - 1) * self.n;
        &self.values[start..start + k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brownian_kernel_is_one() {
        assert_eq!(calibrate_kernel(0.5).unwrap(), 1.0);
        assert_eq!(eval_kernel(0.5, 1.0, 0.3).unwrap(), 1.0);
    }

    #[test]
    fn domain_checks() {
        assert!(eval_kernel(0.7, 1.0, 1.0).is_err());
        assert!(eval_kernel(0.7, 1.0, 0.0).is_err());
        assert!(eval_kernel(1.2, 1.0, 0.5).is_err());
    }

    #[test]
    fn table_matches_adaptive_kernel() {
        for h in [0.2, 0.35, 0.7, 0.85] {
            let dt = 1.0 / 64.0;
            let table = KernelTable::build(h, dt, 64).unwrap();
            let kernel = VolterraKernel::new(h).unwrap();
            for k in [1usize, 2, 7, 33, 64] {
                for j in [0usize, k / 2, k - 1] {
                    let want = kernel.eval(k as f64 * dt, (j as f64 + 0.5) * dt).unwrap();
                    let got = table.get(k, j);
                    assert!((got - want).abs() <= 1e-9 * want.abs(), "h={h} k={k} j={j}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn diagonal_behaviour_is_power_law() {
        // K(t, s) / (t - s)^{H - 1/2} approaches a positive limit as s -> t
        let kernel = VolterraKernel::new(0.75).unwrap();
        let ratios: Vec<f64> = (4..=16)
            .map(|k| {
                let gap = 2f64.powi(-k);
                kernel.eval(1.0, 1.0 - gap).unwrap() / gap.powf(0.25)
            })
            .collect();
        for w in ratios.windows(2) {
            assert!(w[1] > 0.0);
            assert!((w[1] / w[0] - 1.0).abs() < 0.05);
        }
    }
}
