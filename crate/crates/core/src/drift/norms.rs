//! Mixed Lebesgue norms of drift fields and heat-smoothing Besov norms of lattice functions.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::quad::{adaptive, Tolerance};
use crate::stats::pairwise_sum;

use super::DriftField;

/// Refinement controls for [`lqlp_norm`].
#[derive(Clone, Copy, Debug)]
pub struct NormResolution {
    /// Time horizon `T`; the norm is taken over `[0, T]`.
    pub horizon: f64,
    /// Dyadic shells towards `t = 0` and towards `x = 0` before tail extrapolation.
    pub shells: usize,
    /// Angular nodes per direction on the sphere (`d >= 2`).
    pub angles: usize,
    /// Relative tolerance of the adaptive rule on each shell.
    pub rel_tol: f64,
}

impl Default for NormResolution {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            shells: 40,
            angles: 16,
            rel_tol: 1e-9,
        }
    }
}

/// Ratio of consecutive shell contributions above which the shell series is
/// declared divergent.
const DIVERGENCE_RATIO: f64 = 1.0 - 1e-3;

/// `(int_0^T (int_{|x| <= R} |f(t, x)|^p dx)^{q/p} dt)^{1/q}`.
///
/// The time axis is split into dyadic shells `[T 2^{-k-1}, T 2^{-k}]` and the
/// radial axis into `[1, R]` plus dyadic shells below `min(1, R)`, each handled by
/// adaptive Gauss–Kronrod. Contributions of the remaining shells are extrapolated
/// geometrically from the last two; a ratio close to or above 1 signals a
/// non-integrable singularity. Supported for `d <= 3`.
pub fn lqlp_norm(field: &DriftField, p: f64, q: f64, radius: f64, res: &NormResolution) -> Result<f64> {
    lqlp_of(field.dim(), p, q, radius, res, |t, x, out| field.eval(t, x, out))
}

/// `lqlp_norm` of `a - b`.
pub fn lqlp_distance(
    a: &DriftField,
    b: &DriftField,
    p: f64,
    q: f64,
    radius: f64,
    res: &NormResolution,
) -> Result<f64> {
    if a.dim() != b.dim() {
        return domain("fields of different dimension");
    }
    let d = a.dim();
    lqlp_of(d, p, q, radius, res, |t, x, out| {
        let mut tmp = [0.0; 3];
        a.eval(t, x, out);
        b.eval(t, x, &mut tmp[..d]);
        for i in 0..d {
            out[i] -= tmp[i];
        }
    })
}

fn lqlp_of<F>(d: usize, p: f64, q: f64, radius: f64, res: &NormResolution, f: F) -> Result<f64>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    if !(p >= 1.0 && p.is_finite() && q >= 1.0 && q.is_finite()) {
        return domain(format!("norm exponents must lie in [1, inf), got p = {p}, q = {q}"));
    }
    if !(radius > 0.0 && res.horizon > 0.0) {
        return domain("radius and horizon must be positive");
    }
    if d == 0 || d > 3 {
        return Err(Error::Unsupported(format!("lqlp_norm supports d <= 3, got {d}")));
    }
    let inner_tol = Tolerance::rel(res.rel_tol * 0.1);
    let outer_tol = Tolerance::rel(res.rel_tol);
    let sphere = SphereRule::new(d, res.angles);
    let space = |t: f64| -> Result<f64> {
        let radial = |r: f64| -> f64 {
            let mut out = [0.0; 3];
            let mut x = [0.0; 3];
            let mut acc = 0.0;
            for (dir, w) in sphere.nodes.iter() {
                for i in 0..d {
                    x[i] = r * dir[i];
                }
                f(t, &x[..d], &mut out[..d]);
                let m: f64 = out[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
                acc += w * m.powf(p);
            }
            acc * r.powi(d as i32 - 1)
        };
        let r0 = radius.min(1.0);
        let outer = if radius > r0 {
            adaptive(radial, r0, radius, inner_tol)?
        } else {
            0.0
        };
        let shells = dyadic_shells(r0, res.shells, outer, |a, b, floor| {
            adaptive(radial, a, b, with_floor(inner_tol, floor))
        }, "x = 0")?;
        Ok(outer + shells)
    };
    let time = |t: f64| -> f64 {
        match space(t) {
            Ok(v) => v.powf(q / p),
            Err(_) => f64::NAN,
        }
    };
    // surface any spatial failure with its own message
    space(res.horizon)?;
    let total = dyadic_shells(res.horizon, res.shells, 0.0, |a, b, floor| {
        adaptive(time, a, b, with_floor(outer_tol, floor))
    }, "t = 0")?;
    if !total.is_finite() {
        return Err(Error::NonIntegrable("spatial integral failed inside the time integral".into()));
    }
    Ok(total.powf(1.0 / q))
}

/// Relative tolerance `tol` with an absolute floor of `NEGLIGIBLE` times `mass`.
fn with_floor(tol: Tolerance, mass: f64) -> Tolerance {
    Tolerance {
        abs: tol.abs.max(NEGLIGIBLE * tol.rel * mass.abs()),
        ..tol
    }
}

/// Shells contributing less than this fraction of the tolerance of the mass
/// accumulated so far are integrated to that absolute accuracy only; near an
/// odd field's zero the values are pure cancellation and carry no relative accuracy.
const NEGLIGIBLE: f64 = 1e-3;

/// `int_0^top` as a sum over `[top 2^{-k-1}, top 2^{-k}]` with geometric tail.
/// `piece(a, b, mass)` integrates one shell given the mass accumulated before it
/// (starting from `base`).
fn dyadic_shells<G>(top: f64, shells: usize, base: f64, mut piece: G, near: &str) -> Result<f64>
where
    G: FnMut(f64, f64, f64) -> Result<f64>,
{
    let shells = shells.max(3);
    let mut parts = Vec::with_capacity(shells);
    let mut mass = base;
    let mut b = top;
    for _ in 0..shells {
        let a = 0.5 * b;
        let v = piece(a, b, mass)?;
        mass += v;
        parts.push(v);
        b = a;
    }
    let last = parts[shells - 1];
    let prev = parts[shells - 2];
    let tail = if last.abs() <= 1e-12 * mass.abs() {
        0.0
    } else if prev == 0.0 {
        return Err(Error::NonIntegrable(format!("shell contributions near {near} reappear")));
    } else {
        let ratio = last / prev;
        if ratio >= DIVERGENCE_RATIO {
            return Err(Error::NonIntegrable(format!(
                "shell contributions near {near} do not decay (ratio {ratio:.4})"
            )));
        }
        last * ratio / (1.0 - ratio)
    };
    parts.reverse();
    Ok(pairwise_sum(&parts) + tail)
}

/// Quadrature on the unit sphere `S^{d-1}` with total weight equal to its area.
struct SphereRule {
    nodes: Vec<([f64; 3], f64)>,
}

impl SphereRule {
    fn new(d: usize, m: usize) -> Self {
        let m = m.max(2);
        let mut nodes = Vec::new();
        match d {
            1 => {
                nodes.push(([1.0, 0.0, 0.0], 1.0));
                nodes.push(([-1.0, 0.0, 0.0], 1.0));
            }
            2 => {
                // midpoint trapezoid, avoiding the coordinate axes
                let n = 4 * m;
                for k in 0..n {
                    let phi = (k as f64 + 0.5) * 2.0 * PI / n as f64;
                    nodes.push(([phi.cos(), phi.sin(), 0.0], 2.0 * PI / n as f64));
                }
            }
            _ => {
                let gl = crate::quad::GaussLegendre::new(m);
                let n = 4 * m;
                for (z, wz) in gl.points(-1.0, 1.0) {
                    let rho = (1.0 - z * z).sqrt();
                    for k in 0..n {
                        let phi = (k as f64 + 0.5) * 2.0 * PI / n as f64;
                        nodes.push(([rho * phi.cos(), rho * phi.sin(), z], wz * 2.0 * PI / n as f64));
                    }
                }
            }
        }
        Self { nodes }
    }
}

/// Negative-regularity index and integrability of a Besov-type norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesovSpec {
    /// `beta <= 0`; `beta = 0` means the plain `L_rho` norm.
    pub beta: f64,
    /// `rho` in `[1, inf]`.
    pub rho: f64,
}

/// Scalar function sampled on a uniform lattice in `R^d`, last axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeFunction {
    pub origin: Vec<f64>,
    pub spacing: f64,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl LatticeFunction {
    /// Samples `f` at `origin + spacing * index`.
    pub fn sample<F: Fn(&[f64]) -> f64>(f: F, origin: Vec<f64>, spacing: f64, shape: Vec<usize>) -> Self {
        let d = shape.len();
        let total: usize = shape.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut x = vec![0.0; d];
        for idx in 0..total {
            let mut rest = idx;
            for i in (0..d).rev() {
                x[i] = origin[i] + spacing * (rest % shape[i]) as f64;
                rest /= shape[i];
            }
            values.push(f(&x));
        }
        Self {
            origin,
            spacing,
            shape,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    fn lp_norm(&self, values: &[f64], rho: f64) -> f64 {
        let cell = self.spacing.powi(self.dim() as i32);
        if rho.is_infinite() {
            values.iter().fold(0.0, |m, v| m.max(v.abs()))
        } else {
            let powered: Vec<f64> = values.iter().map(|v| v.abs().powf(rho)).collect();
            (pairwise_sum(&powered) * cell).powf(1.0 / rho)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BesovReport {
    pub norm: f64,
    /// `(a, a^{-beta/2} ||p_a * f||_rho)` per level.
    pub levels: Vec<(f64, f64)>,
    /// Change of the maximum when the finest level is added.
    pub refinement_delta: f64,
}

/// `max_a a^{-beta/2} ||p_a * f||_{L_rho}` over `a_levels`, with `p_a` the centred
/// Gaussian density of covariance `a I`. The convolution is a separable lattice
/// sum evaluated on a lattice padded by `8 sqrt(a)` on every side.
pub fn besov_norm(f: &LatticeFunction, spec: &BesovSpec, a_levels: &[f64]) -> Result<BesovReport> {
    if !(spec.beta <= 0.0) {
        return domain(format!("Besov index must be <= 0, got {}", spec.beta));
    }
    if !(spec.rho >= 1.0) {
        return domain(format!("integrability rho must be >= 1, got {}", spec.rho));
    }
    if f.values.len() != f.shape.iter().product::<usize>() || f.origin.len() != f.dim() {
        return domain("lattice shape does not match its values");
    }
    if spec.beta == 0.0 {
        let n = f.lp_norm(&f.values, spec.rho);
        return Ok(BesovReport {
            norm: n,
            levels: vec![],
            refinement_delta: 0.0,
        });
    }
    if a_levels.is_empty() || a_levels.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
        return domain("smoothing levels must lie in (0, 1]");
    }
    let amin = a_levels.iter().cloned().fold(f64::INFINITY, f64::min);
    let limit = amin.sqrt() / 4.0;
    if f.spacing > limit {
        return Err(Error::ResolutionTooCoarse {
            spacing: f.spacing,
            limit,
        });
    }
    let mut sorted = a_levels.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut levels = Vec::with_capacity(sorted.len());
    for &a in &sorted {
        let smoothed = heat_smooth(f, a);
        let v = a.powf(-0.5 * spec.beta) * f.lp_norm(&smoothed, spec.rho);
        levels.push((a, v));
    }
    let norm = levels.iter().fold(0.0_f64, |m, l| m.max(l.1));
    let coarse = levels[..levels.len() - 1].iter().fold(0.0_f64, |m, l| m.max(l.1));
    Ok(BesovReport {
        norm,
        refinement_delta: if levels.len() > 1 { norm - coarse } else { 0.0 },
        levels,
    })
}

/// Values of `p_a * f` on the padded lattice.
fn heat_smooth(f: &LatticeFunction, a: f64) -> Vec<f64> {
    let h = f.spacing;
    let m = (8.0 * a.sqrt() / h).ceil() as usize;
    let taps: Vec<f64> = (0..=2 * m)
        .map(|k| {
            let x = (k as f64 - m as f64) * h;
            h * (-0.5 * x * x / a).exp() / (2.0 * PI * a).sqrt()
        })
        .collect();
    let mut shape = f.shape.clone();
    let mut values = f.values.clone();
    for axis in 0..shape.len() {
        let (v, s) = convolve_axis(&values, &shape, axis, &taps, m);
        values = v;
        shape = s;
    }
    values
}

fn convolve_axis(values: &[f64], shape: &[usize], axis: usize, taps: &[f64], m: usize) -> (Vec<f64>, Vec<usize>) {
    let len = shape[axis];
    let out_len = len + 2 * m;
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut out = vec![0.0; outer * out_len * inner];
    for o in 0..outer {
        for c in 0..inner {
            for j in 0..len {
                let v = values[(o * len + j) * inner + c];
                if v == 0.0 {
                    continue;
                }
                // input j lands at padded index j + m; output i gets taps[i - j]
                for (k, &w) in taps.iter().enumerate() {
                    out[(o * out_len + j + k) * inner + c] += w * v;
                }
            }
        }
    }
    let mut new_shape = shape.to_vec();
    new_shape[axis] = out_len;
    (out, new_shape)
}
