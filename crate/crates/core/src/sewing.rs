//! Germs `A_{s,t}`, their dyadic Riemann sums and convergence diagnostics, and
//! checks of the control property `w(s, u) + w(u, t) <= w(s, t)`.
//!
//! Times are grid indices of the path the germ is evaluated on.

use std::cell::OnceCell;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::drift::DriftField;
use crate::error::{domain, Error, Result};
use crate::noise::{stable, NoiseKind, NoisePath};
use crate::quad::{adaptive, Tolerance};
use crate::stats::{linear_fit, pairwise_sum, LinearFit};

/// Default inner sample size for conditional expectations without a closed form.
pub const DEFAULT_INNER_SAMPLES: usize = 64;

type GermFn = dyn Fn(usize, usize, &GermContext<'_>) -> Vec<f64> + Send + Sync;

#[derive(Clone)]
pub enum Germ {
    Zero,
    /// `W_t - W_s`.
    Increment,
    /// `b(t_s, W_s) (t - s)`.
    Frozen(DriftField),
    /// `E^s sum_{k = s}^{t-1} b(t_k, W_{t_k}) dt`: Gaussian closed form where the
    /// field allows it, otherwise `inner` samples of the conditional law.
    Conditional { field: DriftField, inner: usize },
    Custom {
        dim: usize,
        desc: String,
        f: Arc<GermFn>,
    },
}

impl std::fmt::Debug for Germ {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.description())
    }
}

impl Germ {
    pub fn custom<F>(dim: usize, desc: impl Into<String>, f: F) -> Self
    where
        F: Fn(usize, usize, &GermContext<'_>) -> Vec<f64> + Send + Sync + 'static,
    {
        Germ::Custom {
            dim,
            desc: desc.into(),
            f: Arc::new(f),
        }
    }

    pub fn description(&self) -> String {
        match self {
            Germ::Zero => "zero".into(),
            Germ::Increment => "increment".into(),
            Germ::Frozen(b) => format!("frozen[{b}]"),
            Germ::Conditional { field, inner } => format!("conditional[{field}; inner = {inner}]"),
            Germ::Custom { desc, .. } => desc.clone(),
        }
    }

    /// `A_{s,t}`; exactly zero when `s = t`.
    pub fn eval(&self, s: usize, t: usize, ctx: &GermContext<'_>) -> Result<Vec<f64>> {
        let path = ctx.path;
        let d = path.dim;
        if s > t || t > path.grid.steps {
            return domain(format!("germ needs s <= t <= n, got s = {s}, t = {t}"));
        }
        if s == t {
            return Ok(vec![0.0; d]);
        }
        let dt = path.grid.dt();
        match self {
            Germ::Zero => Ok(vec![0.0; d]),
            Germ::Increment => Ok((0..d).map(|i| path.values[[t, i]] - path.values[[s, i]]).collect()),
            Germ::Frozen(b) => {
                let x = path.values.row(s).to_vec();
                let mut out = b.value(path.grid.time(s), &x);
                let len = (t - s) as f64 * dt;
                for o in &mut out {
                    *o *= len;
                }
                Ok(out)
            }
            Germ::Conditional { field, inner } => conditional_integral(field, *inner, s, t, ctx),
            Germ::Custom { f, .. } => Ok(f(s, t, ctx)),
        }
    }
}

/// A path plus lazily built predictor tables shared by all germ evaluations on it.
pub struct GermContext<'a> {
    pub path: &'a NoisePath,
    prefix: OnceCell<Result<Prefix>>,
}

/// `means[k][s * d + i] = E^{t_s} W^i_{t_k}` and `vars[k][s] = Var(W^i_{t_k} | F_{t_s})`.
struct Prefix {
    means: Vec<Vec<f64>>,
    vars: Vec<Vec<f64>>,
}

impl<'a> GermContext<'a> {
    pub fn new(path: &'a NoisePath) -> Self {
        Self {
            path,
            prefix: OnceCell::new(),
        }
    }

    fn prefix(&self) -> Result<&Prefix> {
        self.prefix
            .get_or_init(|| build_prefix(self.path))
            .as_ref()
            .map_err(|e| e.clone())
    }

    /// Conditional mean and per-component variance of `W_{t_k}` given `F_{t_s}`.
    fn conditional_law(&self, s: usize, k: usize, mean: &mut [f64]) -> Result<f64> {
        let path = self.path;
        let d = path.dim;
        let dt = path.grid.dt();
        match path.kind {
            NoiseKind::Bm => {
                for i in 0..d {
                    mean[i] = path.values[[s, i]];
                }
                Ok((k - s) as f64 * dt)
            }
            NoiseKind::FbmVolterra { .. } => {
                let p = self.prefix()?;
                mean.copy_from_slice(&p.means[k][s * d..(s + 1) * d]);
                Ok(p.vars[k][s])
            }
            _ => Err(Error::MissingIncrements(path.kind.to_string())),
        }
    }
}

fn build_prefix(path: &NoisePath) -> Result<Prefix> {
    let (incr, table) = match (&path.bm_increments, path.kernel_table()) {
        (Some(i), Some(t)) => (i, t),
        _ => return Err(Error::MissingIncrements(path.kind.to_string())),
    };
    let n = path.grid.steps;
    let d = path.dim;
    let dt = path.grid.dt();
    let mut means = Vec::with_capacity(n + 1);
    let mut vars = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let row: &[f64] = if k == 0 { &[] } else { table.row(k) };
        let mut m = vec![0.0; (k + 1) * d];
        for s in 0..k {
            for i in 0..d {
                m[(s + 1) * d + i] = m[s * d + i] + row[s] * incr[[s, i]];
            }
        }
        // remaining variance sum_{j >= s} K(t_k, u_j)^2 dt, accumulated from the top
        let mut v = vec![0.0; k + 1];
        for s in (0..k).rev() {
            v[s] = v[s + 1] + row[s] * row[s] * dt;
        }
        means.push(m);
        vars.push(v);
    }
    Ok(Prefix { means, vars })
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for the inner sample of interval `[s, t]` of a given path.
fn interval_rng(path: &NoisePath, s: usize, t: usize) -> ChaCha8Rng {
    let key = splitmix(splitmix(splitmix(path.grid.seed) ^ path.path_index) ^ ((s as u64) << 32 | t as u64));
    ChaCha8Rng::seed_from_u64(key)
}

fn conditional_integral(field: &DriftField, inner: usize, s: usize, t: usize, ctx: &GermContext<'_>) -> Result<Vec<f64>> {
    let path = ctx.path;
    let d = path.dim;
    let dt = path.grid.dt();
    let mut acc = vec![0.0; d];
    let mut val = vec![0.0; d];
    let w_s = path.values.row(s).to_vec();
    field.eval(path.grid.time(s), &w_s, &mut val);
    for i in 0..d {
        acc[i] += val[i];
    }
    if let NoiseKind::Stable { alpha, c_alpha } = path.kind {
        // E^s f(L_k) = E f(L_s + increment over (k - s) dt)
        let mut rng = interval_rng(path, s, t);
        let mut x = vec![0.0; d];
        let mut step = vec![0.0; d];
        for k in s + 1..t {
            let mut mean = vec![0.0; d];
            for _ in 0..inner.max(1) {
                stable::increment(&mut rng, alpha, c_alpha, (k - s) as f64 * dt, &mut step);
                for i in 0..d {
                    x[i] = w_s[i] + step[i];
                }
                field.eval(path.grid.time(k), &x, &mut val);
                for i in 0..d {
                    mean[i] += val[i];
                }
            }
            for i in 0..d {
                acc[i] += mean[i] / inner.max(1) as f64;
            }
        }
    } else {
        let mut m = vec![0.0; d];
        let mut z: Option<Vec<f64>> = None;
        for k in s + 1..t {
            let var = ctx.conditional_law(s, k, &mut m)?;
            let tk = path.grid.time(k);
            if !field.gaussian_expectation(tk, &m, var, &mut val) {
                let z = z.get_or_insert_with(|| {
                    let mut rng = interval_rng(path, s, t);
                    (0..inner.max(1) * d).map(|_| StandardNormal.sample(&mut rng)).collect()
                });
                let sd = var.sqrt();
                let mut x = vec![0.0; d];
                let mut mean = vec![0.0; d];
                for zj in z.chunks_exact(d) {
                    for i in 0..d {
                        x[i] = m[i] + sd * zj[i];
                    }
                    field.eval(tk, &x, &mut val);
                    for i in 0..d {
                        mean[i] += val[i];
                    }
                }
                for (v, mn) in val.iter_mut().zip(&mean) {
                    *v = mn / (z.len() / d) as f64;
                }
            }
            for i in 0..d {
                acc[i] += val[i];
            }
        }
    }
    for a in &mut acc {
        *a *= dt;
    }
    Ok(acc)
}

/// `sum_i A_{t_i, t_{i+1}}` over the dyadic partition of `[s, t]` into `2^level` pieces.
pub fn riemann_sum(germ: &Germ, s: usize, t: usize, level: u32, ctx: &GermContext<'_>) -> Result<Vec<f64>> {
    if s > t {
        return domain(format!("Riemann sum needs s <= t, got s = {s}, t = {t}"));
    }
    let pieces = 1usize.checked_shl(level).unwrap_or(0);
    let len = t - s;
    if pieces == 0 || len < pieces || len % pieces != 0 {
        return Err(Error::LevelTooFine {
            level,
            needed: pieces,
            available: len,
        });
    }
    let step = len / pieces;
    let mut acc = vec![0.0; ctx.path.dim];
    for p in 0..pieces {
        let a = germ.eval(s + p * step, s + (p + 1) * step, ctx)?;
        for (x, v) in acc.iter_mut().zip(&a) {
            *x += v;
        }
    }
    Ok(acc)
}

/// `delta A_{s,u,t} = A_{s,t} - A_{s,u} - A_{u,t}`.
pub fn delta(germ: &Germ, s: usize, u: usize, t: usize, ctx: &GermContext<'_>) -> Result<Vec<f64>> {
    if !(s <= u && u <= t) {
        return domain(format!("delta needs s <= u <= t, got ({s}, {u}, {t})"));
    }
    let ast = germ.eval(s, t, ctx)?;
    let asu = germ.eval(s, u, ctx)?;
    let aut = germ.eval(u, t, ctx)?;
    Ok((0..ast.len()).map(|i| ast[i] - asu[i] - aut[i]).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateSlope {
    /// Every level difference vanishes to rounding.
    Exact,
    Fitted(LinearFit),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    /// Level `k` of each difference `S_{k+1} - S_k`.
    pub levels: Vec<u32>,
    /// Root mean square of `|S_{k+1} - S_k|` over paths.
    pub norm_diff: Vec<f64>,
    /// Slope of the fit through the first `i + 1` differences (NaN for `i = 0`).
    pub running_slope: Vec<f64>,
    pub slope: RateSlope,
}

/// Convergence rate of Riemann sums: `sums[l][p]` is the level-`levels[l]` sum on
/// path `p`. Fits `log2 ||S_{k+1} - S_k||_{L_2}` against `k`.
pub fn rate_estimate(levels: &[u32], sums: &[Vec<Vec<f64>>]) -> Result<RateReport> {
    if levels.len() < 4 || sums.len() != levels.len() {
        return Err(Error::Degenerate(format!(
            "rate estimate needs >= 4 levels, got {}",
            levels.len()
        )));
    }
    let paths = sums[0].len();
    if paths == 0 || sums.iter().any(|s| s.len() != paths) {
        return Err(Error::Degenerate("levels carry different path counts".into()));
    }
    let mut scale2 = Vec::new();
    for s in sums {
        for v in s {
            scale2.push(v.iter().map(|x| x * x).sum::<f64>());
        }
    }
    let scale = (pairwise_sum(&scale2) / scale2.len() as f64).sqrt();
    let mut diffs = Vec::with_capacity(levels.len() - 1);
    for l in 0..levels.len() - 1 {
        let sq: Vec<f64> = (0..paths)
            .map(|p| {
                sums[l + 1][p]
                    .iter()
                    .zip(&sums[l][p])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .collect();
        diffs.push((pairwise_sum(&sq) / paths as f64).sqrt());
    }
    let exact_tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    if diffs.iter().all(|&d| d <= exact_tol) {
        return Ok(RateReport {
            levels: levels[..levels.len() - 1].to_vec(),
            running_slope: vec![f64::NAN; diffs.len()],
            norm_diff: diffs,
            slope: RateSlope::Exact,
        });
    }
    rate_from_diffs(&levels[..levels.len() - 1], &diffs)
}

/// Fit of `log2 diffs` against `levels` (at least 3 points, zeros skipped).
pub fn rate_from_diffs(levels: &[u32], diffs: &[f64]) -> Result<RateReport> {
    if levels.len() != diffs.len() || levels.len() < 3 {
        return Err(Error::Degenerate("rate fit needs >= 3 level differences".into()));
    }
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .zip(diffs)
        .filter(|(_, &d)| d > 0.0)
        .map(|(&l, &d)| (l as f64, d.log2()))
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().cloned().unzip();
    let fit = linear_fit(&x, &y)?;
    let running_slope = (0..diffs.len())
        .map(|i| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().filter(|p| p.0 <= levels[i] as f64).cloned().unzip();
            linear_fit(&xs, &ys).map(|f| f.slope).unwrap_or(f64::NAN)
        })
        .collect();
    Ok(RateReport {
        levels: levels.to_vec(),
        norm_diff: diffs.to_vec(),
        running_slope,
        slope: RateSlope::Fitted(fit),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlReport {
    /// `max (w(s,u) + w(u,t) - w(s,t))^+` over ordered triples.
    pub max_violation: f64,
    pub worst: Option<(f64, f64, f64)>,
    pub min_value: f64,
    pub max_diagonal: f64,
}

impl ControlReport {
    pub fn is_control(&self, tol: f64) -> bool {
        self.max_violation <= tol && self.min_value >= 0.0 && self.max_diagonal == 0.0
    }
}

/// Checks nonnegativity, `w(s, s) = 0` and `w(s,u) + w(u,t) <= w(s,t)` on all
/// ordered triples of `points`.
pub fn check_control<W: Fn(f64, f64) -> f64>(w: W, points: &[f64]) -> ControlReport {
    let mut pts = points.to_vec();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let n = pts.len();
    let mut table = vec![0.0; n * n];
    let mut min_value = f64::INFINITY;
    let mut max_diagonal: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            let v = w(pts[i], pts[j]);
            table[i * n + j] = v;
            min_value = min_value.min(v);
            if i == j {
                max_diagonal = max_diagonal.max(v.abs());
            }
        }
    }
    let mut max_violation = 0.0;
    let mut worst = None;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let v = table[i * n + j] + table[j * n + k] - table[i * n + k];
                if v > max_violation {
                    max_violation = v;
                    worst = Some((pts[i], pts[j], pts[k]));
                }
            }
        }
    }
    ControlReport {
        max_violation,
        worst,
        min_value,
        max_diagonal,
    }
}

/// `w(s, t) = (int_s^t g(r)^q dr)^{1/(q(1 + beta H))} (t - s)^{(1 - 1/q + beta H)/(1 + beta H)}`
/// with `g(r)` the spatial norm of `f_r`; a product of controls whose powers sum to one.
pub fn composed_control<G>(g: G, q: f64, beta: f64, hurst: f64) -> Result<impl Fn(f64, f64) -> f64>
where
    G: Fn(f64) -> f64,
{
    let scale = 1.0 + beta * hurst;
    if !(q >= 1.0 && scale > 0.0 && 1.0 - 1.0 / q + beta * hurst >= 0.0) {
        return domain(format!(
            "composition needs q >= 1 and 1 - 1/q + beta H >= 0, got q = {q}, beta H = {}",
            beta * hurst
        ));
    }
    let a = 1.0 / (q * scale);
    let b = (1.0 - 1.0 / q + beta * hurst) / scale;
    Ok(move |s: f64, t: f64| {
        if t <= s {
            return 0.0;
        }
        let mass = adaptive(|r| g(r).powf(q), s, t, Tolerance::rel(1e-13)).unwrap_or(f64::NAN);
        mass.powf(a) * (t - s).powf(b)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{GridSpec, NoiseGenerator};

    #[test]
    fn control_examples() {
        let pts: Vec<f64> = (0..=16).map(|k| k as f64 / 16.0).collect();
        assert!(check_control(|s, t| t - s, &pts).is_control(1e-15));
        assert!(check_control(|s, t| (t - s).powi(2), &pts).is_control(0.0));
        let r = check_control(|s, t| (t - s).sqrt(), &[0.0, 0.5, 1.0]);
        assert!((r.max_violation - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert_eq!(r.worst, Some((0.0, 0.5, 1.0)));
    }

    #[test]
    fn composed_control_is_control() {
        let pts: Vec<f64> = (0..=12).map(|k| (k as f64 / 12.0).powi(2)).collect();
        let w = composed_control(|r| 1.0 + r.powf(-0.3), 2.0, -0.2, 0.7).unwrap();
        let rep = check_control(w, &pts);
        assert!(rep.is_control(1e-12), "{rep:?}");
    }

    #[test]
    fn telescoping_and_levels() {
        let grid = GridSpec::new(1.0, 64, 3).unwrap();
        let path = NoiseGenerator::new(NoiseKind::Bm, grid, 2).unwrap().sample(0);
        let ctx = GermContext::new(&path);
        for level in 0..=6 {
            let s = riemann_sum(&Germ::Increment, 0, 64, level, &ctx).unwrap();
            for i in 0..2 {
                assert!((s[i] - path.values[[64, i]]).abs() < 1e-14);
            }
            assert_eq!(riemann_sum(&Germ::Zero, 0, 64, level, &ctx).unwrap(), vec![0.0, 0.0]);
        }
        assert!(matches!(
            riemann_sum(&Germ::Increment, 0, 64, 7, &ctx),
            Err(Error::LevelTooFine { .. })
        ));
        assert!(matches!(
            riemann_sum(&Germ::Increment, 0, 48, 5, &ctx),
            Err(Error::LevelTooFine { .. })
        ));
        assert!(delta(&Germ::Increment, 3, 2, 5, &ctx).is_err());
    }

    #[test]
    fn synthetic_rate() {
        let levels: Vec<u32> = (4..10).collect();
        let diffs: Vec<f64> = levels.iter().map(|&k| 3.0 * 2f64.powf(-0.5 * k as f64)).collect();
        let r = rate_from_diffs(&levels, &diffs).unwrap();
        match r.slope {
            RateSlope::Fitted(f) => assert!((f.slope + 0.5).abs() < 1e-12),
            RateSlope::Exact => panic!("not exact"),
        }
        assert!(rate_estimate(&[1, 2, 3], &[vec![], vec![], vec![]]).is_err());
    }
}
