//! Monte Carlo estimates of `L_m(Omega)` norms and the scaling, variation and
//! stability experiments built on them.
//!
//! Paths are processed in fixed blocks of [`BLOCK_PATHS`] indices and collected in
//! index order, so every result is independent of the number of worker threads.

use std::ops::Range;

use rayon::prelude::*;

use crate::drift::DriftField;
use crate::error::{domain, Error, Result};
use crate::noise::{GridSpec, NoiseGenerator, NoiseKind, WindowSampler, BLOCK_PATHS};
use crate::params::{recip, Classification, RegimeParams};
use crate::solver::{cumulative_variation, euler_solve};
use crate::stats::{batched_stderr, ks_critical_value, ks_two_sample, linear_fit, mean, LinearFit};

#[derive(Clone, Debug, PartialEq)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub m: f64,
    pub n_samples: usize,
    pub quantity: String,
}

/// Runs `f(first, count)` over consecutive blocks of path indices in parallel and
/// concatenates the results in index order.
pub fn par_blocks<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, usize) -> Result<Vec<T>> + Sync,
{
    let blocks = n.div_ceil(BLOCK_PATHS);
    let parts: Vec<Result<Vec<T>>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let first = b * BLOCK_PATHS;
            f(first as u64, BLOCK_PATHS.min(n - first))
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// `sampler(i)` for `i in 0..n`, failing on the first non-finite value.
pub fn collect_samples<F>(n: usize, sampler: F) -> Result<Vec<f64>>
where
    F: Fn(u64) -> f64 + Sync,
{
    let xs = par_blocks(n, |first, count| Ok((first..first + count as u64).map(&sampler).collect()))?;
    check_finite(&xs, 0..n as u64)?;
    Ok(xs)
}

fn check_finite(xs: &[f64], seeds: Range<u64>) -> Result<()> {
    match xs.iter().zip(seeds).find(|(v, _)| !v.is_finite()) {
        Some((_, seed)) => Err(Error::NonFinite { seed }),
        None => Ok(()),
    }
}

/// `((1/n) sum |x_i|^m)^{1/m}` with a delta-method standard error.
pub fn lm_norm<F>(sampler: F, m: f64, n: usize) -> Result<MCEstimate>
where
    F: Fn(u64) -> f64 + Sync,
{
    if n < 2 {
        return domain(format!("need at least 2 samples, got {n}"));
    }
    let xs = collect_samples(n, sampler)?;
    lm_norm_of(&xs, m, "sampler")
}

/// [`lm_norm`] of a fixed sample.
pub fn lm_norm_of(samples: &[f64], m: f64, quantity: &str) -> Result<MCEstimate> {
    if !(m >= 1.0 && m.is_finite()) {
        return domain(format!("moment order must be >= 1, got {m}"));
    }
    if samples.len() < 2 {
        return domain(format!("need at least 2 samples, got {}", samples.len()));
    }
    check_finite(samples, 0..samples.len() as u64)?;
    let powered: Vec<f64> = samples.iter().map(|x| x.abs().powf(m)).collect();
    let mom = mean(&powered);
    let est = mom.powf(1.0 / m);
    // d/dM M^{1/m} = M^{1/m - 1} / m
    let stderr = if mom > 0.0 {
        est / (m * mom) * batched_stderr(&powered)
    } else {
        0.0
    };
    if !est.is_finite() {
        return Err(Error::Degenerate(format!("moment of order {m} overflowed")));
    }
    Ok(MCEstimate {
        mean: est,
        stderr,
        m,
        n_samples: samples.len(),
        quantity: quantity.to_string(),
    })
}

/// Noise law and grid shared by the experiments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSetup {
    pub kind: NoiseKind,
    pub grid: GridSpec,
    pub dim: usize,
}

impl NoiseSetup {
    pub fn hurst_like(&self) -> f64 {
        self.kind.scaling_index()
    }

    fn steps_for(&self, len: f64) -> Result<usize> {
        let k = len / self.grid.dt();
        let r = k.round();
        if !(r >= 1.0) || (k - r).abs() > 1e-9 * r {
            return domain(format!(
                "window length {len} is not a positive multiple of the step {}",
                self.grid.dt()
            ));
        }
        Ok(r as usize)
    }
}

/// `1 - 1/q - H d / p + beta H`.
pub fn predicted_additive_exponent(h: f64, d: usize, p: f64, q: f64, beta: f64) -> f64 {
    1.0 - recip(q) - h * d as f64 * recip(p) + beta * h
}

/// `1 - H - H d / p - (1 - H) / q`.
pub fn predicted_variation_exponent(params: &RegimeParams) -> f64 {
    let h = params.scaling_index();
    1.0 - h - h * params.dim as f64 * params.inv_p() - (1.0 - h) * params.inv_q()
}

/// Per-path values of `|int_s^{t_j} f(r, shift + Y_{s,r}) dr|` for nested windows
/// `[s, s + lens[j]]`, with `Y_{s, .}` the part of the noise independent of the past at
/// `s`. The integral is a Riemann sum with time at cell midpoints and space at the
/// right endpoint, so `Y_{s,s} = 0` is never evaluated. `out[j][path]`.
fn window_integrals(
    f: &DriftField,
    setup: &NoiseSetup,
    start: usize,
    lens: &[usize],
    shifts: &[Vec<f64>],
    n_paths: usize,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let d = setup.dim;
    if f.dim() != d {
        return domain(format!("field dimension {} differs from noise dimension {d}", f.dim()));
    }
    let kt = start + lens.iter().copied().max().unwrap_or(0);
    let sampler = WindowSampler::new(setup.kind, setup.grid, d, start, kt)?;
    let gen = sampler.generator();
    let dt = setup.grid.dt();
    let t0 = setup.grid.time(start);
    let mut sorted = lens.to_vec();
    sorted.sort_unstable();
    // per path: [shift][window] values
    let per_path: Vec<Vec<Vec<f64>>> = par_blocks(n_paths, |first, count| {
        let paths = gen.sample_block(first, count);
        let mut out = Vec::with_capacity(count);
        let mut x = vec![0.0; d];
        let mut v = vec![0.0; d];
        for path in &paths {
            let mut res = Vec::with_capacity(shifts.len());
            for shift in shifts {
                let mut acc = vec![0.0; d];
                let mut vals = Vec::with_capacity(lens.len());
                let mut next = 0;
                for k in 0..kt - start {
                    let t = t0 + (k as f64 + 0.5) * dt;
                    for i in 0..d {
                        x[i] = shift[i] + path.values[[k + 1, i]];
                    }
                    f.eval(t, &x, &mut v);
                    for i in 0..d {
                        acc[i] += v[i] * dt;
                    }
                    while next < sorted.len() && sorted[next] == k + 1 {
                        vals.push(acc.clone());
                        next += 1;
                    }
                }
                // reorder to the caller's window order
                let flat: Vec<f64> = lens
                    .iter()
                    .flat_map(|l| vals[sorted.iter().position(|s| s == l).expect("window")].clone())
                    .collect();
                res.push(flat);
            }
            out.push(res);
        }
        Ok(out)
    })?;
    // transpose to [shift][window][path * d + i]
    let mut out = vec![vec![Vec::with_capacity(n_paths * d); lens.len()]; shifts.len()];
    for p in &per_path {
        for (si, flat) in p.iter().enumerate() {
            for (j, chunk) in flat.chunks_exact(d).enumerate() {
                out[si][j].extend_from_slice(chunk);
            }
        }
    }
    Ok(out)
}

fn euclidean_rows(flat: &[f64], d: usize) -> Vec<f64> {
    flat.chunks_exact(d)
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect()
}

/// Estimate of `|| int_s^t f(r, Y_{s,r}) dr ||_{L_m}` for the window `[t_s, t_t]` of
/// grid indices `(s, t)`.
pub fn additive_functional_norm(
    f: &DriftField,
    setup: &NoiseSetup,
    window: (usize, usize),
    m: f64,
    n_paths: usize,
) -> Result<MCEstimate> {
    let (s, t) = window;
    if s >= t {
        return Err(Error::EmptyWindow { start: s, end: t });
    }
    let vals = window_integrals(f, setup, s, &[t - s], &[vec![0.0; setup.dim]], n_paths)?;
    let norms = euclidean_rows(&vals[0][0], setup.dim);
    lm_norm_of(
        &norms,
        m,
        &format!("additive functional of {f} on [{}, {}]", setup.grid.time(s), setup.grid.time(t)),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingReport {
    pub windows: Vec<(f64, f64)>,
    /// Estimates for the primary moment order.
    pub estimates: Vec<MCEstimate>,
    pub fit: LinearFit,
    pub predicted: f64,
    /// `(m, fit, estimates)` for every requested moment order.
    pub per_m: Vec<(f64, LinearFit, Vec<MCEstimate>)>,
}

impl ScalingReport {
    pub fn slope_for(&self, m: f64) -> Option<f64> {
        self.per_m.iter().find(|e| e.0 == m).map(|e| e.1.slope)
    }
}

fn fit_windows(windows: &[(f64, f64)], est: &[MCEstimate]) -> Result<LinearFit> {
    let usable: Vec<(f64, f64)> = windows
        .iter()
        .zip(est)
        .filter(|(_, e)| e.mean > 0.0)
        .map(|(w, e)| ((w.1 - w.0).ln(), e.mean.ln()))
        .collect();
    if usable.len() < 4 {
        return Err(Error::Degenerate(format!(
            "scaling fit needs >= 4 windows with positive estimates, got {}",
            usable.len()
        )));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = usable.into_iter().unzip();
    linear_fit(&x, &y)
}

fn scaling_report(
    windows: Vec<(f64, f64)>,
    samples: &[Vec<f64>],
    m: f64,
    extra_m: &[f64],
    predicted: f64,
    what: &str,
) -> Result<ScalingReport> {
    let mut orders = vec![m];
    for &e in extra_m {
        if !orders.contains(&e) {
            orders.push(e);
        }
    }
    let mut per_m = Vec::with_capacity(orders.len());
    for &mm in &orders {
        let est = samples
            .iter()
            .zip(&windows)
            .map(|(s, w)| lm_norm_of(s, mm, &format!("{what} on [{}, {}]", w.0, w.1)))
            .collect::<Result<Vec<_>>>()?;
        let fit = fit_windows(&windows, &est)?;
        per_m.push((mm, fit, est));
    }
    let (_, fit, estimates) = per_m[0].clone();
    Ok(ScalingReport {
        windows,
        estimates,
        fit,
        predicted,
        per_m,
    })
}

/// Moment orders reported by the scaling experiments besides the primary one.
pub const REPORTED_ORDERS: [f64; 4] = [1.0, 2.0, 4.0, 6.0];

/// Slope of `log || int_s^{s + L} f(r, Y_{s,r}) dr ||_{L_m}` against `log L` over
/// nested windows starting at time `start` with lengths `lens`. The predicted
/// exponent `1 - 1/q - H d / p` uses the field's declared metadata.
pub fn scaling_experiment(
    f: &DriftField,
    setup: &NoiseSetup,
    start: f64,
    lens: &[f64],
    m: f64,
    n_paths: usize,
) -> Result<ScalingReport> {
    if lens.len() < 4 {
        return Err(Error::Degenerate(format!("need >= 4 windows, got {}", lens.len())));
    }
    let s = if start == 0.0 { 0 } else { setup.steps_for(start)? };
    let steps = lens.iter().map(|&l| setup.steps_for(l)).collect::<Result<Vec<_>>>()?;
    let vals = window_integrals(f, setup, s, &steps, &[vec![0.0; setup.dim]], n_paths)?;
    let samples: Vec<Vec<f64>> = vals[0].iter().map(|v| euclidean_rows(v, setup.dim)).collect();
    let t0 = setup.grid.time(s);
    let windows = steps.iter().map(|&k| (t0, t0 + k as f64 * setup.grid.dt())).collect();
    let h = setup.hurst_like();
    let predicted = predicted_additive_exponent(h, setup.dim, f.p(), f.q(), 0.0);
    scaling_report(windows, &samples, m, &REPORTED_ORDERS, predicted, "additive functional")
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShiftReport {
    pub deltas: Vec<f64>,
    pub estimates: Vec<MCEstimate>,
    pub fit: LinearFit,
}

/// `|| int f(r, delta e + Y) dr - int f(r, Y) dr ||_{L_m}` over the window for each
/// shift size `delta` (direction `e = (1, ..., 1) / sqrt(d)`), computed on common
/// noise paths, and the slope of its logarithm against `log delta`.
pub fn shift_experiment(
    f: &DriftField,
    setup: &NoiseSetup,
    window: (usize, usize),
    deltas: &[f64],
    m: f64,
    n_paths: usize,
) -> Result<ShiftReport> {
    let (s, t) = window;
    if s >= t {
        return Err(Error::EmptyWindow { start: s, end: t });
    }
    if deltas.len() < 2 || deltas.iter().any(|&x| !(x > 0.0)) {
        return domain("shift sizes must be positive and at least two");
    }
    let d = setup.dim;
    let dir = 1.0 / (d as f64).sqrt();
    let mut shifts = vec![vec![0.0; d]];
    shifts.extend(deltas.iter().map(|&x| vec![x * dir; d]));
    let vals = window_integrals(f, setup, s, &[t - s], &shifts, n_paths)?;
    let base = &vals[0][0];
    let mut estimates = Vec::with_capacity(deltas.len());
    for (j, &delta) in deltas.iter().enumerate() {
        let diff: Vec<f64> = vals[j + 1][0].iter().zip(base).map(|(a, b)| a - b).collect();
        let norms = euclidean_rows(&diff, d);
        estimates.push(lm_norm_of(&norms, m, &format!("shift difference, delta = {delta}"))?);
    }
    let usable: Vec<(f64, f64)> = deltas
        .iter()
        .zip(&estimates)
        .filter(|(_, e)| e.mean > 0.0)
        .map(|(x, e)| (x.ln(), e.mean.ln()))
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = usable.into_iter().unzip();
    let fit = linear_fit(&x, &y)?;
    Ok(ShiftReport {
        deltas: deltas.to_vec(),
        estimates,
        fit,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariationReport {
    pub epsilons: Vec<f64>,
    /// `|| [psi^eps]_{1-var; [0, T]} ||_{L_m}` per level.
    pub estimates: Vec<MCEstimate>,
    /// `estimates[i + 1] / estimates[i]`.
    pub ratios: Vec<f64>,
    pub classification: Classification,
    pub predicted_exponent: f64,
}

/// 1-variation of the drift component of Euler solutions driven by the same noise
/// paths for each mollified field of `family` (one per entry of `epsilons`).
pub fn variation_bound_experiment(
    family: &[DriftField],
    epsilons: &[f64],
    regime: &RegimeParams,
    setup: &NoiseSetup,
    x0: &[f64],
    m: f64,
    n_paths: usize,
) -> Result<VariationReport> {
    if family.len() != epsilons.len() || family.is_empty() {
        return domain("one mollified field per epsilon is required");
    }
    let verdict = crate::params::check_main_condition(regime)?;
    let gen = NoiseGenerator::new(setup.kind, setup.grid, setup.dim)?;
    let n = setup.grid.steps;
    let rows: Vec<Vec<f64>> = par_blocks(n_paths, |first, count| {
        let paths = gen.sample_block(first, count);
        paths
            .iter()
            .map(|path| {
                family
                    .iter()
                    .map(|f| {
                        let sol = euler_solve(f, path, x0)?;
                        crate::solver::one_variation(sol.psi.view(), 0, n)
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect()
    })?;
    let mut estimates = Vec::with_capacity(family.len());
    for (j, eps) in epsilons.iter().enumerate() {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        estimates.push(lm_norm_of(&col, m, &format!("1-variation of psi, eps = {eps}"))?);
    }
    let ratios = estimates.windows(2).map(|w| w[1].mean / w[0].mean).collect();
    Ok(VariationReport {
        epsilons: epsilons.to_vec(),
        estimates,
        ratios,
        classification: verdict.classification,
        predicted_exponent: predicted_variation_exponent(regime),
    })
}

/// Slope of `log || [psi]_{1-var; [0, L]} ||_{L_m}` against `log L` for windows
/// anchored at 0, from a single Euler solve per path.
pub fn variation_window_scaling(
    field: &DriftField,
    regime: &RegimeParams,
    setup: &NoiseSetup,
    x0: &[f64],
    lens: &[f64],
    m: f64,
    n_paths: usize,
) -> Result<ScalingReport> {
    if lens.len() < 4 {
        return Err(Error::Degenerate(format!("need >= 4 windows, got {}", lens.len())));
    }
    let steps = lens.iter().map(|&l| setup.steps_for(l)).collect::<Result<Vec<_>>>()?;
    let kt = steps.iter().copied().max().expect("windows");
    if kt > setup.grid.steps {
        return domain("window longer than the grid");
    }
    let gen = NoiseGenerator::new(setup.kind, setup.grid, setup.dim)?;
    let rows: Vec<Vec<f64>> = par_blocks(n_paths, |first, count| {
        gen.sample_block(first, count)
            .iter()
            .map(|path| {
                let sol = euler_solve(field, path, x0)?;
                let cum = cumulative_variation(sol.psi.view());
                Ok(steps.iter().map(|&k| cum[k]).collect())
            })
            .collect()
    })?;
    let samples: Vec<Vec<f64>> = (0..steps.len()).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let windows = steps.iter().map(|&k| (0.0, k as f64 * setup.grid.dt())).collect();
    scaling_report(
        windows,
        &samples,
        m,
        &REPORTED_ORDERS,
        predicted_variation_exponent(regime),
        "1-variation of psi",
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub epsilons: Vec<f64>,
    /// KS distance between the first endpoint components per level.
    pub ks: Vec<f64>,
    /// Two-sample KS critical value at the 1% level.
    pub critical: f64,
    pub n_paths: usize,
}

/// Endpoint samples `X_T^{(1)}` (first component) for each field in `family`.
pub fn endpoint_samples(family: &[DriftField], setup: &NoiseSetup, x0: &[f64], n_paths: usize) -> Result<Vec<Vec<f64>>> {
    let gen = NoiseGenerator::new(setup.kind, setup.grid, setup.dim)?;
    let n = setup.grid.steps;
    let rows: Vec<Vec<f64>> = par_blocks(n_paths, |first, count| {
        gen.sample_block(first, count)
            .iter()
            .map(|path| {
                family
                    .iter()
                    .map(|f| {
                        let sol = euler_solve(f, path, x0)?;
                        let v = sol.x[[n, 0]];
                        if v.is_finite() {
                            Ok(v)
                        } else {
                            Err(Error::NonFinite { seed: path.path_index })
                        }
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect()
    })?;
    Ok((0..family.len()).map(|j| rows.iter().map(|r| r[j]).collect()).collect())
}

/// KS distances between endpoint laws of two mollification schedules, the second
/// one driven by noise with seed `seed_b`.
pub fn stability_experiment(
    schedule_a: &[DriftField],
    schedule_b: &[DriftField],
    epsilons: &[f64],
    setup: &NoiseSetup,
    seed_b: u64,
    x0: &[f64],
    n_paths: usize,
) -> Result<StabilityReport> {
    if schedule_a.len() != schedule_b.len() || schedule_a.len() != epsilons.len() {
        return domain("schedules must have one field per epsilon");
    }
    let a = endpoint_samples(schedule_a, setup, x0, n_paths)?;
    let setup_b = NoiseSetup {
        grid: setup.grid.with_seed(seed_b),
        ..*setup
    };
    let b = endpoint_samples(schedule_b, &setup_b, x0, n_paths)?;
    let ks = a
        .iter()
        .zip(&b)
        .map(|(x, y)| ks_two_sample(x, y))
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityReport {
        epsilons: epsilons.to_vec(),
        ks,
        critical: ks_critical_value(0.01, n_paths, n_paths),
        n_paths,
    })
}

/// Empirical `P(X >= r)` for each threshold.
pub fn tail_probabilities(samples: &[f64], thresholds: &[f64]) -> Vec<f64> {
    let n = samples.len() as f64;
    thresholds
        .iter()
        .map(|&r| samples.iter().filter(|&&x| x >= r).count() as f64 / n)
        .collect()
}
