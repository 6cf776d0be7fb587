//! One function pair per command: `resolve` fills every defaulted value so the
//! manifest is complete, `run` computes and writes the CSV tables.

use std::path::Path;

use sdelab::drift::{counterexample_drift, mollify, mollify_with, DriftField, FieldSpec, MollifyMethod};
use sdelab::mc::{
    par_blocks, scaling_experiment, stability_experiment, variation_bound_experiment, variation_window_scaling,
    MCEstimate, NoiseSetup, ScalingReport,
};
use sdelab::noise::{fbm_covariance, GridSpec, NoiseGenerator, NoiseKind};
use sdelab::params::{
    check_main_condition, check_reference_conditions, counterexample_params, Classification, RegimeParams,
};
use sdelab::sewing::{delta, rate_estimate, riemann_sum, Germ, GermContext, RateSlope};
use sdelab::solver::euler_solve;
use sdelab::stats;

use crate::config::*;
use crate::error::{CliError, Result};
use crate::output::{num, Table};

/// Summary lines printed after a run.
pub type Summary = Vec<String>;

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Config(msg.into()))
}

fn need_paths(paths: usize) -> Result<()> {
    if paths < 2 {
        return config_err(format!("paths must be at least 2, got {paths}"));
    }
    Ok(())
}

fn fill_x0(x0: &mut Vec<f64>, dim: usize) -> Result<()> {
    if x0.is_empty() {
        *x0 = vec![0.0; dim];
    }
    if x0.len() != dim {
        return config_err(format!("x0 has {} entries, expected {dim}", x0.len()));
    }
    Ok(())
}

fn need_eps(eps: &[f64]) -> Result<()> {
    if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return config_err("eps must be a nonempty list of positive numbers");
    }
    Ok(())
}

fn regime_for(kind: &NoiseKind, dim: usize, p: Exponent, q: Exponent) -> Result<RegimeParams> {
    Ok(match *kind {
        NoiseKind::Stable { alpha, .. } => RegimeParams::stable(alpha, dim, p.0, q.0)?,
        other => RegimeParams::fbm(other.scaling_index(), dim, p.0, q.0)?,
    })
}

fn build_field(spec: &FieldSpec, dim: usize, p: Option<Exponent>, q: Option<Exponent>) -> Result<DriftField> {
    Ok(spec.build(dim, p.map(|e| e.0), q.map(|e| e.0))?)
}

fn schedule(raw: &DriftField, eps: &[f64], method: MollifyMethod) -> Result<Vec<DriftField>> {
    Ok(eps
        .iter()
        .map(|&e| mollify_with(raw, e, method))
        .collect::<sdelab::Result<Vec<_>>>()?)
}

fn estimate_row(e: &MCEstimate) -> [String; 4] {
    [num(e.m), num(e.mean), num(e.stderr), e.n_samples.to_string()]
}

const SCALING_HEADER: [&str; 10] = [
    "window_s", "window_t", "m", "mean", "stderr", "n", "slope", "intercept", "r2", "predicted",
];

fn write_scaling(out: &Path, name: &str, r: &ScalingReport) -> Result<()> {
    let mut t = Table::create(out, name, &SCALING_HEADER)?;
    for (_, fit, est) in &r.per_m {
        for (w, e) in r.windows.iter().zip(est) {
            let [m, mean, se, n] = estimate_row(e);
            t.row([num(w.0), num(w.1), m, mean, se, n, num(fit.slope), num(fit.intercept), num(fit.r2), num(r.predicted)])?;
        }
    }
    t.finish()?;
    Ok(())
}

fn scaling_summary(label: &str, r: &ScalingReport) -> Summary {
    r.per_m
        .iter()
        .map(|(m, fit, _)| {
            format!(
                "{label}: m = {m}: slope {:.4} (r2 {:.4}), predicted {:.4}",
                fit.slope, fit.r2, r.predicted
            )
        })
        .collect()
}

fn write_variation(out: &Path, name: &str, eps: &[f64], est: &[MCEstimate]) -> Result<()> {
    let mut t = Table::create(out, name, &["eps", "m", "mean", "stderr", "n", "ratio"])?;
    for (j, (e, x)) in eps.iter().zip(est).enumerate() {
        let ratio = if j == 0 { String::new() } else { num(x.mean / est[j - 1].mean) };
        let [m, mean, se, n] = estimate_row(x);
        t.row([num(*e), m, mean, se, n, ratio])?;
    }
    t.finish()?;
    Ok(())
}

fn export_solutions(out: &Path, field: &DriftField, setup: &NoiseSetup, x0: &[f64], count: usize) -> Result<()> {
    if count == 0 {
        return Ok(());
    }
    let gen = NoiseGenerator::new(setup.kind, setup.grid, setup.dim)?;
    let d = setup.dim;
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("x_{i}")));
    header.extend((1..=d).map(|i| format!("psi_{i}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    for i in 0..count {
        let sol = euler_solve(field, &gen.sample(i as u64), x0)?;
        let mut t = Table::create(out, &format!("solution_{i:04}.csv"), &header)?;
        for k in 0..=setup.grid.steps {
            let mut row = vec![num(setup.grid.time(k))];
            row.extend((0..d).map(|c| num(sol.x[[k, c]])));
            row.extend((0..d).map(|c| num(sol.psi[[k, c]])));
            t.row(row)?;
        }
        t.finish()?;
    }
    Ok(())
}

pub trait Experiment: Sized + Clone + Default {
    const COMMAND: Command;
    fn resolve(&mut self, seed: u64) -> Result<()>;
    fn run(&self, seed: u64, out: &Path) -> Result<Summary>;
    fn section(file: &ConfigFile) -> Option<&Self>;
    fn store(self, file: &mut ConfigFile);
}

impl Experiment for RegimesConfig {
    const COMMAND: Command = Command::Regimes;

    fn resolve(&mut self, _seed: u64) -> Result<()> {
        if self.tuples.is_empty() && self.sweep.is_none() {
            return config_err("regimes needs `tuples` or a `sweep` table");
        }
        for t in &self.tuples {
            let d = t[1].0;
            if !(d >= 1.0 && d.fract() == 0.0 && d.is_finite()) {
                return config_err(format!("dimension must be a positive integer, got {d}"));
            }
        }
        Ok(())
    }

    fn run(&self, _seed: u64, out: &Path) -> Result<Summary> {
        let mut rows: Vec<(f64, usize, f64, f64)> =
            self.tuples.iter().map(|t| (t[0].0, t[1].0 as usize, t[2].0, t[3].0)).collect();
        if let Some(s) = &self.sweep {
            for &h in &s.index {
                for &d in &s.dim {
                    for p in &s.p {
                        for q in &s.q {
                            rows.push((h, d, p.0, q.0));
                        }
                    }
                }
            }
        }
        let mut t = Table::create(
            out,
            "regimes.csv",
            &["H_or_alpha", "d", "p", "q", "main_value", "class", "lps", "krylov", "gg23"],
        )?;
        let mut counts = [0usize; 3];
        for (idx, d, p, q) in rows {
            let params = match self.noise {
                RegimeNoise::Fbm => RegimeParams::fbm(idx, d, p, q)?,
                RegimeNoise::Stable => RegimeParams::stable(idx, d, p, q)?,
            };
            let v = check_main_condition(&params)?;
            let r = check_reference_conditions(&params)?;
            counts[v.classification as usize] += 1;
            t.row([
                num(idx),
                d.to_string(),
                num(p),
                num(q),
                num(v.condition_value),
                v.classification.to_string(),
                r.lps.to_string(),
                r.krylov.to_string(),
                r.gg23.to_string(),
            ])?;
        }
        t.finish()?;
        Ok(vec![format!(
            "{} subcritical, {} boundary, {} supercritical",
            counts[0], counts[1], counts[2]
        )])
    }

    fn section(file: &ConfigFile) -> Option<&Self> {
        file.regimes.as_ref()
    }

    fn store(self, file: &mut ConfigFile) {
        file.regimes = Some(self);
    }
}

fn analytic_covariance(kind: &NoiseKind, s: f64, t: f64) -> Result<f64> {
    match *kind {
        NoiseKind::Bm => Ok(s.min(t)),
        NoiseKind::FbmCholesky { hurst } | NoiseKind::FbmVolterra { hurst } => Ok(fbm_covariance(hurst, s, t)),
        NoiseKind::Stable { .. } => config_err("the covariance check needs Gaussian noise"),
    }
}

impl Experiment for NoiseConfig {
    const COMMAND: Command = Command::Noise;

    fn resolve(&mut self, _seed: u64) -> Result<()> {
        self.process.validate()?;
        if let Some(c) = &self.covariance {
            need_paths(c.paths)?;
            if c.stride == 0 || c.stride > self.steps {
                return config_err(format!("covariance stride must lie in 1..={}", self.steps));
            }
            analytic_covariance(&self.process, 1.0, 1.0)?;
        }
        Ok(())
    }

    fn run(&self, seed: u64, out: &Path) -> Result<Summary> {
        let grid = GridSpec::new(self.horizon, self.steps, seed)?;
        let gen = NoiseGenerator::new(self.process, grid, self.dim)?;
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim).map(|i| format!("x_{i}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        for i in 0..self.paths {
            let path = gen.sample(i as u64);
            let mut t = Table::create(out, &format!("path_{i:04}.csv"), &header)?;
            for k in 0..=self.steps {
                let mut row = vec![num(grid.time(k))];
                row.extend(path.values.row(k).iter().map(|&x| num(x)));
                t.row(row)?;
            }
            t.finish()?;
        }
        let mut summary = vec![format!("{} path(s) of {}", self.paths, self.process)];
        if let Some(c) = &self.covariance {
            let idx: Vec<usize> = (1..=self.steps / c.stride).map(|j| j * c.stride).collect();
            let rows: Vec<Vec<f64>> = par_blocks(c.paths, |first, count| {
                Ok(gen
                    .sample_block(first, count)
                    .iter()
                    .map(|p| idx.iter().map(|&k| p.values[[k, 0]]).collect())
                    .collect())
            })?;
            let mut t = Table::create(out, "covariance.csv", &["s", "t", "empirical", "analytic", "stderr", "z"])?;
            let (mut entries, mut beyond) = (0usize, 0usize);
            for a in 0..idx.len() {
                for b in a..idx.len() {
                    let prod: Vec<f64> = rows.iter().map(|r| r[a] * r[b]).collect();
                    let emp = stats::mean(&prod);
                    let se = (stats::variance(&prod) / prod.len() as f64).sqrt();
                    let (s, tt) = (grid.time(idx[a]), grid.time(idx[b]));
                    let want = analytic_covariance(&self.process, s, tt)?;
                    let z = (emp - want) / se;
                    entries += 1;
                    if z.abs() > 3.0 {
                        beyond += 1;
                    }
                    t.row([num(s), num(tt), num(emp), num(want), num(se), num(z)])?;
                }
            }
            t.finish()?;
            summary.push(format!("covariance: {beyond} of {entries} entries beyond 3 standard errors"));
        }
        Ok(summary)
    }

    fn section(file: &ConfigFile) -> Option<&Self> {
        file.noise.as_ref()
    }

    fn store(self, file: &mut ConfigFile) {
        file.noise = Some(self);
    }
}

impl Experiment for ScalingConfig {
    const COMMAND: Command = Command::Scaling;

    fn resolve(&mut self, _seed: u64) -> Result<()> {
        need_paths(self.paths)?;
        if self.windows.len() < 4 {
            return config_err(format!("scaling needs at least 4 windows, got {}", self.windows.len()));
        }
        if let Some(e) = self.mollify {
            need_eps(&[e])?;
        }
        Ok(())
    }

    fn run(&self, seed: u64, out: &Path) -> Result<Summary> {
        let mut f = build_field(&self.field, self.dim, Some(self.p), Some(self.q))?;
        if let Some(e) = self.mollify {
            f = mollify(&f, e)?;
        }
        let setup = NoiseSetup {
            kind: self.process,
            grid: GridSpec::new(self.horizon, self.steps, seed)?,
            dim: self.dim,
        };
        let r = scaling_experiment(&f, &setup, self.start, &self.windows, self.m, self.paths)?;
        write_scaling(out, "scaling.csv", &r)?;
        Ok(scaling_summary("additive functional", &r))
    }

    fn section(file: &ConfigFile) -> Option<&Self> {
        file.scaling.as_ref()
    }

    fn store(self, file: &mut ConfigFile) {
        file.scaling = Some(self);
    }
}

fn write_regime_summary(
    out: &Path,
    name: &str,
    value: f64,
    class: Classification,
    predicted: f64,
    ratios: &[f64],
) -> Result<f64> {
    let max_ratio = ratios.iter().copied().fold(f64::NAN, f64::max);
    let mut t = Table::create(out, name, &["main_value", "class", "predicted_exponent", "max_ratio"])?;
    t.row([num(value), class.to_string(), num(predicted), num(max_ratio)])?;
    t.finish()?;
    Ok(max_ratio)
}

impl Experiment for VariationConfig {
    const COMMAND: Command = Command::Variation;

    fn resolve(&mut self, _seed: u64) -> Result<()> {
        need_paths(self.paths)?;
        need_eps(&self.eps)?;
        fill_x0(&mut self.x0, self.dim)?;
        if let Some(w) = &self.windows {
            need_paths(w.paths)?;
            need_eps(&[w.eps])?;
        }
        regime_for(&self.process, self.dim, self.p, self.q)?;
        Ok(())
    }

    fn run(&self, seed: u64, out: &Path) -> Result<Summary> {
        let regime = regime_for(&self.process, self.dim, self.p, self.q)?;
        let verdict = check_main_condition(&regime)?;
        let raw = build_field(&self.field, self.dim, Some(self.p), Some(self.q))?;
        let family = schedule(&raw, &self.eps, self.method)?;
        let setup = NoiseSetup {
            kind: self.process,
            grid: GridSpec::new(self.horizon, self.steps, seed)?,
            dim: self.dim,
        };
        let r = variation_bound_experiment(&family, &self.eps, &regime, &setup, &self.x0, self.m, self.paths)?;
        write_variation(out, "variation.csv", &self.eps, &r.estimates)?;
        let max_ratio = write_regime_summary(
            out,
            "variation_summary.csv",
            verdict.condition_value,
            r.classification,
            r.predicted_exponent,
            &r.ratios,
        )?;
        let mut summary = vec![format!(
            "{} regime; largest successive ratio {max_ratio:.4}",
            r.classification
        )];
        if let Some(w) = &self.windows {
            let field = mollify_with(&raw, w.eps, self.method)?;
            let wsetup = NoiseSetup {
                grid: GridSpec::new(w.horizon, w.steps, seed)?,
                ..setup
            };
            let s = variation_window_scaling(&field, &regime, &wsetup, &self.x0, &w.windows, self.m, w.paths)?;
            write_scaling(out, "variation_windows.csv", &s)?;
            summary.extend(scaling_summary("1-variation", &s));
        }
        export_solutions(out, family.last().expect("nonempty"), &setup, &self.x0, self.export)?;
        Ok(summary)
    }

    fn section(file: &ConfigFile) -> Option<&Self> {
        file.variation.as_ref()
    }

    fn store(self, file: &mut ConfigFile) {
        file.variation = Some(self);
    }
}

impl CounterexampleConfig {
    fn regime(&self) -> Result<RegimeParams> {
        Ok(RegimeParams::fbm(self.hurst, self.dim, self.p.0, self.q.0)?)
    }
}

impl Experiment for CounterexampleConfig {
    const COMMAND: Command = Command::Counterexample;

    fn resolve(&mut self, _seed: u64) -> Result<()> {
        need_paths(self.paths)?;
        need_eps(&self.eps)?;
        fill_x0(&mut self.x0, self.dim)?;
        self.regime()?;
        Ok(())
    }

    fn run(&self, seed: u64, out: &Path) -> Result<Summary> {
        let regime = self.regime()?;
        let ce = counterexample_params(&regime).map_err(|e| match e {
            sdelab::Error::InfeasibleRegime(msg) => CliError::Infeasible(format!(
                "no counterexample for H = {}, d = {}, p = {}, q = {}: {msg}",
                self.hurst, self.dim, self.p.0, self.q.0
            )),
            other => other.into(),
        })?;
        let raw = counterexample_drift(&ce, self.dim);
        let family = self
            .eps
            .iter()
            .map(|&e| mollify(&raw, e))
            .collect::<sdelab::Result<Vec<_>>>()?;
        let kind = match self.sampler {
            FbmSampler::Cholesky => NoiseKind::FbmCholesky { hurst: self.hurst },
            FbmSampler::Volterra => NoiseKind::FbmVolterra { hurst: self.hurst },
        };
        let setup = NoiseSetup {
            kind,
            grid: GridSpec::new(self.horizon, self.steps, seed)?,
            dim: self.dim,
        };
        let r = variation_bound_experiment(&family, &self.eps, &regime, &setup, &self.x0, self.m, self.paths)?;
        write_variation(out, "counterexample.csv", &self.eps, &r.estimates)?;
        let growth = r.estimates.last().expect("nonempty").mean / r.estimates[0].mean;
        let verdict = check_main_condition(&regime)?;
        let mut t = Table::create(
            out,
            "counterexample_params.csv",
            &["alpha_ce", "beta_ce", "gamma_ce", "margin", "main_value", "growth"],
        )?;
        t.row([
            num(ce.alpha_ce),
            num(ce.beta_ce),
            num(ce.gamma_ce),
            num(ce.margin()),
            num(verdict.condition_value),
            num(growth),
        ])?;
        t.finish()?;
        export_solutions(out, family.last().expect("nonempty"), &setup, &self.x0, self.export)?;
        Ok(vec![
            format!(
                "drift exponents alpha = {:.6}, beta = {:.6} (gamma = {:.6})",
                ce.alpha_ce, ce.beta_ce, ce.gamma_ce
            ),
            format!("1-variation grows by {growth:.3} across the eps schedule"),
        ])
    }

    fn section(file: &ConfigFile) -> Option<&Self> {
        file.counterexample.as_ref()
    }

    fn store(self, file: &mut ConfigFile) {
        file.counterexample = Some(self);
    }
}

impl Experiment for StabilityConfig {
    const COMMAND: Command = Command::Stability;

    fn resolve(&mut self, seed: u64) -> Result<()> {
        need_paths(self.paths)?;
        need_eps(&self.eps)?;
        fill_x0(&mut self.x0, self.dim)?;
        self.seed_b.get_or_insert(seed.wrapping_add(1));
        let regime = regime_for(&self.process, self.dim, self.p, self.q)?;
        let v = check_main_condition(&regime)?;
        if v.classification != Classification::Subcritical {
            return Err(CliError::Infeasible(format!(
                "stability is only meaningful for subcritical drifts; the main condition evaluates to {:.6} ({})",
                v.condition_value, v.classification
            )));
        }
        Ok(())
    }

    fn run(&self, seed: u64, out: &Path) -> Result<Summary> {
        let raw = build_field(&self.field, self.dim, Some(self.p), Some(self.q))?;
        let a = schedule(&raw, &self.eps, self.schedule_a)?;
        let b = schedule(&raw, &self.eps, self.schedule_b)?;
        let setup = NoiseSetup {
            kind: self.process,
            grid: GridSpec::new(self.horizon, self.steps, seed)?,
            dim: self.dim,
        };
        let seed_b = self.seed_b.expect("resolved");
        let r = stability_experiment(&a, &b, &self.eps, &setup, seed_b, &self.x0, self.paths)?;
        let mut t = Table::create(out, "stability.csv", &["eps", "ks", "critical", "ratio", "n"])?;
        for (e, ks) in r.epsilons.iter().zip(&r.ks) {
            t.row([num(*e), num(*ks), num(r.critical), num(ks / r.critical), r.n_paths.to_string()])?;
        }
        t.finish()?;
        let last = *r.ks.last().expect("nonempty");
        Ok(vec![format!(
            "finest eps: KS {last:.5}, {:.3} x the 1% critical value {:.5}",
            last / r.critical,
            r.critical
        )])
    }

    fn section(file: &ConfigFile) -> Option<&Self> {
        file.stability.as_ref()
    }

    fn store(self, file: &mut ConfigFile) {
        file.stability = Some(self);
    }
}

fn build_germ(spec: &GermSpec, dim: usize) -> Result<Germ> {
    let field = |f: &FieldSpec, eps: Option<f64>| -> Result<DriftField> {
        let raw = build_field(f, dim, None, None)?;
        match eps {
            Some(e) => Ok(mollify(&raw, e)?),
            None => Ok(raw),
        }
    };
    Ok(match spec {
        GermSpec::Zero => Germ::Zero,
        GermSpec::Increment => Germ::Increment,
        GermSpec::Frozen { mollify, field: f } => Germ::Frozen(field(f, *mollify)?),
        GermSpec::Conditional { inner, mollify, field: f } => Germ::Conditional {
            field: field(f, *mollify)?,
            inner: *inner,
        },
    })
}

impl Experiment for SewingConfig {
    const COMMAND: Command = Command::Sewing;

    fn resolve(&mut self, _seed: u64) -> Result<()> {
        need_paths(self.paths)?;
        if self.max_level < self.min_level + 3 {
            return config_err(format!(
                "the rate fit needs at least 4 levels, got {}..={}",
                self.min_level, self.max_level
            ));
        }
        let [s, t] = *self.window.get_or_insert([0, self.steps]);
        if !(s < t && t <= self.steps) {
            return config_err(format!("window [{s}, {t}] must satisfy s < t <= steps = {}", self.steps));
        }
        let [a, u, b] = *self.delta.get_or_insert([s + (t - s) / 4, s + (t - s) / 2, t]);
        if !(a <= u && u <= b && b <= self.steps) {
            return config_err(format!("delta points [{a}, {u}, {b}] must be ordered within the grid"));
        }
        if let GermSpec::Frozen { mollify: Some(e), .. } | GermSpec::Conditional { mollify: Some(e), .. } = self.germ {
            need_eps(&[e])?;
        }
        Ok(())
    }

    fn run(&self, seed: u64, out: &Path) -> Result<Summary> {
        let grid = GridSpec::new(self.horizon, self.steps, seed)?;
        let gen = NoiseGenerator::new(self.process, grid, self.dim)?;
        let germ = build_germ(&self.germ, self.dim)?;
        let [s, t] = self.window.expect("resolved");
        let [a, u, b] = self.delta.expect("resolved");
        let levels: Vec<u32> = (self.min_level..=self.max_level).collect();
        let rows: Vec<(Vec<Vec<f64>>, Vec<f64>)> = par_blocks(self.paths, |first, count| {
            gen.sample_block(first, count)
                .iter()
                .map(|path| {
                    let ctx = GermContext::new(path);
                    let sums = levels
                        .iter()
                        .map(|&l| riemann_sum(&germ, s, t, l, &ctx))
                        .collect::<sdelab::Result<Vec<_>>>()?;
                    Ok((sums, delta(&germ, a, u, b, &ctx)?))
                })
                .collect()
        })?;
        let sums: Vec<Vec<Vec<f64>>> = (0..levels.len())
            .map(|l| rows.iter().map(|r| r.0[l].clone()).collect())
            .collect();
        let rate = rate_estimate(&levels, &sums)?;
        let mut tab = Table::create(out, "sewing_rate.csv", &["level", "norm_diff", "slope_running"])?;
        for (i, (lvl, d)) in rate.levels.iter().zip(&rate.norm_diff).enumerate() {
            let slope = match rate.slope {
                RateSlope::Exact => "exact".to_string(),
                RateSlope::Fitted(_) => num(rate.running_slope[i]),
            };
            tab.row([lvl.to_string(), num(*d), slope])?;
        }
        tab.finish()?;

        let mut tab = Table::create(out, "sewing_delta.csv", &["s", "u", "t", "component", "mean", "stderr", "n"])?;
        let mut summary = vec![match rate.slope {
            RateSlope::Exact => "Riemann sums: exact at every level".to_string(),
            RateSlope::Fitted(f) => format!("Riemann sums: log2 difference slope {:.4} (r2 {:.4})", f.slope, f.r2),
        }];
        for c in 0..self.dim {
            let ds: Vec<f64> = rows.iter().map(|r| r.1[c]).collect();
            let mean = stats::mean(&ds);
            let se = (stats::variance(&ds) / ds.len() as f64).sqrt();
            tab.row([
                a.to_string(),
                u.to_string(),
                b.to_string(),
                (c + 1).to_string(),
                num(mean),
                num(se),
                ds.len().to_string(),
            ])?;
            summary.push(format!("delta A component {}: mean {mean:.3e} +- {se:.3e}", c + 1));
        }
        tab.finish()?;
        Ok(summary)
    }

    fn section(file: &ConfigFile) -> Option<&Self> {
        file.sewing.as_ref()
    }

    fn store(self, file: &mut ConfigFile) {
        file.sewing = Some(self);
    }
}
