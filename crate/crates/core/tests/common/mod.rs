#![allow(dead_code)]

use statrs::function::beta::beta;

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Normalization of the Volterra kernel in closed form.
pub fn c_h(h: f64) -> f64 {
    if h > 0.5 {
        (h * (2.0 * h - 1.0) / beta(2.0 - 2.0 * h, h - 0.5)).sqrt()
    } else if h < 0.5 {
        (2.0 * h / ((1.0 - 2.0 * h) * beta(1.0 - 2.0 * h, h + 0.5))).sqrt()
    } else {
        1.0
    }
}

/// `K_H(t, s)` with the singular inner integral straightened by a power
/// substitution and integrated by Simpson.
pub fn kernel_oracle(h: f64, t: f64, s: f64) -> f64 {
    let n = 200_000;
    if h > 0.5 {
        let e = h - 0.5;
        let top = (t - s).powf(e);
        let j = simpson(|v| (s + v.powf(1.0 / e)).powf(h - 0.5), 0.0, top, n) / e;
        c_h(h) * s.powf(0.5 - h) * j
    } else {
        let e = h + 0.5;
        let top = (t - s).powf(e);
        let j = simpson(|v| (s + v.powf(1.0 / e)).powf(h - 1.5), 0.0, top, n) / e;
        c_h(h) * ((t / s).powf(h - 0.5) * (t - s).powf(h - 0.5) + (0.5 - h) * s.powf(0.5 - h) * j)
    }
}

pub fn fbm_cov(h: f64, s: f64, t: f64) -> f64 {
    0.5 * (s.powf(2.0 * h) + t.powf(2.0 * h) - (t - s).abs().powf(2.0 * h))
}

pub fn sample_mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_var(xs: &[f64]) -> f64 {
    let m = sample_mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the sample mean.
pub fn mean_se(xs: &[f64]) -> f64 {
    (sample_var(xs) / xs.len() as f64).sqrt()
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let mx = sample_mean(x);
    let my = sample_mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
