//! Symmetric alpha-stable variates.
//!
//! One-dimensional draws use the Chambers–Mallows–Stuck transform. In `d >= 2` the
//! isotropic law with characteristic function `exp(-c |lambda|^alpha)` is built as
//! `sqrt(A) G` with `G` standard Gaussian and `A` a positive `(alpha/2)`-stable
//! variable drawn by Kanter's representation.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

/// Standard symmetric stable variate with characteristic function `exp(-|lambda|^alpha)`.
pub fn standard_symmetric<R: Rng + ?Sized>(rng: &mut R, alpha: f64) -> f64 {
    let v = (rng.random::<f64>() - 0.5) * PI;
    if v <= -FRAC_PI_2 {
        return 0.0;
    }
    let w: f64 = rng.sample(Exp1);
    let num = (alpha * v).sin();
    let den = v.cos().powf(1.0 / alpha);
    let tail = ((v - alpha * v).cos() / w).powf((1.0 - alpha) / alpha);
    num / den * tail
}

/// Positive stable variate with Laplace transform `exp(-u^a)`, `0 < a < 1`.
pub fn positive_stable<R: Rng + ?Sized>(rng: &mut R, a: f64) -> f64 {
    let mut u = rng.random::<f64>() * PI;
    if u <= 0.0 {
        u = f64::MIN_POSITIVE;
    }
    let w: f64 = rng.sample(Exp1);
    let lead = (a * u).sin() / u.sin().powf(1.0 / a);
    lead * ((1.0 - a) * u).sin().powf((1.0 - a) / a) * w.powf(-(1.0 - a) / a)
}

/// Increment of the `d`-dimensional stable process over a step of length `dt`,
/// written into `out`.
pub fn increment<R: Rng + ?Sized>(rng: &mut R, alpha: f64, c_alpha: f64, dt: f64, out: &mut [f64]) {
    if out.len() == 1 {
        out[0] = (c_alpha * dt).powf(1.0 / alpha) * standard_symmetric(rng, alpha);
        return;
    }
    let a = 0.5 * alpha;
    // E exp(-s A |l|^2 / 2) = exp(-(s/2)^a |l|^alpha) = exp(-c dt |l|^alpha)
    let scale = 2.0 * (c_alpha * dt).powf(1.0 / a);
    let radius = (scale * positive_stable(rng, a)).sqrt();
    for x in out.iter_mut() {
        let g: f64 = rng.sample(StandardNormal);
        *x = radius * g;
    }
}
