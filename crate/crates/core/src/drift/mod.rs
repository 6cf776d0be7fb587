//! Space-time drift fields `b: [0, T] x R^d -> R^d` with integrability metadata.
//!
//! Raw fields may be singular and are evaluated with documented conventions at
//! their singular sets. Mollified fields are smooth and bounded by a stated ceiling,
//! which the solver enforces.

pub mod expr;
mod norms;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::params::CounterexampleParams;
pub use norms::{besov_norm, lqlp_distance, lqlp_norm, BesovReport, BesovSpec, LatticeFunction, NormResolution};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Smoothness {
    Raw,
    Mollified(f64),
}

#[derive(Clone, Debug)]
enum Kind {
    Zero,
    Constant(Vec<f64>),
    /// `b(t, x) = rate * x`.
    Linear(f64),
    /// `b^i(t, x) = cos(x^i)`.
    Cosine,
    /// `b^i(t, x) = exp(-|x|^2 / 2)`.
    GaussianBump,
    /// `-sign(x^i) |x|^{-alpha} 1_{|x| < 1} t^{-beta}`.
    SignedPower { alpha: f64, beta: f64 },
    SignedPowerSmooth { alpha: f64, beta: f64, eps: f64 },
    /// `|x|^{-gamma} 1_{|x| <= 1} t^{-beta}` in every component.
    RadialPower { gamma: f64, beta: f64 },
    RadialPowerSmooth { gamma: f64, beta: f64, eps: f64 },
    Expression(Arc<Vec<expr::Expr>>),
    /// Lattice Gaussian convolution in space of `inner`, evaluated at time `t + eps`.
    Convolved { inner: Arc<DriftField>, eps: f64, h: f64 },
}

/// How generic fields are smoothed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MollifyMethod {
    /// Closed-form smoothing for the power families, convolution otherwise.
    Analytic,
    /// Lattice Gaussian convolution for every field.
    Convolution,
}

/// An evaluable drift field. Cloning is cheap.
#[derive(Clone, Debug)]
pub struct DriftField {
    kind: Kind,
    dim: usize,
    p: f64,
    q: f64,
    smoothness: Smoothness,
    ceiling: f64,
    label: String,
}

impl fmt::Display for DriftField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.smoothness {
            Smoothness::Raw => write!(f, "{}", self.label),
            Smoothness::Mollified(e) => write!(f, "{} (eps = {e})", self.label),
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Smooth cutoff: 1 on `[0, 1]`, 0 on `[1 + w, inf)`, C-infinity in between, `w = min(eps, 1/2)`.
/// The transition sits outside the unit ball, so the smoothed power fields keep
/// their full mass on the raw support.
pub fn smooth_cutoff(r: f64, eps: f64) -> f64 {
    let w = eps.min(0.5);
    if r <= 1.0 {
        return 1.0;
    }
    if r >= 1.0 + w {
        return 0.0;
    }
    let u = (1.0 + w - r) / w;
    let a = (-1.0 / u).exp();
    let b = (-1.0 / (1.0 - u)).exp();
    a / (a + b)
}

fn time_power(t: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        1.0
    } else if t > 0.0 {
        t.powf(-beta)
    } else {
        0.0
    }
}

impl DriftField {
    fn raw(kind: Kind, dim: usize, p: f64, q: f64, ceiling: f64, label: String) -> Self {
        Self {
            kind,
            dim,
            p,
            q,
            smoothness: Smoothness::Raw,
            ceiling,
            label,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Declared spatial integrability exponent.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Declared temporal integrability exponent.
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    /// Upper bound on `|b(t, x)|` (Euclidean); infinite for singular or unbounded fields.
    pub fn ceiling(&self) -> f64 {
        self.ceiling
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Whether the solver may integrate this field: mollified, or raw but locally bounded.
    pub fn is_solvable(&self) -> bool {
        match self.smoothness {
            Smoothness::Mollified(_) => true,
            Smoothness::Raw => matches!(
                self.kind,
                Kind::Zero | Kind::Constant(_) | Kind::Linear(_) | Kind::Cosine | Kind::GaussianBump
            ),
        }
    }

    /// Overrides the declared `(p, q)` metadata.
    pub fn with_integrability(mut self, p: f64, q: f64) -> Self {
        self.p = p;
        self.q = q;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Writes `b(t, x)` into `out`.
    pub fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        match &self.kind {
            Kind::Zero => out.fill(0.0),
            Kind::Constant(c) => out.copy_from_slice(c),
            Kind::Linear(rate) => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = rate * v;
                }
            }
            Kind::Cosine => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = v.cos();
                }
            }
            Kind::GaussianBump => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                out.fill((-0.5 * r2).exp());
            }
            Kind::SignedPower { alpha, beta } => {
                let r = norm(x);
                if !(t > 0.0) || r == 0.0 || r >= 1.0 {
                    out.fill(0.0);
                    return;
                }
                let amp = r.powf(-alpha) * time_power(t, *beta);
                for (o, v) in out.iter_mut().zip(x) {
                    *o = -sign(*v) * amp;
                }
            }
            Kind::SignedPowerSmooth { alpha, beta, eps } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let r = r2.sqrt();
                let amp = (r2 + eps * eps).powf(-0.5 * alpha)
                    * smooth_cutoff(r, *eps)
                    * (t.max(0.0) + eps).powf(-beta);
                for (o, v) in out.iter_mut().zip(x) {
                    *o = -v / (v * v + eps * eps).sqrt() * amp;
                }
            }
            Kind::RadialPower { gamma, beta } => {
                let r = norm(x);
                let v = if r > 1.0 || (r == 0.0 && *gamma > 0.0) {
                    0.0
                } else {
                    r.powf(-gamma) * time_power(t, *beta)
                };
                out.fill(v);
            }
            Kind::RadialPowerSmooth { gamma, beta, eps } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let v = (r2 + eps * eps).powf(-0.5 * gamma)
                    * smooth_cutoff(r2.sqrt(), *eps)
                    * (t.max(0.0) + eps).powf(-beta);
                out.fill(v);
            }
            Kind::Expression(exprs) => {
                let r = norm(x);
                for (o, e) in out.iter_mut().zip(exprs.iter()) {
                    let v = e.eval(t, x, r);
                    *o = if v.is_finite() { v } else { 0.0 };
                }
            }
            Kind::Convolved { inner, eps, h } => eval_convolved(inner, *eps, *h, t, x, out),
        }
    }

    /// `E b(t, m + sqrt(var) Z)` with `Z` standard Gaussian, written into `out`, for
    /// the fields where it has a closed form. Returns `false` otherwise.
    pub fn gaussian_expectation(&self, t: f64, m: &[f64], var: f64, out: &mut [f64]) -> bool {
        match &self.kind {
            Kind::Zero | Kind::Constant(_) | Kind::Linear(_) => self.eval(t, m, out),
            Kind::Cosine => {
                let damp = (-0.5 * var).exp();
                for (o, v) in out.iter_mut().zip(m) {
                    *o = v.cos() * damp;
                }
            }
            Kind::GaussianBump => {
                let r2: f64 = m.iter().map(|v| v * v).sum();
                let s = 1.0 + var;
                out.fill(s.powf(-0.5 * self.dim as f64) * (-0.5 * r2 / s).exp());
            }
            _ => return false,
        }
        true
    }

    /// Convenience wrapper returning a fresh vector.
    pub fn value(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval(t, x, &mut out);
        out
    }
}

pub fn zero_field(dim: usize) -> DriftField {
    DriftField::raw(Kind::Zero, dim, 1.0, 1.0, 0.0, "zero".into())
}

/// Constant field; metadata `p = q = inf`.
pub fn constant_field(c: Vec<f64>) -> DriftField {
    let dim = c.len();
    let ceiling = norm(&c);
    DriftField::raw(
        Kind::Constant(c),
        dim,
        f64::INFINITY,
        f64::INFINITY,
        ceiling,
        "constant".into(),
    )
}

/// `b(t, x) = rate * x`; unbounded but globally Lipschitz.
pub fn linear_field(rate: f64, dim: usize) -> DriftField {
    DriftField::raw(
        Kind::Linear(rate),
        dim,
        f64::INFINITY,
        f64::INFINITY,
        f64::INFINITY,
        format!("linear({rate})"),
    )
}

/// `b^i(t, x) = cos(x^i)`: bounded and Lipschitz.
pub fn cosine_field(dim: usize) -> DriftField {
    DriftField::raw(
        Kind::Cosine,
        dim,
        f64::INFINITY,
        f64::INFINITY,
        (dim as f64).sqrt(),
        "cos".into(),
    )
}

/// `b^i(t, x) = exp(-|x|^2 / 2)`: bounded, Lipschitz and in every `L_p`.
pub fn gaussian_bump_field(dim: usize) -> DriftField {
    DriftField::raw(
        Kind::GaussianBump,
        dim,
        1.0,
        f64::INFINITY,
        (dim as f64).sqrt(),
        "gaussian-bump".into(),
    )
}

/// The no-solution drift `-sign(x^i) |x|^{-alpha} 1_{|x| < 1} t^{-beta}`.
///
/// Conventions: the value is 0 at `x = 0` and at `t <= 0`. The point mass
/// `-1_{x = 0} t^{-2}` of the construction is not represented; paths of the
/// noise never hit the origin. The declared metadata are the critical exponents
/// `p = d / alpha`, `q = 1 / beta`, which the field just fails to reach; use
/// [`DriftField::with_integrability`] for the exponents of a specific regime.
pub fn counterexample_drift(ce: &CounterexampleParams, dim: usize) -> DriftField {
    signed_power_field(ce.alpha_ce, ce.beta_ce, dim)
        .with_label(format!("counterexample(alpha={}, beta={})", ce.alpha_ce, ce.beta_ce))
}

/// Same shape as [`counterexample_drift`] with arbitrary exponents.
pub fn signed_power_field(alpha: f64, beta: f64, dim: usize) -> DriftField {
    DriftField::raw(
        Kind::SignedPower { alpha, beta },
        dim,
        crate::params::recip(alpha / dim as f64),
        crate::params::recip(beta),
        f64::INFINITY,
        format!("signed-power(alpha={alpha}, beta={beta})"),
    )
}

/// `|x|^{-gamma} 1_{|x| <= 1} t^{-beta}` in every component; 0 at `x = 0` when
/// `gamma > 0` and at `t <= 0` when `beta > 0`. Metadata are the critical exponents.
pub fn radial_power_field(gamma: f64, beta: f64, dim: usize) -> DriftField {
    DriftField::raw(
        Kind::RadialPower { gamma, beta },
        dim,
        crate::params::recip(gamma / dim as f64),
        crate::params::recip(beta),
        if gamma == 0.0 && beta == 0.0 {
            (dim as f64).sqrt()
        } else {
            f64::INFINITY
        },
        format!("radial-power(gamma={gamma}, beta={beta})"),
    )
}

/// Field with one expression per component (see [`expr`]). Non-finite values
/// (division by zero, negative powers at 0) evaluate to 0.
pub fn expression_field(components: &[impl AsRef<str>], dim: usize, p: f64, q: f64) -> Result<DriftField> {
    if components.len() != dim {
        return domain(format!(
            "expression field of dimension {dim} needs {dim} components, got {}",
            components.len()
        ));
    }
    let exprs = components
        .iter()
        .map(|s| expr::parse(s.as_ref(), dim))
        .collect::<Result<Vec<_>>>()?;
    let label = components.iter().map(|s| s.as_ref()).collect::<Vec<_>>().join("; ");
    Ok(DriftField::raw(
        Kind::Expression(Arc::new(exprs)),
        dim,
        p,
        q,
        f64::INFINITY,
        format!("expr[{label}]"),
    ))
}

/// Half-width of the convolution stencil in units of `eps`; the Gaussian tail
/// beyond it is below double rounding, so the truncation leaves no visible jumps.
const CONV_RADIUS: f64 = 9.0;
/// Lattice points per `eps`.
const CONV_DENSITY: f64 = 4.0;
const CONV_MAX_DIM: usize = 3;

/// Smooth bounded approximation of `field` at scale `eps` (analytic where available).
pub fn mollify(field: &DriftField, eps: f64) -> Result<DriftField> {
    mollify_with(field, eps, MollifyMethod::Analytic)
}

pub fn mollify_with(field: &DriftField, eps: f64, method: MollifyMethod) -> Result<DriftField> {
    if !(eps > 0.0 && eps.is_finite()) {
        return domain(format!("mollification scale must be positive, got {eps}"));
    }
    let d = field.dim;
    let smooth = |kind: Kind, ceiling: f64| DriftField {
        kind,
        dim: d,
        p: field.p,
        q: field.q,
        smoothness: Smoothness::Mollified(eps),
        ceiling,
        label: field.label.clone(),
    };
    if let Kind::Zero = field.kind {
        return Ok(smooth(Kind::Zero, 0.0));
    }
    if method == MollifyMethod::Analytic {
        match field.kind {
            Kind::SignedPower { alpha, beta } => {
                // |x^i| / sqrt(x_i^2 + eps^2) <= 1 and (r^2 + eps^2)^{-a/2} <= eps^{-a}
                let ceiling = (d as f64).sqrt() * eps.powf(-alpha) * eps.powf(-beta);
                return Ok(smooth(Kind::SignedPowerSmooth { alpha, beta, eps }, ceiling));
            }
            Kind::RadialPower { gamma, beta } => {
                let ceiling = (d as f64).sqrt() * eps.powf(-gamma) * eps.powf(-beta);
                return Ok(smooth(Kind::RadialPowerSmooth { gamma, beta, eps }, ceiling));
            }
            _ => {}
        }
    }
    if d > CONV_MAX_DIM {
        return Err(Error::Unsupported(format!(
            "convolution mollifier supports d <= {CONV_MAX_DIM}, got {d}"
        )));
    }
    if let Kind::Linear(_) = field.kind {
        return Err(Error::Unsupported(format!(
            "field `{}` is unbounded; its convolution is not a bounded drift",
            field.label
        )));
    }
    let h = eps / CONV_DENSITY;
    let ceiling = if field.ceiling.is_finite() {
        field.ceiling
    } else {
        lattice_sup(field, eps, h)
    };
    Ok(smooth(
        Kind::Convolved {
            inner: Arc::new(field.clone()),
            eps,
            h,
        },
        ceiling,
    ))
}

/// Largest `|b(eps, z)|` over lattice nodes with `|z| <= 2`. The convolution is an
/// average of such values at times `>= eps`, so this bounds it for the singular
/// families offered here, whose magnitude decreases in `t` and vanishes outside
/// the unit ball. For expression fields it is a probe, and the solver's ceiling
/// check reports any excursion.
fn lattice_sup(field: &DriftField, eps: f64, h: f64) -> f64 {
    let d = field.dim;
    let m = (2.0 / h).ceil() as i64;
    let side = (2 * m) as usize;
    let mut z = vec![0.0; d];
    let mut v = vec![0.0; d];
    let mut sup: f64 = 0.0;
    for idx in 0..side.pow(d as u32) {
        let mut rest = idx;
        for zi in z.iter_mut() {
            *zi = ((rest % side) as i64 - m) as f64 * h + 0.5 * h;
            rest /= side;
        }
        if norm(&z) > 2.0 {
            continue;
        }
        field.eval(eps, &z, &mut v);
        sup = sup.max(norm(&v));
    }
    sup * (1.0 + 1e-9)
}

/// `sum_k w_k b(t + eps, z_k) / sum_k w_k` over lattice nodes `z_k = (k + 1/2) h`
/// within `CONV_RADIUS * eps` of `x`, with Gaussian weights of variance `eps^2`.
fn eval_convolved(inner: &DriftField, eps: f64, h: f64, t: f64, x: &[f64], out: &mut [f64]) {
    let d = x.len();
    let reach = CONV_RADIUS * eps;
    let mut lo = [0i64; CONV_MAX_DIM];
    let mut len = [0usize; CONV_MAX_DIM];
    let mut w1: [Vec<f64>; CONV_MAX_DIM] = Default::default();
    let mut norm_w = 1.0;
    for i in 0..d {
        let a = ((x[i] - reach) / h - 0.5).ceil() as i64;
        let b = ((x[i] + reach) / h - 0.5).floor() as i64;
        lo[i] = a;
        len[i] = (b - a + 1).max(0) as usize;
        w1[i] = (a..=b)
            .map(|k| {
                let u = (x[i] - (k as f64 + 0.5) * h) / eps;
                (-0.5 * u * u).exp()
            })
            .collect();
        norm_w *= w1[i].iter().sum::<f64>();
    }
    out.fill(0.0);
    let mut z = vec![0.0; d];
    let mut v = vec![0.0; d];
    let total: usize = len[..d].iter().product();
    for idx in 0..total {
        let mut rest = idx;
        let mut w = 1.0;
        for i in 0..d {
            let k = rest % len[i];
            rest /= len[i];
            z[i] = ((lo[i] + k as i64) as f64 + 0.5) * h;
            w *= w1[i][k];
        }
        inner.eval(t + eps, &z, &mut v);
        for i in 0..d {
            out[i] += w * v[i];
        }
    }
    for o in out.iter_mut() {
        *o /= norm_w;
    }
}

/// Configuration form of a drift field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSpec {
    Zero,
    Constant {
        value: Vec<f64>,
    },
    Linear {
        rate: f64,
    },
    Cosine,
    GaussianBump,
    SignedPower {
        alpha: f64,
        beta: f64,
    },
    RadialPower {
        gamma: f64,
        #[serde(default)]
        beta: f64,
    },
    Expression {
        components: Vec<String>,
    },
}

impl FieldSpec {
    /// Builds the field in dimension `dim`; `(p, q)` become its declared metadata
    /// when given.
    pub fn build(&self, dim: usize, p: Option<f64>, q: Option<f64>) -> Result<DriftField> {
        let f = match self {
            FieldSpec::Zero => zero_field(dim),
            FieldSpec::Constant { value } => {
                if value.len() != dim {
                    return domain(format!("constant field has {} entries, expected {dim}", value.len()));
                }
                constant_field(value.clone())
            }
            FieldSpec::Linear { rate } => linear_field(*rate, dim),
            FieldSpec::Cosine => cosine_field(dim),
            FieldSpec::GaussianBump => gaussian_bump_field(dim),
            FieldSpec::SignedPower { alpha, beta } => signed_power_field(*alpha, *beta, dim),
            FieldSpec::RadialPower { gamma, beta } => radial_power_field(*gamma, *beta, dim),
            FieldSpec::Expression { components } => {
                expression_field(components, dim, p.unwrap_or(1.0), q.unwrap_or(1.0))?
            }
        };
        Ok(match (p, q) {
            (None, None) => f,
            (p, q) => {
                let (p0, q0) = (f.p(), f.q());
                f.with_integrability(p.unwrap_or(p0), q.unwrap_or(q0))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counterexample_value() {
        let ce = CounterexampleParams {
            alpha_ce: 0.9,
            beta_ce: 0.9,
            gamma_ce: 0.5,
        };
        let f = counterexample_drift(&ce, 1);
        let v = f.value(0.25, &[0.5])[0];
        assert!((v + 8f64.powf(0.9)).abs() < 1e-12);
        assert_eq!(f.value(0.25, &[0.0]), vec![0.0]);
        assert_eq!(f.value(0.25, &[1.0]), vec![0.0]);
        assert_eq!(f.value(0.0, &[0.5]), vec![0.0]);
        let f2 = counterexample_drift(&ce, 2);
        assert_eq!(f2.value(0.5, &[0.8, 0.7]), vec![0.0, 0.0]);
    }

    #[test]
    fn analytic_mollifier_converges_pointwise() {
        let f = signed_power_field(0.9, 0.9, 1);
        let raw = f.value(0.25, &[0.5])[0];
        let mut prev = f64::INFINITY;
        for eps in [1e-2, 1e-3, 1e-4] {
            let m = mollify(&f, eps).unwrap();
            let err = (m.value(0.25, &[0.5])[0] - raw).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-3 * raw.abs());
    }

    #[test]
    fn mollified_values_respect_ceiling() {
        for (alpha, beta, d) in [(0.9, 0.9, 1), (0.5, 0.2, 2), (1.2, 0.4, 3)] {
            let f = signed_power_field(alpha, beta, d);
            for eps in [0.5, 0.1, 0.01] {
                let m = mollify(&f, eps).unwrap();
                for k in 0..200 {
                    let x: Vec<f64> = (0..d).map(|i| ((k * (i + 3)) as f64 * 0.37).sin() * 1.2).collect();
                    let t = k as f64 / 200.0;
                    assert!(norm(&m.value(t, &x)) <= m.ceiling() * (1.0 + 1e-12));
                }
                assert!(norm(&m.value(0.0, &vec![eps * 1e-3; d])) <= m.ceiling());
            }
        }
    }

    #[test]
    fn zero_stays_zero() {
        let m = mollify(&zero_field(2), 0.1).unwrap();
        assert_eq!(m.value(0.3, &[0.1, 0.2]), vec![0.0, 0.0]);
        assert_eq!(m.ceiling(), 0.0);
    }

    #[test]
    fn convolution_of_constant_is_constant() {
        let m = mollify_with(&constant_field(vec![2.0]), 0.1, MollifyMethod::Convolution).unwrap();
        assert!((m.value(0.3, &[0.4])[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn convolution_of_signed_power_is_bounded() {
        let f = signed_power_field(0.5, 0.3, 1);
        let m = mollify_with(&f, 0.05, MollifyMethod::Convolution).unwrap();
        assert!(m.ceiling().is_finite());
        for k in 0..400 {
            let x = -1.3 + k as f64 * 0.0065;
            assert!(m.value(0.0, &[x])[0].abs() <= m.ceiling());
        }
    }

    #[test]
    fn cutoff_is_smooth_step() {
        assert_eq!(smooth_cutoff(0.0, 0.1), 1.0);
        assert_eq!(smooth_cutoff(1.0, 0.1), 1.0);
        assert_eq!(smooth_cutoff(1.1, 0.1), 0.0);
        assert!((smooth_cutoff(1.05, 0.1) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for k in 0..=100 {
            let v = smooth_cutoff(1.0 + k as f64 * 0.001, 0.1);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn field_spec_overrides_metadata() {
        let spec = FieldSpec::RadialPower { gamma: 0.2, beta: 0.0 };
        let f = spec.build(1, Some(5.0), None).unwrap();
        assert_eq!(f.p(), 5.0);
        assert_eq!(f.value(1.0, &[0.5])[0], 0.5f64.powf(-0.2));
    }
}
