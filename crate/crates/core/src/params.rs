//! Regime classification for `(H, d, p, q)` and `(alpha, d, p, q)` tuples.
//!
//! The drift is assumed to lie in `L_q([0, T], L_p(R^d))`. Infinite exponents
//! are allowed and enter every formula through `1/p = 0` or `1/q = 0`.

use std::fmt;

use crate::error::{domain, Error, Result};

/// Tolerance used to separate the three classes.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseIndex {
    /// Hurst parameter of a fractional Brownian motion, in (0, 1).
    Hurst(f64),
    /// Stability index of a symmetric stable process, in (1, 2).
    Stable(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeParams {
    pub index: NoiseIndex,
    pub dim: usize,
    pub p: f64,
    pub q: f64,
}

impl RegimeParams {
    pub fn fbm(hurst: f64, dim: usize, p: f64, q: f64) -> Result<Self> {
        let params = Self {
            index: NoiseIndex::Hurst(hurst),
            dim,
            p,
            q,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn stable(alpha: f64, dim: usize, p: f64, q: f64) -> Result<Self> {
        let params = Self {
            index: NoiseIndex::Stable(alpha),
            dim,
            p,
            q,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        match self.index {
            NoiseIndex::Hurst(h) if !(h > 0.0 && h < 1.0) => {
                return domain(format!("Hurst parameter {h} outside (0, 1)"))
            }
            NoiseIndex::Stable(a) if !(a > 1.0 && a < 2.0) => {
                return domain(format!("stability index {a} outside (1, 2)"))
            }
            _ => {}
        }
        if self.dim == 0 {
            return domain("dimension must be positive");
        }
        if !(self.p >= 1.0) || !(self.q >= 1.0) {
            return domain(format!("integrability exponents p = {}, q = {} must be >= 1", self.p, self.q));
        }
        Ok(())
    }

    pub fn inv_p(&self) -> f64 {
        recip(self.p)
    }

    pub fn inv_q(&self) -> f64 {
        recip(self.q)
    }

    /// Self-similarity index of the noise: `H` for fBm, `1/alpha` for stable noise.
    pub fn scaling_index(&self) -> f64 {
        match self.index {
            NoiseIndex::Hurst(h) => h,
            NoiseIndex::Stable(a) => 1.0 / a,
        }
    }

    /// Value of `H` or `alpha`, whichever the tuple carries.
    pub fn index_value(&self) -> f64 {
        match self.index {
            NoiseIndex::Hurst(h) => h,
            NoiseIndex::Stable(a) => a,
        }
    }
}

/// `1/x` with `1/inf = 0`.
pub fn recip(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Classification {
    Subcritical,
    Boundary,
    Supercritical,
}

impl Classification {
    pub fn from_value(value: f64) -> Self {
        if value.abs() <= BOUNDARY_TOL {
            Classification::Boundary
        } else if value < 0.0 {
            Classification::Subcritical
        } else {
            Classification::Supercritical
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Subcritical => "subcritical",
            Classification::Boundary => "boundary",
            Classification::Supercritical => "supercritical",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeVerdict {
    /// Left side minus right side of the tested inequality.
    pub condition_value: f64,
    pub classification: Classification,
}

impl RegimeVerdict {
    fn new(condition_value: f64) -> Self {
        Self {
            condition_value,
            classification: Classification::from_value(condition_value),
        }
    }
}

/// `(1-H)/q + H d/p - (1-H)`; negative values are subcritical.
pub fn check_fbm_condition(params: &RegimeParams) -> Result<RegimeVerdict> {
    params.validate()?;
    let h = match params.index {
        NoiseIndex::Hurst(h) => h,
        NoiseIndex::Stable(_) => return domain("fBm condition needs a Hurst parameter"),
    };
    let d = params.dim as f64;
    let value = (1.0 - h) * params.inv_q() + h * d * params.inv_p() - (1.0 - h);
    Ok(RegimeVerdict::new(value))
}

/// `(alpha-1)/q + d/p - (alpha-1)`; negative values are subcritical.
pub fn check_levy_condition(params: &RegimeParams) -> Result<RegimeVerdict> {
    params.validate()?;
    let alpha = match params.index {
        NoiseIndex::Stable(a) => a,
        NoiseIndex::Hurst(_) => return domain("Levy condition needs a stability index"),
    };
    let d = params.dim as f64;
    let value = (alpha - 1.0) * params.inv_q() + d * params.inv_p() - (alpha - 1.0);
    Ok(RegimeVerdict::new(value))
}

/// Dispatches on the noise kind.
pub fn check_main_condition(params: &RegimeParams) -> Result<RegimeVerdict> {
    match params.index {
        NoiseIndex::Hurst(_) => check_fbm_condition(params),
        NoiseIndex::Stable(_) => check_levy_condition(params),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReferenceChecks {
    pub lps: bool,
    pub krylov: bool,
    pub gg23: bool,
}

/// Classical sufficient conditions. For stable noise the `gg23` check uses `H = 1/alpha`.
pub fn check_reference_conditions(params: &RegimeParams) -> Result<ReferenceChecks> {
    params.validate()?;
    let h = params.scaling_index();
    let d = params.dim as f64;
    let (ip, iq) = (params.inv_p(), params.inv_q());
    Ok(ReferenceChecks {
        lps: 2.0 * iq + d * ip < 1.0,
        krylov: iq + d * ip <= 1.0,
        gg23: iq + h * d * ip < 1.0 - h && 2.0 * h * d * ip < 1.0 - h,
    })
}

/// Exponents of the explicit no-solution drift
/// `-sign(x^i) |x|^{-alpha_ce} 1_{|x|<1} t^{-beta_ce}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CounterexampleParams {
    pub alpha_ce: f64,
    pub beta_ce: f64,
    pub gamma_ce: f64,
}

impl CounterexampleParams {
    /// `alpha gamma + beta (1 - gamma) - (1 - gamma)`, positive when the drift wins.
    pub fn margin(&self) -> f64 {
        let g = self.gamma_ce;
        self.alpha_ce * g + self.beta_ce * (1.0 - g) - (1.0 - g)
    }

    /// Checks the defining inequalities against the generating regime.
    pub fn is_feasible_for(&self, params: &RegimeParams) -> bool {
        let h = params.scaling_index();
        let d = params.dim as f64;
        self.alpha_ce > 0.0
            && self.beta_ce > 0.0
            && self.gamma_ce > 0.0
            && self.gamma_ce < 1.0
            && self.margin() > 0.0
            && self.alpha_ce < d * params.inv_p()
            && self.beta_ce < params.inv_q()
            && self.gamma_ce < h
    }
}

const MAX_HALVINGS: usize = 200;

/// Shrinks `(H, d/p, 1/q)` by a common factor `1 - theta`, halving `theta`
/// from 0.5 until the counterexample inequality holds.
pub fn counterexample_params(params: &RegimeParams) -> Result<CounterexampleParams> {
    let verdict = check_fbm_condition(params)?;
    if verdict.classification != Classification::Supercritical {
        return Err(Error::InfeasibleRegime(format!(
            "(1-H)/q + Hd/p - (1-H) = {:.6} is not > 0; the counterexample needs a strictly supercritical tuple",
            verdict.condition_value
        )));
    }
    if params.q.is_infinite() {
        return Err(Error::InfeasibleRegime(
            "q = inf leaves no room for a time singularity".into(),
        ));
    }
    let h = params.scaling_index();
    let d_over_p = params.dim as f64 * params.inv_p();
    let inv_q = params.inv_q();
    let mut theta = 0.5;
    for _ in 0..MAX_HALVINGS {
        let ce = CounterexampleParams {
            alpha_ce: d_over_p * (1.0 - theta),
            beta_ce: inv_q * (1.0 - theta),
            gamma_ce: h * (1.0 - theta),
        };
        if ce.is_feasible_for(params) {
            return Ok(ce);
        }
        theta *= 0.5;
    }
    Err(Error::InfeasibleRegime(format!(
        "no feasible shrink factor found; margin {:.3e} too close to the boundary",
        verdict.condition_value
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fbm(h: f64, d: usize, p: f64, q: f64) -> RegimeParams {
        RegimeParams::fbm(h, d, p, q).unwrap()
    }

    #[test]
    fn fbm_examples() {
        let v = check_fbm_condition(&fbm(0.5, 1, 3.0, 2.0)).unwrap();
        assert!((v.condition_value + 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(v.classification, Classification::Subcritical);

        let v = check_fbm_condition(&fbm(0.5, 1, 1.0, 1.0)).unwrap();
        assert!((v.condition_value - 0.5).abs() < 1e-15);
        assert_eq!(v.classification, Classification::Supercritical);

        let v = check_fbm_condition(&fbm(0.6, 2, 10.0, 4.0)).unwrap();
        assert!((v.condition_value - (0.1 + 0.12 - 0.4)).abs() < 1e-15);
        assert_eq!(v.classification, Classification::Subcritical);
    }

    #[test]
    fn levy_examples() {
        let cases = [
            (1.5, 4.0, 4.0, Classification::Subcritical, 0.125 + 0.25 - 0.5),
            (1.5, 1.0, 1.0, Classification::Supercritical, 0.5 + 1.0 - 0.5),
            (1.2, 10.0, 1.0, Classification::Supercritical, 0.2 + 0.1 - 0.2),
        ];
        for (a, p, q, class, value) in cases {
            let v = check_levy_condition(&RegimeParams::stable(a, 1, p, q).unwrap()).unwrap();
            assert_eq!(v.classification, class);
            assert!((v.condition_value - value).abs() < 1e-14);
        }
    }

    #[test]
    fn boundary_is_its_own_class() {
        let v = check_fbm_condition(&fbm(0.5, 1, 2.0, 2.0)).unwrap();
        assert_eq!(v.classification, Classification::Boundary);
    }

    #[test]
    fn reference_examples() {
        let r = check_reference_conditions(&fbm(0.5, 1, 3.0, 2.0)).unwrap();
        assert!(!r.lps);
        assert!(r.krylov);
        let r = check_reference_conditions(&fbm(0.5, 1, 2.0, 1e9)).unwrap();
        assert!(r.krylov);
        let r = check_reference_conditions(&fbm(0.5, 1, 2.0, f64::INFINITY)).unwrap();
        assert!(r.krylov);
        let r = check_reference_conditions(&fbm(0.25, 1, 8.0, 8.0)).unwrap();
        assert!(r.gg23);
    }

    #[test]
    fn domain_errors() {
        assert!(RegimeParams::fbm(1.0, 1, 2.0, 2.0).is_err());
        assert!(RegimeParams::fbm(0.5, 1, 0.5, 2.0).is_err());
        assert!(RegimeParams::fbm(0.5, 0, 2.0, 2.0).is_err());
        assert!(RegimeParams::stable(2.0, 1, 2.0, 2.0).is_err());
        assert!(RegimeParams::stable(1.0, 1, 2.0, 2.0).is_err());
        let stable = RegimeParams::stable(1.5, 1, 2.0, 2.0).unwrap();
        assert!(check_fbm_condition(&stable).is_err());
    }

    #[test]
    fn counterexample_witnesses() {
        let params = fbm(0.6, 1, 1.0, 1.0);
        let ce = counterexample_params(&params).unwrap();
        assert!(ce.is_feasible_for(&params));
        assert!((ce.alpha_ce - 0.75).abs() < 1e-15);
        assert!((ce.beta_ce - 0.75).abs() < 1e-15);
        assert!((ce.gamma_ce - 0.45).abs() < 1e-15);

        let params = fbm(0.5, 1, 1.0, 1.0);
        let ce = counterexample_params(&params).unwrap();
        assert!(ce.is_feasible_for(&params));

        // the listed witnesses also satisfy the inequalities
        let w = CounterexampleParams { alpha_ce: 0.9, beta_ce: 0.9, gamma_ce: 0.5 };
        assert!(w.is_feasible_for(&fbm(0.6, 1, 1.0, 1.0)));
        let w = CounterexampleParams { alpha_ce: 0.95, beta_ce: 0.95, gamma_ce: 0.45 };
        assert!(w.is_feasible_for(&fbm(0.5, 1, 1.0, 1.0)));
    }

    #[test]
    fn counterexample_rejects_subcritical() {
        let err = counterexample_params(&fbm(0.5, 1, 3.0, 2.0)).unwrap_err();
        assert!(matches!(err, Error::InfeasibleRegime(_)));
        let err = counterexample_params(&fbm(0.5, 1, 2.0, 2.0)).unwrap_err();
        assert!(matches!(err, Error::InfeasibleRegime(_)));
    }
}
