//! TOML configuration. A file holds optional top-level `command` and `seed`
//! keys plus one table per command; absent tables fall back to the defaults
//! below. The manifest written by every run has the same shape, with the table
//! of the executed command fully resolved.

use std::fmt;
use std::path::Path;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use sdelab::drift::{FieldSpec, MollifyMethod};
use sdelab::noise::NoiseKind;

use crate::error::{CliError, Result};

pub const DEFAULT_SEED: u64 = 1;

/// An integrability exponent in `[1, inf]`; accepts numbers and the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exponent(pub f64);

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Exponent;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Exponent, E> {
                match v.trim().to_ascii_lowercase().as_str() {
                    "inf" | "+inf" | "infinity" => Ok(Exponent(f64::INFINITY)),
                    other => other
                        .parse()
                        .map(Exponent)
                        .map_err(|_| E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Regimes,
    Noise,
    Scaling,
    Variation,
    Counterexample,
    Stability,
    Sewing,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Regimes => "regimes",
            Command::Noise => "noise",
            Command::Scaling => "scaling",
            Command::Variation => "variation",
            Command::Counterexample => "counterexample",
            Command::Stability => "stability",
            Command::Sewing => "sewing",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildStamp {
    pub package: String,
    pub version: String,
}

impl BuildStamp {
    pub fn current() -> Self {
        Self {
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub build: Option<BuildStamp>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regimes: Option<RegimesConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variation: Option<VariationConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<CounterexampleConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sewing: Option<SewingConfig>,
}

impl ConfigFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeNoise {
    Fbm,
    Stable,
}

/// Cartesian sweep over `index x dim x p x q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub index: Vec<f64>,
    pub dim: Vec<usize>,
    pub p: Vec<Exponent>,
    pub q: Vec<Exponent>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegimesConfig {
    pub noise: RegimeNoise,
    /// Explicit `[index, d, p, q]` rows, written before the sweep.
    pub tuples: Vec<[Exponent; 4]>,
    /// Only a missing `[regimes]` table falls back to the default sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
}

impl Default for RegimesConfig {
    fn default() -> Self {
        let exps: Vec<Exponent> = [1.0, 2.0, 4.0, 8.0, 16.0, f64::INFINITY].map(Exponent).to_vec();
        Self {
            noise: RegimeNoise::Fbm,
            tuples: Vec::new(),
            sweep: Some(Sweep {
                index: (1..=9).map(|k| k as f64 / 10.0).collect(),
                dim: vec![1],
                p: exps.clone(),
                q: exps,
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CovarianceCheck {
    pub paths: usize,
    /// Every `stride`-th grid point enters the check.
    pub stride: usize,
}

impl Default for CovarianceCheck {
    fn default() -> Self {
        Self {
            paths: 20_000,
            stride: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub dim: usize,
    pub horizon: f64,
    pub steps: usize,
    /// Number of paths written as CSV.
    pub paths: usize,
    pub process: NoiseKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covariance: Option<CovarianceCheck>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            horizon: 1.0,
            steps: 256,
            paths: 4,
            process: NoiseKind::FbmVolterra { hurst: 0.7 },
            covariance: None,
        }
    }
}

fn dyadic(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|j| 2f64.powi(-j)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub dim: usize,
    pub horizon: f64,
    pub steps: usize,
    pub paths: usize,
    pub m: f64,
    pub start: f64,
    /// Window lengths.
    pub windows: Vec<f64>,
    /// Declared integrability of the field; it sets the predicted exponent.
    pub p: Exponent,
    pub q: Exponent,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mollify: Option<f64>,
    pub process: NoiseKind,
    pub field: FieldSpec,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            horizon: 0.125,
            steps: 2048,
            paths: 2000,
            m: 2.0,
            start: 0.0,
            windows: dyadic(3, 8),
            p: Exponent(1.0 / 0.22),
            q: Exponent(f64::INFINITY),
            mollify: None,
            process: NoiseKind::FbmVolterra { hurst: 0.7 },
            field: FieldSpec::RadialPower { gamma: 0.2, beta: 0.0 },
        }
    }
}

/// Window scaling of the 1-variation on a separate grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowScaling {
    pub horizon: f64,
    pub steps: usize,
    pub paths: usize,
    /// Mollification level of the single field used here.
    pub eps: f64,
    pub windows: Vec<f64>,
}

impl Default for WindowScaling {
    fn default() -> Self {
        Self {
            horizon: 0.125,
            steps: 2048,
            paths: 1000,
            eps: 2f64.powi(-16),
            windows: dyadic(3, 8),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariationConfig {
    pub dim: usize,
    pub horizon: f64,
    pub steps: usize,
    pub paths: usize,
    pub m: f64,
    /// Initial condition; empty means the origin.
    pub x0: Vec<f64>,
    pub p: Exponent,
    pub q: Exponent,
    pub eps: Vec<f64>,
    pub method: MollifyMethod,
    /// Number of solution paths (finest `eps`) written as CSV.
    pub export: usize,
    pub process: NoiseKind,
    pub field: FieldSpec,
    /// Only a missing `[variation]` table falls back to the default window run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub windows: Option<WindowScaling>,
}

impl Default for VariationConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            horizon: 1.0,
            steps: 2048,
            paths: 1000,
            m: 2.0,
            x0: Vec::new(),
            p: Exponent(10.0),
            q: Exponent(1.0 / 0.32),
            eps: dyadic(3, 7),
            method: MollifyMethod::Analytic,
            export: 0,
            process: NoiseKind::FbmCholesky { hurst: 0.1 },
            field: FieldSpec::SignedPower { alpha: 0.05, beta: 0.3 },
            windows: Some(WindowScaling::default()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FbmSampler {
    Cholesky,
    Volterra,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub hurst: f64,
    pub dim: usize,
    pub p: Exponent,
    pub q: Exponent,
    pub sampler: FbmSampler,
    pub horizon: f64,
    pub steps: usize,
    pub paths: usize,
    pub m: f64,
    pub x0: Vec<f64>,
    pub eps: Vec<f64>,
    pub export: usize,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        Self {
            hurst: 0.6,
            dim: 1,
            p: Exponent(1.0),
            q: Exponent(1.0),
            sampler: FbmSampler::Cholesky,
            horizon: 1.0,
            steps: 2048,
            paths: 2000,
            m: 2.0,
            x0: Vec::new(),
            eps: dyadic(3, 7),
            export: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub dim: usize,
    pub horizon: f64,
    pub steps: usize,
    pub paths: usize,
    pub x0: Vec<f64>,
    pub eps: Vec<f64>,
    pub schedule_a: MollifyMethod,
    pub schedule_b: MollifyMethod,
    /// Seed of the noise driving the second schedule; defaults to `seed + 1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_b: Option<u64>,
    /// Declared integrability; the run is refused unless it is subcritical.
    pub p: Exponent,
    pub q: Exponent,
    pub process: NoiseKind,
    pub field: FieldSpec,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            horizon: 1.0,
            steps: 1024,
            paths: 10_000,
            x0: Vec::new(),
            eps: dyadic(3, 6),
            schedule_a: MollifyMethod::Analytic,
            schedule_b: MollifyMethod::Convolution,
            seed_b: None,
            p: Exponent(3.0),
            q: Exponent(f64::INFINITY),
            process: NoiseKind::Bm,
            field: FieldSpec::SignedPower { alpha: 0.3, beta: 0.0 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GermSpec {
    Zero,
    Increment,
    Frozen {
        #[serde(skip_serializing_if = "Option::is_none")]
        mollify: Option<f64>,
        field: FieldSpec,
    },
    Conditional {
        #[serde(default = "default_inner")]
        inner: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        mollify: Option<f64>,
        field: FieldSpec,
    },
}

fn default_inner() -> usize {
    sdelab::sewing::DEFAULT_INNER_SAMPLES
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SewingConfig {
    pub dim: usize,
    pub horizon: f64,
    pub steps: usize,
    pub paths: usize,
    pub min_level: u32,
    pub max_level: u32,
    /// Grid indices `[s, t]`; defaults to the whole grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[usize; 2]>,
    /// Grid indices `[s, u, t]` of the reported `delta A`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<[usize; 3]>,
    pub process: NoiseKind,
    pub germ: GermSpec,
}

impl Default for SewingConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            horizon: 1.0,
            steps: 1024,
            paths: 500,
            min_level: 4,
            max_level: 10,
            window: None,
            delta: None,
            process: NoiseKind::FbmVolterra { hurst: 0.7 },
            germ: GermSpec::Conditional {
                inner: default_inner(),
                mollify: None,
                field: FieldSpec::Cosine,
            },
        }
    }
}
