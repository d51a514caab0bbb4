//! Versioned JSON experiment configs and the built-in presets.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::params::{BoxBound, SystemParams};
use crate::tuner::{logspace, tune_l_for_snr};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Saddle,
    Theory,
    Simulate,
    TuneBox,
    TuneQuant,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?} (expected csv or json)")),
        }
    }
}

/// Parameter block of a config. Missing fields take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    pub delta: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_bound")]
    pub a: BoxBound,
    /// Quantization level; derived from `snr_tx_db` when that is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(default)]
    pub sigma2: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
}

fn default_n() -> usize {
    1000
}
fn default_bound() -> BoxBound {
    BoxBound::Unbounded
}
fn default_rho() -> f64 {
    1.0
}
fn default_trials() -> usize {
    1
}

/// A grid value: a number, or `"inf"` for the box amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisValue {
    Num(f64),
    Inf,
}

impl AxisValue {
    pub fn as_f64(self) -> f64 {
        match self {
            AxisValue::Num(v) => v,
            AxisValue::Inf => f64::INFINITY,
        }
    }
}

impl Serialize for AxisValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            AxisValue::Num(v) => s.serialize_f64(*v),
            AxisValue::Inf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for AxisValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(AxisValue::Num(v)),
            Raw::Text(t) if t.eq_ignore_ascii_case("inf") => Ok(AxisValue::Inf),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    N,
    Delta,
    Lambda,
    A,
    L,
    Sigma2,
    Rho,
    SnrTxDb,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::N => "n",
            SweepParam::Delta => "delta",
            SweepParam::Lambda => "lambda",
            SweepParam::A => "a",
            SweepParam::L => "l",
            SweepParam::Sigma2 => "sigma2",
            SweepParam::Rho => "rho",
            SweepParam::SnrTxDb => "snr_tx_db",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: SweepParam,
    pub values: Vec<AxisValue>,
}

/// Per-point tuning inside a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tune {
    #[default]
    None,
    /// `(λ, ρ)` of the box precoder for `P̄_b = σ²·SNR_tx`.
    Box,
    /// `(λ, A)` of the quantized precoder at `L = √(σ²·SNR_tx)`.
    Quant,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Cartesian product, first axis outermost.
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub tune: Tune,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub mode: Mode,
    pub params: ParamsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_tx_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Add Monte Carlo columns to sweep rows.
    #[serde(default)]
    pub simulate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_grid: Option<Vec<BoxBound>>,
    #[serde(default)]
    pub output: OutputSpec,
}

/// A config problem, with the 1-based line it points at when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "config error at line {l}: {}", self.message),
            None => write!(f, "config error: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// 1-based line of the first occurrence of `"key"` in `text`.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

impl ExperimentConfig {
    /// Parses and validates a config. Errors carry the offending line.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| ConfigError { line: (e.line() > 0).then_some(e.line()), message: e.to_string() })?;
        cfg.validate().map_err(|(key, message)| ConfigError { line: line_of_key(text, key), message })?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Params with `L` resolved from `snr_tx_db` when given.
    pub fn system_params(&self) -> Result<SystemParams, (&'static str, String)> {
        resolve_params(&self.params, self.snr_tx_db)
    }

    fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.schema_version != SCHEMA_VERSION {
            return Err((
                "schema_version",
                format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        let params = self.system_params()?;
        let needs_trials = matches!(self.mode, Mode::Simulate) || (self.mode == Mode::Sweep && self.simulate);
        if needs_trials && self.trials == 0 {
            return Err(("trials", "trials must be at least 1 when simulating".into()));
        }
        if let Some(g) = &self.lambda_grid {
            if g.is_empty() {
                return Err(("lambda_grid", "lambda_grid is empty".into()));
            }
        }
        if let Some(g) = &self.a_grid {
            if g.is_empty() {
                return Err(("a_grid", "a_grid is empty".into()));
            }
        }
        let tune = match (self.mode, &self.sweep) {
            (Mode::TuneBox, _) => Tune::Box,
            (Mode::TuneQuant, _) => Tune::Quant,
            (Mode::Sweep, Some(s)) => s.tune,
            (Mode::Sweep, None) => return Err(("mode", "mode \"sweep\" needs a \"sweep\" block".into())),
            _ => Tune::None,
        };
        if tune != Tune::None {
            if self.snr_tx_db.is_none() && !self.sweeps(SweepParam::SnrTxDb) {
                return Err(("snr_tx_db", "tuning needs a target snr_tx_db".into()));
            }
            if !(params.sigma2 > 0.0) && !self.sweeps(SweepParam::Sigma2) {
                return Err(("sigma2", "tuning needs sigma2 > 0".into()));
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.axes.is_empty() {
                return Err(("axes", "sweep needs at least one axis".into()));
            }
            for axis in &sweep.axes {
                if axis.values.is_empty() {
                    return Err(("values", format!("sweep axis {} has no values", axis.param.name())));
                }
                for v in &axis.values {
                    if *v == AxisValue::Inf && axis.param != SweepParam::A {
                        return Err((
                            "values",
                            format!("\"inf\" is only allowed on the a axis, not {}", axis.param.name()),
                        ));
                    }
                    let point = apply_axis(&self.params, self.snr_tx_db, axis.param, *v)?;
                    resolve_params(&point.0, point.1)?;
                }
            }
        }
        Ok(())
    }

    fn sweeps(&self, p: SweepParam) -> bool {
        self.sweep.as_ref().is_some_and(|s| s.axes.iter().any(|a| a.param == p))
    }
}

pub(crate) fn resolve_params(p: &ParamsConfig, snr_tx_db: Option<f64>) -> Result<SystemParams, (&'static str, String)> {
    let level = match (snr_tx_db, p.l) {
        (Some(snr), _) => tune_l_for_snr(p.sigma2, snr).map_err(|e| ("snr_tx_db", e.to_string()))?,
        (None, Some(l)) => l,
        (None, None) => 1.0,
    };
    let sp = SystemParams { n: p.n, delta: p.delta, lambda: p.lambda, a: p.a, level, sigma2: p.sigma2, rho: p.rho };
    sp.validate().map_err(|e| {
        let msg = e.to_string();
        // Point at whichever parameter the message names first.
        let key = ["delta", "lambda", "sigma2", "rho", "n must", "a must"]
            .into_iter()
            .filter_map(|k| msg.find(k).map(|i| (i, k)))
            .min()
            .map_or("params", |(_, k)| k.split(' ').next().unwrap_or(k));
        (key, msg)
    })?;
    Ok(sp)
}

/// Sets one swept parameter on a copy of the params block.
pub(crate) fn apply_axis(
    base: &ParamsConfig,
    snr_tx_db: Option<f64>,
    param: SweepParam,
    v: AxisValue,
) -> Result<(ParamsConfig, Option<f64>), (&'static str, String)> {
    let mut p = base.clone();
    let mut snr = snr_tx_db;
    let x = v.as_f64();
    match param {
        SweepParam::N => {
            if !(x >= 1.0 && x.fract() == 0.0 && x.is_finite()) {
                return Err(("values", format!("n must be a positive integer, got {x}")));
            }
            p.n = x as usize;
        }
        SweepParam::Delta => p.delta = x,
        SweepParam::Lambda => p.lambda = x,
        SweepParam::A => {
            p.a = BoxBound::finite(x).map_err(|e| ("values", e.to_string()))?;
        }
        SweepParam::L => {
            if snr.is_some() {
                return Err(("values", "cannot sweep l while snr_tx_db fixes it".into()));
            }
            p.l = Some(x);
        }
        SweepParam::Sigma2 => p.sigma2 = x,
        SweepParam::Rho => p.rho = x,
        SweepParam::SnrTxDb => snr = Some(x),
    }
    Ok((p, snr))
}

/// Names accepted by `--preset`.
pub const PRESETS: [&str; 5] = ["fig1", "fig2", "fig3", "fig4-left", "fig4-right"];

/// Regularization used by the `fig3` preset's A sweep.
pub const FIG3_LAMBDA: f64 = 0.01;

/// The A grid of the `fig3` preset: 10 log-spaced points in `[0.1, 10]`.
pub fn fig3_a_values() -> Vec<f64> {
    logspace(0.1, 10.0, 10)
}

fn nums(v: impl IntoIterator<Item = f64>) -> Vec<AxisValue> {
    v.into_iter().map(AxisValue::Num).collect()
}

/// Built-in experiment settings, one per reference plot.
pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let base = |delta: f64, n: usize, lambda: f64, a: BoxBound| ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        mode: Mode::Sweep,
        params: ParamsConfig { n, delta, lambda, a, l: None, sigma2: 0.09, rho: 1.0 },
        snr_tx_db: None,
        sweep: None,
        trials: 1,
        base_seed: 1,
        simulate: false,
        lambda_grid: None,
        a_grid: None,
        output: OutputSpec::default(),
    };
    let cfg = match name {
        // Per-antenna power of the box precoder against ρ.
        "fig1" => ExperimentConfig {
            sweep: Some(SweepSpec {
                axes: vec![
                    Axis { param: SweepParam::A, values: nums([0.5, 1.0, 2.0]) },
                    Axis { param: SweepParam::Rho, values: nums(logspace(1e-2, 1e2, 13)) },
                ],
                tune: Tune::None,
            }),
            trials: 10,
            simulate: true,
            ..base(0.2, 800, 0.1, BoxBound::Finite(1.0))
        },
        // Box precoder at 5 dB transmit SNR against noise variance.
        "fig2" => ExperimentConfig {
            snr_tx_db: Some(5.0),
            sweep: Some(SweepSpec {
                axes: vec![
                    Axis { param: SweepParam::A, values: nums([1.0, 1.5, 2.0]) },
                    Axis { param: SweepParam::Sigma2, values: nums(logspace(1e-2, 0.3, 8)) },
                ],
                tune: Tune::Box,
            }),
            ..base(0.2, 1000, 0.1, BoxBound::Finite(1.0))
        },
        // Quantized precoder against A.
        "fig3" => ExperimentConfig {
            snr_tx_db: Some(5.0),
            sweep: Some(SweepSpec {
                axes: vec![Axis { param: SweepParam::A, values: nums(fig3_a_values()) }],
                tune: Tune::None,
            }),
            trials: 50,
            simulate: true,
            ..base(0.2, 1000, FIG3_LAMBDA, BoxBound::Finite(1.0))
        },
        // Box against quantized precoder over transmit SNR, both tuned.
        "fig4-left" | "fig4-right" => {
            let delta = if name == "fig4-left" { 0.15 } else { 0.2 };
            ExperimentConfig {
                snr_tx_db: Some(5.0),
                sweep: Some(SweepSpec {
                    axes: vec![Axis {
                        param: SweepParam::SnrTxDb,
                        values: nums([0.0, 2.5, 5.0, 7.5, 10.0, 12.5, 15.0]),
                    }],
                    tune: Tune::Both,
                }),
                trials: 50,
                simulate: true,
                ..base(delta, 800, 0.1, BoxBound::Finite(2.0))
            }
        }
        _ => return None,
    };
    Some(cfg)
}
