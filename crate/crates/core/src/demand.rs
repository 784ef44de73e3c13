//! Demand forecasts and noisy demand paths.
//!
//! Realized demand is `D_t = max(0, d_t + sigma_t * N(0, 1))`. The floor at
//! zero biases the mean upward wherever `d_t` is within a few `sigma_t` of 0.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

#[derive(Debug, Error)]
pub enum DemandError {
    #[error("invalid lifecycle: {0}")]
    InvalidLifecycle(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// `line` counts file lines (header is line 1); `row` counts data rows.
    #[error("{path}:{line}: row {row}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        row: usize,
        msg: String,
    },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

/// Shape of a product lifecycle forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifecycleConfig {
    pub horizon: usize,
    /// Demand level during maturity.
    pub peak: f64,
    /// Fractions of the horizon spent in growth, maturity and decline.
    pub phases: [f64; 3],
    /// Steepness of the logistic ramps.
    #[serde(default = "default_steepness")]
    pub steepness: f64,
}

fn default_steepness() -> f64 {
    10.0
}

impl LifecycleConfig {
    pub fn validate(&self) -> Result<(), DemandError> {
        let bad = |m: String| Err(DemandError::InvalidLifecycle(m));
        if self.horizon == 0 {
            return bad("horizon must be positive".into());
        }
        if !(self.peak > 0.0 && self.peak.is_finite()) {
            return bad(format!("peak {} must be positive", self.peak));
        }
        if self.phases.iter().any(|f| !(*f >= 0.0)) {
            return bad(format!("phase fractions {:?} must be non-negative", self.phases));
        }
        if (self.phases.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad(format!("phase fractions {:?} must sum to 1", self.phases));
        }
        if !(self.steepness > 0.0) {
            return bad(format!("steepness {} must be positive", self.steepness));
        }
        Ok(())
    }
}

/// Logistic ramp rescaled to map `[0, 1]` onto `[0, 1]`.
fn ramp(y: f64, k: f64) -> f64 {
    let s = |x: f64| 1.0 / (1.0 + (-x).exp());
    let lo = s(-k / 2.0);
    let hi = s(k / 2.0);
    ((s(k * (y.clamp(0.0, 1.0) - 0.5)) - lo) / (hi - lo)).clamp(0.0, 1.0)
}

/// Growth ramp, plateau at `peak`, mirrored decline. Period `t` is evaluated
/// at the midpoint `(t - 0.5) / T` of its slice of the horizon.
pub fn lifecycle_forecast(cfg: &LifecycleConfig) -> Result<Vec<f64>, DemandError> {
    cfg.validate()?;
    let [growth, maturity, decline] = cfg.phases;
    let n = cfg.horizon as f64;
    let series = (1..=cfg.horizon)
        .map(|t| {
            let x = (t as f64 - 0.5) / n;
            let level = if x < growth {
                ramp(x / growth, cfg.steepness)
            } else if x <= growth + maturity || decline == 0.0 {
                1.0
            } else {
                ramp(1.0 - (x - growth - maturity) / decline, cfg.steepness)
            };
            cfg.peak * level
        })
        .collect();
    Ok(series)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// `sigma_t = level * max_t d_t`.
    WorstCase,
    /// `sigma_t = level * d_t`.
    Balanced,
    /// Explicit per-period series.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub level: f64,
    /// Per-period standard deviation.
    pub sigma: Vec<f64>,
}

impl NoiseModel {
    pub fn worst_case(forecast: &[f64], level: f64) -> Self {
        let peak = forecast.iter().cloned().fold(0.0, f64::max);
        NoiseModel {
            kind: NoiseKind::WorstCase,
            level,
            sigma: vec![level * peak; forecast.len()],
        }
    }

    pub fn balanced(forecast: &[f64], level: f64) -> Self {
        NoiseModel {
            kind: NoiseKind::Balanced,
            level,
            sigma: forecast.iter().map(|d| level * d).collect(),
        }
    }

    pub fn custom(sigma: Vec<f64>) -> Self {
        NoiseModel {
            kind: NoiseKind::Custom,
            level: 0.0,
            sigma,
        }
    }

    pub fn none(horizon: usize) -> Self {
        NoiseModel::custom(vec![0.0; horizon])
    }

    pub fn from_kind(kind: NoiseKind, forecast: &[f64], level: f64) -> Self {
        match kind {
            NoiseKind::WorstCase => Self::worst_case(forecast, level),
            NoiseKind::Balanced => Self::balanced(forecast, level),
            NoiseKind::Custom => Self::custom(vec![level; forecast.len()]),
        }
    }
}

/// Forecast plus noise model over a fixed horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandScenario {
    pub forecast: Vec<f64>,
    pub noise: NoiseModel,
    /// Round realized demand to whole units.
    #[serde(default)]
    pub integer: bool,
}

impl DemandScenario {
    pub fn new(forecast: Vec<f64>, noise: NoiseModel) -> Result<Self, DemandError> {
        let s = DemandScenario {
            forecast,
            noise,
            integer: false,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), DemandError> {
        if self.forecast.is_empty() {
            return Err(DemandError::InvalidScenario("empty forecast".into()));
        }
        if self.noise.sigma.len() != self.forecast.len() {
            return Err(DemandError::InvalidScenario(format!(
                "sigma has {} entries, forecast has {}",
                self.noise.sigma.len(),
                self.forecast.len()
            )));
        }
        if let Some(d) = self.forecast.iter().find(|d| !(**d >= 0.0) || !d.is_finite()) {
            return Err(DemandError::InvalidScenario(format!("forecast value {d}")));
        }
        if let Some(s) = self.noise.sigma.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
            return Err(DemandError::InvalidScenario(format!("sigma value {s}")));
        }
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.forecast.len()
    }

    /// Forecast for 1-based period `t`; zero past the horizon.
    pub fn forecast_at(&self, t: usize) -> f64 {
        if t == 0 {
            return 0.0;
        }
        self.forecast.get(t - 1).copied().unwrap_or(0.0)
    }

    pub fn sigma_at(&self, t: usize) -> f64 {
        if t == 0 {
            return 0.0;
        }
        self.noise.sigma.get(t - 1).copied().unwrap_or(0.0)
    }

    /// Sum of forecasts over periods `from..=to`, zero-padded past the horizon.
    pub fn forecast_sum(&self, from: usize, to: usize) -> f64 {
        (from..=to).map(|t| self.forecast_at(t)).sum()
    }

    /// One demand draw for period `t` given a standard normal variate.
    #[inline]
    pub fn realize(&self, t: usize, z: f64) -> f64 {
        let d = (self.forecast_at(t) + self.sigma_at(t) * z).max(0.0);
        if self.integer {
            d.round()
        } else {
            d
        }
    }

    /// Peak of the forecast.
    pub fn peak(&self) -> f64 {
        self.forecast.iter().cloned().fold(0.0, f64::max)
    }
}

/// Realized demand path for periods `1..=T`, deterministic in `seed`.
pub fn sample_demand_path(scenario: &DemandScenario, seed: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, rng::tag::DEMAND);
    (1..=scenario.horizon())
        .map(|t| {
            let z: f64 = StandardNormal.sample(&mut rng);
            scenario.realize(t, z)
        })
        .collect()
}

/// Read a `t,d` forecast file. Periods must run 1, 2, 3, ... without gaps.
pub fn load_forecast(path: &Path) -> Result<Vec<f64>, DemandError> {
    let text = fs::read_to_string(path).map_err(|source| DemandError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_forecast(&text, path)
}

pub fn parse_forecast(text: &str, path: &Path) -> Result<Vec<f64>, DemandError> {
    let err = |line: usize, msg: String| DemandError::Parse {
        path: path.to_path_buf(),
        line,
        row: line.saturating_sub(1),
        msg,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim().replace(' ', "") == "t,d" => {}
        Some((_, header)) => return Err(err(1, format!("expected header `t,d`, found `{header}`"))),
        None => return Err(err(1, "empty file".into())),
    }
    let mut series = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut fields = raw.split(',');
        let (Some(t), Some(d), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(err(line, format!("expected two fields, found `{raw}`")));
        };
        let t: usize = t
            .trim()
            .parse()
            .map_err(|_| err(line, format!("bad period `{}`", t.trim())))?;
        let d: f64 = d
            .trim()
            .replace('\u{2212}', "-")
            .parse()
            .map_err(|_| err(line, format!("bad demand `{}`", d.trim())))?;
        if t != series.len() + 1 {
            return Err(err(
                line,
                format!("period {t} out of sequence, expected {}", series.len() + 1),
            ));
        }
        if !(d >= 0.0) || !d.is_finite() {
            return Err(err(line, format!("negative or non-finite demand {d}")));
        }
        series.push(d);
    }
    if series.is_empty() {
        return Err(err(1, "no forecast rows".into()));
    }
    Ok(series)
}

pub fn format_forecast(series: &[f64]) -> String {
    let mut out = String::from("t,d\n");
    for (i, d) in series.iter().enumerate() {
        // `{}` on f64 prints the shortest string that parses back exactly
        let _ = writeln!(out, "{},{}", i + 1, d);
    }
    out
}

pub fn save_forecast(path: &Path, series: &[f64]) -> Result<(), DemandError> {
    fs::write(path, format_forecast(series)).map_err(|source| DemandError::Io {
        path: path.to_path_buf(),
        source,
    })
}
