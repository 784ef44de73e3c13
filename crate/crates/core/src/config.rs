//! TOML run configuration and built-in profiles.
//!
//! ```toml
//! [env]
//! lead_time = 2
//! lifetime = 3
//!
//! [costs]
//! unit_order = 0.0
//! holding = 1.0
//! lost_sales = 10.0
//! expiration = 2.0
//!
//! [demand]
//! source = "lifecycle"
//! horizon = 60
//! peak = 10.0
//! phases = [0.3, 0.4, 0.3]
//! noise = "worst_case"
//! level = 0.15
//!
//! [[policies]]
//! kind = "out"
//! s = 4.0
//! ```
//!
//! Cost rates are the quoted (untransformed) ones. Relative forecast paths
//! resolve against the config file's directory.

use crate::bounds::{search_interval, BoundContext, PolicyKind};
use crate::bridge::BridgeOptions;
use crate::demand::{
    lifecycle_forecast, load_forecast, DemandScenario, LifecycleConfig, NoiseKind, NoiseModel,
};
use crate::env::{CostRates, EnvParams, InventorySystem, RawCosts};
use crate::evaluator::EvalConfig;
use crate::policies::PolicySpec;
use crate::Error;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    pub lead_time: usize,
    pub lifetime: usize,
    #[serde(default = "one")]
    pub batch_size: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_batches: Option<u32>,
    #[serde(default)]
    pub yield_loss_max: f64,
    /// Cost of ordering `n` batches is `batch_costs[n]`; empty means free.
    #[serde(default)]
    pub batch_costs: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ForecastSource {
    Lifecycle(LifecycleConfig),
    File { path: PathBuf },
    Constant { horizon: usize, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandSection {
    #[serde(flatten)]
    pub forecast: ForecastSource,
    pub noise: NoiseKind,
    #[serde(default)]
    pub level: f64,
    /// Per-period standard deviations when `noise = "custom"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    /// Round realized demand to whole units.
    #[serde(default)]
    pub integer: bool,
}

/// Which single sigma feeds the bounds when the noise is not stationary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundSigma {
    #[default]
    Max,
    Rms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    /// Integers added on each side of the bound argmins.
    pub margin: i64,
    pub bound_sigma: BoundSigma,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_interval: Option<(i64, i64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pil_interval: Option<(i64, i64)>,
}

impl Default for SearchSection {
    fn default() -> Self {
        SearchSection {
            margin: 2,
            bound_sigma: BoundSigma::Max,
            out_interval: None,
            pil_interval: None,
        }
    }
}

/// Axes of an experiment grid. Missing axes keep the base value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub noise: Vec<NoiseKind>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub lead_time: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub yield_loss_max: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub lifetime: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub expiration: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub lost_sales: Vec<f64>,
}

/// One point of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub noise: NoiseKind,
    pub lead_time: usize,
    pub yield_loss_max: f64,
    pub lifetime: usize,
    pub expiration: f64,
    pub lost_sales: f64,
}

impl Cell {
    /// File-name safe identifier.
    pub fn id(&self) -> String {
        format!(
            "{}_L{}_z{}_m{}_w{}_b{}",
            noise_name(self.noise),
            self.lead_time,
            self.yield_loss_max,
            self.lifetime,
            self.expiration,
            self.lost_sales
        )
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

pub fn noise_name(kind: NoiseKind) -> &'static str {
    match kind {
        NoiseKind::WorstCase => "worst_case",
        NoiseKind::Balanced => "balanced",
        NoiseKind::Custom => "custom",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub env: EnvSection,
    pub costs: RawCosts,
    pub demand: DemandSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub policies: Vec<PolicySpec>,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub bridge: BridgeOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
}

/// A config turned into simulation objects.
#[derive(Debug, Clone)]
pub struct Built {
    pub system: InventorySystem,
    pub scenario: DemandScenario,
}

const PROFILES: &[(&str, &str)] = &[
    ("bms-base", include_str!("../profiles/bms-base.toml")),
    ("scenario1-worst", include_str!("../profiles/scenario1-worst.toml")),
    ("scenario1-balanced", include_str!("../profiles/scenario1-balanced.toml")),
    ("scenario2", include_str!("../profiles/scenario2.toml")),
];

pub fn profile_names() -> Vec<&'static str> {
    PROFILES.iter().map(|(n, _)| *n).collect()
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, Error> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    /// Read a config file; a relative forecast path is resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut cfg = Config::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let ForecastSource::File { path: p } = &mut cfg.demand.forecast {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn profile(name: &str) -> Result<Self, Error> {
        let text = PROFILES
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown profile `{name}` (known: {})",
                    profile_names().join(", ")
                ))
            })?;
        Config::from_toml(text)
    }

    /// Field-level checks that do not need the forecast.
    pub fn validate(&self) -> Result<(), Error> {
        let bad = |field: &str, msg: &str| Err(Error::Config(format!("{field}: {msg}")));
        if self.env.lifetime == 0 {
            return bad("env.lifetime", "must be at least 1");
        }
        if !(self.env.batch_size > 0.0) {
            return bad("env.batch_size", "must be positive");
        }
        if !(0.0..=1.0).contains(&self.env.yield_loss_max) || self.env.yield_loss_max == 1.0 {
            return bad("env.yield_loss_max", "must be in [0, 1)");
        }
        if !(self.demand.level >= 0.0) {
            return bad("demand.level", "must be non-negative");
        }
        if self.demand.noise == NoiseKind::Custom && self.demand.sigma.is_none() {
            return bad("demand.sigma", "required when noise = \"custom\"");
        }
        if self.eval.n_episodes == 0 {
            return bad("eval.n_episodes", "must be positive");
        }
        if self.search.margin < 0 {
            return bad("search.margin", "must be non-negative");
        }
        for (name, iv) in [
            ("search.out_interval", self.search.out_interval),
            ("search.pil_interval", self.search.pil_interval),
        ] {
            if let Some((lo, hi)) = iv {
                if lo > hi {
                    return bad(name, "lower end above upper end");
                }
            }
        }
        if let Some(g) = &self.grid {
            if g.lifetime.contains(&0) {
                return bad("grid.lifetime", "values must be at least 1");
            }
        }
        Ok(())
    }

    pub fn forecast(&self) -> Result<Vec<f64>, Error> {
        Ok(match &self.demand.forecast {
            ForecastSource::Lifecycle(c) => lifecycle_forecast(c)?,
            ForecastSource::File { path } => load_forecast(path)?,
            ForecastSource::Constant { horizon, value } => vec![*value; *horizon],
        })
    }

    pub fn build(&self) -> Result<Built, Error> {
        let forecast = self.forecast()?;
        let noise = match self.demand.noise {
            NoiseKind::Custom => NoiseModel::custom(self.demand.sigma.clone().unwrap_or_default()),
            kind => NoiseModel::from_kind(kind, &forecast, self.demand.level),
        };
        let mut scenario = DemandScenario::new(forecast, noise)?;
        scenario.integer = self.demand.integer;
        let params = EnvParams {
            horizon: scenario.horizon(),
            lead_time: self.env.lead_time,
            lifetime: self.env.lifetime,
            batch_size: self.env.batch_size,
            max_batches: self.env.max_batches,
            yield_loss_max: self.env.yield_loss_max,
            batch_costs: self.env.batch_costs.clone(),
        };
        let system = InventorySystem::new(params, CostRates::new(self.costs)?)?;
        Ok(Built { system, scenario })
    }

    /// Reasons the analytic bounds do not strictly apply to this config.
    pub fn bound_caveats(&self, built: &Built) -> Vec<String> {
        let mut out = Vec::new();
        if built.system.params.batch_costs.iter().any(|&k| k != 0.0) {
            out.push("nonzero fixed batch costs".to_string());
        }
        if built.system.params.yield_loss_max > 0.0 {
            out.push("random yield".to_string());
        }
        let s = &built.scenario.noise.sigma;
        if s.iter().any(|&x| (x - s[0]).abs() > 1e-12) {
            out.push("non-stationary forecast error".to_string());
        }
        out
    }

    pub fn bound_context(&self, built: &Built) -> BoundContext {
        let s = &built.scenario.noise.sigma;
        let sigma = match self.search.bound_sigma {
            BoundSigma::Max => s.iter().cloned().fold(0.0, f64::max),
            BoundSigma::Rms => (s.iter().map(|x| x * x).sum::<f64>() / s.len() as f64).sqrt(),
        };
        let r = built.system.rates.transformed;
        BoundContext {
            lead_time: built.system.params.lead_time,
            lifetime: built.system.params.lifetime,
            horizon: built.system.params.horizon,
            holding: r.holding,
            lost_sales: r.lost_sales,
            expiration: r.expiration,
            sigma,
            forecast: built.scenario.forecast.clone(),
        }
    }

    /// Integer search interval for a tunable family: the configured override
    /// or the bound argmins widened by the margin.
    pub fn interval_for(&self, spec: &PolicySpec, built: &Built) -> Result<(i64, i64), Error> {
        let (kind, fixed) = match spec {
            PolicySpec::Out { .. } => (PolicyKind::Out, self.search.out_interval),
            PolicySpec::Pil { .. } => (PolicyKind::Pil, self.search.pil_interval),
            other => {
                return Err(Error::Config(format!(
                    "policy {} has no tunable parameter",
                    other.label()
                )))
            }
        };
        if let Some(iv) = fixed {
            return Ok(iv);
        }
        Ok(search_interval(kind, &self.bound_context(built), self.search.margin)?)
    }

    pub fn cells(&self) -> Vec<Cell> {
        fn or<T>(v: Vec<T>, d: T) -> Vec<T> {
            if v.is_empty() {
                vec![d]
            } else {
                v
            }
        }
        let g = self.grid.clone().unwrap_or_default();
        let mut out = Vec::new();
        for &noise in &or(g.noise, self.demand.noise) {
            for &lead_time in &or(g.lead_time.clone(), self.env.lead_time) {
                for &yield_loss_max in &or(g.yield_loss_max.clone(), self.env.yield_loss_max) {
                    for &lifetime in &or(g.lifetime.clone(), self.env.lifetime) {
                        for &expiration in &or(g.expiration.clone(), self.costs.expiration) {
                            for &lost_sales in &or(g.lost_sales.clone(), self.costs.lost_sales) {
                                out.push(Cell {
                                    noise,
                                    lead_time,
                                    yield_loss_max,
                                    lifetime,
                                    expiration,
                                    lost_sales,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// The base config with one grid cell's values substituted.
    pub fn for_cell(&self, cell: &Cell) -> Config {
        let mut c = self.clone();
        c.grid = None;
        c.demand.noise = cell.noise;
        c.env.lead_time = cell.lead_time;
        c.env.yield_loss_max = cell.yield_loss_max;
        c.env.lifetime = cell.lifetime;
        c.costs.expiration = cell.expiration;
        c.costs.lost_sales = cell.lost_sales;
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_parse_build_and_round_trip() {
        for name in profile_names() {
            let cfg = Config::profile(name).unwrap();
            cfg.build().unwrap();
            let again = Config::from_toml(&cfg.to_toml()).unwrap();
            assert_eq!(again, cfg, "{name}");
        }
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(Config::profile("scenario1-worst").unwrap().cells().len(), 48);
        assert_eq!(Config::profile("scenario2").unwrap().cells().len(), 120);
        assert_eq!(Config::profile("bms-base").unwrap().cells().len(), 1);
    }

    #[test]
    fn cell_substitution() {
        let cfg = Config::profile("scenario1-worst").unwrap();
        let cells = cfg.cells();
        let c = cfg.for_cell(&cells[5]);
        assert_eq!(c.env.lifetime, cells[5].lifetime);
        assert_eq!(c.costs.lost_sales, cells[5].lost_sales);
        assert!(c.grid.is_none());
        let ids: std::collections::HashSet<_> = cells.iter().map(Cell::id).collect();
        assert_eq!(ids.len(), cells.len());
    }

    #[test]
    fn validation_names_the_field() {
        let mut cfg = Config::profile("bms-base").unwrap();
        cfg.env.batch_size = 0.0;
        let e = cfg.validate().unwrap_err().to_string();
        assert!(e.contains("env.batch_size"), "{e}");
        let text = Config::profile("bms-base").unwrap().to_toml().replace("[env]", "[env]\nbogus = 1");
        assert!(Config::from_toml(&text).is_err());
    }

    #[test]
    fn caveats_and_sigma_rule() {
        let cfg = Config::profile("bms-base").unwrap();
        let built = cfg.build().unwrap();
        let caveats = cfg.bound_caveats(&built);
        assert!(caveats.iter().any(|c| c.contains("fixed batch")));
        assert!(caveats.iter().any(|c| c.contains("non-stationary")));
        let max = cfg.bound_context(&built).sigma;
        let mut rms = cfg.clone();
        rms.search.bound_sigma = BoundSigma::Rms;
        assert!(rms.bound_context(&built).sigma < max);

        let w = Config::profile("scenario1-worst").unwrap();
        let wb = w.for_cell(&w.cells()[0]).build().unwrap();
        assert!(w.for_cell(&w.cells()[0]).bound_caveats(&wb).is_empty());
    }

    #[test]
    fn relative_forecast_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("f.csv"), "t,d\n1,3\n2,4\n3,5\n").unwrap();
        let mut cfg = Config::profile("bms-base").unwrap();
        cfg.demand.forecast = ForecastSource::File {
            path: PathBuf::from("f.csv"),
        };
        cfg.env.lead_time = 1;
        let path = dir.path().join("run.toml");
        std::fs::write(&path, cfg.to_toml()).unwrap();
        let loaded = Config::load(&path).unwrap();
        assert_eq!(loaded.build().unwrap().scenario.forecast, vec![3.0, 4.0, 5.0]);
    }
}
