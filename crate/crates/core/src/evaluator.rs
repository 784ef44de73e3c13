//! Monte Carlo evaluation and safety-stock search.
//!
//! Episode `i` of an evaluation uses seed `derive(master, i)`; its demand and
//! yield paths are drawn from that seed before the episode starts, so every
//! policy evaluated under the same master seed sees the same paths (common
//! random numbers). Episodes run in parallel when the `parallel` feature is
//! on and the config asks for it; results land in index order and are reduced
//! sequentially, so both paths give identical numbers.

use crate::demand::{sample_demand_path, DemandScenario};
use crate::env::{draw_yield, CostBreakdown, EnvError, EpisodeLedger, InventorySystem};
use crate::policies::{DecisionContext, Policy, PolicyError, PolicySpec};
use crate::rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
    #[error("scenario horizon {scenario} does not match environment horizon {env}")]
    HorizonMismatch { scenario: usize, env: usize },
    #[error("empty search interval [{0}, {1}]")]
    EmptyInterval(i64, i64),
    #[error("reference policy has zero mean cost")]
    ZeroReference,
    #[error("need at least two policies to compare")]
    TooFewPolicies,
    #[error("episode {episode}: {source}")]
    Policy {
        episode: usize,
        #[source]
        source: PolicyError,
    },
    #[error("episode {episode}: {source}")]
    Env {
        episode: usize,
        #[source]
        source: EnvError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub n_episodes: usize,
    pub master_seed: u64,
    /// Share episode seeds across search candidates.
    pub crn: bool,
    pub parallel: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            n_episodes: 2000,
            master_seed: 0,
            crn: true,
            parallel: true,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.n_episodes == 0 {
            return Err(EvalError::InvalidConfig("n_episodes must be at least 1".into()));
        }
        Ok(())
    }
}

/// Demand and yield realizations of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub demand: Vec<f64>,
    pub yields: Vec<f64>,
}

pub fn sample_path(system: &InventorySystem, scenario: &DemandScenario, seed: u64) -> SamplePath {
    let mut yrng = rng::stream(seed, rng::tag::YIELD);
    let zmax = system.params.yield_loss_max;
    SamplePath {
        demand: sample_demand_path(scenario, seed),
        yields: (0..system.params.horizon)
            .map(|_| draw_yield(&mut yrng, zmax))
            .collect(),
    }
}

fn check_horizons(system: &InventorySystem, scenario: &DemandScenario) -> Result<(), EvalError> {
    if scenario.horizon() != system.params.horizon {
        return Err(EvalError::HorizonMismatch {
            scenario: scenario.horizon(),
            env: system.params.horizon,
        });
    }
    Ok(())
}

/// Run `policy` over a given sample path from the empty state.
pub fn run_path(
    system: &InventorySystem,
    scenario: &DemandScenario,
    policy: &dyn Policy,
    path: &SamplePath,
    seed: u64,
) -> Result<EpisodeLedger, EvalError> {
    let episode = 0;
    let mut state = system.initial_state();
    let mut periods = Vec::with_capacity(system.params.horizon);
    for t in 1..=system.params.horizon {
        let ctx = DecisionContext {
            system,
            scenario,
            state: &state,
            observed_demand: &path.demand[..t - 1],
            episode_seed: seed,
        };
        let order = policy
            .decide(&ctx)
            .map_err(|source| EvalError::Policy { episode, source })?;
        let outcome = system
            .step(&mut state, order.batches, path.demand[t - 1], path.yields[t - 1])
            .map_err(|source| EvalError::Env { episode, source })?;
        periods.push(outcome);
    }
    system
        .finalize(&state, periods)
        .map_err(|source| EvalError::Env { episode, source })
}

/// One full episode with paths drawn from `seed`.
pub fn run_episode(
    system: &InventorySystem,
    scenario: &DemandScenario,
    policy: &dyn Policy,
    seed: u64,
) -> Result<EpisodeLedger, EvalError> {
    check_horizons(system, scenario)?;
    run_path(system, scenario, policy, &sample_path(system, scenario, seed), seed)
}

/// Per-episode figures kept after the ledger is dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub index: usize,
    pub seed: u64,
    pub cost: f64,
    pub raw_cost: f64,
    pub breakdown: CostBreakdown,
    pub window_demand: f64,
    pub window_sales: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub policy: String,
    pub n_episodes: usize,
    /// Mean transformed total cost.
    pub mean_cost: f64,
    pub std_cost: f64,
    pub se_cost: f64,
    /// Mean transformed cost components.
    pub breakdown: CostBreakdown,
    /// Served share of all demand in periods `L+1..T`, pooled over episodes.
    pub service_level: f64,
    pub episodes: Vec<EpisodeSummary>,
}

impl EvalResult {
    pub fn from_episodes(policy: String, episodes: Vec<EpisodeSummary>) -> Self {
        let n = episodes.len();
        let nf = n as f64;
        let mean = episodes.iter().map(|e| e.cost).sum::<f64>() / nf;
        let std = if n > 1 {
            (episodes.iter().map(|e| (e.cost - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt()
        } else {
            0.0
        };
        let mut breakdown = CostBreakdown::default();
        for e in &episodes {
            breakdown.add(&e.breakdown);
        }
        let demand: f64 = episodes.iter().map(|e| e.window_demand).sum();
        let sales: f64 = episodes.iter().map(|e| e.window_sales).sum();
        EvalResult {
            policy,
            n_episodes: n,
            mean_cost: mean,
            std_cost: std,
            se_cost: std / nf.sqrt(),
            breakdown: breakdown.scaled(1.0 / nf),
            service_level: if demand > 0.0 { sales / demand } else { 1.0 },
            episodes,
        }
    }
}

fn map_indexed<T, F>(n: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

/// Evaluate a built policy over `cfg.n_episodes` episodes.
pub fn evaluate_policy(
    system: &InventorySystem,
    scenario: &DemandScenario,
    policy: &dyn Policy,
    cfg: &EvalConfig,
) -> Result<EvalResult, EvalError> {
    cfg.validate()?;
    check_horizons(system, scenario)?;
    let outcomes = map_indexed(cfg.n_episodes, cfg.parallel, |i| {
        let seed = rng::episode_seed(cfg.master_seed, i as u64);
        let path = sample_path(system, scenario, seed);
        run_path(system, scenario, policy, &path, seed)
            .map(|l| EpisodeSummary {
                index: i,
                seed,
                cost: l.transformed_total,
                raw_cost: l.raw_total,
                breakdown: l.transformed_breakdown,
                window_demand: l.window_demand,
                window_sales: l.window_sales,
            })
            .map_err(|e| match e {
                EvalError::Policy { source, .. } => EvalError::Policy { episode: i, source },
                EvalError::Env { source, .. } => EvalError::Env { episode: i, source },
                other => other,
            })
    });
    let episodes = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(EvalResult::from_episodes(policy.name(), episodes))
}

pub fn evaluate(
    system: &InventorySystem,
    scenario: &DemandScenario,
    spec: &PolicySpec,
    cfg: &EvalConfig,
) -> Result<EvalResult, EvalError> {
    let policy = spec
        .build(system, scenario)
        .map_err(|source| EvalError::Policy { episode: 0, source })?;
    evaluate_policy(system, scenario, policy.as_ref(), cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub interval: (i64, i64),
    pub candidates: Vec<f64>,
    pub results: Vec<EvalResult>,
    pub best_index: usize,
    pub best_value: f64,
}

impl SearchResult {
    pub fn best(&self) -> &EvalResult {
        &self.results[self.best_index]
    }
}

/// Evaluate every integer parameter in `interval` and keep the cheapest; the
/// smallest parameter wins ties.
pub fn optimize_parameter(
    family: &PolicySpec,
    interval: (i64, i64),
    system: &InventorySystem,
    scenario: &DemandScenario,
    cfg: &EvalConfig,
) -> Result<SearchResult, EvalError> {
    let (lo, hi) = interval;
    if lo > hi {
        return Err(EvalError::EmptyInterval(lo, hi));
    }
    if family.parameter().is_none() {
        return Err(EvalError::InvalidConfig(format!(
            "policy {} has no tunable parameter",
            family.label()
        )));
    }
    let mut candidates = Vec::new();
    let mut results = Vec::new();
    for (k, v) in (lo..=hi).enumerate() {
        let mut c = cfg.clone();
        if !cfg.crn {
            c.master_seed = rng::derive(cfg.master_seed, k as u64);
        }
        let value = v as f64;
        results.push(evaluate(system, scenario, &family.with_parameter(value), &c)?);
        candidates.push(value);
    }
    let mut best_index = 0;
    for (i, r) in results.iter().enumerate() {
        if r.mean_cost < results[best_index].mean_cost {
            best_index = i;
        }
    }
    Ok(SearchResult {
        interval,
        best_value: candidates[best_index],
        candidates,
        results,
        best_index,
    })
}

/// Percentage gap `(C_other - C_ref) / C_ref * 100`.
pub fn percentage_gap(other: f64, reference: f64) -> Result<f64, EvalError> {
    if reference == 0.0 {
        return Err(EvalError::ZeroReference);
    }
    Ok((other - reference) / reference * 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub policy: String,
    pub mean_cost: f64,
    pub se_cost: f64,
    pub gap_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapTable {
    pub reference: String,
    pub rows: Vec<GapRow>,
}

/// Evaluate all policies on the same episodes and report each one's gap to
/// `policies[reference]`.
pub fn compare(
    policies: &[PolicySpec],
    reference: usize,
    system: &InventorySystem,
    scenario: &DemandScenario,
    cfg: &EvalConfig,
) -> Result<GapTable, EvalError> {
    if policies.len() < 2 {
        return Err(EvalError::TooFewPolicies);
    }
    if reference >= policies.len() {
        return Err(EvalError::InvalidConfig(format!(
            "reference index {reference} out of range"
        )));
    }
    let results = policies
        .iter()
        .map(|p| evaluate(system, scenario, p, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    gap_table(&results, reference)
}

pub fn gap_table(results: &[EvalResult], reference: usize) -> Result<GapTable, EvalError> {
    let base = results[reference].mean_cost;
    let rows = results
        .iter()
        .map(|r| {
            Ok(GapRow {
                policy: r.policy.clone(),
                mean_cost: r.mean_cost,
                se_cost: r.se_cost,
                gap_pct: percentage_gap(r.mean_cost, base)?,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(GapTable {
        reference: results[reference].policy.clone(),
        rows,
    })
}
