//! Ordering policies.
//!
//! A policy sees the state at the start of a period (before the arrival
//! event), the demand model and the demand realized so far, and returns a
//! whole number of batches. Policies are immutable; anything random they
//! need is derived from the episode seed carried in the context.

mod bms;
mod out;
mod pil;
mod reference;

pub use bms::{
    bms_expired_estimate, bms_mse, bms_order, bms_precompute_static_plan, bms_safety_stock,
    BmsConfig, BmsMode, BmsPolicy, MseMode, SERVICE_FACTOR_99,
};
pub use out::{out_order, OutPolicy};
pub use pil::{estimate_projected_adjustment, pil_order, Adjustment, PilPolicy};
pub use reference::{RandomPolicy, ReplayPolicy};

use crate::demand::DemandScenario;
use crate::env::{units_to_batches, EnvError, EnvParams, InventoryState, InventorySystem};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("period {t}: forecast window needs {needed} values, got {got}")]
    MissingForecast { t: usize, needed: usize, got: usize },
    #[error("invalid policy parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// Everything a policy may look at when deciding period `t`.
#[derive(Debug, Clone, Copy)]
pub struct DecisionContext<'a> {
    pub system: &'a InventorySystem,
    pub scenario: &'a DemandScenario,
    pub state: &'a InventoryState,
    /// Realized demand of periods `1..t`.
    pub observed_demand: &'a [f64],
    pub episode_seed: u64,
}

impl DecisionContext<'_> {
    pub fn t(&self) -> usize {
        self.state.t
    }

    pub fn params(&self) -> &EnvParams {
        &self.system.params
    }

    /// Forecasts `d_t..=d_{t+L}`.
    pub fn forecast_window(&self) -> Vec<f64> {
        let t = self.t();
        (t..=t + self.params().lead_time)
            .map(|j| self.scenario.forecast_at(j))
            .collect()
    }
}

/// A decision: requested units before batch rounding and batches ordered.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Order {
    pub units: f64,
    pub batches: u32,
}

impl Order {
    pub const NONE: Order = Order {
        units: 0.0,
        batches: 0,
    };
}

pub trait Policy: Send + Sync {
    fn name(&self) -> String;
    fn decide(&self, ctx: &DecisionContext<'_>) -> Result<Order, PolicyError>;
}

/// Round a requested quantity up to whole batches, clamp to the batch cap and
/// zero it once ordering is closed.
pub fn batches_for(q: f64, t: usize, params: &EnvParams) -> Order {
    if !params.ordering_allowed(t) || !(q > 0.0) {
        return Order { units: q.max(0.0), batches: 0 };
    }
    let n = params.clamp_batches(units_to_batches(q, params.batch_size));
    Order { units: q, batches: n }
}

fn check_window(t: usize, window: &[f64], params: &EnvParams) -> Result<(), PolicyError> {
    let needed = params.lead_time + 1;
    if window.len() < needed {
        return Err(PolicyError::MissingForecast {
            t,
            needed,
            got: window.len(),
        });
    }
    Ok(())
}

/// Serializable description of a policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicySpec {
    Out {
        s: f64,
    },
    Pil {
        u: f64,
        #[serde(default = "default_paths")]
        n_paths: usize,
    },
    Bms(BmsConfig),
    Replay {
        actions: Vec<u32>,
    },
    Random {
        /// Largest batch count drawn when the environment has no cap.
        #[serde(default = "default_random_cap")]
        cap: u32,
    },
}

fn default_paths() -> usize {
    2000
}

fn default_random_cap() -> u32 {
    6
}

impl PolicySpec {
    pub fn label(&self) -> &'static str {
        match self {
            PolicySpec::Out { .. } => "OUT",
            PolicySpec::Pil { .. } => "PIL",
            PolicySpec::Bms(_) => "BMS",
            PolicySpec::Replay { .. } => "REPLAY",
            PolicySpec::Random { .. } => "RANDOM",
        }
    }

    /// The tunable parameter, if the family has one.
    pub fn parameter(&self) -> Option<f64> {
        match self {
            PolicySpec::Out { s } => Some(*s),
            PolicySpec::Pil { u, .. } => Some(*u),
            _ => None,
        }
    }

    pub fn with_parameter(&self, value: f64) -> PolicySpec {
        match self {
            PolicySpec::Out { .. } => PolicySpec::Out { s: value },
            PolicySpec::Pil { n_paths, .. } => PolicySpec::Pil {
                u: value,
                n_paths: *n_paths,
            },
            other => other.clone(),
        }
    }

    /// Instantiate against a system and scenario. BMS in static mode runs its
    /// planning episode here.
    pub fn build(
        &self,
        system: &InventorySystem,
        scenario: &DemandScenario,
    ) -> Result<Box<dyn Policy>, PolicyError> {
        Ok(match self {
            PolicySpec::Out { s } => Box::new(OutPolicy::new(*s)?),
            PolicySpec::Pil { u, n_paths } => Box::new(PilPolicy::new(*u, *n_paths)?),
            PolicySpec::Bms(cfg) => Box::new(BmsPolicy::new(cfg.clone(), system, scenario)?),
            PolicySpec::Replay { actions } => Box::new(ReplayPolicy::new(actions.clone())),
            PolicySpec::Random { cap } => Box::new(RandomPolicy::new(*cap)),
        })
    }
}
