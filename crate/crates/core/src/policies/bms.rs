//! Planner baseline: an order-up-to target with a service-level safety stock,
//! corrected by a heuristic estimate of stock expiring during the lead time.

use super::{batches_for, check_window, DecisionContext, Order, Policy, PolicyError};
use crate::demand::DemandScenario;
use crate::env::{EnvParams, InventorySystem};
use serde::{Deserialize, Serialize};

/// `Phi^-1(0.99)`.
pub const SERVICE_FACTOR_99: f64 = 2.326_347_874_040_841;

/// Expected-expiry estimate over the first `periods` periods starting now:
/// `O(k) = max(sum(x_1..=x_k) - sum(d_1..=d_k), O(k-1))`, `O(0) = 0`.
/// `stock` is the bucket vector ordered oldest first; `forecast` starts at
/// the current period. Missing entries count as zero.
pub fn bms_expired_estimate(stock: &[f64], forecast: &[f64], periods: usize) -> f64 {
    let (mut cum_x, mut cum_d, mut est) = (0.0, 0.0, 0.0f64);
    for k in 0..periods {
        cum_x += stock.get(k).copied().unwrap_or(0.0);
        cum_d += forecast.get(k).copied().unwrap_or(0.0);
        est = est.max(cum_x - cum_d);
    }
    est
}

/// `k1 * sqrt((L+1) * mse) + k2`.
pub fn bms_safety_stock(mse: f64, k1: f64, k2: f64, lead_time: usize) -> f64 {
    k1 * ((lead_time + 1) as f64 * mse.max(0.0)).sqrt() + k2
}

/// `q = (s_tilde + sum(d_t..=d_{t+L}) - (position - expired_estimate))^+`.
pub fn bms_order(
    position: f64,
    expired_estimate: f64,
    t: usize,
    s_tilde: f64,
    window: &[f64],
    params: &EnvParams,
) -> Result<Order, PolicyError> {
    check_window(t, window, params)?;
    let target = s_tilde + window[..=params.lead_time].iter().sum::<f64>();
    let q = target - (position - expired_estimate);
    Ok(batches_for(q.max(0.0), t, params))
}

/// Source of the mean squared forecast error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MseMode {
    /// Rolling mean of realized squared errors over the window, falling back
    /// to the model variance until the window is full.
    Realized,
    /// Rolling mean of the model variances over the window.
    #[default]
    Expected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BmsMode {
    /// Plan once on the forecast and replay the plan.
    #[default]
    StaticReplay,
    /// Apply the rule each period on the realized state.
    Formula,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BmsConfig {
    pub k1: f64,
    pub k2: f64,
    pub window: usize,
    pub mode: BmsMode,
    pub mse: MseMode,
}

impl Default for BmsConfig {
    fn default() -> Self {
        BmsConfig {
            k1: SERVICE_FACTOR_99,
            k2: 0.0,
            window: 12,
            mode: BmsMode::StaticReplay,
            mse: MseMode::Expected,
        }
    }
}

impl BmsConfig {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if !(self.k1 >= 0.0) || !self.k2.is_finite() {
            return Err(PolicyError::InvalidParameter(format!(
                "k1 = {}, k2 = {}",
                self.k1, self.k2
            )));
        }
        if self.window == 0 {
            return Err(PolicyError::InvalidParameter("window must be at least 1".into()));
        }
        Ok(())
    }
}

/// Mean squared forecast error used at period `t`.
pub fn bms_mse(
    mode: MseMode,
    window: usize,
    t: usize,
    scenario: &DemandScenario,
    observed_demand: &[f64],
) -> f64 {
    let from = t.saturating_sub(window).max(1);
    match mode {
        MseMode::Realized => {
            if t <= window || observed_demand.len() < t - 1 {
                return scenario.sigma_at(t).powi(2);
            }
            (from..t)
                .map(|j| (observed_demand[j - 1] - scenario.forecast_at(j)).powi(2))
                .sum::<f64>()
                / window as f64
        }
        MseMode::Expected => {
            if t <= 1 {
                return scenario.sigma_at(t).powi(2);
            }
            (from..t).map(|j| scenario.sigma_at(j).powi(2)).sum::<f64>() / (t - from) as f64
        }
    }
}

fn formula_decision(cfg: &BmsConfig, ctx: &DecisionContext<'_>) -> Result<Order, PolicyError> {
    let t = ctx.t();
    let p = ctx.params();
    if !p.ordering_allowed(t) {
        return Ok(Order::NONE);
    }
    let window = ctx.forecast_window();
    let mse = bms_mse(cfg.mse, cfg.window, t, ctx.scenario, ctx.observed_demand);
    let s_tilde = bms_safety_stock(mse, cfg.k1, cfg.k2, p.lead_time);
    let est = bms_expired_estimate(&ctx.state.buckets, &window, p.lead_time);
    bms_order(ctx.state.position(), est, t, s_tilde, &window, p)
}

/// Run the rule once on the forecast itself, with yield at its mean, and
/// record the batches ordered each period.
pub fn bms_precompute_static_plan(
    cfg: &BmsConfig,
    system: &InventorySystem,
    scenario: &DemandScenario,
) -> Result<Vec<u32>, PolicyError> {
    cfg.validate()?;
    let p = &system.params;
    let y = p.mean_yield();
    let mut state = system.initial_state();
    let mut plan = Vec::with_capacity(p.horizon);
    let forecast: Vec<f64> = (1..=p.horizon).map(|t| scenario.forecast_at(t)).collect();
    for t in 1..=p.horizon {
        let ctx = DecisionContext {
            system,
            scenario,
            state: &state,
            observed_demand: &forecast[..t - 1],
            episode_seed: 0,
        };
        let order = formula_decision(cfg, &ctx)?;
        plan.push(order.batches);
        system.step(&mut state, order.batches, forecast[t - 1], y)?;
    }
    Ok(plan)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BmsPolicy {
    pub config: BmsConfig,
    pub plan: Option<Vec<u32>>,
}

impl BmsPolicy {
    pub fn new(
        config: BmsConfig,
        system: &InventorySystem,
        scenario: &DemandScenario,
    ) -> Result<Self, PolicyError> {
        config.validate()?;
        let plan = match config.mode {
            BmsMode::StaticReplay => Some(bms_precompute_static_plan(&config, system, scenario)?),
            BmsMode::Formula => None,
        };
        Ok(BmsPolicy { config, plan })
    }
}

impl Policy for BmsPolicy {
    fn name(&self) -> String {
        match self.config.mode {
            BmsMode::StaticReplay => "BMS(static)".into(),
            BmsMode::Formula => "BMS(formula)".into(),
        }
    }

    fn decide(&self, ctx: &DecisionContext<'_>) -> Result<Order, PolicyError> {
        match &self.plan {
            Some(plan) => {
                let p = ctx.params();
                let n = plan.get(ctx.t() - 1).copied().unwrap_or(0);
                let n = if p.ordering_allowed(ctx.t()) { n } else { 0 };
                Ok(Order {
                    units: n as f64 * p.batch_size,
                    batches: n,
                })
            }
            None => formula_decision(&self.config, ctx),
        }
    }
}
