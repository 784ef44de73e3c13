use crate::env::PeriodOutcome;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case", deny_unknown_fields)]
pub enum Request {
    Spec,
    Reset { seed: u64 },
    Step { action: i64 },
    Close,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecResponse {
    pub obs_dim: usize,
    pub action_count: u32,
    pub horizon: usize,
    pub normalized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub t: usize,
    pub demand: f64,
    pub sales: f64,
    pub lost_sales: f64,
    pub expired: f64,
    pub order_batches: u32,
    pub forced_zero: bool,
    pub fixed_order_cost: f64,
    pub holding_cost: f64,
    pub lost_sales_cost: f64,
    pub expiration_cost: f64,
    /// Transformed episode total, present on the final step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episode_cost: Option<f64>,
}

impl StepInfo {
    pub fn from_outcome(o: &PeriodOutcome, forced_zero: bool) -> Self {
        StepInfo {
            t: o.t,
            demand: o.demand,
            sales: o.sales,
            lost_sales: o.lost_sales,
            expired: o.expired,
            order_batches: o.order_batches,
            forced_zero,
            fixed_order_cost: o.transformed.fixed_order,
            holding_cost: o.transformed.holding,
            lost_sales_cost: o.transformed.lost_sales,
            expiration_cost: o.transformed.expiration,
            episode_cost: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Response {
    Spec(SpecResponse),
    Step {
        obs: Vec<f64>,
        reward: f64,
        done: bool,
        info: StepInfo,
    },
    Reset {
        obs: Vec<f64>,
        t: usize,
    },
    Error {
        error: String,
    },
}

impl Response {
    pub fn error(msg: impl Into<String>) -> Self {
        Response::Error { error: msg.into() }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("responses always serialize")
    }
}
