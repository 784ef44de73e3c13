use super::{batches_for, check_window, DecisionContext, Order, Policy, PolicyError};
use crate::env::EnvParams;

/// Order-up-to: `q = (s + sum(d_t..=d_{t+L}) - position)^+`.
pub fn out_order(
    position: f64,
    t: usize,
    s: f64,
    window: &[f64],
    params: &EnvParams,
) -> Result<Order, PolicyError> {
    check_window(t, window, params)?;
    let target = s + window[..=params.lead_time].iter().sum::<f64>();
    Ok(batches_for((target - position).max(0.0), t, params))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutPolicy {
    pub s: f64,
}

impl OutPolicy {
    pub fn new(s: f64) -> Result<Self, PolicyError> {
        if !s.is_finite() {
            return Err(PolicyError::InvalidParameter(format!("s = {s}")));
        }
        Ok(OutPolicy { s })
    }
}

impl Policy for OutPolicy {
    fn name(&self) -> String {
        format!("OUT(s={})", self.s)
    }

    fn decide(&self, ctx: &DecisionContext<'_>) -> Result<Order, PolicyError> {
        out_order(
            ctx.state.position(),
            ctx.t(),
            self.s,
            &ctx.forecast_window(),
            ctx.params(),
        )
    }
}
