use super::{batches_for, check_window, DecisionContext, Order, Policy, PolicyError};
use crate::demand::DemandScenario;
use crate::env::{draw_yield, EnvParams, InventoryState, InventorySystem};
use crate::rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Expected cumulative expirations and lost sales over the lead time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Adjustment {
    pub expired: f64,
    pub lost: f64,
}

/// Monte Carlo estimate of expirations and lost sales over periods
/// `t..t+L-1` when nothing more is ordered. Each path starts from `state`,
/// receives the pipeline as scheduled and draws demand and yield from the
/// true distributions.
pub fn estimate_projected_adjustment(
    system: &InventorySystem,
    scenario: &DemandScenario,
    state: &InventoryState,
    n_paths: usize,
    seed: u64,
) -> Adjustment {
    let lead = system.params.lead_time;
    if lead == 0 || n_paths == 0 {
        return Adjustment::default();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zmax = system.params.yield_loss_max;
    let mut sim = state.clone();
    let (mut expired, mut lost) = (0.0, 0.0);
    for _ in 0..n_paths {
        sim.t = state.t;
        sim.buckets.copy_from_slice(&state.buckets);
        for _ in 0..lead {
            let z: f64 = StandardNormal.sample(&mut rng);
            let d = scenario.realize(sim.t, z);
            let y = draw_yield(&mut rng, zmax);
            let o = system.step_unchecked(&mut sim, 0, d, y);
            expired += o.expired;
            lost += o.lost_sales;
        }
    }
    let n = n_paths as f64;
    Adjustment {
        expired: expired / n,
        lost: lost / n,
    }
}

/// `q = (u + sum(d_t..=d_{t+L}) - position + E[sum O] - E[sum l])^+`.
pub fn pil_order(
    position: f64,
    t: usize,
    u: f64,
    window: &[f64],
    adjustment: Adjustment,
    params: &EnvParams,
) -> Result<Order, PolicyError> {
    check_window(t, window, params)?;
    let target = u + window[..=params.lead_time].iter().sum::<f64>();
    let q = target - position + adjustment.expired - adjustment.lost;
    Ok(batches_for(q.max(0.0), t, params))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PilPolicy {
    pub u: f64,
    pub n_paths: usize,
}

impl PilPolicy {
    pub fn new(u: f64, n_paths: usize) -> Result<Self, PolicyError> {
        if !u.is_finite() {
            return Err(PolicyError::InvalidParameter(format!("u = {u}")));
        }
        if n_paths == 0 {
            return Err(PolicyError::InvalidParameter("n_paths must be at least 1".into()));
        }
        Ok(PilPolicy { u, n_paths })
    }

    /// Estimator seed for period `t`, shared by every candidate `u`.
    pub fn estimator_seed(episode_seed: u64, t: usize) -> u64 {
        rng::derive(rng::derive(episode_seed, rng::tag::ESTIMATOR), t as u64)
    }
}

impl Policy for PilPolicy {
    fn name(&self) -> String {
        format!("PIL(u={})", self.u)
    }

    fn decide(&self, ctx: &DecisionContext<'_>) -> Result<Order, PolicyError> {
        let t = ctx.t();
        if !ctx.params().ordering_allowed(t) {
            return Ok(Order::NONE);
        }
        let adj = estimate_projected_adjustment(
            ctx.system,
            ctx.scenario,
            ctx.state,
            self.n_paths,
            Self::estimator_seed(ctx.episode_seed, t),
        );
        pil_order(
            ctx.state.position(),
            t,
            self.u,
            &ctx.forecast_window(),
            adj,
            ctx.params(),
        )
    }
}
