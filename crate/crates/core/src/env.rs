//! Periodic-review perishable inventory system.
//!
//! State layout: `buckets` has `m + L - 1` entries. With 1-based bucket
//! numbers, buckets `1..m-1` hold on-hand stock by remaining lifetime,
//! bucket `m` holds the order arriving in the current period (nominal,
//! before yield loss) and buckets `m+1..m+L-1` hold the rest of the
//! pipeline, ordered by arrival distance. With `L = 0` there is no
//! pipeline and the order placed in a period arrives in that same period.
//!
//! One period runs these events in order:
//!
//! 1. the order placed `L` periods ago arrives, scaled by the yield draw, and
//!    joins on-hand stock with lifetime `m`;
//! 2. the new order is placed and its fixed and unit costs are charged;
//! 3. demand is served oldest-first, the shortfall is lost;
//! 4. leftover lifetime-1 stock expires, holding is charged on everything
//!    left after demand, and all buckets shift down one slot.
//!
//! Two accountings are kept side by side. The raw one charges the unit
//! ordering cost and credits terminal salvage; the transformed one folds the
//! unit cost into the lost-sales and expiration rates. Lost sales in the
//! first `L` periods are recorded but not charged in either accounting: the
//! system starts empty and nothing ordered can arrive before period `L + 1`.
//! Under these rules, and without yield loss, every sample path satisfies
//! `raw_total = transformed_total + c_hat * sum(D_t, t = L+1..T)`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("lost-sales cost {b_hat} is below the unit ordering cost {c_hat}")]
    PenaltyBelowUnitCost { b_hat: f64, c_hat: f64 },
    #[error("order of {units} units exceeds the cap of {cap} units")]
    OrderTooLarge { units: f64, cap: f64 },
    #[error("order of {batches} batches exceeds the cap of {max} batches")]
    TooManyBatches { batches: u32, max: u32 },
    #[error("period {t}: orders are not allowed after period {cutoff}")]
    OrderAfterCutoff { t: usize, cutoff: usize },
    #[error("negative demand {0}")]
    NegativeDemand(f64),
    #[error("yield {0} outside [1 - yield_max, 1]")]
    InvalidYield(f64),
    #[error("malformed state: {0}")]
    MalformedState(String),
    #[error("episode finished at period {0}")]
    EpisodeOver(usize),
    #[error("episode not finished: state is at period {t}, horizon is {horizon}")]
    EpisodeNotFinished { t: usize, horizon: usize },
}

/// Environment constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvParams {
    /// Episode horizon `T` in periods.
    pub horizon: usize,
    /// Lead time `L` in periods.
    pub lead_time: usize,
    /// Product lifetime `m` in periods.
    pub lifetime: usize,
    /// Batch size `Q` in units.
    pub batch_size: f64,
    /// Maximum batches per order; `None` means unbounded.
    pub max_batches: Option<u32>,
    /// Maximum fractional production loss `z_hat`, in `[0, 1)`.
    pub yield_loss_max: f64,
    /// Fixed ordering cost indexed by batch count. Counts past the end of the
    /// table use its last entry. An empty table means no fixed cost.
    pub batch_costs: Vec<f64>,
}

impl EnvParams {
    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |msg: String| Err(EnvError::InvalidParams(msg));
        if self.lifetime == 0 {
            return bad("lifetime must be at least 1".into());
        }
        if self.horizon <= self.lead_time {
            return bad(format!(
                "horizon {} must exceed lead time {}",
                self.horizon, self.lead_time
            ));
        }
        if !(self.batch_size.is_finite() && self.batch_size > 0.0) {
            return bad(format!("batch size {} must be positive", self.batch_size));
        }
        if !(0.0..1.0).contains(&self.yield_loss_max) {
            return bad(format!(
                "yield_loss_max {} must lie in [0, 1)",
                self.yield_loss_max
            ));
        }
        if let Some(&first) = self.batch_costs.first() {
            if first != 0.0 {
                return bad("batch cost for zero batches must be 0".into());
            }
        }
        if self
            .batch_costs
            .windows(2)
            .any(|w| !(w[1] >= w[0]) || !w[1].is_finite())
        {
            return bad("batch costs must be finite and non-decreasing".into());
        }
        if let Some(max) = self.max_batches {
            if !self.batch_costs.is_empty() && self.batch_costs.len() < max as usize + 1 {
                return bad(format!(
                    "batch cost table has {} entries, needs {} for up to {} batches",
                    self.batch_costs.len(),
                    max + 1,
                    max
                ));
            }
        }
        Ok(())
    }

    /// Length of the state vector, `m + L - 1`.
    pub fn state_len(&self) -> usize {
        self.lifetime + self.lead_time - 1
    }

    /// Last period in which an order may be placed.
    pub fn order_cutoff(&self) -> usize {
        self.horizon - self.lead_time
    }

    pub fn ordering_allowed(&self, t: usize) -> bool {
        t <= self.order_cutoff()
    }

    pub fn mean_yield(&self) -> f64 {
        1.0 - self.yield_loss_max / 2.0
    }

    /// Fixed cost `K` of an order of `n` batches.
    pub fn batch_cost(&self, n: u32) -> f64 {
        match self.batch_costs.len() {
            0 => 0.0,
            len => self.batch_costs[(n as usize).min(len - 1)],
        }
    }

    /// Fixed cost of an order of `units`, charged per `ceil(units / Q)`
    /// batches.
    pub fn batch_order_cost(&self, units: f64) -> Result<f64, EnvError> {
        if !(units >= 0.0) {
            return Err(EnvError::InvalidParams(format!("negative order {units}")));
        }
        let n = units_to_batches(units, self.batch_size);
        if let Some(max) = self.max_batches {
            if n > max {
                return Err(EnvError::OrderTooLarge {
                    units,
                    cap: max as f64 * self.batch_size,
                });
            }
        }
        Ok(self.batch_cost(n))
    }

    /// Clamp a batch count to the cap.
    pub fn clamp_batches(&self, n: u32) -> u32 {
        match self.max_batches {
            Some(max) => n.min(max),
            None => n,
        }
    }
}

/// `ceil(units / Q)`, tolerant of floating-point noise in `units`.
pub fn units_to_batches(units: f64, batch_size: f64) -> u32 {
    if units <= 0.0 {
        return 0;
    }
    let n = (units / batch_size - EPS).ceil();
    if n >= u32::MAX as f64 {
        u32::MAX
    } else {
        n.max(0.0) as u32
    }
}

/// Cost rates as quoted, including the unit ordering cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawCosts {
    pub unit_order: f64,
    pub holding: f64,
    pub lost_sales: f64,
    pub expiration: f64,
}

/// Rates with the unit ordering cost folded into lost sales and expiration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformedCosts {
    pub holding: f64,
    pub lost_sales: f64,
    pub expiration: f64,
}

/// `h = h_hat`, `b = b_hat - c_hat`, `w = w_hat + c_hat`. A zero `b` is
/// accepted; a negative one is not.
pub fn transform_costs(raw: &RawCosts) -> Result<TransformedCosts, EnvError> {
    if raw.lost_sales < raw.unit_order {
        return Err(EnvError::PenaltyBelowUnitCost {
            b_hat: raw.lost_sales,
            c_hat: raw.unit_order,
        });
    }
    Ok(TransformedCosts {
        holding: raw.holding,
        lost_sales: raw.lost_sales - raw.unit_order,
        expiration: raw.expiration + raw.unit_order,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostRates {
    pub raw: RawCosts,
    pub transformed: TransformedCosts,
}

impl CostRates {
    pub fn new(raw: RawCosts) -> Result<Self, EnvError> {
        if [raw.unit_order, raw.holding, raw.lost_sales, raw.expiration]
            .iter()
            .any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(EnvError::InvalidParams(format!(
                "cost rates must be finite and non-negative: {raw:?}"
            )));
        }
        Ok(CostRates {
            raw,
            transformed: transform_costs(&raw)?,
        })
    }
}

/// Yield factor for a uniform draw `u` in `[0, 1]`: `1 - u * yield_max`.
pub fn yield_from_uniform(u: f64, yield_loss_max: f64) -> f64 {
    1.0 - u * yield_loss_max
}

pub fn draw_yield<R: Rng + ?Sized>(rng: &mut R, yield_loss_max: f64) -> f64 {
    if yield_loss_max == 0.0 {
        return 1.0;
    }
    yield_from_uniform(rng.random::<f64>(), yield_loss_max)
}

/// Inventory and pipeline at the start of period `t`, before the arrival.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InventoryState {
    pub t: usize,
    pub buckets: Vec<f64>,
}

impl InventoryState {
    /// Empty system at period 1.
    pub fn empty(params: &EnvParams) -> Self {
        InventoryState {
            t: 1,
            buckets: vec![0.0; params.state_len()],
        }
    }

    pub fn validate(&self, params: &EnvParams) -> Result<(), EnvError> {
        if self.buckets.len() != params.state_len() {
            return Err(EnvError::MalformedState(format!(
                "expected {} buckets, found {}",
                params.state_len(),
                self.buckets.len()
            )));
        }
        if let Some(b) = self.buckets.iter().find(|b| !(**b >= 0.0) || !b.is_finite()) {
            return Err(EnvError::MalformedState(format!("bucket value {b}")));
        }
        if self.t == 0 {
            return Err(EnvError::MalformedState("periods are numbered from 1".into()));
        }
        Ok(())
    }

    /// On-hand stock by remaining lifetime `1..m-1`.
    pub fn on_hand<'a>(&'a self, params: &EnvParams) -> &'a [f64] {
        &self.buckets[..params.lifetime - 1]
    }

    /// Everything on hand or in transit.
    pub fn position(&self) -> f64 {
        self.buckets.iter().sum()
    }
}

/// Cost of one period, split by cause.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub fixed_order: f64,
    pub unit_order: f64,
    pub holding: f64,
    pub lost_sales: f64,
    pub expiration: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.fixed_order + self.unit_order + self.holding + self.lost_sales + self.expiration
    }

    pub fn add(&mut self, other: &CostBreakdown) {
        self.fixed_order += other.fixed_order;
        self.unit_order += other.unit_order;
        self.holding += other.holding;
        self.lost_sales += other.lost_sales;
        self.expiration += other.expiration;
    }

    pub fn scaled(&self, k: f64) -> CostBreakdown {
        CostBreakdown {
            fixed_order: self.fixed_order * k,
            unit_order: self.unit_order * k,
            holding: self.holding * k,
            lost_sales: self.lost_sales * k,
            expiration: self.expiration * k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodOutcome {
    pub t: usize,
    /// Nominal quantity due this period.
    pub due_units: f64,
    /// Quantity that actually arrived, after yield loss.
    pub arrived_units: f64,
    pub yield_draw: f64,
    pub order_units: f64,
    pub order_batches: u32,
    pub demand: f64,
    pub sales: f64,
    pub lost_sales: f64,
    pub expired: f64,
    /// On-hand stock carried into the next period.
    pub end_on_hand: f64,
    /// Whether lost sales were charged (false during the first `L` periods).
    pub lost_sales_charged: bool,
    pub raw: CostBreakdown,
    pub transformed: CostBreakdown,
}

/// Environment constants plus cost rates; the transition function lives here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InventorySystem {
    pub params: EnvParams,
    pub rates: CostRates,
}

impl InventorySystem {
    pub fn new(params: EnvParams, rates: CostRates) -> Result<Self, EnvError> {
        params.validate()?;
        Ok(InventorySystem { params, rates })
    }

    pub fn initial_state(&self) -> InventoryState {
        InventoryState::empty(&self.params)
    }

    /// Advance `state` by one period with an order of `batches` batches,
    /// realized demand `demand` and yield factor `yield_draw`.
    pub fn step(
        &self,
        state: &mut InventoryState,
        batches: u32,
        demand: f64,
        yield_draw: f64,
    ) -> Result<PeriodOutcome, EnvError> {
        let p = &self.params;
        state.validate(p)?;
        if state.t > p.horizon {
            return Err(EnvError::EpisodeOver(p.horizon));
        }
        if !(demand >= 0.0) || !demand.is_finite() {
            return Err(EnvError::NegativeDemand(demand));
        }
        if !(yield_draw >= 1.0 - p.yield_loss_max - EPS && yield_draw <= 1.0 + EPS) {
            return Err(EnvError::InvalidYield(yield_draw));
        }
        if let Some(max) = p.max_batches {
            if batches > max {
                return Err(EnvError::TooManyBatches { batches, max });
            }
        }
        if batches > 0 && !p.ordering_allowed(state.t) {
            return Err(EnvError::OrderAfterCutoff {
                t: state.t,
                cutoff: p.order_cutoff(),
            });
        }
        Ok(self.step_unchecked(state, batches, demand, yield_draw))
    }

    /// `step` without input validation, for inner simulation loops whose
    /// inputs are valid by construction.
    pub fn step_unchecked(
        &self,
        state: &mut InventoryState,
        batches: u32,
        demand: f64,
        yield_draw: f64,
    ) -> PeriodOutcome {
        let p = &self.params;
        let m = p.lifetime;
        let lead = p.lead_time;
        let order_units = batches as f64 * p.batch_size;
        let t = state.t;

        // 1. arrival
        let due = if lead == 0 { order_units } else { state.buckets[m - 1] };
        let arrived = yield_draw * due;

        // 3. FIFO issue over lifetimes 1..m; lifetime m is the fresh arrival
        let mut remaining = demand;
        for b in &mut state.buckets[..m - 1] {
            let take = b.min(remaining);
            *b -= take;
            remaining -= take;
        }
        let take = arrived.min(remaining);
        let fresh_left = arrived - take;
        remaining -= take;
        let lost = remaining;
        let sales = demand - lost;
        let expired = if m == 1 { fresh_left } else { state.buckets[0] };
        let carried: f64 = state.buckets[..m - 1].iter().sum::<f64>() + fresh_left;

        // 4. shift
        if m >= 2 {
            state.buckets.copy_within(1..m - 1, 0);
            state.buckets[m - 2] = fresh_left;
        }
        if lead > 0 {
            state.buckets.copy_within(m..m + lead - 1, m - 1);
            state.buckets[m + lead - 2] = order_units;
        }
        state.t += 1;

        let charged = t > lead;
        let charged_lost = if charged { lost } else { 0.0 };
        let fixed = p.batch_cost(batches);
        let r = &self.rates.raw;
        let tr = &self.rates.transformed;
        let raw = CostBreakdown {
            fixed_order: fixed,
            unit_order: r.unit_order * order_units,
            holding: r.holding * carried,
            lost_sales: r.lost_sales * charged_lost,
            expiration: r.expiration * expired,
        };
        let transformed = CostBreakdown {
            fixed_order: fixed,
            unit_order: 0.0,
            holding: tr.holding * carried,
            lost_sales: tr.lost_sales * charged_lost,
            expiration: tr.expiration * expired,
        };

        PeriodOutcome {
            t,
            due_units: due,
            arrived_units: arrived,
            yield_draw,
            order_units,
            order_batches: batches,
            demand,
            sales,
            lost_sales: lost,
            expired,
            end_on_hand: carried - expired,
            lost_sales_charged: charged,
            raw,
            transformed,
        }
    }

    /// Close an episode whose state has reached period `T + 1`.
    pub fn finalize(
        &self,
        state: &InventoryState,
        periods: Vec<PeriodOutcome>,
    ) -> Result<EpisodeLedger, EnvError> {
        if state.t != self.params.horizon + 1 {
            return Err(EnvError::EpisodeNotFinished {
                t: state.t,
                horizon: self.params.horizon,
            });
        }
        let m = self.params.lifetime;
        let terminal_on_hand: f64 = state.buckets[..m - 1].iter().sum();
        let salvage = self.rates.raw.unit_order * terminal_on_hand;

        let mut raw = CostBreakdown::default();
        let mut transformed = CostBreakdown::default();
        let mut window_demand = 0.0;
        let mut window_sales = 0.0;
        let mut yield_loss = 0.0;
        for o in &periods {
            raw.add(&o.raw);
            transformed.add(&o.transformed);
            if o.t > self.params.lead_time {
                window_demand += o.demand;
                window_sales += o.sales;
            }
            yield_loss += o.due_units - o.arrived_units;
        }
        let ledger = EpisodeLedger {
            raw_total: raw.total() - salvage,
            transformed_total: transformed.total(),
            raw_breakdown: raw,
            transformed_breakdown: transformed,
            salvage,
            terminal_on_hand,
            window_demand,
            window_sales,
            yield_loss_units: yield_loss,
            periods,
        };
        debug_assert!(
            ledger.cost_identity_gap(self.rates.raw.unit_order).abs()
                <= 1e-6 * ledger.raw_total.abs().max(1.0),
            "raw and transformed accountings disagree"
        );
        Ok(ledger)
    }
}

/// Per-period record of one episode plus its totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLedger {
    pub periods: Vec<PeriodOutcome>,
    /// Raw cost including the salvage credit for terminal stock.
    pub raw_total: f64,
    pub transformed_total: f64,
    pub raw_breakdown: CostBreakdown,
    pub transformed_breakdown: CostBreakdown,
    pub salvage: f64,
    pub terminal_on_hand: f64,
    /// Realized demand over periods `L+1..T`.
    pub window_demand: f64,
    /// Sales over periods `L+1..T`.
    pub window_sales: f64,
    /// Units ordered but lost to yield.
    pub yield_loss_units: f64,
}

impl EpisodeLedger {
    /// `raw - transformed - c_hat * (window demand + yield loss)`. Zero on
    /// every sample path; the yield term vanishes when `z_hat = 0`.
    pub fn cost_identity_gap(&self, unit_order: f64) -> f64 {
        self.raw_total
            - self.transformed_total
            - unit_order * (self.window_demand + self.yield_loss_units)
    }

    /// Fraction of demand in periods `L+1..T` that was served.
    pub fn service_level(&self) -> f64 {
        if self.window_demand > 0.0 {
            self.window_sales / self.window_demand
        } else {
            1.0
        }
    }

    pub fn total_arrived(&self) -> f64 {
        self.periods.iter().map(|o| o.arrived_units).sum()
    }
}
