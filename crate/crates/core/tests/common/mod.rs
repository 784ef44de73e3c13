#![allow(dead_code)]

use perishable::demand::{DemandScenario, NoiseModel};
use perishable::env::{CostBreakdown, CostRates, EnvParams, InventoryState, InventorySystem, RawCosts};
use rand::Rng;

/// A lot of on-hand stock.
#[derive(Debug, Clone, PartialEq)]
pub struct Lot {
    pub life: usize,
    pub qty: f64,
}

/// Independent simulator that tracks lots and outstanding orders as plain
/// lists instead of a shifted bucket array.
#[derive(Debug, Clone)]
pub struct NaiveSim {
    pub m: usize,
    pub lead: usize,
    pub t: usize,
    pub lots: Vec<Lot>,
    /// (arrival period, nominal quantity)
    pub pipeline: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveOutcome {
    pub arrived: f64,
    pub sales: f64,
    pub lost: f64,
    pub expired: f64,
    pub carried: f64,
    pub transformed: CostBreakdown,
    pub raw: CostBreakdown,
}

impl NaiveSim {
    pub fn from_state(state: &InventoryState, m: usize, lead: usize) -> Self {
        let mut lots = Vec::new();
        for i in 0..m - 1 {
            if state.buckets[i] > 0.0 {
                lots.push(Lot {
                    life: i + 1,
                    qty: state.buckets[i],
                });
            }
        }
        let pipeline = (0..lead)
            .map(|k| (state.t + k, state.buckets[m - 1 + k]))
            .collect();
        NaiveSim {
            m,
            lead,
            t: state.t,
            lots,
            pipeline,
        }
    }

    pub fn to_state(&self) -> InventoryState {
        let mut buckets = vec![0.0; self.m + self.lead - 1];
        for lot in &self.lots {
            buckets[lot.life - 1] += lot.qty;
        }
        for &(arrival, qty) in &self.pipeline {
            buckets[self.m - 1 + (arrival - self.t)] += qty;
        }
        InventoryState { t: self.t, buckets }
    }

    pub fn step(
        &mut self,
        batches: u32,
        demand: f64,
        y: f64,
        q: f64,
        batch_cost: f64,
        rates: &CostRates,
    ) -> NaiveOutcome {
        let order = batches as f64 * q;
        self.pipeline.push((self.t + self.lead, order));
        let mut arrived = 0.0;
        let mut keep = Vec::new();
        for &(when, qty) in &self.pipeline {
            if when == self.t {
                arrived += qty * y;
            } else {
                keep.push((when, qty));
            }
        }
        self.pipeline = keep;
        self.lots.push(Lot {
            life: self.m,
            qty: arrived,
        });
        self.lots.sort_by_key(|l| l.life);
        let mut need = demand;
        for lot in &mut self.lots {
            let take = lot.qty.min(need);
            lot.qty -= take;
            need -= take;
        }
        let lost = need;
        let sales = demand - lost;
        let carried: f64 = self.lots.iter().map(|l| l.qty).sum();
        let expired: f64 = self.lots.iter().filter(|l| l.life == 1).map(|l| l.qty).sum();
        self.lots.retain(|l| l.life > 1);
        for lot in &mut self.lots {
            lot.life -= 1;
        }
        self.lots.retain(|l| l.qty > 0.0);
        let charged = if self.t > self.lead { lost } else { 0.0 };
        self.t += 1;
        let r = rates.raw;
        let tr = rates.transformed;
        NaiveOutcome {
            arrived,
            sales,
            lost,
            expired,
            carried,
            raw: CostBreakdown {
                fixed_order: batch_cost,
                unit_order: r.unit_order * order,
                holding: r.holding * carried,
                lost_sales: r.lost_sales * charged,
                expiration: r.expiration * expired,
            },
            transformed: CostBreakdown {
                fixed_order: batch_cost,
                unit_order: 0.0,
                holding: tr.holding * carried,
                lost_sales: tr.lost_sales * charged,
                expiration: tr.expiration * expired,
            },
        }
    }
}

/// A random system and scenario. Quantities are small integers so that
/// floating point sums are exact regardless of summation order.
pub fn random_setup<R: Rng>(
    rng: &mut R,
    m_range: (usize, usize),
    lead_range: (usize, usize),
    unit_order: f64,
    yield_loss_max: f64,
) -> (InventorySystem, DemandScenario) {
    let m = rng.random_range(m_range.0..=m_range.1);
    let lead = rng.random_range(lead_range.0..=lead_range.1);
    let horizon = rng.random_range(lead + 3..=lead + 30);
    let q = [1.0, 2.0, 5.0][rng.random_range(0..3)];
    let (max_batches, batch_costs) = if rng.random_bool(0.5) {
        let n = rng.random_range(1..=6u32);
        let mut k = vec![0.0];
        for _ in 0..n {
            let last = *k.last().unwrap();
            k.push(last + rng.random_range(0..4) as f64);
        }
        (Some(n), k)
    } else {
        (None, vec![])
    };
    let params = EnvParams {
        horizon,
        lead_time: lead,
        lifetime: m,
        batch_size: q,
        max_batches,
        yield_loss_max,
        batch_costs,
    };
    let rates = CostRates::new(RawCosts {
        unit_order,
        holding: rng.random_range(0..3) as f64,
        lost_sales: unit_order + rng.random_range(0..50) as f64,
        expiration: rng.random_range(0..6) as f64,
    })
    .unwrap();
    let forecast: Vec<f64> = (0..horizon).map(|_| rng.random_range(0..20) as f64).collect();
    let level = rng.random_range(0.0..0.5);
    let noise = if rng.random_bool(0.5) {
        NoiseModel::worst_case(&forecast, level)
    } else {
        NoiseModel::balanced(&forecast, level)
    };
    let mut scenario = DemandScenario::new(forecast, noise).unwrap();
    scenario.integer = true;
    (InventorySystem::new(params, rates).unwrap(), scenario)
}

/// Mass balance and oldest-first issuing for one transition.
pub fn check_transition(
    params: &EnvParams,
    before: &InventoryState,
    o: &perishable::env::PeriodOutcome,
    after: &InventoryState,
) -> Result<(), String> {
    let m = params.lifetime;
    let tol = 1e-9 * (1.0 + o.demand + o.arrived_units);
    let on_before: f64 = before.buckets[..m - 1].iter().sum();
    let on_after: f64 = after.buckets[..m - 1].iter().sum();
    let lhs = on_before + o.arrived_units;
    let rhs = o.sales + o.expired + on_after;
    if (lhs - rhs).abs() > tol {
        return Err(format!("mass balance at t={}: {lhs} in vs {rhs} out", o.t));
    }
    if (o.sales + o.lost_sales - o.demand).abs() > tol {
        return Err(format!("sales + lost != demand at t={}", o.t));
    }
    if o.lost_sales > tol && on_after + o.expired > tol {
        return Err(format!("demand lost while stock remained at t={}", o.t));
    }
    // stock by remaining lifetime right after demand, oldest first
    let mut pre: Vec<f64> = before.buckets[..m - 1].to_vec();
    pre.push(o.arrived_units);
    let mut post = vec![o.expired];
    post.extend_from_slice(&after.buckets[..m - 1]);
    for j in 0..m {
        if post[j] < -tol || post[j] > pre[j] + tol {
            return Err(format!("lifetime class {} grew or went negative at t={}", j + 1, o.t));
        }
        let issued = pre[j] - post[j];
        if issued > tol {
            if let Some(i) = (0..j).find(|&i| post[i] > tol) {
                return Err(format!(
                    "issued from lifetime {} while lifetime {} still had stock at t={}",
                    j + 1,
                    i + 1,
                    o.t
                ));
            }
        }
    }
    Ok(())
}
