//! The environment as an episodic decision process behind a line protocol.
//!
//! Each request and response is one JSON object on one line. Requests:
//! `{"cmd":"spec"}`, `{"cmd":"reset","seed":7}`, `{"cmd":"step","action":2}`,
//! `{"cmd":"close"}`. Errors come back as `{"error":"..."}` and leave the
//! session usable.

mod protocol;
mod server;

pub use protocol::{Request, Response, SpecResponse, StepInfo};
pub use server::{serve_lines, serve_tcp};

use crate::bounds::{out_ub_argmin, pil_ub_argmin, BoundContext};
use crate::demand::DemandScenario;
use crate::env::{EpisodeLedger, InventoryState, InventorySystem, PeriodOutcome};
use crate::evaluator::{sample_path, SamplePath};
use serde::{Deserialize, Serialize};

/// Expected on-hand stock by remaining lifetime at period `t + L`, assuming
/// nothing more is ordered, demand equals the forecast and yield equals
/// `yield_factor`. The last entry is the order that would arrive at `t + L`,
/// which is the order being decided and hence zero.
pub fn project_inventory(
    system: &InventorySystem,
    scenario: &DemandScenario,
    state: &InventoryState,
    yield_factor: f64,
) -> Vec<f64> {
    let m = system.params.lifetime;
    let mut sim = state.clone();
    for _ in 0..system.params.lead_time {
        let d = scenario.forecast_at(sim.t);
        system.step_unchecked(&mut sim, 0, d, yield_factor);
    }
    let mut out = sim.buckets[..m - 1].to_vec();
    out.push(0.0);
    out
}

/// Largest useful batch count when the environment has no cap: enough to
/// cover the largest forecast plus the larger of the two upper-bound
/// safety stocks.
pub fn derive_action_cap(system: &InventorySystem, scenario: &DemandScenario, ctx: &BoundContext) -> u32 {
    let s = out_ub_argmin(ctx).unwrap_or(0.0).max(pil_ub_argmin(ctx).unwrap_or(0.0));
    let units = scenario.peak() + s.max(0.0);
    (units / system.params.batch_size).ceil().max(1.0) as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BridgeOptions {
    /// Divide unit-valued features by the forecast peak.
    pub normalize: bool,
    /// Use the mean yield in projections; otherwise assume full yield.
    pub mean_yield_projection: bool,
}

impl Default for BridgeOptions {
    fn default() -> Self {
        BridgeOptions {
            normalize: false,
            mean_yield_projection: true,
        }
    }
}

struct Episode {
    state: InventoryState,
    path: SamplePath,
    periods: Vec<PeriodOutcome>,
    done: bool,
}

/// One client's view of the environment.
pub struct Session {
    system: InventorySystem,
    scenario: DemandScenario,
    options: BridgeOptions,
    action_cap: u32,
    episode: Option<Episode>,
    ledger: Option<EpisodeLedger>,
}

impl Session {
    pub fn new(
        system: InventorySystem,
        scenario: DemandScenario,
        options: BridgeOptions,
        action_cap: u32,
    ) -> Self {
        let action_cap = system.params.max_batches.unwrap_or(action_cap);
        Session {
            system,
            scenario,
            options,
            action_cap,
            episode: None,
            ledger: None,
        }
    }

    pub fn obs_dim(&self) -> usize {
        let p = &self.system.params;
        p.lifetime + p.lead_time + 2
    }

    pub fn action_count(&self) -> u32 {
        self.action_cap + 1
    }

    /// Ledger of the last finished episode.
    pub fn last_ledger(&self) -> Option<&EpisodeLedger> {
        self.ledger.as_ref()
    }

    fn observation(&self, state: &InventoryState) -> Vec<f64> {
        let p = &self.system.params;
        let y = if self.options.mean_yield_projection {
            p.mean_yield()
        } else {
            1.0
        };
        let mut obs = project_inventory(&self.system, &self.scenario, state, y);
        obs.extend((state.t..=state.t + p.lead_time).map(|j| self.scenario.forecast_at(j)));
        if self.options.normalize {
            let peak = self.scenario.peak();
            if peak > 0.0 {
                obs.iter_mut().for_each(|v| *v /= peak);
            }
        }
        obs.push(state.t as f64 / p.horizon as f64);
        obs
    }

    pub fn spec(&self) -> SpecResponse {
        SpecResponse {
            obs_dim: self.obs_dim(),
            action_count: self.action_count(),
            horizon: self.system.params.horizon,
            normalized: self.options.normalize,
        }
    }

    pub fn reset(&mut self, seed: u64) -> Response {
        let state = self.system.initial_state();
        let obs = self.observation(&state);
        self.episode = Some(Episode {
            state,
            path: sample_path(&self.system, &self.scenario, seed),
            periods: Vec::with_capacity(self.system.params.horizon),
            done: false,
        });
        self.ledger = None;
        Response::Reset { obs, t: 1 }
    }

    pub fn step(&mut self, action: i64) -> Response {
        let cap = self.action_cap;
        let Some(ep) = self.episode.as_mut() else {
            return Response::error("no active episode: send reset first");
        };
        if ep.done {
            return Response::error("episode is done: send reset");
        }
        if action < 0 || action > cap as i64 {
            return Response::error(format!("action out of range: {action} not in 0..={cap}"));
        }
        let t = ep.state.t;
        let forced = action > 0 && !self.system.params.ordering_allowed(t);
        let batches = if forced { 0 } else { action as u32 };
        let outcome = match self.system.step(
            &mut ep.state,
            batches,
            ep.path.demand[t - 1],
            ep.path.yields[t - 1],
        ) {
            Ok(o) => o,
            Err(e) => return Response::error(e.to_string()),
        };
        let cost = outcome.transformed.total();
        let mut info = StepInfo::from_outcome(&outcome, forced);
        ep.periods.push(outcome);
        let done = ep.state.t > self.system.params.horizon;
        ep.done = done;
        let obs = if done {
            vec![0.0; self.obs_dim()]
        } else {
            let state = ep.state.clone();
            self.observation(&state)
        };
        if done {
            let ep = self.episode.as_mut().expect("episode present");
            let periods = std::mem::take(&mut ep.periods);
            match self.system.finalize(&ep.state, periods) {
                Ok(ledger) => {
                    info.episode_cost = Some(ledger.transformed_total);
                    self.ledger = Some(ledger);
                }
                Err(e) => return Response::error(e.to_string()),
            }
        }
        Response::Step {
            obs,
            reward: -cost,
            done,
            info,
        }
    }

    /// Handle one request; `None` means the session should end.
    pub fn handle(&mut self, request: Request) -> Option<Response> {
        match request {
            Request::Spec => Some(Response::Spec(self.spec())),
            Request::Reset { seed } => Some(self.reset(seed)),
            Request::Step { action } => Some(self.step(action)),
            Request::Close => None,
        }
    }

    /// Parse and handle one protocol line.
    pub fn handle_line(&mut self, line: &str) -> Option<Response> {
        match serde_json::from_str::<Request>(line) {
            Ok(req) => self.handle(req),
            Err(e) => Some(Response::error(format!("malformed message: {e}"))),
        }
    }
}
