use super::{DecisionContext, Order, Policy, PolicyError};
use crate::rng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Replays a fixed batch series. Periods past the end of the series order
/// nothing; entries are clamped to the batch cap and zeroed after the cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayPolicy {
    pub actions: Vec<u32>,
}

impl ReplayPolicy {
    pub fn new(actions: Vec<u32>) -> Self {
        ReplayPolicy { actions }
    }
}

impl Policy for ReplayPolicy {
    fn name(&self) -> String {
        "REPLAY".into()
    }

    fn decide(&self, ctx: &DecisionContext<'_>) -> Result<Order, PolicyError> {
        let t = ctx.t();
        let p = ctx.params();
        if !p.ordering_allowed(t) {
            return Ok(Order::NONE);
        }
        let n = p.clamp_batches(self.actions.get(t - 1).copied().unwrap_or(0));
        Ok(Order {
            units: n as f64 * p.batch_size,
            batches: n,
        })
    }
}

/// Uniform batch count on `0..=cap`, where the cap is the environment's own
/// batch limit when it has one.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomPolicy {
    pub cap: u32,
}

impl RandomPolicy {
    pub fn new(cap: u32) -> Self {
        RandomPolicy { cap }
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> String {
        "RANDOM".into()
    }

    fn decide(&self, ctx: &DecisionContext<'_>) -> Result<Order, PolicyError> {
        let t = ctx.t();
        let p = ctx.params();
        if !p.ordering_allowed(t) {
            return Ok(Order::NONE);
        }
        let cap = p.max_batches.unwrap_or(self.cap);
        let seed = rng::derive(rng::derive(ctx.episode_seed, rng::tag::RANDOM_POLICY), t as u64);
        let n = ChaCha8Rng::seed_from_u64(seed).random_range(0..=cap);
        Ok(Order {
            units: n as f64 * p.batch_size,
            batches: n,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;

    #[test]
    fn replay_clamps_and_cuts_off() {
        let sys = system(2, 3, 20.0, Some(2));
        let sc = flat(1.0, 0.0, 12);
        let policy = ReplayPolicy::new(vec![5, 1, 0, 0, 0, 0, 0, 0, 0, 0, 3, 3]);
        let decide = |t: usize| {
            let st = state(t, &[0.0; 4]);
            let ctx = DecisionContext {
                system: &sys,
                scenario: &sc,
                state: &st,
                observed_demand: &[],
                episode_seed: 0,
            };
            policy.decide(&ctx).unwrap().batches
        };
        assert_eq!(decide(1), 2);
        assert_eq!(decide(2), 1);
        assert_eq!(decide(11), 0);
    }

    #[test]
    fn random_stays_in_range_and_repeats_per_seed() {
        let sys = system(2, 3, 20.0, Some(4));
        let sc = flat(1.0, 0.0, 12);
        let policy = RandomPolicy::new(100);
        let st = state(3, &[0.0; 4]);
        let mut seen = [false; 5];
        for seed in 0..200 {
            let ctx = DecisionContext {
                system: &sys,
                scenario: &sc,
                state: &st,
                observed_demand: &[],
                episode_seed: seed,
            };
            let a = policy.decide(&ctx).unwrap().batches;
            assert_eq!(a, policy.decide(&ctx).unwrap().batches);
            seen[a as usize] = true;
        }
        assert!(seen.iter().all(|s| *s));
    }
}
