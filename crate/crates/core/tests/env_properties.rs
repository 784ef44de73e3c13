mod common;

use common::{check_transition, random_setup, NaiveSim};
use perishable::bounds::{normal_excess, normal_loss, std_normal_cdf};
use perishable::demand::{DemandScenario, NoiseModel};
use perishable::env::{CostBreakdown, CostRates, EnvParams, InventoryState, InventorySystem, RawCosts};
use perishable::evaluator::{
    evaluate, run_path, sample_path, EpisodeSummary, EvalConfig, EvalResult, SamplePath,
};
use perishable::policies::{OutPolicy, Policy, PolicySpec, RandomPolicy};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sys(horizon: usize, lead: usize, m: usize, b: f64) -> InventorySystem {
    InventorySystem::new(
        EnvParams {
            horizon,
            lead_time: lead,
            lifetime: m,
            batch_size: 1.0,
            max_batches: None,
            yield_loss_max: 0.0,
            batch_costs: vec![],
        },
        CostRates::new(RawCosts {
            unit_order: 0.0,
            holding: 1.0,
            lost_sales: b,
            expiration: 2.0,
        })
        .unwrap(),
    )
    .unwrap()
}

fn cfg(n: usize, seed: u64) -> EvalConfig {
    EvalConfig {
        n_episodes: n,
        master_seed: seed,
        crn: true,
        parallel: true,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn steps_match_the_naive_simulator(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = if rng.random_bool(0.5) { 0.5 } else { 0.0 };
        let (sys, _) = random_setup(&mut rng, (1, 5), (0, 4), 1.0, z);
        let p = &sys.params;
        let mut state = InventoryState {
            t: 1,
            buckets: (0..p.state_len()).map(|_| rng.random_range(0..10) as f64).collect(),
        };
        let mut naive = NaiveSim::from_state(&state, p.lifetime, p.lead_time);
        while state.t <= p.horizon {
            let n = if p.ordering_allowed(state.t) { rng.random_range(0..=p.max_batches.unwrap_or(5)) } else { 0 };
            let d = rng.random_range(0..25) as f64;
            let y = if z > 0.0 { [1.0, 0.75, 0.5][rng.random_range(0..3)] } else { 1.0 };
            let expect = naive.step(n, d, y, p.batch_size, p.batch_cost(n), &sys.rates);
            let got = sys.step(&mut state, n, d, y).unwrap();
            prop_assert_eq!(&state, &naive.to_state());
            prop_assert_eq!(got.transformed, expect.transformed);
            prop_assert_eq!(got.raw, expect.raw);
            prop_assert_eq!(got.sales, expect.sales);
        }
    }

    #[test]
    fn episodes_conserve_mass_and_issue_oldest_first(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = if rng.random_bool(0.5) { 0.3 } else { 0.0 };
        let (sys, sc) = random_setup(&mut rng, (1, 6), (0, 5), 2.0, z);
        let policy = RandomPolicy::new(6);
        let path = sample_path(&sys, &sc, seed);
        let ledger = run_path(&sys, &sc, &policy, &path, seed).unwrap();
        let mut state = sys.initial_state();
        for o in &ledger.periods {
            let before = state.clone();
            sys.step(&mut state, o.order_batches, o.demand, o.yield_draw).unwrap();
            if let Err(e) = check_transition(&sys.params, &before, o, &state) {
                prop_assert!(false, "{}", e);
            }
        }
        let ordered: f64 = ledger.periods.iter().map(|o| o.order_units).sum();
        let in_pipeline: f64 = state.buckets[sys.params.lifetime - 1..].iter().sum();
        let sold: f64 = ledger.periods.iter().map(|o| o.sales).sum();
        let expired: f64 = ledger.periods.iter().map(|o| o.expired).sum();
        let balance = ordered - ledger.yield_loss_units - in_pipeline - sold - expired - ledger.terminal_on_hand;
        prop_assert!(balance.abs() < 1e-6 * (1.0 + ordered));
    }

    #[test]
    fn raw_and_transformed_costs_differ_by_unit_cost_times_volume(
        seed in any::<u64>(),
        c in prop::sample::select(vec![0.0, 1.0, 2.0, 5.0]),
        z in prop::sample::select(vec![0.0, 0.2]),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (sys, sc) = random_setup(&mut rng, (1, 5), (0, 4), c, z);
        let policy: Box<dyn Policy> = if rng.random_bool(0.5) {
            Box::new(OutPolicy::new(rng.random_range(-3.0..20.0)).unwrap())
        } else {
            Box::new(RandomPolicy::new(4))
        };
        let path = sample_path(&sys, &sc, seed);
        let l = run_path(&sys, &sc, policy.as_ref(), &path, seed).unwrap();
        prop_assert!(l.cost_identity_gap(c).abs() <= 1e-6 * l.raw_total.abs().max(1.0));
        if z == 0.0 {
            let gap = l.raw_total - l.transformed_total - c * l.window_demand;
            prop_assert!(gap.abs() <= 1e-6 * l.raw_total.abs().max(1.0));
        }
    }
}

fn rounded(d: f64, sigma: f64) -> Vec<(f64, f64)> {
    let lo = (d - 8.0 * sigma).floor().max(0.0) as i64;
    let hi = (d + 8.0 * sigma).ceil() as i64;
    (lo..=hi)
        .map(|k| {
            let k = k as f64;
            let lower = if k == 0.0 { 0.0 } else { std_normal_cdf((k - 0.5 - d) / sigma) };
            (k, std_normal_cdf((k + 0.5 - d) / sigma) - lower)
        })
        .collect()
}

/// Expected three-period cost of OUT by enumerating every demand path.
#[test]
fn episode_costs_match_path_enumeration() {
    let system = sys(3, 1, 2, 10.0);
    let f = vec![3.0, 5.0, 2.0];
    let sigma = 1.0;
    let mut sc = DemandScenario::new(f.clone(), NoiseModel::custom(vec![sigma; 3])).unwrap();
    sc.integer = true;
    let policy = OutPolicy::new(1.0).unwrap();
    let (mut mean, mut sq) = (0.0, 0.0);
    for (a, pa) in rounded(f[0], sigma) {
        for (b, pb) in rounded(f[1], sigma) {
            for (c, pc) in rounded(f[2], sigma) {
                let path = SamplePath {
                    demand: vec![a, b, c],
                    yields: vec![1.0; 3],
                };
                let cost = run_path(&system, &sc, &policy, &path, 0).unwrap().transformed_total;
                let p = pa * pb * pc;
                mean += p * cost;
                sq += p * cost * cost;
            }
        }
    }
    let n = 20_000;
    let r = evaluate(&system, &sc, &PolicySpec::Out { s: 1.0 }, &cfg(n, 3)).unwrap();
    let se = ((sq - mean * mean) / n as f64).sqrt();
    assert!((r.mean_cost - mean).abs() < 3.0 * se, "{} vs {mean} ± {se}", r.mean_cost);
}

/// One period, no lead time, no expiry: the classic newsvendor cost.
#[test]
fn single_period_cost_is_the_newsvendor_cost() {
    let system = sys(1, 0, 5, 9.0);
    let sigma = 4.0;
    let sc = DemandScenario::new(vec![100.0], NoiseModel::custom(vec![sigma])).unwrap();
    for s in [-3.0, 0.0, 2.0, 6.0] {
        let r = evaluate(&system, &sc, &PolicySpec::Out { s }, &cfg(20_000, 1)).unwrap();
        let expect = normal_loss(s, sigma) + 9.0 * normal_excess(s, sigma);
        assert!((r.mean_cost - expect).abs() < 3.0 * r.se_cost, "s={s}: {} vs {expect}", r.mean_cost);
    }
}

/// Decisions of OUT do not depend on `b`, so under common random numbers
/// every episode costs at least as much when `b` goes up.
#[test]
fn costs_are_pathwise_monotone_in_lost_sales_cost() {
    let f: Vec<f64> = (0..30).map(|t| 5.0 + (t % 7) as f64).collect();
    let sc = DemandScenario::new(f.clone(), NoiseModel::worst_case(&f, 0.2)).unwrap();
    let mut prev: Option<EvalResult> = None;
    let mut prev_best = f64::NEG_INFINITY;
    for b in [1.0, 10.0, 50.0, 100.0, 1000.0] {
        let system = sys(30, 2, 3, b);
        let r = evaluate(&system, &sc, &PolicySpec::Out { s: 2.0 }, &cfg(300, 4)).unwrap();
        if let Some(p) = &prev {
            for (x, y) in p.episodes.iter().zip(&r.episodes) {
                assert!(y.cost >= x.cost, "b={b} ep {}: {} < {} {:?} {:?}", x.index, y.cost, x.cost, x.breakdown, y.breakdown);
            }
        }
        let best = (-2..=12)
            .map(|s| {
                evaluate(&system, &sc, &PolicySpec::Out { s: s as f64 }, &cfg(300, 4))
                    .unwrap()
                    .mean_cost
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best >= prev_best);
        prev_best = best;
        prev = Some(r);
    }
}

#[test]
fn spread_of_two_episodes() {
    let ep = |i: usize, cost: f64| EpisodeSummary {
        index: i,
        seed: i as u64,
        cost,
        raw_cost: cost,
        breakdown: CostBreakdown::default(),
        window_demand: 1.0,
        window_sales: 1.0,
    };
    let r = EvalResult::from_episodes("x".into(), vec![ep(0, 0.0), ep(1, 1.0)]);
    assert!((r.mean_cost - 0.5).abs() < 1e-15);
    assert!((r.std_cost - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    assert!((r.se_cost - 0.5).abs() < 1e-15);
}
