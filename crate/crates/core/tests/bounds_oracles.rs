use perishable::bounds::*;
use perishable::demand::{DemandScenario, NoiseModel};
use perishable::env::{CostRates, EnvParams, InventorySystem, RawCosts};
use perishable::evaluator::{evaluate, EvalConfig};
use perishable::policies::PolicySpec;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn ctx(h: f64, b: f64, w: f64, lead: usize, m: usize, sigma: f64) -> BoundContext {
    BoundContext {
        lead_time: lead,
        lifetime: m,
        horizon: 60,
        holding: h,
        lost_sales: b,
        expiration: w,
        sigma,
        forecast: vec![],
    }
}

/// Mean and standard error of `f` over sums of `k` independent errors.
fn sampled(k: usize, sigma: f64, n: usize, seed: u64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let x: f64 = (0..k)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sigma * z
            })
            .sum::<f64>();
        let v = f(x);
        s1 += v;
        s2 += v * v;
    }
    let mean = s1 / n as f64;
    let var = (s2 / n as f64 - mean * mean).max(0.0);
    (mean, (var / n as f64).sqrt())
}

#[test]
fn out_bounds_match_sampled_error_sums() {
    let c = ctx(1.0, 50.0, 4.0, 2, 3, 1.6);
    let n = 400_000;
    for s in [-2.0, 0.0, 1.5, 4.0] {
        let (lead_over, se1) = sampled(3, c.sigma, n, 1, |x| (s - x).max(0.0));
        let (lead_under, se2) = sampled(3, c.sigma, n, 2, |x| (x - s).max(0.0));
        let (life_over, se3) = sampled(5, c.sigma, n, 3, |x| (s - x).max(0.0));
        let lb = 60.0 * (lead_over + 50.0 / 3.0 * lead_under + (4.0 - 2.0) / 5.0 * life_over);
        let lb_se = 60.0 * (se1 + 50.0 / 3.0 * se2 + 0.4 * se3);
        assert!((out_lb(s, &c) - lb).abs() < 4.0 * lb_se, "LB at {s}: {} vs {lb} ± {lb_se}", out_lb(s, &c));
        let ub = 60.0 * (lead_over + (50.0 + 2.0) * lead_under);
        let ub_se = 60.0 * (se1 + 52.0 * se2);
        assert!((out_ub(s, &c) - ub).abs() < 4.0 * ub_se, "UB at {s}");
        let pil = 60.0 * ((1.0 + 4.0 / 3.0) * lead_over + 50.0 * lead_under);
        let pil_se = 60.0 * ((1.0 + 4.0 / 3.0) * se1 + 50.0 * se2);
        assert!((pil_ub(s, &c) - pil).abs() < 4.0 * pil_se, "PIL UB at {s}");
    }
}

#[test]
fn pil_lower_bound_on_a_small_config() {
    // overlap sum by hand: T = 4, m = 3, d = [1, 2, 3, 4] padded with zeros
    // t=1: d2+d3 = 5, t=2: 7, t=3: 4, t=4: 0
    let mut c = ctx(1.0, 10.0, 3.0, 1, 3, 1.0);
    c.horizon = 4;
    c.forecast = vec![1.0, 2.0, 3.0, 4.0];
    assert_eq!(c.forecast_overlap_sum(), 16.0);
    let expect = out_lb(0.5, &c) - (3.0 - 1.0) / 4.0 * 16.0;
    assert!((pil_lb(0.5, &c) - expect).abs() < 1e-12);
    let value = 4.0
        * (normal_loss(0.5, 2f64.sqrt())
            + 5.0 * normal_excess(0.5, 2f64.sqrt())
            + 0.5 * normal_loss(0.5, 2.0))
        - 8.0;
    assert!((pil_lb(0.5, &c) - value).abs() < 1e-12);
}

/// With no noise OUT holds `s` units after demand in steady state and never
/// lets stock age past the lead time, so nothing expires. The lower bound
/// still charges `(w - hL)/(m+L) * s` per period for expiry and therefore
/// exceeds the cost it is meant to bound whenever `w > hL`.
#[test]
fn out_lower_bound_exceeds_noiseless_out_cost_when_w_above_hl() {
    let horizon = 60;
    let sys = InventorySystem::new(
        EnvParams {
            horizon,
            lead_time: 2,
            lifetime: 4,
            batch_size: 1.0,
            max_batches: None,
            yield_loss_max: 0.0,
            batch_costs: vec![],
        },
        CostRates::new(RawCosts {
            unit_order: 0.0,
            holding: 1.0,
            lost_sales: 10.0,
            expiration: 4.0,
        })
        .unwrap(),
    )
    .unwrap();
    let sc = DemandScenario::new(vec![10.0; horizon], NoiseModel::custom(vec![0.0; horizon])).unwrap();
    let cfg = EvalConfig {
        n_episodes: 1,
        ..Default::default()
    };
    let r = evaluate(&sys, &sc, &PolicySpec::Out { s: 5.0 }, &cfg).unwrap();
    assert_eq!(r.breakdown.expiration, 0.0);
    assert_eq!(r.breakdown.lost_sales, 0.0);
    let mut c = ctx(1.0, 10.0, 4.0, 2, 4, 0.0);
    c.horizon = horizon;
    let lb = out_lb(5.0, &c);
    assert!((lb - 400.0).abs() < 1e-9);
    assert!(r.mean_cost < lb - 50.0, "cost {} vs LB {lb}", r.mean_cost);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn loss_functions_are_consistent(s in -20.0..20.0f64, sigma in 0.01..10.0f64) {
        let loss = normal_loss(s, sigma);
        let excess = normal_excess(s, sigma);
        prop_assert!(loss >= s.max(0.0) - 1e-12);
        prop_assert!(excess >= (-s).max(0.0) - 1e-12);
        prop_assert!((loss - excess - s).abs() < 1e-9);
        let h = 1e-3;
        let second = normal_loss(s + h, sigma) - 2.0 * loss + normal_loss(s - h, sigma);
        prop_assert!(second >= -1e-9);
    }

    #[test]
    fn upper_bounds_are_convex_with_their_argmin(
        h in 0.1..3.0f64, b in 1.0..1000.0f64, w in 0.0..10.0f64,
        lead in 0usize..6, m in 1usize..12, sigma in 0.1..5.0f64,
    ) {
        let c = ctx(h, b, w, lead, m, sigma);
        for kind in [PolicyKind::Out, PolicyKind::Pil] {
            let s = ub_argmin(kind, &c).unwrap();
            let f = |x: f64| upper_bound(kind, x, &c);
            let d = 0.05 * sigma;
            prop_assert!(f(s) <= f(s - d) + 1e-9 && f(s) <= f(s + d) + 1e-9);
        }
    }

    #[test]
    fn lb_argmin_is_below_ub_argmin_when_w_covers_holding(
        h in 0.1..3.0f64, b in 1.0..1000.0f64, extra in 0.0..10.0f64,
        lead in 0usize..6, m in 1usize..12, sigma in 0.1..5.0f64,
    ) {
        let c = ctx(h, b, h * lead as f64 + extra, lead, m, sigma);
        let lb = lb_argmin(&c);
        prop_assert!(lb <= out_ub_argmin(&c).unwrap() + sigma / 50.0);
        let (lo, hi) = search_interval(PolicyKind::Out, &c, 0).unwrap();
        prop_assert!(lo as f64 <= lb && (hi as f64) >= out_ub_argmin(&c).unwrap());
    }

    #[test]
    fn upper_bounds_grow_with_lost_sales_cost(
        s in -5.0..10.0f64, b in 1.0..500.0f64, db in 0.1..100.0f64,
        lead in 0usize..5, m in 1usize..8,
    ) {
        let lo = ctx(1.0, b, 2.0, lead, m, 1.0);
        let hi = ctx(1.0, b + db, 2.0, lead, m, 1.0);
        for kind in [PolicyKind::Out, PolicyKind::Pil] {
            prop_assert!(upper_bound(kind, s, &hi) >= upper_bound(kind, s, &lo));
            prop_assert!(lower_bound(kind, s, &hi) >= lower_bound(kind, s, &lo));
        }
    }
}
