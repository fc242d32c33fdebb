use rand::Rng;
use rand_distr::{Distribution, Exp1};
use santafe_core::estimators::DiffusionEstimator;
use santafe_core::*;

fn params(cutoff: u64) -> ModelParams {
    ModelParams::new(1000.0, 1.0, 2.0, 1e-4, cutoff).unwrap()
}

fn measure(p: &ModelParams, seed: SeedSpec, measure_time: f64) -> Estimators {
    let mut est = Estimators::new(EstimatorConfig::for_params(p));
    let config = RunConfig::for_params(p, measure_time);
    run(p, seed, &config, &mut est).unwrap();
    est
}

fn within(a: Estimate, b: Estimate, sigmas: f64) -> bool {
    (a.value - b.value).abs() <= sigmas * (a.se * a.se + b.se * b.se).sqrt()
}

#[test]
fn merging_is_associative_and_exact() {
    let p = params(1000);
    let runs: Vec<Estimators> = (0..3).map(|i| measure(&p, SeedSpec::new(8, i), 200.0)).collect();
    let mut left = runs[0].clone();
    left.merge(&runs[1]).unwrap();
    left.merge(&runs[2]).unwrap();
    let mut tail = runs[1].clone();
    tail.merge(&runs[2]).unwrap();
    let mut right = runs[0].clone();
    right.merge(&tail).unwrap();
    let (a, b) = (left.report(&p), right.report(&p));
    assert_eq!(a, b);
    assert_eq!(a.csv_row(), b.csv_row());
    assert_eq!(a.counts.events, runs.iter().map(|r| r.events()).sum::<u64>());
    assert_eq!(a.measure_time, 600.0);

    let mut other = Estimators::new(EstimatorConfig {
        gap_k: 5,
        ..EstimatorConfig::for_params(&p)
    });
    assert!(other.merge(&runs[0]).is_err());
}

#[test]
fn standard_error_shrinks_as_one_over_root_time() {
    let p = params(1000);
    let short = measure(&p, SeedSpec::new(9, 0), 500.0).report(&p);
    let long = measure(&p, SeedSpec::new(9, 1), 2000.0).report(&p);
    let ratio = short.spread.unwrap().se / long.spread.unwrap().se;
    assert!((1.3..3.0).contains(&ratio), "se ratio {ratio}");
    assert!(within(short.spread.unwrap(), long.spread.unwrap(), 4.0));
}

#[test]
fn buy_and_sell_impacts_agree() {
    let p = params(1000);
    let r = measure(&p, SeedSpec::new(10, 0), 2000.0).report(&p);
    let (buy, sell) = (r.impact_buy.unwrap(), r.impact_sell.unwrap());
    assert!(buy.value > 0.0 && sell.value > 0.0);
    assert!(within(buy, sell, 4.0), "buy {buy:?} sell {sell:?}");
}

#[test]
fn market_order_count_is_poisson() {
    let p = params(1000);
    let t = 2000.0;
    let r = measure(&p, SeedSpec::new(12, 0), t).report(&p);
    let mean = 2.0 * p.market_rate * t;
    let n = r.counts.market_orders as f64;
    assert!((n - mean).abs() <= 5.0 * mean.sqrt(), "{n} market orders, expected {mean}");
}

#[test]
fn first_gap_is_the_spread() {
    let p = params(1000);
    let r = measure(&p, SeedSpec::new(13, 0), 1000.0).report(&p);
    let spread = r.spread.unwrap();
    let g0 = r.gap_means[0] * p.tick_size;
    if r.counts.gap_skipped == 0 {
        assert!((g0 - spread.value).abs() <= 1e-12 * spread.value);
    } else {
        assert!((g0 - spread.value).abs() <= 4.0 * spread.se);
    }
}

#[test]
fn halves_of_a_run_agree() {
    let p = params(1000);
    let mut rng = SeedSpec::new(14, 0).rng();
    let mut book = init_book(&p, &mut rng);
    let mut first = Estimators::new(EstimatorConfig::for_params(&p));
    run_from(&mut book, &p, &mut rng, &RunConfig::for_params(&p, 1000.0), &mut first).unwrap();
    let mut second = Estimators::new(EstimatorConfig::for_params(&p));
    let cont = RunConfig {
        warmup_time: 0.0,
        ..RunConfig::for_params(&p, 1000.0)
    };
    run_from(&mut book, &p, &mut rng, &cont, &mut second).unwrap();
    let (a, b) = (first.report(&p), second.report(&p));
    assert!(within(a.spread.unwrap(), b.spread.unwrap(), 4.0));
    assert!(within(a.impact.unwrap(), b.impact.unwrap(), 4.0));
}

#[test]
fn window_size_does_not_matter_once_it_is_large() {
    let small = params(1000);
    let large = params(2000);
    let a = measure(&small, SeedSpec::new(15, 0), 1000.0).report(&small);
    let b = measure(&large, SeedSpec::new(15, 1), 1000.0).report(&large);
    assert!(within(a.spread.unwrap(), b.spread.unwrap(), 4.0));
    assert!(within(a.impact.unwrap(), b.impact.unwrap(), 4.0));
}

#[test]
fn empty_measurement_window_gives_an_empty_report() {
    let p = params(1000);
    let r = measure(&p, SeedSpec::new(16, 0), 0.0).report(&p);
    assert!(r.spread.is_none());
    assert!(r.impact.is_none());
    assert!(r.diffusion.is_none());
    assert!(r.gap_means.is_empty());
    assert_eq!(r.counts.events, 0);
    assert_eq!(r.counts.snapshots, 0);
}

#[test]
fn report_survives_a_csv_round_trip() {
    let p = params(1000);
    let r = measure(&p, SeedSpec::new(17, 0), 300.0).report(&p);
    let back = MetricsReport::from_csv(&r.metrics_csv(), &r.density_csv(), &r.gaps_csv(), &r.impact_csv()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn compound_poisson_walk_has_the_expected_diffusion_constant() {
    // jumps of ±1 tick at rate ν: MSD(τ) = ν·Δ²·τ
    let (nu, tick, interval) = (3.0, 1e-4, 1.0);
    let snapshots = 200_000;
    let mut est = DiffusionEstimator::new(interval, 10, 100, 20);
    est.begin(0.0, snapshots as f64 * interval);
    let mut rng = SeedSpec::new(18, 0).rng();
    let mut doubled_mid = 0i64;
    let mut next_jump: f64 = Exp1.sample(&mut rng);
    next_jump /= nu;
    for k in 0..snapshots {
        let t = k as f64 * interval;
        while next_jump <= t {
            doubled_mid += if rng.random::<bool>() { 2 } else { -2 };
            let e: f64 = Exp1.sample(&mut rng);
            next_jump += e / nu;
        }
        est.push(t, doubled_mid);
    }
    let fit = est.estimate(tick).unwrap();
    let expected = nu * tick * tick;
    assert!((fit.d / expected - 1.0).abs() < 0.05, "D = {} vs {expected}", fit.d);
    assert!(fit.r2 > 0.95);
}
