use proptest::prelude::*;
use santafe_core::sim::{parse_event_log_row, EVENT_LOG_HEADER};
use santafe_core::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Exp, Poisson};

fn params(lambda: f64, v: f64, mu: f64, tick: f64, cutoff: u64) -> ModelParams {
    ModelParams::new(lambda, v, mu, tick, cutoff).unwrap()
}

fn chi_square_p(observed: &[f64], expected: &[f64]) -> f64 {
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = (observed.len() - 1) as f64;
    1.0 - ChiSquared::new(dof).unwrap().cdf(stat)
}

#[test]
fn long_run_keeps_every_invariant() {
    let p = params(1000.0, 1.0, 5.0, 1e-3, 100);
    let mut rng = SeedSpec::new(11, 0).rng();
    let mut book = init_book(&p, &mut rng);
    for i in 0..1_000_000u32 {
        let before = (book.best_ask_level(), book.best_bid_level());
        let r = step(&mut book, &p, &mut rng).unwrap();
        assert!(book.best_ask_level() > book.best_bid_level());
        assert_eq!((r.best_ask_before, r.best_bid_before), before);
        assert_eq!((r.best_ask_after, r.best_bid_after), (book.best_ask_level(), book.best_bid_level()));
        assert_eq!(r.doubled_mid_after, book.doubled_mid());
        if i % 50_000 == 0 {
            book.verify().unwrap();
        }
    }
    book.verify().unwrap();
    let expected = 2.0 * p.level_rate() * p.cutoff as f64
        + p.cancel_rate * (book.window_orders(Side::Ask) + book.window_orders(Side::Bid)) as f64
        + 2.0 * p.market_rate;
    assert!((book.total_intensity(&p) - expected).abs() <= 1e-9 * expected);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_parameters_never_cross_the_book(
        lambda in 10.0f64..2000.0,
        v in 0.1f64..5.0,
        mu in 0.0f64..50.0,
        cutoff in 5u64..200,
        seed in any::<u64>(),
    ) {
        let p = params(lambda, v, mu, 1e-2, cutoff);
        let mut rng = SeedSpec::new(seed, 0).rng();
        let mut book = init_book(&p, &mut rng);
        for _ in 0..5_000 {
            match step(&mut book, &p, &mut rng) {
                Ok(_) => {}
                Err(BookError::SideWouldEmpty(_)) => break,
                Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
            }
            prop_assert!(book.best_ask_level() > book.best_bid_level());
        }
        prop_assert!(book.verify().is_ok(), "{:?}", book.verify());
    }
}

#[test]
fn mirrored_book_replays_the_mirrored_history() {
    // reflecting prices through 1/2 swaps the sides: level p ↦ 1 − p
    let p = params(500.0, 1.0, 3.0, 1e-2, 40);
    let mut rng = SeedSpec::new(5, 2).rng();
    let mut a = init_book(&p, &mut rng);
    let reflect = |book: &BookState, side: Side| -> Vec<(i64, u32)> {
        let mut out = Vec::new();
        for level in -200..=200 {
            let c = book.count_at_level(side, level);
            if c > 0 {
                out.push((1 - level, c));
            }
        }
        out
    };
    let mut b = BookState::from_levels(40, &reflect(&a, Side::Bid), &reflect(&a, Side::Ask)).unwrap();
    for _ in 0..20_000 {
        let (_, event) = sample_event(&a, &p, &mut rng);
        let ra = apply_event(&mut a, event).unwrap();
        let rb = apply_event(&mut b, event.mirrored()).unwrap();
        assert_eq!(rb.doubled_mid_change(), -ra.doubled_mid_change());
        assert_eq!(b.best_ask_level(), 1 - a.best_bid_level());
        assert_eq!(b.best_bid_level(), 1 - a.best_ask_level());
        assert_eq!(b.window_orders(Side::Ask), a.window_orders(Side::Bid));
        assert_eq!(b.window_orders(Side::Bid), a.window_orders(Side::Ask));
    }
    for d in 1..=40 {
        assert_eq!(b.count_at_distance(Side::Ask, d), a.count_at_distance(Side::Bid, d));
    }
}

fn event_log(seed: SeedSpec) -> Vec<u8> {
    let p = params(1000.0, 1.0, 2.0, 1e-3, 50);
    let config = RunConfig {
        warmup_time: 1.0,
        measure_time: 5.0,
        snapshot_interval: 0.1,
    };
    let mut log = EventLog::new(Vec::new()).unwrap();
    run(&p, seed, &config, &mut log).unwrap();
    log.finish().unwrap()
}

#[test]
fn identical_seeds_give_identical_event_logs() {
    let a = event_log(SeedSpec::new(42, 0));
    let b = event_log(SeedSpec::new(42, 0));
    let c = event_log(SeedSpec::new(42, 1));
    assert_eq!(a, b);
    assert_ne!(a, c);
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(EVENT_LOG_HEADER));
    let mut last_time = 1.0;
    let mut rows = 0;
    for line in lines {
        let row = parse_event_log_row(line).unwrap();
        assert!(row.time >= last_time && row.time < 6.0);
        last_time = row.time;
        rows += 1;
    }
    assert!(rows > 1000);
}

#[test]
fn waiting_times_are_exponential_with_the_total_rate() {
    let p = params(1000.0, 1.0, 2.0, 1e-3, 50);
    let mut rng = SeedSpec::new(1, 0).rng();
    let book = init_book(&p, &mut rng);
    let total = book.total_intensity(&p);
    let n = 100_000;
    let mut waits: Vec<f64> = (0..n).map(|_| sample_event(&book, &p, &mut rng).0).collect();
    waits.sort_by(f64::total_cmp);
    let exp = Exp::new(total).unwrap();
    let d = waits
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let f = exp.cdf(w);
            (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
        })
        .fold(0.0, f64::max);
    // Kolmogorov critical value at α = 0.01
    assert!(d < 1.628 / (n as f64).sqrt(), "KS distance {d}");
}

#[test]
fn submission_levels_are_uniform_on_the_window() {
    let p = params(1000.0, 1.0, 2.0, 1e-3, 10);
    let mut rng = SeedSpec::new(4, 0).rng();
    let book = init_book(&p, &mut rng);
    let mut counts = [0.0f64; 20];
    let mut draws = 0.0;
    while draws < 1e6 {
        if let (_, EventDescriptor::Limit { side, q }) = sample_event(&book, &p, &mut rng) {
            let slot = match side {
                Side::Ask => q - 1,
                Side::Bid => 10 + (-q - 1),
            };
            counts[slot as usize] += 1.0;
            draws += 1.0;
        }
    }
    let pval = chi_square_p(&counts, &[draws / 20.0; 20]);
    assert!(pval > 0.01, "p = {pval}");
}

#[test]
fn cancellations_pick_orders_uniformly() {
    // ask levels 3, 4, 6 hold 1, 2 and 3 orders
    let p = params(1.0, 1.0, 0.0, 1.0, 10);
    let book = BookState::from_levels(10, &[(3, 1), (4, 2), (6, 3)], &[(0, 1)]).unwrap();
    let mut rng = SeedSpec::new(9, 0).rng();
    let mut counts = [0.0f64; 3];
    let mut n = 0.0;
    while n < 120_000.0 {
        if let (_, EventDescriptor::Cancel { side: Side::Ask, q }) = sample_event(&book, &p, &mut rng) {
            let i = match q {
                3 => 0,
                4 => 1,
                6 => 2,
                other => panic!("cancel at empty level {other}"),
            };
            counts[i] += 1.0;
            n += 1.0;
        }
    }
    let pval = chi_square_p(&counts, &[n / 6.0, n / 3.0, n / 2.0]);
    assert!(pval > 0.01, "p = {pval}");
}

#[test]
fn interior_levels_have_poisson_occupancy() {
    // without market orders every level deep inside the window is an
    // independent birth–death queue with stationary law Poisson(λΔ/v)
    let p = params(100.0, 1.0, 0.0, 1e-2, 100);
    let n_st = p.n_st();
    let config = RunConfig {
        warmup_time: 20.0,
        measure_time: 3_750.0,
        snapshot_interval: 3.0,
    };
    struct Occupancy(Vec<f64>);
    impl Observer for Occupancy {
        fn on_snapshot(&mut self, _t: f64, book: &BookState) {
            for side in [Side::Ask, Side::Bid] {
                for d in 30..70 {
                    let c = book.count_at_distance(side, d) as usize;
                    self.0[c.min(4)] += 1.0;
                }
            }
        }
    }
    let mut occ = Occupancy(vec![0.0; 5]);
    run(&p, SeedSpec::new(21, 0), &config, &mut occ).unwrap();
    let total: f64 = occ.0.iter().sum();
    assert!(total >= 1e5);
    let pois = Poisson::new(n_st).unwrap();
    let mut expected: Vec<f64> = (0..4).map(|k| total * pois.pmf(k)).collect();
    expected.push(total - expected.iter().sum::<f64>());
    let pval = chi_square_p(&occ.0, &expected);
    assert!(pval > 0.01, "p = {pval}, observed {:?}, expected {expected:?}", occ.0);
}

#[test]
fn snapshots_fall_on_the_grid_inside_the_window() {
    struct Times(Vec<f64>, u64);
    impl Observer for Times {
        fn begin(&mut self, start: f64, duration: f64) {
            assert_eq!((start, duration), (2.0, 3.0));
        }
        fn on_event(&mut self, r: &EventRecord, _b: &BookState) {
            assert!(r.time >= 2.0 && r.time < 5.0);
            self.1 += 1;
        }
        fn on_snapshot(&mut self, t: f64, _b: &BookState) {
            self.0.push(t);
        }
    }
    let p = params(1000.0, 1.0, 1.0, 1e-3, 20);
    let config = RunConfig {
        warmup_time: 2.0,
        measure_time: 3.0,
        snapshot_interval: 0.25,
    };
    let mut obs = Times(Vec::new(), 0);
    let (summary, book) = run(&p, SeedSpec::new(1, 0), &config, &mut obs).unwrap();
    assert_eq!(obs.0.len(), 12);
    for (k, t) in obs.0.iter().enumerate() {
        assert_eq!(*t, 2.0 + k as f64 * 0.25);
    }
    assert_eq!(summary.snapshots, 12);
    assert_eq!(summary.events_measured, obs.1);
    assert_eq!(book.clock, 5.0);
}
