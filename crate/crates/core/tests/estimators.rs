use cellmeasure::cesaro::{
    cesaro_cylinder_estimate, convergence_diag, empirical_measure, empirical_measure_widened,
    sample_mu_c_approx,
};
use cellmeasure::entropy::{column_entropy, column_entropy_from_windows, entropy_rate_estimate};
use cellmeasure::gilman::{
    b_set_member, classify, equicontinuity_witness_search, estimate_ratio, ClassLabel, ClassifyParams,
};
use cellmeasure::stats::{wilson, Z95};
use cellmeasure::{zoo, RandomStream, StochasticMeasure, Symbol, WindowConfig};
use proptest::prelude::*;

fn fs_measure() -> StochasticMeasure {
    StochasticMeasure::bernoulli(vec![0.2, 0.3, 0.5]).unwrap()
}

fn fair_coin() -> StochasticMeasure {
    StochasticMeasure::bernoulli(vec![0.5, 0.5]).unwrap()
}

fn on_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn identity_ratio_is_exactly_one() {
    let id = zoo::identity_rule(3).unwrap();
    let mu = StochasticMeasure::from_inline("bernoulli:3:1/3,1/3,1/3").unwrap();
    let markov = StochasticMeasure::from_inline("markov:3:0.5,0.3,0.2,0.1,0.6,0.3,0.4,0.4,0.2").unwrap();
    let s = RandomStream::new(7);
    for measure in [&mu, &markov] {
        for n in 0..4 {
            for m in 0..=n {
                for t in [0, 1, 5, 50] {
                    let x = measure.sample_window(-(n as i64), n as i64, &s.substream(n as u64)).unwrap();
                    let r = estimate_ratio(&id, measure, &x, m, n, t, 200, &s).unwrap();
                    assert_eq!((r.successes, r.estimate), (200, 1.0));
                }
            }
        }
    }
}

#[test]
fn shift_ratio_matches_closed_form() {
    let shift = zoo::shift_rule(2).unwrap();
    let mu = fair_coin();
    let s = RandomStream::new(7);
    let x = mu.sample_window(-25, 25, &s.substream(1_000_000)).unwrap();
    // Exact ratio 2^-(m+T-n) when m + T > n.
    let mut covered = 0;
    for (m, n, t) in [(2usize, 5usize, 4usize), (1, 3, 5), (2, 5, 10), (0, 0, 3)] {
        let r = estimate_ratio(&shift, &mu, &x, m, n, t, 100_000, &s).unwrap();
        let exact = 0.5f64.powi((m + t - n) as i32);
        let se = (exact * (1.0 - exact) / 100_000.0).sqrt();
        assert!((r.estimate - exact).abs() < 4.0 * se, "{r:?} vs {exact}");
        covered += usize::from(r.wilson_lo <= exact && exact <= r.wilson_hi);
    }
    assert!(covered >= 3);
    let r = estimate_ratio(&shift, &mu, &x, 2, 12, 10, 100, &s).unwrap();
    assert_eq!(r.estimate, 1.0);
}

#[test]
fn shift_ratio_falls_with_horizon_and_rises_with_n() {
    let shift = zoo::shift_rule(2).unwrap();
    let mu = fair_coin();
    let s = RandomStream::new(3);
    let x = mu.sample_window(-20, 20, &s).unwrap();
    let est = |m, n, t| estimate_ratio(&shift, &mu, &x, m, n, t, 20_000, &s).unwrap();
    let by_t: Vec<f64> = [1, 2, 3, 4].iter().map(|&t| est(1, 2, t).estimate).collect();
    assert!(by_t.windows(2).all(|w| w[1] <= w[0]), "{by_t:?}");
    let by_n: Vec<f64> = [2, 3, 4, 5].iter().map(|&n| est(1, n, 5).estimate).collect();
    assert!(by_n.windows(2).all(|w| w[1] >= w[0]), "{by_n:?}");
}

#[test]
fn conditional_samples_always_agree_at_time_zero() {
    // With T = 0 membership reduces to agreement on [-m, m].
    let fs = zoo::gilman_fs();
    let mu = fs_measure();
    let s = RandomStream::new(5);
    let x = mu.sample_window(-6, 6, &s).unwrap();
    for m in 0..=3 {
        let r = estimate_ratio(&fs, &mu, &x, m, 3, 0, 500, &s).unwrap();
        assert_eq!(r.estimate, 1.0);
    }
}

#[test]
fn fs_bset_example() {
    let fs = zoo::gilman_fs();
    let x = WindowConfig::new(-3, vec![0; 7]).unwrap();
    let mut cells = vec![0; 7];
    cells[6] = 1;
    let y = WindowConfig::new(-3, cells).unwrap();
    assert!(!b_set_member(&fs, &x, &y, 2, 1).unwrap());
    assert!(b_set_member(&fs, &x, &y, 2, 0).unwrap());
    let w = equicontinuity_witness_search(&fs, &x, 2, 2, 1, 100, &RandomStream::new(0)).unwrap();
    assert!(w.found);
    let witness = w.witness.unwrap();
    assert_eq!(witness.slice(-2, 2), x.slice(-2, 2));
    assert!(!b_set_member(&fs, &x, &witness, 2, 1).unwrap());
}

#[test]
fn witness_searches_on_trivial_rules() {
    let s = RandomStream::new(1);
    let shift = zoo::shift_rule(2).unwrap();
    let x = fair_coin().sample_window(-8, 8, &s).unwrap();
    let w = equicontinuity_witness_search(&shift, &x, 3, 3, 2, 100, &s).unwrap();
    assert!(w.found);
    let y = w.witness.unwrap();
    // The first candidate tried is the cell just outside the agreement zone.
    let diff: Vec<i64> = (-5..=5).filter(|&p| x.get(p) != y.get(p)).collect();
    assert_eq!(diff, vec![4]);

    let id = zoo::identity_rule(3).unwrap();
    let x = fs_measure().sample_window(-4, 4, &s).unwrap();
    let w = equicontinuity_witness_search(&id, &x, 4, 4, 3, 100, &s).unwrap();
    assert!(!w.found && w.exhaustive);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bset_reflexive_and_monotone_in_horizon(
        code in 0u32..256,
        cells in prop::collection::vec(0u8..2, 21),
        flips in prop::collection::vec(0usize..21, 0..4),
        m in 0usize..3,
        t in 0usize..7,
    ) {
        let rule = zoo::eca(code).unwrap();
        let x = WindowConfig::new(-10, cells.clone()).unwrap();
        prop_assert!(b_set_member(&rule, &x, &x, m, t).unwrap());
        let mut yc = cells;
        for f in flips {
            yc[f] ^= 1;
        }
        let y = WindowConfig::new(-10, yc).unwrap();
        if b_set_member(&rule, &x, &y, m, t).unwrap() {
            for t2 in 0..t {
                prop_assert!(b_set_member(&rule, &x, &y, m, t2).unwrap());
            }
        }
    }
}

#[test]
fn ratio_is_thread_count_independent() {
    let fs = zoo::gilman_fs();
    let mu = fs_measure();
    let s = RandomStream::new(42);
    let x = mu.sample_window(-40, 40, &s).unwrap();
    let run = || estimate_ratio(&fs, &mu, &x, 1, 5, 30, 5_000, &s).unwrap();
    let a = on_pool(1, run);
    let b = on_pool(4, run);
    assert_eq!(a, b);
    let c = on_pool(1, || cesaro_cylinder_estimate(&fs, &mu, &[1], 30, 3_000, &s).unwrap());
    let d = on_pool(3, || cesaro_cylinder_estimate(&fs, &mu, &[1], 30, 3_000, &s).unwrap());
    assert_eq!(c, d);
    let e = on_pool(1, || column_entropy(&fs, &mu, 1, 6, 3_000, &s).unwrap());
    let f = on_pool(5, || column_entropy(&fs, &mu, 1, 6, 3_000, &s).unwrap());
    assert_eq!(e, f);
}

#[test]
fn fs_ratio_grows_with_n() {
    let fs = zoo::gilman_fs();
    let mu = fs_measure();
    let s = RandomStream::new(7);
    let params = ClassifyParams {
        n_grid: vec![2, 20],
        m: 1,
        horizon: 100,
        samples: 2_000,
        x_count: 8,
        witness_budget: 200,
    };
    let c = classify(&fs, &mu, &params, &s).unwrap();
    let (lo, hi) = (c.mean_ratios[0], c.mean_ratios[1]);
    assert!(hi.estimate > lo.estimate);
    assert!(hi.wilson_lo > lo.wilson_hi, "{lo:?} {hi:?}");
    assert!(c.witnesses.iter().all(|w| w.found));
}

#[test]
fn classifier_labels() {
    let s = RandomStream::new(11);
    let id = zoo::identity_rule(2).unwrap();
    let params = ClassifyParams {
        n_grid: vec![2, 4],
        m: 1,
        horizon: 5,
        samples: 200,
        x_count: 3,
        witness_budget: 100,
    };
    let c = classify(&id, &fair_coin(), &params, &s).unwrap();
    assert_eq!(c.label, ClassLabel::EquicontinuousLike);

    let shift = zoo::shift_rule(2).unwrap();
    let params = ClassifyParams {
        n_grid: vec![5, 10, 20],
        m: 2,
        horizon: 25,
        samples: 2_000,
        x_count: 5,
        witness_budget: 100,
    };
    let c = classify(&shift, &fair_coin(), &params, &s).unwrap();
    assert_eq!(c.label, ClassLabel::ExpansiveLike, "{:?}", c.mean_ratios);
}

#[test]
fn identity_cesaro_values_estimate_cylinder() {
    let id = zoo::identity_rule(3).unwrap();
    let mu = fs_measure();
    let word = [2, 1];
    let series = cesaro_cylinder_estimate(&id, &mu, &word, 20, 20_000, &RandomStream::new(2)).unwrap();
    let p = mu.cylinder_prob(&word, 0).unwrap();
    let first = series.hits[0];
    assert!(series.hits.iter().all(|&h| h == first));
    let (lo, hi) = wilson(first, 20_000, Z95);
    assert!(lo <= p && p <= hi);
}

#[test]
fn shift_cesaro_is_invariant() {
    let shift = zoo::shift_rule(2).unwrap();
    let markov = StochasticMeasure::from_inline("markov:2:0.9,0.1,0.2,0.8").unwrap();
    let samples = 20_000;
    for mu in [fair_coin(), markov] {
        for word in [vec![1], vec![0, 1], vec![1, 1, 0]] {
            let series = cesaro_cylinder_estimate(&shift, &mu, &word, 12, samples, &RandomStream::new(8)).unwrap();
            let p = mu.cylinder_prob(&word, 0).unwrap();
            let misses = series
                .hits
                .iter()
                .filter(|&&h| {
                    let (lo, hi) = wilson(h, samples, Z95);
                    !(lo <= p && p <= hi)
                })
                .count();
            // Neighboring times are strongly correlated; most must cover.
            assert!(misses <= 3, "{mu} {word:?}: {:?} vs {p}", series.per_time);
        }
    }
}

#[test]
fn empirical_measures() {
    let id = zoo::identity_rule(3).unwrap();
    let uniform = StochasticMeasure::from_inline("bernoulli:3:1/3,1/3,1/3").unwrap();
    let e = empirical_measure(&id, &uniform, 2, 3, 20_000, &RandomStream::new(4)).unwrap();
    assert_eq!(e.total(), 60_000);
    // Identity repeats each sample n times; the effective sample size is 20000.
    for (w, c) in e.iter() {
        let f = c as f64 / 60_000.0;
        let sd = ((1.0 / 9.0) * (8.0 / 9.0) / 20_000.0f64).sqrt();
        assert!((f - 1.0 / 9.0).abs() < 3.0 * sd, "{w:?} {f}");
    }
    let sum: u64 = e.iter().map(|(_, c)| c).sum();
    assert_eq!(sum, e.total());

    let shift = zoo::shift_rule(2).unwrap();
    let markov = StochasticMeasure::from_inline("markov:2:0.9,0.1,0.2,0.8").unwrap();
    let e = empirical_measure(&shift, &markov, 2, 1, 40_000, &RandomStream::new(4)).unwrap();
    for a in 0..2u8 {
        for b in 0..2u8 {
            let p = markov.marginal()[a as usize] * markov.transition()[a as usize][b as usize];
            let sd = (p * (1.0 - p) / 40_000.0).sqrt();
            assert!((e.frequency(&[a, b]) - p).abs() < 3.0 * sd);
        }
    }
}

#[test]
fn widening_does_not_change_tallies() {
    let fs = zoo::gilman_fs();
    let mu = fs_measure();
    let s = RandomStream::new(9);
    let a = empirical_measure(&fs, &mu, 3, 15, 2_000, &s).unwrap();
    for extra in [1, 7] {
        let b = empirical_measure_widened(&fs, &mu, 3, 15, 2_000, &s, extra).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn fs_symbol_one_dies_out() {
    let fs = zoo::gilman_fs();
    let mu = fs_measure();
    let s = RandomStream::new(7);
    let series = cesaro_cylinder_estimate(&fs, &mu, &[1], 200, 10_000, &s).unwrap();
    assert!(series.per_time[199] < series.per_time[0]);
    assert!(series.at(200) < 0.5 * series.at(20));
    let d = convergence_diag(&series.cesaro, series.final_standard_error()).unwrap();
    assert!(d.converging, "{d:?}");

    let with_one = |n| {
        let e = empirical_measure(&fs, &mu, 2, n, 5_000, &s).unwrap();
        e.iter().filter(|(w, _)| w.contains(&1)).map(|(_, c)| c).sum::<u64>() as f64 / e.total() as f64
    };
    assert!(with_one(200) < with_one(20));

    let windows = sample_mu_c_approx(&fs, &mu, 200, 9, 5_000, &s).unwrap();
    let hits = windows.iter().filter(|w| w.cells().contains(&1)).count();
    assert!((hits as f64) / 5_000.0 < 0.1, "{hits}");
}

#[test]
fn mu_c_samples_for_invariant_pairs() {
    let shift = zoo::shift_rule(2).unwrap();
    let mu = fair_coin();
    let w = sample_mu_c_approx(&shift, &mu, 50, 3, 20_000, &RandomStream::new(6)).unwrap();
    let ones = w.iter().filter(|w| w.cells() == [1, 1, 1]).count();
    let (lo, hi) = wilson(ones as u64, 20_000, Z95);
    assert!(lo <= 0.125 && 0.125 <= hi);
}

#[test]
fn entropy_calibration_on_the_shift() {
    let shift = zoo::shift_rule(2).unwrap();
    let trace = column_entropy(&shift, &fair_coin(), 0, 8, 50_000, &RandomStream::new(7)).unwrap();
    let rate = entropy_rate_estimate(&trace).unwrap();
    let ln2 = std::f64::consts::LN_2;
    assert!((rate.by_difference - ln2).abs() < 0.05 * ln2, "{rate:?}");
    for (t, row) in trace.rows.iter().enumerate() {
        assert!((row.h_mm - (t + 1) as f64 * ln2).abs() < 0.05 * ln2 * (t + 1) as f64);
    }
    let biased = StochasticMeasure::bernoulli(vec![0.8, 0.2]).unwrap();
    let trace = column_entropy(&shift, &biased, 0, 8, 50_000, &RandomStream::new(7)).unwrap();
    let h = -(0.8f64 * 0.8f64.ln() + 0.2 * 0.2f64.ln());
    let rate = entropy_rate_estimate(&trace).unwrap();
    assert!((rate.by_difference - h).abs() < 0.05 * h, "{rate:?}");
}

#[test]
fn entropy_of_identity_is_zero() {
    let id = zoo::identity_rule(3).unwrap();
    for mu in [fs_measure(), StochasticMeasure::from_inline("markov:3:0.5,0.3,0.2,0.1,0.6,0.3,0.4,0.4,0.2").unwrap()] {
        for p in 0..2 {
            let trace = column_entropy(&id, &mu, p, 6, 10_000, &RandomStream::new(1)).unwrap();
            let rate = entropy_rate_estimate(&trace).unwrap();
            assert!(rate.by_difference.abs() < 1e-6);
            let h0 = trace.rows[0].h_plugin;
            assert!(trace.rows.iter().all(|r| r.h_plugin == h0));
        }
    }
}

#[test]
fn entropy_is_monotone_in_height() {
    for code in [30u32, 90, 110, 184] {
        let rule = zoo::eca(code).unwrap();
        let trace = column_entropy(&rule, &fair_coin(), 1, 8, 5_000, &RandomStream::new(code as u64)).unwrap();
        assert!(trace.rows.windows(2).all(|w| w[1].h_plugin >= w[0].h_plugin - 1e-12));
        assert!(trace.rows.windows(2).all(|w| w[1].distinct_words >= w[0].distinct_words));
    }
}

#[test]
fn fs_entropy_under_mu_c_is_small() {
    let fs = zoo::gilman_fs();
    let mu = fs_measure();
    let (p, t) = (1usize, 10usize);
    let width = 2 * (p + t) + 1;
    let windows = sample_mu_c_approx(&fs, &mu, 200, width, 20_000, &RandomStream::new(7)).unwrap();
    let trace = column_entropy_from_windows(&fs, &windows, p, t).unwrap();
    let rate = entropy_rate_estimate(&trace).unwrap();
    assert!(rate.by_difference < 0.05, "{rate:?}");
    assert!(rate.by_difference < rate.by_ratio);
}

#[test]
fn windows_must_cover_the_cone() {
    let fs = zoo::gilman_fs();
    let w: Vec<WindowConfig> = vec![WindowConfig::new(-3, vec![0 as Symbol; 7]).unwrap()];
    assert!(column_entropy_from_windows(&fs, &w, 1, 2).is_ok());
    assert!(column_entropy_from_windows(&fs, &w, 1, 3).is_err());
}
