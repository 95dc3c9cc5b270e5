use cellmeasure::ca::{evolve_column, step_lightcone, step_torus};
use cellmeasure::periodic::{canonical_form, find_periodic_points, torus_cycle, PeriodicSearch};
use cellmeasure::{zoo, LocalRule, Symbol, TorusConfig, WindowConfig};
use proptest::prelude::*;

/// Direct evaluation of `f` at every output cell, no shared code with the
/// library's stepping.
fn naive_step(rule: &LocalRule, offset: i64, cells: &[Symbol]) -> (i64, Vec<Symbol>) {
    let r = rule.radius();
    let k = rule.alphabet_size();
    let out = (r..cells.len() - r)
        .map(|i| {
            let mut idx = 0usize;
            for c in &cells[i - r..=i + r] {
                idx = idx * k + *c as usize;
            }
            rule.table()[idx]
        })
        .collect();
    (offset + r as i64, out)
}

fn naive_torus(rule: &LocalRule, cells: &[Symbol]) -> Vec<Symbol> {
    let l = cells.len() as i64;
    let r = rule.radius() as i64;
    let k = rule.alphabet_size();
    (0..l)
        .map(|i| {
            let idx = (-r..=r).fold(0usize, |acc, d| acc * k + cells[(i + d).rem_euclid(l) as usize] as usize);
            rule.table()[idx]
        })
        .collect()
}

fn arb_rule() -> impl Strategy<Value = LocalRule> {
    (2usize..=3, 0usize..=2)
        .prop_filter("table size", |(k, r)| k.pow(2 * *r as u32 + 1) <= 243)
        .prop_flat_map(|(k, r)| {
            let len = k.pow(2 * r as u32 + 1);
            prop::collection::vec(0..k as Symbol, len)
                .prop_map(move |table| LocalRule::from_table(k, r, table).unwrap())
        })
}

fn arb_cells(k: usize, min: usize, max: usize) -> impl Strategy<Value = Vec<Symbol>> {
    prop::collection::vec(0..k as Symbol, min..=max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn lightcone_step_matches_direct_evaluation(
        (rule, offset, cells) in arb_rule().prop_flat_map(|rule| {
            let k = rule.alphabet_size();
            let min = 2 * rule.radius() + 1;
            (Just(rule), -50i64..50, arb_cells(k, min, 40))
        })
    ) {
        let w = WindowConfig::new(offset, cells.clone()).unwrap();
        let out = step_lightcone(&rule, &w).unwrap();
        let (o, c) = naive_step(&rule, offset, &cells);
        prop_assert_eq!(out.offset(), o);
        prop_assert_eq!(out.cells(), &c[..]);
    }

    #[test]
    fn stepping_commutes_with_shift(
        (rule, offset, cells, s) in arb_rule().prop_flat_map(|rule| {
            let k = rule.alphabet_size();
            let min = 2 * rule.radius() + 1;
            (Just(rule), -50i64..50, arb_cells(k, min, 40), -100i64..100)
        })
    ) {
        let w = WindowConfig::new(offset, cells).unwrap();
        let a = step_lightcone(&rule, &w.shifted(s)).unwrap();
        let b = step_lightcone(&rule, &w).unwrap().shifted(s);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn torus_agrees_with_unrolled_lightcone(
        (rule, cells, t) in arb_rule().prop_flat_map(|rule| {
            let k = rule.alphabet_size();
            let r = rule.radius();
            (Just(rule), arb_cells(k, 1, 30)).prop_flat_map(move |(rule, cells)| {
                let l = cells.len();
                let t_max = if r == 0 { 10 } else { (l - 1) / (2 * r) };
                (Just(rule), Just(cells), 0..=t_max)
            })
        })
    ) {
        let r = rule.radius();
        prop_assume!(2 * r * t < cells.len() || r == 0);
        let l = cells.len() as i64;
        let reach = (r * t) as i64;
        let torus = TorusConfig::new(cells.clone()).unwrap();
        let mut w = torus.unroll(-reach, l - 1 + reach);
        let mut tor = torus.clone();
        let mut naive = cells.clone();
        for _ in 0..t {
            w = step_lightcone(&rule, &w).unwrap();
            tor = step_torus(&rule, &tor);
            naive = naive_torus(&rule, &naive);
        }
        prop_assert_eq!(w.offset(), 0);
        prop_assert_eq!(w.cells(), tor.cells());
        prop_assert_eq!(tor.cells(), &naive[..]);
    }

    #[test]
    fn column_matches_repeated_steps(
        (rule, m, t, cells) in arb_rule().prop_flat_map(|rule| {
            let k = rule.alphabet_size();
            let r = rule.radius();
            (Just(rule), 0usize..4, 0usize..6).prop_flat_map(move |(rule, m, t)| {
                let len = 2 * (m + r * t) + 1;
                (Just(rule), Just(m), Just(t), arb_cells(k, len, len + 6))
            })
        })
    ) {
        let reach = (m + rule.radius() * t) as i64;
        let w = WindowConfig::new(-reach, cells).unwrap();
        let col = evolve_column(&rule, &w, m, t).unwrap();
        prop_assert_eq!(col.len(), t + 1);
        let (mut offset, mut cur) = (w.offset(), w.cells().to_vec());
        for (i, row) in col.iter().enumerate() {
            let lo = (-(m as i64) - offset) as usize;
            prop_assert_eq!(&row[..], &cur[lo..lo + 2 * m + 1], "row {}", i);
            if i < t {
                let (o, c) = naive_step(&rule, offset, &cur);
                offset = o;
                cur = c;
            }
        }
    }

    #[test]
    fn torus_cycle_is_exact_and_minimal(
        (rule, cells) in arb_rule().prop_flat_map(|rule| {
            let k = rule.alphabet_size();
            let max = if k == 2 { 10 } else { 6 };
            (Just(rule), arb_cells(k, 1, max))
        })
    ) {
        let start = TorusConfig::new(cells.clone()).unwrap();
        let info = torus_cycle(&rule, &start, None).unwrap();
        let states = rule.alphabet_size().pow(cells.len() as u32);
        prop_assert!(info.period >= 1);
        prop_assert!(info.preperiod + info.period <= states);
        let mut orbit = vec![cells];
        for _ in 0..info.preperiod + info.period {
            let next = naive_torus(&rule, orbit.last().unwrap());
            orbit.push(next);
        }
        let (pp, p) = (info.preperiod, info.period);
        prop_assert_eq!(&orbit[pp + p], &orbit[pp]);
        if pp > 0 {
            prop_assert_ne!(&orbit[pp + p - 1], &orbit[pp - 1]);
        }
        for d in (1..p).filter(|d| p % d == 0) {
            prop_assert_ne!(&orbit[pp + d], &orbit[pp]);
        }
        // Every earlier state is distinct from every later one.
        for i in 0..pp + p {
            for j in i + 1..pp + p {
                prop_assert_ne!(&orbit[i], &orbit[j]);
            }
        }
    }
}

#[test]
fn kernel_of_random_rules_matches_full_table() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let strat = arb_rule().prop_flat_map(|rule| {
        let k = rule.alphabet_size();
        (Just(rule), arb_cells(k, 60, 80), 1usize..8)
    });
    runner
        .run(&strat, |(rule, cells, t)| {
            let mid = 30i64;
            let w = WindowConfig::new(-mid, cells).unwrap();
            let reach = (rule.radius() * t) as i64;
            prop_assume!(w.covers(-reach - 2, reach + 2));
            let col = evolve_column(&rule, &w, 2, t).unwrap();
            let mut cur = w.clone();
            for row in &col {
                prop_assert_eq!(&row[..], cur.slice(-2, 2));
                if cur.len() > 2 * rule.radius() {
                    cur = step_lightcone(&rule, &cur).unwrap();
                }
            }
            Ok(())
        })
        .unwrap();
}

#[test]
fn periodic_points_are_rotation_closed() {
    for code in [30u32, 90, 110, 184, 51, 170] {
        let rule = zoo::eca(code).unwrap();
        let report = find_periodic_points(&rule, 4, &PeriodicSearch::default()).unwrap();
        for p in &report.points {
            assert!(p.verify(&rule));
            let l = p.word.len();
            for s in 0..l {
                let rotated: Vec<Symbol> = (0..l).map(|i| p.word[(i + s) % l]).collect();
                let found = report.find(&rotated).expect("rotation present");
                assert_eq!(found.period, p.period, "rule {code}, word {:?}", p.word);
                let mut state = TorusConfig::new(rotated.clone()).unwrap();
                for _ in 0..p.period {
                    state = step_torus(&rule, &state);
                }
                assert_eq!(state.cells(), &rotated[..]);
            }
        }
    }
}

#[test]
fn exhaustive_search_finds_every_periodic_word() {
    // Oracle: iterate every word directly and keep those that return.
    for code in [30u32, 90, 110] {
        let rule = zoo::eca(code).unwrap();
        let report = find_periodic_points(&rule, 5, &PeriodicSearch::default()).unwrap();
        for l in 1..=5usize {
            for c in 0..(1usize << l) {
                let w: Vec<Symbol> = (0..l).map(|i| (c >> (l - 1 - i) & 1) as Symbol).collect();
                let mut state = w.clone();
                let mut period = None;
                for step in 1..=(1usize << l) {
                    state = naive_torus(&rule, &state);
                    if state == w {
                        period = Some(step);
                        break;
                    }
                }
                match period {
                    Some(p) => assert_eq!(report.find(&w).map(|pt| pt.period), Some(p)),
                    None => assert!(report.find(&w).is_none(), "{w:?}"),
                }
            }
        }
        let distinct: std::collections::HashSet<_> =
            report.points.iter().map(|p| canonical_form(&p.word)).collect();
        assert_eq!(distinct.len(), report.points.len());
    }
}

#[test]
fn shift_periodic_points_cover_bernoulli_support() {
    use cellmeasure::cesaro::{EmpiricalCylinderMeasure, EmpiricalMetadata};
    use cellmeasure::periodic::density_check;
    let shift = zoo::shift_rule(2).unwrap();
    let report = find_periodic_points(&shift, 4, &PeriodicSearch::default()).unwrap();
    let words = (0..8usize).map(|c| ((0..3).map(|i| (c >> i & 1) as Symbol).collect(), 1u64));
    let meta = EmpiricalMetadata {
        rule: "shift:2".into(),
        measure: "bernoulli:2:0.5,0.5".into(),
        n: 1,
        samples: 8,
        seed: 0,
    };
    let support = EmpiricalCylinderMeasure::from_counts(3, words, meta).unwrap();
    let d = density_check(&shift, &report.points, &support, 0.0);
    assert_eq!(d.coverage, 1.0);
    assert_eq!(d.total, 8);

    let id = zoo::identity_rule(3).unwrap();
    let report = find_periodic_points(&id, 2, &PeriodicSearch::default()).unwrap();
    let words = (0..27usize).map(|c| (vec![(c % 3) as Symbol, (c / 3 % 3) as Symbol, (c / 9) as Symbol], 1u64));
    let meta = EmpiricalMetadata {
        rule: "identity:3".into(),
        measure: "x".into(),
        n: 1,
        samples: 27,
        seed: 0,
    };
    let support = EmpiricalCylinderMeasure::from_counts(3, words, meta).unwrap();
    // Length-2 spatial periods cannot realize e.g. "012"; a longer search can.
    assert!(density_check(&id, &report.points, &support, 0.0).coverage < 1.0);
    let report = find_periodic_points(&id, 3, &PeriodicSearch::default()).unwrap();
    assert_eq!(density_check(&id, &report.points, &support, 0.0).coverage, 1.0);
}
