use proptest::prelude::*;
use vorperc_core::geometry::TorusDomain;
use vorperc_core::homology::binomial;
use vorperc_core::simulation::{
    estimate_threshold, rows_from_csv, run_sweep, run_trial, run_trial_resampling, SimulationError,
    SweepConfig, SweepResult,
};

fn small_sweep(parallel: usize) -> SweepConfig {
    SweepConfig {
        d: 2,
        sizes: vec![8.0, 12.0],
        p_grid: (0..=10).map(|k| k as f64 / 10.0).collect(),
        trials: 12,
        i: 1,
        q: 3,
        base_seed: 42,
        intensity: 1.0,
        epsilon: None,
        parallel,
    }
}

#[test]
fn parallel_width_does_not_change_results() {
    let one = run_sweep(&small_sweep(1)).unwrap();
    let two = run_sweep(&small_sweep(2)).unwrap();
    let pool = run_sweep(&small_sweep(0)).unwrap();
    assert_eq!(one.rows, two.rows);
    assert_eq!(one.records, two.records);
    assert_eq!(one.rows, pool.rows);
    assert_eq!(one.to_csv(), two.to_csv());
}

#[test]
fn curves_are_monotone_and_saturate() {
    let r = run_sweep(&small_sweep(0)).unwrap();
    for &side in &r.config.sizes {
        let rows = r.rows_for(side);
        for w in rows.windows(2) {
            assert!(w[0].count_a <= w[1].count_a);
            assert!(w[0].count_a_dual >= w[1].count_a_dual);
        }
        let last = rows.last().unwrap();
        assert_eq!(last.count_a, last.trials);
        assert_eq!(rows[0].count_a, 0);
        for row in rows {
            assert!(row.count_a <= row.trials && row.count_s <= row.trials);
            assert!(row.wilson_lo <= row.p_a() && row.p_a() <= row.wilson_hi);
        }
    }
    assert_eq!(r.duality_failures(), 0);
    for rec in &r.records {
        for w in rec.results.windows(2) {
            assert!(!w[0].a_primal || w[1].a_primal);
            assert!(w[0].a_dual || !w[1].a_dual);
        }
        for res in &rec.results {
            assert_eq!(res.rank_phi + res.rank_psi, binomial(2, 1));
            if res.s_dual && res.rank_psi == binomial(2, 1) {
                assert!(!res.a_primal);
            }
        }
    }
}

#[test]
fn dual_giant_cycles_block_primal_ones_in_three_dimensions() {
    let dom = TorusDomain::new(3, 6.0).unwrap();
    let grid = [0.2, 0.4, 0.5, 0.6, 0.8];
    for i in 1..=2 {
        for seed in 0..3 {
            let rec = run_trial_resampling(dom, &grid, i, 3, seed).unwrap();
            for res in &rec.results {
                assert_eq!(res.rank_phi + res.rank_psi, binomial(3, i));
                if res.s_dual && res.rank_psi == binomial(3, i) {
                    assert!(!res.a_primal, "i={i} seed={seed}");
                }
            }
        }
    }
}

#[test]
fn trial_is_deterministic() {
    let dom = TorusDomain::new(2, 10.0).unwrap();
    let grid = [0.25, 0.5, 0.75];
    let a = run_trial_resampling(dom, &grid, 1, 3, 17).unwrap();
    let b = run_trial_resampling(dom, &grid, 1, 3, 17).unwrap();
    assert_eq!(a, b);
    let c = run_trial_resampling(dom, &grid, 1, 3, 18).unwrap();
    assert_ne!(a.points, 0);
    assert!(a != c);
}

#[test]
fn tiny_domains_are_skipped_then_resampled() {
    let dom = TorusDomain::new(2, 2.0).unwrap();
    let mut skipped = 0;
    for seed in 0..20 {
        match run_trial(dom, &[0.5], 1, 3, seed) {
            Err(SimulationError::Skipped(_)) => skipped += 1,
            Ok(_) => {}
            Err(e) => panic!("{e}"),
        }
    }
    assert!(skipped > 0);
    match run_trial_resampling(dom, &[0.5], 1, 3, 0) {
        Ok(r) => assert!(r.points >= 3),
        Err(SimulationError::TooManySkips { .. }) => {}
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let mut c = small_sweep(0);
    c.p_grid = vec![0.5, 0.4];
    assert_eq!(run_sweep(&c).unwrap_err(), SimulationError::PGrid);
    let mut c = small_sweep(0);
    c.sizes.clear();
    assert_eq!(run_sweep(&c).unwrap_err(), SimulationError::NoSizes);
    let mut c = small_sweep(0);
    c.trials = 0;
    assert_eq!(run_sweep(&c).unwrap_err(), SimulationError::NoTrials);
    let mut c = small_sweep(0);
    c.i = 3;
    assert!(matches!(run_sweep(&c), Err(SimulationError::Degree { .. })));
    let mut c = small_sweep(0);
    c.q = 4;
    assert!(run_sweep(&c).is_err());
    let mut c = small_sweep(0);
    c.intensity = -1.0;
    assert!(run_sweep(&c).is_err());
}

#[test]
fn csv_and_json_round_trip() {
    let mut cfg = small_sweep(0);
    cfg.trials = 4;
    cfg.sizes = vec![40.0];
    cfg.epsilon = Some(0.2);
    let r = run_sweep(&cfg).unwrap();
    assert!(r.records.iter().all(|t| t.instability.is_some()));
    let back = SweepResult::from_json(&r.to_json()).unwrap();
    assert_eq!(back, r);
    assert_eq!(rows_from_csv(&r.to_csv()).unwrap(), r.rows);
    assert!(rows_from_csv("d,L\n1,2\n").is_err());
    assert!(SweepResult::from_json("{").is_err());
}

#[test]
fn threshold_sits_near_one_half_on_a_small_torus() {
    let cfg = SweepConfig {
        d: 2,
        sizes: vec![16.0],
        p_grid: (0..=20).map(|k| 0.3 + k as f64 * 0.02).collect(),
        trials: 60,
        i: 1,
        q: 3,
        base_seed: 3,
        intensity: 1.0,
        epsilon: None,
        parallel: 0,
    };
    let r = run_sweep(&cfg).unwrap();
    let t = estimate_threshold(&r, 16.0).unwrap();
    assert!((0.38..=0.62).contains(&t), "threshold {t}");
    assert!(r.sizes[0].window.is_some());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn coupled_events_are_monotone(seed in 0u64..10_000, i in 0usize..=2) {
        let dom = TorusDomain::new(2, 8.0).unwrap();
        let grid: Vec<f64> = (0..=8).map(|k| k as f64 / 8.0).collect();
        let rec = run_trial_resampling(dom, &grid, i, 5, seed).unwrap();
        for w in rec.results.windows(2) {
            prop_assert!(w[0].rank_phi <= w[1].rank_phi);
            prop_assert!(w[0].rank_psi >= w[1].rank_psi);
        }
        for res in &rec.results {
            prop_assert_eq!(res.rank_phi + res.rank_psi, binomial(2, i));
        }
    }
}
