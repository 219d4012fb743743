//! Invariants of the public API checked on random inputs.

use proptest::prelude::*;

use tbq::analysis::{count_coincidences, fit_fringe};
use tbq::device::{receiver_effects, wrap_phase, ReceiverConfig, SwitchMode};
use tbq::qkd::{Basis, KeyRateReport, SecurityParams, SiftedBlock};
use tbq::quantum::{
    concurrence, hermitian_eigen, max_abs_diff, partial_trace, CMatrix, DensityMatrix, Effect,
    Subsystem, C64,
};
use tbq::sim::{run_simulation, Channel, DetectorModel, ExperimentPlan, PrbsGenerator};
use tbq::tomography::{density_from_params, PARAMETER_COUNT};

fn mode() -> impl Strategy<Value = SwitchMode> {
    prop_oneof![
        Just(SwitchMode::Superpose),
        Just(SwitchMode::Overlap),
        Just(SwitchMode::Reverse)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn receiver_effects_resolve_identity(
        m in mode(),
        theta in -20.0f64..20.0,
        drive in -6.0f64..6.0,
        v_pi in 0.5f64..6.0,
        vis in 0.0f64..=1.0,
    ) {
        let mut cfg = ReceiverConfig::ideal(m, theta);
        cfg.drive_voltage = drive;
        cfg.v_pi = v_pi;
        cfg.device_visibility = vis;
        let effects = receiver_effects(&cfg).unwrap();
        let sum = Effect::sum(effects.iter().map(|e| &e.effect), 2);
        prop_assert!(max_abs_diff(&sum, &CMatrix::identity(2, 2)) < 1e-10);
        for e in &effects {
            let (vals, _) = hermitian_eigen(e.effect.matrix());
            prop_assert!(vals[0] >= -1e-10 && vals[1] <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn wrapped_phase_in_range(theta in -1e4f64..1e4) {
        let w = wrap_phase(theta);
        prop_assert!(w > -std::f64::consts::PI - 1e-12 && w <= std::f64::consts::PI + 1e-12);
        let turns = (theta - w) / (2.0 * std::f64::consts::PI);
        prop_assert!((turns - turns.round()).abs() < 1e-9);
    }

    #[test]
    fn parametrized_states_are_physical(x in prop::collection::vec(-2.0f64..2.0, PARAMETER_COUNT)) {
        prop_assume!(x[..4].iter().any(|v| v.abs() > 1e-3));
        let rho = density_from_params(&x);
        let m = rho.matrix();
        prop_assert!(max_abs_diff(m, &m.adjoint()) < 1e-12);
        prop_assert!((m.trace().re - 1.0).abs() < 1e-12);
        let (vals, _) = hermitian_eigen(m);
        prop_assert!(vals[0] >= -1e-10);
        let p = rho.purity();
        prop_assert!((0.25 - 1e-9..=1.0 + 1e-9).contains(&p));
        let c = concurrence(&rho).unwrap();
        prop_assert!((0.0..=1.0 + 1e-9).contains(&c));
        for side in [Subsystem::A, Subsystem::B] {
            let r = partial_trace(&rho, side).unwrap();
            prop_assert!((r.matrix().trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_yields_density_matrix(v in prop::collection::vec(-1.0f64..1.0, 32)) {
        let a = CMatrix::from_fn(4, 4, |i, j| C64::new(v[4 * i + j], v[16 + 4 * j + i]));
        let h = (&a + a.adjoint()) * C64::new(0.5, 0.0);
        let rho = DensityMatrix::project_physical(&h);
        prop_assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
        prop_assert!(hermitian_eigen(rho.matrix()).0[0] >= -1e-10);
    }

    #[test]
    fn prbs_period_is_maximal(order in prop_oneof![Just(7u32), Just(9u32)], seed in 1u32..512) {
        prop_assume!(seed & ((1 << order) - 1) != 0);
        let mut g = PrbsGenerator::new(order, seed).unwrap();
        let start = g.state();
        let mut n = 0usize;
        loop {
            g.next_bit().unwrap();
            n += 1;
            if g.state() == start { break; }
        }
        prop_assert_eq!(n, (1usize << order) - 1);
    }

    #[test]
    fn coincidences_bounded_by_singles(
        a in prop::collection::vec(0i64..100_000, 0..200),
        b in prop::collection::vec(0i64..100_000, 0..200),
        w in 0i64..2_000,
    ) {
        let (mut a, mut b) = (a, b);
        a.sort_unstable();
        b.sort_unstable();
        let h = count_coincidences(&a, &b, w, 0).unwrap();
        prop_assert!(h.total <= a.len().min(b.len()) as u64);
        prop_assert_eq!(h.counts.iter().sum::<u64>(), h.total);
        prop_assert_eq!(count_coincidences(&b, &a, w, 0).unwrap().total, h.total);
    }

    #[test]
    fn fringe_fit_visibility_is_clamped(
        amp in 0.0f64..200.0,
        offset in 50.0f64..300.0,
        phase in -3.0f64..3.0,
        noise in prop::collection::vec(-20.0f64..20.0, 16),
    ) {
        let pts: Vec<(f64, f64)> = (0..16)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / 16.0;
                (t, (offset + amp * (t + phase).cos() + noise[k]).max(0.0).round())
            })
            .collect();
        let fit = fit_fringe(&pts).unwrap();
        prop_assert!((0.0..=1.0).contains(&fit.visibility));
        prop_assert!(fit.sigma_visibility > 0.0);
    }

    #[test]
    fn key_rates_are_ordered(
        n_key in 1_000u64..10_000_000,
        ratio in 0.01f64..1.0,
        q_key in 0.0f64..0.08,
        q_test in 0.0f64..0.1,
    ) {
        let n_test = ((n_key as f64 * ratio) as u64).max(1);
        let block = SiftedBlock::from_rates(n_key, n_test, q_key, q_test, Basis::Z, Basis::X, 1.0);
        let r = KeyRateReport::compute(&block, &SecurityParams::default()).unwrap();
        prop_assert!(r.skr_chernoff >= r.skr_serfling);
        prop_assert!(r.skr_asymptotic + 1e-9 >= r.skr_chernoff);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn streams_are_sorted_and_respect_dead_time(seed in 0u64..1_000, dead_ns in 0.0f64..50.0) {
        let mut plan = ExperimentPlan::ideal(0.3, 1.1, 0.05, 2e-5, seed);
        plan.detector = DetectorModel {
            dead_time_ns: dead_ns,
            dark_counts_per_s: 1e5,
            ..DetectorModel::default()
        };
        let run = run_simulation(&plan).unwrap();
        let min_gap = (dead_ns * 1e3).floor() as i64;
        for c in Channel::ALL {
            let s = run.streams.get(c);
            prop_assert!(s.windows(2).all(|w| w[1] - w[0] >= min_gap.max(0)));
        }
    }
}
