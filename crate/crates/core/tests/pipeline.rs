use cvqkd_core::intercept::{eve_success, intrinsic_error_rate, lossless_acceptance, optimize_alpha};
use cvqkd_core::keyrate::{secret_key_rate, AttackScenario, KeyRateGrid};
use cvqkd_core::protocol::run_protocol;
use cvqkd_core::{KeyRateConfig, ProtocolConfig, StateFamily};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = StateFamily> {
    prop_oneof![Just(StateFamily::Pascs), Just(StateFamily::Coherent)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn key_rate_invariants(f in family(), alpha in 0.1f64..2.5, beta_c in 0.0f64..2.0, t2 in 0.05f64..1.0) {
        let s = AttackScenario::with_transmission(f, alpha, t2).unwrap();
        let grid = KeyRateGrid::new(&s, &KeyRateConfig::default()).unwrap();
        prop_assert!((grid.total_mass() - 1.0).abs() < 1e-8);
        let r = grid.report(beta_c).unwrap();
        prop_assert!(r.check_invariants(1e-9).is_ok(), "{:?}", r);
        prop_assert!((r.beta_c_grid - beta_c).abs() <= 0.025 + 1e-12);
        prop_assert!(r.s_ab <= r.r_acc * r.i_ab + 1e-12);
    }

    #[test]
    fn grid_acceptance_matches_lossless_tails(f in family(), alpha in 0.2f64..2.0, steps in 0usize..30) {
        // On panel boundaries the two quadratures integrate the same function.
        let beta_c = steps as f64 * 0.05;
        let s = AttackScenario::with_transmission(f, alpha, 1.0).unwrap();
        let a = KeyRateGrid::new(&s, &KeyRateConfig::default()).unwrap().acceptance(beta_c).unwrap();
        let b = lossless_acceptance(f, alpha, beta_c).unwrap();
        prop_assert!((a.p0 - b.p0).abs() < 1e-10 && (a.p1 - b.p1).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn eve_wedges_partition(f in family(), alpha in 0.05f64..3.0) {
        let e = eve_success(f, alpha).unwrap();
        prop_assert!(e.audit().is_ok(), "{:?}", e.audit());
        prop_assert!(e.p_corr >= 0.25 - 1e-9 && e.p_corr <= 1.0 + 1e-9);
    }

    #[test]
    fn optimized_amplitude_hits_target(f in family(), beta_c in 0.0f64..1.5, target in 1e-4f64..0.05) {
        let a = optimize_alpha(f, beta_c, target).unwrap();
        let d = intrinsic_error_rate(f, a, beta_c).unwrap();
        let lo = intrinsic_error_rate(f, a + 1e-5, beta_c).unwrap();
        let hi = intrinsic_error_rate(f, (a - 1e-5).max(1e-6), beta_c).unwrap();
        prop_assert!(lo <= target + 1e-12 || hi >= target - 1e-12);
        prop_assert!((d - target).abs() <= (hi - lo).abs() + 1e-9);
    }
}

#[test]
fn pascs_beats_coherent_at_their_optima() {
    let cfg = KeyRateConfig::default();
    let p = secret_key_rate(&AttackScenario::with_transmission(StateFamily::Pascs, 0.5, 0.75).unwrap(), 0.35, &cfg)
        .unwrap();
    let c = secret_key_rate(&AttackScenario::with_transmission(StateFamily::Coherent, 0.85, 0.75).unwrap(), 0.4, &cfg)
        .unwrap();
    assert!((p.s_ab - 0.1661).abs() < 1e-4, "{}", p.s_ab);
    assert!((c.s_ab - 0.1396).abs() < 1e-4, "{}", c.s_ab);
}

#[test]
fn simulated_lossy_error_rate_tracks_the_marginal() {
    let cfg = ProtocolConfig {
        family: StateFamily::Coherent,
        alpha: 1.2,
        beta_c: 0.3,
        n_pulses: 100_000,
        rng_seed: 99,
        t_squared: 0.5,
    };
    let r = run_protocol(&cfg).unwrap();
    // Coherent light through loss stays coherent with amplitude T·alpha.
    let t_alpha = 1.2 * 0.5f64.sqrt();
    let d = intrinsic_error_rate(StateFamily::Coherent, t_alpha, 0.3).unwrap();
    let se = (d * (1.0 - d) / r.n_accepted as f64).sqrt();
    assert!((r.delta - d).abs() < 3.0 * se, "{} vs {d}", r.delta);
}
