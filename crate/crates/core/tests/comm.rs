use ma_isac::comm::{
    channel_matrix, expected_min_rate, rate_upper_bound, rate_upper_bound_on, sample_user_locations, sinr_per_user,
    zf_min_sinr, zf_precoder, CommScenario, UserZone,
};
use ma_isac::geometry::{build_upa, MovementRegion};
use ma_isac::units::dbm_to_mw;
use proptest::prelude::*;

const LAMBDA: f64 = 0.05;

fn scenario(seed: u64, power_dbm: f64) -> CommScenario {
    let centers = [[20.0, 41.0, -11.0], [30.0, -25.0, 15.0], [23.0, 37.0, -3.0]];
    CommScenario {
        zones: centers.iter().map(|c| UserZone::new(*c, 5.0).unwrap()).collect(),
        power_mw: dbm_to_mw(power_dbm),
        noise_mw: dbm_to_mw(-80.0),
        wavelength: LAMBDA,
        realizations: 40,
        seed,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zf_contract_on_sampled_users(seed in 0u64..1_000_000, q in 0usize..40, n in 4usize..=16) {
        let sc = scenario(seed, 20.0);
        let layout = build_upa(n, LAMBDA / 2.0, MovementRegion::square(5.0 * LAMBDA), LAMBDA).unwrap();
        let users = sample_user_locations(&sc, q);
        let h = channel_matrix(&layout, &users).unwrap();
        let w = zf_precoder(&h, sc.power_mw).unwrap();
        prop_assert!((w.norm_squared() - sc.power_mw).abs() <= 1e-12 * sc.power_mw);
        let g = h.adjoint() * &w;
        let frob = g.norm();
        for r in 0..g.nrows() {
            for c in 0..g.ncols() {
                if r != c {
                    prop_assert!(g[(r, c)].norm() <= 1e-9 * frob);
                }
            }
        }
        let sinr = sinr_per_user(&h, &w, sc.noise_mw);
        let closed = zf_min_sinr(&h, sc.power_mw, sc.noise_mw).unwrap();
        for s in sinr {
            prop_assert!((s - closed).abs() <= 1e-9 * closed);
        }
    }

    #[test]
    fn rate_increases_in_power_and_stays_below_bound(seed in 0u64..1_000_000, p in 0.0f64..30.0) {
        let layout = build_upa(9, LAMBDA, MovementRegion::square(5.0 * LAMBDA), LAMBDA).unwrap();
        let lo = scenario(seed, p);
        let hi = scenario(seed, p + 1.0);
        let r_lo = expected_min_rate(&layout, &lo);
        let r_hi = expected_min_rate(&layout, &hi);
        prop_assert!(r_hi > r_lo);
        prop_assert!(r_lo <= rate_upper_bound(&lo, 9) + 1e-12);
        prop_assert!(r_hi <= rate_upper_bound_on(&hi, 9, &hi.sample_batch()) + 1e-12);
    }
}

#[test]
fn batch_is_shared_across_layouts_and_reproducible() {
    let sc = scenario(5, 20.0);
    assert_eq!(sc.sample_batch(), sc.sample_batch());
    let other = CommScenario { seed: 6, ..sc.clone() };
    assert_ne!(sc.sample_batch(), other.sample_batch());
    // Adding a zone leaves the earlier zones' draws untouched.
    let fewer = sc.with_users(2);
    for q in 0..sc.realizations {
        assert_eq!(sample_user_locations(&fewer, q)[..], sample_user_locations(&sc, q)[..2]);
    }
}
