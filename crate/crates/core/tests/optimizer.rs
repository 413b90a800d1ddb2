use ma_isac::comm::{CommScenario, UserZone};
use ma_isac::geometry::{min_pairwise_distance, MovementRegion};
use ma_isac::optimizer::{initialize_for, optimize_with, OptimizerConfig, RateObjective, Termination};
use ma_isac::sensing::{eta_lower_bound, SensingSpec};
use proptest::prelude::*;

const LAMBDA: f64 = 0.05;

fn setup(seed: u64, n: usize, slack: f64) -> (MovementRegion, RateObjective, SensingSpec) {
    let region = MovementRegion::square(5.0 * LAMBDA);
    let sc = CommScenario {
        zones: [[20.0, 41.0, -11.0], [30.0, -25.0, 15.0], [23.0, 37.0, -3.0]]
            .iter()
            .map(|c| UserZone::new(*c, 5.0).unwrap())
            .collect(),
        power_mw: 100.0,
        noise_mw: 1e-8,
        wavelength: LAMBDA,
        realizations: 16,
        seed,
    };
    let mut spec = SensingSpec {
        antennas: n,
        probing_power_mw: 1e4,
        snapshots: n,
        beta_tilde: 4e-15,
        noise_mw: 1e-8,
        wavelength: LAMBDA,
        eta: 1.0,
    };
    spec.eta = slack * eta_lower_bound(&region, &spec);
    (region, RateObjective::new(sc).unwrap(), spec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn ascent_is_monotone_feasible_and_dominates_start(seed in 0u64..1_000, n in 4usize..=6, slack in 1.5f64..20.0) {
        let (region, objective, spec) = setup(seed, n, slack);
        let mut config = OptimizerConfig::for_wavelength(LAMBDA);
        config.max_outer = 3;
        let init = initialize_for(region, &spec, config.min_distance).unwrap();
        let (layout, report) = optimize_with(&init, &objective, &spec, &config).unwrap();
        prop_assert!(report.termination != Termination::InfeasibleStart);
        prop_assert!(report.outer_iterations <= config.max_outer);
        for w in report.objective_trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9);
        }
        prop_assert!(report.final_objective() >= objective.value(&init));
        let eta_bar = spec.eta_bar();
        for it in &report.iterate_trace {
            let st = it.stats();
            prop_assert!(st.term_y() >= eta_bar * (1.0 - 1e-9) && st.term_z() >= eta_bar * (1.0 - 1e-9));
            prop_assert!(min_pairwise_distance(it).unwrap() >= config.min_distance - 1e-9);
            for i in 0..it.n() {
                let (y, z) = it.position(i);
                prop_assert!(region.contains(y, z, 0.0));
            }
        }
        prop_assert_eq!(&layout, report.iterate_trace.last().unwrap());
    }
}

#[test]
fn reports_are_bit_identical() {
    let (region, objective, spec) = setup(3, 5, 3.0);
    let config = OptimizerConfig::for_wavelength(LAMBDA);
    let init = initialize_for(region, &spec, config.min_distance).unwrap();
    let a = optimize_with(&init, &objective, &spec, &config).unwrap();
    let b = optimize_with(&init, &objective, &spec, &config).unwrap();
    assert_eq!(a, b);
}

#[test]
fn unattainable_threshold_is_rejected() {
    let (region, _, spec) = setup(3, 5, 0.9);
    assert!(initialize_for(region, &spec, LAMBDA / 2.0).is_err());
}
