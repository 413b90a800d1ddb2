use ma_isac::geometry::{build_upa, ArrayLayout, MovementRegion, WaveVector2D};
use ma_isac::sensing::{
    crb_closed_form, crb_from_fim, fim_numeric, mse_simulation, GridSpec, SensingSpec, SensingTruth,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LAMBDA: f64 = 0.05;

fn spec(n: usize, ps_mw: f64) -> SensingSpec {
    SensingSpec {
        antennas: n,
        probing_power_mw: ps_mw,
        snapshots: n,
        beta_tilde: 4e-15,
        noise_mw: 1e-8,
        wavelength: LAMBDA,
        eta: 1.0,
    }
}

fn random_layout(rng: &mut ChaCha8Rng, n: usize) -> ArrayLayout {
    let side = 5.0 * LAMBDA;
    let y = (0..n).map(|_| (rng.random::<f64>() - 0.5) * side).collect();
    let z = (0..n).map(|_| (rng.random::<f64>() - 0.5) * side).collect();
    ArrayLayout::new(y, z, MovementRegion::square(side), LAMBDA).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn closed_form_matches_fim(seed in 0u64..1_000_000, pick in 0usize..3, u in -0.7f64..0.7, v in -0.7f64..0.7) {
        let n = [4, 8, 16][pick];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = random_layout(&mut rng, n);
        let sp = spec(n, 1e4);
        let beta = Complex64::from_polar(2e-7, rng.random::<f64>() * 6.0);
        let truth = SensingTruth { chi: WaveVector2D::new(u, v), beta };
        let closed = crb_closed_form(&layout, &sp, beta.norm_sqr()).unwrap();
        let fim = crb_from_fim(&fim_numeric(&layout, &truth, &sp).unwrap()).unwrap();
        prop_assert!((fim.u - closed.u).abs() <= 1e-8 * closed.u);
        prop_assert!((fim.v - closed.v).abs() <= 1e-8 * closed.v);
    }
}

#[test]
fn mse_does_not_increase_with_power() {
    let region = MovementRegion::square(5.0 * LAMBDA);
    let layout = build_upa(9, LAMBDA / 2.0, region, LAMBDA).unwrap();
    let truth = SensingTruth {
        chi: WaveVector2D::new(0.35, 0.71),
        beta: Complex64::new(4e-15f64.sqrt(), 0.0),
    };
    let grid = GridSpec {
        coarse_points: 101,
        ..GridSpec::default()
    };
    let mut last = (f64::INFINITY, f64::INFINITY);
    for dbm in [60.0, 62.5, 65.0, 67.5, 70.0] {
        let sp = SensingSpec {
            snapshots: 9,
            ..spec(9, 10f64.powf(dbm / 10.0))
        };
        let (mu, mv) = mse_simulation(&layout, &truth, &sp, 60, &grid, 21).unwrap();
        assert!(mu <= last.0 && mv <= last.1, "{dbm} dBm: {mu:e} {mv:e} after {last:?}");
        last = (mu, mv);
    }
}
