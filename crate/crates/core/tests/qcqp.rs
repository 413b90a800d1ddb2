mod common;

use ma_isac::qcqp::{feasibility_check, solve, SolveStatus};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn random_programs_match_ellipsoid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..60 {
        let n = 1 + case % 6;
        let prog = common::random_program(&mut rng, n);
        let sol = solve(&prog, &DVector::zeros(n));
        assert_eq!(sol.status, SolveStatus::Optimal, "case {case}");
        let oracle = common::ellipsoid_max(&prog);
        assert!((sol.objective - oracle).abs() < 1e-6, "case {case}: {} vs {oracle}", sol.objective);
        let grid = common::grid_max(&prog, if n <= 3 { 41 } else { 7 });
        assert!(sol.objective >= grid - 1e-9, "case {case}: grid point beats solver");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimal_points_are_feasible_and_ascend(seed in 0u64..1_000_000, n in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prog = common::random_program(&mut rng, n);
        let start = DVector::zeros(n);
        let sol = solve(&prog, &start);
        prop_assert_eq!(sol.status, SolveStatus::Optimal);
        prop_assert!(feasibility_check(&prog, &sol.d, 1e-8).feasible);
        prop_assert!(sol.objective >= prog.objective(&start));
        for w in sol.stage_objectives.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9 * (1.0 + w[0].abs()));
        }
    }
}
