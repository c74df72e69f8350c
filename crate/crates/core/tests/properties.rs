use moen_core::numerics::{solve_dense, GridTrajectory, TimeGrid};
use moen_core::systems::{duffing_model, harmonic_model};
use moen_core::training::{bb_step, sample_ensemble};
use moen_core::{BbRule, EnsembleSpec, Mat, NetworkShape, Theta};
use proptest::prelude::*;

fn shape() -> NetworkShape {
    NetworkShape::square(2, 2, false).unwrap()
}

fn theta_strategy() -> impl Strategy<Value = Theta> {
    prop::collection::vec(-1.0..1.0f64, 14).prop_map(|flat| Theta::from_flat(&shape(), &flat).unwrap())
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn flat_round_trip(flat in prop::collection::vec(-10.0..10.0f64, 14)) {
        let theta = Theta::from_flat(&shape(), &flat).unwrap();
        prop_assert_eq!(theta.to_flat(), flat);
    }

    #[test]
    fn input_jacobian_matches_differences(theta in theta_strategy(), x in prop::array::uniform2(-2.0..2.0f64)) {
        let jac = theta.input_jacobian(0.0, &x).unwrap();
        let eps = 1e-6;
        for j in 0..2 {
            let mut hi = x;
            let mut lo = x;
            hi[j] += eps;
            lo[j] -= eps;
            let zh = theta.forward(&hi).unwrap();
            let zl = theta.forward(&lo).unwrap();
            for i in 0..2 {
                let fd = (zh[i] - zl[i]) / (2.0 * eps);
                prop_assert!(rel_close(jac[(i, j)], fd, 1e-5), "{} vs {}", jac[(i, j)], fd);
            }
        }
    }

    #[test]
    fn param_vjp_matches_differences(
        theta in theta_strategy(),
        x in prop::array::uniform2(-2.0..2.0f64),
        u in prop::array::uniform2(-1.0..1.0f64),
    ) {
        let vjp = theta.param_vjp(0.0, &x, &u).unwrap();
        let flat = theta.to_flat();
        let eps = 1e-6;
        for k in 0..flat.len() {
            let eval = |s: f64| {
                let mut p = flat.clone();
                p[k] += s;
                let out = Theta::from_flat(&shape(), &p).unwrap().forward(&x).unwrap();
                out[0] * u[0] + out[1] * u[1]
            };
            let fd = (eval(eps) - eval(-eps)) / (2.0 * eps);
            prop_assert!(rel_close(vjp[k], fd, 1e-5), "k={} {} vs {}", k, vjp[k], fd);
        }
    }

    #[test]
    fn solve_recovers_solution(
        entries in prop::collection::vec(-1.0..1.0f64, 9),
        x in prop::collection::vec(-5.0..5.0f64, 3),
    ) {
        let mut m = Mat::new(3, 3, entries).unwrap();
        for i in 0..3 {
            m[(i, i)] += 4.0;
        }
        let b = m.mul_vec(&x);
        let solved = solve_dense(&m, &b, 0.0).unwrap();
        for (a, e) in solved.iter().zip(&x) {
            prop_assert!((a - e).abs() <= 1e-10);
        }
    }

    #[test]
    fn model_jacobians_match_differences(x in prop::array::uniform2(-2.0..2.0f64)) {
        for model in [harmonic_model(), duffing_model()] {
            let jac = model.jacobian(&x);
            let eps = 1e-5;
            for j in 0..2 {
                let mut hi = x;
                let mut lo = x;
                hi[j] += eps;
                lo[j] -= eps;
                let (fh, fl) = (model.f(&hi), model.f(&lo));
                for i in 0..2 {
                    let fd = (fh[i] - fl[i]) / (2.0 * eps);
                    prop_assert!(rel_close(jac[(i, j)], fd, 1e-5));
                }
            }
        }
    }

    #[test]
    fn interpolation_is_exact_at_nodes(values in prop::collection::vec(-3.0..3.0f64, 11)) {
        let grid = TimeGrid::new(0.0, 2.5, 10).unwrap();
        let traj = GridTrajectory::new(grid, 1, values.clone()).unwrap();
        for (k, v) in values.iter().enumerate() {
            prop_assert_eq!(traj.eval_at(grid.node(k)).unwrap()[0], *v);
        }
    }

    #[test]
    fn bb_step_is_positive_and_capped(
        s in prop::collection::vec(-1.0..1.0f64, 5),
        y in prop::collection::vec(-1.0..1.0f64, 5),
        gamma_max in 0.1..100.0f64,
        iteration in 0usize..10,
    ) {
        for rule in [BbRule::Long, BbRule::Short, BbRule::Alternate] {
            let gamma = bb_step(&s, &y, gamma_max, rule, iteration);
            prop_assert!(gamma > 0.0 && gamma <= gamma_max);
        }
    }

    #[test]
    fn ensembles_are_reproducible(seed in any::<u64>(), count in 1usize..30) {
        let spec = EnsembleSpec::Gaussian { center: vec![0.5, -0.5], stddev: 1.0, count, seed };
        let a = sample_ensemble(&spec).unwrap();
        prop_assert_eq!(a.len(), count);
        prop_assert_eq!(a, sample_ensemble(&spec).unwrap());
    }
}
